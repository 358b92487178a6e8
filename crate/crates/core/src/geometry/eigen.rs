//! Analytic-quality eigen decomposition of symmetric 3x3 matrices.
//!
//! Cyclic Jacobi rotations with a fixed sweep order, ascending eigenvalue
//! sort, and a deterministic eigenvector sign convention, so normal
//! estimation and plane fits reproduce exactly across platforms.

use nalgebra::{Matrix3, Vector3};

/// Eigenvalues (ascending) and matching unit eigenvectors of a symmetric
/// 3x3 matrix. Ties sort by original diagonal index; each eigenvector's
/// largest-magnitude component is made positive.
pub fn sym_eigen3(m: &Matrix3<f64>) -> ([f64; 3], [Vector3<f64>; 3]) {
    let mut a = *m;
    let mut v = Matrix3::<f64>::identity();

    let scale = m.iter().fold(0.0f64, |acc, x| acc.max(x.abs())).max(1e-300);
    let tol = 1e-15 * scale;

    for _sweep in 0..64 {
        let off = a[(0, 1)].abs() + a[(0, 2)].abs() + a[(1, 2)].abs();
        if off <= tol {
            break;
        }
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[(p, q)];
            if apq.abs() <= tol * 1e-3 {
                continue;
            }
            // Classic Jacobi rotation annihilating a[(p, q)].
            let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
            let t = if theta >= 0.0 {
                1.0 / (theta + (1.0 + theta * theta).sqrt())
            } else {
                1.0 / (theta - (1.0 + theta * theta).sqrt())
            };
            let c = 1.0 / (1.0 + t * t).sqrt();
            let s = t * c;

            let app = a[(p, p)];
            let aqq = a[(q, q)];
            a[(p, p)] = app - t * apq;
            a[(q, q)] = aqq + t * apq;
            a[(p, q)] = 0.0;
            a[(q, p)] = 0.0;
            for r in 0..3 {
                if r != p && r != q {
                    let arp = a[(r, p)];
                    let arq = a[(r, q)];
                    a[(r, p)] = c * arp - s * arq;
                    a[(p, r)] = a[(r, p)];
                    a[(r, q)] = s * arp + c * arq;
                    a[(q, r)] = a[(r, q)];
                }
            }
            for r in 0..3 {
                let vrp = v[(r, p)];
                let vrq = v[(r, q)];
                v[(r, p)] = c * vrp - s * vrq;
                v[(r, q)] = s * vrp + c * vrq;
            }
        }
    }

    let mut order = [0usize, 1, 2];
    // Stable insertion sort on (eigenvalue, index).
    for i in 1..3 {
        let mut j = i;
        while j > 0
            && (a[(order[j], order[j])], order[j]) < (a[(order[j - 1], order[j - 1])], order[j - 1])
        {
            order.swap(j - 1, j);
            j -= 1;
        }
    }

    let mut evals = [0.0f64; 3];
    let mut evecs = [Vector3::zeros(); 3];
    for (slot, &col) in order.iter().enumerate() {
        evals[slot] = a[(col, col)];
        let mut e = Vector3::new(v[(0, col)], v[(1, col)], v[(2, col)]);
        e /= e.norm();
        // Sign convention: largest-|component| positive; first axis wins ties.
        let mut dominant = 0;
        for axis in 1..3 {
            if e[axis].abs() > e[dominant].abs() + 1e-15 {
                dominant = axis;
            }
        }
        if e[dominant] < 0.0 {
            e = -e;
        }
        evecs[slot] = e;
    }
    (evals, evecs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn diagonal_matrix_keeps_axes() {
        let m = Matrix3::from_diagonal(&Vector3::new(3.0, 1.0, 2.0));
        let (evals, evecs) = sym_eigen3(&m);
        assert_eq!(evals, [1.0, 2.0, 3.0]);
        assert_eq!(evecs[0], Vector3::y());
        assert_eq!(evecs[1], Vector3::z());
        assert_eq!(evecs[2], Vector3::x());
    }

    #[test]
    fn reconstructs_random_symmetric_matrices() {
        let mut rng = crate::rng::SeededRng::new(17);
        for _ in 0..200 {
            let b = Matrix3::from_fn(|_, _| rng.uniform_in(-1.0, 1.0));
            let m = b * b.transpose(); // symmetric PSD
            let (evals, evecs) = sym_eigen3(&m);
            assert!(evals[0] <= evals[1] && evals[1] <= evals[2]);
            for i in 0..3 {
                let residual = m * evecs[i] - evals[i] * evecs[i];
                assert!(residual.norm() < 1e-10, "residual {}", residual.norm());
                assert_relative_eq!(evecs[i].norm(), 1.0, epsilon = 1e-12);
            }
            // Orthogonality
            assert!(evecs[0].dot(&evecs[1]).abs() < 1e-10);
            assert!(evecs[0].dot(&evecs[2]).abs() < 1e-10);
            assert!(evecs[1].dot(&evecs[2]).abs() < 1e-10);
        }
    }

    #[test]
    fn planar_covariance_gives_exact_normal() {
        // zz row/column exactly zero: smallest eigenvector must be exactly z.
        let m = Matrix3::new(2.0, 0.3, 0.0, 0.3, 1.5, 0.0, 0.0, 0.0, 0.0);
        let (evals, evecs) = sym_eigen3(&m);
        assert_eq!(evals[0], 0.0);
        assert_eq!(evecs[0], Vector3::z());
    }
}
