//! PLY point-cloud reader/writer.
//!
//! Reads ASCII and binary little-endian files with `x`/`y`/`z` stored as
//! `float` or `double`, plus optional `nx`/`ny`/`nz` normals; unknown
//! vertex properties and non-vertex elements are skipped. Parse failures
//! report the byte offset and the missing or malformed construct.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::PointCloud;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
}

/// Coordinate width used when writing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyPrecision {
    Float32,
    Float64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "char" | "int8" => ScalarType::I8,
            "uchar" | "uint8" => ScalarType::U8,
            "short" | "int16" => ScalarType::I16,
            "ushort" | "uint16" => ScalarType::U16,
            "int" | "int32" => ScalarType::I32,
            "uint" | "uint32" => ScalarType::U32,
            "float" | "float32" => ScalarType::F32,
            "double" | "float64" => ScalarType::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            ScalarType::I8 | ScalarType::U8 => 1,
            ScalarType::I16 | ScalarType::U16 => 2,
            ScalarType::I32 | ScalarType::U32 | ScalarType::F32 => 4,
            ScalarType::F64 => 8,
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: ScalarType },
    List { count_ty: ScalarType, item_ty: ScalarType },
}

#[derive(Debug, Clone)]
struct ElementDecl {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
    path: String,
}

impl<'a> Cursor<'a> {
    fn error(&self, message: impl Into<String>) -> Error {
        Error::parse(&self.path, self.pos as u64, message)
    }

    /// Next header line, trimmed; `None` at end of data.
    fn line(&mut self) -> Option<(usize, &'a str)> {
        if self.pos >= self.data.len() {
            return None;
        }
        let start = self.pos;
        let rest = &self.data[start..];
        let end = rest.iter().position(|&b| b == b'\n').map(|i| start + i);
        let (line_end, next) = match end {
            Some(e) => (e, e + 1),
            None => (self.data.len(), self.data.len()),
        };
        self.pos = next;
        let raw = &self.data[start..line_end];
        let raw = std::str::from_utf8(raw).ok()?;
        Some((start, raw.trim_end_matches('\r').trim()))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(self.error(format!(
                "unexpected end of file (needed {n} more bytes)"
            )));
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn read_scalar(&mut self, ty: ScalarType) -> Result<f64> {
        let bytes = self.take(ty.size())?;
        Ok(match ty {
            ScalarType::I8 => bytes[0] as i8 as f64,
            ScalarType::U8 => bytes[0] as f64,
            ScalarType::I16 => i16::from_le_bytes([bytes[0], bytes[1]]) as f64,
            ScalarType::U16 => u16::from_le_bytes([bytes[0], bytes[1]]) as f64,
            ScalarType::I32 => {
                i32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) as f64
            }
            ScalarType::U32 => {
                u32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) as f64
            }
            ScalarType::F32 => {
                f32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) as f64
            }
            ScalarType::F64 => f64::from_le_bytes(bytes.try_into().unwrap()),
        })
    }
}

/// Reads a PLY point cloud (with normals when all of `nx`,`ny`,`nz` exist).
pub fn read_ply(path: &Path) -> Result<PointCloud> {
    let data = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut cur = Cursor {
        data: &data,
        pos: 0,
        path: path.display().to_string(),
    };

    let (_, magic) = cur
        .line()
        .ok_or_else(|| cur.error("empty file, expected `ply` magic"))?;
    if magic != "ply" {
        return Err(cur.error("missing `ply` magic line"));
    }

    let mut format: Option<PlyFormat> = None;
    let mut elements: Vec<ElementDecl> = Vec::new();
    let mut header_done = false;
    while let Some((offset, line)) = cur.line() {
        let mut words = line.split_whitespace();
        match words.next() {
            Some("comment") | Some("obj_info") | None => {}
            Some("format") => {
                format = match (words.next(), words.next()) {
                    (Some("ascii"), Some("1.0")) => Some(PlyFormat::Ascii),
                    (Some("binary_little_endian"), Some("1.0")) => {
                        Some(PlyFormat::BinaryLittleEndian)
                    }
                    (Some(other), _) => {
                        return Err(Error::parse(
                            &cur.path,
                            offset as u64,
                            format!("unsupported PLY format `{other}`"),
                        ))
                    }
                    _ => return Err(Error::parse(&cur.path, offset as u64, "malformed format line")),
                };
            }
            Some("element") => {
                let name = words
                    .next()
                    .ok_or_else(|| Error::parse(&cur.path, offset as u64, "element without name"))?;
                let count: usize = words
                    .next()
                    .and_then(|w| w.parse().ok())
                    .ok_or_else(|| {
                        Error::parse(&cur.path, offset as u64, "element without a valid count")
                    })?;
                elements.push(ElementDecl {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let element = elements.last_mut().ok_or_else(|| {
                    Error::parse(&cur.path, offset as u64, "property before any element")
                })?;
                let first = words.next().ok_or_else(|| {
                    Error::parse(&cur.path, offset as u64, "property without a type")
                })?;
                if first == "list" {
                    let count_ty = words.next().and_then(ScalarType::parse);
                    let item_ty = words.next().and_then(ScalarType::parse);
                    match (count_ty, item_ty, words.next()) {
                        (Some(count_ty), Some(item_ty), Some(_name)) => {
                            element.properties.push(Property::List { count_ty, item_ty })
                        }
                        _ => {
                            return Err(Error::parse(
                                &cur.path,
                                offset as u64,
                                "malformed list property",
                            ))
                        }
                    }
                } else {
                    let ty = ScalarType::parse(first).ok_or_else(|| {
                        Error::parse(
                            &cur.path,
                            offset as u64,
                            format!("unknown property type `{first}`"),
                        )
                    })?;
                    let name = words.next().ok_or_else(|| {
                        Error::parse(&cur.path, offset as u64, "property without a name")
                    })?;
                    element.properties.push(Property::Scalar {
                        name: name.to_string(),
                        ty,
                    });
                }
            }
            Some("end_header") => {
                header_done = true;
                break;
            }
            Some(other) => {
                return Err(Error::parse(
                    &cur.path,
                    offset as u64,
                    format!("unknown header keyword `{other}`"),
                ))
            }
        }
    }
    if !header_done {
        return Err(cur.error("truncated header: missing `end_header`"));
    }
    let format = format.ok_or_else(|| cur.error("truncated header: missing `format` line"))?;
    let vertex = elements
        .iter()
        .find(|e| e.name == "vertex")
        .ok_or_else(|| cur.error("header declares no `vertex` element"))?
        .clone();

    let column = |name: &str| -> Option<usize> {
        vertex.properties.iter().position(|p| match p {
            Property::Scalar { name: n, .. } => n == name,
            Property::List { .. } => false,
        })
    };
    let (xi, yi, zi) = match (column("x"), column("y"), column("z")) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => {
            return Err(cur.error("vertex element is missing x/y/z properties"));
        }
    };
    let normal_cols = match (column("nx"), column("ny"), column("nz")) {
        (Some(a), Some(b), Some(c)) => Some((a, b, c)),
        _ => None,
    };

    let mut points = Vec::new();
    let mut normals = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for element in &elements {
        let is_vertex = element.name == "vertex";
        for _row in 0..element.count {
            values.clear();
            match format {
                PlyFormat::Ascii => {
                    let (offset, line) = loop {
                        match cur.line() {
                            Some((o, l)) if l.is_empty() => {
                                let _ = (o, l);
                                continue;
                            }
                            Some(pair) => break pair,
                            None => {
                                return Err(cur.error(format!(
                                    "unexpected end of file inside `{}` element",
                                    element.name
                                )))
                            }
                        }
                    };
                    let mut words = line.split_whitespace();
                    for prop in &element.properties {
                        match prop {
                            Property::Scalar { .. } => {
                                let w = words.next().ok_or_else(|| {
                                    Error::parse(&cur.path, offset as u64, "row has too few values")
                                })?;
                                let v: f64 = w.parse().map_err(|_| {
                                    Error::parse(
                                        &cur.path,
                                        offset as u64,
                                        format!("invalid number `{w}`"),
                                    )
                                })?;
                                values.push(v);
                            }
                            Property::List { .. } => {
                                let n = words
                                    .next()
                                    .and_then(|w| w.parse::<usize>().ok())
                                    .ok_or_else(|| {
                                        Error::parse(
                                            &cur.path,
                                            offset as u64,
                                            "invalid list count",
                                        )
                                    })?;
                                for _ in 0..n {
                                    words.next().ok_or_else(|| {
                                        Error::parse(
                                            &cur.path,
                                            offset as u64,
                                            "row has too few list values",
                                        )
                                    })?;
                                }
                                values.push(f64::NAN); // placeholder slot
                            }
                        }
                    }
                }
                PlyFormat::BinaryLittleEndian => {
                    for prop in &element.properties {
                        match prop {
                            Property::Scalar { ty, .. } => {
                                let v = cur.read_scalar(*ty)?;
                                values.push(v);
                            }
                            Property::List { count_ty, item_ty } => {
                                let n = cur.read_scalar(*count_ty)? as usize;
                                cur.take(n * item_ty.size())?;
                                values.push(f64::NAN);
                            }
                        }
                    }
                }
            }
            if is_vertex {
                points.push(Point3::new(values[xi], values[yi], values[zi]));
                if let Some((a, b, c)) = normal_cols {
                    normals.push(Vector3::new(values[a], values[b], values[c]));
                }
            }
        }
    }

    let mut cloud = PointCloud::from_points(points);
    if normal_cols.is_some() {
        cloud.normals = Some(normals);
    }
    Ok(cloud)
}

/// Writes a cloud as PLY; `extra` adds one more scalar property per point
/// (used for per-point distance maps).
pub fn write_ply(
    path: &Path,
    cloud: &PointCloud,
    format: PlyFormat,
    precision: PlyPrecision,
    extra: Option<(&str, &[f64])>,
) -> Result<()> {
    if let Some((_, values)) = extra {
        if values.len() != cloud.len() {
            return Err(Error::SizeMismatch {
                left: cloud.len(),
                right: values.len(),
            });
        }
    }
    let ty = match precision {
        PlyPrecision::Float32 => "float",
        PlyPrecision::Float64 => "double",
    };
    let mut header = String::new();
    header.push_str("ply\n");
    header.push_str(match format {
        PlyFormat::Ascii => "format ascii 1.0\n",
        PlyFormat::BinaryLittleEndian => "format binary_little_endian 1.0\n",
    });
    let _ = writeln!(header, "element vertex {}", cloud.len());
    for name in ["x", "y", "z"] {
        let _ = writeln!(header, "property {ty} {name}");
    }
    if cloud.normals.is_some() {
        for name in ["nx", "ny", "nz"] {
            let _ = writeln!(header, "property {ty} {name}");
        }
    }
    if let Some((name, _)) = extra {
        let _ = writeln!(header, "property {ty} {name}");
    }
    header.push_str("end_header\n");

    let mut out: Vec<u8> = header.into_bytes();
    let mut row: Vec<f64> = Vec::with_capacity(7);
    for i in 0..cloud.len() {
        row.clear();
        let p = cloud.points[i];
        row.extend([p.x, p.y, p.z]);
        if let Some(ns) = &cloud.normals {
            row.extend([ns[i].x, ns[i].y, ns[i].z]);
        }
        if let Some((_, values)) = extra {
            row.push(values[i]);
        }
        match format {
            PlyFormat::Ascii => {
                let mut line = String::new();
                for (j, v) in row.iter().enumerate() {
                    if j > 0 {
                        line.push(' ');
                    }
                    match precision {
                        PlyPrecision::Float32 => {
                            let _ = write!(line, "{}", *v as f32);
                        }
                        PlyPrecision::Float64 => {
                            let _ = write!(line, "{v}");
                        }
                    }
                }
                line.push('\n');
                out.extend_from_slice(line.as_bytes());
            }
            PlyFormat::BinaryLittleEndian => {
                for v in &row {
                    match precision {
                        PlyPrecision::Float32 => out.extend_from_slice(&(*v as f32).to_le_bytes()),
                        PlyPrecision::Float64 => out.extend_from_slice(&v.to_le_bytes()),
                    }
                }
            }
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}
