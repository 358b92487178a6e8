pub mod convert;
pub mod eval;
pub mod measure;
pub mod preprocess;
pub mod register;
pub mod scan;
pub mod synth;
