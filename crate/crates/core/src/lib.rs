pub mod arithfn;
pub mod baseline;
pub mod error;
pub mod exactsets;
pub mod limsup;
pub mod numeric;
pub mod overlaps;
pub mod par;
pub mod scenarios;
pub mod schmidt;
pub mod stream;

pub use error::{Error, Result};
pub use numeric::{HpReal, Quad, Rational, RealEnclosure, Scalar};
