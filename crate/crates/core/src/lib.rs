pub mod dynamics;
pub mod error;
pub mod fitting;
pub mod fpo;
pub mod linalg;
pub mod model;
pub mod quantum;
pub mod sequence;

pub use error::{Error, ParseError, Result};
