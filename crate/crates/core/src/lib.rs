pub mod behavior;
pub mod certify;
pub mod error;
pub mod guessprob;
pub mod lp;
pub mod nosig;
pub mod numeric;

pub use error::{Error, Result};
