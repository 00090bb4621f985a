pub mod cli;
pub mod error;
pub mod freealg;
pub mod gf2;
pub mod kfunctor;
pub mod models;
pub mod steenrod;
pub mod operads;
pub mod unstable;

pub use error::{Error, Result};
