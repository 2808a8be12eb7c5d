pub mod cli;
pub mod cluster;
pub mod error;
pub mod fcm;
pub mod image;
pub mod metrics;
pub mod ncm;
pub mod ns;
pub mod phantom;
pub mod pipeline;

pub use error::{Error, Result};
