pub mod data;
pub mod error;
pub mod family;
pub mod glm;
pub mod inference;
pub mod io;
pub mod linalg;
pub mod rng;
pub mod selection;
pub mod sim;
pub mod smooth;
pub mod split;

pub use data::Dataset;
pub use error::{Error, Result};
pub use family::Family;
pub use glm::{fit_mle, FitOptions, PartialFit};
pub use nalgebra;
