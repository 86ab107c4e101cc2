pub mod analysis;
pub mod cdf;
pub mod cli;
pub mod error;
pub mod fast;
pub mod legendre;
pub mod moments;
pub mod rational;
pub mod series;
pub mod weights;
