pub mod cli;
pub mod controllability;
pub mod dynamics;
pub mod error;
pub mod hum;
pub mod mlf;
pub mod quadrature;
pub mod spectral;
