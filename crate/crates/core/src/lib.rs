pub mod error;
pub mod linalg;
pub mod spdc;
pub mod probe;
pub mod harness;
pub mod cli;
