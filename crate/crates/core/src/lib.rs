pub mod qp;
pub mod ies;
pub mod forecast;
pub mod data;
pub mod train;
pub mod eval;
pub mod config;
pub mod cli;
