pub mod classes;
pub mod cli;
pub mod engine;
pub mod limits;
pub mod model;
pub mod normalization;
pub mod rng;
pub mod roots;
pub mod stats;
pub mod tails;
