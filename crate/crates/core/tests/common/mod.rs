#![allow(dead_code)]

pub use exactgrowth::corpus::*;
