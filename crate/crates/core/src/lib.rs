pub mod blockenc;
pub mod circuit;
pub mod energysearch;
pub mod error;
pub mod groundprep;
pub mod hamlib;
pub mod linalg;
pub mod polyapprox;
pub mod qsp;
