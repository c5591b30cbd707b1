//! Reference implementations shared by the integration tests. Each one is
//! written independently of the library code it checks.
#![allow(dead_code)]

pub mod fk;
pub mod fuzz;
pub mod qp;
pub mod robot;
pub mod series;
