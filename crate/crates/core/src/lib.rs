//! D(n)-pairs, their binary quadratic forms and the counting asymptotics
//! of pairs per proper equivalence class.

pub mod arith;
pub mod bqf;
pub mod classnum;
pub mod cli;
pub mod pairs;
pub mod pell;
pub mod quadrature;
pub mod theory;
pub mod volumes;
