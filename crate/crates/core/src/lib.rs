#![no_std]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analytic;
pub mod eigen;
pub mod fock;
pub mod geometry;
pub mod hamiltonian;
pub mod linalg;
pub mod model;
pub mod rdm;
pub mod sampling;
pub mod symmetry;
pub mod trajectory;
