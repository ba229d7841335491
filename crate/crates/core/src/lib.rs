//! Exact desk-scale computations connecting pro-p Iwahori-Hecke modules of
//! GL(d+1) over Q_p with etale (phi,Gamma)-modules over F_q((t)) and the
//! parameters of the associated Galois representations.

pub mod cyclic;
pub mod field;
pub mod galois;
pub mod halftree;
pub mod hecke;
pub mod linalg;
pub mod ratmat;
pub mod report;
pub mod series;
pub mod sl2;
pub mod weyl;

pub use cyclic::acceptance_instances;
