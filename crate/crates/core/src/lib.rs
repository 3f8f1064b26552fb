//! Core library of a desk-scale finite-volume CFD mini-app built around a
//! backend-pluggable parallel executor and a pooled memory model.
//!
//! The crate is organized as a stack:
//!
//! * [`executor`] — the three parallel-algorithm primitives (for-loop,
//!   reduction sum, reduction compare) over serial and multi-threaded CPU
//!   backends, plus atomic scatter-add for face loops.
//! * [`mempool`] — block allocator with dummy and fixed-size strategies;
//!   every field allocation goes through it.
//! * [`field`] — pool-backed scalar/vector/tensor fields and their
//!   elementwise and reduction algebra.
//! * [`ldu`] — the owner/neighbour face-ordered sparse matrix format, its
//!   kernel set, and the radix-sort conversion to CSR.
//! * [`solver`] — preconditioned CG/BiCG, DIC/DILU-family preconditioners
//!   and parallel smoothers.
//! * [`gamg`] — pairwise-agglomeration multigrid with Galerkin coarse
//!   operators and a scaled-correction V-cycle.
//! * [`simple`] — uniform cavity mesh, finite-volume schemes and the
//!   steady SIMPLE pressure–velocity loop.
//! * [`config`] / [`timers`] — case-file parsing and section timing.

pub mod config;
pub mod error;
pub mod executor;
pub mod field;
pub mod gamg;
pub mod ldu;
pub mod mempool;
pub mod simple;
pub mod solver;
pub mod timers;

pub use error::{Error, Result};
