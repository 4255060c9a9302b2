//! Streaming signal-processing kernels with exact cost accounting.
//!
//! The crate bundles the pieces needed to plan and verify a small FFT-centric
//! accelerator: mixed-radix FFT stage operators built from index maps
//! ([`fft`]), conflict-free multi-bank memory schedules and a cycle-accurate
//! verifier ([`banks`]), fixed-point function tables synthesized by mixed
//! integer linear programming ([`tables`]), a superfast Schur/Toeplitz solver
//! with read and memory instrumentation ([`schur`]), a power/parallelism
//! planner ([`power`]), and low-delay partitioned convolution ([`conv`]).

pub mod banks;
pub mod conv;
pub mod fft;
pub mod power;
pub mod schur;
pub mod tables;
