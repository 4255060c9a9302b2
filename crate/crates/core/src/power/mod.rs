//! CMOS power model and optimal-parallelism planning.
//!
//! A duty-cycled compute block burns static power in every powered gate and
//! dynamic power in the switching ones. Raising parallelism `p` shortens the
//! active period through a speedup law `l(p)` but adds compute lanes, so
//! power is convex in `p` with a closed-form minimizer. The module also
//! reproduces the Toeplitz-solver sizing study: runtime formulas from
//! [`crate::schur`] feed an exact-runtime speedup, a derived serial fraction
//! and the power-versus-parallelism table for two memory technologies.

use serde::Serialize;
use thiserror::Error;

use crate::schur;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PowerError {
    #[error("parallelism must be at least 1")]
    ParallelismBelowOne,
    #[error("serial fraction must lie in [0, 1]")]
    SerialFractionOutOfRange,
    #[error("parameters must be non-negative with positive frequency")]
    InvalidParams,
}

/// Gate counts, cost coefficients and workload of one compute block.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PowerParams {
    /// Gates that can never be power-gated.
    pub n0: f64,
    /// Switchable gates outside the compute lanes (dominated by memory).
    pub n1: f64,
    /// Gates of a single compute lane.
    pub n2_hat: f64,
    /// Top of the linear frequency-scaling region, Hz.
    pub f0: f64,
    /// Leakage cost per gate.
    pub c0: f64,
    /// Dynamic cost per gate-switch.
    pub c1: f64,
    /// Elementary operations per second the algorithm demands.
    pub b: f64,
    /// Serial fraction of the algorithm in [0, 1].
    pub serial_fraction: f64,
}

impl PowerParams {
    pub fn validate(&self) -> Result<(), PowerError> {
        if !(0.0..=1.0).contains(&self.serial_fraction) {
            return Err(PowerError::SerialFractionOutOfRange);
        }
        if self.n0 < 0.0
            || self.n1 < 0.0
            || self.n2_hat < 0.0
            || self.f0 <= 0.0
            || self.c0 < 0.0
            || self.c1 < 0.0
            || self.b < 0.0
        {
            return Err(PowerError::InvalidParams);
        }
        Ok(())
    }
}

/// Fixed-size speedup: `l(p) = p / (1 + K(p-1))`.
pub fn speedup_amdahl(p: f64, serial_fraction: f64) -> f64 {
    p / (1.0 + serial_fraction * (p - 1.0))
}

/// Scaled-size speedup: `l(p) = (1-alpha)p + alpha`.
pub fn speedup_gustafson(p: f64, alpha: f64) -> f64 {
    (1.0 - alpha) * p + alpha
}

/// Block power at parallelism `p` under a pluggable speedup law:
/// `P = c0*N0 + B*(c0/f0 + c1) * (p*N2 + N1) / l(p)`.
pub fn power_with_speedup(
    p: f64,
    params: &PowerParams,
    speedup: impl Fn(f64) -> f64,
) -> Result<f64, PowerError> {
    if p < 1.0 {
        return Err(PowerError::ParallelismBelowOne);
    }
    params.validate()?;
    let unit = params.b * (params.c0 / params.f0 + params.c1);
    Ok(params.n0 * params.c0 + unit * (p * params.n2_hat + params.n1) / speedup(p))
}

/// Block power with the fixed-size speedup law.
pub fn power(p: f64, params: &PowerParams) -> Result<f64, PowerError> {
    power_with_speedup(p, params, |p| speedup_amdahl(p, params.serial_fraction))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub enum Parallelism {
    Finite(f64),
    /// A zero serial fraction pushes the optimum to infinity; the limiting
    /// minimum power still exists.
    Unbounded,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PowerOptimum {
    pub p0: Parallelism,
    pub p_min: f64,
    /// Energy-savings ratio `P(1) / P_min`.
    pub rho: f64,
}

/// Closed-form minimizer `p0 = max(1, sqrt(N1(1-K) / (N2 K)))` and the
/// minimum power it attains.
pub fn optimal_parallelism(params: &PowerParams) -> Result<PowerOptimum, PowerError> {
    params.validate()?;
    let k = params.serial_fraction;
    let unit = params.b * (params.c0 / params.f0 + params.c1);
    let p1 = params.n0 * params.c0 + unit * (params.n2_hat + params.n1);
    if k == 0.0 {
        // Fully parallel: power decreases monotonically toward the lane-only
        // floor.
        let p_min = params.n0 * params.c0 + unit * params.n2_hat;
        let rho = if p_min > 0.0 { p1 / p_min } else { 1.0 };
        return Ok(PowerOptimum {
            p0: Parallelism::Unbounded,
            p_min,
            rho,
        });
    }
    let p0 = (params.n1 * (1.0 - k) / (params.n2_hat * k)).sqrt().max(1.0);
    let p_min = if p0 <= 1.0 {
        p1
    } else {
        params.n0 * params.c0
            + unit
                * ((1.0 - k) * params.n2_hat
                    + k * params.n1
                    + 2.0 * (k * params.n1 * params.n2_hat * (1.0 - k)).sqrt())
    };
    let rho = if p_min > 0.0 { p1 / p_min } else { 1.0 };
    Ok(PowerOptimum {
        p0: Parallelism::Finite(p0),
        p_min,
        rho,
    })
}

/// Minimum power over the admissible power-of-two lane counts.
pub fn optimal_parallelism_pow2(
    params: &PowerParams,
    max_exponent: u32,
) -> Result<(f64, f64), PowerError> {
    let mut best = (1.0, power(1.0, params)?);
    for k in 0..=max_exponent {
        let p = (1u64 << k) as f64;
        let w = power(p, params)?;
        if w < best.1 {
            best = (p, w);
        }
    }
    Ok(best)
}

/// Power at problem size `n` with linearly growing memory and workload and
/// the scaled-size speedup law; used for asymptotic growth checks.
pub fn power_growth(p: f64, n: f64, alpha: f64, base: &PowerParams) -> Result<f64, PowerError> {
    if p < 1.0 {
        return Err(PowerError::ParallelismBelowOne);
    }
    let scaled = PowerParams {
        n0: base.n0 * n,
        n1: base.n1 * n,
        b: base.b * n,
        ..*base
    };
    scaled.validate()?;
    let unit = scaled.b * (scaled.c0 / scaled.f0 + scaled.c1);
    Ok(scaled.n0 * scaled.c0
        + unit * (p * scaled.n2_hat + scaled.n1) / speedup_gustafson(p, alpha))
}

/// Memory technology of the solver sizing study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StudyMemory {
    /// Single-port static RAM: 48 multiplier-equivalents of gates, lane
    /// counts limited to 4 by the minimum bank size.
    SinglePort,
    /// Register-file memory: 96 multiplier-equivalents, lane counts up to 64.
    RegisterFile,
}

impl StudyMemory {
    pub fn n1(self) -> f64 {
        match self {
            StudyMemory::SinglePort => 48.0,
            StudyMemory::RegisterFile => 96.0,
        }
    }

    pub fn max_lane_exponent(self) -> u32 {
        match self {
            StudyMemory::SinglePort => 2,
            StudyMemory::RegisterFile => 6,
        }
    }
}

/// Gate count of one compute lane in multiplier-equivalents: one complex
/// multiplier (4 mults + 2 adds), two complex adders, and the elementary
/// function tables.
pub const STUDY_LANE_GATES: f64 = 10.31;

#[derive(Debug, Clone, Serialize)]
pub struct StudyRow {
    pub p: u64,
    pub speedup: f64,
    pub power_over_c: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseStudy {
    pub memory: StudyMemory,
    pub m: u32,
    pub pipeline: u32,
    /// Serial fraction derived from the runtime formulas.
    pub serial_fraction: f64,
    /// Closed-form optimum from the derived serial fraction.
    pub p0: f64,
    /// Exact-runtime power table over power-of-two lane counts.
    pub rows: Vec<StudyRow>,
    /// Lane count minimizing the exact-runtime power.
    pub argmin_p: u64,
    /// Clock frequency for one solve per second at p = 1, Hz.
    pub clock_hz: f64,
}

/// Reproduces the solver sizing study: runtimes for length `2^m` at pipeline
/// `l` give the serial fraction `K = T_max/T_1`, the closed-form optimum
/// `p0`, and the exact-runtime power column `P(p)/C = (p*N2 + N1) / l(p)`
/// with `l(p) = T_1/T_p`.
pub fn schur_case_study(memory: StudyMemory, m: u32, pipeline: u32) -> CaseStudy {
    let t1 = schur::runtime_with_io(m, 0, pipeline);
    let tmax = schur::runtime_with_io(m, m + 1, pipeline);
    let serial_fraction = tmax / t1;
    let p0 = (memory.n1() * (1.0 - serial_fraction) / (STUDY_LANE_GATES * serial_fraction)).sqrt();

    let mut rows = Vec::new();
    let mut argmin = (1u64, f64::INFINITY);
    for k in 0..=memory.max_lane_exponent() {
        let p = 1u64 << k;
        let tp = schur::runtime_with_io(m, k, pipeline);
        let speedup = t1 / tp;
        let power_over_c = (p as f64 * STUDY_LANE_GATES + memory.n1()) / speedup;
        if power_over_c < argmin.1 {
            argmin = (p, power_over_c);
        }
        rows.push(StudyRow {
            p,
            speedup,
            power_over_c,
        });
    }

    CaseStudy {
        memory,
        m,
        pipeline,
        serial_fraction,
        p0,
        rows,
        argmin_p: argmin.0,
        clock_hz: t1,
    }
}
