//! Superfast factorization of symmetric positive-definite Toeplitz systems.
//!
//! The classical reflection-coefficient recursion ([`levinson`]) costs
//! `O(n^2)` and serves as the oracle. The fast path ([`schur_fast`]) descends
//! a binary tree over the coefficient range: every node halves its residual
//! pair, recurses left, transplants the residual across the right subtree
//! with a spectral update, recurses right, and merges the children's
//! polynomial pairs by pointwise spectral products. All products run through
//! the real split-radix transforms of [`crate::fft::counted`]; spectra of
//! real polynomials are stored half-length using conjugate-even symmetry.
//!
//! Instrumentation follows the accelerator cost model: reads are tallied per
//! vector operation (a radix-4 FFT stage of length `n` reads `n/2` complex
//! pairs, a vector multiply or add reads half its nominal length), the
//! critical path charges one read per dependent stage with two-way
//! polynomial parallelism, and an arena accountant tracks the high-water
//! mark of live data cells, which never exceeds `4n`.

use serde::Serialize;
use thiserror::Error;

use crate::fft::counted::{
    real_fft_split_radix, real_ifft_split_radix, CountPolicy, OpCounter,
};
use crate::fft::{C64, FftError};

#[derive(Debug, Error, PartialEq)]
pub enum SchurError {
    #[error(transparent)]
    Fft(#[from] FftError),
    #[error("matrix is not positive definite: |reflection| >= 1 at order {order}")]
    NotPositiveDefinite { order: usize },
    #[error("fast path requires a power-of-two order, got {0}")]
    OrderNotPowerOfTwo(usize),
    #[error("autocorrelation must provide at least t_0 and t_1")]
    TooShort,
    #[error("t_0 must be nonzero")]
    ZeroLeadingCoefficient,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Normalized autocorrelation input `(t_0 = 1, t_1, ..., t_n)`.
#[derive(Debug, Clone)]
pub struct ToeplitzSpec {
    t: Vec<f64>,
    normalized: bool,
}

impl ToeplitzSpec {
    /// Accepts a raw sequence and divides through by `t_0`; `normalized`
    /// reports whether scaling was needed.
    pub fn new(raw: &[f64]) -> Result<Self, SchurError> {
        if raw.len() < 2 {
            return Err(SchurError::TooShort);
        }
        if raw[0] == 0.0 {
            return Err(SchurError::ZeroLeadingCoefficient);
        }
        let scale = 1.0 / raw[0];
        let normalized = raw[0] != 1.0;
        Ok(Self {
            t: raw.iter().map(|&v| v * scale).collect(),
            normalized,
        })
    }

    pub fn order(&self) -> usize {
        self.t.len() - 1
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.t
    }

    pub fn was_rescaled(&self) -> bool {
        self.normalized
    }
}

/// Output of either solver path.
#[derive(Debug, Clone, Serialize)]
pub struct SchurResult {
    /// Reflection coefficients `gamma_1..gamma_n`.
    pub reflection: Vec<f64>,
    /// Residual variances `d_1..d_n = prod (1 - gamma^2)`.
    pub variances: Vec<f64>,
    /// Monic prediction polynomial coefficients `psi_0..psi_n` (filled by the
    /// classical path; derive via [`szego_from_schur`] after the fast path).
    pub psi: Vec<f64>,
    /// Root spectra of the polynomial pair on `n` points (fast path only).
    pub eta_spectrum: Option<Vec<C64>>,
    pub xi_spectrum: Option<Vec<C64>>,
    /// Inverse of the accumulated residual variance at the root.
    pub delta_inv: Option<f64>,
}

/// Resource instrumentation of one fast-path run.
#[derive(Debug, Clone, Default, Serialize)]
pub struct CostTrace {
    /// Complex reads under the vector-op accounting.
    pub reads: u64,
    /// Reads on the critical path with two-way polynomial parallelism.
    pub critical_path_reads: u64,
    /// High-water mark of live data cells (one cell per stored scalar).
    pub peak_cells: usize,
    /// Scalar arithmetic actually tallied by the solver.
    pub scalar_ops: OpCounter,
}

/// Classical reflection-coefficient recursion; `O(n^2)`, numerically the
/// reference for everything else in this module.
pub fn levinson(spec: &ToeplitzSpec) -> Result<SchurResult, SchurError> {
    let t = spec.coefficients();
    let n = spec.order();
    let mut psi = vec![1.0f64];
    let mut d = 1.0f64;
    let mut reflection = Vec::with_capacity(n);
    let mut variances = Vec::with_capacity(n);

    for m in 1..=n {
        let mut acc = t[m];
        for k in 1..m {
            acc += t[m - k] * psi[k];
        }
        let gamma = -acc / d;
        if !(gamma.abs() < 1.0) {
            return Err(SchurError::NotPositiveDefinite { order: m });
        }
        let mut next = vec![0.0f64; m + 1];
        next[0] = 1.0;
        for k in 1..m {
            next[k] = psi[k] + gamma * psi[m - k];
        }
        next[m] = gamma;
        psi = next;
        d *= 1.0 - gamma * gamma;
        reflection.push(gamma);
        variances.push(d);
    }

    Ok(SchurResult {
        reflection,
        variances,
        psi,
        eta_spectrum: None,
        xi_spectrum: None,
        delta_inv: None,
    })
}

/// Live-cell accountant. Every buffer the solver keeps addressable is charged
/// here, one cell per stored scalar; transform scratch inside the FFT kernels
/// models the compute pipeline and is not addressable storage.
#[derive(Debug, Default)]
struct Arena {
    live: usize,
    peak: usize,
}

impl Arena {
    fn alloc(&mut self, cells: usize) {
        self.live += cells;
        self.peak = self.peak.max(self.live);
    }

    fn free(&mut self, cells: usize) {
        debug_assert!(self.live >= cells);
        self.live -= cells;
    }
}

/// Conjugate-even spectrum of a real vector of length `m`, stored
/// half-length: `[re_0, re_{m/2}, re_1, im_1, ..., re_{m/2-1}, im_{m/2-1}]`
/// (`[re_0]` for `m = 1`), occupying exactly `m` data cells.
#[derive(Debug, Clone)]
struct CeSpectrum {
    m: usize,
    data: Vec<f64>,
}

impl CeSpectrum {
    fn from_full(full: &[C64]) -> Self {
        let m = full.len();
        if m == 1 {
            return Self {
                m,
                data: vec![full[0].re],
            };
        }
        let mut data = Vec::with_capacity(m);
        data.push(full[0].re);
        data.push(full[m / 2].re);
        for q in 1..m / 2 {
            data.push(full[q].re);
            data.push(full[q].im);
        }
        Self { m, data }
    }

    fn to_full(&self) -> Vec<C64> {
        let m = self.m;
        if m == 1 {
            return vec![C64::new(self.data[0], 0.0)];
        }
        let mut full = vec![C64::new(0.0, 0.0); m];
        full[0] = C64::new(self.data[0], 0.0);
        full[m / 2] = C64::new(self.data[1], 0.0);
        for q in 1..m / 2 {
            let v = C64::new(self.data[2 * q], self.data[2 * q + 1]);
            full[q] = v;
            full[m - q] = v.conj();
        }
        full
    }

    fn get(&self, q: usize) -> C64 {
        let m = self.m;
        if m == 1 {
            return C64::new(self.data[0], 0.0);
        }
        if q == 0 {
            C64::new(self.data[0], 0.0)
        } else if q == m / 2 {
            C64::new(self.data[1], 0.0)
        } else if q < m / 2 {
            C64::new(self.data[2 * q], self.data[2 * q + 1])
        } else {
            self.get(m - q).conj()
        }
    }

    fn set(&mut self, q: usize, v: C64) {
        let m = self.m;
        debug_assert!(q <= m / 2);
        if m == 1 || q == 0 {
            self.data[0] = v.re;
        } else if q == m / 2 {
            self.data[1] = v.re;
        } else {
            self.data[2 * q] = v.re;
            self.data[2 * q + 1] = v.im;
        }
    }

    fn cells(&self) -> usize {
        self.m
    }
}

/// Per-node state the solver threads through the recursion.
struct Ctx {
    policy: CountPolicy,
    trace: CostTrace,
    arena: Arena,
    gammas: Vec<f64>,
    variances_acc: f64,
}

impl Ctx {
    /// Vector-op read accounting for one node of input length `n = 2^m`:
    /// six transforms and four inverse transforms of length `n` at
    /// ceil(m/2) radix-4 stages of `n/2` complex reads each, plus eight
    /// vector multiplies and four vector adds of `n/2` reads each. The root
    /// keeps its spectra and skips the two final inverse transforms.
    fn charge_node_reads(&mut self, n: usize, is_root: bool) {
        let m = n.trailing_zeros() as u64;
        let stages = m.div_ceil(2);
        let half = (n / 2) as u64;
        let transforms = if is_root { 8 } else { 10 };
        self.trace.reads += transforms * stages * half + 12 * half;
        // Critical path: two transform units, two inverse units (one at the
        // root), two multiplies, two adds; one read per dependent stage.
        let inv_units = if is_root { 1 } else { 2 };
        self.trace.critical_path_reads += (2 + inv_units) * stages + 4;
    }

    fn charge_leaf(&mut self) {
        self.trace.reads += 1;
        self.trace.critical_path_reads += 1;
    }
}

/// Coefficient pair of a residual term, lengths kept equal.
struct Residual {
    a: Vec<f64>,
    b: Vec<f64>,
}

/// Spectra pair of a node's polynomial pair plus its inverse variance.
struct NodeOut {
    eta: CeSpectrum,
    xi: CeSpectrum,
    delta_inv: f64,
}

/// Fast solver: tree recursion with all polynomial products in the spectral
/// domain. Returns the reflection coefficients, variances, root spectra and
/// the resource trace.
pub fn schur_fast(spec: &ToeplitzSpec) -> Result<(SchurResult, CostTrace), SchurError> {
    let n = spec.order();
    if !n.is_power_of_two() {
        return Err(SchurError::OrderNotPowerOfTwo(n));
    }
    let t = spec.coefficients();

    let mut ctx = Ctx {
        policy: CountPolicy::default(),
        trace: CostTrace::default(),
        arena: Arena::default(),
        gammas: Vec::with_capacity(n),
        variances_acc: 1.0,
    };

    // phi_0 = -(t_1 + t_2 z + ...) / (1 + t_1 z + ...): numerator and
    // denominator coefficient prefixes of length n.
    let a: Vec<f64> = t[..n].to_vec();
    let b: Vec<f64> = t[1..=n].iter().map(|&v| -v).collect();
    ctx.arena.alloc(2 * n);
    let out = node(&mut ctx, Residual { a, b }, true)?;

    let variances: Vec<f64> = {
        let mut acc = 1.0;
        ctx.gammas
            .iter()
            .map(|g| {
                acc *= 1.0 - g * g;
                acc
            })
            .collect()
    };
    let eta_full = out.eta.to_full();
    let xi_full = out.xi.to_full();
    ctx.arena.free(out.eta.cells() + out.xi.cells());

    let result = SchurResult {
        reflection: ctx.gammas.clone(),
        variances,
        psi: Vec::new(),
        eta_spectrum: Some(eta_full),
        xi_spectrum: Some(xi_full),
        delta_inv: Some(out.delta_inv),
    };
    let mut trace = ctx.trace;
    trace.peak_cells = ctx.arena.peak;
    Ok((result, trace))
}

/// One tree node. Consumes the first `m` coefficients of the residual pair
/// (charged to the arena by the caller) and returns the spectra of the
/// node's polynomial pair on `m` points.
fn node(ctx: &mut Ctx, residual: Residual, is_root: bool) -> Result<NodeOut, SchurError> {
    let m = residual.a.len();
    if m == 1 {
        return leaf(ctx, &residual);
    }
    if m == 2 {
        return node2(ctx, residual, is_root);
    }

    ctx.charge_node_reads(m, is_root);
    let half = m / 2;
    let Residual { mut a, mut b } = residual;

    // Left child on the coefficient prefixes.
    ctx.arena.alloc(m);
    let left = node(
        ctx,
        Residual {
            a: a[..half].to_vec(),
            b: b[..half].to_vec(),
        },
        false,
    )?;

    // Children return spectra on m/2 points; re-sample the polynomial pair
    // on m points by padding coefficients and transforming.
    let (x0, y0) = respample(ctx, &left, m)?;

    // Transform the residual prefixes in place (a,b hold m cells each; the
    // spectra are also m cells, so the arena balance is unchanged).
    let mut a_spec = CeSpectrum::from_full(&real_fft_split_radix(
        &a,
        ctx.policy,
        &mut ctx.trace.scalar_ops,
    )?);
    let mut b_spec = CeSpectrum::from_full(&real_fft_split_radix(
        &b,
        ctx.policy,
        &mut ctx.trace.scalar_ops,
    )?);
    a.clear();
    b.clear();

    // Pointwise residual transplant across the right subtree.
    mobius_update(&mut a_spec, &mut b_spec, &x0, &y0, &mut ctx.trace.scalar_ops);

    // Back to coefficients; the alternating sign on the numerator realizes
    // the half-length shift in the spectral domain.
    let a_hat = real_ifft_split_radix(&a_spec.to_full(), ctx.policy, &mut ctx.trace.scalar_ops)?;
    let mut b_full = b_spec.to_full();
    for (q, v) in b_full.iter_mut().enumerate() {
        if q % 2 == 1 {
            *v = -*v;
        }
    }
    let b_hat = real_ifft_split_radix(&b_full, ctx.policy, &mut ctx.trace.scalar_ops)?;

    // Right child consumes the scaled coefficient prefixes; dropping the
    // upper halves returns m cells to the arena.
    let dinv = left.delta_inv;
    let a1: Vec<f64> = a_hat[..half].iter().map(|&v| v * dinv).collect();
    let b1: Vec<f64> = b_hat[..half].iter().map(|&v| v * dinv).collect();
    ctx.trace.scalar_ops.rmul(m as u64);
    ctx.arena.free(m);
    drop(a_spec);
    drop(b_spec);

    let right = node(ctx, Residual { a: a1, b: b1 }, false)?;
    let (x1, y1) = respample(ctx, &right, m)?;

    // Merge the children's polynomial pairs pointwise.
    let mut eta = x0;
    let mut xi = y0;
    combine(&mut eta, &mut xi, &x1, &y1, &mut ctx.trace.scalar_ops);
    ctx.arena.free(x1.cells() + y1.cells());

    let delta_inv = left.delta_inv * right.delta_inv;
    ctx.trace.scalar_ops.rmul(1);

    if !is_root {
        // Hand coefficients up for the parent's zero-padded transforms; the
        // spectra convert in place, cell count unchanged.
        let eta_c = real_ifft_split_radix(&eta.to_full(), ctx.policy, &mut ctx.trace.scalar_ops)?;
        let xi_c = real_ifft_split_radix(&xi.to_full(), ctx.policy, &mut ctx.trace.scalar_ops)?;
        let eta = CeSpectrum {
            m,
            data: eta_c,
        };
        let xi = CeSpectrum { m, data: xi_c };
        return Ok(NodeOut {
            eta,
            xi,
            delta_inv,
        });
    }
    Ok(NodeOut {
        eta,
        xi,
        delta_inv,
    })
}

/// First leaf values are given by the input; later leaves cost one multiply
/// and one add plus a reciprocal for the variance update.
fn leaf(ctx: &mut Ctx, residual: &Residual) -> Result<NodeOut, SchurError> {
    ctx.charge_leaf();
    let gamma = residual.b[0] / residual.a[0];
    let order = ctx.gammas.len() + 1;
    if !(gamma.abs() < 1.0) {
        return Err(SchurError::NotPositiveDefinite { order });
    }
    if !ctx.gammas.is_empty() {
        ctx.trace.scalar_ops.rmul(1);
        ctx.trace.scalar_ops.radd(1);
    }
    ctx.gammas.push(gamma);
    ctx.variances_acc *= 1.0 - gamma * gamma;
    let delta_inv = 1.0 / (1.0 - gamma * gamma);
    Ok(NodeOut {
        eta: CeSpectrum {
            m: 1,
            data: vec![1.0],
        },
        xi: CeSpectrum {
            m: 1,
            data: vec![gamma],
        },
        delta_inv,
    })
}

/// Size-2 node, fused: the children are scalar leaves, so spectra of their
/// polynomials are constants and both transforms collapse to two adds each.
fn node2(ctx: &mut Ctx, residual: Residual, is_root: bool) -> Result<NodeOut, SchurError> {
    ctx.charge_node_reads(2, is_root);
    let Residual { a, b } = residual;

    // Left leaf reads the leading coefficients in place; its polynomial pair
    // occupies two fresh cells.
    let left = leaf(
        ctx,
        &Residual {
            a: vec![a[0]],
            b: vec![b[0]],
        },
    )?;
    ctx.arena.alloc(2);
    let g1 = *ctx.gammas.last().unwrap();

    // Two-point transforms of the residual pair: two adds each.
    let a_sp = [a[0] + a[1], a[0] - a[1]];
    let b_sp = [b[0] + b[1], b[0] - b[1]];
    ctx.trace.scalar_ops.radd(4);

    // Spectra of the leaf polynomials are [1, 1] and [g1, g1]; the pointwise
    // update runs on two real bins.
    let mut ah = [0.0f64; 2];
    let mut bh = [0.0f64; 2];
    for q in 0..2 {
        ah[q] = a_sp[q] - g1 * b_sp[q];
        bh[q] = -g1 * a_sp[q] + b_sp[q];
        ctx.trace.scalar_ops.rmul(4);
        ctx.trace.scalar_ops.radd(2);
    }
    // Only the leading coefficients of the shifted pair are needed.
    let a1 = 0.5 * (ah[0] + ah[1]);
    let b1 = 0.5 * (bh[0] - bh[1]);
    ctx.trace.scalar_ops.radd(2);
    let a1 = a1 * left.delta_inv;
    let b1 = b1 * left.delta_inv;
    ctx.trace.scalar_ops.rmul(2);
    // Shrinking the residual pair to its leading coefficients returns the
    // upper halves to the pool; the right leaf's pair recycles those cells.
    ctx.arena.free(2);

    let right = leaf(
        ctx,
        &Residual {
            a: vec![a1],
            b: vec![b1],
        },
    )?;
    let g2 = *ctx.gammas.last().unwrap();

    // Merge on two points; all bins are real.
    // eta = eta0*eta1 + xi0~*xi1 evaluated pointwise with the sign twist.
    let x0 = [1.0, 1.0];
    let y0 = [g1, g1];
    let x1 = [1.0, 1.0];
    let y1 = [g2, g2];
    let sign = [1.0, -1.0];
    let mut eta_sp = [0.0f64; 2];
    let mut xi_sp = [0.0f64; 2];
    for q in 0..2 {
        eta_sp[q] = x0[q] * x1[q] + sign[q] * y0[q] * y1[q];
        xi_sp[q] = y0[q] * x1[q] + sign[q] * x0[q] * y1[q];
        ctx.trace.scalar_ops.rmul(4);
        ctx.trace.scalar_ops.radd(2);
    }
    let delta_inv = left.delta_inv * right.delta_inv;
    ctx.trace.scalar_ops.rmul(1);

    // The merged pair overwrites the four cells of the two leaf pairs.
    let mut eta = CeSpectrum {
        m: 2,
        data: vec![eta_sp[0], eta_sp[1]],
    };
    let mut xi = CeSpectrum {
        m: 2,
        data: vec![xi_sp[0], xi_sp[1]],
    };
    if !is_root {
        // Parent wants coefficients.
        let e = [0.5 * (eta_sp[0] + eta_sp[1]), 0.5 * (eta_sp[0] - eta_sp[1])];
        let x = [0.5 * (xi_sp[0] + xi_sp[1]), 0.5 * (xi_sp[0] - xi_sp[1])];
        ctx.trace.scalar_ops.radd(4);
        eta = CeSpectrum {
            m: 2,
            data: vec![e[0], e[1]],
        };
        xi = CeSpectrum {
            m: 2,
            data: vec![x[0], x[1]],
        };
    }
    Ok(NodeOut {
        eta,
        xi,
        delta_inv,
    })
}

/// Re-samples a child's polynomial pair on `m` points: children below size 2
/// return coefficients in `CeSpectrum.data`, which are zero-padded and
/// transformed. (Scalar leaves hold constants; their spectra are splats.)
fn respample(ctx: &mut Ctx, child: &NodeOut, m: usize) -> Result<(CeSpectrum, CeSpectrum), SchurError> {
    ctx.arena.alloc(2 * m - child.eta.cells() - child.xi.cells());
    let pad = |coeffs: &[f64], m: usize| {
        let mut v = coeffs.to_vec();
        v.resize(m, 0.0);
        v
    };
    let x = CeSpectrum::from_full(&real_fft_split_radix(
        &pad(&child.eta.data, m),
        ctx.policy,
        &mut ctx.trace.scalar_ops,
    )?);
    let y = CeSpectrum::from_full(&real_fft_split_radix(
        &pad(&child.xi.data, m),
        ctx.policy,
        &mut ctx.trace.scalar_ops,
    )?);
    Ok((x, y))
}

/// Pointwise residual transplant `(A, B) <- (X0* A - Y0* B, -Y0 A + X0 B)`.
/// Real bins cost four real multiplies and two adds; interior bins the
/// complex equivalent.
fn mobius_update(
    a: &mut CeSpectrum,
    b: &mut CeSpectrum,
    x0: &CeSpectrum,
    y0: &CeSpectrum,
    ops: &mut OpCounter,
) {
    let m = a.m;
    for q in 0..=m / 2 {
        let aq = a.get(q);
        let bq = b.get(q);
        let xq = x0.get(q);
        let yq = y0.get(q);
        let new_a = xq.conj() * aq - yq.conj() * bq;
        let new_b = -yq * aq + xq * bq;
        a.set(q, new_a);
        b.set(q, new_b);
        if q == 0 || q == m / 2 {
            ops.rmul(4);
            ops.radd(2);
        } else {
            ops.cmul(4);
            ops.cadd(2);
        }
    }
}

/// Pointwise merge of child polynomial pairs with the alternating-sign twist
/// that realizes the reversed-polynomial factors:
/// `eta <- X0 X1 + (-1)^q Y0* Y1`, `xi <- Y0 X1 + (-1)^q X0* Y1`.
fn combine(
    eta: &mut CeSpectrum,
    xi: &mut CeSpectrum,
    x1: &CeSpectrum,
    y1: &CeSpectrum,
    ops: &mut OpCounter,
) {
    let m = eta.m;
    for q in 0..=m / 2 {
        let x0q = eta.get(q);
        let y0q = xi.get(q);
        let x1q = x1.get(q);
        let y1q = y1.get(q);
        let s = if q % 2 == 0 { 1.0 } else { -1.0 };
        let new_x = x0q * x1q + s * x0y_term(y0q.conj(), y1q);
        let new_y = y0q * x1q + s * x0y_term(x0q.conj(), y1q);
        eta.set(q, new_x);
        xi.set(q, new_y);
        if q == 0 || q == m / 2 {
            ops.rmul(4);
            ops.radd(2);
        } else {
            ops.cmul(4);
            ops.cadd(2);
        }
    }
}

fn x0y_term(a: C64, b: C64) -> C64 {
    a * b
}

/// Monic polynomial coefficients from the root spectra:
/// `psi(z) = eta(z) + z*xi(z)`, the degree-`n` coefficient recovered from the
/// wrap-around of the n-point inverse transform.
pub fn szego_from_schur(result: &SchurResult) -> Result<Vec<f64>, SchurError> {
    let eta = result
        .eta_spectrum
        .as_ref()
        .ok_or_else(|| SchurError::Dimension("result carries no root spectra".into()))?;
    let xi = result
        .xi_spectrum
        .as_ref()
        .ok_or_else(|| SchurError::Dimension("result carries no root spectra".into()))?;
    let n = eta.len();
    let mut ops = OpCounter::default();
    // Z_q = eta_q + z_q xi_q is the n-point sampling of psi, with psi_n
    // aliased onto psi_0 = 1.
    let z: Vec<C64> = (0..n)
        .map(|q| eta[q] + crate::fft::twiddle(q as i64, n) * xi[q])
        .collect();
    let c = real_ifft_split_radix(&z, CountPolicy::default(), &mut ops)?;
    let mut psi = vec![0.0; n + 1];
    psi[0] = 1.0;
    for k in 1..n {
        psi[k] = c[k];
    }
    psi[n] = c[0] - 1.0;
    Ok(psi)
}

/// Upper-triangular columns of prediction polynomials and the diagonal of
/// residual variances: `T^{-1} = R D^{-1} R^T`.
pub fn factorize_inverse(spec: &ToeplitzSpec, orders: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>), SchurError> {
    if orders == 0 || orders > spec.order() + 1 {
        return Err(SchurError::Dimension(format!(
            "orders {} out of range 1..={}",
            orders,
            spec.order() + 1
        )));
    }
    let t = spec.coefficients();
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(orders);
    let mut diag = Vec::with_capacity(orders);
    let mut psi = vec![1.0f64];
    let mut d = 1.0f64;
    columns.push(vec![1.0]);
    diag.push(1.0);

    for m in 1..orders {
        let mut acc = t[m];
        for k in 1..m {
            acc += t[m - k] * psi[k];
        }
        let gamma = -acc / d;
        if !(gamma.abs() < 1.0) {
            return Err(SchurError::NotPositiveDefinite { order: m });
        }
        let mut next = vec![0.0f64; m + 1];
        next[0] = 1.0;
        for k in 1..m {
            next[k] = psi[k] + gamma * psi[m - k];
        }
        next[m] = gamma;
        psi = next;
        d *= 1.0 - gamma * gamma;
        columns.push(psi.clone());
        diag.push(d);
    }
    Ok((columns, diag))
}

/// Solves `T h = c` through the factorization `h = R D^{-1} R^T c`.
pub fn solve_yule_walker(spec: &ToeplitzSpec, c: &[f64]) -> Result<Vec<f64>, SchurError> {
    let n = c.len();
    if spec.order() + 1 < n {
        return Err(SchurError::Dimension(format!(
            "need {} autocorrelation coefficients for a system of size {n}",
            n
        )));
    }
    let (columns, diag) = factorize_inverse(spec, n)?;
    // R[i][m] = psi_m[m - i] for i <= m (column m holds psi_m reversed).
    let mut u = vec![0.0f64; n];
    for m in 0..n {
        let psi = &columns[m];
        let mut acc = 0.0;
        for i in 0..=m {
            acc += psi[m - i] * c[i];
        }
        u[m] = acc / diag[m];
    }
    let mut h = vec![0.0f64; n];
    for m in 0..n {
        let psi = &columns[m];
        for i in 0..=m {
            h[i] += psi[m - i] * u[m];
        }
    }
    Ok(h)
}

/// Dense Toeplitz multiply `T x` used by verification code.
pub fn toeplitz_multiply(t: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| t[i.abs_diff(j)] * x[j])
                .sum()
        })
        .collect()
}

/// Reconstructs an autocorrelation sequence from reflection coefficients;
/// every |gamma| < 1 input yields a positive-definite sequence with t_0 = 1.
pub fn autocorrelation_from_reflection(gammas: &[f64]) -> Vec<f64> {
    let n = gammas.len();
    let mut t = vec![1.0f64];
    let mut psi = vec![1.0f64];
    let mut d = 1.0f64;
    for m in 1..=n {
        let gamma = gammas[m - 1];
        let mut acc = 0.0;
        for k in 1..m {
            acc += t[m - k] * psi[k];
        }
        // gamma = -(t_m + acc)/d  =>  t_m = -gamma*d - acc
        let tm = -gamma * d - acc;
        t.push(tm);
        let mut next = vec![0.0f64; m + 1];
        next[0] = 1.0;
        for k in 1..m {
            next[k] = psi[k] + gamma * psi[m - k];
        }
        next[m] = gamma;
        psi = next;
        d *= 1.0 - gamma * gamma;
    }
    t
}

/// Closed-form resource figures for length `2^m` and their recurrence-exact
/// counterparts.
#[derive(Debug, Clone, Serialize)]
pub struct CostBounds {
    pub m: u32,
    /// Closed-form read bounds as published: `1.25*2^m*m^2 + {7.25|9.75}*2^m`.
    pub t1_low: f64,
    pub t1_high: f64,
    /// Closed-form critical-path bounds: `{13|17}*2^m - 2m - 4`.
    pub tmax_low: f64,
    pub tmax_high: f64,
    /// Reads from the per-node recurrence solved exactly.
    pub t1_recurrence: u64,
    /// Critical-path reads from the per-node recurrence solved exactly.
    pub tmax_recurrence: u64,
}

pub fn cost_bounds(m: u32) -> CostBounds {
    let p = 2f64.powi(m as i32);
    let mf = m as f64;
    CostBounds {
        m,
        t1_low: 1.25 * p * mf * mf + 7.25 * p,
        t1_high: 1.25 * p * mf * mf + 9.75 * p,
        tmax_low: 13.0 * p - 2.0 * mf - 4.0,
        tmax_high: 17.0 * p - 2.0 * mf - 4.0,
        t1_recurrence: t1_recurrence(m),
        tmax_recurrence: tmax_recurrence(m),
    }
}

/// Total reads by the vector-op accounting:
/// `T1(2^m) = 10*ceil(m/2)*2^(m-1) + 12*2^(m-1) + 2*T1(2^(m-1))`, `T1(1)=1`.
pub fn t1_recurrence(m: u32) -> u64 {
    let mut acc = 1u64;
    for k in 1..=m as u64 {
        acc = 10 * k.div_ceil(2) * (1 << (k - 1)) + 12 * (1 << (k - 1)) + 2 * acc;
    }
    acc
}

/// Critical-path reads:
/// `Tmax(2^m) = 4*ceil(m/2) + 4 + 2*Tmax(2^(m-1))`, `Tmax(1)=1`.
pub fn tmax_recurrence(m: u32) -> u64 {
    let mut acc = 1u64;
    for k in 1..=m as u64 {
        acc = 4 * k.div_ceil(2) + 4 + 2 * acc;
    }
    acc
}

/// Averaged parallel runtime on `2^k` lanes with pipeline `l`, including the
/// `2n`-cycle load/unload phase:
/// `2^(m-k)*(15*2^k - 1.5k + 1.25m^2 - 1.25k^2 - 5.25)
///  + (l-1)*(15*2^m - 2m - 4) + 2^(m+1)`.
pub fn runtime_with_io(m: u32, k: u32, pipeline: u32) -> f64 {
    let mf = m as f64;
    let kf = k as f64;
    let p_mk = 2f64.powi((m as i32) - (k as i32));
    let p_k = 2f64.powi(k as i32);
    let p_m = 2f64.powi(m as i32);
    let core = p_mk * (15.0 * p_k - 1.5 * kf + 1.25 * mf * mf - 1.25 * kf * kf - 5.25);
    let drain = (pipeline as f64 - 1.0) * (15.0 * p_m - 2.0 * mf - 4.0);
    core + drain + 2.0 * p_m
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_pd_spec(n: usize, seed: u64) -> ToeplitzSpec {
        let mut rng = StdRng::seed_from_u64(seed);
        let gammas: Vec<f64> = (0..n)
            .map(|k| {
                let cap = 0.7 / (1.0 + k as f64).powf(0.8);
                rng.gen_range(-cap..cap)
            })
            .collect();
        ToeplitzSpec::new(&autocorrelation_from_reflection(&gammas)).unwrap()
    }

    #[test]
    fn levinson_identity_matrix() {
        let spec = ToeplitzSpec::new(&[1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let res = levinson(&spec).unwrap();
        assert!(res.reflection.iter().all(|&g| g == 0.0));
        assert!(res.variances.iter().all(|&d| d == 1.0));
        assert_eq!(res.psi[0], 1.0);
        assert!(res.psi[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn levinson_first_reflection_is_minus_t1() {
        let spec = random_pd_spec(8, 1);
        let res = levinson(&spec).unwrap();
        assert!((res.reflection[0] + spec.coefficients()[1]).abs() < 1e-14);
    }

    #[test]
    fn levinson_solves_the_normal_equations() {
        let spec = random_pd_spec(64, 2);
        let res = levinson(&spec).unwrap();
        let t = spec.coefficients();
        let product = toeplitz_multiply(t, &res.psi);
        let d = *res.variances.last().unwrap();
        assert!((product[0] - d).abs() < 1e-8);
        for v in &product[1..] {
            assert!(v.abs() < 1e-8);
        }
    }

    #[test]
    fn levinson_detects_indefinite_input() {
        let spec = ToeplitzSpec::new(&[1.0, 1.2, 0.1]).unwrap();
        assert!(matches!(
            levinson(&spec),
            Err(SchurError::NotPositiveDefinite { order: 1 })
        ));
    }

    #[test]
    fn fast_path_matches_levinson() {
        for (n, seed) in [(8usize, 3u64), (64, 4), (512, 5), (1024, 6)] {
            let spec = random_pd_spec(n, seed);
            let lev = levinson(&spec).unwrap();
            let (fast, _) = schur_fast(&spec).unwrap();
            let dg = lev
                .reflection
                .iter()
                .zip(&fast.reflection)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let dd = lev
                .variances
                .iter()
                .zip(&fast.variances)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(dg <= 1e-8, "n={n}: gamma dev {dg}");
            assert!(dd <= 1e-8, "n={n}: variance dev {dd}");
        }
    }

    #[test]
    fn root_delta_matches_final_variance() {
        let spec = random_pd_spec(64, 7);
        let lev = levinson(&spec).unwrap();
        let (fast, _) = schur_fast(&spec).unwrap();
        let delta = 1.0 / fast.delta_inv.unwrap();
        assert!((delta - lev.variances.last().unwrap()).abs() <= 1e-8);
    }

    #[test]
    fn szego_recovery_matches_levinson() {
        for (n, seed) in [(8usize, 8u64), (64, 9)] {
            let spec = random_pd_spec(n, seed);
            let lev = levinson(&spec).unwrap();
            let (fast, _) = schur_fast(&spec).unwrap();
            let psi = szego_from_schur(&fast).unwrap();
            assert_eq!(psi[0], 1.0);
            let dev = psi
                .iter()
                .zip(&lev.psi)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(dev <= 1e-8, "n={n}: psi dev {dev}");
        }
    }

    #[test]
    fn determinant_identity_on_the_unit_circle() {
        let spec = random_pd_spec(32, 10);
        let (fast, _) = schur_fast(&spec).unwrap();
        let lev = levinson(&spec).unwrap();
        let n = 32usize;
        let mut ops = OpCounter::default();
        let eta =
            real_ifft_split_radix(fast.eta_spectrum.as_ref().unwrap(), CountPolicy::default(), &mut ops)
                .unwrap();
        let xi =
            real_ifft_split_radix(fast.xi_spectrum.as_ref().unwrap(), CountPolicy::default(), &mut ops)
                .unwrap();
        let d_n = *lev.variances.last().unwrap();
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..16 {
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            let z = C64::new(theta.cos(), theta.sin());
            let zi = C64::new(1.0, 0.0) / z;
            let eval = |c: &[f64], at: C64| {
                let mut acc = C64::new(0.0, 0.0);
                for &ck in c.iter().rev() {
                    acc = acc * at + ck;
                }
                acc
            };
            let det = eval(&eta, z) * eval(&eta, zi) - eval(&xi, z) * eval(&xi, zi);
            assert!((det - C64::new(d_n, 0.0)).norm() <= 1e-8);
            let _ = n;
        }
    }

    #[test]
    fn factorization_congruence_is_diagonal() {
        let spec = random_pd_spec(15, 12);
        let (columns, diag) = factorize_inverse(&spec, 16).unwrap();
        let t = spec.coefficients();
        let n = 16usize;
        // R^T T R == D entrywise.
        let mut r = vec![vec![0.0f64; n]; n];
        for (m, psi) in columns.iter().enumerate() {
            for i in 0..=m {
                r[i][m] = psi[m - i];
            }
        }
        for col_a in 0..n {
            for col_b in 0..n {
                let ra: Vec<f64> = (0..n).map(|i| r[i][col_a]).collect();
                let rb: Vec<f64> = (0..n).map(|i| r[i][col_b]).collect();
                let trb = toeplitz_multiply(&t[..n], &rb);
                let v: f64 = ra.iter().zip(&trb).map(|(x, y)| x * y).sum();
                let want = if col_a == col_b { diag[col_a] } else { 0.0 };
                assert!(
                    (v - want).abs() <= 1e-8,
                    "entry ({col_a},{col_b}) = {v}, want {want}"
                );
            }
        }
    }

    #[test]
    fn identity_factorization_is_trivial() {
        let spec = ToeplitzSpec::new(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        let (columns, diag) = factorize_inverse(&spec, 4).unwrap();
        for (m, psi) in columns.iter().enumerate() {
            assert_eq!(psi[0], 1.0);
            assert!(psi[1..].iter().all(|&v| v == 0.0));
            let _ = m;
        }
        assert!(diag.iter().all(|&d| d == 1.0));
    }

    #[test]
    fn yule_walker_solution_matches_dense_solve() {
        let n = 64usize;
        let spec = random_pd_spec(n, 13);
        let mut rng = StdRng::seed_from_u64(14);
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let h = solve_yule_walker(&spec, &c).unwrap();
        let residual = toeplitz_multiply(&spec.coefficients()[..n], &h)
            .iter()
            .zip(&c)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let scale = c.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(residual <= 1e-7 * scale.max(1.0));
    }

    #[test]
    fn yule_walker_identity_and_unit_rhs() {
        let spec = ToeplitzSpec::new(&[1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let c = [0.3, -0.7, 0.2, 0.9];
        let h = solve_yule_walker(&spec, &c).unwrap();
        for (a, b) in h.iter().zip(&c) {
            assert!((a - b).abs() < 1e-12);
        }

        // c = e_0 picks out the scaled prediction solution.
        let spec2 = random_pd_spec(8, 15);
        let mut e0 = vec![0.0; 8];
        e0[0] = 1.0;
        let h2 = solve_yule_walker(&spec2, &e0).unwrap();
        let lev = levinson(&spec2).unwrap();
        let (columns, diag) = factorize_inverse(&spec2, 8).unwrap();
        let psi7 = &columns[7];
        let d7 = diag[7];
        // T psi = d e_0, so the rhs e_0 returns the prediction vector over d.
        for i in 0..8 {
            assert!((h2[i] - psi7[i] / d7).abs() < 1e-9 * (1.0 / d7));
        }
        let _ = lev;
    }

    #[test]
    fn size_two_scalar_op_count() {
        let spec = random_pd_spec(2, 16);
        let (_, trace) = schur_fast(&spec).unwrap();
        assert_eq!(trace.scalar_ops.real_mults, 20);
        assert_eq!(trace.scalar_ops.real_adds, 15);
    }

    #[test]
    fn read_counts_follow_the_recurrence() {
        for m in 1..=10u32 {
            let n = 1usize << m;
            let spec = random_pd_spec(n, 17 + m as u64);
            let (_, trace) = schur_fast(&spec).unwrap();
            let stages = (m as u64).div_ceil(2);
            let expected = t1_recurrence(m) - 2 * stages * (n as u64 / 2);
            assert_eq!(trace.reads, expected, "m={m}");
            let expected_crit = tmax_recurrence(m) - stages;
            assert_eq!(trace.critical_path_reads, expected_crit, "m={m}");
        }
    }

    #[test]
    fn peak_cells_within_four_n() {
        for m in 3..=10u32 {
            let n = 1usize << m;
            let spec = random_pd_spec(n, 30 + m as u64);
            let (_, trace) = schur_fast(&spec).unwrap();
            assert!(trace.peak_cells <= 4 * n, "m={m}: {}", trace.peak_cells);
            assert!(trace.peak_cells >= 2 * n, "m={m}: {}", trace.peak_cells);
        }
    }

    #[test]
    fn fast_path_detects_indefinite_input() {
        let spec = ToeplitzSpec::new(&[1.0, 0.9, 0.9, 0.9, 0.05]).unwrap();
        match (levinson(&spec), schur_fast(&spec)) {
            (Err(SchurError::NotPositiveDefinite { order: a }), Err(SchurError::NotPositiveDefinite { order: b })) => {
                assert_eq!(a, b);
            }
            other => panic!("expected both paths to fail identically, got {other:?}"),
        }
    }

    #[test]
    fn cost_bound_formulas_evaluate_verbatim() {
        let b = cost_bounds(12);
        assert_eq!(b.tmax_low, 13.0 * 4096.0 - 24.0 - 4.0);
        assert_eq!(b.t1_low, 1.25 * 4096.0 * 144.0 + 7.25 * 4096.0);
        assert_eq!(b.t1_low, 766976.0);
        assert_eq!(b.tmax_low, 53220.0);
    }
}
