//! Mixed-radix DFT factorizations driven by positional numeral systems.
//!
//! A transform of length `N = n_0 * n_1 * ... * n_K` is decomposed into `K+1`
//! stages of order-`n_k` butterflies. Every stage operator is realized as an
//! index permutation, a diagonal twiddle pass and a batch of small DFTs over a
//! flat buffer; no `N x N` matrix is ever materialized (see [`dense`] for the
//! small-size debug path that does). Two stage families are provided: the
//! time-domain form, where twiddles follow the butterfly, and the
//! frequency-domain form, where the diagonal multiply precedes the butterfly.
//! Their composition rules allow circular convolution without any
//! index-inversion pass.

pub mod counted;
pub mod dense;

use num_complex::Complex64;
use thiserror::Error;

/// Double-precision complex sample used throughout the crate.
pub type C64 = Complex64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FftError {
    #[error("radix plan must contain at least one radix")]
    EmptyPlan,
    #[error("radix {0} is smaller than 2")]
    RadixTooSmall(usize),
    #[error("index {index} out of range for plan of size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("digit {digit} at position {position} exceeds radix {radix}")]
    DigitOutOfRange {
        digit: usize,
        position: usize,
        radix: usize,
    },
    #[error("digit count {got} does not match plan length {want}")]
    DigitCountMismatch { got: usize, want: usize },
    #[error("stage index {stage} out of range ({stages} stages)")]
    StageOutOfRange { stage: usize, stages: usize },
    #[error("input length {got} does not match plan size {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("length {got} is below the minimum {min} for this kernel")]
    TooShort { got: usize, min: usize },
    #[error("input spectrum is not conjugate-even")]
    NotConjugateEven,
}

/// Ordered butterfly radices of a mixed-radix transform.
///
/// `radices[k]` is the butterfly order of stage `k`, executed first-to-last.
/// The plan induces a positional numeral system on `0..N`: digit `k` has
/// radix `radices[k]` and place value `stage_products[k-1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RadixPlan {
    radices: Vec<usize>,
    total: usize,
    stage_products: Vec<usize>,
}

impl RadixPlan {
    pub fn new(radices: &[usize]) -> Result<Self, FftError> {
        if radices.is_empty() {
            return Err(FftError::EmptyPlan);
        }
        for &r in radices {
            if r < 2 {
                return Err(FftError::RadixTooSmall(r));
            }
        }
        let mut stage_products = Vec::with_capacity(radices.len());
        let mut acc = 1usize;
        for &r in radices {
            acc *= r;
            stage_products.push(acc);
        }
        Ok(Self {
            radices: radices.to_vec(),
            total: acc,
            stage_products,
        })
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    pub fn stages(&self) -> usize {
        self.radices.len()
    }

    /// Transform length `N`.
    pub fn total(&self) -> usize {
        self.total
    }

    /// Cumulative products `N_k = n_0 * ... * n_k`.
    pub fn stage_products(&self) -> &[usize] {
        &self.stage_products
    }

    /// Least common multiple `R` of all radices.
    pub fn radix_lcm(&self) -> usize {
        self.radices.iter().copied().fold(1, lcm)
    }

    /// Plan with the stage order reversed.
    pub fn reversed(&self) -> RadixPlan {
        let rev: Vec<usize> = self.radices.iter().rev().copied().collect();
        RadixPlan::new(&rev).expect("reversed plan is valid")
    }

    /// Positional decomposition of `n`; entry `k` is the digit of radix
    /// `radices[k]`, so `n = p_0 + n_0*(p_1 + n_1*(p_2 + ...))`.
    pub fn digits(&self, n: usize) -> Result<Vec<usize>, FftError> {
        if n >= self.total {
            return Err(FftError::IndexOutOfRange {
                index: n,
                size: self.total,
            });
        }
        let mut rest = n;
        let digits = self
            .radices
            .iter()
            .map(|&r| {
                let d = rest % r;
                rest /= r;
                d
            })
            .collect();
        Ok(digits)
    }

    /// Inverse of [`digits`](Self::digits).
    pub fn number(&self, digits: &[usize]) -> Result<usize, FftError> {
        if digits.len() != self.radices.len() {
            return Err(FftError::DigitCountMismatch {
                got: digits.len(),
                want: self.radices.len(),
            });
        }
        let mut n = 0usize;
        for (k, (&d, &r)) in digits.iter().zip(&self.radices).enumerate().rev() {
            if d >= r {
                return Err(FftError::DigitOutOfRange {
                    digit: d,
                    position: k,
                    radix: r,
                });
            }
            n = n * r + d;
        }
        Ok(n)
    }

    /// Index-inversion permutation: decompose `n` with the stage order
    /// reversed, reverse the digit string, and re-encode it in this plan.
    /// Generalizes bit reversal to mixed radices.
    pub fn invert_index(&self, n: usize) -> Result<usize, FftError> {
        let mut rev_digits = self.reversed().digits(n)?;
        rev_digits.reverse();
        self.number(&rev_digits)
    }

    /// The full inversion permutation as a map `dest[n] = invert_index(n)`.
    pub fn inversion_permutation(&self) -> Vec<usize> {
        (0..self.total)
            .map(|n| self.invert_index(n).expect("index in range"))
            .collect()
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// `e^(-2*pi*i*num/den)` evaluated directly through sin/cos.
pub fn twiddle(num: i64, den: usize) -> C64 {
    let angle = -2.0 * std::f64::consts::PI * (num as f64) / (den as f64);
    C64::new(angle.cos(), angle.sin())
}

/// DFT by definition: `X_n = sum_k x_k e^(-2*pi*i*k*n/N)`.
///
/// Quadratic cost; this is the oracle every fast path is checked against and
/// the butterfly kernel of all stage operators.
pub fn dft_naive(x: &[C64]) -> Vec<C64> {
    let n = x.len();
    let mut out = vec![C64::new(0.0, 0.0); n];
    for (k, out_k) in out.iter_mut().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for (j, &xj) in x.iter().enumerate() {
            acc += xj * twiddle((k * j) as i64, n);
        }
        *out_k = acc;
    }
    out
}

/// Permutation of a contiguous block: `dest[i*m + j] = j*k + i` for the
/// transposition-style map that swaps the two factors of `n = k*m`.
fn l_perm_map(n: usize, k: usize) -> Vec<usize> {
    let m = n / k;
    let mut dest = vec![0usize; n];
    for i in 0..k {
        for j in 0..m {
            dest[i * m + j] = j * k + i;
        }
    }
    dest
}

/// Applies a permutation given as `dest`: `out[dest[t]] = x[t]`, blockwise
/// over blocks of `dest.len()` elements.
fn apply_block_perm(x: &[C64], dest: &[usize]) -> Vec<C64> {
    let b = dest.len();
    let mut out = vec![C64::new(0.0, 0.0); x.len()];
    for (block_in, block_out) in x.chunks_exact(b).zip(out.chunks_exact_mut(b)) {
        for (t, &v) in block_in.iter().enumerate() {
            block_out[dest[t]] = v;
        }
    }
    out
}

fn apply_block_perm_inv(x: &[C64], dest: &[usize]) -> Vec<C64> {
    let b = dest.len();
    let mut out = vec![C64::new(0.0, 0.0); x.len()];
    for (block_in, block_out) in x.chunks_exact(b).zip(out.chunks_exact_mut(b)) {
        for (t, slot) in block_out.iter_mut().enumerate() {
            *slot = block_in[dest[t]];
        }
    }
    out
}

fn butterfly_pass(x: &mut [C64], order: usize) {
    for chunk in x.chunks_exact_mut(order) {
        let y = dft_naive(chunk);
        chunk.copy_from_slice(&y);
    }
}

/// One time-domain stage: permute so stage-`k` digits become block-local,
/// multiply by the stage twiddles, run the butterflies, and permute back.
/// Composing all stages after the index-inversion permutation yields the DFT.
pub fn stage_time(k: usize, plan: &RadixPlan, x: &[C64]) -> Result<Vec<C64>, FftError> {
    let n = plan.total();
    if x.len() != n {
        return Err(FftError::LengthMismatch {
            got: x.len(),
            want: n,
        });
    }
    if k >= plan.stages() {
        return Err(FftError::StageOutOfRange {
            stage: k,
            stages: plan.stages(),
        });
    }
    let nk = plan.radices()[k];
    let big_nk = plan.stage_products()[k];

    // A_k: within every N_k block, move the stage digit to the fastest
    // position so each butterfly occupies consecutive cells.
    let perm = l_perm_map(big_nk, nk);
    let mut y = apply_block_perm(x, &perm);

    // W_k: diagonal twiddles; within an N_k block position t = i*n_k + j
    // carries e^(-2 pi i * i*j / N_k).
    for block in y.chunks_exact_mut(big_nk) {
        for (t, v) in block.iter_mut().enumerate() {
            let i = t / nk;
            let j = t % nk;
            if i != 0 && j != 0 {
                *v *= twiddle((i * j) as i64, big_nk);
            }
        }
    }

    butterfly_pass(&mut y, nk);
    Ok(apply_block_perm_inv(&y, &perm))
}

fn check_stage_args(k: usize, plan: &RadixPlan, len: usize) -> Result<(), FftError> {
    if len != plan.total() {
        return Err(FftError::LengthMismatch {
            got: len,
            want: plan.total(),
        });
    }
    if k >= plan.stages() {
        return Err(FftError::StageOutOfRange {
            stage: k,
            stages: plan.stages(),
        });
    }
    Ok(())
}

fn suffix_product(plan: &RadixPlan, from: usize) -> usize {
    plan.radices()[from.min(plan.stages())..]
        .iter()
        .product::<usize>()
        .max(1)
}

/// Twiddle applied before the butterflies of frequency-domain stage `k` at
/// permuted global position `pos`.
///
/// Stage 0 has no twiddles; stage `k >= 1` absorbs the diagonal the plain
/// post-multiplied factorization would have emitted at stage `k-1`, pushed
/// through the permutations. Within each `M_{k-1}` block the position splits
/// as `i*M_k + l*m_k + j` (`i < m_{k-1}`, `l < M_{k+1}`, `j < m_k`) and the
/// factor is `e^(-2 pi i * i*(j*M_{k+1} + l) / M_{k-1})`.
pub(crate) fn freq_stage_twiddle(k: usize, plan: &RadixPlan, pos: usize) -> C64 {
    if k == 0 {
        return C64::new(1.0, 0.0);
    }
    let big_prev = suffix_product(plan, k - 1);
    let big_mk = suffix_product(plan, k);
    let big_mk1 = suffix_product(plan, k + 1);
    let mk = plan.radices()[k];
    let t = pos % big_prev;
    let i = t / big_mk;
    let rem = t % big_mk;
    let l = rem / mk;
    let j = rem % mk;
    twiddle((i * (j * big_mk1 + l)) as i64, big_prev)
}

/// One frequency-domain stage with the diagonal multiply preceding the
/// butterfly; composing stages 0..K and then the inversion permutation yields
/// the DFT.
pub fn stage_freq(k: usize, plan: &RadixPlan, x: &[C64]) -> Result<Vec<C64>, FftError> {
    check_stage_args(k, plan, x.len())?;
    let mk = plan.radices()[k];
    let big_mk = suffix_product(plan, k);

    let perm = l_perm_map(big_mk, mk);
    let mut y = apply_block_perm(x, &perm);
    if k > 0 {
        for (pos, v) in y.iter_mut().enumerate() {
            *v *= freq_stage_twiddle(k, plan, pos);
        }
    }
    butterfly_pass(&mut y, mk);
    Ok(apply_block_perm_inv(&y, &perm))
}

/// Frequency-domain stage in the plain transposed form: butterfly first, then
/// the diagonal `W^{M_k}_{m_k}`. Numerically interchangeable with
/// [`stage_freq`] at the level of the full composition; kept because the
/// post-multiplied form is the directly transposed factorization while the
/// pre-multiplied one matches accelerators that scale inputs inside the
/// butterfly pipeline.
pub fn stage_freq_w(k: usize, plan: &RadixPlan, x: &[C64]) -> Result<Vec<C64>, FftError> {
    check_stage_args(k, plan, x.len())?;
    let mk = plan.radices()[k];
    let big_mk = suffix_product(plan, k);

    let perm = l_perm_map(big_mk, mk);
    let mut y = apply_block_perm(x, &perm);
    butterfly_pass(&mut y, mk);
    for block in y.chunks_exact_mut(big_mk) {
        for (t, v) in block.iter_mut().enumerate() {
            let i = t / mk;
            let j = t % mk;
            if i != 0 && j != 0 {
                *v *= twiddle((i * j) as i64, big_mk);
            }
        }
    }
    Ok(apply_block_perm_inv(&y, &perm))
}

/// Full transform via time-domain stages: inversion permutation first, then
/// stages in ascending order.
pub fn fft_time(x: &[C64], plan: &RadixPlan) -> Result<Vec<C64>, FftError> {
    let n = plan.total();
    if x.len() != n {
        return Err(FftError::LengthMismatch {
            got: x.len(),
            want: n,
        });
    }
    let mut y = vec![C64::new(0.0, 0.0); n];
    for (t, &v) in x.iter().enumerate() {
        y[plan.invert_index(t)?] = v;
    }
    for k in 0..plan.stages() {
        y = stage_time(k, plan, &y)?;
    }
    Ok(y)
}

/// Full transform via frequency-domain stages: stages in ascending order,
/// inversion permutation last.
pub fn fft_freq(x: &[C64], plan: &RadixPlan) -> Result<Vec<C64>, FftError> {
    let n = plan.total();
    if x.len() != n {
        return Err(FftError::LengthMismatch {
            got: x.len(),
            want: n,
        });
    }
    let mut y = x.to_vec();
    for k in 0..plan.stages() {
        y = stage_freq(k, plan, &y)?;
    }
    let mut out = vec![C64::new(0.0, 0.0); n];
    for (t, &v) in y.iter().enumerate() {
        out[plan.invert_index(t)?] = v;
    }
    Ok(out)
}

/// Circular convolution with no index-inversion pass anywhere.
///
/// Both inputs go through frequency-domain stages with the stage order
/// reversed, are multiplied pointwise under conjugation, and come back through
/// time-domain stages of the original plan. The permutations of the forward
/// and inverse transforms cancel algebraically, so the intermediate spectra
/// live in digit-scrambled order and never need to be sorted.
pub fn circular_convolution(x: &[C64], y: &[C64], plan: &RadixPlan) -> Result<Vec<C64>, FftError> {
    let n = plan.total();
    if x.len() != n {
        return Err(FftError::LengthMismatch {
            got: x.len(),
            want: n,
        });
    }
    if y.len() != n {
        return Err(FftError::LengthMismatch {
            got: y.len(),
            want: n,
        });
    }
    let rev = plan.reversed();
    let mut fx = x.to_vec();
    let mut fy = y.to_vec();
    for k in 0..rev.stages() {
        fx = stage_freq(k, &rev, &fx)?;
        fy = stage_freq(k, &rev, &fy)?;
    }
    let mut z: Vec<C64> = fx
        .iter()
        .zip(&fy)
        .map(|(&a, &b)| a.conj() * b.conj())
        .collect();
    for k in 0..plan.stages() {
        z = stage_time(k, plan, &z)?;
    }
    let scale = 1.0 / n as f64;
    Ok(z.iter().map(|v| v.conj() * scale).collect())
}

/// Direct `O(N^2)` circular convolution, kept as an independent oracle.
pub fn circular_convolution_naive(x: &[C64], y: &[C64]) -> Vec<C64> {
    let n = x.len();
    let mut z = vec![C64::new(0.0, 0.0); n];
    for (t, slot) in z.iter_mut().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for (j, &xj) in x.iter().enumerate() {
            acc += xj * y[(t + n - j) % n];
        }
        *slot = acc;
    }
    z
}
