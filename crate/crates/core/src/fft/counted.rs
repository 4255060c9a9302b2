//! Power-of-two FFT kernels with exact operation accounting.
//!
//! Every kernel tallies the arithmetic it performs into an [`OpCounter`].
//! Multiplications by 1 and i are free and the eighth-root twiddle
//! `(1-i)/sqrt(2)` costs two real multiplications and two real additions when
//! [`CountPolicy::special_twiddles`] is on; with the policy off every diagonal
//! entry is billed as a full complex multiplication. The counts land exactly
//! on closed forms, which the tests pin per size.

use serde::Serialize;

use super::{twiddle, C64, FftError};

/// Arithmetic and memory-access tallies for one kernel invocation.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OpCounter {
    pub real_adds: u64,
    pub real_mults: u64,
    pub complex_adds: u64,
    pub complex_mults: u64,
    pub reads: u64,
    pub writes: u64,
}

impl OpCounter {
    /// Real additions including complex ops converted at 1 complex add =
    /// 2 real adds and 1 complex mult = 4 real mults + 2 real adds.
    pub fn adds_equivalent(&self) -> u64 {
        self.real_adds + 2 * self.complex_adds + 2 * self.complex_mults
    }

    pub fn mults_equivalent(&self) -> u64 {
        self.real_mults + 4 * self.complex_mults
    }

    pub fn total_real_ops(&self) -> u64 {
        self.adds_equivalent() + self.mults_equivalent()
    }

    pub(crate) fn radd(&mut self, n: u64) {
        self.real_adds += n;
    }

    pub(crate) fn rmul(&mut self, n: u64) {
        self.real_mults += n;
    }

    pub(crate) fn cadd(&mut self, n: u64) {
        self.complex_adds += n;
    }

    pub(crate) fn cmul(&mut self, n: u64) {
        self.complex_mults += n;
    }

    /// Multiplication by `(1±i)/sqrt(2)`: two real mults plus two real adds.
    pub(crate) fn cheap_twiddle(&mut self) {
        self.real_mults += 2;
        self.real_adds += 2;
    }
}

/// Accounting policy for twiddle multiplications.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountPolicy {
    pub special_twiddles: bool,
}

impl Default for CountPolicy {
    fn default() -> Self {
        Self {
            special_twiddles: true,
        }
    }
}

fn require_pow2(n: usize, min: usize) -> Result<u32, FftError> {
    if n < min {
        return Err(FftError::TooShort { got: n, min });
    }
    if !n.is_power_of_two() {
        return Err(FftError::NotPowerOfTwo(n));
    }
    Ok(n.trailing_zeros())
}

/// Multiplies `v` by the `2n`-th roots diagonal `diag(w^j)` for `j < len(v)`
/// where `w = e^(-2 pi i / den)`, counting per the policy. Entry `j = 0` is
/// free; `j = den/8` is the cheap eighth root when specials are on.
fn diag_twiddle(v: &mut [C64], den: usize, policy: CountPolicy, ops: &mut OpCounter) {
    for (j, slot) in v.iter_mut().enumerate() {
        if !policy.special_twiddles {
            *slot *= twiddle(j as i64, den);
            ops.cmul(1);
            continue;
        }
        if j == 0 {
            continue;
        }
        *slot *= twiddle(j as i64, den);
        if 8 * j == den {
            ops.cheap_twiddle();
        } else {
            ops.cmul(1);
        }
    }
}

/// Complex split-radix transform in the frequency domain.
///
/// Output is the naturally ordered spectrum. Total real operations equal
/// `4np - 6n + 8` for `n = 2^p >= 4` under the default policy.
pub fn complex_fft_split_radix(
    x: &[C64],
    policy: CountPolicy,
    ops: &mut OpCounter,
) -> Result<Vec<C64>, FftError> {
    require_pow2(x.len(), 1)?;
    Ok(split_complex_rec(x, policy, ops))
}

fn split_complex_rec(x: &[C64], policy: CountPolicy, ops: &mut OpCounter) -> Vec<C64> {
    let n = x.len();
    if n == 1 {
        return x.to_vec();
    }
    if n == 2 {
        ops.cadd(2);
        return vec![x[0] + x[1], x[0] - x[1]];
    }
    let m = n / 2;
    let l = n / 4;
    let mut u0 = Vec::with_capacity(m);
    let mut t = Vec::with_capacity(m);
    for j in 0..m {
        u0.push(x[j] + x[j + m]);
        t.push(x[j] - x[j + m]);
    }
    ops.cadd(n as u64);

    let i = C64::new(0.0, 1.0);
    // Multiplication by i is a register swap; only the additions count.
    let mut z0: Vec<C64> = (0..l).map(|j| t[j] - i * t[j + l]).collect();
    let mut z1: Vec<C64> = (0..l).map(|j| t[j].conj() - i * t[j + l].conj()).collect();
    ops.cadd(2 * l as u64);
    diag_twiddle(&mut z0, n, policy, ops);
    diag_twiddle(&mut z1, n, policy, ops);

    let even = split_complex_rec(&u0, policy, ops);
    let v0 = split_complex_rec(&z0, policy, ops);
    let v1 = split_complex_rec(&z1, policy, ops);

    let mut y = vec![C64::new(0.0, 0.0); n];
    for (j, &v) in even.iter().enumerate() {
        y[2 * j] = v;
    }
    for j in 0..l {
        y[4 * j + 1] = v0[j];
        y[4 * j + 3] = v1[l - 1 - j].conj();
    }
    y
}

/// Inverse complex transform with the same cost as the forward one; the final
/// division by `n` is a shift and is not billed.
pub fn complex_ifft_split_radix(
    y: &[C64],
    policy: CountPolicy,
    ops: &mut OpCounter,
) -> Result<Vec<C64>, FftError> {
    let n = y.len();
    require_pow2(n, 1)?;
    let conj_in: Vec<C64> = y.iter().map(|v| v.conj()).collect();
    let spec = split_complex_rec(&conj_in, policy, ops);
    let scale = 1.0 / n as f64;
    Ok(spec.iter().map(|v| v.conj() * scale).collect())
}

/// Real-input split-radix transform; returns the full conjugate-even
/// spectrum. Total real operations equal `2np - 4n + 6` for `n = 2^p >= 2`.
pub fn real_fft_split_radix(
    x: &[f64],
    policy: CountPolicy,
    ops: &mut OpCounter,
) -> Result<Vec<C64>, FftError> {
    require_pow2(x.len(), 1)?;
    Ok(split_real_rec(x, policy, ops))
}

fn split_real_rec(x: &[f64], policy: CountPolicy, ops: &mut OpCounter) -> Vec<C64> {
    let n = x.len();
    if n == 1 {
        return vec![C64::new(x[0], 0.0)];
    }
    if n == 2 {
        ops.radd(2);
        return vec![C64::new(x[0] + x[1], 0.0), C64::new(x[0] - x[1], 0.0)];
    }
    let m = n / 2;
    let l = n / 4;
    let mut u0 = Vec::with_capacity(m);
    let mut t = Vec::with_capacity(m);
    for j in 0..m {
        u0.push(x[j] + x[j + m]);
        t.push(x[j] - x[j + m]);
    }
    ops.radd(n as u64);

    // Packing the two real halves into one complex vector is free.
    let mut z0: Vec<C64> = (0..l).map(|j| C64::new(t[j], -t[j + l])).collect();
    diag_twiddle(&mut z0, n, policy, ops);
    let v0 = split_complex_rec(&z0, policy, ops);
    let even = split_real_rec(&u0, policy, ops);

    let mut y = vec![C64::new(0.0, 0.0); n];
    for (j, &v) in even.iter().enumerate() {
        y[2 * j] = v;
    }
    for j in 0..l {
        y[4 * j + 1] = v0[j];
        y[4 * j + 3] = v0[l - 1 - j].conj();
    }
    y
}

fn check_conjugate_even(y: &[C64]) -> Result<(), FftError> {
    let n = y.len();
    let scale = y.iter().map(|v| v.norm()).fold(1.0, f64::max);
    for k in 0..n {
        let mirror = y[(n - k) % n].conj();
        if (y[k] - mirror).norm() > 1e-9 * scale {
            return Err(FftError::NotConjugateEven);
        }
    }
    Ok(())
}

/// Inverse transform from a conjugate-even spectrum back to real samples.
/// Costs exactly as much as the forward real transform.
pub fn real_ifft_split_radix(
    y: &[C64],
    policy: CountPolicy,
    ops: &mut OpCounter,
) -> Result<Vec<f64>, FftError> {
    require_pow2(y.len(), 1)?;
    check_conjugate_even(y)?;
    Ok(split_real_inv_rec(y, policy, ops))
}

fn split_real_inv_rec(y: &[C64], policy: CountPolicy, ops: &mut OpCounter) -> Vec<f64> {
    let n = y.len();
    if n == 1 {
        return vec![y[0].re];
    }
    if n == 2 {
        ops.radd(2);
        return vec![0.5 * (y[0].re + y[1].re), 0.5 * (y[0].re - y[1].re)];
    }
    let m = n / 2;
    let l = n / 4;
    let even: Vec<C64> = (0..m).map(|j| y[2 * j]).collect();
    let u0 = split_real_inv_rec(&even, policy, ops);

    let v0: Vec<C64> = (0..l).map(|j| y[4 * j + 1]).collect();
    let mut z0 = complex_ifft_rec_unscaled(&v0, policy, ops);
    let scale = 1.0 / l as f64;
    for (j, slot) in z0.iter_mut().enumerate() {
        *slot = slot.conj() * scale;
        if !policy.special_twiddles {
            *slot *= twiddle(-(j as i64), n);
            ops.cmul(1);
        } else if j != 0 {
            *slot *= twiddle(-(j as i64), n);
            if 8 * j == n {
                ops.cheap_twiddle();
            } else {
                ops.cmul(1);
            }
        }
    }
    // z0 = t_lo - i*t_hi with both halves real.
    let mut x = vec![0.0; n];
    for j in 0..m {
        let t = if j < l { z0[j].re } else { -z0[j - l].im };
        x[j] = 0.5 * (u0[j] + t);
        x[j + m] = 0.5 * (u0[j] - t);
    }
    ops.radd(n as u64);
    x
}

/// Forward unscaled conjugated recursion reused by the inverse paths.
fn complex_ifft_rec_unscaled(v: &[C64], policy: CountPolicy, ops: &mut OpCounter) -> Vec<C64> {
    let conj_in: Vec<C64> = v.iter().map(|c| c.conj()).collect();
    split_complex_rec(&conj_in, policy, ops)
}

/// Standard radix-2 transform in the frequency domain with naturally ordered
/// output. With special twiddles on, the cost is exactly
/// `(3np - 3n + 4)` real adds plus `(2np - 7n + 12)` real mults for
/// `n = 2^p >= 4`.
pub fn radix2_fft(
    x: &[C64],
    policy: CountPolicy,
    ops: &mut OpCounter,
) -> Result<Vec<C64>, FftError> {
    require_pow2(x.len(), 1)?;
    Ok(radix2_rec(x, policy, ops))
}

fn radix2_rec(x: &[C64], policy: CountPolicy, ops: &mut OpCounter) -> Vec<C64> {
    let n = x.len();
    if n == 1 {
        return x.to_vec();
    }
    if n == 2 {
        ops.cadd(2);
        return vec![x[0] + x[1], x[0] - x[1]];
    }
    let m = n / 2;
    let mut u0 = Vec::with_capacity(m);
    let mut u1 = Vec::with_capacity(m);
    for j in 0..m {
        u0.push(x[j] + x[j + m]);
        u1.push(x[j] - x[j + m]);
    }
    ops.cadd(n as u64);
    for (j, slot) in u1.iter_mut().enumerate() {
        if !policy.special_twiddles {
            *slot *= twiddle(j as i64, n);
            ops.cmul(1);
            continue;
        }
        if j == 0 {
            continue;
        }
        *slot *= twiddle(j as i64, n);
        if 4 * j == n {
            // Multiplication by -i is a swap.
        } else if 8 * j == n || 8 * j == 3 * n {
            ops.cheap_twiddle();
        } else {
            ops.cmul(1);
        }
    }
    let even = radix2_rec(&u0, policy, ops);
    let odd = radix2_rec(&u1, policy, ops);
    let mut y = vec![C64::new(0.0, 0.0); n];
    for j in 0..m {
        y[2 * j] = even[j];
        y[2 * j + 1] = odd[j];
    }
    y
}

/// Doubles the sampling rate of a conjugate-even spectrum.
///
/// Given the length-`m` spectrum `u` of a real vector `x`, returns the
/// odd-indexed half of the length-`2m` spectrum of `x` padded with `m` zeros;
/// the even-indexed half is `u` itself. Total real operations equal
/// `4mp - 6m + 6` for `m = 2^p >= 2`.
pub fn double_interpolation(
    u: &[C64],
    policy: CountPolicy,
    ops: &mut OpCounter,
) -> Result<Vec<C64>, FftError> {
    let m = u.len();
    require_pow2(m, 2)?;
    check_conjugate_even(u)?;
    let x = split_real_inv_rec(u, policy, ops);
    if m == 2 {
        // Single odd bin: value of x0 + w*x1 at the quarter turn, w = -i.
        return Ok(vec![
            C64::new(x[0], -x[1]),
            C64::new(x[0], x[1]),
        ]);
    }
    let l = m / 2;
    let mut z0: Vec<C64> = (0..l).map(|j| C64::new(x[j], -x[j + l])).collect();
    diag_twiddle(&mut z0, 2 * m, policy, ops);
    let v0 = split_complex_rec(&z0, policy, ops);
    let mut p1 = vec![C64::new(0.0, 0.0); m];
    for j in 0..l {
        p1[2 * j] = v0[j];
        p1[2 * j + 1] = v0[l - 1 - j].conj();
    }
    Ok(p1)
}
