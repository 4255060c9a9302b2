//! Dense realizations of the stage operators for small sizes.
//!
//! The streaming operators in the parent module are index maps over flat
//! buffers. For lengths up to a few dozen it is cheap to build the same
//! operators literally as matrices from their defining products and compare.
//! Tests use this module to pin the operational code to the algebra.

use super::{twiddle, C64, RadixPlan};

pub type Matrix = Vec<Vec<C64>>;

pub fn identity(n: usize) -> Matrix {
    let mut m = vec![vec![C64::new(0.0, 0.0); n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = C64::new(1.0, 0.0);
    }
    m
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let p = b[0].len();
    let k_dim = b.len();
    let mut out = vec![vec![C64::new(0.0, 0.0); p]; n];
    for i in 0..n {
        for k in 0..k_dim {
            let aik = a[i][k];
            if aik.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..p {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub fn matvec(a: &Matrix, x: &[C64]) -> Vec<C64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(&m, &v)| m * v).sum())
        .collect()
}

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (am, an) = (a.len(), a[0].len());
    let (bm, bn) = (b.len(), b[0].len());
    let mut out = vec![vec![C64::new(0.0, 0.0); an * bn]; am * bm];
    for i in 0..am {
        for j in 0..an {
            for p in 0..bm {
                for q in 0..bn {
                    out[i * bm + p][j * bn + q] = a[i][j] * b[p][q];
                }
            }
        }
    }
    out
}

pub fn dft_matrix(n: usize) -> Matrix {
    let mut m = vec![vec![C64::new(0.0, 0.0); n]; n];
    for (k, row) in m.iter_mut().enumerate() {
        for (l, v) in row.iter_mut().enumerate() {
            *v = twiddle((k * l) as i64, n);
        }
    }
    m
}

/// Factor-swap permutation `L` for `n = k*m`: column `i*m+j` carries a one in
/// row `j*k+i`.
pub fn l_matrix(n: usize, k: usize) -> Matrix {
    let m = n / k;
    let mut out = vec![vec![C64::new(0.0, 0.0); n]; n];
    for i in 0..k {
        for j in 0..m {
            out[j * k + i][i * m + j] = C64::new(1.0, 0.0);
        }
    }
    out
}

/// Diagonal twiddle matrix `W` for `n = k*m`: entry `i*m+j` is
/// `e^(-2 pi i * i*j/n)`.
pub fn w_matrix(n: usize, m: usize) -> Matrix {
    let k = n / m;
    let mut out = vec![vec![C64::new(0.0, 0.0); n]; n];
    for i in 0..k {
        for j in 0..m {
            out[i * m + j][i * m + j] = twiddle((i * j) as i64, n);
        }
    }
    out
}

/// Global diagonal of the pre-multiplied twiddles of frequency-domain
/// stage `k`.
pub fn freq_diag_matrix(k: usize, plan: &RadixPlan) -> Matrix {
    let n = plan.total();
    let mut out = vec![vec![C64::new(0.0, 0.0); n]; n];
    for (t, row) in out.iter_mut().enumerate() {
        row[t] = crate::fft::freq_stage_twiddle(k, plan, t);
    }
    out
}

fn transpose(a: &Matrix) -> Matrix {
    let n = a.len();
    let m = a[0].len();
    let mut out = vec![vec![C64::new(0.0, 0.0); n]; m];
    for (i, row) in a.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            out[j][i] = v;
        }
    }
    out
}

/// Dense time-domain stage operator built from its defining product.
pub fn stage_time_matrix(k: usize, plan: &RadixPlan) -> Matrix {
    let n = plan.total();
    let nk = plan.radices()[k];
    let big_nk = plan.stage_products()[k];
    let a = kron(&identity(n / big_nk), &l_matrix(big_nk, nk));
    let a_inv = transpose(&a);
    let w = kron(&identity(n / big_nk), &w_matrix(big_nk, nk));
    let f = kron(&identity(n / nk), &dft_matrix(nk));
    matmul(&a_inv, &matmul(&f, &matmul(&w, &a)))
}

/// Dense frequency-domain stage operator (pre-multiplied twiddles) built
/// from its defining product.
pub fn stage_freq_matrix(k: usize, plan: &RadixPlan) -> Matrix {
    let n = plan.total();
    let m = plan.radices();
    let suffix = |from: usize| -> usize { m[from..].iter().product::<usize>().max(1) };
    let mk = m[k];
    let big_mk = suffix(k);

    let b = kron(&identity(n / big_mk), &l_matrix(big_mk, mk));
    let b_inv = transpose(&b);
    let v = freq_diag_matrix(k, plan);
    let f = kron(&identity(n / mk), &dft_matrix(mk));
    matmul(&b_inv, &matmul(&f, &matmul(&v, &b)))
}

/// Dense frequency-domain stage operator in the post-multiplied form.
pub fn stage_freq_w_matrix(k: usize, plan: &RadixPlan) -> Matrix {
    let n = plan.total();
    let m = plan.radices();
    let suffix = |from: usize| -> usize { m[from..].iter().product::<usize>().max(1) };
    let mk = m[k];
    let big_mk = suffix(k);

    let b = kron(&identity(n / big_mk), &l_matrix(big_mk, mk));
    let b_inv = transpose(&b);
    let w = kron(&identity(n / big_mk), &w_matrix(big_mk, mk));
    let f = kron(&identity(n / mk), &dft_matrix(mk));
    matmul(&b_inv, &matmul(&w, &matmul(&f, &b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fft::{stage_freq, stage_time};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_vec(n: usize, seed: u64) -> Vec<C64> {
        let mut rng = StdRng::seed_from_u64(seed);
        (0..n)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    fn random_matrix(n: usize, seed: u64) -> Matrix {
        let mut rng = StdRng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                (0..n)
                    .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect()
            })
            .collect()
    }

    fn mat_dev(a: &Matrix, b: &Matrix) -> f64 {
        a.iter()
            .flatten()
            .zip(b.iter().flatten())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn operational_stages_match_dense_definitions() {
        for radices in [vec![2, 2], vec![3, 2], vec![2, 3, 2], vec![4, 2]] {
            let plan = RadixPlan::new(&radices).unwrap();
            let x = random_vec(plan.total(), 11);
            for k in 0..plan.stages() {
                let dt = matvec(&stage_time_matrix(k, &plan), &x);
                let ot = stage_time(k, &plan, &x).unwrap();
                assert!(
                    dt.iter()
                        .zip(&ot)
                        .map(|(a, b)| (a - b).norm())
                        .fold(0.0, f64::max)
                        < 1e-12
                );

                let df = matvec(&stage_freq_matrix(k, &plan), &x);
                let of = stage_freq(k, &plan, &x).unwrap();
                assert!(
                    df.iter()
                        .zip(&of)
                        .map(|(a, b)| (a - b).norm())
                        .fold(0.0, f64::max)
                        < 1e-12
                );

                let dw = matvec(&stage_freq_w_matrix(k, &plan), &x);
                let ow = crate::fft::stage_freq_w(k, &plan, &x).unwrap();
                assert!(
                    dw.iter()
                        .zip(&ow)
                        .map(|(a, b)| (a - b).norm())
                        .fold(0.0, f64::max)
                        < 1e-12
                );
            }
        }
    }

    #[test]
    fn stage_applied_to_basis_vector_preserves_energy() {
        let plan = RadixPlan::new(&[2, 2]).unwrap();
        let mut e0 = vec![C64::new(0.0, 0.0); 4];
        e0[0] = C64::new(1.0, 0.0);
        for k in 0..plan.stages() {
            let y = stage_time(k, &plan, &e0).unwrap();
            let energy: f64 = y.iter().map(|v| v.norm_sqr()).sum();
            // One order-n butterfly touches e0; the DFT of a unit impulse has
            // squared norm n.
            assert!((energy - plan.radices()[k] as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn kron_factors_commute_when_sizes_divide() {
        // (I_n (x) a) and (b (x) I_m) commute whenever the common size divides m*n.
        let a = random_matrix(2, 21);
        let b = random_matrix(3, 22);
        let n = 6usize; // size of I_n so A = I_6 (x) a is 12x12
        let m = 4usize; // size of I_m so B = b (x) I_4 is 12x12
        let big_a = kron(&identity(n), &a);
        let big_b = kron(&b, &identity(m));
        assert_eq!(big_a.len(), 12);
        assert_eq!(big_b.len(), 12);
        assert_eq!(n * m % big_a.len(), 0);
        let ab = matmul(&big_a, &big_b);
        let ba = matmul(&big_b, &big_a);
        assert!(mat_dev(&ab, &ba) < 1e-12);
    }

    #[test]
    fn l_permutations_are_mutually_inverse() {
        for (k, m) in [(2usize, 3usize), (4, 2), (3, 5)] {
            let n = k * m;
            let lk = l_matrix(n, k);
            let lm = l_matrix(n, m);
            assert!(mat_dev(&matmul(&lk, &lm), &identity(n)) < 1e-15);
        }
    }
}
