//! Prange information-set decoding for G·eᵀ = sᵀ over F_2, and the
//! column-by-column break of the Hamming-mode IBE.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::index::sample;
use rand::Rng;

use crate::algebra::{MatFq, Matrix};
use crate::error::{Error, Result};
use crate::ibe::{binary, hash_identity_bits, HammingCiphertext, HammingMpk};
use crate::rng_from_seed;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrangeOutcome {
    pub e: Vec<u32>,
    /// Invertible information-set draws, the successful one included.
    pub iterations: usize,
    /// Singular draws, skipped.
    pub singular: usize,
}

/// Draws size-k column sets J until G_J is invertible and the unique e
/// supported on J with G·eᵀ = sᵀ has weight w. Only invertible draws count
/// towards `max_iters`.
pub fn prange_decode<R: Rng + ?Sized>(
    g: &MatFq,
    s: &[u32],
    w: usize,
    rng: &mut R,
    max_iters: usize,
) -> Result<PrangeOutcome> {
    let f = binary().fq();
    let (k, n) = (g.rows(), g.cols());
    if s.len() != k || k > n {
        return Err(Error::Shape(format!("{k}x{n} matrix with a syndrome of length {}", s.len())));
    }
    let (mut iterations, mut singular) = (0, 0);
    // a full-rank G has invertible k-subsets; give up on singular draws
    // only after many consecutive misses
    let singular_cap = 64 * max_iters.max(1) + 1024;
    while iterations < max_iters {
        let mut j = sample(rng, n, k).into_vec();
        j.sort_unstable();
        let sol = g.select_cols(&j).solve(&f, s);
        let Some(sol) = sol.filter(|s| s.kernel.is_empty()) else {
            singular += 1;
            if singular > singular_cap {
                return Err(Error::Exhausted(format!("{singular} singular information sets")));
            }
            continue;
        };
        iterations += 1;
        if sol.x.iter().filter(|&&b| b == 1).count() == w {
            let mut e = vec![0u32; n];
            for (&pos, &b) in j.iter().zip(&sol.x) {
                e[pos] = b;
            }
            debug_assert_eq!(g.mul_vec(&f, &e), s);
            return Ok(PrangeOutcome { e, iterations, singular });
        }
    }
    Err(Error::Exhausted(format!("no weight-{w} solution in {max_iters} information sets")))
}

/// C(n, w)/C(k, w): the expected number of invertible draws.
pub fn prange_expected_iterations(n: usize, k: usize, w: usize) -> f64 {
    let ratio = binomial(n, w).to_f64().unwrap_or(f64::INFINITY) / binomial(k, w).to_f64().unwrap_or(f64::INFINITY);
    if ratio.is_finite() {
        ratio
    } else {
        (log2_binomial(n, w) - log2_binomial(k, w)).exp2()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ColumnReport {
    pub column: usize,
    pub iterations: usize,
    pub singular: usize,
    pub success: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HammingBreak {
    pub e: MatFq,
    pub msg: Vec<u32>,
    pub columns: Vec<ColumnReport>,
}

/// Recovers every column of E from C₁ = G_sgn·E, then m from
/// m·G_dec = C₂ − H(id)·E. Column j uses its own generator seeded by the
/// j-th draw from `rng`, so the result does not depend on `threads`.
pub fn break_hamming_ibe<R: Rng + ?Sized>(
    mpk: &HammingMpk,
    ct: &HammingCiphertext,
    rng: &mut R,
    max_iters: usize,
    threads: usize,
) -> Result<HammingBreak> {
    let p = &mpk.params;
    let f = binary().fq();
    if (ct.c1.rows(), ct.c1.cols(), ct.c2.len()) != (p.k_sgn, p.n_dec, p.n_dec) {
        return Err(Error::Shape("ciphertext shape disagrees with the parameters".into()));
    }
    let seeds: Vec<u64> = (0..p.n_dec).map(|_| rng.gen()).collect();
    let decode = |j: usize| -> (usize, Result<PrangeOutcome>) {
        let mut col_rng = rng_from_seed(seeds[j]);
        (j, prange_decode(&mpk.g_sgn, &ct.c1.col(j), p.w_dec, &mut col_rng, max_iters))
    };
    let threads = threads.max(1);
    let results: Vec<(usize, Result<PrangeOutcome>)> = if threads == 1 {
        (0..p.n_dec).map(decode).collect()
    } else {
        let cols: Vec<usize> = (0..p.n_dec).collect();
        let chunk = p.n_dec.div_ceil(threads).max(1);
        std::thread::scope(|sc| {
            let decode = &decode;
            let hs: Vec<_> = cols
                .chunks(chunk)
                .map(|part| sc.spawn(move || part.iter().map(|&j| decode(j)).collect::<Vec<_>>()))
                .collect();
            hs.into_iter().flat_map(|h| h.join().expect("column worker panicked")).collect()
        })
    };
    let mut e = Matrix::filled(p.n_sgn, p.n_dec, 0u32);
    let mut columns = Vec::with_capacity(p.n_dec);
    let mut failure = None;
    for (j, res) in results {
        match res {
            Ok(out) => {
                for (i, &b) in out.e.iter().enumerate() {
                    e.set(i, j, b);
                }
                columns.push(ColumnReport { column: j, iterations: out.iterations, singular: out.singular, success: true });
            }
            Err(err) => {
                columns.push(ColumnReport { column: j, iterations: max_iters, singular: 0, success: false });
                failure.get_or_insert(err);
            }
        }
    }
    if let Some(err) = failure {
        return Err(err);
    }
    let he = e.vec_mul(&f, &hash_identity_bits(p, &ct.id));
    let mg: Vec<u32> = ct.c2.iter().zip(&he).map(|(x, y)| x ^ y).collect();
    let sol = mpk
        .g_dec
        .transpose()
        .solve(&f, &mg)
        .ok_or_else(|| Error::Anomaly("C₂ − H(id)·E is not a codeword of C_dec".into()))?;
    if !sol.kernel.is_empty() {
        return Err(Error::Anomaly("G_dec is not full rank".into()));
    }
    Ok(HammingBreak { e, msg: sol.x, columns })
}

/// Binary entropy h(x) = −x log₂ x − (1−x) log₂(1−x), with h(0) = h(1) = 0.
pub fn entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Param(format!("entropy argument {x} outside [0, 1]")));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

/// n·h(l/n), the entropy estimate of log₂ C(n, l).
pub fn entropy_estimate(n: f64, l: f64) -> Result<f64> {
    if n <= 0.0 || l < 0.0 || l > n {
        return Err(Error::Param(format!("need 0 ≤ l ≤ n, got l = {l}, n = {n}")));
    }
    Ok(n * entropy(l / n)?)
}

/// n·h(w/n) − k·h(w/k): log₂ of the Prange work factor up to polynomial terms.
pub fn prange_exponent(n: f64, k: f64, w: f64) -> Result<f64> {
    if !(0.0 <= w && w <= k && k <= n && k > 0.0) {
        return Err(Error::Param(format!("need 0 ≤ w ≤ k ≤ n, got ({n}, {k}, {w})")));
    }
    Ok(entropy_estimate(n, w)? - entropy_estimate(k, w)?)
}

pub fn binomial(n: usize, l: usize) -> BigUint {
    if l > n {
        return BigUint::zero();
    }
    let l = l.min(n - l);
    let mut acc = BigUint::one();
    for i in 0..l {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// log₂ of a positive big integer, from its top 64 bits.
pub fn log2_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 64 {
        return x.to_u64().map_or(f64::NEG_INFINITY, |v| (v as f64).log2());
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().expect("64 bits fit");
    (top as f64).log2() + shift as f64
}

/// Exact log₂ C(n, l) evaluated on the big-integer binomial.
pub fn log2_binomial(n: usize, l: usize) -> f64 {
    log2_big(&binomial(n, l))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ibe::{encrypt_hamming_with_noise, setup_hamming, HammingParams, Mpk};

    fn planted(rng: &mut crate::Rng, n: usize, k: usize, w: usize) -> (MatFq, Vec<u32>, Vec<u32>) {
        let f = binary().fq();
        let g = Matrix::random_full_rank(&f, k, n, rng);
        let mut e = vec![0u32; n];
        for i in sample(rng, n, w) {
            e[i] = 1;
        }
        let s = g.mul_vec(&f, &e);
        (g, e, s)
    }

    /// Every weight-≤w preimage, by brute force over C(n, ≤2).
    fn low_weight_preimages(g: &MatFq, s: &[u32], max_w: usize) -> usize {
        let f = binary().fq();
        let n = g.cols();
        let mut count = 0;
        let check = |pos: &[usize]| {
            let mut e = vec![0u32; n];
            for &p in pos {
                e[p] = 1;
            }
            g.mul_vec(&f, &e) == s
        };
        if max_w >= 1 {
            count += (0..n).filter(|&i| check(&[i])).count();
        }
        if max_w >= 2 {
            for i in 0..n {
                count += (i + 1..n).filter(|&j| check(&[i, j])).count();
            }
        }
        count + usize::from(s.iter().all(|&b| b == 0))
    }

    #[test]
    fn zero_syndrome_decodes_to_zero() {
        let mut rng = rng_from_seed(1);
        let (g, _, _) = planted(&mut rng, 60, 40, 2);
        let out = prange_decode(&g, &[0; 40], 0, &mut rng, 10).unwrap();
        assert!(out.e.iter().all(|&b| b == 0));
        assert_eq!(out.iterations, 1);
    }

    #[test]
    fn planted_errors_are_recovered_near_the_expected_rate() {
        let mut rng = rng_from_seed(2);
        let (mut exact, mut total_iters) = (0, 0);
        for _ in 0..200 {
            let (g, e, s) = planted(&mut rng, 60, 40, 2);
            let unique = low_weight_preimages(&g, &s, 2) == 1;
            let out = prange_decode(&g, &s, 2, &mut rng, 1000).unwrap();
            assert_eq!(g.mul_vec(&binary().fq(), &out.e), s);
            total_iters += out.iterations;
            if unique && out.e == e {
                exact += 1;
            }
        }
        assert!(exact >= 190, "{exact}/200");
        let mean = total_iters as f64 / 200.0;
        let expect = prange_expected_iterations(60, 40, 2);
        assert!((expect - 1770.0 / 780.0).abs() < 1e-12);
        assert!(mean <= 3.0 * expect && mean >= expect / 3.0, "mean {mean} vs {expect}");
    }

    #[test]
    fn hamming_ibe_breaks() {
        let p = HammingParams { n_sgn: 60, k_sgn: 40, n_dec: 30, k_dec: 10, w_dec: 2 };
        let mut rng = rng_from_seed(3);
        let mk = setup_hamming(&p, &mut rng).unwrap();
        let Mpk::Hamming(mpk) = &mk.mpk else { unreachable!() };
        let msg: Vec<u32> = (0..10).map(|_| rng.gen_range(0..2)).collect();
        let (ct, e) = encrypt_hamming_with_noise(mpk, b"victim", &msg, &mut rng).unwrap();
        let out = break_hamming_ibe(mpk, &ct, &mut rng, 1000, 1).unwrap();
        assert_eq!(out.msg, msg);
        assert_eq!(out.e, e);
        let total: usize = out.columns.iter().map(|c| c.iterations).sum();
        assert!(total as f64 <= 3.0 * 30.0 * prange_expected_iterations(60, 40, 2));
        let par = break_hamming_ibe(mpk, &ct, &mut rng_from_seed(4), 1000, 4).unwrap();
        let seq = break_hamming_ibe(mpk, &ct, &mut rng_from_seed(4), 1000, 1).unwrap();
        assert_eq!(par, seq);
    }

    #[test]
    fn entropy_values() {
        assert_eq!(entropy(0.0).unwrap(), 0.0);
        assert_eq!(entropy(1.0).unwrap(), 0.0);
        assert!((entropy(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!(entropy(1.5).is_err());
        let gap = (log2_binomial(100, 10) - entropy_estimate(100.0, 10.0).unwrap()).abs();
        assert!(gap <= 0.5 * 100f64.log2() + 2.0, "{gap}");
        assert_eq!(binomial(60, 2), BigUint::from(1770u32));
        assert_eq!(binomial(5, 7), BigUint::zero());
    }

    #[test]
    fn prange_exponent_grows_logarithmically_along_the_ibe_family() {
        // w_sgn = √n, w_dec = n / w_sgn, k = n(1 − h(w_sgn/n))
        let mut ratios = Vec::new();
        for n in [1e3, 1e4, 1e5] {
            let w_sgn = f64::sqrt(n).floor();
            let w_dec = (n / w_sgn).floor();
            let k = (n * (1.0 - entropy(w_sgn / n).unwrap())).floor();
            ratios.push(prange_exponent(n, k, w_dec).unwrap() / n.log2());
        }
        assert!(ratios.iter().all(|&r| r > 0.0 && r <= 2.0), "{ratios:?}");
    }
}
