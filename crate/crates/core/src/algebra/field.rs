//! The tower F_2 ⊂ F_q ⊂ F_{q^m} with q = 2^a.
//!
//! F_q elements are `u32` values whose bits are coefficients modulo `g`.
//! F_{q^m} elements are coordinate vectors over the basis
//! β = (X^{m-1}, …, X, 1), so the last coordinate is the F_q part.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use rand::Rng;

use super::poly;
use crate::error::{Error, Result};

/// Element of F_{q^m}; `coeffs[i]` multiplies β_{i+1} = X^{m-1-i}.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct FqmElem {
    pub coeffs: Vec<u32>,
}

/// F_q arithmetic for q = 2^a, table-driven up to a = 16.
pub(crate) struct BaseField {
    a: u32,
    g: u64,
    mask: u32,
    exp: Vec<u32>,
    log: Vec<u32>,
}

const TABLE_LIMIT: u32 = 16;

impl BaseField {
    fn binary() -> Self {
        BaseField { a: 1, g: 0b11, mask: 1, exp: Vec::new(), log: Vec::new() }
    }

    fn new(a: u32, g: u64) -> Self {
        let mask = if a == 32 { u32::MAX } else { (1u32 << a) - 1 };
        let mut bf = BaseField { a, g, mask, exp: Vec::new(), log: Vec::new() };
        if a > 1 && a <= TABLE_LIMIT {
            bf.build_tables();
        }
        bf
    }

    fn build_tables(&mut self) {
        let order = (1usize << self.a) - 1;
        for cand in 2u32..=self.mask {
            let mut exp = Vec::with_capacity(order);
            let mut x = 1u32;
            loop {
                exp.push(x);
                x = self.clmul_reduce(x, cand);
                if x == 1 || exp.len() > order {
                    break;
                }
            }
            if exp.len() == order {
                let mut log = vec![0u32; order + 1];
                for (i, &v) in exp.iter().enumerate() {
                    log[v as usize] = i as u32;
                }
                self.exp = exp;
                self.log = log;
                return;
            }
        }
        unreachable!("the multiplicative group of a finite field is cyclic");
    }

    fn clmul_reduce(&self, x: u32, y: u32) -> u32 {
        let mut acc: u64 = 0;
        let (x, mut y) = (x as u64, y as u64);
        let mut i = 0;
        while y != 0 {
            if y & 1 == 1 {
                acc ^= x << i;
            }
            y >>= 1;
            i += 1;
        }
        let a = self.a;
        for bit in (a..64).rev() {
            if acc >> bit & 1 == 1 {
                acc ^= self.g << (bit - a);
            }
        }
        acc as u32
    }

    #[inline]
    pub(crate) fn mul(&self, x: u32, y: u32) -> u32 {
        if self.a == 1 {
            return x & y;
        }
        if x == 0 || y == 0 {
            return 0;
        }
        if !self.exp.is_empty() {
            let order = self.exp.len();
            let s = self.log[x as usize] as usize + self.log[y as usize] as usize;
            return self.exp[if s >= order { s - order } else { s }];
        }
        self.clmul_reduce(x, y)
    }

    pub(crate) fn inv(&self, x: u32) -> u32 {
        debug_assert!(x != 0);
        if self.a == 1 {
            return 1;
        }
        if !self.exp.is_empty() {
            let order = self.exp.len();
            let l = self.log[x as usize] as usize;
            return self.exp[(order - l) % order];
        }
        // x^(q-2) = x^(2 + 4 + ... + 2^(a-1))
        let mut acc = 1u32;
        let mut sq = x;
        for _ in 1..self.a {
            sq = self.mul(sq, sq);
            acc = self.mul(acc, sq);
        }
        acc
    }

    #[inline]
    pub(crate) fn q_minus_one(&self) -> u64 {
        self.mask as u64
    }
}

struct Inner {
    a: u32,
    m: usize,
    base: BaseField,
    /// Monic modulus over F_q, ascending coefficients, length m + 1.
    f: Vec<u32>,
}

/// The field tower; cheap to clone and safe to share across threads.
#[derive(Clone)]
pub struct ExtField(Arc<Inner>);

impl PartialEq for ExtField {
    fn eq(&self, other: &Self) -> bool {
        self.0.a == other.0.a && self.0.m == other.0.m
    }
}
impl Eq for ExtField {}

impl fmt::Debug for ExtField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExtField(q=2^{}, m={})", self.0.a, self.0.m)
    }
}

/// Lexicographically smallest monic irreducible of degree `deg` over the
/// given base field, comparing (c_0, c_1, …, c_{deg-1}) with c_0 first and
/// requiring c_0 ≠ 0.
pub(crate) fn smallest_irreducible(base: &BaseField, deg: usize) -> Vec<u32> {
    let mut c = vec![0u64; deg + 1];
    c[0] = 1;
    c[deg] = 1;
    let q = base.q_minus_one() + 1;
    loop {
        let cand: Vec<u32> = c.iter().map(|&v| v as u32).collect();
        if poly::is_irreducible(base, &cand) {
            return cand;
        }
        // odometer with c_{deg-1} varying fastest
        let mut pos = deg - 1;
        loop {
            c[pos] += 1;
            if c[pos] < q {
                break;
            }
            c[pos] = if pos == 0 { 1 } else { 0 };
            assert!(pos > 0, "an irreducible of every degree exists");
            pos -= 1;
        }
    }
}

impl ExtField {
    /// Builds F_{2^a}^m with deterministic moduli.
    pub fn new(a: u32, m: usize) -> Result<Self> {
        if !(1..=32).contains(&a) {
            return Err(Error::Param(format!("base bit-width a = {a} outside 1..=32")));
        }
        if !(1..=64).contains(&m) {
            return Err(Error::Param(format!("extension degree m = {m} outside 1..=64")));
        }
        let binary = BaseField::binary();
        let gpoly = smallest_irreducible(&binary, a as usize);
        let g = gpoly.iter().enumerate().fold(0u64, |acc, (i, &c)| acc | ((c as u64) << i));
        let base = BaseField::new(a, g);
        let f = smallest_irreducible(&base, m);
        Ok(ExtField(Arc::new(Inner { a, m, base, f })))
    }

    pub fn a(&self) -> u32 {
        self.0.a
    }
    pub fn m(&self) -> usize {
        self.0.m
    }
    /// q = 2^a.
    pub fn q(&self) -> u64 {
        1u64 << self.0.a
    }
    /// Modulus g over F_2 as a bit mask (bit i is the coefficient of X^i).
    pub fn g_bits(&self) -> u64 {
        self.0.base.g
    }
    /// Modulus f over F_q, ascending monic coefficients.
    pub fn f_coeffs(&self) -> &[u32] {
        &self.0.f
    }
    #[cfg(test)]
    pub(crate) fn base(&self) -> &BaseField {
        &self.0.base
    }

    // ---- F_q ----

    #[inline]
    pub fn fq_mul(&self, x: u32, y: u32) -> u32 {
        self.0.base.mul(x, y)
    }
    pub fn fq_inv(&self, x: u32) -> Result<u32> {
        if x == 0 {
            return Err(Error::ZeroInverse);
        }
        Ok(self.0.base.inv(x))
    }
    pub fn fq_random<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        rng.next_u32() & self.0.base.mask
    }
    pub fn fq_is_valid(&self, x: u32) -> bool {
        x & !self.0.base.mask == 0
    }

    // ---- F_{q^m} ----

    pub fn zero(&self) -> FqmElem {
        FqmElem { coeffs: vec![0; self.0.m] }
    }
    pub fn one(&self) -> FqmElem {
        self.from_fq(1)
    }
    /// Embeds c ∈ F_q as c·β_m.
    pub fn from_fq(&self, c: u32) -> FqmElem {
        let mut e = self.zero();
        e.coeffs[self.0.m - 1] = c;
        e
    }
    /// β_i for 1 ≤ i ≤ m.
    pub fn basis_elem(&self, i: usize) -> FqmElem {
        let mut e = self.zero();
        e.coeffs[i - 1] = 1;
        e
    }
    /// The class of X (equal to 1 when m = 1).
    pub fn generator(&self) -> FqmElem {
        self.from_poly(&[0, 1])
    }
    pub fn is_zero(&self, x: &FqmElem) -> bool {
        x.coeffs.iter().all(|&c| c == 0)
    }
    /// True when every coordinate except the β_m one vanishes.
    pub fn in_base(&self, x: &FqmElem) -> bool {
        x.coeffs[..self.0.m - 1].iter().all(|&c| c == 0)
    }
    pub fn is_valid(&self, x: &FqmElem) -> bool {
        x.coeffs.len() == self.0.m && x.coeffs.iter().all(|&c| self.fq_is_valid(c))
    }

    pub fn add(&self, x: &FqmElem, y: &FqmElem) -> FqmElem {
        FqmElem { coeffs: x.coeffs.iter().zip(&y.coeffs).map(|(a, b)| a ^ b).collect() }
    }
    pub fn scale(&self, c: u32, x: &FqmElem) -> FqmElem {
        FqmElem { coeffs: x.coeffs.iter().map(|&v| self.fq_mul(c, v)).collect() }
    }

    fn to_poly(&self, x: &FqmElem) -> Vec<u32> {
        x.coeffs.iter().rev().copied().collect()
    }

    /// Reduces an ascending polynomial modulo f.
    pub(crate) fn from_poly(&self, p: &[u32]) -> FqmElem {
        let m = self.0.m;
        let mut r = poly::rem(&self.0.base, p, &self.0.f);
        r.resize(m, 0);
        r.reverse();
        FqmElem { coeffs: r }
    }

    pub fn mul(&self, x: &FqmElem, y: &FqmElem) -> FqmElem {
        let m = self.0.m;
        let b = &self.0.base;
        let mut prod = vec![0u32; 2 * m - 1];
        for (i, &xi) in x.coeffs.iter().enumerate() {
            if xi == 0 {
                continue;
            }
            let di = m - 1 - i;
            for (j, &yj) in y.coeffs.iter().enumerate() {
                if yj != 0 {
                    prod[di + m - 1 - j] ^= b.mul(xi, yj);
                }
            }
        }
        let f = &self.0.f;
        for deg in (m..2 * m - 1).rev() {
            let c = prod[deg];
            if c != 0 {
                prod[deg] = 0;
                for (l, &fl) in f[..m].iter().enumerate() {
                    if fl != 0 {
                        prod[deg - m + l] ^= b.mul(c, fl);
                    }
                }
            }
        }
        prod.truncate(m);
        prod.reverse();
        FqmElem { coeffs: prod }
    }

    pub fn inv(&self, x: &FqmElem) -> Result<FqmElem> {
        if self.is_zero(x) {
            return Err(Error::ZeroInverse);
        }
        let p = self.to_poly(x);
        let inv = poly::inv_mod(&self.0.base, &p, &self.0.f);
        Ok(self.from_poly(&inv))
    }

    /// x^e by square-and-multiply.
    pub fn pow(&self, x: &FqmElem, e: &BigUint) -> FqmElem {
        let mut acc = self.one();
        for i in (0..e.bits()).rev() {
            acc = self.mul(&acc, &acc);
            if e.bit(i) {
                acc = self.mul(&acc, x);
            }
        }
        acc
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> FqmElem {
        FqmElem { coeffs: (0..self.0.m).map(|_| self.fq_random(rng)).collect() }
    }

    pub fn random_nonzero<R: Rng + ?Sized>(&self, rng: &mut R) -> FqmElem {
        loop {
            let x = self.random(rng);
            if !self.is_zero(&x) {
                return x;
            }
        }
    }

    /// Packs Σ c_i q^{i-1} (digit i multiplies β_i).
    pub fn to_biguint(&self, x: &FqmElem) -> BigUint {
        let mut v = BigUint::default();
        for &c in x.coeffs.iter().rev() {
            v <<= self.0.a as usize;
            v += c;
        }
        v
    }

    pub fn from_biguint(&self, v: &BigUint) -> Result<FqmElem> {
        let a = self.0.a as u64;
        if v.bits() > a * self.0.m as u64 {
            return Err(Error::Parse(format!("element {v} exceeds q^m")));
        }
        let coeffs = (0..self.0.m as u64)
            .map(|i| (0..a).fold(0u32, |acc, b| acc | ((v.bit(i * a + b) as u32) << b)))
            .collect();
        Ok(FqmElem { coeffs })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    /// Exhaustive trial-division oracle for small fields.
    fn irreducible_by_trial_division(ext: &ExtField, f: &[u32]) -> bool {
        let deg = f.len() - 1;
        let q = ext.q();
        for d in 1..=deg / 2 {
            let count = q.pow(d as u32);
            for idx in 0..count {
                let mut div: Vec<u32> = (0..d).map(|i| ((idx / q.pow(i as u32)) % q) as u32).collect();
                div.push(1);
                if poly::rem(ext.base(), f, &div).iter().all(|&c| c == 0) {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn degenerate_tower_is_f2() {
        let ext = ExtField::new(1, 1).unwrap();
        assert_eq!(ext.f_coeffs(), &[1, 1]);
        assert_eq!(ext.one().coeffs, vec![1]);
    }

    #[test]
    fn quadratic_modulus_over_f2() {
        let ext = ExtField::new(1, 2).unwrap();
        assert_eq!(ext.f_coeffs(), &[1, 1, 1]);
    }

    #[test]
    fn modulus_passes_trial_division() {
        for (a, m) in [(2, 3), (1, 5), (1, 9), (2, 4), (4, 2), (4, 3), (3, 4)] {
            let ext = ExtField::new(a, m).unwrap();
            assert!(irreducible_by_trial_division(&ext, ext.f_coeffs()), "a={a} m={m}");
        }
    }

    #[test]
    fn modulus_is_smallest_in_order() {
        // every earlier candidate in (c_0, c_1, …) order with c_0 ≠ 0 is reducible
        let ext = ExtField::new(2, 3).unwrap();
        let f = ext.f_coeffs();
        let q = ext.q() as u32;
        for c0 in 1..q {
            for c1 in 0..q {
                for c2 in 0..q {
                    let cand = [c0, c1, c2, 1];
                    if cand[..] == f[..] {
                        return;
                    }
                    assert!(!irreducible_by_trial_division(&ext, &cand));
                }
            }
        }
        panic!("modulus not reached");
    }

    #[test]
    fn base_modulus_matches_table_free_path() {
        let ext = ExtField::new(4, 1).unwrap();
        let slow = BaseField { a: 4, g: ext.g_bits(), mask: 15, exp: Vec::new(), log: Vec::new() };
        for x in 0..16 {
            for y in 0..16 {
                assert_eq!(ext.fq_mul(x, y), slow.clmul_reduce(x, y));
            }
            if x != 0 {
                assert_eq!(ext.fq_mul(x, ext.fq_inv(x).unwrap()), 1);
                assert_eq!(slow.inv(x), ext.fq_inv(x).unwrap());
            }
        }
    }

    #[test]
    fn wide_base_field_inverts() {
        let ext = ExtField::new(20, 2).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x = ext.fq_random(&mut rng) | 1;
            assert_eq!(ext.fq_mul(x, ext.fq_inv(x).unwrap()), 1);
        }
    }

    #[test]
    fn add_is_involution_and_inverse_law() {
        let ext = ExtField::new(4, 9).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..500 {
            let x = ext.random_nonzero(&mut rng);
            assert!(ext.is_zero(&ext.add(&x, &x)));
            assert_eq!(ext.mul(&x, &ext.inv(&x).unwrap()), ext.one());
        }
        assert_eq!(ext.inv(&ext.zero()), Err(Error::ZeroInverse));
    }

    #[test]
    fn lagrange_by_two_routes() {
        let ext = ExtField::new(2, 3).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let order = BigUint::from(ext.q()).pow(3u32) - 1u32;
        for _ in 0..20 {
            let x = ext.random_nonzero(&mut rng);
            assert_eq!(ext.pow(&x, &order), ext.one());
            let mut naive = ext.one();
            for _ in 0..63 {
                naive = ext.mul(&naive, &x);
            }
            assert_eq!(naive, ext.one());
        }
    }

    #[test]
    fn generator_and_basis_agree() {
        let ext = ExtField::new(1, 5).unwrap();
        assert_eq!(ext.generator(), ext.basis_elem(4));
        assert_eq!(ext.basis_elem(5), ext.one());
        let x2 = ext.mul(&ext.generator(), &ext.generator());
        assert_eq!(x2, ext.basis_elem(3));
    }

    #[test]
    fn packing_round_trip() {
        let ext = ExtField::new(4, 9).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for _ in 0..100 {
            let x = ext.random(&mut rng);
            assert_eq!(ext.from_biguint(&ext.to_biguint(&x)).unwrap(), x);
        }
        assert_eq!(ext.to_biguint(&ext.basis_elem(2)), BigUint::from(16u32));
        assert_eq!(ext.to_biguint(&ext.one()), BigUint::from(16u64.pow(8)));
        assert!(ext.from_biguint(&(BigUint::from(16u32).pow(9u32))).is_err());
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(ExtField::new(0, 3).is_err());
        assert!(ExtField::new(33, 3).is_err());
        assert!(ExtField::new(2, 65).is_err());
    }

    proptest::proptest! {
        #[test]
        fn field_axioms(seed in 0u64..u64::MAX) {
            let ext = ExtField::new(3, 7).unwrap();
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let (x, y, z) = (ext.random(&mut rng), ext.random(&mut rng), ext.random(&mut rng));
            proptest::prop_assert_eq!(ext.mul(&x, &ext.add(&y, &z)), ext.add(&ext.mul(&x, &y), &ext.mul(&x, &z)));
            proptest::prop_assert_eq!(ext.mul(&x, &y), ext.mul(&y, &x));
            proptest::prop_assert_eq!(ext.mul(&ext.mul(&x, &y), &z), ext.mul(&x, &ext.mul(&y, &z)));
        }
    }
}
