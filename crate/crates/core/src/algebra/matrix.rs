//! Dense row-major matrices and Gaussian elimination over any `Field`.

use std::fmt::Debug;

use rand::Rng;

use super::field::{ExtField, FqmElem};
use crate::error::{Error, Result};

/// Arithmetic context for matrix algorithms. Characteristic is always 2, so
/// subtraction and addition coincide.
pub trait Field: Clone + Send + Sync {
    type Elem: Clone + PartialEq + Eq + Debug + Send + Sync;
    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn is_zero(&self, x: &Self::Elem) -> bool;
    fn add(&self, x: &Self::Elem, y: &Self::Elem) -> Self::Elem;
    fn mul(&self, x: &Self::Elem, y: &Self::Elem) -> Self::Elem;
    /// Precondition: x ≠ 0.
    fn inv(&self, x: &Self::Elem) -> Self::Elem;
    fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Elem;
}

/// F_q viewed through an `ExtField`.
#[derive(Clone, Debug)]
pub struct Fq(pub ExtField);

/// F_{q^m} viewed through an `ExtField`.
#[derive(Clone, Debug)]
pub struct Fqm(pub ExtField);

impl Field for Fq {
    type Elem = u32;
    fn zero(&self) -> u32 {
        0
    }
    fn one(&self) -> u32 {
        1
    }
    #[inline]
    fn is_zero(&self, x: &u32) -> bool {
        *x == 0
    }
    #[inline]
    fn add(&self, x: &u32, y: &u32) -> u32 {
        x ^ y
    }
    #[inline]
    fn mul(&self, x: &u32, y: &u32) -> u32 {
        self.0.fq_mul(*x, *y)
    }
    fn inv(&self, x: &u32) -> u32 {
        self.0.fq_inv(*x).expect("nonzero pivot")
    }
    fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.0.fq_random(rng)
    }
}

impl Field for Fqm {
    type Elem = FqmElem;
    fn zero(&self) -> FqmElem {
        self.0.zero()
    }
    fn one(&self) -> FqmElem {
        self.0.one()
    }
    fn is_zero(&self, x: &FqmElem) -> bool {
        self.0.is_zero(x)
    }
    fn add(&self, x: &FqmElem, y: &FqmElem) -> FqmElem {
        self.0.add(x, y)
    }
    fn mul(&self, x: &FqmElem, y: &FqmElem) -> FqmElem {
        self.0.mul(x, y)
    }
    fn inv(&self, x: &FqmElem) -> FqmElem {
        self.0.inv(x).expect("nonzero pivot")
    }
    fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> FqmElem {
        self.0.random(rng)
    }
}

impl ExtField {
    pub fn fq(&self) -> Fq {
        Fq(self.clone())
    }
    pub fn fqm(&self) -> Fqm {
        Fqm(self.clone())
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Matrix<E> {
    rows: usize,
    cols: usize,
    data: Vec<E>,
}

pub type MatFq = Matrix<u32>;
pub type MatFqm = Matrix<FqmElem>;
pub type VecFqm = Vec<FqmElem>;

/// Reduced row-echelon form with its pivot columns.
#[derive(Clone, Debug)]
pub struct Rref<E> {
    pub r: Matrix<E>,
    pub pivots: Vec<usize>,
    pub rank: usize,
}

/// One solution of A·x = b and a basis of the right kernel of A.
#[derive(Clone, Debug)]
pub struct Solution<E> {
    pub x: Vec<E>,
    pub kernel: Vec<Vec<E>>,
}

impl<E: Clone> Matrix<E> {
    pub fn new(rows: usize, cols: usize, data: Vec<E>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!("{} elements for {rows}x{cols}", data.len())));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn filled(rows: usize, cols: usize, v: E) -> Self {
        Matrix { rows, cols, data: vec![v; rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<E>>, cols: usize) -> Self {
        let r = rows.len();
        let data: Vec<E> = rows.into_iter().flat_map(|row| {
            assert_eq!(row.len(), cols, "ragged rows");
            row
        }).collect();
        Matrix { rows: r, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn data(&self) -> &[E] {
        &self.data
    }
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &E {
        &self.data[i * self.cols + j]
    }
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: E) {
        self.data[i * self.cols + j] = v;
    }
    pub fn row(&self, i: usize) -> &[E] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
    pub fn row_vec(&self, i: usize) -> Vec<E> {
        self.row(i).to_vec()
    }
    pub fn col(&self, j: usize) -> Vec<E> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }
    pub fn to_rows(&self) -> Vec<Vec<E>> {
        (0..self.rows).map(|i| self.row_vec(i)).collect()
    }
    pub fn map<F: Clone, G: Fn(&E) -> F>(&self, g: G) -> Matrix<F> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(g).collect() }
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j).clone());
            }
        }
        Matrix { rows: self.cols, cols: self.rows, data }
    }

    pub fn select_cols(&self, cols: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for i in 0..self.rows {
            for &j in cols {
                data.push(self.get(i, j).clone());
            }
        }
        Matrix { rows: self.rows, cols: cols.len(), data }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let data = rows.iter().flat_map(|&i| self.row(i).to_vec()).collect();
        Matrix { rows: rows.len(), cols: self.cols, data }
    }

    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows);
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Matrix { rows: self.rows, cols: self.cols + other.cols, data }
    }

    pub fn vstack(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Matrix { rows: self.rows + other.rows, cols: self.cols, data }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }
}

impl<E: Clone + PartialEq> Matrix<E> {
    pub fn zeros<F: Field<Elem = E>>(f: &F, rows: usize, cols: usize) -> Self {
        Matrix::filled(rows, cols, f.zero())
    }

    pub fn identity<F: Field<Elem = E>>(f: &F, n: usize) -> Self {
        let mut m = Matrix::zeros(f, n, n);
        for i in 0..n {
            m.set(i, i, f.one());
        }
        m
    }

    pub fn random<F: Field<Elem = E>, R: Rng + ?Sized>(f: &F, rows: usize, cols: usize, rng: &mut R) -> Self {
        Matrix { rows, cols, data: (0..rows * cols).map(|_| f.random(rng)).collect() }
    }

    /// Rejection sampling until rank n.
    pub fn random_invertible<F: Field<Elem = E>, R: Rng + ?Sized>(f: &F, n: usize, rng: &mut R) -> Self {
        loop {
            let m = Matrix::random(f, n, n, rng);
            if m.rank(f) == n {
                return m;
            }
        }
    }

    /// Rejection sampling until rank min(rows, cols).
    pub fn random_full_rank<F: Field<Elem = E>, R: Rng + ?Sized>(f: &F, rows: usize, cols: usize, rng: &mut R) -> Self {
        loop {
            let m = Matrix::random(f, rows, cols, rng);
            if m.rank(f) == rows.min(cols) {
                return m;
            }
        }
    }

    pub fn is_zero<F: Field<Elem = E>>(&self, f: &F) -> bool {
        self.data.iter().all(|x| f.is_zero(x))
    }

    pub fn mul<F: Field<Elem = E>>(&self, f: &F, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions");
        let mut out = Matrix::zeros(f, self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.get(i, l);
                if f.is_zero(a) {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(l, j);
                    if !f.is_zero(b) {
                        let idx = i * other.cols + j;
                        out.data[idx] = f.add(&out.data[idx], &f.mul(a, b));
                    }
                }
            }
        }
        out
    }

    pub fn add<F: Field<Elem = E>>(&self, f: &F, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| f.add(a, b)).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    /// M·v for a column vector v.
    pub fn mul_vec<F: Field<Elem = E>>(&self, f: &F, v: &[E]) -> Vec<E> {
        assert_eq!(self.cols, v.len());
        (0..self.rows).map(|i| dot(f, self.row(i), v)).collect()
    }

    /// v·M for a row vector v.
    pub fn vec_mul<F: Field<Elem = E>>(&self, f: &F, v: &[E]) -> Vec<E> {
        assert_eq!(self.rows, v.len());
        let mut out = vec![f.zero(); self.cols];
        for (i, vi) in v.iter().enumerate() {
            if f.is_zero(vi) {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                let b = self.get(i, j);
                if !f.is_zero(b) {
                    *o = f.add(o, &f.mul(vi, b));
                }
            }
        }
        out
    }

    pub fn rref<F: Field<Elem = E>>(&self, f: &F) -> Rref<E> {
        self.rref_limited(f, self.cols)
    }

    /// RREF that only pivots within the first `limit` columns.
    pub fn rref_limited<F: Field<Elem = E>>(&self, f: &F, limit: usize) -> Rref<E> {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..limit.min(self.cols) {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !f.is_zero(m.get(i, c))) else { continue };
            m.swap_rows(r, p);
            let inv = f.inv(m.get(r, c));
            if inv != f.one() {
                for j in c..m.cols {
                    let v = f.mul(m.get(r, j), &inv);
                    m.set(r, j, v);
                }
            }
            let pivot_row: Vec<E> = m.row(r)[c..].to_vec();
            for i in 0..m.rows {
                if i == r {
                    continue;
                }
                let factor = m.get(i, c).clone();
                if f.is_zero(&factor) {
                    continue;
                }
                for (off, pv) in pivot_row.iter().enumerate() {
                    if !f.is_zero(pv) {
                        let idx = i * m.cols + c + off;
                        m.data[idx] = f.add(&m.data[idx], &f.mul(&factor, pv));
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        Rref { r: m, rank: pivots.len(), pivots }
    }

    pub fn rank<F: Field<Elem = E>>(&self, f: &F) -> usize {
        self.rref(f).rank
    }

    /// Solves A·x = b; `None` when inconsistent.
    pub fn solve<F: Field<Elem = E>>(&self, f: &F, b: &[E]) -> Option<Solution<E>> {
        assert_eq!(b.len(), self.rows, "right-hand side length");
        let n = self.cols;
        let aug = self.hstack(&Matrix { rows: self.rows, cols: 1, data: b.to_vec() });
        let red = aug.rref_limited(f, n);
        for i in red.rank..self.rows {
            if !f.is_zero(red.r.get(i, n)) {
                return None;
            }
        }
        let mut x = vec![f.zero(); n];
        for (i, &p) in red.pivots.iter().enumerate() {
            x[p] = red.r.get(i, n).clone();
        }
        Some(Solution { x, kernel: kernel_from_rref(f, &red, n) })
    }

    /// Basis of {y : A·y = 0}.
    pub fn kernel<F: Field<Elem = E>>(&self, f: &F) -> Vec<Vec<E>> {
        let red = self.rref(f);
        kernel_from_rref(f, &red, self.cols)
    }

    /// Basis of {y : y·A = 0}.
    pub fn left_kernel<F: Field<Elem = E>>(&self, f: &F) -> Vec<Vec<E>> {
        self.transpose().kernel(f)
    }

    pub fn inverse<F: Field<Elem = E>>(&self, f: &F) -> Option<Self> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let red = self.hstack(&Matrix::identity(f, n)).rref_limited(f, n);
        if red.rank < n {
            return None;
        }
        let cols: Vec<usize> = (n..2 * n).collect();
        Some(red.r.select_cols(&cols))
    }
}

fn kernel_from_rref<F: Field>(f: &F, red: &Rref<F::Elem>, n: usize) -> Vec<Vec<F::Elem>> {
    let mut is_pivot = vec![false; n];
    for &p in &red.pivots {
        is_pivot[p] = true;
    }
    let mut basis = Vec::new();
    for free in (0..n).filter(|&j| !is_pivot[j]) {
        let mut v = vec![f.zero(); n];
        v[free] = f.one();
        for (i, &p) in red.pivots.iter().enumerate() {
            v[p] = red.r.get(i, free).clone();
        }
        basis.push(v);
    }
    basis
}

pub fn dot<F: Field>(f: &F, a: &[F::Elem], b: &[F::Elem]) -> F::Elem {
    let mut acc = f.zero();
    for (x, y) in a.iter().zip(b) {
        if !f.is_zero(x) && !f.is_zero(y) {
            acc = f.add(&acc, &f.mul(x, y));
        }
    }
    acc
}

pub fn vec_add<F: Field>(f: &F, a: &[F::Elem], b: &[F::Elem]) -> Vec<F::Elem> {
    a.iter().zip(b).map(|(x, y)| f.add(x, y)).collect()
}

pub fn vec_scale<F: Field>(f: &F, c: &F::Elem, a: &[F::Elem]) -> Vec<F::Elem> {
    a.iter().map(|x| f.mul(c, x)).collect()
}

/// Lexicographically smallest point of x0 + span(kernel), coordinate 0 most
/// significant, with every element ordered so that zero is minimal among the
/// values a single pivot coordinate can take.
pub fn lex_min_affine<F: Field>(f: &F, x0: &[F::Elem], kernel: &[Vec<F::Elem>]) -> Vec<F::Elem> {
    if kernel.is_empty() {
        return x0.to_vec();
    }
    let red = Matrix::from_rows(kernel.to_vec(), x0.len()).rref(f);
    let mut x = x0.to_vec();
    for (i, &p) in red.pivots.iter().enumerate() {
        let c = x[p].clone();
        if !f.is_zero(&c) {
            x = vec_add(f, &x, &vec_scale(f, &c, red.r.row(i)));
        }
    }
    x
}

impl ExtField {
    /// Embeds an F_q matrix entrywise into F_{q^m}.
    pub fn embed(&self, m: &MatFq) -> MatFqm {
        m.map(|&c| self.from_fq(c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn ext(a: u32, m: usize) -> ExtField {
        ExtField::new(a, m).unwrap()
    }

    /// Rank via the largest nonvanishing minor; exhaustive at small size.
    fn rank_by_minors(f: &Fq, m: &MatFq) -> usize {
        fn det(f: &Fq, m: &MatFq) -> u32 {
            let n = m.rows();
            if n == 1 {
                return *m.get(0, 0);
            }
            let mut acc = 0;
            for j in 0..n {
                let a = *m.get(0, j);
                if a == 0 {
                    continue;
                }
                let rows: Vec<usize> = (1..n).collect();
                let cols: Vec<usize> = (0..n).filter(|&c| c != j).collect();
                acc ^= f.mul(&a, &det(f, &m.select_rows(&rows).select_cols(&cols)));
            }
            acc
        }
        fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
            (0u32..1 << n).filter(|s| s.count_ones() as usize == k)
                .map(|s| (0..n).filter(|&i| s >> i & 1 == 1).collect()).collect()
        }
        for k in (1..=m.rows().min(m.cols())).rev() {
            for rs in subsets(m.rows(), k) {
                for cs in subsets(m.cols(), k) {
                    if det(f, &m.select_rows(&rs).select_cols(&cs)) != 0 {
                        return k;
                    }
                }
            }
        }
        0
    }

    #[test]
    fn identity_and_zero_are_reduced() {
        let f = ext(1, 1).fq();
        let id: MatFq = Matrix::identity(&f, 5);
        let red = id.rref(&f);
        assert_eq!(red.r, id);
        assert_eq!(red.rank, 5);
        let z: MatFq = Matrix::zeros(&f, 3, 4);
        assert_eq!(z.rref(&f).rank, 0);
        assert_eq!(z.rref(&f).r, z);
    }

    #[test]
    fn factored_rank_matches_minor_oracle() {
        let f = ext(1, 1).fq();
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for _ in 0..20 {
            let a = Matrix::random_full_rank(&f, 6, 4, &mut rng);
            let b = Matrix::random_full_rank(&f, 4, 6, &mut rng);
            let p = a.mul(&f, &b);
            assert_eq!(p.rank(&f), 4);
            assert_eq!(rank_by_minors(&f, &p), 4);
        }
    }

    #[test]
    fn solve_identity_and_inconsistent() {
        let f = ext(2, 1).fq();
        let id: MatFq = Matrix::identity(&f, 3);
        let sol = id.solve(&f, &[1, 2, 3]).unwrap();
        assert_eq!(sol.x, vec![1, 2, 3]);
        assert!(sol.kernel.is_empty());
        let z: MatFq = Matrix::zeros(&f, 2, 2);
        assert!(z.solve(&f, &[0, 1]).is_none());
    }

    #[test]
    fn solve_random_consistent_over_f4() {
        let f = ext(2, 1).fq();
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        for _ in 0..50 {
            let a = Matrix::random(&f, 5, 8, &mut rng);
            let x0: Vec<u32> = (0..8).map(|_| f.random(&mut rng)).collect();
            let b = a.mul_vec(&f, &x0);
            let sol = a.solve(&f, &b).unwrap();
            assert_eq!(a.mul_vec(&f, &sol.x), b);
            for k in &sol.kernel {
                assert!(a.mul_vec(&f, k).iter().all(|&v| v == 0));
            }
            // x − x0 lies in the kernel span: solve for its coordinates
            let diff = vec_add(&f, &sol.x, &x0);
            let kmat = Matrix::from_rows(sol.kernel.clone(), 8).transpose();
            assert!(kmat.solve(&f, &diff).is_some());
            assert_eq!(sol.kernel.len(), 8 - a.rank(&f));
        }
    }

    #[test]
    fn invertible_sampling() {
        let f = ext(1, 1).fq();
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let one: MatFq = Matrix::random_invertible(&f, 1, &mut rng);
        assert_eq!(one.data(), &[1]);
        for _ in 0..100 {
            let m: MatFq = Matrix::random_invertible(&f, 6, &mut rng);
            assert_eq!(m.rank(&f), 6);
            let inv = m.inverse(&f).unwrap();
            assert_eq!(m.mul(&f, &inv), Matrix::identity(&f, 6));
        }
    }

    #[test]
    fn invertible_fraction_matches_count() {
        // 20160 of the 65536 binary 4x4 matrices are invertible
        let f = ext(1, 1).fq();
        let mut rng = ChaCha20Rng::seed_from_u64(10);
        let hits = (0..10_000).filter(|_| Matrix::random(&f, 4, 4, &mut rng).rank(&f) == 4).count();
        let rate = hits as f64 / 10_000.0;
        assert!((rate - 20160.0 / 65536.0).abs() < 0.05, "rate {rate}");
    }

    #[test]
    fn extension_matrices_invert() {
        let e = ext(4, 5);
        let f = e.fqm();
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let m = Matrix::random_invertible(&f, 4, &mut rng);
        assert_eq!(m.mul(&f, &m.inverse(&f).unwrap()), Matrix::identity(&f, 4));
    }

    #[test]
    fn lex_min_zeroes_pivots() {
        let f = ext(1, 1).fq();
        let x = lex_min_affine(&f, &[1, 1, 0, 1], &[vec![1, 0, 1, 0], vec![0, 1, 1, 1]]);
        // points: 1101, 0111, 1010, 0000 -> smallest is 0000
        assert_eq!(x, vec![0, 0, 0, 0]);
        let y = lex_min_affine(&f, &[1, 1, 0, 1], &[vec![0, 0, 1, 1]]);
        assert_eq!(y, vec![1, 1, 0, 1]);
    }

    proptest::proptest! {
        #[test]
        fn rref_idempotent_and_rank_submultiplicative(seed in 0u64..u64::MAX) {
            let f = ext(2, 1).fq();
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let a = Matrix::random(&f, 4, 5, &mut rng);
            let b = Matrix::random(&f, 5, 3, &mut rng);
            let r = a.rref(&f).r;
            proptest::prop_assert_eq!(r.rref(&f).r, r.clone());
            let rab = a.mul(&f, &b).rank(&f);
            proptest::prop_assert!(rab <= a.rank(&f).min(b.rank(&f)));
        }
    }
}
