//! Supports, rank weights, subspace products, coefficient expansions and
//! the distance calculators of the rank metric.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::Rng;

use crate::algebra::{ExtField, Field, FqmElem, MatFq, Matrix};
use crate::error::{Error, Result};

/// F_q-subspace of F_{q^m} held as a canonical RREF basis over the
/// β-coordinates, so equal subspaces compare equal.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Subspace {
    field: ExtField,
    basis: MatFq,
}

impl Subspace {
    pub fn zero(ext: &ExtField) -> Self {
        Subspace { field: ext.clone(), basis: Matrix::filled(0, ext.m(), 0) }
    }

    pub fn full(ext: &ExtField) -> Self {
        Subspace { field: ext.clone(), basis: Matrix::identity(&ext.fq(), ext.m()) }
    }

    /// ⟨elems⟩ over F_q.
    pub fn span(ext: &ExtField, elems: &[FqmElem]) -> Self {
        let rows = elems.iter().map(|e| e.coeffs.clone()).collect();
        Self::from_coeff_rows(ext, Matrix::from_rows(rows, ext.m()))
    }

    /// Canonicalizes arbitrary coefficient rows.
    pub fn from_coeff_rows(ext: &ExtField, rows: MatFq) -> Self {
        let red = rows.rref(&ext.fq());
        let keep: Vec<usize> = (0..red.rank).collect();
        Subspace { field: ext.clone(), basis: red.r.select_rows(&keep) }
    }

    pub fn field(&self) -> &ExtField {
        &self.field
    }
    pub fn dim(&self) -> usize {
        self.basis.rows()
    }
    pub fn basis(&self) -> &MatFq {
        &self.basis
    }
    pub fn basis_elems(&self) -> Vec<FqmElem> {
        (0..self.dim()).map(|i| FqmElem { coeffs: self.basis.row_vec(i) }).collect()
    }

    pub fn contains(&self, x: &FqmElem) -> bool {
        let f = self.field.fq();
        let mut v = x.coeffs.clone();
        for i in 0..self.dim() {
            let row = self.basis.row(i);
            let p = row.iter().position(|&c| c != 0).expect("RREF rows are nonzero");
            let c = v[p];
            if c != 0 {
                for (vj, &rj) in v.iter_mut().zip(row) {
                    *vj ^= f.mul(&c, &rj);
                }
            }
        }
        v.iter().all(|&c| c == 0)
    }

    pub fn contains_one(&self) -> bool {
        self.contains(&self.field.one())
    }

    pub fn is_subspace_of(&self, other: &Subspace) -> bool {
        self.basis_elems().iter().all(|e| other.contains(e))
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        Subspace::from_coeff_rows(&self.field, self.basis.vstack(&other.basis))
    }

    pub fn intersect(&self, other: &Subspace) -> Subspace {
        let ext = &self.field;
        if self.dim() == 0 || other.dim() == 0 {
            return Subspace::zero(ext);
        }
        // (a, b) with a·U = b·V; the intersection is spanned by a·U
        let stacked = self.basis.vstack(&other.basis);
        let rel = stacked.left_kernel(&ext.fq());
        let du = self.dim();
        let elems: Vec<FqmElem> = rel
            .iter()
            .map(|r| FqmElem { coeffs: self.basis.vec_mul(&ext.fq(), &r[..du]) })
            .collect();
        Subspace::span(ext, &elems)
    }

    /// c·W.
    pub fn scale(&self, c: &FqmElem) -> Subspace {
        let elems: Vec<FqmElem> = self.basis_elems().iter().map(|b| self.field.mul(c, b)).collect();
        Subspace::span(&self.field, &elems)
    }

    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> FqmElem {
        let ext = &self.field;
        let lam: Vec<u32> = (0..self.dim()).map(|_| ext.fq_random(rng)).collect();
        self.combine(&lam)
    }

    /// Σ λ_i b_i over the canonical basis.
    pub fn combine(&self, lam: &[u32]) -> FqmElem {
        FqmElem { coeffs: self.basis.vec_mul(&self.field.fq(), lam) }
    }

    /// Coordinates of x over the canonical basis, if x is a member.
    pub fn coordinates(&self, x: &FqmElem) -> Option<Vec<u32>> {
        if self.dim() == 0 {
            return self.field.is_zero(x).then(Vec::new);
        }
        let sol = self.basis.transpose().solve(&self.field.fq(), &x.coeffs)?;
        Some(sol.x)
    }

    /// All q^dim members; callers bound the size.
    pub fn elements(&self) -> Vec<FqmElem> {
        let q = self.field.q();
        let d = self.dim();
        let total = q.pow(d as u32);
        (0..total)
            .map(|idx| {
                let lam: Vec<u32> = (0..d).map(|i| ((idx / q.pow(i as u32)) % q) as u32).collect();
                self.combine(&lam)
            })
            .collect()
    }

    /// True when c·self = other for some nonzero c.
    pub fn same_up_to_scaling(&self, other: &Subspace) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        if self.dim() == 0 {
            return true;
        }
        // c·s_0 ∈ other forces c ∈ other·s_0^{-1}
        let s0 = &self.basis_elems()[0];
        let s0_inv = self.field.inv(s0).expect("basis vectors are nonzero");
        other
            .elements()
            .iter()
            .filter(|o| !self.field.is_zero(o))
            .any(|o| &self.scale(&self.field.mul(o, &s0_inv)) == other)
    }
}

/// ⟨v_1, …, v_n⟩ over F_q.
pub fn support(ext: &ExtField, v: &[FqmElem]) -> Subspace {
    Subspace::span(ext, v)
}

/// Rank weight |v| = dim support(v).
pub fn rank_weight(ext: &ExtField, v: &[FqmElem]) -> usize {
    support(ext, v).dim()
}

/// U·V = ⟨u·v⟩.
pub fn subspace_product(u: &Subspace, v: &Subspace) -> Subspace {
    let ext = u.field();
    let mut prods = Vec::with_capacity(u.dim() * v.dim());
    for a in u.basis_elems() {
        for b in v.basis_elems() {
            prods.push(ext.mul(&a, &b));
        }
    }
    Subspace::span(ext, &prods)
}

/// f·W as a canonical subspace.
pub fn scale_subspace(f: &FqmElem, w: &Subspace) -> Subspace {
    w.scale(f)
}

/// The m×n matrix with v_j = Σ_i M_ij β_i.
pub fn mat_expand(ext: &ExtField, v: &[FqmElem]) -> MatFq {
    let m = ext.m();
    let mut out = Matrix::filled(m, v.len(), 0u32);
    for (j, x) in v.iter().enumerate() {
        for i in 0..m {
            out.set(i, j, x.coeffs[i]);
        }
    }
    out
}

/// First m−1 rows of `mat_expand`: the β_m = 1 row is dropped.
pub fn matp_expand(ext: &ExtField, v: &[FqmElem]) -> MatFq {
    let full = mat_expand(ext, v);
    let rows: Vec<usize> = (0..ext.m() - 1).collect();
    full.select_rows(&rows)
}

/// Reads columns of an m×n expansion back into a vector.
pub fn from_mat_expand(ext: &ExtField, m: &MatFq) -> Result<Vec<FqmElem>> {
    if m.rows() != ext.m() {
        return Err(Error::Shape(format!("expected {} rows, found {}", ext.m(), m.rows())));
    }
    Ok((0..m.cols()).map(|j| FqmElem { coeffs: m.col(j) }).collect())
}

fn big_pow(q: &BigUint, e: usize) -> BigUint {
    q.pow(e as u32)
}

/// S_i = ∏_{j<i} (q^n − q^j)(q^m − q^j)/(q^i − q^j): the number of m×n
/// matrices of rank exactly i.
pub fn sphere_size(q: &BigUint, m: usize, n: usize, i: usize) -> Result<BigUint> {
    if i > m.min(n) {
        return Err(Error::Param(format!("radius {i} exceeds min(m, n) = {}", m.min(n))));
    }
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for j in 0..i {
        let qj = big_pow(q, j);
        num *= (big_pow(q, n) - &qj) * (big_pow(q, m) - &qj);
        den *= big_pow(q, i) - qj;
    }
    Ok(num / den)
}

/// Smallest t with Σ_{i≤t} S_i ≥ q^{m(n−k)}, in exact arithmetic. Spheres
/// are built incrementally: S_{i+1} = S_i·(q^n − q^i)(q^m − q^i) / (q^i·(q^{i+1} − 1)).
pub fn gv_distance_exact(q: &BigUint, m: usize, n: usize, k: usize) -> Result<usize> {
    if k > n {
        return Err(Error::Param(format!("k = {k} exceeds n = {n}")));
    }
    let target = big_pow(q, m * (n - k));
    let (qn, qm) = (big_pow(q, n), big_pow(q, m));
    let mut qi = BigUint::one();
    let mut sphere = BigUint::one();
    let mut ball = BigUint::zero();
    for t in 0..=m.min(n) {
        ball += &sphere;
        if ball >= target {
            return Ok(t);
        }
        let qi1 = &qi * q;
        sphere = sphere * (&qn - &qi) * (&qm - &qi) / (&qi * (&qi1 - 1u32));
        qi = qi1;
    }
    Err(Error::Anomaly("ball of full radius below q^{m(n-k)}".into()))
}

/// Estimate (m + n − √((m − n)² + 4km)) / 2 of the GV distance.
pub fn gv_distance_asymptotic(m: usize, n: usize, k: usize) -> f64 {
    let (m, n, k) = (m as f64, n as f64, k as f64);
    (m + n - ((m - n).powi(2) + 4.0 * k * m).sqrt()) / 2.0
}

/// ⌊(n − k)m / max(m, n)⌋ + 1.
pub fn singleton_distance(m: usize, n: usize, k: usize) -> Result<usize> {
    if k > n {
        return Err(Error::Param(format!("k = {k} exceeds n = {n}")));
    }
    Ok((n - k) * m / m.max(n) + 1)
}

/// Linear description of {v ∈ F_{q^m}^n : v_j ∈ S for all j} on the digit
/// vector (v_1 digits, v_2 digits, …), digit index j·m + i.
#[derive(Clone, Debug)]
pub struct MembershipConstraints {
    /// Rows annihilating every admissible digit vector.
    pub constraints: MatFq,
    /// n·dim S free coordinates: coordinate block j holds v_j's S-coordinates.
    pub param: MatFq,
    pub free: usize,
}

pub fn subspace_membership_constraints(s: &Subspace, n: usize) -> MembershipConstraints {
    let ext = s.field();
    let f = ext.fq();
    let m = ext.m();
    let d = s.dim();
    let ann = s.basis().kernel(&f);
    let mut constraints = Matrix::filled(n * ann.len(), n * m, 0u32);
    let mut param = Matrix::filled(n * m, n * d, 0u32);
    for j in 0..n {
        for (r, a) in ann.iter().enumerate() {
            for i in 0..m {
                constraints.set(j * ann.len() + r, j * m + i, a[i]);
            }
        }
        for l in 0..d {
            for i in 0..m {
                param.set(j * m + i, j * d + l, *s.basis().get(l, i));
            }
        }
    }
    MembershipConstraints { constraints, param, free: n * d }
}

/// Concatenated β-coordinates of a vector.
pub fn flatten_digits(v: &[FqmElem]) -> Vec<u32> {
    v.iter().flat_map(|x| x.coeffs.iter().copied()).collect()
}

pub fn unflatten_digits(ext: &ExtField, d: &[u32]) -> Vec<FqmElem> {
    d.chunks(ext.m()).map(|c| FqmElem { coeffs: c.to_vec() }).collect()
}

/// Digit order in which lexicographic comparison of packed elements becomes
/// plain lexicographic comparison: per coordinate, most significant digit
/// (β_m) first.
pub fn significance_order(m: usize, n: usize) -> Vec<usize> {
    (0..n).flat_map(|j| (0..m).rev().map(move |i| j * m + i)).collect()
}
