//! Homogeneous matrices, LRPC codes and their decoders.
//!
//! Two decoders live here. [`lrpc_decode`] is the many-solutions decoder
//! used for signing: it returns some error of a prescribed rank whose
//! support contains a given subspace T. [`lrpc_decode_unique`] recovers the
//! unique low-rank error behind a syndrome and serves decryption.

use rand::Rng;

use crate::algebra::{lex_min_affine, ExtField, FqmElem, MatFq, MatFqm, Matrix};
use crate::error::{Error, Result};
use crate::rank_metric::{
    flatten_digits, significance_order, subspace_product, support, unflatten_digits, Subspace,
};

/// Matrix over F_{q^m} whose entries span exactly the subspace `f`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomogeneousMatrix {
    pub m: MatFqm,
    pub f: Subspace,
}

impl HomogeneousMatrix {
    /// Checks the defining invariant and wraps.
    pub fn new(m: MatFqm, f: Subspace) -> Result<Self> {
        let span = support(f.field(), m.data());
        if span != f {
            return Err(Error::Param(format!(
                "entries span a {}-dimensional space, not the declared {}-dimensional one",
                span.dim(),
                f.dim()
            )));
        }
        Ok(HomogeneousMatrix { m, f })
    }

    pub fn d(&self) -> usize {
        self.f.dim()
    }

    /// The F_q matrix A with A[(i,u), j] = u-th coordinate of H_ij over the
    /// basis of F. Its kernel is the set of F_q-rational codewords.
    pub fn expansion(&self) -> MatFq {
        let (rows, cols, d) = (self.m.rows(), self.m.cols(), self.d());
        let mut a = Matrix::filled(rows * d, cols, 0u32);
        for i in 0..rows {
            for j in 0..cols {
                let c = self.f.coordinates(self.m.get(i, j)).expect("entries lie in F");
                for (u, &cu) in c.iter().enumerate() {
                    a.set(i * d + u, j, cu);
                }
            }
        }
        a
    }

    /// True when the code has no nonzero codeword over F_q, which makes the
    /// decoding systems below uniquely solvable for every support of full
    /// product dimension.
    pub fn is_decodable(&self) -> bool {
        let f = self.f.field().fq();
        self.expansion().rank(&f) == self.m.cols()
    }
}

/// Parameters of an augmented LRPC signing code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LrpcParams {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub d: usize,
    pub t: usize,
    pub t_prime: usize,
    pub w: usize,
    /// q = 2^a.
    pub a: u32,
}

/// One checked equality.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub lhs: i64,
    pub rhs: i64,
}

impl Check {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamReport {
    pub checks: Vec<Check>,
    /// w forced by n − k = d(w − t − t′), when integral.
    pub derived_w: Option<usize>,
}

impl ParamReport {
    pub fn ok(&self) -> bool {
        self.checks.iter().all(Check::holds) && self.derived_w.is_some()
    }
}

/// Checks m = (w−t′)(d+1), n−k = d(w−t−t′) and n = (n−k)d.
pub fn validate_params(p: &LrpcParams) -> ParamReport {
    let (n, k, m, d, t, tp, w) =
        (p.n as i64, p.k as i64, p.m as i64, p.d as i64, p.t as i64, p.t_prime as i64, p.w as i64);
    let derived_w = if d > 0 && n >= k && (n - k) % d == 0 { Some(((n - k) / d + t + tp) as usize) } else { None };
    ParamReport {
        checks: vec![
            Check { name: "m = (w - t')(d + 1)", lhs: m, rhs: (w - tp) * (d + 1) },
            Check { name: "n - k = d(w - t - t')", lhs: n - k, rhs: d * (w - t - tp) },
            Check { name: "n = (n - k)d", lhs: n, rhs: (n - k) * d },
        ],
        derived_w,
    }
}

/// Uniform subspace of the given dimension, optionally forced to contain 1.
pub fn sample_subspace<R: Rng + ?Sized>(ext: &ExtField, dim: usize, contains_one: bool, rng: &mut R) -> Result<Subspace> {
    if dim > ext.m() || (contains_one && dim == 0) {
        return Err(Error::Param(format!("cannot draw a {dim}-dimensional subspace of F_q^{}", ext.m())));
    }
    loop {
        let mut elems: Vec<FqmElem> = Vec::with_capacity(dim);
        if contains_one {
            elems.push(ext.one());
        }
        while elems.len() < dim {
            elems.push(ext.random(rng));
        }
        let s = Subspace::span(ext, &elems);
        if s.dim() == dim {
            return Ok(s);
        }
    }
}

/// Entries uniform in F, redrawn until they span F.
pub fn sample_homogeneous<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    f: &Subspace,
    rng: &mut R,
) -> Result<HomogeneousMatrix> {
    if rows * cols < f.dim() {
        return Err(Error::Param(format!("{rows}x{cols} entries cannot span dimension {}", f.dim())));
    }
    let ext = f.field();
    loop {
        let data: Vec<FqmElem> = (0..rows * cols).map(|_| f.random_element(rng)).collect();
        if support(ext, &data) == *f {
            let m = Matrix::new(rows, cols, data)?;
            return Ok(HomogeneousMatrix { m, f: f.clone() });
        }
    }
}

/// `sample_homogeneous` conditioned on [`HomogeneousMatrix::is_decodable`].
pub fn sample_decodable<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    f: &Subspace,
    rng: &mut R,
) -> Result<HomogeneousMatrix> {
    if rows * f.dim() < cols {
        return Err(Error::Param(format!(
            "{rows} rows of weight {} cannot exclude rational codewords of length {cols}",
            f.dim()
        )));
    }
    loop {
        let h = sample_homogeneous(rows, cols, f, rng)?;
        if h.is_decodable() {
            return Ok(h);
        }
    }
}

/// F_q-basis of {c : H·cᵀ = 0, every c_j ∈ S}.
pub fn codewords_in_subspace(ext: &ExtField, h: &MatFqm, s: &Subspace) -> Vec<Vec<FqmElem>> {
    let sys = support_system(ext, h, &s.basis_elems());
    sys.kernel(&ext.fq())
        .into_iter()
        .map(|lam| expand_coefficients(ext, &lam, &s.basis_elems(), h.cols()))
        .collect()
}

/// Matrix of the F_q-linear map λ ↦ H·eᵀ with e_j = Σ_l λ_{j,l} b_l,
/// column index j·|b| + l, row index i·m + digit.
fn support_system(ext: &ExtField, h: &MatFqm, b: &[FqmElem]) -> MatFq {
    let m = ext.m();
    let (rows, cols, w) = (h.rows(), h.cols(), b.len());
    let mut a = Matrix::filled(rows * m, cols * w, 0u32);
    for i in 0..rows {
        for j in 0..cols {
            let hij = h.get(i, j);
            if ext.is_zero(hij) {
                continue;
            }
            for (l, bl) in b.iter().enumerate() {
                let p = ext.mul(hij, bl);
                for (dgt, &c) in p.coeffs.iter().enumerate() {
                    a.set(i * m + dgt, j * w + l, c);
                }
            }
        }
    }
    a
}

fn expand_coefficients(ext: &ExtField, lam: &[u32], b: &[FqmElem], n: usize) -> Vec<FqmElem> {
    let w = b.len();
    (0..n)
        .map(|j| {
            b.iter().enumerate().fold(ext.zero(), |acc, (l, bl)| ext.add(&acc, &ext.scale(lam[j * w + l], bl)))
        })
        .collect()
}

/// Solves H·eᵀ = sᵀ with every e_j in ⟨b⟩. Returns the lexicographically
/// smallest solution and the dimension of the solution space.
fn solve_in_support(ext: &ExtField, h: &MatFqm, s: &[FqmElem], b: &[FqmElem]) -> Option<(Vec<FqmElem>, usize)> {
    let f = ext.fq();
    let n = h.cols();
    let sys = support_system(ext, h, b);
    let sol = sys.solve(&f, &flatten_digits(s))?;
    let order = significance_order(ext.m(), n);
    let to_sig = |v: &[FqmElem]| -> Vec<u32> {
        let d = flatten_digits(v);
        order.iter().map(|&i| d[i]).collect()
    };
    let x0 = to_sig(&expand_coefficients(ext, &sol.x, b, n));
    let ker: Vec<Vec<u32>> = sol.kernel.iter().map(|k| to_sig(&expand_coefficients(ext, k, b, n))).collect();
    let best = lex_min_affine(&f, &x0, &ker);
    let mut digits = vec![0u32; best.len()];
    for (pos, &i) in order.iter().enumerate() {
        digits[i] = best[pos];
    }
    Some((unflatten_digits(ext, &digits), sol.kernel.len()))
}

/// ⋂_i f_i^{-1}·W over a basis of F: the largest V with F·V ⊆ W.
pub fn quotient_space(f: &Subspace, w: &Subspace) -> Subspace {
    let ext = f.field();
    let mut v = Subspace::full(ext);
    for fi in f.basis_elems() {
        let inv = ext.inv(&fi).expect("basis vectors are nonzero");
        v = v.intersect(&w.scale(&inv));
    }
    v
}

const SUPPORT_DRAWS: usize = 8;

/// For F = f_1·⟨1, g⟩ and W a hyperplane-deficient subspace of F·V with
/// dim F·V = 2·dim V, (W + gW) ∩ (W + g^{-1}W) recovers F·V generically.
/// Returns the completion only when it has dimension `target`.
fn complete_product(f: &Subspace, w: &Subspace, target: usize) -> Option<Subspace> {
    if f.dim() != 2 || w.dim() == 0 || w.dim() >= target {
        return None;
    }
    let ext = f.field();
    let b = f.basis_elems();
    let g = ext.mul(&b[1], &ext.inv(&b[0]).ok()?);
    let g_inv = ext.inv(&g).ok()?;
    let up = w.sum(&w.scale(&g));
    let down = w.sum(&w.scale(&g_inv));
    let c = up.intersect(&down);
    (c.dim() == target && w.is_subspace_of(&c)).then_some(c)
}

/// Finds e with H·eᵀ = sᵀ, |e| = target_w and T ⊆ support(e).
///
/// W = support(s) + F·T is padded with random elements to dimension
/// d·target_w; V* = {x : F·x ⊆ W} then contains every admissible support.
/// A support E ⊇ T of dimension target_w is drawn inside V* with F·E = W,
/// and the linear system in the coordinates of e over E is solved,
/// keeping the lexicographically smallest solution.
pub fn lrpc_decode<R: Rng + ?Sized>(
    h: &HomogeneousMatrix,
    s: &[FqmElem],
    t: &Subspace,
    target_w: usize,
    rng: &mut R,
) -> Result<Vec<FqmElem>> {
    let ext = h.f.field().clone();
    let d = h.d();
    if s.len() != h.m.rows() {
        return Err(Error::Shape(format!("syndrome of length {} for {} rows", s.len(), h.m.rows())));
    }
    let product_dim = d * target_w;
    if product_dim > ext.m() || t.dim() > target_w {
        return Err(Error::Retryable(format!("no support of rank {target_w} fits")));
    }
    let mut w = support(&ext, s).sum(&subspace_product(&h.f, t));
    if w.dim() > product_dim {
        return Err(Error::Retryable(format!("syndrome space has dimension {} > {product_dim}", w.dim())));
    }
    if let Some(c) = complete_product(&h.f, &w, product_dim) {
        w = c;
    }
    while w.dim() < product_dim {
        w = w.sum(&Subspace::span(&ext, &[ext.random(rng)]));
    }
    let vstar = quotient_space(&h.f, &w);
    if vstar.dim() < target_w {
        return Err(Error::Retryable(format!("intersection has dimension {} < {target_w}", vstar.dim())));
    }
    debug_assert!(t.is_subspace_of(&vstar));
    let mut e_space = None;
    for _ in 0..SUPPORT_DRAWS {
        let mut cand = t.clone();
        while cand.dim() < target_w {
            cand = cand.sum(&Subspace::span(&ext, &[vstar.random_element(rng)]));
        }
        if subspace_product(&h.f, &cand).dim() == product_dim {
            e_space = Some(cand);
            break;
        }
        if vstar.dim() == target_w {
            break;
        }
    }
    let e_space = e_space.ok_or_else(|| Error::Retryable("no support with full product dimension".into()))?;
    let (e, _) = solve_in_support(&ext, &h.m, s, &e_space.basis_elems())
        .ok_or_else(|| Error::Retryable("support system inconsistent".into()))?;
    let ok = h.m.mul_vec(&ext.fqm(), &e) == s
        && support(&ext, &e).dim() == target_w
        && t.is_subspace_of(&support(&ext, &e));
    if ok {
        Ok(e)
    } else {
        Err(Error::Retryable("solution misses the target rank or T".into()))
    }
}

/// Recovers the unique low-rank e with H·eᵀ = sᵀ.
///
/// With W = support(s) the candidate support V* = {x : F·x ⊆ W} contains
/// support(e) whenever W = F·support(e). The system over V* is solved and
/// accepted only when its solution is unique.
pub fn lrpc_decode_unique(h: &HomogeneousMatrix, s: &[FqmElem]) -> Result<Vec<FqmElem>> {
    let ext = h.f.field().clone();
    if s.len() != h.m.rows() {
        return Err(Error::Shape(format!("syndrome of length {} for {} rows", s.len(), h.m.rows())));
    }
    let w = support(&ext, s);
    if w.dim() == 0 {
        return Ok(vec![ext.zero(); h.m.cols()]);
    }
    let mut vstar = quotient_space(&h.f, &w);
    if h.d() == 2 && w.dim() % 2 == 1 {
        // products F·V have even dimension: W lost one direction
        if let Some(c) = complete_product(&h.f, &w, w.dim() + 1) {
            let v = quotient_space(&h.f, &c);
            if v.dim() > vstar.dim() {
                vstar = v;
            }
        }
    }
    if vstar.dim() == 0 {
        return Err(Error::Retryable("empty candidate support".into()));
    }
    let (e, ambiguity) = solve_in_support(&ext, &h.m, s, &vstar.basis_elems())
        .ok_or_else(|| Error::Retryable("candidate support system inconsistent".into()))?;
    if ambiguity > 0 {
        return Err(Error::Retryable(format!("{ambiguity}-dimensional family of solutions")));
    }
    Ok(e)
}
