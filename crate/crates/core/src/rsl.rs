//! Rank Support Learning: instances (A, A·E) with E homogeneous over a
//! secret F, the F_q-code C = {A·E·eᵀ : e ∈ F_q^N}, and recovery of F from
//! its low-rank words.

use num_bigint::BigUint;
use num_traits::One;
use rand::seq::index::sample;
use rand::Rng;

use crate::algebra::{ExtField, FqmElem, MatFq, MatFqm, Matrix};
use crate::bilinear::{apply_rsl_fixings, model_rank_w, solve_enumerate, solve_linearize};
use crate::codec::{read_fq, read_fqm, write_fq, write_fqm, Document};
use crate::error::{Error, Result};
use crate::lrpc::{sample_homogeneous, sample_subspace, HomogeneousMatrix};
use crate::rank_metric::{from_mat_expand, gv_distance_exact, mat_expand, rank_weight, support, Subspace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RslParams {
    pub n: usize,
    pub k: usize,
    /// Number of columns of E.
    pub big_n: usize,
    pub w: usize,
    pub m: usize,
    /// q = 2^a.
    pub a: u32,
}

impl RslParams {
    pub fn validate(&self) -> Result<()> {
        if self.k >= self.n || self.w == 0 || self.w > self.m || self.big_n == 0 {
            return Err(Error::Param(format!("need k < n and 1 ≤ w ≤ m, got {self:?}")));
        }
        if self.big_n > self.m * (self.n - self.k) {
            return Err(Error::Param(format!("N = {} exceeds m(n − k)", self.big_n)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RslInstance {
    pub ext: ExtField,
    pub params: RslParams,
    /// (n−k)×n with A = [I | A′].
    pub a: MatFqm,
    /// A·E, (n−k)×N.
    pub b: MatFqm,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RslSecret {
    /// n×N, every entry in F, entries spanning F.
    pub e: HomogeneousMatrix,
    /// Instances discarded as degenerate before this one.
    pub regenerated: usize,
}

impl RslSecret {
    pub fn f(&self) -> &Subspace {
        &self.e.f
    }
}

/// N − wk, saturating at zero.
pub fn theorem_bound(p: &RslParams) -> usize {
    p.big_n.saturating_sub(p.w * p.k)
}

pub(crate) fn params_doc(doc: Document, p: &RslParams) -> Document {
    doc.field("n", p.n).field("k", p.k).field("N", p.big_n).field("w", p.w).field("m", p.m).field("a", p.a)
}

pub(crate) fn params_from(doc: &Document) -> Result<RslParams> {
    let p = RslParams {
        n: doc.get_usize("n")?,
        k: doc.get_usize("k")?,
        big_n: doc.get_usize("N")?,
        w: doc.get_usize("w")?,
        m: doc.get_usize("m")?,
        a: doc.get_usize("a")? as u32,
    };
    p.validate()?;
    Ok(p)
}

impl RslInstance {
    pub fn to_text(&self) -> String {
        params_doc(Document::new("RSL", "instance"), &self.params)
            .block(write_fqm(&self.ext, &self.a))
            .block(write_fqm(&self.ext, &self.b))
            .render()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let doc = Document::parse(text)?;
        doc.expect("RSL", "instance", 2)?;
        let params = params_from(&doc)?;
        let ext = ExtField::new(params.a, params.m)?;
        let a = read_fqm(&ext, &doc.blocks[0])?;
        let b = read_fqm(&ext, &doc.blocks[1])?;
        let (r, n, nn) = (params.n - params.k, params.n, params.big_n);
        if (a.rows(), a.cols(), b.rows(), b.cols()) != (r, n, r, nn) {
            return Err(Error::Parse("instance matrices do not match the parameters".into()));
        }
        Ok(RslInstance { ext, params, a, b })
    }
}

impl RslSecret {
    pub fn to_text(&self, inst: &RslInstance) -> String {
        params_doc(Document::new("RSL", "secret"), &inst.params)
            .field("regenerated", self.regenerated)
            .block(write_fq(&inst.ext, self.e.f.basis()))
            .block(write_fqm(&inst.ext, &self.e.m))
            .render()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let doc = Document::parse(text)?;
        doc.expect("RSL", "secret", 2)?;
        let params = params_from(&doc)?;
        let ext = ExtField::new(params.a, params.m)?;
        let f = Subspace::from_coeff_rows(&ext, read_fq(&ext, &doc.blocks[0])?);
        let e = HomogeneousMatrix::new(read_fqm(&ext, &doc.blocks[1])?, f).map_err(|e| Error::Parse(e.to_string()))?;
        Ok(RslSecret { e, regenerated: doc.get_usize("regenerated")? })
    }
}

/// Row-reduces a full-rank A to [I | A′]; None if the leading block is
/// singular.
fn systematic(ext: &ExtField, a: &MatFqm) -> Option<MatFqm> {
    let fqm = ext.fqm();
    let r = a.rows();
    let lead: Vec<usize> = (0..r).collect();
    let inv = a.select_cols(&lead).inverse(&fqm)?;
    Some(inv.mul(&fqm, a))
}

/// Draws an instance, regenerating while dim C^Mat < N.
pub fn gen_instance<R: Rng + ?Sized>(params: &RslParams, rng: &mut R) -> Result<(RslInstance, RslSecret)> {
    params.validate()?;
    let ext = ExtField::new(params.a, params.m)?;
    let fqm = ext.fqm();
    let r = params.n - params.k;
    let mut regenerated = 0;
    loop {
        let f = sample_subspace(&ext, params.w, false, rng)?;
        let e = sample_homogeneous(params.n, params.big_n, &f, rng)?;
        let Some(a) = systematic(&ext, &Matrix::random_full_rank(&fqm, r, params.n, rng)) else {
            regenerated += 1;
            continue;
        };
        let b = a.mul(&fqm, &e.m);
        let inst = RslInstance { ext: ext.clone(), params: *params, a, b };
        if build_code(&inst).is_ok() {
            return Ok((inst, RslSecret { e, regenerated }));
        }
        regenerated += 1;
    }
}

/// C as an F_q-space and as a matrix code.
#[derive(Clone, Debug)]
pub struct RslCode {
    /// The N columns of B, i.e. the rows of Bᵀ.
    pub gens: Vec<Vec<FqmElem>>,
    /// Annihilator of {flatten(mat_expand(c))}, flattening index i·(n−k) + j.
    pub parity: MatFq,
}

pub fn build_code(inst: &RslInstance) -> Result<RslCode> {
    let ext = &inst.ext;
    let f = ext.fq();
    let r = inst.b.rows();
    let gens: Vec<Vec<FqmElem>> = (0..inst.b.cols()).map(|j| inst.b.col(j)).collect();
    let flat = Matrix::from_rows(gens.iter().map(|c| mat_expand(ext, c).data().to_vec()).collect(), ext.m() * r);
    let dim = flat.rank(&f);
    if dim != gens.len() {
        return Err(Error::Anomaly(format!("dim C^Mat = {dim} < N = {}", gens.len())));
    }
    Ok(RslCode { gens, parity: Matrix::from_rows(flat.kernel(&f), ext.m() * r) })
}

/// c = Σ e_j g_j.
pub fn combine(ext: &ExtField, gens: &[Vec<FqmElem>], e: &[u32]) -> Vec<FqmElem> {
    let len = gens.first().map_or(0, Vec::len);
    let mut c = vec![ext.zero(); len];
    for (g, &ej) in gens.iter().zip(e) {
        if ej != 0 {
            for (ci, gi) in c.iter_mut().zip(g) {
                *ci = ext.add(ci, &ext.scale(ej, gi));
            }
        }
    }
    c
}

/// {e ∈ F_q^N : E₂·eᵀ = 0} with E₂ the last k rows of E.
pub fn e2_kernel(inst: &RslInstance, secret: &RslSecret) -> Vec<Vec<u32>> {
    let ext = &inst.ext;
    let (m, r, nn) = (ext.m(), inst.params.n - inst.params.k, inst.params.big_n);
    let k = inst.params.k;
    let mut sys = Matrix::filled(k * m, nn, 0u32);
    for i in 0..k {
        for j in 0..nn {
            for (d, &c) in secret.e.m.get(r + i, j).coeffs.iter().enumerate() {
                sys.set(i * m + d, j, c);
            }
        }
    }
    sys.kernel(&ext.fq())
}

/// Coefficient vectors of C ∩ S^{n−k}: {e : every (B·eᵀ)_i ∈ S}.
pub fn subcode_in(inst: &RslInstance, s: &Subspace) -> Vec<Vec<u32>> {
    let ext = &inst.ext;
    let f = ext.fq();
    let (r, nn) = (inst.b.rows(), inst.b.cols());
    let ann = s.basis().kernel(&f);
    let mut sys = Matrix::filled(r * ann.len(), nn, 0u32);
    for i in 0..r {
        for (t, a) in ann.iter().enumerate() {
            for j in 0..nn {
                let c = inst.b.get(i, j).coeffs.iter().zip(a).fold(0u32, |acc, (&x, &y)| acc ^ ext.fq_mul(x, y));
                sys.set(i * ann.len() + t, j, c);
            }
        }
    }
    sys.kernel(&f)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RslStrategy {
    Exhaustive,
    Bilinear,
}

impl std::str::FromStr for RslStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(RslStrategy::Exhaustive),
            "bilinear" => Ok(RslStrategy::Bilinear),
            _ => Err(Error::Param(format!("unknown strategy {s:?}"))),
        }
    }
}

pub const EXHAUSTIVE_CAP_LOG2: u32 = 22;
pub const OUTER_RETRIES: usize = 16;

#[derive(Clone, Debug)]
pub struct RslOutcome {
    /// Span of the supports of every low-rank word found.
    pub f: Subspace,
    pub words: usize,
    pub attempts: usize,
}

/// Span of the supports of all nonzero c ∈ C with |c| ≤ w. Walks e in
/// mixed radix q; moving digit j from v to v′ adds (v ⊕ v′)·g_j.
fn exhaustive(inst: &RslInstance, code: &RslCode, threads: usize) -> Result<RslOutcome> {
    let ext = &inst.ext;
    let (q, nn, w) = (ext.q(), code.gens.len(), inst.params.w);
    let bits = ext.a() * nn as u32;
    if bits > EXHAUSTIVE_CAP_LOG2 {
        return Err(Error::Budget(format!("q^N = 2^{bits} exceeds 2^{EXHAUSTIVE_CAP_LOG2}")));
    }
    let total = 1u64 << bits;
    let digits_of = |mut x: u64| -> Vec<u32> {
        (0..nn)
            .map(|_| {
                let d = (x % q) as u32;
                x /= q;
                d
            })
            .collect()
    };
    let run = |lo: u64, hi: u64| -> (Subspace, usize) {
        let mut e = digits_of(lo);
        let mut c = combine(ext, &code.gens, &e);
        let mut span = Subspace::zero(ext);
        let mut words = 0;
        for idx in lo..hi {
            if idx > lo {
                let mut j = 0;
                loop {
                    let old = e[j];
                    e[j] = if u64::from(old) + 1 == q { 0 } else { old + 1 };
                    let delta = old ^ e[j];
                    for (ci, gi) in c.iter_mut().zip(&code.gens[j]) {
                        *ci = ext.add(ci, &ext.scale(delta, gi));
                    }
                    if e[j] != 0 {
                        break;
                    }
                    j += 1;
                }
            }
            if idx != 0 && rank_weight(ext, &c) <= w {
                words += 1;
                span = span.sum(&support(ext, &c));
            }
        }
        (span, words)
    };
    let threads = threads.max(1) as u64;
    let chunk = total.div_ceil(threads);
    let parts: Vec<(Subspace, usize)> = if threads == 1 {
        vec![run(0, total)]
    } else {
        std::thread::scope(|sc| {
            let hs: Vec<_> = (0..threads)
                .map(|t| {
                    let (lo, hi) = ((t * chunk).min(total), ((t + 1) * chunk).min(total));
                    let run = &run;
                    sc.spawn(move || run(lo, hi))
                })
                .collect();
            hs.into_iter().map(|h| h.join().expect("enumeration worker panicked")).collect()
        })
    };
    let (f, words) =
        parts.into_iter().fold((Subspace::zero(ext), 0), |(s, n), (ps, pn)| (s.sum(&ps), n + pn));
    if words == 0 {
        return Err(Error::Exhausted("C has no nonzero word of rank ≤ w".into()));
    }
    Ok(RslOutcome { f, words, attempts: 1 })
}

fn bilinear<R: Rng + ?Sized>(inst: &RslInstance, code: &RslCode, rng: &mut R, threads: usize) -> Result<RslOutcome> {
    let ext = &inst.ext;
    let p = &inst.params;
    let (m, r, w) = (ext.m(), p.n - p.k, p.w);
    let base = model_rank_w(ext, &code.parity, m, r, w)?;
    let zeros = theorem_bound(p).saturating_sub(1).min(r * w - 1);
    let free_x_bits = ext.a() as usize * (m - w) * w;
    let mut span = Subspace::zero(ext);
    let mut words = 0;
    for attempt in 1..=OUTER_RETRIES {
        let x_cols = sample(rng, m, w).into_vec();
        let picks = sample(rng, r * w, zeros + 1).into_vec();
        let pairs: Vec<(usize, usize)> = picks.iter().map(|&v| (v / w, v % w)).collect();
        let sys = apply_rsl_fixings(base.clone(), &x_cols, &pairs[..zeros], pairs[zeros])?;
        let res = if free_x_bits <= 20 {
            solve_enumerate(&sys, 1 << 24, threads)?
        } else {
            match solve_linearize(&sys, 4) {
                Ok(res) => res,
                Err(Error::Exhausted(_)) | Err(Error::Budget(_)) => solve_enumerate(&sys, 1 << 24, threads)?,
                Err(e) => return Err(e),
            }
        };
        for (x, y) in &res.solutions {
            let mat = sys.reconstruct(x, y);
            let c = from_mat_expand(ext, &mat)?;
            if rank_weight(ext, &c) > w {
                return Err(Error::Anomaly("solution exceeds the target rank".into()));
            }
            words += 1;
            span = span.sum(&support(ext, &c));
        }
        if span.dim() >= w {
            return Ok(RslOutcome { f: span, words, attempts: attempt });
        }
    }
    if words == 0 {
        return Err(Error::Exhausted(format!("no low-rank word after {OUTER_RETRIES} fixing draws")));
    }
    Ok(RslOutcome { f: span, words, attempts: OUTER_RETRIES })
}

pub fn attack<R: Rng + ?Sized>(
    inst: &RslInstance,
    strategy: RslStrategy,
    rng: &mut R,
    threads: usize,
) -> Result<RslOutcome> {
    let code = build_code(inst)?;
    match strategy {
        RslStrategy::Exhaustive => exhaustive(inst, &code, threads),
        RslStrategy::Bilinear => bilinear(inst, &code, rng, threads),
    }
}

/// IBE parameters; the signing code is [n_sgn, k_sgn] and C_dec is
/// [n_dec, k_dec], both over F_{q^m} with q = 2^a.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IbeParams {
    pub n_sgn: usize,
    pub k_sgn: usize,
    pub m: usize,
    pub a: u32,
    pub n_dec: usize,
    pub k_dec: usize,
    pub w_sgn: usize,
    pub w_dec: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub name: &'static str,
    pub holds: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IbeReport {
    pub gv_sgn: usize,
    pub gv_dec: usize,
    pub signature: Constraint,
    pub decoding: Constraint,
    pub attack: Constraint,
    /// 1 − w_sgn·w_dec / min(m, n_dec).
    pub prop1_slack: f64,
    /// w_dec = 0: no noise, the scheme is not an encryption.
    pub degenerate: bool,
}

impl IbeReport {
    pub fn constraints(&self) -> [&Constraint; 3] {
        [&self.signature, &self.decoding, &self.attack]
    }

    /// Constraints needed for the scheme to work at all.
    pub fn usable(&self) -> bool {
        self.signature.holds && self.decoding.holds && !self.degenerate
    }
}

pub fn ibe_param_check(p: &IbeParams) -> Result<IbeReport> {
    let q = BigUint::one() << p.a;
    let gv_sgn = gv_distance_exact(&q, p.m, p.n_sgn, p.k_sgn)?;
    let gv_dec = gv_distance_exact(&q, p.m, p.n_dec, p.k_dec)?;
    Ok(evaluate_constraints(p, gv_sgn, gv_dec))
}

/// The check with w_sgn set to its lower bound gv(q, m, n_sgn, k_sgn).
pub fn ibe_param_check_at_gv(p: &IbeParams) -> Result<(IbeParams, IbeReport)> {
    let q = BigUint::one() << p.a;
    let gv_sgn = gv_distance_exact(&q, p.m, p.n_sgn, p.k_sgn)?;
    let gv_dec = gv_distance_exact(&q, p.m, p.n_dec, p.k_dec)?;
    let p = IbeParams { w_sgn: gv_sgn, ..*p };
    Ok((p, evaluate_constraints(&p, gv_sgn, gv_dec)))
}

fn evaluate_constraints(p: &IbeParams, gv_sgn: usize, gv_dec: usize) -> IbeReport {
    let r_sgn = p.n_sgn - p.k_sgn;
    let upper_num = p.m * r_sgn;
    let upper_den = p.m.max(p.n_sgn);
    // w ≤ num/den compared exactly as w·den ≤ num
    let sig_ok = gv_sgn <= p.w_sgn && p.w_sgn * upper_den <= upper_num;
    let prod = p.w_sgn * p.w_dec;
    let attack_lhs = p.w_dec * r_sgn;
    IbeReport {
        gv_sgn,
        gv_dec,
        signature: Constraint {
            name: "signature constraint",
            holds: sig_ok,
            detail: format!("{gv_sgn} <= {} <= {upper_num}/{upper_den}", p.w_sgn),
        },
        decoding: Constraint {
            name: "decoding works",
            holds: prod <= gv_dec,
            detail: format!("{} * {} = {prod} <= {gv_dec}", p.w_sgn, p.w_dec),
        },
        attack: Constraint {
            name: "for avoiding our attack",
            holds: attack_lhs >= p.n_dec && p.w_dec > 0,
            detail: format!("{} * {r_sgn} = {attack_lhs} >= {}", p.w_dec, p.n_dec),
        },
        prop1_slack: 1.0 - prod as f64 / p.m.min(p.n_dec) as f64,
        degenerate: p.w_dec == 0,
    }
}
