//! Key recovery on RankSign with d = 2 and forging with the recovered key.
//!
//! Pipeline: project C_pub onto the first m − 1 basis coordinates, find a
//! rank-1 matrix in the projection, lift it to a codeword c whose support
//! F′ = ⟨1, z⟩ sits inside the secret F, collect C′_pub = C_pub ∩ F′^{n+t},
//! and rebuild an LRPC decomposition S·H′·P = diag(I_t, R) of the code
//! spanned by C′_pub, which is enough to decode like the key owner.

use rand::seq::index::sample;
use rand::Rng;

use crate::algebra::{ExtField, FqmElem, MatFq, MatFqm, Matrix};
use crate::bilinear::{
    apply_ranksign_fixings_at, model_rank_w, solve_enumerate, solve_linearize, Rank1Positions,
};
use crate::codec::{read_fq, read_fqm, write_fq, write_fqm, Document};
use crate::error::{Error, Result};
use crate::lrpc::{codewords_in_subspace, lrpc_decode, HomogeneousMatrix, LrpcParams};
use crate::rank_metric::{matp_expand, rank_weight, support, Subspace};
use crate::ranksign::{ext_for, hash_to_syndrome, params_from, PublicKey, Signature, MESSAGE_TAG, SIGN_RETRIES};

pub const OUTER_RETRIES: usize = 16;
/// The subspace oracle enumerates (q^{m−1} − 1)/(q − 1) candidates.
pub const ENUMERATION_LIMIT: u64 = 1 << 20;

/// Parity check of {flatten(matp_expand(c)) : c ∈ C_pub} over F_q, with
/// flattening index i·(n+t) + j.
#[derive(Clone, Debug)]
pub struct ProjectedCode {
    pub parity: MatFq,
    pub rows: usize,
    pub cols: usize,
    /// F_q basis β_u·g_v of C_pub.
    pub basis: Vec<Vec<FqmElem>>,
    /// Flattened projections of `basis`, one per row.
    pub images: MatFq,
}

fn flatten(m: &MatFq) -> Vec<u32> {
    m.data().to_vec()
}

/// F_{q^m} generator matrix of the right kernel of `h`.
fn generator(ext: &ExtField, h: &MatFqm) -> MatFqm {
    Matrix::from_rows(h.kernel(&ext.fqm()), h.cols())
}

pub fn build_proj_code(pk: &PublicKey) -> Result<ProjectedCode> {
    let ext = &pk.ext;
    let (m, len) = (ext.m(), pk.h_pub.cols());
    let g = generator(ext, &pk.h_pub);
    let mut basis = Vec::with_capacity(g.rows() * m);
    for v in 0..g.rows() {
        for u in 1..=m {
            let b = ext.basis_elem(u);
            basis.push(g.row(v).iter().map(|x| ext.mul(&b, x)).collect::<Vec<_>>());
        }
    }
    let images = Matrix::from_rows(basis.iter().map(|c| flatten(&matp_expand(ext, c))).collect(), (m - 1) * len);
    let f = ext.fq();
    if images.rank(&f) != basis.len() {
        return Err(Error::Anomaly(format!(
            "projected code has dimension {} < {}",
            images.rank(&f),
            basis.len()
        )));
    }
    let parity = Matrix::from_rows(images.kernel(&f), (m - 1) * len);
    Ok(ProjectedCode { parity, rows: m - 1, cols: len, basis, images })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rank1Strategy {
    Bilinear,
    Enumerate,
}

impl std::str::FromStr for Rank1Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bilinear" => Ok(Rank1Strategy::Bilinear),
            "enumerate" => Ok(Rank1Strategy::Enumerate),
            _ => Err(Error::Param(format!("unknown strategy {s:?}"))),
        }
    }
}

/// Canonical representatives of z ∈ F_{q^m} \ F_q under z ~ a·z + b: the
/// β_m digit is 0 and the highest nonzero digit is 1, which is the packed
/// minimum of each orbit. Indexed by the digits below the leading one.
fn canonical_z(ext: &ExtField, lead: usize, low: u64) -> FqmElem {
    let (a, m) = (ext.a(), ext.m());
    let mut coeffs = vec![0u32; m];
    coeffs[lead] = 1;
    for (i, c) in coeffs.iter_mut().enumerate().take(lead) {
        *c = ((low >> (i as u32 * a)) & (ext.q() - 1)) as u32;
    }
    FqmElem { coeffs }
}

/// Every ⟨1, z⟩ (z canonical) that carries a nonzero codeword of C_pub,
/// with an F_q basis of the codewords supported there.
pub fn rank2_supports(pk: &PublicKey, threads: usize) -> Result<Vec<(Subspace, Vec<Vec<FqmElem>>)>> {
    let ext = &pk.ext;
    let (q, m) = (ext.q(), ext.m());
    let total: u64 = (0..m - 1).map(|lead| q.pow(lead as u32)).sum();
    if total > ENUMERATION_LIMIT {
        return Err(Error::Budget(format!("{total} candidate supports exceed {ENUMERATION_LIMIT}")));
    }
    let jobs: Vec<(usize, u64)> =
        (0..m - 1).flat_map(|lead| (0..q.pow(lead as u32)).map(move |low| (lead, low))).collect();
    let test = |&(lead, low): &(usize, u64)| {
        let z = canonical_z(ext, lead, low);
        let s = Subspace::span(ext, &[ext.one(), z]);
        let words = codewords_in_subspace(ext, &pk.h_pub, &s);
        (!words.is_empty()).then_some((s, words))
    };
    let threads = threads.max(1);
    let found: Vec<_> = if threads == 1 {
        jobs.iter().filter_map(test).collect()
    } else {
        let chunk = jobs.len().div_ceil(threads);
        std::thread::scope(|sc| {
            let hs: Vec<_> =
                jobs.chunks(chunk.max(1)).map(|part| sc.spawn(move || part.iter().filter_map(test).collect::<Vec<_>>())).collect();
            hs.into_iter().flat_map(|h| h.join().expect("support worker panicked")).collect()
        })
    };
    Ok(found)
}

/// Rank-1 matrices of the projected code, from either strategy.
pub fn find_rank1<R: Rng + ?Sized>(
    pk: &PublicKey,
    proj: &ProjectedCode,
    strategy: Rank1Strategy,
    rng: &mut R,
    threads: usize,
) -> Result<Vec<MatFq>> {
    let ext = &pk.ext;
    let f = ext.fq();
    let words: Vec<MatFq> = match strategy {
        Rank1Strategy::Enumerate => rank2_supports(pk, threads)?
            .into_iter()
            .flat_map(|(_, ws)| ws.into_iter().map(|c| matp_expand(ext, &c)))
            .collect(),
        Rank1Strategy::Bilinear => find_rank1_bilinear(pk, proj, rng, threads)?,
    };
    let words: Vec<MatFq> = words.into_iter().filter(|w| w.rank(&f) == 1).collect();
    if words.is_empty() {
        return Err(Error::Anomaly("no rank-1 word in the projected code".into()));
    }
    Ok(words)
}

fn random_positions<R: Rng + ?Sized>(p: &LrpcParams, rows: usize, cols: usize, rng: &mut R) -> Rank1Positions {
    let nd = p.n / p.d;
    let ys = sample(rng, cols, nd).into_vec();
    let xs = sample(rng, rows, 2.min(rows)).into_vec();
    Rank1Positions {
        x_one: xs[0],
        y_zero: ys[..nd - 1].to_vec(),
        y_one: ys[nd - 1],
        x_quad: *xs.get(1).unwrap_or(&xs[0]),
    }
}

fn find_rank1_bilinear<R: Rng + ?Sized>(
    pk: &PublicKey,
    proj: &ProjectedCode,
    rng: &mut R,
    threads: usize,
) -> Result<Vec<MatFq>> {
    let ext = &pk.ext;
    let base = model_rank_w(ext, &proj.parity, proj.rows, proj.cols, 1)?;
    let q = ext.q() as u32;
    for _ in 0..OUTER_RETRIES {
        let pos = random_positions(&pk.params, proj.rows, proj.cols, rng);
        // pairs {2c, 2c+1} partition F_q, so one of them holds the true x value
        let pairs: Vec<Option<(u32, u32)>> =
            if q > 2 && proj.rows > 1 { (0..q / 2).map(|c| Some((2 * c, 2 * c + 1))).collect() } else { vec![None] };
        let mut words = Vec::new();
        let mut undetermined = false;
        for ab in pairs {
            let sys = apply_ranksign_fixings_at(base.clone(), &pos, ab)?;
            match solve_linearize(&sys, 4) {
                Ok(res) => words.extend(res.solutions.iter().map(|(x, y)| sys.reconstruct(x, y))),
                Err(Error::Exhausted(_)) | Err(Error::Budget(_)) => {
                    undetermined = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if undetermined {
            // over the algebraic closure the fixed system keeps positive-dimensional
            // components, so fall back to enumerating its smaller side, which is
            // complete without the quadratic restriction
            let sys = apply_ranksign_fixings_at(base.clone(), &pos, None)?;
            let res = solve_enumerate(&sys, 1 << 24, threads)?;
            words = res.solutions.iter().map(|(x, y)| sys.reconstruct(x, y)).collect();
        }
        if !words.is_empty() {
            return Ok(words);
        }
    }
    Err(Error::Exhausted(format!("no rank-1 word after {OUTER_RETRIES} fixing draws")))
}

/// The unique c ∈ C_pub with matp_expand(c) = M.
pub fn lift(pk: &PublicKey, proj: &ProjectedCode, m: &MatFq) -> Result<Vec<FqmElem>> {
    let ext = &pk.ext;
    let f = ext.fq();
    if (m.rows(), m.cols()) != (proj.rows, proj.cols) {
        return Err(Error::Shape(format!("{}x{} word for a {}x{} projection", m.rows(), m.cols(), proj.rows, proj.cols)));
    }
    let sol = proj
        .images
        .transpose()
        .solve(&f, &flatten(m))
        .ok_or_else(|| Error::Anomaly("matrix has no preimage in C_pub".into()))?;
    debug_assert!(sol.kernel.is_empty(), "projection is injective");
    let mut c = vec![ext.zero(); proj.cols];
    for (lam, b) in sol.x.iter().zip(&proj.basis) {
        if *lam != 0 {
            for (cj, bj) in c.iter_mut().zip(b) {
                *cj = ext.add(cj, &ext.scale(*lam, bj));
            }
        }
    }
    Ok(c)
}

/// F_q basis of C′_pub = {c ∈ C_pub : every c_j ∈ F′}.
pub fn compute_cpub_prime(pk: &PublicKey, f_prime: &Subspace) -> Vec<Vec<FqmElem>> {
    codewords_in_subspace(&pk.ext, &pk.h_pub, f_prime)
}

/// Which structural assumptions held while assembling a key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Manifest {
    pub cpub_prime_dim: usize,
    /// dim over F_{q^m} of the span of C′_pub.
    pub extension_dim: usize,
    pub dim_d: usize,
    pub dim_d_prime: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForgeKey {
    pub ext: ExtField,
    pub params: LrpcParams,
    /// Parity check of F_{q^m} ⊗ C′_pub, (n+t−k)×(n+t).
    pub h_prime: MatFqm,
    pub s: MatFqm,
    pub p: MatFq,
    pub r: HomogeneousMatrix,
    pub manifest: Manifest,
}

impl ForgeKey {
    /// S·H′·P, which equals diag(I_t, R) for a valid key.
    pub fn normal_form(&self) -> MatFqm {
        let fqm = self.ext.fqm();
        self.s.mul(&fqm, &self.h_prime).mul(&fqm, &self.ext.embed(&self.p))
    }

    pub fn block_diag(&self) -> MatFqm {
        let t = self.params.t;
        let (rows, cols) = (self.h_prime.rows(), self.h_prime.cols());
        let mut out = Matrix::filled(rows, cols, self.ext.zero());
        for i in 0..t {
            out.set(i, i, self.ext.one());
        }
        for i in 0..self.r.m.rows() {
            for j in 0..self.r.m.cols() {
                out.set(t + i, t + j, self.r.m.get(i, j).clone());
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let p = &self.params;
        Document::new("RANKSIGN", "forge-key")
            .field("n", p.n)
            .field("k", p.k)
            .field("m", p.m)
            .field("d", p.d)
            .field("t", p.t)
            .field("t'", p.t_prime)
            .field("w", p.w)
            .field("a", p.a)
            .field("assumption-1", format!("ok dim={}", self.manifest.extension_dim))
            .field("lemma-2", format!("ok dim_D={} dim_D'={}", self.manifest.dim_d, self.manifest.dim_d_prime))
            .field("assumption-2", "ok")
            .field("cpub-prime-dim", self.manifest.cpub_prime_dim)
            .block(write_fq(&self.ext, self.r.f.basis()))
            .block(write_fqm(&self.ext, &self.h_prime))
            .block(write_fqm(&self.ext, &self.s))
            .block(write_fq(&self.ext, &self.p))
            .block(write_fqm(&self.ext, &self.r.m))
            .render()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let doc = Document::parse(text)?;
        doc.expect("RANKSIGN", "forge-key", 5)?;
        let params = params_from(&doc)?;
        let ext = ext_for(&params)?;
        let num_after = |key: &str, tag: &str| -> Result<usize> {
            let v = doc.get(key)?;
            v.split_whitespace()
                .find_map(|t| t.strip_prefix(tag))
                .and_then(|x| x.parse().ok())
                .ok_or_else(|| Error::Parse(format!("field {key:?} lacks {tag}")))
        };
        let manifest = Manifest {
            cpub_prime_dim: doc.get_usize("cpub-prime-dim")?,
            extension_dim: num_after("assumption-1", "dim=")?,
            dim_d: num_after("lemma-2", "dim_D=")?,
            dim_d_prime: num_after("lemma-2", "dim_D'=")?,
        };
        let f = Subspace::from_coeff_rows(&ext, read_fq(&ext, &doc.blocks[0])?);
        let r = HomogeneousMatrix::new(read_fqm(&ext, &doc.blocks[4])?, f).map_err(|e| Error::Parse(e.to_string()))?;
        let fk = ForgeKey {
            h_prime: read_fqm(&ext, &doc.blocks[1])?,
            s: read_fqm(&ext, &doc.blocks[2])?,
            p: read_fq(&ext, &doc.blocks[3])?,
            ext,
            params,
            r,
            manifest,
        };
        if fk.normal_form() != fk.block_diag() {
            return Err(Error::Parse("forge key violates S·H′·P = diag(I_t, R)".into()));
        }
        Ok(fk)
    }
}

/// Builds (S, H′, P, R) from an F_q basis of C′_pub.
pub fn assemble_forge_key(pk: &PublicKey, cpub_prime: &[Vec<FqmElem>]) -> Result<ForgeKey> {
    let ext = &pk.ext;
    let (fq, fqm) = (ext.fq(), ext.fqm());
    let LrpcParams { n, k, d, t, .. } = pk.params;
    let len = n + t;
    if d != 2 {
        return Err(Error::Param(format!("the finishing step needs d = 2, not {d}")));
    }
    let g_prime = Matrix::from_rows(cpub_prime.to_vec(), len);
    let extension_dim = g_prime.rank(&fqm);
    if extension_dim != k {
        return Err(Error::Assumption(format!("Assumption 1: F_q^m-span of C'_pub has dimension {extension_dim} != {k}")));
    }
    let f = support(ext, g_prime.data());
    if f.dim() != 2 || !f.contains_one() {
        return Err(Error::Assumption(format!("C'_pub coefficients span a {}-dimensional space", f.dim())));
    }
    let dual_dim = len - k;
    let d_set = codewords_in_subspace(ext, &g_prime, &Subspace::span(ext, &[ext.one()]));
    let d_prime = codewords_in_subspace(ext, &g_prime, &f);
    if d_set.len() < t || d_prime.len() < n - k + 2 * t {
        return Err(Error::Assumption(format!(
            "Lemma 2 bounds: dim D = {} (need {t}), dim D' = {} (need {})",
            d_set.len(),
            d_prime.len(),
            n - k + 2 * t
        )));
    }
    // Assumption 2: t rational rows, completed greedily by rows supported on F
    let mut rational: Vec<Vec<FqmElem>> = Vec::new();
    for c in &d_set {
        if rational.len() == t {
            break;
        }
        let mut trial = rational.clone();
        trial.push(c.clone());
        if Matrix::from_rows(trial.clone(), len).rank(&fqm) == trial.len() {
            rational = trial;
        }
    }
    let mut rows = rational.clone();
    for c in &d_prime {
        if rows.len() == dual_dim {
            break;
        }
        let mut trial = rows.clone();
        trial.push(c.clone());
        if Matrix::from_rows(trial.clone(), len).rank(&fqm) == trial.len() {
            rows = trial;
        }
    }
    if rational.len() != t || rows.len() != dual_dim {
        return Err(Error::Assumption(format!(
            "Assumption 2: extracted {} rational and {} rank-2 rows of {dual_dim}",
            rational.len(),
            rows.len() - rational.len()
        )));
    }
    let h_prime = Matrix::from_rows(rows, len);
    // P = A^{-1} with A an F_q completion of the rational block, so that
    // the rational rows become [I_t | 0]
    let dm: Vec<Vec<u32>> = rational
        .iter()
        .map(|c| c.iter().map(|x| x.coeffs[ext.m() - 1]).collect())
        .collect();
    let mut a_rows = dm.clone();
    for j in 0..len {
        if a_rows.len() == len {
            break;
        }
        let mut e = vec![0u32; len];
        e[j] = 1;
        let mut trial = a_rows.clone();
        trial.push(e);
        if Matrix::from_rows(trial.clone(), len).rank(&fq) == trial.len() {
            a_rows = trial;
        }
    }
    let p = Matrix::from_rows(a_rows, len).inverse(&fq).ok_or_else(|| Error::Anomaly("completion is singular".into()))?;
    let hp = h_prime.mul(&fqm, &ext.embed(&p));
    // S clears the first t columns of the lower block
    let mut s = Matrix::identity(&fqm, dual_dim);
    for i in t..dual_dim {
        for c in 0..t {
            s.set(i, c, hp.get(i, c).clone());
        }
    }
    let r_rows: Vec<Vec<FqmElem>> = (t..dual_dim).map(|i| hp.row(i)[t..].to_vec()).collect();
    let r_mat = Matrix::from_rows(r_rows, n);
    let r = HomogeneousMatrix::new(r_mat, f)
        .map_err(|e| Error::Assumption(format!("R is not homogeneous of weight 2: {e}")))?;
    let fk = ForgeKey {
        ext: ext.clone(),
        params: pk.params,
        h_prime,
        s,
        p,
        r,
        manifest: Manifest {
            cpub_prime_dim: cpub_prime.len(),
            extension_dim,
            dim_d: d_set.len(),
            dim_d_prime: d_prime.len(),
        },
    };
    if fk.normal_form() != fk.block_diag() {
        return Err(Error::Anomaly("S·H′·P differs from diag(I_t, R)".into()));
    }
    Ok(fk)
}

fn forged_attempt<R: Rng + ?Sized>(fk: &ForgeKey, y_prime: &[FqmElem], rng: &mut R) -> Result<Vec<FqmElem>> {
    let ext = &fk.ext;
    let fqm = ext.fqm();
    let LrpcParams { t, t_prime, w, .. } = fk.params;
    let s_prime = fk.block_diag().mul_vec(&fqm, y_prime);
    let (s1, s2) = s_prime.split_at(t);
    let mut tspace = support(ext, s1);
    let target = tspace.dim() + t_prime;
    while tspace.dim() < target {
        tspace = tspace.sum(&Subspace::span(ext, &[ext.random(rng)]));
    }
    let e_prime = lrpc_decode(&fk.r, s2, &tspace, w, rng)?;
    let v: Vec<FqmElem> = s1.iter().cloned().chain(e_prime).collect();
    // e = v·Pᵀ, i.e. eᵀ = P·vᵀ
    Ok(ext.embed(&fk.p).mul_vec(&fqm, &v))
}

/// Signs an arbitrary syndrome of H_pub with the forge key.
pub fn forged_sign_syndrome<R: Rng + ?Sized>(
    fk: &ForgeKey,
    pk: &PublicKey,
    s: &[FqmElem],
    rng: &mut R,
) -> Result<Signature> {
    let ext = &fk.ext;
    let (fq, fqm) = (ext.fq(), ext.fqm());
    let y = pk.h_pub.solve(&fqm, s).ok_or_else(|| Error::Anomaly("H_pub is not full rank".into()))?.x;
    let p_inv = fk.p.inverse(&fq).ok_or_else(|| Error::Anomaly("P is singular".into()))?;
    let y_prime = ext.embed(&p_inv).mul_vec(&fqm, &y);
    let nonce: u64 = rng.gen();
    let mut attempt_rng = crate::rng_from_seed(nonce);
    for _ in 0..SIGN_RETRIES {
        match forged_attempt(fk, &y_prime, &mut attempt_rng) {
            Ok(e) => {
                if pk.h_pub.mul_vec(&fqm, &e) != s || rank_weight(ext, &e) != fk.params.w {
                    return Err(Error::Anomaly("forged preimage fails the public equation".into()));
                }
                return Ok(Signature { e, nonce });
            }
            Err(Error::Retryable(_)) => continue,
            Err(other) => return Err(other),
        }
    }
    Err(Error::Exhausted(format!("no forged signature within {SIGN_RETRIES} attempts")))
}

pub fn forged_sign<R: Rng + ?Sized>(fk: &ForgeKey, pk: &PublicKey, msg: &[u8], rng: &mut R) -> Result<Signature> {
    let s = hash_to_syndrome(&pk.ext, &pk.params, MESSAGE_TAG, msg);
    forged_sign_syndrome(fk, pk, &s, rng)
}

#[derive(Clone, Debug)]
pub struct AttackOutcome {
    pub key: ForgeKey,
    pub f_recovered: Subspace,
    /// Rank-1 words tried, including the successful one.
    pub attempts: usize,
}

/// Full key recovery with retries over alternative rank-1 words.
pub fn attack<R: Rng + ?Sized>(
    pk: &PublicKey,
    strategy: Rank1Strategy,
    rng: &mut R,
    threads: usize,
) -> Result<AttackOutcome> {
    let proj = build_proj_code(pk)?;
    let mut attempts = 0;
    let mut last = Error::Exhausted("no candidate rank-1 word".into());
    for _ in 0..OUTER_RETRIES {
        let words = find_rank1(pk, &proj, strategy, rng, threads)?;
        for m in words {
            if attempts == OUTER_RETRIES {
                return Err(Error::Exhausted(format!("{attempts} rank-1 words tried: {last}")));
            }
            attempts += 1;
            let c = lift(pk, &proj, &m)?;
            let f_prime = support(&pk.ext, &c);
            if f_prime.dim() != 2 {
                last = Error::Assumption(format!("lifted word has rank {}", f_prime.dim()));
                continue;
            }
            let cp = compute_cpub_prime(pk, &f_prime);
            match assemble_forge_key(pk, &cp) {
                Ok(key) => {
                    let f_recovered = key.r.f.clone();
                    return Ok(AttackOutcome { key, f_recovered, attempts });
                }
                Err(e @ Error::Assumption(_)) => last = e,
                Err(e) => return Err(e),
            }
        }
        if strategy == Rank1Strategy::Enumerate {
            // the oracle is deterministic: every candidate has been tried
            break;
        }
    }
    Err(Error::Exhausted(format!("attack failed after {attempts} rank-1 words: {last}")))
}
