//! Identity-based encryption over a signing code C_sgn and a decoding code
//! C_dec. A user key u satisfies |u·G_sgn − H(id)| = w_sgn; a ciphertext is
//! (G_sgn·E, H(id)·E + m·G_dec), so u·C₁ − C₂ = (u·G_sgn − H(id))·E − m·G_dec
//! and the error term has small weight. Characteristic 2 makes every minus
//! sign a plus.
//!
//! Rank mode signs with RankSign and decodes with an LRPC code; Hamming
//! mode only encrypts, which is all the attack target needs.

use rand::seq::index::sample;
use rand::Rng;
use sha2::{Digest, Sha256};

use crate::algebra::{ExtField, FqmElem, MatFq, MatFqm, Matrix};
use crate::codec::{read_fq, read_fqm, read_vec, write_fq, write_fqm, write_vec, Document};
use crate::error::{Error, Result};
use crate::lrpc::{lrpc_decode_unique, sample_decodable, sample_homogeneous, sample_subspace, HomogeneousMatrix, LrpcParams};
use crate::rank_metric::{rank_weight, Subspace};
use crate::ranksign::{
    ext_for, hash_to_vector, keygen, params_digest, params_fields, params_from, sign_syndrome, SecretKey,
};
use crate::rsl::{ibe_param_check, IbeParams, IbeReport};

pub const IDENTITY_TAG: &[u8] = b"ibe/identity";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Rank,
    Hamming,
}

impl Metric {
    pub fn tag(self) -> &'static str {
        match self {
            Metric::Rank => "rank",
            Metric::Hamming => "hamming",
        }
    }

    pub fn from_tag(s: &str) -> Result<Self> {
        match s {
            "rank" => Ok(Metric::Rank),
            "hamming" => Ok(Metric::Hamming),
            _ => Err(Error::Parse(format!("unknown metric {s:?}"))),
        }
    }
}

/// RankSign signing code plus an LRPC decoding code of weight d_dec.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RankIbeParams {
    pub sign: LrpcParams,
    pub n_dec: usize,
    pub k_dec: usize,
    pub d_dec: usize,
    pub w_dec: usize,
}

impl RankIbeParams {
    pub fn n_sgn(&self) -> usize {
        self.sign.n + self.sign.t
    }

    pub fn k_sgn(&self) -> usize {
        self.sign.k + self.sign.t
    }

    pub fn w_sgn(&self) -> usize {
        self.sign.w
    }

    pub fn as_check(&self) -> IbeParams {
        IbeParams {
            n_sgn: self.n_sgn(),
            k_sgn: self.k_sgn(),
            m: self.sign.m,
            a: self.sign.a,
            n_dec: self.n_dec,
            k_dec: self.k_dec,
            w_sgn: self.w_sgn(),
            w_dec: self.w_dec,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankMpk {
    pub ext: ExtField,
    pub params: RankIbeParams,
    /// k_sgn×n_sgn generator of the RankSign public code.
    pub g_sgn: MatFqm,
    /// k_dec×n_dec generator of C_dec.
    pub g_dec: MatFqm,
    /// Public LRPC parity check of C_dec, used to decode.
    pub h_dec: HomogeneousMatrix,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HammingParams {
    pub n_sgn: usize,
    pub k_sgn: usize,
    pub n_dec: usize,
    pub k_dec: usize,
    pub w_dec: usize,
}

/// Binary generators; matrices are over F_2 stored as 0/1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HammingMpk {
    pub params: HammingParams,
    pub g_sgn: MatFq,
    pub g_dec: MatFq,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mpk {
    Rank(RankMpk),
    Hamming(HammingMpk),
}

impl Mpk {
    pub fn metric(&self) -> Metric {
        match self {
            Mpk::Rank(_) => Metric::Rank,
            Mpk::Hamming(_) => Metric::Hamming,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MasterKeys {
    pub mpk: Mpk,
    /// The RankSign trapdoor for C_sgn; absent in Hamming mode.
    pub msk: Option<SecretKey>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UserKey {
    pub id: Vec<u8>,
    pub u: Vec<FqmElem>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankCiphertext {
    pub id: Vec<u8>,
    pub c1: MatFqm,
    pub c2: Vec<FqmElem>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HammingCiphertext {
    pub id: Vec<u8>,
    pub c1: MatFq,
    pub c2: Vec<u32>,
}

pub(crate) fn binary() -> ExtField {
    ExtField::new(1, 1).expect("F_2 exists")
}

/// Generator rows of the right kernel of `h`.
fn generator_of(ext: &ExtField, h: &MatFqm) -> MatFqm {
    Matrix::from_rows(h.kernel(&ext.fqm()), h.cols())
}

pub fn hash_identity(mpk: &RankMpk, id: &[u8]) -> Vec<FqmElem> {
    let digest = params_digest(&mpk.ext, &mpk.params.sign);
    hash_to_vector(&mpk.ext, IDENTITY_TAG, &digest, id, mpk.params.n_sgn())
}

pub fn hash_identity_bits(p: &HammingParams, id: &[u8]) -> Vec<u32> {
    let digest: [u8; 32] = Sha256::digest(format!("{p:?}").as_bytes()).into();
    hash_to_vector(&binary(), IDENTITY_TAG, &digest, id, p.n_sgn).iter().map(|x| x.coeffs[0]).collect()
}

/// Rejects parameters violating the signature or decoding constraint, and
/// the attack constraint too when `enforce_attack` is set.
pub fn check_rank_params(p: &RankIbeParams, enforce_attack: bool) -> Result<IbeReport> {
    let rep = ibe_param_check(&p.as_check())?;
    let mut failed: Vec<&str> = rep.constraints().iter().filter(|c| !c.holds).map(|c| c.name).collect();
    if !enforce_attack {
        failed.retain(|n| *n != rep.attack.name);
    }
    if rep.degenerate {
        failed.push("w_dec > 0");
    }
    if p.d_dec == 0 || p.k_dec == 0 || p.k_dec >= p.n_dec || (p.n_dec - p.k_dec) * p.d_dec < p.n_dec {
        failed.push("decodable LRPC shape");
    }
    if failed.is_empty() {
        Ok(rep)
    } else {
        Err(Error::Param(format!("IBE constraints violated: {failed:?}")))
    }
}

pub fn setup_rank<R: Rng + ?Sized>(p: &RankIbeParams, enforce_attack: bool, rng: &mut R) -> Result<MasterKeys> {
    check_rank_params(p, enforce_attack)?;
    let (pk, sk) = keygen(&p.sign, rng)?;
    let ext = pk.ext.clone();
    let g_sgn = generator_of(&ext, &pk.h_pub);
    let f_dec = sample_subspace(&ext, p.d_dec, true, rng)?;
    let (h_dec, g_dec) = loop {
        let h = sample_decodable(p.n_dec - p.k_dec, p.n_dec, &f_dec, rng)?;
        let g = generator_of(&ext, &h.m);
        if g.rows() == p.k_dec {
            break (h, g);
        }
    };
    Ok(MasterKeys { mpk: Mpk::Rank(RankMpk { ext, params: *p, g_sgn, g_dec, h_dec }), msk: Some(sk) })
}

pub fn setup_hamming<R: Rng + ?Sized>(p: &HammingParams, rng: &mut R) -> Result<MasterKeys> {
    if p.k_sgn >= p.n_sgn || p.k_dec > p.n_dec || p.w_dec > p.n_sgn {
        return Err(Error::Param(format!("inconsistent Hamming parameters {p:?}")));
    }
    let f = binary().fq();
    let g_sgn = Matrix::random_full_rank(&f, p.k_sgn, p.n_sgn, rng);
    let g_dec = Matrix::random_full_rank(&f, p.k_dec, p.n_dec, rng);
    Ok(MasterKeys { mpk: Mpk::Hamming(HammingMpk { params: *p, g_sgn, g_dec }), msk: None })
}

/// u with |u·G_sgn − H(id)| = w_sgn, from a RankSign preimage of the
/// syndrome of H(id).
pub fn extract<R: Rng + ?Sized>(mk: &MasterKeys, id: &[u8], rng: &mut R) -> Result<UserKey> {
    let (Mpk::Rank(mpk), Some(sk)) = (&mk.mpk, &mk.msk) else {
        return Err(Error::Param("extraction needs the rank-mode RankSign trapdoor".into()));
    };
    let ext = &mpk.ext;
    let fqm = ext.fqm();
    let h = hash_identity(mpk, id);
    let h_pub = sk.public().h_pub;
    let sig = sign_syndrome(sk, &h_pub.mul_vec(&fqm, &h), rng)?;
    let c: Vec<FqmElem> = h.iter().zip(&sig.e).map(|(x, y)| ext.add(x, y)).collect();
    let u = mpk
        .g_sgn
        .transpose()
        .solve(&fqm, &c)
        .ok_or_else(|| Error::Anomaly("H(id) − e is not a codeword of C_sgn".into()))?
        .x;
    let uk = UserKey { id: id.to_vec(), u };
    if user_key_weight(mpk, &uk) != mpk.params.w_sgn() {
        return Err(Error::Anomaly("extracted key misses the distance equation".into()));
    }
    Ok(uk)
}

/// |u·G_sgn − H(id)|.
pub fn user_key_weight(mpk: &RankMpk, uk: &UserKey) -> usize {
    rank_weight(&mpk.ext, &user_key_error(mpk, uk))
}

/// u·G_sgn − H(id).
pub fn user_key_error(mpk: &RankMpk, uk: &UserKey) -> Vec<FqmElem> {
    let ext = &mpk.ext;
    let ug = mpk.g_sgn.vec_mul(&ext.fqm(), &uk.u);
    ug.iter().zip(hash_identity(mpk, &uk.id)).map(|(x, y)| ext.add(x, &y)).collect()
}

/// Encrypts and also returns the noise matrix E.
pub fn encrypt_rank_with_noise<R: Rng + ?Sized>(
    mpk: &RankMpk,
    id: &[u8],
    msg: &[FqmElem],
    rng: &mut R,
) -> Result<(RankCiphertext, HomogeneousMatrix)> {
    let ext = &mpk.ext;
    let fqm = ext.fqm();
    let p = &mpk.params;
    if msg.len() != p.k_dec || !msg.iter().all(|x| ext.is_valid(x)) {
        return Err(Error::Shape(format!("message must be {} elements of F_q^m", p.k_dec)));
    }
    let f = sample_subspace(ext, p.w_dec, false, rng)?;
    let e = sample_homogeneous(p.n_sgn(), p.n_dec, &f, rng)?;
    let c1 = mpk.g_sgn.mul(&fqm, &e.m);
    let he = e.m.vec_mul(&fqm, &hash_identity(mpk, id));
    let mg = mpk.g_dec.vec_mul(&fqm, msg);
    let c2 = he.iter().zip(&mg).map(|(x, y)| ext.add(x, y)).collect();
    Ok((RankCiphertext { id: id.to_vec(), c1, c2 }, e))
}

pub fn encrypt_rank<R: Rng + ?Sized>(mpk: &RankMpk, id: &[u8], msg: &[FqmElem], rng: &mut R) -> Result<RankCiphertext> {
    encrypt_rank_with_noise(mpk, id, msg, rng).map(|(ct, _)| ct)
}

/// u·C₁ − C₂.
pub fn combine_ciphertext(mpk: &RankMpk, uk: &UserKey, ct: &RankCiphertext) -> Vec<FqmElem> {
    let ext = &mpk.ext;
    let uc = ct.c1.vec_mul(&ext.fqm(), &uk.u);
    uc.iter().zip(&ct.c2).map(|(x, y)| ext.add(x, y)).collect()
}

pub fn decrypt_rank(mpk: &RankMpk, uk: &UserKey, ct: &RankCiphertext) -> Result<Vec<FqmElem>> {
    let ext = &mpk.ext;
    let fqm = ext.fqm();
    if uk.id != ct.id {
        return Err(Error::Param("user key and ciphertext belong to different identities".into()));
    }
    let p = &mpk.params;
    if ct.c1.rows() != p.k_sgn() || ct.c1.cols() != p.n_dec || ct.c2.len() != p.n_dec || uk.u.len() != p.k_sgn() {
        return Err(Error::Shape("ciphertext or key shape disagrees with the parameters".into()));
    }
    let r = combine_ciphertext(mpk, uk, ct);
    let s = mpk.h_dec.m.mul_vec(&fqm, &r);
    let err = lrpc_decode_unique(&mpk.h_dec, &s)?;
    if rank_weight(ext, &err) > p.w_sgn() * p.w_dec {
        return Err(Error::Retryable("decoded error exceeds w_sgn·w_dec".into()));
    }
    let word: Vec<FqmElem> = r.iter().zip(&err).map(|(x, y)| ext.add(x, y)).collect();
    let sol = mpk
        .g_dec
        .transpose()
        .solve(&fqm, &word)
        .ok_or_else(|| Error::Retryable("decoded word is not in C_dec".into()))?;
    Ok(sol.x)
}

/// Columns of E of weight exactly w_dec.
pub fn encrypt_hamming_with_noise<R: Rng + ?Sized>(
    mpk: &HammingMpk,
    id: &[u8],
    msg: &[u32],
    rng: &mut R,
) -> Result<(HammingCiphertext, MatFq)> {
    let p = &mpk.params;
    if msg.len() != p.k_dec || msg.iter().any(|&b| b > 1) {
        return Err(Error::Shape(format!("message must be {} bits", p.k_dec)));
    }
    let f = binary().fq();
    let mut e = Matrix::filled(p.n_sgn, p.n_dec, 0u32);
    for j in 0..p.n_dec {
        for i in sample(rng, p.n_sgn, p.w_dec) {
            e.set(i, j, 1);
        }
    }
    let c1 = mpk.g_sgn.mul(&f, &e);
    let he = e.vec_mul(&f, &hash_identity_bits(p, id));
    let mg = mpk.g_dec.vec_mul(&f, msg);
    let c2 = he.iter().zip(&mg).map(|(x, y)| x ^ y).collect();
    Ok((HammingCiphertext { id: id.to_vec(), c1, c2 }, e))
}

pub fn encrypt_hamming<R: Rng + ?Sized>(mpk: &HammingMpk, id: &[u8], msg: &[u32], rng: &mut R) -> Result<HammingCiphertext> {
    encrypt_hamming_with_noise(mpk, id, msg, rng).map(|(ct, _)| ct)
}

/// Predicted bit-flip rate of (u·G − H(id))·E and the Hamming-mode budget.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseReport {
    /// (1/2)(1 − exp(−2·w_sgn·w_dec/n)).
    pub relative_weight: f64,
    /// w_sgn·w_dec / n_sgn.
    pub load: f64,
    /// load ≤ the given constant.
    pub within_budget: bool,
}

pub fn check_hamming_noise(n_sgn: usize, w_sgn: usize, w_dec: usize, budget: f64) -> NoiseReport {
    let load = (w_sgn * w_dec) as f64 / n_sgn as f64;
    NoiseReport { relative_weight: 0.5 * (1.0 - (-2.0 * load).exp()), load, within_budget: load <= budget }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn unhex(s: &str) -> Result<Vec<u8>> {
    if s.len() % 2 != 0 {
        return Err(Error::Parse("odd-length hex identity".into()));
    }
    (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&s[i..i + 2], 16).map_err(|_| Error::Parse(format!("bad hex {s:?}"))))
        .collect()
}

pub(crate) fn rank_fields(doc: Document, p: &RankIbeParams) -> Document {
    params_fields(doc, &p.sign)
        .field("n_dec", p.n_dec)
        .field("k_dec", p.k_dec)
        .field("d_dec", p.d_dec)
        .field("w_dec", p.w_dec)
}

pub(crate) fn rank_params_from(doc: &Document) -> Result<RankIbeParams> {
    Ok(RankIbeParams {
        sign: params_from(doc)?,
        n_dec: doc.get_usize("n_dec")?,
        k_dec: doc.get_usize("k_dec")?,
        d_dec: doc.get_usize("d_dec")?,
        w_dec: doc.get_usize("w_dec")?,
    })
}

pub(crate) fn hamming_fields(doc: Document, p: &HammingParams) -> Document {
    doc.field("n_sgn", p.n_sgn)
        .field("k_sgn", p.k_sgn)
        .field("n_dec", p.n_dec)
        .field("k_dec", p.k_dec)
        .field("w_dec", p.w_dec)
}

pub(crate) fn hamming_params_from(doc: &Document) -> Result<HammingParams> {
    Ok(HammingParams {
        n_sgn: doc.get_usize("n_sgn")?,
        k_sgn: doc.get_usize("k_sgn")?,
        n_dec: doc.get_usize("n_dec")?,
        k_dec: doc.get_usize("k_dec")?,
        w_dec: doc.get_usize("w_dec")?,
    })
}

impl Mpk {
    pub fn to_text(&self) -> String {
        match self {
            Mpk::Rank(k) => rank_fields(Document::new("IBE", "mpk").field("metric", "rank"), &k.params)
                .block(write_fqm(&k.ext, &k.g_sgn))
                .block(write_fqm(&k.ext, &k.g_dec))
                .block(write_fq(&k.ext, k.h_dec.f.basis()))
                .block(write_fqm(&k.ext, &k.h_dec.m))
                .render(),
            Mpk::Hamming(k) => {
                let b = binary();
                hamming_fields(Document::new("IBE", "mpk").field("metric", "hamming"), &k.params)
                    .block(write_fq(&b, &k.g_sgn))
                    .block(write_fq(&b, &k.g_dec))
                    .render()
            }
        }
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let doc = Document::parse(text)?;
        match Metric::from_tag(doc.get("metric")?)? {
            Metric::Rank => {
                doc.expect("IBE", "mpk", 4)?;
                let params = rank_params_from(&doc)?;
                let ext = ext_for(&params.sign)?;
                let f = Subspace::from_coeff_rows(&ext, read_fq(&ext, &doc.blocks[2])?);
                let h_dec = HomogeneousMatrix::new(read_fqm(&ext, &doc.blocks[3])?, f)
                    .map_err(|e| Error::Parse(e.to_string()))?;
                let mpk = RankMpk {
                    g_sgn: read_fqm(&ext, &doc.blocks[0])?,
                    g_dec: read_fqm(&ext, &doc.blocks[1])?,
                    ext,
                    params,
                    h_dec,
                };
                let shapes = (mpk.g_sgn.rows(), mpk.g_sgn.cols(), mpk.g_dec.rows(), mpk.g_dec.cols());
                if shapes != (params.k_sgn(), params.n_sgn(), params.k_dec, params.n_dec) {
                    return Err(Error::Parse("generator shapes disagree with the parameters".into()));
                }
                Ok(Mpk::Rank(mpk))
            }
            Metric::Hamming => {
                doc.expect("IBE", "mpk", 2)?;
                let params = hamming_params_from(&doc)?;
                let b = binary();
                let mpk = HammingMpk { params, g_sgn: read_fq(&b, &doc.blocks[0])?, g_dec: read_fq(&b, &doc.blocks[1])? };
                let shapes = (mpk.g_sgn.rows(), mpk.g_sgn.cols(), mpk.g_dec.rows(), mpk.g_dec.cols());
                if shapes != (params.k_sgn, params.n_sgn, params.k_dec, params.n_dec) {
                    return Err(Error::Parse("generator shapes disagree with the parameters".into()));
                }
                Ok(Mpk::Hamming(mpk))
            }
        }
    }
}

impl UserKey {
    pub fn to_text(&self, ext: &ExtField) -> String {
        Document::new("IBE", "user-key").field("id", hex(&self.id)).block(write_vec(ext, &self.u)).render()
    }

    pub fn from_text(ext: &ExtField, text: &str) -> Result<Self> {
        let doc = Document::parse(text)?;
        doc.expect("IBE", "user-key", 1)?;
        Ok(UserKey { id: unhex(doc.get("id")?)?, u: read_vec(ext, &doc.blocks[0])? })
    }
}

impl RankCiphertext {
    pub fn to_text(&self, ext: &ExtField) -> String {
        Document::new("IBE", "ciphertext")
            .field("metric", "rank")
            .field("id", hex(&self.id))
            .block(write_fqm(ext, &self.c1))
            .block(write_vec(ext, &self.c2))
            .render()
    }

    pub fn from_text(ext: &ExtField, text: &str) -> Result<Self> {
        let doc = Document::parse(text)?;
        doc.expect("IBE", "ciphertext", 2)?;
        if Metric::from_tag(doc.get("metric")?)? != Metric::Rank {
            return Err(Error::Parse("not a rank-mode ciphertext".into()));
        }
        Ok(RankCiphertext { id: unhex(doc.get("id")?)?, c1: read_fqm(ext, &doc.blocks[0])?, c2: read_vec(ext, &doc.blocks[1])? })
    }
}

impl HammingCiphertext {
    pub fn to_text(&self) -> String {
        let b = binary();
        Document::new("IBE", "ciphertext")
            .field("metric", "hamming")
            .field("id", hex(&self.id))
            .block(write_fq(&b, &self.c1))
            .block(write_fq(&b, &Matrix::from_rows(vec![self.c2.clone()], self.c2.len())))
            .render()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let doc = Document::parse(text)?;
        doc.expect("IBE", "ciphertext", 2)?;
        if Metric::from_tag(doc.get("metric")?)? != Metric::Hamming {
            return Err(Error::Parse("not a Hamming-mode ciphertext".into()));
        }
        let b = binary();
        let c2 = read_fq(&b, &doc.blocks[1])?;
        if c2.rows() != 1 {
            return Err(Error::Parse("C₂ must be a single row".into()));
        }
        Ok(HammingCiphertext { id: unhex(doc.get("id")?)?, c1: read_fq(&b, &doc.blocks[0])?, c2: c2.row_vec(0) })
    }
}

/// Secret-key files reuse the RankSign format.
pub fn msk_to_text(mk: &MasterKeys) -> Option<String> {
    mk.msk.as_ref().map(SecretKey::to_text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rank_metric::support;
    use crate::rng_from_seed;

    pub(crate) fn desk_rank() -> RankIbeParams {
        RankIbeParams {
            sign: LrpcParams { n: 8, k: 4, m: 9, d: 2, t: 1, t_prime: 1, w: 4, a: 4 },
            n_dec: 24,
            k_dec: 2,
            d_dec: 2,
            w_dec: 1,
        }
    }

    fn rank_keys(seed: u64) -> (RankMpk, MasterKeys) {
        let mk = setup_rank(&desk_rank(), false, &mut rng_from_seed(seed)).unwrap();
        let Mpk::Rank(mpk) = mk.mpk.clone() else { unreachable!() };
        (mpk, mk)
    }

    #[test]
    fn desk_profile_passes_signature_and_decoding_constraints() {
        let rep = check_rank_params(&desk_rank(), false).unwrap();
        assert!(rep.signature.holds && rep.decoding.holds);
        assert!(!rep.attack.holds);
        assert!(check_rank_params(&desk_rank(), true).is_err());
        assert!(rep.prop1_slack > 0.0);
    }

    #[test]
    fn extraction_satisfies_the_distance_equation() {
        let (mpk, mk) = rank_keys(1);
        let mut rng = rng_from_seed(2);
        let a = extract(&mk, b"alice", &mut rng).unwrap();
        let b = extract(&mk, b"bob", &mut rng).unwrap();
        assert_eq!(user_key_weight(&mpk, &a), 4);
        assert_ne!(a.u, b.u);
        let again = extract(&mk, b"alice", &mut rng_from_seed(2)).unwrap();
        assert_eq!(again, a);
    }

    #[test]
    fn round_trip_identity_and_noise_bound() {
        let (mpk, mk) = rank_keys(3);
        let ext = mpk.ext.clone();
        let fqm = ext.fqm();
        let mut rng = rng_from_seed(4);
        let uk = extract(&mk, b"carol", &mut rng).unwrap();
        let mut ok = 0;
        for _ in 0..40 {
            let msg: Vec<FqmElem> = (0..2).map(|_| ext.random(&mut rng)).collect();
            let (ct, e) = encrypt_rank_with_noise(&mpk, b"carol", &msg, &mut rng).unwrap();
            assert!(e.m.data().iter().all(|x| e.f.contains(x)));
            let err = e.m.vec_mul(&fqm, &user_key_error(&mpk, &uk));
            let mg = mpk.g_dec.vec_mul(&fqm, &msg);
            let expect: Vec<FqmElem> = err.iter().zip(&mg).map(|(x, y)| ext.add(x, y)).collect();
            assert_eq!(combine_ciphertext(&mpk, &uk, &ct), expect);
            assert!(support(&ext, &err).dim() <= 4);
            if decrypt_rank(&mpk, &uk, &ct).ok() == Some(msg) {
                ok += 1;
            }
        }
        assert!(ok >= 32, "{ok}/40");
    }

    #[test]
    fn wrong_key_does_not_decrypt() {
        let (mpk, mk) = rank_keys(5);
        let mut rng = rng_from_seed(6);
        let other = extract(&mk, b"eve", &mut rng).unwrap();
        let forged = UserKey { id: b"dave".to_vec(), u: other.u };
        let msg: Vec<FqmElem> = (0..2).map(|_| mpk.ext.random(&mut rng)).collect();
        let mut wrong = 0;
        for _ in 0..10 {
            let ct = encrypt_rank(&mpk, b"dave", &msg, &mut rng).unwrap();
            if decrypt_rank(&mpk, &forged, &ct).ok() != Some(msg.clone()) {
                wrong += 1;
            }
        }
        assert_eq!(wrong, 10);
    }

    #[test]
    fn zero_message_has_no_code_component() {
        let (mpk, _) = rank_keys(7);
        let ext = &mpk.ext;
        let mut rng = rng_from_seed(8);
        let (ct, e) = encrypt_rank_with_noise(&mpk, b"x", &[ext.zero(), ext.zero()], &mut rng).unwrap();
        assert_eq!(ct.c2, e.m.vec_mul(&ext.fqm(), &hash_identity(&mpk, b"x")));
    }

    #[test]
    fn hamming_mode_encrypts_but_cannot_extract() {
        let p = HammingParams { n_sgn: 60, k_sgn: 40, n_dec: 30, k_dec: 10, w_dec: 2 };
        let mut rng = rng_from_seed(9);
        let mk = setup_hamming(&p, &mut rng).unwrap();
        assert!(extract(&mk, b"id", &mut rng).is_err());
        let Mpk::Hamming(mpk) = &mk.mpk else { unreachable!() };
        let (ct, e) = encrypt_hamming_with_noise(mpk, b"id", &[1; 10], &mut rng).unwrap();
        for j in 0..30 {
            assert_eq!(e.col(j).iter().sum::<u32>(), 2);
        }
        assert_eq!(HammingCiphertext::from_text(&ct.to_text()).unwrap(), ct);
        assert_eq!(Mpk::from_text(&mk.mpk.to_text()).unwrap(), mk.mpk);
    }

    #[test]
    fn noise_formula_matches_monte_carlo() {
        assert_eq!(check_hamming_noise(200, 0, 4, 1.0).relative_weight, 0.0);
        assert!((check_hamming_noise(200, 400, 40, 1.0).relative_weight - 0.5).abs() < 1e-9);
        let (n, ws, wd) = (200, 10, 4);
        let pred = check_hamming_noise(n, ws, wd, 1.0).relative_weight;
        let mut rng = rng_from_seed(10);
        let mut flips = 0;
        let trials = 10_000;
        for _ in 0..trials {
            let e: Vec<usize> = sample(&mut rng, n, ws).into_vec();
            let col: Vec<usize> = sample(&mut rng, n, wd).into_vec();
            flips += e.iter().filter(|i| col.contains(i)).count() % 2;
        }
        let rate = flips as f64 / trials as f64;
        assert!((rate - pred).abs() <= 0.05, "empirical {rate} vs {pred}");
    }

    #[test]
    fn files_round_trip() {
        let (mpk, mk) = rank_keys(11);
        let mut rng = rng_from_seed(12);
        let uk = extract(&mk, b"frank", &mut rng).unwrap();
        let ct = encrypt_rank(&mpk, b"frank", &[mpk.ext.one(), mpk.ext.zero()], &mut rng).unwrap();
        assert_eq!(Mpk::from_text(&mk.mpk.to_text()).unwrap(), mk.mpk);
        assert_eq!(UserKey::from_text(&mpk.ext, &uk.to_text(&mpk.ext)).unwrap(), uk);
        assert_eq!(RankCiphertext::from_text(&mpk.ext, &ct.to_text(&mpk.ext)).unwrap(), ct);
        assert_eq!(SecretKey::from_text(&msk_to_text(&mk).unwrap()).unwrap(), *mk.msk.as_ref().unwrap());
    }
}
