//! RankSign: hash-and-sign with an augmented LRPC trapdoor.
//!
//! The secret parity check is H_sec = [H | R] with H homogeneous of weight
//! d; the public one is H_pub = Q·H_sec·P with P an F_q isometry.

use rand::Rng;
use sha2::{Digest, Sha256};

use crate::algebra::{ExtField, FqmElem, MatFq, MatFqm, Matrix};
use crate::codec::{read_fq, read_fqm, read_vec, write_fq, write_fqm, write_vec, Document};
use crate::error::{Error, Result};
use crate::lrpc::{lrpc_decode, sample_decodable, sample_subspace, validate_params, HomogeneousMatrix, LrpcParams};
use crate::rank_metric::{rank_weight, support, Subspace};
use crate::rng_from_seed;

pub const SIGN_RETRIES: usize = 64;
pub const MESSAGE_TAG: &[u8] = b"ranksign/message";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicKey {
    pub ext: ExtField,
    pub params: LrpcParams,
    pub h_pub: MatFqm,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecretKey {
    pub ext: ExtField,
    pub params: LrpcParams,
    pub h: HomogeneousMatrix,
    pub r: MatFqm,
    pub p: MatFq,
    pub q: MatFqm,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    pub e: Vec<FqmElem>,
    /// Seed of the attempt generator; signing is a function of (sk, msg, nonce).
    pub nonce: u64,
}

impl SecretKey {
    pub fn h_sec(&self) -> MatFqm {
        self.h.m.hstack(&self.r)
    }

    pub fn public(&self) -> PublicKey {
        let h_pub = self.q.mul(&self.ext.fqm(), &self.h_sec()).mul(&self.ext.fqm(), &self.ext.embed(&self.p));
        PublicKey { ext: self.ext.clone(), params: self.params, h_pub }
    }
}

pub fn ext_for(params: &LrpcParams) -> Result<ExtField> {
    ExtField::new(params.a, params.m)
}

pub fn keygen<R: Rng + ?Sized>(params: &LrpcParams, rng: &mut R) -> Result<(PublicKey, SecretKey)> {
    let report = validate_params(params);
    if !report.ok() {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.holds()).map(|c| c.name).collect();
        return Err(Error::Param(format!("constraints violated: {failed:?}")));
    }
    let ext = ext_for(params)?;
    let LrpcParams { n, k, d, t, .. } = *params;
    let (fq, fqm) = (ext.fq(), ext.fqm());
    loop {
        let f = sample_subspace(&ext, d, true, rng)?;
        let h = sample_decodable(n - k, n, &f, rng)?;
        let r = Matrix::random(&fqm, n - k, t, rng);
        let p = Matrix::random_invertible(&fq, n + t, rng);
        let q = Matrix::random_invertible(&fqm, n - k, rng);
        let sk = SecretKey { ext: ext.clone(), params: *params, h, r, p, q };
        let pk = sk.public();
        if pk.h_pub.rank(&fqm) == n - k {
            return Ok((pk, sk));
        }
    }
}

pub(crate) fn params_digest(ext: &ExtField, p: &LrpcParams) -> [u8; 32] {
    let text = format!(
        "n={} k={} m={} d={} t={} t'={} w={} a={} f={:?}",
        p.n,
        p.k,
        p.m,
        p.d,
        p.t,
        p.t_prime,
        p.w,
        p.a,
        ext.f_coeffs()
    );
    Sha256::digest(text.as_bytes()).into()
}

/// `len` field elements from SHA-256 in counter mode over
/// (tag length ‖ tag ‖ digest ‖ msg ‖ counter). Bits are read LSB-first
/// per byte, a bits per digit, digits β_1 first.
pub fn hash_to_vector(ext: &ExtField, tag: &[u8], digest: &[u8], msg: &[u8], len: usize) -> Vec<FqmElem> {
    let (a, m) = (ext.a() as usize, ext.m());
    let need_bits = len * m * a;
    let mut stream = Vec::with_capacity(need_bits.div_ceil(8) + 32);
    let mut counter = 0u32;
    while stream.len() * 8 < need_bits {
        let mut h = Sha256::new();
        h.update((tag.len() as u64).to_le_bytes());
        h.update(tag);
        h.update(digest);
        h.update(msg);
        h.update(counter.to_le_bytes());
        stream.extend_from_slice(&h.finalize());
        counter += 1;
    }
    let bit = |i: usize| ((stream[i / 8] >> (i % 8)) & 1) as u32;
    let mut pos = 0;
    (0..len)
        .map(|_| {
            let coeffs = (0..m)
                .map(|_| {
                    let mut c = 0u32;
                    for b in 0..a {
                        c |= bit(pos + b) << b;
                    }
                    pos += a;
                    c
                })
                .collect();
            FqmElem { coeffs }
        })
        .collect()
}

pub fn hash_to_syndrome(ext: &ExtField, params: &LrpcParams, tag: &[u8], msg: &[u8]) -> Vec<FqmElem> {
    hash_to_vector(ext, tag, &params_digest(ext, params), msg, params.n - params.k)
}

/// One decoding attempt for the syndrome s relative to H_pub.
fn sign_attempt<R: Rng + ?Sized>(sk: &SecretKey, s_phi: &[FqmElem], rng: &mut R) -> Result<Vec<FqmElem>> {
    let ext = &sk.ext;
    let fqm = ext.fqm();
    let LrpcParams { t, t_prime, w, .. } = sk.params;
    let e_t: Vec<FqmElem> = (0..t).map(|_| ext.random(rng)).collect();
    let r_et = sk.r.mul_vec(&fqm, &e_t);
    let s2: Vec<FqmElem> = s_phi.iter().zip(&r_et).map(|(x, y)| ext.add(x, y)).collect();
    let mut tspace = support(ext, &e_t);
    let fresh = tspace.dim() + t_prime;
    while tspace.dim() < fresh {
        tspace = tspace.sum(&Subspace::span(ext, &[ext.random(rng)]));
    }
    let e_h = lrpc_decode(&sk.h, &s2, &tspace, w, rng)?;
    let y: Vec<FqmElem> = e_h.into_iter().chain(e_t).collect();
    let p_inv = sk.p.inverse(&ext.fq()).expect("P is invertible");
    // e = y·(P^{-1})ᵀ, i.e. eᵀ = P^{-1}·yᵀ
    Ok(ext.embed(&p_inv).mul_vec(&fqm, &y))
}

/// Preimage of weight w for an arbitrary syndrome of length n − k.
pub fn sign_syndrome<R: Rng + ?Sized>(sk: &SecretKey, s: &[FqmElem], rng: &mut R) -> Result<Signature> {
    let ext = &sk.ext;
    let fqm = ext.fqm();
    if s.len() != sk.params.n - sk.params.k {
        return Err(Error::Shape(format!("syndrome of length {}", s.len())));
    }
    let q_inv = sk.q.inverse(&fqm).expect("Q is invertible");
    let s_phi = q_inv.mul_vec(&fqm, s);
    let nonce: u64 = rng.gen();
    let mut attempt_rng = rng_from_seed(nonce);
    let h_pub = sk.public().h_pub;
    for _ in 0..SIGN_RETRIES {
        match sign_attempt(sk, &s_phi, &mut attempt_rng) {
            Ok(e) => {
                assert!(rank_weight(ext, &e) <= sk.params.w, "signature weight exceeds w");
                if h_pub.mul_vec(&fqm, &e) != s {
                    return Err(Error::Anomaly("decoded preimage misses the syndrome".into()));
                }
                return Ok(Signature { e, nonce });
            }
            Err(Error::Retryable(_)) => continue,
            Err(other) => return Err(other),
        }
    }
    Err(Error::Exhausted(format!("no signature within {SIGN_RETRIES} attempts")))
}

pub fn sign<R: Rng + ?Sized>(sk: &SecretKey, msg: &[u8], rng: &mut R) -> Result<Signature> {
    let s = hash_to_syndrome(&sk.ext, &sk.params, MESSAGE_TAG, msg);
    sign_syndrome(sk, &s, rng)
}

pub fn verify_syndrome(pk: &PublicKey, s: &[FqmElem], e: &[FqmElem]) -> bool {
    e.len() == pk.h_pub.cols()
        && e.iter().all(|x| pk.ext.is_valid(x))
        && pk.h_pub.mul_vec(&pk.ext.fqm(), e) == s
        && rank_weight(&pk.ext, e) == pk.params.w
}

pub fn verify(pk: &PublicKey, msg: &[u8], sig: &Signature) -> bool {
    let s = hash_to_syndrome(&pk.ext, &pk.params, MESSAGE_TAG, msg);
    verify_syndrome(pk, &s, &sig.e)
}

pub(crate) fn params_fields(doc: Document, p: &LrpcParams) -> Document {
    doc.field("n", p.n)
        .field("k", p.k)
        .field("m", p.m)
        .field("d", p.d)
        .field("t", p.t)
        .field("t'", p.t_prime)
        .field("w", p.w)
        .field("a", p.a)
}

pub fn params_from(doc: &Document) -> Result<LrpcParams> {
    Ok(LrpcParams {
        n: doc.get_usize("n")?,
        k: doc.get_usize("k")?,
        m: doc.get_usize("m")?,
        d: doc.get_usize("d")?,
        t: doc.get_usize("t")?,
        t_prime: doc.get_usize("t'")?,
        w: doc.get_usize("w")?,
        a: doc.get_usize("a")? as u32,
    })
}

impl PublicKey {
    pub fn to_text(&self) -> String {
        params_fields(Document::new("RANKSIGN", "public-key"), &self.params)
            .block(write_fqm(&self.ext, &self.h_pub))
            .render()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let doc = Document::parse(text)?;
        doc.expect("RANKSIGN", "public-key", 1)?;
        let params = params_from(&doc)?;
        let ext = ext_for(&params)?;
        let h_pub = read_fqm(&ext, &doc.blocks[0])?;
        if h_pub.rows() != params.n - params.k || h_pub.cols() != params.n + params.t {
            return Err(Error::Parse("public matrix shape disagrees with the parameters".into()));
        }
        Ok(PublicKey { ext, params, h_pub })
    }
}

impl SecretKey {
    pub fn to_text(&self) -> String {
        let f_basis = write_fq(&self.ext, self.h.f.basis());
        params_fields(Document::new("RANKSIGN", "secret-key"), &self.params)
            .block(f_basis)
            .block(write_fqm(&self.ext, &self.h.m))
            .block(write_fqm(&self.ext, &self.r))
            .block(write_fq(&self.ext, &self.p))
            .block(write_fqm(&self.ext, &self.q))
            .render()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let doc = Document::parse(text)?;
        doc.expect("RANKSIGN", "secret-key", 5)?;
        let params = params_from(&doc)?;
        let ext = ext_for(&params)?;
        let f = Subspace::from_coeff_rows(&ext, read_fq(&ext, &doc.blocks[0])?);
        let h = HomogeneousMatrix::new(read_fqm(&ext, &doc.blocks[1])?, f).map_err(|e| Error::Parse(e.to_string()))?;
        let r = read_fqm(&ext, &doc.blocks[2])?;
        let p = read_fq(&ext, &doc.blocks[3])?;
        let q = read_fqm(&ext, &doc.blocks[4])?;
        let (n, k, t) = (params.n, params.k, params.t);
        let shapes_ok = h.m.rows() == n - k
            && h.m.cols() == n
            && r.rows() == n - k
            && r.cols() == t
            && p.rows() == n + t
            && p.inverse(&ext.fq()).is_some()
            && q.rows() == n - k
            && q.inverse(&ext.fqm()).is_some();
        if !shapes_ok {
            return Err(Error::Parse("secret key blocks have inconsistent shapes or singular scramblers".into()));
        }
        Ok(SecretKey { ext, params, h, r, p, q })
    }
}

impl Signature {
    pub fn to_text(&self, ext: &ExtField) -> String {
        Document::new("RANKSIGN", "signature").field("nonce", self.nonce).block(write_vec(ext, &self.e)).render()
    }

    pub fn from_text(ext: &ExtField, text: &str) -> Result<Self> {
        let doc = Document::parse(text)?;
        doc.expect("RANKSIGN", "signature", 1)?;
        Ok(Signature { e: read_vec(ext, &doc.blocks[0])?, nonce: doc.get_u64("nonce")? })
    }
}
