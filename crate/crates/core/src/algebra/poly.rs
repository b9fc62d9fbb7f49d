//! Dense polynomials over F_q with ascending coefficients.

use super::field::BaseField;

fn trim(mut p: Vec<u32>) -> Vec<u32> {
    while p.last() == Some(&0) {
        p.pop();
    }
    p
}

fn degree(p: &[u32]) -> Option<usize> {
    p.iter().rposition(|&c| c != 0)
}

pub(crate) fn rem(b: &BaseField, p: &[u32], f: &[u32]) -> Vec<u32> {
    divrem(b, p, f).1
}

/// Quotient and remainder; `f` must be nonzero.
pub(crate) fn divrem(b: &BaseField, p: &[u32], f: &[u32]) -> (Vec<u32>, Vec<u32>) {
    let df = degree(f).expect("division by zero polynomial");
    let lead_inv = b.inv(f[df]);
    let mut r = trim(p.to_vec());
    if r.len() <= df {
        return (Vec::new(), r);
    }
    let mut quo = vec![0u32; r.len() - df];
    while let Some(dr) = degree(&r) {
        if dr < df {
            break;
        }
        let c = b.mul(r[dr], lead_inv);
        quo[dr - df] = c;
        for (i, &fi) in f[..=df].iter().enumerate() {
            if fi != 0 {
                r[dr - df + i] ^= b.mul(c, fi);
            }
        }
        r = trim(r);
    }
    (trim(quo), r)
}

fn mul(b: &BaseField, x: &[u32], y: &[u32]) -> Vec<u32> {
    if x.is_empty() || y.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u32; x.len() + y.len() - 1];
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0 {
            continue;
        }
        for (j, &yj) in y.iter().enumerate() {
            out[i + j] ^= b.mul(xi, yj);
        }
    }
    trim(out)
}

fn add(x: &[u32], y: &[u32]) -> Vec<u32> {
    let n = x.len().max(y.len());
    let out = (0..n)
        .map(|i| x.get(i).copied().unwrap_or(0) ^ y.get(i).copied().unwrap_or(0))
        .collect();
    trim(out)
}

fn gcd(b: &BaseField, x: &[u32], y: &[u32]) -> Vec<u32> {
    let (mut u, mut v) = (trim(x.to_vec()), trim(y.to_vec()));
    while !v.is_empty() {
        let r = rem(b, &u, &v);
        u = v;
        v = r;
    }
    u
}

/// Ben-Or test: f is irreducible iff gcd(X^{q^i} − X, f) = 1 for i ≤ deg/2.
pub(crate) fn is_irreducible(b: &BaseField, f: &[u32]) -> bool {
    let deg = match degree(f) {
        Some(d) if d >= 1 => d,
        _ => return false,
    };
    if deg == 1 {
        return true;
    }
    if f[0] == 0 {
        return false;
    }
    let a = (b.q_minus_one() + 1).trailing_zeros();
    let x = vec![0u32, 1];
    let mut h = x.clone();
    for _ in 1..=deg / 2 {
        for _ in 0..a {
            h = rem(b, &mul(b, &h, &h), f);
        }
        let g = gcd(b, f, &add(&h, &x));
        if degree(&g).unwrap_or(0) > 0 {
            return false;
        }
    }
    true
}

/// Inverse of p modulo an irreducible f by the extended Euclidean algorithm.
pub(crate) fn inv_mod(b: &BaseField, p: &[u32], f: &[u32]) -> Vec<u32> {
    let (mut r0, mut r1) = (trim(f.to_vec()), rem(b, p, f));
    let (mut s0, mut s1): (Vec<u32>, Vec<u32>) = (Vec::new(), vec![1]);
    while degree(&r1).is_some_and(|d| d > 0) {
        let (quo, r) = divrem(b, &r0, &r1);
        let s = add(&s0, &mul(b, &quo, &s1));
        r0 = r1;
        r1 = r;
        s0 = s1;
        s1 = s;
    }
    let c = b.inv(r1[0]);
    trim(s1.iter().map(|&v| b.mul(v, c)).collect())
}
