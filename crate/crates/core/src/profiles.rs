//! Named parameter sets, profile files, and the check reports behind
//! `params check`.

use std::fmt::Write as _;

use crate::bilinear::{ranksign_expected_counts, rsl_expected_counts};
use crate::codec::Document;
use crate::error::{Error, Result};
use crate::hamming::{log2_binomial, prange_expected_iterations};
use crate::ibe::{
    check_rank_params, hamming_fields, hamming_params_from, rank_fields, rank_params_from, HammingParams,
    RankIbeParams,
};
use crate::lrpc::{validate_params, LrpcParams};
use crate::ranksign::{params_fields, params_from};
use crate::rsl::{self, ibe_param_check, ibe_param_check_at_gv, theorem_bound, IbeParams, RslParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    RankSign(LrpcParams),
    Rsl(RslParams),
    Hamming(HammingParams),
    RankIbe(RankIbeParams),
    /// Constraint check only. With `w_sgn_at_gv` the stored w_sgn is
    /// replaced by gv(q, m, n_sgn, k_sgn) before checking.
    Ibe { params: IbeParams, w_sgn_at_gv: bool },
}

impl Scheme {
    pub fn tag(&self) -> &'static str {
        match self {
            Scheme::RankSign(_) => "ranksign",
            Scheme::Rsl(_) => "rsl",
            Scheme::Hamming(_) => "hamming",
            Scheme::RankIbe(_) => "rank-ibe",
            Scheme::Ibe { .. } => "ibe-check",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Profile {
    pub name: String,
    pub scheme: Scheme,
    /// Too large to run; usable by validators and counters only.
    pub read_only: bool,
}

const DESK_SIGN: LrpcParams = LrpcParams { n: 8, k: 4, m: 9, d: 2, t: 1, t_prime: 1, w: 4, a: 1 };

/// Large RankSign rows as (n, k, m, d, t, a); (w, t′) come from [`derive_ranksign`].
const TABLE1: [(usize, usize, usize, usize, usize, u32); 4] =
    [(20, 10, 21, 2, 2, 32), (24, 12, 24, 2, 2, 24), (24, 12, 27, 2, 3, 32), (28, 14, 30, 2, 3, 32)];

pub const BUILTIN: [&str; 11] = [
    "desk-ranksign",
    "desk-ranksign-q16",
    "desk-rsl",
    "desk-hamming",
    "desk-ibe",
    "table1-row1",
    "table1-row2",
    "table1-row3",
    "table1-row4",
    "table2",
    "recipe",
];

/// Solves m = (w−t′)(d+1) and n−k = d(w−t−t′) for (w, t′) under the
/// convention t′ = t; the two equations only fix w − t′.
pub fn derive_ranksign(n: usize, k: usize, m: usize, d: usize, t: usize) -> Result<(usize, usize)> {
    if d == 0 || k > n || (n - k) % d != 0 || m % (d + 1) != 0 {
        return Err(Error::Param(format!("no integral w for (n, k, m, d) = ({n}, {k}, {m}, {d})")));
    }
    let gap = (n - k) / d + t;
    if m / (d + 1) != gap {
        return Err(Error::Param(format!("m/(d+1) = {} but (n−k)/d + t = {gap}", m / (d + 1))));
    }
    Ok((gap + t, t))
}

fn table1(row: usize) -> LrpcParams {
    let (n, k, m, d, t, a) = TABLE1[row];
    let (w, t_prime) = derive_ranksign(n, k, m, d, t).expect("table rows are consistent");
    LrpcParams { n, k, m, d, t, t_prime, w, a }
}

pub fn builtin(name: &str) -> Option<Profile> {
    let (scheme, read_only) = match name {
        "desk-ranksign" => (Scheme::RankSign(DESK_SIGN), false),
        "desk-ranksign-q16" => (Scheme::RankSign(LrpcParams { a: 4, ..DESK_SIGN }), false),
        "desk-rsl" => (Scheme::Rsl(RslParams { n: 10, k: 3, big_n: 8, w: 2, m: 10, a: 1 }), false),
        "desk-hamming" => (Scheme::Hamming(HammingParams { n_sgn: 60, k_sgn: 40, n_dec: 30, k_dec: 10, w_dec: 2 }), false),
        "desk-ibe" => (
            Scheme::RankIbe(RankIbeParams {
                sign: LrpcParams { a: 4, ..DESK_SIGN },
                n_dec: 24,
                k_dec: 2,
                d_dec: 2,
                w_dec: 1,
            }),
            false,
        ),
        "table1-row1" => (Scheme::RankSign(table1(0)), true),
        "table1-row2" => (Scheme::RankSign(table1(1)), true),
        "table1-row3" => (Scheme::RankSign(table1(2)), true),
        "table1-row4" => (Scheme::RankSign(table1(3)), true),
        "table2" => (
            Scheme::Ibe {
                params: IbeParams { n_sgn: 100, k_sgn: 80, m: 96, a: 192, n_dec: 96, k_dec: 9, w_sgn: 0, w_dec: 4 },
                w_sgn_at_gv: true,
            },
            true,
        ),
        "recipe" => (
            Scheme::Ibe {
                params: IbeParams { n_sgn: 100, k_sgn: 75, m: 100, a: 1, n_dec: 96, k_dec: 4, w_sgn: 0, w_dec: 4 },
                w_sgn_at_gv: true,
            },
            true,
        ),
        _ => return None,
    };
    Some(Profile { name: name.into(), scheme, read_only })
}

impl Profile {
    /// A built-in name, else the contents of a profile file.
    pub fn resolve(name_or_path: &str) -> Result<Profile> {
        if let Some(p) = builtin(name_or_path) {
            return Ok(p);
        }
        let text = std::fs::read_to_string(name_or_path)
            .map_err(|e| Error::Param(format!("{name_or_path:?} is neither a built-in profile nor a readable file: {e}")))?;
        Profile::from_text(&text)
    }

    pub fn to_text(&self) -> String {
        let doc = Document::new("PROFILE", self.scheme.tag()).field("name", &self.name).field("read_only", self.read_only);
        match &self.scheme {
            Scheme::RankSign(p) => params_fields(doc, p),
            Scheme::Rsl(p) => rsl::params_doc(doc, p),
            Scheme::Hamming(p) => hamming_fields(doc, p),
            Scheme::RankIbe(p) => rank_fields(doc, p),
            Scheme::Ibe { params: p, w_sgn_at_gv } => doc
                .field("n_sgn", p.n_sgn)
                .field("k_sgn", p.k_sgn)
                .field("m", p.m)
                .field("a", p.a)
                .field("n_dec", p.n_dec)
                .field("k_dec", p.k_dec)
                .field("w_sgn", if *w_sgn_at_gv { "gv".to_string() } else { p.w_sgn.to_string() })
                .field("w_dec", p.w_dec),
        }
        .render()
    }

    pub fn from_text(text: &str) -> Result<Profile> {
        let doc = Document::parse(text)?;
        if doc.kind != "PROFILE" {
            return Err(Error::Parse(format!("expected a PROFILE document, found {}", doc.kind)));
        }
        let scheme = match doc.role.as_str() {
            "ranksign" => Scheme::RankSign(params_from(&doc)?),
            "rsl" => Scheme::Rsl(rsl::params_from(&doc)?),
            "hamming" => Scheme::Hamming(hamming_params_from(&doc)?),
            "rank-ibe" => Scheme::RankIbe(rank_params_from(&doc)?),
            "ibe-check" => {
                let w = doc.get("w_sgn")?;
                let at_gv = w == "gv";
                let params = IbeParams {
                    n_sgn: doc.get_usize("n_sgn")?,
                    k_sgn: doc.get_usize("k_sgn")?,
                    m: doc.get_usize("m")?,
                    a: doc.get_usize("a")? as u32,
                    n_dec: doc.get_usize("n_dec")?,
                    k_dec: doc.get_usize("k_dec")?,
                    w_sgn: if at_gv { 0 } else { doc.get_usize("w_sgn")? },
                    w_dec: doc.get_usize("w_dec")?,
                };
                if params.k_sgn > params.n_sgn || params.k_dec > params.n_dec {
                    return Err(Error::Parse("profile needs k ≤ n".into()));
                }
                Scheme::Ibe { params, w_sgn_at_gv: at_gv }
            }
            other => return Err(Error::Parse(format!("unknown profile scheme {other:?}"))),
        };
        let read_only = match doc.get("read_only").unwrap_or("false") {
            "true" => true,
            "false" => false,
            v => return Err(Error::Parse(format!("read_only = {v:?}"))),
        };
        Ok(Profile { name: doc.get("name").unwrap_or("file").to_string(), scheme, read_only })
    }

    /// The validator gate applied before a pipeline runs (skipped by
    /// `--force`).
    pub fn validate(&self) -> Result<()> {
        match &self.scheme {
            Scheme::RankSign(p) => {
                let rep = validate_params(p);
                match rep.checks.iter().find(|c| !c.holds()) {
                    Some(c) => Err(Error::Param(format!("{} fails: {} ≠ {}", c.name, c.lhs, c.rhs))),
                    None if rep.derived_w.is_none() => Err(Error::Param("w is not integral".into())),
                    None => Ok(()),
                }
            }
            Scheme::Rsl(p) => p.validate(),
            Scheme::Hamming(p) => {
                if p.k_sgn >= p.n_sgn || p.k_dec >= p.n_dec || p.k_dec == 0 || p.w_dec > p.n_sgn {
                    return Err(Error::Param(format!("inconsistent Hamming parameters {p:?}")));
                }
                Ok(())
            }
            Scheme::RankIbe(p) => check_rank_params(p, false).map(|_| ()),
            Scheme::Ibe { .. } => {
                let rep = self.check()?;
                match rep.lines.iter().find(|l| l.holds == Some(false)) {
                    Some(l) => Err(Error::Param(format!("{} fails: {}", l.name, l.value))),
                    None => Ok(()),
                }
            }
        }
    }

    pub fn check(&self) -> Result<CheckReport> {
        let mut r = CheckReport { profile: self.name.clone(), scheme: self.scheme.tag(), params: Vec::new(), lines: Vec::new() };
        match &self.scheme {
            Scheme::RankSign(p) => {
                r.params(&[("n", p.n), ("k", p.k), ("m", p.m), ("d", p.d), ("t", p.t)]);
                r.param("q", format!("2^{}", p.a));
                r.params(&[("w", p.w), ("t'", p.t_prime)]);
                ranksign_lines(&mut r, p);
            }
            Scheme::Rsl(p) => {
                r.params(&[("n", p.n), ("k", p.k), ("N", p.big_n), ("w", p.w), ("m", p.m)]);
                r.param("q", format!("2^{}", p.a));
                r.push("N <= m(n - k)", format!("{} <= {}", p.big_n, p.m * (p.n - p.k.min(p.n))), Some(p.validate().is_ok()));
                r.push("A shape", format!("{}x{}", p.n.saturating_sub(p.k), p.n), None);
                r.push("B shape", format!("{}x{}", p.n.saturating_sub(p.k), p.big_n), None);
                let bound = theorem_bound(p);
                r.push("dim C' >= N - wk", bound.to_string(), Some(bound > 0));
            }
            Scheme::Hamming(p) => {
                r.params(&[("n_sgn", p.n_sgn), ("k_sgn", p.k_sgn), ("n_dec", p.n_dec), ("k_dec", p.k_dec), ("w_dec", p.w_dec)]);
                r.push("parameters consistent", String::new(), Some(self.validate().is_ok()));
                if p.k_sgn <= p.n_sgn && p.w_dec <= p.k_sgn {
                    let it = prange_expected_iterations(p.n_sgn, p.k_sgn, p.w_dec);
                    r.push("Prange iterations per column", format!("{it:.4}"), None);
                    r.push("Prange iterations for E", format!("{:.2}", it * p.n_dec as f64), None);
                    let bits = log2_binomial(p.n_sgn, p.w_dec) - log2_binomial(p.k_sgn, p.w_dec);
                    r.push("log2 iterations per column", format!("{bits:.4}"), None);
                }
            }
            Scheme::RankIbe(p) => {
                let s = &p.sign;
                r.params(&[("n", s.n), ("k", s.k), ("m", s.m), ("d", s.d), ("t", s.t), ("t'", s.t_prime), ("w", s.w)]);
                r.param("q", format!("2^{}", s.a));
                r.params(&[("n_dec", p.n_dec), ("k_dec", p.k_dec), ("d_dec", p.d_dec), ("w_dec", p.w_dec)]);
                ranksign_lines(&mut r, s);
                let shape = p.d_dec > 0 && p.k_dec > 0 && p.k_dec < p.n_dec && (p.n_dec - p.k_dec) * p.d_dec >= p.n_dec;
                r.push("decodable LRPC shape", format!("(n_dec - k_dec) d_dec >= n_dec with d_dec = {}", p.d_dec), Some(shape));
                ibe_lines(&mut r, &p.as_check(), &ibe_param_check(&p.as_check())?);
            }
            Scheme::Ibe { params, w_sgn_at_gv } => {
                let (p, rep) = if *w_sgn_at_gv { ibe_param_check_at_gv(params)? } else { (*params, ibe_param_check(params)?) };
                r.params(&[("n_sgn", p.n_sgn), ("k_sgn", p.k_sgn), ("m", p.m)]);
                r.param("q", format!("2^{}", p.a));
                r.params(&[("n_dec", p.n_dec), ("k_dec", p.k_dec), ("w_sgn", p.w_sgn), ("w_dec", p.w_dec)]);
                if *w_sgn_at_gv {
                    r.push("w_sgn", "set to gv(q, m, n_sgn, k_sgn)".into(), None);
                }
                ibe_lines(&mut r, &p, &rep);
            }
        }
        Ok(r)
    }
}

fn ranksign_lines(r: &mut CheckReport, p: &LrpcParams) {
    let rep = validate_params(p);
    for c in &rep.checks {
        r.push(c.name, format!("{} = {}", c.lhs, c.rhs), Some(c.holds()));
    }
    r.push(
        "w from n - k = d(w - t - t')",
        rep.derived_w.map_or("not integral".into(), |w| w.to_string()),
        Some(rep.derived_w == Some(p.w)),
    );
    let (eqs, unk) = ranksign_expected_counts(p.n, p.k, p.m, p.t);
    r.push("rank-1 system equations", eqs.to_string(), None);
    r.push("rank-1 system unknowns", unk.to_string(), None);
    if p.d > 0 {
        r.push("dim C'_pub >= n/d", (p.n / p.d).to_string(), None);
    }
}

fn ibe_lines(r: &mut CheckReport, p: &IbeParams, rep: &rsl::IbeReport) {
    r.push("gv_sgn", rep.gv_sgn.to_string(), None);
    r.push("gv_dec", rep.gv_dec.to_string(), None);
    for c in rep.constraints() {
        r.push(c.name, c.detail.clone(), Some(c.holds));
    }
    r.push("w_dec > 0", p.w_dec.to_string(), Some(!rep.degenerate));
    r.push("decoding slack 1 - w_sgn w_dec / min(m, n_dec)", format!("{:.4}", rep.prop1_slack), None);
    let (eqs, unk) = rsl_expected_counts(p.n_sgn, p.k_sgn, p.m, p.w_dec);
    r.push("RSL system equations", eqs.to_string(), None);
    r.push("RSL system unknowns", unk.to_string(), None);
    let rsl_bound = p.n_dec as i64 - (p.w_dec * (p.n_sgn - p.k_sgn)) as i64;
    r.push("RSL bound n_dec - w_dec(n_sgn - k_sgn)", rsl_bound.to_string(), None);
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReportLine {
    pub name: String,
    pub value: String,
    /// None for informational values.
    pub holds: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckReport {
    pub profile: String,
    pub scheme: &'static str,
    pub params: Vec<(String, String)>,
    pub lines: Vec<ReportLine>,
}

impl CheckReport {
    fn param(&mut self, name: &str, value: String) {
        self.params.push((name.into(), value));
    }

    fn params(&mut self, kv: &[(&str, usize)]) {
        for (k, v) in kv {
            self.param(k, v.to_string());
        }
    }

    fn push(&mut self, name: &str, value: String, holds: Option<bool>) {
        self.lines.push(ReportLine { name: name.into(), value, holds });
    }

    pub fn line(&self, name: &str) -> Option<&ReportLine> {
        self.lines.iter().find(|l| l.name == name)
    }

    pub fn ok(&self) -> bool {
        self.lines.iter().all(|l| l.holds != Some(false))
    }

    pub fn render(&self) -> String {
        let mut out = format!("profile {} ({})\n", self.profile, self.scheme);
        let params: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(out, "params {}", params.join(" "));
        let width = self.lines.iter().map(|l| l.name.chars().count()).max().unwrap_or(0);
        for l in &self.lines {
            let mark = match l.holds {
                Some(true) => "ok",
                Some(false) => "FAIL",
                None => "-",
            };
            let pad = width - l.name.chars().count();
            let _ = writeln!(out, "{}{}  {:<4}  {}", l.name, " ".repeat(pad), mark, l.value);
        }
        out
    }
}
