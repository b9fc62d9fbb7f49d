//! Rank-w codeword search in a linear space of matrices as a bilinear
//! system, with variable fixings and two solvers.
//!
//! A candidate M = Σ_l x^l·(y^l)ᵀ with x^l ∈ F_q^{nx}, y^l ∈ F_q^{ny} lies in
//! the code iff every parity-check row r gives
//! Σ_l Σ_{i,j} H[r, i·ny + j]·x_i^l·y_j^l = 0.
//!
//! Variables are indexed x-blocks first (l·nx + i), then y-blocks
//! (w·nx + l·ny + j). That index order is also the lexicographic order
//! used by linearization.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::algebra::{solve_small, BitMatrix, ExtField, Fq, MatFq, Matrix};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    /// x_i^l as (l, i).
    X(usize, usize),
    /// y_j^l as (l, j).
    Y(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fixing {
    Assign(Var, u32),
    /// (v − α)(v − β) = 0.
    Quadratic { var: Var, alpha: u32, beta: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Term {
    pub l: usize,
    pub i: usize,
    pub j: usize,
    pub c: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BilinearSystem {
    /// Only the F_q arithmetic of this field is used.
    pub ext: ExtField,
    pub w: usize,
    pub nx: usize,
    pub ny: usize,
    pub eqs: Vec<Vec<Term>>,
    pub fixings: Vec<Fixing>,
}

/// Equation and unknown counts of a built system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Census {
    pub bilinear: usize,
    pub assignments: usize,
    pub quadratic: usize,
    pub equations: usize,
    pub unknowns: usize,
    pub free_unknowns: usize,
}

impl BilinearSystem {
    pub fn q(&self) -> u64 {
        self.ext.q()
    }

    pub fn num_vars(&self) -> usize {
        self.w * (self.nx + self.ny)
    }

    pub fn var_index(&self, v: Var) -> usize {
        match v {
            Var::X(l, i) => l * self.nx + i,
            Var::Y(l, j) => self.w * self.nx + l * self.ny + j,
        }
    }

    fn check_var(&self, v: Var) -> Result<()> {
        let ok = match v {
            Var::X(l, i) => l < self.w && i < self.nx,
            Var::Y(l, j) => l < self.w && j < self.ny,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Param(format!("variable {v:?} out of range for w={}, nx={}, ny={}", self.w, self.nx, self.ny)))
        }
    }

    pub fn with_fixing(mut self, f: Fixing) -> Result<Self> {
        let v = match f {
            Fixing::Assign(v, c) | Fixing::Quadratic { var: v, alpha: c, .. } => {
                if !self.ext.fq_is_valid(c) {
                    return Err(Error::Param(format!("constant {c} is not in F_{}", self.q())));
                }
                v
            }
        };
        self.check_var(v)?;
        self.fixings.push(f);
        Ok(self)
    }

    /// True iff (x, y) satisfies every equation and fixing.
    pub fn evaluate(&self, x: &[u32], y: &[u32]) -> bool {
        let fq = |a, b| self.ext.fq_mul(a, b);
        let value = |v: Var| match v {
            Var::X(l, i) => x[l * self.nx + i],
            Var::Y(l, j) => y[l * self.ny + j],
        };
        let eqs_ok = self.eqs.iter().all(|eq| {
            eq.iter().fold(0u32, |acc, t| acc ^ fq(t.c, fq(x[t.l * self.nx + t.i], y[t.l * self.ny + t.j]))) == 0
        });
        eqs_ok
            && self.fixings.iter().all(|f| match *f {
                Fixing::Assign(v, c) => value(v) == c,
                Fixing::Quadratic { var, alpha, beta } => {
                    let v = value(var);
                    fq(v ^ alpha, v ^ beta) == 0
                }
            })
    }

    /// M = Σ_l x^l·(y^l)ᵀ as an nx×ny matrix.
    pub fn reconstruct(&self, x: &[u32], y: &[u32]) -> MatFq {
        let mut m = Matrix::filled(self.nx, self.ny, 0u32);
        for l in 0..self.w {
            for i in 0..self.nx {
                for j in 0..self.ny {
                    let v = *m.get(i, j) ^ self.ext.fq_mul(x[l * self.nx + i], y[l * self.ny + j]);
                    m.set(i, j, v);
                }
            }
        }
        m
    }

    /// The same system with the roles of x and y exchanged, so that the
    /// reconstructed matrix is transposed.
    pub fn transposed(&self) -> BilinearSystem {
        let swap = |v: Var| match v {
            Var::X(l, i) => Var::Y(l, i),
            Var::Y(l, j) => Var::X(l, j),
        };
        BilinearSystem {
            ext: self.ext.clone(),
            w: self.w,
            nx: self.ny,
            ny: self.nx,
            eqs: self.eqs.iter().map(|eq| eq.iter().map(|t| Term { l: t.l, i: t.j, j: t.i, c: t.c }).collect()).collect(),
            fixings: self
                .fixings
                .iter()
                .map(|f| match *f {
                    Fixing::Assign(v, c) => Fixing::Assign(swap(v), c),
                    Fixing::Quadratic { var, alpha, beta } => Fixing::Quadratic { var: swap(var), alpha, beta },
                })
                .collect(),
        }
    }

    pub fn census(&self) -> Census {
        let assignments = self.fixings.iter().filter(|f| matches!(f, Fixing::Assign(..))).count();
        let quadratic = self.fixings.len() - assignments;
        let mut fixed: Vec<usize> = self
            .fixings
            .iter()
            .filter_map(|f| match f {
                Fixing::Assign(v, _) => Some(self.var_index(*v)),
                _ => None,
            })
            .collect();
        fixed.sort_unstable();
        fixed.dedup();
        Census {
            bilinear: self.eqs.len(),
            assignments,
            quadratic,
            equations: self.eqs.len() + self.fixings.len(),
            unknowns: self.num_vars(),
            free_unknowns: self.num_vars() - fixed.len(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("BILIN {} {} {} {} {}\n", self.q(), self.w, self.nx, self.ny, self.eqs.len());
        for eq in &self.eqs {
            let toks: Vec<String> = eq.iter().map(|t| format!("{},{},{},{}", t.l, t.i, t.j, t.c)).collect();
            let _ = writeln!(out, "{}", toks.join(" "));
        }
        let _ = writeln!(out, "FIXINGS {}", self.fixings.len());
        let show = |v: Var| match v {
            Var::X(l, i) => format!("x {l} {i}"),
            Var::Y(l, j) => format!("y {l} {j}"),
        };
        for f in &self.fixings {
            let _ = match *f {
                Fixing::Assign(v, c) => writeln!(out, "{} = {c}", show(v)),
                Fixing::Quadratic { var, alpha, beta } => writeln!(out, "quad {} {alpha} {beta}", show(var)),
            };
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: String| Error::Parse(m);
        let mut lines = text.lines();
        let head: Vec<&str> = lines.next().unwrap_or("").split_whitespace().collect();
        if head.len() != 6 || head[0] != "BILIN" {
            return Err(bad("expected header `BILIN q w nx ny E`".into()));
        }
        let num = |s: &str| s.parse::<u64>().map_err(|_| bad(format!("bad integer {s:?}")));
        let q = num(head[1])?;
        if !q.is_power_of_two() || q < 2 {
            return Err(bad(format!("q = {q} is not a power of two")));
        }
        let ext = ExtField::new(q.trailing_zeros(), 1)?;
        let (w, nx, ny, ne) = (num(head[2])? as usize, num(head[3])? as usize, num(head[4])? as usize, num(head[5])?);
        let mut sys = BilinearSystem { ext, w, nx, ny, eqs: Vec::new(), fixings: Vec::new() };
        for _ in 0..ne {
            let line = lines.next().ok_or_else(|| bad("missing equation line".into()))?;
            let mut eq = Vec::new();
            for tok in line.split_whitespace() {
                let p: Vec<u64> = tok.split(',').map(num).collect::<Result<_>>()?;
                if p.len() != 4 {
                    return Err(bad(format!("term {tok:?} is not l,i,j,c")));
                }
                let t = Term { l: p[0] as usize, i: p[1] as usize, j: p[2] as usize, c: p[3] as u32 };
                if t.l >= w || t.i >= nx || t.j >= ny || !sys.ext.fq_is_valid(t.c) {
                    return Err(bad(format!("term {tok:?} out of range")));
                }
                eq.push(t);
            }
            sys.eqs.push(eq);
        }
        let fhead: Vec<&str> = lines.next().unwrap_or("").split_whitespace().collect();
        if fhead.len() != 2 || fhead[0] != "FIXINGS" {
            return Err(bad("expected `FIXINGS F`".into()));
        }
        for _ in 0..num(fhead[1])? {
            let toks: Vec<&str> = lines.next().unwrap_or("").split_whitespace().collect();
            let var = |kind: &str, l: &str, i: &str| -> Result<Var> {
                let (l, i) = (num(l)? as usize, num(i)? as usize);
                match kind {
                    "x" => Ok(Var::X(l, i)),
                    "y" => Ok(Var::Y(l, i)),
                    _ => Err(bad(format!("unknown variable kind {kind:?}"))),
                }
            };
            let f = match toks.as_slice() {
                [k, l, i, "=", c] => Fixing::Assign(var(k, l, i)?, num(c)? as u32),
                ["quad", k, l, i, a, b] => {
                    Fixing::Quadratic { var: var(k, l, i)?, alpha: num(a)? as u32, beta: num(b)? as u32 }
                }
                _ => return Err(bad(format!("bad fixing line {toks:?}"))),
            };
            sys = sys.with_fixing(f)?;
        }
        Ok(sys)
    }
}

/// One equation per parity-check row over the flattening index i·cols + j.
pub fn model_rank_w(ext: &ExtField, parity: &MatFq, rows: usize, cols: usize, w: usize) -> Result<BilinearSystem> {
    if parity.cols() != rows * cols {
        return Err(Error::Shape(format!("parity check has {} columns, expected {rows}·{cols}", parity.cols())));
    }
    let eqs = (0..parity.rows())
        .map(|r| {
            let mut eq = Vec::new();
            for l in 0..w {
                for i in 0..rows {
                    for j in 0..cols {
                        let c = *parity.get(r, i * cols + j);
                        if c != 0 {
                            eq.push(Term { l, i, j, c });
                        }
                    }
                }
            }
            eq
        })
        .collect();
    Ok(BilinearSystem { ext: ext.clone(), w, nx: rows, ny: cols, eqs, fixings: Vec::new() })
}

/// Positions used by the rank-1 fixings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rank1Positions {
    /// x coordinate normalized to 1.
    pub x_one: usize,
    /// y coordinates forced to 0.
    pub y_zero: Vec<usize>,
    /// y coordinate normalized to 1.
    pub y_one: usize,
    /// x coordinate restricted to {α, β}.
    pub x_quad: usize,
}

impl Rank1Positions {
    /// x_1 = 1; y_1 = … = y_{n/d−1} = 0, y_{n/d} = 1; quadratic on x_2.
    pub fn standard(n: usize, d: usize) -> Self {
        let nd = n / d;
        Rank1Positions { x_one: 0, y_zero: (0..nd - 1).collect(), y_one: nd - 1, x_quad: 1 }
    }
}

/// Rank-1 fixings at the standard positions; the quadratic fixing is
/// dropped at q = 2, where x² = x makes it vacuous.
pub fn apply_ranksign_fixings(sys: BilinearSystem, n: usize, d: usize, alpha_beta: Option<(u32, u32)>) -> Result<BilinearSystem> {
    if d == 0 || n % d != 0 || n / d == 0 {
        return Err(Error::Param(format!("d = {d} must divide n = {n}")));
    }
    apply_ranksign_fixings_at(sys, &Rank1Positions::standard(n, d), alpha_beta)
}

pub fn apply_ranksign_fixings_at(
    sys: BilinearSystem,
    pos: &Rank1Positions,
    alpha_beta: Option<(u32, u32)>,
) -> Result<BilinearSystem> {
    if sys.w != 1 {
        return Err(Error::Param("rank-1 fixings need a single block".into()));
    }
    if pos.y_zero.contains(&pos.y_one) {
        return Err(Error::Param("normalized y coordinate is also forced to zero".into()));
    }
    let q = sys.q();
    let mut sys = sys.with_fixing(Fixing::Assign(Var::X(0, pos.x_one), 1))?;
    for &j in &pos.y_zero {
        sys = sys.with_fixing(Fixing::Assign(Var::Y(0, j), 0))?;
    }
    sys = sys.with_fixing(Fixing::Assign(Var::Y(0, pos.y_one), 1))?;
    if let (Some((alpha, beta)), true) = (alpha_beta, q > 2) {
        sys = sys.with_fixing(Fixing::Quadratic { var: Var::X(0, pos.x_quad), alpha, beta })?;
    }
    Ok(sys)
}

/// Systematic x-blocks on `x_cols` (x_{c_i}^l = δ_{il}), y_j^l = 0 for every
/// (j, l) in `zero`, and y_{j0}^{l0} = 1.
pub fn apply_rsl_fixings(
    sys: BilinearSystem,
    x_cols: &[usize],
    zero: &[(usize, usize)],
    pivot: (usize, usize),
) -> Result<BilinearSystem> {
    if x_cols.len() != sys.w {
        return Err(Error::Param(format!("{} systematic columns for {} blocks", x_cols.len(), sys.w)));
    }
    if zero.contains(&pivot) {
        return Err(Error::Param(format!("pivot {pivot:?} lies in the zero set")));
    }
    let w = sys.w;
    let mut sys = sys;
    for (i, &c) in x_cols.iter().enumerate() {
        for l in 0..w {
            sys = sys.with_fixing(Fixing::Assign(Var::X(l, c), u32::from(i == l)))?;
        }
    }
    for &(j, l) in zero {
        sys = sys.with_fixing(Fixing::Assign(Var::Y(l, j), 0))?;
    }
    sys.with_fixing(Fixing::Assign(Var::Y(pivot.1, pivot.0), 1))
}

/// (equations, unknowns) = (nm − k(m+1) − t + 2, m − 1 + n + t).
pub fn ranksign_expected_counts(n: usize, k: usize, m: usize, t: usize) -> (i64, i64) {
    let (n, k, m, t) = (n as i64, k as i64, m as i64, t as i64);
    (n * m - k * (m + 1) - t + 2, m - 1 + n + t)
}

/// (equations, unknowns) = (m·k_sgn + w_dec² + (n_sgn − k_sgn), m·w_dec + k_sgn·w_dec).
pub fn rsl_expected_counts(n_sgn: usize, k_sgn: usize, m: usize, w_dec: usize) -> (i64, i64) {
    let (n, k, m, w) = (n_sgn as i64, k_sgn as i64, m as i64, w_dec as i64);
    (m * k + w * w + (n - k), m * w + k * w)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Enumerate,
    Linearize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub linearized_rows: usize,
    pub linearized_cols: usize,
    pub degree: usize,
    pub candidates: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverResult {
    /// (x, y) in block-major layout, fixed variables included.
    pub solutions: Vec<(Vec<u32>, Vec<u32>)>,
    pub strategy: Strategy,
    pub stats: Stats,
    /// True when `solutions` is provably every solution.
    pub complete: bool,
}

/// Fixed values per variable, or `None` when two assignments conflict.
fn resolve_assignments(sys: &BilinearSystem) -> Option<Vec<Option<u32>>> {
    let mut fixed = vec![None; sys.num_vars()];
    for f in &sys.fixings {
        if let Fixing::Assign(v, c) = *f {
            let slot = &mut fixed[sys.var_index(v)];
            match *slot {
                Some(old) if old != c => return None,
                _ => *slot = Some(c),
            }
        }
    }
    Some(fixed)
}

fn quadratics_hold(sys: &BilinearSystem, values: &[Option<u32>]) -> bool {
    sys.fixings.iter().all(|f| match *f {
        Fixing::Quadratic { var, alpha, beta } => match values[sys.var_index(var)] {
            Some(v) => sys.ext.fq_mul(v ^ alpha, v ^ beta) == 0,
            None => true,
        },
        _ => true,
    })
}

fn split(sys: &BilinearSystem, full: &[u32]) -> (Vec<u32>, Vec<u32>) {
    let nxv = sys.w * sys.nx;
    (full[..nxv].to_vec(), full[nxv..].to_vec())
}

fn verified(sys: &BilinearSystem, sols: &[(Vec<u32>, Vec<u32>)]) -> Result<()> {
    if sols.iter().all(|(x, y)| sys.evaluate(x, y)) {
        Ok(())
    } else {
        Err(Error::Anomaly("solver produced an assignment that fails the system".into()))
    }
}

/// Source of a factor in a term after substituting fixed variables.
#[derive(Clone, Copy)]
enum Src {
    Fixed(u32),
    Free(usize),
}

/// Enumerates every assignment of the side with fewer free unknowns and
/// solves the remaining linear system in the other side. Complete: returns
/// every solution, or refuses with `Budget` when the cube or the solution
/// count exceeds `budget`. The cube is split into `threads` contiguous
/// ranges.
pub fn solve_enumerate(sys: &BilinearSystem, budget: u64, threads: usize) -> Result<SolverResult> {
    let Some(fixed) = resolve_assignments(sys) else {
        return Ok(SolverResult { solutions: Vec::new(), strategy: Strategy::Enumerate, stats: Stats::default(), complete: true });
    };
    let nxv = sys.w * sys.nx;
    let free_x = fixed[..nxv].iter().filter(|v| v.is_none()).count();
    let free_y = fixed[nxv..].iter().filter(|v| v.is_none()).count();
    if free_y < free_x {
        let mut res = enumerate_x_side(&sys.transposed(), budget, threads)?;
        for (x, y) in &mut res.solutions {
            std::mem::swap(x, y);
        }
        verified(sys, &res.solutions)?;
        return Ok(res);
    }
    enumerate_x_side(sys, budget, threads)
}

fn enumerate_x_side(sys: &BilinearSystem, budget: u64, threads: usize) -> Result<SolverResult> {
    let mut result =
        SolverResult { solutions: Vec::new(), strategy: Strategy::Enumerate, stats: Stats::default(), complete: true };
    let Some(fixed) = resolve_assignments(sys) else {
        return Ok(result);
    };
    let nxv = sys.w * sys.nx;
    let free_x: Vec<usize> = (0..nxv).filter(|&v| fixed[v].is_none()).collect();
    let free_y: Vec<usize> = (nxv..sys.num_vars()).filter(|&v| fixed[v].is_none()).collect();
    let q = sys.q();
    let a = sys.ext.a();
    let cube = (free_x.len() as u32)
        .checked_mul(a)
        .filter(|&bits| bits < 63)
        .map(|bits| 1u64 << bits)
        .filter(|&c| c <= budget)
        .ok_or_else(|| Error::Budget(format!("x-cube q^{} exceeds the budget {budget}", free_x.len())))?;
    let mut x_pos = vec![usize::MAX; sys.num_vars()];
    for (p, &v) in free_x.iter().enumerate() {
        x_pos[v] = p;
    }
    let mut y_pos = vec![usize::MAX; sys.num_vars()];
    for (p, &v) in free_y.iter().enumerate() {
        y_pos[v] = p;
    }
    let src = |v: usize, pos: &[usize]| match fixed[v] {
        Some(c) => Src::Fixed(c),
        None => Src::Free(pos[v]),
    };
    // per equation: (coefficient, x source, y source)
    let eqs: Vec<Vec<(u32, Src, Src)>> = sys
        .eqs
        .iter()
        .map(|eq| {
            eq.iter()
                .map(|t| {
                    let xv = t.l * sys.nx + t.i;
                    let yv = nxv + t.l * sys.ny + t.j;
                    (t.c, src(xv, &x_pos), src(yv, &y_pos))
                })
                .collect()
        })
        .collect();
    let ny_free = free_y.len();
    let fast = q == 2 && ny_free < 64;
    let work = |lo: u64, hi: u64| -> Result<(Vec<(Vec<u32>, Vec<u32>)>, u64)> {
        let mut out = Vec::new();
        let mut values: Vec<Option<u32>> = fixed.clone();
        for idx in lo..hi {
            let xs: Vec<u32> = (0..free_x.len()).map(|p| ((idx >> (p as u32 * a)) & (q - 1)) as u32).collect();
            for (p, &v) in free_x.iter().enumerate() {
                values[v] = Some(xs[p]);
            }
            for &v in &free_y {
                values[v] = None;
            }
            if !quadratics_hold(sys, &values) {
                continue;
            }
            let xval = |s: Src| match s {
                Src::Fixed(c) => c,
                Src::Free(p) => xs[p],
            };
            let points: Vec<Vec<u32>> = if fast {
                let mut rows: Vec<u64> = eqs
                    .iter()
                    .map(|eq| {
                        let mut row = 0u64;
                        for &(c, xs_, ys_) in eq {
                            if c & xval(xs_) == 0 {
                                continue;
                            }
                            match ys_ {
                                Src::Free(p) => row ^= 1 << p,
                                Src::Fixed(yc) => row ^= u64::from(yc) << ny_free,
                            }
                        }
                        row
                    })
                    .collect();
                let Some((y0, ker)) = solve_small(&mut rows, ny_free) else {
                    continue;
                };
                if ker.len() >= 63 || (1u64 << ker.len()) > budget {
                    return Err(Error::Budget(format!("2^{} y-solutions for one x", ker.len())));
                }
                (0..1u64 << ker.len())
                    .map(|mask| {
                        let mut y = y0;
                        for (b, &k) in ker.iter().enumerate() {
                            if mask >> b & 1 == 1 {
                                y ^= k;
                            }
                        }
                        (0..ny_free).map(|p| (y >> p & 1) as u32).collect()
                    })
                    .collect()
            } else {
                let f = Fq(sys.ext.clone());
                let mut a_mat = Matrix::filled(eqs.len(), ny_free, 0u32);
                let mut rhs = vec![0u32; eqs.len()];
                for (r, eq) in eqs.iter().enumerate() {
                    for &(c, xs_, ys_) in eq {
                        let cx = sys.ext.fq_mul(c, xval(xs_));
                        match ys_ {
                            Src::Free(p) => {
                                let v = *a_mat.get(r, p) ^ cx;
                                a_mat.set(r, p, v);
                            }
                            Src::Fixed(yc) => rhs[r] ^= sys.ext.fq_mul(cx, yc),
                        }
                    }
                }
                let Some(sol) = a_mat.solve(&f, &rhs) else {
                    continue;
                };
                let count = (sol.kernel.len() as u32).checked_mul(a).filter(|&b| b < 63).map(|b| 1u64 << b);
                if count.is_none_or(|c| c > budget) {
                    return Err(Error::Budget(format!("q^{} y-solutions for one x", sol.kernel.len())));
                }
                affine_points(&sys.ext, &sol.x, &sol.kernel)
            };
            for yfree in points {
                for (p, &v) in free_y.iter().enumerate() {
                    values[v] = Some(yfree[p]);
                }
                if quadratics_hold(sys, &values) {
                    let full: Vec<u32> = values.iter().map(|v| v.expect("all variables assigned")).collect();
                    out.push(split(sys, &full));
                    if out.len() as u64 > budget {
                        return Err(Error::Budget(format!("more than {budget} solutions")));
                    }
                }
            }
        }
        Ok((out, hi - lo))
    };
    let threads = threads.max(1) as u64;
    let chunk = cube.div_ceil(threads);
    let parts: Vec<Result<(Vec<(Vec<u32>, Vec<u32>)>, u64)>> = if threads == 1 {
        vec![work(0, cube)]
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    let (lo, hi) = ((t * chunk).min(cube), ((t + 1) * chunk).min(cube));
                    let work = &work;
                    s.spawn(move || work(lo, hi))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("enumeration worker panicked")).collect()
        })
    };
    for part in parts {
        let (sols, n) = part?;
        result.solutions.extend(sols);
        result.stats.candidates += n;
    }
    if result.solutions.len() as u64 > budget {
        return Err(Error::Budget(format!("more than {budget} solutions")));
    }
    verified(sys, &result.solutions)?;
    Ok(result)
}

/// Every point of x0 + span(kernel) over F_q, kernel combinations in
/// little-endian base-q order.
fn affine_points(ext: &ExtField, x0: &[u32], kernel: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let q = ext.q();
    let total = q.pow(kernel.len() as u32);
    (0..total)
        .map(|mut idx| {
            let mut x = x0.to_vec();
            for k in kernel {
                let c = (idx % q) as u32;
                idx /= q;
                if c != 0 {
                    for (xi, ki) in x.iter_mut().zip(k) {
                        *xi ^= ext.fq_mul(c, *ki);
                    }
                }
            }
            x
        })
        .collect()
}

type Monomial = Vec<u16>;

/// Sparse polynomial over the free variables.
#[derive(Clone, Debug, Default)]
struct Poly(BTreeMap<Monomial, u32>);

impl Poly {
    fn add_term(&mut self, mono: Monomial, c: u32) {
        if c == 0 {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.0.entry(mono) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() ^= c;
                if *e.get() == 0 {
                    e.remove();
                }
            }
        }
    }

    fn degree(&self) -> usize {
        self.0.keys().map(Vec::len).max().unwrap_or(0)
    }

    fn eval(&self, ext: &ExtField, vals: &[u32]) -> u32 {
        self.0.iter().fold(0, |acc, (mono, &c)| acc ^ mono.iter().fold(c, |p, &v| ext.fq_mul(p, vals[v as usize])))
    }
}

fn mono_mul(a: &[u16], b: &[u16], boolean: bool) -> Monomial {
    let mut out: Vec<u16> = a.iter().chain(b).copied().collect();
    out.sort_unstable();
    if boolean {
        out.dedup();
    }
    out
}

/// Monomials of degree ≤ d in `n` variables, squarefree when boolean.
fn monomials_up_to(n: usize, d: usize, boolean: bool) -> Vec<Monomial> {
    fn rec(n: usize, start: usize, left: usize, boolean: bool, cur: &mut Monomial, out: &mut Vec<Monomial>) {
        out.push(cur.clone());
        if left == 0 {
            return;
        }
        for v in start..n {
            cur.push(v as u16);
            rec(n, if boolean { v + 1 } else { v }, left - 1, boolean, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, 0, d, boolean, &mut Vec::new(), &mut out);
    out
}

/// Largest candidate set enumerated after linearization.
pub const CANDIDATE_CAP_LOG2: u32 = 20;
const MAX_GF2_CELLS: usize = 1 << 30;
const MAX_FQ_CELLS: usize = 1 << 25;

/// XL linearization with degree escalation from 2 to `max_degree`.
///
/// At degree D every polynomial p is multiplied by all monomials of degree
/// ≤ D − deg p (squarefree at q = 2, where x² = x). Columns are ordered by
/// decreasing degree, then lexicographically, the constant last, so after
/// reduction the rows led by degree-1 monomials describe the projection of
/// the solution set onto the variables. That affine set is enumerated when
/// it has at most 2^20 points and each candidate is checked against the
/// original system. A completed enumeration is exhaustive.
pub fn solve_linearize(sys: &BilinearSystem, max_degree: usize) -> Result<SolverResult> {
    if max_degree < 2 {
        return Err(Error::Param("linearization needs max_degree ≥ 2".into()));
    }
    let mut result =
        SolverResult { solutions: Vec::new(), strategy: Strategy::Linearize, stats: Stats::default(), complete: true };
    let Some(fixed) = resolve_assignments(sys) else {
        return Ok(result);
    };
    if !quadratics_hold(sys, &fixed) {
        return Ok(result);
    }
    let ext = &sys.ext;
    let boolean = sys.q() == 2;
    let free: Vec<usize> = (0..sys.num_vars()).filter(|&v| fixed[v].is_none()).collect();
    let mut pos = vec![u16::MAX; sys.num_vars()];
    for (p, &v) in free.iter().enumerate() {
        pos[v] = p as u16;
    }
    let nf = free.len();
    let factor = |v: usize| -> (u32, Option<u16>) {
        match fixed[v] {
            Some(c) => (c, None),
            None => (1, Some(pos[v])),
        }
    };
    let mut polys: Vec<Poly> = Vec::new();
    for eq in &sys.eqs {
        let mut p = Poly::default();
        for t in eq {
            let (cx, vx) = factor(t.l * sys.nx + t.i);
            let (cy, vy) = factor(sys.w * sys.nx + t.l * sys.ny + t.j);
            let c = ext.fq_mul(t.c, ext.fq_mul(cx, cy));
            let mono: Monomial = vx.into_iter().chain(vy).collect();
            p.add_term(mono_mul(&mono, &[], boolean), c);
        }
        polys.push(p);
    }
    for f in &sys.fixings {
        if let Fixing::Quadratic { var, alpha, beta } = *f {
            if let Some(v) = factor(sys.var_index(var)).1 {
                let mut p = Poly::default();
                p.add_term(mono_mul(&[v, v], &[], boolean), 1);
                p.add_term(vec![v], alpha ^ beta);
                p.add_term(Vec::new(), ext.fq_mul(alpha, beta));
                polys.push(p);
            }
        }
    }
    polys.retain(|p| !p.0.is_empty());
    if polys.iter().any(|p| p.degree() == 0) {
        return Ok(result);
    }
    let to_full = |vals: &[u32]| -> Vec<u32> {
        let mut full: Vec<u32> = fixed.iter().map(|v| v.unwrap_or(0)).collect();
        for (p, &v) in free.iter().enumerate() {
            full[v] = vals[p];
        }
        full
    };
    let fqf = Fq(ext.clone());
    for degree in 2..=max_degree {
        let mut rows: Vec<Poly> = Vec::new();
        for p in &polys {
            let dp = p.degree();
            if dp > degree {
                continue;
            }
            for u in monomials_up_to(nf, degree - dp, boolean) {
                let mut r = Poly::default();
                for (mono, &c) in &p.0 {
                    r.add_term(mono_mul(mono, &u, boolean), c);
                }
                if !r.0.is_empty() {
                    rows.push(r);
                }
            }
        }
        let mut cols: Vec<Monomial> = rows.iter().flat_map(|r| r.0.keys().cloned()).collect();
        cols.sort_unstable_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        cols.dedup();
        if !cols.last().is_some_and(Vec::is_empty) {
            cols.push(Vec::new());
        }
        let index: HashMap<&Monomial, usize> = cols.iter().enumerate().map(|(i, m)| (m, i)).collect();
        let ncols = cols.len();
        let const_col = ncols - 1;
        let first_linear = cols.iter().position(|m| m.len() <= 1).expect("constant column present");
        result.stats = Stats { linearized_rows: rows.len(), linearized_cols: ncols, degree, candidates: 0 };
        let cells = rows.len().saturating_mul(ncols);
        // relations Σ a_v·v = c among the free variables
        let mut relations: Vec<(Vec<u32>, u32)> = Vec::new();
        if boolean {
            if cells > MAX_GF2_CELLS {
                return Err(Error::Budget(format!("linearized system {}x{ncols} exceeds memory budget", rows.len())));
            }
            let mut m = BitMatrix::zeros(rows.len(), ncols);
            for (i, r) in rows.iter().enumerate() {
                for mono in r.0.keys() {
                    m.set(i, index[mono], true);
                }
            }
            let piv = m.rref();
            for (i, &p) in piv.iter().enumerate() {
                if p >= first_linear {
                    let mut a = vec![0u32; nf];
                    for c in first_linear..const_col {
                        if m.get(i, c) {
                            a[cols[c][0] as usize] = 1;
                        }
                    }
                    relations.push((a, u32::from(m.get(i, const_col))));
                }
            }
        } else {
            if cells > MAX_FQ_CELLS {
                return Err(Error::Budget(format!("linearized system {}x{ncols} exceeds memory budget", rows.len())));
            }
            let mut m = Matrix::filled(rows.len(), ncols, 0u32);
            for (i, r) in rows.iter().enumerate() {
                for (mono, &c) in &r.0 {
                    m.set(i, index[mono], c);
                }
            }
            let red = m.rref(&fqf);
            for (i, &p) in red.pivots.iter().enumerate() {
                if p >= first_linear {
                    let mut a = vec![0u32; nf];
                    for c in first_linear..const_col {
                        a[cols[c][0] as usize] = *red.r.get(i, c);
                    }
                    relations.push((a, *red.r.get(i, const_col)));
                }
            }
        }
        if relations.iter().any(|(a, c)| *c != 0 && a.iter().all(|&x| x == 0)) {
            return Ok(result);
        }
        let a_mat = Matrix::from_rows(relations.iter().map(|(a, _)| a.clone()).collect(), nf);
        let rhs: Vec<u32> = relations.iter().map(|(_, c)| *c).collect();
        let sol = if relations.is_empty() {
            Some(crate::algebra::Solution { x: vec![0; nf], kernel: Matrix::<u32>::identity(&fqf, nf).to_rows() })
        } else {
            a_mat.solve(&fqf, &rhs)
        };
        let Some(sol) = sol else {
            return Ok(result);
        };
        if sol.kernel.len() as u64 * u64::from(ext.a()) > u64::from(CANDIDATE_CAP_LOG2) {
            continue;
        }
        let cands = affine_points(ext, &sol.x, &sol.kernel);
        result.stats.candidates = cands.len() as u64;
        for c in cands {
            if polys.iter().all(|p| p.eval(ext, &c) == 0) {
                let full = to_full(&c);
                let (x, y) = split(sys, &full);
                if sys.evaluate(&x, &y) {
                    result.solutions.push((x, y));
                }
            }
        }
        verified(sys, &result.solutions)?;
        return Ok(result);
    }
    Err(Error::Exhausted(format!("solution set undetermined at degree {max_degree}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng_from_seed;

    fn fq_ext(a: u32) -> ExtField {
        ExtField::new(a, 1).unwrap()
    }

    /// Parity check of the span of `gens` (flattened rows·cols matrices).
    fn parity_of(ext: &ExtField, gens: &[Vec<u32>], len: usize) -> MatFq {
        let f = ext.fq();
        let g = Matrix::from_rows(gens.to_vec(), len);
        let ker = g.kernel(&f);
        Matrix::from_rows(ker, len)
    }

    fn rank1(ext: &ExtField, rows: usize, cols: usize, rng: &mut crate::Rng) -> Vec<u32> {
        loop {
            let x: Vec<u32> = (0..rows).map(|_| ext.fq_random(rng)).collect();
            let y: Vec<u32> = (0..cols).map(|_| ext.fq_random(rng)).collect();
            if x.iter().any(|&v| v != 0) && y.iter().any(|&v| v != 0) {
                return (0..rows).flat_map(|i| y.iter().map(move |&yj| (i, yj))).map(|(i, yj)| ext.fq_mul(x[i], yj)).collect();
            }
        }
    }

    /// A random code of dimension `dim` containing a planted rank-1 word.
    fn planted(ext: &ExtField, rows: usize, cols: usize, dim: usize, rng: &mut crate::Rng) -> (MatFq, Vec<u32>) {
        let word = rank1(ext, rows, cols, rng);
        let mut gens = vec![word.clone()];
        for _ in 1..dim {
            gens.push((0..rows * cols).map(|_| ext.fq_random(rng)).collect());
        }
        (parity_of(ext, &gens, rows * cols), word)
    }

    fn flatten(m: &MatFq) -> Vec<u32> {
        m.data().to_vec()
    }

    #[test]
    fn empty_parity_check_gives_empty_system() {
        let ext = fq_ext(1);
        let sys = model_rank_w(&ext, &Matrix::filled(0, 6, 0), 2, 3, 1).unwrap();
        assert!(sys.eqs.is_empty());
        let r = solve_enumerate(&sys, 1 << 12, 1).unwrap();
        // every (x, y) in F_2^2 × F_2^3
        assert_eq!(r.solutions.len(), 32);
        assert!(matches!(solve_enumerate(&sys, 8, 1), Err(Error::Budget(_))));
        assert!(model_rank_w(&ext, &Matrix::filled(1, 5, 0), 2, 3, 1).is_err());
    }

    #[test]
    fn equations_follow_the_flattening() {
        let ext = fq_ext(2);
        let mut rng = rng_from_seed(1);
        let h = Matrix::random(&ext.fq(), 5, 12, &mut rng);
        let sys = model_rank_w(&ext, &h, 3, 4, 2).unwrap();
        for _ in 0..50 {
            let x: Vec<u32> = (0..6).map(|_| ext.fq_random(&mut rng)).collect();
            let y: Vec<u32> = (0..8).map(|_| ext.fq_random(&mut rng)).collect();
            let m = flatten(&sys.reconstruct(&x, &y));
            let in_code = h.mul_vec(&ext.fq(), &m).iter().all(|&v| v == 0);
            let no_fix = BilinearSystem { fixings: vec![], ..sys.clone() };
            assert_eq!(no_fix.evaluate(&x, &y), in_code);
        }
    }

    #[test]
    fn planted_rank1_found_by_enumeration() {
        let ext = fq_ext(1);
        let mut rng = rng_from_seed(2);
        for _ in 0..20 {
            let (h, word) = planted(&ext, 8, 9, 4, &mut rng);
            let sys = model_rank_w(&ext, &h, 8, 9, 1).unwrap();
            let r = solve_enumerate(&sys, 1 << 20, 2).unwrap();
            assert!(r.solutions.iter().any(|(x, y)| flatten(&sys.reconstruct(x, y)) == word));
            for (x, y) in &r.solutions {
                let m = sys.reconstruct(x, y);
                assert!(m.rank(&ext.fq()) <= 1);
            }
        }
    }

    #[test]
    fn enumeration_is_invariant_under_transposition() {
        let ext = fq_ext(2);
        let mut rng = rng_from_seed(4);
        for _ in 0..10 {
            let (h, _) = planted(&ext, 3, 5, 3, &mut rng);
            let sys = model_rank_w(&ext, &h, 3, 5, 1)
                .unwrap()
                .with_fixing(Fixing::Assign(Var::Y(0, 4), 1))
                .unwrap()
                .with_fixing(Fixing::Quadratic { var: Var::X(0, 2), alpha: 0, beta: 3 })
                .unwrap();
            let t = sys.transposed();
            assert_eq!(t.transposed(), sys);
            let mut direct = solve_enumerate(&sys, 1 << 16, 1).unwrap().solutions;
            let mut swapped: Vec<_> =
                solve_enumerate(&t, 1 << 16, 1).unwrap().solutions.into_iter().map(|(x, y)| (y, x)).collect();
            direct.sort_unstable();
            swapped.sort_unstable();
            assert_eq!(direct, swapped);
            for (x, y) in &direct {
                assert_eq!(sys.reconstruct(x, y).transpose(), t.reconstruct(y, x));
            }
        }
    }

    #[test]
    fn inconsistent_fixings_give_nothing() {
        let ext = fq_ext(1);
        let sys = model_rank_w(&ext, &Matrix::filled(0, 4, 0), 2, 2, 1)
            .unwrap()
            .with_fixing(Fixing::Assign(Var::X(0, 0), 0))
            .unwrap()
            .with_fixing(Fixing::Assign(Var::X(0, 0), 1))
            .unwrap();
        assert!(solve_enumerate(&sys, 1 << 10, 1).unwrap().solutions.is_empty());
        assert!(solve_linearize(&sys, 3).unwrap().solutions.is_empty());
    }

    #[test]
    fn ranksign_fixing_census() {
        // desk shape: 27 equations on an 8×9 matrix space
        let ext = fq_ext(1);
        let mut rng = rng_from_seed(3);
        let h = Matrix::random(&ext.fq(), 27, 72, &mut rng);
        let sys = model_rank_w(&ext, &h, 8, 9, 1).unwrap();
        let before = sys.census();
        assert_eq!((before.equations, before.unknowns, before.free_unknowns), (27, 17, 17));
        let fixed = apply_ranksign_fixings(sys.clone(), 8, 2, Some((0, 1))).unwrap();
        let c = fixed.census();
        // q = 2: no quadratic fixing
        assert_eq!((c.assignments, c.quadratic), (1 + 4, 0));
        assert_eq!(c.free_unknowns, 17 - 5);
        let ext16 = fq_ext(4);
        let sys16 = model_rank_w(&ext16, &h, 8, 9, 1).unwrap();
        let c16 = apply_ranksign_fixings(sys16, 8, 2, Some((3, 7))).unwrap().census();
        assert_eq!((c16.quadratic, c16.equations), (1, 27 + 6));
        assert_eq!(ranksign_expected_counts(8, 4, 9, 1), (33, 17));
    }

    #[test]
    fn ranksign_counts_at_table1_row1() {
        // 188 bilinear rows on a 20×22 space, plus 12 fixings
        let ext = fq_ext(5);
        let h = Matrix::filled(188, 440, 0u32);
        let sys = model_rank_w(&ext, &h, 20, 22, 1).unwrap();
        let c = apply_ranksign_fixings(sys, 20, 2, Some((1, 2))).unwrap().census();
        assert_eq!((c.equations as i64, c.unknowns as i64), ranksign_expected_counts(20, 10, 21, 2));
        assert_eq!((c.equations, c.unknowns), (200, 42));
    }

    #[test]
    fn rsl_fixings_record_the_systematic_block() {
        let ext = fq_ext(1);
        let sys = model_rank_w(&ext, &Matrix::filled(62, 70, 0), 10, 7, 2).unwrap();
        let fixed = apply_rsl_fixings(sys, &[0, 1], &[(0, 0)], (1, 0)).unwrap();
        for (i, l) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            assert!(fixed.fixings.contains(&Fixing::Assign(Var::X(l, i), u32::from(i == l))));
        }
        let c = fixed.census();
        assert_eq!(c.unknowns, 34);
        assert_eq!(c.free_unknowns, 34 - 4 - 2);
        assert_eq!(rsl_expected_counts(100, 80, 96, 4), (7716, 704));
        let bad = model_rank_w(&ext, &Matrix::filled(0, 70, 0), 10, 7, 2).unwrap();
        assert!(apply_rsl_fixings(bad, &[0, 1], &[(1, 0)], (1, 0)).is_err());
    }

    #[test]
    fn single_block_rsl_matches_rank1_shape() {
        let ext = fq_ext(1);
        let mut rng = rng_from_seed(4);
        let (h, word) = planted(&ext, 5, 6, 3, &mut rng);
        let sys = model_rank_w(&ext, &h, 5, 6, 1).unwrap();
        let (x_col, y_col) = {
            let i = (0..5).find(|&i| (0..6).any(|j| word[i * 6 + j] != 0)).unwrap();
            let j = (0..6).find(|&j| word[i * 6 + j] != 0).unwrap();
            (i, j)
        };
        let fixed = apply_rsl_fixings(sys, &[x_col], &[], (y_col, 0)).unwrap();
        let r = solve_enumerate(&fixed, 1 << 12, 1).unwrap();
        assert!(r.solutions.iter().any(|(x, y)| flatten(&fixed.reconstruct(x, y)) == word));
    }

    #[test]
    fn text_round_trip() {
        let ext = fq_ext(4);
        let mut rng = rng_from_seed(5);
        let h = Matrix::random(&ext.fq(), 6, 12, &mut rng);
        let sys = apply_ranksign_fixings(model_rank_w(&ext, &h, 3, 4, 1).unwrap(), 4, 2, Some((2, 9))).unwrap();
        let text = sys.to_text();
        assert!(text.starts_with("BILIN 16 1 3 4 6\n"));
        assert_eq!(BilinearSystem::from_text(&text).unwrap(), sys);
    }

    #[test]
    fn linearize_is_sound_and_within_enumeration() {
        let ext = fq_ext(1);
        let mut rng = rng_from_seed(6);
        for _ in 0..20 {
            let (h, _) = planted(&ext, 8, 9, 4, &mut rng);
            let sys = apply_ranksign_fixings(model_rank_w(&ext, &h, 8, 9, 1).unwrap(), 8, 2, None).unwrap();
            let lin = solve_linearize(&sys, 3).unwrap();
            let en = solve_enumerate(&sys, 1 << 20, 1).unwrap();
            for s in &lin.solutions {
                assert!(en.solutions.contains(s));
            }
            if lin.complete {
                assert_eq!(lin.solutions.len(), en.solutions.len());
            }
        }
    }

    #[test]
    fn linearize_over_f16_recovers_planted_word() {
        let ext = fq_ext(4);
        let mut rng = rng_from_seed(7);
        let (h, word) = planted(&ext, 4, 5, 2, &mut rng);
        let sys = model_rank_w(&ext, &h, 4, 5, 1).unwrap();
        let (xi, yj) = {
            let i = (0..4).find(|&i| (0..5).any(|j| word[i * 5 + j] != 0)).unwrap();
            (i, (0..5).find(|&j| word[i * 5 + j] != 0).unwrap())
        };
        // normalize x_i = 1 and y_j = word value
        let sys = sys
            .with_fixing(Fixing::Assign(Var::X(0, xi), 1))
            .unwrap()
            .with_fixing(Fixing::Assign(Var::Y(0, yj), word[xi * 5 + yj]))
            .unwrap();
        let r = solve_linearize(&sys, 4).unwrap();
        assert!(r.solutions.iter().any(|(x, y)| flatten(&sys.reconstruct(x, y)) == word));
    }

    #[test]
    fn quadratic_fixing_restricts_values() {
        let ext = fq_ext(2);
        let sys = model_rank_w(&ext, &Matrix::filled(0, 2, 0), 2, 1, 1)
            .unwrap()
            .with_fixing(Fixing::Quadratic { var: Var::X(0, 1), alpha: 1, beta: 2 })
            .unwrap();
        let r = solve_enumerate(&sys, 1 << 8, 1).unwrap();
        assert!(r.solutions.iter().all(|(x, _)| x[1] == 1 || x[1] == 2));
        assert_eq!(r.solutions.len(), 4 * 2 * 4);
    }
}
