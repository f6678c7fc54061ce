//! Trilinear counting operators, stashing, configuration counting and the
//! exact extremal search for sets free of `x, x + y^2 - 1, x + 2(y^2 - 1)`.

use num_complex::Complex64;
use serde::Serialize;

use crate::arith::{pr_i64, ArithCtx};
use crate::gowers::{dual1, dual2, dual3, range_set, uk_norm_pow};
use crate::report::Report;
use crate::signal::{fourier_sup, IntervalSet, ZFunc};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `sum_x f1(x) f2(x + a) f3(x + 2a)` over the overlap of the windows.
fn triple_corr(f1: &ZFunc, f2: &ZFunc, f3: &ZFunc, a: i64) -> Complex64 {
    let lo = f1.offset().max(f2.offset() - a).max(f3.offset() - 2 * a);
    let hi = f1.end().min(f2.end() - a).min(f3.end() - 2 * a);
    if hi <= lo {
        return ZERO;
    }
    let n = (hi - lo) as usize;
    let s1 = &f1.values()[(lo - f1.offset()) as usize..][..n];
    let s2 = &f2.values()[(lo + a - f2.offset()) as usize..][..n];
    let s3 = &f3.values()[(lo + 2 * a - f3.offset()) as usize..][..n];
    s1.iter().zip(s2).zip(s3).map(|((a, b), c)| a * b * c).sum()
}

/// `sum_x sum_{|k| <= M} f1(x) f2(x + P(k)) f3(x + 2 P(k))`.
pub fn lambda_w(f1: &ZFunc, f2: &ZFunc, f3: &ZFunc, ctx: &ArithCtx) -> Complex64 {
    let m = ctx.m as i64;
    (-m..=m).map(|k| triple_corr(f1, f2, f3, ctx.p(k))).sum()
}

/// `sum_{x, d} f1(x) f2(x + d) f3(x + 2d) nu(d)` with `nu(d) = sqrt(N / d)` on `[1, N]`.
pub fn lambda_model(f1: &ZFunc, f2: &ZFunc, f3: &ZFunc, ctx: &ArithCtx) -> Complex64 {
    lambda_model_n(f1, f2, f3, ctx.n)
}

/// [`lambda_model`] for a bare `N`; the operator does not see `w`.
pub fn lambda_model_n(f1: &ZFunc, f2: &ZFunc, f3: &ZFunc, n: u64) -> Complex64 {
    let nf = n as f64;
    (1..=n as i64).map(|d| triple_corr(f1, f2, f3, d) * (nf / d as f64).sqrt()).sum()
}

/// The two operators and their scaled difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountingReport {
    pub lambda_w: [f64; 2],
    pub lambda_model: [f64; 2],
    pub lambda_diff: [f64; 2],
    /// `(N M, N^2, sqrt(N W))`.
    pub normalizers: (f64, f64, f64),
}

impl CountingReport {
    pub fn from_parts(lw: Complex64, lm: Complex64, ctx: &ArithCtx) -> Self {
        let diff = lw * ctx.scale() - lm;
        let n = ctx.n as f64;
        Self {
            lambda_w: [lw.re, lw.im],
            lambda_model: [lm.re, lm.im],
            lambda_diff: [diff.re, diff.im],
            normalizers: (n * ctx.m as f64, n * n, ctx.scale()),
        }
    }

    pub fn diff(&self) -> Complex64 {
        Complex64::new(self.lambda_diff[0], self.lambda_diff[1])
    }
}

/// `sqrt(N W) Lambda^W - Lambda^Model`, with both parts.
pub fn lambda_diff(f1: &ZFunc, f2: &ZFunc, f3: &ZFunc, ctx: &ArithCtx) -> CountingReport {
    CountingReport::from_parts(lambda_w(f1, f2, f3, ctx), lambda_model(f1, f2, f3, ctx), ctx)
}

/// Checks `|Lambda^W(f1, f2, f3)|^2 <= |supp f_i| (2M + 1) |Lambda^W(..., conj D^i, ...)|`
/// where `D^i` is the dual function of the other two arguments placed in
/// slot `i`.
pub fn stashing_check(f1: &ZFunc, f2: &ZFunc, f3: &ZFunc, ctx: &ArithCtx, which: u8) -> Result<Report> {
    let reach = 4 * ctx.n as i64;
    for f in [f1, f2, f3] {
        f.check_one_bounded()?;
        if let Some((lo, hi)) = f.support() {
            if lo < -reach || hi > reach {
                return Err(Error::InvalidParam(format!("support [{lo}, {hi}] leaves [-4N, 4N]")));
            }
        }
    }
    let lam = lambda_w(f1, f2, f3, ctx);
    let (supp, stashed) = match which {
        1 => (f1.support_size(), lambda_w(&dual1(f2, f3, ctx).conj(), f2, f3, ctx)),
        2 => (f2.support_size(), lambda_w(f1, &dual2(f1, f3, ctx).conj(), f3, ctx)),
        3 => (f3.support_size(), lambda_w(f1, f2, &dual3(f1, f2, ctx).conj(), ctx)),
        _ => return Err(Error::InvalidParam(format!("which must be 1, 2 or 3, got {which}"))),
    };
    let lhs = lam.norm_sqr();
    let rhs = supp as f64 * (2 * ctx.m + 1) as f64 * stashed.norm();
    let mut r = Report::new("stashing");
    r.param("which", which as i64).param("N", ctx.n).param("w", ctx.w);
    r.value("lambda_w_abs", lam.norm()).value("support", supp as u64);
    r.check("|Lambda|^2 <= |supp| (2M+1) |Lambda(stashed)|", lhs <= rhs * (1.0 + 1e-10) + 1e-9, lhs, rhs);
    Ok(r)
}

/// `sum_x E_{|y| <= Y} f1(x + P_k(y)) f2(x + 2 P_k(y))` with
/// `P_k(y) = W^2 y^2 + (2 W k + 1) y`.
pub fn sarkozy_pair_sum(f1: &ZFunc, f2: &ZFunc, w: i64, k: i64, big_y: i64) -> Result<Complex64> {
    if w < 1 || k < 1 || k > w || big_y < 0 {
        return Err(Error::InvalidParam(format!("need W >= 1, 1 <= k <= W, Y >= 0; got {w}, {k}, {big_y}")));
    }
    let total: Complex64 = (-big_y..=big_y)
        .map(|y| {
            let p = pr_i64(w, k, y);
            // substitute u = x + p
            let lo = f1.offset().max(f2.offset() - p);
            let hi = f1.end().min(f2.end() - p);
            (lo..hi).map(|u| f1.get(u) * f2.get(u + p)).sum::<Complex64>()
        })
        .sum();
    Ok(total / (2 * big_y + 1) as f64)
}

/// Common differences `y^2 - 1` with `y != +-1` and `|y^2 - 1| <= n`, each
/// listed once per sign of `y` (so `-1` from `y = 0` appears once).
fn differences(n: u64) -> Vec<i64> {
    let mut out = Vec::new();
    let mut y = 0i64;
    while y * y - 1 <= n as i64 {
        if y != 1 {
            let d = y * y - 1;
            out.push(d);
            if y != 0 {
                out.push(d);
            }
        }
        y += 1;
    }
    out
}

/// Number of pairs `(x, y)`, `y != +-1`, with `x, x + y^2 - 1, x + 2(y^2 - 1)` all in `S`.
pub fn enumerate_configs(s: &IntervalSet) -> u64 {
    let n = s.n();
    let diffs = differences(n);
    let mut count = 0;
    for x in s.members() {
        let x = x as i64;
        for &d in &diffs {
            if s.contains(x + d) && s.contains(x + 2 * d) {
                count += 1;
            }
        }
    }
    count
}

/// The forbidden 3-sets inside `[1, n]`, as sorted triples.
pub fn forbidden_triples(n: u64) -> Vec<[u32; 3]> {
    let n = n as i64;
    let mut out = Vec::new();
    let mut y = 0i64;
    while 2 * (y * y - 1).abs() < n || y == 0 {
        if y != 1 {
            let d = (y * y - 1).abs();
            for a in 1..=n - 2 * d {
                out.push([a as u32, (a + d) as u32, (a + 2 * d) as u32]);
            }
        }
        y += 1;
    }
    out
}

/// Search strategy for [`max_free_subset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    Exhaustive,
    BranchAndBound,
}

/// Largest configuration-free subset of `[1, n]`.
///
/// Among optimal sets the witness is the one whose sorted member list is
/// lexicographically smallest; both methods return the same witness.
/// `budget` caps the number of search nodes (subsets for the exhaustive
/// method).
pub fn max_free_subset(n: u64, method: SearchMethod, budget: u64) -> Result<(usize, IntervalSet)> {
    if n == 0 {
        return Ok((0, IntervalSet::empty(0)));
    }
    match method {
        SearchMethod::Exhaustive => exhaustive(n, budget),
        SearchMethod::BranchAndBound => {
            if n > 200 {
                return Err(Error::InvalidParam("branch and bound supports N <= 200".into()));
            }
            branch_and_bound(n as usize, budget)
        }
    }
}

fn exhaustive(n: u64, budget: u64) -> Result<(usize, IntervalSet)> {
    if n > 24 {
        return Err(Error::InvalidParam("exhaustive search supports N <= 24".into()));
    }
    let total = 1u64 << n;
    if total > budget {
        return Err(Error::Budget { required: total as u128, budget: budget as u128 });
    }
    let masks: Vec<u64> = forbidden_triples(n)
        .iter()
        .map(|t| t.iter().fold(0u64, |m, &x| m | 1 << (x - 1)))
        .collect();
    let mut best = (0u32, 0u64);
    for s in 0..total {
        let size = s.count_ones();
        if size < best.0 {
            continue;
        }
        if masks.iter().any(|&t| s & t == t) {
            continue;
        }
        // Equal sizes: the set holding the least element of the symmetric
        // difference comes first.
        if size > best.0 || (s ^ best.1) & s & (s ^ best.1).wrapping_neg() != 0 {
            best = (size, s);
        }
    }
    Ok((best.0 as usize, IntervalSet::from_mask(n, best.1)))
}

struct Bnb {
    /// `closers[v]`: pairs `(a, b)` with `{a, b, v}` forbidden and `a, b < v`.
    closers: Vec<Vec<(usize, usize)>>,
    chosen: Vec<bool>,
    /// `opt[r]`: optimum on any interval of length `r`, known for `r < n`.
    opt: Vec<usize>,
    best: usize,
    best_set: Vec<bool>,
    nodes: u64,
    budget: u64,
}

impl Bnb {
    fn bound(&self, remaining: usize) -> usize {
        // Exact sub-interval optimum once known, else the relaxation keeping
        // only consecutive triples.
        self.opt.get(remaining).copied().unwrap_or(remaining - remaining / 3)
    }

    fn dfs(&mut self, v: usize, n: usize, cur: usize) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::Budget { required: self.nodes as u128, budget: self.budget as u128 });
        }
        if v > n {
            if cur > self.best {
                self.best = cur;
                self.best_set = self.chosen.clone();
            }
            return Ok(());
        }
        if cur + self.bound(n - v + 1) <= self.best {
            return Ok(());
        }
        if self.closers[v].iter().all(|&(a, b)| !(self.chosen[a] && self.chosen[b])) {
            self.chosen[v] = true;
            self.dfs(v + 1, n, cur + 1)?;
            self.chosen[v] = false;
        }
        if cur + self.bound(n - v) > self.best {
            self.dfs(v + 1, n, cur)?;
        }
        Ok(())
    }
}

fn branch_and_bound(n: usize, budget: u64) -> Result<(usize, IntervalSet)> {
    let mut closers = vec![Vec::new(); n + 1];
    for t in forbidden_triples(n as u64) {
        closers[t[2] as usize].push((t[0] as usize, t[1] as usize));
    }
    let mut st = Bnb {
        closers,
        chosen: vec![false; n + 1],
        opt: vec![0],
        best: 0,
        best_set: vec![false; n + 1],
        nodes: 0,
        budget,
    };
    // Solve every prefix length in turn; the triples inside an interval of
    // length r do not depend on where it sits, so opt[r] bounds suffixes.
    for len in 1..=n {
        st.best = 0;
        st.best_set = vec![false; n + 1];
        st.dfs(1, len, 0)?;
        st.opt.push(st.best);
    }
    let members = (1..=n).filter(|&v| st.best_set[v]).map(|v| v as u64);
    Ok((st.best, IntervalSet::from_members(n as u64, members)?))
}

/// Result of passing to a dense residue class modulo `4W`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WTrick {
    pub modulus: u64,
    pub j: u64,
    /// `(S_j - j) / (4W) + 1`, shifted by one so it lies in `[1, N']`.
    pub s_star: IntervalSet,
    pub density: f64,
    /// Pairs `(x', y)`, `y != 0`, with `x', x' + P(y), x' + 2P(y)` in `S*`.
    pub star_configs: u64,
    /// How many of those lifted to a configuration of `S` with difference
    /// `(2Wy + 1)^2 - 1`.
    pub lifted: u64,
}

/// Picks the residue class `j` in `[1, 4W]` holding the most of `S` (ties to
/// the smallest `j`), rescales it, and lifts every `P`-configuration of the
/// rescaled set back to `S` to confirm the correspondence.
pub fn wtrick_subset(s: &IntervalSet, w: u64) -> Result<WTrick> {
    if s.is_empty() {
        return Err(Error::InvalidParam("S is empty".into()));
    }
    let big_w = ArithCtx::new(1, w)?.big_w;
    let q = 4 * big_w;
    let members = s.members();
    let mut counts = vec![0usize; q as usize + 1];
    for &x in &members {
        counts[((x - 1) % q + 1) as usize] += 1;
    }
    let j = (1..=q).max_by_key(|&j| (counts[j as usize], std::cmp::Reverse(j))).unwrap();
    let n_star = if s.n() >= j { (s.n() - j) / q + 1 } else { 1 };
    let s_star = IntervalSet::from_members(
        n_star,
        members.iter().filter(|&&x| x % q == j % q).map(|&x| (x - j) / q + 1),
    )?;
    let density = s_star.len() as f64 / n_star as f64;

    let (bw, lift) = (big_w as i64, |xs: i64| (xs - 1) * q as i64 + j as i64);
    let mut star_configs = 0;
    let mut lifted = 0;
    let mut y = 1i64;
    loop {
        let ps: Vec<i64> = [y, -y].iter().map(|&t| bw * t * t + t).collect();
        if ps.iter().all(|&p| p > n_star as i64) {
            break;
        }
        for (&t, &p) in [y, -y].iter().zip(&ps) {
            for xs in s_star.members() {
                let xs = xs as i64;
                if s_star.contains(xs + p) && s_star.contains(xs + 2 * p) {
                    star_configs += 1;
                    let z = 2 * bw * t + 1;
                    let d = z * z - 1;
                    assert_eq!(4 * bw * p, d, "lifting identity");
                    let x = lift(xs);
                    if z.abs() != 1 && s.contains(x) && s.contains(x + d) && s.contains(x + 2 * d) {
                        lifted += 1;
                    }
                }
            }
        }
        y += 1;
    }
    Ok(WTrick { modulus: q, j, s_star, density, star_configs, lifted })
}

/// Modulated intervals `f_i = e(beta_i x) 1_[N]` with `beta_1 + beta_3 = -beta_2`
/// and `beta_2 = -2 beta_1`, so that every term of the model operator has
/// phase 0. Whenever `|Lambda^Model| >= delta N^2`, each `f_i` must have
/// `U^2_[N]` power and Fourier sup at least those of `1_[N]`.
pub fn model_control_experiment(n: u64, delta: f64, betas: &[f64]) -> Result<Report> {
    let nn = n as i64;
    let base = ZFunc::indicator(1, nn);
    let q = range_set(nn);
    let base_u2 = uk_norm_pow(&base, &q, 2)?;
    let mut r = Report::new("model_control");
    r.param("N", n).param("delta", delta);
    r.value("u2_of_indicator", base_u2);
    for &beta in betas {
        let fs = [base.modulate(beta), base.modulate(-2.0 * beta), base.modulate(beta)];
        let lm = lambda_model_n(&fs[0], &fs[1], &fs[2], n);
        if lm.norm() < delta * (n * n) as f64 {
            r.note(format!("beta={beta}: model operator below threshold, skipped"));
            continue;
        }
        for (i, f) in fs.iter().enumerate() {
            let u2 = uk_norm_pow(f, &q, 2)?;
            let (_, sup) = fourier_sup(f, 4 * f.len())?;
            r.check(&format!("beta={beta} f{}: U2 >= U2(1_[N])", i + 1), u2 >= base_u2 * (1.0 - 1e-9), u2, base_u2);
            r.check(&format!("beta={beta} f{}: sup |f^| >= N", i + 1), sup >= n as f64 * (1.0 - 1e-9), sup, n as f64);
        }
    }
    Ok(r)
}
