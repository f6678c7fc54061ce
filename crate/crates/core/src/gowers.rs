//! Multiplicative derivatives, box norms with arbitrary shift sets, and dual
//! functions.
//!
//! Norms are returned as their `2^d`-th powers and are not normalized in `x`:
//! `||f||^{2^d} = sum_x E_{h_i, h_i' in Q_i} prod_w C^{|w|} f(x + sum_i h_i^{(w_i)})`.

use num_complex::Complex64;
use serde::Serialize;

use crate::arith::ArithCtx;
use crate::report::Report;
use crate::signal::ZFunc;
use crate::{Error, Result};

/// Default work budget for box-norm evaluation.
pub const DEFAULT_BUDGET: u128 = 20_000_000_000;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `x -> f(x) conj(f(x + h))`.
pub fn delta_h(f: &ZFunc, h: i64) -> ZFunc {
    delta_pair(f, h, 0)
}

/// `x -> conj(f(x + h)) f(x + h')`.
pub fn delta_pair(f: &ZFunc, h: i64, h_prime: i64) -> ZFunc {
    if f.is_empty() {
        return ZFunc::zero();
    }
    let lo = f.offset() - h.min(h_prime);
    let hi = f.end() - h.max(h_prime);
    if hi <= lo {
        return ZFunc::zero();
    }
    ZFunc::from_fn(lo, hi - 1, |x| f.get(x + h).conj() * f.get(x + h_prime))
}

/// `{1, ..., l}`.
pub fn range_set(l: i64) -> Vec<i64> {
    (1..=l).collect()
}

/// `t . Q = {t q : q in Q}`.
pub fn scaled_set(t: i64, q: &[i64]) -> Vec<i64> {
    q.iter().map(|&x| t * x).collect()
}

/// Shift sets `Q_1, ..., Q_d` of a box norm.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoxSpec {
    sets: Vec<Vec<i64>>,
}

impl BoxSpec {
    pub fn new(sets: Vec<Vec<i64>>) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::InvalidParam("a box norm needs at least one shift set".into()));
        }
        let sets: Vec<Vec<i64>> = sets
            .into_iter()
            .map(|mut q| {
                q.sort_unstable();
                q.dedup();
                q
            })
            .collect();
        if sets.iter().any(|q| q.is_empty()) {
            return Err(Error::InvalidParam("shift sets must be nonempty".into()));
        }
        Ok(Self { sets })
    }

    /// `d` copies of `q`.
    pub fn uniform(q: &[i64], d: usize) -> Result<Self> {
        Self::new(vec![q.to_vec(); d])
    }

    pub fn dims(&self) -> usize {
        self.sets.len()
    }

    pub fn sets(&self) -> &[Vec<i64>] {
        &self.sets
    }

    pub fn is_uniform(&self) -> bool {
        self.sets.windows(2).all(|w| w[0] == w[1])
    }

    /// `|Q_1|^2 ... |Q_d|^2 * support`.
    pub fn work(&self, support: usize) -> u128 {
        self.sets.iter().fold(support.max(1) as u128, |acc, q| acc.saturating_mul((q.len() as u128).pow(2)))
    }
}

/// A box-norm power together with what was discarded to report it as real.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxEval {
    pub value: f64,
    pub raw: f64,
    pub imag: f64,
    pub clamped: bool,
}

/// `||f||^{2^d}` over the box `Q_1 x ... x Q_d`.
pub fn box_norm_pow(f: &ZFunc, spec: &BoxSpec) -> Result<f64> {
    box_norm_pow_budget(f, spec, DEFAULT_BUDGET).map(|b| b.value)
}

/// As [`box_norm_pow`] with an explicit budget and the full evaluation record.
///
/// Tiny negative results (relative to the trivial bound) are clamped to 0
/// and flagged in the record.
pub fn box_norm_pow_budget(f: &ZFunc, spec: &BoxSpec, budget: u128) -> Result<BoxEval> {
    let f = f.trimmed();
    let required = spec.work(f.len());
    if required > budget {
        return Err(Error::Budget { required, budget });
    }
    let z = box_rec(&f, spec.sets());
    let sup = f.sup_abs();
    let scale = f.l1() * sup.powi((1i32 << spec.dims()) - 1);
    let clamped = z.re < 0.0 && z.re.abs() <= 1e-12 * scale.max(1e-300);
    Ok(BoxEval {
        value: if clamped { 0.0 } else { z.re },
        raw: z.re,
        imag: z.im,
        clamped,
    })
}

fn box_rec(f: &ZFunc, sets: &[Vec<i64>]) -> Complex64 {
    if f.is_empty() {
        return ZERO;
    }
    if sets.len() == 1 {
        return final_axis(f, &sets[0]);
    }
    let q = &sets[0];
    let mut acc = ZERO;
    for &h in q {
        for &hp in q {
            acc += box_rec(&delta_pair(f, h, hp).trimmed(), &sets[1..]);
        }
    }
    acc / (q.len() * q.len()) as f64
}

/// `sum_x E_{h, h' in Q} conj(g(x + h)) g(x + h') = sum_x |E_{h in Q} g(x + h)|^2`.
fn final_axis(g: &ZFunc, q: &[i64]) -> Complex64 {
    let n = q.len() as f64;
    let total: f64 = window_sums(g, q).iter().map(|s| s.norm_sqr()).sum();
    Complex64::new(total / (n * n), 0.0)
}

/// `s(x) = sum_{h in Q} g(x + h)` for every `x` where it can be nonzero.
/// Arithmetic progressions use running sums along residue classes.
fn window_sums(g: &ZFunc, q: &[i64]) -> Vec<Complex64> {
    let (qmin, qmax) = (q[0], q[q.len() - 1]);
    let lo = g.offset() - qmax;
    let hi = g.end() - qmin;
    let len = (hi - lo) as usize;
    let step = if q.len() >= 2 { q[1] - q[0] } else { 1 };
    let is_ap = q.len() >= 2 && q.windows(2).all(|w| w[1] - w[0] == step);
    if !is_ap || q.len() < 8 {
        return (lo..hi).map(|x| q.iter().map(|&h| g.get(x + h)).sum()).collect();
    }
    // s(x) = s(x - step) + g(x + qmax) - g(x - step + qmin)
    let s = step as usize;
    let mut out = vec![ZERO; len];
    for i in 0..len {
        let x = lo + i as i64;
        out[i] = if i >= s {
            out[i - s] + g.get(x + qmax) - g.get(x - step + qmin)
        } else {
            q.iter().map(|&h| g.get(x + h)).sum()
        };
    }
    out
}

/// `||f||^{2^k}_{U^k_Q}`.
pub fn uk_norm_pow(f: &ZFunc, q: &[i64], k: usize) -> Result<f64> {
    if k == 0 {
        return Ok(f.sum().re);
    }
    box_norm_pow(f, &BoxSpec::uniform(q, k)?)
}

/// `||f||_{box}` itself.
pub fn box_norm(f: &ZFunc, spec: &BoxSpec) -> Result<f64> {
    Ok(box_norm_pow(f, spec)?.max(0.0).powf(1.0 / (1u64 << spec.dims()) as f64))
}

/// Cube form of the box power: an explicit sum over `x`, every choice of
/// `(h_i, h_i')` and every vertex of `{0,1}^d`. Exponential in `d`; reference
/// implementation for tests and small inputs.
pub fn box_norm_pow_cube(f: &ZFunc, spec: &BoxSpec) -> Complex64 {
    let f = f.trimmed();
    if f.is_empty() {
        return ZERO;
    }
    let sets = spec.sets();
    let d = sets.len();
    let span: i64 = sets.iter().map(|q| q[q.len() - 1] - q[0]).sum();
    let lo = f.offset() - sets.iter().map(|q| q[q.len() - 1]).sum::<i64>();
    let hi = f.end() - sets.iter().map(|q| q[0]).sum::<i64>() + span;
    let mut idx = vec![0usize; 2 * d];
    let mut total = ZERO;
    loop {
        let mut inner = ZERO;
        for x in lo..hi {
            let mut prod = Complex64::new(1.0, 0.0);
            for w in 0..1usize << d {
                let mut pos = x;
                let mut ones = 0;
                for i in 0..d {
                    let bit = w >> i & 1;
                    ones += bit;
                    pos += sets[i][idx[2 * i + bit]];
                }
                let v = f.get(pos);
                prod *= if ones % 2 == 1 { v.conj() } else { v };
                if prod == ZERO {
                    break;
                }
            }
            inner += prod;
        }
        total += inner;
        let mut i = 0;
        loop {
            if i == 2 * d {
                let count: f64 = sets.iter().map(|q| (q.len() * q.len()) as f64).product();
                return total / count;
            }
            idx[i] += 1;
            if idx[i] < sets[i / 2].len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

/// `sum_x E_{h,h' in [L]} conj(f(x+h)) f(x+h')` computed on the Fourier side
/// as `int |f^|^2 (sin(L pi t) / (L sin(pi t)))^2 dt`, using a grid mean that
/// is exact once `grid` exceeds twice the degree of the integrand.
pub fn fejer_square_integral(f: &ZFunc, l: i64, grid: usize) -> Result<f64> {
    let need = 2 * (f.len() + l as usize) + 1;
    if grid < need {
        return Err(Error::GridTooSmall { got: grid, need });
    }
    let fh = crate::signal::dft_grid(f, grid);
    let lf = l as f64;
    let total: f64 = fh
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let t = j as f64 / grid as f64;
            let s = (std::f64::consts::PI * t).sin();
            let k = if s.abs() < 1e-300 { 1.0 } else { ((lf * std::f64::consts::PI * t).sin() / (lf * s)).powi(2) };
            v.norm_sqr() * k
        })
        .sum();
    Ok(total / grid as f64)
}

/// Largest violation of `|sin(k x)| <= k |sin x|` over a uniform grid on
/// `[0, 2 pi)` and `1 <= k <= k_max`; nonpositive means the bound holds.
pub fn sine_multiple_check(k_max: u32, points: usize) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for i in 0..points {
        let x = std::f64::consts::TAU * i as f64 / points as f64;
        for k in 1..=k_max {
            let gap = (k as f64 * x).sin().abs() - k as f64 * x.sin().abs();
            worst = worst.max(gap);
        }
    }
    worst
}

fn dual_generic(fa: &ZFunc, ca: i64, fb: &ZFunc, cb: i64, ctx: &ArithCtx) -> ZFunc {
    let m = ctx.m as i64;
    let shifts: Vec<i64> = (-m..=m).map(|y| ctx.p(y)).collect();
    let (fa, fb) = (fa.trimmed(), fb.trimmed());
    if fa.is_empty() || fb.is_empty() {
        return ZFunc::zero();
    }
    let pmax = *shifts.iter().max().unwrap();
    // P(y) >= 0 on the integers, so shifts c P range over [min(0, c pmax), max(0, c pmax)].
    let range = |c: i64| ((c * pmax).min(0), (c * pmax).max(0));
    let (a0, a1) = range(ca);
    let (b0, b1) = range(cb);
    let lo = (fa.offset() - a1).max(fb.offset() - b1);
    let hi = (fa.end() - 1 - a0).min(fb.end() - 1 - b0);
    let norm = shifts.len() as f64;
    ZFunc::from_fn(lo, hi, |x| {
        shifts.iter().map(|&p| fa.get(x + ca * p) * fb.get(x + cb * p)).sum::<Complex64>() / norm
    })
}

/// `E_{|y| <= M} f2(x + P(y)) f3(x + 2P(y))`.
pub fn dual1(f2: &ZFunc, f3: &ZFunc, ctx: &ArithCtx) -> ZFunc {
    dual_generic(f2, 1, f3, 2, ctx)
}

/// `E_{|y| <= M} f1(x - P(y)) f3(x + P(y))`.
pub fn dual2(f1: &ZFunc, f3: &ZFunc, ctx: &ArithCtx) -> ZFunc {
    dual_generic(f1, -1, f3, 1, ctx)
}

/// `E_{|y| <= M} f1(x - 2P(y)) f2(x - P(y))`.
pub fn dual3(f1: &ZFunc, f2: &ZFunc, ctx: &ArithCtx) -> ZFunc {
    dual_generic(f1, -2, f2, -1, ctx)
}

type GaussInt = (i128, i128);

fn gmul(a: GaussInt, b: GaussInt) -> GaussInt {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

/// Values of `f` as Gaussian integers, if every value is one.
fn gaussian_values(f: &ZFunc) -> Option<Vec<GaussInt>> {
    f.values()
        .iter()
        .map(|v| {
            let ok = v.re.fract() == 0.0 && v.im.fract() == 0.0 && v.re.abs() < 1e15 && v.im.abs() < 1e15;
            ok.then_some((v.re as i128, v.im as i128))
        })
        .collect()
}

fn box_int_rec(offset: i64, vals: &[GaussInt], sets: &[Vec<i64>]) -> i128 {
    if vals.is_empty() {
        return 0;
    }
    let q = &sets[0];
    let (qmin, qmax) = (q[0], q[q.len() - 1]);
    let get = |x: i64| -> GaussInt {
        let i = x - offset;
        if i < 0 || i >= vals.len() as i64 { (0, 0) } else { vals[i as usize] }
    };
    let end = offset + vals.len() as i64;
    if sets.len() == 1 {
        return (offset - qmax..end - qmin)
            .map(|x| {
                let s = q.iter().fold((0, 0), |acc, &h| {
                    let v = get(x + h);
                    (acc.0 + v.0, acc.1 + v.1)
                });
                s.0 * s.0 + s.1 * s.1
            })
            .sum();
    }
    let mut acc = 0;
    for &h in q {
        for &hp in q {
            let lo = offset - h.min(hp);
            let hi = end - h.max(hp);
            let d: Vec<GaussInt> = (lo..hi)
                .map(|x| {
                    let a = get(x + h);
                    gmul((a.0, -a.1), get(x + hp))
                })
                .collect();
            acc += box_int_rec(lo, &d, &sets[1..]);
        }
    }
    acc
}

/// Box power of a Gaussian-integer valued `f` as an exact fraction
/// `(numerator, prod |Q_i|^2)`. `None` if some value is not a Gaussian integer.
pub fn box_norm_pow_exact(f: &ZFunc, spec: &BoxSpec) -> Option<(i128, i128)> {
    let vals = gaussian_values(f)?;
    let den = spec.sets().iter().map(|q| (q.len() * q.len()) as i128).product();
    Some((box_int_rec(f.offset(), &vals, spec.sets()), den))
}

/// Compares the box power with last set `[L1]` against last set `[L2]` for
/// `L2 | L1`; the first must not exceed the second. Gaussian-integer inputs
/// are decided exactly, others in floating point with slack `1e-12` of the
/// trivial bound.
pub fn rescale_down_check(f: &ZFunc, head: &[Vec<i64>], l1: i64, l2: i64) -> Result<Report> {
    if l1 < 1 || l2 < 1 || l1 % l2 != 0 {
        return Err(Error::InvalidParam(format!("need positive L2 dividing L1, got L1={l1}, L2={l2}")));
    }
    let spec = |l: i64| {
        let mut sets = head.to_vec();
        sets.push(range_set(l));
        BoxSpec::new(sets)
    };
    let (s1, s2) = (spec(l1)?, spec(l2)?);
    let mut r = Report::new("rescale_down");
    r.param("L1", l1).param("L2", l2).param("k", (head.len() + 1) as i64);
    let f = f.trimmed();
    if let (Some((a1, d1)), Some((a2, d2))) = (box_norm_pow_exact(&f, &s1), box_norm_pow_exact(&f, &s2)) {
        r.value("exact", true);
        r.check("box[L1] <= box[L2] (exact)", a1 * d2 <= a2 * d1, a1 as f64 / d1 as f64, a2 as f64 / d2 as f64);
    } else {
        let (v1, v2) = (box_norm_pow(&f, &s1)?, box_norm_pow(&f, &s2)?);
        let slack = 1e-12 * f.l1() * f.sup_abs().powi((1 << s1.dims()) - 1);
        r.value("exact", false);
        r.check("box[L1] <= box[L2]", v1 <= v2 + slack, v1, v2);
    }
    Ok(r)
}

fn hull_width(fs: &[ZFunc]) -> i64 {
    let sup: Vec<(i64, i64)> = fs.iter().filter_map(|f| f.support()).collect();
    match (sup.iter().map(|s| s.0).min(), sup.iter().map(|s| s.1).max()) {
        (Some(lo), Some(hi)) => hi - lo + 1,
        _ => 0,
    }
}

fn average(fs: &[ZFunc]) -> ZFunc {
    let n = fs.len().max(1) as f64;
    fs.iter()
        .fold(ZFunc::zero(), |acc, f| acc.add(f))
        .scale(Complex64::new(1.0 / n, 0.0))
}

/// One or more rounds of the Cauchy-Schwarz step that moves a difference
/// inside the average over `y`.
///
/// `fs[j]` is `x -> f(x, y_j)`. With `F = E_y f(., y)`, `Q = T1 . [T2]` and
/// `W` the width of the joint support hull, each round proves
/// `A^2 <= W * B` where `A` is the current box power and
/// `B = E_{h, h' in Q} ||E_y conj(f(x + h, y)) f(x + h', y)||^{2^{k-1}}_{U^{k-1}_Q}`.
/// After `ell` rounds this gives `LHS^{2^ell} <= W^{2^ell - 1} RHS_ell`.
pub fn interchange_cs_check(fs: &[ZFunc], t1: i64, t2: i64, k: usize, ell: usize) -> Result<Report> {
    if fs.is_empty() {
        return Err(Error::InvalidParam("the parameter set S must be nonempty".into()));
    }
    if t1 < 1 || t2 < 1 {
        return Err(Error::InvalidParam("T1 and T2 must be positive".into()));
    }
    if ell < 1 || ell > k {
        return Err(Error::InvalidParam(format!("need 1 <= ell <= k, got ell={ell}, k={k}")));
    }
    for f in fs {
        f.check_one_bounded()?;
    }
    let q = scaled_set(t1, &range_set(t2));
    let width = hull_width(fs) as f64;

    let lhs = uk_norm_pow(&average(fs), &q, k)?;
    let mut report = Report::new("interchange_cs");
    report.param("T1", t1).param("T2", t2).param("k", k as i64).param("ell", ell as i64);
    report.value("support_width", width).value("lhs", lhs);

    // Families of functions indexed by the differences chosen so far, each
    // carrying its weight in the nested expectations.
    let mut families: Vec<Vec<ZFunc>> = vec![fs.to_vec()];
    let mut prev = lhs;
    for round in 1..=ell {
        let mut next = Vec::with_capacity(families.len() * q.len() * q.len());
        for fam in &families {
            for &h in &q {
                for &hp in &q {
                    next.push(fam.iter().map(|f| delta_pair(f, h, hp).trimmed()).collect::<Vec<_>>());
                }
            }
        }
        families = next;
        let mut rhs = 0.0;
        for fam in &families {
            rhs += uk_norm_pow(&average(fam), &q, k - round)?;
        }
        rhs /= families.len() as f64;
        let tol = 1e-9 * (prev * prev).abs().max(width * rhs.abs()).max(1e-300);
        report.value(&format!("rhs_{round}"), rhs);
        report.check(
            &format!("round {round}: A^2 <= W * B"),
            prev * prev <= width * rhs + tol,
            prev * prev,
            width * rhs,
        );
        prev = rhs;
    }
    let exp = 1u32 << ell;
    let lhs_pow = lhs.powi(exp as i32);
    let bound = width.powi(exp as i32 - 1) * prev;
    report.check(
        "combined: LHS^{2^ell} <= W^{2^ell - 1} RHS_ell",
        lhs_pow <= bound + 1e-9 * lhs_pow.abs().max(bound.abs()).max(1e-300),
        lhs_pow,
        bound,
    );
    Ok(report)
}
