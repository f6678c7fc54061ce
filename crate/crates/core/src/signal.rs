//! Finitely supported functions on the integers and their Fourier side.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::arith::ArithCtx;
use crate::{Error, Result};

/// `e(t) = exp(2 pi i t)`.
pub fn e(t: f64) -> Complex64 {
    let (s, c) = (TAU * t.rem_euclid(1.0)).sin_cos();
    Complex64::new(c, s)
}

/// A complex function on the integers, stored densely on the window
/// `[offset, offset + values.len())` and zero elsewhere.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ZFunc {
    offset: i64,
    values: Vec<Complex64>,
}

impl ZFunc {
    pub fn new(offset: i64, values: Vec<Complex64>) -> Self {
        Self { offset, values }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_real(offset: i64, values: &[f64]) -> Self {
        Self::new(offset, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Tabulates `f` on `[lo, hi]`.
    pub fn from_fn(lo: i64, hi: i64, f: impl FnMut(i64) -> Complex64) -> Self {
        if hi < lo {
            return Self::zero();
        }
        Self::new(lo, (lo..=hi).map(f).collect())
    }

    pub fn delta(a: i64) -> Self {
        Self::new(a, vec![Complex64::new(1.0, 0.0)])
    }

    /// Indicator of `[lo, hi]`.
    pub fn indicator(lo: i64, hi: i64) -> Self {
        Self::from_fn(lo, hi, |_| Complex64::new(1.0, 0.0))
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// One past the last stored point.
    pub fn end(&self) -> i64 {
        self.offset + self.values.len() as i64
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, x: i64) -> Complex64 {
        let i = x.wrapping_sub(self.offset);
        if i >= 0 && (i as usize) < self.values.len() {
            self.values[i as usize]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// Tight inclusive support window, `None` for the zero function.
    pub fn support(&self) -> Option<(i64, i64)> {
        let first = self.values.iter().position(|v| *v != Complex64::new(0.0, 0.0))?;
        let last = self.values.iter().rposition(|v| *v != Complex64::new(0.0, 0.0))?;
        Some((self.offset + first as i64, self.offset + last as i64))
    }

    /// Number of points where the function is nonzero.
    pub fn support_size(&self) -> usize {
        self.values.iter().filter(|v| **v != Complex64::new(0.0, 0.0)).count()
    }

    /// Copy restricted to the tight support window.
    pub fn trimmed(&self) -> Self {
        match self.support() {
            None => Self::zero(),
            Some((lo, hi)) => {
                let a = (lo - self.offset) as usize;
                let b = (hi - self.offset) as usize;
                Self::new(lo, self.values[a..=b].to_vec())
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.values.iter().enumerate().map(move |(i, v)| (self.offset + i as i64, *v))
    }

    pub fn map(&self, f: impl Fn(i64, Complex64) -> Complex64) -> Self {
        Self::new(self.offset, self.iter().map(|(x, v)| f(x, v)).collect())
    }

    pub fn conj(&self) -> Self {
        self.map(|_, v| v.conj())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|_, v| v * c)
    }

    /// `x -> f(x - t)`.
    pub fn shift(&self, t: i64) -> Self {
        Self::new(self.offset + t, self.values.clone())
    }

    /// `x -> e(beta x) f(x)`.
    pub fn modulate(&self, beta: f64) -> Self {
        self.map(|x, v| v * e(beta * x as f64))
    }

    /// `sup_x |f(x)|`.
    pub fn sup_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn l1(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).sum()
    }

    pub fn l2_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    /// `sum_x f(x)`.
    pub fn sum(&self) -> Complex64 {
        self.values.iter().sum()
    }

    /// Pointwise sum.
    pub fn add(&self, other: &Self) -> Self {
        if self.is_empty() {
            return other.clone();
        }
        if other.is_empty() {
            return self.clone();
        }
        let lo = self.offset.min(other.offset);
        let hi = self.end().max(other.end());
        Self::from_fn(lo, hi - 1, |x| self.get(x) + other.get(x))
    }

    /// Errors unless `|f(x)| <= 1` everywhere (with a little float slack).
    pub fn check_one_bounded(&self) -> Result<()> {
        for (x, v) in self.iter() {
            if v.norm() > 1.0 + 1e-12 {
                return Err(Error::Unbounded { x, value: v.norm() });
            }
        }
        Ok(())
    }

    /// JSON form: an array of `[x, re, im]` triples over the stored window.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.iter()
                .map(|(x, v)| serde_json::json!([x, v.re, v.im]))
                .collect(),
        )
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let bad = || Error::InvalidParam("expected an array of [x, re, im] triples".into());
        let mut pts = Vec::new();
        for t in v.as_array().ok_or_else(bad)? {
            let t = t.as_array().filter(|t| t.len() == 3).ok_or_else(bad)?;
            let x = t[0].as_i64().ok_or_else(bad)?;
            let re = t[1].as_f64().ok_or_else(bad)?;
            let im = t[2].as_f64().ok_or_else(bad)?;
            pts.push((x, Complex64::new(re, im)));
        }
        let Some(lo) = pts.iter().map(|p| p.0).min() else {
            return Ok(Self::zero());
        };
        let hi = pts.iter().map(|p| p.0).max().unwrap();
        let mut values = vec![Complex64::new(0.0, 0.0); (hi - lo + 1) as usize];
        for (x, v) in pts {
            values[(x - lo) as usize] += v;
        }
        Ok(Self::new(lo, values))
    }
}

/// A subset of `[1, N]` stored as a bitset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "IntervalSetJson", try_from = "IntervalSetJson")]
pub struct IntervalSet {
    n: u64,
    bits: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct IntervalSetJson {
    #[serde(rename = "N")]
    n: u64,
    members: Vec<u64>,
}

impl From<IntervalSet> for IntervalSetJson {
    fn from(s: IntervalSet) -> Self {
        Self { n: s.n, members: s.members() }
    }
}

impl TryFrom<IntervalSetJson> for IntervalSet {
    type Error = Error;
    fn try_from(j: IntervalSetJson) -> Result<Self> {
        Self::from_members(j.n, j.members)
    }
}

impl IntervalSet {
    pub fn empty(n: u64) -> Self {
        Self { n, bits: vec![0; (n as usize).div_ceil(64)] }
    }

    pub fn full(n: u64) -> Self {
        let mut s = Self::empty(n);
        for x in 1..=n {
            s.insert(x);
        }
        s
    }

    pub fn from_members(n: u64, members: impl IntoIterator<Item = u64>) -> Result<Self> {
        let mut s = Self::empty(n);
        for x in members {
            if x < 1 || x > n {
                return Err(Error::InvalidParam(format!("{x} lies outside [1, {n}]")));
            }
            s.insert(x);
        }
        Ok(s)
    }

    /// Bit `i` of `mask` marks membership of `i + 1`.
    pub fn from_mask(n: u64, mask: u64) -> Self {
        let mut s = Self::empty(n);
        for i in 0..n.min(64) {
            if mask >> i & 1 == 1 {
                s.insert(i + 1);
            }
        }
        s
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn insert(&mut self, x: u64) {
        assert!((1..=self.n).contains(&x), "{x} outside [1, {}]", self.n);
        let i = (x - 1) as usize;
        self.bits[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    pub fn contains(&self, x: i64) -> bool {
        if x < 1 || x as u64 > self.n {
            return false;
        }
        let i = (x - 1) as usize;
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn members(&self) -> Vec<u64> {
        (1..=self.n).filter(|&x| self.contains(x as i64)).collect()
    }

    /// `1_S` as a function on the integers.
    pub fn indicator(&self) -> ZFunc {
        ZFunc::from_fn(1, self.n as i64, |x| {
            Complex64::new(if self.contains(x) { 1.0 } else { 0.0 }, 0.0)
        })
    }
}

/// The normalized triangular kernel `(1/L)(1 - |h|/L)_+` with `L = floor(H)`.
pub fn fejer(h: f64) -> Result<ZFunc> {
    let l = fejer_width(h)?;
    Ok(ZFunc::from_fn(-(l - 1), l - 1, |x| {
        Complex64::new((1.0 - x.abs() as f64 / l as f64) / l as f64, 0.0)
    }))
}

fn fejer_width(h: f64) -> Result<i64> {
    if !(h >= 1.0) || !h.is_finite() {
        return Err(Error::InvalidParam(format!("Fejer width must be at least 1, got {h}")));
    }
    Ok(h.floor() as i64)
}

/// Product Fejer kernel on `Z^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FejerProduct {
    pub l: i64,
    pub dim: usize,
}

impl FejerProduct {
    pub fn new(h: f64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParam("dimension must be at least 1".into()));
        }
        Ok(Self { l: fejer_width(h)?, dim })
    }

    pub fn eval(&self, x: &[i64]) -> f64 {
        assert_eq!(x.len(), self.dim);
        let l = self.l as f64;
        x.iter().map(|&h| ((1.0 - h.abs() as f64 / l) / l).max(0.0)).product()
    }
}

/// `nu(d) = sqrt(N / d)` on `[1, N]`.
pub fn nu_weight(n: u64) -> ZFunc {
    ZFunc::from_fn(1, n as i64, |d| Complex64::new((n as f64 / d as f64).sqrt(), 0.0))
}

/// Every `P(k)`, `k` in the integers, that lands in `[1, N]`, increasing.
pub fn p_values_in_range(ctx: &ArithCtx) -> Vec<i64> {
    let n = ctx.n as i64;
    let mut out = Vec::new();
    let mut k = 1i64;
    // P(k) and P(-k) both grow with |k| for W >= 2.
    loop {
        let (a, b) = (ctx.p(k), ctx.p(-k));
        if a > n && b > n {
            break;
        }
        out.extend([a, b].into_iter().filter(|&v| (1..=n).contains(&v)));
        k += 1;
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// `nu*(d) = sqrt(N W)` on the values of `P` inside `[1, N]`.
pub fn nu_star(ctx: &ArithCtx) -> ZFunc {
    let n = ctx.n as i64;
    let mut values = vec![Complex64::new(0.0, 0.0); n as usize];
    for d in p_values_in_range(ctx) {
        values[(d - 1) as usize] = Complex64::new(ctx.scale(), 0.0);
    }
    ZFunc::new(1, values)
}

/// `f^(theta) = sum_x f(x) e(-x theta)`, by Horner's rule over the window.
pub fn dft_eval(f: &ZFunc, theta: f64) -> Complex64 {
    let z = e(-theta);
    let mut acc = Complex64::new(0.0, 0.0);
    for v in f.values().iter().rev() {
        acc = acc * z + v;
    }
    acc * e(-theta * (f.offset() as f64))
}

/// `f^(j / g)` for `j = 0..g`. Exact for any `g` since `e(-x j / g)` only
/// depends on `x mod g`.
pub fn dft_grid(f: &ZFunc, g: usize) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); g];
    for (x, v) in f.iter() {
        buf[x.rem_euclid(g as i64) as usize] += v;
    }
    FftPlanner::new().plan_fft_forward(g).process(&mut buf);
    buf
}

/// Grid maximum of `|f^|` followed by golden-section refinement around the
/// best grid point. The result is a certified lower bound for the true sup.
pub fn fourier_sup(f: &ZFunc, grid: usize) -> Result<(f64, f64)> {
    let need = 4 * f.len().max(1);
    if grid < need {
        return Err(Error::GridTooSmall { got: grid, need });
    }
    let vals = dft_grid(f, grid);
    let (j, best) = vals
        .iter()
        .enumerate()
        .map(|(j, v)| (j, v.norm()))
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let h = 1.0 / grid as f64;
    let center = j as f64 * h;
    let (t, v) = golden_max(|t| dft_eval(f, t).norm(), center - h, center + h, 60);
    Ok(if v > best { (t.rem_euclid(1.0), v) } else { (center, best) })
}

/// Golden-section search for a maximum of a unimodal function on `[a, b]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd { (c, fc) } else { (d, fd) }
}

/// Exact discrete convolution.
pub fn convolve(f: &ZFunc, g: &ZFunc) -> ZFunc {
    if f.is_empty() || g.is_empty() {
        return ZFunc::zero();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); f.len() + g.len() - 1];
    for (i, a) in f.values().iter().enumerate() {
        if *a == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (j, b) in g.values().iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    ZFunc::new(f.offset() + g.offset(), out)
}

/// Smoothing error used in the model-control argument: `nu1` is `nu`
/// truncated to `[delta^5 N, N]`, `tau` is the normalized box of half-width
/// `floor(delta^10 N)`, and the result is `sum_d |(tau * nu1)(d) - nu(d)|`.
pub fn smoothing_error(n: u64, delta: f64) -> f64 {
    let lo = (delta.powi(5) * n as f64).ceil().max(1.0) as i64;
    let nu1 = ZFunc::from_fn(1, n as i64, |d| {
        Complex64::new(if d >= lo { (n as f64 / d as f64).sqrt() } else { 0.0 }, 0.0)
    });
    let half = (delta.powi(10) * n as f64).floor() as i64;
    let tau = ZFunc::from_fn(-half, half, |_| Complex64::new(1.0 / (2 * half + 1) as f64, 0.0));
    let smooth = convolve(&tau, &nu1);
    let nu = nu_weight(n);
    let lo = smooth.offset().min(1);
    let hi = smooth.end().max(n as i64 + 1);
    (lo..hi).map(|d| (smooth.get(d) - nu.get(d)).norm()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn zfunc_window_semantics() {
        let f = ZFunc::from_real(-2, &[0.0, 1.0, 2.0, 0.0]);
        assert_eq!(f.get(-3), c(0.0));
        assert_eq!(f.get(-1), c(1.0));
        assert_eq!(f.get(2), c(0.0));
        assert_eq!(f.support(), Some((-1, 0)));
        assert_eq!(f.trimmed().len(), 2);
        assert_eq!(ZFunc::zero().support(), None);
    }

    #[test]
    fn zfunc_json_round_trip() {
        let f = ZFunc::new(3, vec![Complex64::new(1.0, -2.0), Complex64::new(0.5, 0.25)]);
        assert_eq!(ZFunc::from_json(&f.to_json()).unwrap(), f);
    }

    #[test]
    fn interval_set_semantics() {
        let s = IntervalSet::from_members(10, [1, 4, 10]).unwrap();
        assert!(s.contains(4) && !s.contains(0) && !s.contains(11) && !s.contains(5));
        assert_eq!(s.len(), 3);
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#"{"N":10,"members":[1,4,10]}"#);
        assert_eq!(serde_json::from_str::<IntervalSet>(&j).unwrap(), s);
        assert!(IntervalSet::from_members(3, [4]).is_err());
    }

    #[test]
    fn fejer_examples() {
        let k = fejer(4.0).unwrap();
        assert_eq!(k.get(0), c(0.25));
        assert_eq!(k.get(2), c(0.125));
        assert!(close(k.sum(), c(1.0), 1e-15));
        assert!(fejer(0.5).is_err());
    }

    #[test]
    fn fejer_sums_to_one() {
        for h in 1..=1000 {
            let s = fejer(h as f64).unwrap().sum();
            assert!(close(s, c(1.0), 1e-12), "H={h}: {s}");
        }
        let k = FejerProduct::new(7.5, 2).unwrap();
        let mut total = 0.0;
        for a in -7..=7 {
            for b in -7..=7 {
                total += k.eval(&[a, b]);
            }
        }
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nu_examples() {
        let nu = nu_weight(100);
        assert_eq!(nu.get(4), c(5.0));
        assert_eq!(nu.get(0), c(0.0));
        assert_eq!(nu.get(100), c(1.0));
        assert!(nu.iter().all(|(_, v)| v.re >= 1.0));
    }

    #[test]
    fn nu_star_examples() {
        let ctx = ArithCtx::new(16, 2).unwrap();
        assert_eq!(p_values_in_range(&ctx), vec![1, 3, 6, 10, 15]);
        let s = nu_star(&ctx);
        assert!((s.get(3).re - 32f64.sqrt()).abs() < 1e-12);
        assert_eq!(s.get(5), c(0.0));
        assert_eq!(s.get(0), c(0.0));
    }

    #[test]
    fn nu_star_transform_matches_brute_force() {
        let ctx = ArithCtx::new(5000, 3).unwrap();
        let s = nu_star(&ctx);
        let m = ctx.m as i64 + 2;
        for theta in [0.0, 0.1234, 0.5, 0.987] {
            let mut brute = Complex64::new(0.0, 0.0);
            for k in -m..=m {
                let d = ctx.p(k);
                if d >= 1 && d <= ctx.n as i64 {
                    brute += e(-(d as f64) * theta) * ctx.scale();
                }
            }
            assert!(close(dft_eval(&s, theta), brute, 1e-9));
        }
    }

    #[test]
    fn dft_examples() {
        assert!(close(dft_eval(&ZFunc::delta(0), 0.37), c(1.0), 1e-15));
        assert!(close(dft_eval(&ZFunc::indicator(1, 50), 0.0), c(50.0), 1e-12));
        assert!(close(dft_eval(&ZFunc::delta(1), 0.3), e(-0.3), 1e-15));
    }

    #[test]
    fn dft_grid_matches_pointwise() {
        let f = ZFunc::from_fn(-7, 20, |x| Complex64::new((x as f64).sin(), (x * x) as f64 / 100.0));
        let g = 16;
        let grid = dft_grid(&f, g);
        for (j, v) in grid.iter().enumerate() {
            assert!(close(*v, dft_eval(&f, j as f64 / g as f64), 1e-10));
        }
    }

    #[test]
    fn parseval_on_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for len in [1usize, 17, 300, 2048] {
            let f = ZFunc::from_fn(-3, len as i64 - 4, |_| {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let g = 4 * len;
            let avg: f64 = dft_grid(&f, g).iter().map(|v| v.norm_sqr()).sum::<f64>() / g as f64;
            assert!((avg - f.l2_sq()).abs() <= 1e-9 * f.l2_sq());
        }
    }

    #[test]
    fn fourier_sup_examples() {
        let f = ZFunc::from_fn(1, 64, |x| e(0.25 * x as f64));
        let (t, v) = fourier_sup(&f, 256).unwrap();
        assert!((t - 0.25).abs() < 1e-6 && (v - 64.0).abs() < 1e-6);

        let (t, v) = fourier_sup(&ZFunc::delta(0), 4).unwrap();
        assert_eq!(t, 0.0);
        assert!((v - 1.0).abs() < 1e-12);

        let f = ZFunc::indicator(1, 32).add(&ZFunc::indicator(2, 33).scale(c(-1.0)));
        let (_, v) = fourier_sup(&f, 4 * f.len()).unwrap();
        assert!(v < 32.0);
        assert!((v - 2.0).abs() < 1e-9);

        assert!(matches!(fourier_sup(&f, 3), Err(Error::GridTooSmall { .. })));
    }

    #[test]
    fn convolve_examples() {
        let d = convolve(&ZFunc::delta(3), &ZFunc::delta(-5));
        assert_eq!(d.trimmed(), ZFunc::delta(-2));
        let f = ZFunc::from_real(2, &[1.0, -2.0, 3.0]);
        assert_eq!(convolve(&f, &ZFunc::delta(0)), f);
        let g = convolve(&ZFunc::indicator(1, 2), &ZFunc::indicator(1, 2));
        assert_eq!(g, ZFunc::from_real(2, &[1.0, 2.0, 1.0]));
    }

    #[test]
    fn smoothing_error_is_small() {
        let n = 100_000;
        let delta = 0.2;
        assert!(smoothing_error(n, delta) <= delta * delta * n as f64);
    }
}
