//! Degree-2 nilpotent groups in coordinates: the Heisenberg group in
//! matrix-entry coordinates and abelian groups, polynomial sequences, the
//! group of constrained quadruples, characters and torus Fejér smoothing.
//!
//! Heisenberg points `(a, b, c)` stand for the unipotent matrix with `a`, `b`
//! on the superdiagonal and `c` in the corner. The lattice is the set of
//! integer points; exponential coordinates of the second kind would relate
//! by `c' = c - a b / 2` and agree with these on the lattice only up to that
//! triangular change.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rustfft::FftPlanner;
use serde::Serialize;
use serde_json::{json, Value};

use crate::arith::{binom_int, cinf_norm, BinomPoly};
use crate::report::Report;
use crate::signal::e;
use crate::{Error, Result};

pub type Q = BigRational;

fn q(n: i64) -> Q {
    Q::from_integer(n.into())
}

fn qb(n: &BigInt) -> Q {
    Q::from_integer(n.clone())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NilGroupSpec {
    /// `R^m` with the coordinates in `central` forming the second filtration step.
    Abelian { m: usize, central: Vec<usize> },
    Heisenberg3,
}

impl NilGroupSpec {
    pub fn dim(&self) -> usize {
        match self {
            Self::Abelian { m, .. } => *m,
            Self::Heisenberg3 => 3,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Self::Abelian { .. } => "abelian",
            Self::Heisenberg3 => "heisenberg3",
        }
    }

    /// Coordinates that must vanish on the second filtration step.
    fn horizontal_coords(&self) -> Vec<usize> {
        match self {
            Self::Abelian { m, central } => (0..*m).filter(|i| !central.contains(i)).collect(),
            Self::Heisenberg3 => vec![0, 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NilPoint {
    pub coords: Vec<Q>,
}

impl NilPoint {
    pub fn new(coords: Vec<Q>) -> Self {
        Self { coords }
    }

    pub fn ints(c: &[i64]) -> Self {
        Self::new(c.iter().map(|&v| q(v)).collect())
    }

    /// Exact image of the given floats (every finite double is a dyadic rational).
    pub fn floats(c: &[f64]) -> Result<Self> {
        c.iter()
            .map(|&v| Q::from_float(v).ok_or_else(|| Error::InvalidParam(format!("non-finite coordinate {v}"))))
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    pub fn identity(spec: &NilGroupSpec) -> Self {
        Self::new(vec![Q::zero(); spec.dim()])
    }

    pub fn is_identity(&self) -> bool {
        self.coords.iter().all(Zero::is_zero)
    }

    pub fn in_lattice(&self) -> bool {
        self.coords.iter().all(|c| c.is_integer())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coords.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
    }

    pub fn to_json(&self, spec: &NilGroupSpec) -> Value {
        let part = |x: &BigInt| x.to_i64().map(Value::from).unwrap_or_else(|| Value::from(x.to_string()));
        let coords: Vec<Value> = self.coords.iter().map(|c| json!([part(c.numer()), part(c.denom())])).collect();
        json!({ "group": spec.name(), "coords": coords })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = || Error::InvalidParam("expected {coords: [[num, den], ...]}".into());
        let part = |x: &Value| -> Result<BigInt> {
            match x {
                Value::Number(n) => n.as_i64().map(BigInt::from).ok_or_else(bad),
                Value::String(s) => s.parse().map_err(|_| bad()),
                _ => Err(bad()),
            }
        };
        let coords = v.get("coords").and_then(Value::as_array).ok_or_else(bad)?;
        coords
            .iter()
            .map(|pair| {
                let pair = pair.as_array().filter(|p| p.len() == 2).ok_or_else(bad)?;
                let den = part(&pair[1])?;
                if den.is_zero() {
                    return Err(bad());
                }
                Ok(Q::new(part(&pair[0])?, den))
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }
}

fn check_dim(spec: &NilGroupSpec, pts: &[&NilPoint]) -> Result<()> {
    match pts.iter().find(|p| p.coords.len() != spec.dim()) {
        Some(p) => Err(Error::InvalidParam(format!("point has {} coords, group needs {}", p.coords.len(), spec.dim()))),
        None => Ok(()),
    }
}

pub fn nil_mul(spec: &NilGroupSpec, x: &NilPoint, y: &NilPoint) -> Result<NilPoint> {
    check_dim(spec, &[x, y])?;
    let mut out: Vec<Q> = x.coords.iter().zip(&y.coords).map(|(a, b)| a + b).collect();
    if let NilGroupSpec::Heisenberg3 = spec {
        out[2] += &x.coords[0] * &y.coords[1];
    }
    Ok(NilPoint::new(out))
}

pub fn nil_inv(spec: &NilGroupSpec, x: &NilPoint) -> Result<NilPoint> {
    check_dim(spec, &[x])?;
    let mut out: Vec<Q> = x.coords.iter().map(|a| -a).collect();
    if let NilGroupSpec::Heisenberg3 = spec {
        out[2] += &x.coords[0] * &x.coords[1];
    }
    Ok(NilPoint::new(out))
}

/// `x^n`; for the Heisenberg group `(n a, n b, n c + binom(n, 2) a b)`.
pub fn nil_pow(spec: &NilGroupSpec, x: &NilPoint, n: &BigInt) -> Result<NilPoint> {
    check_dim(spec, &[x])?;
    let nq = qb(n);
    let mut out: Vec<Q> = x.coords.iter().map(|a| a * &nq).collect();
    if let NilGroupSpec::Heisenberg3 = spec {
        out[2] += qb(&binom_int(n, 2)) * &x.coords[0] * &x.coords[1];
    }
    Ok(NilPoint::new(out))
}

pub fn commutator(spec: &NilGroupSpec, x: &NilPoint, y: &NilPoint) -> Result<NilPoint> {
    let xy = nil_mul(spec, x, y)?;
    let xinv_yinv = nil_mul(spec, &nil_inv(spec, x)?, &nil_inv(spec, y)?)?;
    nil_mul(spec, &xy, &xinv_yinv)
}

/// Whether `x` lies in the second filtration step.
pub fn in_g2(spec: &NilGroupSpec, x: &NilPoint) -> bool {
    x.coords.len() == spec.dim() && spec.horizontal_coords().iter().all(|&i| x.coords[i].is_zero())
}

/// `n -> g0 g1^n g2^binom(n, 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolySeq2 {
    pub g0: NilPoint,
    pub g1: NilPoint,
    pub g2: NilPoint,
}

impl PolySeq2 {
    pub fn new(spec: &NilGroupSpec, g0: NilPoint, g1: NilPoint, g2: NilPoint) -> Result<Self> {
        check_dim(spec, &[&g0, &g1, &g2])?;
        if !in_g2(spec, &g2) {
            return Err(Error::InvalidParam("g2 must lie in the second filtration step".into()));
        }
        Ok(Self { g0, g1, g2 })
    }

    pub fn identity(spec: &NilGroupSpec) -> Self {
        let e = NilPoint::identity(spec);
        Self { g0: e.clone(), g1: e.clone(), g2: e }
    }

    pub fn to_json(&self, spec: &NilGroupSpec) -> Value {
        json!({ "g0": self.g0.to_json(spec), "g1": self.g1.to_json(spec), "g2": self.g2.to_json(spec) })
    }

    pub fn from_json(spec: &NilGroupSpec, v: &Value) -> Result<Self> {
        let get = |k: &str| {
            v.get(k).ok_or_else(|| Error::InvalidParam(format!("missing {k}"))).and_then(NilPoint::from_json)
        };
        Self::new(spec, get("g0")?, get("g1")?, get("g2")?)
    }
}

pub fn polyseq_eval(spec: &NilGroupSpec, seq: &PolySeq2, n: &BigInt) -> Result<NilPoint> {
    let a = nil_pow(spec, &seq.g1, n)?;
    let b = nil_pow(spec, &seq.g2, &binom_int(n, 2))?;
    nil_mul(spec, &nil_mul(spec, &seq.g0, &a)?, &b)
}

/// The degree-2 sequence through the given values at `n = 0, 1, 2`, if its
/// top coefficient lies in the second filtration step.
pub fn polyseq_fit(spec: &NilGroupSpec, v0: &NilPoint, v1: &NilPoint, v2: &NilPoint) -> Result<PolySeq2> {
    let g1 = nil_mul(spec, &nil_inv(spec, v0)?, v1)?;
    let base = nil_mul(spec, v0, &nil_pow(spec, &g1, &2.into())?)?;
    let g2 = nil_mul(spec, &nil_inv(spec, &base)?, v2)?;
    PolySeq2::new(spec, v0.clone(), g1, g2)
}

/// Pointwise product `n -> g(n) h(n)`, itself a degree-2 sequence.
pub fn polyseq_mul(spec: &NilGroupSpec, g: &PolySeq2, h: &PolySeq2) -> Result<PolySeq2> {
    let at = |n: i64| -> Result<NilPoint> {
        let n = BigInt::from(n);
        nil_mul(spec, &polyseq_eval(spec, g, &n)?, &polyseq_eval(spec, h, &n)?)
    };
    polyseq_fit(spec, &at(0)?, &at(1)?, &at(2)?)
}

/// `tau(x, y) = (2(x + 2y), 3(x + y), 6y, 6x)`.
pub fn tau(x: i64, y: i64) -> [i64; 4] {
    [2 * (x + 2 * y), 3 * (x + y), 6 * y, 6 * x]
}

/// Rank of a rational matrix by Gaussian elimination.
pub fn rank(rows: &[Vec<Q>]) -> usize {
    let mut m: Vec<Vec<Q>> = rows.to_vec();
    let cols = m.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        let pivot = m[r][c].clone();
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let f = &m[i][c] / &pivot;
                for j in c..cols {
                    let t = &f * &m[r][j];
                    m[i][j] -= t;
                }
            }
        }
        r += 1;
        if r == m.len() {
            break;
        }
    }
    r
}

/// Exact determinant of a square rational matrix.
pub fn det(mat: &[Vec<Q>]) -> Q {
    let n = mat.len();
    let mut m = mat.to_vec();
    let mut d = Q::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !m[i][c].is_zero()) else { return Q::zero() };
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        d *= &m[c][c];
        for i in c + 1..n {
            let f = &m[i][c] / &m[c][c];
            for j in c..n {
                let t = &f * &m[c][j];
                m[i][j] -= t;
            }
        }
    }
    d
}

/// Solves `a x = b` for square nonsingular `a`.
pub fn solve(a: &[Vec<Q>], b: &[Q]) -> Result<Vec<Q>> {
    let n = a.len();
    if det(a).is_zero() {
        return Err(Error::InvalidParam("singular system".into()));
    }
    let mut m: Vec<Vec<Q>> = a.iter().zip(b).map(|(row, v)| row.iter().cloned().chain([v.clone()]).collect()).collect();
    for c in 0..n {
        let p = (c..n).find(|&i| !m[i][c].is_zero()).unwrap();
        m.swap(p, c);
        let pivot = m[c][c].clone();
        for v in m[c].iter_mut() {
            *v /= &pivot;
        }
        for i in 0..n {
            if i != c && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in c..=n {
                    let t = &f * &m[c][j];
                    m[i][j] -= t;
                }
            }
        }
    }
    Ok(m.into_iter().map(|row| row[n].clone()).collect())
}

/// Spanning vectors for the coordinate `i`-th powers of `tau(x, y)`.
fn tau_power_rows(i: u32, range: i64) -> Vec<Vec<Q>> {
    let mut rows = Vec::new();
    for x in -range..=range {
        for y in -range..=range {
            rows.push(tau(x, y).iter().map(|&t| qb(&BigInt::from(t).pow(i))).collect());
        }
    }
    rows
}

/// Nested basis of the power spans of `tau`, one new vector per step.
pub const FLAG_BASIS: [[i64; 4]; 4] = [[1, 1, 1, 1], [0, 1, -2, 4], [0, 0, 1, 2], [0, 0, 0, 1]];

/// Ranks of the spans of coordinatewise `i`-th powers of `tau(x, y)`,
/// `(x, y) in [-10, 10]^2`, for `i = 1, 2, 3`, with membership of the nested
/// basis vectors.
pub fn flag_span_check() -> Report {
    let mut r = Report::new("flag_spans");
    let expected = [2usize, 3, 4];
    for i in 1..=3u32 {
        let rows = tau_power_rows(i, 10);
        let rk = rank(&rows);
        r.value(&format!("rank_{i}"), rk as u64);
        r.check(&format!("rank of power-{i} span"), rk == expected[i as usize - 1], rk as f64, expected[i as usize - 1] as f64);
        for v in &FLAG_BASIS[..=i as usize] {
            let mut ext = rows.clone();
            ext.push(v.iter().map(|&t| q(t)).collect());
            r.flag(&format!("{v:?} in power-{i} span"), rank(&ext) == rk);
        }
    }
    r
}

/// Recovers `(g0, g1, g2)` from `(g0, g0 g1, g0 g1^-2 g2, g0 g1^4 g2^2)`, or
/// `None` when the quadruple is not of that form.
pub fn gtau_decompose(spec: &NilGroupSpec, quad: &[NilPoint; 4]) -> Result<Option<(NilPoint, NilPoint, NilPoint)>> {
    check_dim(spec, &quad.iter().collect::<Vec<_>>())?;
    let g0 = quad[0].clone();
    let g1 = nil_mul(spec, &nil_inv(spec, &g0)?, &quad[1])?;
    let base = nil_mul(spec, &g0, &nil_pow(spec, &g1, &(-2).into())?)?;
    let g2 = nil_mul(spec, &nil_inv(spec, &base)?, &quad[2])?;
    if !in_g2(spec, &g2) {
        return Ok(None);
    }
    let fourth = nil_mul(
        spec,
        &nil_mul(spec, &g0, &nil_pow(spec, &g1, &4.into())?)?,
        &nil_pow(spec, &g2, &2.into())?,
    )?;
    Ok((fourth == quad[3]).then_some((g0, g1, g2)))
}

/// Builds the quadruple `(g0, g0 g1, g0 g1^-2 g2, g0 g1^4 g2^2)`.
pub fn gtau_compose(spec: &NilGroupSpec, g0: &NilPoint, g1: &NilPoint, g2: &NilPoint) -> Result<[NilPoint; 4]> {
    let p = |x: &NilPoint, n: i64| nil_pow(spec, x, &n.into());
    Ok([
        g0.clone(),
        nil_mul(spec, g0, g1)?,
        nil_mul(spec, &nil_mul(spec, g0, &p(g1, -2)?)?, g2)?,
        nil_mul(spec, &nil_mul(spec, g0, &p(g1, 4)?)?, &p(g2, 2)?)?,
    ])
}

/// Whether `(g(tau_1), .., g(tau_4))` at `(x, y)` decomposes.
pub fn constraint_check(spec: &NilGroupSpec, seq: &PolySeq2, x: i64, y: i64) -> Result<bool> {
    let t = tau(x, y);
    let quad = [
        polyseq_eval(spec, seq, &t[0].into())?,
        polyseq_eval(spec, seq, &t[1].into())?,
        polyseq_eval(spec, seq, &t[2].into())?,
        polyseq_eval(spec, seq, &t[3].into())?,
    ];
    Ok(gtau_decompose(spec, &quad)?.is_some())
}

/// Solves for `(xi_1, xi_2, xi_3)` with `(xi_1, xi_2, xi_3, -xi)` orthogonal to
/// the first three nested basis vectors. Returns the solution and the
/// determinant of the system.
pub fn vertical_freq_system(xi: &Q) -> Result<([Q; 3], Q)> {
    let a: Vec<Vec<Q>> = FLAG_BASIS[..3].iter().map(|v| v[..3].iter().map(|&t| q(t)).collect()).collect();
    let b: Vec<Q> = FLAG_BASIS[..3].iter().map(|v| xi * q(v[3])).collect();
    let d = det(&a);
    let s = solve(&a, &b)?;
    Ok(([s[0].clone(), s[1].clone(), s[2].clone()], d))
}

/// Splits `g = frac * lat` with `lat` a lattice point and every coordinate
/// of `frac` in `[0, 1)`.
pub fn fundamental_domain(spec: &NilGroupSpec, g: &NilPoint) -> Result<(NilPoint, NilPoint)> {
    check_dim(spec, &[g])?;
    let split = |x: &Q| {
        let l = x.floor();
        (x - &l, l)
    };
    match spec {
        NilGroupSpec::Abelian { .. } => {
            let (f, l): (Vec<Q>, Vec<Q>) = g.coords.iter().map(split).unzip();
            Ok((NilPoint::new(f), NilPoint::new(l)))
        }
        NilGroupSpec::Heisenberg3 => {
            let (fa, la) = split(&g.coords[0]);
            let (fb, lb) = split(&g.coords[1]);
            // c = fc + lc + fa lb
            let (fc, lc) = split(&(&g.coords[2] - &fa * &lb));
            Ok((NilPoint::new(vec![fa, fb, fc]), NilPoint::new(vec![la, lb, lc])))
        }
    }
}

/// `max_i |psi_i(x y^-1)|`, a coordinate quasi-distance for diagnostics.
pub fn coord_quasi_distance(spec: &NilGroupSpec, x: &NilPoint, y: &NilPoint) -> Result<f64> {
    let d = nil_mul(spec, x, &nil_inv(spec, y)?)?;
    Ok(d.coords.iter().map(|c| c.abs().to_f64().unwrap_or(f64::INFINITY)).fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CharSpec {
    /// Integer frequency on the horizontal coordinates.
    Horizontal { k: Vec<i64> },
    /// Integer frequency on the central coordinate.
    Vertical { xi: i64 },
}

/// Checks a horizontal frequency and returns it as a full coordinate vector
/// (zero on the second filtration step).
fn horizontal_vector(spec: &NilGroupSpec, k: &[i64]) -> Result<Vec<i64>> {
    let horiz = spec.horizontal_coords();
    let dim = spec.dim();
    if k.len() == horiz.len() {
        let mut full = vec![0; dim];
        for (&i, &v) in horiz.iter().zip(k) {
            full[i] = v;
        }
        return Ok(full);
    }
    if k.len() == dim && (0..dim).all(|i| horiz.contains(&i) || k[i] == 0) {
        return Ok(k.to_vec());
    }
    Err(Error::BadCharacter)
}

/// `n -> k . psi(g(n))` as a polynomial in the binomial basis. Only the
/// horizontal coordinates enter, so the result is exact in the coefficients
/// of `g0`, `g1`, `g2`.
pub fn horiz_char_apply(spec: &NilGroupSpec, k: &[i64], seq: &PolySeq2) -> Result<BinomPoly> {
    let kv = horizontal_vector(spec, k)?;
    let dot = |p: &NilPoint| -> Q {
        p.coords.iter().zip(&kv).filter(|(_, &w)| w != 0).map(|(c, &w)| c * q(w)).fold(Q::zero(), |s, t| s + t)
    };
    Ok(BinomPoly::from_exact(vec![dot(&seq.g0), dot(&seq.g1), dot(&seq.g2)]))
}

/// Horizontal frequencies `k != 0` with `|k|_inf <= k_max`, one per `+-k`
/// pair (first nonzero entry positive), ordered by `|k|_inf`, then `|k|_1`,
/// then with earlier coordinates carrying the weight.
fn horizontal_candidates(n_horiz: usize, k_max: i64) -> Vec<Vec<i64>> {
    let side = (2 * k_max + 1) as usize;
    let mut out = Vec::new();
    for idx in 0..side.pow(n_horiz as u32) {
        let mut rest = idx;
        let k: Vec<i64> = (0..n_horiz)
            .map(|_| {
                let v = (rest % side) as i64 - k_max;
                rest /= side;
                v
            })
            .collect();
        if k.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0) {
            out.push(k);
        }
    }
    out.sort_by_key(|k| {
        let inf = k.iter().map(|v| v.abs()).max().unwrap();
        let l1: i64 = k.iter().map(|v| v.abs()).sum();
        let pos: Vec<i64> = k.iter().map(|v| -v.abs()).collect();
        (inf, l1, pos, k.iter().map(|v| -v).collect::<Vec<_>>())
    });
    out
}

/// Exhaustive search for a nonzero horizontal `k`, `|k|_inf <= k_max`,
/// minimizing the smoothness norm of `k . g` on `[N]`; returned only if that
/// norm is at most 1.
pub fn low_freq_obstruction(spec: &NilGroupSpec, seq: &PolySeq2, n: u64, k_max: i64) -> Result<Option<(Vec<i64>, f64)>> {
    if k_max < 1 {
        return Err(Error::InvalidParam("K_max must be >= 1".into()));
    }
    let n_h = spec.horizontal_coords().len();
    if n_h == 0 {
        return Ok(None);
    }
    let mut best: Option<(Vec<i64>, f64)> = None;
    for k in horizontal_candidates(n_h, k_max) {
        let norm = cinf_norm(&horiz_char_apply(spec, &k, seq)?, n);
        if best.as_ref().is_none_or(|b| norm < b.1) {
            best = Some((k, norm));
        }
    }
    Ok(best.filter(|b| b.1 <= 1.0))
}

/// `|E_{n in [N]} F(g(n) Gamma)|` for a character-type `F` read off the
/// fundamental-domain representative of `g(n)`.
pub fn equi_discrepancy(spec: &NilGroupSpec, seq: &PolySeq2, ch: &CharSpec, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParam("N must be >= 1".into()));
    }
    let coeff: Vec<Q> = match ch {
        CharSpec::Horizontal { k } => horizontal_vector(spec, k)?.into_iter().map(q).collect(),
        CharSpec::Vertical { xi } => {
            let mut v = vec![Q::zero(); spec.dim()];
            let central = match spec {
                NilGroupSpec::Heisenberg3 => 2,
                NilGroupSpec::Abelian { central, .. } => *central.first().ok_or(Error::BadCharacter)?,
            };
            v[central] = q(*xi);
            v
        }
    };
    let mut acc = Complex64::new(0.0, 0.0);
    for m in 1..=n {
        let (frac, _) = fundamental_domain(spec, &polyseq_eval(spec, seq, &BigInt::from(m))?)?;
        let phase: Q = frac.coords.iter().zip(&coeff).map(|(a, b)| a * b).fold(Q::zero(), |s, t| s + t);
        let ph = &phase - phase.floor();
        acc += e(ph.to_f64().unwrap_or(0.0));
    }
    Ok(acc.norm() / n as f64)
}

/// Samples of a function on the torus `T^d`, `d <= 2`, on the grid
/// `(j_1 / g, .., j_d / g)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusSamples {
    pub d: usize,
    pub g: usize,
    pub values: Vec<Complex64>,
}

impl TorusSamples {
    pub fn from_fn(d: usize, g: usize, f: impl Fn(&[f64]) -> Complex64) -> Result<Self> {
        if !(1..=2).contains(&d) || g == 0 {
            return Err(Error::InvalidParam(format!("need d in {{1, 2}} and g >= 1, got {d}, {g}")));
        }
        let values = (0..g.pow(d as u32))
            .map(|idx| {
                let pt: Vec<f64> = (0..d).map(|i| ((idx / g.pow(i as u32)) % g) as f64 / g as f64).collect();
                f(&pt)
            })
            .collect();
        Ok(Self { d, g, values })
    }
}

/// `int_T ||y|| K_R(y) dy` for the Fejér kernel of order `R`, in closed form.
pub fn fejer_first_moment(r: u64) -> f64 {
    let pi2 = std::f64::consts::PI.powi(2);
    let odd: f64 = (1..r).step_by(2).map(|x| 2.0 * (1.0 - x as f64 / r as f64) / (pi2 * (x * x) as f64)).sum();
    0.25 - odd
}

/// `sup_{R <= r_max} sqrt(R) int ||y|| K_R`, the constant in the
/// Lipschitz smoothing bound `d L C / sqrt(R)`.
pub fn fejer_lipschitz_constant(r_max: u64) -> f64 {
    (1..=r_max).map(|r| (r as f64).sqrt() * fejer_first_moment(r)).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FejerApprox {
    pub r: u64,
    /// Frequency vector to coefficient.
    pub coeffs: BTreeMap<Vec<i64>, Complex64>,
    pub l1_coeffs: f64,
    pub sup_err: f64,
}

pub const FEJER_EVAL_BUDGET: u128 = 2_000_000_000;

/// Fejér smoothing of order `r`: Fourier coefficients of the samples
/// weighted by `prod (1 - |xi_i| / r)`, with the sup error measured on the
/// sample grid.
pub fn torus_fejer_approx_with_r(samples: &TorusSamples, r: u64) -> Result<FejerApprox> {
    let (d, g) = (samples.d, samples.g);
    if r == 0 {
        return Err(Error::InvalidParam("R must be >= 1".into()));
    }
    let need = 2 * r as usize - 1;
    if g < need {
        return Err(Error::GridTooSmall { got: g, need });
    }
    let freqs_1d: Vec<i64> = (-(r as i64) + 1..r as i64).collect();
    let work = (g as u128).pow(d as u32) * (freqs_1d.len() as u128).pow(d as u32);
    if work > FEJER_EVAL_BUDGET {
        return Err(Error::Budget { required: work, budget: FEJER_EVAL_BUDGET });
    }
    // Forward DFT of the samples along each axis.
    let mut hat = samples.values.clone();
    let fft = FftPlanner::new().plan_fft_forward(g);
    for axis in 0..d {
        let stride = g.pow(axis as u32);
        for base in 0..g.pow(d as u32) {
            if (base / stride) % g != 0 {
                continue;
            }
            let mut line: Vec<Complex64> = (0..g).map(|j| hat[base + j * stride]).collect();
            fft.process(&mut line);
            for (j, v) in line.into_iter().enumerate() {
                hat[base + j * stride] = v / g as f64;
            }
        }
    }
    let weight = |xi: i64| 1.0 - xi.unsigned_abs() as f64 / r as f64;
    let mut coeffs = BTreeMap::new();
    let ids: Vec<Vec<i64>> = if d == 1 {
        freqs_1d.iter().map(|&a| vec![a]).collect()
    } else {
        freqs_1d.iter().flat_map(|&a| freqs_1d.iter().map(move |&b| vec![a, b])).collect()
    };
    for xi in ids {
        let idx: usize = xi.iter().enumerate().map(|(i, &v)| v.rem_euclid(g as i64) as usize * g.pow(i as u32)).sum();
        let w: f64 = xi.iter().map(|&v| weight(v)).product();
        let c = hat[idx] * w;
        if c.norm() > 0.0 {
            coeffs.insert(xi, c);
        }
    }
    let l1_coeffs = coeffs.values().map(|c| c.norm()).sum();
    let mut sup_err = 0f64;
    for (idx, v) in samples.values.iter().enumerate() {
        let pt: Vec<f64> = (0..d).map(|i| ((idx / g.pow(i as u32)) % g) as f64 / g as f64).collect();
        let approx: Complex64 = coeffs
            .iter()
            .map(|(xi, c)| c * e(xi.iter().zip(&pt).map(|(&a, &x)| a as f64 * x).sum::<f64>()))
            .sum();
        sup_err = sup_err.max((approx - v).norm());
    }
    Ok(FejerApprox { r, coeffs, l1_coeffs, sup_err })
}

/// Range of `R` over which the smoothing constant is computed.
pub const FEJER_CAL_RANGE: u64 = 4096;

/// Chooses `R = ceil((C L d / eps)^2)` and requires the measured sup error
/// to be at most `eps`.
pub fn torus_fejer_approx(samples: &TorusSamples, lipschitz: f64, eps: f64) -> Result<FejerApprox> {
    if !(eps > 0.0 && eps < 0.5) || !(lipschitz >= 0.0) {
        return Err(Error::InvalidParam(format!("need eps in (0, 1/2), L >= 0; got {eps}, {lipschitz}")));
    }
    let c = fejer_lipschitz_constant(FEJER_CAL_RANGE);
    let r = ((c * lipschitz * samples.d as f64 / eps).powi(2)).ceil().max(1.0) as u64;
    let out = torus_fejer_approx_with_r(samples, r)?;
    if out.sup_err > eps {
        return Err(Error::Accuracy { measured: out.sup_err, target: eps });
    }
    Ok(out)
}
