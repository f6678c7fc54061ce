//! Integer and polynomial primitives.
//!
//! Everything here is exact: big integers for the quadratic polynomials and
//! big rationals for binomial-basis coefficients. Floats only appear in the
//! torus view of a [`BinomPoly`] and in [`rational_approx`].

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Trial-division primality test.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Product of the primes `p <= w`; 1 when `w < 2`.
pub fn primorial(w: u64) -> BigInt {
    (2..=w).filter(|&p| is_prime(p)).fold(BigInt::one(), |acc, p| acc * p)
}

/// The parameter bundle `(N, w, W, M, delta)`.
///
/// `W` is the primorial of `w` and `M = floor(sqrt(N / W))`, so the shift
/// polynomial `P(y) = W y^2 + y` stays inside `[-N, N]` for `|y| <= M` up to a
/// lower-order term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArithCtx {
    pub w: u64,
    pub n: u64,
    pub big_w: u64,
    pub m: u64,
    pub delta: f64,
}

impl ArithCtx {
    pub fn new(n: u64, w: u64) -> Result<Self> {
        Self::with_delta(n, w, 0.1)
    }

    pub fn with_delta(n: u64, w: u64, delta: f64) -> Result<Self> {
        if w < 2 {
            return Err(Error::InvalidParam(format!("w must be at least 2, got {w}")));
        }
        if n < 1 {
            return Err(Error::InvalidParam("N must be at least 1".into()));
        }
        if !(delta > 0.0 && delta <= 0.5) {
            return Err(Error::InvalidParam(format!("delta must lie in (0, 1/2], got {delta}")));
        }
        let big_w = primorial(w)
            .to_u64()
            .filter(|&v| v <= i64::MAX as u64 / 4)
            .ok_or_else(|| Error::InvalidParam(format!("primorial({w}) overflows")))?;
        let m = (n / big_w).isqrt();
        Ok(Self { w, n, big_w, m, delta })
    }

    /// `P(y) = W y^2 + y` in machine integers.
    ///
    /// Panics on overflow; every caller keeps `|y|` near `M`.
    pub fn p(&self, y: i64) -> i64 {
        let w = self.big_w as i128;
        let y = y as i128;
        i64::try_from(w * y * y + y).expect("P(y) overflows i64")
    }

    /// `sqrt(N W)`, the scale relating the two counting operators.
    pub fn scale(&self) -> f64 {
        ((self.n as f64) * (self.big_w as f64)).sqrt()
    }
}

/// `P(y) = W y^2 + y` exactly.
pub fn poly_p(ctx: &ArithCtx, y: &BigInt) -> BigInt {
    BigInt::from(ctx.big_w) * y * y + y
}

/// `(P(W y + r) - P(r)) / W` with `P(y) = W y^2 + y`.
///
/// Both the quotient and the expanded form `W^2 y^2 + (2 W r + 1) y` are
/// computed; they are asserted equal.
pub fn poly_pr(w: &BigInt, r: &BigInt, y: &BigInt) -> Result<BigInt> {
    if w < &BigInt::one() || r < &BigInt::one() || r > w {
        return Err(Error::InvalidParam(format!("need W >= 1 and 1 <= r <= W, got W={w}, r={r}")));
    }
    let p = |t: &BigInt| w * t * t + t;
    let (quot, rem) = (p(&(w * y + r)) - p(r)).div_rem(w);
    assert!(rem.is_zero(), "P(Wy+r) - P(r) not divisible by W");
    let expanded = w * w * y * y + (BigInt::from(2) * w * r + 1) * y;
    assert_eq!(quot, expanded);
    Ok(quot)
}

/// Machine-integer `W^2 y^2 + (2 W r + 1) y`, for inner loops.
pub fn pr_i64(w: i64, r: i64, y: i64) -> i64 {
    let (w, r, y) = (w as i128, r as i128, y as i128);
    i64::try_from(w * w * y * y + (2 * w * r + 1) * y).expect("P_r(y) overflows i64")
}

/// Parameters of the quadratic map `y -> a y^2 + b y` modulo `p^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HenselParams {
    pub a: i64,
    pub b: i64,
    pub p: u64,
    pub k: u32,
}

impl HenselParams {
    /// `p | a` and `p` does not divide `b`.
    pub fn hypothesis_holds(&self) -> bool {
        let p = self.p as i64;
        self.a.rem_euclid(p) == 0 && self.b.rem_euclid(p) != 0
    }

    pub fn modulus(&self) -> Option<u64> {
        self.p.checked_pow(self.k)
    }
}

/// Whether `y -> a y^2 + b y` permutes `Z / p^k Z`, by full enumeration.
pub fn hensel_bijection_check(hp: &HenselParams) -> Result<bool> {
    if !is_prime(hp.p) {
        return Err(Error::NotPrime(hp.p));
    }
    if hp.k == 0 {
        return Err(Error::InvalidParam("k must be at least 1".into()));
    }
    let q = hp
        .modulus()
        .filter(|&q| q <= 1 << 32)
        .ok_or_else(|| Error::InvalidParam("p^k too large to enumerate".into()))?;
    Ok(quadratic_is_permutation(hp.a, hp.b, q, &mut Vec::new()))
}

/// Enumeration kernel shared with the exhaustive sweeps; `seen` is scratch
/// space reused between calls.
pub fn quadratic_is_permutation(a: i64, b: i64, q: u64, seen: &mut Vec<u64>) -> bool {
    let words = q.div_ceil(64) as usize;
    seen.clear();
    seen.resize(words, 0);
    let a = a.rem_euclid(q as i64) as u64;
    let b = b.rem_euclid(q as i64) as u64;
    // a y^2 + b y mod q updated incrementally: the step from y to y+1 is
    // a(2y+1) + b. Residues stay below q < 2^63, so sums fit in u64.
    let add = |x: u64, y: u64| if x + y >= q { x + y - q } else { x + y };
    let mut val = 0u64;
    let mut step = add(a, b);
    let two_a = add(a, a);
    for _ in 0..q {
        let (w, bit) = ((val / 64) as usize, val % 64);
        if seen[w] >> bit & 1 == 1 {
            return false;
        }
        seen[w] |= 1 << bit;
        val = add(val, step);
        step = add(step, two_a);
    }
    true
}

/// `binom(x, j)` for any integer `x` (negative allowed).
pub fn binom_int(x: &BigInt, j: u32) -> BigInt {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..j {
        num *= x - BigInt::from(i);
        den *= BigInt::from(i + 1);
    }
    num / den
}

/// `binom(x, j)` for rational `x`.
pub fn binom_rat(x: &BigRational, j: u32) -> BigRational {
    let mut acc = BigRational::one();
    for i in 0..j {
        acc *= (x - BigRational::from_integer(BigInt::from(i))) / BigRational::from_integer(BigInt::from(i + 1));
    }
    acc
}

/// Checks the two binomial expansions of `binom(A n^2 + B n, 1)` and
/// `binom(A n^2 + B n, 2)` in the basis `binom(n, j)` for every `n` in the
/// inclusive range.
pub fn binom_identity_check(a: i64, b: i64, ns: std::ops::RangeInclusive<i64>) -> bool {
    let (ab, bb) = (BigInt::from(a), BigInt::from(b));
    let c = |v: i64| BigInt::from(v);
    let a2 = &ab * &ab;
    for n in ns {
        let nb = BigInt::from(n);
        let m = &ab * &nb * &nb + &bb * &nb;
        let bn = |j| binom_int(&nb, j);

        let lhs1 = binom_int(&m, 1);
        let rhs1 = c(2) * &ab * bn(2) + (&ab + &bb) * bn(1);
        if lhs1 != rhs1 {
            return false;
        }

        let lhs2 = binom_int(&m, 2);
        let rhs2 = c(12) * &a2 * bn(4)
            + (c(18) * &a2 + c(6) * &ab * &bb) * bn(3)
            + (c(7) * &a2 + c(6) * &ab * &bb - &ab + &bb * &bb) * bn(2)
            + (&ab * &bb + binom_int(&ab, 2) + binom_int(&bb, 2)) * bn(1);
        if lhs2 != rhs2 {
            return false;
        }
    }
    true
}

/// Distance from a rational to the nearest integer.
pub fn torus_dist_exact(x: &BigRational) -> BigRational {
    let f = x - x.floor();
    let g = BigRational::one() - &f;
    if f < g { f } else { g }
}

/// Distance from a real to the nearest integer.
pub fn torus_dist(x: f64) -> f64 {
    (x - x.round()).abs()
}

fn frac_f64(x: &BigRational) -> f64 {
    let f = x - x.floor();
    let v = f.to_f64().unwrap_or(0.0);
    if v >= 1.0 { 0.0 } else { v }
}

/// A torus-valued polynomial `n -> sum_j alpha_j binom(n, j) mod 1`.
///
/// `coeffs[j]` is `alpha_j` reduced into `[0, 1)`. When built from exact
/// rationals the unreduced values are kept alongside and every norm is
/// computed from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinomPoly {
    coeffs: Vec<f64>,
    #[serde(skip)]
    exact: Option<Vec<BigRational>>,
}

impl BinomPoly {
    pub fn from_exact(exact: Vec<BigRational>) -> Self {
        let exact = if exact.is_empty() { vec![BigRational::zero()] } else { exact };
        Self { coeffs: exact.iter().map(frac_f64).collect(), exact: Some(exact) }
    }

    pub fn from_torus(coeffs: Vec<f64>) -> Self {
        let coeffs = if coeffs.is_empty() { vec![0.0] } else { coeffs };
        Self { coeffs: coeffs.iter().map(|c| c.rem_euclid(1.0)).collect(), exact: None }
    }

    pub fn from_integers(coeffs: &[i64]) -> Self {
        Self::from_exact(coeffs.iter().map(|&c| BigRational::from_integer(c.into())).collect())
    }

    /// Highest index `j` with a stored coefficient.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn exact(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    /// Exact value at `n`, not reduced mod 1.
    pub fn eval_exact(&self, n: &BigInt) -> Option<BigRational> {
        let ex = self.exact.as_ref()?;
        let nr = BigRational::from_integer(n.clone());
        Some(
            ex.iter()
                .enumerate()
                .map(|(j, a)| a * binom_rat(&nr, j as u32))
                .fold(BigRational::zero(), |s, t| s + t),
        )
    }

    /// Value at `n` on the torus, in `[0, 1)`.
    pub fn eval_torus(&self, n: i64) -> f64 {
        if let Some(v) = self.eval_exact(&BigInt::from(n)) {
            return frac_f64(&v);
        }
        // Float coefficients are dyadic rationals, so the exact route is
        // still exact for them.
        let ex: Vec<BigRational> = self
            .coeffs
            .iter()
            .map(|&a| BigRational::from_float(a).unwrap_or_else(BigRational::zero))
            .collect();
        frac_f64(&BinomPoly { coeffs: self.coeffs.clone(), exact: Some(ex) }.eval_exact(&BigInt::from(n)).unwrap())
    }

    /// `||alpha_j||_T`.
    pub fn coeff_dist(&self, j: usize) -> f64 {
        match &self.exact {
            Some(ex) => torus_dist_exact(&ex[j]).to_f64().unwrap_or(0.0),
            None => torus_dist(self.coeffs[j]),
        }
    }
}

/// `max_{1 <= j <= d} N^j ||alpha_j||_T`.
pub fn cinf_norm(p: &BinomPoly, n: u64) -> f64 {
    (1..=p.degree())
        .map(|j| (n as f64).powi(j as i32) * p.coeff_dist(j))
        .fold(0.0, f64::max)
}

/// Coefficients in the basis `binom(n, t)`, `t = 0..=d`, of a polynomial of
/// degree at most `d`, read off from forward differences at 0.
pub fn binomial_basis_of(values: impl Fn(i64) -> BigRational, d: usize) -> Vec<BigRational> {
    let mut row: Vec<BigRational> = (0..=d as i64).map(values).collect();
    let mut out = Vec::with_capacity(d + 1);
    for _ in 0..=d {
        out.push(row[0].clone());
        row = row.windows(2).map(|w| &w[1] - &w[0]).collect();
    }
    out
}

/// Matrix `c[j][t]` with `binom(S n + I, j) = sum_t c[j][t] binom(n, t)`.
///
/// The shift by `I` uses Vandermonde's identity
/// `binom(m + I, j) = sum_u binom(m, u) binom(I, j - u)`, and the dilation
/// `binom(S n, u)` is expanded by forward differences.
pub fn affine_matrix(d: usize, s: i64, i: i64) -> Vec<Vec<BigRational>> {
    let ib = BigInt::from(i);
    let dil: Vec<Vec<BigRational>> = (0..=d)
        .map(|u| {
            binomial_basis_of(
                |n| BigRational::from_integer(binom_int(&BigInt::from(s * n), u as u32)),
                d,
            )
        })
        .collect();
    (0..=d)
        .map(|j| {
            let mut row = vec![BigRational::zero(); d + 1];
            for u in 0..=j {
                let w = BigRational::from_integer(binom_int(&ib, (j - u) as u32));
                for (t, e) in dil[u].iter().enumerate() {
                    row[t] += &w * e;
                }
            }
            row
        })
        .collect()
}

fn lcm_of_denominators<'a>(it: impl Iterator<Item = &'a BigRational>) -> BigInt {
    it.fold(BigInt::one(), |l, x| l.lcm(x.denom()))
}

/// Rewrites `n -> p(S n + I)` in the binomial basis.
///
/// Returns `(S', q)` where `q = S' p(S n + I)` and `S'` is the least positive
/// integer clearing the denominators the substitution introduces. Since
/// `binom(S n + I, j)` is integer valued, the substitution matrix is integral
/// and `S'` is 1; see [`unshift_multiplier`] for the inverse direction.
pub fn rebase_affine(p: &BinomPoly, s: i64, i: i64) -> Result<(BigInt, BinomPoly)> {
    if s == 0 {
        return Err(Error::InvalidParam("S must be nonzero".into()));
    }
    let alpha = p
        .exact()
        .ok_or_else(|| Error::InvalidParam("rebase_affine needs exact coefficients".into()))?;
    let d = p.degree();
    let c = affine_matrix(d, s, i);
    let s_prime = lcm_of_denominators(c.iter().flatten());
    let sp = BigRational::from_integer(s_prime.clone());
    let q = (0..=d)
        .map(|t| (0..=d).fold(BigRational::zero(), |acc, j| acc + &alpha[j] * &c[j][t]) * &sp)
        .collect();
    Ok((s_prime, BinomPoly::from_exact(q)))
}

/// Constant `K` with `||q||_{C^inf[N]} <= K ||p||_{C^inf[N]}` for
/// `q(n) = p(S n + I)`: the largest column sum of `|c[j][t]|` over `t >= 1`.
pub fn rebase_norm_factor(d: usize, s: i64, i: i64) -> BigRational {
    let c = affine_matrix(d, s, i);
    (1..=d)
        .map(|t| (t..=d).fold(BigRational::zero(), |acc, j| acc + c[j][t].abs()))
        .max()
        .unwrap_or_else(BigRational::zero)
}

/// Recovering `p` from `q(n) = p(S n + I)` means substituting
/// `n -> (n - I) / S`, which does introduce denominators. Returns the least
/// multiplier `S'` clearing them together with the constant `K` such that
/// `||S' p||_{C^inf[N]} <= K ||q||_{C^inf[N]}` for every `N >= 1`.
pub fn unshift_multiplier(d: usize, s: i64, i: i64) -> Result<(BigInt, BigRational)> {
    if s == 0 {
        return Err(Error::InvalidParam("S must be nonzero".into()));
    }
    let (sr, ir) = (BigRational::from_integer(s.into()), BigRational::from_integer(i.into()));
    // inv[t][j]: binom((n - I) / S, t) = sum_j inv[t][j] binom(n, j).
    let inv: Vec<Vec<BigRational>> = (0..=d)
        .map(|t| {
            binomial_basis_of(
                |n| binom_rat(&((BigRational::from_integer(n.into()) - &ir) / &sr), t as u32),
                d,
            )
        })
        .collect();
    let s_prime = lcm_of_denominators(inv.iter().flatten());
    let sp = BigRational::from_integer(s_prime.clone());
    let k = (1..=d)
        .map(|j| (j..=d).fold(BigRational::zero(), |acc, t| acc + (&inv[t][j] * &sp).abs()))
        .max()
        .unwrap_or_else(BigRational::zero);
    Ok((s_prime, k))
}

// Errors closer than this count as ties, so float noise in `q theta` cannot
// promote a multiple of the true denominator.
const TIE_TOL: f64 = 1e-13;

/// Best `q <= q_max` for `||q theta||_T`, smallest `q` on ties.
///
/// Candidates come from the continued-fraction convergents of `theta`; for
/// `q_max <= 10^6` an exhaustive scan decides.
pub fn rational_approx(theta: f64, q_max: u64) -> (u64, f64) {
    let q_max = q_max.max(1);
    let theta = theta.rem_euclid(1.0);
    let err = |q: u64| torus_dist(q as f64 * theta);

    let mut best = (1u64, err(1));
    let consider = |q: u64, best: &mut (u64, f64)| {
        let e = err(q);
        if e < best.1 - TIE_TOL || ((e - best.1).abs() <= TIE_TOL && q < best.0) {
            *best = (q, e);
        }
    };
    // Convergent denominators q_{k+1} = a_k q_k + q_{k-1}.
    let (mut q_prev, mut q_cur) = (0u64, 1u64);
    let mut x = theta;
    for _ in 0..64 {
        if x == 0.0 {
            break;
        }
        let y = 1.0 / x;
        let a = y.floor();
        if a > q_max as f64 {
            break;
        }
        let q_next = match (a as u64).checked_mul(q_cur).and_then(|v| v.checked_add(q_prev)) {
            Some(q) if q <= q_max => q,
            _ => break,
        };
        consider(q_next, &mut best);
        q_prev = q_cur;
        q_cur = q_next;
        x = y - a;
    }

    if q_max <= 1_000_000 {
        let mut scan = (1u64, err(1));
        for q in 2..=q_max {
            let e = err(q);
            if e < scan.1 - TIE_TOL {
                scan = (q, e);
            }
        }
        return scan;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bi(v: i64) -> BigInt {
        BigInt::from(v)
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn primorial_examples() {
        assert_eq!(primorial(1), bi(1));
        assert_eq!(primorial(5), bi(30));
        assert_eq!(primorial(10), bi(210));
    }

    #[test]
    fn ctx_invariants() {
        for w in 2..20 {
            let ctx = ArithCtx::new(10_000, w).unwrap();
            assert_eq!(ctx.big_w % 2, 0);
            assert!(ctx.big_w <= 4u64.pow(w as u32));
            let m = ctx.m;
            assert!(m * m * ctx.big_w <= 10_000);
            assert!((m + 1) * (m + 1) * ctx.big_w > 10_000);
        }
        assert!(ArithCtx::new(10, 1).is_err());
    }

    #[test]
    fn poly_p_examples() {
        let ctx = ArithCtx::new(100, 5).unwrap();
        assert_eq!(poly_p(&ctx, &bi(2)), bi(122));
        assert_eq!(poly_p(&ctx, &bi(0)), bi(0));
        let ctx = ArithCtx::new(100, 2).unwrap();
        assert_eq!(poly_p(&ctx, &bi(-1)), bi(1));
        assert_eq!(ctx.p(-1), 1);
    }

    #[test]
    fn poly_pr_examples() {
        assert_eq!(poly_pr(&bi(2), &bi(1), &bi(1)).unwrap(), bi(9));
        assert_eq!(poly_pr(&bi(1), &bi(1), &bi(2)).unwrap(), bi(10));
        assert_eq!(poly_pr(&bi(30), &bi(7), &bi(0)).unwrap(), bi(0));
        assert!(poly_pr(&bi(2), &bi(3), &bi(0)).is_err());
    }

    #[test]
    fn pr_matches_and_coprime_linear_term() {
        for w in 1..=30i64 {
            for r in 1..=w {
                assert_eq!(bi(w * w).gcd(&bi(2 * w * r + 1)), bi(1));
                for y in -100..=100 {
                    let exact = poly_pr(&bi(w), &bi(r), &bi(y)).unwrap();
                    assert_eq!(exact, bi(pr_i64(w, r, y)));
                }
            }
        }
    }

    #[test]
    fn hensel_examples() {
        let h = |a, b, p, k| hensel_bijection_check(&HenselParams { a, b, p, k }).unwrap();
        assert!(h(2, 1, 2, 2));
        assert!(!h(2, 2, 2, 2));
        assert!(h(3, 1, 3, 1));
        assert_eq!(
            hensel_bijection_check(&HenselParams { a: 2, b: 1, p: 4, k: 1 }),
            Err(Error::NotPrime(4))
        );
    }

    #[test]
    fn hensel_hypothesis_small_sweep() {
        let mut scratch = Vec::new();
        for p in [2u64, 3, 5, 7] {
            for k in 1..=4 {
                let q = p.pow(k);
                for a in (0..q as i64).step_by(p as usize) {
                    for b in (0..q as i64).filter(|b| b % p as i64 != 0) {
                        assert!(quadratic_is_permutation(a, b, q, &mut scratch), "{a} {b} {q}");
                    }
                }
            }
        }
    }

    #[test]
    fn binom_identity_examples() {
        // binom(4, 2) = 6 = 6 binom(2, 2)
        assert_eq!(binom_int(&bi(4), 2), bi(6));
        assert!(binom_identity_check(1, 0, 2..=2));
        assert_eq!(binom_int(&bi(9), 2), bi(36));
        assert!(binom_identity_check(1, 0, 3..=3));
        assert!(binom_identity_check(0, 1, -30..=30));
        assert!(binom_identity_check(-7, 13, -20..=20));
    }

    #[test]
    fn binom_negative_arguments() {
        assert_eq!(binom_int(&bi(-1), 2), bi(1));
        assert_eq!(binom_int(&bi(-3), 3), bi(-10));
        assert_eq!(binom_rat(&rat(1, 2), 2), rat(-1, 8));
    }

    #[test]
    fn rebase_examples() {
        let p = BinomPoly::from_integers(&[0, 0, 1]);
        let (sp, q) = rebase_affine(&p, 1, 1).unwrap();
        assert_eq!(sp, bi(1));
        assert_eq!(q.exact().unwrap(), &[rat(0, 1), rat(1, 1), rat(1, 1)]);

        let alpha = rat(3, 7);
        let p = BinomPoly::from_exact(vec![rat(0, 1), alpha.clone()]);
        let (sp, q) = rebase_affine(&p, 2, 0).unwrap();
        assert_eq!(sp, bi(1));
        assert_eq!(q.exact().unwrap()[1], alpha * rat(2, 1));

        let p = BinomPoly::from_integers(&[0, 0, 1]);
        let (_, q) = rebase_affine(&p, 2, 0).unwrap();
        assert_eq!(q.exact().unwrap(), &[rat(0, 1), rat(1, 1), rat(4, 1)]);
        for n in 0..=20 {
            assert_eq!(q.eval_exact(&bi(n)).unwrap(), p.eval_exact(&bi(2 * n)).unwrap());
        }
        assert!(rebase_affine(&p, 0, 1).is_err());
        assert!(rebase_affine(&BinomPoly::from_torus(vec![0.5]), 1, 1).is_err());
    }

    #[test]
    fn unshift_inverts_rebase() {
        let p = BinomPoly::from_exact(vec![rat(1, 3), rat(2, 5), rat(-1, 7), rat(1, 11)]);
        for (s, i) in [(1, 0), (2, 3), (-3, 5), (4, -7)] {
            let (_, q) = rebase_affine(&p, s, i).unwrap();
            let (sp, k) = unshift_multiplier(3, s, i).unwrap();
            assert!(sp >= bi(1));
            for n in [1u64, 10, 1000] {
                let lhs = cinf_norm(&BinomPoly::from_exact(
                    p.exact().unwrap().iter().map(|a| a * BigRational::from_integer(sp.clone())).collect(),
                ), n);
                let rhs = k.to_f64().unwrap() * cinf_norm(&q, n);
                assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-12, "{s} {i} {n}: {lhs} > {rhs}");
            }
        }
    }

    #[test]
    fn cinf_examples() {
        let p = BinomPoly::from_torus(vec![0.0, 0.01, 0.3]);
        assert!((cinf_norm(&p, 10) - 30.0).abs() < 1e-9);
        let p = BinomPoly::from_torus(vec![0.0, 0.9]);
        assert!((cinf_norm(&p, 10) - 1.0).abs() < 1e-9);
        let p = BinomPoly::from_integers(&[5, -3, 7]);
        assert_eq!(cinf_norm(&p, 1000), 0.0);
    }

    #[test]
    fn torus_eval_matches_exact() {
        let exact = BinomPoly::from_exact(vec![rat(1, 3), rat(2, 7), rat(5, 11)]);
        let float = BinomPoly::from_torus(exact.coeffs().to_vec());
        for n in -30..30 {
            let d = exact.eval_torus(n) - float.eval_torus(n);
            assert!(torus_dist(d) < 1e-9);
        }
    }

    #[test]
    fn rational_approx_examples() {
        assert_eq!(rational_approx(0.5, 10), (2, 0.0));
        let (q, e) = rational_approx(1.0 / 3.0 + 1e-10, 100);
        assert_eq!(q, 3);
        assert!((e - 3e-10).abs() < 1e-15);
        let (q, e) = rational_approx(0.6180339887, 10);
        assert_eq!(q, 8);
        assert!((e - 0.0557).abs() < 1e-3);
    }

    #[test]
    fn rational_approx_large_bound_uses_convergents() {
        let theta = std::f64::consts::PI - 3.0;
        let q_max = 2_000_000u64;
        let (q, e) = rational_approx(theta, q_max);
        let mut scan = (1u64, f64::INFINITY);
        for c in 1..=q_max {
            let d = torus_dist(c as f64 * theta);
            if d < scan.1 {
                scan = (c, d);
            }
        }
        assert_eq!(q, scan.0);
        assert!((e - scan.1).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn rebase_round_trip(
            num in proptest::collection::vec(-50i64..50, 1..5),
            den in 1i64..20,
            s in prop_oneof![-5i64..0, 1i64..6],
            i in -20i64..20,
        ) {
            let p = BinomPoly::from_exact(num.iter().map(|&a| rat(a, den)).collect());
            let (sp, q) = rebase_affine(&p, s, i).unwrap();
            let sp = BigRational::from_integer(sp);
            for n in -50..=50 {
                let lhs = q.eval_exact(&bi(n)).unwrap();
                let rhs = p.eval_exact(&bi(s * n + i)).unwrap() * &sp;
                prop_assert_eq!(lhs, rhs);
            }
        }

        #[test]
        fn rebase_norm_bound(
            num in proptest::collection::vec(-50i64..50, 1..5),
            den in 1i64..50,
            s in 1i64..5,
            i in -10i64..10,
            n in 1u64..200,
        ) {
            let p = BinomPoly::from_exact(num.iter().map(|&a| rat(a, den)).collect());
            let (_, q) = rebase_affine(&p, s, i).unwrap();
            let k = rebase_norm_factor(p.degree(), s, i).to_f64().unwrap();
            prop_assert!(cinf_norm(&q, n) <= k * cinf_norm(&p, n) * (1.0 + 1e-12) + 1e-9);
        }

        #[test]
        fn rational_approx_exact_fractions(q0 in 1u64..200, p0 in 0u64..200, extra in 0u64..50) {
            let p0 = p0 % q0;
            let theta = p0 as f64 / q0 as f64;
            let (q, e) = rational_approx(theta, q0 + extra);
            prop_assert!(q <= q0);
            prop_assert!(e < 1e-9);
        }
    }
}
