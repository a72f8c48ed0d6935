//! Puiseux polynomials: finite sums `Σ a_k z^{k/d}` with exact rational
//! exponents, and their transport through holomorphic charts.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::expr::{self, Expr};
use crate::geometry::Chart;

pub type Exponent = Ratio<i64>;

/// Canonical Puiseux polynomial.
///
/// `terms` maps the numerator `k` to its coefficient; the exponent is `k/d`.
/// Zero coefficients are never stored and `d` is reduced as far as the
/// numerators allow, so structural equality is mathematical equality.
#[derive(Debug, Clone, PartialEq)]
pub struct PuiseuxPoly {
    d: i64,
    terms: BTreeMap<i64, Complex64>,
}

impl Default for PuiseuxPoly {
    fn default() -> Self {
        PuiseuxPoly::zero()
    }
}

impl PuiseuxPoly {
    pub fn zero() -> Self {
        PuiseuxPoly { d: 1, terms: BTreeMap::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        PuiseuxPoly::from_terms(1, [(0, c)])
    }

    /// `c z^{num/den}`.
    pub fn monomial(c: Complex64, num: i64, den: i64) -> Self {
        assert!(den > 0, "denominator must be positive");
        PuiseuxPoly::from_terms(den, [(num, c)])
    }

    /// Builds from numerators over a common denominator `d`; repeated
    /// numerators are summed.
    pub fn from_terms(d: i64, terms: impl IntoIterator<Item = (i64, Complex64)>) -> Self {
        assert!(d >= 1, "denominator must be positive");
        let mut map: BTreeMap<i64, Complex64> = BTreeMap::new();
        for (k, c) in terms {
            *map.entry(k).or_default() += c;
        }
        let mut p = PuiseuxPoly { d, terms: map };
        p.canonicalize();
        p
    }

    fn canonicalize(&mut self) {
        self.terms.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        if self.terms.is_empty() {
            self.d = 1;
            return;
        }
        let g = self.terms.keys().fold(self.d, |g, k| g.gcd(k));
        if g > 1 {
            self.d /= g;
            self.terms = std::mem::take(&mut self.terms)
                .into_iter()
                .map(|(k, c)| (k / g, c))
                .collect();
        }
    }

    pub fn d(&self) -> i64 {
        self.d
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in increasing exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (Exponent, Complex64)> + '_ {
        self.terms.iter().map(|(k, c)| (Ratio::new(*k, self.d), *c))
    }

    /// Raw numerators over `d()`.
    pub fn numerators(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.terms.iter().map(|(k, c)| (*k, *c))
    }

    pub fn coeff(&self, e: Exponent) -> Complex64 {
        if (self.d % e.denom()) != 0 {
            return Complex64::new(0.0, 0.0);
        }
        let k = e.numer() * (self.d / e.denom());
        self.terms.get(&k).copied().unwrap_or_default()
    }

    /// The term with the most negative exponent.
    pub fn leading_term(&self) -> Option<(Exponent, Complex64)> {
        self.terms().next()
    }

    /// True when every exponent is negative (zero counts as principal).
    pub fn is_principal(&self) -> bool {
        self.terms.keys().all(|k| *k < 0)
    }

    /// Pole order of the leading term, 0 when there is no pole.
    pub fn pole_order(&self) -> Exponent {
        match self.leading_term() {
            Some((e, _)) if e < Ratio::from_integer(0) => -e,
            _ => Ratio::from_integer(0),
        }
    }

    fn rescaled(&self, to: i64) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let f = to / self.d;
        self.terms.iter().map(move |(k, c)| (k * f, *c))
    }

    pub fn add(&self, other: &PuiseuxPoly) -> PuiseuxPoly {
        let l = self.d.lcm(&other.d);
        PuiseuxPoly::from_terms(l, self.rescaled(l).chain(other.rescaled(l)))
    }

    pub fn sub(&self, other: &PuiseuxPoly) -> PuiseuxPoly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> PuiseuxPoly {
        self.scale(Complex64::new(-1.0, 0.0))
    }

    pub fn scale(&self, s: Complex64) -> PuiseuxPoly {
        PuiseuxPoly::from_terms(self.d, self.terms.iter().map(|(k, c)| (*k, c * s)))
    }

    pub fn mul(&self, other: &PuiseuxPoly) -> PuiseuxPoly {
        let l = self.d.lcm(&other.d);
        let a: Vec<_> = self.rescaled(l).collect();
        let b: Vec<_> = other.rescaled(l).collect();
        let mut out = Vec::with_capacity(a.len() * b.len());
        for (ka, ca) in &a {
            for (kb, cb) in &b {
                out.push((ka + kb, ca * cb));
            }
        }
        PuiseuxPoly::from_terms(l, out)
    }

    pub fn powi(&self, n: u32) -> PuiseuxPoly {
        let mut acc = PuiseuxPoly::constant(Complex64::new(1.0, 0.0));
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// `d/dz`.
    pub fn derivative(&self) -> PuiseuxPoly {
        let d = self.d;
        PuiseuxPoly::from_terms(
            d,
            self.terms
                .iter()
                .map(|(k, c)| (k - d, c * (*k as f64 / d as f64))),
        )
    }

    /// Keeps only the negative-exponent part.
    pub fn principal_part(&self) -> PuiseuxPoly {
        PuiseuxPoly::from_terms(self.d, self.terms.range(..0).map(|(k, c)| (*k, *c)))
    }

    /// Drops coefficients below `tol` times the largest one.
    pub fn prune(&self, tol: f64) -> PuiseuxPoly {
        let big = self.terms.values().map(|c| c.norm()).fold(0.0, f64::max);
        PuiseuxPoly::from_terms(
            self.d,
            self.terms
                .iter()
                .filter(|(_, c)| c.norm() > tol * big)
                .map(|(k, c)| (*k, *c)),
        )
    }

    /// Evaluates with `arg z` taken in `(branch_center − π, branch_center + π]`.
    pub fn eval(&self, z: Complex64, branch_center: f64) -> Result<Complex64> {
        if z == Complex64::new(0.0, 0.0) {
            if self.terms.keys().all(|k| *k == 0) {
                return Ok(self.coeff(Ratio::from_integer(0)));
            }
            return Err(Error::Domain("Puiseux polynomial evaluated at z = 0".into()));
        }
        let theta = branch_arg(z, branch_center);
        let log_z = Complex64::new(z.norm().ln(), theta);
        let d = self.d as f64;
        Ok(self
            .terms
            .iter()
            .map(|(k, c)| {
                if *k == 0 {
                    *c
                } else {
                    c * (log_z * (*k as f64 / d)).exp()
                }
            })
            .sum())
    }

    /// `d/dz` evaluated at `z`.
    pub fn eval_derivative(&self, z: Complex64, branch_center: f64) -> Result<Complex64> {
        self.derivative().eval(z, branch_center)
    }

    pub fn parse(src: &str) -> Result<PuiseuxPoly> {
        let e = expr::parse(src)?;
        from_expr(&e).map_err(|err| match err {
            Error::Domain(m) => Error::parse(1, m),
            other => other,
        })
    }
}

/// Argument of `z` in `(center − π, center + π]`.
pub fn branch_arg(z: Complex64, center: f64) -> f64 {
    let mut t = z.im.atan2(z.re);
    let two_pi = 2.0 * PI;
    let k = ((t - center) / two_pi).round();
    t -= k * two_pi;
    if t <= center - PI {
        t += two_pi;
    } else if t > center + PI {
        t -= two_pi;
    }
    t
}

/// Converts a parsed expression into a Puiseux polynomial, if it is one.
pub fn from_expr(e: &Expr) -> Result<PuiseuxPoly> {
    if let Some(c) = e.constant() {
        return Ok(PuiseuxPoly::constant(c));
    }
    Ok(match e {
        Expr::Num(c) => PuiseuxPoly::constant(*c),
        Expr::Var => PuiseuxPoly::monomial(Complex64::new(1.0, 0.0), 1, 1),
        Expr::Neg(a) => from_expr(a)?.neg(),
        Expr::Add(a, b) => from_expr(a)?.add(&from_expr(b)?),
        Expr::Sub(a, b) => from_expr(a)?.sub(&from_expr(b)?),
        Expr::Mul(a, b) => from_expr(a)?.mul(&from_expr(b)?),
        Expr::Div(a, b) => {
            let num = from_expr(a)?;
            let den = from_expr(b)?;
            if den.len() != 1 {
                return Err(Error::Domain("division by a non-monomial".into()));
            }
            let (ex, c) = den.leading_term().unwrap();
            num.mul(&PuiseuxPoly::monomial(c.inv(), -ex.numer(), *ex.denom()))
        }
        Expr::Pow(a, b) => {
            let ex = b
                .constant()
                .filter(|c| c.im == 0.0)
                .and_then(|c| expr::rationalize(c.re))
                .ok_or_else(|| Error::Domain("exponent must be a rational constant".into()))?;
            let base = from_expr(a)?;
            if base.len() == 1 {
                let (e0, c) = base.leading_term().unwrap();
                let (n, d) = ex;
                let e_new = e0 * Ratio::new(n, d);
                let c_new = if d == 1 {
                    c.powi(n as i32)
                } else if c == Complex64::new(1.0, 0.0) {
                    c
                } else {
                    return Err(Error::Domain("fractional power of a non-unit coefficient".into()));
                };
                PuiseuxPoly::monomial(c_new, *e_new.numer(), *e_new.denom())
            } else if ex.1 == 1 && ex.0 >= 0 {
                base.powi(ex.0 as u32)
            } else {
                return Err(Error::Domain("non-integer power of a sum".into()));
            }
        }
        Expr::Call(name, _) => {
            return Err(Error::Domain(format!("{name}(...) is not a Puiseux polynomial")))
        }
    })
}

fn fmt_real(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// `re`, or `(re+imi)` when the imaginary part is nonzero.
pub fn fmt_complex(c: Complex64) -> String {
    if c.im == 0.0 {
        fmt_real(c.re)
    } else if c.im < 0.0 {
        format!("({}-{}i)", fmt_real(c.re), fmt_real(-c.im))
    } else {
        format!("({}+{}i)", fmt_real(c.re), fmt_real(c.im))
    }
}

impl fmt::Display for PuiseuxPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms().enumerate() {
            let (neg, c) = if c.im == 0.0 && c.re < 0.0 && i > 0 {
                (true, -c)
            } else {
                (false, c)
            };
            if i > 0 {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            let cs = fmt_complex(c);
            if *e.numer() == 0 {
                write!(f, "{cs}")?;
            } else if *e.denom() == 1 {
                write!(f, "{cs}*z^({})", e.numer())?;
            } else {
                write!(f, "{cs}*z^({}/{})", e.numer(), e.denom())?;
            }
        }
        Ok(())
    }
}

/// Coefficient as it appears in documents: a real number, `[re, im]`, or a
/// string in the expression grammar.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CoefDoc {
    Real(f64),
    Pair([f64; 2]),
    Text(String),
}

#[derive(Serialize, Deserialize)]
struct TermDoc {
    num: i64,
    den: i64,
    coef: CoefDoc,
}

#[derive(Serialize, Deserialize)]
struct PolyDoc {
    terms: Vec<TermDoc>,
}

impl Serialize for PuiseuxPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let doc = PolyDoc {
            terms: self
                .terms()
                .map(|(e, c)| TermDoc {
                    num: *e.numer(),
                    den: *e.denom(),
                    coef: if c.im == 0.0 {
                        CoefDoc::Real(c.re)
                    } else {
                        CoefDoc::Pair([c.re, c.im])
                    },
                })
                .collect(),
        };
        doc.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PuiseuxPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = PolyDoc::deserialize(d)?;
        let mut acc = PuiseuxPoly::zero();
        for t in doc.terms {
            if t.den <= 0 {
                return Err(D::Error::custom("term denominator must be positive"));
            }
            let c = match t.coef {
                CoefDoc::Real(x) => Complex64::new(x, 0.0),
                CoefDoc::Pair([a, b]) => Complex64::new(a, b),
                CoefDoc::Text(s) => expr::parse(&s)
                    .ok()
                    .and_then(|e| e.constant())
                    .ok_or_else(|| D::Error::custom(format!("bad coefficient '{s}'")))?,
            };
            acc = acc.add(&PuiseuxPoly::monomial(c, t.num, t.den));
        }
        Ok(acc)
    }
}

/// Least common multiple of the ramification denominators.
pub fn lcm_ramification<'a>(ps: impl IntoIterator<Item = &'a PuiseuxPoly>) -> i64 {
    ps.into_iter().fold(1, |l, p| l.lcm(&p.d))
}

/// Truncated series in `w^{1/d}` with an optional bound on the neglected tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncSeries {
    pub series: PuiseuxPoly,
    /// Highest kept exponent.
    pub order: Exponent,
    #[serde(with = "crate::serde_float::option")]
    pub tail_bound: Option<f64>,
}

impl TruncSeries {
    pub fn eval(&self, w: Complex64, branch_center: f64) -> Result<Complex64> {
        self.series.eval(w, branch_center)
    }
}

/// Result of substituting a chart into a Puiseux polynomial:
/// `p(φ(w)) = principal(w) + holomorphic(w) + O(tail_bound)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartComposition {
    /// The principal part `p̃`, all exponents negative.
    pub principal: PuiseuxPoly,
    /// Kept nonnegative-exponent terms `ψ` up to the truncation order.
    pub holomorphic: TruncSeries,
    /// Branch center for evaluating `p` at `φ(w)` consistently with the
    /// `w`-side branch center of the chart's validity sector.
    pub z_branch_center: f64,
    pub w_branch_center: f64,
}

/// Power series of `(1 + v)^alpha` where `g = [1, v_1, v_2, ...]`.
fn series_pow(g: &[Complex64], alpha: f64, n: usize) -> Vec<Complex64> {
    let mut f = vec![Complex64::new(0.0, 0.0); n + 1];
    f[0] = Complex64::new(1.0, 0.0);
    for k in 1..=n {
        let mut s = Complex64::new(0.0, 0.0);
        for j in 1..=k.min(g.len() - 1) {
            s += g[j] * f[k - j] * ((alpha + 1.0) * j as f64 - k as f64);
        }
        f[k] = s / k as f64;
    }
    f
}

/// Decomposes `p∘φ` into its principal part and a truncated holomorphic
/// remainder with `order` powers of `w` beyond the leading one kept per term.
/// `order` is raised silently to cover every pole of the composite.
pub fn compose_chart(p: &PuiseuxPoly, chart: &Chart, order: usize) -> Result<ChartComposition> {
    let c = chart.order();
    let coeffs = chart.coeffs();
    let u0 = coeffs[c];
    if u0.norm() == 0.0 {
        return Err(Error::IllPosedChart("vanishing leading coefficient".into()));
    }
    let v: Vec<Complex64> = coeffs[c..].iter().map(|a| a / u0).collect();
    let tau_w = chart.validity().tau;
    let arg_u0 = u0.im.atan2(u0.re);
    let z_center = c as f64 * tau_w + arg_u0;
    let d = p.d;
    let ci = c as i64;

    let mut j_max = order;
    if let Some((e, _)) = p.leading_term() {
        let need = (-(ci as f64) * (*e.numer() as f64) / (*e.denom() as f64)).ceil();
        if need > j_max as f64 {
            j_max = need as usize;
        }
    }

    let r = chart.validity().r;
    let rho0 = analytic_radius(&v, r);
    let mut out = Vec::new();
    let mut tail = 0.0;
    for (k, a) in p.numerators() {
        let alpha = k as f64 / d as f64;
        let f = series_pow(&v, alpha, j_max);
        let u0a = (Complex64::new(u0.norm().ln(), arg_u0) * alpha).exp();
        for (j, fj) in f.iter().enumerate() {
            out.push((ci * k + j as i64 * d, a * u0a * fj));
        }
        if v.len() > 1 && v[1..].iter().any(|x| x.norm() > 0.0) {
            match rho0 {
                Some(rho0) if rho0 > r => {
                    let q = r / rho0;
                    let bk = 0.5f64.powf(alpha).max(1.5f64.powf(alpha));
                    let lead = r.powf(c as f64 * alpha);
                    tail += a.norm() * u0.norm().powf(alpha) * bk * lead * q.powi(j_max as i32 + 1)
                        / (1.0 - q);
                }
                _ => tail = f64::INFINITY,
            }
        }
    }
    let full = PuiseuxPoly::from_terms(d, out);
    let principal = full.principal_part();
    let holo = PuiseuxPoly::from_terms(d, full.numerators().filter(|(k, _)| *k >= 0));
    let order_exp = Ratio::new(holo.numerators().map(|(k, _)| k).max().unwrap_or(0), d);
    Ok(ChartComposition {
        principal,
        holomorphic: TruncSeries {
            series: holo,
            order: order_exp,
            tail_bound: Some(tail),
        },
        z_branch_center: z_center,
        w_branch_center: tau_w,
    })
}

/// Largest radius (from a halving search) on which `|v(w) − 1| ≤ 1/2`,
/// where `v` is the normalized unit factor of the chart.
fn analytic_radius(v: &[Complex64], r: f64) -> Option<f64> {
    let ok = |rho: f64| {
        let mut sup: f64 = 0.0;
        for i in 0..256 {
            let w = Complex64::from_polar(rho, 2.0 * PI * i as f64 / 256.0);
            let mut s = Complex64::new(0.0, 0.0);
            let mut wp = w;
            for vj in &v[1..] {
                s += vj * wp;
                wp *= w;
            }
            sup = sup.max(s.norm());
        }
        // margin for the sampled supremum
        sup * 1.1 <= 0.5
    };
    let mut rho = 8.0 * r;
    for _ in 0..60 {
        if ok(rho) {
            let (mut lo, mut hi) = (rho, 2.0 * rho);
            for _ in 0..20 {
                let mid = 0.5 * (lo + hi);
                if ok(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Some(lo);
        }
        rho *= 0.5;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Sector;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn canonical_form() {
        let p = PuiseuxPoly::from_terms(4, [(-2, c(1.0, 0.0)), (2, c(0.0, 0.0))]);
        assert_eq!(p.d(), 2);
        assert_eq!(p.numerators().collect::<Vec<_>>(), vec![(-1, c(1.0, 0.0))]);
        let z = PuiseuxPoly::from_terms(6, [(3, c(0.0, 0.0))]);
        assert_eq!(z, PuiseuxPoly::zero());
        assert_eq!(z.d(), 1);
    }

    #[test]
    fn add_examples() {
        let a = PuiseuxPoly::monomial(c(1.0, 0.0), -1, 2);
        let b = PuiseuxPoly::monomial(c(1.0, 0.0), -1, 3);
        let s = a.add(&b);
        assert_eq!(s.d(), 6);
        assert_eq!(s.numerators().collect::<Vec<_>>(), vec![(-3, c(1.0, 0.0)), (-2, c(1.0, 0.0))]);
        let cancel = PuiseuxPoly::monomial(c(2.0, 0.0), -1, 1)
            .add(&PuiseuxPoly::monomial(c(-2.0, 0.0), -1, 1));
        assert!(cancel.is_zero());
    }

    #[test]
    fn mul_example() {
        let a = PuiseuxPoly::monomial(c(1.0, 0.0), -1, 2);
        assert_eq!(a.mul(&a), PuiseuxPoly::monomial(c(1.0, 0.0), -1, 1));
    }

    #[test]
    fn eval_examples() {
        let p = PuiseuxPoly::monomial(c(1.0, 0.0), 1, 2);
        assert_abs_diff_eq!(p.eval(c(4.0, 0.0), 0.0).unwrap().re, 2.0, epsilon = 1e-15);
        let q = PuiseuxPoly::monomial(c(1.0, 0.0), -1, 2);
        // arg(−1) = π inside (π/2 − π, π/2 + π]
        let v = q.eval(c(-1.0, 0.0), PI / 2.0).unwrap();
        assert_abs_diff_eq!(v.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.im, -1.0, epsilon = 1e-15);
        assert!(q.eval(c(0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn branch_window() {
        assert_abs_diff_eq!(branch_arg(c(-1.0, 0.0), 0.0), PI);
        assert_abs_diff_eq!(branch_arg(c(1.0, 0.0), 2.0 * PI), 2.0 * PI);
        assert_abs_diff_eq!(branch_arg(c(0.0, -1.0), PI), 1.5 * PI, epsilon = 1e-15);
    }

    #[test]
    fn print_and_parse() {
        let p = PuiseuxPoly::parse("(0+1i)*z^(-3/2) + 2*z^(-1)").unwrap();
        assert_eq!(p.d(), 2);
        assert_eq!(p.coeff(Ratio::new(-3, 2)), c(0.0, 1.0));
        assert_eq!(p.to_string(), "(0+1i)*z^(-3/2) + 2*z^(-1)");
        assert_eq!(PuiseuxPoly::parse(&p.to_string()).unwrap(), p);
        let m = PuiseuxPoly::monomial(c(1.0, 0.0), -1, 1);
        assert_eq!(m.to_string(), "1*z^(-1)");
        assert_eq!(PuiseuxPoly::parse("1/z - z^2/4").unwrap().to_string(), "1*z^(-1) - 0.25*z^(2)");
        assert!(PuiseuxPoly::parse("exp(z)").is_err());
    }

    #[test]
    fn compose_identity_and_square() {
        let p = PuiseuxPoly::parse("z^(-1) + 3*z^(-1/2)").unwrap();
        let id = Chart::new(vec![c(0.0, 0.0), c(1.0, 0.0)], Sector::new(0.0, 0.5, 0.5).unwrap()).unwrap();
        let comp = compose_chart(&p, &id, 4).unwrap();
        assert_eq!(comp.principal, p);
        assert_eq!(comp.holomorphic.tail_bound, Some(0.0));

        let sq = Chart::new(
            vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            Sector::new(0.0, 0.3, 0.5).unwrap(),
        )
        .unwrap();
        let one_over_z = PuiseuxPoly::monomial(c(1.0, 0.0), -1, 1);
        let comp = compose_chart(&one_over_z, &sq, 4).unwrap();
        assert_eq!(comp.principal, PuiseuxPoly::monomial(c(1.0, 0.0), -2, 1));
        assert!(comp.holomorphic.series.is_zero());
    }

    #[test]
    fn compose_tail_bound_holds() {
        let phi = Chart::new(
            vec![c(0.0, 0.0), c(1.0, 0.0), c(0.3, 0.2), c(-0.1, 0.0)],
            Sector::new(0.2, 0.4, 0.3).unwrap(),
        )
        .unwrap();
        let p = PuiseuxPoly::parse("2*z^(-2) + (0+1i)*z^(-1/2)").unwrap();
        let comp = compose_chart(&p, &phi, 12).unwrap();
        let tb = comp.holomorphic.tail_bound.unwrap();
        assert!(tb.is_finite() && tb < 1e-3, "tail bound {tb}");
        for i in 0..50 {
            let s = i as f64 / 49.0;
            let w = Complex64::from_polar(0.3 * (0.05 + 0.95 * s), 0.2 + 0.4 * (2.0 * s - 1.0));
            let z = phi.eval(w);
            let exact = p.eval(z, comp.z_branch_center).unwrap();
            let approx = comp.principal.eval(w, comp.w_branch_center).unwrap()
                + comp.holomorphic.eval(w, comp.w_branch_center).unwrap();
            assert!((exact - approx).norm() <= tb * (1.0 + 1e-9) + 1e-9 * exact.norm(), "{w}");
        }
    }

    #[test]
    fn compose_rejects_bad_chart() {
        assert!(Chart::new(vec![c(0.0, 0.0), c(0.0, 0.0)], Sector::new(0.0, 0.5, 0.5).unwrap()).is_err());
    }

    #[test]
    fn ramification_lcm() {
        let a = PuiseuxPoly::monomial(c(1.0, 0.0), -1, 2);
        let b = PuiseuxPoly::monomial(c(1.0, 0.0), -1, 3);
        assert_eq!(lcm_ramification([&a, &b]), 6);
    }

    fn arb_poly() -> impl Strategy<Value = PuiseuxPoly> {
        (1i64..5, proptest::collection::vec((-8i64..8, -3.0f64..3.0, -3.0f64..3.0), 0..5)).prop_map(
            |(d, ts)| PuiseuxPoly::from_terms(d, ts.into_iter().map(|(k, a, b)| (k, c(a, b)))),
        )
    }

    proptest! {
        #[test]
        fn canonical_invariants(p in arb_poly()) {
            prop_assert!(p.d() >= 1);
            prop_assert!(p.numerators().all(|(_, c)| c.norm() > 0.0));
            if p.is_zero() { prop_assert_eq!(p.d(), 1); }
            else {
                let g = p.numerators().fold(p.d(), |g, (k, _)| g.gcd(&k));
                prop_assert_eq!(g, 1);
            }
        }

        #[test]
        fn ring_laws(p in arb_poly(), q in arb_poly(), r in arb_poly()) {
            let z = c(0.37, 0.21);
            let lhs = p.mul(&q.add(&r)).eval(z, 0.0).unwrap();
            let rhs = p.mul(&q).add(&p.mul(&r)).eval(z, 0.0).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + lhs.norm()));
            let s1 = p.add(&q).eval(z, 0.0).unwrap();
            let s2 = p.eval(z, 0.0).unwrap() + q.eval(z, 0.0).unwrap();
            prop_assert!((s1 - s2).norm() <= 1e-9 * (1.0 + s1.norm()));
            prop_assert_eq!(p.add(&q), q.add(&p));
        }

        #[test]
        fn print_parse_roundtrip(p in arb_poly()) {
            let back = PuiseuxPoly::parse(&p.to_string()).unwrap();
            prop_assert_eq!(back, p);
        }

        #[test]
        fn json_roundtrip(p in arb_poly()) {
            let s = serde_json::to_string(&p).unwrap();
            let back: PuiseuxPoly = serde_json::from_str(&s).unwrap();
            prop_assert_eq!(back, p);
        }
    }
}
