//! Holomorphic evaluands: expression trees over polynomials, Puiseux
//! exponentials, chart pullbacks and numerically defined integrals.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expr::{self, Expr};
use crate::geometry::{Chart, Region};
use crate::poly::Poly;
use crate::puiseux::{self, branch_arg, PuiseuxPoly};

type C = Complex64;

pub type ScalarFn = Arc<dyn Fn(C) -> Result<C> + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn(C) -> Result<DMatrix<C>> + Send + Sync>;

#[derive(Clone)]
pub enum HoloNode {
    Poly(Poly),
    Puiseux { p: PuiseuxPoly, branch_center: f64 },
    /// `exp(p(z))`.
    ExpPuiseux { p: PuiseuxPoly, branch_center: f64 },
    /// `z^ρ (log z)^k`.
    PowerLog { rho: C, log_power: u32, branch_center: f64 },
    Exp(Box<HoloNode>),
    Log { inner: Box<HoloNode>, branch_center: f64 },
    Power { base: Box<HoloNode>, exponent: C, branch_center: f64 },
    Sum(Vec<HoloNode>),
    Product(Vec<HoloNode>),
    Quotient(Box<HoloNode>, Box<HoloNode>),
    Scale(C, Box<HoloNode>),
    /// `inner(φ(w))`.
    ChartPullback { chart: Arc<Chart>, inner: Box<HoloNode> },
    PathIntegral(ScalarFn),
    MatrixEntry { f: MatrixFn, i: usize, j: usize },
}

impl fmt::Debug for HoloNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HoloNode::Poly(p) => write!(f, "Poly({p})"),
            HoloNode::Puiseux { p, .. } => write!(f, "Puiseux({p})"),
            HoloNode::ExpPuiseux { p, .. } => write!(f, "Exp({p})"),
            HoloNode::PowerLog { rho, log_power, .. } => write!(f, "PowerLog({rho}, {log_power})"),
            HoloNode::Exp(a) => write!(f, "Exp({a:?})"),
            HoloNode::Log { inner, .. } => write!(f, "Log({inner:?})"),
            HoloNode::Power { base, exponent, .. } => write!(f, "Power({base:?}, {exponent})"),
            HoloNode::Sum(v) => f.debug_tuple("Sum").field(v).finish(),
            HoloNode::Product(v) => f.debug_tuple("Product").field(v).finish(),
            HoloNode::Quotient(a, b) => write!(f, "Quotient({a:?}, {b:?})"),
            HoloNode::Scale(c, a) => write!(f, "Scale({c}, {a:?})"),
            HoloNode::ChartPullback { inner, .. } => write!(f, "ChartPullback({inner:?})"),
            HoloNode::PathIntegral(_) => write!(f, "PathIntegral"),
            HoloNode::MatrixEntry { i, j, .. } => write!(f, "MatrixEntry({i}, {j})"),
        }
    }
}

fn log_on_branch(v: C, bc: f64) -> Result<C> {
    if v == C::new(0.0, 0.0) || !v.is_finite() {
        return Err(Error::Eval(format!("log of {v}")));
    }
    Ok(C::new(v.norm().ln(), branch_arg(v, bc)))
}

impl HoloNode {
    pub fn eval(&self, z: C) -> Result<C> {
        let v = match self {
            HoloNode::Poly(p) => p.eval(z),
            HoloNode::Puiseux { p, branch_center } => p.eval(z, *branch_center)?,
            HoloNode::ExpPuiseux { p, branch_center } => p.eval(z, *branch_center)?.exp(),
            HoloNode::PowerLog { rho, log_power, branch_center } => {
                let l = log_on_branch(z, *branch_center)?;
                (rho * l).exp() * l.powu(*log_power)
            }
            HoloNode::Exp(a) => a.eval(z)?.exp(),
            HoloNode::Log { inner, branch_center } => log_on_branch(inner.eval(z)?, *branch_center)?,
            HoloNode::Power { base, exponent, branch_center } => {
                let b = base.eval(z)?;
                if exponent.im == 0.0 && exponent.re.fract() == 0.0 && exponent.re.abs() < 1e9 {
                    b.powi(exponent.re as i32)
                } else {
                    (exponent * log_on_branch(b, *branch_center)?).exp()
                }
            }
            HoloNode::Sum(v) => v.iter().map(|n| n.eval(z)).sum::<Result<C>>()?,
            HoloNode::Product(v) => v.iter().map(|n| n.eval(z)).product::<Result<C>>()?,
            HoloNode::Quotient(a, b) => {
                let d = b.eval(z)?;
                if d == C::new(0.0, 0.0) {
                    return Err(Error::Eval(format!("division by zero at {z}")));
                }
                a.eval(z)? / d
            }
            HoloNode::Scale(c, a) => c * a.eval(z)?,
            HoloNode::ChartPullback { chart, inner } => inner.eval(chart.eval(z))?,
            HoloNode::PathIntegral(f) => f(z)?,
            HoloNode::MatrixEntry { f, i, j } => f(z)?[(*i, *j)],
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Eval(format!("non-finite value at {z}")))
        }
    }

    /// `ln|f(z)|`, computed without overflow for exponential factors.
    pub fn log_abs(&self, z: C) -> Result<f64> {
        match self {
            HoloNode::ExpPuiseux { p, branch_center } => Ok(p.eval(z, *branch_center)?.re),
            HoloNode::Exp(a) => Ok(a.eval(z)?.re),
            HoloNode::Product(v) => v.iter().map(|n| n.log_abs(z)).sum(),
            HoloNode::Quotient(a, b) => Ok(a.log_abs(z)? - b.log_abs(z)?),
            HoloNode::Scale(c, a) => Ok(c.norm().ln() + a.log_abs(z)?),
            HoloNode::ChartPullback { chart, inner } => inner.log_abs(chart.eval(z)),
            HoloNode::Power { base, exponent, branch_center } => {
                let b = base.eval(z);
                match b {
                    Ok(b) if b.is_finite() => Ok((exponent * log_on_branch(b, *branch_center)?).re),
                    _ if exponent.im == 0.0 => Ok(exponent.re * base.log_abs(z)?),
                    _ => Err(Error::Eval(format!("power of non-finite base at {z}"))),
                }
            }
            HoloNode::Sum(v) => match self.eval(z) {
                Ok(x) => Ok(x.norm().ln()),
                // one term overflowed: the largest one dominates
                Err(_) => v.iter().map(|n| n.log_abs(z)).try_fold(f64::NEG_INFINITY, |a, b| Ok(a.max(b?))),
            },
            _ => Ok(self.eval(z)?.norm().ln()),
        }
    }

    /// True when the node is structurally zero.
    pub fn is_zero(&self) -> bool {
        match self {
            HoloNode::Poly(p) => p.is_zero(),
            HoloNode::Puiseux { p, .. } => p.is_zero(),
            HoloNode::Scale(c, a) => *c == C::new(0.0, 0.0) || a.is_zero(),
            HoloNode::Sum(v) => v.iter().all(|n| n.is_zero()),
            HoloNode::Product(v) => v.iter().any(|n| n.is_zero()),
            HoloNode::Quotient(a, _) => a.is_zero(),
            HoloNode::ChartPullback { inner, .. } => inner.is_zero(),
            _ => false,
        }
    }

    /// Structural conversion of a parsed expression; Puiseux-polynomial
    /// subtrees collapse into a single node.
    pub fn from_expr(e: &Expr, branch_center: f64) -> Result<HoloNode> {
        if let Ok(p) = puiseux::from_expr(e) {
            return Ok(match Poly::from_puiseux(&p) {
                Ok(q) => HoloNode::Poly(q),
                Err(_) => HoloNode::Puiseux { p, branch_center },
            });
        }
        let rec = |x: &Expr| HoloNode::from_expr(x, branch_center);
        Ok(match e {
            Expr::Num(c) => HoloNode::Poly(Poly::constant(*c)),
            Expr::Var => HoloNode::Poly(Poly::new(vec![C::new(0.0, 0.0), C::new(1.0, 0.0)])),
            Expr::Neg(a) => HoloNode::Scale(C::new(-1.0, 0.0), Box::new(rec(a)?)),
            Expr::Add(a, b) => HoloNode::Sum(vec![rec(a)?, rec(b)?]),
            Expr::Sub(a, b) => HoloNode::Sum(vec![rec(a)?, HoloNode::Scale(C::new(-1.0, 0.0), Box::new(rec(b)?))]),
            Expr::Mul(a, b) => HoloNode::Product(vec![rec(a)?, rec(b)?]),
            Expr::Div(a, b) => HoloNode::Quotient(Box::new(rec(a)?), Box::new(rec(b)?)),
            Expr::Pow(a, b) => {
                let exponent =
                    b.constant().ok_or_else(|| Error::Domain("exponents must be constant".into()))?;
                HoloNode::Power { base: Box::new(rec(a)?), exponent, branch_center }
            }
            Expr::Call(name, a) => match name.as_str() {
                "exp" => match puiseux::from_expr(a) {
                    Ok(p) => HoloNode::ExpPuiseux { p, branch_center },
                    Err(_) => HoloNode::Exp(Box::new(rec(a)?)),
                },
                "log" => HoloNode::Log { inner: Box::new(rec(a)?), branch_center },
                _ => return Err(Error::Domain(format!("unknown function {name}"))),
            },
        })
    }
}

/// A holomorphic function on `domain`.
#[derive(Clone, Debug)]
pub struct HoloFn {
    pub node: HoloNode,
    pub domain: Region,
    pub label: String,
}

impl HoloFn {
    pub fn new(node: HoloNode, domain: Region, label: impl Into<String>) -> HoloFn {
        HoloFn { node, domain, label: label.into() }
    }

    /// Parses an expression in `z`; arguments of fractional powers and logs
    /// use the branch window centered at `branch_center`.
    pub fn parse(src: &str, domain: Region, branch_center: f64) -> Result<HoloFn> {
        let e = expr::parse(src)?;
        Ok(HoloFn::new(HoloNode::from_expr(&e, branch_center)?, domain, src.trim()))
    }

    pub fn constant(c: C, domain: Region) -> HoloFn {
        HoloFn::new(HoloNode::Poly(Poly::constant(c)), domain, puiseux::fmt_complex(c))
    }

    pub fn zero(domain: Region) -> HoloFn {
        HoloFn::new(HoloNode::Poly(Poly::zero()), domain, "0")
    }

    pub fn closure(f: ScalarFn, domain: Region, label: impl Into<String>) -> HoloFn {
        HoloFn::new(HoloNode::PathIntegral(f), domain, label)
    }

    /// `w ↦ self(φ(w))` on `w_domain`.
    pub fn pullback(&self, chart: Arc<Chart>, w_domain: Region) -> HoloFn {
        let label = format!("({})∘φ", self.label);
        HoloFn::new(HoloNode::ChartPullback { chart, inner: Box::new(self.node.clone()) }, w_domain, label)
    }

    pub fn eval(&self, z: C) -> Result<C> {
        self.node.eval(z)
    }

    pub fn is_zero(&self) -> bool {
        self.node.is_zero()
    }

    pub fn log_abs(&self, z: C) -> Result<f64> {
        self.node.log_abs(z)
    }

    /// Same function on a smaller domain.
    pub fn restrict(&self, domain: Region) -> HoloFn {
        HoloFn { node: self.node.clone(), domain, label: self.label.clone() }
    }

    /// A thread-safe evaluator.
    pub fn evaluator(&self) -> ScalarFn {
        let n = self.node.clone();
        Arc::new(move |z| n.eval(z))
    }
}

impl fmt::Display for HoloFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}
