use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Poly;

/// `P = z^N d/dz I_m + A(z)` with polynomial entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OperatorDoc", into = "OperatorDoc")]
pub struct OperatorSpec {
    m: usize,
    n_pole: usize,
    a: Vec<Vec<Poly>>,
    disc_radius: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum EntryDoc {
    Real(f64),
    Text(String),
}

#[derive(Serialize, Deserialize)]
struct OperatorDoc {
    m: usize,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<EntryDoc>>,
    #[serde(default = "default_radius")]
    disc_radius: f64,
}

fn default_radius() -> f64 {
    1.0
}

impl TryFrom<OperatorDoc> for OperatorSpec {
    type Error = Error;
    fn try_from(d: OperatorDoc) -> Result<OperatorSpec> {
        let a = d
            .a
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|e| match e {
                        EntryDoc::Real(x) => Ok(Poly::constant(Complex64::new(x, 0.0))),
                        EntryDoc::Text(s) => Poly::parse(&s),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        OperatorSpec::new(d.m, d.n, a, d.disc_radius)
    }
}

impl From<OperatorSpec> for OperatorDoc {
    fn from(o: OperatorSpec) -> OperatorDoc {
        OperatorDoc {
            m: o.m,
            n: o.n_pole,
            a: o.a
                .iter()
                .map(|row| row.iter().map(|p| EntryDoc::Text(p.to_string())).collect())
                .collect(),
            disc_radius: o.disc_radius,
        }
    }
}

impl OperatorSpec {
    pub fn new(m: usize, n_pole: usize, a: Vec<Vec<Poly>>, disc_radius: f64) -> Result<OperatorSpec> {
        if m == 0 {
            return Err(Error::Domain("system size must be at least 1".into()));
        }
        if a.len() != m || a.iter().any(|r| r.len() != m) {
            return Err(Error::Domain(format!("A must be {m}×{m}")));
        }
        if !(disc_radius > 0.0 && disc_radius.is_finite()) {
            return Err(Error::Domain("disc_radius must be positive".into()));
        }
        Ok(OperatorSpec { m, n_pole, a, disc_radius })
    }

    /// Scalar `z^N u' + a(z) u`.
    pub fn scalar(n_pole: usize, a: Poly) -> OperatorSpec {
        OperatorSpec { m: 1, n_pole, a: vec![vec![a]], disc_radius: 1.0 }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_pole(&self) -> usize {
        self.n_pole
    }

    pub fn disc_radius(&self) -> f64 {
        self.disc_radius
    }

    pub fn entry(&self, i: usize, j: usize) -> &Poly {
        &self.a[i][j]
    }

    /// Highest polynomial degree among the entries of `A`.
    pub fn degree(&self) -> usize {
        self.a.iter().flatten().filter_map(|p| p.degree()).max().unwrap_or(0)
    }

    /// Coefficient matrix of `z^k` in `A`.
    pub fn coeff_matrix(&self, k: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.m, self.m, |i, j| self.a[i][j].coeff(k))
    }

    pub fn eval_a(&self, z: Complex64) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.m, self.m, |i, j| self.a[i][j].eval(z))
    }
}

/// Scalar operator `Σ_j a_j(z) (d/dz)^j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarOperator {
    pub coeffs: Vec<Poly>,
    pub disc_radius: f64,
}

impl ScalarOperator {
    /// Checks that the leading coefficient has no zeros on the punctured disc
    /// (sampled on a polar grid).
    pub fn new(coeffs: Vec<Poly>, disc_radius: f64) -> Result<ScalarOperator> {
        if coeffs.iter().all(|p| p.is_zero()) {
            return Err(Error::Degenerate("all coefficients vanish".into()));
        }
        let lead = coeffs.last().filter(|p| !p.is_zero()).ok_or_else(|| {
            Error::Degenerate("leading coefficient vanishes identically".into())
        })?;
        let v = lead.valuation().unwrap();
        let unit = Poly::new(lead.coeffs[v..].to_vec());
        let scale = unit.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let mut min = f64::INFINITY;
        for i in 1..=64 {
            for j in 0..64 {
                let z = Complex64::from_polar(disc_radius * i as f64 / 64.0, 2.0 * PI * j as f64 / 64.0);
                min = min.min(unit.eval(z).norm());
            }
        }
        if !(min > 1e-9 * scale) {
            return Err(Error::Hypothesis(
                "leading coefficient vanishes away from 0 inside the disc".into(),
            ));
        }
        Ok(ScalarOperator { coeffs, disc_radius })
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn from_system(op: &OperatorSpec) -> Result<ScalarOperator> {
        if op.m != 1 {
            return Err(Error::Unsupported("only 1×1 systems are scalar operators".into()));
        }
        let mut lead = vec![Complex64::new(0.0, 0.0); op.n_pole + 1];
        lead[op.n_pole] = Complex64::new(1.0, 0.0);
        Ok(ScalarOperator { coeffs: vec![op.a[0][0].clone(), Poly::new(lead)], disc_radius: op.disc_radius })
    }

    /// Parses coefficient strings `[a_0, a_1, ..., a_n]`.
    pub fn parse(coeffs: &[&str], disc_radius: f64) -> Result<ScalarOperator> {
        ScalarOperator::new(coeffs.iter().map(|s| Poly::parse(s)).collect::<Result<_>>()?, disc_radius)
    }
}
