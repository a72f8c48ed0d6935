//! Dense complex polynomials in `z`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::puiseux::PuiseuxPoly;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Poly {
    /// `coeffs[k]` multiplies `z^k`.
    pub coeffs: Vec<Complex64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == Complex64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: vec![] }
    }

    pub fn constant(c: Complex64) -> Self {
        Poly::new(vec![c])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    /// Order of vanishing at 0.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| c.norm() > 0.0)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * k as f64)
                .collect(),
        )
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn scale(&self, s: Complex64) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn from_puiseux(p: &PuiseuxPoly) -> Result<Poly> {
        let mut coeffs = Vec::new();
        for (e, c) in p.terms() {
            if *e.denom() != 1 || *e.numer() < 0 {
                return Err(Error::Domain(format!(
                    "'{p}' is not a polynomial in z (exponent {e})"
                )));
            }
            let k = *e.numer() as usize;
            if coeffs.len() <= k {
                coeffs.resize(k + 1, Complex64::new(0.0, 0.0));
            }
            coeffs[k] = c;
        }
        Ok(Poly::new(coeffs))
    }

    pub fn to_puiseux(&self) -> PuiseuxPoly {
        PuiseuxPoly::from_terms(
            1,
            self.coeffs.iter().enumerate().map(|(k, c)| (k as i64, *c)),
        )
    }

    /// Parses `c0 + c1*z + c2*z^2` style input.
    pub fn parse(src: &str) -> Result<Poly> {
        let p = PuiseuxPoly::parse(src)?;
        Poly::from_puiseux(&p).map_err(|e| match e {
            Error::Domain(m) => Error::parse(1, m),
            other => other,
        })
    }
}

impl std::fmt::Display for Poly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.to_puiseux())
    }
}
