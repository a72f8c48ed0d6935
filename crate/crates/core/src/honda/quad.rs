//! Adaptive Gauss–Kronrod (7/15) quadrature of complex integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

pub const REL_TOL: f64 = 1e-10;
pub const MAX_SUBDIVISIONS: usize = 1 << 14;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One 15-point Kronrod estimate on `[a, b]`: `(value, error, max |f|, ∫|f|)`.
pub fn gk15(f: &mut dyn FnMut(f64) -> Result<C>, a: f64, b: f64) -> Result<(C, f64, f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    let mut fmax = fc.norm();
    let mut absk = fc.norm() * WGK[7];
    for j in 0..7 {
        let x = h * XGK[j];
        let (f1, f2) = (f(c - x)?, f(c + x)?);
        fmax = fmax.max(f1.norm()).max(f2.norm());
        k += (f1 + f2) * WGK[j];
        absk += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            g += (f1 + f2) * WG[j / 2];
        }
    }
    let err = ((k - g) * h).norm();
    Ok((k * h, err, fmax, absk * h.abs()))
}

struct Piece {
    a: f64,
    b: f64,
    val: C,
    err: f64,
    abs: f64,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Quad {
    pub value: C,
    pub error: f64,
    pub subdivisions: usize,
    /// Largest integrand modulus seen at a node.
    pub fmax: f64,
}

/// Relative rounding floor: integrands carry noise of about this size
/// relative to `|f|`, so the error cannot be pushed below it times `∫|f|`.
pub const NOISE_FLOOR: f64 = 1e-13;

/// Globally adaptive integration of `f` over `[a, b]`, bisecting the
/// interval with the largest error until
/// `err ≤ max(abs_tol, rel_tol·|I|, noise·∫|f|)`, where `noise ≥ NOISE_FLOOR`
/// is the relative rounding level of the integrand.
pub fn adaptive(f: &mut dyn FnMut(f64) -> Result<C>, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<Quad> {
    adaptive_noisy(f, a, b, rel_tol, abs_tol, NOISE_FLOOR)
}

pub fn adaptive_noisy(
    f: &mut dyn FnMut(f64) -> Result<C>,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    noise: f64,
) -> Result<Quad> {
    let noise = noise.max(NOISE_FLOOR);
    let (v, e, mut fmax, ab) = gk15(f, a, b)?;
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, val: v, err: e, abs: ab });
    let (mut total, mut err, mut abs) = (v, e, ab);
    let mut n = 1;
    while err > abs_tol.max(rel_tol * total.norm()).max(noise * abs) {
        if n >= MAX_SUBDIVISIONS {
            let w = heap.peek().unwrap();
            return Err(Error::Integration { a: w.a, b: w.b, subdivisions: n, estimate: err });
        }
        let p = heap.pop().unwrap();
        let m = 0.5 * (p.a + p.b);
        if !(m > p.a && m < p.b) {
            // interval exhausted in floating point; accept what we have
            heap.push(Piece { err: 0.0, ..p });
            err = heap.iter().map(|q| q.err).sum();
            continue;
        }
        let (v1, e1, f1, a1) = gk15(f, p.a, m)?;
        let (v2, e2, f2, a2) = gk15(f, m, p.b)?;
        fmax = fmax.max(f1).max(f2);
        total += v1 + v2 - p.val;
        err += e1 + e2 - p.err;
        abs += a1 + a2 - p.abs;
        heap.push(Piece { a: p.a, b: m, val: v1, err: e1, abs: a1 });
        heap.push(Piece { a: m, b: p.b, val: v2, err: e2, abs: a2 });
        n += 1;
        if n % 64 == 0 {
            // resum to shed accumulated cancellation in the running sums
            total = heap.iter().map(|q| q.val).sum();
            err = heap.iter().map(|q| q.err).sum();
            abs = heap.iter().map(|q| q.abs).sum();
        }
    }
    Ok(Quad { value: total, error: err.max(0.0), subdivisions: n, fmax })
}

/// `∫_0^1 f(t) dt` for `f` possibly singular at `0`, over dyadic intervals
/// `[2^{-j-1}, 2^{-j}]`, stopping once two consecutive intervals contribute
/// below `1e-14·(1 + |I|)` in the bound `max|f|·length`.
pub fn improper_at_zero(f: &mut dyn FnMut(f64) -> Result<C>, rel_tol: f64) -> Result<Quad> {
    improper_at_zero_noisy(f, rel_tol, NOISE_FLOOR)
}

pub fn improper_at_zero_noisy(f: &mut dyn FnMut(f64) -> Result<C>, rel_tol: f64, noise: f64) -> Result<Quad> {
    let mut total = C::new(0.0, 0.0);
    let mut error = 0.0;
    let mut subdivisions = 0;
    let mut fmax: f64 = 0.0;
    let mut quiet = 0;
    let mut growing = 0;
    let mut prev_bound = f64::INFINITY;
    for j in 0..1070 {
        let (a, b) = (2f64.powi(-(j as i32) - 1), 2f64.powi(-(j as i32)));
        let q = adaptive_noisy(f, a, b, rel_tol, 1e-15 * (1.0 + total.norm()), noise)?;
        total += q.value;
        error += q.error;
        subdivisions += q.subdivisions;
        fmax = fmax.max(q.fmax);
        let bound = q.fmax * (b - a);
        if bound < 1e-14 * (1.0 + total.norm()) {
            quiet += 1;
            if quiet >= 2 {
                return Ok(Quad { value: total, error, subdivisions, fmax });
            }
        } else {
            quiet = 0;
        }
        // a contribution that stops shrinking means the integral diverges
        if j > 40 && bound >= 0.99 * prev_bound {
            growing += 1;
            if growing >= 8 {
                return Err(Error::Integration { a: 0.0, b, subdivisions, estimate: bound });
            }
        } else {
            growing = 0;
        }
        prev_bound = bound;
    }
    Err(Error::Integration { a: 0.0, b: 2f64.powi(-1070), subdivisions, estimate: prev_bound })
}
