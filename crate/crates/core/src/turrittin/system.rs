//! Splitting recursion for `z^N u' + A(z) u = 0` and the resulting truncated
//! fundamental factor `F` with `F e^Λ` a formal fundamental solution.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::operator::OperatorSpec;
use crate::error::{Error, Result};
use crate::geometry::Sector;
use crate::poly::Poly;
use crate::puiseux::{branch_arg, PuiseuxPoly};

type C = Complex64;
type M = DMatrix<C>;

/// Divisors below this are treated as resonances.
pub const RESONANCE_TOL: f64 = 1e-10;
pub const DEFAULT_ORDER: usize = 20;

fn zero(m: usize) -> M {
    M::zeros(m, m)
}

/// Output of the splitting recursion, in the eigenbasis of `A(0)`.
#[derive(Debug, Clone)]
pub(crate) struct Splitting {
    pub t0: M,
    pub t: Vec<M>,
    pub d: Vec<DVector<C>>,
    /// Constant nilpotent coupling from resonant terms (`N = 1` only).
    pub g: Option<M>,
}

/// Eigenvalues (sorted by real then imaginary part, descending) and
/// eigenvectors scaled so the largest entry is 1.
fn eigen(a0: &M) -> Result<(Vec<C>, M)> {
    let m = a0.nrows();
    let schur = a0.clone().schur();
    let (_, tri) = schur.unpack();
    let mut vals: Vec<C> = (0..m).map(|i| tri[(i, i)]).collect();
    vals.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    let scale = a0.iter().map(|c| c.norm()).fold(1.0, f64::max);
    // group equal eigenvalues
    let mut groups: Vec<(C, usize)> = Vec::new();
    for v in vals {
        match groups.last_mut() {
            Some((g, n)) if (*g - v).norm() <= 1e-9 * scale => *n += 1,
            _ => groups.push((v, 1)),
        }
    }
    let mut cols = Vec::new();
    let mut out_vals = Vec::new();
    for (lam, mult) in groups {
        let shifted = a0 - M::identity(m, m) * lam;
        let svd = shifted.svd(false, true);
        let vt = svd.v_t.as_ref().unwrap();
        let mut idx: Vec<usize> = (0..m).collect();
        idx.sort_by(|a, b| svd.singular_values[*a].total_cmp(&svd.singular_values[*b]));
        for &i in idx.iter().take(mult) {
            if svd.singular_values[i] > 1e-7 * scale {
                return Err(Error::Unsupported(format!(
                    "A(0) is not diagonalizable at eigenvalue {lam}"
                )));
            }
            let mut v: DVector<C> = vt.row(i).transpose().map(|c| c.conj());
            let piv = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
            v /= piv;
            for c in v.iter_mut() {
                if c.norm() < 1e-15 {
                    *c = C::new(0.0, 0.0);
                }
            }
            cols.push(v);
            out_vals.push(lam);
        }
    }
    let t0 = M::from_columns(&cols);
    let sv = t0.clone().svd(false, false).singular_values;
    let (smin, smax) = sv.iter().fold((f64::INFINITY, 0.0f64), |(a, b), s| (a.min(*s), b.max(*s)));
    if smin <= 1e-8 * smax {
        return Err(Error::Unsupported("A(0) is not diagonalizable".into()));
    }
    Ok((out_vals, t0))
}

pub(crate) fn split(op: &OperatorSpec, order: usize) -> Result<Splitting> {
    let m = op.m();
    let n = op.n_pole();
    if n == 0 {
        // holomorphic system: T' = −A T, T(0) = I
        let mut t = vec![M::identity(m, m)];
        for k in 0..order {
            let mut s = zero(m);
            for i in 0..=k {
                s += op.coeff_matrix(i) * &t[k - i];
            }
            t.push(-s / C::new((k + 1) as f64, 0.0));
        }
        return Ok(Splitting { t0: M::identity(m, m), t, d: vec![DVector::zeros(m)], g: None });
    }
    let a0 = op.coeff_matrix(0);
    let (vals, t0) = eigen(&a0)?;
    let t0_inv = t0.clone().try_inverse().ok_or_else(|| Error::Conditioning("eigenvector matrix singular".into()))?;
    if n >= 2 {
        for i in 0..m {
            for j in i + 1..m {
                if (vals[i] - vals[j]).norm() <= RESONANCE_TOL {
                    return Err(Error::Unsupported(format!(
                        "repeated leading eigenvalue {} with pole order {n}",
                        vals[i]
                    )));
                }
            }
        }
    }
    let b: Vec<M> = (0..=op.degree().max(1)).map(|k| &t0_inv * op.coeff_matrix(k) * &t0).collect();
    let bk = |k: usize| b.get(k).cloned().unwrap_or_else(|| zero(m));
    let mut t = vec![M::identity(m, m)];
    let mut d = vec![DVector::from_vec(vals.clone())];
    let mut g = zero(m);
    // h[k]: part of G living at z^k after conjugation by z^{Λ0}
    let mut h: Vec<M> = vec![zero(m)];
    let mut resonant = false;
    for k in 1..=order {
        let mut r = zero(m);
        for i in 1..=k {
            r += bk(i) * &t[k - i];
        }
        for l in 1..k {
            r -= &t[l] * &h[k - l];
        }
        for i in 1..k {
            let di = M::from_diagonal(&d[k - i]);
            r -= &t[i] * di;
        }
        if n >= 2 && k + 1 >= n && k + 1 - n >= 1 {
            r += &t[k + 1 - n] * C::new((k + 1 - n) as f64, 0.0);
        }
        let mut tk = zero(m);
        let mut dk = DVector::zeros(m);
        let mut hk = zero(m);
        for i in 0..m {
            for j in 0..m {
                if n >= 2 {
                    if i == j {
                        dk[i] = r[(i, i)];
                    } else {
                        tk[(i, j)] = -r[(i, j)] / (vals[i] - vals[j]);
                    }
                } else {
                    let div = vals[i] - vals[j] + C::new(k as f64, 0.0);
                    if div.norm() > RESONANCE_TOL {
                        tk[(i, j)] = -r[(i, j)] / div;
                    } else {
                        hk[(i, j)] = r[(i, j)];
                        g[(i, j)] = r[(i, j)];
                        resonant = true;
                    }
                }
            }
        }
        t.push(tk);
        d.push(dk);
        h.push(hk);
    }
    Ok(Splitting { t0, t, d, g: resonant.then_some(g) })
}

/// `Λ_j` in eigenbasis order.
pub(crate) fn lambdas_of(s: &Splitting, n: usize, m: usize) -> Vec<PuiseuxPoly> {
    (0..m)
        .map(|j| {
            let mut lam = PuiseuxPoly::zero();
            for (k, dk) in s.d.iter().enumerate().take(n.saturating_sub(1)) {
                let e = (n - 1 - k) as i64;
                lam = lam.add(&PuiseuxPoly::monomial(dk[j] / e as f64, -e, 1));
            }
            lam
        })
        .collect()
}

/// `(K, M)` with `K^{-1}|z|^M ≤ ‖F(z)‖ ≤ K|z|^{-M}` on the sampled sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthCertificate {
    #[serde(rename = "K", with = "crate::serde_float")]
    pub k: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub sector: Sector,
    pub samples: usize,
}

/// Truncated `F` such that the columns of `F e^Λ` formally solve `Pu = 0`:
/// `F = T0 · T(z) · diag(z^{ρ_j} e^{h_j(z)}) · exp(−G log z)`.
#[derive(Debug, Clone)]
pub struct FormalFundamental {
    m: usize,
    n_pole: usize,
    order: usize,
    a: Vec<M>,
    t0: M,
    t: Vec<M>,
    rho: Vec<C>,
    h: Vec<Poly>,
    g: Option<M>,
    lambdas: Vec<PuiseuxPoly>,
    /// Column `i` of `F` is column `perm[i]` of the eigenbasis factor.
    perm: Vec<usize>,
    pub cert: GrowthCertificate,
}

impl FormalFundamental {
    pub(crate) fn from_splitting(
        op: &OperatorSpec,
        s: Splitting,
        order: usize,
        perm: Vec<usize>,
    ) -> Result<FormalFundamental> {
        let m = op.m();
        let n = op.n_pole();
        let raw = lambdas_of(&s, n, m);
        let lambdas = perm.iter().map(|&i| raw[i].clone()).collect();
        let mut rho = vec![C::new(0.0, 0.0); m];
        let mut h = vec![Poly::zero(); m];
        if n >= 1 {
            for j in 0..m {
                let mut hc = vec![C::new(0.0, 0.0)];
                for (k, dk) in s.d.iter().enumerate() {
                    let c = dk[j];
                    if k + 1 == n {
                        rho[j] = -c;
                    } else if k + 1 > n {
                        let e = k + 1 - n;
                        if hc.len() <= e {
                            hc.resize(e + 1, C::new(0.0, 0.0));
                        }
                        hc[e] = -c / e as f64;
                    }
                }
                h[j] = Poly::new(hc);
            }
        }
        let a = (0..=op.degree()).map(|k| op.coeff_matrix(k)).collect();
        let r = (0.5f64).min(op.disc_radius() / 2.0);
        let mut ff = FormalFundamental {
            m,
            n_pole: n,
            order,
            a,
            t0: s.t0,
            t: s.t,
            rho,
            h,
            g: s.g,
            lambdas,
            perm,
            cert: GrowthCertificate { k: 1.0, m: 0.0, sector: Sector::new(0.0, PI / 8.0, r).unwrap(), samples: 0 },
        };
        let sector = ff.cert.sector;
        ff.cert = verify_growth_bounds(&ff, &sector, 240)?;
        Ok(ff)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n_pole(&self) -> usize {
        self.n_pole
    }

    /// `Λ_k` of the column order used by `F`.
    pub fn lambdas(&self) -> &[PuiseuxPoly] {
        &self.lambdas
    }

    /// Exponents `ρ_j` of the `z^ρ` factors, in column order.
    pub fn rho(&self) -> Vec<C> {
        self.perm.iter().map(|&i| self.rho[i]).collect()
    }

    pub fn has_log(&self) -> bool {
        self.g.is_some()
    }

    fn t_of(&self, z: C) -> (M, M) {
        let mut val = zero(self.m);
        let mut der = zero(self.m);
        for tk in self.t.iter().rev() {
            val = val * z + tk;
        }
        for (k, tk) in self.t.iter().enumerate().skip(1).rev() {
            der = der * z + tk * C::new(k as f64, 0.0);
        }
        (val, der)
    }

    fn log_factor(&self, logz: C) -> M {
        let Some(g) = &self.g else { return M::identity(self.m, self.m) };
        let x = g * (-logz);
        let mut term = M::identity(self.m, self.m);
        let mut acc = term.clone();
        for j in 1..=self.m {
            term = &term * &x / C::new(j as f64, 0.0);
            acc += &term;
        }
        acc
    }

    /// `F(z)` and `F'(z)`, with `arg z` in the window around `branch_center`.
    pub fn eval_with_derivative(&self, z: C, branch_center: f64) -> (M, M) {
        let logz = C::new(z.norm().ln(), branch_arg(z, branch_center));
        let (tv, td) = self.t_of(z);
        let mut e = DVector::zeros(self.m);
        let mut ed = DVector::zeros(self.m);
        for j in 0..self.m {
            let hv = self.h[j].eval(z);
            let v = (self.rho[j] * logz + hv).exp();
            e[j] = v;
            ed[j] = v * (self.rho[j] / z + self.h[j].derivative().eval(z));
        }
        let l = self.log_factor(logz);
        let e_m = M::from_diagonal(&e) * &l;
        let mut ed_m = M::from_diagonal(&ed) * &l;
        if let Some(g) = &self.g {
            ed_m -= M::from_diagonal(&e) * g * &l / z;
        }
        let f = &self.t0 * &tv * &e_m;
        let fd = &self.t0 * (&td * &e_m + &tv * &ed_m);
        let pick = |x: M| M::from_fn(self.m, self.m, |i, j| x[(i, self.perm[j])]);
        (pick(f), pick(fd))
    }

    pub fn eval(&self, z: C, branch_center: f64) -> M {
        self.eval_with_derivative(z, branch_center).0
    }

    fn a_of(&self, z: C) -> M {
        let mut v = zero(self.m);
        for ak in self.a.iter().rev() {
            v = v * z + ak;
        }
        v
    }

    /// Max over columns of `‖z^N (F_k e^{Λ_k})' + A F_k e^{Λ_k}‖ / ‖F_k e^{Λ_k}‖`.
    pub fn residual(&self, z: C, branch_center: f64) -> Result<f64> {
        let (f, fd) = self.eval_with_derivative(z, branch_center);
        let a = self.a_of(z);
        let zn = z.powu(self.n_pole as u32);
        let mut worst: f64 = 0.0;
        for k in 0..self.m {
            let lp = self.lambdas[k].eval_derivative(z, branch_center)?;
            let col = f.column(k);
            let r = (fd.column(k) + col * lp) * zn + &a * col;
            let num = r.iter().map(|c| c.norm()).fold(0.0, f64::max);
            let den = col.iter().map(|c| c.norm()).fold(0.0, f64::max);
            worst = worst.max(num / den);
        }
        Ok(worst)
    }
}

/// Max-entry modulus.
pub fn max_entry(m: &M) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Fits the smallest `M` on a grid of step 0.25 in `[0, 10]`, refined by
/// bisection, for which `max(‖F‖ρ^M, ρ^M/‖F‖)` stays bounded as `ρ → 0`
/// along radial strata of `sector`.
pub fn growth_bounds_of(log_norm: impl Fn(C) -> f64, sector: &Sector, n_samples: usize) -> Result<(f64, f64)> {
    let strata = 12;
    let per = (n_samples / strata).max(3);
    let mut data: Vec<(usize, f64, f64)> = Vec::new();
    for i in 0..strata {
        let rho = sector.r * 0.9 * 2f64.powi(-(i as i32));
        for a in 0..per {
            let frac = if per == 1 { 0.0 } else { 2.0 * a as f64 / (per - 1) as f64 - 1.0 };
            let z = C::from_polar(rho, sector.tau + 0.9 * sector.eta * frac);
            data.push((i, rho.ln(), log_norm(z)));
        }
    }
    let phi = |m: f64| -> Option<(Vec<f64>, f64)> {
        let mut best = vec![f64::NEG_INFINITY; strata];
        let mut kmax = f64::NEG_INFINITY;
        for (i, lr, ln) in &data {
            if !ln.is_finite() {
                return None;
            }
            let v = (ln + m * lr).max(m * lr - ln);
            best[*i] = best[*i].max(v);
            kmax = kmax.max(v);
        }
        Some((best, kmax))
    };
    let works = |m: f64| -> bool {
        let Some((best, _)) = phi(m) else { return false };
        // slope of log Φ against log ρ over the inner strata
        let xs: Vec<f64> = (strata / 2..strata).map(|i| (sector.r * 0.9 * 2f64.powi(-(i as i32))).ln()).collect();
        let ys = &best[strata / 2..];
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        sxy / sxx >= -1e-3
    };
    let grid: Vec<f64> = (0..=40).map(|i| 0.25 * i as f64).collect();
    let Some(pos) = grid.iter().position(|m| works(*m)) else {
        return Err(Error::Hypothesis("F is not polynomially bounded on the certificate sector".into()));
    };
    let mut hi = grid[pos];
    if pos > 0 {
        let mut lo = grid[pos - 1];
        while hi - lo > 1e-3 {
            let mid = 0.5 * (lo + hi);
            if works(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    let (_, kmax) = phi(hi).unwrap();
    Ok((kmax.exp(), hi))
}

/// Growth certificate of `F` on `sector`.
pub fn verify_growth_bounds(f: &FormalFundamental, sector: &Sector, n_samples: usize) -> Result<GrowthCertificate> {
    let (k, m) = growth_bounds_of(
        |z| {
            let v = max_entry(&f.eval(z, sector.tau));
            if v > 0.0 { v.ln() } else { f64::NAN }
        },
        sector,
        n_samples,
    )?;
    Ok(GrowthCertificate { k, m, sector: *sector, samples: n_samples })
}
