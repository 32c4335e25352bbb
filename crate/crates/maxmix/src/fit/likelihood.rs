//! Censored pairwise likelihood: analytic CDF partials for every model,
//! threshold censoring, and the Godambe information machinery.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fit::nelder_mead::Bound;
use crate::models::{
    bivariate_cdf_mm, disk_overlap, MaxStableFamily, ModelSpec,
};
use crate::simulate::{Margin, SpatialSample};
use crate::special::{norm_cdf, norm_pdf};

/// Pairs closer than this are treated as replicated sites, not spatial pairs.
const DEGENERATE_DISTANCE: f64 = 1e-12;

/// Exponent measure with its first and mixed second partials:
/// (V, dV/dx1, dV/dx2, d2V/dx1 dx2).
pub fn family_v_partials(
    family: &MaxStableFamily,
    h: f64,
    x1: f64,
    x2: f64,
) -> Result<(f64, f64, f64, f64)> {
    family.validate()?;
    if !(h.is_finite() && h >= 0.0) {
        return Err(Error::Domain(format!("distance h must be >= 0, got {h}")));
    }
    if !(x1.is_finite() && x1 > 0.0 && x2.is_finite() && x2 > 0.0) {
        return Err(Error::Domain(format!(
            "coordinates must be positive, got ({x1}, {x2})"
        )));
    }
    let out = match family {
        MaxStableFamily::Teg { corr, r } => {
            teg_partials(disk_overlap(h, *r), corr.value(h), x1, x2)
        }
        _ => smith_form_partials(family.tau(h).expect("smith-form family"), x1, x2),
    };
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!(
            "exponent partials lost finiteness at h = {h}, x = ({x1}, {x2})"
        )));
    }
    Ok((out[0], out[1], out[2], out[3]))
}

fn smith_form_partials(tau: f64, x1: f64, x2: f64) -> [f64; 4] {
    if tau < 1e-12 {
        // complete dependence: V = 1 / min(x)
        let (v, v1, v2) = if x1 < x2 {
            (1.0 / x1, -1.0 / (x1 * x1), 0.0)
        } else {
            (1.0 / x2, 0.0, -1.0 / (x2 * x2))
        };
        return [v, v1, v2, 0.0];
    }
    let w = 0.5 * tau + (x2 / x1).ln() / tau;
    let v = tau - w;
    let (pw, pv) = (norm_pdf(w), norm_pdf(v));
    let (cw, cv) = (norm_cdf(w), norm_cdf(v));
    let value = cw / x1 + cv / x2;
    let d1 = -cw / (x1 * x1) - pw / (tau * x1 * x1) + pv / (tau * x1 * x2);
    let d2 = -cv / (x2 * x2) - pv / (tau * x2 * x2) + pw / (tau * x1 * x2);
    let d12 = -pw / (tau * x1 * x1 * x2) + w * pw / (tau * tau * x1 * x1 * x2)
        + v * pv / (tau * tau * x1 * x2 * x2)
        - pv / (tau * x1 * x2 * x2);
    [value, d1, d2, d12]
}

fn teg_partials(alpha: f64, rho: f64, x1: f64, x2: f64) -> [f64; 4] {
    let s = 1.0 / x1 + 1.0 / x2;
    let sum = x1 + x2;
    let c = 2.0 * (rho + 1.0);
    let q = (1.0 - c * x1 * x2 / (sum * sum)).max(0.0);
    let a = 1.0 - 0.5 * alpha * (1.0 - q.sqrt());
    if alpha == 0.0 {
        // beyond the disk diameter the pair is exactly independent
        return [s, -1.0 / (x1 * x1), -1.0 / (x2 * x2), 0.0];
    }
    let q1 = -c * x2 * (x2 - x1) / sum.powi(3);
    let q2 = -c * x1 * (x1 - x2) / sum.powi(3);
    let q12 = c * (x1 * x1 + x2 * x2 - 4.0 * x1 * x2) / sum.powi(4);
    let sq = q.sqrt();
    let a1 = alpha / (4.0 * sq) * q1;
    let a2 = alpha / (4.0 * sq) * q2;
    let a12 = 0.25 * alpha * (-0.5 * q1 * q2 / (sq * sq * sq) + q12 / sq);
    let value = s * a;
    let d1 = -a / (x1 * x1) + s * a1;
    let d2 = -a / (x2 * x2) + s * a2;
    let d12 = -a2 / (x1 * x1) - a1 / (x2 * x2) + s * a12;
    [value, d1, d2, d12]
}

/// Inverse marginal transform g_s(z) = -1 / ln(1 - exp(-s/z)) and its
/// derivative in z.
fn g_with_derivative(z: f64, scale: f64) -> (f64, f64) {
    let e = scale / z;
    let em = (-e).exp();
    let one_minus = -(-e).exp_m1();
    let l = if e > std::f64::consts::LN_2 {
        (-em).ln_1p()
    } else {
        one_minus.ln()
    };
    let l_prime = -em * (scale / (z * z)) / one_minus;
    (-1.0 / l, l_prime / (l * l))
}

/// Bivariate CDF of the max-mixture pair together with its first partials
/// and the mixed second partial (the pair density of component maxima).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfPartials {
    pub g: f64,
    pub d1: f64,
    pub d2: f64,
    pub d12: f64,
}

/// Analytic partials of the max-mixture bivariate CDF at distance h.
pub fn mixture_cdf_partials(spec: &ModelSpec, h: f64, z1: f64, z2: f64) -> Result<CdfPartials> {
    spec.validate()?;
    if !(z1.is_finite() && z1 > 0.0 && z2.is_finite() && z2 > 0.0) {
        return Err(Error::Domain(format!(
            "coordinates must be positive, got ({z1}, {z2})"
        )));
    }
    let out = if spec.a == 1.0 {
        let (vx, vx1, vx2, vx12) = family_v_partials(spec.x(), h, z1, z2)?;
        let g = (-vx).exp();
        CdfPartials {
            g,
            d1: -vx1 * g,
            d2: -vx2 * g,
            d12: (vx1 * vx2 - vx12) * g,
        }
    } else if spec.a == 0.0 {
        let (b, b1, b2, b12) = inverse_part_partials(spec.y(), h, 1.0, z1, z2)?;
        CdfPartials { g: b.clamp(0.0, 1.0), d1: b1, d2: b2, d12: b12 }
    } else {
        let a = spec.a;
        let (vx, vx1, vx2, vx12) = family_v_partials(spec.x(), h, z1, z2)?;
        let e = (-a * vx).exp();
        let (b, b1, b2, b12) = inverse_part_partials(spec.y(), h, 1.0 - a, z1, z2)?;
        CdfPartials {
            g: (e * b).clamp(0.0, 1.0),
            d1: e * (-a * vx1 * b + b1),
            d2: e * (-a * vx2 * b + b2),
            d12: e * ((a * a * vx1 * vx2 - a * vx12) * b - a * vx1 * b2 - a * vx2 * b1 + b12),
        }
    };
    if !(out.g.is_finite() && out.d1.is_finite() && out.d2.is_finite() && out.d12.is_finite()) {
        return Err(Error::Numeric(format!(
            "CDF partials lost finiteness at h = {h}, z = ({z1}, {z2})"
        )));
    }
    Ok(out)
}

/// CDF of the scaled inverse max-stable pair, B = F(z1) + F(z2) - 1 +
/// exp(-V_Y(g(z1), g(z2))), with partials in z.
fn inverse_part_partials(
    family: &MaxStableFamily,
    h: f64,
    scale: f64,
    z1: f64,
    z2: f64,
) -> Result<(f64, f64, f64, f64)> {
    let f1 = (-scale / z1).exp();
    let f2 = (-scale / z2).exp();
    let (g1, gp1) = g_with_derivative(z1, scale);
    let (g2, gp2) = g_with_derivative(z2, scale);
    let (vy, vy1, vy2, vy12) = family_v_partials(family, h, g1, g2)?;
    let c = (-vy).exp();
    let b = f1 + f2 + (-vy).exp_m1();
    let b1 = f1 * scale / (z1 * z1) - c * vy1 * gp1;
    let b2 = f2 * scale / (z2 * z2) - c * vy2 * gp2;
    let b12 = c * (vy1 * vy2 - vy12) * gp1 * gp2;
    Ok((b, b1, b2, b12))
}

fn central_d1(spec: &ModelSpec, h: f64, z1: f64, z2: f64, step: f64) -> Result<f64> {
    let hi = bivariate_cdf_mm(spec, h, z1 + step, z2)?;
    let lo = bivariate_cdf_mm(spec, h, z1 - step, z2)?;
    Ok((hi - lo) / (2.0 * step))
}

fn central_d12(spec: &ModelSpec, h: f64, z1: f64, z2: f64, s1: f64, s2: f64) -> Result<f64> {
    let pp = bivariate_cdf_mm(spec, h, z1 + s1, z2 + s2)?;
    let pm = bivariate_cdf_mm(spec, h, z1 + s1, z2 - s2)?;
    let mp = bivariate_cdf_mm(spec, h, z1 - s1, z2 + s2)?;
    let mm = bivariate_cdf_mm(spec, h, z1 - s1, z2 - s2)?;
    Ok((pp - pm - mp + mm) / (4.0 * s1 * s2))
}

/// Finite-difference reference for the CDF partials: Richardson-extrapolated
/// central differences of the plain CDF, returning (d1, d12). Slow; intended
/// as a cross-check of the analytic path.
pub fn mixture_cdf_partials_fd(spec: &ModelSpec, h: f64, z1: f64, z2: f64) -> Result<(f64, f64)> {
    // step balances O(s^4) Richardson truncation against roundoff in the
    // four-point cross difference
    let step = |z: f64| (1e-4 * z.max(1.0)).min(0.5 * z);
    let (s1, s2) = (step(z1), step(z2));
    let d1 = (4.0 * central_d1(spec, h, z1, z2, 0.5 * s1)? - central_d1(spec, h, z1, z2, s1)?) / 3.0;
    let coarse = central_d12(spec, h, z1, z2, s1, s2)?;
    let fine = central_d12(spec, h, z1, z2, 0.5 * s1, 0.5 * s2)?;
    let d12 = (4.0 * fine - coarse) / 3.0;
    Ok((d1, d12))
}

/// Censoring rule: per-site empirical quantile level and an optional cap on
/// pair distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CensorSpec {
    /// Quantile level of the per-site threshold, in (0, 1).
    pub q: f64,
    /// Pairs farther apart than this are left out of the likelihood.
    pub max_distance: f64,
}

impl Default for CensorSpec {
    fn default() -> Self {
        CensorSpec { q: 0.9, max_distance: f64::INFINITY }
    }
}

/// One pair-replicate's censoring state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    /// Both observations at or below their thresholds.
    Below,
    /// Exactly one exceedance: its value and the other site's threshold.
    Mixed { z: f64, u: f64 },
    /// Both exceed.
    Above { z1: f64, z2: f64 },
    /// Dropped (degenerate pair with a single exceedance).
    Skip,
}

/// One site pair's censored replicates.
#[derive(Debug, Clone)]
pub struct PairCells {
    pub i: usize,
    pub j: usize,
    pub h: f64,
    pub u_i: f64,
    pub u_j: f64,
    /// Coincident sites: the pair carries marginal, not spatial, information.
    pub degenerate: bool,
    pub cells: Vec<Cell>,
    pub n_below: usize,
}

/// Censored data ready for likelihood evaluation.
#[derive(Debug, Clone)]
pub struct CensoredData {
    pub pairs: Vec<PairCells>,
    pub n_replicates: usize,
    pub q: f64,
}

/// Classify every pair-replicate of a unit Frechet sample against per-site
/// empirical thresholds at quantile level `spec.q`.
pub fn prepare_censored(sample: &SpatialSample, spec: &CensorSpec) -> Result<CensoredData> {
    if sample.margin != Margin::UnitFrechet {
        return Err(Error::Usage(
            "censoring thresholds require unit Frechet margins".into(),
        ));
    }
    if !(spec.q > 0.0 && spec.q < 1.0) {
        return Err(Error::Domain(format!(
            "censoring quantile must lie in (0, 1), got {}",
            spec.q
        )));
    }
    if !(spec.max_distance > 0.0) {
        return Err(Error::Domain(format!(
            "pair distance cap must be positive, got {}",
            spec.max_distance
        )));
    }
    let n = sample.n_replicates();
    let d = sample.n_sites();
    if n < 2 {
        return Err(Error::Data("censoring needs at least two replicates".into()));
    }
    if d < 2 {
        return Err(Error::Data("censoring needs at least two sites".into()));
    }
    let idx = ((spec.q * n as f64 - 1e-9).ceil() as usize).clamp(1, n) - 1;
    let mut thresholds = Vec::with_capacity(d);
    for j in 0..d {
        let mut col: Vec<f64> = sample.data.column(j).iter().copied().collect();
        col.sort_by(f64::total_cmp);
        thresholds.push(col[idx]);
    }

    let mut pairs = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            let h = sample.sites.distance(i, j);
            if h > spec.max_distance {
                continue;
            }
            let degenerate = h < DEGENERATE_DISTANCE;
            let (u_i, u_j) = (thresholds[i], thresholds[j]);
            let mut cells = Vec::with_capacity(n);
            let mut n_below = 0;
            for k in 0..n {
                let (z1, z2) = (sample.data[(k, i)], sample.data[(k, j)]);
                let cell = match (z1 > u_i, z2 > u_j) {
                    (false, false) => {
                        n_below += 1;
                        Cell::Below
                    }
                    (true, true) => Cell::Above { z1, z2 },
                    (true, false) if degenerate => Cell::Skip,
                    (false, true) if degenerate => Cell::Skip,
                    (true, false) => Cell::Mixed { z: z1, u: u_j },
                    (false, true) => Cell::Mixed { z: z2, u: u_i },
                };
                cells.push(cell);
            }
            pairs.push(PairCells { i, j, h, u_i, u_j, degenerate, cells, n_below });
        }
    }
    if pairs.is_empty() {
        return Err(Error::Data(format!(
            "no site pair within distance {}",
            spec.max_distance
        )));
    }
    Ok(CensoredData { pairs, n_replicates: n, q: spec.q })
}

fn ln_positive(p: f64, what: &str, h: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::Numeric(format!(
            "{what} is not positive ({p}) at h = {h}"
        )));
    }
    Ok(p.ln())
}

/// Log of the unit Frechet density z^-2 exp(-1/z).
fn ln_frechet_density(z: f64) -> f64 {
    -2.0 * z.ln() - 1.0 / z
}

fn cl_accumulate<F>(
    spec: &ModelSpec,
    data: &CensoredData,
    strict_two_cell: bool,
    mut sink: F,
) -> Result<()>
where
    F: FnMut(usize, f64),
{
    spec.validate()?;
    for pc in &data.pairs {
        let ln_below = if pc.n_below > 0 {
            ln_positive(
                bivariate_cdf_mm(spec, pc.h, pc.u_i, pc.u_j)?,
                "joint non-exceedance probability",
                pc.h,
            )?
        } else {
            0.0
        };
        for (k, cell) in pc.cells.iter().enumerate() {
            match *cell {
                Cell::Below => sink(k, ln_below),
                Cell::Skip => {}
                Cell::Mixed { z, u } => {
                    if !strict_two_cell {
                        let p = mixture_cdf_partials(spec, pc.h, z, u)?.d1;
                        sink(k, ln_positive(p, "censored pair density", pc.h)?);
                    }
                }
                Cell::Above { z1, z2 } => {
                    if pc.degenerate {
                        sink(k, ln_frechet_density(0.5 * (z1 + z2)));
                    } else {
                        let p = mixture_cdf_partials(spec, pc.h, z1, z2)?.d12;
                        sink(k, ln_positive(p, "joint exceedance density", pc.h)?);
                    }
                }
            }
        }
    }
    Ok(())
}

/// Censored pairwise log likelihood (to be maximized).
pub fn cl_objective(spec: &ModelSpec, data: &CensoredData, strict_two_cell: bool) -> Result<f64> {
    let mut total = 0.0;
    cl_accumulate(spec, data, strict_two_cell, |_, v| total += v)?;
    if !total.is_finite() {
        return Err(Error::Numeric("pairwise log likelihood overflowed".into()));
    }
    Ok(total)
}

/// Per-replicate censored pairwise log likelihoods; they sum to the
/// objective.
pub fn cl_per_replicate(
    spec: &ModelSpec,
    data: &CensoredData,
    strict_two_cell: bool,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; data.n_replicates];
    cl_accumulate(spec, data, strict_two_cell, |k, v| out[k] += v)?;
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("pairwise log likelihood overflowed".into()));
    }
    Ok(out)
}

/// Default finite-difference steps 1e-4 (1 + |psi_j|).
pub fn default_steps(psi: &[f64]) -> Vec<f64> {
    psi.iter().map(|p| 1e-4 * (1.0 + p.abs())).collect()
}

/// Center the difference stencil inside the box (the stencil must fit even
/// when the estimate sits on a bound).
fn shifted_center(psi: &[f64], steps: &[f64], bounds: &[Bound]) -> Result<Vec<f64>> {
    if psi.len() != steps.len() || psi.len() != bounds.len() {
        return Err(Error::Usage(format!(
            "parameter/step/bound lengths disagree: {} / {} / {}",
            psi.len(),
            steps.len(),
            bounds.len()
        )));
    }
    psi.iter()
        .zip(steps)
        .zip(bounds)
        .map(|((&p, &s), b)| {
            // diagonal and cross stencils move up to 2 steps from the center
            let (lo, hi) = (b.lo + 2.0 * s, b.hi - 2.0 * s);
            if lo > hi {
                return Err(Error::Usage(format!(
                    "box [{}, {}] too tight for step {s}",
                    b.lo, b.hi
                )));
            }
            Ok(p.clamp(lo, hi))
        })
        .collect()
}

/// Central-difference Hessian of a scalar objective, with the stencil shifted
/// inside the box at bounds.
pub fn numeric_hessian<F>(
    f: &F,
    psi: &[f64],
    steps: &[f64],
    bounds: &[Bound],
) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let d = psi.len();
    let c = shifted_center(psi, steps, bounds)?;
    let f0 = f(&c)?;
    let mut h = DMatrix::zeros(d, d);
    let at = |mut x: Vec<f64>, j: usize, s: f64| {
        x[j] += s;
        x
    };
    for j in 0..d {
        let fp = f(&at(c.clone(), j, steps[j]))?;
        let fm = f(&at(c.clone(), j, -steps[j]))?;
        h[(j, j)] = (fp - 2.0 * f0 + fm) / (steps[j] * steps[j]);
        for l in (j + 1)..d {
            let pp = f(&at(at(c.clone(), j, steps[j]), l, steps[l]))?;
            let pm = f(&at(at(c.clone(), j, steps[j]), l, -steps[l]))?;
            let mp = f(&at(at(c.clone(), j, -steps[j]), l, steps[l]))?;
            let mm = f(&at(at(c.clone(), j, -steps[j]), l, -steps[l]))?;
            let v = (pp - pm - mp + mm) / (4.0 * steps[j] * steps[l]);
            h[(j, l)] = v;
            h[(l, j)] = v;
        }
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("Hessian lost finiteness".into()));
    }
    Ok(h)
}

/// Trace of the Godambe penalty tr(H^-1 J) for a per-replicate log
/// likelihood: H is the negative Hessian of the summed objective, J the sum
/// of per-replicate gradient outer products. The boolean reports whether a
/// ridge was needed to invert H.
pub fn godambe_trace<F>(
    f: &F,
    psi: &[f64],
    steps: &[f64],
    bounds: &[Bound],
) -> Result<(f64, bool)>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let d = psi.len();
    let c = shifted_center(psi, steps, bounds)?;
    let n = f(&c)?.len();
    if n < 2 {
        return Err(Error::Data("need at least two replicates".into()));
    }

    let at = |mut x: Vec<f64>, j: usize, s: f64| {
        x[j] += s;
        x
    };
    let mut grads = DMatrix::zeros(n, d);
    for j in 0..d {
        let vp = f(&at(c.clone(), j, steps[j]))?;
        let vm = f(&at(c.clone(), j, -steps[j]))?;
        if vp.len() != n || vm.len() != n {
            return Err(Error::Data("per-replicate length changed between calls".into()));
        }
        for k in 0..n {
            grads[(k, j)] = (vp[k] - vm[k]) / (2.0 * steps[j]);
        }
    }
    let j_mat = grads.transpose() * &grads;

    let total = |psi: &[f64]| f(psi).map(|v| v.iter().sum::<f64>());
    let hessian = numeric_hessian(&total, &c, steps, bounds)?;
    let m = -hessian;

    let mut singular = false;
    let solved = m.clone().lu().solve(&j_mat).filter(|x| x.iter().all(|v| v.is_finite()));
    let x = match solved {
        Some(x) => x,
        None => {
            singular = true;
            let lambda = (1e-8 * m.diagonal().iter().map(|v| v.abs()).sum::<f64>() / d as f64)
                .max(1e-12);
            let ridged = &m + DMatrix::identity(d, d) * lambda;
            ridged
                .lu()
                .solve(&j_mat)
                .filter(|x| x.iter().all(|v| v.is_finite()))
                .ok_or_else(|| {
                    Error::Numeric("sensitivity matrix is singular even with ridge".into())
                })?
        }
    };
    Ok((x.trace(), singular))
}
