//! Bounded Nelder-Mead: box constraints via logistic reparametrization,
//! plus a quasi-random multi-start driver.

use crate::error::{Error, Result};
use crate::simulate::mix64;

/// How a parameter's box is traversed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// Logistic between the bounds.
    Linear,
    /// Logistic between the bounds in log space (both bounds positive).
    Log,
}

/// One parameter's box constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub lo: f64,
    pub hi: f64,
    pub scale: Scale,
}

impl Bound {
    pub fn linear(lo: f64, hi: f64) -> Self {
        Bound { lo, hi, scale: Scale::Linear }
    }

    pub fn log(lo: f64, hi: f64) -> Self {
        Bound { lo, hi, scale: Scale::Log }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::Usage(format!(
                "bound must satisfy lo < hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        if self.scale == Scale::Log && self.lo <= 0.0 {
            return Err(Error::Usage(format!(
                "log-scale bound needs lo > 0, got {}",
                self.lo
            )));
        }
        Ok(())
    }
}

fn logistic(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

fn logit(u: f64) -> f64 {
    let u = u.clamp(1e-12, 1.0 - 1e-12);
    (u / (1.0 - u)).ln()
}

/// Smooth bijection between unconstrained coordinates and a parameter box.
#[derive(Debug, Clone)]
pub struct BoxTransform {
    bounds: Vec<Bound>,
}

impl BoxTransform {
    pub fn new(bounds: Vec<Bound>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::Usage("need at least one parameter".into()));
        }
        for b in &bounds {
            b.validate()?;
        }
        Ok(BoxTransform { bounds })
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    /// Map one unconstrained coordinate into its box.
    fn to_param(&self, j: usize, t: f64) -> f64 {
        let b = &self.bounds[j];
        let u = logistic(t);
        match b.scale {
            Scale::Linear => b.lo + (b.hi - b.lo) * u,
            Scale::Log => (b.lo.ln() + (b.hi.ln() - b.lo.ln()) * u).exp(),
        }
    }

    /// Map one parameter to its unconstrained coordinate.
    fn to_free(&self, j: usize, psi: f64) -> f64 {
        let b = &self.bounds[j];
        match b.scale {
            Scale::Linear => logit((psi - b.lo) / (b.hi - b.lo)),
            Scale::Log => logit((psi.ln() - b.lo.ln()) / (b.hi.ln() - b.lo.ln())),
        }
    }

    pub fn params(&self, t: &[f64]) -> Vec<f64> {
        (0..self.dim()).map(|j| self.to_param(j, t[j])).collect()
    }

    pub fn free(&self, psi: &[f64]) -> Vec<f64> {
        (0..self.dim()).map(|j| self.to_free(j, psi[j])).collect()
    }

    pub fn bounds(&self) -> &[Bound] {
        &self.bounds
    }

    /// Parameter vector at given box fractions (0, 1).
    pub fn at_fractions(&self, u: &[f64]) -> Vec<f64> {
        (0..self.dim()).map(|j| self.to_param(j, logit(u[j]))).collect()
    }
}

/// Outcome of one local minimization.
#[derive(Debug, Clone)]
pub struct MinResult {
    pub psi: Vec<f64>,
    pub value: f64,
    pub n_evals: usize,
    pub converged: bool,
}

/// One multi-start run's bookkeeping.
#[derive(Debug, Clone)]
pub struct StartTrace {
    pub start: Vec<f64>,
    pub psi: Vec<f64>,
    pub value: f64,
    pub n_evals: usize,
    pub converged: bool,
}

/// Nelder-Mead on the unconstrained coordinates; stops when the simplex
/// diameter (infinity norm around the best vertex) drops below `tol` or the
/// evaluation budget runs out. `f` returns the objective to minimize, with
/// failures encoded as +infinity.
fn nelder_mead<F>(f: &F, t0: &[f64], step: f64, tol: f64, max_evals: usize) -> (Vec<f64>, f64, usize, bool)
where
    F: Fn(&[f64]) -> f64,
{
    let d = t0.len();
    let mut evals = 0usize;
    let eval = |t: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(t);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    let v0 = eval(t0, &mut evals);
    simplex.push((t0.to_vec(), v0));
    for j in 0..d {
        let mut t = t0.to_vec();
        t[j] += step;
        let v = eval(&t, &mut evals);
        simplex.push((t, v));
    }

    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diameter = simplex[1..]
            .iter()
            .map(|(t, _)| {
                t.iter()
                    .zip(simplex[0].0.iter())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0_f64, f64::max)
            })
            .fold(0.0_f64, f64::max);
        if diameter < tol {
            converged = true;
            break;
        }
        if evals >= max_evals {
            break;
        }

        let centroid: Vec<f64> = (0..d)
            .map(|j| simplex[..d].iter().map(|(t, _)| t[j]).sum::<f64>() / d as f64)
            .collect();
        let worst = simplex[d].clone();
        let along = |c: f64| -> Vec<f64> {
            (0..d)
                .map(|j| centroid[j] + c * (centroid[j] - worst.0[j]))
                .collect()
        };

        let reflected = along(1.0);
        let vr = eval(&reflected, &mut evals);
        if vr < simplex[0].1 {
            let expanded = along(2.0);
            let ve = eval(&expanded, &mut evals);
            simplex[d] = if ve < vr { (expanded, ve) } else { (reflected, vr) };
            continue;
        }
        if vr < simplex[d - 1].1 {
            simplex[d] = (reflected, vr);
            continue;
        }
        let contracted = if vr < worst.1 { along(0.5) } else { along(-0.5) };
        let vc = eval(&contracted, &mut evals);
        if vc < vr.min(worst.1) {
            simplex[d] = (contracted, vc);
            continue;
        }
        // shrink toward the best vertex
        for k in 1..=d {
            let t: Vec<f64> = (0..d)
                .map(|j| 0.5 * (simplex[0].0[j] + simplex[k].0[j]))
                .collect();
            let v = eval(&t, &mut evals);
            simplex[k] = (t, v);
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let best = simplex.swap_remove(0);
    (best.0, best.1, evals, converged)
}

/// Box fractions of the n-th point of a Kronecker low-discrepancy sequence,
/// offset deterministically by `seed`.
fn kronecker_fractions(d: usize, seed: u64, n: usize) -> Vec<f64> {
    // generalized golden ratio: the root of x^(d+1) = x + 1
    let mut phi = 2.0_f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
    }
    (0..d)
        .map(|j| {
            let alpha = phi.powi(-(j as i32 + 1));
            let offset = mix64(seed ^ (j as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)) as f64
                / u64::MAX as f64;
            let u = (offset + (n + 1) as f64 * alpha).fract();
            // keep starts away from the logit asymptotes
            0.02 + 0.96 * u
        })
        .collect()
}

/// Pick start points for the local searches: quasi-random probes of the box,
/// screened by objective value and kept mutually separated in the
/// unconstrained coordinates so the searches explore distinct basins.
fn screened_starts<F>(
    f_t: &F,
    transform: &BoxTransform,
    n_wanted: usize,
    n_probes: usize,
    seed: u64,
) -> Vec<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    let d = transform.dim();
    let n_probes = n_probes.max(n_wanted);
    let mut probes: Vec<(Vec<f64>, f64)> = (0..n_probes)
        .map(|k| {
            let t: Vec<f64> = kronecker_fractions(d, seed, k)
                .into_iter()
                .map(|u| (u / (1.0 - u)).ln())
                .collect();
            let v = f_t(&t);
            (t, v)
        })
        .collect();
    probes.sort_by(|a, b| a.1.total_cmp(&b.1));
    let far_enough = |t: &[f64], chosen: &[Vec<f64>]| {
        chosen.iter().all(|c| {
            t.iter()
                .zip(c.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0_f64, f64::max)
                >= 1.0
        })
    };
    let mut chosen: Vec<Vec<f64>> = Vec::with_capacity(n_wanted);
    for (t, _) in &probes {
        if chosen.len() == n_wanted {
            break;
        }
        if far_enough(t, &chosen) {
            chosen.push(t.clone());
        }
    }
    // not enough well-separated probes: fill with the best remaining ones
    for (t, _) in &probes {
        if chosen.len() == n_wanted {
            break;
        }
        if !chosen.contains(t) {
            chosen.push(t.clone());
        }
    }
    chosen
}

/// Minimize over a box: explicit starts first, then the best of `n_probes`
/// quasi-random probe points, up to `n_starts` local searches in total.
/// Returns the best local minimum and the per-start traces.
#[allow(clippy::too_many_arguments)]
pub fn minimize_multistart<F>(
    f: &F,
    transform: &BoxTransform,
    explicit_starts: &[Vec<f64>],
    n_starts: usize,
    n_probes: usize,
    seed: u64,
    tol: f64,
    max_evals: usize,
) -> Result<(MinResult, Vec<StartTrace>)>
where
    F: Fn(&[f64]) -> f64,
{
    if n_starts == 0 {
        return Err(Error::Usage("need at least one start".into()));
    }
    let d = transform.dim();
    let f_t = |t: &[f64]| f(&transform.params(t));

    let mut start_ts: Vec<Vec<f64>> = Vec::with_capacity(n_starts);
    for s in explicit_starts.iter().take(n_starts) {
        if s.len() != d {
            return Err(Error::Usage(format!(
                "start has {} parameters, expected {d}",
                s.len()
            )));
        }
        start_ts.push(transform.free(s));
    }
    let mut probe_evals = 0;
    if start_ts.len() < n_starts {
        let wanted = n_starts - start_ts.len();
        probe_evals = n_probes.max(wanted);
        start_ts.extend(screened_starts(&f_t, transform, wanted, n_probes, seed));
    }

    let mut traces = Vec::with_capacity(start_ts.len());
    let mut best: Option<MinResult> = None;
    for t0 in &start_ts {
        let (t, value, n_evals, converged) = nelder_mead(&f_t, t0, 0.5, tol, max_evals);
        let psi = transform.params(&t);
        traces.push(StartTrace {
            start: transform.params(t0),
            psi: psi.clone(),
            value,
            n_evals,
            converged,
        });
        let better = best.as_ref().map_or(true, |b| value < b.value);
        if better {
            best = Some(MinResult { psi, value, n_evals, converged });
        }
    }
    let mut best = best.expect("at least one start");
    best.n_evals = traces.iter().map(|t| t.n_evals).sum::<usize>() + probe_evals;
    if !best.value.is_finite() {
        return Err(Error::NonConvergence(
            "objective was not finite at any visited point".into(),
        ));
    }
    Ok((best, traces))
}
