//! Rank transforms and empirical dependence summaries: the F-madogram cloud,
//! distance/direction binning, and threshold exceedance measures.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulate::{Margin, SiteSet, SpatialSample};

/// One ordered site pair (i < j) with its separation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairInfo {
    pub i: usize,
    pub j: usize,
    pub h: f64,
    /// Angle from north of the separation vector, reduced to (-pi/2, pi/2].
    pub angle: f64,
}

/// Per-pair F-madogram estimates.
///
/// `y_bar` and `y_sq_bar` hold the first two moments of the per-replicate
/// terms |U_i - U_j| / 2, which make least-squares objectives exact without
/// retaining the terms; `y_terms` keeps them anyway when requested.
#[derive(Debug, Clone, PartialEq)]
pub struct MadogramCloud {
    pub pairs: Vec<PairInfo>,
    pub y_bar: Vec<f64>,
    pub y_sq_bar: Vec<f64>,
    /// Replicates entering each pair (equal for complete data).
    pub counts: Vec<usize>,
    pub n_replicates: usize,
    pub y_terms: Option<Vec<Vec<f64>>>,
}

/// Distance-binned madogram estimates (empty bins dropped).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedMadogram {
    pub centers: Vec<f64>,
    pub counts: Vec<usize>,
    pub nu: Vec<f64>,
}

/// How to partition pair distances into bins.
#[derive(Debug, Clone, PartialEq)]
pub enum BinSpec {
    /// Equal-width bins spanning (0, max pair distance].
    EqualWidth(usize),
    /// Explicit ascending bin edges.
    Edges(Vec<f64>),
}

impl Default for BinSpec {
    fn default() -> Self {
        BinSpec::EqualWidth(15)
    }
}

/// Average-tie ranks mapped to (0, 1) by r / (N + 1).
fn column_uniform_scores(col: &[f64]) -> Vec<f64> {
    let n = col.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
    let mut scores = vec![0.0; n];
    let denom = (n + 1) as f64;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && col[order[end]] == col[order[start]] {
            end += 1;
        }
        // mean of 1-based ranks start+1 ..= end
        let mean_rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            scores[idx] = mean_rank / denom;
        }
        start = end;
    }
    scores
}

fn is_constant(col: &[f64]) -> bool {
    col.iter().all(|&v| v == col[0])
}

/// Replace each column by its average-tie uniform scores r / (N + 1).
///
/// Errors on a constant column, which has no usable ranks.
pub fn empirical_cdf_transform(sample: &SpatialSample) -> Result<SpatialSample> {
    let n = sample.n_replicates();
    let d = sample.n_sites();
    let mut data = DMatrix::zeros(n, d);
    for j in 0..d {
        let col: Vec<f64> = sample.data.column(j).iter().copied().collect();
        if is_constant(&col) {
            return Err(Error::Data(format!(
                "site {} is constant; ranks are degenerate",
                sample.sites.ids[j]
            )));
        }
        for (k, u) in column_uniform_scores(&col).into_iter().enumerate() {
            data[(k, j)] = u;
        }
    }
    SpatialSample::new(sample.sites.clone(), data, Margin::Raw)
}

/// Unit Frechet quantile of a uniform score.
pub fn frechet_quantile(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(format!("quantile needs u in (0, 1), got {u}")));
    }
    Ok(-1.0 / u.ln())
}

/// Rank-transform to uniform scores, then map through the unit Frechet
/// quantile -1 / ln(u).
pub fn rank_transform_frechet(sample: &SpatialSample) -> Result<SpatialSample> {
    let uniform = empirical_cdf_transform(sample)?;
    let data = uniform.data.map(|u| -1.0 / u.ln());
    SpatialSample::new(sample.sites.clone(), data, Margin::UnitFrechet)
}

fn pair_geometry(sites: &SiteSet) -> Vec<PairInfo> {
    let d = sites.len();
    let mut pairs = Vec::with_capacity(d * (d - 1) / 2);
    for i in 0..d {
        for j in (i + 1)..d {
            let (xi, yi) = sites.coords[i];
            let (xj, yj) = sites.coords[j];
            let (dx, dy) = (xj - xi, yj - yi);
            let mut angle = dx.atan2(dy);
            if angle <= -std::f64::consts::FRAC_PI_2 {
                angle += std::f64::consts::PI;
            } else if angle > std::f64::consts::FRAC_PI_2 {
                angle -= std::f64::consts::PI;
            }
            pairs.push(PairInfo { i, j, h: sites.distance(i, j), angle });
        }
    }
    pairs
}

fn cloud_from_scores(
    sites: &SiteSet,
    scores: &DMatrix<f64>,
    keep_terms: bool,
) -> MadogramCloud {
    let pairs = pair_geometry(sites);
    let n = scores.nrows();
    let mut y_bar = Vec::with_capacity(pairs.len());
    let mut y_sq_bar = Vec::with_capacity(pairs.len());
    let mut terms_store = keep_terms.then(Vec::new);
    for p in &pairs {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut terms = keep_terms.then(|| Vec::with_capacity(n));
        for k in 0..n {
            let y = 0.5 * (scores[(k, p.i)] - scores[(k, p.j)]).abs();
            sum += y;
            sum_sq += y * y;
            if let Some(t) = terms.as_mut() {
                t.push(y);
            }
        }
        y_bar.push(sum / n as f64);
        y_sq_bar.push(sum_sq / n as f64);
        if let (Some(store), Some(t)) = (terms_store.as_mut(), terms) {
            store.push(t);
        }
    }
    MadogramCloud {
        counts: vec![n; pairs.len()],
        pairs,
        y_bar,
        y_sq_bar,
        n_replicates: n,
        y_terms: terms_store,
    }
}

/// Empirical F-madogram over all site pairs.
///
/// With `use_true_frechet` the uniform scores are exp(-1/z) from the known
/// margin (the sample must be unit Frechet); otherwise average-tie rank
/// scores are used, and a constant column simply yields tied scores 1/2
/// rather than an error.
pub fn empirical_fmadogram(
    sample: &SpatialSample,
    use_true_frechet: bool,
    keep_terms: bool,
) -> Result<MadogramCloud> {
    if sample.n_sites() < 2 {
        return Err(Error::Usage("madogram needs at least two sites".into()));
    }
    let scores = if use_true_frechet {
        if sample.margin != Margin::UnitFrechet {
            return Err(Error::Usage(
                "use_true_frechet requires unit Frechet margins".into(),
            ));
        }
        sample.data.map(|z| (-1.0 / z).exp())
    } else {
        let n = sample.n_replicates();
        let d = sample.n_sites();
        let mut scores = DMatrix::zeros(n, d);
        for j in 0..d {
            let col: Vec<f64> = sample.data.column(j).iter().copied().collect();
            for (k, u) in column_uniform_scores(&col).into_iter().enumerate() {
                scores[(k, j)] = u;
            }
        }
        scores
    };
    Ok(cloud_from_scores(&sample.sites, &scores, keep_terms))
}

/// Empirical F-madogram tolerating missing values (NaN).
///
/// Each pair is re-ranked over the replicates where both sites are observed;
/// pairs with fewer than two complete replicates are dropped.
pub fn empirical_fmadogram_masked(
    sites: &SiteSet,
    data: &DMatrix<f64>,
    keep_terms: bool,
) -> Result<MadogramCloud> {
    if sites.len() < 2 {
        return Err(Error::Usage("madogram needs at least two sites".into()));
    }
    if data.ncols() != sites.len() {
        return Err(Error::Data(format!(
            "{} data columns for {} sites",
            data.ncols(),
            sites.len()
        )));
    }
    let all_pairs = pair_geometry(sites);
    let mut pairs = Vec::new();
    let mut y_bar = Vec::new();
    let mut y_sq_bar = Vec::new();
    let mut counts = Vec::new();
    let mut terms_store = keep_terms.then(Vec::new);
    for p in &all_pairs {
        let mut zi = Vec::new();
        let mut zj = Vec::new();
        for k in 0..data.nrows() {
            let (a, b) = (data[(k, p.i)], data[(k, p.j)]);
            if a.is_finite() && b.is_finite() {
                zi.push(a);
                zj.push(b);
            }
        }
        let m = zi.len();
        if m < 2 {
            continue;
        }
        let ui = column_uniform_scores(&zi);
        let uj = column_uniform_scores(&zj);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut terms = keep_terms.then(|| Vec::with_capacity(m));
        for k in 0..m {
            let y = 0.5 * (ui[k] - uj[k]).abs();
            sum += y;
            sum_sq += y * y;
            if let Some(t) = terms.as_mut() {
                t.push(y);
            }
        }
        pairs.push(*p);
        y_bar.push(sum / m as f64);
        y_sq_bar.push(sum_sq / m as f64);
        counts.push(m);
        if let (Some(store), Some(t)) = (terms_store.as_mut(), terms) {
            store.push(t);
        }
    }
    if pairs.is_empty() {
        return Err(Error::Data(
            "no site pair has two complete replicates".into(),
        ));
    }
    Ok(MadogramCloud {
        pairs,
        y_bar,
        y_sq_bar,
        counts,
        n_replicates: data.nrows(),
        y_terms: terms_store,
    })
}

fn bin_edges(cloud: &MadogramCloud, spec: &BinSpec) -> Result<Vec<f64>> {
    match spec {
        BinSpec::EqualWidth(k) => {
            if *k == 0 {
                return Err(Error::Usage("need at least one bin".into()));
            }
            let hmax = cloud.pairs.iter().map(|p| p.h).fold(0.0_f64, f64::max);
            if hmax <= 0.0 {
                return Err(Error::Data("all pair distances are zero".into()));
            }
            let w = hmax / *k as f64;
            Ok((0..=*k).map(|i| i as f64 * w).collect())
        }
        BinSpec::Edges(e) => {
            if e.len() < 2 || e.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Usage("bin edges must be ascending".into()));
            }
            Ok(e.clone())
        }
    }
}

fn bin_cloud_subset(cloud: &MadogramCloud, keep: &[bool], edges: &[f64]) -> BinnedMadogram {
    let nb = edges.len() - 1;
    let mut sums = vec![0.0; nb];
    let mut counts = vec![0usize; nb];
    for (idx, p) in cloud.pairs.iter().enumerate() {
        if !keep[idx] {
            continue;
        }
        // half-open (lo, hi], with the first bin closed at its left edge
        let b = edges[..nb]
            .iter()
            .zip(edges[1..].iter())
            .position(|(&lo, &hi)| (p.h > lo || (p.h == edges[0])) && p.h <= hi);
        if let Some(b) = b {
            sums[b] += cloud.y_bar[idx];
            counts[b] += 1;
        }
    }
    let mut out = BinnedMadogram { centers: Vec::new(), counts: Vec::new(), nu: Vec::new() };
    for b in 0..nb {
        if counts[b] == 0 {
            continue;
        }
        out.centers.push(0.5 * (edges[b] + edges[b + 1]));
        out.counts.push(counts[b]);
        out.nu.push(sums[b] / counts[b] as f64);
    }
    out
}

/// Bin a madogram cloud by distance; empty bins are dropped.
pub fn bin_madogram(cloud: &MadogramCloud, spec: &BinSpec) -> Result<BinnedMadogram> {
    let edges = bin_edges(cloud, spec)?;
    Ok(bin_cloud_subset(cloud, &vec![true; cloud.pairs.len()], &edges))
}

impl BinnedMadogram {
    /// Centered moving average of the binned values (window must be odd).
    pub fn smooth(&self, window: usize) -> Result<BinnedMadogram> {
        if window == 0 || window % 2 == 0 {
            return Err(Error::Usage(format!(
                "smoothing window must be odd, got {window}"
            )));
        }
        let half = window / 2;
        let n = self.nu.len();
        let mut nu = Vec::with_capacity(n);
        for i in 0..n {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            nu.push(self.nu[lo..hi].iter().sum::<f64>() / (hi - lo) as f64);
        }
        Ok(BinnedMadogram { centers: self.centers.clone(), counts: self.counts.clone(), nu })
    }
}

/// The four default direction sectors, centered on N, NE, E, SE.
pub fn default_sectors() -> Vec<(f64, f64)> {
    let pi = std::f64::consts::PI;
    vec![
        (-pi / 8.0, pi / 8.0),
        (pi / 8.0, 3.0 * pi / 8.0),
        (3.0 * pi / 8.0, 5.0 * pi / 8.0),
        (5.0 * pi / 8.0, 7.0 * pi / 8.0),
    ]
}

/// A direction sector's binned madogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorMadogram {
    pub lo: f64,
    pub hi: f64,
    pub binned: BinnedMadogram,
}

fn angle_in_sector(angle: f64, lo: f64, hi: f64) -> bool {
    let pi = std::f64::consts::PI;
    // pair angles are defined modulo pi
    [angle - pi, angle, angle + pi]
        .iter()
        .any(|&a| a > lo && a <= hi)
}

/// Bin the madogram separately within each direction sector (half-open
/// (lo, hi], interpreted modulo pi).
pub fn directional_madogram(
    cloud: &MadogramCloud,
    sectors: &[(f64, f64)],
    bins: &BinSpec,
) -> Result<Vec<SectorMadogram>> {
    if sectors.is_empty() {
        return Err(Error::Usage("need at least one sector".into()));
    }
    let edges = bin_edges(cloud, bins)?;
    let mut out = Vec::with_capacity(sectors.len());
    for &(lo, hi) in sectors {
        if !(hi > lo) {
            return Err(Error::Usage(format!("empty sector ({lo}, {hi}]")));
        }
        let keep: Vec<bool> = cloud
            .pairs
            .iter()
            .map(|p| angle_in_sector(p.angle, lo, hi))
            .collect();
        out.push(SectorMadogram { lo, hi, binned: bin_cloud_subset(cloud, &keep, &edges) });
    }
    Ok(out)
}

fn uniform_scores_for_pair(sample: &SpatialSample, i: usize, j: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = sample.n_sites();
    if i >= d || j >= d || i == j {
        return Err(Error::Usage(format!("invalid site pair ({i}, {j})")));
    }
    let col = |j: usize| -> Vec<f64> { sample.data.column(j).iter().copied().collect() };
    Ok((
        column_uniform_scores(&col(i)),
        column_uniform_scores(&col(j)),
    ))
}

/// Empirical chi(u) for one site pair:
/// 2 - ln p(U_i <= u, U_j <= u) / ln p(U <= u), marginal probability pooled
/// over both sites. Ranks are recomputed from the sample.
pub fn empirical_chi(sample: &SpatialSample, i: usize, j: usize, u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(format!("threshold u must lie in (0, 1), got {u}")));
    }
    let (ui, uj) = uniform_scores_for_pair(sample, i, j)?;
    let n = ui.len() as f64;
    let joint = ui.iter().zip(uj.iter()).filter(|(a, b)| **a <= u && **b <= u).count() as f64 / n;
    let marg = (ui.iter().filter(|&&a| a <= u).count()
        + uj.iter().filter(|&&b| b <= u).count()) as f64
        / (2.0 * n);
    if joint <= 0.0 {
        return Err(Error::Numeric(format!(
            "no joint non-exceedances at u = {u}; threshold too low"
        )));
    }
    if marg >= 1.0 {
        return Err(Error::Numeric(format!(
            "all scores below u = {u}; threshold too high"
        )));
    }
    Ok(2.0 - joint.ln() / marg.ln())
}

/// Empirical chi-bar(u) for one site pair:
/// 2 ln p(U > u) / ln p(U_i > u, U_j > u) - 1, marginal pooled over both
/// sites.
pub fn empirical_chibar(sample: &SpatialSample, i: usize, j: usize, u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(format!("threshold u must lie in (0, 1), got {u}")));
    }
    let (ui, uj) = uniform_scores_for_pair(sample, i, j)?;
    let n = ui.len() as f64;
    let joint = ui.iter().zip(uj.iter()).filter(|(a, b)| **a > u && **b > u).count() as f64 / n;
    let marg = (ui.iter().filter(|&&a| a > u).count()
        + uj.iter().filter(|&&b| b > u).count()) as f64
        / (2.0 * n);
    if joint <= 0.0 {
        return Err(Error::Numeric(format!(
            "no joint exceedances at u = {u}; threshold too high"
        )));
    }
    if marg <= 0.0 {
        return Err(Error::Numeric(format!(
            "no marginal exceedances at u = {u}; threshold too high"
        )));
    }
    Ok(2.0 * marg.ln() / joint.ln() - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{Margin, SiteSet};

    fn two_site_sample(col1: Vec<f64>, col2: Vec<f64>) -> SpatialSample {
        let n = col1.len();
        let sites =
            SiteSet::new(vec!["a".into(), "b".into()], vec![(0.0, 0.0), (1.0, 0.0)]).unwrap();
        let data = DMatrix::from_fn(n, 2, |k, j| if j == 0 { col1[k] } else { col2[k] });
        SpatialSample::new(sites, data, Margin::Raw).unwrap()
    }

    #[test]
    fn uniform_scores_average_ties() {
        let scores = column_uniform_scores(&[3.0, 1.0, 3.0, 2.0]);
        // ranks: 1.0 -> 1, 2.0 -> 2, ties at 3.0 -> (3+4)/2
        assert_eq!(scores, vec![3.5 / 5.0, 1.0 / 5.0, 3.5 / 5.0, 2.0 / 5.0]);
    }

    #[test]
    fn transform_is_idempotent_without_ties() {
        let s = two_site_sample(vec![0.4, 0.9, 0.1, 0.6], vec![5.0, 2.0, 8.0, 1.0]);
        let once = empirical_cdf_transform(&s).unwrap();
        let twice = empirical_cdf_transform(&once).unwrap();
        assert_eq!(once.data, twice.data);
    }

    #[test]
    fn strict_transform_rejects_constant_column() {
        let s = two_site_sample(vec![1.0, 1.0, 1.0], vec![1.0, 2.0, 3.0]);
        assert!(matches!(empirical_cdf_transform(&s), Err(Error::Data(_))));
    }

    #[test]
    fn frechet_transform_hits_reference_quantile() {
        assert!((frechet_quantile(0.9).unwrap() - 9.4912215810299030).abs() < 1e-13);
        let s = two_site_sample(vec![2.0, 1.0, 3.0], vec![1.0, 2.0, 3.0]);
        let f = rank_transform_frechet(&s).unwrap();
        assert_eq!(f.margin, Margin::UnitFrechet);
        // score 3/4 -> -1/ln(0.75)
        let want = -1.0 / 0.75_f64.ln();
        assert!((f.data[(2, 0)] - want).abs() < 1e-14);
    }

    #[test]
    fn comonotone_pair_has_zero_madogram() {
        let s = two_site_sample(vec![1.0, 5.0, 3.0, 2.0], vec![10.0, 50.0, 30.0, 20.0]);
        let cloud = empirical_fmadogram(&s, false, false).unwrap();
        assert_eq!(cloud.pairs.len(), 1);
        assert_eq!(cloud.y_bar[0], 0.0);
    }

    #[test]
    fn antitone_pair_of_two_hits_upper_value() {
        // N = 2 with opposite order: |u1 - u2| = 1/3 both replicates
        let s = two_site_sample(vec![1.0, 2.0], vec![2.0, 1.0]);
        let cloud = empirical_fmadogram(&s, false, false).unwrap();
        assert!((cloud.y_bar[0] - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn constant_column_yields_zero_madogram_in_tolerant_path() {
        let s = two_site_sample(vec![4.0, 4.0, 4.0], vec![4.0, 4.0, 4.0]);
        let cloud = empirical_fmadogram(&s, false, false).unwrap();
        assert_eq!(cloud.y_bar[0], 0.0);
    }

    #[test]
    fn true_frechet_scores_match_known_margin() {
        let sites =
            SiteSet::new(vec!["a".into(), "b".into()], vec![(0.0, 0.0), (0.0, 1.0)]).unwrap();
        let data = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.5, 1.0]);
        let s = SpatialSample::new(sites, data, Margin::UnitFrechet).unwrap();
        let cloud = empirical_fmadogram(&s, true, true).unwrap();
        let u = |z: f64| (-1.0 / z).exp();
        let want0 = 0.5 * (u(1.0) - u(2.0)).abs();
        let want1 = 0.5 * (u(0.5) - u(1.0)).abs();
        let terms = cloud.y_terms.as_ref().unwrap();
        assert!((terms[0][0] - want0).abs() < 1e-15);
        assert!((terms[0][1] - want1).abs() < 1e-15);
        assert!((cloud.y_bar[0] - 0.5 * (want0 + want1)).abs() < 1e-15);
    }

    #[test]
    fn moment_fields_are_consistent_with_terms() {
        let s = two_site_sample(vec![0.4, 0.9, 0.1, 0.6], vec![5.0, 2.0, 8.0, 1.0]);
        let cloud = empirical_fmadogram(&s, false, true).unwrap();
        let terms = &cloud.y_terms.as_ref().unwrap()[0];
        let mean = terms.iter().sum::<f64>() / terms.len() as f64;
        let mean_sq = terms.iter().map(|y| y * y).sum::<f64>() / terms.len() as f64;
        assert!((cloud.y_bar[0] - mean).abs() < 1e-15);
        assert!((cloud.y_sq_bar[0] - mean_sq).abs() < 1e-15);
    }

    #[test]
    fn pair_angles_follow_north_convention() {
        let sites = SiteSet::new(
            vec!["o".into(), "n".into(), "e".into(), "ne".into()],
            vec![(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)],
        )
        .unwrap();
        let pairs = pair_geometry(&sites);
        let angle_of = |i: usize, j: usize| {
            pairs.iter().find(|p| p.i == i && p.j == j).unwrap().angle
        };
        assert!((angle_of(0, 1) - 0.0).abs() < 1e-15); // due north
        assert!((angle_of(0, 2) - std::f64::consts::FRAC_PI_2).abs() < 1e-15); // due east
        assert!((angle_of(0, 3) - std::f64::consts::FRAC_PI_4).abs() < 1e-15); // northeast
    }

    #[test]
    fn binning_partitions_pairs() {
        let sites = SiteSet::from_coords(
            (0..6).map(|i| (i as f64 * 0.1, 0.0)).collect::<Vec<_>>(),
        )
        .unwrap();
        let data = DMatrix::from_fn(8, 6, |k, j| ((k * 7 + j * 3) % 11) as f64);
        let s = SpatialSample::new(sites, data, Margin::Raw).unwrap();
        let cloud = empirical_fmadogram(&s, false, false).unwrap();
        let binned = bin_madogram(&cloud, &BinSpec::EqualWidth(5)).unwrap();
        assert_eq!(binned.counts.iter().sum::<usize>(), cloud.pairs.len());
        let one = bin_madogram(&cloud, &BinSpec::EqualWidth(1)).unwrap();
        assert_eq!(one.counts, vec![cloud.pairs.len()]);
        let pooled: f64 = cloud.y_bar.iter().sum::<f64>() / cloud.pairs.len() as f64;
        assert!((one.nu[0] - pooled).abs() < 1e-15);
    }

    #[test]
    fn directional_sectors_cover_every_pair_once() {
        let sites = SiteSet::from_coords(vec![
            (0.0, 0.0),
            (0.3, 0.9),
            (0.8, 0.1),
            (0.5, 0.5),
            (0.9, 0.8),
        ])
        .unwrap();
        let data = DMatrix::from_fn(6, 5, |k, j| ((k * 5 + j * 7) % 13) as f64);
        let s = SpatialSample::new(sites, data, Margin::Raw).unwrap();
        let cloud = empirical_fmadogram(&s, false, false).unwrap();
        let sectors = default_sectors();
        let per = directional_madogram(&cloud, &sectors, &BinSpec::EqualWidth(1)).unwrap();
        let total: usize = per
            .iter()
            .map(|s| s.binned.counts.iter().sum::<usize>())
            .sum();
        assert_eq!(total, cloud.pairs.len());
    }

    #[test]
    fn masked_cloud_matches_complete_case_when_nothing_is_missing() {
        let s = two_site_sample(vec![0.4, 0.9, 0.1, 0.6], vec![5.0, 2.0, 8.0, 1.0]);
        let full = empirical_fmadogram(&s, false, false).unwrap();
        let masked = empirical_fmadogram_masked(&s.sites, &s.data, false).unwrap();
        assert_eq!(full.y_bar, masked.y_bar);
        assert_eq!(masked.counts, vec![4]);
    }

    #[test]
    fn masked_cloud_uses_pairwise_complete_replicates() {
        let sites =
            SiteSet::new(vec!["a".into(), "b".into()], vec![(0.0, 0.0), (1.0, 0.0)]).unwrap();
        let data = DMatrix::from_row_slice(
            4,
            2,
            &[1.0, 2.0, f64::NAN, 3.0, 2.0, 1.0, 4.0, 4.0],
        );
        let cloud = empirical_fmadogram_masked(&sites, &data, false).unwrap();
        assert_eq!(cloud.counts, vec![3]);
    }

    #[test]
    fn comonotone_scores_give_chi_one() {
        let s = two_site_sample(
            (0..50).map(|k| k as f64).collect(),
            (0..50).map(|k| 2.0 * k as f64).collect(),
        );
        let chi = empirical_chi(&s, 0, 1, 0.8).unwrap();
        assert!((chi - 1.0).abs() < 1e-12);
        let chibar = empirical_chibar(&s, 0, 1, 0.8).unwrap();
        assert!((chibar - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi_threshold_errors_are_reported() {
        let s = two_site_sample(
            (0..10).map(|k| k as f64).collect(),
            (0..10).map(|k| (9 - k) as f64).collect(),
        );
        // anti-monotone: no joint exceedance at high u
        assert!(empirical_chibar(&s, 0, 1, 0.85).is_err());
    }

    #[test]
    fn smoothing_averages_neighbors() {
        let b = BinnedMadogram {
            centers: vec![1.0, 2.0, 3.0],
            counts: vec![1, 1, 1],
            nu: vec![0.0, 0.3, 0.6],
        };
        let s = b.smooth(3).unwrap();
        assert!((s.nu[0] - 0.15).abs() < 1e-15);
        assert!((s.nu[1] - 0.3).abs() < 1e-15);
        assert!((s.nu[2] - 0.45).abs() < 1e-15);
        assert!(b.smooth(2).is_err());
    }
}
