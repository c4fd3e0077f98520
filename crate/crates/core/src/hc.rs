//! Higher Criticism: the objective, the empirical HC threshold on observed
//! z-scores and the ideal HC threshold functional on a folded mixture.

use serde::{Deserialize, Serialize};

use crate::distributions::{normal_sf, FoldedMixture};
use crate::error::{invalid, Error, Result};
use crate::optimize;

/// Fraction of the ordered P-values scanned by default.
pub const DEFAULT_ALPHA0: f64 = 0.10;

/// Default lower guard `t0` for the ideal functional. The functional is
/// singular as `t -> 0`, where both `G` and `G_bar - Psi_bar` vanish.
pub const DEFAULT_T0: f64 = 0.5;

/// Grid spacing used to bracket the ideal HC threshold.
pub const IDEAL_GRID_STEP: f64 = 1e-3;

/// `sqrt(N) (i/N - p) / sqrt(i/N (1 - i/N))`.
pub fn hc_objective(i: usize, n: usize, p_value: f64) -> Result<f64> {
    if i == 0 || i >= n {
        return Err(invalid(format!(
            "HC objective needs 1 <= i < N, got i = {i}, N = {n}"
        )));
    }
    if !(p_value > 0.0 && p_value < 1.0) {
        return Err(invalid(format!(
            "P-value must lie in (0, 1), got {p_value}"
        )));
    }
    Ok(objective_unchecked(i, n, p_value))
}

#[inline]
fn objective_unchecked(i: usize, n: usize, p_value: f64) -> f64 {
    let nf = n as f64;
    let frac = i as f64 / nf;
    nf.sqrt() * (frac - p_value) / (frac * (1.0 - frac)).sqrt()
}

/// Two-sided P-values `P(|N(0,1)| > |z|) = 2 Phi_bar(|z|)`.
pub fn p_values_from_z(z: &[f64]) -> Vec<f64> {
    z.iter().map(|&v| two_sided_p(v)).collect()
}

#[inline]
fn two_sided_p(z: f64) -> f64 {
    (2.0 * normal_sf(z.abs())).min(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    /// 1-based rank of the P-value.
    pub index: usize,
    pub p_value: f64,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HcScanResult {
    /// 1-based index maximizing the objective.
    pub argmax_index: usize,
    /// `|Z|` paired with the `argmax_index`-th smallest P-value.
    pub threshold: f64,
    pub objective_max: f64,
    /// Number of z-scores scanned.
    pub n: usize,
    pub trace: Vec<TracePoint>,
}

/// Empirical HC threshold.
///
/// Ranks `|z|` in decreasing order (equivalently P-values increasing) and
/// maximizes the HC objective over `1 <= i <= max(1, floor(alpha0 N))`, capped
/// at `N - 1` where the objective's denominator vanishes. Ties go to the
/// smallest `i`. An all-zero input has every P-value equal to one; the
/// objective then increases in `i` and the argmax sits at the end of the scan
/// range with threshold `0`.
pub fn hct_empirical(z: &[f64], alpha0: f64) -> Result<HcScanResult> {
    let n = z.len();
    if n < 2 {
        return Err(invalid(format!(
            "HC thresholding needs at least 2 z-scores, got {n}"
        )));
    }
    if !(alpha0 > 0.0 && alpha0 <= 1.0) {
        return Err(invalid(format!("alpha0 must lie in (0, 1], got {alpha0}")));
    }
    if let Some(bad) = z.iter().find(|v| !v.is_finite()) {
        return Err(invalid(format!("z-scores must be finite, found {bad}")));
    }
    let mut magnitudes: Vec<f64> = z.iter().map(|v| v.abs()).collect();
    magnitudes.sort_by(|a, b| b.total_cmp(a));

    let scan = ((alpha0 * n as f64).floor() as usize).clamp(1, n - 1);
    let trace: Vec<TracePoint> = magnitudes[..scan]
        .iter()
        .enumerate()
        .map(|(k, &m)| {
            let p_value = two_sided_p(m);
            TracePoint {
                index: k + 1,
                p_value,
                objective: objective_unchecked(k + 1, n, p_value),
            }
        })
        .collect();

    let mut best = 0;
    for (k, point) in trace.iter().enumerate() {
        if point.objective > trace[best].objective {
            best = k;
        }
    }
    Ok(HcScanResult {
        argmax_index: best + 1,
        threshold: magnitudes[best],
        objective_max: trace[best].objective,
        n,
        trace,
    })
}

/// Ideal HC objective `(G_bar(t) - Psi_bar(t)) / sqrt(G(t) G_bar(t))`.
pub fn hc_functional(m: &FoldedMixture, t: f64) -> f64 {
    let survival = m.survival_at(t);
    let cdf = m.cdf_at(t);
    let denom = (cdf * survival).sqrt();
    if denom == 0.0 {
        return 0.0;
    }
    // G_bar - Psi_bar = eps (Psi_bar_tau - Psi_bar_0), written without cancellation.
    let excess = m.epsilon * (normal_sf(t - m.tau) + normal_sf(t + m.tau) - 2.0 * normal_sf(t));
    excess / denom
}

/// Ideal HC threshold `argmax_{t > t0} hc_functional(m, t)` over
/// `(t0, tau + 6]`: dense grid bracket then golden-section refinement.
pub fn hct_ideal(m: &FoldedMixture, t0: f64) -> Result<f64> {
    if m.epsilon == 0.0 {
        return Err(Error::Degenerate(
            "the HC threshold functional is undefined at the pure null (epsilon = 0)".into(),
        ));
    }
    let upper = m.tau + 6.0;
    if !t0.is_finite() || t0 < 0.0 || t0 >= upper {
        return Err(invalid(format!("t0 must lie in [0, {upper}), got {t0}")));
    }
    let f = |t: f64| hc_functional(m, t);
    let (t, _) = optimize::maximize(&f, t0, upper, IDEAL_GRID_STEP, 1e-9);
    Ok(t)
}
