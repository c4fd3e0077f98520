//! Proxy (certainty-equivalent) functionals of the rare/weak model and the
//! thresholds built from them.
//!
//! Per-feature expected rates at threshold `t`:
//!
//! ```text
//! TPR(t)  = eps Psi_bar_tau(t)            useful features selected
//! FPR(t)  = (1 - eps) Psi_bar_0(t)        useless features selected
//! IDR(t)  = eps Phi(-t - tau)             useful features selected with flipped sign
//! TPR'(t) = eps (phi(t - tau) + phi(t + tau))    (magnitudes of d/dt)
//! FPR'(t) = (1 - eps) 2 phi(t)
//! ```
//!
//! Proxy separation is `2A / sqrt(B)` with `A = eps tau E eta_t(tau + W)` and
//! `B = eps E eta_t^2(tau + W) + (1 - eps) E eta_t^2(W)`. It does not depend on
//! `p` or `n`; only the proxy error `Phi(-sqrt(p/n) Sep / 2)` does.

use serde::{Deserialize, Serialize};

use crate::distributions::{
    eta_moment, half_normal_pdf, half_normal_sf, normal_cdf, normal_isf, normal_pdf, normal_sf,
    RwParams, ThresholdKind,
};
use crate::error::{invalid, Error, Result};
use crate::hc::hc_functional;
use crate::optimize;

/// Grid spacing used to bracket every threshold search in this module.
pub const GRID_STEP: f64 = 1e-3;
/// Final bracket width of golden-section refinement and bisection.
pub const REFINE_TOL: f64 = 1e-9;
/// Searches run over `[0, tau + SEARCH_MARGIN]`.
pub const SEARCH_MARGIN: f64 = 6.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub tpr: f64,
    pub fpr: f64,
    pub idr: f64,
    pub tpr_deriv: f64,
    pub fpr_deriv: f64,
}

pub fn rates(params: &RwParams, t: f64) -> Result<Rates> {
    check_threshold(t)?;
    Ok(rates_at(params, t))
}

#[inline]
fn rates_at(params: &RwParams, t: f64) -> Rates {
    let (eps, tau) = (params.epsilon, params.tau);
    Rates {
        tpr: eps * half_normal_sf(t, tau),
        fpr: (1.0 - eps) * 2.0 * normal_sf(t),
        idr: eps * normal_sf(t + tau),
        tpr_deriv: eps * half_normal_pdf(t, tau),
        fpr_deriv: (1.0 - eps) * 2.0 * normal_pdf(t),
    }
}

fn check_threshold(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!(
            "threshold must be finite and >= 0, got {t}"
        )))
    }
}

fn search_upper(params: &RwParams) -> f64 {
    params.tau + SEARCH_MARGIN
}

/// Proxy separation from the closed-form Gaussian moments of `eta`.
pub fn sep_proxy(params: &RwParams, kind: ThresholdKind, t: f64) -> Result<f64> {
    check_threshold(t)?;
    let (eps, tau) = (params.epsilon, params.tau);
    let a = eps * tau * eta_moment(kind, t, tau, 1)?;
    let b = eps * eta_moment(kind, t, tau, 2)? + (1.0 - eps) * eta_moment(kind, t, 0.0, 2)?;
    if !(b > 0.0) {
        return Err(Error::EmptySelection { threshold: t });
    }
    Ok(2.0 * a / b.sqrt())
}

/// Clipping separation written through the selection rates,
/// `2 tau (TPR - 2 IDR) / sqrt(TPR + FPR)`.
pub fn sep_proxy_clip_rates(params: &RwParams, t: f64) -> Result<f64> {
    let r = rates(params, t)?;
    let b = r.tpr + r.fpr;
    if !(b > 0.0) {
        return Err(Error::EmptySelection { threshold: t });
    }
    Ok(2.0 * params.tau * (r.tpr - 2.0 * r.idr) / b.sqrt())
}

fn sep_or_zero(params: &RwParams, kind: ThresholdKind, t: f64) -> f64 {
    sep_proxy(params, kind, t).unwrap_or(0.0)
}

/// Proxy error for a given separation value.
pub fn err_from_sep(params: &RwParams, sep: f64) -> f64 {
    normal_cdf(-0.5 * (params.p as f64 / params.n as f64).sqrt() * sep)
}

/// Proxy classification error `Phi(-sqrt(p/n) Sep / 2)`; an empty selection
/// is a coin flip.
pub fn err_proxy(params: &RwParams, kind: ThresholdKind, t: f64) -> Result<f64> {
    match sep_proxy(params, kind, t) {
        Ok(sep) => Ok(err_from_sep(params, sep)),
        Err(Error::EmptySelection { .. }) => Ok(0.5),
        Err(e) => Err(e),
    }
}

/// `FPR / (TPR + FPR)`.
pub fn fdr_proxy(params: &RwParams, t: f64) -> Result<f64> {
    let r = rates(params, t)?;
    ratio_or_empty(r.fpr, r.tpr, t)
}

/// `FPR' / (TPR' + FPR')`.
pub fn lfdr_proxy(params: &RwParams, t: f64) -> Result<f64> {
    let r = rates(params, t)?;
    ratio_or_empty(r.fpr_deriv, r.tpr_deriv, t)
}

fn ratio_or_empty(null: f64, useful: f64, t: f64) -> Result<f64> {
    let total = null + useful;
    if total > 0.0 {
        Ok(null / total)
    } else {
        Err(Error::EmptySelection { threshold: t })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdealSummary {
    pub threshold: f64,
    pub sep: f64,
    pub err: f64,
    pub fdr: f64,
    pub lfdr: f64,
    pub tpr: f64,
    pub fpr: f64,
    pub idr: f64,
}

/// Proxy quantities evaluated at an arbitrary threshold.
pub fn summarize(params: &RwParams, kind: ThresholdKind, t: f64) -> Result<IdealSummary> {
    let r = rates(params, t)?;
    let sep = sep_proxy(params, kind, t)?;
    Ok(IdealSummary {
        threshold: t,
        sep,
        err: err_from_sep(params, sep),
        fdr: fdr_proxy(params, t)?,
        lfdr: lfdr_proxy(params, t)?,
        tpr: r.tpr,
        fpr: r.fpr,
        idr: r.idr,
    })
}

/// Threshold maximizing proxy separation over `[0, tau + 6]`.
pub fn ideal_threshold(params: &RwParams, kind: ThresholdKind) -> Result<IdealSummary> {
    let f = |t: f64| sep_or_zero(params, kind, t);
    let (t, _) = optimize::maximize(&f, 0.0, search_upper(params), GRID_STEP, REFINE_TOL);
    summarize(params, kind, t)
}

/// Alternate proxy `2 tau TPR / sqrt(TPR + FPR)`: clipping separation with the
/// inverted detections dropped.
pub fn alt_sep(params: &RwParams, t: f64) -> Result<f64> {
    let r = rates(params, t)?;
    let b = r.tpr + r.fpr;
    if !(b > 0.0) {
        return Err(Error::EmptySelection { threshold: t });
    }
    Ok(2.0 * params.tau * r.tpr / b.sqrt())
}

pub fn alt_sep_argmax(params: &RwParams) -> Result<f64> {
    let f = |t: f64| alt_sep(params, t).unwrap_or(0.0);
    let (t, _) = optimize::maximize(&f, 0.0, search_upper(params), GRID_STEP, REFINE_TOL);
    Ok(t)
}

/// `(Lfdr(t), (1 + FDR(t)) / 2)`. The two agree exactly at the maximizer of
/// the alternate proxy.
pub fn tangent_secant_check(params: &RwParams, t: f64) -> Result<(f64, f64)> {
    let lfdr = lfdr_proxy(params, t)?;
    let fdr = fdr_proxy(params, t)?;
    Ok((lfdr, 0.5 * (1.0 + fdr)))
}

/// Smallest `t > t0 = 0` with `FDR(t) < alpha`: grid scan for the first
/// crossing, then bisection to `1e-9`.
pub fn fdrt_threshold(params: &RwParams, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let lo = 0.0;
    let hi = search_upper(params).max(bonferroni_like_upper(params.p));
    let below = |t: f64| matches!(fdr_proxy(params, t), Ok(v) if v < alpha);
    if below(lo) {
        return Ok(lo);
    }
    let mut prev = lo;
    for t in optimize::grid(lo, hi, GRID_STEP).skip(1) {
        match fdr_proxy(params, t) {
            Ok(v) if v < alpha => {
                let (_, upper) = optimize::bisect(&below, prev, t, REFINE_TOL);
                return Ok(upper);
            }
            Ok(_) => prev = t,
            Err(Error::EmptySelection { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Unattainable { alpha, lo, hi })
}

/// Upper end for the FDR scan: far enough past the Bonferroni level that the
/// useful tail dominates whenever it ever does.
fn bonferroni_like_upper(p: u64) -> f64 {
    (2.0 * (p.max(2) as f64).ln()).sqrt() + SEARCH_MARGIN
}

/// `Phi_bar^{-1}(1/p)`: one expected false alarm among `p` nulls.
pub fn bonferroni_threshold(p: u64) -> Result<f64> {
    if p < 2 {
        return Err(invalid(format!(
            "Bonferroni threshold needs p >= 2, got {p}"
        )));
    }
    normal_isf(1.0 / p as f64)
}

/// `(HC(t; F_{eps,tau}), Sep(t))` with clipping separation, for comparing the
/// ideal HC objective with proxy separation in the upper tail.
pub fn hc_vs_sep_alignment(params: &RwParams, t: f64) -> Result<(f64, f64)> {
    check_threshold(t)?;
    let hc = hc_functional(&params.mixture(), t);
    let sep = sep_proxy(params, ThresholdKind::Clip, t)?;
    Ok((hc, sep))
}

#[cfg(test)]
use crate::distributions::quadrature;
