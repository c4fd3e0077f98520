//! Asymptotic phase-diagram calculus in the `(beta, r)` plane.
//!
//! With `eps = p^-beta`, `tau = sqrt(2 r log p)` and thresholds `t = sqrt(2 q log p)`,
//! useful features are discovered at rate `p^-delta(q)` relative to `p^(1-beta)`
//! and proxy separation grows like `p^gamma(q)`. The success boundary is
//! `rho*(beta)`; its interior splits into Regions I, II, III:
//!
//! ```text
//! I    rho* < r <= beta / 3     q* = 4 r
//! II   beta / 3 < r <= beta     q* = (beta + r)^2 / (4 r)
//! III  beta < r                 q* = (beta + r)^2 / (4 r)
//! ```
//!
//! In Region III every `q` in `[beta, r]` attains the same exponent; the
//! `(beta + r)^2 / (4 r)` branch is kept because it is the unique point where
//! the tangent-secant balance holds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{ArwParams, ThresholdKind};
use crate::error::{invalid, Error, Result};
use crate::hc::{hct_ideal, DEFAULT_T0};
use crate::ideal::{err_from_sep, sep_proxy};
use crate::optimize;

fn check_unit(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must lie in (0, 1), got {x}")))
    }
}

pub fn rho_star(beta: f64) -> Result<f64> {
    check_unit("beta", beta)?;
    Ok(rho_star_unchecked(beta))
}

fn rho_star_unchecked(beta: f64) -> f64 {
    if beta <= 0.5 {
        0.0
    } else if beta <= 0.75 {
        beta - 0.5
    } else {
        fdrt_boundary(beta)
    }
}

/// `(1 - sqrt(1 - beta))^2`, the success boundary of FDR and Bonferroni
/// thresholding.
fn fdrt_boundary(beta: f64) -> f64 {
    (1.0 - (1.0 - beta).sqrt()).powi(2)
}

pub fn delta_exponent(q: f64, beta: f64, r: f64) -> f64 {
    if q <= r {
        1.0 - beta
    } else {
        let d = q.sqrt() - r.sqrt();
        1.0 - beta - d * d
    }
}

/// `(gamma_1, gamma_2) = (delta - (1 - q) / 2, delta / 2)`.
pub fn gamma_parts(q: f64, beta: f64, r: f64) -> (f64, f64) {
    let delta = delta_exponent(q, beta, r);
    (delta - 0.5 * (1.0 - q), 0.5 * delta)
}

/// Separation exponent `delta - max(1 - q, delta) / 2`.
pub fn gamma_exponent(q: f64, beta: f64, r: f64) -> f64 {
    let delta = delta_exponent(q, beta, r);
    delta - 0.5 * (1.0 - q).max(delta)
}

/// `(q1, q2) = (4 r, (beta + r)^2 / (4 r))`.
pub fn q_candidates(beta: f64, r: f64) -> Result<(f64, f64)> {
    if !(r > 0.0) || !r.is_finite() || !beta.is_finite() {
        return Err(invalid(format!(
            "q candidates need finite beta and r > 0, got beta={beta}, r={r}"
        )));
    }
    Ok((4.0 * r, (beta + r).powi(2) / (4.0 * r)))
}

/// Maximizer of `gamma` over the grid `{0, step, ..., 1}`; ties go to the
/// smallest `q`.
pub fn gamma_grid_argmax(beta: f64, r: f64, step: f64) -> (f64, f64) {
    optimize::grid_argmax(&|q| gamma_exponent(q, beta, r), 0.0, 1.0, step)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    Fail,
    I,
    II,
    III,
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Region::Fail => "Fail",
            Region::I => "I",
            Region::II => "II",
            Region::III => "III",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub beta: f64,
    pub r: f64,
    pub region: Region,
    pub q_star: f64,
    pub fdr_limit: f64,
    pub lfdr_limit: f64,
    pub sep_exponent_ideal: f64,
    pub sep_exponent_fdrt: f64,
    pub sep_exponent_bonf: f64,
}

/// Width of the band around `rho*` that counts as the boundary, so that grid
/// points such as `(0.6, 0.1)` do not depend on the rounding of `beta - 1/2`.
pub const BOUNDARY_TOL: f64 = 1e-12;

fn on_or_below_boundary(beta: f64, r: f64) -> bool {
    r <= rho_star_unchecked(beta) + BOUNDARY_TOL
}

/// Region split of the success phase, ignoring the boundary itself.
fn sub_region(beta: f64, r: f64) -> Region {
    if r <= beta / 3.0 {
        Region::I
    } else if r <= beta {
        Region::II
    } else {
        Region::III
    }
}

pub fn classify(beta: f64, r: f64) -> Result<PhasePoint> {
    check_unit("beta", beta)?;
    check_unit("r", r)?;
    let (q1, q2) = q_candidates(beta, r)?;
    let shape = sub_region(beta, r);
    let region = if on_or_below_boundary(beta, r) {
        Region::Fail
    } else {
        shape
    };
    // Points in Fail still get the formal q* of their sub-region.
    let q_star = if shape == Region::I { q1 } else { q2 };
    let (fdr_limit, lfdr_limit) = match region {
        Region::Fail | Region::I => (1.0, 1.0),
        Region::II => ((beta - r) / (2.0 * r), (r + beta) / (4.0 * r)),
        Region::III => (0.0, 0.5),
    };
    Ok(PhasePoint {
        beta,
        r,
        region,
        q_star,
        fdr_limit,
        lfdr_limit,
        sep_exponent_ideal: method_exponent(Method::Ideal, beta, r)?,
        sep_exponent_fdrt: method_exponent(Method::Fdrt, beta, r)?,
        sep_exponent_bonf: method_exponent(Method::Bonferroni, beta, r)?,
    })
}

/// `lfdr_limit == (1 + fdr_limit) / 2` up to rounding of the two closed forms.
pub fn tangent_secant_limit_consistency(pt: &PhasePoint) -> bool {
    (pt.lfdr_limit - 0.5 * (1.0 + pt.fdr_limit)).abs()
        <= 4.0 * f64::EPSILON * pt.lfdr_limit.abs().max(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ideal,
    Hct,
    Fdrt,
    Bonferroni,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Ideal, Method::Hct, Method::Fdrt, Method::Bonferroni];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ideal => "ideal",
            Method::Hct => "hct",
            Method::Fdrt => "fdrt",
            Method::Bonferroni => "bonferroni",
        }
    }
}

/// Smallest `r` at which the method succeeds for the given `beta`.
pub fn method_success_region(method: Method, beta: f64) -> Result<f64> {
    check_unit("beta", beta)?;
    Ok(match method {
        Method::Ideal | Method::Hct => rho_star_unchecked(beta),
        Method::Fdrt | Method::Bonferroni => fdrt_boundary(beta),
    })
}

/// Separation exponent of each method, clamped at 0 where the method fails.
///
/// Bonferroni uses `gamma(1)`, which is `delta(1) / 2` when `0 < delta(1) < 1`.
pub fn method_exponent(method: Method, beta: f64, r: f64) -> Result<f64> {
    check_unit("beta", beta)?;
    check_unit("r", r)?;
    let (q1, q2) = q_candidates(beta, r)?;
    let raw = match method {
        Method::Ideal | Method::Hct => {
            if on_or_below_boundary(beta, r) {
                0.0
            } else {
                let q = if sub_region(beta, r) == Region::I {
                    q1
                } else {
                    q2
                };
                gamma_exponent(q, beta, r)
            }
        }
        Method::Fdrt => 0.5 - 0.5 * q2,
        Method::Bonferroni => gamma_exponent(1.0, beta, r),
    };
    Ok(raw.max(0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub p: u64,
    pub beta: f64,
    pub level: f64,
    /// `None` when no `r` in `[0, 1)` reaches the level.
    pub r: Option<f64>,
}

/// Strength grid used to bracket the finite-p boundary.
pub const BOUNDARY_R_STEP: f64 = 0.01;
const BOUNDARY_R_MAX: f64 = 0.99;
const BOUNDARY_ERR_TOL: f64 = 1e-4;
const MONOTONE_SLACK: f64 = 1e-12;

/// Proxy error at the ideal HC threshold for the asymptotic model at `(beta, r, p)`,
/// with `n = max(2, round(log(p) / 2))`. `r = 0` is the coin flip.
pub fn boundary_error(p: u64, beta: f64, r: f64) -> Result<f64> {
    if r == 0.0 {
        return Ok(0.5);
    }
    let rw = ArwParams::new(beta, r, p)?.to_rw();
    let t = hct_ideal(&rw.mixture(), DEFAULT_T0)?;
    let sep = sep_proxy(&rw, ThresholdKind::Clip, t).unwrap_or(0.0);
    Ok(err_from_sep(&rw, sep))
}

/// Strength `r` at which the proxy error reaches each level, per `beta`.
///
/// The error is first tabulated on an `r` grid and required to be
/// nonincreasing; the first grid crossing is then refined by bisection.
pub fn finite_p_boundary(p: u64, levels: &[f64], betas: &[f64]) -> Result<Vec<BoundaryPoint>> {
    if p < 100 {
        return Err(invalid(format!(
            "finite-p boundary needs p >= 100, got {p}"
        )));
    }
    for &level in levels {
        if !(level > 0.0 && level <= 0.5) {
            return Err(invalid(format!(
                "error level must lie in (0, 0.5], got {level}"
            )));
        }
    }
    for &beta in betas {
        check_unit("beta", beta)?;
    }
    let per_beta: Vec<Result<Vec<BoundaryPoint>>> = betas
        .par_iter()
        .map(|&beta| boundary_for_beta(p, beta, levels))
        .collect();
    let mut out = Vec::with_capacity(betas.len() * levels.len());
    for rows in per_beta {
        out.extend(rows?);
    }
    Ok(out)
}

fn boundary_for_beta(p: u64, beta: f64, levels: &[f64]) -> Result<Vec<BoundaryPoint>> {
    let rs: Vec<f64> = optimize::grid(0.0, BOUNDARY_R_MAX, BOUNDARY_R_STEP).collect();
    let errs = rs
        .iter()
        .map(|&r| boundary_error(p, beta, r))
        .collect::<Result<Vec<_>>>()?;
    for (w, r) in errs.windows(2).zip(&rs[1..]) {
        if w[1] > w[0] + MONOTONE_SLACK {
            return Err(Error::NotMonotone(format!(
                "proxy error rises from {} to {} at r = {r} (beta = {beta}, p = {p})",
                w[0], w[1]
            )));
        }
    }
    levels
        .iter()
        .map(|&level| {
            let r = match errs.iter().position(|&e| e <= level) {
                None => None,
                Some(0) => Some(0.0),
                Some(j) => Some(refine(p, beta, level, rs[j - 1], rs[j])?),
            };
            Ok(BoundaryPoint { p, beta, level, r })
        })
        .collect()
}

fn refine(p: u64, beta: f64, level: f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let e = boundary_error(p, beta, mid)?;
        if (e - level).abs() <= BOUNDARY_ERR_TOL && hi - lo <= 1e-6 {
            return Ok(mid);
        }
        if e <= level {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-12 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The boundary point for one `(beta, level)` as a hard error when it is
/// out of range.
pub fn boundary_r(point: &BoundaryPoint) -> Result<f64> {
    point.r.ok_or(Error::OutOfRange {
        beta: point.beta,
        level: point.level,
    })
}
