//! Gaussian primitives, folded (half-normal) laws, the two-point mixture of
//! the rare/weak model, and the three threshold nonlinearities.
//!
//! Upper tails are always evaluated through the complementary error function,
//! never as `1 - cdf`. The underlying `erfc` (musl/FreeBSD lineage, via the
//! `libm` crate) is accurate to about one ulp; the only extra error comes from
//! rounding the argument `x / sqrt(2)`, which perturbs `normal_sf(x)` by a
//! relative amount of roughly `x^2 * 2.2e-16`, i.e. below `1.5e-14` for
//! `|x| <= 8` and below `3.2e-13` for `|x| <= 38`. Beyond `x ~ 37.5` the result
//! is subnormal and only carries the precision a subnormal can hold.
//!
//! # Truncated moments
//!
//! With `W ~ N(0, 1)`, `Z = mu + W`, `a = t - mu` and `b = t + mu`, the right
//! tail `Z > t` is `W > a` and the left tail `Z < -t` is `-W > b`. Using
//! `E[W 1{W > c}] = phi(c)` and `E[W^2 1{W > c}] = c phi(c) + Phi_bar(c)`:
//!
//! ```text
//! clip  E eta   = Phi_bar(a) - Phi_bar(b)
//!       E eta^2 = Phi_bar(a) + Phi_bar(b)
//! hard  E eta   = mu (Phi_bar(a) + Phi_bar(b)) + phi(a) - phi(b)
//!       E eta^2 = (mu^2 + 1)(Phi_bar(a) + Phi_bar(b)) + (t + mu) phi(a) + (t - mu) phi(b)
//! soft  E eta   = [phi(a) - a Phi_bar(a)] - [phi(b) - b Phi_bar(b)]
//!       E eta^2 = [(1 + a^2) Phi_bar(a) - a phi(a)] + [(1 + b^2) Phi_bar(b) - b phi(b)]
//! ```

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// `1 / sqrt(2 pi)`.
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function `Phi(x)`.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal survival function `Phi_bar(x) = 1 - Phi(x)`, evaluated
/// without subtraction.
#[inline]
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Inverse survival function: the `t` with `normal_sf(t) == q`.
///
/// Starts from Acklam's rational approximation of the normal quantile
/// (relative error about `1.2e-9`) and polishes it with Halley steps on
/// `normal_sf`.
pub fn normal_isf(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(invalid(format!("normal_isf needs q in (0, 1), got {q}")));
    }
    if q == 0.5 {
        return Ok(0.0);
    }
    // Acklam works on the lower-tail probability.
    let mut x = -acklam_quantile(q);
    for _ in 0..4 {
        let density = normal_pdf(x);
        if density == 0.0 {
            break;
        }
        let u = (normal_sf(x) - q) / density;
        let step = u / (1.0 - 0.5 * x * u);
        x += step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    Ok(x)
}

fn acklam_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// `P(|N(tau, 1)| > t)` for `t >= 0`.
#[inline]
pub(crate) fn half_normal_sf(t: f64, tau: f64) -> f64 {
    normal_sf(t - tau) + normal_sf(t + tau)
}

/// `P(|N(tau, 1)| <= t)` for `t >= 0`, written with `erf` so it stays
/// accurate for small `t`.
#[inline]
pub(crate) fn half_normal_cdf(t: f64, tau: f64) -> f64 {
    0.5 * (libm::erf((t - tau) * FRAC_1_SQRT_2) + libm::erf((t + tau) * FRAC_1_SQRT_2))
}

/// Density of `|N(tau, 1)|` at `t >= 0`.
#[inline]
pub(crate) fn half_normal_pdf(t: f64, tau: f64) -> f64 {
    normal_pdf(t - tau) + normal_pdf(t + tau)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdKind {
    /// `sgn(z) 1{|z| > t}`
    Clip,
    /// `z 1{|z| > t}`
    Hard,
    /// `sgn(z) (|z| - t)_+`
    Soft,
}

impl ThresholdKind {
    pub const ALL: [ThresholdKind; 3] = [
        ThresholdKind::Clip,
        ThresholdKind::Hard,
        ThresholdKind::Soft,
    ];
}

impl fmt::Display for ThresholdKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThresholdKind::Clip => "clip",
            ThresholdKind::Hard => "hard",
            ThresholdKind::Soft => "soft",
        })
    }
}

impl FromStr for ThresholdKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "clip" => Ok(ThresholdKind::Clip),
            "hard" => Ok(ThresholdKind::Hard),
            "soft" => Ok(ThresholdKind::Soft),
            other => Err(invalid(format!("unknown threshold kind `{other}`"))),
        }
    }
}

/// Threshold nonlinearity applied to a single z-score.
#[inline]
pub fn eta(kind: ThresholdKind, t: f64, z: f64) -> f64 {
    debug_assert!(t >= 0.0);
    let az = z.abs();
    if az <= t {
        return 0.0;
    }
    match kind {
        ThresholdKind::Clip => z.signum(),
        ThresholdKind::Hard => z,
        ThresholdKind::Soft => z.signum() * (az - t),
    }
}

/// `E eta_t(mu + W)` (order 1) or `E eta_t(mu + W)^2` (order 2) for
/// `W ~ N(0, 1)`, in closed form. See the module documentation for the
/// identities.
pub fn eta_moment(kind: ThresholdKind, t: f64, mu: f64, order: u8) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(invalid(format!(
            "threshold must be finite and >= 0, got {t}"
        )));
    }
    if !mu.is_finite() {
        return Err(invalid(format!("mean must be finite, got {mu}")));
    }
    if order != 1 && order != 2 {
        return Err(invalid(format!("moment order must be 1 or 2, got {order}")));
    }
    let a = t - mu;
    let b = t + mu;
    let (sa, sb) = (normal_sf(a), normal_sf(b));
    let (da, db) = (normal_pdf(a), normal_pdf(b));
    let value = match (kind, order) {
        (ThresholdKind::Clip, 1) => sa - sb,
        (ThresholdKind::Clip, _) => sa + sb,
        (ThresholdKind::Hard, 1) => mu * (sa + sb) + (da - db),
        (ThresholdKind::Hard, _) => (mu * mu + 1.0) * (sa + sb) + b * da + a * db,
        (ThresholdKind::Soft, 1) => (da - a * sa) - (db - b * sb),
        (ThresholdKind::Soft, _) => ((1.0 + a * a) * sa - a * da) + ((1.0 + b * b) * sb - b * db),
    };
    Ok(value)
}

/// Finite rare/weak model `RW(epsilon, tau)` at dimension `p` with `n`
/// training samples.
///
/// `epsilon` may sit on the closed interval `[0, 1]` and `tau` may be zero so
/// that pure-null and all-useful limits can be evaluated; most functionals
/// need `0 < epsilon < 1` and `tau > 0` to be informative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RwParams {
    pub p: u64,
    pub n: u64,
    pub epsilon: f64,
    pub tau: f64,
}

impl RwParams {
    pub fn new(p: u64, n: u64, epsilon: f64, tau: f64) -> Result<Self> {
        if p == 0 {
            return Err(invalid("p must be at least 1"));
        }
        if n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(invalid(format!(
                "epsilon must lie in [0, 1], got {epsilon}"
            )));
        }
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(invalid(format!("tau must be finite and >= 0, got {tau}")));
        }
        Ok(Self { p, n, epsilon, tau })
    }

    /// Number of useful features: `round(epsilon p)`, at least one unless
    /// `epsilon == 0`.
    pub fn k(&self) -> u64 {
        if self.epsilon == 0.0 {
            0
        } else {
            ((self.epsilon * self.p as f64).round() as u64).max(1)
        }
    }

    /// Common amplitude of the nonzero contrasts, `tau / sqrt(n)`.
    pub fn mu0(&self) -> f64 {
        self.tau / (self.n as f64).sqrt()
    }

    pub fn mixture(&self) -> FoldedMixture {
        FoldedMixture {
            epsilon: self.epsilon,
            tau: self.tau,
        }
    }
}

/// Asymptotic rare/weak model coordinates: `epsilon = p^-beta`,
/// `tau = sqrt(2 r log p)` and `n = max(2, round(c log(p)^gamma))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArwParams {
    pub beta: f64,
    pub r: f64,
    pub p: u64,
    /// `c` in `n ~ c log(p)^gamma`.
    pub n_scale: f64,
    /// `gamma` in `n ~ c log(p)^gamma`.
    pub n_power: f64,
}

impl ArwParams {
    pub const DEFAULT_N_SCALE: f64 = 0.5;
    pub const DEFAULT_N_POWER: f64 = 1.0;

    pub fn new(beta: f64, r: f64, p: u64) -> Result<Self> {
        Self::with_sample_size_law(beta, r, p, Self::DEFAULT_N_SCALE, Self::DEFAULT_N_POWER)
    }

    pub fn with_sample_size_law(
        beta: f64,
        r: f64,
        p: u64,
        n_scale: f64,
        n_power: f64,
    ) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(invalid(format!("beta must lie in (0, 1), got {beta}")));
        }
        if !(r > 0.0 && r < 1.0) {
            return Err(invalid(format!("r must lie in (0, 1), got {r}")));
        }
        if p < 2 {
            return Err(invalid("p must be at least 2 in the asymptotic model"));
        }
        if !(n_scale > 0.0 && n_scale.is_finite()) || !n_power.is_finite() {
            return Err(invalid("sample-size law needs c > 0 and finite gamma"));
        }
        Ok(Self {
            beta,
            r,
            p,
            n_scale,
            n_power,
        })
    }

    pub fn epsilon(&self) -> f64 {
        (self.p as f64).powf(-self.beta)
    }

    pub fn tau(&self) -> f64 {
        (2.0 * self.r * (self.p as f64).ln()).sqrt()
    }

    pub fn n(&self) -> u64 {
        let raw = self.n_scale * (self.p as f64).ln().powf(self.n_power);
        (raw.round() as u64).max(2)
    }

    pub fn to_rw(&self) -> RwParams {
        RwParams {
            p: self.p,
            n: self.n(),
            epsilon: self.epsilon(),
            tau: self.tau(),
        }
    }
}

/// Folded two-point mixture `G(t) = (1 - eps) Psi_0(t) + eps Psi_tau(t)`, the
/// law of `|Z|` when `Z ~ (1 - eps) N(0, 1) + eps N(tau, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldedMixture {
    pub epsilon: f64,
    pub tau: f64,
}

impl FoldedMixture {
    pub fn new(epsilon: f64, tau: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(invalid(format!(
                "epsilon must lie in [0, 1], got {epsilon}"
            )));
        }
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(invalid(format!("tau must be finite and >= 0, got {tau}")));
        }
        Ok(Self { epsilon, tau })
    }

    pub fn cdf(&self, t: f64) -> Result<f64> {
        check_folded_arg(t)?;
        Ok(self.cdf_at(t))
    }

    pub fn survival(&self, t: f64) -> Result<f64> {
        check_folded_arg(t)?;
        Ok(self.survival_at(t))
    }

    pub fn density(&self, t: f64) -> Result<f64> {
        check_folded_arg(t)?;
        Ok(self.density_at(t))
    }

    #[inline]
    pub(crate) fn cdf_at(&self, t: f64) -> f64 {
        (1.0 - self.epsilon) * half_normal_cdf(t, 0.0) + self.epsilon * half_normal_cdf(t, self.tau)
    }

    #[inline]
    pub(crate) fn survival_at(&self, t: f64) -> f64 {
        (1.0 - self.epsilon) * 2.0 * normal_sf(t) + self.epsilon * half_normal_sf(t, self.tau)
    }

    #[inline]
    pub(crate) fn density_at(&self, t: f64) -> f64 {
        (1.0 - self.epsilon) * 2.0 * normal_pdf(t) + self.epsilon * half_normal_pdf(t, self.tau)
    }
}

fn check_folded_arg(t: f64) -> Result<()> {
    if t >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!(
            "folded distributions live on [0, inf), got t = {t}"
        )))
    }
}

/// `sqrt(2 q log p)`, the threshold scale of the asymptotic model.
pub fn threshold_scale(q: f64, p: f64) -> f64 {
    (2.0 * q * p.ln()).sqrt()
}

#[cfg(test)]
#[path = "../tests/common/quadrature.rs"]
pub(crate) mod quadrature;
