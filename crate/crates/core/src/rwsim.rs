//! Seeded Monte Carlo simulation of the rare/weak model.
//!
//! Replicate `i` of a run draws its training data from ChaCha8 stream `2 i`
//! and its test set from stream `2 i + 1` of the run seed, so a replicate is
//! reproducible on its own and results do not depend on scheduling.
//!
//! Test points are drawn from the exact model `X ~ N(Y mu, I_p)`, but only on
//! the coordinates the classifier looks at: the other coordinates never
//! change a decision.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{eta, normal_cdf, RwParams, ThresholdKind};
use crate::error::{invalid, Error, Result};
use crate::hc::hct_empirical;
use crate::ideal::{bonferroni_threshold, fdrt_threshold, ideal_threshold};

pub const DEFAULT_REPLICATES: usize = 100;
pub const DEFAULT_TEST_SIZE: usize = 2000;
/// Largest `p * n` accepted in full-matrix mode.
pub const FULL_MATRIX_LIMIT: u64 = 1_000_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Selector {
    Hct { alpha0: f64 },
    IdealOracle,
    Fixed { t: f64 },
    Fdrt { alpha: f64 },
    Bonferroni,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZScoreMode {
    /// `z ~ N(sqrt(n) mu, I_p)`.
    Direct,
    /// `z = n^-1/2 sum_i Y_i X_i` over a balanced training set.
    FullMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: RwParams,
    pub kind: ThresholdKind,
    pub selector: Selector,
    pub replicates: usize,
    pub test_size: usize,
    pub seed: u64,
    pub zscore_mode: ZScoreMode,
}

impl SimConfig {
    pub fn new(params: RwParams, kind: ThresholdKind, selector: Selector, seed: u64) -> Self {
        SimConfig {
            params,
            kind,
            selector,
            replicates: DEFAULT_REPLICATES,
            test_size: DEFAULT_TEST_SIZE,
            seed,
            zscore_mode: ZScoreMode::Direct,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 || self.test_size == 0 {
            return Err(invalid("replicates and test_size must be at least 1"));
        }
        if self.params.k() == 0 {
            return Err(invalid(
                "simulation needs at least one useful feature (k = 0)",
            ));
        }
        if self.zscore_mode == ZScoreMode::FullMatrix {
            let (p, n) = (self.params.p, self.params.n);
            if n % 2 != 0 {
                return Err(invalid(format!(
                    "full-matrix mode needs an even n for balanced labels, got {n}"
                )));
            }
            if p.saturating_mul(n) > FULL_MATRIX_LIMIT {
                return Err(Error::ResourceLimit(format!(
                    "full-matrix mode refuses p * n = {} > {FULL_MATRIX_LIMIT}",
                    p as u128 * n as u128
                )));
            }
        }
        match self.selector {
            Selector::Hct { alpha0 } if !(alpha0 > 0.0 && alpha0 <= 1.0) => {
                Err(invalid(format!("alpha0 must lie in (0, 1], got {alpha0}")))
            }
            Selector::Fixed { t } if !(t >= 0.0 && t.is_finite()) => Err(invalid(format!(
                "fixed threshold must be finite and >= 0, got {t}"
            ))),
            Selector::Fdrt { alpha } if !(alpha > 0.0 && alpha < 1.0) => {
                Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")))
            }
            _ => Ok(()),
        }
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A balanced labelled test set whose feature vectors are drawn on demand.
#[derive(Clone, Debug, PartialEq)]
pub struct TestSet {
    seed: u64,
    stream: u64,
    size: usize,
}

impl TestSet {
    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    /// Label of test point `i`: the first half is `+1`, the rest `-1`.
    pub fn label(&self, i: usize) -> f64 {
        if i < self.size.div_ceil(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// Fraction of test points misclassified by `sign(<w, X>)`, ties to `+1`.
    pub fn error_rate(&self, w: &[f64], mu: &[f64]) -> f64 {
        let support: Vec<usize> = (0..w.len()).filter(|&j| w[j] != 0.0).collect();
        let mut rng = rng_for(self.seed, self.stream);
        let mut wrong = 0usize;
        for i in 0..self.size {
            let y = self.label(i);
            let mut score = 0.0;
            for &j in &support {
                let noise: f64 = rng.sample(StandardNormal);
                score += w[j] * (y * mu[j] + noise);
            }
            let predicted = if score >= 0.0 { 1.0 } else { -1.0 };
            if predicted != y {
                wrong += 1;
            }
        }
        wrong as f64 / self.size as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Replicate {
    pub mu: Vec<f64>,
    pub z: Vec<f64>,
    pub useful: Vec<bool>,
    pub test: TestSet,
}

pub fn generate(config: &SimConfig, replicate: u64) -> Result<Replicate> {
    config.validate()?;
    let params = &config.params;
    let p = params.p as usize;
    let k = params.k() as usize;
    let mu0 = params.mu0();
    let mut rng = rng_for(config.seed, 2 * replicate);

    let mut mu = vec![0.0; p];
    let mut useful = vec![false; p];
    for j in index::sample(&mut rng, p, k) {
        mu[j] = mu0;
        useful[j] = true;
    }

    let z = match config.zscore_mode {
        ZScoreMode::Direct => {
            let scale = (params.n as f64).sqrt();
            mu.iter()
                .map(|&m| scale * m + rng.sample::<f64, _>(StandardNormal))
                .collect()
        }
        ZScoreMode::FullMatrix => {
            let n = params.n as usize;
            let mut acc = vec![0.0; p];
            for i in 0..n {
                let y = if i < n / 2 { 1.0 } else { -1.0 };
                for (a, &m) in acc.iter_mut().zip(&mu) {
                    let x = y * m + rng.sample::<f64, _>(StandardNormal);
                    *a += y * x;
                }
            }
            let scale = 1.0 / (n as f64).sqrt();
            acc.into_iter().map(|a| a * scale).collect()
        }
    };

    let test = TestSet {
        seed: config.seed,
        stream: 2 * replicate + 1,
        size: config.test_size,
    };
    Ok(Replicate {
        mu,
        z,
        useful,
        test,
    })
}

/// `w(j) = eta_t(z(j))`. An all-zero `w` is allowed and always predicts `+1`.
pub fn build_classifier(z: &[f64], kind: ThresholdKind, t: f64) -> Result<Vec<f64>> {
    if !(t >= 0.0) {
        return Err(invalid(format!("threshold must be >= 0, got {t}")));
    }
    Ok(z.iter().map(|&x| eta(kind, t, x)).collect())
}

/// `2 <w, mu> / ||w||`, or 0 for the empty classifier.
pub fn realized_separation(w: &[f64], mu: &[f64]) -> f64 {
    let dot: f64 = w.iter().zip(mu).map(|(a, b)| a * b).sum();
    let norm = w.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm > 0.0 {
        2.0 * dot / norm
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub index: u64,
    pub threshold_used: f64,
    pub n_selected: u64,
    pub n_true_selected: u64,
    pub realized_fdr: f64,
    pub realized_mdr: f64,
    pub test_error: f64,
    /// `Phi(-Sep(w; mu) / 2)`.
    pub plugin_error: f64,
    /// Selector failure; the numeric fields are NaN when set.
    pub failure: Option<String>,
}

impl ReplicateRecord {
    fn failed(index: u64, err: &Error) -> Self {
        ReplicateRecord {
            index,
            threshold_used: f64::NAN,
            n_selected: 0,
            n_true_selected: 0,
            realized_fdr: f64::NAN,
            realized_mdr: f64::NAN,
            test_error: f64::NAN,
            plugin_error: f64::NAN,
            failure: Some(err.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub records: Vec<ReplicateRecord>,
    pub n_ok: usize,
    pub threshold: Estimate,
    pub n_selected: Estimate,
    pub realized_fdr: Estimate,
    pub realized_mdr: Estimate,
    pub test_error: Estimate,
    pub plugin_error: Estimate,
}

fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Mean and standard error with a fixed summation tree. The standard error
/// is NaN for fewer than two values.
pub fn estimate(xs: &[f64]) -> Estimate {
    let m = xs.len();
    if m == 0 {
        return Estimate {
            mean: f64::NAN,
            se: f64::NAN,
        };
    }
    let mean = pairwise_sum(xs) / m as f64;
    if m < 2 {
        return Estimate { mean, se: f64::NAN };
    }
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (m - 1) as f64;
    Estimate {
        mean,
        se: (var / m as f64).sqrt(),
    }
}

/// Threshold chosen by selectors that do not look at the data.
fn fixed_threshold(config: &SimConfig) -> Option<Result<f64>> {
    let params = &config.params;
    match config.selector {
        Selector::Hct { .. } => None,
        Selector::Fixed { t } => Some(Ok(t)),
        Selector::IdealOracle => Some(ideal_threshold(params, config.kind).map(|s| s.threshold)),
        Selector::Fdrt { alpha } => Some(fdrt_threshold(params, alpha)),
        Selector::Bonferroni => Some(bonferroni_threshold(params.p)),
    }
}

fn run_replicate(
    config: &SimConfig,
    index: u64,
    preset: &Option<Result<f64>>,
) -> Result<ReplicateRecord> {
    let data = generate(config, index)?;
    let t = match (preset, config.selector) {
        (Some(Ok(t)), _) => *t,
        (Some(Err(e)), _) => return Ok(ReplicateRecord::failed(index, e)),
        (None, Selector::Hct { alpha0 }) => match hct_empirical(&data.z, alpha0) {
            Ok(scan) => scan.threshold,
            Err(e) => return Ok(ReplicateRecord::failed(index, &e)),
        },
        (None, _) => unreachable!("only HCT selects from the data"),
    };
    let w = build_classifier(&data.z, config.kind, t)?;
    let mut n_selected = 0u64;
    let mut n_true = 0u64;
    for (&x, &u) in data.z.iter().zip(&data.useful) {
        if x.abs() > t {
            n_selected += 1;
            n_true += u as u64;
        }
    }
    let k = config.params.k() as f64;
    Ok(ReplicateRecord {
        index,
        threshold_used: t,
        n_selected,
        n_true_selected: n_true,
        realized_fdr: (n_selected - n_true) as f64 / n_selected.max(1) as f64,
        realized_mdr: 1.0 - n_true as f64 / k,
        test_error: data.test.error_rate(&w, &data.mu),
        plugin_error: normal_cdf(-0.5 * realized_separation(&w, &data.mu)),
        failure: None,
    })
}

/// Runs every replicate and aggregates the ones whose selector succeeded.
pub fn run(config: &SimConfig) -> Result<SimOutcome> {
    config.validate()?;
    let preset = fixed_threshold(config);
    let records = (0..config.replicates as u64)
        .into_par_iter()
        .map(|i| run_replicate(config, i, &preset))
        .collect::<Result<Vec<_>>>()?;
    let ok: Vec<&ReplicateRecord> = records.iter().filter(|r| r.failure.is_none()).collect();
    let col =
        |f: fn(&ReplicateRecord) -> f64| estimate(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
    Ok(SimOutcome {
        n_ok: ok.len(),
        threshold: col(|r| r.threshold_used),
        n_selected: col(|r| r.n_selected as f64),
        realized_fdr: col(|r| r.realized_fdr),
        realized_mdr: col(|r| r.realized_mdr),
        test_error: col(|r| r.test_error),
        plugin_error: col(|r| r.plugin_error),
        records,
    })
}
