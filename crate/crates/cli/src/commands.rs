use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use hctlab::hc::{hct_empirical, hct_ideal, DEFAULT_ALPHA0, DEFAULT_T0};
use hctlab::ideal::{bonferroni_threshold, fdrt_threshold, ideal_threshold};
use hctlab::phase::{
    classify, finite_p_boundary, method_exponent, method_success_region, rho_star, Method,
};
use hctlab::rwsim::{self, generate, Selector, SimConfig, ZScoreMode};
use hctlab::{ArwParams, RwParams, ThresholdKind};
use serde::{Deserialize, Serialize};

use crate::output::{Artifacts, RunManifest};
use crate::{KindArg, ModelArgs, OutArgs};

/// Resolved model with both parameterizations echoed for the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct Model {
    pub p: u64,
    pub n: u64,
    pub epsilon: f64,
    pub tau: f64,
    pub beta: Option<f64>,
    pub r: Option<f64>,
}

impl Model {
    fn resolve(args: &ModelArgs) -> Result<Self> {
        let (rw, beta, r) = match (args.beta, args.r, args.epsilon, args.tau) {
            (Some(beta), Some(r), None, None) => {
                let mut rw = ArwParams::new(beta, r, args.p)?.to_rw();
                if let Some(n) = args.n {
                    rw = RwParams::new(rw.p, n, rw.epsilon, rw.tau)?;
                }
                (rw, Some(beta), Some(r))
            }
            (None, None, Some(eps), Some(tau)) => {
                let n = args.n.unwrap_or_else(|| default_n(args.p));
                (RwParams::new(args.p, n, eps, tau)?, None, None)
            }
            _ => bail!("give either --epsilon and --tau, or --beta and --r"),
        };
        Ok(Model {
            p: rw.p,
            n: rw.n,
            epsilon: rw.epsilon,
            tau: rw.tau,
            beta,
            r,
        })
    }

    fn rw(&self) -> RwParams {
        RwParams {
            p: self.p,
            n: self.n,
            epsilon: self.epsilon,
            tau: self.tau,
        }
    }
}

fn default_n(p: u64) -> u64 {
    ((p.max(1) as f64).ln() * ArwParams::DEFAULT_N_SCALE)
        .round()
        .max(2.0) as u64
}

/// Writes to `--out` when given, otherwise prints `primary` to stdout.
fn finish(artifacts: Artifacts, primary: &str, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(dir) => {
            for path in artifacts.write_to(dir)? {
                eprintln!("wrote {}", path.display());
            }
        }
        None => {
            let bytes = artifacts.get(primary).expect("primary output was produced");
            std::io::stdout().write_all(bytes)?;
        }
    }
    Ok(())
}

/// `k / m` style grid `step, 2 step, ...` strictly inside `(0, 1)`.
fn open_unit_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step < 1.0) {
        bail!("grid step must lie in (0, 1), got {step}");
    }
    Ok((1..)
        .map(|k| k as f64 * step)
        .take_while(|&x| x < 1.0 - 1e-9)
        .collect())
}

#[derive(Debug, Args, Serialize)]
pub struct HctArgs {
    /// One z-score per line, or a CSV file when --column is given.
    #[arg(long)]
    pub input: PathBuf,
    /// CSV column holding the z-scores: a header name or a 0-based index.
    #[arg(long)]
    pub column: Option<String>,
    /// Fraction of the smallest P-values scanned.
    #[arg(long, default_value_t = DEFAULT_ALPHA0)]
    pub alpha0: f64,
    /// Skip hct_trace.csv.
    #[arg(long)]
    pub no_trace: bool,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct TraceRow {
    pub i: usize,
    pub i_over_p: f64,
    pub p_value: f64,
    pub hc_value: f64,
}

#[derive(Debug, Serialize)]
struct HctSummary {
    threshold: f64,
    argmax_index: usize,
    objective_max: f64,
    n: usize,
    alpha0: f64,
}

fn read_zscores(path: &Path, column: Option<&str>) -> Result<Vec<f64>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let parse = |field: &str, line: usize| -> Result<f64> {
        field
            .trim()
            .parse::<f64>()
            .with_context(|| format!("line {line}: `{}` is not a number", field.trim()))
    };
    let Some(column) = column else {
        let mut z = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            z.push(parse(line, k + 1)?);
        }
        return Ok(z);
    };
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let idx = match headers.iter().position(|h| h.trim() == column) {
        Some(i) => i,
        None => match column.parse::<usize>() {
            Ok(i) if i < headers.len() => i,
            _ => bail!("no column `{column}` in {}", path.display()),
        },
    };
    let mut z = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        let field = record
            .get(idx)
            .with_context(|| format!("line {}: missing column {idx}", k + 2))?;
        z.push(parse(field, k + 2)?);
    }
    Ok(z)
}

pub fn hct(args: HctArgs) -> Result<()> {
    let z = read_zscores(&args.input, args.column.as_deref())?;
    let scan = hct_empirical(&z, args.alpha0)?;
    let mut artifacts = Artifacts::new(RunManifest::new("hct", None, &args)?);
    if !args.no_trace {
        let n = scan.n as f64;
        let rows: Vec<TraceRow> = scan
            .trace
            .iter()
            .map(|t| TraceRow {
                i: t.index,
                i_over_p: t.index as f64 / n,
                p_value: t.p_value,
                hc_value: t.objective,
            })
            .collect();
        artifacts.add_csv("hct_trace.csv", &rows)?;
    }
    let summary = HctSummary {
        threshold: scan.threshold,
        argmax_index: scan.argmax_index,
        objective_max: scan.objective_max,
        n: scan.n,
        alpha0: args.alpha0,
    };
    artifacts.add_json("hct.json", &summary)?;
    finish(artifacts, "hct.json", &args.out.out)
}

#[derive(Debug, Args, Serialize)]
pub struct IdealArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = KindArg::Clip)]
    pub kind: KindArg,
    /// Also report the FDR threshold at this level.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Serialize)]
struct IdealReport {
    model: Model,
    kind: ThresholdKind,
    ideal: hctlab::IdealSummary,
    hc_threshold: f64,
    bonferroni_threshold: f64,
    fdrt_threshold: Option<f64>,
}

pub fn ideal(args: IdealArgs) -> Result<()> {
    let model = Model::resolve(&args.model)?;
    let rw = model.rw();
    let kind = ThresholdKind::from(args.kind);
    let report = IdealReport {
        ideal: ideal_threshold(&rw, kind)?,
        hc_threshold: hct_ideal(&rw.mixture(), DEFAULT_T0)?,
        bonferroni_threshold: bonferroni_threshold(rw.p)?,
        fdrt_threshold: args.alpha.map(|a| fdrt_threshold(&rw, a)).transpose()?,
        model: model.clone(),
        kind,
    };
    let mut artifacts = Artifacts::new(RunManifest::new(
        "ideal",
        None,
        &serde_json::json!({"args": &args, "model": &model}),
    )?);
    artifacts.add_json("ideal.json", &report)?;
    finish(artifacts, "ideal.json", &args.out.out)
}

#[derive(Debug, Args, Serialize)]
pub struct PhaseArgs {
    /// Spacing of the beta and r grids inside (0, 1).
    #[arg(long, default_value_t = 0.01)]
    pub grid_step: f64,
    /// Explicit beta values instead of the grid.
    #[arg(long, value_delimiter = ',')]
    pub betas: Option<Vec<f64>>,
    /// Explicit r values instead of the grid.
    #[arg(long, value_delimiter = ',')]
    pub rs: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

pub fn phase(args: PhaseArgs) -> Result<()> {
    let grid = open_unit_grid(args.grid_step)?;
    let betas = args.betas.clone().unwrap_or_else(|| grid.clone());
    let rs = args.rs.clone().unwrap_or(grid);
    let mut rows = Vec::with_capacity(betas.len() * rs.len());
    for &beta in &betas {
        for &r in &rs {
            rows.push(classify(beta, r)?);
        }
    }
    let mut artifacts = Artifacts::new(RunManifest::new("phase", None, &args)?);
    artifacts.add_csv("phase.csv", &rows)?;
    finish(artifacts, "phase.csv", &args.out.out)
}

#[derive(Debug, Args, Serialize)]
pub struct BoundaryArgs {
    /// Feature counts.
    #[arg(long, value_delimiter = ',', default_value = "3000,30000,300000")]
    pub p: Vec<u64>,
    /// Proxy error levels in (0, 0.5].
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.4")]
    pub levels: Vec<f64>,
    /// Spacing of the beta grid inside (0, 1).
    #[arg(long, default_value_t = 0.05)]
    pub grid_step: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct BoundaryRow {
    pub p: u64,
    pub n: u64,
    pub beta: f64,
    pub level: f64,
    pub r: Option<f64>,
    pub rho_star: f64,
}

pub fn boundary(args: BoundaryArgs) -> Result<()> {
    let betas = open_unit_grid(args.grid_step)?;
    let mut rows = Vec::new();
    for &p in &args.p {
        let n = default_n(p);
        for pt in finite_p_boundary(p, &args.levels, &betas)? {
            rows.push(BoundaryRow {
                p,
                n,
                beta: pt.beta,
                level: pt.level,
                r: pt.r,
                rho_star: rho_star(pt.beta)?,
            });
        }
    }
    let mut artifacts = Artifacts::new(RunManifest::new("boundary", None, &args)?);
    artifacts.add_csv("boundary.csv", &rows)?;
    finish(artifacts, "boundary.csv", &args.out.out)
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectorArg {
    Hct,
    Ideal,
    Fixed,
    Fdrt,
    Bonferroni,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZModeArg {
    Direct,
    FullMatrix,
}

impl From<ZModeArg> for ZScoreMode {
    fn from(m: ZModeArg) -> Self {
        match m {
            ZModeArg::Direct => ZScoreMode::Direct,
            ZModeArg::FullMatrix => ZScoreMode::FullMatrix,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = KindArg::Clip)]
    pub kind: KindArg,
    #[arg(long, value_enum, default_value_t = SelectorArg::Hct)]
    pub selector: SelectorArg,
    /// Scan fraction for the HC selector.
    #[arg(long, default_value_t = DEFAULT_ALPHA0)]
    pub alpha0: f64,
    /// FDR level for the fdrt selector.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Threshold for the fixed selector.
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, default_value_t = rwsim::DEFAULT_REPLICATES)]
    pub replicates: usize,
    #[arg(long, default_value_t = rwsim::DEFAULT_TEST_SIZE)]
    pub test_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ZModeArg::Direct)]
    pub zscore_mode: ZModeArg,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Serialize)]
struct SimulateSummary {
    model: Model,
    config: SimConfig,
    n_ok: usize,
    threshold: rwsim::Estimate,
    n_selected: rwsim::Estimate,
    realized_fdr: rwsim::Estimate,
    realized_mdr: rwsim::Estimate,
    test_error: rwsim::Estimate,
    plugin_error: rwsim::Estimate,
}

pub fn simulate(args: SimulateArgs) -> Result<()> {
    let model = Model::resolve(&args.model)?;
    let selector = match args.selector {
        SelectorArg::Hct => Selector::Hct {
            alpha0: args.alpha0,
        },
        SelectorArg::Ideal => Selector::IdealOracle,
        SelectorArg::Bonferroni => Selector::Bonferroni,
        SelectorArg::Fixed => Selector::Fixed {
            t: args.t.context("--selector fixed needs --t")?,
        },
        SelectorArg::Fdrt => Selector::Fdrt {
            alpha: args.alpha.context("--selector fdrt needs --alpha")?,
        },
    };
    let config = SimConfig {
        params: model.rw(),
        kind: args.kind.into(),
        selector,
        replicates: args.replicates,
        test_size: args.test_size,
        seed: args.seed,
        zscore_mode: args.zscore_mode.into(),
    };
    let outcome = rwsim::run(&config)?;
    let mut artifacts = Artifacts::new(RunManifest::new(
        "simulate",
        Some(args.seed),
        &serde_json::json!({"args": &args, "model": &model}),
    )?);
    artifacts.add_csv("simulate_records.csv", &outcome.records)?;
    let summary = SimulateSummary {
        model,
        config,
        n_ok: outcome.n_ok,
        threshold: outcome.threshold,
        n_selected: outcome.n_selected,
        realized_fdr: outcome.realized_fdr,
        realized_mdr: outcome.realized_mdr,
        test_error: outcome.test_error,
        plugin_error: outcome.plugin_error,
    };
    artifacts.add_json("simulate.json", &summary)?;
    finish(artifacts, "simulate.json", &args.out.out)
}

#[derive(Debug, Args, Serialize)]
pub struct ExponentsArgs {
    #[arg(long)]
    pub beta: f64,
    /// Spacing of the r grid inside (0, 1).
    #[arg(long, default_value_t = 0.01)]
    pub grid_step: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ExponentRow {
    pub r: f64,
    pub ideal: f64,
    pub hct: f64,
    pub fdrt: f64,
    pub bonferroni: f64,
}

#[derive(Debug, Serialize)]
struct ExponentBoundaries {
    beta: f64,
    boundary_ideal: f64,
    boundary_hct: f64,
    boundary_fdrt: f64,
    boundary_bonferroni: f64,
    /// Bonferroni is reported as gamma(1) = delta(1) / 2; tables that print
    /// delta(1) differ by this factor but share the positivity region.
    bonferroni_convention: &'static str,
}

pub fn exponents(args: ExponentsArgs) -> Result<()> {
    let beta = args.beta;
    let mut rows = Vec::new();
    for r in open_unit_grid(args.grid_step)? {
        rows.push(ExponentRow {
            r,
            ideal: method_exponent(Method::Ideal, beta, r)?,
            hct: method_exponent(Method::Hct, beta, r)?,
            fdrt: method_exponent(Method::Fdrt, beta, r)?,
            bonferroni: method_exponent(Method::Bonferroni, beta, r)?,
        });
    }
    let bounds = ExponentBoundaries {
        beta,
        boundary_ideal: method_success_region(Method::Ideal, beta)?,
        boundary_hct: method_success_region(Method::Hct, beta)?,
        boundary_fdrt: method_success_region(Method::Fdrt, beta)?,
        boundary_bonferroni: method_success_region(Method::Bonferroni, beta)?,
        bonferroni_convention: "gamma(1)",
    };
    let mut artifacts = Artifacts::new(RunManifest::new("exponents", None, &args)?);
    artifacts.add_csv("exponents.csv", &rows)?;
    artifacts.add_json("exponents.json", &bounds)?;
    finish(artifacts, "exponents.csv", &args.out.out)
}

#[derive(Debug, Args, Serialize)]
pub struct ZscoresArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Replicate index within the seed.
    #[arg(long, default_value_t = 0)]
    pub replicate: u64,
    #[arg(long, value_enum, default_value_t = ZModeArg::Direct)]
    pub zscore_mode: ZModeArg,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

pub fn zscores(args: ZscoresArgs) -> Result<()> {
    let model = Model::resolve(&args.model)?;
    let mut config = SimConfig::new(
        model.rw(),
        ThresholdKind::Clip,
        Selector::Fixed { t: 0.0 },
        args.seed,
    );
    config.zscore_mode = args.zscore_mode.into();
    let rep = generate(&config, args.replicate)?;
    let mut text = String::with_capacity(rep.z.len() * 20);
    for z in &rep.z {
        text.push_str(&z.to_string());
        text.push('\n');
    }
    let mut artifacts = Artifacts::new(RunManifest::new(
        "zscores",
        Some(args.seed),
        &serde_json::json!({"args": &args, "model": &model}),
    )?);
    artifacts.add("zscores.txt", text.into_bytes());
    finish(artifacts, "zscores.txt", &args.out.out)
}
