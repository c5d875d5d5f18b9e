//! Batch experiment runner: TOML config in, CSV and JSON reports out.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::{
    best_separated, certify_cover, chain_check, covering_number_bounds, greedy_net_with, greedy_packing,
    linearized_cover, reducibility_gate, ChainCheck, LinearizedOptions, NetOptions, NetResult, DEFAULT_LOWER_CONSTANT,
    DEFAULT_UPPER_CONSTANT,
};
use crate::error::{Error, Result};
use crate::groups::{GroupKind, GroupSpec, HomSpace, SubgroupSpec};
use crate::invariants::{invariant_report, InvariantBudget, InvariantReport};
use crate::matcore::NormSpec;
use crate::verify::{verify_all, VerifyBudget};

/// Exit code for a completed run.
pub const EXIT_OK: u8 = 0;
/// Exit code for an invalid or unreadable config.
pub const EXIT_CONFIG: u8 = 1;
/// Exit code when a check fails or the packing chain is violated.
pub const EXIT_FAILED: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "homentropy", version, about = "Metric entropy experiments on homogeneous spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment described by a TOML config.
    Run(RunArgs),
}

#[derive(Clone, Debug, Default, Args)]
pub struct RunArgs {
    pub config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads, 0 for one per core.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Allow the linearized cover when kappa is not known to be 1.
    #[arg(long)]
    pub override_kappa_gate: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Invariants,
    PackingCurve,
    CoverCurve,
    VerifyAll,
    Bounds,
}

impl Task {
    fn name(self) -> &'static str {
        match self {
            Task::Invariants => "invariants",
            Task::PackingCurve => "packing_curve",
            Task::CoverCurve => "cover_curve",
            Task::VerifyAll => "verify_all",
            Task::Bounds => "bounds",
        }
    }

    fn needs_grid(self) -> bool {
        matches!(self, Task::PackingCurve | Task::CoverCurve | Task::Bounds)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverMethod {
    /// Farthest-point net on a Haar cloud.
    #[default]
    Net,
    /// Lattice in X pushed through the exponential.
    Linearized,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    /// "U" or "SO".
    pub group: String,
    pub n: usize,
    /// trivial, special, block_diagonal, tensor_factor or grassmann.
    pub subgroup: String,
    /// Subspace dimension for grassmann, block size for tensor_factor.
    pub k: Option<usize>,
    /// Number of blocks for tensor_factor.
    pub m: Option<usize>,
    pub partition: Option<Vec<usize>>,
    #[serde(default = "default_norm")]
    pub norm: String,
}

fn default_norm() -> String {
    "operator".into()
}

impl SpaceConfig {
    pub fn build(&self) -> Result<HomSpace> {
        let kind = match self.group.to_ascii_uppercase().as_str() {
            "U" => GroupKind::U,
            "SO" => GroupKind::SO,
            other => return Err(Error::Config(format!("unknown group {other:?}"))),
        };
        let need = |v: Option<usize>, key: &str| {
            v.ok_or_else(|| Error::Config(format!("subgroup {} needs `{key}`", self.subgroup)))
        };
        let subgroup = match self.subgroup.as_str() {
            "trivial" => SubgroupSpec::Trivial,
            "special" => SubgroupSpec::Special,
            "grassmann" => SubgroupSpec::Grassmann { k: need(self.k, "k")? },
            "tensor_factor" => SubgroupSpec::TensorFactor { m: need(self.m, "m")?, k: need(self.k, "k")? },
            "block_diagonal" => SubgroupSpec::BlockDiagonal {
                partition: self
                    .partition
                    .clone()
                    .ok_or_else(|| Error::Config("subgroup block_diagonal needs `partition`".into()))?,
            },
            other => return Err(Error::Config(format!("unknown subgroup {other:?}"))),
        };
        let norm: NormSpec = self.norm.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
        let group = GroupSpec::new(kind, self.n).map_err(|e| Error::Config(e.to_string()))?;
        HomSpace::new(group, subgroup, norm).map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    /// Haar samples offered to packings and nets.
    pub sampler: usize,
    /// Probe points for net certification.
    pub probe: usize,
    pub kappa_samples: usize,
    pub theta_candidates: usize,
    pub diam_samples: usize,
    /// Cap on linearized-cover centers.
    pub max_points: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            sampler: 20_000,
            probe: 4_000,
            kappa_samples: 64,
            theta_candidates: 4096,
            diam_samples: 64,
            max_points: 200_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// File name stem; defaults to the task name.
    pub prefix: Option<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("."), prefix: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsConfig {
    pub c: f64,
    pub big_c: f64,
    pub alpha: f64,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig { c: DEFAULT_LOWER_CONSTANT, big_c: DEFAULT_UPPER_CONSTANT, alpha: 1.0 / 3.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    pub space: SpaceConfig,
    #[serde(default)]
    pub epsilon_grid: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub cover_method: CoverMethod,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub verify: VerifyBudget,
    #[serde(default)]
    pub bounds: BoundsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.task.needs_grid() && self.epsilon_grid.is_empty() {
            return bad(format!("task {} needs a non-empty epsilon_grid", self.task.name()));
        }
        if let Some(e) = self.epsilon_grid.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return bad(format!("epsilon_grid entries must be positive, got {e}"));
        }
        if self.epsilon_grid.windows(2).any(|w| w[1] >= w[0]) {
            return bad("epsilon_grid must be strictly descending".into());
        }
        let b = &self.budgets;
        if [b.sampler, b.probe, b.kappa_samples, b.theta_candidates, b.diam_samples, b.max_points].contains(&0) {
            return bad("budgets must be positive".into());
        }
        if !(self.bounds.alpha > 0.0 && self.bounds.alpha <= 0.5) {
            return bad(format!("bounds.alpha must lie in (0, 1/2], got {}", self.bounds.alpha));
        }
        self.space.build().map(|_| ())
    }

    fn invariant_budget(&self) -> InvariantBudget {
        InvariantBudget {
            kappa_samples: self.budgets.kappa_samples,
            theta_candidates: self.budgets.theta_candidates,
            diam_samples: self.budgets.diam_samples,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuantityKind {
    Ntilde,
    #[serde(rename = "Npp_certified")]
    NppCertified,
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub space_id: String,
    pub epsilon: f64,
    pub quantity_kind: QuantityKind,
    pub count: usize,
    pub probe_max_dist: Option<f64>,
    pub seed: u64,
    pub budget: usize,
    #[serde(rename = "dim_M")]
    pub dim_m: usize,
    pub theta: Option<f64>,
    pub diam: f64,
    pub kappa_lb: f64,
}

/// What a run produced.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub failed_checks: Vec<String>,
    pub chain_violations: Vec<String>,
}

impl RunSummary {
    pub fn exit_code(&self) -> u8 {
        if self.failed_checks.is_empty() && self.chain_violations.is_empty() {
            EXIT_OK
        } else {
            EXIT_FAILED
        }
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s.into_bytes()
}

fn csv_bytes(rows: &[CurveRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))
}

struct Runner<'a> {
    cfg: &'a ExperimentConfig,
    space: HomSpace,
    seed: u64,
    dir: PathBuf,
    prefix: String,
    override_kappa: bool,
    summary: RunSummary,
}

impl Runner<'_> {
    fn write(&mut self, suffix: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(format!("{}{suffix}", self.prefix));
        write_atomic(&path, bytes)?;
        self.summary.files.push(path);
        Ok(())
    }

    fn invariants(&self) -> Result<InvariantReport> {
        invariant_report(&self.space, &self.cfg.invariant_budget(), self.seed)
    }

    fn row(&self, inv: &InvariantReport, kind: QuantityKind, r: &NetResult) -> CurveRow {
        CurveRow {
            space_id: self.space.to_string(),
            epsilon: r.epsilon,
            quantity_kind: kind,
            count: r.count,
            probe_max_dist: r.probe_max_dist,
            seed: self.seed,
            budget: self.cfg.budgets.sampler,
            dim_m: inv.dim_m,
            theta: inv.theta(),
            diam: inv.diam(),
            kappa_lb: inv.kappa_lower_bound,
        }
    }

    fn cover(&self, eps: f64) -> Result<NetResult> {
        let b = &self.cfg.budgets;
        match self.cfg.cover_method {
            CoverMethod::Net => greedy_net_with(
                &self.space,
                eps,
                &NetOptions { sampler_budget: b.sampler, probe_budget: b.probe, seed: self.seed, ..Default::default() },
            ),
            CoverMethod::Linearized => {
                let opts = LinearizedOptions {
                    max_points: b.max_points,
                    override_kappa: self.override_kappa,
                    ..Default::default()
                };
                let mut r = linearized_cover(&self.space, eps, &opts)?;
                r.probe_max_dist = certify_cover(&self.space, &r.points, b.probe, self.seed)?;
                r.probe_count = b.probe;
                Ok(r)
            }
        }
    }

    fn curve(&mut self, with_cover: bool) -> Result<()> {
        let inv = self.invariants()?;
        let grid = self.cfg.epsilon_grid.clone();
        let cells: Vec<(NetResult, Option<NetResult>)> = grid
            .par_iter()
            .map(|&eps| {
                let packing = greedy_packing(&self.space, eps, self.cfg.budgets.sampler, self.seed)?;
                if !with_cover {
                    return Ok((packing, None));
                }
                let cover = self.cover(eps)?;
                let packing = match self.cfg.cover_method {
                    CoverMethod::Net => best_separated(&self.space, packing, &cover)?,
                    CoverMethod::Linearized => packing,
                };
                Ok((packing, Some(cover)))
            })
            .collect::<Vec<Result<_>>>()
            .into_iter()
            .collect::<Result<_>>()?;

        let mut rows = Vec::new();
        let mut chain: Vec<ChainCheck> = Vec::new();
        for (i, (packing, cover)) in cells.iter().enumerate() {
            if let Some(c) = cover {
                rows.push(self.row(&inv, QuantityKind::NppCertified, c));
            }
            rows.push(self.row(&inv, QuantityKind::Ntilde, packing));
            let eps = grid[i];
            let half = grid.iter().position(|&e| (e - eps / 2.0).abs() <= 1e-12 * eps).map(|j| cells[j].0.count);
            // net centers are pairwise farther apart than eps; a lattice count
            // bounds the covering number from above only, so the first link
            // of the chain applies to the net alone
            let npp = match (cover, self.cfg.cover_method) {
                (Some(c), CoverMethod::Net) => c.count,
                _ => 0,
            };
            let check = chain_check(eps, npp, packing.count, half);
            self.summary.chain_violations.extend(check.violations.iter().cloned());
            chain.push(check);
        }
        self.write(".csv", &csv_bytes(&rows)?)?;
        self.write("_chain.json", &json_bytes(&chain))?;
        self.write("_invariants.json", &json_bytes(&inv))
    }

    fn verify(&mut self) -> Result<()> {
        let reports = verify_all(&self.space, &self.cfg.verify, self.seed)?;
        for (i, r) in reports.iter().enumerate() {
            if !r.passed {
                self.summary.failed_checks.push(format!("{} (worst violation {:e})", r.name, r.worst_violation));
            }
            self.write(&format!("_{i:02}_{}.json", r.name), &json_bytes(r))?;
        }
        self.write("_checks.json", &json_bytes(&reports))
    }

    fn bounds(&mut self) -> Result<()> {
        #[derive(Serialize)]
        struct BoundsFile {
            invariants: InvariantReport,
            gate: crate::entropy::GateReport,
            bounds: Vec<crate::entropy::BoundReport>,
        }
        let inv = self.invariants()?;
        let b = &self.cfg.bounds;
        let bounds = self
            .cfg
            .epsilon_grid
            .iter()
            .map(|&eps| covering_number_bounds(&self.space, &inv, eps, b.c, b.big_c))
            .collect();
        let gate = reducibility_gate(&self.space, &inv, b.alpha)?;
        self.write(".json", &json_bytes(&BoundsFile { invariants: inv, gate, bounds }))
    }
}

/// Runs a validated config; the returned summary decides the exit code.
pub fn run_config(cfg: &ExperimentConfig, args: &RunArgs) -> Result<RunSummary> {
    cfg.validate()?;
    let mut runner = Runner {
        cfg,
        space: cfg.space.build()?,
        seed: args.seed.unwrap_or(cfg.seed),
        dir: args.out_dir.clone().unwrap_or_else(|| cfg.output.dir.clone()),
        prefix: cfg.output.prefix.clone().unwrap_or_else(|| cfg.task.name().to_string()),
        override_kappa: args.override_kappa_gate,
        summary: RunSummary::default(),
    };
    match cfg.task {
        Task::Invariants => {
            let inv = runner.invariants()?;
            runner.write(".json", &json_bytes(&inv))?;
        }
        Task::PackingCurve => runner.curve(false)?,
        Task::CoverCurve => runner.curve(true)?,
        Task::VerifyAll => runner.verify()?,
        Task::Bounds => runner.bounds()?,
    }
    Ok(runner.summary)
}

/// Loads the config, runs it and maps the outcome to an exit code,
/// reporting problems on stderr.
pub fn run(args: &RunArgs) -> u8 {
    let cfg = match ExperimentConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match run_config(&cfg, args) {
        Ok(summary) => {
            for f in &summary.failed_checks {
                eprintln!("check failed: {f}");
            }
            for v in &summary.chain_violations {
                eprintln!("chain violation: {v}");
            }
            summary.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
task = "packing_curve"
epsilon_grid = [1.2, 0.9]
[space]
group = "SO"
n = 3
subgroup = "grassmann"
k = 1
"#;

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::from_toml(BASE).unwrap();
        assert_eq!(cfg.task, Task::PackingCurve);
        assert_eq!(cfg.space.build().unwrap().dim_m(), 2);
        assert_eq!(cfg.budgets, Budgets::default());
    }

    #[test]
    fn rejects_bad_grids() {
        for grid in ["[0.9, 1.2]", "[1.2, 1.2]", "[1.0, -0.5]", "[]"] {
            let text = BASE.replace("[1.2, 0.9]", grid);
            assert!(matches!(ExperimentConfig::from_toml(&text), Err(Error::Config(_))), "{grid}");
        }
    }

    #[test]
    fn rejects_unknown_keys_and_spaces() {
        assert!(ExperimentConfig::from_toml(&format!("{BASE}\nbogus = 1\n")).is_err());
        assert!(ExperimentConfig::from_toml(&BASE.replace("\"SO\"", "\"SU\"")).is_err());
        assert!(ExperimentConfig::from_toml(&BASE.replace("k = 1", "k = 3")).is_err());
    }

    #[test]
    fn csv_header_is_fixed() {
        let text = String::from_utf8(
            csv_bytes(&[CurveRow {
                space_id: "U1/trivial".into(),
                epsilon: 0.5,
                quantity_kind: QuantityKind::NppCertified,
                count: 7,
                probe_max_dist: None,
                seed: 1,
                budget: 10,
                dim_m: 1,
                theta: Some(1.0),
                diam: 3.0,
                kappa_lb: 1.0,
            }])
            .unwrap(),
        )
        .unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "space_id,epsilon,quantity_kind,count,probe_max_dist,seed,budget,dim_M,theta,diam,kappa_lb"
        );
        assert_eq!(lines.next().unwrap(), "U1/trivial,0.5,Npp_certified,7,,1,10,1,1.0,3.0,1.0");
    }
}
