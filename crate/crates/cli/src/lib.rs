//! Batch front-end: job configuration, the analysis pipeline and table reproduction.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use reachkit::adiabatic::{
    consistency_with_symmetry, gap_classification, sweep, write_sweep_csv, DEFAULT_ZERO_TOL,
};
use reachkit::lie::{
    center_dimension_fast, lie_closure_with, reductive_decomposition, simulability_check_with,
    ClosureOptions,
};
use reachkit::linalg::derive_seed;
use reachkit::operators::{
    build_adiabatic_examples, build_heisenberg, build_ising, build_parent_hamiltonian,
    build_resource_set, OperatorSum, ResourceSet, RingGeometry,
};
use reachkit::reachability::{
    default_initial_state, ground_space, verdict, Level, ReachabilityReport, Verdict,
    DEFAULT_DEGENERACY_TOL, SUPPORT_TOL,
};
use reachkit::rep::{commutant_seeded, isotypic_projectors, ProjectorTree, CLUSTER_TOL, PROJECTOR_TOL};
use reachkit::vqe::{lowest_eigenvalues, monitor_invariants, optimize, successes, write_trace_csv, VqeConfig};
use reachkit::{Error, Result};

/// Registers above this size need `sparse` for commutant-based commands.
pub const DENSE_SITE_LIMIT: usize = 7;
/// Largest register split into irreducible subspaces.
pub const IRREDUCIBLE_SITE_LIMIT: usize = 8;
/// Largest register whose Lie closure is attempted by `tables`.
pub const TABLE_LIE_LIMIT: usize = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Build,
    Lie,
    Decompose,
    Reach,
    Vqe,
    Adiabatic,
    Pipeline,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LevelChoice {
    Isotypic,
    Irreducible,
}

impl From<LevelChoice> for Level {
    fn from(l: LevelChoice) -> Self {
        match l {
            LevelChoice::Isotypic => Level::Isotypic,
            LevelChoice::Irreducible => Level::Irreducible,
        }
    }
}

/// Target Hamiltonian: a named model, one of the three-qubit adiabatic examples, or an operator
/// JSON file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum TargetSpec {
    Ising,
    Heisenberg,
    /// `H_1`, `H_2` or `H_3` of the adiabatic examples.
    Example(u8),
    Custom(PathBuf),
}

impl std::str::FromStr for TargetSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ising" => Ok(Self::Ising),
            "heisenberg" => Ok(Self::Heisenberg),
            "example1" => Ok(Self::Example(1)),
            "example2" => Ok(Self::Example(2)),
            "example3" => Ok(Self::Example(3)),
            _ => match s.strip_prefix("custom:") {
                Some(p) if !p.is_empty() => Ok(Self::Custom(PathBuf::from(p))),
                _ => Err(format!(
                    "unknown target {s:?}; expected ising, heisenberg, example1..3 or custom:<file>"
                )),
            },
        }
    }
}

impl TryFrom<String> for TargetSpec {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

impl From<TargetSpec> for String {
    fn from(t: TargetSpec) -> String {
        t.to_string()
    }
}

impl std::fmt::Display for TargetSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Ising => write!(f, "ising"),
            Self::Heisenberg => write!(f, "heisenberg"),
            Self::Example(k) => write!(f, "example{k}"),
            Self::Custom(p) => write!(f, "custom:{}", p.display()),
        }
    }
}

/// Every setting of one job. All fields have defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JobConfig {
    pub command: Command,
    pub n_sites: usize,
    pub target: TargetSpec,
    pub omega: f64,
    pub delta: f64,
    pub j: f64,
    pub h: f64,
    pub level: LevelChoice,
    pub seed: u64,
    pub out: PathBuf,
    pub restarts: usize,
    pub iterations: usize,
    /// `None` means `2 n_sites`.
    pub layers: Option<usize>,
    pub threads: Option<usize>,
    /// Allows commutant computations beyond [`DENSE_SITE_LIMIT`] sites.
    pub sparse: bool,
    pub grid: usize,
    /// Runs VQE after the verdict in `pipeline`.
    pub vqe: bool,
    /// Writes the projector sidecar next to `decomposition.json`.
    pub dump_projectors: bool,
    /// Lie closure dimension guard.
    pub max_dim: Option<usize>,
}

impl Default for JobConfig {
    fn default() -> Self {
        Self {
            command: Command::Pipeline,
            n_sites: 4,
            target: TargetSpec::Heisenberg,
            omega: 1.0,
            delta: 1.0,
            j: 1.0,
            h: 1.0,
            level: LevelChoice::Irreducible,
            seed: 0,
            out: PathBuf::from("reachkit-out"),
            restarts: 10,
            iterations: 5000,
            layers: None,
            threads: None,
            sparse: false,
            grid: 201,
            vqe: false,
            dump_projectors: false,
            max_dim: None,
        }
    }
}

impl JobConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Domain(msg));
        if self.n_sites == 0 {
            return bad("n_sites: must be at least 1".into());
        }
        for (name, v) in [("omega", self.omega), ("delta", self.delta), ("j", self.j), ("h", self.h)] {
            if !v.is_finite() {
                return bad(format!("{name}: must be finite, got {v}"));
            }
        }
        if self.restarts == 0 {
            return bad("restarts: must be at least 1".into());
        }
        if self.layers == Some(0) {
            return bad("layers: must be at least 1".into());
        }
        if self.grid < 2 {
            return bad(format!("grid: needs at least 2 points, got {}", self.grid));
        }
        if self.threads == Some(0) {
            return bad("threads: must be at least 1".into());
        }
        Ok(())
    }

    fn closure_options(&self) -> ClosureOptions {
        ClosureOptions {
            max_dim: self.max_dim,
            ..Default::default()
        }
    }

    fn check_dense(&self) -> Result<()> {
        if self.n_sites > DENSE_SITE_LIMIT && !self.sparse {
            return Err(Error::Capacity {
                what: "sites for commutant analysis without --sparse".into(),
                limit: DENSE_SITE_LIMIT,
                reached: self.n_sites,
            });
        }
        Ok(())
    }
}

/// Files written by a job and the exit code it maps to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_BLOCKED: i32 = 2;

fn tolerances() -> Value {
    json!({
        "support": SUPPORT_TOL,
        "degeneracy": DEFAULT_DEGENERACY_TOL,
        "cluster": CLUSTER_TOL,
        "projector": PROJECTOR_TOL,
        "adiabatic_zero": DEFAULT_ZERO_TOL,
        "closure_rank": ClosureOptions::default().rel_tol,
    })
}

/// Report wrapped with the configuration, seed, tolerances and tool version.
pub fn envelope(config: &JobConfig, report: Value) -> Value {
    json!({
        "tool": "reachkit",
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "seed": config.seed,
        "tolerances": tolerances(),
        "report": report,
    })
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Writer<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }

    fn json(&mut self, name: &str, v: &Value) -> Result<()> {
        let p = self.path(name);
        let mut text = serde_json::to_string_pretty(v)?;
        text.push('\n');
        fs::write(p, text)?;
        Ok(())
    }

    fn file(&mut self, name: &str) -> Result<BufWriter<fs::File>> {
        let p = self.path(name);
        Ok(BufWriter::new(fs::File::create(p)?))
    }
}

pub fn resources(config: &JobConfig) -> Result<ResourceSet> {
    build_resource_set(&RingGeometry::unit(config.n_sites))
}

pub fn target_hamiltonian(config: &JobConfig) -> Result<OperatorSum> {
    let n = config.n_sites;
    match &config.target {
        TargetSpec::Ising => build_ising(n, config.omega, config.delta, config.j),
        TargetSpec::Heisenberg => build_heisenberg(n, config.h, config.j),
        TargetSpec::Example(k) => {
            let ex = build_adiabatic_examples(n)?;
            Ok(match k {
                1 => ex.h1,
                2 => ex.h2,
                _ => ex.h3,
            })
        }
        TargetSpec::Custom(path) => {
            let text = fs::read_to_string(path)?;
            let op: OperatorSum = serde_json::from_str(&text)?;
            if op.n_sites() != n {
                return Err(Error::Structural(format!(
                    "target file {} acts on {} sites, expected {n}",
                    path.display(),
                    op.n_sites()
                )));
            }
            Ok(op)
        }
    }
}

/// Commutant and projector tree of the resource set; irreducible split up to
/// [`IRREDUCIBLE_SITE_LIMIT`] sites.
pub fn resource_tree(config: &JobConfig, set: &ResourceSet) -> Result<ProjectorTree> {
    config.check_dense()?;
    let hams = set.to_vec();
    let c = commutant_seeded(config.n_sites, &hams, derive_seed(config.seed, 1))?;
    let mut tree = isotypic_projectors(&c, &hams)?;
    if config.n_sites <= IRREDUCIBLE_SITE_LIMIT {
        let mats = hams.iter().map(|h| h.to_dense()).collect::<Result<Vec<_>>>()?;
        tree.split_all(&mats)?;
    }
    Ok(tree)
}

fn reach_report(config: &JobConfig, tree: &ProjectorTree, target: &OperatorSum) -> Result<ReachabilityReport> {
    let gs = ground_space(target, DEFAULT_DEGENERACY_TOL)?;
    let init = default_initial_state(config.n_sites)?;
    verdict(&init, &gs.basis, tree, config.level.into(), SUPPORT_TOL)
}

fn write_supports_csv(report: &ReachabilityReport, out: &mut dyn std::io::Write) -> Result<()> {
    let header: Vec<String> = ["subspace".to_string(), "dim".into(), "initial".into()]
        .into_iter()
        .chain((0..report.targets.len()).map(|k| format!("target{k}")))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for (i, e) in report.initial.iter().enumerate() {
        let mut row = vec![e.subspace.clone(), e.dim.to_string(), format!("{:.12e}", e.weight)];
        row.extend(report.targets.iter().map(|t| format!("{:.12e}", t[i].weight)));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

fn run_vqe(config: &JobConfig, set: &ResourceSet, target: &OperatorSum, tree: Option<&ProjectorTree>, w: &mut Writer) -> Result<Value> {
    let init = default_initial_state(config.n_sites)?;
    let mut cfg = VqeConfig::new(set.clone(), target.clone(), init.clone());
    cfg.restarts = config.restarts;
    cfg.iterations = config.iterations;
    cfg.seed = config.seed;
    if let Some(m) = config.layers {
        cfg.layers = m;
    }
    let mut traces = optimize(&cfg)?;
    let spectrum = lowest_eigenvalues(target, 8)?;
    let ground = spectrum[0];
    let monitors = match tree {
        Some(t) => traces
            .iter_mut()
            .map(|tr| monitor_invariants(tr, &init, t).map(|r| serde_json::to_value(r).expect("serializable")))
            .collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };
    write_trace_csv(&traces, &mut w.file("vqe_trace.csv")?)?;
    let summary = json!({
        "layers": cfg.layers,
        "restarts": cfg.restarts,
        "iterations": cfg.iterations,
        "best_energies": traces.iter().map(|t| t.best_energy).collect::<Vec<_>>(),
        "lambda": spectrum,
        "successes_1e-3": successes(&traces, ground, 1e-3),
        "invariant_monitor": monitors,
    });
    w.json("vqe.json", &envelope(config, summary.clone()))?;
    Ok(summary)
}

/// Runs one job, writing its reports under `config.out`.
pub fn run_pipeline(config: &JobConfig) -> Result<Outcome> {
    config.validate()?;
    fs::create_dir_all(&config.out)?;
    let mut w = Writer { dir: &config.out, files: Vec::new() };
    let set = resources(config)?;
    let mut exit_code = EXIT_OK;
    match config.command {
        Command::Build => {
            let target = target_hamiltonian(config)?;
            w.json("resources.json", &envelope(config, json!({
                "drift": set.drift, "omega": set.omega, "delta": set.delta,
            })))?;
            w.json("target.json", &envelope(config, serde_json::to_value(&target)?))?;
        }
        Command::Lie => {
            let opts = config.closure_options();
            let target = target_hamiltonian(config)?;
            let basis = lie_closure_with(&set.to_vec(), &opts)?;
            let dec = reductive_decomposition(&basis)?;
            let sim = simulability_check_with(&set.to_vec(), &target, &opts)?;
            w.json("lie.json", &envelope(config, json!({
                "resource": dec,
                "label": dec.label(),
                "simulability": sim,
            })))?;
        }
        Command::Decompose => {
            let tree = resource_tree(config, &set)?;
            write_decomposition(config, &tree, &mut w)?;
        }
        Command::Reach | Command::Pipeline => {
            let target = target_hamiltonian(config)?;
            let tree = resource_tree(config, &set)?;
            write_decomposition(config, &tree, &mut w)?;
            let report = reach_report(config, &tree, &target)?;
            w.json("reachability.json", &envelope(config, serde_json::to_value(&report)?))?;
            write_supports_csv(&report, &mut w.file("supports.csv")?)?;
            if config.command == Command::Pipeline && config.vqe {
                run_vqe(config, &set, &target, Some(&tree), &mut w)?;
            }
            if report.verdict == Verdict::Blocked {
                exit_code = EXIT_BLOCKED;
            }
        }
        Command::Vqe => {
            let target = target_hamiltonian(config)?;
            let tree = if config.n_sites <= DENSE_SITE_LIMIT || config.sparse {
                Some(resource_tree(config, &set)?)
            } else {
                None
            };
            run_vqe(config, &set, &target, tree.as_ref(), &mut w)?;
        }
        Command::Adiabatic => {
            let h0 = build_parent_hamiltonian(config.n_sites);
            let target = target_hamiltonian(config)?;
            let sw = sweep(&h0, &target, config.grid)?;
            let class = gap_classification(&sw, DEFAULT_ZERO_TOL);
            let cross = if config.n_sites <= DENSE_SITE_LIMIT {
                Some(consistency_with_symmetry(&h0, &target, config.grid)?)
            } else {
                None
            };
            let levels = if config.n_sites <= 6 { None } else { Some(16) };
            write_sweep_csv(&sw, levels, &mut w.file("adiabatic.csv")?)?;
            w.json("adiabatic.json", &envelope(config, json!({
                "min_gap": sw.min_gap,
                "classification": class,
                "grid_points": sw.tau_grid.len(),
                "bisections": sw.bisections,
                "cross_report": cross,
            })))?;
        }
    }
    Ok(Outcome { exit_code, files: w.files })
}

fn write_decomposition(config: &JobConfig, tree: &ProjectorTree, w: &mut Writer) -> Result<()> {
    let mut report = tree.to_json();
    if config.dump_projectors {
        let p = w.path("projectors.bin");
        let index = tree.write_sidecar(&p)?;
        report["sidecar"] = serde_json::to_value(index)?;
    }
    w.json("decomposition.json", &envelope(config, report))
}

/// One row of the reproduced support tables.
#[derive(Clone, Debug, Serialize)]
pub struct TableRow {
    pub n_sites: usize,
    pub subspaces: Option<String>,
    pub grouped_dims: Option<Vec<Vec<usize>>>,
    pub level: Option<Level>,
    pub lie_dim: Option<usize>,
    pub decomposition: Option<String>,
    /// Center dimensions of the resource algebra and of its Heisenberg and Ising extensions.
    pub center_dims: Option<[usize; 3]>,
    pub initial_support: Option<Vec<String>>,
    pub heisenberg_support: Option<Vec<String>>,
    pub heisenberg_verdict: Option<Verdict>,
    pub ising_support: Option<Vec<String>>,
    pub ising_verdict: Option<Verdict>,
    pub error: Option<String>,
}

fn table_row(config: &JobConfig, n: usize) -> Result<TableRow> {
    let cfg = JobConfig { n_sites: n, ..config.clone() };
    let set = resources(&cfg)?;
    let hams = set.to_vec();
    let tree = resource_tree(&cfg, &set)?;
    let heis = build_heisenberg(n, cfg.h, cfg.j)?;
    let ising = build_ising(n, cfg.omega, cfg.delta, cfg.j)?;
    let rh = reach_report(&cfg, &tree, &heis)?;
    let ri = reach_report(&cfg, &tree, &ising)?;
    let seed = derive_seed(cfg.seed, 1);
    let center = |extra: Option<&OperatorSum>| -> Result<usize> {
        let mut gens = hams.clone();
        gens.extend(extra.cloned());
        let c = commutant_seeded(n, &gens, seed)?;
        center_dimension_fast(&gens, &c)
    };
    let center_dims = [center(None)?, center(Some(&heis))?, center(Some(&ising))?];
    let (lie_dim, decomposition) = if n <= TABLE_LIE_LIMIT {
        let basis = lie_closure_with(&hams, &cfg.closure_options())?;
        let dec = reductive_decomposition(&basis)?;
        (Some(basis.dim()), Some(dec.label()))
    } else {
        (None, None)
    };
    Ok(TableRow {
        n_sites: n,
        subspaces: Some(tree.label()),
        grouped_dims: Some(tree.grouped_dims()),
        level: Some(rh.level),
        lie_dim,
        decomposition,
        center_dims: Some(center_dims),
        initial_support: Some(rh.initial_support.clone()),
        heisenberg_support: Some(rh.target_support),
        heisenberg_verdict: Some(rh.verdict),
        ising_support: Some(ri.target_support),
        ising_verdict: Some(ri.verdict),
        error: None,
    })
}

/// Reproduces the support tables for every `n` in `range`; failures are recorded per row.
pub fn run_tables(config: &JobConfig, range: std::ops::RangeInclusive<usize>) -> Result<(Vec<TableRow>, Outcome)> {
    fs::create_dir_all(&config.out)?;
    let mut rows = Vec::new();
    for n in range {
        rows.push(table_row(config, n).unwrap_or_else(|e| TableRow {
            n_sites: n,
            subspaces: None,
            grouped_dims: None,
            level: None,
            lie_dim: None,
            decomposition: None,
            center_dims: None,
            initial_support: None,
            heisenberg_support: None,
            heisenberg_verdict: None,
            ising_support: None,
            ising_verdict: None,
            error: Some(e.to_string()),
        }));
    }
    let mut w = Writer { dir: &config.out, files: Vec::new() };
    w.json("tables.json", &envelope(config, serde_json::to_value(&rows)?))?;
    let mut csv = w.file("tables.csv")?;
    use std::io::Write;
    writeln!(
        csv,
        "n,subspaces,lie_dim,decomposition,center_g,center_h,center_i,initial,heisenberg,heisenberg_verdict,ising,ising_verdict,error"
    )?;
    let opt = |v: &Option<String>| v.clone().unwrap_or_default();
    let ids = |v: &Option<Vec<String>>| v.as_ref().map(|x| x.join(" ")).unwrap_or_default();
    let verdict_text = |v: &Option<Verdict>| v.map(|x| format!("{x:?}")).unwrap_or_default();
    for r in &rows {
        let c = r.center_dims.map(|c| c.map(|x| x.to_string())).unwrap_or_default();
        writeln!(
            csv,
            "{},\"{}\",{},\"{}\",{},{},{},{},{},{},{},{},\"{}\"",
            r.n_sites,
            opt(&r.subspaces),
            r.lie_dim.map(|d| d.to_string()).unwrap_or_default(),
            opt(&r.decomposition),
            c[0],
            c[1],
            c[2],
            ids(&r.initial_support),
            ids(&r.heisenberg_support),
            verdict_text(&r.heisenberg_verdict),
            ids(&r.ising_support),
            verdict_text(&r.ising_verdict),
            opt(&r.error).replace('"', "'"),
        )?;
    }
    csv.flush()?;
    drop(csv);
    Ok((rows, Outcome { exit_code: EXIT_OK, files: w.files }))
}
