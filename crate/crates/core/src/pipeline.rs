//! Run configuration and the partition → preprocess → abstract → verify
//! driver used by the command-line tool.

use crate::abstraction::{
    build_states, compute_transitions, initial_unsafe, preprocess_all, safe_set, simulate, unsafe_fixed_point,
    AbstractionInput, Dynamics, ModelError, SafeCell, SimulationResult, StateBounds, StateSpace,
    TransitionOptions, TransitionStats, TransitionSystem, UnsafeRule,
};
use crate::generate::{benchmark_workspace, random_network};
use crate::geometry::{wksp_partition, GeometryError, LidarSpec, PartitionOptions, PartitionResult, WorkspaceSpec};
use crate::imaging::{partition_imaging, AffineImagingMap, ImagingError};
use crate::io::{self, AbstractionDoc, ConflictCacheDoc, IoError, PartitionDoc, SafeSetDoc, FORMAT_VERSION};
use crate::network::{load_network, NetworkError, NeuralNetwork};
use crate::smc::{encode_region, preprocess_region, Lit, SmcBudget, SmcError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::hash_map::DefaultHasher;
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("network: {0}")]
    Network(#[from] NetworkError),
    #[error("model: {0}")]
    Model(#[from] ModelError),
    #[error("partition: {0}")]
    Geometry(#[from] GeometryError),
    #[error("imaging: {0}")]
    Imaging(#[from] ImagingError),
    #[error("smc: {0}")]
    Smc(#[from] SmcError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LidarConfig {
    pub laser_count: usize,
    #[serde(default)]
    pub heading: f64,
    /// 1-based primary laser indices; all lasers when absent.
    #[serde(default)]
    pub primary: Option<Vec<usize>>,
}

impl LidarConfig {
    pub fn spec(&self) -> Result<LidarSpec, GeometryError> {
        match &self.primary {
            Some(p) => LidarSpec::new(self.laser_count, self.heading, p.clone()),
            None => LidarSpec::all_primary(self.laser_count, self.heading),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    /// SAT/LP rounds per SMC call.
    #[serde(default = "default_rounds")]
    pub max_rounds: Option<u64>,
    #[serde(default = "default_conflicts")]
    pub max_sat_conflicts: Option<u64>,
    /// Wall-clock limit per SMC call.
    #[serde(default)]
    pub time_limit_ms: Option<u64>,
    #[serde(default = "default_lp_tol")]
    pub lp_tol: f64,
}

fn default_rounds() -> Option<u64> {
    SmcBudget::default().max_rounds
}

fn default_conflicts() -> Option<u64> {
    SmcBudget::default().max_sat_conflicts
}

fn default_lp_tol() -> f64 {
    SmcBudget::default().lp_tol
}

impl Default for BudgetConfig {
    fn default() -> Self {
        Self {
            max_rounds: default_rounds(),
            max_sat_conflicts: default_conflicts(),
            time_limit_ms: None,
            lp_tol: default_lp_tol(),
        }
    }
}

impl BudgetConfig {
    pub fn budget(&self) -> SmcBudget {
        SmcBudget {
            max_rounds: self.max_rounds,
            max_sat_conflicts: self.max_sat_conflicts,
            time_limit: self.time_limit_ms.map(Duration::from_millis),
            lp_tol: self.lp_tol,
        }
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub workspace: PathBuf,
    pub network: PathBuf,
    pub dynamics: PathBuf,
    pub lidar: LidarConfig,
    /// Overrides the auxiliary grid step of the dynamics file.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub strict_closed: bool,
    #[serde(default)]
    pub refine_intra: bool,
    #[serde(default = "yes")]
    pub include_boundary_vertices: bool,
    /// Preload per-region conflict clauses into the transition checks.
    #[serde(default = "yes")]
    pub use_preprocessing: bool,
    #[serde(default)]
    pub budget: BudgetConfig,
    /// Worker threads; the rayon default when absent.
    #[serde(default)]
    pub workers: Option<usize>,
    pub output_dir: PathBuf,
}

impl RunConfig {
    /// Reads a JSON config; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = io::read_text(path)?;
        let mut c: RunConfig = serde_json::from_str(&text).map_err(|e| IoError::ParseError {
            context: format!("config file {}", path.display()),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut c.workspace, &mut c.network, &mut c.dynamics, &mut c.output_dir] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        for (what, p) in [("workspace", &self.workspace), ("network", &self.network), ("dynamics", &self.dynamics)] {
            if !p.is_file() {
                return Err(PipelineError::Config(format!("{what} file {} does not exist", p.display())));
            }
        }
        if let Some(e) = self.epsilon {
            if !(e.is_finite() && e > 0.0) {
                return Err(PipelineError::Config(format!("epsilon {e} must be positive")));
            }
        }
        let b = &self.budget;
        if b.max_rounds == Some(0) || b.max_sat_conflicts == Some(0) || b.time_limit_ms == Some(0) {
            return Err(PipelineError::Config("budgets must be positive".into()));
        }
        if !(b.lp_tol.is_finite() && b.lp_tol > 0.0) {
            return Err(PipelineError::Config(format!("lp_tol {} must be positive", b.lp_tol)));
        }
        if self.workers == Some(0) {
            return Err(PipelineError::Config("workers must be positive".into()));
        }
        self.lidar.spec()?;
        Ok(())
    }

    pub fn unsafe_rule(&self) -> UnsafeRule {
        if self.strict_closed {
            UnsafeRule::StrictClosed
        } else {
            UnsafeRule::BoundaryEdge
        }
    }

    pub fn partition_options(&self) -> PartitionOptions {
        PartitionOptions {
            include_boundary_vertices: self.include_boundary_vertices,
        }
    }
}

/// Validated inputs of one run.
#[derive(Debug, Clone)]
pub struct Problem {
    pub workspace: WorkspaceSpec,
    pub lidar: LidarSpec,
    pub net: NeuralNetwork,
    pub dynamics: Dynamics,
    pub bounds: StateBounds,
}

impl Problem {
    pub fn load(config: &RunConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        let workspace = io::load_workspace(&config.workspace)?;
        let net = load_network(&config.network).map_err(|e| match e {
            NetworkError::ParseError(m) => PipelineError::Io(IoError::ParseError {
                context: format!("network file {}", config.network.display()),
                message: m,
            }),
            e => PipelineError::Network(e),
        })?;
        let (dynamics, mut bounds) = io::load_dynamics(&config.dynamics)?;
        if let Some(e) = config.epsilon {
            bounds.epsilon = e;
        }
        Self::new(workspace, config.lidar.spec()?, net, dynamics, bounds)
    }

    pub fn new(
        workspace: WorkspaceSpec,
        lidar: LidarSpec,
        net: NeuralNetwork,
        dynamics: Dynamics,
        bounds: StateBounds,
    ) -> Result<Self, PipelineError> {
        bounds.counts()?;
        if net.input_dim != 2 * lidar.laser_count() {
            return Err(PipelineError::Config(format!(
                "network input dimension {} does not match 2 x {} lasers",
                net.input_dim,
                lidar.laser_count()
            )));
        }
        if net.output_dim != dynamics.input_dim() {
            return Err(PipelineError::Config(format!(
                "network output dimension {} does not match dynamics input dimension {}",
                net.output_dim,
                dynamics.input_dim()
            )));
        }
        if dynamics.state_dim() != bounds.aux_dims() + 2 {
            return Err(PipelineError::Config(format!(
                "state dimension {} does not match {} auxiliary bounds",
                dynamics.state_dim(),
                bounds.aux_dims()
            )));
        }
        Ok(Self {
            workspace,
            lidar,
            net,
            dynamics,
            bounds,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub partition_s: f64,
    pub imaging_s: f64,
    pub preprocess_s: f64,
    pub transitions_s: f64,
    pub fixed_point_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone)]
pub struct PartitionArtifacts {
    pub partition: PartitionResult,
    pub maps: Vec<Option<AffineImagingMap>>,
}

pub fn run_partition(
    problem: &Problem,
    options: PartitionOptions,
    timings: &mut PhaseTimings,
) -> Result<PartitionArtifacts, PipelineError> {
    let t = Instant::now();
    let partition = wksp_partition(&problem.workspace, &problem.lidar, options)?;
    timings.partition_s = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let maps = partition_imaging(&partition, &problem.workspace, &problem.lidar)?;
    timings.imaging_s = t.elapsed().as_secs_f64();
    Ok(PartitionArtifacts { partition, maps })
}

/// Preprocessing outcome of one fine region.
#[derive(Debug, Clone, PartialEq)]
pub enum RegionPreprocess {
    /// Obstacle interior; nothing to preprocess.
    Skipped,
    Done {
        feasible_phases: usize,
        clauses: Vec<Vec<Lit>>,
    },
    /// Budget exhausted; the region runs without preloaded clauses.
    TimedOut,
}

impl RegionPreprocess {
    pub fn clauses(&self) -> &[Vec<Lit>] {
        match self {
            RegionPreprocess::Done { clauses, .. } => clauses,
            _ => &[],
        }
    }
}

pub fn encoding_hash(net: &NeuralNetwork, maps: &AffineImagingMap) -> String {
    let mut h = DefaultHasher::new();
    net.to_json().hash(&mut h);
    serde_json::to_string(&maps.lasers).expect("maps serialize").hash(&mut h);
    serde_json::to_string(maps.region.vertices()).expect("vertices serialize").hash(&mut h);
    format!("{:016x}", h.finish())
}

pub fn run_preprocess(
    problem: &Problem,
    artifacts: &PartitionArtifacts,
    space: &StateSpace,
    budget: &SmcBudget,
) -> Result<Vec<RegionPreprocess>, PipelineError> {
    let input = abstraction_input(problem, artifacts);
    preprocess_all(&input, space, budget)
        .into_iter()
        .map(|r| match r {
            None => Ok(RegionPreprocess::Skipped),
            Some(Ok(p)) => Ok(RegionPreprocess::Done {
                feasible_phases: p.feasible_phases.len(),
                clauses: p.clauses(),
            }),
            Some(Err(SmcError::ResourceLimit)) | Some(Err(SmcError::Numerical(_))) => Ok(RegionPreprocess::TimedOut),
            Some(Err(e)) => Err(e.into()),
        })
        .collect()
}

fn abstraction_input<'a>(problem: &'a Problem, artifacts: &'a PartitionArtifacts) -> AbstractionInput<'a> {
    AbstractionInput {
        workspace: &problem.workspace,
        partition: &artifacts.partition,
        maps: &artifacts.maps,
        dynamics: &problem.dynamics,
        net: &problem.net,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArtifactPaths {
    pub partition: PathBuf,
    pub partition_svg: PathBuf,
    pub conflicts_dir: PathBuf,
    pub abstraction: PathBuf,
    pub safe_set: PathBuf,
    pub safe_set_svg: PathBuf,
}

impl ArtifactPaths {
    pub fn new(dir: &Path) -> Self {
        Self {
            partition: dir.join("partition.json"),
            partition_svg: dir.join("partition.svg"),
            conflicts_dir: dir.join("conflicts"),
            abstraction: dir.join("abstraction.json"),
            safe_set: dir.join("safe_set.json"),
            safe_set_svg: dir.join("safe_set.svg"),
        }
    }

    pub fn conflict_file(&self, region: usize) -> PathBuf {
        self.conflicts_dir.join(format!("region_{region:05}.json"))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub format_version: u32,
    pub fine_regions: usize,
    pub free_regions: usize,
    pub obstacle_regions: usize,
    pub aggregate_regions: usize,
    /// Abstract states, sink excluded.
    pub states: usize,
    /// Pairs in the transition dump, sink self-loop included.
    pub transitions: usize,
    pub unsafe_initial: usize,
    pub safe_states: usize,
    /// Unsafe abstract states, sink excluded.
    pub unsafe_states: usize,
    pub fixed_point_iterations: usize,
    /// Per fine region; 0 for obstacle interiors and timed-out regions.
    pub conflicts_per_region: Vec<usize>,
    pub feasible_phases_per_region: Vec<Option<usize>>,
    pub preprocess_timeouts: usize,
    pub transition_stats: TransitionStats,
    /// False when any check was inconclusive (kept conservatively).
    pub complete: bool,
    pub timings: PhaseTimings,
    pub artifacts: ArtifactPaths,
}

impl VerificationReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let t = &self.timings;
        let _ = writeln!(s, "regions           {} ({} free, {} obstacle)", self.fine_regions, self.free_regions, self.obstacle_regions);
        let _ = writeln!(s, "aggregate regions {}", self.aggregate_regions);
        let _ = writeln!(s, "states            {} (+ sink)", self.states);
        let _ = writeln!(s, "transitions       {}", self.transitions);
        let _ = writeln!(s, "initially unsafe  {}", self.unsafe_initial);
        let _ = writeln!(s, "safe states       {}", self.safe_states);
        let _ = writeln!(s, "unsafe states     {}", self.unsafe_states);
        let _ = writeln!(s, "fixed point iters {}", self.fixed_point_iterations);
        let _ = writeln!(s, "conflicts         {}", self.conflicts_per_region.iter().sum::<usize>());
        let _ = writeln!(s, "smc checks        {} ({} aggregate, {} pruned by aggregate)", self.transition_stats.smc_checks, self.transition_stats.aggregate_checks, self.transition_stats.aggregate_pruned);
        let _ = writeln!(s, "inconclusive      {} resource limits, {} numerical, {} preprocessing timeouts", self.transition_stats.resource_limits, self.transition_stats.numerical_failures, self.preprocess_timeouts);
        let _ = writeln!(s, "complete          {}", self.complete);
        let _ = writeln!(
            s,
            "time [s]          partition {:.3}, imaging {:.3}, preprocess {:.3}, transitions {:.3}, fixed point {:.3}, total {:.3}",
            t.partition_s, t.imaging_s, t.preprocess_s, t.transitions_s, t.fixed_point_s, t.total_s
        );
        let _ = writeln!(s, "safe set          {}", self.artifacts.safe_set.display());
        s
    }
}

/// Everything computed by a full run.
#[derive(Debug, Clone)]
pub struct Verification {
    pub artifacts: PartitionArtifacts,
    pub space: StateSpace,
    pub preprocess: Vec<RegionPreprocess>,
    pub transitions: TransitionSystem,
    pub unsafe_flags: Vec<bool>,
    pub safe: Vec<SafeCell>,
    pub timings: PhaseTimings,
    pub fixed_point_iterations: usize,
}

/// Knobs of [`verify_problem`] that do not live in the input files.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub partition: PartitionOptions,
    pub unsafe_rule: UnsafeRule,
    pub transitions: TransitionOptions,
    pub use_preprocessing: bool,
    pub preprocess_budget: SmcBudget,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            partition: PartitionOptions::default(),
            unsafe_rule: UnsafeRule::default(),
            transitions: TransitionOptions::default(),
            use_preprocessing: true,
            preprocess_budget: SmcBudget::default(),
        }
    }
}

impl VerifyOptions {
    pub fn from_config(config: &RunConfig) -> Self {
        let budget = config.budget.budget();
        Self {
            partition: config.partition_options(),
            unsafe_rule: config.unsafe_rule(),
            transitions: TransitionOptions {
                refine_intra: config.refine_intra,
                budget,
            },
            use_preprocessing: config.use_preprocessing,
            preprocess_budget: budget,
        }
    }
}

/// In-memory pipeline; `cached` supplies preprocessing results to reuse.
pub fn verify_problem(
    problem: &Problem,
    options: &VerifyOptions,
    cached: Option<Vec<RegionPreprocess>>,
) -> Result<Verification, PipelineError> {
    let start = Instant::now();
    let mut timings = PhaseTimings::default();
    let artifacts = run_partition(problem, options.partition, &mut timings)?;
    let space = build_states(&artifacts.partition, &problem.bounds)?;
    let t = Instant::now();
    let preprocess = match cached {
        Some(c) => c,
        None if options.use_preprocessing => run_preprocess(problem, &artifacts, &space, &options.preprocess_budget)?,
        None => artifacts
            .maps
            .iter()
            .map(|m| {
                if m.is_some() {
                    RegionPreprocess::Done {
                        feasible_phases: 0,
                        clauses: Vec::new(),
                    }
                } else {
                    RegionPreprocess::Skipped
                }
            })
            .collect(),
    };
    timings.preprocess_s = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let unsafe0 = initial_unsafe(&artifacts.partition, &space, &problem.workspace, options.unsafe_rule);
    let clauses: Vec<Vec<Vec<Lit>>> = preprocess.iter().map(|p| p.clauses().to_vec()).collect();
    let input = abstraction_input(problem, &artifacts);
    let transitions = compute_transitions(&input, &space, unsafe0, &clauses, &options.transitions)?;
    timings.transitions_s = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let (unsafe_flags, iterations) = unsafe_fixed_point(&transitions);
    let safe = safe_set(&space, &unsafe_flags);
    timings.fixed_point_s = t.elapsed().as_secs_f64();
    timings.total_s = start.elapsed().as_secs_f64();
    Ok(Verification {
        artifacts,
        space,
        preprocess,
        transitions,
        unsafe_flags,
        safe,
        timings,
        fixed_point_iterations: iterations,
    })
}

fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, PipelineError> {
    match workers {
        None => Ok(f()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| PipelineError::Config(format!("worker pool: {e}"))),
    }
}

fn write_partition(problem: &Problem, a: &PartitionArtifacts, paths: &ArtifactPaths) -> Result<(), PipelineError> {
    let doc = PartitionDoc::new(
        &a.partition,
        &a.maps,
        problem.lidar.angles(),
        problem.lidar.primary_indices().to_vec(),
    );
    io::write_text(&paths.partition, &io::to_json(&doc))?;
    io::write_text(&paths.partition_svg, &io::partition_svg(&problem.workspace, &a.partition))?;
    Ok(())
}

fn write_conflicts(
    problem: &Problem,
    a: &PartitionArtifacts,
    pre: &[RegionPreprocess],
    paths: &ArtifactPaths,
) -> Result<(), PipelineError> {
    for (r, p) in pre.iter().enumerate() {
        let (RegionPreprocess::Done { feasible_phases, clauses }, Some(maps)) = (p, &a.maps[r]) else {
            continue;
        };
        let doc = ConflictCacheDoc {
            format_version: FORMAT_VERSION,
            region: r,
            vertices: a.partition.fine_regions[r].vertices().to_vec(),
            relu_count: problem.net.relu_count(),
            encoding_hash: encoding_hash(&problem.net, maps),
            feasible_phases: *feasible_phases,
            clauses: io::clauses_to_dimacs(clauses),
        };
        io::write_text(&paths.conflict_file(r), &io::to_json(&doc))?;
    }
    Ok(())
}

/// Reads cached conflicts for every free region; `None` when any file is
/// missing or was produced for a different encoding.
pub fn load_conflict_cache(
    problem: &Problem,
    a: &PartitionArtifacts,
    paths: &ArtifactPaths,
) -> Result<Option<Vec<RegionPreprocess>>, PipelineError> {
    let mut out = Vec::with_capacity(a.maps.len());
    for (r, m) in a.maps.iter().enumerate() {
        let Some(maps) = m else {
            out.push(RegionPreprocess::Skipped);
            continue;
        };
        let path = paths.conflict_file(r);
        if !path.is_file() {
            return Ok(None);
        }
        let doc = io::parse_conflict_cache(&io::read_text(&path)?)?;
        if doc.region != r || doc.relu_count != problem.net.relu_count() || doc.encoding_hash != encoding_hash(&problem.net, maps) {
            return Ok(None);
        }
        out.push(RegionPreprocess::Done {
            feasible_phases: doc.feasible_phases,
            clauses: io::clauses_from_dimacs(&doc.clauses, doc.relu_count)?,
        });
    }
    Ok(Some(out))
}

/// `partition`: partition JSON (with imaging maps) and SVG.
pub fn cmd_partition(config: &RunConfig) -> Result<PartitionArtifacts, PipelineError> {
    let problem = Problem::load(config)?;
    let paths = ArtifactPaths::new(&config.output_dir);
    let a = in_pool(config.workers, || {
        run_partition(&problem, config.partition_options(), &mut PhaseTimings::default())
    })??;
    write_partition(&problem, &a, &paths)?;
    Ok(a)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreprocessSummary {
    pub format_version: u32,
    pub regions: Vec<PreprocessRegionSummary>,
    pub timeouts: usize,
    pub time_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreprocessRegionSummary {
    pub region: usize,
    pub feasible_phases: Option<usize>,
    pub conflicts: usize,
    pub timed_out: bool,
}

fn summarize(pre: &[RegionPreprocess], time_s: f64) -> PreprocessSummary {
    let regions: Vec<PreprocessRegionSummary> = pre
        .iter()
        .enumerate()
        .filter(|(_, p)| !matches!(p, RegionPreprocess::Skipped))
        .map(|(r, p)| PreprocessRegionSummary {
            region: r,
            feasible_phases: match p {
                RegionPreprocess::Done { feasible_phases, .. } => Some(*feasible_phases),
                _ => None,
            },
            conflicts: p.clauses().len(),
            timed_out: matches!(p, RegionPreprocess::TimedOut),
        })
        .collect();
    PreprocessSummary {
        format_version: FORMAT_VERSION,
        timeouts: regions.iter().filter(|r| r.timed_out).count(),
        regions,
        time_s,
    }
}

/// `preprocess`: partition plus one conflict cache file per free region.
pub fn cmd_preprocess(config: &RunConfig) -> Result<PreprocessSummary, PipelineError> {
    let problem = Problem::load(config)?;
    let paths = ArtifactPaths::new(&config.output_dir);
    let (a, pre, secs) = in_pool(config.workers, || -> Result<_, PipelineError> {
        let a = run_partition(&problem, config.partition_options(), &mut PhaseTimings::default())?;
        let space = build_states(&a.partition, &problem.bounds)?;
        let t = Instant::now();
        let pre = run_preprocess(&problem, &a, &space, &config.budget.budget())?;
        Ok((a, pre, t.elapsed().as_secs_f64()))
    })??;
    write_partition(&problem, &a, &paths)?;
    write_conflicts(&problem, &a, &pre, &paths)?;
    let summary = summarize(&pre, secs);
    io::write_text(&config.output_dir.join("preprocess.json"), &io::to_json(&summary))?;
    Ok(summary)
}

fn run_full(config: &RunConfig) -> Result<(Problem, Verification, ArtifactPaths), PipelineError> {
    let problem = Problem::load(config)?;
    let paths = ArtifactPaths::new(&config.output_dir);
    let options = VerifyOptions::from_config(config);
    let v = in_pool(config.workers, || -> Result<_, PipelineError> {
        let cached = if config.use_preprocessing {
            let mut t = PhaseTimings::default();
            let a = run_partition(&problem, options.partition, &mut t)?;
            load_conflict_cache(&problem, &a, &paths)?
        } else {
            None
        };
        verify_problem(&problem, &options, cached)
    })??;
    Ok((problem, v, paths))
}

/// `abstract`: partition, conflicts (reusing a valid cache) and the
/// abstraction dump.
pub fn cmd_abstract(config: &RunConfig) -> Result<Verification, PipelineError> {
    let (problem, v, paths) = run_full(config)?;
    write_partition(&problem, &v.artifacts, &paths)?;
    if config.use_preprocessing {
        write_conflicts(&problem, &v.artifacts, &v.preprocess, &paths)?;
    }
    let doc = AbstractionDoc::new(&v.space, &v.transitions, &v.unsafe_flags);
    io::write_text(&paths.abstraction, &io::to_json(&doc))?;
    Ok(v)
}

pub fn report(v: &Verification, paths: ArtifactPaths) -> VerificationReport {
    let p = &v.artifacts.partition;
    let free = p.free_regions().count();
    let unsafe_states = (0..v.space.len()).filter(|&s| v.unsafe_flags[s]).count();
    let stats = v.transitions.stats;
    let timeouts = v.preprocess.iter().filter(|p| matches!(p, RegionPreprocess::TimedOut)).count();
    VerificationReport {
        format_version: FORMAT_VERSION,
        fine_regions: p.fine_regions.len(),
        free_regions: free,
        obstacle_regions: p.fine_regions.len() - free,
        aggregate_regions: p.aggregate_regions.len(),
        states: v.space.len(),
        transitions: v.transitions.transition_count(),
        unsafe_initial: v.transitions.unsafe0.iter().filter(|&&b| b).count(),
        safe_states: v.space.len() - unsafe_states,
        unsafe_states,
        fixed_point_iterations: v.fixed_point_iterations,
        conflicts_per_region: v.preprocess.iter().map(|p| p.clauses().len()).collect(),
        feasible_phases_per_region: v
            .preprocess
            .iter()
            .map(|p| match p {
                RegionPreprocess::Done { feasible_phases, .. } => Some(*feasible_phases),
                _ => None,
            })
            .collect(),
        preprocess_timeouts: timeouts,
        transition_stats: stats,
        complete: stats.resource_limits == 0 && stats.numerical_failures == 0 && timeouts == 0,
        timings: v.timings,
        artifacts: paths,
    }
}

/// `verify`: every artifact of `abstract` plus the safe set, its SVG and
/// the report (JSON and text).
pub fn cmd_verify(config: &RunConfig) -> Result<VerificationReport, PipelineError> {
    let (problem, v, paths) = run_full(config)?;
    write_partition(&problem, &v.artifacts, &paths)?;
    if config.use_preprocessing {
        write_conflicts(&problem, &v.artifacts, &v.preprocess, &paths)?;
    }
    let doc = AbstractionDoc::new(&v.space, &v.transitions, &v.unsafe_flags);
    io::write_text(&paths.abstraction, &io::to_json(&doc))?;
    io::write_text(&paths.safe_set, &io::to_json(&SafeSetDoc::new(v.safe.clone())))?;
    io::write_text(
        &paths.safe_set_svg,
        &io::safe_set_svg(&problem.workspace, &v.artifacts.partition, &v.safe),
    )?;
    let r = report(&v, paths);
    io::write_text(&config.output_dir.join("report.json"), &io::to_json(&r))?;
    io::write_text(&config.output_dir.join("report.txt"), &r.to_text())?;
    Ok(r)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationDoc {
    pub format_version: u32,
    pub safe: bool,
    pub violation: Option<(usize, crate::abstraction::Violation)>,
    pub trajectory: Vec<Vec<f64>>,
}

/// `simulate`: closed-loop trajectory from `x0` with the ray-cast image.
pub fn cmd_simulate(config: &RunConfig, x0: &[f64], steps: usize) -> Result<SimulationResult, PipelineError> {
    let problem = Problem::load(config)?;
    if x0.len() != problem.dynamics.state_dim() {
        return Err(PipelineError::Config(format!(
            "initial state has {} coordinates, dynamics expects {}",
            x0.len(),
            problem.dynamics.state_dim()
        )));
    }
    let r = simulate(
        &problem.dynamics,
        &problem.net,
        &problem.workspace,
        &problem.lidar,
        &problem.bounds,
        x0,
        steps,
    );
    let doc = SimulationDoc {
        format_version: FORMAT_VERSION,
        safe: r.safe,
        violation: r.violation,
        trajectory: r.trajectory.clone(),
    };
    io::write_text(&config.output_dir.join("simulation.json"), &io::to_json(&doc))?;
    Ok(r)
}

/// One row of the partition scaling sweep; `time_s = None` is censored.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionBenchRow {
    pub vertices: usize,
    pub lasers: usize,
    pub regions: usize,
    pub time_s: Option<f64>,
}

/// Partitions [`benchmark_workspace`]`(v)` for every vertex and laser count.
pub fn bench_partition(
    vertex_counts: &[usize],
    laser_counts: &[usize],
    time_limit: Option<Duration>,
) -> Result<Vec<PartitionBenchRow>, PipelineError> {
    let mut rows = Vec::new();
    for &v in vertex_counts {
        let ws = benchmark_workspace(v);
        for &n in laser_counts {
            let lidar = LidarSpec::all_primary(n, 0.0)?;
            let t = Instant::now();
            let p = wksp_partition(&ws, &lidar, PartitionOptions::default())?;
            let secs = t.elapsed().as_secs_f64();
            rows.push(PartitionBenchRow {
                vertices: v,
                lasers: n,
                regions: p.fine_regions.len(),
                time_s: time_limit.is_none_or(|l| secs <= l.as_secs_f64()).then_some(secs),
            });
        }
    }
    Ok(rows)
}

/// One row of the preprocessing sweep; counts are `None` when censored.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkBenchRow {
    pub hidden: Vec<usize>,
    pub feasible_phases: Option<usize>,
    pub conflicts: Option<usize>,
    pub time_s: Option<f64>,
}

/// Preprocesses the largest free region of `benchmark_workspace(8)` with
/// eight lasers for a seeded random network of each architecture.
pub fn bench_networks(
    architectures: &[Vec<usize>],
    seed: u64,
    budget: &SmcBudget,
) -> Result<Vec<NetworkBenchRow>, PipelineError> {
    let ws = benchmark_workspace(8);
    let lidar = LidarSpec::all_primary(8, 0.0)?;
    let partition = wksp_partition(&ws, &lidar, PartitionOptions::default())?;
    let (region, _) = partition
        .free_regions()
        .max_by(|a, b| a.1.area().total_cmp(&b.1.area()).then(b.0.cmp(&a.0)))
        .expect("benchmark workspace has free regions");
    let maps = crate::imaging::region_imaging(&partition.fine_regions[region], &ws, &lidar)?;
    let cell = crate::abstraction::StateCell {
        region: partition.fine_regions[region].clone(),
        aux: Vec::new(),
    };
    let mut rows = Vec::new();
    for (i, hidden) in architectures.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        let net = random_network(&mut rng, 16, hidden, 2, 0.5, 1.0);
        let problem = encode_region(&cell, &maps, &net)?;
        let t = Instant::now();
        let row = match preprocess_region(&problem, budget) {
            Ok(p) => NetworkBenchRow {
                hidden: hidden.clone(),
                feasible_phases: Some(p.feasible_phases.len()),
                conflicts: Some(p.conflicts.len()),
                time_s: Some(t.elapsed().as_secs_f64()),
            },
            Err(SmcError::ResourceLimit) => NetworkBenchRow {
                hidden: hidden.clone(),
                feasible_phases: None,
                conflicts: None,
                time_s: None,
            },
            Err(e) => return Err(e.into()),
        };
        rows.push(row);
    }
    Ok(rows)
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "censored".to_string(), |x| x.to_string())
}

pub fn partition_bench_csv(rows: &[PartitionBenchRow]) -> String {
    let mut s = String::from("format_version,vertices,lasers,regions,time_s\n");
    for r in rows {
        let _ = writeln!(s, "{FORMAT_VERSION},{},{},{},{}", r.vertices, r.lasers, r.regions, opt(r.time_s.map(|t| format!("{t:.6}"))));
    }
    s
}

pub fn network_bench_csv(rows: &[NetworkBenchRow]) -> String {
    let mut s = String::from("format_version,architecture,relus,feasible_phases,conflicts,time_s\n");
    for r in rows {
        let arch: Vec<String> = r.hidden.iter().map(ToString::to_string).collect();
        let _ = writeln!(
            s,
            "{FORMAT_VERSION},{},{},{},{},{}",
            arch.join("x"),
            r.hidden.iter().sum::<usize>(),
            opt(r.feasible_phases),
            opt(r.conflicts),
            opt(r.time_s.map(|t| format!("{t:.6}")))
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_validation() {
        let c: RunConfig = serde_json::from_str(
            r#"{"workspace": "w.json", "network": "n.json", "dynamics": "d.json", "lidar": {"laser_count": 4}, "output_dir": "out"}"#,
        )
        .unwrap();
        assert!(c.include_boundary_vertices && c.use_preprocessing && !c.strict_closed);
        assert_eq!(c.budget, BudgetConfig::default());
        assert!(matches!(c.validate(), Err(PipelineError::Config(_))));
        assert!(serde_json::from_str::<RunConfig>(r#"{"workspace": "w.json"}"#).is_err());
    }

    #[test]
    fn single_point_sweep_is_one_row() {
        let rows = bench_partition(&[4], &[4], None).unwrap();
        assert_eq!(rows.len(), 1);
        let csv = partition_bench_csv(&rows);
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.lines().nth(1).unwrap().starts_with("1,4,4,"));
    }
}
