//! Configuration, snapshots, traces, and the on-disk run driver.

pub mod config;
pub mod snapshot;
pub mod trace;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::algebra::{Group, GroupKind};
use crate::error::{Error, Result};
use crate::flow::{run_with_observer, FlowState, RunObserver, RunOutput, StepStats, Termination};

use config::{InitMode, RunConfig};
use trace::{TraceRecord, TraceWriter};

pub const TRACE_FILE: &str = "trace.csv";
pub const FINAL_SNAPSHOT: &str = "final.ymhk";
pub const BLOWUP_SNAPSHOT: &str = "blowup.ymhk";

pub fn snapshot_name(step: u64) -> String {
    format!("snap_{step:08}.ymhk")
}

/// Builds the initial state described by `cfg.init`.
pub fn initial_state<G: Group>(cfg: &RunConfig) -> Result<FlowState<G>> {
    if cfg.group != G::KIND {
        return Err(Error::config("group", format!("config says {}, caller expects {}", cfg.group, G::KIND)));
    }
    let params = cfg.params()?;
    match &cfg.init {
        InitMode::Cold => FlowState::cold(Arc::new(cfg.lattice()?), params),
        InitMode::Hot { amplitude } => FlowState::hot(Arc::new(cfg.lattice()?), params, *amplitude, cfg.seed),
        InitMode::File(path) => {
            let loaded: FlowState<G> = snapshot::load_snapshot(path)?;
            adopt(loaded, cfg)
        }
    }
}

/// Checks that a loaded state matches the configured lattice and re-attaches
/// the configured flow parameters.
pub fn adopt<G: Group>(loaded: FlowState<G>, cfg: &RunConfig) -> Result<FlowState<G>> {
    let lat = loaded.lattice();
    if lat.extents() != cfg.extents.as_slice() {
        return Err(Error::config(
            "extents",
            format!("snapshot has extents {:?}, config {:?}", lat.extents(), cfg.extents),
        ));
    }
    if lat.spacing() != cfg.spacing {
        return Err(Error::config("h", format!("snapshot has h = {}, config {}", lat.spacing(), cfg.spacing)));
    }
    let mut state = FlowState::new(loaded.gauge, loaded.higgs, cfg.params()?)?;
    state.t = loaded.t;
    Ok(state)
}

/// Metadata lines written at the top of a trace. The output directory is
/// left out so traces of identical runs are byte-identical wherever they live.
pub fn trace_meta(cfg: &RunConfig) -> Vec<String> {
    cfg.to_text()
        .lines()
        .filter(|l| !l.starts_with("out_dir"))
        .map(str::to_string)
        .collect()
}

/// Writes the trace, periodic snapshots and the final snapshot into `out_dir`.
pub struct RunWriter {
    trace: TraceWriter<BufWriter<File>>,
    out_dir: PathBuf,
}

impl RunWriter {
    pub fn create(cfg: &RunConfig, out_dir: &Path, trace_name: &str) -> Result<Self> {
        std::fs::create_dir_all(out_dir)?;
        let file = File::create(out_dir.join(trace_name))?;
        let derivs = if cfg.record_derivatives { cfg.k + 1 } else { 0 };
        Ok(Self {
            trace: TraceWriter::new(BufWriter::new(file), &trace_meta(cfg), derivs)?,
            out_dir: out_dir.to_path_buf(),
        })
    }
}

impl<G: Group> RunObserver<G> for RunWriter {
    fn on_record(&mut self, record: &TraceRecord) -> Result<()> {
        self.trace.write(record)
    }

    fn on_step(&mut self, _state: &FlowState<G>, _stats: &StepStats) -> Result<()> {
        Ok(())
    }

    fn on_snapshot(&mut self, state: &FlowState<G>) -> Result<()> {
        snapshot::save_snapshot(state, &self.out_dir.join(snapshot_name(state.step_count)))
    }

    fn on_finish(&mut self, state: &FlowState<G>, why: &Termination) -> Result<()> {
        let name = if why.is_blowup() { BLOWUP_SNAPSHOT } else { FINAL_SNAPSHOT };
        snapshot::save_snapshot(state, &self.out_dir.join(name))
    }
}

/// Runs `initial` under `cfg`, writing everything into `cfg.out_dir`.
pub fn run_to_disk<G: Group>(initial: FlowState<G>, cfg: &RunConfig, trace_name: &str) -> Result<RunOutput<G>> {
    let mut writer = RunWriter::create(cfg, &cfg.out_dir, trace_name)?;
    run_with_observer(initial, cfg, &mut writer)
}

/// Summary of a finished run, independent of the group.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub group: GroupKind,
    pub steps: u64,
    pub t: f64,
    pub energy: f64,
    pub termination: Termination,
}

impl<G: Group> From<&RunOutput<G>> for RunSummary {
    fn from(out: &RunOutput<G>) -> Self {
        Self {
            group: G::KIND,
            steps: out.state.step_count,
            t: out.state.t,
            energy: out.state.last_energy.total,
            termination: out.termination.clone(),
        }
    }
}

/// Executes a config end to end: initial state, run, outputs on disk.
pub fn execute(cfg: &RunConfig) -> Result<RunSummary> {
    fn go<G: Group>(cfg: &RunConfig) -> Result<RunSummary> {
        let out = run_to_disk(initial_state::<G>(cfg)?, cfg, TRACE_FILE)?;
        Ok(RunSummary::from(&out))
    }
    match cfg.group {
        GroupKind::U1 => go::<crate::algebra::U1>(cfg),
        GroupKind::Su2 => go::<crate::algebra::Su2>(cfg),
    }
}

/// Continues from a snapshot with the flow settings of `cfg`; the new trace
/// is written to `trace.resume.csv` so the original trace is kept.
pub fn resume(cfg: &RunConfig, snapshot_path: &Path) -> Result<RunSummary> {
    fn go<G: Group>(cfg: &RunConfig, path: &Path) -> Result<RunSummary> {
        let state = adopt(snapshot::load_snapshot::<G>(path)?, cfg)?;
        let out = run_to_disk(state, cfg, "trace.resume.csv")?;
        Ok(RunSummary::from(&out))
    }
    let header = snapshot::read_header(snapshot_path)?;
    if header.group != cfg.group {
        return Err(Error::config(
            "group",
            format!("snapshot holds {}, config says {}", header.group, cfg.group),
        ));
    }
    match cfg.group {
        GroupKind::U1 => go::<crate::algebra::U1>(cfg, snapshot_path),
        GroupKind::Su2 => go::<crate::algebra::Su2>(cfg, snapshot_path),
    }
}
