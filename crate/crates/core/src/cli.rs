//! Command-line surface.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::algebra::Group;
use crate::analysis::{blowup_extract, blowup_extract_resampled, rescale, Interpolation};
use crate::error::{Error, Result};
use crate::flow::FlowState;
use crate::io::config::RunConfig;
use crate::io::snapshot::{self, AnyState};
use crate::io::{execute, initial_state, resume};
use crate::lattice::SiteId;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ymhk", version, about = "Higher-order Yang-Mills-Higgs flow on periodic lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the flow described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `out_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Continue a run from a snapshot.
    Resume {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant suite and print a pass/fail table.
    Verify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Rescale the initial state (or a snapshot) and compare energy ratios.
    ScaleTest {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        snapshot: Option<PathBuf>,
        /// Scale factors; each `1/rho` must be an integer.
        #[arg(long, value_delimiter = ',', default_value = "0.5")]
        rho: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Blow-up normalization of a snapshot.
    Blowup {
        #[arg(long)]
        snapshot: PathBuf,
        /// Also resample this many times finer.
        #[arg(long)]
        refine: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a snapshot header.
    Info {
        #[arg(long)]
        snapshot: PathBuf,
    },
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Argument(_) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("YMHK_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| Error::config("YMHK_THREADS", format!("not a thread count: `{v}`")))?;
    // A pool may already exist when called more than once in one process.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parses `argv` (including the program name), executes, and returns the
/// process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = configure_threads().and_then(|()| dispatch(cli.command));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn load_config(path: &Path, out: Option<PathBuf>) -> Result<RunConfig> {
    let mut cfg = RunConfig::from_file(path).map_err(|e| match e {
        Error::Io(io) => Error::config("--config", format!("{}: {io}", path.display())),
        other => other,
    })?;
    if let Some(out) = out {
        cfg.out_dir = out;
    }
    Ok(cfg)
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Run { config, out } => {
            let cfg = load_config(&config, out)?;
            let s = execute(&cfg)?;
            println!(
                "{}: {} steps, t = {:.6e}, E = {:.10e}, {}; output in {}",
                s.group,
                s.steps,
                s.t,
                s.energy,
                s.termination,
                cfg.out_dir.display()
            );
            Ok(EXIT_OK)
        }
        Command::Resume { config, snapshot, out } => {
            let cfg = load_config(&config, out)?;
            let s = resume(&cfg, &snapshot)?;
            println!(
                "{}: resumed to step {}, t = {:.6e}, E = {:.10e}, {}",
                s.group, s.steps, s.t, s.energy, s.termination
            );
            Ok(EXIT_OK)
        }
        Command::Verify { config } => {
            let cfg = load_config(&config, None)?;
            let checks = crate::verify::verify(&cfg)?;
            for c in &checks {
                println!("{c}");
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            println!("{} checks, {failed} failed", checks.len());
            Ok(if failed == 0 { EXIT_OK } else { EXIT_FAILURE })
        }
        Command::ScaleTest { config, snapshot, rho, out } => {
            let cfg = load_config(&config, out)?;
            let rho_inv = rho
                .iter()
                .map(|&r| {
                    let inv = (1.0 / r).round();
                    if !(r > 0.0 && r <= 1.0) || ((1.0 / r) - inv).abs() > 1e-9 {
                        Err(Error::config("--rho", format!("1/rho must be an integer, got rho = {r}")))
                    } else {
                        Ok(inv as usize)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let state = match snapshot {
                Some(p) => snapshot::load_any(&p)?,
                None => match cfg.group {
                    crate::algebra::GroupKind::U1 => AnyState::U1(initial_state(&cfg)?),
                    crate::algebra::GroupKind::Su2 => AnyState::Su2(initial_state(&cfg)?),
                },
            };
            let report = match &state {
                AnyState::U1(s) => scale_report(s, &rho_inv)?,
                AnyState::Su2(s) => scale_report(s, &rho_inv)?,
            };
            print!("{report}");
            write_report(&cfg.out_dir, "scale_report.txt", &report)?;
            Ok(EXIT_OK)
        }
        Command::Blowup { snapshot, refine, out } => {
            let report = match snapshot::load_any(&snapshot)? {
                AnyState::U1(s) => blowup_report(&s, refine, out.as_deref())?,
                AnyState::Su2(s) => blowup_report(&s, refine, out.as_deref())?,
            };
            print!("{report}");
            Ok(EXIT_OK)
        }
        Command::Info { snapshot } => {
            let h = snapshot::read_header(&snapshot)?;
            println!("group = {}", h.group);
            println!("n = {}", h.extents.len());
            println!("extents = {:?}", h.extents);
            println!("h = {}", h.spacing);
            println!("k = {}", h.k);
            println!("lambda = {}", h.lambda);
            println!("t = {}", h.t);
            println!("bytes = {}", h.file_len());
            Ok(EXIT_OK)
        }
    }
}

fn write_report(dir: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

fn scale_report<G: Group>(state: &FlowState<G>, rho_inv: &[usize]) -> Result<String> {
    let mut out = String::new();
    for &r in rho_inv {
        let (_, rep) = rescale(state, r, SiteId(0))?;
        let _ = writeln!(out, "[rho = {}]", rep.rho);
        let _ = writeln!(out, "energy_ratio_observed = {:.16e}", rep.energy_ratio_observed);
        let _ = writeln!(out, "energy_ratio_predicted = {:.16e}", rep.energy_ratio_predicted);
        let _ = writeln!(out, "time_dilation = {:.16e}", rep.time_dilation);
        let _ = writeln!(out, "interpolation_error_estimate = {:.16e}", rep.interpolation_error_estimate);
    }
    Ok(out)
}

fn blowup_report<G: Group>(state: &FlowState<G>, refine: Option<usize>, out: Option<&Path>) -> Result<String> {
    let (z, rho, site) = match refine {
        Some(r) => blowup_extract_resampled(state, r, Interpolation::Trigonometric)?,
        None => blowup_extract(state)?,
    };
    let m0 = crate::analysis::concentration(&z.gauge, &z.higgs)?[0];
    let coords = state.lattice().coords(site);
    let mut text = String::new();
    let _ = writeln!(text, "site = {}", site.0);
    let _ = writeln!(text, "coords = {coords:?}");
    let _ = writeln!(text, "rho = {rho:.16e}");
    let _ = writeln!(text, "spacing = {:.16e}", z.lattice().spacing());
    let _ = writeln!(text, "center_value = {m0:.16e}");
    if let Some(dir) = out {
        write_report(dir, "blowup_report.txt", &text)?;
        snapshot::save_snapshot(&z, &dir.join("extracted.ymhk"))?;
    }
    Ok(text)
}
