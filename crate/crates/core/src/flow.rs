//! Time integration by Lie–Euler gradient descent.
//!
//! Links move on the left trivialization, `U <- exp(-dt h^(2-n) Z) U`, the
//! Higgs field by `u <- u - dt G`. The `h^(2-n)` factor turns the pointwise
//! link gradient into the L^2 gradient of the continuum potential `A = log(U)/h`,
//! so the same `dt` means the same flow time for both halves at any spacing.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::algebra::Group;
use crate::energy::{curvature_derivative_l2, forward, ymh_k_energy, EnergyBreakdown, FlowParams};
use crate::error::{Error, Result};
use crate::fields::{curvature_pointwise_norm, GaugeField, HiggsField};
use crate::gradient::{gradient_with_energy, GradientPair};
use crate::io::config::RunConfig;
use crate::io::trace::TraceRecord;
use crate::lattice::LatticeShape;
use crate::reduce::max;

/// Halvings allowed before a backtracking step reports a stall.
pub const MAX_HALVINGS: u32 = 30;
/// Relative energy change treated as no change.
pub const STALL_TOLERANCE: f64 = 1e-15;
/// Links are projected back onto the group every this many steps.
pub const REUNITARIZE_EVERY: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Euler,
    Backtracking,
}

impl FromStr for Integrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Integrator::Euler),
            "backtracking" => Ok(Integrator::Backtracking),
            _ => Err(Error::Argument(format!(
                "integrator must be `euler` or `backtracking`, got `{s}`"
            ))),
        }
    }
}

impl fmt::Display for Integrator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Integrator::Euler => "euler",
            Integrator::Backtracking => "backtracking",
        })
    }
}

/// Default initial step `safety * h^(2(k+1))`.
pub fn default_dt(spacing: f64, k: usize, safety: f64) -> f64 {
    safety * spacing.powi(2 * (k as i32 + 1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState<G: Group> {
    pub t: f64,
    pub gauge: GaugeField<G>,
    pub higgs: HiggsField<G>,
    pub params: FlowParams,
    pub step_count: u64,
    pub last_dt: f64,
    pub last_energy: EnergyBreakdown,
}

impl<G: Group> FlowState<G> {
    pub fn new(gauge: GaugeField<G>, higgs: HiggsField<G>, params: FlowParams) -> Result<Self> {
        if gauge.lattice() != higgs.lattice() {
            return Err(Error::Argument("gauge and Higgs fields live on different lattices".into()));
        }
        let last_energy = ymh_k_energy(&gauge, &higgs, &params)?;
        Ok(Self {
            t: 0.0,
            gauge,
            higgs,
            params,
            step_count: 0,
            last_dt: 0.0,
            last_energy,
        })
    }

    /// Flat connection, vanishing Higgs field.
    pub fn cold(lattice: Arc<LatticeShape>, params: FlowParams) -> Result<Self> {
        Self::new(
            GaugeField::cold(lattice.clone()),
            HiggsField::zero(lattice),
            params,
        )
    }

    /// Links `exp` of uniform algebra noise, Higgs uniform complex noise,
    /// both of amplitude `amplitude`.
    pub fn hot(lattice: Arc<LatticeShape>, params: FlowParams, amplitude: f64, seed: u64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::Argument(format!("hot-start amplitude must be >= 0, got {amplitude}")));
        }
        Self::new(
            GaugeField::random(lattice.clone(), amplitude, seed),
            HiggsField::random(lattice, amplitude, seed),
            params,
        )
    }

    pub fn lattice(&self) -> &Arc<LatticeShape> {
        self.gauge.lattice()
    }

    /// Recomputes the energy and compares it with the cached value bit for bit.
    pub fn revalidate(&self) -> Result<bool> {
        Ok(ymh_k_energy(&self.gauge, &self.higgs, &self.params)? == self.last_energy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub dt_used: f64,
    pub backtrack_count: u32,
    pub energy_before: f64,
    pub energy_after: f64,
    /// L^2 norm of the gradient at the state the step started from.
    pub grad_norm: f64,
    pub sup_f: f64,
    pub sup_u2: f64,
}

/// Pointwise sup observables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monitor {
    pub sup_f: f64,
    pub sup_u2: f64,
    pub l2_u: f64,
}

pub fn monitor<G: Group>(u: &GaugeField<G>, higgs: &HiggsField<G>) -> Result<Monitor> {
    let f = crate::fields::curvature(u)?;
    Ok(monitor_from(&curvature_pointwise_norm(&f), higgs))
}

fn monitor_from<G: Group>(f_norm: &[f64], higgs: &HiggsField<G>) -> Monitor {
    Monitor {
        sup_f: max(f_norm),
        sup_u2: higgs.sup_norm_sqr(),
        l2_u: higgs.l2_sqr().sqrt(),
    }
}

/// L^2 norm of the flow velocity: `sqrt(h^(2-n) sum |Z|^2 + ||G||^2)`.
pub fn gradient_norm<G: Group>(grad: &GradientPair<G>, lattice: &LatticeShape) -> f64 {
    let c = link_scale(lattice);
    (c * grad.link_norm_sqr() + grad.higgs_grad.l2_sqr()).sqrt()
}

fn link_scale(lattice: &LatticeShape) -> f64 {
    lattice.spacing().powi(2 - lattice.dims() as i32)
}

fn trial<G: Group>(
    state: &FlowState<G>,
    grad: &GradientPair<G>,
    dt: f64,
    reunitarize: bool,
) -> (GaugeField<G>, HiggsField<G>) {
    let c = -dt * link_scale(state.lattice());
    let mut gauge = state.gauge.clone();
    gauge
        .links_mut()
        .par_iter_mut()
        .zip(grad.link_grad.par_iter())
        .for_each(|(l, z)| {
            let next = G::mul(&G::exp(&(*z * c)), l);
            *l = if reunitarize { G::reunitarize(&next) } else { next };
        });
    let mut higgs = state.higgs.clone();
    higgs
        .values_mut()
        .par_iter_mut()
        .zip(grad.higgs_grad.values().par_iter())
        .for_each(|(v, g)| *v -= *g * dt);
    (gauge, higgs)
}

fn is_rough(e: &Error) -> bool {
    matches!(e, Error::CurvatureTooRough { .. } | Error::Branch { .. })
}

/// One flow step.
///
/// Backtracking halves `dt` until the energy decreases (or stays within
/// [`STALL_TOLERANCE`] of its value); at `lambda = 0` the trial must also not
/// increase `||u||^2`. Trial states that leave the logarithm chart count as
/// rejections.
pub fn step<G: Group>(state: &FlowState<G>, mode: Integrator, dt0: f64) -> Result<(FlowState<G>, StepStats)> {
    let (grad, energy) = gradient_with_energy(&state.gauge, &state.higgs, &state.params)?;
    step_with_gradient(state, &grad, energy.total, mode, dt0)
}

pub(crate) fn step_with_gradient<G: Group>(
    state: &FlowState<G>,
    grad: &GradientPair<G>,
    e0: f64,
    mode: Integrator,
    dt0: f64,
) -> Result<(FlowState<G>, StepStats)> {
    if !(dt0 > 0.0 && dt0.is_finite()) {
        return Err(Error::Argument(format!("dt0 must be positive, got {dt0}")));
    }
    let p = state.params;
    let reunit = (state.step_count + 1) % REUNITARIZE_EVERY == 0;
    let u2_before = (p.lambda == 0.0).then(|| state.higgs.l2_sqr());
    let mut dt = dt0;
    let mut halvings = 0u32;
    let mut last_rough: Option<Error>;
    let accepted = loop {
        let (gauge, higgs) = trial(state, grad, dt, reunit);
        match forward(&gauge, &higgs, &p) {
            Ok(fwd) => {
                let e1 = fwd.energy.total;
                let ok = match mode {
                    Integrator::Euler => true,
                    Integrator::Backtracking => {
                        let decreased = e1 < e0 || (e1 - e0).abs() <= STALL_TOLERANCE * e0.abs();
                        let u_ok = u2_before.is_none_or(|b| higgs.l2_sqr() <= b);
                        decreased && u_ok
                    }
                };
                if ok {
                    let f_norm = curvature_pointwise_norm(&fwd.curv[0]);
                    break (gauge, higgs, fwd.energy, f_norm);
                }
                last_rough = None;
            }
            Err(e) if is_rough(&e) => {
                if mode == Integrator::Euler {
                    return Err(Error::BlowUp(e.to_string()));
                }
                last_rough = Some(e);
            }
            Err(e) => return Err(e),
        }
        if halvings == MAX_HALVINGS {
            return Err(match last_rough {
                Some(e) => Error::BlowUp(e.to_string()),
                None => Error::Stalled { halvings },
            });
        }
        dt *= 0.5;
        halvings += 1;
    };
    let (gauge, higgs, energy, f_norm) = accepted;
    let mon = monitor_from(&f_norm, &higgs);
    let stats = StepStats {
        dt_used: dt,
        backtrack_count: halvings,
        energy_before: e0,
        energy_after: energy.total,
        grad_norm: gradient_norm(grad, state.lattice()),
        sup_f: mon.sup_f,
        sup_u2: mon.sup_u2,
    };
    let next = FlowState {
        t: state.t + dt,
        gauge,
        higgs,
        params: p,
        step_count: state.step_count + 1,
        last_dt: dt,
        last_energy: energy,
    };
    Ok((next, stats))
}

/// Why a run stopped.
#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    TimeReached,
    MaxSteps,
    /// Backtracking could not decrease the energy: treated as converged.
    Stalled,
    BlowUp(String),
}

impl Termination {
    pub fn is_blowup(&self) -> bool {
        matches!(self, Termination::BlowUp(_))
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::TimeReached => f.write_str("t_max reached"),
            Termination::MaxSteps => f.write_str("max_steps reached"),
            Termination::Stalled => f.write_str("stalled (converged)"),
            Termination::BlowUp(msg) => write!(f, "blow-up: {msg}"),
        }
    }
}

/// Hooks called by [`run_with_observer`]. All default to no-ops.
pub trait RunObserver<G: Group> {
    fn on_record(&mut self, _record: &TraceRecord) -> Result<()> {
        Ok(())
    }

    fn on_step(&mut self, _state: &FlowState<G>, _stats: &StepStats) -> Result<()> {
        Ok(())
    }

    fn on_snapshot(&mut self, _state: &FlowState<G>) -> Result<()> {
        Ok(())
    }

    fn on_finish(&mut self, _state: &FlowState<G>, _why: &Termination) -> Result<()> {
        Ok(())
    }
}

struct NoObserver;
impl<G: Group> RunObserver<G> for NoObserver {}

#[derive(Debug, Clone)]
pub struct RunOutput<G: Group> {
    pub state: FlowState<G>,
    pub trace: Vec<TraceRecord>,
    pub termination: Termination,
}

pub fn run<G: Group>(initial: FlowState<G>, cfg: &RunConfig) -> Result<RunOutput<G>> {
    run_with_observer(initial, cfg, &mut NoObserver)
}

fn record<G: Group>(
    state: &FlowState<G>,
    grad: &GradientPair<G>,
    cfg: &RunConfig,
) -> Result<TraceRecord> {
    let mon = monitor(&state.gauge, &state.higgs)?;
    let e = state.last_energy;
    let curvature_derivs = if cfg.record_derivatives {
        curvature_derivative_l2(&state.gauge, state.params.k)?
    } else {
        Vec::new()
    };
    Ok(TraceRecord {
        step: state.step_count,
        t: state.t,
        dt: state.last_dt,
        e_total: e.total,
        e_curv: e.curvature_term,
        e_higgs: e.higgs_term,
        e_pot: e.potential_term,
        l2_u: mon.l2_u,
        sup_f: mon.sup_f,
        sup_u2: mon.sup_u2,
        grad_norm: gradient_norm(grad, state.lattice()),
        curvature_derivs,
    })
}

/// Iterates [`step`] until `t_max`, `max_steps`, a stall or a blow-up.
///
/// A row is recorded for the initial state, every `record_every` steps and
/// for the final state; each row's `grad_norm` is the gradient at that state.
pub fn run_with_observer<G: Group>(
    initial: FlowState<G>,
    cfg: &RunConfig,
    obs: &mut dyn RunObserver<G>,
) -> Result<RunOutput<G>> {
    cfg.validate()?;
    let mut state = initial;
    let mut trace = Vec::new();
    if state.t >= cfg.t_max {
        return Ok(RunOutput {
            state,
            trace,
            termination: Termination::TimeReached,
        });
    }
    let dt0 = default_dt(state.lattice().spacing(), state.params.k, cfg.dt_safety);
    let first_step = state.step_count;
    let (mut grad, mut energy) = gradient_with_energy(&state.gauge, &state.higgs, &state.params)?;
    let mut last_recorded = None;
    let termination = loop {
        let taken = state.step_count - first_step;
        if taken % cfg.record_every == 0 {
            let rec = record(&state, &grad, cfg)?;
            obs.on_record(&rec)?;
            trace.push(rec);
            last_recorded = Some(state.step_count);
        }
        let remaining = cfg.t_max - state.t;
        if remaining <= 1e-9 * dt0 {
            break Termination::TimeReached;
        }
        if cfg.max_steps > 0 && taken >= cfg.max_steps {
            break Termination::MaxSteps;
        }
        // absorb accumulated rounding in t instead of taking a sliver step
        let dt = if remaining < dt0 * (1.0 + 1e-6) { remaining } else { dt0 };
        match step_with_gradient(&state, &grad, energy.total, cfg.integrator, dt) {
            Ok((next, stats)) => {
                state = next;
                obs.on_step(&state, &stats)?;
                (grad, energy) = gradient_with_energy(&state.gauge, &state.higgs, &state.params)?;
                if cfg.snapshot_every > 0 && (state.step_count - first_step) % cfg.snapshot_every == 0 {
                    obs.on_snapshot(&state)?;
                }
                let m = stats.sup_f + stats.sup_u2;
                if !(m <= cfg.blowup_ceiling) {
                    break Termination::BlowUp(format!(
                        "sup_F + sup_u2 = {m:e} exceeds ceiling {:e}",
                        cfg.blowup_ceiling
                    ));
                }
            }
            Err(Error::Stalled { .. }) => break Termination::Stalled,
            Err(Error::BlowUp(msg)) => break Termination::BlowUp(msg),
            Err(e) => return Err(e),
        }
    };
    if last_recorded != Some(state.step_count) {
        let rec = record(&state, &grad, cfg)?;
        obs.on_record(&rec)?;
        trace.push(rec);
    }
    obs.on_finish(&state, &termination)?;
    Ok(RunOutput {
        state,
        trace,
        termination,
    })
}
