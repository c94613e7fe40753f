//! The invariant suite behind `ymhk verify`.

use std::fmt;

use crate::algebra::{Group, GroupKind, Su2, U1};
use crate::analysis::{concentration_peak, gauge_transform, GaugeTransform};
use crate::energy::{curvature_derivative_l2, ymh_k_energy};
use crate::error::Result;
use crate::fields::{cov_diff, cov_diff_adjoint, kato_violations, FieldKind, GaugeField, TensorField};
use crate::fields::{AlgebraKind, HiggsKind};
use crate::flow::{monitor, step, FlowState, Integrator};
use crate::gradient::{fd_check_with, gradient, Direction};
use crate::io::config::{InitMode, RunConfig};
use crate::io::initial_state;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{mark}  {:<22} {}", self.name, self.detail)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 { 0.0 } else { (a - b).abs() / s }
}

fn adjoint_defect<G: Group, K: FieldKind<G>>(u: &GaugeField<G>, rank: usize, seed: u64) -> Result<f64> {
    let lat = u.lattice().clone();
    let phi = TensorField::<G, K>::random(lat.clone(), rank, 1.0, seed);
    let psi = TensorField::<G, K>::random(lat, rank + 1, 1.0, seed + 1);
    let lhs = cov_diff(u, &phi).inner(&psi);
    let rhs = phi.inner(&cov_diff_adjoint(u, &psi)?);
    Ok((lhs - rhs).abs() / (phi.norm_sqr() * psi.norm_sqr()).sqrt())
}

/// Scalar observables that must be gauge invariant.
fn observables<G: Group>(s: &FlowState<G>, u: &GaugeField<G>, h: &crate::fields::HiggsField<G>) -> Result<Vec<f64>> {
    let e = ymh_k_energy(u, h, &s.params)?;
    let m = monitor(u, h)?;
    let mut out = vec![e.total, e.curvature_term, e.higgs_term, e.potential_term, m.sup_f, m.sup_u2, m.l2_u];
    out.extend(curvature_derivative_l2(u, s.params.k)?);
    out.push(concentration_peak(u, h)?.0 .0 as f64);
    Ok(out)
}

fn suite<G: Group>(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut state: FlowState<G> = initial_state(cfg)?;
    if state.last_energy.total == 0.0 || cfg.init == InitMode::Cold {
        state = FlowState::hot(state.lattice().clone(), state.params, 0.5, cfg.seed)?;
    }
    let u = &state.gauge;
    let mut checks = Vec::new();

    let mut worst: f64 = 0.0;
    for trial in 0..10u64 {
        let rank = (trial % 3) as usize;
        worst = worst.max(adjoint_defect::<G, AlgebraKind>(u, rank, cfg.seed + 2 * trial)?);
        worst = worst.max(adjoint_defect::<G, HiggsKind>(u, rank, cfg.seed + 2 * trial)?);
    }
    checks.push(Check {
        name: "adjointness",
        passed: worst < 1e-12,
        detail: format!("max relative defect {worst:.2e} (< 1e-12)"),
    });

    let base = observables(&state, &state.gauge, &state.higgs)?;
    let mut worst: f64 = 0.0;
    for trial in 0..5u64 {
        let g = GaugeTransform::<G>::random(state.lattice(), cfg.seed.wrapping_add(100 + trial));
        let (gu, gh) = gauge_transform(&state.gauge, &state.higgs, &g);
        let obs = observables(&state, &gu, &gh)?;
        for (a, b) in base.iter().zip(&obs) {
            worst = worst.max(rel(*a, *b));
        }
    }
    checks.push(Check {
        name: "gauge invariance",
        passed: worst < 1e-12,
        detail: format!("max relative change {worst:.2e} (< 1e-12)"),
    });

    let grad = gradient(&state.gauge, &state.higgs, &state.params)?;
    let mut worst: f64 = 0.0;
    for trial in 0..10u64 {
        let dir = Direction::random(&state.gauge, cfg.seed.wrapping_add(200 + trial));
        let fd = fd_check_with(&grad, &state.gauge, &state.higgs, &state.params, &dir, 1e-5)?;
        worst = worst.max(fd.rel_err);
    }
    checks.push(Check {
        name: "fd gradient",
        passed: worst < 1e-6,
        detail: format!("max relative error {worst:.2e} (< 1e-6)"),
    });

    let mut s = state.clone();
    let mut increases = 0;
    let mut kato = kato_violations(&s.gauge, &s.higgs);
    for _ in 0..20 {
        let (next, stats) = step(&s, Integrator::Backtracking, cfg.dt0())?;
        if stats.energy_after > stats.energy_before * (1.0 + 1e-15) {
            increases += 1;
        }
        s = next;
        kato += kato_violations(&s.gauge, &s.higgs);
    }
    checks.push(Check {
        name: "kato",
        passed: kato == 0,
        detail: format!("{kato} violations over 21 states"),
    });
    checks.push(Check {
        name: "monotonicity",
        passed: increases == 0,
        detail: format!(
            "{increases} increases in 20 steps, E {:.6e} -> {:.6e}",
            state.last_energy.total, s.last_energy.total
        ),
    });
    Ok(checks)
}

/// Runs the invariant suite on the configured lattice, group and parameters.
/// A cold configuration is replaced by a seeded hot start so the checks are
/// not vacuous.
pub fn verify(cfg: &RunConfig) -> Result<Vec<Check>> {
    match cfg.group {
        GroupKind::U1 => suite::<U1>(cfg),
        GroupKind::Su2 => suite::<Su2>(cfg),
    }
}
