//! Acceptance suite: one pass/fail line per criterion, non-zero exit on failure.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use ymhk::algebra::{Group, Su2, U1};
use ymhk::analysis::{
    blowup_extract, blowup_extract_resampled, concentration, concentration_peak, final_decade_log_slope,
    gauge_transform, rescale, smoothing_diagnostic, GaugeTransform, Interpolation,
};
use ymhk::energy::{curvature_derivative_l2, ymh_energy, ymh_k_energy, FlowParams};
use ymhk::fields::{cov_diff, cov_diff_adjoint, kato_violations, AlgebraKind, FieldKind, GaugeField, HiggsField, HiggsKind, TensorField};
use ymhk::flow::{monitor, run_with_observer, step, FlowState, Integrator, RunObserver, StepStats, Termination};
use ymhk::gradient::{fd_check_with, gradient, Direction};
use ymhk::io::config::RunConfig;
use ymhk::io::snapshot::{encode, load_snapshot, save_snapshot};
use ymhk::io::trace::read_trace;
use ymhk::lattice::{LatticeShape, SiteId};
use ymhk::Result;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn lattice(ext: &[usize], h: f64) -> Arc<LatticeShape> {
    Arc::new(LatticeShape::new(ext, h).unwrap())
}

fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 { 0.0 } else { (a - b).abs() / s }
}

// 1 -------------------------------------------------------------------------

fn adjoint_worst<G: Group, K: FieldKind<G>>(ext: &[usize], seed: u64) -> f64 {
    let lat = lattice(ext, 0.7);
    let mut worst: f64 = 0.0;
    for i in 0..50u64 {
        let s = seed * 1000 + 3 * i;
        let u = GaugeField::<G>::random(lat.clone(), 1.0, s);
        let rank = (i % 3) as usize;
        let phi = TensorField::<G, K>::random(lat.clone(), rank, 1.0, s + 1);
        let psi = TensorField::<G, K>::random(lat.clone(), rank + 1, 1.0, s + 2);
        let lhs = cov_diff(&u, &phi).inner(&psi);
        let rhs = phi.inner(&cov_diff_adjoint(&u, &psi).unwrap());
        worst = worst.max((lhs - rhs).abs() / (phi.norm_sqr() * psi.norm_sqr()).sqrt());
    }
    worst
}

fn adjoint_exactness() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for (i, ext) in [&[6usize, 6][..], &[4, 4, 4, 4][..]].into_iter().enumerate() {
        let s = i as u64;
        worst = worst.max(adjoint_worst::<U1, AlgebraKind>(ext, s));
        worst = worst.max(adjoint_worst::<U1, HiggsKind>(ext, s + 10));
        worst = worst.max(adjoint_worst::<Su2, AlgebraKind>(ext, s + 20));
        worst = worst.max(adjoint_worst::<Su2, HiggsKind>(ext, s + 30));
    }
    Ok(outcome(worst < 1e-12, format!("max relative defect {worst:.2e} over 400 triples")))
}

// 2 -------------------------------------------------------------------------

fn scalars<G: Group>(u: &GaugeField<G>, h: &HiggsField<G>, p: &FlowParams) -> Result<(Vec<f64>, usize)> {
    let e = ymh_k_energy(u, h, p)?;
    let m = monitor(u, h)?;
    let mut v = vec![e.total, e.curvature_term, e.higgs_term, e.potential_term, ymh_energy(u, h)?.total];
    v.extend([m.sup_f, m.sup_u2, m.l2_u]);
    v.extend(curvature_derivative_l2(u, p.k)?);
    Ok((v, concentration_peak(u, h)?.0 .0))
}

fn gauge_worst<G: Group>(ext: &[usize]) -> Result<(f64, usize)> {
    let mut worst: f64 = 0.0;
    let mut moved = 0;
    for k in 0..=2 {
        let p = FlowParams::new(k, 1.0)?;
        let s = FlowState::<G>::hot(lattice(ext, 0.9), p, 0.5, 40 + k as u64)?;
        let (base, peak) = scalars(&s.gauge, &s.higgs, &p)?;
        for t in 0..20u64 {
            let g = GaugeTransform::<G>::random(s.lattice(), 1000 * k as u64 + t);
            let (gu, gh) = gauge_transform(&s.gauge, &s.higgs, &g);
            let (obs, gpeak) = scalars(&gu, &gh, &p)?;
            for (a, b) in base.iter().zip(&obs) {
                worst = worst.max(rel(*a, *b));
            }
            moved += usize::from(gpeak != peak);
        }
    }
    Ok((worst, moved))
}

fn gauge_invariance() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut moved = 0;
    for ext in [&[6usize, 6][..], &[4, 4, 4, 4][..]] {
        for (w, m) in [gauge_worst::<U1>(ext)?, gauge_worst::<Su2>(ext)?] {
            worst = worst.max(w);
            moved += m;
        }
    }
    Ok(outcome(
        worst < 1e-12 && moved == 0,
        format!("max relative change {worst:.2e}, argmax moved {moved} times"),
    ))
}

// 3 -------------------------------------------------------------------------

fn gradient_correctness() -> Result<Outcome> {
    let lat = lattice(&[6, 6], 1.0);
    let mut worst: f64 = 0.0;
    for k in 0..=2 {
        for lambda in [0.0, 1.0] {
            let p = FlowParams::new(k, lambda)?;
            let u = GaugeField::<Su2>::random(lat.clone(), 0.5, 7 + k as u64);
            let h = HiggsField::<Su2>::random(lat.clone(), 0.5, 8 + k as u64);
            let grad = gradient(&u, &h, &p)?;
            for d in 0..100u64 {
                let dir = Direction::random(&u, 500 + d);
                worst = worst.max(fd_check_with(&grad, &u, &h, &p, &dir, 1e-5)?.rel_err);
            }
        }
    }

    // truncation error of the central difference should scale as eps^2
    let p = FlowParams::new(1, 1.0)?;
    let u = GaugeField::<Su2>::random(lat.clone(), 0.5, 99);
    let h = HiggsField::<Su2>::random(lat.clone(), 0.5, 98);
    let grad = gradient(&u, &h, &p)?;
    let dir = Direction::random(&u, 97);
    let eps = [0.04, 0.02, 0.01, 0.005];
    let mut pts = Vec::new();
    for &e in &eps {
        let fd = fd_check_with(&grad, &u, &h, &p, &dir, e)?;
        pts.push((e, (fd.numeric - fd.analytic).abs()));
    }
    let slope = loglog_slope(&pts);
    Ok(outcome(
        worst < 1e-6 && (slope - 2.0).abs() <= 0.3,
        format!("max relative error {worst:.2e} over 600 directions; eps-sweep slope {slope:.3}"),
    ))
}

fn loglog_slope(pts: &[(f64, f64)]) -> f64 {
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

// 4, 5, 6, 9 ----------------------------------------------------------------

#[derive(Default)]
struct Watch {
    steps: usize,
    increases: usize,
    worst_increase: f64,
    u_increases: usize,
    prev_u2: f64,
    kato: usize,
    snapshots: usize,
    ymh: Vec<f64>,
}

impl<G: Group> RunObserver<G> for Watch {
    fn on_step(&mut self, state: &FlowState<G>, stats: &StepStats) -> Result<()> {
        self.steps += 1;
        let d = stats.energy_after - stats.energy_before;
        if d > 1e-15 * stats.energy_before.abs() {
            self.increases += 1;
            self.worst_increase = self.worst_increase.max(d / stats.energy_before.abs());
        }
        let u2 = state.higgs.l2_sqr();
        if u2 > self.prev_u2 {
            self.u_increases += 1;
        }
        self.prev_u2 = u2;
        self.ymh.push(ymh_energy(&state.gauge, &state.higgs)?.total);
        Ok(())
    }

    fn on_snapshot(&mut self, state: &FlowState<G>) -> Result<()> {
        self.snapshots += 1;
        self.kato += kato_violations(&state.gauge, &state.higgs);
        Ok(())
    }
}

struct FlowSummary {
    runs: usize,
    increases: usize,
    worst_increase: f64,
    u_increases: usize,
    kato: usize,
    snapshots: usize,
    short_runs: usize,
    converged: usize,
    ymh_worst: f64,
    richardson_worst: f64,
    richardson_converges: bool,
}

fn richardson<G: Group>(s: &FlowState<G>) -> Result<(f64, bool)> {
    let lat = s.lattice();
    let dt = 1e-4 * lat.spacing().powi(2 * (s.params.k as i32 + 1));
    let u2 = s.higgs.l2_sqr();
    let rate = |dt: f64| -> Result<f64> {
        let (next, _) = step(s, Integrator::Euler, dt)?;
        Ok((next.higgs.l2_sqr() - u2) / dt)
    };
    let (a1, a2) = (rate(dt)?, rate(dt / 2.0)?);
    let predicted = -2.0 * (2.0 * s.last_energy.higgs_term);
    let extrapolated = 2.0 * a2 - a1;
    Ok((rel(extrapolated, predicted), (a2 - predicted).abs() <= (a1 - predicted).abs()))
}

fn flow_runs<G: Group>(ext: &[usize], lambda: f64, sum: &mut FlowSummary) -> Result<()> {
    for k in 0..=2 {
        let p = FlowParams::new(k, lambda)?;
        let s = FlowState::<G>::hot(lattice(ext, 1.0), p, 0.5, 17 + k as u64)?;
        if lambda == 0.0 {
            let (err, conv) = richardson(&s)?;
            sum.richardson_worst = sum.richardson_worst.max(err);
            sum.richardson_converges &= conv;
        }
        let cfg = RunConfig {
            extents: ext.to_vec(),
            k,
            lambda,
            integrator: Integrator::Backtracking,
            dt_safety: 1.0,
            t_max: 1e12,
            max_steps: 500,
            record_every: 500,
            snapshot_every: 50,
            ..RunConfig::default()
        };
        let mut w = Watch {
            prev_u2: s.higgs.l2_sqr(),
            kato: kato_violations(&s.gauge, &s.higgs),
            ymh: vec![ymh_energy(&s.gauge, &s.higgs)?.total],
            ..Watch::default()
        };
        let out = run_with_observer(s, &cfg, &mut w)?;
        sum.runs += 1;
        match out.termination {
            Termination::MaxSteps if w.steps == 500 => {}
            Termination::Stalled => sum.converged += 1,
            _ => sum.short_runs += 1,
        }
        sum.increases += w.increases;
        sum.worst_increase = sum.worst_increase.max(w.worst_increase);
        sum.kato += w.kato;
        sum.snapshots += w.snapshots + 1;
        if lambda == 0.0 {
            sum.u_increases += w.u_increases;
        }
        if ext.len() == 4 && k >= 1 {
            let head = w.ymh.len().div_ceil(10);
            let early = w.ymh[..head].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let all = w.ymh.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            sum.ymh_worst = sum.ymh_worst.max(all / early);
        }
    }
    Ok(())
}

fn all_flow_runs() -> Result<FlowSummary> {
    let mut sum = FlowSummary {
        runs: 0,
        increases: 0,
        worst_increase: 0.0,
        u_increases: 0,
        kato: 0,
        snapshots: 0,
        short_runs: 0,
        converged: 0,
        ymh_worst: 0.0,
        richardson_worst: 0.0,
        richardson_converges: true,
    };
    for lambda in [0.0, 1.0] {
        for ext in [&[4usize, 4, 4, 4][..], &[8, 8][..]] {
            flow_runs::<U1>(ext, lambda, &mut sum)?;
            flow_runs::<Su2>(ext, lambda, &mut sum)?;
        }
    }
    Ok(sum)
}

// 7 -------------------------------------------------------------------------

fn plane_wave(l: usize, period: f64, k: usize) -> Result<FlowState<U1>> {
    let lat = lattice(&[l, l], period / l as f64);
    let w = 2.0 * std::f64::consts::PI / period;
    let u = GaugeField::<U1>::from_potential(lat.clone(), |x, mu| {
        let a = if mu == 0 { 0.3 * (w * x[1]).sin() } else { 0.2 * (w * x[0]).cos() };
        <U1 as Group>::alg_from_coords(&[a])
    });
    let h = HiggsField::<U1>::from_fn(lat, |x| Complex64::new(0.5 * (w * x[0]).cos(), 0.4 * (w * x[1]).sin()));
    FlowState::new(u, h, FlowParams::new(k, 0.0)?)
}

fn scaling_law() -> Result<Outcome> {
    let mut ok = true;
    let mut detail = Vec::new();
    for k in 0..=1 {
        let mut errs = Vec::new();
        for l in [16, 32] {
            let s = plane_wave(l, 16.0, k)?;
            let (_, rep) = rescale(&s, 2, SiteId(0))?;
            ok &= rep.time_dilation == 0.5f64.powi(2 * (k as i32 + 1));
            ok &= rep.energy_ratio_predicted == 0.5f64.powi(2 * k as i32 + 2);
            errs.push(rep.interpolation_error_estimate);
        }
        ok &= errs[0] < 0.10 && errs[1] < 0.05;
        detail.push(format!("k={k}: {:.2}% at h, {:.2}% at h/2", 100.0 * errs[0], 100.0 * errs[1]));
    }
    Ok(outcome(ok, detail.join("; ")))
}

// 8 -------------------------------------------------------------------------

fn smooth_peaked(l: usize) -> Result<FlowState<Su2>> {
    let lat = lattice(&[l, l], 1.0);
    let w = 2.0 * std::f64::consts::PI / l as f64;
    let u = GaugeField::<Su2>::from_potential(lat.clone(), |x, mu| {
        let a = 0.05 * ((w * x[0]).sin() + (w * x[1]).cos());
        <Su2 as Group>::alg_from_coords(&if mu == 0 { [a, 0.0, 0.5 * a] } else { [0.0, a, 0.0] })
    });
    let h = HiggsField::<Su2>::from_fn(lat, |x| {
        let amp = 1.0 + 0.5 * (w * (x[0] - 13.0)).cos() * (w * (x[1] - 21.0)).cos();
        <Su2 as Group>::higgs_from_complex(&[Complex64::new(amp, 0.0), Complex64::new(0.0, 0.3 * amp)])
    });
    FlowState::new(u, h, FlowParams::new(1, 0.0)?)
}

fn blowup_normalization() -> Result<Outcome> {
    let mut exact: f64 = 0.0;
    let hot = FlowState::<Su2>::hot(lattice(&[4, 4, 4, 4], 1.0), FlowParams::new(2, 0.0)?, 0.5, 3)?;
    let hot_u1 = FlowState::<U1>::hot(lattice(&[8, 8], 0.5), FlowParams::new(1, 0.0)?, 0.5, 4)?;
    let smooth = smooth_peaked(64)?;
    for m0 in [
        concentration(&blowup_extract(&hot)?.0.gauge, &blowup_extract(&hot)?.0.higgs)?[0],
        {
            let z = blowup_extract(&hot_u1)?.0;
            concentration(&z.gauge, &z.higgs)?[0]
        },
        {
            let z = blowup_extract(&smooth)?.0;
            concentration(&z.gauge, &z.higgs)?[0]
        },
    ] {
        exact = exact.max((m0 - 1.0).abs());
    }
    let z = blowup_extract_resampled(&smooth, 2, Interpolation::Trigonometric)?.0;
    let resampled = (concentration(&z.gauge, &z.higgs)?[0] - 1.0).abs();
    Ok(outcome(
        exact < 1e-12 && resampled < 1e-3,
        format!("no resampling |m(0)-1| = {exact:.2e}; resampled |m(0)-1| = {resampled:.2e}"),
    ))
}

// 10, 11 --------------------------------------------------------------------

fn reference_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference.conf")
}

fn cli_reference_run(threads: usize, out: &Path) -> Result<()> {
    let status = Command::new(env!("CARGO_BIN_EXE_ymhk"))
        .args(["run", "--config"])
        .arg(reference_config())
        .arg("--out")
        .arg(out)
        .env("YMHK_THREADS", threads.to_string())
        .output()?;
    assert!(status.status.success(), "reference run failed: {}", String::from_utf8_lossy(&status.stderr));
    Ok(())
}

fn smoothing_and_determinism(dir: &Path) -> Result<(Outcome, Outcome, usize, usize)> {
    let (a, b) = (dir.join("threads1"), dir.join("threads4"));
    cli_reference_run(1, &a)?;
    cli_reference_run(4, &b)?;

    let mut identical = true;
    let mut compared = 0;
    let mut names: Vec<_> = std::fs::read_dir(&a)?.map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for name in &names {
        identical &= std::fs::read(a.join(name))? == std::fs::read(b.join(name))?;
        compared += 1;
    }
    let det = outcome(
        identical && compared >= 2,
        format!("{compared} output files byte-identical for YMHK_THREADS=1 and 4: {identical}"),
    );

    let trace = read_trace(std::fs::File::open(a.join("trace.csv"))?)?;
    let cfg = RunConfig::from_file(&reference_config())?;
    let comp = smoothing_diagnostic(&trace, 1, cfg.k)?;
    let t_max = cfg.t_max;
    let tail_max = comp
        .iter()
        .filter(|(t, _)| *t >= 0.1 * t_max)
        .map(|p| p.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let slope = final_decade_log_slope(&comp).unwrap_or(f64::NAN);
    let smooth = outcome(
        tail_max.is_finite() && slope <= 0.1,
        format!("{} rows, max on [0.1 t_max, t_max] {tail_max:.3e}, final-decade log-slope {slope:.3}", comp.len()),
    );

    let mut kato = 0;
    let mut snaps = 0;
    for name in names.iter().filter(|n| n.to_string_lossy().ends_with(".ymhk")) {
        let s: FlowState<U1> = load_snapshot(&a.join(name))?;
        kato += kato_violations(&s.gauge, &s.higgs);
        snaps += 1;
    }
    Ok((smooth, det, kato, snaps))
}

// 12 ------------------------------------------------------------------------

fn snapshot_round_trip(dir: &Path) -> Result<Outcome> {
    let flat = FlowState::<U1>::cold(lattice(&[4], 1.0), FlowParams::new(0, 0.0)?)?;
    let flat_path = dir.join("flat.ymhk");
    save_snapshot(&flat, &flat_path)?;
    let size = std::fs::metadata(&flat_path)?.len();
    let layout = 4 + 4 + 1 + 1 + 2 + 4 + 8 + 4 + 8 + 8 + 4 * 2 * 8 + 4 * 2 * 8;

    let mut exact = true;
    let mut su2 = FlowState::<Su2>::hot(lattice(&[4, 5, 4], 0.75), FlowParams::new(2, 0.25)?, 0.5, 12)?;
    su2.t = 1.0 / 3.0;
    let p = dir.join("su2.ymhk");
    save_snapshot(&su2, &p)?;
    let back: FlowState<Su2> = load_snapshot(&p)?;
    exact &= back.gauge.links() == su2.gauge.links() && back.higgs.values() == su2.higgs.values();
    exact &= back.t.to_bits() == su2.t.to_bits() && std::fs::read(&p)? == encode(&back);

    let u1 = FlowState::<U1>::hot(lattice(&[6, 6], 1.0), FlowParams::new(1, 0.0)?, 0.5, 13)?;
    let p = dir.join("u1.ymhk");
    save_snapshot(&u1, &p)?;
    let back: FlowState<U1> = load_snapshot(&p)?;
    exact &= back.gauge.links() == u1.gauge.links() && back.higgs.values() == u1.higgs.values();

    Ok(outcome(
        exact && size == 172 && layout == 172,
        format!("bit-exact round trips: {exact}; flat 4^1 U(1) snapshot {size} bytes, layout count {layout}"),
    ))
}

fn main() {
    let start = Instant::now();
    let dir = tempfile::tempdir().expect("temp dir");
    let mut lines: Vec<(u32, &str, Outcome)> = Vec::new();
    let fail = |e: ymhk::Error| outcome(false, format!("error: {e}"));

    lines.push((1, "adjoint exactness", adjoint_exactness().unwrap_or_else(fail)));
    lines.push((2, "gauge invariance", gauge_invariance().unwrap_or_else(fail)));
    lines.push((3, "gradient correctness", gradient_correctness().unwrap_or_else(fail)));

    let (mut kato, mut kato_states) = (0, 0);
    match all_flow_runs() {
        Ok(s) => {
            lines.push((
                4,
                "energy monotonicity",
                outcome(
                    s.increases == 0 && s.short_runs == 0,
                    format!(
                        "{} runs of up to 500 steps ({} converged early, {} failed), {} increases above 1e-15 (worst {:.1e})",
                        s.runs, s.converged, s.short_runs, s.increases, s.worst_increase
                    ),
                ),
            ));
            lines.push((
                5,
                "L2 Higgs decay",
                outcome(
                    s.u_increases == 0 && s.richardson_worst < 0.01 && s.richardson_converges,
                    format!(
                        "{} increases of ||u||^2 at lambda=0; Richardson rate error {:.2e}",
                        s.u_increases, s.richardson_worst
                    ),
                ),
            ));
            lines.push((
                6,
                "YMH energy bounded",
                outcome(s.ymh_worst < 3.0, format!("max / early max = {:.4}", s.ymh_worst)),
            ));
            kato += s.kato;
            kato_states += s.snapshots;
        }
        Err(e) => {
            for (n, name) in [(4, "energy monotonicity"), (5, "L2 Higgs decay"), (6, "YMH energy bounded")] {
                lines.push((n, name, fail(ymhk::Error::Argument(e.to_string()))));
            }
        }
    }

    lines.push((7, "scaling law", scaling_law().unwrap_or_else(fail)));
    lines.push((8, "blow-up normalization", blowup_normalization().unwrap_or_else(fail)));

    let (smooth, det) = match smoothing_and_determinism(dir.path()) {
        Ok((smooth, det, k, n)) => {
            kato += k;
            kato_states += n;
            (smooth, det)
        }
        Err(e) => (fail(ymhk::Error::Argument(e.to_string())), fail(e)),
    };
    lines.push((9, "Kato inequality", outcome(kato == 0, format!("{kato} violations over {kato_states} snapshots"))));
    lines.push((10, "smoothing diagnostic", smooth));
    lines.push((11, "determinism", det));
    lines.push((12, "snapshot round trip", snapshot_round_trip(dir.path()).unwrap_or_else(fail)));

    lines.sort_by_key(|l| l.0);
    let mut failed = 0;
    for (n, name, o) in &lines {
        let mark = if o.passed { "PASS" } else { "FAIL" };
        failed += usize::from(!o.passed);
        println!("criterion {n:>2}  {mark}  {name:<22} {}", o.detail);
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.1}s",
        lines.len() - failed,
        lines.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
