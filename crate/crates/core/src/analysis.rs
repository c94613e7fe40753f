//! Gauge transforms, parabolic rescaling, blow-up extraction and the
//! smoothing-rate diagnostic.
//!
//! A spatial zoom by `s` (continuum `x -> s x`) is split into two parts:
//! [`resample`] refines the lattice over the same torus by interpolating the
//! link logarithms and the Higgs field, and [`unit_change`] relabels spacing and
//! amplitudes (`h -> h/s`, `u -> s u`, links untouched), which is exact.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::algebra::{Group, Vector};
use crate::error::{Error, Result};
use crate::fields::{curvature, curvature_pointwise_norm, site_rng, GaugeField, HiggsField};
use crate::flow::FlowState;
use crate::io::trace::Trace;
use crate::lattice::{LatticeShape, SiteId};

/// Largest refined lattice [`resample`] will build.
pub const MAX_RESAMPLED_SITES: usize = 1 << 24;

/// One group element per site.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeTransform<G: Group> {
    pub g: Vec<G::Elem>,
}

impl<G: Group> GaugeTransform<G> {
    pub fn identity(lattice: &LatticeShape) -> Self {
        Self {
            g: vec![G::identity(); lattice.num_sites()],
        }
    }

    /// Haar-spread random transform, one PRNG stream per site.
    pub fn random(lattice: &LatticeShape, seed: u64) -> Self {
        let g = (0..lattice.num_sites())
            .into_par_iter()
            .map(|x| G::random_elem(&mut site_rng(seed ^ 0x9a09_e000, x as u64)))
            .collect();
        Self { g }
    }

    /// `self . other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            g: self.g.iter().zip(&other.g).map(|(a, b)| G::mul(a, b)).collect(),
        }
    }
}

/// `U_mu(x) -> g(x) U_mu(x) g(x+mu)^-1`, `u(x) -> g(x) u(x)`.
pub fn gauge_transform<G: Group>(
    u: &GaugeField<G>,
    higgs: &HiggsField<G>,
    g: &GaugeTransform<G>,
) -> (GaugeField<G>, HiggsField<G>) {
    (u.gauge(&g.g), higgs.gauge(&g.g))
}

pub fn gauge_transform_state<G: Group>(state: &FlowState<G>, g: &GaugeTransform<G>) -> FlowState<G> {
    let (gauge, higgs) = gauge_transform(&state.gauge, &state.higgs, g);
    FlowState {
        gauge,
        higgs,
        ..state.clone()
    }
}

/// `m(x) = |F(x)| + |u(x)|^2`.
pub fn concentration<G: Group>(u: &GaugeField<G>, higgs: &HiggsField<G>) -> Result<Vec<f64>> {
    let f = curvature_pointwise_norm(&curvature(u)?);
    Ok(f.iter()
        .zip(higgs.values())
        .map(|(f, v)| f + v.norm_sqr())
        .collect())
}

/// Site of the maximum of `m`; ties go to the lowest index.
pub fn concentration_peak<G: Group>(u: &GaugeField<G>, higgs: &HiggsField<G>) -> Result<(SiteId, f64)> {
    let m = concentration(u, higgs)?;
    let mut best = (0, f64::NEG_INFINITY);
    for (x, &v) in m.iter().enumerate() {
        if v.is_nan() {
            return Err(Error::BlowUp(format!("non-finite concentration at site {x}")));
        }
        if v > best.1 {
            best = (x, v);
        }
    }
    Ok((SiteId(best.0), best.1))
}

/// `rho^(2k+4-n)`.
pub fn predicted_energy_ratio(k: usize, n: usize, rho: f64) -> f64 {
    rho.powi(2 * k as i32 + 4 - n as i32)
}

/// `rho^(2(k+1))`.
pub fn time_dilation(k: usize, rho: f64) -> f64 {
    rho.powi(2 * (k as i32 + 1))
}

/// Relabels units for a spatial zoom by `s`: spacing `h/s`, Higgs `s u`,
/// links unchanged, time `t / s^(2(k+1))`. Exact up to rounding.
pub fn unit_change<G: Group>(state: &FlowState<G>, s: f64) -> Result<FlowState<G>> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Argument(format!("scale factor must be positive, got {s}")));
    }
    let lat = Arc::new(state.lattice().with_spacing(state.lattice().spacing() / s)?);
    let links = state.gauge.links().to_vec();
    let values = state.higgs.values().iter().map(|v| *v * s).collect();
    let mut next = FlowState::new(
        GaugeField::from_links(lat.clone(), links)?,
        HiggsField::from_values(lat, values)?,
        state.params,
    )?;
    next.t = state.t / time_dilation(state.params.k, s);
    Ok(next)
}

/// Translates so that `center` becomes site 0.
pub fn recenter<G: Group>(state: &FlowState<G>, center: SiteId) -> Result<FlowState<G>> {
    let lat = state.lattice();
    let n = lat.dims();
    let c = lat.coords(center);
    let mut links = Vec::with_capacity(state.gauge.links().len());
    let mut values = Vec::with_capacity(lat.num_sites());
    for j in lat.sites() {
        let cj: Vec<usize> = lat.coords(j).iter().zip(&c).map(|(a, b)| a + b).collect();
        let src = lat.site(&cj).0;
        for mu in 0..n {
            links.push(*state.gauge.link(src, mu));
        }
        values.push(state.higgs.values()[src]);
    }
    let mut next = FlowState::new(
        GaugeField::from_links(lat.clone(), links)?,
        HiggsField::from_values(lat.clone(), values)?,
        state.params,
    )?;
    next.t = state.t;
    Ok(next)
}

/// Interpolation scheme for [`resample`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    /// Piecewise multilinear in each coordinate.
    Multilinear,
    /// Band-limited periodic (Dirichlet kernel) interpolation.
    Trigonometric,
}

fn kernel(scheme: Interpolation, len: usize, d: f64) -> f64 {
    let l = len as f64;
    let d = d - l * (d / l).round();
    let nearest = d.round();
    if (d - nearest).abs() < 1e-12 {
        return if nearest == 0.0 { 1.0 } else { 0.0 };
    }
    match scheme {
        Interpolation::Multilinear => (1.0 - d.abs()).max(0.0),
        Interpolation::Trigonometric => {
            let mut s = 1.0;
            for q in 1..len.div_ceil(2) {
                s += 2.0 * (2.0 * PI * q as f64 * d / l).cos();
            }
            if len % 2 == 0 {
                s += (PI * d).cos();
            }
            s / l
        }
    }
}

/// Applies `m` (rows = new length, cols = old length) along `axis`.
fn apply_axis(data: &[f64], ext: &[usize], axis: usize, m: &[Vec<f64>]) -> (Vec<f64>, Vec<usize>) {
    let stride: usize = ext[..axis].iter().product();
    let outer: usize = ext[axis + 1..].iter().product();
    let (old, new) = (ext[axis], m.len());
    let mut out = vec![0.0; stride * new * outer];
    out.par_chunks_mut(stride * new).enumerate().for_each(|(o, block)| {
        for (j, row) in m.iter().enumerate() {
            for (i, &w) in row.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let src = &data[(o * old + i) * stride..(o * old + i + 1) * stride];
                for (dst, s) in block[j * stride..(j + 1) * stride].iter_mut().zip(src) {
                    *dst += w * s;
                }
            }
        }
    });
    let mut next = ext.to_vec();
    next[axis] = new;
    (out, next)
}

/// Samples a periodic grid function at `shift[a] + j / r` along every axis.
fn interpolate(data: &[f64], ext: &[usize], r: usize, shift: &[f64], scheme: Interpolation) -> Vec<f64> {
    let mut cur = data.to_vec();
    let mut cur_ext = ext.to_vec();
    for a in 0..ext.len() {
        let m: Vec<Vec<f64>> = (0..ext[a] * r)
            .map(|j| {
                let p = shift[a] + j as f64 / r as f64;
                (0..ext[a]).map(|i| kernel(scheme, ext[a], p - i as f64)).collect()
            })
            .collect();
        (cur, cur_ext) = apply_axis(&cur, &cur_ext, a, &m);
    }
    cur
}

/// Refines the lattice by `r` over the same torus (spacing `h/r`), with
/// site 0 of the result at `center`. Links are `exp(X/r)` where `X` is the
/// interpolated `log U` on the staggered link-midpoint grid; the Higgs field
/// is interpolated on the sites. `r = 1` is an exact translation.
pub fn resample<G: Group>(
    state: &FlowState<G>,
    r: usize,
    center: SiteId,
    scheme: Interpolation,
) -> Result<FlowState<G>> {
    if r == 0 {
        return Err(Error::Argument("refinement factor must be >= 1".into()));
    }
    if r == 1 {
        return recenter(state, center);
    }
    let lat = state.lattice();
    let n = lat.dims();
    let fine_ext: Vec<usize> = lat.extents().iter().map(|&l| l * r).collect();
    let fine_sites: usize = fine_ext.iter().product();
    if fine_sites > MAX_RESAMPLED_SITES {
        return Err(Error::Argument(format!(
            "refined lattice {fine_ext:?} exceeds {MAX_RESAMPLED_SITES} sites"
        )));
    }
    let fine = Arc::new(LatticeShape::new(&fine_ext, lat.spacing() / r as f64)?);
    let c: Vec<f64> = lat.coords(center).iter().map(|&x| x as f64).collect();
    let ext = lat.extents();

    let logs = state
        .gauge
        .links()
        .par_iter()
        .map(G::log)
        .collect::<Result<Vec<_>>>()?;
    let mut fine_links = vec![G::identity(); fine_sites * n];
    for mu in 0..n {
        let mut shift = c.clone();
        shift[mu] += 0.5 / r as f64 - 0.5;
        let comps: Vec<Vec<f64>> = (0..G::ALG_DIM)
            .map(|a| {
                let data: Vec<f64> = (0..lat.num_sites())
                    .map(|x| G::alg_coords(&logs[x * n + mu])[a])
                    .collect();
                interpolate(&data, ext, r, &shift, scheme)
            })
            .collect();
        fine_links.par_chunks_mut(n).enumerate().for_each(|(x, chunk)| {
            let coords: Vec<f64> = comps.iter().map(|v| v[x] / r as f64).collect();
            chunk[mu] = G::exp(&G::alg_from_coords(&coords));
        });
    }

    let mut parts: Vec<Vec<f64>> = Vec::with_capacity(2 * G::HIGGS_DIM);
    for a in 0..G::HIGGS_DIM {
        for im in [false, true] {
            let data: Vec<f64> = state
                .higgs
                .values()
                .iter()
                .map(|v| {
                    let z = G::higgs_components(v)[a];
                    if im { z.im } else { z.re }
                })
                .collect();
            parts.push(interpolate(&data, ext, r, &c, scheme));
        }
    }
    let values = (0..fine_sites)
        .map(|x| {
            let z: Vec<Complex64> = (0..G::HIGGS_DIM)
                .map(|a| Complex64::new(parts[2 * a][x], parts[2 * a + 1][x]))
                .collect();
            G::higgs_from_complex(&z)
        })
        .collect();

    let mut next = FlowState::new(
        GaugeField::from_links(fine.clone(), fine_links)?,
        HiggsField::from_values(fine, values)?,
        state.params,
    )?;
    next.t = state.t;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescaleReport {
    pub rho: f64,
    pub energy_ratio_observed: f64,
    pub energy_ratio_predicted: f64,
    pub time_dilation: f64,
    /// `|observed / predicted - 1|`.
    pub interpolation_error_estimate: f64,
}

/// The `rho = 1/rho_inv` rescaled state about `center`, with trigonometric
/// interpolation. See [`rescale_with`].
pub fn rescale<G: Group>(state: &FlowState<G>, rho_inv: usize, center: SiteId) -> Result<(FlowState<G>, RescaleReport)> {
    rescale_with(state, rho_inv, center, Interpolation::Trigonometric)
}

/// Resamples onto a lattice `rho_inv` times finer, then changes units by
/// `rho`, so the result has the original spacing and `rho_inv` times the
/// extents. The observed ratio compares the scale-covariant energy
/// (curvature + Higgs terms; the potential does not scale).
pub fn rescale_with<G: Group>(
    state: &FlowState<G>,
    rho_inv: usize,
    center: SiteId,
    scheme: Interpolation,
) -> Result<(FlowState<G>, RescaleReport)> {
    let rho = 1.0 / rho_inv.max(1) as f64;
    let fine = resample(state, rho_inv, center, scheme)?;
    let next = unit_change(&fine, rho)?;
    let covariant = |s: &FlowState<G>| s.last_energy.curvature_term + s.last_energy.higgs_term;
    let (k, n) = (state.params.k, state.lattice().dims());
    let before = covariant(state);
    let observed = if before == 0.0 {
        if covariant(&next) == 0.0 { predicted_energy_ratio(k, n, rho) } else { f64::INFINITY }
    } else {
        covariant(&next) / before
    };
    let predicted = predicted_energy_ratio(k, n, rho);
    let report = RescaleReport {
        rho,
        energy_ratio_observed: observed,
        energy_ratio_predicted: predicted,
        time_dilation: time_dilation(k, rho),
        interpolation_error_estimate: (observed / predicted - 1.0).abs(),
    };
    Ok((next, report))
}

/// Blow-up normalization in pure unit-change mode.
///
/// Finds the peak of `m = |F| + |u|^2`, sets `rho = m^-(k+1)` and zooms by
/// `s = rho^(1/(2(k+1))) = m^(-1/2)`, recentred on the peak, so that `m = 1`
/// there up to rounding.
pub fn blowup_extract<G: Group>(state: &FlowState<G>) -> Result<(FlowState<G>, f64, SiteId)> {
    let (site, m) = concentration_peak(&state.gauge, &state.higgs)?;
    if m == 0.0 {
        return Err(Error::NoSingularity);
    }
    let rho = m.powi(-(state.params.k as i32 + 1));
    let next = unit_change(&recenter(state, site)?, m.sqrt().recip())?;
    Ok((next, rho, site))
}

/// As [`blowup_extract`], but the state is first resampled `refine` times
/// finer, so the centre value deviates from 1 by the interpolation and
/// discretization error.
pub fn blowup_extract_resampled<G: Group>(
    state: &FlowState<G>,
    refine: usize,
    scheme: Interpolation,
) -> Result<(FlowState<G>, f64, SiteId)> {
    let (site, m) = concentration_peak(&state.gauge, &state.higgs)?;
    if m == 0.0 {
        return Err(Error::NoSingularity);
    }
    let rho = m.powi(-(state.params.k as i32 + 1));
    let fine = resample(state, refine, site, scheme)?;
    let next = unit_change(&fine, m.sqrt().recip())?;
    Ok((next, rho, site))
}

/// `h^n sum |F|^2` over sites within Euclidean lattice distance `radius` of
/// `center` (periodic).
pub fn ball_curvature_mass<G: Group>(u: &GaugeField<G>, center: SiteId, radius: f64) -> Result<f64> {
    let lat = u.lattice();
    let f = curvature_pointwise_norm(&curvature(u)?);
    let c = lat.coords(center);
    let mut mass = Vec::new();
    for x in lat.sites() {
        let d2: f64 = lat
            .coords(x)
            .iter()
            .zip(&c)
            .zip(lat.extents())
            .map(|((&a, &b), &l)| {
                let d = a.abs_diff(b);
                let d = d.min(l - d) as f64;
                d * d
            })
            .sum();
        if d2 <= radius * radius {
            mass.push(f[x.0] * f[x.0]);
        }
    }
    Ok(lat.site_volume() * crate::reduce::pairwise_sum(&mass))
}

/// `(t, t^(q/(k+1)) ||nabla^(q) F||^2)` for every trace row.
pub fn smoothing_diagnostic(trace: &Trace, q: usize, k: usize) -> Result<Vec<(f64, f64)>> {
    if q >= trace.derivs {
        return Err(Error::config(
            "record_derivatives",
            format!("trace has {} derivative columns, q = {q} requested", trace.derivs),
        ));
    }
    let exponent = q as f64 / (k as f64 + 1.0);
    Ok(trace
        .records
        .iter()
        .map(|r| (r.t, r.t.powf(exponent) * r.curvature_derivs[q]))
        .collect())
}

/// Least-squares slope of `ln y` against `ln t` over points with
/// `t >= t_end / 10` and `t, y > 0`; `None` with fewer than two such points.
pub fn final_decade_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let t_end = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(t, y)| *t >= t_end / 10.0 && *t > 0.0 && *y > 0.0)
        .map(|(t, y)| (t.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let (sxy, sxx) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
    (sxx > 0.0).then(|| sxy / sxx)
}
