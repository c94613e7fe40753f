//! The discrete Yang–Mills–Higgs k-energy
//!
//! ```text
//! E = 1/2 h^n sum |nabla^(k) F|^2 + 1/2 h^n sum |nabla^(k+1) u|^2 + lambda/8 h^n sum (|u|^2 - 1)^2
//! ```
//!
//! Pointwise tensor norms of curvature-type tensors count each unordered
//! plaquette pair once, i.e. half the sum over the full multi-index.

use rayon::prelude::*;

use crate::algebra::{Group, Vector};
use crate::error::{Error, Result};
use crate::fields::{cov_diff, plaquette_logs, AlgebraTensor, GaugeField, HiggsField, HiggsTensor};
use crate::reduce::pairwise_sum;

/// Largest supported derivative order `k`.
pub const MAX_K: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams {
    pub k: usize,
    pub lambda: f64,
}

impl FlowParams {
    pub fn new(k: usize, lambda: f64) -> Result<Self> {
        if k > MAX_K {
            return Err(Error::Argument(format!("k must be in 0..={MAX_K}, got {k}")));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::Argument(format!("lambda must be >= 0, got {lambda}")));
        }
        Ok(Self { k, lambda })
    }

    /// Highest forward-stencil reach of the energy density.
    pub fn stencil_order(&self) -> usize {
        self.k + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyBreakdown {
    pub curvature_term: f64,
    pub higgs_term: f64,
    pub potential_term: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    fn from_terms(curvature_term: f64, higgs_term: f64, potential_term: f64) -> Self {
        Self {
            curvature_term,
            higgs_term,
            potential_term,
            total: curvature_term + higgs_term + potential_term,
        }
    }
}

/// Forward pass kept for the reverse (gradient) pass.
pub(crate) struct Forward<G: Group> {
    /// `log P_{mu nu}` as a rank-2 tensor.
    pub logs: AlgebraTensor<G>,
    /// `nabla^(j) F` for `j = 0..=k`.
    pub curv: Vec<AlgebraTensor<G>>,
    /// `nabla^(j) u` for `j = 0..=k+1`.
    pub higgs: Vec<HiggsTensor<G>>,
    pub energy: EnergyBreakdown,
}

pub(crate) fn forward<G: Group>(
    u: &GaugeField<G>,
    higgs: &HiggsField<G>,
    p: &FlowParams,
) -> Result<Forward<G>> {
    let lat = u.lattice();
    lat.check_stencil(p.stencil_order())?;
    let vol = lat.site_volume();
    let h = lat.spacing();

    let logs = plaquette_logs(u)?;
    let mut curv = Vec::with_capacity(p.k + 1);
    curv.push(logs.scaled(1.0 / (h * h)));
    for j in 0..p.k {
        let next = cov_diff(u, &curv[j]);
        curv.push(next);
    }
    let mut hchain = Vec::with_capacity(p.k + 2);
    hchain.push(higgs.to_tensor());
    for j in 0..=p.k {
        let next = cov_diff(u, &hchain[j]);
        hchain.push(next);
    }

    let curvature_term = 0.25 * curv[p.k].norm_sqr();
    let higgs_term = 0.5 * hchain[p.k + 1].norm_sqr();
    let potential_term = potential(higgs, p.lambda, vol);
    Ok(Forward {
        logs,
        curv,
        higgs: hchain,
        energy: EnergyBreakdown::from_terms(curvature_term, higgs_term, potential_term),
    })
}

fn potential<G: Group>(higgs: &HiggsField<G>, lambda: f64, vol: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let per: Vec<f64> = higgs
        .values()
        .par_iter()
        .map(|v| {
            let d = v.norm_sqr() - 1.0;
            d * d
        })
        .collect();
    lambda / 8.0 * vol * pairwise_sum(&per)
}

/// The Yang–Mills–Higgs k-energy with self-interaction `lambda`.
pub fn ymh_k_energy<G: Group>(
    u: &GaugeField<G>,
    higgs: &HiggsField<G>,
    p: &FlowParams,
) -> Result<EnergyBreakdown> {
    Ok(forward(u, higgs, p)?.energy)
}

/// The classical Yang–Mills–Higgs energy (`k = 0`, `lambda = 0`).
pub fn ymh_energy<G: Group>(u: &GaugeField<G>, higgs: &HiggsField<G>) -> Result<EnergyBreakdown> {
    ymh_k_energy(
        u,
        higgs,
        &FlowParams {
            k: 0,
            lambda: 0.0,
        },
    )
}

/// `||nabla^(q) F||^2_{L^2}` for `q = 0..=q_max`.
pub fn curvature_derivative_l2<G: Group>(u: &GaugeField<G>, q_max: usize) -> Result<Vec<f64>> {
    let lat = u.lattice();
    lat.check_stencil(q_max + 1)?;
    let h = lat.spacing();
    let mut cur = plaquette_logs(u)?.scaled(1.0 / (h * h));
    let mut out = Vec::with_capacity(q_max + 1);
    out.push(0.5 * cur.norm_sqr());
    for _ in 0..q_max {
        cur = cov_diff(u, &cur);
        out.push(0.5 * cur.norm_sqr());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{Su2, U1};
    use crate::lattice::LatticeShape;
    use num_complex::Complex64;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn lattice(ext: &[usize], h: f64) -> Arc<LatticeShape> {
        Arc::new(LatticeShape::new(ext, h).unwrap())
    }

    fn constant_flux(lat: Arc<LatticeShape>, m: i32) -> GaugeField<U1> {
        let l = lat.extents()[0];
        let theta = 2.0 * PI * m as f64 / (l * l) as f64;
        let links = lat
            .sites()
            .flat_map(|s| {
                let c = lat.coords(s);
                let u0 = if c[0] == l - 1 {
                    Complex64::from_polar(1.0, -2.0 * PI * m as f64 * c[1] as f64 / l as f64)
                } else {
                    Complex64::new(1.0, 0.0)
                };
                [u0, Complex64::from_polar(1.0, theta * c[0] as f64)]
            })
            .collect();
        GaugeField::from_links(lat, links).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(FlowParams::new(4, 0.0).is_err());
        assert!(FlowParams::new(1, -1.0).is_err());
        assert!(FlowParams::new(3, 2.0).is_ok());
    }

    #[test]
    fn flat_zero_state() {
        let lat = lattice(&[4, 4, 5], 0.5);
        let u = GaugeField::<Su2>::cold(lat.clone());
        let higgs = HiggsField::<Su2>::zero(lat.clone());
        for k in 0..=2 {
            let e = ymh_k_energy(&u, &higgs, &FlowParams::new(k, 0.0).unwrap()).unwrap();
            assert_eq!(e.total, 0.0);
            let e = ymh_k_energy(&u, &higgs, &FlowParams::new(k, 3.0).unwrap()).unwrap();
            let want = 3.0 / 8.0 * lat.volume();
            assert!((e.potential_term - want).abs() < 1e-14 * want);
            assert_eq!(e.total, e.potential_term);
        }
        assert_eq!(ymh_energy(&u, &higgs).unwrap().total, 0.0);
    }

    #[test]
    fn constant_flux_energy() {
        let (l, h, m) = (8usize, 0.5, 1);
        let lat = lattice(&[l, l], h);
        let u = constant_flux(lat.clone(), m);
        let higgs = HiggsField::<U1>::zero(lat.clone());
        let c = 2.0 * PI * m as f64 / ((l * l) as f64 * h * h);
        let e0 = ymh_k_energy(&u, &higgs, &FlowParams::new(0, 0.0).unwrap()).unwrap();
        let want = 0.5 * lat.volume() * c * c;
        assert!((e0.curvature_term - want).abs() < 1e-12 * want);
        for k in 1..=3 {
            let e = ymh_k_energy(&u, &higgs, &FlowParams::new(k, 0.0).unwrap()).unwrap();
            assert!(e.curvature_term < 1e-20, "k={k}: {}", e.curvature_term);
        }
        let e = ymh_energy(&u, &higgs).unwrap();
        assert_eq!(e, e0);
    }

    #[test]
    fn guard_rejects_small_lattice() {
        let lat = lattice(&[4, 4], 1.0);
        let u = GaugeField::<U1>::cold(lat.clone());
        let higgs = HiggsField::<U1>::zero(lat);
        assert!(ymh_k_energy(&u, &higgs, &FlowParams::new(2, 0.0).unwrap()).is_ok());
        assert!(matches!(
            ymh_k_energy(&u, &higgs, &FlowParams::new(3, 0.0).unwrap()),
            Err(Error::LatticeTooSmall { .. })
        ));
    }

    #[test]
    fn breakdown_is_additive_and_nonnegative() {
        let lat = lattice(&[5, 4], 0.8);
        let u = GaugeField::<Su2>::random(lat.clone(), 0.5, 1);
        let higgs = HiggsField::<Su2>::random(lat, 0.7, 2);
        let e = ymh_k_energy(&u, &higgs, &FlowParams::new(1, 0.5).unwrap()).unwrap();
        assert!(e.curvature_term > 0.0 && e.higgs_term > 0.0 && e.potential_term > 0.0);
        assert_eq!(e.total, e.curvature_term + e.higgs_term + e.potential_term);
        let d = curvature_derivative_l2(&u, 1).unwrap();
        assert!((2.0 * e.curvature_term - d[1]).abs() < 1e-12 * d[1]);
    }
}
