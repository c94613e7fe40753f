//! Exact gradient of the discrete energy.
//!
//! The reverse pass walks the forward chain of [`crate::energy`] backwards:
//! each covariant-difference layer hands its adjoint down with
//! [`cov_diff_adjoint`] and deposits a link sensitivity on the link it used;
//! the curvature chain ends in the plaquette logarithms, whose four links are
//! reached through `dlog_transpose` and the appropriate conjugations.
//!
//! `link_grad` is pointwise (no measure): `d/ds E(exp(s X) U_mu(x)) = inner(X, Z_mu(x))`.
//! `higgs_grad` is the Riesz representative under the global inner product
//! `h^n sum_x Re <v, w>`.

use rayon::prelude::*;

use crate::algebra::{Group, Vector};
use crate::energy::{forward, EnergyBreakdown, FlowParams, Forward};
use crate::error::{Error, Result};
use crate::fields::{cov_diff_adjoint, plaquette, FieldKind, GaugeField, HiggsField, TensorField};
use crate::reduce::pairwise_sum;

#[derive(Debug, Clone, PartialEq)]
pub struct GradientPair<G: Group> {
    /// One algebra element per (site, axis), same layout as the links.
    pub link_grad: Vec<G::Alg>,
    pub higgs_grad: HiggsField<G>,
}

impl<G: Group> GradientPair<G> {
    /// `sum_links |Z|^2`.
    pub fn link_norm_sqr(&self) -> f64 {
        let per: Vec<f64> = self.link_grad.iter().map(Vector::norm_sqr).collect();
        pairwise_sum(&per)
    }

    /// Pairing with a perturbation direction: the predicted directional derivative.
    pub fn pairing(&self, dir: &Direction<G>) -> f64 {
        let per: Vec<f64> = self
            .link_grad
            .iter()
            .zip(&dir.links)
            .map(|(z, x)| z.dot(x))
            .collect();
        pairwise_sum(&per) + self.higgs_grad.to_tensor().inner(&dir.higgs.to_tensor())
    }
}

/// A tangent direction: algebra perturbation per link plus a Higgs perturbation.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction<G: Group> {
    pub links: Vec<G::Alg>,
    pub higgs: HiggsField<G>,
}

impl<G: Group> Direction<G> {
    pub fn zero(u: &GaugeField<G>) -> Self {
        Self {
            links: vec![G::Alg::zero(); u.links().len()],
            higgs: HiggsField::zero(u.lattice().clone()),
        }
    }

    /// Random direction with i.i.d. uniform components in `[-1, 1]`.
    pub fn random(u: &GaugeField<G>, seed: u64) -> Self {
        let lat = u.lattice().clone();
        let n = lat.dims();
        let mut links = vec![G::Alg::zero(); u.links().len()];
        links.par_chunks_mut(n).enumerate().for_each(|(site, chunk)| {
            let mut rng = crate::fields::site_rng(seed ^ 0x5eed_d1ec, site as u64);
            for x in chunk {
                *x = G::random_alg(&mut rng, 1.0);
            }
        });
        Self {
            links,
            higgs: HiggsField::random(lat, 1.0, seed ^ 0x0ddba11),
        }
    }

    pub fn links_only(mut self) -> Self {
        self.higgs = HiggsField::zero(self.higgs.lattice().clone());
        self
    }

    pub fn higgs_only(mut self) -> Self {
        for x in &mut self.links {
            *x = G::Alg::zero();
        }
        self
    }
}

/// Moves a state along a direction: `U -> exp(s X) U`, `u -> u + s v`.
pub fn perturb<G: Group>(
    u: &GaugeField<G>,
    higgs: &HiggsField<G>,
    dir: &Direction<G>,
    s: f64,
) -> (GaugeField<G>, HiggsField<G>) {
    let mut u2 = u.clone();
    u2.links_mut()
        .par_iter_mut()
        .zip(dir.links.par_iter())
        .for_each(|(l, x)| *l = G::mul(&G::exp(&(*x * s)), l));
    let mut h2 = higgs.clone();
    h2.values_mut()
        .par_iter_mut()
        .zip(dir.higgs.values().par_iter())
        .for_each(|(v, d)| *v += *d * s);
    (u2, h2)
}

/// Exact gradient of `ymh_k_energy`.
pub fn gradient<G: Group>(
    u: &GaugeField<G>,
    higgs: &HiggsField<G>,
    p: &FlowParams,
) -> Result<GradientPair<G>> {
    Ok(gradient_with_energy(u, higgs, p)?.0)
}

/// Gradient together with the energy it was computed at.
pub fn gradient_with_energy<G: Group>(
    u: &GaugeField<G>,
    higgs: &HiggsField<G>,
    p: &FlowParams,
) -> Result<(GradientPair<G>, EnergyBreakdown)> {
    let fwd = forward(u, higgs, p)?;
    let grad = reverse(u, higgs, p, &fwd)?;
    Ok((grad, fwd.energy))
}

fn reverse<G: Group>(
    u: &GaugeField<G>,
    higgs: &HiggsField<G>,
    p: &FlowParams,
    fwd: &Forward<G>,
) -> Result<GradientPair<G>> {
    let lat = u.lattice().clone();
    let n = lat.dims();
    let vol = lat.site_volume();
    let h = lat.spacing();
    let layer_scale = vol / h;
    let mut z = vec![G::Alg::zero(); u.links().len()];

    // Higgs chain: E_h = 1/2 |phi_{k+1}|^2
    let mut adj = fwd.higgs[p.k + 1].clone();
    for j in (1..=p.k + 1).rev() {
        layer_link_contrib(u, &fwd.higgs[j - 1], &adj, &mut z, layer_scale);
        adj = cov_diff_adjoint(u, &adj)?;
    }
    let mut higgs_grad = HiggsField::from_tensor(adj)?;
    if p.lambda > 0.0 {
        let c = 0.5 * p.lambda;
        higgs_grad
            .values_mut()
            .par_iter_mut()
            .zip(higgs.values().par_iter())
            .for_each(|(g, v)| *g += *v * (c * (v.norm_sqr() - 1.0)));
    }

    // Curvature chain: E_c = 1/4 |phi_k|^2 over the full multi-index
    let mut adj = fwd.curv[p.k].scaled(0.5);
    for j in (1..=p.k).rev() {
        layer_link_contrib(u, &fwd.curv[j - 1], &adj, &mut z, layer_scale);
        adj = cov_diff_adjoint(u, &adj)?;
    }
    plaquette_contrib(u, &fwd.logs, &adj, &mut z, vol / (h * h));

    debug_assert_eq!(z.len(), lat.num_sites() * n);
    Ok(GradientPair {
        link_grad: z,
        higgs_grad,
    })
}

/// Link sensitivity of one covariant-difference layer `next = cov_diff(U, prev)`
/// against its adjoint seed `adj` (same rank as `next`).
fn layer_link_contrib<G: Group, K: FieldKind<G>>(
    u: &GaugeField<G>,
    prev: &TensorField<G, K>,
    adj: &TensorField<G, K>,
    z: &mut [G::Alg],
    scale: f64,
) {
    let lat = u.lattice();
    let n = lat.dims();
    let inner_len = prev.components();
    let pv = prev.values();
    let av = adj.values();
    z.par_chunks_mut(n).enumerate().for_each(|(x, zc)| {
        for mu in 0..n {
            let y = lat.fwd(x, mu);
            let link = u.link(x, mu);
            let mut acc = G::Alg::zero();
            for i in 0..inner_len {
                let moved = K::transport(link, &pv[y * inner_len + i]);
                acc += K::link_sensitivity(&moved, &av[x * inner_len * n + mu * inner_len + i]);
            }
            zc[mu] += acc * scale;
        }
    });
}

/// Chain rule through `F_{mu nu} = log(P_{mu nu}) / h^2` for `mu < nu`,
/// given the adjoint `g` of the full antisymmetric rank-2 tensor.
fn plaquette_contrib<G: Group>(
    u: &GaugeField<G>,
    logs: &TensorField<G, crate::fields::AlgebraKind>,
    g: &TensorField<G, crate::fields::AlgebraKind>,
    z: &mut [G::Alg],
    scale: f64,
) {
    let lat = u.lattice();
    let n = lat.dims();
    let nn = n * n;
    // Per (site, mu<nu): the seed transported to each of the four links,
    // in the left trivialisation of that link.
    let per_site: Vec<[G::Alg; 4]> = (0..lat.num_sites() * nn)
        .into_par_iter()
        .map(|idx| {
            let (x, pair) = (idx / nn, idx % nn);
            let (mu, nu) = (pair / n, pair % n);
            if mu >= nu {
                return [G::Alg::zero(); 4];
            }
            let y = logs.values()[x * nn + mu * n + nu];
            let gm = g.values()[x * nn + mu * n + nu] - g.values()[x * nn + nu * n + mu];
            let s = G::dlog_transpose(&y, &gm) * scale;
            let a = G::mul(u.link(x, mu), u.link(lat.fwd(x, mu), nu));
            let v = G::mul(&a, &G::dagger(u.link(lat.fwd(x, nu), mu)));
            let pl = plaquette(u, lat, x, mu, nu);
            [
                s,
                G::ad(&G::dagger(u.link(x, mu)), &s),
                G::ad(&G::dagger(&v), &s),
                G::ad(&G::dagger(&pl), &s),
            ]
        })
        .collect();

    z.par_chunks_mut(n).enumerate().for_each(|(x, zc)| {
        for mu in 0..n {
            let mut acc = G::Alg::zero();
            for other in 0..n {
                if other > mu {
                    // U_mu(x) is the first link of P_{mu other}(x)
                    acc += per_site[x * nn + mu * n + other][0];
                    // and the third link of P_{mu other}(x - other)
                    let yb = lat.bwd(x, other);
                    acc -= per_site[yb * nn + mu * n + other][2];
                } else if other < mu {
                    // the second link of P_{other mu}(x - other)
                    let yb = lat.bwd(x, other);
                    acc += per_site[yb * nn + other * n + mu][1];
                    // and the fourth link of P_{other mu}(x)
                    acc -= per_site[x * nn + other * n + mu][3];
                }
            }
            zc[mu] += acc;
        }
    });
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdCheck {
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
}

/// Central finite difference of the energy along `dir` compared with the
/// gradient pairing.
pub fn fd_check<G: Group>(
    u: &GaugeField<G>,
    higgs: &HiggsField<G>,
    p: &FlowParams,
    dir: &Direction<G>,
    eps: f64,
) -> Result<FdCheck> {
    if !(eps > 0.0) {
        return Err(Error::Argument(format!("eps must be positive, got {eps}")));
    }
    let grad = gradient(u, higgs, p)?;
    fd_check_with(&grad, u, higgs, p, dir, eps)
}

/// As [`fd_check`] with a precomputed gradient.
pub fn fd_check_with<G: Group>(
    grad: &GradientPair<G>,
    u: &GaugeField<G>,
    higgs: &HiggsField<G>,
    p: &FlowParams,
    dir: &Direction<G>,
    eps: f64,
) -> Result<FdCheck> {
    let analytic = grad.pairing(dir);
    let (up, hp) = perturb(u, higgs, dir, eps);
    let (um, hm) = perturb(u, higgs, dir, -eps);
    let ep = crate::energy::ymh_k_energy(&up, &hp, p)?.total;
    let em = crate::energy::ymh_k_energy(&um, &hm, p)?.total;
    let numeric = (ep - em) / (2.0 * eps);
    let scale = analytic.abs().max(numeric.abs());
    let rel_err = if scale == 0.0 {
        0.0
    } else {
        (analytic - numeric).abs() / scale
    };
    Ok(FdCheck {
        analytic,
        numeric,
        rel_err,
    })
}
