//! Lattice fields and the covariant calculus on them.
//!
//! Links `U_mu(x)` transport from `x + mu` back to `x`. The covariant forward
//! difference transports the value at `x + mu` with the link and subtracts the
//! value at `x`; it prepends a new leading direction index. Existing direction
//! indices are not transported (the base torus is flat).
//!
//! Tensor values of rank `m` are stored site-major, `n^m` components per site,
//! with the leading index most significant.

use std::marker::PhantomData;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::algebra::{Group, Vector};
use crate::error::{Error, Result};
use crate::lattice::LatticeShape;
use crate::reduce::{max, pairwise_sum};

/// Link variables, direction-major within lexicographic sites.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeField<G: Group> {
    lattice: Arc<LatticeShape>,
    links: Vec<G::Elem>,
}

impl<G: Group> GaugeField<G> {
    /// All links equal to the identity.
    pub fn cold(lattice: Arc<LatticeShape>) -> Self {
        let len = lattice.num_sites() * lattice.dims();
        Self {
            lattice,
            links: vec![G::identity(); len],
        }
    }

    pub fn from_links(lattice: Arc<LatticeShape>, links: Vec<G::Elem>) -> Result<Self> {
        let want = lattice.num_sites() * lattice.dims();
        if links.len() != want {
            return Err(Error::Argument(format!(
                "expected {want} links, got {}",
                links.len()
            )));
        }
        Ok(Self { lattice, links })
    }

    /// Links `exp(a)` with algebra coordinates i.i.d. uniform in `[-amplitude, amplitude]`.
    /// Each site draws from its own PRNG stream, so the result does not
    /// depend on traversal order.
    pub fn random(lattice: Arc<LatticeShape>, amplitude: f64, seed: u64) -> Self {
        let n = lattice.dims();
        let mut links = vec![G::identity(); lattice.num_sites() * n];
        links.par_chunks_mut(n).enumerate().for_each(|(site, chunk)| {
            let mut rng = site_rng(seed, 2 * site as u64);
            for l in chunk.iter_mut() {
                *l = G::exp(&G::random_alg(&mut rng, amplitude));
            }
        });
        Self { lattice, links }
    }

    /// Samples a continuum potential at link midpoints: `U_mu(x) = exp(h A_mu(x + h mu / 2))`.
    /// `potential` receives physical coordinates and the axis.
    pub fn from_potential<F>(lattice: Arc<LatticeShape>, potential: F) -> Self
    where
        F: Fn(&[f64], usize) -> G::Alg + Sync,
    {
        let n = lattice.dims();
        let h = lattice.spacing();
        let mut links = vec![G::identity(); lattice.num_sites() * n];
        let lat = &lattice;
        links.par_chunks_mut(n).enumerate().for_each(|(site, chunk)| {
            let base: Vec<f64> = lat
                .coords(crate::lattice::SiteId(site))
                .iter()
                .map(|&c| c as f64 * h)
                .collect();
            for (mu, l) in chunk.iter_mut().enumerate() {
                let mut p = base.clone();
                p[mu] += 0.5 * h;
                *l = G::exp(&(potential(&p, mu) * h));
            }
        });
        Self { lattice, links }
    }

    pub fn lattice(&self) -> &Arc<LatticeShape> {
        &self.lattice
    }

    #[inline]
    pub fn link(&self, site: usize, axis: usize) -> &G::Elem {
        &self.links[site * self.lattice.dims() + axis]
    }

    pub fn links(&self) -> &[G::Elem] {
        &self.links
    }

    pub(crate) fn links_mut(&mut self) -> &mut [G::Elem] {
        &mut self.links
    }

    pub fn reunitarize(&mut self) {
        self.links
            .par_iter_mut()
            .for_each(|l| *l = G::reunitarize(l));
    }

    pub fn max_unitarity_defect(&self) -> f64 {
        let d: Vec<f64> = self.links.par_iter().map(G::unitarity_defect).collect();
        max(&d)
    }

    /// Site-wise gauge action `U_mu(x) -> g(x) U_mu(x) g(x + mu)^dagger`.
    pub fn gauge(&self, g: &[G::Elem]) -> Self {
        let lat = &self.lattice;
        let n = lat.dims();
        let mut links = self.links.clone();
        links.par_chunks_mut(n).enumerate().for_each(|(x, chunk)| {
            for (mu, l) in chunk.iter_mut().enumerate() {
                let y = lat.fwd(x, mu);
                *l = G::mul(&G::mul(&g[x], l), &G::dagger(&g[y]));
            }
        });
        Self {
            lattice: self.lattice.clone(),
            links,
        }
    }
}

/// PRNG for one lattice site; streams are disjoint for distinct `stream`.
pub(crate) fn site_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// The Higgs section: one `C^r` vector per site.
#[derive(Debug, Clone, PartialEq)]
pub struct HiggsField<G: Group> {
    lattice: Arc<LatticeShape>,
    values: Vec<G::Higgs>,
}

impl<G: Group> HiggsField<G> {
    pub fn zero(lattice: Arc<LatticeShape>) -> Self {
        let len = lattice.num_sites();
        Self {
            lattice,
            values: vec![G::Higgs::zero(); len],
        }
    }

    pub fn from_values(lattice: Arc<LatticeShape>, values: Vec<G::Higgs>) -> Result<Self> {
        if values.len() != lattice.num_sites() {
            return Err(Error::Argument(format!(
                "expected {} Higgs values, got {}",
                lattice.num_sites(),
                values.len()
            )));
        }
        Ok(Self { lattice, values })
    }

    /// Components i.i.d. uniform in `[-amplitude, amplitude]` (real and imaginary parts).
    pub fn random(lattice: Arc<LatticeShape>, amplitude: f64, seed: u64) -> Self {
        let mut values = vec![G::Higgs::zero(); lattice.num_sites()];
        values.par_iter_mut().enumerate().for_each(|(site, v)| {
            let mut rng = site_rng(seed, 2 * site as u64 + 1);
            *v = G::random_higgs(&mut rng, amplitude);
        });
        Self { lattice, values }
    }

    /// Samples a function of physical position at every site.
    pub fn from_fn<F>(lattice: Arc<LatticeShape>, f: F) -> Self
    where
        F: Fn(&[f64]) -> G::Higgs + Sync,
    {
        let h = lattice.spacing();
        let values = (0..lattice.num_sites())
            .into_par_iter()
            .map(|s| {
                let p: Vec<f64> = lattice
                    .coords(crate::lattice::SiteId(s))
                    .iter()
                    .map(|&c| c as f64 * h)
                    .collect();
                f(&p)
            })
            .collect();
        Self { lattice, values }
    }

    pub fn lattice(&self) -> &Arc<LatticeShape> {
        &self.lattice
    }

    pub fn values(&self) -> &[G::Higgs] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [G::Higgs] {
        &mut self.values
    }

    /// View as a rank-0 Higgs-valued tensor.
    pub fn to_tensor(&self) -> HiggsTensor<G> {
        TensorField::from_values(self.lattice.clone(), 0, self.values.clone())
            .expect("rank-0 layout")
    }

    pub fn from_tensor(t: HiggsTensor<G>) -> Result<Self> {
        if t.rank() != 0 {
            return Err(Error::Argument(format!(
                "Higgs field must have rank 0, got {}",
                t.rank()
            )));
        }
        Ok(Self {
            lattice: t.lattice,
            values: t.values,
        })
    }

    /// `||u||^2_{L^2}`.
    pub fn l2_sqr(&self) -> f64 {
        let per: Vec<f64> = self.values.iter().map(Vector::norm_sqr).collect();
        self.lattice.site_volume() * pairwise_sum(&per)
    }

    pub fn sup_norm_sqr(&self) -> f64 {
        let per: Vec<f64> = self.values.iter().map(Vector::norm_sqr).collect();
        max(&per)
    }

    pub fn gauge(&self, g: &[G::Elem]) -> Self {
        let values = self
            .values
            .par_iter()
            .zip(g.par_iter())
            .map(|(v, gx)| G::act(gx, v))
            .collect();
        Self {
            lattice: self.lattice.clone(),
            values,
        }
    }
}

/// How values of a tensor field are transported along links.
pub trait FieldKind<G: Group>: Copy + std::fmt::Debug + Send + Sync + 'static {
    type Value: Vector;

    /// Parallel transport by a link (or gauge action by a group element).
    fn transport(u: &G::Elem, v: &Self::Value) -> Self::Value;

    /// The algebra element `z` with
    /// `inner(x, z) = <psi, d/ds transport(exp(s x) u, v)|_0>` where
    /// `moved = transport(u, v)`.
    fn link_sensitivity(moved: &Self::Value, psi: &Self::Value) -> G::Alg;

    /// Components i.i.d. uniform in `[-amplitude, amplitude]`.
    fn random_value<R: rand::Rng + ?Sized>(rng: &mut R, amplitude: f64) -> Self::Value;
}

/// Algebra-valued tensors (curvature type), transported by conjugation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlgebraKind;

/// `C^r`-valued tensors (Higgs type), transported by the fundamental action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HiggsKind;

impl<G: Group> FieldKind<G> for AlgebraKind {
    type Value = G::Alg;

    #[inline]
    fn transport(u: &G::Elem, v: &G::Alg) -> G::Alg {
        G::ad(u, v)
    }

    #[inline]
    fn link_sensitivity(moved: &G::Alg, psi: &G::Alg) -> G::Alg {
        // <psi, [x, W]> = <x, [W, psi]>
        G::bracket(moved, psi)
    }

    fn random_value<R: rand::Rng + ?Sized>(rng: &mut R, amplitude: f64) -> G::Alg {
        G::random_alg(rng, amplitude)
    }
}

impl<G: Group> FieldKind<G> for HiggsKind {
    type Value = G::Higgs;

    #[inline]
    fn transport(u: &G::Elem, v: &G::Higgs) -> G::Higgs {
        G::act(u, v)
    }

    #[inline]
    fn link_sensitivity(moved: &G::Higgs, psi: &G::Higgs) -> G::Alg {
        G::higgs_outer(moved, psi)
    }

    fn random_value<R: rand::Rng + ?Sized>(rng: &mut R, amplitude: f64) -> G::Higgs {
        G::random_higgs(rng, amplitude)
    }
}

/// Rank-`m` lattice tensor with values of kind `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField<G: Group, K: FieldKind<G>> {
    lattice: Arc<LatticeShape>,
    rank: usize,
    values: Vec<K::Value>,
    _group: PhantomData<G>,
}

pub type AlgebraTensor<G> = TensorField<G, AlgebraKind>;
pub type HiggsTensor<G> = TensorField<G, HiggsKind>;

impl<G: Group, K: FieldKind<G>> TensorField<G, K> {
    pub fn zeros(lattice: Arc<LatticeShape>, rank: usize) -> Self {
        let len = lattice.num_sites() * lattice.dims().pow(rank as u32);
        Self {
            lattice,
            rank,
            values: vec![K::Value::zero(); len],
            _group: PhantomData,
        }
    }

    /// Random tensor, one PRNG stream per site.
    pub fn random(lattice: Arc<LatticeShape>, rank: usize, amplitude: f64, seed: u64) -> Self {
        let per = lattice.dims().pow(rank as u32);
        let mut values = vec![K::Value::zero(); lattice.num_sites() * per];
        values.par_chunks_mut(per).enumerate().for_each(|(x, chunk)| {
            let mut rng = site_rng(seed, x as u64);
            for v in chunk {
                *v = K::random_value(&mut rng, amplitude);
            }
        });
        Self {
            lattice,
            rank,
            values,
            _group: PhantomData,
        }
    }

    pub fn from_values(lattice: Arc<LatticeShape>, rank: usize, values: Vec<K::Value>) -> Result<Self> {
        let want = lattice.num_sites() * lattice.dims().pow(rank as u32);
        if values.len() != want {
            return Err(Error::Argument(format!(
                "rank-{rank} tensor needs {want} values, got {}",
                values.len()
            )));
        }
        Ok(Self {
            lattice,
            rank,
            values,
            _group: PhantomData,
        })
    }

    pub fn lattice(&self) -> &Arc<LatticeShape> {
        &self.lattice
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Components per site, `n^rank`.
    pub fn components(&self) -> usize {
        self.lattice.dims().pow(self.rank as u32)
    }

    pub fn values(&self) -> &[K::Value] {
        &self.values
    }

    /// Value at `site` for the direction multi-index `idx` (leading index first).
    pub fn get(&self, site: usize, idx: &[usize]) -> &K::Value {
        assert_eq!(idx.len(), self.rank, "multi-index length must equal rank");
        let n = self.lattice.dims();
        let flat = idx.iter().fold(0, |acc, &i| acc * n + i);
        &self.values[site * self.components() + flat]
    }

    pub fn site_values(&self, site: usize) -> &[K::Value] {
        let c = self.components();
        &self.values[site * c..(site + 1) * c]
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.par_iter_mut().for_each(|v| *v = *v * s);
        out
    }

    /// Per-site sum of squared components, in site order.
    pub fn site_norm_sqr(&self) -> Vec<f64> {
        let c = self.components();
        self.values
            .par_chunks(c)
            .map(|vals| vals.iter().map(Vector::norm_sqr).sum())
            .collect()
    }

    /// Global inner product `h^n sum_x sum_I <a, b>`.
    pub fn inner(&self, other: &Self) -> f64 {
        assert_eq!(self.values.len(), other.values.len());
        let c = self.components();
        let per: Vec<f64> = self
            .values
            .par_chunks(c)
            .zip(other.values.par_chunks(c))
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.dot(y)).sum())
            .collect();
        self.lattice.site_volume() * pairwise_sum(&per)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.lattice.site_volume() * pairwise_sum(&self.site_norm_sqr())
    }

    /// Site-wise gauge action on the values.
    pub fn gauge(&self, g: &[G::Elem]) -> Self {
        let c = self.components();
        let mut out = self.clone();
        out.values
            .par_chunks_mut(c)
            .zip(g.par_iter())
            .for_each(|(vals, gx)| {
                for v in vals {
                    *v = K::transport(gx, v);
                }
            });
        out
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(Vector::is_finite)
    }
}

/// Plaquette logarithms `log P_{mu nu}(x)` as a rank-2 tensor; `P_{nu mu}`
/// is defined as the negative of `P_{mu nu}`, diagonal entries are zero.
pub(crate) fn plaquette_logs<G: Group>(u: &GaugeField<G>) -> Result<AlgebraTensor<G>> {
    let lat = u.lattice().clone();
    let n = lat.dims();
    let per_site: Vec<Result<Vec<G::Alg>>> = (0..lat.num_sites())
        .into_par_iter()
        .map(|x| {
            let mut out = vec![G::Alg::zero(); n * n];
            for mu in 0..n {
                for nu in (mu + 1)..n {
                    let p = plaquette(u, &lat, x, mu, nu);
                    let y = G::log(&p).map_err(|e| match e {
                        Error::Branch { angle } => Error::CurvatureTooRough {
                            site: x,
                            mu,
                            nu,
                            angle,
                        },
                        other => other,
                    })?;
                    out[mu * n + nu] = y;
                    out[nu * n + mu] = -y;
                }
            }
            Ok(out)
        })
        .collect();
    let mut values = Vec::with_capacity(lat.num_sites() * n * n);
    for site in per_site {
        values.extend(site?);
    }
    TensorField::from_values(lat, 2, values)
}

/// `P_{mu nu}(x) = U_mu(x) U_nu(x+mu) U_mu(x+nu)^dagger U_nu(x)^dagger`.
#[inline]
pub(crate) fn plaquette<G: Group>(
    u: &GaugeField<G>,
    lat: &LatticeShape,
    x: usize,
    mu: usize,
    nu: usize,
) -> G::Elem {
    let a = G::mul(u.link(x, mu), u.link(lat.fwd(x, mu), nu));
    let b = G::mul(&a, &G::dagger(u.link(lat.fwd(x, nu), mu)));
    G::mul(&b, &G::dagger(u.link(x, nu)))
}

/// Curvature `F_{mu nu}(x) = log(P_{mu nu}(x)) / h^2`, antisymmetric by construction.
pub fn curvature<G: Group>(u: &GaugeField<G>) -> Result<AlgebraTensor<G>> {
    let h = u.lattice().spacing();
    Ok(plaquette_logs(u)?.scaled(1.0 / (h * h)))
}

/// Pointwise curvature norm `|F(x)|`, with `|F|^2 = sum_{mu<nu} inner(F_{mu nu}, F_{mu nu})`.
pub fn curvature_pointwise_norm<G: Group>(f: &AlgebraTensor<G>) -> Vec<f64> {
    f.site_norm_sqr().into_iter().map(|s| (0.5 * s).sqrt()).collect()
}

/// Covariant forward difference; output rank is `rank + 1`.
pub fn cov_diff<G: Group, K: FieldKind<G>>(
    u: &GaugeField<G>,
    phi: &TensorField<G, K>,
) -> TensorField<G, K> {
    let lat = phi.lattice().clone();
    let n = lat.dims();
    let inner_len = phi.components();
    let out_len = inner_len * n;
    let inv_h = 1.0 / lat.spacing();
    let src = phi.values();
    let mut out = vec![K::Value::zero(); lat.num_sites() * out_len];
    out.par_chunks_mut(out_len).enumerate().for_each(|(x, chunk)| {
        let here = &src[x * inner_len..(x + 1) * inner_len];
        for mu in 0..n {
            let y = lat.fwd(x, mu);
            let there = &src[y * inner_len..(y + 1) * inner_len];
            let link = u.link(x, mu);
            let dst = &mut chunk[mu * inner_len..(mu + 1) * inner_len];
            for i in 0..inner_len {
                dst[i] = (K::transport(link, &there[i]) - here[i]) * inv_h;
            }
        }
    });
    TensorField {
        lattice: lat,
        rank: phi.rank() + 1,
        values: out,
        _group: PhantomData,
    }
}

/// Exact transpose of [`cov_diff`] under the global inner product.
pub fn cov_diff_adjoint<G: Group, K: FieldKind<G>>(
    u: &GaugeField<G>,
    psi: &TensorField<G, K>,
) -> Result<TensorField<G, K>> {
    if psi.rank() == 0 {
        return Err(Error::Argument(
            "adjoint difference needs a tensor of rank >= 1".into(),
        ));
    }
    let lat = psi.lattice().clone();
    let n = lat.dims();
    let in_len = psi.components();
    let out_len = in_len / n;
    let inv_h = 1.0 / lat.spacing();
    let src = psi.values();
    let mut out = vec![K::Value::zero(); lat.num_sites() * out_len];
    out.par_chunks_mut(out_len).enumerate().for_each(|(y, chunk)| {
        for mu in 0..n {
            let x = lat.bwd(y, mu);
            let back = G::dagger(u.link(x, mu));
            let from_x = &src[x * in_len + mu * out_len..x * in_len + (mu + 1) * out_len];
            let from_y = &src[y * in_len + mu * out_len..y * in_len + (mu + 1) * out_len];
            for i in 0..out_len {
                chunk[i] += (K::transport(&back, &from_x[i]) - from_y[i]) * inv_h;
            }
        }
    });
    Ok(TensorField {
        lattice: lat,
        rank: psi.rank() - 1,
        values: out,
        _group: PhantomData,
    })
}

/// `m`-fold covariant derivative.
pub fn iterated_deriv<G: Group, K: FieldKind<G>>(
    u: &GaugeField<G>,
    phi: &TensorField<G, K>,
    m: usize,
) -> Result<TensorField<G, K>> {
    phi.lattice().check_stencil(m)?;
    let mut cur = phi.clone();
    for _ in 0..m {
        cur = cov_diff(u, &cur);
    }
    Ok(cur)
}

/// Bochner Laplacian `-nabla^* nabla`.
pub fn bochner_laplacian<G: Group, K: FieldKind<G>>(
    u: &GaugeField<G>,
    phi: &TensorField<G, K>,
) -> TensorField<G, K> {
    let d = cov_diff(u, phi);
    cov_diff_adjoint(u, &d)
        .expect("rank >= 1 after cov_diff")
        .scaled(-1.0)
}

/// `k`-fold Bochner Laplacian.
pub fn bochner_power<G: Group, K: FieldKind<G>>(
    u: &GaugeField<G>,
    phi: &TensorField<G, K>,
    k: usize,
) -> Result<TensorField<G, K>> {
    phi.lattice().check_stencil(2 * k)?;
    let mut cur = phi.clone();
    for _ in 0..k {
        cur = bochner_laplacian(u, &cur);
    }
    Ok(cur)
}

/// Number of (site, axis) pairs where the discrete Kato inequality
/// `| |u(x+mu)| - |u(x)| | <= h |nabla_mu u(x)|` fails beyond rounding.
pub fn kato_violations<G: Group>(u: &GaugeField<G>, higgs: &HiggsField<G>) -> usize {
    let lat = u.lattice();
    let n = lat.dims();
    let vals = higgs.values();
    (0..lat.num_sites())
        .into_par_iter()
        .map(|x| {
            let ax = vals[x].norm_sqr().sqrt();
            (0..n)
                .filter(|&mu| {
                    let y = lat.fwd(x, mu);
                    let ay = vals[y].norm_sqr().sqrt();
                    let diff = (G::act(u.link(x, mu), &vals[y]) - vals[x]).norm_sqr().sqrt();
                    (ay - ax).abs() > diff + 8.0 * f64::EPSILON * (ax + ay)
                })
                .count()
        })
        .sum()
}
