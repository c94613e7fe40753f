//! Periodic rectangular lattice over the flat torus.
//!
//! Sites are numbered lexicographically with axis 0 varying fastest. Forward
//! and backward neighbour tables are built once at construction so the field
//! kernels never do modular arithmetic in their inner loops.

use crate::error::{Error, Result};

/// Smallest extent accepted along any axis.
pub const MIN_EXTENT: usize = 4;
/// Largest supported dimension.
pub const MAX_DIM: usize = 4;

/// Lexicographic site index (axis 0 fastest).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SiteId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeShape {
    extents: Vec<usize>,
    spacing: f64,
    strides: Vec<usize>,
    num_sites: usize,
    // fwd[axis * num_sites + site], bwd likewise
    fwd: Vec<usize>,
    bwd: Vec<usize>,
}

impl LatticeShape {
    pub fn new(extents: &[usize], spacing: f64) -> Result<Self> {
        let dims = extents.len();
        if dims == 0 || dims > MAX_DIM {
            return Err(Error::Argument(format!(
                "lattice dimension must be in 1..={MAX_DIM}, got {dims}"
            )));
        }
        if let Some(&e) = extents.iter().find(|&&e| e < MIN_EXTENT) {
            return Err(Error::Argument(format!(
                "every extent must be >= {MIN_EXTENT}, got {e}"
            )));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::Argument(format!(
                "lattice spacing must be positive, got {spacing}"
            )));
        }
        let mut strides = Vec::with_capacity(dims);
        let mut acc = 1usize;
        for &e in extents {
            strides.push(acc);
            acc = acc
                .checked_mul(e)
                .ok_or_else(|| Error::Argument("lattice too large".into()))?;
        }
        let num_sites = acc;

        let mut fwd = vec![0; dims * num_sites];
        let mut bwd = vec![0; dims * num_sites];
        for axis in 0..dims {
            let (e, s) = (extents[axis], strides[axis]);
            for site in 0..num_sites {
                let c = (site / s) % e;
                let base = site - c * s;
                fwd[axis * num_sites + site] = base + ((c + 1) % e) * s;
                bwd[axis * num_sites + site] = base + ((c + e - 1) % e) * s;
            }
        }
        Ok(Self {
            extents: extents.to_vec(),
            spacing,
            strides,
            num_sites,
            fwd,
            bwd,
        })
    }

    #[inline]
    pub fn dims(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    #[inline]
    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    /// Volume element h^n carried by every site.
    pub fn site_volume(&self) -> f64 {
        self.spacing.powi(self.dims() as i32)
    }

    /// Total volume h^n * #sites.
    pub fn volume(&self) -> f64 {
        self.site_volume() * self.num_sites as f64
    }

    /// Same extents, different spacing.
    pub fn with_spacing(&self, spacing: f64) -> Result<Self> {
        Self::new(&self.extents, spacing)
    }

    pub fn coords(&self, site: SiteId) -> Vec<usize> {
        self.extents
            .iter()
            .zip(&self.strides)
            .map(|(&e, &s)| (site.0 / s) % e)
            .collect()
    }

    /// Site from coordinates; coordinates are reduced modulo the extents.
    pub fn site(&self, coords: &[usize]) -> SiteId {
        debug_assert_eq!(coords.len(), self.dims());
        SiteId(
            coords
                .iter()
                .zip(&self.extents)
                .zip(&self.strides)
                .map(|((&c, &e), &s)| (c % e) * s)
                .sum(),
        )
    }

    /// Periodic neighbour of `site` one step along `axis` in direction `dir` (+1 or -1).
    pub fn shift(&self, site: SiteId, axis: usize, dir: i32) -> Result<SiteId> {
        if axis >= self.dims() {
            return Err(Error::Argument(format!(
                "axis {axis} out of range for a {}-dimensional lattice",
                self.dims()
            )));
        }
        if site.0 >= self.num_sites {
            return Err(Error::Argument(format!("site {} out of range", site.0)));
        }
        match dir {
            1 => Ok(SiteId(self.fwd(site.0, axis))),
            -1 => Ok(SiteId(self.bwd(site.0, axis))),
            _ => Err(Error::Argument(format!("direction must be +1 or -1, got {dir}"))),
        }
    }

    #[inline]
    pub(crate) fn fwd(&self, site: usize, axis: usize) -> usize {
        self.fwd[axis * self.num_sites + site]
    }

    #[inline]
    pub(crate) fn bwd(&self, site: usize, axis: usize) -> usize {
        self.bwd[axis * self.num_sites + site]
    }

    /// Stencil-radius guard: forward stencils of total order `order` must not
    /// wrap onto their own centre, which needs every extent >= order + 1.
    pub fn check_stencil(&self, order: usize) -> Result<()> {
        let smallest = *self.extents.iter().min().expect("non-empty extents");
        if smallest < order + 1 {
            return Err(Error::LatticeTooSmall {
                order,
                needed: order + 1,
                smallest,
            });
        }
        Ok(())
    }

    /// Iterator over all site indices.
    pub fn sites(&self) -> impl Iterator<Item = SiteId> {
        (0..self.num_sites).map(SiteId)
    }
}
