//! Structure-group kernels for U(1) and SU(2).
//!
//! The algebra inner product is `Re tr(X^dagger Y)` with no extra factor. For
//! SU(2) this means `inner(i a.sigma, i b.sigma) = 2 a.b`.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use rand::Rng;

use crate::error::Result;

mod su2;
mod u1;

pub use su2::{Quat, Su2, Su2Alg, C2};
pub use u1::{U1Alg, U1};

/// Largest rotation angle accepted by the principal logarithm.
pub const THETA_MAX: f64 = std::f64::consts::PI - 0.1;

/// A real inner-product space: algebra values and Higgs fibre values.
pub trait Vector:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
    + AddAssign
    + SubAssign
    + 'static
{
    fn zero() -> Self;

    /// Real inner product.
    fn dot(&self, other: &Self) -> f64;

    fn norm_sqr(&self) -> f64 {
        self.dot(self)
    }

    fn is_finite(&self) -> bool;
}

impl Vector for Complex64 {
    #[inline]
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }

    #[inline]
    fn dot(&self, other: &Self) -> f64 {
        self.re * other.re + self.im * other.im
    }

    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupKind {
    U1,
    Su2,
}

impl GroupKind {
    /// Snapshot group code.
    pub fn code(self) -> u8 {
        match self {
            GroupKind::U1 => 0,
            GroupKind::Su2 => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(GroupKind::U1),
            1 => Some(GroupKind::Su2),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GroupKind::U1 => "U(1)",
            GroupKind::Su2 => "SU(2)",
        }
    }
}

impl std::fmt::Display for GroupKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A compact structure group together with its Lie algebra and the
/// representation on the Higgs fibre.
pub trait Group: Copy + Debug + Send + Sync + 'static {
    const KIND: GroupKind;
    /// Real dimension of the Lie algebra.
    const ALG_DIM: usize;
    /// Complex dimension of the Higgs fibre.
    const HIGGS_DIM: usize;
    /// f64 words per group element in the snapshot layout.
    const ELEM_WORDS: usize;

    type Elem: Copy + Debug + PartialEq + Send + Sync + 'static;
    type Alg: Vector;
    type Higgs: Vector;

    fn identity() -> Self::Elem;
    fn mul(a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    /// Hermitian conjugate, the inverse on the group.
    fn dagger(a: &Self::Elem) -> Self::Elem;

    fn exp(x: &Self::Alg) -> Self::Elem;
    /// Principal logarithm; errors within 0.1 of the cut locus.
    fn log(u: &Self::Elem) -> Result<Self::Alg>;
    /// Rotation angle of a group element, in `[0, pi]`.
    fn angle(u: &Self::Elem) -> f64;
    /// Rotation angle of `exp(x)` before wrapping.
    fn alg_angle(x: &Self::Alg) -> f64;

    /// Nearest group element (drift correction).
    fn reunitarize(u: &Self::Elem) -> Self::Elem;
    /// Distance from the group manifold.
    fn unitarity_defect(u: &Self::Elem) -> f64;

    /// Adjoint action `g x g^dagger`.
    fn ad(g: &Self::Elem, x: &Self::Alg) -> Self::Alg;
    /// Commutator `[x, y]`.
    fn bracket(x: &Self::Alg, y: &Self::Alg) -> Self::Alg;
    /// Fundamental action on the Higgs fibre.
    fn act(g: &Self::Elem, v: &Self::Higgs) -> Self::Higgs;
    /// Algebra element acting on the fibre.
    fn alg_act(x: &Self::Alg, v: &Self::Higgs) -> Self::Higgs;

    /// Transpose of the differential of `log` under left perturbation:
    /// for `y = log(p)`, returns `d` with
    /// `inner(x, d) = inner(d/ds log(exp(s x) p)|_0, g)` for every algebra `x`.
    fn dlog_transpose(y: &Self::Alg, g: &Self::Alg) -> Self::Alg;

    /// The algebra element `z` with `inner(x, z) = Re <psi, x w>` for every `x`.
    fn higgs_outer(w: &Self::Higgs, psi: &Self::Higgs) -> Self::Alg;

    /// Algebra element from coordinates in the orthogonal basis used for
    /// noise and interpolation (U(1): `i a`; SU(2): `i a.sigma`).
    fn alg_from_coords(c: &[f64]) -> Self::Alg;
    fn alg_coords(x: &Self::Alg) -> Vec<f64>;

    fn higgs_from_complex(c: &[Complex64]) -> Self::Higgs;
    fn higgs_components(v: &Self::Higgs) -> Vec<Complex64>;

    /// Snapshot words of a group element.
    fn elem_words(u: &Self::Elem) -> Vec<f64>;
    /// Parse snapshot words; returns the element and its unitarity defect.
    fn elem_from_words(w: &[f64]) -> (Self::Elem, f64);

    fn random_alg<R: Rng + ?Sized>(rng: &mut R, amplitude: f64) -> Self::Alg {
        let c: Vec<f64> = (0..Self::ALG_DIM)
            .map(|_| amplitude * rng.random_range(-1.0..=1.0))
            .collect();
        Self::alg_from_coords(&c)
    }

    fn random_higgs<R: Rng + ?Sized>(rng: &mut R, amplitude: f64) -> Self::Higgs {
        let c: Vec<Complex64> = (0..Self::HIGGS_DIM)
            .map(|_| {
                Complex64::new(
                    amplitude * rng.random_range(-1.0..=1.0),
                    amplitude * rng.random_range(-1.0..=1.0),
                )
            })
            .collect();
        Self::higgs_from_complex(&c)
    }

    /// Haar-ish random group element, used for gauge transforms in tests.
    fn random_elem<R: Rng + ?Sized>(rng: &mut R) -> Self::Elem {
        Self::exp(&Self::random_alg(rng, std::f64::consts::PI))
    }
}

/// Algebra inner product `Re tr(X^dagger Y)`.
#[inline]
pub fn inner<V: Vector>(x: &V, y: &V) -> f64 {
    x.dot(y)
}
