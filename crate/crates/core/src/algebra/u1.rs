use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use super::{Group, GroupKind, Vector, THETA_MAX};
use crate::error::{Error, Result};

/// The abelian group U(1) acting on C by multiplication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct U1;

/// Element `i a` of the Lie algebra u(1).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct U1Alg(pub f64);

impl Add for U1Alg {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        U1Alg(self.0 + o.0)
    }
}

impl Sub for U1Alg {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        U1Alg(self.0 - o.0)
    }
}

impl Neg for U1Alg {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        U1Alg(-self.0)
    }
}

impl Mul<f64> for U1Alg {
    type Output = Self;
    #[inline]
    fn mul(self, s: f64) -> Self {
        U1Alg(self.0 * s)
    }
}

impl AddAssign for U1Alg {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        self.0 += o.0;
    }
}

impl SubAssign for U1Alg {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        self.0 -= o.0;
    }
}

impl Vector for U1Alg {
    #[inline]
    fn zero() -> Self {
        U1Alg(0.0)
    }

    #[inline]
    fn dot(&self, other: &Self) -> f64 {
        self.0 * other.0
    }

    fn is_finite(&self) -> bool {
        self.0.is_finite()
    }
}

impl Group for U1 {
    const KIND: GroupKind = GroupKind::U1;
    const ALG_DIM: usize = 1;
    const HIGGS_DIM: usize = 1;
    const ELEM_WORDS: usize = 2;

    type Elem = Complex64;
    type Alg = U1Alg;
    type Higgs = Complex64;

    #[inline]
    fn identity() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[inline]
    fn mul(a: &Complex64, b: &Complex64) -> Complex64 {
        a * b
    }

    #[inline]
    fn dagger(a: &Complex64) -> Complex64 {
        a.conj()
    }

    #[inline]
    fn exp(x: &U1Alg) -> Complex64 {
        let (s, c) = x.0.sin_cos();
        Complex64::new(c, s)
    }

    fn log(u: &Complex64) -> Result<U1Alg> {
        let theta = u.im.atan2(u.re);
        if theta.abs() > THETA_MAX {
            return Err(Error::Branch {
                angle: theta.abs(),
            });
        }
        Ok(U1Alg(theta))
    }

    fn angle(u: &Complex64) -> f64 {
        u.im.atan2(u.re).abs()
    }

    fn alg_angle(x: &U1Alg) -> f64 {
        x.0.abs()
    }

    fn reunitarize(u: &Complex64) -> Complex64 {
        u / u.norm()
    }

    fn unitarity_defect(u: &Complex64) -> f64 {
        (u.norm() - 1.0).abs()
    }

    #[inline]
    fn ad(_g: &Complex64, x: &U1Alg) -> U1Alg {
        *x
    }

    #[inline]
    fn bracket(_x: &U1Alg, _y: &U1Alg) -> U1Alg {
        U1Alg(0.0)
    }

    #[inline]
    fn act(g: &Complex64, v: &Complex64) -> Complex64 {
        g * v
    }

    #[inline]
    fn alg_act(x: &U1Alg, v: &Complex64) -> Complex64 {
        Complex64::new(-x.0 * v.im, x.0 * v.re)
    }

    #[inline]
    fn dlog_transpose(_y: &U1Alg, g: &U1Alg) -> U1Alg {
        *g
    }

    #[inline]
    fn higgs_outer(w: &Complex64, psi: &Complex64) -> U1Alg {
        // Re(conj(psi) i a w) = -a Im(conj(psi) w)
        U1Alg(-(psi.conj() * w).im)
    }

    fn alg_from_coords(c: &[f64]) -> U1Alg {
        U1Alg(c[0])
    }

    fn alg_coords(x: &U1Alg) -> Vec<f64> {
        vec![x.0]
    }

    fn higgs_from_complex(c: &[Complex64]) -> Complex64 {
        c[0]
    }

    fn higgs_components(v: &Complex64) -> Vec<Complex64> {
        vec![*v]
    }

    fn elem_words(u: &Complex64) -> Vec<f64> {
        vec![u.re, u.im]
    }

    fn elem_from_words(w: &[f64]) -> (Complex64, f64) {
        let z = Complex64::new(w[0], w[1]);
        (z, Self::unitarity_defect(&z))
    }
}
