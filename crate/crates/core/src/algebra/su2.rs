use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use super::{Group, GroupKind, Vector, THETA_MAX};
use crate::error::{Error, Result};

/// SU(2) acting on C^2 through the fundamental representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Su2;

/// `w I + i v.sigma`. Unit norm on the group; the same storage holds
/// algebra elements (`w = 0`) during products.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quat {
    pub w: f64,
    pub v: [f64; 3],
}

impl Quat {
    pub const fn new(w: f64, v: [f64; 3]) -> Self {
        Self { w, v }
    }

    #[inline]
    fn mul(&self, o: &Quat) -> Quat {
        // (w1 + i v1.s)(w2 + i v2.s) = w1 w2 - v1.v2 + i (w1 v2 + w2 v1 - v1 x v2).s
        let (a, b) = (&self.v, &o.v);
        let c = cross(a, b);
        Quat {
            w: self.w * o.w - dot3(a, b),
            v: [
                self.w * b[0] + o.w * a[0] - c[0],
                self.w * b[1] + o.w * a[1] - c[1],
                self.w * b[2] + o.w * a[2] - c[2],
            ],
        }
    }

    #[inline]
    fn conj(&self) -> Quat {
        Quat {
            w: self.w,
            v: [-self.v[0], -self.v[1], -self.v[2]],
        }
    }

    fn norm_sqr(&self) -> f64 {
        self.w * self.w + dot3(&self.v, &self.v)
    }

    /// Row-major 2x2 complex matrix.
    pub fn to_matrix(&self) -> [[Complex64; 2]; 2] {
        let [v1, v2, v3] = self.v;
        [
            [Complex64::new(self.w, v3), Complex64::new(v2, v1)],
            [Complex64::new(-v2, v1), Complex64::new(self.w, -v3)],
        ]
    }
}

#[inline]
fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Element `i a.sigma` of su(2).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Su2Alg(pub [f64; 3]);

/// Vector in C^2.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct C2(pub [Complex64; 2]);

macro_rules! linear_ops {
    ($t:ident, $n:expr) => {
        impl Add for $t {
            type Output = Self;
            #[inline]
            fn add(self, o: Self) -> Self {
                let mut r = self;
                for i in 0..$n {
                    r.0[i] = r.0[i] + o.0[i];
                }
                r
            }
        }
        impl Sub for $t {
            type Output = Self;
            #[inline]
            fn sub(self, o: Self) -> Self {
                let mut r = self;
                for i in 0..$n {
                    r.0[i] = r.0[i] - o.0[i];
                }
                r
            }
        }
        impl Neg for $t {
            type Output = Self;
            #[inline]
            fn neg(self) -> Self {
                let mut r = self;
                for i in 0..$n {
                    r.0[i] = -r.0[i];
                }
                r
            }
        }
        impl Mul<f64> for $t {
            type Output = Self;
            #[inline]
            fn mul(self, s: f64) -> Self {
                let mut r = self;
                for i in 0..$n {
                    r.0[i] = r.0[i] * s;
                }
                r
            }
        }
        impl AddAssign for $t {
            #[inline]
            fn add_assign(&mut self, o: Self) {
                *self = *self + o;
            }
        }
        impl SubAssign for $t {
            #[inline]
            fn sub_assign(&mut self, o: Self) {
                *self = *self - o;
            }
        }
    };
}

linear_ops!(Su2Alg, 3);
linear_ops!(C2, 2);

impl Vector for Su2Alg {
    #[inline]
    fn zero() -> Self {
        Su2Alg([0.0; 3])
    }

    #[inline]
    fn dot(&self, other: &Self) -> f64 {
        2.0 * dot3(&self.0, &other.0)
    }

    fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl Vector for C2 {
    #[inline]
    fn zero() -> Self {
        C2([Complex64::new(0.0, 0.0); 2])
    }

    #[inline]
    fn dot(&self, other: &Self) -> f64 {
        self.0[0].dot(&other.0[0]) + self.0[1].dot(&other.0[1])
    }

    fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Group for Su2 {
    const KIND: GroupKind = GroupKind::Su2;
    const ALG_DIM: usize = 3;
    const HIGGS_DIM: usize = 2;
    const ELEM_WORDS: usize = 8;

    type Elem = Quat;
    type Alg = Su2Alg;
    type Higgs = C2;

    #[inline]
    fn identity() -> Quat {
        Quat::new(1.0, [0.0; 3])
    }

    #[inline]
    fn mul(a: &Quat, b: &Quat) -> Quat {
        a.mul(b)
    }

    #[inline]
    fn dagger(a: &Quat) -> Quat {
        a.conj()
    }

    fn exp(x: &Su2Alg) -> Quat {
        let theta = dot3(&x.0, &x.0).sqrt();
        let sinc = if theta < 1e-6 {
            1.0 - theta * theta / 6.0
        } else {
            theta.sin() / theta
        };
        Quat::new(theta.cos(), [x.0[0] * sinc, x.0[1] * sinc, x.0[2] * sinc])
    }

    fn log(u: &Quat) -> Result<Su2Alg> {
        let s = dot3(&u.v, &u.v).sqrt();
        if s == 0.0 {
            if u.w < 0.0 {
                return Err(Error::Branch {
                    angle: std::f64::consts::PI,
                });
            }
            return Ok(Su2Alg([0.0; 3]));
        }
        let theta = s.atan2(u.w);
        if theta > THETA_MAX {
            return Err(Error::Branch { angle: theta });
        }
        let f = theta / s;
        Ok(Su2Alg([u.v[0] * f, u.v[1] * f, u.v[2] * f]))
    }

    fn angle(u: &Quat) -> f64 {
        dot3(&u.v, &u.v).sqrt().atan2(u.w)
    }

    fn alg_angle(x: &Su2Alg) -> f64 {
        dot3(&x.0, &x.0).sqrt()
    }

    fn reunitarize(u: &Quat) -> Quat {
        // polar projection of w I + i v.sigma is the normalised quaternion (det = 1)
        let n = u.norm_sqr().sqrt();
        Quat::new(u.w / n, [u.v[0] / n, u.v[1] / n, u.v[2] / n])
    }

    fn unitarity_defect(u: &Quat) -> f64 {
        (u.norm_sqr() - 1.0).abs()
    }

    #[inline]
    fn ad(g: &Quat, x: &Su2Alg) -> Su2Alg {
        let p = g.mul(&Quat::new(0.0, x.0)).mul(&g.conj());
        Su2Alg(p.v)
    }

    #[inline]
    fn bracket(x: &Su2Alg, y: &Su2Alg) -> Su2Alg {
        // [i a.s, i b.s] = i (-2 a x b).s
        let c = cross(&x.0, &y.0);
        Su2Alg([-2.0 * c[0], -2.0 * c[1], -2.0 * c[2]])
    }

    #[inline]
    fn act(g: &Quat, v: &C2) -> C2 {
        let [v1, v2, v3] = g.v;
        let m00 = Complex64::new(g.w, v3);
        let m01 = Complex64::new(v2, v1);
        let m10 = Complex64::new(-v2, v1);
        let m11 = Complex64::new(g.w, -v3);
        C2([m00 * v.0[0] + m01 * v.0[1], m10 * v.0[0] + m11 * v.0[1]])
    }

    #[inline]
    fn alg_act(x: &Su2Alg, v: &C2) -> C2 {
        let q = Quat::new(0.0, x.0);
        Self::act(&q, v)
    }

    fn dlog_transpose(y: &Su2Alg, g: &Su2Alg) -> Su2Alg {
        // g(-ad_y) with g(z) = z / (e^z - 1); on the plane orthogonal to y the
        // real part is |y| cot|y| and the odd part is -y x (.)
        let t2 = dot3(&y.0, &y.0);
        let (c, par) = if t2 < 1e-8 {
            (1.0 - t2 / 3.0 - t2 * t2 / 45.0, 1.0 / 3.0 + t2 / 45.0)
        } else {
            let t = t2.sqrt();
            let c = t * t.cos() / t.sin();
            (c, (1.0 - c) / t2)
        };
        let yg = dot3(&y.0, &g.0);
        let yx = cross(&y.0, &g.0);
        let mut out = [0.0; 3];
        for i in 0..3 {
            out[i] = c * g.0[i] + par * yg * y.0[i] - yx[i];
        }
        Su2Alg(out)
    }

    fn higgs_outer(w: &C2, psi: &C2) -> Su2Alg {
        // z_j = -1/2 Im(psi^dagger sigma_j w)
        let (p0, p1) = (psi.0[0].conj(), psi.0[1].conj());
        let (w0, w1) = (w.0[0], w.0[1]);
        let s1 = p0 * w1 + p1 * w0;
        let s2 = Complex64::new(0.0, -1.0) * p0 * w1 + Complex64::new(0.0, 1.0) * p1 * w0;
        let s3 = p0 * w0 - p1 * w1;
        Su2Alg([-0.5 * s1.im, -0.5 * s2.im, -0.5 * s3.im])
    }

    fn alg_from_coords(c: &[f64]) -> Su2Alg {
        Su2Alg([c[0], c[1], c[2]])
    }

    fn alg_coords(x: &Su2Alg) -> Vec<f64> {
        x.0.to_vec()
    }

    fn higgs_from_complex(c: &[Complex64]) -> C2 {
        C2([c[0], c[1]])
    }

    fn higgs_components(v: &C2) -> Vec<Complex64> {
        v.0.to_vec()
    }

    fn elem_words(u: &Quat) -> Vec<f64> {
        let m = u.to_matrix();
        let mut out = Vec::with_capacity(8);
        for row in &m {
            for z in row {
                out.push(z.re);
                out.push(z.im);
            }
        }
        out
    }

    fn elem_from_words(w: &[f64]) -> (Quat, f64) {
        let m00 = Complex64::new(w[0], w[1]);
        let m01 = Complex64::new(w[2], w[3]);
        let m10 = Complex64::new(w[4], w[5]);
        let m11 = Complex64::new(w[6], w[7]);
        let q = Quat::new(m00.re, [m01.im, m01.re, m00.im]);
        // U^dagger U = I with det 1 forces m10 = -conj(m01), m11 = conj(m00)
        let defect = (m10 + m01.conj())
            .norm()
            .max((m11 - m00.conj()).norm())
            .max((q.norm_sqr() - 1.0).abs());
        (q, defect)
    }
}
