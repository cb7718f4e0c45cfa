//! Complex scalars and Jacobi elliptic functions.
//!
//! `sn`, `cn` and `dn` are computed for complex argument and complex modulus
//! with the descending Landen (Gauss) transformation. The modulus is driven
//! towards zero by
//!
//! ```text
//! k_{n+1} = k_n^2 / (1 + k'_n)^2,      k'_{n+1} = 2 sqrt(k'_n) / (1 + k'_n)
//! ```
//!
//! (principal square roots throughout), the argument is divided by
//! `1 + k_{n+1}` at every level, and the small-modulus expansion is evaluated
//! at the bottom. The recursion is then unwound with
//!
//! ```text
//! sn = (1 + k1) s / (1 + k1 s^2),  cn = c d / (1 + k1 s^2),  dn = (1 - k1 s^2) / (1 + k1 s^2)
//! ```
//!
//! When `|1 - k^2| < 1e-10` the Landen sequence no longer contracts and the
//! first-order expansion about `k = 1` is used instead (exact at `k = 1`).

use num_complex::Complex64;

use crate::error::{pole, Result, YbeError};

/// Complex number used for every weight, parameter and coefficient.
pub type ComplexScalar = Complex64;

/// Imaginary unit.
pub const I: ComplexScalar = Complex64::new(0.0, 1.0);

/// Shorthand for a real-valued [`ComplexScalar`].
#[inline]
pub fn re(x: f64) -> ComplexScalar {
    Complex64::new(x, 0.0)
}

/// `|dn|` above this value means the argument is within ~1e-9 of a pole.
pub const POLE_MAGNITUDE: f64 = 1e9;

/// `|dn|` below this value makes `cd = cn/dn` a pole.
pub const DN_ZERO: f64 = 1e-12;

const LANDEN_FLOOR: f64 = 1e-5;
const HYPERBOLIC_BAND: f64 = 1e-10;
const MODULUS_SLACK: f64 = 1e-12;

/// Modulus `k` of the Jacobi functions (not the parameter `m = k^2`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticModulus(ComplexScalar);

impl EllipticModulus {
    pub fn new(k: ComplexScalar) -> Result<Self> {
        if !(k.re.is_finite() && k.im.is_finite()) || k.norm() > 1.0 + MODULUS_SLACK {
            return Err(YbeError::ModulusOutOfRange { modulus: k.norm() });
        }
        Ok(Self(k))
    }

    pub fn real(k: f64) -> Result<Self> {
        Self::new(re(k))
    }

    pub fn k(&self) -> ComplexScalar {
        self.0
    }

    /// True when the modulus is non-real; supported, but outside the real
    /// moduli the closed forms are usually quoted with.
    pub fn is_complex(&self) -> bool {
        self.0.im != 0.0
    }
}

/// The triple `(sn, cn, dn)` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobi {
    pub sn: ComplexScalar,
    pub cn: ComplexScalar,
    pub dn: ComplexScalar,
}

impl Jacobi {
    pub fn cd(&self) -> Result<ComplexScalar> {
        if self.dn.norm() < DN_ZERO {
            return Err(pole("cd: dn vanishes"));
        }
        Ok(self.cn / self.dn)
    }
}

fn finite(z: ComplexScalar) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// `sn`, `cn`, `dn` of modulus `k` at `z`.
pub fn jacobi_sncndn(z: ComplexScalar, k: EllipticModulus) -> Result<Jacobi> {
    if !finite(z) {
        return Err(pole("non-finite argument"));
    }
    let k = k.k();
    let m = k * k;
    let out = if (re(1.0) - m).norm() < HYPERBOLIC_BAND {
        near_unit_modulus(z, re(1.0) - m)
    } else {
        landen(z, k)?
    };
    if !(finite(out.sn) && finite(out.cn) && finite(out.dn)) || out.dn.norm() > POLE_MAGNITUDE {
        return Err(pole(format!("jacobi_sncndn at z = {z}")));
    }
    Ok(out)
}

fn landen(z: ComplexScalar, k: ComplexScalar) -> Result<Jacobi> {
    let mut moduli = Vec::with_capacity(8);
    let mut kn = k;
    let mut kp = (re(1.0) - k * k).sqrt();
    while kn.norm() > LANDEN_FLOOR && moduli.len() < 64 {
        let next = kn * kn / ((re(1.0) + kp) * (re(1.0) + kp));
        kp = re(2.0) * kp.sqrt() / (re(1.0) + kp);
        kn = next;
        moduli.push(kn);
    }

    let mut v = z;
    for &kk in &moduli {
        v /= re(1.0) + kk;
    }
    let m = kn * kn;
    let (s, c) = (v.sin(), v.cos());
    let q = v - s * c;
    let mut sn = s - m * 0.25 * q * c;
    let mut cn = c + m * 0.25 * q * s;
    let mut dn = re(1.0) - m * 0.5 * s * s;

    for &k1 in moduli.iter().rev() {
        let s2 = k1 * sn * sn;
        let den = re(1.0) + s2;
        if den.norm() < 1e-300 || !finite(den) {
            return Err(pole(format!("Landen step at z = {z}")));
        }
        let next_sn = (re(1.0) + k1) * sn / den;
        let next_cn = cn * dn / den;
        let next_dn = (re(1.0) - s2) / den;
        sn = next_sn;
        cn = next_cn;
        dn = next_dn;
    }
    Ok(Jacobi { sn, cn, dn })
}

/// First-order expansion in `m1 = 1 - k^2` about the hyperbolic limit.
fn near_unit_modulus(z: ComplexScalar, m1: ComplexScalar) -> Jacobi {
    let (sh, ch) = (z.sinh(), z.cosh());
    let t = z.tanh();
    let sech = re(1.0) / ch;
    let q = sh * ch;
    Jacobi {
        sn: t + m1 * 0.25 * (q - z) * sech * sech,
        cn: sech - m1 * 0.25 * (q - z) * t * sech,
        dn: sech + m1 * 0.25 * (q + z) * t * sech,
    }
}

/// `cd = cn/dn`.
pub fn jacobi_cd(z: ComplexScalar, k: EllipticModulus) -> Result<ComplexScalar> {
    jacobi_sncndn(z, k)?.cd()
}

/// The elliptic exponential `e(z) = cn(z) + i sn(z)`.
pub fn elliptic_exp(z: ComplexScalar, k: EllipticModulus) -> Result<ComplexScalar> {
    let j = jacobi_sncndn(z, k)?;
    Ok(j.cn + I * j.sn)
}
