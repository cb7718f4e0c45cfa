//! Colour profiles `F(ξ)`, `G(ξ)`, `H(ξ)` and spectral fields `g(u, ξ, η)`.
//!
//! Both are described by a small preset algebra so that a family or a
//! transformation can round-trip through JSON. A preset is either a
//! colour profile (a function of one colour) or a field (a function of
//! `(u, ξ, η)`); `product` multiplies factors of the same kind.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Result, YbeError};
use crate::families::Diagnostic;
use crate::numkernel::{jacobi_sncndn, re, ComplexScalar, EllipticModulus};

/// A complex number on the wire: `[re, im]`, or a bare real.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scalar(pub ComplexScalar);

impl Scalar {
    pub fn real(x: f64) -> Self {
        Self(re(x))
    }
}

impl From<ComplexScalar> for Scalar {
    fn from(z: ComplexScalar) -> Self {
        Self(z)
    }
}

impl From<f64> for Scalar {
    fn from(x: f64) -> Self {
        Self(re(x))
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.0.re, self.0.im].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Real(f64),
            Pair([f64; 2]),
        }
        Ok(match Repr::deserialize(d)? {
            Repr::Real(x) => Scalar(re(x)),
            Repr::Pair([a, b]) => Scalar(ComplexScalar::new(a, b)),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `c`
    Constant,
    /// `a ξ + b`; `b` defaults to 0.
    Linear,
    /// `a ξ² + b ξ + c`
    Quadratic,
    /// `cosh 2ξ`
    Cosh2,
    /// `sinh 2ξ`
    Sinh2,
    /// `cosh(a ξ + b)`
    Cosh,
    /// `sinh(a ξ + b)`
    Sinh,
    /// `c e^{a ξ}`
    Exp,
    /// `1 / sn(ξ, k)`
    RecipSn,
    /// `cn(ξ, k) / sn(ξ, k)`
    CnOverSn,
    /// Field: `c e^{a u}`.
    ExpU,
    /// Field: `sin(u + a ξ η)`.
    SinUXiEta,
    /// Field: `c0 + c1 u + c2 ξ + c3 η + c4 ξ η`.
    AffineField,
    /// Pointwise product of `factors`.
    Product,
}

impl Preset {
    fn arity(self) -> (usize, usize) {
        match self {
            Preset::Constant => (1, 1),
            Preset::Linear => (1, 2),
            Preset::Quadratic => (3, 3),
            Preset::Cosh2 | Preset::Sinh2 => (0, 0),
            Preset::Cosh | Preset::Sinh => (1, 2),
            Preset::Exp => (1, 2),
            Preset::RecipSn | Preset::CnOverSn => (1, 1),
            Preset::ExpU => (1, 2),
            Preset::SinUXiEta => (1, 1),
            Preset::AffineField => (5, 5),
            Preset::Product => (0, 0),
        }
    }

    fn is_field(self) -> bool {
        matches!(self, Preset::ExpU | Preset::SinUXiEta | Preset::AffineField)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    /// Function of one colour parameter.
    Color,
    /// Function of `(u, ξ, η)`.
    Field,
}

/// A colour profile or spectral field built from presets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub preset: Preset,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<Scalar>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub factors: Vec<ProfileSpec>,
}

impl fmt::Display for ProfileSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = serde_json::to_value(self.preset)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default();
        if self.preset == Preset::Product {
            let parts: Vec<String> = self.factors.iter().map(|p| p.to_string()).collect();
            return write!(f, "({})", parts.join(" * "));
        }
        write!(f, "{name}")?;
        if !self.params.is_empty() {
            let ps: Vec<String> = self.params.iter().map(|p| format!("{}", p.0)).collect();
            write!(f, "[{}]", ps.join(", "))?;
        }
        Ok(())
    }
}

impl ProfileSpec {
    fn make(preset: Preset, params: &[ComplexScalar]) -> Self {
        Self {
            preset,
            params: params.iter().map(|&p| Scalar(p)).collect(),
            factors: Vec::new(),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::make(Preset::Constant, &[re(c)])
    }

    pub fn constant_c(c: ComplexScalar) -> Self {
        Self::make(Preset::Constant, &[c])
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn linear(slope: f64, offset: f64) -> Self {
        Self::make(Preset::Linear, &[re(slope), re(offset)])
    }

    pub fn quadratic(a: f64, b: f64, c: f64) -> Self {
        Self::make(Preset::Quadratic, &[re(a), re(b), re(c)])
    }

    pub fn cosh2() -> Self {
        Self::make(Preset::Cosh2, &[])
    }

    pub fn sinh2() -> Self {
        Self::make(Preset::Sinh2, &[])
    }

    pub fn cosh(a: f64, b: f64) -> Self {
        Self::make(Preset::Cosh, &[re(a), re(b)])
    }

    pub fn sinh(a: f64, b: f64) -> Self {
        Self::make(Preset::Sinh, &[re(a), re(b)])
    }

    pub fn exp(a: f64, scale: f64) -> Self {
        Self::make(Preset::Exp, &[re(a), re(scale)])
    }

    pub fn recip_sn(k: f64) -> Self {
        Self::make(Preset::RecipSn, &[re(k)])
    }

    pub fn cn_over_sn(k: f64) -> Self {
        Self::make(Preset::CnOverSn, &[re(k)])
    }

    pub fn exp_u(a: f64, scale: f64) -> Self {
        Self::make(Preset::ExpU, &[re(a), re(scale)])
    }

    pub fn sin_u_xi_eta(a: f64) -> Self {
        Self::make(Preset::SinUXiEta, &[re(a)])
    }

    pub fn affine_field(c: [f64; 5]) -> Self {
        Self::make(Preset::AffineField, &c.map(re))
    }

    pub fn product(factors: Vec<ProfileSpec>) -> Self {
        Self {
            preset: Preset::Product,
            params: Vec::new(),
            factors,
        }
    }

    /// Structural kind; `None` for a malformed or mixed product.
    pub fn kind(&self) -> Option<ProfileKind> {
        if self.preset == Preset::Product {
            let mut kinds = self.factors.iter().map(ProfileSpec::kind);
            let first = kinds.next()??;
            // A product of colour factors is a colour profile; any field
            // factor promotes the whole product to a field.
            let mut kind = first;
            for k in kinds {
                if k? == ProfileKind::Field {
                    kind = ProfileKind::Field;
                }
            }
            return Some(kind);
        }
        Some(if self.preset.is_field() {
            ProfileKind::Field
        } else {
            ProfileKind::Color
        })
    }

    /// Structural diagnostics (arity, empty products, modulus range).
    pub fn check(&self, name: &str) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if self.preset == Preset::Product {
            if self.factors.is_empty() {
                out.push(Diagnostic::error(format!("profile {name}: empty product")));
            }
            if !self.params.is_empty() {
                out.push(Diagnostic::error(format!(
                    "profile {name}: product takes factors, not params"
                )));
            }
            for (i, f) in self.factors.iter().enumerate() {
                out.extend(f.check(&format!("{name}.{i}")));
            }
            return out;
        }
        if !self.factors.is_empty() {
            out.push(Diagnostic::error(format!(
                "profile {name}: only product takes factors"
            )));
        }
        let (lo, hi) = self.preset.arity();
        let n = self.params.len();
        if n < lo || n > hi {
            out.push(Diagnostic::error(format!(
                "profile {name}: {:?} takes {lo}..={hi} params, got {n}",
                self.preset
            )));
        }
        if matches!(self.preset, Preset::RecipSn | Preset::CnOverSn) && n == 1 {
            if let Err(e) = EllipticModulus::new(self.params[0].0) {
                out.push(Diagnostic::error(format!("profile {name}: {e}")));
            }
        }
        out
    }

    fn p(&self, i: usize, default: f64) -> ComplexScalar {
        self.params.get(i).map(|s| s.0).unwrap_or(re(default))
    }

    fn structural(&self) -> Result<()> {
        let diags = self.check("profile");
        if diags.is_empty() {
            Ok(())
        } else {
            Err(YbeError::InvalidSpec(diags))
        }
    }

    /// Evaluates a colour profile at `xi`.
    pub fn color(&self, xi: ComplexScalar) -> Result<ComplexScalar> {
        self.structural()?;
        if self.kind() != Some(ProfileKind::Color) {
            return Err(YbeError::InvalidSpec(vec![Diagnostic::error(format!(
                "profile {self} depends on the spectral parameter"
            ))]));
        }
        self.color_unchecked(xi)
    }

    fn color_unchecked(&self, xi: ComplexScalar) -> Result<ComplexScalar> {
        let v = match self.preset {
            Preset::Constant => self.p(0, 0.0),
            Preset::Linear => self.p(0, 1.0) * xi + self.p(1, 0.0),
            Preset::Quadratic => (self.p(0, 0.0) * xi + self.p(1, 0.0)) * xi + self.p(2, 0.0),
            Preset::Cosh2 => (xi * 2.0).cosh(),
            Preset::Sinh2 => (xi * 2.0).sinh(),
            Preset::Cosh => (self.p(0, 1.0) * xi + self.p(1, 0.0)).cosh(),
            Preset::Sinh => (self.p(0, 1.0) * xi + self.p(1, 0.0)).sinh(),
            Preset::Exp => self.p(1, 1.0) * (self.p(0, 1.0) * xi).exp(),
            Preset::RecipSn | Preset::CnOverSn => {
                let j = jacobi_sncndn(xi, EllipticModulus::new(self.p(0, 0.0))?)?;
                if j.sn.norm() < 1e-12 {
                    return Err(crate::error::pole(format!("1/sn at colour {xi}")));
                }
                if self.preset == Preset::RecipSn {
                    re(1.0) / j.sn
                } else {
                    j.cn / j.sn
                }
            }
            Preset::Product => {
                let mut acc = re(1.0);
                for f in &self.factors {
                    acc *= f.color_unchecked(xi)?;
                }
                acc
            }
            Preset::ExpU | Preset::SinUXiEta | Preset::AffineField => unreachable!(),
        };
        finite(v, self)
    }

    /// Evaluates as a field of `(u, xi, eta)`. Colour profiles are read as
    /// functions of `xi` alone.
    pub fn field(
        &self,
        u: ComplexScalar,
        xi: ComplexScalar,
        eta: ComplexScalar,
    ) -> Result<ComplexScalar> {
        self.structural()?;
        self.field_unchecked(u, xi, eta)
    }

    /// `∂_u` of [`ProfileSpec::field`].
    pub fn field_du(
        &self,
        u: ComplexScalar,
        xi: ComplexScalar,
        eta: ComplexScalar,
    ) -> Result<ComplexScalar> {
        self.structural()?;
        self.field_du_unchecked(u, xi, eta)
    }

    fn field_du_unchecked(
        &self,
        u: ComplexScalar,
        xi: ComplexScalar,
        eta: ComplexScalar,
    ) -> Result<ComplexScalar> {
        let v = match self.preset {
            Preset::ExpU => self.p(1, 1.0) * self.p(0, 1.0) * (self.p(0, 1.0) * u).exp(),
            Preset::SinUXiEta => (u + self.p(0, 1.0) * xi * eta).cos(),
            Preset::AffineField => self.p(1, 0.0),
            Preset::Product => {
                let mut total = re(0.0);
                for (i, fi) in self.factors.iter().enumerate() {
                    let mut term = fi.field_du_unchecked(u, xi, eta)?;
                    for (j, fj) in self.factors.iter().enumerate() {
                        if i != j {
                            term *= fj.field_unchecked(u, xi, eta)?;
                        }
                    }
                    total += term;
                }
                total
            }
            _ => re(0.0),
        };
        finite(v, self)
    }

    fn field_unchecked(
        &self,
        u: ComplexScalar,
        xi: ComplexScalar,
        eta: ComplexScalar,
    ) -> Result<ComplexScalar> {
        let v = match self.preset {
            Preset::ExpU => self.p(1, 1.0) * (self.p(0, 1.0) * u).exp(),
            Preset::SinUXiEta => (u + self.p(0, 1.0) * xi * eta).sin(),
            Preset::AffineField => {
                self.p(0, 0.0)
                    + self.p(1, 0.0) * u
                    + self.p(2, 0.0) * xi
                    + self.p(3, 0.0) * eta
                    + self.p(4, 0.0) * xi * eta
            }
            Preset::Product => {
                let mut acc = re(1.0);
                for f in &self.factors {
                    acc *= f.field_unchecked(u, xi, eta)?;
                }
                acc
            }
            _ => self.color_unchecked(xi)?,
        };
        finite(v, self)
    }
}

fn finite(v: ComplexScalar, p: &ProfileSpec) -> Result<ComplexScalar> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(crate::error::pole(format!("profile {p} is not finite")))
    }
}
