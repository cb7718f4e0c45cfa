//! Closed-form eight-vertex solution families.
//!
//! Every family is described by a [`FamilySpec`] (serializable, validated)
//! and evaluated through the [`WeightFamily`] trait. Throughout, `z` denotes
//! the shifted spectral argument `λ u + F(ξ) − F(η)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{pole, Result, YbeError};
use crate::numkernel::{
    elliptic_exp, jacobi_sncndn, re, ComplexScalar, EllipticModulus, I, POLE_MAGNITUDE,
};
use crate::profiles::{ProfileKind, ProfileSpec, Scalar};
use crate::weights::WeightVector;

/// Anything that yields weights at `(u, ξ, η)`.
pub trait WeightFamily: Send + Sync {
    fn weights(&self, u: ComplexScalar, xi: ComplexScalar, eta: ComplexScalar)
        -> Result<WeightVector>;

    /// Closed-form `m_i(ξ) = ∂_u a_i(u, ξ, η)` at `u = 0, η = ξ`, when known.
    fn analytic_coefficients(&self, _xi: ComplexScalar) -> Option<Result<[ComplexScalar; 8]>> {
        None
    }

    /// `(sn z, cd z, λ)` for families built on `z = λ u + F(ξ) − F(η)`
    /// with free-fermion structure; used by the elliptic identity checks.
    fn elliptic_parts(
        &self,
        _u: ComplexScalar,
        _xi: ComplexScalar,
        _eta: ComplexScalar,
    ) -> Option<Result<[ComplexScalar; 3]>> {
        None
    }

    fn label(&self) -> String;
}

pub type SharedFamily = Arc<dyn WeightFamily>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// One finding of [`validate_spec`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    pub fn error(message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            message: message.into(),
        }
    }

    pub fn warning(message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyId {
    /// Baxter-type elliptic weights.
    #[serde(rename = "BAXTER_ELLIPTIC_31")]
    BaxterElliptic,
    /// Trigonometric degeneration of the Baxter family.
    #[serde(rename = "BAXTER_TRIG_32")]
    BaxterTrig,
    /// Elliptic free-fermion weights with colour profiles `G² − H² = 1`.
    #[serde(rename = "FF_ELLIPTIC_38")]
    FfElliptic,
    /// The `k = 1` degeneration of the elliptic free-fermion family.
    #[serde(rename = "FF_TANH_310")]
    FfTanh,
    /// Trigonometric free-fermion weights with one colour profile `G`.
    #[serde(rename = "FF_TRIG_311")]
    FfTrig,
    /// Free-fermion weights built from `cosh`, `sinh` and `cos`.
    #[serde(rename = "FF_HYPERBOLIC_313")]
    FfHyperbolic,
    /// `a1 = a4 = a5 = a6 = H(u, ξ, η)`, the rest 1.
    #[serde(rename = "TRIVIAL_112A")]
    TrivialA,
    /// `a1 = a4 = a5 = −a6 = F(ξ)/F(η) e^u`, `a7 = a8 = i`.
    #[serde(rename = "TRIVIAL_112B")]
    TrivialB,
    /// Murakami's solution, a specialisation of the elliptic free-fermion family.
    #[serde(rename = "MURAKAMI")]
    Murakami,
    /// Bazhanov-Stroganov weights in the elliptic exponential (not gauge).
    #[serde(rename = "BAZHANOV_STROGANOV")]
    BazhanovStroganov,
}

impl FamilyId {
    /// The eight families of the classification.
    pub const SOLUTIONS: [FamilyId; 8] = [
        FamilyId::BaxterElliptic,
        FamilyId::BaxterTrig,
        FamilyId::FfElliptic,
        FamilyId::FfTanh,
        FamilyId::FfTrig,
        FamilyId::FfHyperbolic,
        FamilyId::TrivialA,
        FamilyId::TrivialB,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyId::BaxterElliptic => "BAXTER_ELLIPTIC_31",
            FamilyId::BaxterTrig => "BAXTER_TRIG_32",
            FamilyId::FfElliptic => "FF_ELLIPTIC_38",
            FamilyId::FfTanh => "FF_TANH_310",
            FamilyId::FfTrig => "FF_TRIG_311",
            FamilyId::FfHyperbolic => "FF_HYPERBOLIC_313",
            FamilyId::TrivialA => "TRIVIAL_112A",
            FamilyId::TrivialB => "TRIVIAL_112B",
            FamilyId::Murakami => "MURAKAMI",
            FamilyId::BazhanovStroganov => "BAZHANOV_STROGANOV",
        }
    }

    /// True for families returned in gauge form (`a2 = a3 = 1`, `a7 = a8`).
    pub fn is_gauge(self) -> bool {
        !matches!(
            self,
            FamilyId::TrivialA | FamilyId::TrivialB | FamilyId::BazhanovStroganov
        )
    }

    pub fn is_free_fermion(self) -> bool {
        matches!(
            self,
            FamilyId::FfElliptic
                | FamilyId::FfTanh
                | FamilyId::FfTrig
                | FamilyId::FfHyperbolic
                | FamilyId::Murakami
        )
    }

    pub fn is_baxter(self) -> bool {
        matches!(self, FamilyId::BaxterElliptic | FamilyId::BaxterTrig)
    }

    fn uses_modulus(self) -> bool {
        matches!(
            self,
            FamilyId::BaxterElliptic
                | FamilyId::FfElliptic
                | FamilyId::Murakami
                | FamilyId::BazhanovStroganov
        )
    }

    fn uses_lambda(self) -> bool {
        !matches!(
            self,
            FamilyId::TrivialA
                | FamilyId::TrivialB
                | FamilyId::Murakami
                | FamilyId::BazhanovStroganov
        )
    }

    fn uses_mu(self) -> bool {
        matches!(
            self,
            FamilyId::BaxterElliptic | FamilyId::BaxterTrig | FamilyId::FfHyperbolic
        )
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn one() -> i8 {
    1
}

/// The independent `±` choices of the closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Signs {
    /// Sign of `a5` (and `a6`).
    #[serde(default = "one")]
    pub s5: i8,
    /// Sign of `a7 = a8`.
    #[serde(default = "one")]
    pub s7: i8,
    /// Common sign of the `C`, `D` coefficients of the elliptic free-fermion family.
    #[serde(default = "one")]
    pub delta: i8,
    /// Sign of `Y` relative to `X` in the trigonometric free-fermion family.
    #[serde(default = "one")]
    pub sy: i8,
}

impl Default for Signs {
    fn default() -> Self {
        Self {
            s5: 1,
            s7: 1,
            delta: 1,
            sy: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Profiles {
    #[serde(rename = "F", default, skip_serializing_if = "Option::is_none")]
    pub f: Option<ProfileSpec>,
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    pub g: Option<ProfileSpec>,
    /// Colour profile, or the spectral field of `TRIVIAL_112A`.
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    pub h: Option<ProfileSpec>,
}

pub const DEFAULT_COLOR_DOMAIN: [f64; 2] = [0.1, 0.6];

fn default_domain() -> [f64; 2] {
    DEFAULT_COLOR_DOMAIN
}

/// A named solution family with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub family: FamilyId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Scalar>,
    #[serde(default)]
    pub signs: Signs,
    #[serde(default)]
    pub profiles: Profiles,
    /// Real colour interval on which profiles are validated and sampled.
    #[serde(default = "default_domain")]
    pub color_domain: [f64; 2],
}

impl FamilySpec {
    /// A spec with every field at its default.
    pub fn new(family: FamilyId) -> Self {
        Self {
            family,
            k: None,
            lambda: None,
            mu: None,
            signs: Signs::default(),
            profiles: Profiles::default(),
            color_domain: DEFAULT_COLOR_DOMAIN,
        }
    }

    pub fn with_k(mut self, k: f64) -> Self {
        self.k = Some(Scalar::real(k));
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(Scalar::real(lambda));
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = Some(Scalar::real(mu));
        self
    }

    pub fn with_signs(mut self, signs: Signs) -> Self {
        self.signs = signs;
        self
    }

    pub fn with_f(mut self, f: ProfileSpec) -> Self {
        self.profiles.f = Some(f);
        self
    }

    pub fn with_g(mut self, g: ProfileSpec) -> Self {
        self.profiles.g = Some(g);
        self
    }

    pub fn with_h(mut self, h: ProfileSpec) -> Self {
        self.profiles.h = Some(h);
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| YbeError::InvalidSpec(vec![Diagnostic::error(e.to_string())]))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    fn lambda(&self) -> ComplexScalar {
        self.lambda.map(|s| s.0).unwrap_or(re(1.0))
    }

    fn mu(&self) -> ComplexScalar {
        self.mu.map(|s| s.0).unwrap_or(re(0.0))
    }

    fn k_raw(&self) -> ComplexScalar {
        self.k.map(|s| s.0).unwrap_or(re(0.0))
    }

    fn f(&self) -> ProfileSpec {
        self.profiles.f.clone().unwrap_or_else(ProfileSpec::zero)
    }

    fn g(&self) -> ProfileSpec {
        self.profiles.g.clone().unwrap_or_else(|| match self.family {
            FamilyId::FfTrig => ProfileSpec::constant(1.0),
            FamilyId::FfHyperbolic => ProfileSpec::zero(),
            _ => ProfileSpec::cosh2(),
        })
    }

    fn h(&self) -> ProfileSpec {
        self.profiles.h.clone().unwrap_or_else(|| match self.family {
            FamilyId::TrivialA => ProfileSpec::constant(1.0),
            _ => ProfileSpec::sinh2(),
        })
    }

    /// Evenly spaced colours across the declared domain.
    pub fn color_grid(&self, n: usize) -> Vec<f64> {
        let [lo, hi] = self.color_domain;
        if n <= 1 {
            return vec![0.5 * (lo + hi)];
        }
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }
}

const VALIDATION_POINTS: usize = 16;

/// Checks every family constraint; an empty result means the spec is usable.
/// Warnings do not block evaluation.
pub fn validate_spec(spec: &FamilySpec) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let id = spec.family;

    let [lo, hi] = spec.color_domain;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        out.push(Diagnostic::error(format!(
            "colour domain [{lo}, {hi}] is not a finite interval"
        )));
        return out;
    }

    for (name, s) in [
        ("s5", spec.signs.s5),
        ("s7", spec.signs.s7),
        ("delta", spec.signs.delta),
        ("sy", spec.signs.sy),
    ] {
        if s != 1 && s != -1 {
            out.push(Diagnostic::error(format!("sign {name} must be +1 or -1, got {s}")));
        }
    }

    if id.uses_modulus() {
        match spec.k {
            None => out.push(Diagnostic::error(format!("{id} requires the modulus k"))),
            Some(k) => {
                if let Err(e) = EllipticModulus::new(k.0) {
                    out.push(Diagnostic::error(e.to_string()));
                } else if k.0.im != 0.0 {
                    out.push(Diagnostic::warning(
                        "complex modulus: supported, outside the real range the closed forms are usually quoted for",
                    ));
                }
            }
        }
    } else if spec.k.is_some() {
        out.push(Diagnostic::warning(format!("{id} ignores k")));
    }
    if !id.uses_lambda() && spec.lambda.is_some() {
        out.push(Diagnostic::warning(format!("{id} ignores lambda")));
    }
    if !id.uses_mu() && spec.mu.is_some() {
        out.push(Diagnostic::warning(format!("{id} ignores mu")));
    }

    let mut check_profile = |name: &str, p: &Option<ProfileSpec>, kind: ProfileKind| {
        if let Some(p) = p {
            let diags = p.check(name);
            if diags.is_empty() && p.kind() != Some(kind) {
                out.push(Diagnostic::error(format!(
                    "profile {name} must be a {} profile",
                    match kind {
                        ProfileKind::Color => "colour",
                        ProfileKind::Field => "spectral-field",
                    }
                )));
            }
            out.extend(diags);
        }
    };
    check_profile("F", &spec.profiles.f, ProfileKind::Color);
    check_profile("G", &spec.profiles.g, ProfileKind::Color);
    let h_kind = if id == FamilyId::TrivialA {
        ProfileKind::Field
    } else {
        ProfileKind::Color
    };
    check_profile("H", &spec.profiles.h, h_kind);
    if out.iter().any(Diagnostic::is_error) {
        return out;
    }

    let grid = spec.color_grid(VALIDATION_POINTS);
    let lambda = spec.lambda();
    let mu = spec.mu();
    let zero = |z: ComplexScalar| z.norm() < 1e-14;

    match id {
        FamilyId::BaxterElliptic | FamilyId::BaxterTrig => {
            if zero(lambda) {
                out.push(Diagnostic::error("lambda must be nonzero"));
            }
            if zero(mu) {
                out.push(Diagnostic::error(
                    "mu must be nonzero (the weights divide by its sine)",
                ));
            }
            if id == FamilyId::BaxterElliptic && out.iter().all(|d| !d.is_error()) {
                match analytic_coefficients(spec, re(grid[0])) {
                    Ok(m) => {
                        let (alpha, beta, gamma) = (m[6], m[4], m[0]);
                        let scale = alpha.norm() + beta.norm() + gamma.norm();
                        for (sa, sg) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                            if (beta + alpha * sa + gamma * sg).norm() < 1e-9 * scale {
                                out.push(Diagnostic::warning(
                                    "curve coefficients satisfy beta ± alpha ± gamma = 0; the trigonometric family applies",
                                ));
                                break;
                            }
                        }
                    }
                    Err(e) => out.push(Diagnostic::error(format!("mu: {e}"))),
                }
            }
        }
        FamilyId::FfElliptic | FamilyId::FfTanh => {
            let (g, h) = (spec.g(), spec.h());
            let mut worst = 0.0f64;
            for &x in &grid {
                match (g.color(re(x)), h.color(re(x))) {
                    (Ok(gv), Ok(hv)) => worst = worst.max((gv * gv - hv * hv - 1.0).norm()),
                    (Err(e), _) | (_, Err(e)) => {
                        out.push(Diagnostic::error(format!("profile at colour {x}: {e}")));
                        break;
                    }
                }
            }
            if worst > 1e-10 {
                out.push(Diagnostic::error(format!(
                    "G²−H²=1 fails on the colour domain (max defect {worst:.3e})"
                )));
            }
            if zero(lambda) {
                out.push(Diagnostic::error("lambda must be nonzero"));
            }
            if id == FamilyId::FfElliptic && (spec.k_raw() * lambda - 1.0).norm() > 1e-12 {
                out.push(Diagnostic::warning(
                    "k·lambda ≠ 1; the weights still solve the equation after a spectral rescale",
                ));
            }
        }
        FamilyId::FfTrig => {
            if zero(lambda) {
                out.push(Diagnostic::error("lambda must be nonzero"));
            }
            let g = spec.g();
            for &x in &grid {
                match g.color(re(x)) {
                    Ok(v) if v.norm() < 1e-12 => {
                        out.push(Diagnostic::error(format!("G vanishes at colour {x}")));
                        break;
                    }
                    Err(e) => {
                        out.push(Diagnostic::error(format!("G at colour {x}: {e}")));
                        break;
                    }
                    _ => {}
                }
            }
        }
        FamilyId::FfHyperbolic => {
            if zero(lambda) && zero(mu) {
                out.push(Diagnostic::error(
                    "lambda and mu must not vanish simultaneously",
                ));
            }
        }
        FamilyId::TrivialB => {
            let f = spec.f();
            for &x in &grid {
                match f.color(re(x)) {
                    Ok(v) if v.norm() < 1e-12 => {
                        out.push(Diagnostic::error(format!("F vanishes at colour {x}")));
                        break;
                    }
                    Err(e) => {
                        out.push(Diagnostic::error(format!("F at colour {x}: {e}")));
                        break;
                    }
                    _ => {}
                }
            }
        }
        FamilyId::TrivialA | FamilyId::Murakami | FamilyId::BazhanovStroganov => {}
    }
    out
}

fn check_finite(w: WeightVector, what: &str) -> Result<WeightVector> {
    if w.is_finite() && w.max_abs() < POLE_MAGNITUDE {
        Ok(w)
    } else {
        Err(pole(format!("{what}: weights not finite")))
    }
}

fn nonzero(z: ComplexScalar, what: &str) -> Result<ComplexScalar> {
    if z.norm() < 1e-12 {
        Err(pole(format!("{what} vanishes")))
    } else {
        Ok(z)
    }
}

/// Coefficients `A, B, C, D` of the free-fermion family.
fn ff_coefficients(
    gx: ComplexScalar,
    gy: ComplexScalar,
    hx: ComplexScalar,
    hy: ComplexScalar,
    delta: f64,
) -> [ComplexScalar; 4] {
    let a = ((gx * gy - hx * hy + 1.0) * 0.5).sqrt();
    let b = ((gx * gy + hx * hy - 1.0) * 0.5).sqrt();
    let c = ((gx * gy + hx * hy + 1.0) * 0.5).sqrt() * delta;
    // With G² − H² = 1 at both colours, (GG' − HH')² − 1 = q², so
    // sqrt((GG' − HH' − 1)/2) · sign(q) = q / (2A). This form avoids the
    // catastrophic cancellation near ξ = η.
    let q = hx * gy - gx * hy;
    let d = if q == re(0.0) { re(0.0) } else { q / (a * 2.0) * delta };
    [a, b, c, d]
}

/// Evaluates the closed form of `spec` at `(u, ξ, η)`. Does not validate.
pub fn eval(
    spec: &FamilySpec,
    u: ComplexScalar,
    xi: ComplexScalar,
    eta: ComplexScalar,
) -> Result<WeightVector> {
    let lambda = spec.lambda();
    let mu = spec.mu();
    let s = &spec.signs;
    let (s5, s7) = (f64::from(s.s5), f64::from(s.s7));
    let shift = || -> Result<ComplexScalar> {
        let f = spec.f();
        Ok(lambda * u + f.color(xi)? - f.color(eta)?)
    };
    let one = re(1.0);

    let w = match spec.family {
        FamilyId::BaxterElliptic => {
            let k = EllipticModulus::new(spec.k_raw())?;
            let z = shift()?;
            let sz = jacobi_sncndn(z, k)?.sn;
            let szm = jacobi_sncndn(z + mu, k)?.sn;
            let sm = nonzero(jacobi_sncndn(mu, k)?.sn, "sn(mu)")?;
            let a1 = szm / sm;
            let a5 = sz / sm * s5;
            let a7 = k.k() * sz * szm * s7;
            WeightVector([a1, one, one, a1, a5, a5, a7, a7])
        }
        FamilyId::BaxterTrig => {
            let z = shift()?;
            let tm = nonzero(mu.tan(), "tan(mu)")?;
            let (tz, tzm) = (z.tan(), (z + mu).tan());
            let a1 = tzm / tm;
            let a5 = tz / tm * s5;
            let a7 = tz * tzm * s7;
            WeightVector([a1, one, one, a1, a5, a5, a7, a7])
        }
        FamilyId::FfElliptic => {
            let k = EllipticModulus::new(spec.k_raw())?;
            let z = shift()?;
            let j = jacobi_sncndn(z, k)?;
            let cd = j.cd()?;
            ff_weights(spec, xi, eta, j.sn, cd, k.k() * j.sn * cd * s7)?
        }
        FamilyId::FfTanh => {
            let z = shift()?;
            let t = z.tanh();
            ff_weights(spec, xi, eta, t, one, t * s7)?
        }
        FamilyId::FfTrig => {
            let z = shift()?;
            let g = spec.g();
            let (gx, gy) = (g.color(xi)?, g.color(eta)?);
            let x = one / (nonzero((gx * gy).sqrt(), "G(ξ)G(η)")? * 2.0);
            let y = x * f64::from(s.sy);
            let c = nonzero(z.cos(), "cos z")?;
            let sz = z.sin();
            let gg = gx * gy * 2.0 * sz;
            let a1 = x * ((gx + gy) / c + gg);
            let a4 = x * ((gx + gy) / c - gg);
            let a5 = y * ((gx - gy) / c + gg);
            let a6 = y * (-(gx - gy) / c + gg);
            let a7 = z.tan() * s7;
            WeightVector([a1, one, one, a4, a5, a6, a7, a7])
        }
        FamilyId::FfHyperbolic => {
            let (f, g) = (spec.f(), spec.g());
            let a = lambda * u + f.color(xi)? - f.color(eta)?;
            let b = mu * u + g.color(xi)? - g.color(eta)?;
            let cb = nonzero(b.cos(), "cos b")?;
            let a1 = a.cosh() / cb;
            let a5 = a.sinh() / cb * s5;
            let a7 = b.tan() * s7;
            WeightVector([a1, one, one, a1, a5, -a5, a7, a7])
        }
        FamilyId::TrivialA => {
            let h = spec.h().field(u, xi, eta)?;
            WeightVector([h, one, one, h, h, h, one, one])
        }
        FamilyId::TrivialB => {
            let f = spec.f();
            let e = f.color(xi)? / nonzero(f.color(eta)?, "F(η)")? * u.exp();
            WeightVector([e, one, one, e, e, -e, I, I])
        }
        FamilyId::Murakami => {
            murakami_reduction(u, xi, eta, EllipticModulus::new(spec.k_raw())?)?
        }
        FamilyId::BazhanovStroganov => {
            bazhanov_stroganov(u, xi, eta, EllipticModulus::new(spec.k_raw())?)?
        }
    };
    check_finite(w, spec.family.name())
}

fn ff_weights(
    spec: &FamilySpec,
    xi: ComplexScalar,
    eta: ComplexScalar,
    sn: ComplexScalar,
    cd: ComplexScalar,
    a7: ComplexScalar,
) -> Result<WeightVector> {
    let (g, h) = (spec.g(), spec.h());
    let [a, b, c, d] = ff_coefficients(
        g.color(xi)?,
        g.color(eta)?,
        h.color(xi)?,
        h.color(eta)?,
        f64::from(spec.signs.delta),
    );
    let one = re(1.0);
    Ok(WeightVector([
        a * cd + b * sn,
        one,
        one,
        a * cd - b * sn,
        c * sn + d * cd,
        c * sn - d * cd,
        a7,
        a7,
    ]))
}

/// Closed-form Hamiltonian coefficients `m1..m8` at colour `xi`.
pub fn analytic_coefficients(spec: &FamilySpec, xi: ComplexScalar) -> Result<[ComplexScalar; 8]> {
    let lambda = spec.lambda();
    let mu = spec.mu();
    let s = &spec.signs;
    let (s5, s7) = (f64::from(s.s5), f64::from(s.s7));
    let z = re(0.0);
    let gauge = |m1, m4, m5, m6, m7| [m1, z, z, m4, m5, m6, m7, m7];
    Ok(match spec.family {
        FamilyId::BaxterElliptic => {
            let k = EllipticModulus::new(spec.k_raw())?;
            let j = jacobi_sncndn(mu, k)?;
            let sm = nonzero(j.sn, "sn(mu)")?;
            let m1 = lambda * j.cn * j.dn / sm;
            gauge(m1, m1, lambda / sm * s5, lambda / sm * s5, k.k() * lambda * sm * s7)
        }
        FamilyId::BaxterTrig => {
            let m1 = lambda / nonzero(mu.sin() * mu.cos(), "sin(mu)cos(mu)")?;
            let m5 = lambda / nonzero(mu.tan(), "tan(mu)")? * s5;
            gauge(m1, m1, m5, m5, lambda * mu.tan() * s7)
        }
        FamilyId::FfElliptic | FamilyId::FfTanh => {
            let (g, h) = (spec.g().color(xi)?, spec.h().color(xi)?);
            let [_, b, c, _] = ff_coefficients(g, g, h, h, f64::from(s.delta));
            let k = if spec.family == FamilyId::FfElliptic {
                spec.k_raw()
            } else {
                re(1.0)
            };
            gauge(lambda * b, -lambda * b, lambda * c, lambda * c, k * lambda * s7)
        }
        FamilyId::FfTrig => {
            let g = spec.g().color(xi)?;
            let m1 = lambda * g * g / nonzero((g * g).sqrt(), "G")?;
            let m5 = m1 * f64::from(s.sy);
            gauge(m1, -m1, m5, m5, lambda * s7)
        }
        FamilyId::FfHyperbolic => gauge(z, z, lambda * s5, -lambda * s5, mu * s7),
        FamilyId::TrivialA => {
            let d = spec.h().field_du(z, xi, xi)?;
            [d, z, z, d, d, d, z, z]
        }
        FamilyId::TrivialB => {
            let o = re(1.0);
            [o, z, z, o, o, -o, z, z]
        }
        FamilyId::Murakami => {
            let (c2, s2) = ((xi * 2.0).cosh(), (xi * 2.0).sinh());
            gauge(s2, -s2, c2, c2, spec.k_raw())
        }
        FamilyId::BazhanovStroganov => {
            return Err(YbeError::Format(
                "no closed-form coefficients for BAZHANOV_STROGANOV".into(),
            ))
        }
    })
}

/// A validated family, ready to evaluate.
#[derive(Debug, Clone)]
pub struct Family {
    spec: FamilySpec,
    warnings: Vec<Diagnostic>,
}

impl Family {
    /// Validates `spec`; fails with [`YbeError::InvalidSpec`] on any error.
    pub fn new(spec: FamilySpec) -> Result<Self> {
        let diags = validate_spec(&spec);
        if diags.iter().any(Diagnostic::is_error) {
            return Err(YbeError::InvalidSpec(
                diags.into_iter().filter(Diagnostic::is_error).collect(),
            ));
        }
        Ok(Self {
            spec,
            warnings: diags,
        })
    }

    pub fn shared(spec: FamilySpec) -> Result<SharedFamily> {
        Ok(Arc::new(Self::new(spec)?))
    }

    pub fn spec(&self) -> &FamilySpec {
        &self.spec
    }

    pub fn warnings(&self) -> &[Diagnostic] {
        &self.warnings
    }
}

impl WeightFamily for Family {
    fn weights(
        &self,
        u: ComplexScalar,
        xi: ComplexScalar,
        eta: ComplexScalar,
    ) -> Result<WeightVector> {
        eval(&self.spec, u, xi, eta)
    }

    fn analytic_coefficients(&self, xi: ComplexScalar) -> Option<Result<[ComplexScalar; 8]>> {
        if self.spec.family == FamilyId::BazhanovStroganov {
            return None;
        }
        Some(analytic_coefficients(&self.spec, xi))
    }

    fn elliptic_parts(
        &self,
        u: ComplexScalar,
        xi: ComplexScalar,
        eta: ComplexScalar,
    ) -> Option<Result<[ComplexScalar; 3]>> {
        let spec = &self.spec;
        let k = match spec.family {
            FamilyId::FfElliptic => spec.k_raw(),
            FamilyId::FfTanh => re(1.0),
            _ => return None,
        };
        let parts = || -> Result<[ComplexScalar; 3]> {
            let f = spec.f();
            let z = spec.lambda() * u + f.color(xi)? - f.color(eta)?;
            let j = jacobi_sncndn(z, EllipticModulus::new(k)?)?;
            Ok([j.sn, j.cd()?, spec.lambda()])
        };
        Some(parts())
    }

    fn label(&self) -> String {
        self.spec.family.name().to_owned()
    }
}

/// Murakami's weights:
///
/// ```text
/// a1 = cosh(ξ−η) cd u + sinh(ξ+η) sn u      a4 = cosh(ξ−η) cd u − sinh(ξ+η) sn u
/// a5 = cosh(ξ+η) sn u + sinh(ξ−η) cd u      a6 = cosh(ξ+η) sn u − sinh(ξ−η) cd u
/// a2 = a3 = 1,  a7 = a8 = k sn u cd u
/// ```
///
/// With the opposite sign on the `sinh(ξ−η)` terms the weights fail the
/// Yang-Baxter equation away from `ξ = η`.
pub fn murakami_reduction(
    u: ComplexScalar,
    xi: ComplexScalar,
    eta: ComplexScalar,
    k: EllipticModulus,
) -> Result<WeightVector> {
    let j = jacobi_sncndn(u, k)?;
    let cd = j.cd()?;
    let (cm, sp) = ((xi - eta).cosh(), (xi + eta).sinh());
    let (cp, sm) = ((xi + eta).cosh(), (xi - eta).sinh());
    let a7 = k.k() * j.sn * cd;
    let one = re(1.0);
    check_finite(
        WeightVector([
            cm * cd + sp * j.sn,
            one,
            one,
            cm * cd - sp * j.sn,
            cp * j.sn + sm * cd,
            cp * j.sn - sm * cd,
            a7,
            a7,
        ]),
        "murakami",
    )
}

/// The square root `r = sqrt(e(ξ) e(η) sn ξ sn η)` (principal branch) and its
/// argument.
fn bs_root(
    xi: ComplexScalar,
    eta: ComplexScalar,
    k: EllipticModulus,
) -> Result<(ComplexScalar, ComplexScalar)> {
    let arg = elliptic_exp(xi, k)?
        * elliptic_exp(eta, k)?
        * jacobi_sncndn(xi, k)?.sn
        * jacobi_sncndn(eta, k)?.sn;
    Ok((arg.sqrt(), arg))
}

/// Scale factor relating the Bazhanov-Stroganov weights to the elliptic
/// free-fermion family: `r (1 − e(u)) / sn(u/2)`, evaluated without the
/// removable singularity at `u = 0`.
pub fn bazhanov_stroganov_scale(
    u: ComplexScalar,
    xi: ComplexScalar,
    eta: ComplexScalar,
    k: EllipticModulus,
) -> Result<ComplexScalar> {
    let (r, _) = bs_root(xi, eta, k)?;
    let h = jacobi_sncndn(u * 0.5, k)?;
    let kk = k.k() * k.k();
    let s2 = h.sn * h.sn;
    let den = nonzero(re(1.0) - kk * s2 * s2, "1 − k² sn⁴(u/2)")?;
    Ok(r * h.dn * 2.0 * (h.sn * h.dn - I * h.cn) / den)
}

/// Bazhanov-Stroganov weights in the elliptic exponential `e(ζ) = cn ζ + i sn ζ`:
///
/// ```text
/// a1 = 1 − e(u) e(ξ) e(η)    a4 = e(u) − e(ξ) e(η)
/// a5 = e(ξ) − e(u) e(η)      a6 = e(η) − e(u) e(ξ)
/// a2 = a3 = r (1 − e(u)) / sn(u/2)
/// a7 = a8 = −i k r (1 + e(u)) sn(u/2)
/// ```
///
/// with `r = sqrt(e(ξ) e(η) sn ξ sn η)` on the principal branch. The
/// `a7` form is equivalent to `k r (1 − e(u)) cd(u/2)`.
pub fn bazhanov_stroganov(
    u: ComplexScalar,
    xi: ComplexScalar,
    eta: ComplexScalar,
    k: EllipticModulus,
) -> Result<WeightVector> {
    let (r, _) = bs_root(xi, eta, k)?;
    let (eu, ex, ey) = (elliptic_exp(u, k)?, elliptic_exp(xi, k)?, elliptic_exp(eta, k)?);
    let a2 = bazhanov_stroganov_scale(u, xi, eta, k)?;
    let half = jacobi_sncndn(u * 0.5, k)?.sn;
    let a7 = -I * k.k() * r * (eu + 1.0) * half;
    let one = re(1.0);
    check_finite(
        WeightVector([
            one - eu * ex * ey,
            a2,
            a2,
            eu - ex * ey,
            ex - eu * ey,
            ey - eu * ex,
            a7,
            a7,
        ]),
        "bazhanov_stroganov",
    )
}

/// Fails with [`YbeError::BranchAmbiguity`] when the square-root argument of
/// the Bazhanov-Stroganov weights crosses the negative real axis between
/// consecutive colour pairs of a sweep.
pub fn bazhanov_stroganov_sweep_check(
    colours: &[(ComplexScalar, ComplexScalar)],
    k: EllipticModulus,
) -> Result<()> {
    let mut prev: Option<ComplexScalar> = None;
    for &(xi, eta) in colours {
        let (_, arg) = bs_root(xi, eta, k)?;
        if let Some(p) = prev {
            let crosses = p.im.signum() != arg.im.signum() && (p.re < 0.0 || arg.re < 0.0);
            if crosses {
                return Err(YbeError::BranchAmbiguity {
                    context: format!("between arguments {p} and {arg} at (ξ, η) = ({xi}, {eta})"),
                });
            }
        }
        prev = Some(arg);
    }
    Ok(())
}

/// Adds `delta` to one weight of an inner family; used to show that the
/// residual tests have power.
pub struct Perturbed {
    pub inner: SharedFamily,
    /// 1-based weight index.
    pub index: usize,
    pub delta: ComplexScalar,
}

impl WeightFamily for Perturbed {
    fn weights(
        &self,
        u: ComplexScalar,
        xi: ComplexScalar,
        eta: ComplexScalar,
    ) -> Result<WeightVector> {
        let mut w = self.inner.weights(u, xi, eta)?;
        w.set(self.index, w.a(self.index) + self.delta);
        Ok(w)
    }

    fn label(&self) -> String {
        format!("{} with a{} + {}", self.inner.label(), self.index, self.delta)
    }
}

/// A family given by a closure.
pub struct FnFamily<F> {
    pub f: F,
    pub name: String,
}

impl<F> FnFamily<F>
where
    F: Fn(ComplexScalar, ComplexScalar, ComplexScalar) -> Result<WeightVector> + Send + Sync,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self {
            f,
            name: name.into(),
        }
    }
}

impl<F> WeightFamily for FnFamily<F>
where
    F: Fn(ComplexScalar, ComplexScalar, ComplexScalar) -> Result<WeightVector> + Send + Sync,
{
    fn weights(
        &self,
        u: ComplexScalar,
        xi: ComplexScalar,
        eta: ComplexScalar,
    ) -> Result<WeightVector> {
        (self.f)(u, xi, eta)
    }

    fn label(&self) -> String {
        self.name.clone()
    }
}
