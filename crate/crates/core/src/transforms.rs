//! Solution-preserving transformations and gauge reduction.
//!
//! Transformations wrap an evaluator lazily; nothing is re-derived in closed
//! form. The five kinds are
//!
//! | kind | effect |
//! |------|--------|
//! | `A1` | swap `a2 ↔ a3`, `a7 ↔ a8` |
//! | `A2` | swap `a1 ↔ a4`, `a5 ↔ a6` |
//! | `B`  | multiply every weight by `g(u, ξ, η)` |
//! | `C`  | `a2 → N(ξ)/N(η) a2`, `a3 → N(η)/N(ξ) a3`, `a7 → s N(ξ)N(η) a7`, `a8 → a8 / (s N(ξ)N(η))`; or negate `a5, a6` |
//! | `D`  | evaluate at `μ u` |
//! | `E`  | evaluate at colours `f(ξ), f(η)` |

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, YbeError};
use crate::families::{Diagnostic, SharedFamily, WeightFamily, DEFAULT_COLOR_DOMAIN};
use crate::numkernel::{re, ComplexScalar};
use crate::profiles::{ProfileKind, ProfileSpec, Scalar};
use crate::weights::{swap_14_56, WeightVector};

const DIVISOR_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum TransformSpec {
    A1,
    A2,
    B {
        /// Field `g(u, ξ, η)`.
        g: ProfileSpec,
    },
    C {
        /// Colour profile `N(ξ)`; omitted together with `s` when `flip` is set.
        #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
        n: Option<ProfileSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        s: Option<Scalar>,
        /// Negate `a5` and `a6` instead of rescaling.
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        flip: bool,
    },
    D {
        mu: Scalar,
    },
    E {
        /// Colour map `f(ξ)`.
        f: ProfileSpec,
    },
}

impl TransformSpec {
    pub fn scale(g: ProfileSpec) -> Self {
        TransformSpec::B { g }
    }

    pub fn regauge(n: ProfileSpec, s: ComplexScalar) -> Self {
        TransformSpec::C {
            n: Some(n),
            s: Some(Scalar(s)),
            flip: false,
        }
    }

    pub fn flip() -> Self {
        TransformSpec::C {
            n: None,
            s: None,
            flip: true,
        }
    }

    pub fn rescale(mu: f64) -> Self {
        TransformSpec::D {
            mu: Scalar::real(mu),
        }
    }

    pub fn recolor(f: ProfileSpec) -> Self {
        TransformSpec::E { f }
    }

    /// Payload diagnostics; empty when the transform can be applied.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let kind_is = |p: &ProfileSpec, name: &str, k: ProfileKind, out: &mut Vec<Diagnostic>| {
            let d = p.check(name);
            if d.is_empty() && p.kind() != Some(k) {
                out.push(Diagnostic::error(format!("{name} has the wrong profile kind")));
            }
            out.extend(d);
        };
        match self {
            TransformSpec::A1 | TransformSpec::A2 => {}
            TransformSpec::B { g } => {
                let d = g.check("g");
                if d.is_empty() && g.kind().is_none() {
                    out.push(Diagnostic::error("g is malformed"));
                }
                out.extend(d);
            }
            TransformSpec::C { n, s, flip } => {
                if *flip {
                    if n.is_some() || s.is_some() {
                        out.push(Diagnostic::error("C: flip excludes N and s"));
                    }
                } else {
                    match (n, s) {
                        (Some(n), Some(s)) => {
                            kind_is(n, "N", ProfileKind::Color, &mut out);
                            if s.0.norm() < DIVISOR_FLOOR {
                                out.push(Diagnostic::error("C: s must be nonzero"));
                            }
                        }
                        _ => out.push(Diagnostic::error("C: needs both N and s, or flip")),
                    }
                }
            }
            TransformSpec::D { mu } => {
                if mu.0.norm() < DIVISOR_FLOOR {
                    out.push(Diagnostic::error("D: mu must be nonzero"));
                }
            }
            TransformSpec::E { f } => {
                kind_is(f, "f", ProfileKind::Color, &mut out);
                if out.is_empty() {
                    // Injectivity on a grid over the default colour domain.
                    let [lo, hi] = DEFAULT_COLOR_DOMAIN;
                    let pts: Vec<ComplexScalar> = (0..16)
                        .map(|i| re(lo + (hi - lo) * i as f64 / 15.0))
                        .collect();
                    let vals: Result<Vec<ComplexScalar>> = pts.iter().map(|&x| f.color(x)).collect();
                    match vals {
                        Ok(v) => {
                            let collide = (0..v.len())
                                .any(|i| (i + 1..v.len()).any(|j| (v[i] - v[j]).norm() < 1e-12));
                            if collide {
                                out.push(Diagnostic::error("E: f is not injective on the colour domain"));
                            }
                        }
                        Err(e) => out.push(Diagnostic::error(format!("E: {e}"))),
                    }
                }
            }
        }
        out
    }
}

/// An ordered list of transforms applied left to right.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Pipeline(pub Vec<TransformSpec>);

impl Pipeline {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| YbeError::InvalidSpec(vec![Diagnostic::error(e.to_string())]))
    }

    pub fn apply(&self, fam: SharedFamily) -> Result<SharedFamily> {
        self.0.iter().try_fold(fam, |f, t| apply(t, f))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn compose(ts: Vec<TransformSpec>) -> Pipeline {
    Pipeline(ts)
}

struct Transformed {
    spec: TransformSpec,
    inner: SharedFamily,
}

fn divisor(z: ComplexScalar, what: &str) -> Result<ComplexScalar> {
    if z.norm() < DIVISOR_FLOOR {
        Err(YbeError::ZeroDivisor {
            context: what.to_owned(),
        })
    } else {
        Ok(z)
    }
}

impl WeightFamily for Transformed {
    fn weights(
        &self,
        u: ComplexScalar,
        xi: ComplexScalar,
        eta: ComplexScalar,
    ) -> Result<WeightVector> {
        match &self.spec {
            TransformSpec::A1 => {
                let w = self.inner.weights(u, xi, eta)?;
                let mut out = w;
                out.set(2, w.a(3));
                out.set(3, w.a(2));
                out.set(7, w.a(8));
                out.set(8, w.a(7));
                Ok(out)
            }
            TransformSpec::A2 => Ok(swap_14_56(&self.inner.weights(u, xi, eta)?)),
            TransformSpec::B { g } => {
                let g = divisor(g.field(u, xi, eta)?, "g")?;
                Ok(self.inner.weights(u, xi, eta)?.scaled(g))
            }
            TransformSpec::C { flip: true, .. } => {
                let mut w = self.inner.weights(u, xi, eta)?;
                w.set(5, -w.a(5));
                w.set(6, -w.a(6));
                Ok(w)
            }
            TransformSpec::C { n, s, .. } => {
                let n = n.as_ref().expect("validated");
                let s = s.expect("validated").0;
                let nx = divisor(n.color(xi)?, "N(ξ)")?;
                let ny = divisor(n.color(eta)?, "N(η)")?;
                let mut w = self.inner.weights(u, xi, eta)?;
                w.set(2, w.a(2) * nx / ny);
                w.set(3, w.a(3) * ny / nx);
                w.set(7, w.a(7) * s * nx * ny);
                w.set(8, w.a(8) / (s * nx * ny));
                Ok(w)
            }
            TransformSpec::D { mu } => self.inner.weights(mu.0 * u, xi, eta),
            TransformSpec::E { f } => self.inner.weights(u, f.color(xi)?, f.color(eta)?),
        }
    }

    fn label(&self) -> String {
        let tag = match &self.spec {
            TransformSpec::A1 => "A1".to_owned(),
            TransformSpec::A2 => "A2".to_owned(),
            TransformSpec::B { g } => format!("B[{g}]"),
            TransformSpec::C { flip: true, .. } => "C[flip]".to_owned(),
            TransformSpec::C { n, s, .. } => format!(
                "C[{}, {}]",
                n.as_ref().map(|n| n.to_string()).unwrap_or_default(),
                s.map(|s| s.0).unwrap_or_default()
            ),
            TransformSpec::D { mu } => format!("D[{}]", mu.0),
            TransformSpec::E { f } => format!("E[{f}]"),
        };
        format!("{tag}({})", self.inner.label())
    }
}

/// Wraps `fam` in the transformation `t`.
pub fn apply(t: &TransformSpec, fam: SharedFamily) -> Result<SharedFamily> {
    let diags = t.validate();
    if !diags.is_empty() {
        return Err(YbeError::InvalidSpec(diags));
    }
    Ok(Arc::new(Transformed {
        spec: t.clone(),
        inner: fam,
    }))
}

/// Anchors and sample points of [`gauge_reduce`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeOptions {
    /// Spectral point at which `M(ξ) = a3/a2` is read off; nonzero so that
    /// `a7` does not vanish there.
    pub u_anchor: f64,
    /// Colour fixed as the second argument of `M(ξ)` and used for `l`.
    pub color_anchor: f64,
    /// `(u, v, ξ, η, λ)` points for the eight-vertex and cocycle checks.
    pub samples: Vec<[f64; 5]>,
}

impl Default for GaugeOptions {
    fn default() -> Self {
        Self {
            u_anchor: 0.37,
            color_anchor: 0.35,
            samples: vec![
                [0.21, -0.13, 0.17, 0.42, 0.33],
                [-0.31, 0.24, 0.52, 0.28, 0.12],
                [0.11, 0.29, 0.38, 0.15, 0.47],
                [0.27, 0.08, 0.24, 0.55, 0.44],
            ],
        }
    }
}

/// Evidence collected while reducing a family to gauge form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaugeCertificate {
    /// `(ξ, M(ξ))` at the sample colours.
    pub m_samples: Vec<(f64, [f64; 2])>,
    /// `l = a8 / (a7 M(ξ) M(η))` at the anchor point.
    pub l: [f64; 2],
    /// Largest spread of `l` over the samples, relative.
    pub l_spread: f64,
    /// Largest relative violation of `f(u+v, ξ, λ) = f(u, ξ, η) f(v, η, λ)`, `f = a3/a2`.
    pub cocycle_defect: f64,
    /// Fitted `ν` in `f(u, ξ, ξ) = exp(ν u)`; zero for solutions.
    pub nu: [f64; 2],
    /// True when the input was already in gauge form and returned as is.
    pub unchanged: bool,
}

fn pair(z: ComplexScalar) -> [f64; 2] {
    [z.re, z.im]
}

/// Cocycle tolerance, relative to `|f(u+v, ξ, λ)|`.
pub const COCYCLE_TOL: f64 = 1e-8;

struct GaugeReduced {
    inner: SharedFamily,
    u0: ComplexScalar,
    c0: ComplexScalar,
    sqrt_l: ComplexScalar,
}

impl GaugeReduced {
    fn m(&self, xi: ComplexScalar) -> Result<ComplexScalar> {
        let w = self.inner.weights(self.u0, xi, self.c0)?;
        Ok(w.a(3) / divisor(w.a(2), "a2 at the gauge anchor")?)
    }
}

impl WeightFamily for GaugeReduced {
    fn weights(
        &self,
        u: ComplexScalar,
        xi: ComplexScalar,
        eta: ComplexScalar,
    ) -> Result<WeightVector> {
        let w = self.inner.weights(u, xi, eta)?;
        let a2 = divisor(w.a(2), "a2")?;
        let (mx, my) = (self.m(xi)?, self.m(eta)?);
        let (nx, ny) = (divisor(mx, "M(ξ)")?.sqrt(), divisor(my, "M(η)")?.sqrt());
        let g = ny / (nx * a2);
        let one = re(1.0);
        Ok(WeightVector([
            w.a(1) * g,
            one,
            one,
            w.a(4) * g,
            w.a(5) * g,
            w.a(6) * g,
            self.sqrt_l * my * w.a(7) / a2,
            w.a(8) / (self.sqrt_l * mx * a2),
        ]))
    }

    fn label(&self) -> String {
        format!("gauge({})", self.inner.label())
    }
}

/// Reduces an eight-vertex solution to gauge form (`a2 = a3 = 1`, `a7 = a8`)
/// by a scaling `1/a2`, a re-gauging with `N = sqrt(M)`, `M(ξ) = a3/a2`, and a
/// second scaling `N(η)/N(ξ)`.
pub fn gauge_reduce(
    fam: SharedFamily,
    opts: &GaugeOptions,
) -> Result<(SharedFamily, GaugeCertificate)> {
    let c = |x: f64| re(x);
    let mut points = Vec::with_capacity(opts.samples.len());
    for s in &opts.samples {
        let [u, v, x, y, l] = s.map(c);
        points.push((
            fam.weights(u, x, y)?,
            fam.weights(u + v, x, l)?,
            fam.weights(v, y, l)?,
        ));
    }

    for i in 1..=8 {
        let scale = points
            .iter()
            .flat_map(|p| [p.0, p.1, p.2])
            .fold(0.0f64, |m, w| m.max(w.max_abs()));
        let all_zero = points
            .iter()
            .flat_map(|p| [p.0, p.1, p.2])
            .all(|w| w.a(i).norm() <= 1e-14 * scale.max(1.0));
        if all_zero {
            return Err(YbeError::NotEightVertex { index: i });
        }
    }

    let ratio = |w: &WeightVector| -> Result<ComplexScalar> {
        Ok(w.a(3) / divisor(w.a(2), "a2")?)
    };
    let mut cocycle_defect = 0.0f64;
    for (ru, rw, rv) in &points {
        let lhs = ratio(rw)?;
        let rhs = ratio(ru)? * ratio(rv)?;
        cocycle_defect = cocycle_defect.max((lhs - rhs).norm() / lhs.norm().max(1e-300));
    }

    let u0 = c(opts.u_anchor);
    let c0 = c(opts.color_anchor);
    let f_diag = ratio(&fam.weights(u0, c0, c0)?)?;
    let nu = f_diag.ln() / u0;

    if cocycle_defect > COCYCLE_TOL {
        return Err(YbeError::MultiplicativityViolation {
            defect: cocycle_defect,
        });
    }

    let mut reducer = GaugeReduced {
        inner: fam.clone(),
        u0,
        c0,
        sqrt_l: re(1.0),
    };
    let l_at = |r: &GaugeReduced, u: ComplexScalar, x: ComplexScalar, y: ComplexScalar| -> Result<ComplexScalar> {
        let w = r.inner.weights(u, x, y)?;
        Ok(w.a(8) / (divisor(w.a(7), "a7")? * r.m(x)? * r.m(y)?))
    };
    let l = l_at(&reducer, u0, c0, c0)?;
    let mut l_spread = 0.0f64;
    for s in &opts.samples {
        let [u, _, x, y, _] = s.map(c);
        if let Ok(li) = l_at(&reducer, u, x, y) {
            l_spread = l_spread.max((li - l).norm() / l.norm().max(1e-300));
        }
    }
    reducer.sqrt_l = l.sqrt();

    let mut m_samples = Vec::new();
    let mut max_m_dev = 0.0f64;
    for s in &opts.samples {
        for x in [s[2], s[3]] {
            let m = reducer.m(c(x))?;
            max_m_dev = max_m_dev.max((m - 1.0).norm());
            m_samples.push((x, pair(m)));
        }
    }

    let already = points
        .iter()
        .flat_map(|p| [p.0, p.1, p.2])
        .all(|w| w.gauge_defect() <= 1e-14)
        && max_m_dev <= 1e-14
        && (l - 1.0).norm() <= 1e-14;

    let cert = GaugeCertificate {
        m_samples,
        l: pair(l),
        l_spread,
        cocycle_defect,
        nu: pair(nu),
        unchanged: already,
    };
    if already {
        return Ok((fam, cert));
    }
    Ok((Arc::new(reducer), cert))
}
