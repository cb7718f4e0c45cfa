//! Hamiltonian coefficients, necessary-condition suites and the solution
//! classifier.
//!
//! In the polynomial identities `u_i` are gauge weights at `(u, ξ, η)` and,
//! unless a name says otherwise, `m_i` are Hamiltonian coefficients at `η`.
//! The Baxter-branch constants are the measured `α = m7`, `β = m5`,
//! `γ = m1`; they are never fitted.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, YbeError};
use crate::families::{SharedFamily, WeightFamily};
use crate::numkernel::{re, ComplexScalar};
use crate::sampling::{self, SampleDomain, SamplePoint};
use crate::transforms::{gauge_reduce, GaugeCertificate, GaugeOptions};
use crate::weights::{
    baxter_curve_residual, free_fermion_residual, EquationId, WeightVector, GAUGE_TOL,
};

type C = ComplexScalar;

/// Finite-difference settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffOptions {
    /// Central-difference step, in `[1e-7, 1e-3]`.
    pub h: f64,
    /// Use closed-form coefficients when the family provides them.
    pub use_analytic: bool,
}

impl Default for CoeffOptions {
    fn default() -> Self {
        Self {
            h: 1e-5,
            use_analytic: true,
        }
    }
}

/// Raw and once-extrapolated central differences disagreeing by more than
/// this (relative) raise [`YbeError::StepUnstable`].
pub const STEP_UNSTABLE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientSource {
    Analytic,
    FiniteDifference,
}

/// `m_1..m_8` at one colour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientSample {
    pub xi: f64,
    pub m: [C; 8],
    /// Error estimate per coefficient (zero for closed forms).
    pub error: [f64; 8],
    pub source: CoefficientSource,
}

impl CoefficientSample {
    #[inline]
    pub fn m(&self, i: usize) -> C {
        self.m[i - 1]
    }
}

/// `m_i(ξ) = ∂_u a_i(u, ξ, η)` at `u = 0, η = ξ` over a colour grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HamiltonianCoefficients {
    pub samples: Vec<CoefficientSample>,
    pub h: f64,
    /// Richardson levels applied to the central differences.
    pub richardson_levels: u32,
}

fn central(fam: &dyn WeightFamily, u: C, xi: C, eta: C, h: f64) -> Result<[C; 8]> {
    let p = fam.weights(u + h, xi, eta)?;
    let m = fam.weights(u - h, xi, eta)?;
    let mut d = [re(0.0); 8];
    for i in 0..8 {
        d[i] = (p.0[i] - m.0[i]) / (2.0 * h);
    }
    Ok(d)
}

/// `∂_u a_i(u, ξ, η)` by central differences with one Richardson step.
/// Returns the derivative and a per-component error estimate.
pub fn du_weights(
    fam: &dyn WeightFamily,
    u: C,
    xi: C,
    eta: C,
    h: f64,
) -> Result<([C; 8], [f64; 8])> {
    let coarse = central(fam, u, xi, eta, h)?;
    let fine = central(fam, u, xi, eta, h / 2.0)?;
    let mut out = [re(0.0); 8];
    let mut err = [0.0; 8];
    let mut scale = 0.0f64;
    for i in 0..8 {
        out[i] = (fine[i] * 4.0 - coarse[i]) / 3.0;
        err[i] = (out[i] - fine[i]).norm();
        scale = scale.max(out[i].norm());
    }
    for i in 0..8 {
        let rel = (out[i] - coarse[i]).norm() / out[i].norm().max(scale).max(1e-12);
        if rel > STEP_UNSTABLE {
            return Err(YbeError::StepUnstable {
                index: i + 1,
                relative: rel,
            });
        }
    }
    Ok((out, err))
}

/// Second `u`-derivative by central differences with one Richardson step.
pub fn d2u_weights(fam: &dyn WeightFamily, u: C, xi: C, eta: C, h: f64) -> Result<[C; 8]> {
    let second = |h: f64| -> Result<[C; 8]> {
        let p = fam.weights(u + h, xi, eta)?;
        let z = fam.weights(u, xi, eta)?;
        let m = fam.weights(u - h, xi, eta)?;
        let mut d = [re(0.0); 8];
        for i in 0..8 {
            d[i] = (p.0[i] - z.0[i] * 2.0 + m.0[i]) / (h * h);
        }
        Ok(d)
    };
    let (coarse, fine) = (second(h)?, second(h / 2.0)?);
    let mut out = [re(0.0); 8];
    for i in 0..8 {
        out[i] = (fine[i] * 16.0 - coarse[i]) / 15.0;
    }
    Ok(out)
}

/// Coefficients at one colour by finite differences.
pub fn finite_difference_coeffs(
    fam: &dyn WeightFamily,
    xi: f64,
    h: f64,
) -> Result<CoefficientSample> {
    let x = re(xi);
    let (m, error) = du_weights(fam, re(0.0), x, x, h)?;
    Ok(CoefficientSample {
        xi,
        m,
        error,
        source: CoefficientSource::FiniteDifference,
    })
}

/// Coefficients at one colour, closed form when available.
pub fn coeffs_at(fam: &dyn WeightFamily, xi: f64, opts: &CoeffOptions) -> Result<CoefficientSample> {
    if opts.use_analytic {
        if let Some(m) = fam.analytic_coefficients(re(xi)) {
            return Ok(CoefficientSample {
                xi,
                m: m?,
                error: [0.0; 8],
                source: CoefficientSource::Analytic,
            });
        }
    }
    finite_difference_coeffs(fam, xi, opts.h)
}

pub fn hamiltonian_coeffs(
    fam: &dyn WeightFamily,
    grid: &[f64],
    opts: &CoeffOptions,
) -> Result<HamiltonianCoefficients> {
    if !(1e-7..=1e-3).contains(&opts.h) {
        return Err(YbeError::Format(format!(
            "finite-difference step {} outside [1e-7, 1e-3]",
            opts.h
        )));
    }
    let samples: Result<Vec<CoefficientSample>> =
        grid.par_iter().map(|&x| coeffs_at(fam, x, opts)).collect();
    Ok(HamiltonianCoefficients {
        samples: samples?,
        h: opts.h,
        richardson_levels: 1,
    })
}

/// A named check. `value` is `None` when the check does not apply.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedResidual {
    pub name: String,
    pub value: Option<f64>,
    pub tol: f64,
    pub pass: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl NamedResidual {
    fn at_most(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value: Some(value),
            tol,
            pass: Some(value <= tol),
            note: None,
        }
    }

    fn at_least(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value: Some(value),
            tol,
            pass: Some(value > tol),
            note: None,
        }
    }

    fn skipped(name: impl Into<String>, why: &str) -> Self {
        Self {
            name: name.into(),
            value: None,
            tol: 0.0,
            pass: None,
            note: Some(why.to_owned()),
        }
    }
}

/// Finds a residual by name.
pub fn lookup<'a>(rs: &'a [NamedResidual], name: &str) -> Option<&'a NamedResidual> {
    rs.iter().find(|r| r.name == name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Branch {
    /// `m1 = m4 ≠ 0`: `a1 = a4`, `a5 = a6` on the biquadratic curve.
    Baxter,
    /// `m1 + m4 = 0`: the free-fermion condition.
    FreeFermion,
}

/// Invariant tolerance for the coefficient checks.
pub const COEFF_TOL: f64 = 1e-8;

/// Picks the branch from `m1² = m4²`: `m1 = m4 ≠ 0` selects Baxter, anything
/// else free-fermion.
pub fn select_branch(coeffs: &HamiltonianCoefficients) -> Branch {
    let baxter = coeffs.samples.iter().all(|s| {
        let scale = s.m(1).norm().max(s.m(4).norm());
        (s.m(1) - s.m(4)).norm() <= COEFF_TOL * scale.max(1.0) && scale > COEFF_TOL
    });
    if baxter {
        Branch::Baxter
    } else {
        Branch::FreeFermion
    }
}

fn spread(values: impl Iterator<Item = C>) -> f64 {
    let v: Vec<C> = values.collect();
    if v.is_empty() {
        return 0.0;
    }
    let mean = v.iter().sum::<C>() / v.len() as f64;
    v.iter().fold(0.0, |m, x| m.max((x - mean).norm()))
}

/// Coefficient-level invariants: `m1² = m4²`, `m5² = m6²`, constancy of
/// `m7`, nondegeneracy `max(|m5|, |m7|) > 0`, and on the free-fermion branch
/// `m1 + m4 = 0` and constancy of `δ² = m5² + m6² − 2 m1²`.
pub fn invariant_suite(coeffs: &HamiltonianCoefficients) -> Vec<NamedResidual> {
    let s = &coeffs.samples;
    let max_over = |f: &dyn Fn(&CoefficientSample) -> f64| s.iter().map(f).fold(0.0, f64::max);
    let mut out = vec![
        NamedResidual::at_most(
            "m1^2-m4^2",
            max_over(&|c| (c.m(1) * c.m(1) - c.m(4) * c.m(4)).norm()),
            COEFF_TOL,
        ),
        NamedResidual::at_most(
            "m5^2-m6^2",
            max_over(&|c| (c.m(5) * c.m(5) - c.m(6) * c.m(6)).norm()),
            COEFF_TOL,
        ),
        NamedResidual::at_most("m7_spread", spread(s.iter().map(|c| c.m(7))), COEFF_TOL),
        NamedResidual::at_least(
            "nondegeneracy",
            s.iter()
                .map(|c| c.m(5).norm().max(c.m(7).norm()))
                .fold(f64::INFINITY, f64::min),
            COEFF_TOL,
        ),
    ];
    if select_branch(coeffs) == Branch::FreeFermion {
        out.push(NamedResidual::at_most(
            "m1+m4",
            max_over(&|c| (c.m(1) + c.m(4)).norm()),
            COEFF_TOL,
        ));
        out.push(NamedResidual::at_most(
            "delta^2_spread",
            spread(
                s.iter()
                    .map(|c| c.m(5) * c.m(5) + c.m(6) * c.m(6) - c.m(1) * c.m(1) * 2.0),
            ),
            COEFF_TOL,
        ));
    } else {
        out.push(NamedResidual::skipped("m1+m4", "Baxter branch"));
        out.push(NamedResidual::skipped("delta^2_spread", "Baxter branch"));
    }
    out
}

/// Gauge weights `(u1, u4, u5, u6, u7)`.
pub fn pick(w: &WeightVector) -> [C; 5] {
    [w.a(1), w.a(4), w.a(5), w.a(6), w.a(7)]
}

/// Coefficients `(m1, m4, m5, m6, m7)`.
pub fn pick_m(s: &CoefficientSample) -> [C; 5] {
    [s.m(1), s.m(4), s.m(5), s.m(6), s.m(7)]
}

/// The seven polynomials obtained by expanding the gauge equations to first
/// order around the initial condition.
pub fn reduced_system(u: [C; 5], m: [C; 5]) -> [C; 7] {
    let [u1, u4, u5, u6, u7] = u;
    let [m1, m4, m5, m6, m7] = m;
    [
        m7 * u1 * u1 * u1 - m7 * u1 * u5 * u5 - m1 * u1 * u7 * 3.0 + m4 * u1 * u7
            - m7 * u4 * u7 * u7
            - m7 * u4
            + m5 * u6 * u7
            + m6 * u6 * u7,
        -m6 * u1 * u4 + m7 * u1 * u6 * u7 + m7 * u4 * u5 * u7 + m1 * u4 * u6 + m4 * u4 * u6
            - m6 * u5 * u6
            - m5 * u7 * u7
            + m6,
        m7 * u1 * u1 - m7 * u4 * u4 - m7 * u5 * u5 + m7 * u6 * u6 + m4 * u7 * 2.0
            - m1 * u7 * 2.0,
        -m5 * u1 * u4 + m1 * u1 * u5 + m4 * u1 * u5 + m7 * u1 * u6 * u7 + m7 * u4 * u5 * u7
            - m5 * u5 * u6
            - m6 * u7 * u7
            + m5,
        m7 * u1 * u1 * u6 - m6 * u1 * u7 - m5 * u1 * u7 - m7 * u5 * u5 * u6
            + m7 * u5 * u7 * u7
            + m7 * u5
            + m4 * u6 * u7
            + m1 * u6 * u7,
        m7 * u1 * u1 * u1 * u5 - m6 * u1 * u4 * u7 - m7 * u1 * u5 * u5 * u5
            + m4 * u1 * u5 * u7 * 2.0
            - m1 * u1 * u5 * u7 * 2.0
            + m7 * u1 * u6
            - m7 * u4 * u5 * u7 * u7
            + m5 * u5 * u6 * u7
            + m6 * u7 * u7 * u7
            - m5 * u7,
        -m7 * u1 * u1 * u4 + m7 * u1 * u7 * u7 + m7 * u1 + m7 * u4 * u5 * u5 + m4 * u4 * u7
            + m1 * u4 * u7
            - m5 * u5 * u7
            - m6 * u5 * u7,
    ]
}

/// The three polynomials left after eliminating `m4`, `m6` between pairs.
fn reduced_triple(u: [C; 5], m: [C; 5]) -> [C; 3] {
    let [u1, u4, u5, u6, u7] = u;
    let [m1, m4, m5, m6, m7] = m;
    [
        -m5 * u1 * u4 + m1 * u1 * u5 + m4 * u1 * u5 + m7 * u1 * u6 * u7 + m7 * u4 * u5 * u7
            - m5 * u5 * u6
            - m6 * u7 * u7
            + m5,
        -m7 * u1 * u1 * u1 * u5 + m7 * u1 * u4 * u4 * u5 + m5 * u1 * u4 * u7 * 2.0
            + m7 * u1 * u5 * u5 * u5
            - m7 * u1 * u5 * u6 * u6
            - m4 * u1 * u5 * u7 * 4.0
            - m7 * u1 * u6 * u7 * u7 * 2.0
            - m7 * u4 * u5 * u7 * u7 * 2.0
            + m5 * u5 * u6 * u7 * 2.0
            + m6 * u7 * u7 * u7 * 2.0
            - m5 * u7 * 2.0,
        -m7 * u1 * u4 * u4 * u5 + m6 * u1 * u4 * u7 + m7 * u1 * u5 * u6 * u6 - m7 * u1 * u6
            + m7 * u4 * u5 * u7 * u7
            - m5 * u5 * u6 * u7
            - m6 * u7 * u7 * u7
            + m5 * u7,
    ]
}

/// The four Baxter-branch quartics.
fn baxter_quartics(u: [C; 5], m: [C; 5]) -> [C; 4] {
    let [u1, u4, u5, u6, u7] = u;
    let [_, _, _, m6, m7] = m;
    [
        -m7 * u1 * u4 * u4 * u5 + m6 * u1 * u4 * u7 + m7 * u1 * u5 * u6 * u6 - m7 * u1 * u6
            + m7 * u4 * u5
            - m6 * u5 * u6 * u7,
        m7 * u1 * u4 * u5 * u5 - m6 * u1 * u5 * u7 - m7 * u4 * u4 * u5 * u6
            + m6 * u4 * u6 * u7
            - m7 * u5 * u5 * u5 * u6
            + m7 * u5 * u5
            + m7 * u5 * u6 * u6 * u6
            - m7 * u6 * u6,
        -m7 * u4 * u4 * u4 * u5 * u6 + m6 * u4 * u4 * u6 * u7 + m7 * u4 * u5 * u5 * u7 * u7
            + m7 * u4 * u5 * u6 * u6 * u6
            - m7 * u4 * u6 * u6
            - m6 * u5 * u5 * u6 * u7
            - m6 * u5 * u7 * u7 * u7
            + m6 * u5 * u7,
        -m7 * u1 * u5 * u5 * u6 + m7 * u1 * u5 - m7 * u4 * u4 * u4 * u5 + m6 * u4 * u4 * u7
            + m7 * u4 * u5 * u5 * u5
            + m7 * u4 * u5 * u6 * u6
            - m7 * u4 * u6
            - m6 * u5 * u5 * u7,
    ]
}

/// The free-fermion factor `u1 u4 + u5 u6 − u7² − 1`.
fn ff_factor(u: [C; 5]) -> C {
    let [u1, u4, u5, u6, u7] = u;
    u1 * u4 + u5 * u6 - u7 * u7 - 1.0
}

/// The four factored products, each the free-fermion factor times a quartic.
fn factored(u: [C; 5], m: [C; 5]) -> [C; 4] {
    let ff = ff_factor(u);
    let q = baxter_quartics(u, m);
    let u1 = u[0];
    [ff * q[0], u1 * ff * q[1], u1 * ff * q[2], u1 * ff * q[3]]
}

/// Three coefficient-free cubics of the Baxter branch.
fn baxter_cubics(u: [C; 5]) -> [C; 3] {
    let [u1, u4, u5, u6, u7] = u;
    [
        u1 * u1 * u5 - u1 * u4 * u6 * 2.0 + u4 * u4 * u5 - u5 * u5 * u5 + u5 * u6 * u6,
        -u1 * u4 * u4 * u6 + u1 * u5 * u5 * u6 + u1 * u5 * u7 * u7 - u1 * u5
            + u4 * u4 * u4 * u5
            - u4 * u5 * u5 * u5
            - u4 * u6 * u7 * u7
            + u4 * u6,
        -u1 * u1 * u4 + u1 * u5 * u6 * 2.0 + u4 * u4 * u4 - u4 * u5 * u5 - u4 * u6 * u6,
    ]
}

/// Options shared by the residual suites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteOptions {
    pub coeff: CoeffOptions,
    /// Tolerance of the polynomial identities.
    pub identity_tol: f64,
    /// Tolerance of the derivative-based checks.
    pub ode_tol: f64,
    /// Tolerance of the free-fermion condition and the elliptic identities.
    pub ff_tol: f64,
    /// Step for second derivatives.
    pub h2: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            coeff: CoeffOptions::default(),
            identity_tol: 1e-7,
            ode_tol: 1e-7,
            ff_tol: 1e-9,
            h2: 1e-3,
        }
    }
}

struct Worst(Vec<(String, f64)>);

impl Worst {
    fn new() -> Self {
        Self(Vec::new())
    }

    fn put(&mut self, name: impl AsRef<str>, v: C) {
        let name = name.as_ref();
        let x = v.norm();
        match self.0.iter_mut().find(|(n, _)| n == name) {
            Some(e) => e.1 = e.1.max(x),
            None => self.0.push((name.to_owned(), x)),
        }
    }

    fn into_residuals(self, tol: impl Fn(&str) -> f64) -> Vec<NamedResidual> {
        self.0
            .into_iter()
            .map(|(n, v)| {
                let t = tol(&n);
                NamedResidual::at_most(n, v, t)
            })
            .collect()
    }
}

/// True when `R(0, ξ, ξ)` is the identity at a few colours of `samples`.
pub fn initial_condition_residual(fam: &dyn WeightFamily, colours: &[f64]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &x in colours {
        let w = fam.weights(re(0.0), re(x), re(x))?;
        worst = worst.max(w.distance(&WeightVector::identity()));
    }
    Ok(worst)
}

fn colours_of(samples: &[SamplePoint]) -> Vec<f64> {
    samples.iter().flat_map(|p| [p.xi, p.eta]).take(8).collect()
}

/// Derivative-based residuals on the branch selected by `coeffs`.
///
/// Baxter branch: the first-order ODEs for `a5` and `a1`, the biquadratic
/// curve, and the shape `a1 = a4`, `a5 = a6`. Free-fermion branch: the
/// condition itself, its two companions, the variant with `m1(ξ)`, and the
/// quartic ODE for `a7`. When `m7` vanishes on the grid, also the
/// second-order ODE `a_i'' = m5² a_i` for `i = 1, 4, 5, 6`.
pub fn curve_residuals(
    fam: &dyn WeightFamily,
    coeffs: &HamiltonianCoefficients,
    samples: &[SamplePoint],
    opts: &SuiteOptions,
) -> Result<Vec<NamedResidual>> {
    let branch = select_branch(coeffs);
    let alpha_zero = coeffs.samples.iter().all(|s| s.m(7).norm() <= COEFF_TOL);
    let mut worst = Worst::new();
    for p in samples {
        let [u, _, x, y, _] = p.complex();
        let w = fam.weights(u, x, y)?;
        let uu = pick(&w);
        let [u1, u4, u5, u6, u7] = uu;
        let (d, _) = du_weights(fam, u, x, y, opts.coeff.h)?;
        let my = coeffs_at(fam, p.eta, &opts.coeff)?;
        let [m1, _m4, m5, m6, al] = pick_m(&my);
        match branch {
            Branch::Baxter => {
                let (be, ga) = (m5, m1);
                let (d1, d5) = (d[0], d[4]);
                worst.put(
                    "a5_ode",
                    d5 * d5 - (be * be - (be * be - m1 * m1 + al * al) * u5 * u5 + al * al * u5 * u5 * u5 * u5),
                );
                worst.put(
                    "a1_ode",
                    d1 * d1 - (be * be - (be * be - ga * ga + al * al) * u1 * u1 + al * al * u1 * u1 * u1 * u1),
                );
                worst.put("baxter_curve", baxter_curve_residual(&w, al, be, ga));
                worst.put("shape_a1_a4", u1 - u4);
                worst.put("shape_a5_a6", u5 - u6);
            }
            Branch::FreeFermion => {
                let mx = coeffs_at(fam, p.xi, &opts.coeff)?;
                let d7 = d[6];
                worst.put("ff_condition", free_fermion_residual(&w));
                worst.put("ff_companion_b", al * (u1 * u6 + u4 * u5) - (m5 + m6) * u7);
                worst.put(
                    "ff_companion_c",
                    al * (u1 * u1 + u6 * u6 - u4 * u4 - u5 * u5) - m1 * u7 * 4.0,
                );
                worst.put(
                    "ff_companion_c_xi",
                    al * (u1 * u1 + u5 * u5 - u4 * u4 - u6 * u6) - mx.m(1) * u7 * 4.0,
                );
                let s56 = (m5 + m6) * (m5 + m6);
                worst.put(
                    "a7_quartic_ode",
                    d7 * d7
                        - (al * al - (s56 - m1 * m1 * 4.0 - al * al * 2.0) * u7 * u7
                            + al * al * u7 * u7 * u7 * u7),
                );
            }
        }
        if alpha_zero {
            let dd = d2u_weights(fam, u, x, y, opts.h2)?;
            let m5sq = m5 * m5;
            for i in [1usize, 4, 5, 6] {
                worst.put("second_order_ode", dd[i - 1] - m5sq * w.a(i));
            }
        }
    }
    let mut out = worst.into_residuals(|n| match n {
        "ff_condition" => opts.ff_tol,
        "second_order_ode" => 1e-6,
        "shape_a1_a4" | "shape_a5_a6" => 0.0,
        "baxter_curve" | "ff_companion_b" | "ff_companion_c" | "ff_companion_c_xi" => opts.ff_tol,
        _ => opts.ode_tol,
    });
    if !alpha_zero {
        out.push(NamedResidual::skipped("second_order_ode", "m7 does not vanish"));
    }
    Ok(out)
}

/// Polynomial identities on the branch selected by `coeffs`. Families that
/// violate the initial condition get a single skipped entry.
///
/// Every family: the seven first-order
/// polynomials, the reduced triple and the four factored products.
/// Baxter branch: the quartics, the coefficient-free cubics and
/// `α u1 u5 = m6 u7`. Free-fermion branch: the condition, the reflections
/// `a4(u,ξ,η) = a1(−u,η,ξ)`, `a7(u,ξ,η) = −a7(−u,η,ξ)`, and for elliptic
/// families the identities in `sn z`, `cd z`. Gauge families in addition:
/// antisymmetry of `a5`, `a6`.
pub fn derived_identity_suite(
    fam: &dyn WeightFamily,
    coeffs: &HamiltonianCoefficients,
    samples: &[SamplePoint],
    opts: &SuiteOptions,
) -> Result<Vec<NamedResidual>> {
    let branch = select_branch(coeffs);
    let initial = initial_condition_residual(fam, &colours_of(samples))? <= GAUGE_TOL;
    let mut worst = Worst::new();
    let mut skipped = Vec::new();
    let mut is_elliptic = true;
    for p in samples {
        let [u, _, x, y, _] = p.complex();
        let w = fam.weights(u, x, y)?;
        let uu = pick(&w);
        let [u1, u4, u5, u6, u7] = uu;
        let my = coeffs_at(fam, p.eta, &opts.coeff)?;
        let m = pick_m(&my);
        if !initial {
            continue;
        }
        let back = fam.weights(-u, y, x)?;
        if w.gauge_defect() <= GAUGE_TOL && back.gauge_defect() <= GAUGE_TOL {
            worst.put("antisymmetry_a5", w.a(5) + back.a(5));
            worst.put("antisymmetry_a6", w.a(6) + back.a(6));
        }
        for (i, r) in reduced_system(uu, m).iter().enumerate() {
            worst.put(format!("reduced_system.{}", i + 1), *r);
        }
        for (i, r) in reduced_triple(uu, m).iter().enumerate() {
            worst.put(format!("reduced_triple.{}", i + 1), *r);
        }
        for (i, r) in factored(uu, m).iter().enumerate() {
            worst.put(format!("factored.{}", i + 1), *r);
        }
        match branch {
            Branch::Baxter => {
                for (i, r) in baxter_quartics(uu, m).iter().enumerate() {
                    worst.put(format!("baxter_quartic.{}", i + 1), *r);
                }
                for (i, r) in baxter_cubics(uu).iter().enumerate() {
                    worst.put(format!("baxter_cubic.{}", i + 1), *r);
                }
                worst.put("baxter_linear", m[4] * u1 * u5 - m[3] * u7);
            }
            Branch::FreeFermion => {
                worst.put("ff_condition", free_fermion_residual(&w));
                worst.put("reflection_a4", u4 - back.a(1));
                worst.put("reflection_a7", u7 + back.a(7));
                match fam.elliptic_parts(u, x, y) {
                    Some(parts) => {
                        let [sn, cd, lambda] = parts?;
                        let mx = coeffs_at(fam, p.xi, &opts.coeff)?;
                        let [m1, _, m5, _, _] = m;
                        let (cs, c2s2) = (cd * sn, cd * cd - sn * sn);
                        worst.put("elliptic.a", c2s2 + m1 / lambda * cs * 2.0 + u5 * u5 - u1 * u1);
                        worst.put("elliptic.b", c2s2 - m1 / lambda * cs * 2.0 + u6 * u6 - u4 * u4);
                        worst.put("elliptic.c", u1 * u4 + u5 * u6 - cd * cd - sn * sn);
                        worst.put("elliptic.d", u1 * u6 + u4 * u5 - m5 / lambda * cs * 2.0);
                        worst.put(
                            "elliptic.e",
                            c2s2 - mx.m(1) / lambda * cs * 2.0 + u5 * u5 - u4 * u4,
                        );
                    }
                    None => is_elliptic = false,
                }
            }
        }
    }
    if !initial {
        skipped.push(NamedResidual::skipped(
            "all",
            "the identities are expansions around the initial condition, which fails",
        ));
    }
    if branch == Branch::FreeFermion && !is_elliptic {
        skipped.push(NamedResidual::skipped("elliptic", "no elliptic parametrisation"));
    }
    let mut out = worst.into_residuals(|n| {
        if n.starts_with("elliptic") || n == "ff_condition" {
            opts.ff_tol
        } else if n.starts_with("antisymmetry") || n.starts_with("reflection") {
            1e-10
        } else {
            opts.identity_tol
        }
    });
    out.extend(skipped);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Baxter,
    FreeFermion,
    TrivialA,
    TrivialB,
    NotEightVertex,
    NotASolution,
    Indeterminate,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Baxter => "BAXTER",
            Verdict::FreeFermion => "FREE_FERMION",
            Verdict::TrivialA => "TRIVIAL_A",
            Verdict::TrivialB => "TRIVIAL_B",
            Verdict::NotEightVertex => "NOT_EIGHT_VERTEX",
            Verdict::NotASolution => "NOT_A_SOLUTION",
            Verdict::Indeterminate => "INDETERMINATE",
        }
    }

    /// The verdict a built-in family is expected to receive.
    pub fn expected_for(id: crate::families::FamilyId) -> Verdict {
        use crate::families::FamilyId::*;
        match id {
            BaxterElliptic | BaxterTrig => Verdict::Baxter,
            FfElliptic | FfTanh | FfTrig | FfHyperbolic | Murakami | BazhanovStroganov => {
                Verdict::FreeFermion
            }
            TrivialA => Verdict::TrivialA,
            TrivialB => Verdict::TrivialB,
        }
    }
}

/// Sample sizes and tolerances of [`classify`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyPlan {
    pub samples: usize,
    pub seed: u64,
    /// Median scale-free Yang-Baxter residual above this is not a solution.
    pub solution_tol: f64,
    /// Tolerance of the free-fermion and curve tests.
    pub branch_tol: f64,
    pub domain: SampleDomain,
    /// Colours in the coefficient grid.
    pub grid_points: usize,
    pub coeff: CoeffOptions,
    pub u_anchor: f64,
    /// Run the full residual suites and attach them to the report.
    pub suites: bool,
}

impl Default for ClassifyPlan {
    fn default() -> Self {
        Self {
            samples: 24,
            seed: 1,
            solution_tol: 1e-8,
            branch_tol: 1e-6,
            domain: SampleDomain::default(),
            grid_points: 20,
            coeff: CoeffOptions::default(),
            u_anchor: 0.37,
            suites: true,
        }
    }
}

/// Order statistics of the scale-free residuals over the sample points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualStats {
    pub samples: usize,
    pub min: f64,
    pub median: f64,
    pub max: f64,
    /// Component equation with the largest raw residual over all samples.
    pub worst_component: Option<(EquationId, f64)>,
}

impl ResidualStats {
    pub fn from_relative(values: &[f64], worst: Option<(EquationId, f64)>) -> Self {
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.total_cmp(b));
        let median = if v.is_empty() {
            f64::INFINITY
        } else if v.len() % 2 == 1 {
            v[v.len() / 2]
        } else {
            0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2])
        };
        Self {
            samples: v.len(),
            min: v.first().copied().unwrap_or(f64::INFINITY),
            median,
            max: v.last().copied().unwrap_or(f64::INFINITY),
            worst_component: worst,
        }
    }
}

/// Largest relative residual of the two branch conditions over the samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchTests {
    pub free_fermion: f64,
    pub baxter_shape: f64,
    pub baxter_curve: f64,
    pub trivial_a_shape: f64,
    pub trivial_b_shape: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub family: String,
    pub verdict: Verdict,
    pub is_gauge: bool,
    pub gauge_defect: f64,
    pub initial_condition_ok: bool,
    pub initial_condition_residual: Option<f64>,
    pub ybe: ResidualStats,
    pub eight_vertex: bool,
    pub gauge_certificate: Option<GaugeCertificate>,
    pub branch: Option<Branch>,
    pub branch_tests: Option<BranchTests>,
    pub coefficient_invariants: Vec<NamedResidual>,
    pub curve_residuals: Vec<NamedResidual>,
    pub derived_identities: Vec<NamedResidual>,
    pub notes: Vec<String>,
}

fn rel_terms(value: C, terms: &[C]) -> f64 {
    let s: f64 = terms.iter().map(|t| t.norm()).sum();
    value.norm() / s.max(1e-300)
}

fn branch_tests(
    fam: &dyn WeightFamily,
    points: &[SamplePoint],
    coeff: &CoeffOptions,
) -> Result<BranchTests> {
    let mut t = BranchTests {
        free_fermion: 0.0,
        baxter_shape: 0.0,
        baxter_curve: 0.0,
        trivial_a_shape: 0.0,
        trivial_b_shape: 0.0,
    };
    for p in points {
        let [u, _, x, y, _] = p.complex();
        let w = fam.weights(u, x, y)?;
        let [a1, a4, a5, a6, a7] = pick(&w);
        let a8 = w.a(8);
        let scale = w.max_abs().max(1.0);
        t.free_fermion = t.free_fermion.max(rel_terms(
            free_fermion_residual(&w),
            &[a1 * a4, a5 * a6, re(1.0), a7 * a7],
        ));
        t.baxter_shape = t
            .baxter_shape
            .max(((a1 - a4).norm()).max((a5 - a6).norm()) / scale);
        let common = ((a1 - a4).norm())
            .max((a5 * a5 - a1 * a1).norm() / (scale * scale))
            .max((a7 - a8).norm() / scale);
        t.trivial_a_shape = t
            .trivial_a_shape
            .max(common.max((a5 - a6).norm() / scale).max((a7 * a7 - 1.0).norm()));
        t.trivial_b_shape = t
            .trivial_b_shape
            .max(common.max((a5 + a6).norm() / scale).max((a7 * a7 + 1.0).norm()));
        if let Ok(m) = coeffs_at(fam, p.eta, coeff) {
            let (al, be, ga) = (m.m(7), m.m(5), m.m(1));
            let curve = baxter_curve_residual(&w, al, be, ga);
            t.baxter_curve = t.baxter_curve.max(rel_terms(
                curve,
                &[
                    al * al * a1 * a1 * a5 * a5,
                    be * be * a5 * a5,
                    be * be * a1 * a1,
                    be * ga * a1 * a5 * 2.0,
                    be * be,
                ],
            ));
        } else {
            t.baxter_curve = f64::INFINITY;
        }
    }
    Ok(t)
}

/// Decides the solution type of `fam`.
///
/// 1. Median scale-free Yang-Baxter residual above `solution_tol`: not a solution.
/// 2. A weight vanishing on every sample: not eight-vertex.
/// 3. Reduce to gauge form; if the initial condition fails, match the two
///    trivial shapes.
/// 4. Otherwise the free-fermion condition, or the Baxter shape together
///    with the biquadratic curve at measured coefficients. Both or neither
///    is indeterminate.
pub fn classify(fam: SharedFamily, plan: &ClassifyPlan) -> ClassificationReport {
    let mut rng = sampling::rng(plan.seed);
    let evaluated = sampling::pole_free_residuals(fam.as_ref(), plan.samples, &plan.domain, &mut rng);
    let points: Vec<SamplePoint> = evaluated.iter().map(|(p, _)| *p).collect();
    let relative: Vec<f64> = evaluated.iter().map(|(_, r)| r.relative).collect();
    let worst_component = evaluated
        .iter()
        .map(|(_, r)| r.worst())
        .fold(None, |acc: Option<(EquationId, f64)>, c| match acc {
            Some(a) if a.1 >= c.1 => Some(a),
            _ => Some(c),
        });
    let ybe = ResidualStats::from_relative(&relative, worst_component);

    let mut report = ClassificationReport {
        family: fam.label(),
        verdict: Verdict::Indeterminate,
        is_gauge: false,
        gauge_defect: f64::NAN,
        initial_condition_ok: false,
        initial_condition_residual: None,
        ybe,
        eight_vertex: false,
        gauge_certificate: None,
        branch: None,
        branch_tests: None,
        coefficient_invariants: Vec::new(),
        curve_residuals: Vec::new(),
        derived_identities: Vec::new(),
        notes: Vec::new(),
    };

    let triples: Vec<[WeightVector; 3]> = points
        .iter()
        .filter_map(|p| p.triple(fam.as_ref()).ok())
        .collect();
    report.gauge_defect = triples
        .iter()
        .flatten()
        .map(WeightVector::gauge_defect)
        .fold(0.0, f64::max);
    report.is_gauge = report.gauge_defect <= GAUGE_TOL;

    if points.len() < plan.samples {
        report.notes.push(format!(
            "only {} of {} sample points were pole-free",
            points.len(),
            plan.samples
        ));
    }
    if points.is_empty() || !(report.ybe.median <= plan.solution_tol) {
        report.verdict = Verdict::NotASolution;
        return report;
    }

    let scale = triples.iter().flatten().fold(0.0f64, |m, w| m.max(w.max_abs()));
    for i in 1..=8 {
        if triples
            .iter()
            .flatten()
            .all(|w| w.a(i).norm() <= 1e-14 * scale.max(1.0))
        {
            report.verdict = Verdict::NotEightVertex;
            report.notes.push(format!("a{i} vanishes on every sample"));
            return report;
        }
    }
    report.eight_vertex = true;

    let [lo, hi] = plan.domain.colors;
    let gauge_opts = GaugeOptions {
        u_anchor: plan.u_anchor,
        color_anchor: lo + 0.5 * (hi - lo),
        samples: points
            .iter()
            .take(4)
            .map(|p| [p.u, p.v, p.xi, p.eta, p.lambda])
            .collect(),
    };
    let (gauge, cert) = match gauge_reduce(fam.clone(), &gauge_opts) {
        Ok(r) => r,
        Err(e) => {
            report.notes.push(format!("gauge reduction failed: {e}"));
            return report;
        }
    };
    report.gauge_certificate = Some(cert);

    let colours: Vec<f64> = points.iter().flat_map(|p| [p.xi, p.eta]).take(8).collect();
    match initial_condition_residual(gauge.as_ref(), &colours) {
        Ok(r) => {
            report.initial_condition_residual = Some(r);
            report.initial_condition_ok = r <= GAUGE_TOL;
        }
        Err(e) => report.notes.push(format!("initial condition: {e}")),
    }

    let tests = match branch_tests(gauge.as_ref(), &points, &plan.coeff) {
        Ok(t) => t,
        Err(e) => {
            report.notes.push(format!("branch tests failed: {e}"));
            return report;
        }
    };
    report.branch_tests = Some(tests);
    let tol = plan.branch_tol;

    if !report.initial_condition_ok {
        let (a, b) = (tests.trivial_a_shape <= tol, tests.trivial_b_shape <= tol);
        report.verdict = match (a, b) {
            (true, false) => Verdict::TrivialA,
            (false, true) => Verdict::TrivialB,
            _ => Verdict::Indeterminate,
        };
        if report.verdict == Verdict::Indeterminate {
            report
                .notes
                .push("initial condition fails and no trivial shape matches".into());
        }
    } else {
        let ff = tests.free_fermion <= tol;
        let bx = tests.baxter_shape <= tol && tests.baxter_curve <= tol;
        report.verdict = match (ff, bx) {
            (true, false) => Verdict::FreeFermion,
            (false, true) => Verdict::Baxter,
            (true, true) => {
                report
                    .notes
                    .push("both the free-fermion condition and the curve hold".into());
                Verdict::Indeterminate
            }
            (false, false) => {
                report.notes.push("neither branch condition holds".into());
                Verdict::Indeterminate
            }
        };
    }

    if plan.suites {
        let grid: Vec<f64> = (0..plan.grid_points.max(2))
            .map(|i| lo + (hi - lo) * i as f64 / (plan.grid_points.max(2) - 1) as f64)
            .collect();
        match hamiltonian_coeffs(gauge.as_ref(), &grid, &plan.coeff) {
            Ok(coeffs) => {
                report.branch = Some(select_branch(&coeffs));
                report.coefficient_invariants = invariant_suite(&coeffs);
                let opts = SuiteOptions {
                    coeff: plan.coeff,
                    ..SuiteOptions::default()
                };
                let few: Vec<SamplePoint> = points.iter().take(8).copied().collect();
                if report.initial_condition_ok {
                    match curve_residuals(gauge.as_ref(), &coeffs, &few, &opts) {
                        Ok(r) => report.curve_residuals = r,
                        Err(e) => report.notes.push(format!("curve residuals: {e}")),
                    }
                }
                match derived_identity_suite(gauge.as_ref(), &coeffs, &few, &opts) {
                    Ok(r) => report.derived_identities = r,
                    Err(e) => report.notes.push(format!("derived identities: {e}")),
                }
            }
            Err(e) => report.notes.push(format!("coefficients: {e}")),
        }
    }
    report
}

/// Draws `n` colours from the plan's domain, for coefficient grids.
pub fn random_colours(n: usize, domain: &SampleDomain, seed: u64) -> Vec<f64> {
    let mut rng = sampling::rng(seed);
    let [lo, hi] = domain.colors;
    (0..n).map(|_| rng.gen_range(lo..=hi)).collect()
}
