//! Seeded sample points, random family parameterisations and random
//! transformation pipelines.
//!
//! Draws are sequential from a ChaCha stream so that a seed fixes every
//! sweep; evaluation may run in parallel but results keep draw order.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::families::{FamilyId, FamilySpec, Signs, WeightFamily};
use crate::numkernel::{re, ComplexScalar};
use crate::profiles::ProfileSpec;
use crate::transforms::{Pipeline, TransformSpec};
use crate::weights::{ybe_residual, ResidualReport, WeightVector};

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One `(u, v, ξ, η, λ)` argument set of the Yang-Baxter equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub u: f64,
    pub v: f64,
    pub xi: f64,
    pub eta: f64,
    pub lambda: f64,
}

impl SamplePoint {
    pub fn complex(&self) -> [ComplexScalar; 5] {
        [self.u, self.v, self.xi, self.eta, self.lambda].map(re)
    }

    /// Weights at `(u, ξ, η)`, `(u+v, ξ, λ)`, `(v, η, λ)`.
    pub fn triple(&self, fam: &dyn WeightFamily) -> Result<[WeightVector; 3]> {
        let [u, v, x, y, l] = self.complex();
        Ok([
            fam.weights(u, x, y)?,
            fam.weights(u + v, x, l)?,
            fam.weights(v, y, l)?,
        ])
    }

    pub fn residual(&self, fam: &dyn WeightFamily) -> Result<ResidualReport> {
        let [ru, rw, rv] = self.triple(fam)?;
        Ok(ybe_residual(&ru, &rw, &rv))
    }
}

/// Domain from which sample points are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleDomain {
    /// `u` and `v` are drawn from `[-u_max, u_max]`.
    pub u_max: f64,
    pub colors: [f64; 2],
}

impl Default for SampleDomain {
    fn default() -> Self {
        Self {
            u_max: 0.4,
            colors: crate::families::DEFAULT_COLOR_DOMAIN,
        }
    }
}

impl SampleDomain {
    pub fn for_spec(spec: &FamilySpec) -> Self {
        Self {
            colors: spec.color_domain,
            ..Self::default()
        }
    }

    pub fn draw(&self, rng: &mut SampleRng) -> SamplePoint {
        let [lo, hi] = self.colors;
        let mut c = || rng.gen_range(lo..=hi);
        let (xi, eta, lambda) = (c(), c(), c());
        SamplePoint {
            u: rng.gen_range(-self.u_max..=self.u_max),
            v: rng.gen_range(-self.u_max..=self.u_max),
            xi,
            eta,
            lambda,
        }
    }
}

/// Draws points until `n` of them evaluate without error (or `10 n` draws are
/// spent). Returns the points with their residual reports, in draw order.
pub fn pole_free_residuals(
    fam: &dyn WeightFamily,
    n: usize,
    domain: &SampleDomain,
    rng: &mut SampleRng,
) -> Vec<(SamplePoint, ResidualReport)> {
    let mut out = Vec::with_capacity(n);
    let mut budget = 10 * n.max(1);
    while out.len() < n && budget > 0 {
        let want = (n - out.len()).min(budget);
        budget -= want;
        let batch: Vec<SamplePoint> = (0..want).map(|_| domain.draw(rng)).collect();
        let evaluated: Vec<Option<(SamplePoint, ResidualReport)>> = batch
            .par_iter()
            .map(|p| p.residual(fam).ok().map(|r| (*p, r)))
            .collect();
        out.extend(evaluated.into_iter().flatten());
    }
    out
}

fn sign(rng: &mut SampleRng) -> i8 {
    if rng.gen_bool(0.5) {
        1
    } else {
        -1
    }
}

fn random_signs(rng: &mut SampleRng) -> Signs {
    Signs {
        s5: sign(rng),
        s7: sign(rng),
        delta: sign(rng),
        sy: sign(rng),
    }
}

/// A small colour shift `F` (linear or quadratic).
fn random_shift(rng: &mut SampleRng) -> ProfileSpec {
    if rng.gen_bool(0.5) {
        ProfileSpec::linear(rng.gen_range(-0.5..0.5), rng.gen_range(-0.2..0.2))
    } else {
        ProfileSpec::quadratic(rng.gen_range(-0.5..0.5), rng.gen_range(-0.3..0.3), 0.0)
    }
}

/// A `G² − H² = 1` pair with positive hyperbolic angle on positive colours.
fn random_gh(rng: &mut SampleRng) -> (ProfileSpec, ProfileSpec) {
    match rng.gen_range(0..3) {
        0 => (ProfileSpec::cosh2(), ProfileSpec::sinh2()),
        1 => {
            let (a, b) = (rng.gen_range(1.0..2.5), rng.gen_range(0.0..0.3));
            (ProfileSpec::cosh(a, b), ProfileSpec::sinh(a, b))
        }
        _ => {
            let k = rng.gen_range(0.2..0.8);
            (ProfileSpec::recip_sn(k), ProfileSpec::cn_over_sn(k))
        }
    }
}

fn rate(rng: &mut SampleRng) -> f64 {
    f64::from(sign(rng)) * rng.gen_range(0.5..1.2)
}

/// A random valid parameterisation of `id`, within ranges that keep the
/// default sample domain away from poles and branch cuts.
pub fn random_spec(id: FamilyId, rng: &mut SampleRng) -> FamilySpec {
    let signs = random_signs(rng);
    let spec = FamilySpec::new(id).with_signs(signs);
    match id {
        FamilyId::BaxterElliptic => spec
            .with_k(rng.gen_range(0.2..0.8))
            .with_lambda(rate(rng))
            .with_mu(rng.gen_range(0.3..1.0))
            .with_f(random_shift(rng)),
        FamilyId::BaxterTrig => spec
            .with_lambda(rate(rng))
            .with_mu(rng.gen_range(0.3..0.8))
            .with_f(random_shift(rng)),
        FamilyId::FfElliptic => {
            let (g, h) = random_gh(rng);
            spec.with_k(rng.gen_range(0.2..0.8))
                .with_lambda(rate(rng))
                .with_f(random_shift(rng))
                .with_g(g)
                .with_h(h)
        }
        FamilyId::FfTanh => {
            let (g, h) = random_gh(rng);
            spec.with_lambda(rate(rng))
                .with_f(random_shift(rng))
                .with_g(g)
                .with_h(h)
        }
        FamilyId::FfTrig => {
            let g = if rng.gen_bool(0.5) {
                ProfileSpec::linear(rng.gen_range(0.2..1.0), rng.gen_range(0.5..1.5))
            } else {
                ProfileSpec::exp(rng.gen_range(-1.0..1.0), rng.gen_range(0.5..1.5))
            };
            spec.with_lambda(rate(rng)).with_f(random_shift(rng)).with_g(g)
        }
        FamilyId::FfHyperbolic => spec
            .with_lambda(rate(rng))
            .with_mu(f64::from(sign(rng)) * rng.gen_range(0.2..0.9))
            .with_f(random_shift(rng))
            .with_g(random_shift(rng)),
        FamilyId::TrivialA => {
            let h = if rng.gen_bool(0.5) {
                ProfileSpec::sin_u_xi_eta(rng.gen_range(0.5..2.0))
            } else {
                ProfileSpec::product(vec![
                    ProfileSpec::exp_u(rng.gen_range(-1.0..1.0), 1.0),
                    ProfileSpec::affine_field([
                        rng.gen_range(0.5..1.5),
                        rng.gen_range(-0.5..0.5),
                        rng.gen_range(-0.5..0.5),
                        rng.gen_range(-0.5..0.5),
                        rng.gen_range(-0.5..0.5),
                    ]),
                ])
            };
            FamilySpec::new(id).with_h(h)
        }
        FamilyId::TrivialB => {
            let f = if rng.gen_bool(0.5) {
                ProfileSpec::quadratic(rng.gen_range(-1.0..1.0), rng.gen_range(-0.5..0.5), rng.gen_range(0.8..1.5))
            } else {
                ProfileSpec::exp(rng.gen_range(-1.0..1.0), rng.gen_range(0.5..1.5))
            };
            FamilySpec::new(id).with_f(f)
        }
        FamilyId::Murakami | FamilyId::BazhanovStroganov => {
            FamilySpec::new(id).with_k(rng.gen_range(0.2..0.8))
        }
    }
}

/// A random transformation with a payload valid on the default domain.
pub fn random_transform(rng: &mut SampleRng) -> TransformSpec {
    match rng.gen_range(0..7) {
        0 => TransformSpec::A1,
        1 => TransformSpec::A2,
        2 => TransformSpec::scale(
            [
                ProfileSpec::exp_u(rng.gen_range(-1.0..1.0), rng.gen_range(0.5..2.0)),
                ProfileSpec::affine_field([
                    rng.gen_range(1.0..2.0),
                    rng.gen_range(-0.5..0.5),
                    rng.gen_range(-0.5..0.5),
                    rng.gen_range(-0.5..0.5),
                    rng.gen_range(-0.5..0.5),
                ]),
                ProfileSpec::cosh(rng.gen_range(0.5..2.0), 0.0),
            ]
            .choose(rng)
            .expect("nonempty")
            .clone(),
        ),
        3 => TransformSpec::regauge(
            ProfileSpec::exp(rng.gen_range(-1.5..1.5), rng.gen_range(0.5..2.0)),
            ComplexScalar::new(rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0)),
        ),
        4 => TransformSpec::flip(),
        5 => TransformSpec::rescale(rng.gen_range(0.6..1.25)),
        _ => TransformSpec::recolor(ProfileSpec::linear(
            rng.gen_range(0.5..1.2),
            rng.gen_range(0.0..0.1),
        )),
    }
}

pub fn random_pipeline(rng: &mut SampleRng, len: usize) -> Pipeline {
    Pipeline((0..len).map(|_| random_transform(rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{validate_spec, Family};

    #[test]
    fn seeds_are_reproducible() {
        let d = SampleDomain::default();
        let a: Vec<SamplePoint> = (0..5).map({
            let mut r = rng(7);
            move |_| d.draw(&mut r)
        }).collect();
        let b: Vec<SamplePoint> = (0..5).map({
            let mut r = rng(7);
            move |_| d.draw(&mut r)
        }).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn random_specs_validate() {
        let mut r = rng(11);
        for id in FamilyId::SOLUTIONS {
            for _ in 0..10 {
                let s = random_spec(id, &mut r);
                let d = validate_spec(&s);
                assert!(d.iter().all(|d| !d.is_error()), "{id}: {d:?}");
            }
        }
    }

    #[test]
    fn random_transforms_validate() {
        let mut r = rng(3);
        for _ in 0..100 {
            assert!(random_transform(&mut r).validate().is_empty());
        }
    }

    #[test]
    fn residual_sweep_keeps_order() {
        let fam = Family::new(FamilySpec::new(FamilyId::FfTanh)).unwrap();
        let d = SampleDomain::default();
        let a = pole_free_residuals(&fam, 16, &d, &mut rng(5));
        let b = pole_free_residuals(&fam, 16, &d, &mut rng(5));
        assert_eq!(a.len(), 16);
        assert_eq!(a, b);
    }
}
