//! Weight vectors, their 4x4 R-matrix, and the Yang-Baxter residuals.
//!
//! Basis order of the two-dimensional factor is `(1, 2)`; the four-dimensional
//! space is ordered `11, 12, 21, 22` and the eight-dimensional space
//! `111, 112, ..., 222`, with the first tensor factor as the slowest index.
//! Under that pairing `(A ⊗ B)[(i,a),(j,b)] = A[i][j] * B[a][b]` and the
//! R-matrix layout is
//!
//! ```text
//! | a1  0   0   a7 |
//! | 0   a2  a5  0  |
//! | 0   a6  a3  0  |
//! | a8  0   0   a4 |
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Result, YbeError};
use crate::families::WeightFamily;
use crate::numkernel::{re, ComplexScalar};

pub type Matrix4 = [[ComplexScalar; 4]; 4];
pub type Matrix8 = [[ComplexScalar; 8]; 8];

const ZERO: ComplexScalar = ComplexScalar::new(0.0, 0.0);

/// Gauge conditions `a2 = a3 = 1`, `a7 = a8` are checked to this tolerance.
pub const GAUGE_TOL: f64 = 1e-10;

/// The eight weights `a1..a8` at one `(u, xi, eta)` point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightVector(pub [ComplexScalar; 8]);

impl WeightVector {
    pub fn new(a: [ComplexScalar; 8]) -> Self {
        Self(a)
    }

    pub fn from_real(a: [f64; 8]) -> Self {
        Self(a.map(re))
    }

    /// Weight `a_i`, 1-based as in the usual labelling.
    #[inline]
    pub fn a(&self, i: usize) -> ComplexScalar {
        self.0[i - 1]
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: ComplexScalar) {
        self.0[i - 1] = value;
    }

    pub fn identity() -> Self {
        Self::from_real([1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0])
    }

    pub fn scaled(&self, g: ComplexScalar) -> Self {
        Self(self.0.map(|a| a * g))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, a| m.max(a.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }

    /// Largest componentwise distance to `other`.
    pub fn distance(&self, other: &WeightVector) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn to_matrix(&self) -> RMatrix {
        to_matrix(self)
    }

    /// Largest violation of `a2 = a3 = 1`, `a7 = a8`.
    pub fn gauge_defect(&self) -> f64 {
        let scale = 1.0f64.max(self.a(7).norm());
        (self.a(2) - 1.0)
            .norm()
            .max((self.a(3) - 1.0).norm())
            .max((self.a(7) - self.a(8)).norm() / scale)
    }
}

/// The 4x4 matrix realisation of a weight vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RMatrix(pub Matrix4);

impl RMatrix {
    pub fn identity() -> Self {
        to_matrix(&WeightVector::identity())
    }

    /// Reads the eight designated entries back into a weight vector.
    pub fn weights(&self) -> WeightVector {
        let m = &self.0;
        WeightVector([
            m[0][0], m[1][1], m[2][2], m[3][3], m[1][2], m[2][1], m[0][3], m[3][0],
        ])
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .fold(0.0, |m, a| m.max(a.norm()))
    }

    pub fn mul(&self, other: &RMatrix) -> RMatrix {
        let mut out = [[ZERO; 4]; 4];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..4).map(|l| self.0[i][l] * other.0[l][j]).sum();
            }
        }
        RMatrix(out)
    }
}

pub fn to_matrix(w: &WeightVector) -> RMatrix {
    let mut m = [[ZERO; 4]; 4];
    m[0][0] = w.a(1);
    m[1][1] = w.a(2);
    m[2][2] = w.a(3);
    m[3][3] = w.a(4);
    m[1][2] = w.a(5);
    m[2][1] = w.a(6);
    m[0][3] = w.a(7);
    m[3][0] = w.a(8);
    RMatrix(m)
}

/// Which pair of the three tensor factors the R-matrix acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    /// `R ⊗ E`
    S12,
    /// `E ⊗ R`
    S23,
}

/// Embeds `R` into the three-fold tensor space.
pub fn tensor_embed(r: &RMatrix, slot: Slot) -> Matrix8 {
    let mut out = [[ZERO; 8]; 8];
    match slot {
        Slot::S12 => {
            for i in 0..4 {
                for j in 0..4 {
                    for a in 0..2 {
                        out[2 * i + a][2 * j + a] = r.0[i][j];
                    }
                }
            }
        }
        Slot::S23 => {
            for a in 0..2 {
                for i in 0..4 {
                    for j in 0..4 {
                        out[4 * a + i][4 * a + j] = r.0[i][j];
                    }
                }
            }
        }
    }
    out
}

fn mul8(x: &Matrix8, y: &Matrix8) -> Matrix8 {
    let mut out = [[ZERO; 8]; 8];
    for i in 0..8 {
        for l in 0..8 {
            let xil = x[i][l];
            if xil == ZERO {
                continue;
            }
            for j in 0..8 {
                out[i][j] += xil * y[l][j];
            }
        }
    }
    out
}

/// Identifier of one of the 28 component equations, e.g. `1.4b.3`.
pub type EquationId = &'static str;

/// One product term `sign * u_i * w_j * v_k`.
type Term = (i8, usize, usize, usize);

struct ComponentEquation {
    id: EquationId,
    terms: &'static [Term],
}

const fn eq(id: EquationId, terms: &'static [Term]) -> ComponentEquation {
    ComponentEquation { id, terms }
}

/// The 28 component equations, with `u = a(u, xi, eta)`, `w = a(u+v, xi, lambda)`,
/// `v = a(v, eta, lambda)`. Terms are `(sign, u index, w index, v index)`.
const COMPONENTS: [ComponentEquation; 28] = [
    eq("1.4a.1", &[(1, 7, 3, 8), (-1, 8, 2, 7)]),
    eq("1.4a.2", &[(1, 7, 8, 3), (-1, 8, 7, 2)]),
    eq("1.4a.3", &[(1, 2, 3, 2), (-1, 3, 2, 3)]),
    eq("1.4a.4", &[(1, 2, 8, 7), (-1, 3, 7, 8)]),
    eq("1.4b.1", &[(1, 1, 5, 2), (1, 7, 8, 6), (-1, 5, 1, 2), (-1, 3, 2, 5)]),
    eq("1.4b.2", &[(1, 1, 1, 7), (1, 7, 3, 4), (-1, 5, 5, 7), (-1, 3, 7, 1)]),
    eq("1.4b.3", &[(1, 2, 6, 1), (1, 5, 7, 8), (-1, 2, 1, 6), (-1, 6, 2, 3)]),
    eq("1.4b.4", &[(1, 1, 2, 1), (1, 7, 4, 8), (-1, 2, 1, 2), (-1, 6, 2, 5)]),
    eq("1.4b.5", &[(1, 1, 7, 5), (1, 7, 6, 3), (-1, 2, 5, 7), (-1, 6, 7, 1)]),
    eq("1.4b.6", &[(1, 1, 7, 2), (1, 7, 6, 6), (-1, 7, 1, 1), (-1, 4, 2, 7)]),
    eq("1.4c.1", &[(1, 4, 6, 2), (1, 7, 8, 5), (-1, 6, 4, 2), (-1, 3, 2, 6)]),
    eq("1.4c.2", &[(1, 4, 4, 7), (1, 7, 3, 1), (-1, 6, 6, 7), (-1, 3, 7, 4)]),
    eq("1.4c.3", &[(1, 2, 5, 4), (1, 6, 7, 8), (-1, 2, 4, 5), (-1, 5, 2, 3)]),
    eq("1.4c.4", &[(1, 4, 2, 4), (1, 7, 1, 8), (-1, 2, 4, 2), (-1, 5, 2, 6)]),
    eq("1.4c.5", &[(1, 4, 7, 6), (1, 7, 5, 3), (-1, 2, 6, 7), (-1, 5, 7, 4)]),
    eq("1.4c.6", &[(1, 4, 7, 2), (1, 7, 5, 5), (-1, 7, 4, 4), (-1, 1, 2, 7)]),
    eq("1.4d.1", &[(1, 1, 5, 3), (1, 8, 7, 6), (-1, 5, 1, 3), (-1, 2, 3, 5)]),
    eq("1.4d.2", &[(1, 1, 1, 8), (1, 8, 2, 4), (-1, 5, 5, 8), (-1, 2, 8, 1)]),
    eq("1.4d.3", &[(1, 3, 6, 1), (1, 5, 8, 7), (-1, 3, 1, 6), (-1, 6, 3, 2)]),
    eq("1.4d.4", &[(1, 1, 3, 1), (1, 8, 4, 7), (-1, 3, 1, 3), (-1, 6, 3, 5)]),
    eq("1.4d.5", &[(1, 1, 8, 5), (1, 8, 6, 2), (-1, 3, 5, 8), (-1, 6, 8, 1)]),
    eq("1.4d.6", &[(1, 1, 8, 3), (1, 8, 6, 6), (-1, 8, 1, 1), (-1, 4, 3, 8)]),
    eq("1.4e.1", &[(1, 4, 6, 3), (1, 8, 7, 5), (-1, 6, 4, 3), (-1, 2, 3, 6)]),
    eq("1.4e.2", &[(1, 4, 4, 8), (1, 8, 2, 1), (-1, 6, 6, 8), (-1, 2, 8, 4)]),
    eq("1.4e.3", &[(1, 3, 5, 4), (1, 6, 8, 7), (-1, 3, 4, 5), (-1, 5, 3, 2)]),
    eq("1.4e.4", &[(1, 4, 3, 4), (1, 8, 1, 7), (-1, 3, 4, 3), (-1, 5, 3, 6)]),
    eq("1.4e.5", &[(1, 4, 8, 6), (1, 8, 5, 2), (-1, 3, 6, 8), (-1, 5, 8, 4)]),
    eq("1.4e.6", &[(1, 4, 8, 3), (1, 8, 5, 5), (-1, 8, 4, 4), (-1, 1, 3, 8)]),
];

/// Ids of all component equations in order.
pub fn component_ids() -> impl Iterator<Item = EquationId> {
    COMPONENTS.iter().map(|c| c.id)
}

/// Ids of the components that reduce to the twelve gauge equations.
pub fn gauge_component_ids() -> impl Iterator<Item = EquationId> {
    COMPONENTS
        .iter()
        .map(|c| c.id)
        .filter(|id| id.starts_with("1.4b") || id.starts_with("1.4c"))
}

/// Defect norms of one Yang-Baxter evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    /// Max-abs entry of the 8x8 defect.
    pub matrix_norm: f64,
    /// `|lhs - rhs|` of each component equation, in `1.4a.1 .. 1.4e.6` order.
    pub component_norms: Vec<(EquationId, f64)>,
    pub max_component: f64,
    /// Product of the max-abs entries of the three R-matrices.
    pub scale: f64,
    /// `matrix_norm / scale` (or the raw norm when the scale vanishes).
    pub relative: f64,
}

impl ResidualReport {
    pub fn component(&self, id: &str) -> Option<f64> {
        self.component_norms
            .iter()
            .find(|(k, _)| *k == id)
            .map(|(_, v)| *v)
    }

    /// Worst component, id and raw value.
    pub fn worst(&self) -> (EquationId, f64) {
        self.component_norms
            .iter()
            .copied()
            .fold(("", 0.0), |acc, c| if c.1 > acc.1 { c } else { acc })
    }
}

/// Yang-Baxter defect of the triple `ru = a(u, xi, eta)`, `rw = a(u+v, xi, lambda)`,
/// `rv = a(v, eta, lambda)`.
///
/// The matrix route multiplies the embedded 8x8 matrices; the component route
/// evaluates the 28 scalar equations term by term. Both are reported.
pub fn ybe_residual(ru: &WeightVector, rw: &WeightVector, rv: &WeightVector) -> ResidualReport {
    let (mu, mw, mv) = (to_matrix(ru), to_matrix(rw), to_matrix(rv));
    let lhs = mul8(
        &mul8(&tensor_embed(&mu, Slot::S12), &tensor_embed(&mw, Slot::S23)),
        &tensor_embed(&mv, Slot::S12),
    );
    let rhs = mul8(
        &mul8(&tensor_embed(&mv, Slot::S23), &tensor_embed(&mw, Slot::S12)),
        &tensor_embed(&mu, Slot::S23),
    );
    let mut matrix_norm = 0.0f64;
    for i in 0..8 {
        for j in 0..8 {
            matrix_norm = matrix_norm.max((lhs[i][j] - rhs[i][j]).norm());
        }
    }

    let component_norms: Vec<(EquationId, f64)> = COMPONENTS
        .iter()
        .map(|c| {
            let value: ComplexScalar = c
                .terms
                .iter()
                .map(|&(s, i, j, k)| ru.a(i) * rw.a(j) * rv.a(k) * f64::from(s))
                .sum();
            (c.id, value.norm())
        })
        .collect();
    let max_component = component_norms.iter().fold(0.0f64, |m, c| m.max(c.1));

    let scale = mu.max_abs() * mw.max_abs() * mv.max_abs();
    let relative = if scale > 0.0 {
        matrix_norm / scale
    } else {
        matrix_norm
    };
    ResidualReport {
        matrix_norm,
        component_norms,
        max_component,
        scale,
        relative,
    }
}

/// Evaluates a family at the argument pattern of the Yang-Baxter equation and
/// returns the residual report.
pub fn family_ybe_residual(
    fam: &dyn WeightFamily,
    u: ComplexScalar,
    v: ComplexScalar,
    xi: ComplexScalar,
    eta: ComplexScalar,
    lambda: ComplexScalar,
) -> Result<ResidualReport> {
    let ru = fam.weights(u, xi, eta)?;
    let rw = fam.weights(u + v, xi, lambda)?;
    let rv = fam.weights(v, eta, lambda)?;
    Ok(ybe_residual(&ru, &rw, &rv))
}

fn require_gauge(w: &WeightVector) -> Result<()> {
    let defect = w.gauge_defect();
    if defect > GAUGE_TOL {
        return Err(YbeError::NotGauge {
            detail: format!("gauge defect {defect:e}"),
        });
    }
    Ok(())
}

/// The six reduced gauge equations with `u = a(u,xi,eta)`, `w = a(u+v,xi,lambda)`,
/// `v = a(v,eta,lambda)`, after substituting `a2 = a3 = 1`, `a7 = a8`.
fn gauge_six(u: &WeightVector, w: &WeightVector, v: &WeightVector) -> [ComplexScalar; 6] {
    let (u1, u4, u5, u6, u7) = (u.a(1), u.a(4), u.a(5), u.a(6), u.a(7));
    let (w1, w4, w5, w6, w7) = (w.a(1), w.a(4), w.a(5), w.a(6), w.a(7));
    let (v1, v4, v5, v6, v7) = (v.a(1), v.a(4), v.a(5), v.a(6), v.a(7));
    [
        v5 + u5 * w1 - u1 * w5 - u7 * w7 * v6,
        w7 * v1 + u5 * w5 * v7 - u1 * w1 * v7 - u7 * v4,
        u6 + w1 * v6 - w6 * v1 - u5 * w7 * v7,
        u6 * v5 + w1 - u1 * v1 - u7 * w4 * v7,
        u6 * w7 * v1 + w5 * v7 - u1 * w7 * v5 - u7 * w6,
        u7 * w1 * v1 + u4 * v7 - u1 * w7 - u7 * w6 * v6,
    ]
}

/// Interchanges the labels `1 <-> 4` and `5 <-> 6`.
pub(crate) fn swap_14_56(w: &WeightVector) -> WeightVector {
    let mut out = *w;
    out.set(1, w.a(4));
    out.set(4, w.a(1));
    out.set(5, w.a(6));
    out.set(6, w.a(5));
    out
}

/// Max-abs residual of the twelve reduced gauge equations (six plus their
/// `1 <-> 4`, `5 <-> 6` counterparts).
pub fn gauge_ybe_residual(
    fam: &dyn WeightFamily,
    u: ComplexScalar,
    v: ComplexScalar,
    xi: ComplexScalar,
    eta: ComplexScalar,
    lambda: ComplexScalar,
) -> Result<f64> {
    let ru = fam.weights(u, xi, eta)?;
    let rw = fam.weights(u + v, xi, lambda)?;
    let rv = fam.weights(v, eta, lambda)?;
    gauge_ybe_residual_of(&ru, &rw, &rv)
}

/// [`gauge_ybe_residual`] on already evaluated weights.
pub fn gauge_ybe_residual_of(
    ru: &WeightVector,
    rw: &WeightVector,
    rv: &WeightVector,
) -> Result<f64> {
    for w in [ru, rw, rv] {
        require_gauge(w)?;
    }
    let direct = gauge_six(ru, rw, rv);
    let counter = gauge_six(&swap_14_56(ru), &swap_14_56(rw), &swap_14_56(rv));
    Ok(direct
        .iter()
        .chain(counter.iter())
        .fold(0.0, |m, r| m.max(r.norm())))
}

/// Max-abs entry of `R(u,xi,eta) R(-u,eta,xi) - (1 - a5 a6) E` for a gauge family.
pub fn unitarity_residual(
    fam: &dyn WeightFamily,
    u: ComplexScalar,
    xi: ComplexScalar,
    eta: ComplexScalar,
) -> Result<f64> {
    let fwd = fam.weights(u, xi, eta)?;
    let back = fam.weights(-u, eta, xi)?;
    require_gauge(&fwd)?;
    require_gauge(&back)?;
    let prod = to_matrix(&fwd).mul(&to_matrix(&back));
    let factor = re(1.0) - fwd.a(5) * fwd.a(6);
    let mut worst = 0.0f64;
    for (i, row) in prod.0.iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            let target = if i == j { factor } else { ZERO };
            worst = worst.max((p - target).norm());
        }
    }
    Ok(worst)
}

/// `a1 a4 + a5 a6 - 1 - a7^2`, the gauge form of the free-fermion condition.
pub fn free_fermion_residual(w: &WeightVector) -> ComplexScalar {
    w.a(1) * w.a(4) + w.a(5) * w.a(6) - 1.0 - w.a(7) * w.a(7)
}

/// The biquadratic curve in `(a1, a5)` of the Baxter branch:
/// `α² a1² a5² − β² a5² − β² a1² + 2βγ a1 a5 + β²`.
pub fn baxter_curve_residual(
    w: &WeightVector,
    alpha: ComplexScalar,
    beta: ComplexScalar,
    gamma: ComplexScalar,
) -> ComplexScalar {
    let (a1, a5) = (w.a(1), w.a(5));
    let (b2, a2) = (beta * beta, alpha * alpha);
    a2 * a1 * a1 * a5 * a5 - b2 * a5 * a5 - b2 * a1 * a1 + 2.0 * beta * gamma * a1 * a5 + b2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::I;

    fn sample(seed: u64) -> WeightVector {
        // Small deterministic LCG; keeps the unit tests free of RNG plumbing.
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let mut a = [ZERO; 8];
        for x in a.iter_mut() {
            *x = ComplexScalar::new(next(), next());
        }
        WeightVector(a)
    }

    #[test]
    fn identity_layout() {
        let m = to_matrix(&WeightVector::identity());
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { re(1.0) } else { ZERO };
                assert_eq!(m.0[i][j], want);
            }
        }
    }

    #[test]
    fn corners_only() {
        let m = to_matrix(&WeightVector::from_real([0., 0., 0., 0., 0., 0., 1., 1.]));
        for i in 0..4 {
            for j in 0..4 {
                let want = if (i, j) == (0, 3) || (i, j) == (3, 0) { re(1.0) } else { ZERO };
                assert_eq!(m.0[i][j], want);
            }
        }
    }

    #[test]
    fn matrix_round_trip() {
        let w = sample(3);
        assert_eq!(to_matrix(&w).weights(), w);
    }

    #[test]
    fn identity_embeds_to_identity() {
        for slot in [Slot::S12, Slot::S23] {
            let m = tensor_embed(&RMatrix::identity(), slot);
            for (i, row) in m.iter().enumerate() {
                for (j, &x) in row.iter().enumerate() {
                    assert_eq!(x, if i == j { re(1.0) } else { ZERO });
                }
            }
        }
    }

    #[test]
    fn identity_triple_has_zero_residual() {
        let id = WeightVector::identity();
        let r = ybe_residual(&id, &id, &id);
        assert_eq!(r.matrix_norm, 0.0);
        assert_eq!(r.max_component, 0.0);
        assert_eq!(r.component_norms.len(), 28);
    }

    #[test]
    fn components_match_matrix_defect() {
        for seed in 0..20 {
            let r = ybe_residual(&sample(seed), &sample(seed + 100), &sample(seed + 200));
            assert!((r.matrix_norm - r.max_component).abs() <= 1e-12 * r.matrix_norm.max(1.0));
        }
    }

    #[test]
    fn gauge_equations_are_the_b_and_c_components() {
        for seed in 0..10 {
            let mut ws = [sample(seed), sample(seed + 50), sample(seed + 90)];
            for w in ws.iter_mut() {
                w.set(2, re(1.0));
                w.set(3, re(1.0));
                w.set(8, w.a(7));
            }
            let report = ybe_residual(&ws[0], &ws[1], &ws[2]);
            let subset = gauge_component_ids()
                .map(|id| report.component(id).unwrap())
                .fold(0.0f64, f64::max);
            let gauge = gauge_ybe_residual_of(&ws[0], &ws[1], &ws[2]).unwrap();
            assert!((gauge - subset).abs() <= 1e-12 * gauge.max(1.0));
        }
    }

    #[test]
    fn non_gauge_input_is_rejected() {
        let w = sample(1);
        assert!(matches!(
            gauge_ybe_residual_of(&w, &w, &w),
            Err(YbeError::NotGauge { .. })
        ));
    }

    #[test]
    fn free_fermion_at_identity() {
        assert_eq!(free_fermion_residual(&WeightVector::identity()), ZERO);
    }

    #[test]
    fn curve_vanishes_at_initial_point() {
        let id = WeightVector::identity();
        for (a, b, c) in [(re(0.3), re(1.2), re(-0.4)), (I, re(2.0), re(5.0))] {
            assert!(baxter_curve_residual(&id, a, b, c).norm() < 1e-15);
        }
    }
}
