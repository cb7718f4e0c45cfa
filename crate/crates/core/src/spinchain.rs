//! Spin-chain couplings from Hamiltonian coefficients and the dense chain
//! Hamiltonian
//!
//! ```text
//! H = Σ_j Jx σˣ_j σˣ_{j+1} + Jy σʸ_j σʸ_{j+1} + Jz σᶻ_j σᶻ_{j+1} + ½ h (σᶻ_j + σᶻ_{j+1})
//! ```
//!
//! Site 1 is the slowest tensor index, and basis state `|0⟩` is spin up
//! (`σᶻ = +1`). Open chains have `N − 1` bonds, periodic chains `N`
//! (so a periodic pair counts its bond twice).

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::CoefficientSample;
use crate::error::{Result, YbeError};
use crate::numkernel::{re, ComplexScalar};

type C = ComplexScalar;

pub const MAX_SITES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingConstants {
    #[serde(rename = "Jx")]
    pub jx: C,
    #[serde(rename = "Jy")]
    pub jy: C,
    #[serde(rename = "Jz")]
    pub jz: C,
    pub h: C,
}

impl CouplingConstants {
    pub fn is_real(&self, tol: f64) -> bool {
        [self.jx, self.jy, self.jz, self.h]
            .iter()
            .all(|c| c.im.abs() <= tol)
    }
}

impl std::ops::Add for CouplingConstants {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            jx: self.jx + o.jx,
            jy: self.jy + o.jy,
            jz: self.jz + o.jz,
            h: self.h + o.h,
        }
    }
}

/// `Jx = ¼(m5+m6+m7+m8)`, `Jy = ¼(m5+m6−m7−m8)`, `Jz = ¼(m1−m3+m4−m2)`,
/// `h = ¼(m1−m3−m4+m2)`.
pub fn couplings(m: &[C; 8]) -> CouplingConstants {
    let [m1, m2, m3, m4, m5, m6, m7, m8] = *m;
    CouplingConstants {
        jx: (m5 + m6 + m7 + m8) / 4.0,
        jy: (m5 + m6 - m7 - m8) / 4.0,
        jz: (m1 - m3 + m4 - m2) / 4.0,
        h: (m1 - m3 - m4 + m2) / 4.0,
    }
}

pub fn couplings_from_coeffs(s: &CoefficientSample) -> CouplingConstants {
    couplings(&s.m)
}

/// Dense `2^N × 2^N` chain Hamiltonian, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOperator {
    pub sites: usize,
    pub periodic: bool,
    pub couplings: CouplingConstants,
    data: Vec<C>,
}

impl ChainOperator {
    pub fn dim(&self) -> usize {
        1 << self.sites
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C {
        self.data[row * self.dim() + col]
    }

    pub fn as_slice(&self) -> &[C] {
        &self.data
    }

    /// `max |H − H†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    pub fn trace(&self) -> C {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    /// One row per matrix row, entries as `re,im` pairs.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let n = self.dim();
        for r in 0..n {
            let row = &self.data[r * n..(r + 1) * n];
            let mut line = String::with_capacity(n * 8);
            for (i, z) in row.iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                line.push_str(&format!("{},{}", z.re, z.im));
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    /// `b"YBE8CHN\0"`, the dimension as little-endian `u32`, then `dim²`
    /// `(re, im)` pairs of little-endian `f64`, row-major.
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&(self.dim() as u32).to_le_bytes())?;
        for z in &self.data {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads what [`write_binary`](Self::write_binary) wrote. Returns the
    /// dimension and the row-major entries.
    pub fn read_binary(bytes: &[u8]) -> Result<(usize, Vec<C>)> {
        let bad = |m: &str| YbeError::Format(format!("chain dump: {m}"));
        if bytes.len() < 12 || &bytes[..8] != BINARY_MAGIC {
            return Err(bad("missing header"));
        }
        let dim = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
        let body = &bytes[12..];
        if body.len() != dim * dim * 16 {
            return Err(bad("length does not match dimension"));
        }
        let f = |i: usize| f64::from_le_bytes(body[i * 8..i * 8 + 8].try_into().expect("8 bytes"));
        Ok((dim, (0..dim * dim).map(|k| C::new(f(2 * k), f(2 * k + 1))).collect()))
    }
}

pub const BINARY_MAGIC: &[u8; 8] = b"YBE8CHN\0";

/// `σᶻ` eigenvalue of `site` (1-based) in basis state `s`.
#[inline]
fn z(s: usize, site: usize, n: usize) -> f64 {
    if (s >> (n - site)) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn build_chain(c: CouplingConstants, sites: usize, periodic: bool) -> Result<ChainOperator> {
    if !(2..=MAX_SITES).contains(&sites) {
        return Err(YbeError::SizeLimit { sites });
    }
    let n = sites;
    let dim = 1usize << n;
    let bonds: Vec<(usize, usize)> = (1..n)
        .map(|j| (j, j + 1))
        .chain(periodic.then_some((n, 1)))
        .collect();
    // σˣσˣ and σʸσʸ flip both spins: ⟨s'|σʸσʸ|s⟩ = −z_j z_l.
    let mut data = vec![re(0.0); dim * dim];
    data.par_chunks_mut(dim).enumerate().for_each(|(row, out)| {
        let s = row;
        for &(j, l) in &bonds {
            let (zj, zl) = (z(s, j, n), z(s, l, n));
            out[s] += c.jz * (zj * zl) + c.h * (0.5 * (zj + zl));
            let flipped = s ^ (1 << (n - j)) ^ (1 << (n - l));
            out[flipped] += c.jx - c.jy * (zj * zl);
        }
    });
    // Row s holds ⟨s'|H|s⟩, i.e. the transpose, but every term is a
    // symmetric matrix.
    Ok(ChainOperator {
        sites,
        periodic,
        couplings: c,
        data,
    })
}

/// Tolerance of [`ff_relation_check`].
pub const RELATION_TOL: f64 = 1e-8;

/// The free-fermion-in-a-field conditions, on couplings and on
/// coefficients, checked separately.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FfRelationReport {
    /// `|Jx + Jy − h|`.
    pub jx_plus_jy_minus_h: f64,
    /// `|Jz|`.
    pub jz: f64,
    pub couplings_hold: bool,
    /// `|m5 − (m1 − m3)|`.
    pub m5_vs_m1_m3: f64,
    /// `|m5 − (m2 − m4)|`.
    pub m5_vs_m2_m4: f64,
    pub coefficients_hold: bool,
}

pub fn ff_relation_check(c: &CouplingConstants, m: &[C; 8]) -> FfRelationReport {
    let [m1, m2, m3, m4, m5, ..] = *m;
    let a = (c.jx + c.jy - c.h).norm();
    let b = c.jz.norm();
    let d1 = (m5 - (m1 - m3)).norm();
    let d2 = (m5 - (m2 - m4)).norm();
    FfRelationReport {
        jx_plus_jy_minus_h: a,
        jz: b,
        couplings_hold: a <= RELATION_TOL && b <= RELATION_TOL,
        m5_vs_m1_m3: d1,
        m5_vs_m2_m4: d2,
        coefficients_hold: d1 <= RELATION_TOL && d2 <= RELATION_TOL,
    }
}
