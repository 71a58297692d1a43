//! Lie-algebra arithmetic for adjoint-valued field components.
//!
//! Adjoint vectors are stored as real component arrays in an orthonormal
//! generator basis, so the bracket reduces to a contraction with the real,
//! totally antisymmetric structure constants:
//!
//! ```text
//!     [u, v]^a = f^{abc} u^b v^c
//! ```
//!
//! SU(3) uses the Gell-Mann basis. U(1) is a one-component algebra with
//! `f = 0`, which makes every bracket vanish without a separate code path.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("adjoint dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unknown gauge group `{0}` (expected U1, SU2 or SU3)")]
    UnknownGroup(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupKind {
    U1,
    SU2,
    SU3,
}

impl GroupKind {
    pub fn dim_adjoint(self) -> usize {
        match self {
            GroupKind::U1 => 1,
            GroupKind::SU2 => 3,
            GroupKind::SU3 => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GroupKind::U1 => "U1",
            GroupKind::SU2 => "SU2",
            GroupKind::SU3 => "SU3",
        }
    }
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GroupKind {
    type Err = AlgebraError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().replace(['(', ')'], "").as_str() {
            "U1" => Ok(GroupKind::U1),
            "SU2" => Ok(GroupKind::SU2),
            "SU3" => Ok(GroupKind::SU3),
            _ => Err(AlgebraError::UnknownGroup(s.to_string())),
        }
    }
}

/// One nonzero entry `f^{abc}` (zero-based indices).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureEntry {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub value: f64,
}

/// Independent SU(3) structure constants, one-based, with `a < b < c`.
const SU3_INDEPENDENT: [(usize, usize, usize, f64); 9] = [
    (1, 2, 3, 1.0),
    (1, 4, 7, 0.5),
    (1, 5, 6, -0.5),
    (2, 4, 6, 0.5),
    (2, 5, 7, 0.5),
    (3, 4, 5, 0.5),
    (3, 6, 7, -0.5),
    (4, 5, 8, SQRT3_2),
    (6, 7, 8, SQRT3_2),
];

const SQRT3_2: f64 = 0.866_025_403_784_438_6;

/// Lie-algebra metadata for one of the supported gauge groups.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeGroup {
    kind: GroupKind,
    dim: usize,
    /// Dense `f[a][b][c]`, flattened as `(a * dim + b) * dim + c`.
    dense: Vec<f64>,
    /// All nonzero entries including antisymmetric completions.
    entries: Vec<StructureEntry>,
}

impl GaugeGroup {
    pub fn new(kind: GroupKind) -> Self {
        let dim = kind.dim_adjoint();
        let independent: Vec<(usize, usize, usize, f64)> = match kind {
            GroupKind::U1 => Vec::new(),
            GroupKind::SU2 => vec![(1, 2, 3, 1.0)],
            GroupKind::SU3 => SU3_INDEPENDENT.to_vec(),
        };

        let mut dense = vec![0.0; dim * dim * dim];
        for &(a, b, c, value) in &independent {
            let (a, b, c) = (a - 1, b - 1, c - 1);
            // even permutations carry +f, odd ones -f
            for &(p, q, r, sign) in &[
                (a, b, c, 1.0),
                (b, c, a, 1.0),
                (c, a, b, 1.0),
                (b, a, c, -1.0),
                (a, c, b, -1.0),
                (c, b, a, -1.0),
            ] {
                dense[(p * dim + q) * dim + r] = sign * value;
            }
        }

        let mut entries = Vec::new();
        for a in 0..dim {
            for b in 0..dim {
                for c in 0..dim {
                    let value = dense[(a * dim + b) * dim + c];
                    if value != 0.0 {
                        entries.push(StructureEntry { a, b, c, value });
                    }
                }
            }
        }

        GaugeGroup {
            kind,
            dim,
            dense,
            entries,
        }
    }

    pub fn u1() -> Self {
        Self::new(GroupKind::U1)
    }

    pub fn su2() -> Self {
        Self::new(GroupKind::SU2)
    }

    pub fn su3() -> Self {
        Self::new(GroupKind::SU3)
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn dim_adjoint(&self) -> usize {
        self.dim
    }

    pub fn is_abelian(&self) -> bool {
        self.entries.is_empty()
    }

    /// `f^{abc}` with zero-based indices.
    pub fn structure_constant(&self, a: usize, b: usize, c: usize) -> f64 {
        self.dense[(a * self.dim + b) * self.dim + c]
    }

    /// Nonzero structure constants, antisymmetric completions included.
    pub fn entries(&self) -> &[StructureEntry] {
        &self.entries
    }

    pub fn zero(&self) -> AdjointVector {
        AdjointVector(vec![0.0; self.dim])
    }

    /// Unit vector along generator `a` (zero-based).
    pub fn basis(&self, a: usize) -> AdjointVector {
        let mut v = self.zero();
        v.0[a] = 1.0;
        v
    }

    fn check(&self, v: &[f64]) -> Result<(), AlgebraError> {
        if v.len() != self.dim {
            return Err(AlgebraError::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        Ok(())
    }

    /// `[u, v]^a = Σ_{b,c} f^{abc} u^b v^c`.
    pub fn commutator(
        &self,
        u: &AdjointVector,
        v: &AdjointVector,
    ) -> Result<AdjointVector, AlgebraError> {
        self.check(&u.0)?;
        self.check(&v.0)?;
        let mut out = self.zero();
        self.commutator_into(&u.0, &v.0, &mut out.0);
        Ok(out)
    }

    /// Unchecked slice kernel: overwrites `out` with `[u, v]`.
    ///
    /// Slices must all have length `dim_adjoint`; this is the form the
    /// lattice inner loops use.
    #[inline]
    pub fn commutator_into(&self, u: &[f64], v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for e in &self.entries {
            out[e.a] += e.value * u[e.b] * v[e.c];
        }
    }

    /// Unchecked slice kernel: `out += scale * [u, v]`.
    #[inline]
    pub fn add_commutator(&self, scale: f64, u: &[f64], v: &[f64], out: &mut [f64]) {
        for e in &self.entries {
            out[e.a] += scale * e.value * u[e.b] * v[e.c];
        }
    }

    /// Left-hand side of the Jacobi identity for generator indices
    /// `(a, b, c, d)`; zero for a valid Lie algebra.
    pub fn jacobi_defect(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        (0..self.dim)
            .map(|e| {
                self.structure_constant(a, b, e) * self.structure_constant(e, c, d)
                    + self.structure_constant(c, b, e) * self.structure_constant(a, e, d)
                    + self.structure_constant(d, b, e) * self.structure_constant(a, c, e)
            })
            .sum()
    }
}

/// Adjoint components `A^a` of a Lie-algebra-valued quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjointVector(pub Vec<f64>);

impl AdjointVector {
    pub fn new(components: Vec<f64>) -> Self {
        AdjointVector(components)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn scale(&self, s: f64) -> AdjointVector {
        AdjointVector(self.0.iter().map(|x| x * s).collect())
    }
}

impl From<Vec<f64>> for AdjointVector {
    fn from(v: Vec<f64>) -> Self {
        AdjointVector(v)
    }
}

/// Invariant inner product `Σ_a u^a v^a`.
pub fn inner(u: &AdjointVector, v: &AdjointVector) -> Result<f64, AlgebraError> {
    if u.len() != v.len() {
        return Err(AlgebraError::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    Ok(u.0.iter().zip(&v.0).map(|(a, b)| a * b).sum())
}
