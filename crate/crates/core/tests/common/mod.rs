//! Independent oracles shared by the integration tests.
//!
//! Structure constants are rebuilt from explicit matrix generators
//! (Pauli / Gell-Mann) via `f_abc = Tr([T_a, T_b] T_c) / (i Tr(T_c T_c))`,
//! and the lattice quantities are recomputed by direct summation over
//! explicit coordinates.

#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sic_core::gauge_algebra::GroupKind;
use sic_core::ym_lattice::{FieldConfiguration, LatticeSpec};

type Mat = [[Complex64; 3]; 3];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn zero() -> Mat {
    [[c(0.0, 0.0); 3]; 3]
}

fn mul(a: &Mat, b: &Mat) -> Mat {
    let mut out = zero();
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

fn trace(a: &Mat) -> Complex64 {
    a[0][0] + a[1][1] + a[2][2]
}

/// Pauli matrices embedded in the upper-left 2×2 block.
fn pauli() -> Vec<Mat> {
    let mut s = vec![zero(); 3];
    s[0][0][1] = c(1.0, 0.0);
    s[0][1][0] = c(1.0, 0.0);
    s[1][0][1] = c(0.0, -1.0);
    s[1][1][0] = c(0.0, 1.0);
    s[2][0][0] = c(1.0, 0.0);
    s[2][1][1] = c(-1.0, 0.0);
    s
}

fn gell_mann() -> Vec<Mat> {
    let mut l = vec![zero(); 8];
    let one = c(1.0, 0.0);
    l[0][0][1] = one;
    l[0][1][0] = one;
    l[1][0][1] = c(0.0, -1.0);
    l[1][1][0] = c(0.0, 1.0);
    l[2][0][0] = one;
    l[2][1][1] = -one;
    l[3][0][2] = one;
    l[3][2][0] = one;
    l[4][0][2] = c(0.0, -1.0);
    l[4][2][0] = c(0.0, 1.0);
    l[5][1][2] = one;
    l[5][2][1] = one;
    l[6][1][2] = c(0.0, -1.0);
    l[6][2][1] = c(0.0, 1.0);
    let s = 1.0 / 3f64.sqrt();
    l[7][0][0] = c(s, 0.0);
    l[7][1][1] = c(s, 0.0);
    l[7][2][2] = c(-2.0 * s, 0.0);
    l
}

/// Dense `f[a][b][c]` from matrix generators `T_a = σ_a/2` or `λ_a/2`.
pub fn oracle_structure_constants(kind: GroupKind) -> Vec<Vec<Vec<f64>>> {
    let gens = match kind {
        GroupKind::U1 => return vec![vec![vec![0.0]]],
        GroupKind::SU2 => pauli(),
        GroupKind::SU3 => gell_mann(),
    };
    let n = gens.len();
    let mut f = vec![vec![vec![0.0; n]; n]; n];
    for a in 0..n {
        for b in 0..n {
            let ab = mul(&gens[a], &gens[b]);
            let ba = mul(&gens[b], &gens[a]);
            let mut comm = zero();
            for i in 0..3 {
                for j in 0..3 {
                    comm[i][j] = ab[i][j] - ba[i][j];
                }
            }
            for (cc, g) in gens.iter().enumerate() {
                // [σ_a/2, σ_b/2] = i f_abc σ_c/2 ⇒ Tr([σ_a,σ_b] σ_c) = 2i f_abc Tr(σ_c²)
                let num = trace(&mul(&comm, g));
                let den = c(0.0, 2.0) * trace(&mul(g, g));
                f[a][b][cc] = (num / den).re;
            }
        }
    }
    f
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec<R: Rng>(rng: &mut R, n: usize, amp: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-amp..amp)).collect()
}

/// Direct-summation lattice oracle with its own coordinate arithmetic.
pub struct Oracle {
    pub dims: usize,
    pub n: usize,
    pub a: f64,
    pub g: f64,
    pub dim: usize,
    pub f: Vec<Vec<Vec<f64>>>,
}

impl Oracle {
    pub fn new(spec: &LatticeSpec, kind: GroupKind) -> Self {
        Oracle {
            dims: spec.spatial_dims(),
            n: spec.sites_per_dim(),
            a: spec.spacing(),
            g: spec.coupling(),
            dim: kind.dim_adjoint(),
            f: oracle_structure_constants(kind),
        }
    }

    pub fn sites(&self) -> usize {
        self.n.pow(self.dims as u32)
    }

    fn site_of(&self, x: [usize; 3]) -> usize {
        x[0] + self.n * x[1] + self.n * self.n * x[2]
    }

    fn coords(&self, mut s: usize) -> [usize; 3] {
        let mut x = [0; 3];
        for d in x.iter_mut().take(self.dims) {
            *d = s % self.n;
            s /= self.n;
        }
        x
    }

    fn shift(&self, x: [usize; 3], dir: usize, by: isize) -> [usize; 3] {
        let mut y = x;
        y[dir] = ((x[dir] as isize + by).rem_euclid(self.n as isize)) as usize;
        y
    }

    pub fn at(&self, field: &[f64], x: [usize; 3], i: usize, c: usize) -> f64 {
        field[(self.site_of(x) * 3 + i) * self.dim + c]
    }

    fn diff(&self, field: &[f64], x: [usize; 3], dir: usize, i: usize, c: usize) -> f64 {
        if dir >= self.dims {
            return 0.0;
        }
        let p = self.shift(x, dir, 1);
        let m = self.shift(x, dir, -1);
        (self.at(field, p, i, c) - self.at(field, m, i, c)) / (2.0 * self.a)
    }

    /// `F_ij^c(x)` with coupling `g`.
    pub fn strength(&self, field: &[f64], x: [usize; 3], i: usize, j: usize, g: f64) -> Vec<f64> {
        (0..self.dim)
            .map(|c| {
                let mut v = self.diff(field, x, i, j, c) - self.diff(field, x, j, i, c);
                for a in 0..self.dim {
                    for b in 0..self.dim {
                        v += g * self.f[c][a][b] * self.at(field, x, i, a) * self.at(field, x, j, b);
                    }
                }
                v
            })
            .collect()
    }

    /// `∂_t E_i^c = Σ_j Δ_j F_ji^c + g f^{cab} A_j^a F_ji^b`.
    pub fn force(&self, field: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; field.len()];
        for s in 0..self.sites() {
            let x = self.coords(s);
            for i in 0..3 {
                for j in 0..3 {
                    if i == j {
                        continue;
                    }
                    let here = self.strength(field, x, j, i, self.g);
                    let (fp, fm) = if j < self.dims {
                        (
                            self.strength(field, self.shift(x, j, 1), j, i, self.g),
                            self.strength(field, self.shift(x, j, -1), j, i, self.g),
                        )
                    } else {
                        (vec![0.0; self.dim], vec![0.0; self.dim])
                    };
                    for c in 0..self.dim {
                        let mut v = (fp[c] - fm[c]) / (2.0 * self.a);
                        for a in 0..self.dim {
                            for b in 0..self.dim {
                                v += self.g * self.f[c][a][b] * self.at(field, x, j, a) * here[b];
                            }
                        }
                        out[(s * 3 + i) * self.dim + c] += v;
                    }
                }
            }
        }
        out
    }

    /// `Σ_x a^D [½ E² + ¼ Σ_ij F_ij²]` with coupling `g`.
    pub fn energy(&self, cfg: &FieldConfiguration, g: f64) -> f64 {
        let vol = self.a.powi(self.dims as i32);
        let mut h = 0.0;
        for s in 0..self.sites() {
            let x = self.coords(s);
            for i in 0..3 {
                for c in 0..self.dim {
                    h += 0.5 * self.at(&cfg.e, x, i, c).powi(2);
                }
                for j in 0..3 {
                    if i != j {
                        h += 0.25 * self.strength(&cfg.a, x, i, j, g).iter().map(|v| v * v).sum::<f64>();
                    }
                }
            }
        }
        h * vol
    }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Largest elementwise deviation relative to the largest magnitude.
pub fn max_rel_dev(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().chain(b).fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        / scale
}
