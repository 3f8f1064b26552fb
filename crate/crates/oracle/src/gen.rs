//! Random instance generators for property suites. All generators are
//! seeded so failures reproduce.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random owner/neighbour face lists for `n_cells` cells, sorted ascending
/// by `(owner, neighbour)` with no duplicate pairs. Connectivity is a
/// sparse random graph; isolated cells (diagonal-only rows) are allowed.
pub fn random_faces(r: &mut ChaCha8Rng, n_cells: usize) -> (Vec<usize>, Vec<usize>) {
    let mut owner = Vec::new();
    let mut neighbour = Vec::new();
    // Aim for ~2.5 faces per cell like a coarse unstructured mesh.
    let p_near = 0.55;
    let p_far = 4.0 / n_cells.max(4) as f64;
    for o in 0..n_cells {
        for n in o + 1..n_cells {
            let p = if n == o + 1 { p_near } else { p_far };
            if r.gen::<f64>() < p {
                owner.push(o);
                neighbour.push(n);
            }
        }
    }
    (owner, neighbour)
}

/// Coefficients for a symmetric positive definite LDU instance: random
/// negative couplings with a diagonally dominant positive diagonal.
pub struct SpdInstance {
    pub n_cells: usize,
    pub owner: Vec<usize>,
    pub neighbour: Vec<usize>,
    pub diag: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

pub fn random_spd(r: &mut ChaCha8Rng, max_cells: usize) -> SpdInstance {
    let n_cells = r.gen_range(2..=max_cells.max(2));
    let (owner, neighbour) = random_faces(r, n_cells);
    let n_faces = owner.len();
    let coupling: Vec<f64> = (0..n_faces).map(|_| -r.gen_range(0.1..1.0)).collect();
    let mut diag = vec![0.0; n_cells];
    for f in 0..n_faces {
        diag[owner[f]] += coupling[f].abs();
        diag[neighbour[f]] += coupling[f].abs();
    }
    for d in diag.iter_mut() {
        *d += r.gen_range(0.05..1.0);
    }
    SpdInstance {
        n_cells,
        owner,
        neighbour,
        diag,
        lower: coupling.clone(),
        upper: coupling,
    }
}

/// Diagonally dominant unsymmetric instance (lower ≠ upper).
pub fn random_unsymmetric(r: &mut ChaCha8Rng, max_cells: usize) -> SpdInstance {
    let n_cells = r.gen_range(2..=max_cells.max(2));
    let (owner, neighbour) = random_faces(r, n_cells);
    let n_faces = owner.len();
    let lower: Vec<f64> = (0..n_faces).map(|_| r.gen_range(-1.0..-0.05)).collect();
    let upper: Vec<f64> = (0..n_faces).map(|_| r.gen_range(-1.0..-0.05)).collect();
    let mut diag = vec![0.0; n_cells];
    for f in 0..n_faces {
        diag[owner[f]] += upper[f].abs();
        diag[neighbour[f]] += lower[f].abs();
    }
    for d in diag.iter_mut() {
        *d += r.gen_range(0.1..1.0);
    }
    SpdInstance {
        n_cells,
        owner,
        neighbour,
        diag,
        lower,
        upper,
    }
}

/// Arbitrary (possibly indefinite) coefficients on a random pattern.
pub fn random_general(r: &mut ChaCha8Rng, max_cells: usize) -> SpdInstance {
    let mut inst = random_unsymmetric(r, max_cells);
    for v in inst
        .diag
        .iter_mut()
        .chain(inst.lower.iter_mut())
        .chain(inst.upper.iter_mut())
    {
        *v = r.gen_range(-1.0..1.0);
    }
    // Keep diagonals away from zero so reference factorizations exist.
    for d in inst.diag.iter_mut() {
        if d.abs() < 0.2 {
            *d = 0.2 * if *d < 0.0 { -1.0 } else { 1.0 };
        }
    }
    inst
}

pub fn random_vec(r: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(lo..hi)).collect()
}

impl SpdInstance {
    pub fn dense(&self) -> crate::dense::DenseMat {
        crate::ldu_ref::dense_from_ldu(
            self.n_cells,
            &self.owner,
            &self.neighbour,
            &self.diag,
            &self.lower,
            &self.upper,
        )
    }
}
