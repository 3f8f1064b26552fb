//! Face-ordered sparse matrix storage (lower/diag/upper over an
//! owner/neighbour face list), its kernel set, and the conversion to CSR.
//!
//! The sparsity pattern is the mesh connectivity: face `f` connects cells
//! `owner[f] < neighbour[f]`, and the implied dense matrix has
//! `(owner, neighbour) = upper[f]`, `(neighbour, owner) = lower[f]`.

pub mod csr;
pub mod io;
mod kernels;

pub use kernels::{accumulate_faces_scalar, accumulate_faces_vec3};

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::mempool::Pool;

/// Owner/neighbour face addressing shared by matrices and meshes.
/// Construction validates the LDU ordering invariants once; derived
/// structures (cell-to-face adjacency, CSR pattern) are computed lazily and
/// cached here so repeated conversions skip the work.
pub struct LduAddressing {
    n_cells: usize,
    owner: Vec<usize>,
    neighbour: Vec<usize>,
    cell_faces: OnceLock<CellFaces>,
    csr_pattern: OnceLock<csr::CsrPattern>,
}

/// Per-cell incident internal faces, each tagged with whether the cell is
/// the owner side; faces are listed in ascending face order, which is what
/// makes gather-based accumulation deterministic.
pub struct CellFaces {
    offsets: Vec<usize>,
    faces: Vec<(usize, bool)>,
}

impl CellFaces {
    #[inline]
    pub fn of(&self, cell: usize) -> &[(usize, bool)] {
        &self.faces[self.offsets[cell]..self.offsets[cell + 1]]
    }
}

impl LduAddressing {
    pub fn new(n_cells: usize, owner: Vec<usize>, neighbour: Vec<usize>) -> Result<Arc<Self>> {
        if owner.len() != neighbour.len() {
            return Err(Error::InvalidAddressing {
                reason: format!(
                    "owner/neighbour length mismatch: {} vs {}",
                    owner.len(),
                    neighbour.len()
                ),
            });
        }
        if n_cells > u32::MAX as usize {
            return Err(Error::InvalidAddressing {
                reason: "cell count exceeds 32-bit index space".to_string(),
            });
        }
        for f in 0..owner.len() {
            if owner[f] >= neighbour[f] {
                return Err(Error::InvalidAddressing {
                    reason: format!(
                        "face {f}: owner {} not below neighbour {}",
                        owner[f], neighbour[f]
                    ),
                });
            }
            if neighbour[f] >= n_cells {
                return Err(Error::InvalidAddressing {
                    reason: format!("face {f}: neighbour {} out of range", neighbour[f]),
                });
            }
            if f > 0 {
                let prev = (owner[f - 1], neighbour[f - 1]);
                let cur = (owner[f], neighbour[f]);
                if prev >= cur {
                    return Err(Error::InvalidAddressing {
                        reason: format!("faces not strictly ascending at face {f}"),
                    });
                }
            }
        }
        Ok(Arc::new(LduAddressing {
            n_cells,
            owner,
            neighbour,
            cell_faces: OnceLock::new(),
            csr_pattern: OnceLock::new(),
        }))
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    #[inline]
    pub fn n_faces(&self) -> usize {
        self.owner.len()
    }

    #[inline]
    pub fn owner(&self) -> &[usize] {
        &self.owner
    }

    #[inline]
    pub fn neighbour(&self) -> &[usize] {
        &self.neighbour
    }

    /// Lazily built cell→faces adjacency.
    pub fn cell_faces(&self) -> &CellFaces {
        self.cell_faces.get_or_init(|| {
            let mut counts = vec![0usize; self.n_cells + 1];
            for f in 0..self.n_faces() {
                counts[self.owner[f] + 1] += 1;
                counts[self.neighbour[f] + 1] += 1;
            }
            for c in 0..self.n_cells {
                counts[c + 1] += counts[c];
            }
            let offsets = counts.clone();
            let mut cursor = counts;
            let mut faces = vec![(0usize, false); 2 * self.n_faces()];
            // Ascending face iteration keeps each cell's list face-sorted.
            for f in 0..self.n_faces() {
                let o = self.owner[f];
                faces[cursor[o]] = (f, true);
                cursor[o] += 1;
                let n = self.neighbour[f];
                faces[cursor[n]] = (f, false);
                cursor[n] += 1;
            }
            CellFaces { offsets, faces }
        })
    }
}

/// Sparse matrix in lower/diag/upper face-ordered storage, with the
/// right-hand side carried alongside as in the originating framework.
pub struct LduMatrix {
    addressing: Arc<LduAddressing>,
    pub diag: ScalarField,
    pub lower: ScalarField,
    pub upper: ScalarField,
    pub source: ScalarField,
}

impl LduMatrix {
    pub fn zeros(pool: &Pool, addressing: Arc<LduAddressing>) -> Self {
        let n_cells = addressing.n_cells();
        let n_faces = addressing.n_faces();
        LduMatrix {
            addressing,
            diag: ScalarField::zeros(pool, n_cells),
            lower: ScalarField::zeros(pool, n_faces),
            upper: ScalarField::zeros(pool, n_faces),
            source: ScalarField::zeros(pool, n_cells),
        }
    }

    pub fn from_parts(
        addressing: Arc<LduAddressing>,
        diag: ScalarField,
        lower: ScalarField,
        upper: ScalarField,
        source: ScalarField,
    ) -> Result<Self> {
        let checks = [
            (diag.len(), addressing.n_cells(), "diag"),
            (lower.len(), addressing.n_faces(), "lower"),
            (upper.len(), addressing.n_faces(), "upper"),
            (source.len(), addressing.n_cells(), "source"),
        ];
        for (got, want, what) in checks {
            if got != want {
                return Err(Error::LengthMismatch {
                    left: got,
                    right: want,
                    context: match what {
                        "diag" => "LduMatrix diag",
                        "lower" => "LduMatrix lower",
                        "upper" => "LduMatrix upper",
                        _ => "LduMatrix source",
                    },
                });
            }
        }
        Ok(LduMatrix {
            addressing,
            diag,
            lower,
            upper,
            source,
        })
    }

    #[inline]
    pub fn addressing(&self) -> &Arc<LduAddressing> {
        &self.addressing
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        self.addressing.n_cells()
    }

    #[inline]
    pub fn n_faces(&self) -> usize {
        self.addressing.n_faces()
    }

    /// True when lower and upper coefficient arrays are identical.
    pub fn symmetric(&self) -> bool {
        self.lower
            .iter()
            .zip(self.upper.iter())
            .all(|(l, u)| l == u)
    }

    pub fn clone_in(&self, pool: &Pool) -> Self {
        LduMatrix {
            addressing: Arc::clone(&self.addressing),
            diag: self.diag.clone_in(pool),
            lower: self.lower.clone_in(pool),
            upper: self.upper.clone_in(pool),
            source: self.source.clone_in(pool),
        }
    }
}
