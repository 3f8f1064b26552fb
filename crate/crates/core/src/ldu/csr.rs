//! LDU → CSR conversion.
//!
//! The conversion builds `(row, col)` pairs for every coefficient slot of
//! the LDU layout, radix-sorts them on a 64-bit `(row << 32) | col` key
//! (least-significant-digit order, 8-bit digits) and keeps the resulting
//! permutation as a map from LDU slots to CSR value slots. The sparsity
//! pattern only depends on the addressing, so the sorted pattern and both
//! permutation directions are cached on the [`LduAddressing`] and repeated
//! conversions only gather coefficients.
//!
//! LDU slot numbering: `[0, nCells)` are diagonal slots, then `nFaces`
//! upper slots `(owner, neighbour)`, then `nFaces` lower slots
//! `(neighbour, owner)`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::executor::Executor;
use crate::field::ScalarField;

use super::{LduAddressing, LduMatrix};

/// Sorted sparsity pattern plus both permutation directions.
pub struct CsrPattern {
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    /// LDU coefficient slot → CSR value slot (a bijection on `[0, nnz)`).
    pub ldu_to_csr: Vec<usize>,
    /// CSR value slot → LDU coefficient slot.
    pub csr_to_ldu: Vec<usize>,
}

/// Compressed sparse row matrix produced from an LDU matrix.
pub struct CsrMatrix {
    pub n_rows: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub vals: Vec<f64>,
    pattern: Arc<PatternRef>,
}

/// Keeps the addressing (and so the cached pattern) alive with the CSR
/// matrix without copying the maps.
struct PatternRef {
    addressing: Arc<LduAddressing>,
}

impl CsrMatrix {
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// LDU slot → CSR slot map used to build this matrix.
    pub fn ldu_to_csr_map(&self) -> &[usize] {
        &self.pattern.addressing.csr_pattern().ldu_to_csr
    }

    /// Standard CSR matvec; rows gather independently, so the kernel is
    /// deterministic under any backend.
    pub fn spmv(&self, exec: &Executor, x: &ScalarField, y: &mut ScalarField) -> Result<()> {
        if x.len() != self.n_rows {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: self.n_rows,
                context: "csr spmv x",
            });
        }
        if y.len() != self.n_rows {
            return Err(Error::LengthMismatch {
                left: y.len(),
                right: self.n_rows,
                context: "csr spmv y",
            });
        }
        let (row_ptr, col_idx, vals) = (&self.row_ptr, &self.col_idx, &self.vals);
        exec.parallel_fill(y, |i| {
            let mut s = 0.0;
            for j in row_ptr[i]..row_ptr[i + 1] {
                s += vals[j] * x[col_idx[j]];
            }
            s
        });
        Ok(())
    }
}

impl LduAddressing {
    /// The cached CSR pattern; computed on first use by the radix sort.
    pub fn csr_pattern(&self) -> &CsrPattern {
        self.csr_pattern.get_or_init(|| {
            let n_cells = self.n_cells();
            let n_faces = self.n_faces();
            let nnz = n_cells + 2 * n_faces;
            let mut keys = Vec::with_capacity(nnz);
            let slot_key = |row: usize, col: usize| ((row as u64) << 32) | col as u64;
            for c in 0..n_cells {
                keys.push(slot_key(c, c));
            }
            for f in 0..n_faces {
                keys.push(slot_key(self.owner()[f], self.neighbour()[f]));
            }
            for f in 0..n_faces {
                keys.push(slot_key(self.neighbour()[f], self.owner()[f]));
            }

            let order = radix_sort_permutation(&keys);

            let mut ldu_to_csr = vec![0usize; nnz];
            let mut csr_to_ldu = vec![0usize; nnz];
            let mut col_idx = vec![0usize; nnz];
            let mut row_ptr = vec![0usize; n_cells + 1];
            for (pos, &slot) in order.iter().enumerate() {
                ldu_to_csr[slot] = pos;
                csr_to_ldu[pos] = slot;
                let key = keys[slot];
                col_idx[pos] = (key & 0xffff_ffff) as usize;
                row_ptr[(key >> 32) as usize + 1] += 1;
            }
            for r in 0..n_cells {
                row_ptr[r + 1] += row_ptr[r];
            }
            CsrPattern {
                row_ptr,
                col_idx,
                ldu_to_csr,
                csr_to_ldu,
            }
        })
    }
}

impl LduMatrix {
    /// Convert to CSR by gathering coefficients through the cached map.
    pub fn to_csr(&self, exec: &Executor) -> CsrMatrix {
        let addressing = Arc::clone(self.addressing());
        let pattern = addressing.csr_pattern();
        let n_cells = self.n_cells();
        let n_faces = self.n_faces();
        let ldu_value = |slot: usize| -> f64 {
            if slot < n_cells {
                self.diag[slot]
            } else if slot < n_cells + n_faces {
                self.upper[slot - n_cells]
            } else {
                self.lower[slot - n_cells - n_faces]
            }
        };
        let mut vals = vec![0.0f64; pattern.csr_to_ldu.len()];
        let csr_to_ldu = &pattern.csr_to_ldu;
        exec.parallel_fill(&mut vals, |pos| ldu_value(csr_to_ldu[pos]));
        CsrMatrix {
            n_rows: n_cells,
            row_ptr: pattern.row_ptr.clone(),
            col_idx: pattern.col_idx.clone(),
            vals,
            pattern: Arc::new(PatternRef { addressing }),
        }
    }
}

/// Stable LSD radix sort returning the sorting permutation. Digits are
/// 8 bits wide; passes over all-zero high digits are skipped.
fn radix_sort_permutation(keys: &[u64]) -> Vec<usize> {
    let n = keys.len();
    let mut order: Vec<usize> = (0..n).collect();
    if n <= 1 {
        return order;
    }
    let max_key = *keys.iter().max().expect("non-empty");
    let passes = ((64 - max_key.leading_zeros() as usize) + 7) / 8;
    let mut scratch = vec![0usize; n];
    for pass in 0..passes.max(1) {
        let shift = 8 * pass;
        let mut counts = [0usize; 257];
        for &idx in &order {
            let digit = ((keys[idx] >> shift) & 0xff) as usize;
            counts[digit + 1] += 1;
        }
        for d in 0..256 {
            counts[d + 1] += counts[d];
        }
        for &idx in &order {
            let digit = ((keys[idx] >> shift) & 0xff) as usize;
            scratch[counts[digit]] = idx;
            counts[digit] += 1;
        }
        std::mem::swap(&mut order, &mut scratch);
    }
    order
}
