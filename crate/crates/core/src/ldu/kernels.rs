//! Matrix-vector kernels over the LDU layout.
//!
//! Face loops touch both adjacent cells, so a naive parallel loop over
//! faces races on the cell targets. Two strategies are used, selected by
//! the executor's reduction mode:
//!
//! * fast mode keeps the face loop and prevents races with atomic
//!   scatter-adds (sums correct up to floating-point association);
//! * deterministic mode gathers per cell over the cached cell→faces
//!   adjacency in fixed face order, which is bitwise reproducible across
//!   backends and thread counts.

use crate::error::Result;
use crate::executor::{as_atomic_f64, Executor};
use crate::field::{ScalarField, Vec3};

use super::{LduAddressing, LduMatrix};

/// Accumulate per-face contributions into a per-cell scalar array:
/// `out[c] = init(c) + Σ owner_contrib(f) [c owner of f] + Σ nbr_contrib(f)
/// [c neighbour of f]`.
pub fn accumulate_faces_scalar(
    exec: &Executor,
    addr: &LduAddressing,
    out: &mut [f64],
    init: impl Fn(usize) -> f64 + Sync,
    owner_contrib: impl Fn(usize) -> f64 + Sync,
    nbr_contrib: impl Fn(usize) -> f64 + Sync,
) {
    debug_assert_eq!(out.len(), addr.n_cells());
    if exec.deterministic() {
        let cell_faces = addr.cell_faces();
        exec.parallel_fill(out, |c| {
            let mut acc = init(c);
            for &(f, is_owner) in cell_faces.of(c) {
                acc += if is_owner {
                    owner_contrib(f)
                } else {
                    nbr_contrib(f)
                };
            }
            acc
        });
    } else {
        exec.parallel_fill(out, &init);
        let owner = addr.owner();
        let neighbour = addr.neighbour();
        let view = as_atomic_f64(out);
        exec.parallel_for(addr.n_faces(), |f| {
            view[owner[f]].scatter_add(owner_contrib(f));
            view[neighbour[f]].scatter_add(nbr_contrib(f));
        });
    }
}

/// Vector-valued variant of [`accumulate_faces_scalar`].
pub fn accumulate_faces_vec3(
    exec: &Executor,
    addr: &LduAddressing,
    out: &mut [Vec3],
    init: impl Fn(usize) -> Vec3 + Sync,
    owner_contrib: impl Fn(usize) -> Vec3 + Sync,
    nbr_contrib: impl Fn(usize) -> Vec3 + Sync,
) {
    debug_assert_eq!(out.len(), addr.n_cells());
    if exec.deterministic() {
        let cell_faces = addr.cell_faces();
        exec.parallel_fill(out, |c| {
            let mut acc = init(c);
            for &(f, is_owner) in cell_faces.of(c) {
                acc += if is_owner {
                    owner_contrib(f)
                } else {
                    nbr_contrib(f)
                };
            }
            acc
        });
    } else {
        exec.parallel_fill(out, &init);
        let owner = addr.owner();
        let neighbour = addr.neighbour();
        let n = out.len();
        // Vec3 is repr(C): view the xyz components as one flat f64 array.
        let flat =
            unsafe { std::slice::from_raw_parts_mut(out.as_mut_ptr() as *mut f64, 3 * n) };
        let view = as_atomic_f64(flat);
        exec.parallel_for(addr.n_faces(), |f| {
            let vo = owner_contrib(f);
            let vn = nbr_contrib(f);
            let o = 3 * owner[f];
            let nb = 3 * neighbour[f];
            view[o].scatter_add(vo.x);
            view[o + 1].scatter_add(vo.y);
            view[o + 2].scatter_add(vo.z);
            view[nb].scatter_add(vn.x);
            view[nb + 1].scatter_add(vn.y);
            view[nb + 2].scatter_add(vn.z);
        });
    }
}

impl LduMatrix {
    /// `y = A·x`: one cell loop for the diagonal plus face-coupled
    /// off-diagonal contributions.
    pub fn amul(&self, exec: &Executor, x: &ScalarField, y: &mut ScalarField) -> Result<()> {
        self.check_vec(x, "amul x")?;
        self.check_vec(y, "amul y")?;
        let (diag, lower, upper) = (&self.diag, &self.lower, &self.upper);
        let (owner, neighbour) = (self.addressing.owner(), self.addressing.neighbour());
        accumulate_faces_scalar(
            exec,
            &self.addressing,
            y,
            |c| diag[c] * x[c],
            |f| upper[f] * x[neighbour[f]],
            |f| lower[f] * x[owner[f]],
        );
        Ok(())
    }

    /// `y = Aᵀ·x`.
    pub fn tmul(&self, exec: &Executor, x: &ScalarField, y: &mut ScalarField) -> Result<()> {
        self.check_vec(x, "tmul x")?;
        self.check_vec(y, "tmul y")?;
        let (diag, lower, upper) = (&self.diag, &self.lower, &self.upper);
        let (owner, neighbour) = (self.addressing.owner(), self.addressing.neighbour());
        accumulate_faces_scalar(
            exec,
            &self.addressing,
            y,
            |c| diag[c] * x[c],
            |f| lower[f] * x[neighbour[f]],
            |f| upper[f] * x[owner[f]],
        );
        Ok(())
    }

    /// Negated off-diagonal gather: `H(x)ᵢ = -Σ_{j≠i} aᵢⱼ xⱼ`, so that
    /// `A·x = diag∘x - H(x)`.
    pub fn h_op(&self, exec: &Executor, x: &ScalarField, h: &mut ScalarField) -> Result<()> {
        self.check_vec(x, "h_op x")?;
        self.check_vec(h, "h_op out")?;
        let (lower, upper) = (&self.lower, &self.upper);
        let (owner, neighbour) = (self.addressing.owner(), self.addressing.neighbour());
        accumulate_faces_scalar(
            exec,
            &self.addressing,
            h,
            |_| 0.0,
            |f| -upper[f] * x[neighbour[f]],
            |f| -lower[f] * x[owner[f]],
        );
        Ok(())
    }

    /// Per-face combination `upper[f]·x[neighbour] - lower[f]·x[owner]`.
    pub fn face_h(&self, exec: &Executor, x: &ScalarField, out: &mut ScalarField) -> Result<()> {
        self.check_vec(x, "face_h x")?;
        if out.len() != self.n_faces() {
            return Err(crate::error::Error::LengthMismatch {
                left: out.len(),
                right: self.n_faces(),
                context: "face_h out",
            });
        }
        let (lower, upper) = (&self.lower, &self.upper);
        let (owner, neighbour) = (self.addressing.owner(), self.addressing.neighbour());
        exec.parallel_fill(out, |f| upper[f] * x[neighbour[f]] - lower[f] * x[owner[f]]);
        Ok(())
    }

    /// Per-row total `Σⱼ aᵢⱼ`.
    pub fn sum_a(&self, exec: &Executor, out: &mut ScalarField) -> Result<()> {
        self.check_vec(out, "sum_a out")?;
        let (diag, lower, upper) = (&self.diag, &self.lower, &self.upper);
        accumulate_faces_scalar(
            exec,
            &self.addressing,
            out,
            |c| diag[c],
            |f| upper[f],
            |f| lower[f],
        );
        Ok(())
    }

    /// Overwrite the diagonal with the negated off-diagonal row sum.
    pub fn neg_sum_diag(&mut self, exec: &Executor) {
        let LduMatrix {
            addressing,
            diag,
            lower,
            upper,
            ..
        } = self;
        let (lower, upper) = (&*lower, &*upper);
        accumulate_faces_scalar(
            exec,
            addressing,
            diag,
            |_| 0.0,
            |f| -upper[f],
            |f| -lower[f],
        );
    }

    /// Per-row `Σ_offdiag |aᵢⱼ|`.
    pub fn sum_mag_off_diag(&self, exec: &Executor, out: &mut ScalarField) -> Result<()> {
        self.check_vec(out, "sum_mag_off_diag out")?;
        let (lower, upper) = (&self.lower, &self.upper);
        accumulate_faces_scalar(
            exec,
            &self.addressing,
            out,
            |_| 0.0,
            |f| upper[f].abs(),
            |f| lower[f].abs(),
        );
        Ok(())
    }

    fn check_vec(&self, x: &ScalarField, context: &'static str) -> Result<()> {
        if x.len() != self.n_cells() {
            return Err(crate::error::Error::LengthMismatch {
                left: x.len(),
                right: self.n_cells(),
                context,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::executor::{BackendKind, ReductionMode};
    use crate::mempool::Pool;
    use std::sync::Arc;

    fn chain3(pool: &Pool) -> LduMatrix {
        let addr = LduAddressing::new(3, vec![0, 1], vec![1, 2]).unwrap();
        let mut m = LduMatrix::zeros(pool, addr);
        m.diag.copy_from_slice(&[2.0, 2.0, 2.0]);
        m.lower.copy_from_slice(&[-1.0, -1.0]);
        m.upper.copy_from_slice(&[-1.0, -1.0]);
        m
    }

    fn setup() -> (Executor, Pool) {
        (Executor::serial(), Pool::fixed_mib(4).unwrap())
    }

    #[test]
    fn identity_amul_returns_x() {
        let (exec, pool) = setup();
        let addr = LduAddressing::new(4, vec![], vec![]).unwrap();
        let mut m = LduMatrix::zeros(&pool, addr);
        m.diag.fill_with(&exec, 1.0);
        let x = ScalarField::from_slice(&pool, &[3.0, -1.0, 0.5, 9.0]);
        let mut y = ScalarField::zeros(&pool, 4);
        m.amul(&exec, &x, &mut y).unwrap();
        assert_eq!(&y[..], &x[..]);
    }

    #[test]
    fn chain_amul() {
        let (exec, pool) = setup();
        let m = chain3(&pool);
        let x = ScalarField::constant(&pool, 3, 1.0);
        let mut y = ScalarField::zeros(&pool, 3);
        m.amul(&exec, &x, &mut y).unwrap();
        assert_eq!(&y[..], &[1.0, 0.0, 1.0]);
    }

    #[test]
    fn symmetric_tmul_equals_amul_bitwise() {
        let (exec, pool) = setup();
        let m = chain3(&pool);
        let x = ScalarField::from_slice(&pool, &[0.3, -1.7, 2.9]);
        let mut ya = ScalarField::zeros(&pool, 3);
        let mut yt = ScalarField::zeros(&pool, 3);
        m.amul(&exec, &x, &mut ya).unwrap();
        m.tmul(&exec, &x, &mut yt).unwrap();
        for i in 0..3 {
            assert_eq!(ya[i].to_bits(), yt[i].to_bits());
        }
    }

    #[test]
    fn h_op_chain() {
        let (exec, pool) = setup();
        let m = chain3(&pool);
        let x = ScalarField::from_slice(&pool, &[1.0, 2.0, 3.0]);
        let mut h = ScalarField::zeros(&pool, 3);
        m.h_op(&exec, &x, &mut h).unwrap();
        assert_eq!(&h[..], &[2.0, 4.0, 2.0]);
    }

    #[test]
    fn h_op_diagonal_only_is_zero() {
        let (exec, pool) = setup();
        let addr = LduAddressing::new(3, vec![], vec![]).unwrap();
        let mut m = LduMatrix::zeros(&pool, addr);
        m.diag.copy_from_slice(&[5.0, 6.0, 7.0]);
        let x = ScalarField::from_slice(&pool, &[1.0, 2.0, 3.0]);
        let mut h = ScalarField::zeros(&pool, 3);
        m.h_op(&exec, &x, &mut h).unwrap();
        assert_eq!(&h[..], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn face_h_examples() {
        let (exec, pool) = setup();
        let m = chain3(&pool);
        // Constant x with lower == upper cancels per face.
        let c = ScalarField::constant(&pool, 3, 4.2);
        let mut fh = ScalarField::zeros(&pool, 2);
        m.face_h(&exec, &c, &mut fh).unwrap();
        assert_eq!(&fh[..], &[0.0, 0.0]);

        let x = ScalarField::from_slice(&pool, &[1.0, 2.0, 3.0]);
        m.face_h(&exec, &x, &mut fh).unwrap();
        assert_eq!(&fh[..], &[-1.0, -1.0]);

        let addr = LduAddressing::new(3, vec![0, 1], vec![1, 2]).unwrap();
        let zero = LduMatrix::zeros(&pool, addr);
        zero.face_h(&exec, &x, &mut fh).unwrap();
        assert_eq!(&fh[..], &[0.0, 0.0]);
    }

    #[test]
    fn row_sum_family_on_chain() {
        let (exec, pool) = setup();
        let mut m = chain3(&pool);
        let ones = ScalarField::constant(&pool, 3, 1.0);
        let mut sum_a = ScalarField::zeros(&pool, 3);
        let mut amul_ones = ScalarField::zeros(&pool, 3);
        m.sum_a(&exec, &mut sum_a).unwrap();
        m.amul(&exec, &ones, &mut amul_ones).unwrap();
        for i in 0..3 {
            assert!((sum_a[i] - amul_ones[i]).abs() <= 1e-14);
        }

        let mut mag = ScalarField::zeros(&pool, 3);
        m.sum_mag_off_diag(&exec, &mut mag).unwrap();
        assert_eq!(&mag[..], &[1.0, 2.0, 1.0]);

        m.neg_sum_diag(&exec);
        assert_eq!(&m.diag[..], &[1.0, 2.0, 1.0]);
    }

    #[test]
    fn fast_mode_scatter_matches_deterministic_gather() {
        let pool = Pool::fixed_mib(4).unwrap();
        let det = Executor::new(
            BackendKind::threaded(4).unwrap(),
            ReductionMode::Deterministic,
        );
        let fast = Executor::new(BackendKind::threaded(4).unwrap(), ReductionMode::Fast);
        let m = chain3(&pool);
        let x = ScalarField::from_slice(&pool, &[0.25, -1.5, 3.0]);
        let mut yd = ScalarField::zeros(&pool, 3);
        let mut yf = ScalarField::zeros(&pool, 3);
        m.amul(&det, &x, &mut yd).unwrap();
        m.amul(&fast, &x, &mut yf).unwrap();
        for i in 0..3 {
            assert!((yd[i] - yf[i]).abs() <= 1e-13);
        }
    }

    #[test]
    fn addressing_validation() {
        assert!(LduAddressing::new(3, vec![1], vec![1]).is_err()); // owner == neighbour
        assert!(LduAddressing::new(3, vec![0], vec![3]).is_err()); // out of range
        assert!(LduAddressing::new(3, vec![1, 0], vec![2, 1]).is_err()); // unsorted
        assert!(LduAddressing::new(3, vec![0, 0], vec![1, 1]).is_err()); // duplicate
        assert!(LduAddressing::new(3, vec![0, 0], vec![1, 2]).is_ok());
    }

    #[test]
    fn cell_faces_adjacency() {
        let addr = LduAddressing::new(3, vec![0, 1], vec![1, 2]).unwrap();
        let cf = addr.cell_faces();
        assert_eq!(cf.of(0), &[(0, true)]);
        assert_eq!(cf.of(1), &[(0, false), (1, true)]);
        assert_eq!(cf.of(2), &[(1, false)]);
        // Cached: second call returns the same allocation.
        let p1 = cf as *const _;
        let p2 = addr.cell_faces() as *const _;
        assert_eq!(p1, p2);
        let _ = Arc::strong_count(&addr);
    }
}
