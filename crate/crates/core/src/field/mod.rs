//! Pool-backed contiguous fields of scalars, 3-vectors and tensors, and
//! the elementwise/reduction algebra executed through the executor.
//!
//! Every field's storage comes from a [`Pool`]; dropping a field returns
//! its block. Elementwise operations have disjoint writes, so serial and
//! threaded execution agree bitwise; reductions inherit the executor's
//! reduction mode.

pub mod io;
mod tensor;

pub use tensor::{Tensor3, Vec3};

use std::ops::{Deref, DerefMut};
use std::ptr::NonNull;

use crate::error::{Error, Result};
use crate::executor::{CompareOp, Executor};
use crate::mempool::{BlockHandle, Pool};

/// Field storage alignment: cache-line for predictable layout.
const FIELD_ALIGN: usize = 64;

/// Pool-backed typed storage. `T` must be a plain-data value type.
struct Storage<T> {
    pool: Pool,
    handle: Option<BlockHandle>,
    ptr: NonNull<T>,
    len: usize,
}

impl<T: Copy + Default> Storage<T> {
    fn new(pool: &Pool, len: usize) -> Self {
        if len == 0 {
            return Storage {
                pool: pool.clone(),
                handle: None,
                ptr: NonNull::dangling(),
                len: 0,
            };
        }
        let bytes = len * std::mem::size_of::<T>();
        let block = pool
            .allocate(bytes, FIELD_ALIGN)
            .unwrap_or_else(|e| panic!("field allocation failed: {e}"));
        let ptr = block.as_ptr() as *mut T;
        Storage {
            pool: pool.clone(),
            handle: Some(block.handle),
            ptr: unsafe { NonNull::new_unchecked(ptr) },
            len,
        }
    }
}

impl<T> Deref for Storage<T> {
    type Target = [T];
    #[inline]
    fn deref(&self) -> &[T] {
        unsafe { std::slice::from_raw_parts(self.ptr.as_ptr(), self.len) }
    }
}

impl<T> DerefMut for Storage<T> {
    #[inline]
    fn deref_mut(&mut self) -> &mut [T] {
        unsafe { std::slice::from_raw_parts_mut(self.ptr.as_ptr(), self.len) }
    }
}

impl<T> Drop for Storage<T> {
    fn drop(&mut self) {
        if let Some(handle) = self.handle.take() {
            // A storage owns its handle exclusively, so this cannot
            // double-free; pool teardown order is the only benign failure.
            let _ = self.pool.free(handle);
        }
    }
}

// The storage is an exclusively owned, non-overlapping block; moving it
// across threads or sharing immutable views is as safe as for a Vec.
unsafe impl<T: Send> Send for Storage<T> {}
unsafe impl<T: Sync> Sync for Storage<T> {}

macro_rules! field_common {
    ($name:ident, $elem:ty) => {
        impl $name {
            pub fn zeros(pool: &Pool, len: usize) -> Self {
                $name {
                    data: Storage::new(pool, len),
                }
            }

            pub fn from_slice(pool: &Pool, values: &[$elem]) -> Self {
                let mut f = Self::zeros(pool, values.len());
                f.data.copy_from_slice(values);
                f
            }

            pub fn constant(pool: &Pool, len: usize, value: $elem) -> Self {
                let mut f = Self::zeros(pool, len);
                f.data.fill(value);
                f
            }

            #[inline]
            pub fn len(&self) -> usize {
                self.data.len
            }

            #[inline]
            pub fn is_empty(&self) -> bool {
                self.data.len == 0
            }

            #[inline]
            pub fn pool(&self) -> &Pool {
                &self.data.pool
            }

            pub fn clone_in(&self, pool: &Pool) -> Self {
                Self::from_slice(pool, self)
            }
        }

        impl Deref for $name {
            type Target = [$elem];
            #[inline]
            fn deref(&self) -> &[$elem] {
                &self.data
            }
        }

        impl DerefMut for $name {
            #[inline]
            fn deref_mut(&mut self) -> &mut [$elem] {
                &mut self.data
            }
        }

        impl Clone for $name {
            fn clone(&self) -> Self {
                Self::from_slice(&self.data.pool, self)
            }
        }

        impl std::fmt::Debug for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.debug_struct(stringify!($name))
                    .field("len", &self.data.len)
                    .finish()
            }
        }
    };
}

/// Contiguous array of per-cell or per-face scalar values.
pub struct ScalarField {
    data: Storage<f64>,
}

/// Contiguous array of per-entry 3-vectors.
pub struct VectorField {
    data: Storage<Vec3>,
}

/// Contiguous array of per-entry rank-2 tensors.
pub struct TensorField {
    data: Storage<Tensor3>,
}

field_common!(ScalarField, f64);
field_common!(VectorField, Vec3);
field_common!(TensorField, Tensor3);

fn check_len(a: usize, b: usize, context: &'static str) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            left: a,
            right: b,
            context,
        })
    }
}

impl ScalarField {
    pub fn copy_from(&mut self, exec: &Executor, src: &ScalarField) -> Result<()> {
        check_len(self.len(), src.len(), "copy_from")?;
        exec.parallel_fill(&mut self.data, |i| src[i]);
        Ok(())
    }

    pub fn fill_with(&mut self, exec: &Executor, value: f64) {
        exec.parallel_fill(&mut self.data, |_| value);
    }

    pub fn add_assign_field(&mut self, exec: &Executor, rhs: &ScalarField) -> Result<()> {
        check_len(self.len(), rhs.len(), "+=")?;
        exec.parallel_update(&mut self.data, |i, v| *v += rhs[i]);
        Ok(())
    }

    pub fn sub_assign_field(&mut self, exec: &Executor, rhs: &ScalarField) -> Result<()> {
        check_len(self.len(), rhs.len(), "-=")?;
        exec.parallel_update(&mut self.data, |i, v| *v -= rhs[i]);
        Ok(())
    }

    pub fn mul_assign_field(&mut self, exec: &Executor, rhs: &ScalarField) -> Result<()> {
        check_len(self.len(), rhs.len(), "*=")?;
        exec.parallel_update(&mut self.data, |i, v| *v *= rhs[i]);
        Ok(())
    }

    /// Elementwise division; any exactly-zero divisor entry is an error
    /// rather than an IEEE Inf pass-through.
    pub fn div_assign_field(&mut self, exec: &Executor, rhs: &ScalarField) -> Result<()> {
        check_len(self.len(), rhs.len(), "/=")?;
        if let Some(index) = first_zero(exec, rhs) {
            return Err(Error::DivisionByZero { index });
        }
        exec.parallel_update(&mut self.data, |i, v| *v /= rhs[i]);
        Ok(())
    }

    pub fn add_assign_scalar(&mut self, exec: &Executor, s: f64) {
        exec.parallel_update(&mut self.data, |_, v| *v += s);
    }

    pub fn scale(&mut self, exec: &Executor, s: f64) {
        exec.parallel_update(&mut self.data, |_, v| *v *= s);
    }

    pub fn negate(&mut self, exec: &Executor) {
        exec.parallel_update(&mut self.data, |_, v| *v = -*v);
    }

    /// `self += alpha * x`, the Krylov update kernel.
    pub fn axpy(&mut self, exec: &Executor, alpha: f64, x: &ScalarField) -> Result<()> {
        check_len(self.len(), x.len(), "axpy")?;
        exec.parallel_update(&mut self.data, |i, v| *v += alpha * x[i]);
        Ok(())
    }

    /// `self = x + beta * self` (search-direction update).
    pub fn xpby(&mut self, exec: &Executor, x: &ScalarField, beta: f64) -> Result<()> {
        check_len(self.len(), x.len(), "xpby")?;
        exec.parallel_update(&mut self.data, |i, v| *v = x[i] + beta * *v);
        Ok(())
    }

    pub fn sqr(&mut self, exec: &Executor) {
        exec.parallel_update(&mut self.data, |_, v| *v = *v * *v);
    }

    pub fn sqrt_assign(&mut self, exec: &Executor) {
        exec.parallel_update(&mut self.data, |_, v| *v = v.sqrt());
    }

    /// OpenFOAM-style `pos0`: 1 where the entry is ≥ 0, else 0.
    pub fn pos0(&mut self, exec: &Executor) {
        exec.parallel_update(&mut self.data, |_, v| *v = if *v >= 0.0 { 1.0 } else { 0.0 });
    }

    pub fn dot(&self, exec: &Executor, other: &ScalarField) -> Result<f64> {
        check_len(self.len(), other.len(), "dot")?;
        Ok(exec.reduction_sum(self.len(), |i| self[i] * other[i]))
    }

    pub fn min(&self, exec: &Executor) -> Result<f64> {
        exec.reduction_compare(self.len(), CompareOp::Min, |i| self[i])
    }

    pub fn max(&self, exec: &Executor) -> Result<f64> {
        exec.reduction_compare(self.len(), CompareOp::Max, |i| self[i])
    }

    /// Σ|fᵢ|.
    pub fn sum_mag(&self, exec: &Executor) -> f64 {
        exec.reduction_sum(self.len(), |i| self[i].abs())
    }

    pub fn sum(&self, exec: &Executor) -> f64 {
        exec.reduction_sum(self.len(), |i| self[i])
    }
}

fn first_zero(exec: &Executor, f: &ScalarField) -> Option<usize> {
    // Reduction over indices: smallest index holding exactly 0, or len.
    let n = f.len();
    if n == 0 {
        return None;
    }
    let hit = exec
        .reduction_compare(n, CompareOp::Min, |i| {
            if f[i] == 0.0 {
                i as f64
            } else {
                n as f64
            }
        })
        .expect("non-empty by construction");
    let hit = hit as usize;
    (hit < n).then_some(hit)
}

impl VectorField {
    pub fn copy_from(&mut self, exec: &Executor, src: &VectorField) -> Result<()> {
        check_len(self.len(), src.len(), "copy_from")?;
        exec.parallel_fill(&mut self.data, |i| src[i]);
        Ok(())
    }

    pub fn add_assign_field(&mut self, exec: &Executor, rhs: &VectorField) -> Result<()> {
        check_len(self.len(), rhs.len(), "+=")?;
        exec.parallel_update(&mut self.data, |i, v| *v += rhs[i]);
        Ok(())
    }

    pub fn sub_assign_field(&mut self, exec: &Executor, rhs: &VectorField) -> Result<()> {
        check_len(self.len(), rhs.len(), "-=")?;
        exec.parallel_update(&mut self.data, |i, v| *v -= rhs[i]);
        Ok(())
    }

    pub fn negate(&mut self, exec: &Executor) {
        exec.parallel_update(&mut self.data, |_, v| *v = -*v);
    }

    pub fn scale(&mut self, exec: &Executor, s: f64) {
        exec.parallel_update(&mut self.data, |_, v| *v = *v * s);
    }

    /// Entrywise `self *= s[i]` with a scalar field.
    pub fn mul_assign_scalar_field(&mut self, exec: &Executor, s: &ScalarField) -> Result<()> {
        check_len(self.len(), s.len(), "*= scalar field")?;
        exec.parallel_update(&mut self.data, |i, v| *v = *v * s[i]);
        Ok(())
    }

    /// Euclidean norm per entry.
    pub fn mag_into(&self, exec: &Executor, out: &mut ScalarField) -> Result<()> {
        check_len(self.len(), out.len(), "mag")?;
        exec.parallel_fill(&mut out.data, |i| self[i].norm());
        Ok(())
    }

    pub fn mag(&self, exec: &Executor, pool: &Pool) -> ScalarField {
        let mut out = ScalarField::zeros(pool, self.len());
        self.mag_into(exec, &mut out).expect("sized to match");
        out
    }

    pub fn component_into(&self, exec: &Executor, k: usize, out: &mut ScalarField) -> Result<()> {
        check_len(self.len(), out.len(), "component")?;
        exec.parallel_fill(&mut out.data, |i| self[i].component(k));
        Ok(())
    }

    pub fn component(&self, exec: &Executor, k: usize, pool: &Pool) -> ScalarField {
        let mut out = ScalarField::zeros(pool, self.len());
        self.component_into(exec, k, &mut out).expect("sized to match");
        out
    }

    pub fn replace_component(
        &mut self,
        exec: &Executor,
        k: usize,
        values: &ScalarField,
    ) -> Result<()> {
        check_len(self.len(), values.len(), "replace component")?;
        exec.parallel_update(&mut self.data, |i, v| v.set_component(k, values[i]));
        Ok(())
    }

    /// Outer product per entry: `out[i] = self[i] ⊗ other[i]`.
    pub fn outer(&self, exec: &Executor, other: &VectorField, pool: &Pool) -> Result<TensorField> {
        check_len(self.len(), other.len(), "outer")?;
        let mut out = TensorField::zeros(pool, self.len());
        exec.parallel_fill(&mut out.data, |i| self[i].outer(other[i]));
        Ok(out)
    }

    pub fn max_mag(&self, exec: &Executor) -> Result<f64> {
        exec.reduction_compare(self.len(), CompareOp::Max, |i| self[i].norm())
    }
}

impl TensorField {
    pub fn transpose(&self, exec: &Executor, pool: &Pool) -> TensorField {
        let mut out = TensorField::zeros(pool, self.len());
        exec.parallel_fill(&mut out.data, |i| self[i].transpose());
        out
    }

    pub fn symm(&self, exec: &Executor, pool: &Pool) -> TensorField {
        let mut out = TensorField::zeros(pool, self.len());
        exec.parallel_fill(&mut out.data, |i| self[i].symm());
        out
    }

    pub fn dev2(&self, exec: &Executor, pool: &Pool) -> TensorField {
        let mut out = TensorField::zeros(pool, self.len());
        exec.parallel_fill(&mut out.data, |i| self[i].dev2());
        out
    }

    pub fn dev_two_symm(&self, exec: &Executor, pool: &Pool) -> TensorField {
        let mut out = TensorField::zeros(pool, self.len());
        exec.parallel_fill(&mut out.data, |i| self[i].dev_two_symm());
        out
    }

    pub fn component(&self, exec: &Executor, i: usize, j: usize, pool: &Pool) -> ScalarField {
        let mut out = ScalarField::zeros(pool, self.len());
        exec.parallel_fill(&mut out.data, |e| self[e].get(i, j));
        out
    }
}
