//! Strategy-dispatched block allocator with live-block accounting.
//!
//! All field storage in the crate is obtained here. Two strategies are
//! implemented behind one interface:
//!
//! * **dummy** — every allocation goes straight to the system allocator;
//!   useful as a baseline and for measuring peak demand;
//! * **fixedSize** — one contiguous backing block of fixed capacity is
//!   obtained up front (exactly one system allocation for the lifetime of
//!   the pool); allocation and free are pointer bookkeeping on a sorted
//!   free list with first-fit placement and coalescing of adjacent free
//!   ranges. Exhaustion is a fatal error for the simulation.
//!
//! A third, dynamic-size strategy is an interface slot only: constructing
//! it reports `NotImplemented` so a third-party pool can be dropped in
//! later without touching call sites.
//!
//! Allocated regions are zero-initialized so results never depend on reuse
//! history. All entry points are serialized per pool; allocation is not a
//! concurrent fast path here.

use std::alloc::{self, Layout};
use std::collections::HashMap;
use std::ptr::NonNull;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Backing alignment of the fixed-size pool block.
const BACKING_ALIGN: usize = 4096;

static NEXT_POOL_ID: AtomicU64 = AtomicU64::new(1);

/// Allocation strategy selected at pool creation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolStrategy {
    /// Pass-through to the system allocator, one call per block.
    Dummy,
    /// Single pre-allocated block of `capacity` bytes.
    FixedSize { capacity: usize },
    /// Reserved slot for a third-party dynamic pool.
    Dynamic,
}

impl PoolStrategy {
    pub fn label(&self) -> String {
        match self {
            PoolStrategy::Dummy => "dummy".to_string(),
            PoolStrategy::FixedSize { capacity } => format!("fixedSize:{capacity}"),
            PoolStrategy::Dynamic => "dynamic".to_string(),
        }
    }
}

/// Opaque token for a live allocation. The `offset` is meaningful for the
/// fixed-size strategy only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockHandle {
    pool_id: u64,
    id: u64,
    pub offset: usize,
    pub size: usize,
    pub alignment: usize,
}

/// A live allocation: handle plus the data pointer it resolves to.
pub struct Block {
    pub handle: BlockHandle,
    pub(crate) ptr: NonNull<u8>,
}

impl Block {
    pub fn as_ptr(&self) -> *mut u8 {
        self.ptr.as_ptr()
    }
}

/// Counters snapshot. `live_blocks == alloc_calls - free_calls` and, for
/// the fixed-size strategy,
/// `in_use + reusable_free + fragmentation_padding == capacity` at all
/// times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PoolStats {
    /// Backing capacity in bytes; `None` for the dummy strategy.
    pub capacity: Option<usize>,
    pub in_use: usize,
    pub peak_in_use: usize,
    pub live_blocks: usize,
    pub system_alloc_calls: usize,
    pub alloc_calls: usize,
    pub free_calls: usize,
    /// Bytes in the free list, reusable by subsequent allocations.
    pub reusable_free: usize,
    /// Bytes lost to alignment padding in front of live blocks.
    pub fragmentation_padding: usize,
}

struct LiveBlock {
    /// Reserved range start (fixed) — data may start later due to alignment.
    reserved_start: usize,
    reserved_len: usize,
    data_offset: usize,
    size: usize,
    /// Dummy strategy: the per-block system allocation to release on free.
    sys: Option<(NonNull<u8>, Layout)>,
}

struct PoolInner {
    pool_id: u64,
    strategy: PoolStrategy,
    backing: Option<(NonNull<u8>, Layout)>,
    /// Sorted, disjoint, maximal free ranges `(offset, len)`.
    free_list: Vec<(usize, usize)>,
    live: HashMap<u64, LiveBlock>,
    next_block_id: u64,
    in_use: usize,
    peak_in_use: usize,
    padding: usize,
    system_alloc_calls: usize,
    alloc_calls: usize,
    free_calls: usize,
}

unsafe impl Send for PoolInner {}

/// Shared handle to a pool. Cloning is cheap; all clones address the same
/// storage and accounting.
#[derive(Clone)]
pub struct Pool {
    inner: Arc<Mutex<PoolInner>>,
}

impl Pool {
    pub fn new(strategy: PoolStrategy) -> Result<Pool> {
        let pool_id = NEXT_POOL_ID.fetch_add(1, Ordering::Relaxed);
        let mut inner = PoolInner {
            pool_id,
            strategy,
            backing: None,
            free_list: Vec::new(),
            live: HashMap::new(),
            next_block_id: 0,
            in_use: 0,
            peak_in_use: 0,
            padding: 0,
            system_alloc_calls: 0,
            alloc_calls: 0,
            free_calls: 0,
        };
        match strategy {
            PoolStrategy::Dummy => {}
            PoolStrategy::FixedSize { capacity } => {
                if capacity == 0 {
                    return Err(Error::NonPositiveInput {
                        what: "fixedSize capacity",
                        value: 0.0,
                    });
                }
                let layout = Layout::from_size_align(capacity, BACKING_ALIGN)
                    .map_err(|_| Error::BackingAllocationFailed { requested: capacity })?;
                let ptr = unsafe { alloc::alloc_zeroed(layout) };
                let ptr = NonNull::new(ptr)
                    .ok_or(Error::BackingAllocationFailed { requested: capacity })?;
                inner.backing = Some((ptr, layout));
                inner.free_list.push((0, capacity));
                inner.system_alloc_calls = 1;
            }
            PoolStrategy::Dynamic => {
                return Err(Error::NotImplemented {
                    what: "dynamic-size pool strategy",
                });
            }
        }
        Ok(Pool {
            inner: Arc::new(Mutex::new(inner)),
        })
    }

    /// Convenience for tests and short-lived tools: a fixed pool sized in
    /// mebibytes.
    pub fn fixed_mib(mib: usize) -> Result<Pool> {
        Pool::new(PoolStrategy::FixedSize {
            capacity: mib << 20,
        })
    }

    pub fn strategy(&self) -> PoolStrategy {
        self.inner.lock().unwrap().strategy
    }

    /// Acquire a zero-initialized block of `size` bytes aligned to
    /// `alignment` (a power of two).
    pub fn allocate(&self, size: usize, alignment: usize) -> Result<Block> {
        assert!(
            alignment.is_power_of_two(),
            "allocation alignment must be a power of two"
        );
        if size == 0 {
            return Err(Error::NonPositiveInput {
                what: "allocation size",
                value: 0.0,
            });
        }
        let mut inner = self.inner.lock().unwrap();
        let pool_id = inner.pool_id;
        let id = inner.next_block_id;
        match inner.strategy {
            PoolStrategy::Dummy => {
                let layout = Layout::from_size_align(size, alignment)
                    .map_err(|_| Error::BackingAllocationFailed { requested: size })?;
                let ptr = unsafe { alloc::alloc_zeroed(layout) };
                let ptr =
                    NonNull::new(ptr).ok_or(Error::BackingAllocationFailed { requested: size })?;
                inner.next_block_id += 1;
                inner.alloc_calls += 1;
                inner.system_alloc_calls += 1;
                inner.in_use += size;
                inner.peak_in_use = inner.peak_in_use.max(inner.in_use);
                inner.live.insert(
                    id,
                    LiveBlock {
                        reserved_start: 0,
                        reserved_len: size,
                        data_offset: 0,
                        size,
                        sys: Some((ptr, layout)),
                    },
                );
                Ok(Block {
                    handle: BlockHandle {
                        pool_id,
                        id,
                        offset: 0,
                        size,
                        alignment,
                    },
                    ptr,
                })
            }
            PoolStrategy::FixedSize { capacity } => {
                // First fit over the sorted free list.
                let mut found = None;
                for (idx, &(start, len)) in inner.free_list.iter().enumerate() {
                    let data = round_up(start, alignment);
                    let end = data + size;
                    if end <= start + len {
                        found = Some((idx, start, len, data, end));
                        break;
                    }
                }
                let Some((idx, start, len, data, end)) = found else {
                    let available = inner.free_list.iter().map(|&(_, l)| l).sum();
                    return Err(Error::PoolExhausted {
                        requested: size,
                        available,
                    });
                };
                // Reserve [start, end); the pre-gap [start, data) is
                // alignment padding owned by the block.
                let remaining = start + len - end;
                if remaining == 0 {
                    inner.free_list.remove(idx);
                } else {
                    inner.free_list[idx] = (end, remaining);
                }
                let base = inner.backing.unwrap().0;
                let ptr = unsafe { NonNull::new_unchecked(base.as_ptr().add(data)) };
                unsafe { std::ptr::write_bytes(ptr.as_ptr(), 0, size) };
                inner.next_block_id += 1;
                inner.alloc_calls += 1;
                inner.in_use += size;
                inner.padding += data - start;
                inner.peak_in_use = inner.peak_in_use.max(inner.in_use);
                debug_assert!(end <= capacity);
                inner.live.insert(
                    id,
                    LiveBlock {
                        reserved_start: start,
                        reserved_len: end - start,
                        data_offset: data,
                        size,
                        sys: None,
                    },
                );
                Ok(Block {
                    handle: BlockHandle {
                        pool_id,
                        id,
                        offset: data,
                        size,
                        alignment,
                    },
                    ptr,
                })
            }
            PoolStrategy::Dynamic => unreachable!("dynamic pools cannot be constructed"),
        }
    }

    /// Release a live block. The space becomes immediately reusable; the
    /// fixed-size strategy performs no system deallocation.
    pub fn free(&self, handle: BlockHandle) -> Result<()> {
        let mut inner = self.inner.lock().unwrap();
        if handle.pool_id != inner.pool_id || handle.id >= inner.next_block_id {
            return Err(Error::UnknownHandle { id: handle.id });
        }
        let Some(block) = inner.live.remove(&handle.id) else {
            return Err(Error::DoubleFree { id: handle.id });
        };
        inner.free_calls += 1;
        inner.in_use -= block.size;
        match block.sys {
            Some((ptr, layout)) => unsafe { alloc::dealloc(ptr.as_ptr(), layout) },
            None => {
                inner.padding -= block.data_offset - block.reserved_start;
                insert_coalesced(
                    &mut inner.free_list,
                    block.reserved_start,
                    block.reserved_len,
                );
            }
        }
        Ok(())
    }

    pub fn stats(&self) -> PoolStats {
        let inner = self.inner.lock().unwrap();
        let capacity = match inner.strategy {
            PoolStrategy::FixedSize { capacity } => Some(capacity),
            _ => None,
        };
        PoolStats {
            capacity,
            in_use: inner.in_use,
            peak_in_use: inner.peak_in_use,
            live_blocks: inner.live.len(),
            system_alloc_calls: inner.system_alloc_calls,
            alloc_calls: inner.alloc_calls,
            free_calls: inner.free_calls,
            reusable_free: inner.free_list.iter().map(|&(_, l)| l).sum(),
            fragmentation_padding: inner.padding,
        }
    }
}

impl Drop for PoolInner {
    fn drop(&mut self) {
        // Release anything still live (normally everything is freed by
        // Field drops before the pool goes away).
        for (_, block) in self.live.drain() {
            if let Some((ptr, layout)) = block.sys {
                unsafe { alloc::dealloc(ptr.as_ptr(), layout) };
            }
        }
        if let Some((ptr, layout)) = self.backing.take() {
            unsafe { alloc::dealloc(ptr.as_ptr(), layout) };
        }
    }
}

fn round_up(v: usize, align: usize) -> usize {
    (v + align - 1) & !(align - 1)
}

/// Insert a range into a sorted free list, merging with adjacent ranges.
fn insert_coalesced(free: &mut Vec<(usize, usize)>, start: usize, len: usize) {
    let idx = free.partition_point(|&(s, _)| s < start);
    let merges_prev = idx > 0 && free[idx - 1].0 + free[idx - 1].1 == start;
    let merges_next = idx < free.len() && start + len == free[idx].0;
    match (merges_prev, merges_next) {
        (true, true) => {
            free[idx - 1].1 += len + free[idx].1;
            free.remove(idx);
        }
        (true, false) => free[idx - 1].1 += len,
        (false, true) => {
            free[idx].0 = start;
            free[idx].1 += len;
        }
        (false, false) => free.insert(idx, (start, len)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_pool_creation_contract() {
        let pool = Pool::new(PoolStrategy::FixedSize { capacity: 1 << 20 }).unwrap();
        let s = pool.stats();
        assert_eq!(s.capacity, Some(1 << 20));
        assert_eq!(s.in_use, 0);
        assert_eq!(s.system_alloc_calls, 1);
        assert_eq!(s.reusable_free, 1 << 20);
    }

    #[test]
    fn dummy_pool_no_system_alloc_at_creation() {
        let pool = Pool::new(PoolStrategy::Dummy).unwrap();
        assert_eq!(pool.stats().system_alloc_calls, 0);
    }

    #[test]
    fn fixed_zero_capacity_rejected() {
        assert!(Pool::new(PoolStrategy::FixedSize { capacity: 0 }).is_err());
    }

    #[test]
    fn dynamic_strategy_is_reserved() {
        assert!(matches!(
            Pool::new(PoolStrategy::Dynamic),
            Err(Error::NotImplemented { .. })
        ));
    }

    #[test]
    fn bump_layout_from_empty_pool() {
        let pool = Pool::new(PoolStrategy::FixedSize { capacity: 1024 }).unwrap();
        let a = pool.allocate(256, 8).unwrap();
        let b = pool.allocate(256, 8).unwrap();
        assert_eq!(a.handle.offset, 0);
        assert_eq!(b.handle.offset, 256);
    }

    #[test]
    fn exhaustion_is_fatal_error() {
        let pool = Pool::new(PoolStrategy::FixedSize { capacity: 1024 }).unwrap();
        assert!(matches!(
            pool.allocate(2048, 8),
            Err(Error::PoolExhausted { .. })
        ));
    }

    #[test]
    fn alignment_contract() {
        let pool = Pool::new(PoolStrategy::FixedSize { capacity: 4096 }).unwrap();
        let _pad = pool.allocate(10, 8).unwrap();
        let b = pool.allocate(100, 64).unwrap();
        assert_eq!(b.handle.offset % 64, 0);
    }

    #[test]
    fn freed_space_is_reused() {
        let pool = Pool::new(PoolStrategy::FixedSize { capacity: 1024 }).unwrap();
        let a = pool.allocate(256, 8).unwrap();
        let a_off = a.handle.offset;
        pool.free(a.handle).unwrap();
        let b = pool.allocate(256, 8).unwrap();
        // First fit from an empty pool puts the new block exactly where
        // the freed one was.
        assert_eq!(b.handle.offset, a_off);
    }

    #[test]
    fn double_free_detected() {
        let pool = Pool::new(PoolStrategy::FixedSize { capacity: 1024 }).unwrap();
        let a = pool.allocate(64, 8).unwrap();
        pool.free(a.handle).unwrap();
        assert!(matches!(
            pool.free(a.handle),
            Err(Error::DoubleFree { .. })
        ));
    }

    #[test]
    fn foreign_handle_detected() {
        let p1 = Pool::new(PoolStrategy::FixedSize { capacity: 1024 }).unwrap();
        let p2 = Pool::new(PoolStrategy::FixedSize { capacity: 1024 }).unwrap();
        let a = p1.allocate(64, 8).unwrap();
        assert!(matches!(p2.free(a.handle), Err(Error::UnknownHandle { .. })));
        p1.free(a.handle).unwrap();
    }

    #[test]
    fn in_use_returns_to_zero() {
        let pool = Pool::new(PoolStrategy::FixedSize { capacity: 4096 }).unwrap();
        let blocks: Vec<_> = (0..4).map(|_| pool.allocate(512, 64).unwrap()).collect();
        for b in blocks {
            pool.free(b.handle).unwrap();
        }
        let s = pool.stats();
        assert_eq!(s.in_use, 0);
        assert_eq!(s.live_blocks, 0);
        assert_eq!(s.reusable_free, 4096);
        assert_eq!(s.fragmentation_padding, 0);
    }

    #[test]
    fn live_block_counting() {
        let pool = Pool::new(PoolStrategy::Dummy).unwrap();
        let a = pool.allocate(16, 8).unwrap();
        let b = pool.allocate(16, 8).unwrap();
        let c = pool.allocate(16, 8).unwrap();
        pool.free(b.handle).unwrap();
        let s = pool.stats();
        assert_eq!(s.live_blocks, 2);
        assert_eq!(s.live_blocks, s.alloc_calls - s.free_calls);
        pool.free(a.handle).unwrap();
        pool.free(c.handle).unwrap();
    }

    #[test]
    fn peak_is_monotone() {
        let pool = Pool::new(PoolStrategy::FixedSize { capacity: 1024 }).unwrap();
        let a = pool.allocate(256, 8).unwrap();
        pool.free(a.handle).unwrap();
        let b = pool.allocate(128, 8).unwrap();
        assert!(pool.stats().peak_in_use >= 256);
        pool.free(b.handle).unwrap();
    }

    #[test]
    fn dummy_counts_one_system_call_per_alloc() {
        let pool = Pool::new(PoolStrategy::Dummy).unwrap();
        let mut blocks = Vec::new();
        for _ in 0..10 {
            blocks.push(pool.allocate(64, 8).unwrap());
        }
        let s = pool.stats();
        assert_eq!(s.system_alloc_calls, 10);
        assert_eq!(s.system_alloc_calls, s.alloc_calls);
        for b in blocks {
            pool.free(b.handle).unwrap();
        }
    }

    #[test]
    fn allocations_are_zero_initialized() {
        let pool = Pool::new(PoolStrategy::FixedSize { capacity: 1024 }).unwrap();
        let a = pool.allocate(128, 8).unwrap();
        unsafe { std::ptr::write_bytes(a.as_ptr(), 0xAB, 128) };
        pool.free(a.handle).unwrap();
        let b = pool.allocate(128, 8).unwrap();
        let bytes = unsafe { std::slice::from_raw_parts(b.as_ptr(), 128) };
        assert!(bytes.iter().all(|&x| x == 0));
        pool.free(b.handle).unwrap();
    }

    #[test]
    fn coalescing_restores_one_range() {
        let pool = Pool::new(PoolStrategy::FixedSize { capacity: 1024 }).unwrap();
        let a = pool.allocate(128, 8).unwrap();
        let b = pool.allocate(128, 8).unwrap();
        let c = pool.allocate(128, 8).unwrap();
        pool.free(a.handle).unwrap();
        pool.free(c.handle).unwrap();
        pool.free(b.handle).unwrap();
        // After freeing in a hole-punching order, a 1024-byte allocation
        // must fit again: adjacent ranges were merged.
        let d = pool.allocate(1024, 8).unwrap();
        assert_eq!(d.handle.offset, 0);
        pool.free(d.handle).unwrap();
    }
}
