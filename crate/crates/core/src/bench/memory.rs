//! Peak heap measurement of a single prune run.
//!
//! Binaries that want [`memory_probe`] install the tracking allocator:
//!
//! ```ignore
//! #[global_allocator]
//! static ALLOC: sparsegpt_core::bench::TrackingAllocator = sparsegpt_core::bench::TrackingAllocator;
//! ```
//!
//! Counters are per thread, so the probe only sees allocations made by the
//! calling thread; the prune it runs is single-threaded.

use std::alloc::{GlobalAlloc, Layout, System};
use std::cell::Cell;
use std::sync::atomic::{AtomicBool, Ordering};

use super::generate_instance;
use crate::error::{Error, Result};
use crate::hessian::Lambda;
use crate::pruner::{prune_lazy, PruneConfig};

static INSTALLED: AtomicBool = AtomicBool::new(false);

thread_local! {
    static CURRENT: Cell<isize> = const { Cell::new(0) };
    static PEAK: Cell<isize> = const { Cell::new(0) };
}

/// [`System`] plus per-thread live/peak byte counters.
pub struct TrackingAllocator;

fn record(delta: isize) {
    let _ = CURRENT.try_with(|cur| {
        let now = cur.get() + delta;
        cur.set(now);
        let _ = PEAK.try_with(|peak| {
            if now > peak.get() {
                peak.set(now);
            }
        });
    });
}

unsafe impl GlobalAlloc for TrackingAllocator {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        if !INSTALLED.load(Ordering::Relaxed) {
            INSTALLED.store(true, Ordering::Relaxed);
        }
        let p = System.alloc(layout);
        if !p.is_null() {
            record(layout.size() as isize);
        }
        p
    }

    unsafe fn alloc_zeroed(&self, layout: Layout) -> *mut u8 {
        if !INSTALLED.load(Ordering::Relaxed) {
            INSTALLED.store(true, Ordering::Relaxed);
        }
        let p = System.alloc_zeroed(layout);
        if !p.is_null() {
            record(layout.size() as isize);
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout);
        record(-(layout.size() as isize));
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        let p = System.realloc(ptr, layout, new_size);
        if !p.is_null() {
            record(new_size as isize - layout.size() as isize);
        }
        p
    }
}

/// Whether [`TrackingAllocator`] is serving this process's allocations.
pub fn allocator_installed() -> bool {
    if INSTALLED.load(Ordering::Relaxed) {
        return true;
    }
    drop(std::hint::black_box(Box::new(0u64)));
    INSTALLED.load(Ordering::Relaxed)
}

/// Peak bytes allocated on this thread above the starting level while `f` runs.
pub fn peak_bytes_during<T>(f: impl FnOnce() -> T) -> Result<(T, usize)> {
    if !allocator_installed() {
        return Err(Error::AllocatorNotInstalled);
    }
    let base = CURRENT.with(Cell::get);
    PEAK.with(|p| p.set(base));
    let out = f();
    let peak = PEAK.with(Cell::get);
    Ok((out, (peak - base).max(0) as usize))
}

/// Peak heap bytes of generating a seeded `d × d` instance and pruning it at
/// 50% sparsity with lazy block `block` (mask block equal to `block`, `λ = 1`).
pub fn memory_probe(d: usize, block: usize) -> Result<usize> {
    let cfg = PruneConfig::new(0.5, block, block).with_lambda(Lambda::Fixed(1.0));
    let (res, peak) = peak_bytes_during(|| {
        let (w, x) = generate_instance(d, 0);
        prune_lazy(&cfg, &w, &x).map(drop)
    })?;
    res?;
    Ok(peak)
}
