//! Pluggable data-parallel map. The core crate ships a sequential
//! executor; thread pools live in the std companion crate. Results are
//! always returned in input order, so reductions stay deterministic.

use alloc::vec::Vec;

pub trait Executor: Sync {
    fn map<T: Sync, R: Send>(&self, items: &[T], f: &(dyn Fn(&T) -> R + Sync)) -> Vec<R>;
    fn map_mut<T: Send, R: Send>(&self, items: &mut [T], f: &(dyn Fn(&mut T) -> R + Sync)) -> Vec<R>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T: Sync, R: Send>(&self, items: &[T], f: &(dyn Fn(&T) -> R + Sync)) -> Vec<R> {
        items.iter().map(f).collect()
    }

    fn map_mut<T: Send, R: Send>(&self, items: &mut [T], f: &(dyn Fn(&mut T) -> R + Sync)) -> Vec<R> {
        items.iter_mut().map(f).collect()
    }
}
