//! Data-parallel inner loops with a sequential fallback.
//!
//! With the default `parallel` feature the slot-wise helpers fan out over
//! rayon; built with `--no-default-features` the same entry points run
//! serially. The explicitly serial variants stay available either way so
//! the bench suite can compare the two paths in one binary.
//!
//! Only per-slot writes go parallel. Scalar reductions stay sequential
//! everywhere so that output files are byte-reproducible.

/// Execution mode for the slot-wise helpers: `Auto` follows the crate
/// feature, `Serial` forces the fallback (the bench suite compares both
/// in one binary).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ExecMode {
    #[default]
    Auto,
    Serial,
}

/// Apply `f` to each slot of `out`, indexed.
pub fn for_each_slot<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync,
{
    for_each_slot_mode(ExecMode::Auto, out, f);
}

/// [`for_each_slot`] with an explicit execution mode.
pub fn for_each_slot_mode<T, F>(mode: ExecMode, out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync,
{
    match mode {
        ExecMode::Serial => for_each_slot_serial(out, f),
        ExecMode::Auto => {
            #[cfg(feature = "parallel")]
            {
                use rayon::prelude::*;
                out.par_iter_mut().enumerate().for_each(|(i, slot)| f(i, slot));
            }
            #[cfg(not(feature = "parallel"))]
            for_each_slot_serial(out, f);
        }
    }
}

/// Serial reference path for [`for_each_slot`].
pub fn for_each_slot_serial<T, F>(out: &mut [T], f: F)
where
    F: Fn(usize, &mut T),
{
    for (i, slot) in out.iter_mut().enumerate() {
        f(i, slot);
    }
}

/// Run two closures, in parallel when the feature is on.
pub fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    #[cfg(feature = "parallel")]
    {
        rayon::join(a, b)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (a(), b())
    }
}
