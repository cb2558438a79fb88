//! Data-parallel map helper. Grid evaluations (beampatterns, MUSIC spectra,
//! sweeps) are embarrassingly parallel; output order always follows input
//! order so results are deterministic either way.

#[cfg(feature = "parallel")]
pub(crate) fn map_indices<U, F>(count: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indices<U, F>(count: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..count).map(f).collect()
}

/// Sequential counterpart, kept available under all feature sets so the
/// bench suite can compare both paths in one binary.
pub(crate) fn map_indices_seq<U, F>(count: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..count).map(f).collect()
}
