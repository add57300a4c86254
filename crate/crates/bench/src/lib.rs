//! Shared fixtures for the engine benchmarks: deterministic disordered
//! chains at the sizes the studies actually run.

use chainscope_core::{random_chain, ChainSpec};

/// Disordered chain with couplings in [0.5, 1.5] and zero site energies;
/// seeded per size so benchmark inputs never drift between runs.
pub fn bench_chain(n_sites: usize) -> ChainSpec {
    random_chain(n_sites, 0.5, 1.5, vec![0.0; n_sites], 9000 + n_sites as u64)
        .expect("benchmark chain")
}
