//! Shared fixtures for the benchmark targets.

use std::sync::Arc;

use slhnet_core::components::cavity;
use slhnet_core::{SlhTriple, SpaceFactor, SpaceRegistry};

/// A fock factor plus a one-channel cavity on it.
pub fn cavity_fixture(cutoff: usize) -> (SpaceRegistry, Arc<SpaceFactor>, SlhTriple) {
    let mut registry = SpaceRegistry::new();
    let factor = registry.fock("c1", cutoff).unwrap();
    let triple = cavity(&factor, 0.5, 1.0).unwrap();
    (registry, factor, triple)
}

/// The beamsplitter-cavity netlist shipped with the repository.
pub fn example_netlist() -> String {
    let path = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../netlists/cavity_beamsplitter.slh"
    );
    std::fs::read_to_string(path).expect("example netlist exists")
}
