//! Fixtures shared by the benchmarks.

use lfwave_core::{
    build_basic_tree, build_family, build_mask, build_wavelets, elementary_from_tree,
    seeded_assignment, Tree, WaveletSystem,
};

/// Basic tree with a seeded real mask in `[1/2, 2]`.
pub fn fixture(p: u32, s: u32, n: u32) -> (Tree, WaveletSystem) {
    let tree = build_basic_tree(p, s, n).expect("basic tree");
    let set = elementary_from_tree(&tree).expect("valid tree");
    let assignment = seeded_assignment(&set, 0.5, 2.0, 11, false);
    let mask = build_mask(&set, &assignment, 0.5, 2.0).expect("mask in bounds");
    let family = build_family(&tree, &mask).expect("family");
    let system = build_wavelets(&family).expect("wavelets");
    (tree, system)
}
