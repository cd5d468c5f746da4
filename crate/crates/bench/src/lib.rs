//! Benchmark fixtures shared by the criterion benches.

use std::path::Path;

use cdi_core::corpus::{read_records, CorpusRecord};

/// Records from `fixtures/corpus/<name>`.
pub fn corpus(name: &str) -> Vec<CorpusRecord> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/corpus")
        .join(name);
    read_records(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// A function with `n` sequential guards over independent parameters, so
/// it has `2^n` paths.
pub fn sequential_guards(n: usize) -> String {
    let params: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
    let mut src = format!("def f({}):\n", params.join(", "));
    for p in &params {
        src.push_str(&format!("    if {p} is None:\n        {p} = 0\n"));
    }
    src.push_str("    return 1\n");
    src
}

/// A chain of `n` implications between adjacent integer parameters.
pub fn implication_chain(n: usize) -> String {
    (0..n)
        .map(|i| format!("((p{i} > {i}) -> (p{} < {i}))", i + 1))
        .collect::<Vec<_>>()
        .join(" ^ ")
}
