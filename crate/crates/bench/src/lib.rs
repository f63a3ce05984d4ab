//! Criterion benchmarks live in `benches/`; `tests/acceptance.rs` checks
//! the benchmarked workloads.
