//! Benchmarks for the ngnep solvers live in `benches/`.
