//! Criterion benchmarks for chartkit live in `benches/`.
