//! Criterion benchmarks for the rate estimators live in `benches/`.
