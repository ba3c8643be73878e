//! Criterion benchmarks for the assurance-case engine; see `benches/`.
