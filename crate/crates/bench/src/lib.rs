//! Benchmarks for the enumeration core live under `benches/`.
