//! Criterion benchmarks for the queuetail kernels live under `benches/`.
