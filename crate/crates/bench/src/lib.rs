//! Criterion benchmarks for the integrator kernels; see `benches/`.
