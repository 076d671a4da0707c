//! Criterion benchmarks for the faithsim kernels; see `benches/kernels.rs`.
