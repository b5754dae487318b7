//! Benchmark host crate. The library target is intentionally empty; the
//! measurements live in `benches/` and exercise `omnirelay-core` directly.
