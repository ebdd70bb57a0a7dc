//! Empty on purpose: the acceptance suite lives in `tests/acceptance.rs`.
