//! Acceptance report only; see `tests/acceptance.rs`.
