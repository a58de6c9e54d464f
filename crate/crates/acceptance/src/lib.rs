//! Acceptance criteria for `phasedecay`; see `tests/acceptance.rs`.
