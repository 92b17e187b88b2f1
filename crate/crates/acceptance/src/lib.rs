//! Acceptance criteria for `hyperpot`, run with `cargo test -p hyperpot-acceptance`.
