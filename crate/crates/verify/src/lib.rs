//! Holds the acceptance gate in `tests/acceptance.rs`; run it with `cargo test -p swarm-verify`.
