//! Holds the `acceptance` test target; run it with
//! `cargo test -p rtkrylov-validation --test acceptance`.
