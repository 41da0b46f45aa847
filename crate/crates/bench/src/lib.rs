//! Empty library; this package only carries the criterion benches.
