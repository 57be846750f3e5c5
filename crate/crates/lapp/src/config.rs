//! Run configuration (stub; filled in with the CLI).
