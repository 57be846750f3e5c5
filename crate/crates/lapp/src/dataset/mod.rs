//! Dataset generation (in progress).
