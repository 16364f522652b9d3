//! SET-order diagnostics (placeholder).
