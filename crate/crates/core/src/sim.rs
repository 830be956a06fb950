//! Slot-level simulation engine (under construction).
