//! Campaign orchestration (under construction).
