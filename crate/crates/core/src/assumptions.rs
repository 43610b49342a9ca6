use std::fmt;

use crate::error::{Error, Result};

/// Outcome of one assumption probe.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionCheck {
    pub condition: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl AssumptionCheck {
    pub fn new(condition: &'static str, passed: bool, detail: impl Into<String>) -> Self {
        AssumptionCheck { condition, passed, detail: detail.into() }
    }
}

impl fmt::Display for AssumptionCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "pass" } else { "FAIL" };
        write!(f, "[{tag}] ({}) {}", self.condition, self.detail)
    }
}

/// Turns the first failing check into an `AssumptionViolation`.
pub fn first_failure(checks: &[AssumptionCheck]) -> Result<()> {
    match checks.iter().find(|c| !c.passed) {
        Some(c) => Err(Error::AssumptionViolation {
            condition: c.condition.to_string(),
            detail: c.detail.clone(),
        }),
        None => Ok(()),
    }
}
