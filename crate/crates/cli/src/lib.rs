//! The `mope2` command-line harness as a library, so that tests can drive
//! commands without spawning processes.

pub mod commands;
pub mod config;
pub mod output;

use std::fmt;

/// A bad invocation or configuration (exit code 1).
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// `verify-bound` found instances where the bound fails (exit code 3).
#[derive(Debug)]
pub struct BoundViolation {
    pub failures: usize,
    pub instances: usize,
}

impl fmt::Display for BoundViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "bound violated in {} of {} instances", self.failures, self.instances)
    }
}

impl std::error::Error for BoundViolation {}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;

pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<BoundViolation>() {
            return EXIT_VIOLATION;
        }
        if cause.is::<UsageError>() {
            return EXIT_USAGE;
        }
        if let Some(e) = cause.downcast_ref::<mope2_core::Error>() {
            if matches!(
                e,
                mope2_core::Error::InvalidConfig(_) | mope2_core::Error::UnknownEnvironment(_)
            ) {
                return EXIT_USAGE;
            }
        }
    }
    EXIT_RUNTIME
}
