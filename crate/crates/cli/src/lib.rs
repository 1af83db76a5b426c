//! Library side of the `repchain` command-line tool: configuration loading,
//! the commands and result emission.

pub mod commands;
pub mod config;
pub mod output;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const VALIDATION: u8 = 1;
    pub const RUNTIME: u8 = 2;
}

/// Exit code for a library error: bad inputs are validation errors,
/// everything that goes wrong while running is a runtime error.
pub fn exit_code(e: &repchain::Error) -> u8 {
    use repchain::Error::*;
    match e {
        InvalidParameter { .. }
        | ArityMismatch { .. }
        | QubitOutOfRange { .. }
        | InvalidStrategy(_)
        | InvalidChain(_)
        | OutOfBounds(_) => exit::VALIDATION,
        _ => exit::RUNTIME,
    }
}
