//! Command-line surface and experiment runner for `order2phi`.

pub mod commands;
pub mod experiments;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const VERIFIED_FAILURE: u8 = 2;
    pub const USAGE: u8 = 64;
    pub const INTERNAL: u8 = 70;
}
