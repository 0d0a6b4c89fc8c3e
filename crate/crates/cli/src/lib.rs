//! Library surface of the simulator front end, kept separate from the
//! binary so the run pipeline is testable end to end.

pub mod config;
pub mod presets;
pub mod report;
pub mod runner;

use stbc_core::stbc::{build_alamouti, build_ostbc_rate_half, build_qostbc, StbcCode};
use stbc_core::{Error, Result};

/// Build a code from CLI-style arguments for `export-code`.
pub fn code_from_args(code: &str, ntx: usize) -> Result<StbcCode> {
    match code {
        "alamouti" => {
            if ntx != 2 {
                return Err(Error::Config(format!("alamouti needs --ntx 2, got {ntx}")));
            }
            Ok(build_alamouti())
        }
        "qostbc" => {
            if !ntx.is_power_of_two() || ntx < 2 {
                return Err(Error::Config(format!(
                    "qostbc needs --ntx a power of two >= 2, got {ntx}"
                )));
            }
            build_qostbc(ntx.trailing_zeros())
        }
        "ostbc_r12" => build_ostbc_rate_half(ntx),
        _ => Err(Error::Config(format!(
            "unknown code `{code}`; expected qostbc, ostbc_r12 or alamouti"
        ))),
    }
}

/// Stable process exit code per error category.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 2,
        Error::Shape(_) => 3,
        Error::Numeric(_) => 4,
        Error::Complexity(_) => 5,
        Error::Estimation(_) => 6,
        Error::Usage(_) => 7,
    }
}

/// Machine-readable error category name.
pub fn error_category(err: &Error) -> &'static str {
    match err {
        Error::Config(_) => "config",
        Error::Shape(_) => "shape",
        Error::Numeric(_) => "numeric",
        Error::Complexity(_) => "complexity",
        Error::Estimation(_) => "estimation",
        Error::Usage(_) => "usage",
    }
}
