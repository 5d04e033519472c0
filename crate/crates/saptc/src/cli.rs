//! Command-line front end.

use std::ffi::OsString;
use std::process::ExitCode;

pub fn run<I, T>(_argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    ExitCode::from(2)
}
