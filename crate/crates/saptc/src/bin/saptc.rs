use std::process::ExitCode;

fn main() -> ExitCode {
    saptc::cli::run(std::env::args_os())
}
