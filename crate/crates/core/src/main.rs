use std::panic;
use std::process::ExitCode;

fn main() -> ExitCode {
    let code = panic::catch_unwind(|| ctrkit::cli::run(std::env::args_os())).unwrap_or(ctrkit::cli::EXIT_INTERNAL);
    ExitCode::from(code as u8)
}
