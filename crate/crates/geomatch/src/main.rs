use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(geomatch::cli::run(std::env::args_os()))
}
