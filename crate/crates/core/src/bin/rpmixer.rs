use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(rpmixer::cli::run(std::env::args_os()))
}
