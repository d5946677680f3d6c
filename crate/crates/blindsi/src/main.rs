use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(blindsi::cli::run() as u8)
}
