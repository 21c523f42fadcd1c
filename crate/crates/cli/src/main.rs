use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(noma_fbl_cli::app::run_from(std::env::args_os()))
}
