use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(transient_lab::harness::main_with_args(std::env::args_os()))
}
