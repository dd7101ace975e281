use std::process::ExitCode;

fn main() -> ExitCode {
    tfwa_harness::cli::main_with(std::env::args_os())
}
