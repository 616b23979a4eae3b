use std::process::ExitCode;

fn main() -> ExitCode {
    stableks_cli::main_with_args(std::env::args_os().collect())
}
