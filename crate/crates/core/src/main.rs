use std::process::ExitCode;

fn main() -> ExitCode {
    dpairs::cli::main_with_args(std::env::args_os())
}
