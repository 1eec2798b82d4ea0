use std::process::ExitCode;

fn main() -> ExitCode {
    rician_df::cli::main_with_args(std::env::args_os())
}
