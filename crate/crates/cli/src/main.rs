use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(fppflow::main_with(std::env::args_os()))
}
