use std::process::ExitCode;

fn main() -> ExitCode {
    let outcome = aalkit::cli::run(std::env::args_os());
    print!("{}", outcome.report);
    ExitCode::from(outcome.status as u8)
}
