use std::process::ExitCode;

fn main() -> ExitCode {
    let outcome = seqsample::cli::run_from(std::env::args_os());
    if outcome.exit_code == 0 {
        println!("{}", outcome.output);
    } else {
        eprintln!("{}", outcome.output.trim_end());
    }
    ExitCode::from(outcome.exit_code as u8)
}
