use clap::Parser;

fn main() -> std::process::ExitCode {
    let cli = mccst::cli::Cli::parse();
    match mccst::cli::execute(cli) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}
