use std::process::ExitCode;

fn main() -> ExitCode {
    spectral_echo::cli::main()
}
