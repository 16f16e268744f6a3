use std::io::{self, Write};
use std::process::ExitCode;

fn main() -> ExitCode {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let code = signalsim::cli::main_with_args(std::env::args_os(), &mut out);
    let _ = out.flush();
    ExitCode::from(code.clamp(0, 255) as u8)
}
