use std::io::{self, IsTerminal};
use std::process::ExitCode;

fn main() -> ExitCode {
    let color = io::stderr().is_terminal() && std::env::var_os("NO_COLOR").is_none();
    let code = roofkit::cli::run_with_color(std::env::args_os(), &mut io::stdout(), &mut io::stderr(), color);
    ExitCode::from(code as u8)
}
