use std::io;
use std::process::ExitCode;

use clap::Parser;

use atlp::cli::{self, Cli};

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors.
    let args = Cli::parse();
    let code = cli::run(args, &mut io::stdout(), &mut io::stderr());
    ExitCode::from(code as u8)
}
