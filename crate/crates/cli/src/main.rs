mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;
use commands::Ctx;

fn run() -> Result<(), i32> {
    let argv = config::expand_args(std::env::args().collect()).map_err(|e| {
        eprintln!("nvmprobe: {e}");
        e.exit_code()
    })?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Err(1) } else { Ok(()) };
        }
    };
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .map_err(|e| {
                eprintln!("nvmprobe: cannot start thread pool: {e}");
                1
            })?;
    }
    let ctx = Ctx { out_dir: cli.out_dir };
    commands::run(&ctx, cli.command).map_err(|e| {
        eprintln!("nvmprobe: {e}");
        e.exit_code()
    })
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => ExitCode::from(code as u8),
    }
}
