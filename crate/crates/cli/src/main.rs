mod args;
mod commands;
mod output;

use std::process::ExitCode;

use anyhow::Context;
use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command, FileConfig};

const EXIT_USAGE: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

/// The error and its causes, skipping causes already quoted by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut msg = e.to_string();
    for cause in e.chain().skip(1) {
        let text = cause.to_string();
        if !msg.contains(&text) {
            msg.push_str(": ");
            msg.push_str(&text);
        }
    }
    msg
}

fn load_config(path: &std::path::Path) -> anyhow::Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.global.config {
        Some(path) => load_config(path)?,
        None => FileConfig::default(),
    };
    let global = cli.global.over(file.global());
    let ctx = output::Context::new(&global);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(global.threads.unwrap_or(0))
        .build()
        .context("starting worker threads")?;
    let start = std::time::Instant::now();
    let name = cli.command.name();
    pool.install(|| match cli.command {
        Command::Reduce(a) => commands::reduce(&ctx, a.over(file.reduce)),
        Command::Classify(a) => commands::classify(&ctx, a.over(file.classify)),
        Command::Ann(a) => commands::ann(&ctx, a.over(file.ann)),
        Command::Instability(a) => commands::instability(&ctx, a.over(file.instability)),
        Command::Cv(a) => commands::cv(&ctx, a.over(file.cv)),
        Command::Consistency(a) => commands::consistency(&ctx, a.over(file.consistency)),
    })?;
    ctx.note(format_args!(
        "{name} finished in {:.2}s",
        start.elapsed().as_secs_f64()
    ));
    Ok(())
}
