mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::Parser;
use qsdlab::model::parse_model_str;

use commands::Failure;
use config::{Args, RunConfig};
use output::Outputs;

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.exit_code())
        }
    }
}

fn run(args: Args) -> Result<bool, Failure> {
    let path = args.model.clone();
    let bytes = std::fs::read(&path).map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| anyhow::anyhow!("{} is not UTF-8", path.display()))?;
    let spec = parse_model_str(&text)?;
    let cfg = RunConfig::from_args(args, qsdlab::model::AbsorbedChain::dim(&spec.model))?;
    let mut out = Outputs::create(&cfg.out)?;
    let outcome = commands::run(&cfg, &spec, &mut out)?;
    out.finish(&cfg, &bytes)?;
    Ok(outcome)
}
