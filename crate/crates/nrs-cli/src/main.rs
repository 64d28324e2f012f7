use nrs_cli::commands;
use nrs_cli::config::Config;
use nrs_cli::CliError;

const USAGE: &str = "\
nrs - neural random subspace training toolkit

usage: nrs <command> [--config <path>] [--<key> <value> ...]

commands:
  train      train a model; writes checkpoints and a metrics log
  eval       score a checkpoint on a dataset
  gradcheck  verify the hand-written backward passes on a toy problem
  count      report parameter / MAC / FLOP counts for a configuration
  sweep      grid over nmul | nper | nh with seeded repeats
  ablate     run the four-way expansion ablation grid

Any config-file key can be given as a flag (hyphens or underscores), e.g.
  nrs train --config configs/satimage.conf --epochs 40 --seed-model 3
Flags override the config file. See README.md for the key list.";

fn parse_args(args: &[String]) -> Result<(String, Config), CliError> {
    if args.is_empty() {
        return Err(CliError::Usage("missing command".into()));
    }
    let command = args[0].clone();
    let rest = &args[1..];
    if rest.len() % 2 != 0 {
        return Err(CliError::Usage(format!(
            "flags come in '--key value' pairs; got a dangling '{}'",
            rest.last().unwrap()
        )));
    }
    let mut pairs = Vec::new();
    for chunk in rest.chunks(2) {
        let key = chunk[0]
            .strip_prefix("--")
            .ok_or_else(|| CliError::Usage(format!("expected a --flag, got '{}'", chunk[0])))?;
        pairs.push((key.to_string(), chunk[1].clone()));
    }

    let mut cfg = match pairs.iter().rev().find(|(k, _)| k == "config") {
        Some((_, path)) => Config::from_file(path)?,
        None => Config::default(),
    };
    for (key, value) in &pairs {
        if key == "config" {
            continue;
        }
        cfg.set(key, value).map_err(CliError::Usage)?;
    }
    Ok((command, cfg))
}

fn run() -> Result<(), CliError> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--help" || a == "-h") || args.is_empty() {
        println!("{USAGE}");
        return Ok(());
    }
    let (command, cfg) = parse_args(&args)?;
    match command.as_str() {
        "train" => commands::cmd_train(&cfg),
        "eval" => commands::cmd_eval(&cfg),
        "gradcheck" => commands::cmd_gradcheck(&cfg),
        "count" => commands::cmd_count(&cfg),
        "sweep" => commands::cmd_sweep(&cfg),
        "ablate" => commands::cmd_ablate(&cfg),
        other => Err(CliError::Usage(format!(
            "unknown command '{other}' (try --help)"
        ))),
    }
}

fn main() {
    match run() {
        Ok(()) => {}
        Err(err) => {
            eprintln!("{err}");
            if matches!(err, CliError::Usage(_)) {
                eprintln!("\n{USAGE}");
            }
            std::process::exit(err.exit_code());
        }
    }
}
