mod args;
mod commands;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use args::{Cli, Command, Format};
use commands::{run, CliError, Context};

fn input_paths(cmd: &Command) -> Vec<&std::path::Path> {
    use Command::*;
    match cmd {
        Eval { structure, .. } | EnumSubs { structure, .. } | Diagram { structure, .. } => vec![structure],
        CheckSub { sub, sup } => vec![sub, sup],
        FindHom { source, target, .. } | FindEmbed { source, target, .. } | CheckDiagram { source, target, .. } => {
            vec![source, target]
        }
        Equiv { left, right, .. } | ImpliesExists { left, right, .. } => vec![left, right],
        Union { chain, .. } | CheckChain { chain, .. } => vec![chain],
        Amalgamate { left, right, common, .. } => [left, right, common].into_iter().flatten().collect(),
        Consequence { theory, .. } | UniversalConsequences { theory, .. } => vec![theory],
        Counterexample { left, right } => [left, right].into_iter().flatten().collect(),
        Classify { .. } | Verify { .. } => Vec::new(),
    }
    .into_iter()
    .map(|p| p.as_ref())
    .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .expect("thread pool is configured once");
    }
    let ctx = Context {
        seed: cli.seed,
        budget: cli.budget,
    };
    let name = cli.command.name();
    let outcome = input_paths(&cli.command)
        .into_iter()
        .try_for_each(commands::ensure_exists)
        .and_then(|_| run(&cli.command, &ctx));

    let (code, body) = match outcome {
        Ok(r) => {
            let code = if r.ok { 0 } else { 1 };
            let body = match cli.format {
                Format::Json => {
                    let env = json!({"command": name, "ok": r.ok, "exit_code": code, "result": r.result});
                    serde_json::to_string_pretty(&env).expect("json")
                }
                Format::Text => r.text,
            };
            (code, body)
        }
        Err(e) => {
            let kind = match &e {
                CliError::Usage(_) => "usage",
                CliError::Lib(_) => "error",
            };
            match cli.format {
                Format::Json => {
                    let env = json!({
                        "command": name,
                        "ok": false,
                        "exit_code": 2,
                        "result": null,
                        "error": {"kind": kind, "message": e.to_string()},
                    });
                    (2, serde_json::to_string_pretty(&env).expect("json"))
                }
                Format::Text => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            }
        }
    };
    let written = match &cli.output {
        Some(p) => std::fs::write(p, body + "\n"),
        None => writeln!(std::io::stdout(), "{body}"),
    };
    if let Err(e) = written.or_else(|e| match e.kind() {
        std::io::ErrorKind::BrokenPipe => Ok(()),
        _ => Err(e),
    }) {
        eprintln!("error: cannot write the report: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(code)
}
