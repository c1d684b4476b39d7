use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mope2_cli::commands::{self, AblateArgs, AnalyzeArgs, ConfigArgs, EvalArgs, VerifyArgs};
use mope2_cli::{exit_code, EXIT_OK, EXIT_USAGE};

/// Model-based RL with progressive entropy exploration.
#[derive(Parser, Debug)]
#[command(name = "mope2", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train one run directory per seed.
    Train(ConfigArgs),
    /// Re-evaluate a trained run with exploitation-only planning.
    Eval(EvalArgs),
    /// Compare progressive, fixed and no exploration across seeds.
    Ablate(AblateArgs),
    /// Check the trajectory reward error bound on random tabular MDPs.
    VerifyBound(VerifyArgs),
    /// PCA of executed actions across runs.
    AnalyzeActions(AnalyzeArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

fn dispatch(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Train(args) => {
            for r in commands::train(&args)? {
                match &r.final_eval {
                    Some(e) => println!("{}  final_return={:.4} std={:.4}", r.dir.display(), e.mean, e.std),
                    None => println!("{}", r.dir.display()),
                }
            }
        }
        Command::Eval(args) => {
            let s = commands::eval(&args)?;
            println!("episodes={} mean={:.6} std={:.6}", s.returns.len(), s.mean, s.std);
        }
        Command::Ablate(args) => {
            let report = commands::ablate(&args)?;
            print!("{}", commands::format_summary(&report.summary));
            println!("written to {}", report.dir.display());
        }
        Command::VerifyBound(args) => {
            let report = commands::verify_bound(&args)?;
            println!("{}", report.summary_line());
            commands::check_violations(&report)?;
        }
        Command::AnalyzeActions(args) => {
            println!("epoch,run,points,bbox_area,explained_variance_1,explained_variance_2");
            for s in commands::analyze_actions(&args)? {
                println!(
                    "{},{},{},{},{},{}",
                    s.epoch, s.run, s.points, s.bbox_area, s.explained_variance_ratio[0], s.explained_variance_ratio[1]
                );
            }
        }
    }
    Ok(())
}
