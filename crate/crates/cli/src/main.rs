//! Command-line front end: training runs, sequence generation with
//! truncation, metric evaluation, SVG rendering, and pyramid
//! inspection, all driven by JSON configs and named seeds.

mod config;
mod evaluate;
mod generate;
mod inspect;
mod render;
mod train;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "kforge", version, about = "Skeleton action synthesis toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a conditional generator against a critic on a dataset.
    Train(train::TrainArgs),
    /// Sample sequences from a checkpoint for one class.
    Generate(generate::GenerateArgs),
    /// Score generated samples against a real manifest.
    Evaluate(evaluate::EvaluateArgs),
    /// Render a sequence JSON file to an SVG frame strip.
    Render(render::RenderArgs),
    /// Print pyramid levels, partitions, and the normalization audit.
    InspectPyramid(inspect::InspectArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => train::run(&args),
        Command::Generate(args) => generate::run(&args),
        Command::Evaluate(args) => evaluate::run(&args),
        Command::Render(args) => render::run(&args),
        Command::InspectPyramid(args) => inspect::run(&args),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
