use std::path::PathBuf;

use clap::{Parser, Subcommand};
use cwlforge::bench::{self, BenchOutput, StageParams};
use cwlforge::config::{self, RunnerConfig};

#[derive(Parser)]
#[command(name = "cwlforge-bench", about = "Pipeline, expression and throughput benchmarks")]
struct Args {
    /// Runner config (executor, workdir, cleanup); defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory that receives one subdirectory of CSV files per run.
    #[arg(long, default_value = "bench-results")]
    out: PathBuf,
    #[command(subcommand)]
    scenario: Scenario,
}

#[derive(Subcommand)]
enum Scenario {
    /// 3-stage pipeline fan-out over synthetic inputs.
    Pipeline {
        #[arg(long, value_delimiter = ',', default_value = "8,16,32")]
        items: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1,4,8")]
        workers: Vec<usize>,
        /// Seconds each stage sleeps.
        #[arg(long, default_value_t = 0.1)]
        delay: f64,
    },
    /// Capitalize-template evaluation cost over 2..1024 words.
    Expr,
    /// Independent sleep tasks.
    Throughput {
        #[arg(long, default_value_t = 64)]
        tasks: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,8")]
        workers: Vec<usize>,
        #[arg(long, default_value_t = 0.1)]
        delay: f64,
    },
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let config: RunnerConfig = match &args.config {
        Some(path) => config::parse_config(&std::fs::read_to_string(path)?)?,
        None => config::default_config(),
    };
    let out = BenchOutput::create(&args.out, None)?;
    match args.scenario {
        Scenario::Pipeline { items, workers, delay } => {
            let params = StageParams {
                delay,
                ..StageParams::default()
            };
            for &w in &workers {
                for &n in &items {
                    let r = bench::run_pipeline_bench(n, w, &config, &params, &out)?;
                    println!("{}: {:.3}s ok={}", r.scenario, r.makespan.as_secs_f64(), r.ok);
                }
            }
        }
        Scenario::Expr => {
            for n in bench::EXPR_SWEEP {
                let r = bench::run_expression_bench(n, Some(&out))?;
                println!("expr {n}: {:.1}us ok={}", r.mean_eval.as_secs_f64() * 1e6, r.ok);
            }
        }
        Scenario::Throughput { tasks, workers, delay } => {
            for &w in &workers {
                let r = bench::run_throughput_bench(tasks, w, delay, &config, &out)?;
                println!("throughput {tasks}x{w}: {:.2} tasks/s ok={}", r.tasks_per_s, r.ok);
            }
        }
    }
    println!("results in {}", out.dir.display());
    Ok(())
}
