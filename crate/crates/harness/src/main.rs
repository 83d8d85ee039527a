use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dobac_core::{Result, RunLog};
use dobac_harness::config::{self, Source};
use dobac_harness::plot::{plot, PlotSpec};
use dobac_harness::run::{run_to_dir, split_values, sweep};
use dobac_harness::exit_code;

#[derive(Parser)]
#[command(name = "dobac", version, about = "Closed-loop DOBAC / I-DOBAC simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Built-in scenario to start from.
    #[arg(long)]
    preset: Option<String>,
    /// TOML scenario file, layered on the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dotted override such as `rejection.k_eta=10`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Log every N-th step.
    #[arg(long)]
    decimate: Option<usize>,
}

impl ScenarioArgs {
    fn overrides(&self) -> Vec<String> {
        let mut out = self.overrides.clone();
        if let Some(n) = self.decimate {
            out.push(format!("sim.decimation={n}"));
        }
        out
    }

    fn table(&self) -> Result<toml::Table> {
        let overrides = self.overrides();
        config::resolve_table(&Source {
            preset: self.preset.as_deref(),
            config: self.config.as_deref(),
            overrides: &overrides,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write its log and report.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Simulate one scenario per value of a parameter.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Dotted key to vary.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Draw an SVG figure from one or more logs.
    Plot {
        /// One of tracking, error-comparison, u-drj, d-vs-dhat, eta.
        #[arg(long)]
        spec: String,
        /// Log files; `label=path` sets the series label.
        #[arg(long = "log", required = true)]
        logs: Vec<String>,
        /// Draw `+-u_bar` on the u-drj plot.
        #[arg(long)]
        u_bar: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a scenario and print it with its derived quantities.
    Validate {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
}

fn load_log(arg: &str) -> Result<(String, RunLog)> {
    let (label, path) = match arg.split_once('=') {
        Some((l, p)) => (l.to_string(), p),
        None => {
            let stem = Path::new(arg).file_stem().map(|s| s.to_string_lossy().into_owned());
            (stem.unwrap_or_else(|| arg.to_string()), arg)
        }
    };
    Ok((label, RunLog::load(Path::new(path))?))
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { scenario, out } => {
            let file = config::file_from_table(scenario.table()?)?;
            let sc = file.to_scenario()?;
            let o = run_to_dir(&file, &sc, &out, &sc.name)?;
            print!("{}", o.report.render(&sc));
            println!("# wrote {} and {}", o.csv.display(), o.report_path.display());
        }
        Command::Sweep { scenario, param, values, out } => {
            let values = split_values(&values)?;
            let s = sweep(&scenario.table()?, &param, &values, &out)?;
            print!("{}", std::fs::read_to_string(&s.table_path).unwrap_or_default());
            let failed: Vec<_> = s.failures().collect();
            if let Some((value, err)) = failed.first() {
                eprintln!("{} of {} runs failed", failed.len(), s.entries.len());
                for (v, e) in &failed {
                    eprintln!("  {param}={v}: {e}");
                }
                if failed.len() == s.entries.len() {
                    eprintln!("first failure was {param}={value}");
                    return Err((*err).clone());
                }
            }
        }
        Command::Plot { spec, logs, u_bar, out } => {
            let spec: PlotSpec = spec.parse()?;
            let logs = logs.iter().map(|a| load_log(a)).collect::<Result<Vec<_>>>()?;
            plot(spec, &logs, u_bar, &out)?;
            println!("wrote {}", out.display());
        }
        Command::Validate { scenario } => {
            let file = config::file_from_table(scenario.table()?)?;
            let sc = file.to_scenario()?;
            let (t0, t1) = file.window()?;
            let matched = sc.matched()?;
            let q = sc.lyapunov_q()?;
            let text = toml::to_string(&file).map_err(|e| dobac_core::DobacError::config("scenario", e.to_string()))?;
            print!("{text}");
            println!();
            println!("# derived");
            println!("# k_x* = {:?}", matched.k_x_star.as_slice());
            println!("# k_r* = {}", matched.k_r_star);
            println!("# lambda_min(Q) = {}", dobac_core::linalg::min_symmetric_eigenvalue(&q));
            for (name, set) in [("k_x", &sc.sets.k_x), ("k_r", &sc.sets.k_r), ("v", &sc.sets.v), ("w", &sc.sets.w)] {
                println!("# projection {name}: center {:?}, weights {:?}", set.center.as_slice(), set.weights.as_slice());
            }
            println!("# steps = {}, window = [{t0}, {t1}]", sc.steps()?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
