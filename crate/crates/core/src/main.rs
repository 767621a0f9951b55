use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use rcjc::evolve::Integrator;
use rcjc::scenarios::{run_comparison, run_sweep, validate, Fault, ScenarioConfig};
use rcjc::spectral::{map_to_rc, UnderdampedSD};
use rcjc::Error;

const EXIT_VALIDATION: u8 = 3;

#[derive(Parser)]
#[command(
    name = "rcjc",
    version,
    about = "Spin-boson reaction-coordinate simulator for multiphoton Jaynes-Cummings models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum IntegratorArg {
    Rk4,
    Spectral,
    Both,
}

impl From<IntegratorArg> for Integrator {
    fn from(a: IntegratorArg) -> Self {
        match a {
            IntegratorArg::Rk4 => Integrator::Rk4,
            IntegratorArg::Spectral => Integrator::Spectral,
            IntegratorArg::Both => Integrator::Both,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    FlipTheta,
}

#[derive(Subcommand)]
enum Command {
    /// Run one frame comparison and write CSV/JSON artifacts.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        integrator: Option<IntegratorArg>,
    },
    /// Run the cartesian product of the config's sweep axes.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the reaction-coordinate parameters of an underdamped density.
    MapSpectral {
        #[arg(long, allow_negative_numbers = true)]
        pi_alpha: f64,
        #[arg(long, allow_negative_numbers = true)]
        gamma: f64,
        #[arg(long, allow_negative_numbers = true)]
        omega0: f64,
    },
    /// Run the invariant and oracle suites.
    Validate {
        #[arg(long)]
        strict: bool,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<FaultArg>,
    },
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn simulate(config: PathBuf, out: Option<PathBuf>, integrator: Option<IntegratorArg>) -> ExitCode {
    let cfg = match ScenarioConfig::load(&config) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if !cfg.sweep.is_empty() {
        return fail(&Error::Config("config has sweep axes; use `sweep`".into()));
    }
    let mut sc = match cfg.resolve() {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    if let Some(i) = integrator {
        sc.integrator = i.into();
    }
    let dir = out
        .or(cfg.out)
        .unwrap_or_else(|| PathBuf::from("out").join(&sc.name));
    match run_comparison(&sc) {
        Ok(a) => {
            if let Err(e) = a.write(&dir) {
                return fail(&e);
            }
            let s = &a.summary;
            println!(
                "{}: max 1-F = {:.3e}, final purity = {:.6}, runtime {:.1} s -> {}",
                s.name,
                s.max_infidelity,
                s.final_purity,
                s.runtime_s,
                dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(f) => {
            let _ = std::fs::create_dir_all(&dir);
            let _ = std::fs::write(
                dir.join("config.json"),
                serde_json::to_string_pretty(&f.config).unwrap_or_default(),
            );
            eprintln!("config: {}", f.config);
            fail(&f.error)
        }
    }
}

fn sweep(config: PathBuf, jobs: Option<usize>, out: Option<PathBuf>) -> ExitCode {
    let cfg = match ScenarioConfig::load(&config) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let base = match cfg.resolve() {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    let dir = out
        .or(cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(format!("{}-sweep", base.name)));
    let res = match run_sweep(&base, &cfg.sweep, jobs) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    if let Err(e) = res.write(&dir) {
        return fail(&e);
    }
    print!("{}", res.to_csv());
    if res.failures() > 0 {
        eprintln!("{} of {} points failed", res.failures(), res.points.len());
    }
    ExitCode::from(res.exit_code() as u8)
}

fn map_spectral(pi_alpha: f64, gamma: f64, omega0: f64) -> ExitCode {
    let sd = match UnderdampedSD::from_pi_alpha(pi_alpha, gamma, omega0) {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    let rc = map_to_rc(&sd);
    let v = serde_json::json!({
        "alpha": sd.alpha,
        "lambda": rc.lambda,
        "Omega": rc.omega,
        "gamma": rc.residual.gamma,
        "lamb_dicke": rc.lamb_dicke(),
    });
    println!("{}", serde_json::to_string_pretty(&v).expect("json"));
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate {
            config,
            out,
            integrator,
        } => simulate(config, out, integrator),
        Command::Sweep { config, jobs, out } => sweep(config, jobs, out),
        Command::MapSpectral {
            pi_alpha,
            gamma,
            omega0,
        } => map_spectral(pi_alpha, gamma, omega0),
        Command::Validate {
            strict,
            seed,
            inject_fault,
        } => {
            let fault = inject_fault.map(|f| match f {
                FaultArg::FlipTheta => Fault::FlipTheta,
            });
            let report = validate(strict, fault, seed);
            println!("{report}");
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VALIDATION)
            }
        }
    }
}
