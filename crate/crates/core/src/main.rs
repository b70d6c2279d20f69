use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vpblab::collision::{transport_coefficients, AngularQuadrature, CollisionConfig};
use vpblab::diagnostics::{energy_report, report_row, REPORT_COLUMNS};
use vpblab::io::{load_config, read_snapshot, table_text, RunConfig};
use vpblab::phase_space::VelocityGrid;
use vpblab::rarefaction::{log_times, measure_decay, BurgersWave, DecaySubject};
use vpblab::run::{run, RunSetup};
use vpblab::verify::verify;
use vpblab::VpbError;

/// Vlasov-Poisson-Boltzmann rarefaction-wave laboratory.
#[derive(Parser)]
#[command(name = "vpblab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the smooth (or centered) 3-rarefaction profile.
    Wave(WaveArgs),
    /// Viscosity and heat conductivity of the discrete hard-sphere operator.
    Coeffs(CoeffsArgs),
    /// Run a kinetic simulation described by a configuration file.
    Simulate(SimulateArgs),
    /// Recompute the diagnostics row of a snapshot.
    Report(ReportArgs),
    /// Fit the decay rate of Burgers-wave derivative norms.
    Decay(DecayArgs),
    /// Run self-check suites; exit status 1 if any check fails.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct WaveArgs {
    /// Configuration supplying [model] and [wave]; defaults otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Time at which to evaluate the profile.
    #[arg(long, default_value_t = 10.0)]
    t: f64,
    #[arg(long, default_value_t = -50.0, allow_hyphen_values = true)]
    x_min: f64,
    #[arg(long, default_value_t = 150.0, allow_hyphen_values = true)]
    x_max: f64,
    /// Number of sample points.
    #[arg(long, default_value_t = 201)]
    n: usize,
    /// Evaluate the centered fan at x/t instead of the smooth profile.
    #[arg(long)]
    centered: bool,
}

#[derive(Args)]
struct CoeffsArgs {
    /// Temperatures (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
    theta: Vec<f64>,
    /// Velocity nodes per axis.
    #[arg(long, default_value_t = 16)]
    n_v: usize,
    /// Velocity box half-width at θ = 1; scaled by √θ.
    #[arg(long, default_value_t = 4.9)]
    half_width: f64,
    /// Lebedev points (6, 14, 26, 38, 50).
    #[arg(long, default_value_t = 14)]
    angular: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Args)]
struct SimulateArgs {
    /// Run configuration (TOML).
    config: PathBuf,
    /// Continue from this snapshot instead of the initial data.
    #[arg(long)]
    restart: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Configuration the snapshot was produced with.
    #[arg(long)]
    config: PathBuf,
    /// Snapshot file.
    snapshot: PathBuf,
}

#[derive(Args)]
struct DecayArgs {
    #[arg(long, default_value_t = 0.0)]
    w_minus: f64,
    #[arg(long, default_value_t = 1.0)]
    w_plus: f64,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Lebesgue exponent; `inf` for the sup norm.
    #[arg(long, default_value = "inf")]
    p: f64,
    /// Derivative order (1 or 2).
    #[arg(long, default_value_t = 1)]
    order: u32,
    #[arg(long, default_value_t = 10.0)]
    t0: f64,
    #[arg(long, default_value_t = 1000.0)]
    t1: f64,
    /// Number of log-spaced times.
    #[arg(long, default_value_t = 21)]
    n: usize,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite name or `all`.
    #[arg(default_value = "all")]
    suite: String,
}

enum Failure {
    Usage(VpbError),
    Check(String),
    Runtime(VpbError),
}

impl From<VpbError> for Failure {
    fn from(e: VpbError) -> Self {
        match e {
            VpbError::Config(_) | VpbError::InvalidInput(_) => Failure::Usage(e),
            other => Failure::Runtime(other),
        }
    }
}

fn config_or_default(path: Option<&PathBuf>) -> Result<RunConfig, Failure> {
    match path {
        Some(p) => Ok(load_config(p)?),
        None => Ok(RunConfig::default()),
    }
}

fn wave(a: WaveArgs) -> Result<(), Failure> {
    let cfg = config_or_default(a.config.as_ref())?;
    let prof = cfg.profile()?;
    println!(
        "# left rho={} u1={} theta={}; right rho={} u1={} theta={}; phi- = {}, phi+ = {}",
        prof.left.rho, prof.left.u[0], prof.left.theta, prof.right.rho, prof.right.u[0], prof.right.theta, prof.phi_minus, prof.phi_plus
    );
    let n = a.n.max(2);
    let mut rows = Vec::with_capacity(n);
    for k in 0..n {
        let x = a.x_min + (a.x_max - a.x_min) * k as f64 / (n - 1) as f64;
        let p = if a.centered {
            prof.centered(x / a.t)?
        } else {
            prof.smooth(a.t, x)?
        };
        rows.push(vec![x, p.rho, p.u1, p.theta, p.phi, p.w, p.drho]);
    }
    print!("{}", table_text(&["x", "rho", "u1", "theta", "phi", "w", "drho"], &rows));
    Ok(())
}

fn coeffs(a: CoeffsArgs) -> Result<(), Failure> {
    let c = CollisionConfig::hard_sphere(AngularQuadrature::lebedev(a.angular)?);
    let mut rows = Vec::new();
    for th in a.theta {
        let grid = VelocityGrid::new(a.half_width * th.sqrt(), a.n_v)?;
        let t = transport_coefficients(th, &grid, &c, a.tol)?;
        rows.push(vec![th, t.mu, t.mu_alt, t.kappa, t.discrepancy]);
    }
    print!("{}", table_text(&["theta", "mu", "mu_alt", "kappa", "discrepancy"], &rows));
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    let cfg = load_config(&a.config)?;
    eprintln!(
        "config hash {}; transport dt bound {:e}",
        cfg.hash(),
        cfg.transport_dt_bound()
    );
    let out = run(&cfg, a.restart.as_deref())?;
    println!(
        "finished t = {} after {} steps in {:.1} s; output in {}",
        out.final_state.t,
        out.final_state.step,
        out.elapsed_seconds,
        cfg.output.display()
    );
    Ok(())
}

fn report(a: ReportArgs) -> Result<(), Failure> {
    let cfg = load_config(&a.config)?;
    let snap = read_snapshot(&a.snapshot)?;
    let setup = RunSetup::new(&cfg)?;
    let ctx = setup.context(&cfg, snap.initial_totals);
    let r = energy_report(&ctx, &snap.state, None)?;
    print!("{}", table_text(&REPORT_COLUMNS, &[report_row(&r)]));
    Ok(())
}

fn decay(a: DecayArgs) -> Result<(), Failure> {
    let b = BurgersWave::new(a.w_minus, a.w_plus, a.epsilon)?;
    let fit = measure_decay(&DecaySubject::Burgers(&b), a.p, &log_times(a.t0, a.t1, a.n), a.order)?;
    let rows: Vec<Vec<f64>> = fit.norms.iter().map(|(t, v)| vec![*t, *v]).collect();
    print!("{}", table_text(&["t", "norm"], &rows));
    println!(
        "# slope {:.6} over [{}, {}]; expected {:.6}; envelope constant {:.4}; resolution change {:e}",
        fit.slope,
        fit.window.0,
        fit.window.1,
        if a.order == 1 { -1.0 + 1.0 / a.p } else { -1.0 },
        fit.envelope_constant,
        fit.resolution_change
    );
    Ok(())
}

fn verify_cmd(a: VerifyArgs) -> Result<(), Failure> {
    let r = verify(&a.suite)?;
    print!("{}", r.to_tsv());
    if r.passed() {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "{} check(s) failed",
            r.checks.iter().filter(|c| !c.passed).count()
        )))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Wave(a) => wave(a),
        Command::Coeffs(a) => coeffs(a),
        Command::Simulate(a) => simulate(a),
        Command::Report(a) => report(a),
        Command::Decay(a) => decay(a),
        Command::Verify(a) => verify_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Check(m)) => {
            eprintln!("{m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
