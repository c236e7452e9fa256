//! `ni-grid`: validate, simulate, certify and sweep grid scenarios.
//!
//! Exit codes: 0 success, 1 validation or check failure, 2 divergence,
//! 3 inconclusive check.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nigrid::experiment::{run_experiment, run_sweep, RunOutcome, SimConfig, SweepParameter};
use nigrid::grid::{d1_interval, GridScenario};
use nigrid::lyapunov::{eval_lyapunov_networked, sample_positive_definiteness, SamplingPlan};
use nigrid::scenario::{parse_values, validate, write_sweep_csv, write_trajectory_csv, ScenarioFile};
use nigrid::systems::Verdict;
use nigrid::Execution;

const EXIT_FAIL: u8 = 1;
const EXIT_DIVERGED: u8 = 2;
const EXIT_INCONCLUSIVE: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "ni-grid",
    version,
    about = "Negative-imaginary certificates for battery-controlled power grids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a scenario file against the schema and parameter constraints
    Validate { path: PathBuf },
    /// Simulate a scenario and write trajectory.csv and report.json
    Simulate {
        path: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
        /// Output directory
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run certificate checks on a scenario
    Check {
        path: PathBuf,
        #[arg(value_enum, default_value_t = Which::All)]
        which: Which,
        #[command(flatten)]
        sim: SimArgs,
        /// Seed for the domain sampler
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random samples for the positive-definiteness check
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
        /// Write the full run report as JSON to this file
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one numeric scenario field and tabulate the outcome
    Sweep {
        path: PathBuf,
        /// Field to vary: initial.<bus>.delta_dev, initial.<bus>.freq_dev, bus.<id>.{M,D,E0,P_L},
        /// line.<n>.{X,psi_bar}, battery.<n>.{tau,K1,K2} or battery_line
        #[arg(long)]
        param: String,
        /// Values as a,b,c or an inclusive start:step:stop range
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[command(flatten)]
        sim: SimArgs,
        /// Output CSV file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct SimArgs {
    /// Integration step [s]
    #[arg(long)]
    dt: Option<f64>,
    /// Simulated horizon [s]
    #[arg(long)]
    horizon: Option<f64>,
    /// Consensus and frequency-synchronization tolerance
    #[arg(long)]
    tolerance: Option<f64>,
    /// Worker threads for sweeps and sampling
    #[arg(long, env = "NI_GRID_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Which {
    Dissipation,
    Lyapunov,
    Domain,
    All,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let diverged = e.chain().any(|c| {
                matches!(
                    c.downcast_ref::<nigrid::Error>(),
                    Some(nigrid::Error::Divergence { .. })
                )
            });
            ExitCode::from(if diverged { EXIT_DIVERGED } else { EXIT_FAIL })
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Validate { path } => cmd_validate(&path),
        Command::Simulate { path, sim, out } => cmd_simulate(&path, &sim, &out),
        Command::Check {
            path,
            which,
            sim,
            seed,
            samples,
            out,
        } => cmd_check(&path, which, &sim, seed, samples, out.as_deref()),
        Command::Sweep {
            path,
            param,
            values,
            sim,
            out,
        } => cmd_sweep(&path, &param, &values, &sim, out.as_deref()),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load(path: &Path, sim: &SimArgs) -> Result<(GridScenario, SimConfig)> {
    if let Some(n) = sim.threads {
        // Fails only if the pool already exists, which is harmless here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let file = ScenarioFile::parse(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    let scenario = file.to_scenario().with_context(|| format!("in {}", path.display()))?;
    let mut config = file.sim_config(SimConfig::default());
    if let Some(dt) = sim.dt {
        config.dt = dt;
    }
    if let Some(h) = sim.horizon {
        config.horizon = h;
    }
    if let Some(t) = sim.tolerance {
        config.consensus_tol = t;
    }
    Ok((scenario, config))
}

fn cmd_validate(path: &Path) -> Result<u8> {
    let v = validate(&read(path)?);
    for w in &v.warnings {
        println!("warning: {w}");
    }
    for e in &v.errors {
        println!("error: {e}");
    }
    if let Some(eq) = &v.equilibrium {
        println!("equilibrium residual: {:.3e}", eq.max_residual);
    }
    println!("{}: {}", path.display(), if v.is_valid() { "valid" } else { "invalid" });
    Ok(if v.is_valid() { 0 } else { EXIT_FAIL })
}

fn report_json(outcome: &RunOutcome) -> Result<String> {
    let doc = serde_json::json!({
        "tool": "ni-grid",
        "version": env!("CARGO_PKG_VERSION"),
        "scenario_hash": outcome.report.scenario_hash,
        "report": outcome.report,
    });
    Ok(serde_json::to_string_pretty(&doc)?)
}

fn cmd_simulate(path: &Path, sim: &SimArgs, out: &Path) -> Result<u8> {
    let (scenario, config) = load(path, sim)?;
    let outcome = run_experiment(&scenario, &config)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let csv = out.join("trajectory.csv");
    let file = fs::File::create(&csv).with_context(|| format!("creating {}", csv.display()))?;
    write_trajectory_csv(file, &scenario, &outcome)?;
    let json = out.join("report.json");
    fs::write(&json, report_json(&outcome)?).with_context(|| format!("writing {}", json.display()))?;
    let r = &outcome.report;
    println!("samples: {}", r.samples);
    println!("in domain at t=0: {}", r.domain.inside());
    println!(
        "consensus: {} (settle time {:?})",
        r.consensus.achieved, r.consensus.settle_time
    );
    println!("max W step increase: {:.3e}", r.monotonicity.max_step_increase);
    println!("wrote {} and {}", csv.display(), json.display());
    Ok(0)
}

fn print_verdict(name: &str, v: Verdict, detail: &str) {
    println!("{name}: {v} ({detail})");
}

/// Samples the Lyapunov function over plant and controller states, keeping
/// points whose angle deviations lie in the local domain.
fn positive_definiteness(outcome: &RunOutcome, scenario: &GridScenario, seed: u64, samples: usize) -> Result<Verdict> {
    let sys = &outcome.system;
    let n = scenario.buses.len();
    let nc = sys.controller_state_dim();
    let excluded = scenario.battery_lines();
    let eval = |p: &[f64]| {
        eval_lyapunov_networked(sys, &p[..2 * n], &p[2 * n..], Default::default())
            .map(|e| e.value)
            .unwrap_or(f64::NAN)
    };
    let inside = |p: &[f64]| {
        let delta: Vec<f64> = (0..n).map(|i| p[2 * i + 1]).collect();
        nigrid::grid::domain_membership(scenario, &delta, &excluded).is_ok_and(|d| d.inside())
    };
    let bounds = vec![(-1.0, 1.0); 2 * n + nc];
    let plan = SamplingPlan {
        grid_per_axis: 0,
        random_samples: samples,
    };
    let r = sample_positive_definiteness(eval, inside, &bounds, plan, seed, Execution::Parallel)?;
    print_verdict(
        "lyapunov positive definite",
        r.verdict,
        &format!(
            "{} of {} samples in domain, min {:.3e}, W(0) = {:.1e}",
            r.accepted, r.samples, r.min_value, r.origin_value
        ),
    );
    if r.verdict != Verdict::Pass {
        if let Some(p) = &r.argmin {
            println!("  witness: {p:?}");
        }
    }
    Ok(r.verdict)
}

fn cmd_check(path: &Path, which: Which, sim: &SimArgs, seed: u64, samples: usize, out: Option<&Path>) -> Result<u8> {
    let (scenario, config) = load(path, sim)?;
    let outcome = run_experiment(&scenario, &config)?;
    let r = &outcome.report;
    let mut verdicts = Vec::new();
    let all = which == Which::All;

    if all || which == Which::Dissipation {
        for p in &r.plant_dissipation {
            let detail = if p.osni_claim_valid {
                format!(
                    "eps = {}, max residual {:.3e}",
                    p.report.epsilon, p.report.max_violation
                )
            } else {
                "D = 0: output strictly NI requires eps > 0".to_string()
            };
            print_verdict(&format!("bus {} dissipation", p.bus), p.verdict, &detail);
            verdicts.push(p.verdict);
        }
        for c in &r.controller_dissipation {
            print_verdict(
                &format!("battery line {} dissipation", c.line + 1),
                c.report.verdict,
                &format!("max residual {:.3e}", c.report.max_violation),
            );
            verdicts.push(c.report.verdict);
        }
        let n = &r.networked_plant_dissipation;
        print_verdict(
            "networked plant dissipation",
            n.verdict,
            &format!("max residual {:.3e}", n.max_violation),
        );
        verdicts.push(n.verdict);
    }
    if all || which == Which::Lyapunov {
        let m = &r.monotonicity;
        print_verdict(
            "lyapunov monotone",
            m.verdict,
            &format!(
                "max step increase {:.3e} at t = {:.3}",
                m.max_step_increase, m.max_step_increase_time
            ),
        );
        verdicts.push(m.verdict);
        verdicts.push(positive_definiteness(&outcome, &scenario, seed, samples)?);
    }
    if all || which == Which::Domain {
        let d = &r.domain;
        print_verdict(
            "initial condition in D1",
            Verdict::from_pass(d.in_d1),
            &format!("{} violations", d.d1_violations.len()),
        );
        for v in &d.d1_violations {
            let (lo, hi) = d1_interval(scenario.lines[v.line].psi_bar);
            println!(
                "  line {}: psi_dev = {:.6} outside D1 interval ({lo:.6}, {hi:.6})",
                v.line + 1,
                v.psi_dev
            );
        }
        print_verdict(
            "initial condition in D2",
            Verdict::from_pass(d.in_d2),
            &format!("sum = {:.6e}", d.d2_sum),
        );
        verdicts.push(r.domain_verdict());
    }
    if all {
        print_verdict(
            "output consensus",
            Verdict::from_pass(r.consensus.achieved),
            &format!(
                "final max gap {:.3e}, settle time {:?}",
                r.consensus.final_max_pairwise_gap, r.consensus.settle_time
            ),
        );
        print_verdict(
            "frequency synchronization",
            Verdict::from_pass(r.frequency_sync.achieved),
            &format!("final max |freq_dev| {:.3e}", r.frequency_sync.final_value),
        );
        verdicts.push(r.convergence_verdict());
    }
    if let Some(out) = out {
        fs::write(out, report_json(&outcome)?).with_context(|| format!("writing {}", out.display()))?;
    }
    let overall = verdicts.into_iter().fold(Verdict::Pass, Verdict::and);
    println!("overall: {overall}");
    Ok(match overall {
        Verdict::Pass => 0,
        Verdict::Fail => EXIT_FAIL,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    })
}

fn cmd_sweep(path: &Path, param: &str, values: &str, sim: &SimArgs, out: Option<&Path>) -> Result<u8> {
    let parameter: SweepParameter = param.parse()?;
    let values = parse_values(values)?;
    let (scenario, config) = load(path, sim)?;
    // Reject a bad target up front instead of emitting a table of errors.
    if let Some(&v) = values.first() {
        parameter.apply(&scenario, v).map_err(|e| anyhow!(e))?;
    }
    let rows = run_sweep(&scenario, &config, parameter, &values, Execution::Parallel);
    match out {
        Some(p) => write_sweep_csv(
            fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
            &rows,
        )?,
        None => write_sweep_csv(io::stdout().lock(), &rows)?,
    }
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        let _ = writeln!(io::stderr(), "{failed} of {} sweep points could not be run", rows.len());
    }
    if failed == rows.len() && !rows.is_empty() {
        bail!("no sweep point could be run");
    }
    Ok(0)
}
