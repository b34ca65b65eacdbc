use std::f64::consts::PI;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use geolimit::harness::{
    identity_suite, run_sweep, write_outputs, CaseSource, ExperimentPlan, HarnessError, IDENTITY_TOL,
};
use geolimit::solver::InitialDataSpec;
use geolimit::spectral::GridSpec;

#[derive(Parser)]
#[command(name = "geolimit", about = "Low Mach, Rossby and Froude number limit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single case: the first regime of the plan at one eps.
    Run {
        #[command(flatten)]
        common: Common,
        /// eps of the case (defaults to the first entry of sweep.eps)
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Run every regime and eps of the plan and fit trends.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate the exact identities on random admissible states.
    Check {
        #[arg(long, default_value_t = 48)]
        nh: usize,
        #[arg(long, default_value_t = 16)]
        nv: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    snapshot_every: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    /// replace the 3D run by the lifted limit solution
    #[arg(long)]
    embed: bool,
}

fn load(common: &Common) -> Result<ExperimentPlan, HarnessError> {
    let text = fs::read_to_string(&common.config)?;
    let mut plan = ExperimentPlan::parse(&text)?;
    if let Some(seed) = common.seed {
        plan.seed = seed;
    }
    if let Some(dir) = &common.out_dir {
        plan.out_dir = dir.clone();
    }
    if let Some(every) = common.snapshot_every {
        plan.snapshot_every = every;
    }
    plan.validate()?;
    if let Some(t) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
    }
    Ok(plan)
}

fn execute(plan: &ExperimentPlan, embed: bool) -> Result<(), HarnessError> {
    let source = if embed { CaseSource::EmbeddedLimit } else { CaseSource::Primitive };
    let report = run_sweep(plan, source)?;
    write_outputs(&plan.out_dir, plan, &report)?;
    for t in &report.trends {
        let slope = t.slope.map(|s| format!("{s:+.3}")).unwrap_or_else(|| "-".into());
        println!(
            "m={} n={} {:<28} ratio {:.3e} slope {slope} {}",
            t.m,
            t.n,
            t.metric,
            t.ratio,
            if t.monotone { "monotone" } else { "non-monotone" }
        );
    }
    if report.trends.is_empty() {
        for r in &report.records {
            println!("m={} n={} eps={} {:<28} {:.6e}", r.m, r.n, r.eps, r.metric, r.value);
        }
    }
    println!("outputs written to {}", plan.out_dir.display());
    let failed = report.failures();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(HarnessError::SweepFailed { total: report.cases.len(), failed })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { common, eps } => load(&common).and_then(|mut plan| {
            plan.regimes.truncate(1);
            plan.eps = vec![eps.unwrap_or(plan.eps[0])];
            plan.validate()?;
            execute(&plan, common.embed)
        }),
        Command::Sweep { common } => load(&common).and_then(|plan| execute(&plan, common.embed)),
        Command::Check { nh, nv, seed } => {
            let grid = GridSpec { nh, nv, lh: 4.0 * PI };
            let data = InitialDataSpec { seed, ..Default::default() };
            identity_suite(grid, &[(2.0, 1.25), (2.0, 1.5), (1.0, 0.75)], &[1.6, 2.0, 3.0], 0.1, 3, &data).and_then(
                |checks| {
                    let mut failed = 0;
                    for c in &checks {
                        let verdict = if c.passed() { "PASS" } else { "FAIL" };
                        println!(
                            "{verdict} m={} n={} gamma={} {:<26} {:.3e}",
                            c.m, c.n, c.gamma, c.identity, c.residual
                        );
                        failed += usize::from(!c.passed());
                    }
                    if failed > 0 {
                        Err(HarnessError::Config(format!("{failed} identities above {IDENTITY_TOL:e}")))
                    } else {
                        Ok(())
                    }
                },
            )
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
