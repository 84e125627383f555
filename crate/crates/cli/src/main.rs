//! `pcrot`: inspect contracted rotations, certify their periodic attractors,
//! run seeded sweeps, export rasters and run the property suites.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use pcrot::arith::format_rational;
use pcrot::conjugation::{h_inverse, rho};
use pcrot::dynamics::{attractor_scan, certify, Budget, InitialGrid};
use pcrot::experiments::{raster, run_sweep, verify_properties, PropertyCounts, RuntimeMeta, SweepSpec};
use pcrot::extension::ExtendedSystem;
use pcrot::rotation::DomainSummary;
use pcrot::{ContractedRotation, RVector};

#[derive(Parser)]
#[command(name = "pcrot", version, about = "Contracted rotations of the torus and their periodic attractors")]
struct Cli {
    /// Worker threads (default: all cores)
    #[arg(long, global = true, env = "PCROT_JOBS")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print norm, χ(b), ρ(b), r, the D_b offset and the continuity domains
    Inspect {
        #[arg(long)]
        system: PathBuf,
        /// Print JSON instead of text
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certify the attractor of one initial condition
    Certify {
        #[arg(long)]
        system: PathBuf,
        /// Initial point in [0,1)^d, comma separated, e.g. `0,1/3` or `0.25,0`
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certify the attractors reached from a uniform grid of initial conditions
    Scan {
        #[arg(long)]
        system: PathBuf,
        /// Points per axis; the grid is {i/n}^d
        #[arg(long, default_value_t = 4)]
        grid: usize,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a parameter sweep described by a JSON spec
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        /// Overrides the seed of the spec
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Write code-region and discontinuity rasters
    Raster {
        #[arg(long)]
        system: PathBuf,
        /// `N` or `WxH`
        #[arg(long, default_value = "512")]
        resolution: String,
        /// Skip the per-pixel CSV
        #[arg(long)]
        no_csv: bool,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run the exact property suites
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        systems: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 1000)]
        oracle_systems: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct BudgetArgs {
    #[arg(long)]
    budget_steps: Option<u64>,
    #[arg(long)]
    bits_cap: Option<u64>,
    #[arg(long)]
    max_attempts: Option<u32>,
}

impl BudgetArgs {
    fn apply(&self, mut budget: Budget) -> Budget {
        if let Some(v) = self.budget_steps {
            budget.max_steps = v;
        }
        if let Some(v) = self.bits_cap {
            budget.bits_cap = v;
        }
        if let Some(v) = self.max_attempts {
            budget.max_attempts = v;
        }
        budget
    }
}

fn load_system(path: &Path) -> Result<ContractedRotation> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ContractedRotation::from_json(&text).with_context(|| format!("invalid system in {}", path.display()))
}

fn parse_point(text: &str) -> Result<RVector> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    Ok(RVector::parse(&parts)?)
}

fn parse_resolution(text: &str) -> Result<(usize, usize)> {
    match text.split_once(['x', 'X']) {
        Some((w, h)) => Ok((w.trim().parse()?, h.trim().parse()?)),
        None => {
            let n = text.trim().parse()?;
            Ok((n, n))
        }
    }
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn pretty(value: &impl serde::Serialize) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn inspect(system: &Path, as_json: bool, out: Option<&Path>) -> Result<()> {
    let sys = load_system(system)?;
    let ext = ExtendedSystem::from_rotation(&sys);
    let domains: Vec<DomainSummary> = sys.continuity_domains().iter().map(DomainSummary::from).collect();
    let report = json!({
        "system": sys.to_file(),
        "system_hash": sys.system_hash(),
        "norm": format_rational(sys.norm()),
        "chi": sys.chi(),
        "rho": rho(&sys),
        "r": format_rational(ext.r()),
        "offset": sys.resolvent_offset(),
        "domains": domains,
    });
    let text = pretty(&report)?;
    if let Some(dir) = out {
        write_file(dir, "inspect.json", text.as_bytes())?;
    }
    if as_json {
        print!("{text}");
        return Ok(());
    }
    println!("d        {}", sys.dim());
    println!("‖A‖      {}", format_rational(sys.norm()));
    println!("χ(b)     {}", sys.chi());
    println!("ρ(b)     {}", rho(&sys));
    println!("r        {}", format_rational(ext.r()));
    println!("offset   {}", sys.resolvent_offset());
    println!("domains");
    for d in &domains {
        let p: Vec<String> = d.p.iter().map(u8::to_string).collect();
        println!("  p = ({})  code {}  {:?}", p.join(","), d.code, d.status);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            bail!("--jobs must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    match cli.command {
        Command::Inspect { system, json, out } => inspect(&system, json, out.as_deref())?,
        Command::Certify { system, x0, budget, out } => {
            let sys = load_system(&system)?;
            let x0 = parse_point(&x0)?;
            if x0.dim() != sys.dim() || !x0.in_unit_cube() {
                bail!("x0 must be a point of [0,1)^{}", sys.dim());
            }
            let ext = ExtendedSystem::from_rotation(&sys);
            let verdict = certify(&ext, &h_inverse(&sys, &x0), &budget.apply(Budget::default()))?;
            let text = pretty(&json!({ "x0": x0, "offset": sys.resolvent_offset(), "verdict": verdict }))?;
            if let Some(dir) = out {
                write_file(&dir, "verdict.json", text.as_bytes())?;
            }
            print!("{text}");
        }
        Command::Scan { system, grid, budget, out } => {
            let sys = load_system(&system)?;
            let report =
                attractor_scan(&sys, &InitialGrid::Uniform { per_axis: grid }, &budget.apply(Budget::default()))?;
            let text = pretty(&report)?;
            if let Some(dir) = out {
                write_file(&dir, "scan.json", text.as_bytes())?;
            }
            print!("{text}");
        }
        Command::Sweep { spec, seed, budget, out } => {
            let start = Instant::now();
            let text = fs::read_to_string(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let mut spec = SweepSpec::from_json(&text).with_context(|| format!("invalid sweep spec {}", spec.display()))?;
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            spec.budget = budget.apply(spec.budget);
            let report = run_sweep(&spec)?;
            write_file(&out, "sweep.json", pretty(&report)?.as_bytes())?;
            let mut csv = Vec::new();
            report.write_csv(&mut csv)?;
            write_file(&out, "sweep.csv", &csv)?;
            write_file(&out, "run_meta.json", pretty(&RuntimeMeta::since(start))?.as_bytes())?;
            let a = &report.aggregate;
            println!("samples            {}", a.samples);
            println!("evaluated          {}", a.evaluated);
            println!("fully certified    {}", a.fully_certified);
            match (a.certified_fraction, a.undetermined_fraction) {
                (Some(c), Some(u)) => println!("certified fraction {c:.4}  undetermined fraction {u:.4}"),
                _ => println!("certified fraction n/a"),
            }
            println!("hyperplane hits    {}", a.counts.hit_discontinuity);
            println!("recheck failures   {}", a.recheck_failures);
        }
        Command::Raster { system, resolution, no_csv, out } => {
            let sys = load_system(&system)?;
            let (w, h) = parse_resolution(&resolution)?;
            let image = raster(&sys, w, h)?;
            if sys.dim() == 2 {
                let p = write_file(&out, "raster.ppm", &image.to_ppm()?)?;
                println!("{}", p.display());
                let p = write_file(&out, "mask.pgm", &image.mask_pgm()?)?;
                println!("{}", p.display());
            } else {
                eprintln!("pixmaps need d = 2; writing CSV only");
            }
            if !no_csv || sys.dim() != 2 {
                let mut csv = Vec::new();
                image.write_csv(&sys, &mut csv)?;
                let p = write_file(&out, "raster.csv", &csv)?;
                println!("{}", p.display());
            }
        }
        Command::Verify { seed, systems, samples, oracle_systems, out } => {
            let report = verify_properties(seed, &PropertyCounts { systems, samples, oracle_systems });
            if let Some(dir) = out {
                write_file(&dir, "verify.json", pretty(&report)?.as_bytes())?;
            }
            let mut stdout = std::io::stdout().lock();
            for suite in &report.suites {
                let status = match (suite.passed, suite.no_samples) {
                    (true, true) => "pass (no samples)",
                    (true, false) => "pass",
                    (false, _) => "FAIL",
                };
                writeln!(stdout, "{status:<18} {:<26} {:>8} checks  {}", suite.name, suite.checks, suite.statement)?;
                if let Some(c) = &suite.counterexample {
                    writeln!(stdout, "    counterexample: {c}")?;
                }
            }
            if !report.all_passed {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
