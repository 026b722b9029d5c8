//! `phlo` command-line front end.
//!
//! Exit codes: 0 success, 1 invariant failure or truncated support,
//! 2 usage, configuration, expression or I/O error.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use phlo_core::analysis::analyze_curvature;
use phlo_core::config::RunConfig;
use phlo_core::dsl::{parse, to_field, Params};
use phlo_core::probes::{probe_points, ProbeBox};
use phlo_core::quadrature::{energy, planck_action, EnergyEstimate, PlanckReport, QuadratureError};
use phlo_core::report::{run_suite, FieldSource, Tolerances};
use phlo_core::solutions::{sample, GridSpec, PhloConfig};
use phlo_core::DerivativeProvider;

#[derive(Parser)]
#[command(name = "phlo", version, about = "Verify and explore photon-like nonlinear-connection fields")]
struct Cli {
    /// Worker threads (default: PHLO_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    /// Pretty-printed JSON.
    Machine,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Provider {
    Dual,
    Fd,
}

#[derive(Args)]
struct ProviderArgs {
    /// Derivative provider; overrides the config.
    #[arg(long, value_enum)]
    provider: Option<Provider>,
    /// Finite-difference step; applies when the provider is fd.
    #[arg(long)]
    fd_step: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the invariant suite; exit 0 iff every invariant passes.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        provider: ProviderArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        probes: Option<usize>,
    },
    /// Curvature, l0 and integrability of a user field pair.
    Curvature {
        #[arg(long)]
        u: String,
        #[arg(long)]
        p: String,
        #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
        epsilon: f64,
        #[arg(long, default_value_t = phlo_core::probes::DEFAULT_PROBES)]
        probes: usize,
        #[arg(long, default_value_t = phlo_core::probes::DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        provider: ProviderArgs,
    },
    /// Energy over one period at the configured time slices.
    Energy {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Spatial nodes NX,NY,NZ.
        #[arg(long, value_parser = parse_grid)]
        grid: Option<[usize; 3]>,
    },
    /// The action integral against εκ·E·T.
    Planck {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_parser = parse_grid)]
        grid: Option<[usize; 3]>,
    },
    /// Sample the fields on a grid at time T and write CSV.
    Emit {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        t: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = parse_grid)]
        grid: Option<[usize; 3]>,
    },
    /// Parse expressions and echo their canonical form.
    ParseCheck {
        #[arg(required = true, allow_hyphen_values = true)]
        exprs: Vec<String>,
    },
}

fn parse_grid(s: &str) -> Result<[usize; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [a, b, c] = parts.as_slice() else {
        return Err(format!("expected NX,NY,NZ, got `{s}`"));
    };
    let n = |t: &str| t.parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| format!("bad grid count `{t}`"));
    Ok([n(a)?, n(b)?, n(c)?])
}

/// A failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure { code: 2, message: e.to_string() }
}

fn resolve_provider(args: &ProviderArgs, configured: DerivativeProvider) -> Result<DerivativeProvider, Failure> {
    if let Some(h) = args.fd_step {
        if !(h.is_finite() && h > 0.0) {
            return Err(usage(format!("--fd-step must be positive, got {h}")));
        }
    }
    let configured_step = match configured {
        DerivativeProvider::FiniteDifference { step } => step,
        DerivativeProvider::Dual => DerivativeProvider::DEFAULT_FD_STEP,
    };
    let fd = |step: Option<f64>| DerivativeProvider::FiniteDifference { step: step.unwrap_or(configured_step) };
    Ok(match args.provider {
        Some(Provider::Dual) => DerivativeProvider::Dual,
        Some(Provider::Fd) => fd(args.fd_step),
        None if args.fd_step.is_some() && configured != DerivativeProvider::Dual => fd(args.fd_step),
        None => configured,
    })
}

fn load(path: &Option<PathBuf>) -> Result<RunConfig, Failure> {
    match path {
        Some(p) => RunConfig::load(p).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => Ok(RunConfig::default()),
    }
}

fn print_out(out: String) -> Result<u8, Failure> {
    print!("{out}");
    Ok(0)
}

fn verify(
    cli_format: Format,
    config: &Option<PathBuf>,
    provider: &ProviderArgs,
    seed: Option<u64>,
    probes: Option<usize>,
) -> Result<u8, Failure> {
    let mut run = load(config)?;
    run.provider = resolve_provider(provider, run.provider)?;
    if let Some(s) = seed {
        run.seed = s;
    }
    if let Some(n) = probes {
        if n == 0 {
            return Err(usage("--probes must be positive"));
        }
        run.probes = n;
    }
    let opts = run.suite_options().map_err(usage)?;
    let report = run_suite(&run.phlo, &opts).map_err(usage)?;
    print!("{}", if cli_format == Format::Machine { report.to_json() + "\n" } else { report.to_text() });
    Ok(if report.passed { 0 } else { 1 })
}

fn curvature(
    format: Format,
    u: &str,
    p: &str,
    epsilon: f64,
    probes: usize,
    seed: u64,
    provider: &ProviderArgs,
) -> Result<u8, Failure> {
    if epsilon != 1.0 && epsilon != -1.0 {
        return Err(usage(format!("--epsilon must be 1 or -1, got {epsilon}")));
    }
    if probes == 0 {
        return Err(usage("--probes must be positive"));
    }
    let defaults = PhloConfig::default();
    let params = Params::new(epsilon, defaults.kappa, defaults.l0);
    let field = |name: &str, text: &str| {
        parse(text)
            .map_err(|e| usage(format!("--{name} `{text}`: parse error {e}")))
            .and_then(|expr| to_field(&expr, &params).map_err(|e| usage(format!("--{name} `{text}`: {e}"))))
    };
    let (uf, pf) = (field("u", u)?, field("p", p)?);
    let provider = resolve_provider(provider, DerivativeProvider::Dual)?;
    let points = probe_points(&ProbeBox::default(), probes, seed);
    let analysis = analyze_curvature(&uf, &pf, (u, p), epsilon, &points, provider).map_err(usage)?;
    print_out(if format == Format::Machine { analysis.to_json() + "\n" } else { analysis.to_text() })
}

#[derive(Serialize)]
struct EnergyOutput<'a> {
    config: &'a PhloConfig,
    fields: &'a FieldSource,
    grid: [usize; 3],
    period: f64,
    frequency: f64,
    h: f64,
    slices: &'a [EnergyEstimate],
    conservation: f64,
}

#[derive(Serialize)]
struct PlanckOutput<'a> {
    config: &'a PhloConfig,
    fields: &'a FieldSource,
    grid: [usize; 3],
    time_count: usize,
    tolerance: f64,
    passed: bool,
    #[serde(flatten)]
    report: &'a PlanckReport,
}

fn header(out: &mut String, title: &str, c: &PhloConfig, fields: &FieldSource, grid: [usize; 3]) {
    let _ = writeln!(out, "{title}");
    let _ = writeln!(
        out,
        "config: epsilon={} kappa={} l0={} lambda={} r0={} gamma={} phase_family={} c={}",
        c.epsilon,
        c.kappa,
        c.l0,
        c.lambda(),
        c.r0,
        c.gamma,
        c.phase_family,
        c.c
    );
    if let FieldSource::Expressions { u, p } = fields {
        let _ = writeln!(out, "fields: u = {u}; p = {p}");
    }
    let _ = writeln!(out, "grid: {}x{}x{}", grid[0], grid[1], grid[2]);
}

fn quadrature_failure(e: QuadratureError) -> Failure {
    let code = if matches!(e, QuadratureError::Truncated { .. }) { 1 } else { 2 };
    Failure { code, message: e.to_string() }
}

fn energy_cmd(format: Format, config: &Option<PathBuf>, grid: Option<[usize; 3]>) -> Result<u8, Failure> {
    let mut run = load(config)?;
    if let Some(g) = grid {
        run.grid = g;
    }
    let (fields, source) = run.phlo_fields().map_err(usage)?;
    let plan = run.plan().map_err(usage)?;
    let cfg = &run.phlo;
    let period = cfg.period();
    let slices = (0..plan.time_slices)
        .map(|k| {
            let t = period * k as f64 / plan.time_slices as f64;
            let ranges = plan.spatial_box.unwrap_or_else(|| cfg.support_at(t));
            energy(&fields, ranges, plan.counts, cfg.c * t, t, run.provider)
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(quadrature_failure)?;
    let (lo, hi) = slices.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), s| (lo.min(s.energy), hi.max(s.energy)));
    let conservation = if hi > 0.0 { (hi - lo) / hi } else { 0.0 };
    let h = slices[0].energy * period;
    if format == Format::Machine {
        let out = EnergyOutput {
            config: cfg,
            fields: &source,
            grid: run.grid,
            period,
            frequency: cfg.frequency(),
            h,
            slices: &slices,
            conservation,
        };
        return print_out(serde_json::to_string_pretty(&out).expect("serializes") + "\n");
    }
    let mut out = String::new();
    header(&mut out, "PhLO energy", cfg, &source, run.grid);
    let _ = writeln!(out, "    E          {:.12e}", slices[0].energy);
    let _ = writeln!(out, "    T          {:.12e}", period);
    let _ = writeln!(out, "    nu         {:.12e}", cfg.frequency());
    let _ = writeln!(out, "    h = E*T    {:.12e}", h);
    for s in &slices {
        let _ = writeln!(out, "    E(t={:.6e}) {:.12e} (richardson {:.3e})", s.t, s.energy, s.error);
    }
    let _ = writeln!(out, "    conservation {:.3e}", conservation);
    print_out(out)
}

fn planck_cmd(format: Format, config: &Option<PathBuf>, grid: Option<[usize; 3]>) -> Result<u8, Failure> {
    let mut run = load(config)?;
    if let Some(g) = grid {
        run.grid = g;
    }
    let (fields, source) = run.phlo_fields().map_err(usage)?;
    let plan = run.plan().map_err(usage)?;
    let tol = Tolerances::default();
    let report = planck_action(&run.phlo, &fields, &plan, run.provider, tol.quadrature).map_err(quadrature_failure)?;
    let passed = report.mismatch <= tol.quadrature
        && report.richardson <= tol.quadrature
        && report.conservation <= tol.conservation;
    if format == Format::Machine {
        let out = PlanckOutput {
            config: &run.phlo,
            fields: &source,
            grid: run.grid,
            time_count: run.grid_t,
            tolerance: tol.quadrature,
            passed,
            report: &report,
        };
        print!("{}", serde_json::to_string_pretty(&out).expect("serializes") + "\n");
        return Ok(if passed { 0 } else { 1 });
    }
    let mut out = String::new();
    header(&mut out, "PhLO Planck relation", &run.phlo, &source, run.grid);
    let _ = writeln!(out, "    E          {:.12e}", report.energy);
    let _ = writeln!(out, "    T          {:.12e}", report.period);
    let _ = writeln!(out, "    nu         {:.12e}", report.frequency);
    let _ = writeln!(out, "    h = E*T    {:.12e}", report.h);
    let _ = writeln!(out, "    H          {:.12e}", report.action);
    let _ = writeln!(out, "    eps*kappa*h {:.12e}", report.expected);
    let _ = writeln!(out, "    mismatch   {:.3e}", report.mismatch);
    let _ = writeln!(out, "    richardson {:.3e}", report.richardson);
    let _ = writeln!(out, "    conservation {:.3e}", report.conservation);
    for w in &report.warnings {
        let _ = writeln!(out, "    warning    {w}");
    }
    let _ = writeln!(out, "result: {}", if passed { "PASS" } else { "FAIL" });
    print!("{out}");
    Ok(if passed { 0 } else { 1 })
}

fn emit_cmd(config: &Option<PathBuf>, t: f64, path: &PathBuf, grid: Option<[usize; 3]>) -> Result<u8, Failure> {
    if !t.is_finite() {
        return Err(usage("--t must be finite"));
    }
    let run = load(config)?;
    let counts = grid.unwrap_or(run.grid);
    let (fields, _) = run.phlo_fields().map_err(usage)?;
    let ranges = match run.probe_box().map_err(usage)? {
        Some(b) => [[b.min[0], b.max[0]], [b.min[1], b.max[1]], [b.min[2], b.max[2]]],
        None => run.phlo.support_at(t),
    };
    let spec = GridSpec::from_support(ranges, counts);
    let grid = sample(&fields, &spec, t, run.phlo.c, run.provider).map_err(usage)?;
    let io = |e: std::io::Error| usage(format!("{}: {e}", path.display()));
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    grid.write_csv(&mut w).map_err(io)?;
    w.flush().map_err(io)?;
    eprintln!("wrote {} rows to {}", grid.rows.len(), path.display());
    Ok(0)
}

fn parse_check(exprs: &[String]) -> Result<u8, Failure> {
    let mut out = String::new();
    let mut code = 0;
    for e in exprs {
        match parse(e) {
            Ok(ast) => {
                let _ = writeln!(out, "ok     {e}  =>  {ast}");
            }
            Err(err) => {
                let _ = writeln!(out, "error  {e}  =>  {err}");
                code = 2;
            }
        }
    }
    print!("{out}");
    Ok(code)
}

fn init_threads(flag: Option<usize>) -> Result<(), Failure> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("PHLO_THREADS") {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| usage(format!("PHLO_THREADS: bad value `{v}`")))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(usage("thread count must be positive"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(usage)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Failure> {
    init_threads(cli.threads)?;
    let f = cli.format;
    match &cli.command {
        Command::Verify { config, provider, seed, probes } => verify(f, config, provider, *seed, *probes),
        Command::Curvature { u, p, epsilon, probes, seed, provider } => {
            curvature(f, u, p, *epsilon, *probes, *seed, provider)
        }
        Command::Energy { config, grid } => energy_cmd(f, config, *grid),
        Command::Planck { config, grid } => planck_cmd(f, config, *grid),
        Command::Emit { config, t, out, grid } => emit_cmd(config, *t, out, *grid),
        Command::ParseCheck { exprs } => parse_check(exprs),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("phlo: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
