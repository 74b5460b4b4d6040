use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use folquot::quotient;
use folquot::ring::RingCtx;
use folquot::{Derivation, Poly};
use folquot_cli::report::{emit_report, Format};
use folquot_cli::{engine, scenario, CliError};

/// Exact verifier for derivation, blow-up chart and discrepancy computations
/// over prime-characteristic polynomial rings.
#[derive(Parser)]
#[command(name = "folquot", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and check its expectations.
    Verify(VerifyArgs),
    /// List the built-in scenario corpus.
    List,
    /// Iterated p-th power of a derivation literal.
    Ppower(PpowerArgs),
    /// Pull a derivation back along a monomial chart.
    Pullback(PullbackArgs),
    /// Degree-truncated kernel of a derivation.
    Kernel(KernelArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// Corpus scenario name, or a path to a scenario file.
    #[arg(long, short = 's')]
    scenario: Option<String>,
    /// Override a declared parameter, e.g. --param p=5 (repeatable).
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// Degree bound for kernel and lift computations.
    #[arg(long)]
    dmax: Option<i64>,
    /// Output format.
    #[arg(long, default_value = "text")]
    format: String,
    /// List the corpus instead of running.
    #[arg(long)]
    list: bool,
}

#[derive(Args)]
struct PpowerArgs {
    /// Characteristic.
    #[arg(long)]
    p: u64,
    /// Comma-separated variable names.
    #[arg(long)]
    vars: String,
    /// Comma-separated reserved (opaque-direction) variables.
    #[arg(long, default_value = "")]
    reserved: String,
    /// Derivation literal, e.g. "x^2 d[x] + t d[y]".
    literal: String,
}

#[derive(Args)]
struct PullbackArgs {
    #[arg(long)]
    p: u64,
    /// Comma-separated source variables.
    #[arg(long)]
    source_vars: String,
    /// Comma-separated target variables (same count as the source).
    #[arg(long)]
    target_vars: String,
    #[arg(long, default_value = "")]
    reserved: String,
    #[arg(long, default_value = "")]
    target_reserved: String,
    /// Forward images, e.g. "x=u; y=u*v". Unmapped variables stay fixed.
    #[arg(long)]
    map: String,
    /// Optionally saturate the pullback along this target variable.
    #[arg(long)]
    saturate: Option<String>,
    /// Derivation literal over the source ring.
    literal: String,
}

#[derive(Args)]
struct KernelArgs {
    #[arg(long)]
    p: u64,
    #[arg(long)]
    vars: String,
    #[arg(long, default_value_t = 6)]
    dmax: i64,
    /// Derivation literal.
    literal: String,
}

fn split_names(s: &str) -> Vec<&str> {
    s.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

fn load_scenario(spec: &str) -> Result<scenario::ScenarioDoc, CliError> {
    if let Some(text) = scenario::corpus_lookup(spec) {
        return scenario::parse_scenario(text);
    }
    let path = PathBuf::from(spec);
    if path.exists() {
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io(e.to_string()))?;
        return scenario::parse_scenario(&text);
    }
    Err(CliError::Usage(format!(
        "`{spec}` is neither a corpus scenario nor a readable file; try `folquot list`"
    )))
}

fn print_catalog() {
    println!("built-in scenarios:");
    for (name, text) in scenario::CORPUS {
        match scenario::parse_scenario(text) {
            Ok(doc) => println!("  {name:<28} {}", doc.source),
            Err(e) => println!("  {name:<28} (unparseable: {e})"),
        }
    }
}

fn cmd_verify(args: &VerifyArgs) -> Result<u8, CliError> {
    if args.list {
        print_catalog();
        return Ok(0);
    }
    let spec = args
        .scenario
        .as_deref()
        .ok_or_else(|| CliError::Usage("verify needs --scenario NAME|PATH (or --list)".into()))?;
    let doc = load_scenario(spec)?;
    let mut overrides = BTreeMap::new();
    for pair in &args.params {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--param `{pair}` must be KEY=VALUE")))?;
        overrides.insert(k.trim().to_string(), v.trim().to_string());
    }
    if let Some(d) = args.dmax {
        overrides.insert("dmax".to_string(), d.to_string());
    }
    let format: Format = args.format.parse()?;
    let report = engine::run_scenario(&doc, &overrides)?;
    print!("{}", emit_report(&report, format)?);
    if format == Format::Json {
        println!();
    }
    Ok(if report.passed() { 0 } else { 1 })
}

fn cmd_ppower(args: &PpowerArgs) -> Result<u8, CliError> {
    let vars = split_names(&args.vars);
    let reserved = split_names(&args.reserved);
    let ctx = RingCtx::new(args.p, &vars, &reserved).map_err(|e| CliError::Usage(e.to_string()))?;
    let d = Derivation::parse(&ctx, &args.literal).map_err(|e| CliError::Usage(e.to_string()))?;
    println!("D      = {d}");
    println!("D^[p]  = {}", d.p_power());
    match d.is_p_closed() {
        Ok(h) => println!("h      = {h}   (D^[p] = h*D)"),
        Err(e) => println!("h      : {e}"),
    }
    Ok(0)
}

fn cmd_pullback(args: &PullbackArgs) -> Result<u8, CliError> {
    let svars = split_names(&args.source_vars);
    let tvars = split_names(&args.target_vars);
    let src = RingCtx::new(args.p, &svars, &split_names(&args.reserved))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let dst = RingCtx::new(args.p, &tvars, &split_names(&args.target_reserved))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut images: BTreeMap<usize, Poly> = BTreeMap::new();
    for entry in args.map.split(';') {
        let entry = entry.trim();
        if entry.is_empty() {
            continue;
        }
        let (var, image) = entry
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("map entry `{entry}` must be var=image")))?;
        let j = src
            .var_index(var.trim())
            .ok_or_else(|| CliError::Usage(format!("unknown source variable `{}`", var.trim())))?;
        let im = folquot::parse_poly_any(&dst, image.trim())
            .map_err(|e| CliError::Usage(e.to_string()))?;
        images.insert(j, im);
    }
    let forward: Vec<Poly> = (0..src.nvars())
        .map(|j| images.remove(&j).unwrap_or_else(|| Poly::var(&dst, j)))
        .collect();
    let chart = folquot::ChartMap::from_images(&src, &dst, forward)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let d = Derivation::parse(&src, &args.literal).map_err(|e| CliError::Usage(e.to_string()))?;
    let pulled = chart.pullback(&d).map_err(|e| CliError::Usage(e.to_string()))?;
    println!("chart    : {chart}");
    println!("pullback : {pulled}");
    if let Some(var) = &args.saturate {
        let e = chart
            .target()
            .var_index(var)
            .ok_or_else(|| CliError::Usage(format!("unknown target variable `{var}`")))?;
        let s = pulled.saturate(e);
        println!("saturated: {}   (k = {}, a_fol = {})", s.derivation, s.exponent, -s.exponent);
    }
    Ok(0)
}

fn cmd_kernel(args: &KernelArgs) -> Result<u8, CliError> {
    let vars = split_names(&args.vars);
    let ctx = RingCtx::new(args.p, &vars, &[]).map_err(|e| CliError::Usage(e.to_string()))?;
    let d = Derivation::parse(&ctx, &args.literal).map_err(|e| CliError::Usage(e.to_string()))?;
    let k = quotient::truncated_kernel(&d, args.dmax).map_err(|e| CliError::Usage(e.to_string()))?;
    println!("kernel of {d} up to degree {}", args.dmax);
    let dims: Vec<String> = k.dims.iter().map(|d| d.to_string()).collect();
    println!("dims per degree: [{}]", dims.join(", "));
    for f in &k.basis {
        println!("  {f}");
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Verify(args) => cmd_verify(args),
        Command::List => {
            print_catalog();
            Ok(0)
        }
        Command::Ppower(args) => cmd_ppower(args),
        Command::Pullback(args) => cmd_pullback(args),
        Command::Kernel(args) => cmd_kernel(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
