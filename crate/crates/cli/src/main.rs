//! `pushblock` command-line interface.
//!
//! Exit status: 0 when every requested check passes, 1 when a verification
//! fails (the JSON report is still written), 2 on bad flags or I/O errors.

mod plot;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use pushblock::array::{self, ArrayState};
use pushblock::io::{self, Document, GrowthDoc, Header, HeightRow, NucleationRow};
use pushblock::lpp::{lpp_table, GeometricEnv};
use pushblock::noise::make_noise;
use pushblock::particles::ParticleTrajectory;
use pushblock::png::{self, NucleationSet};
use pushblock::verify::{self, ArrayRun, IdentityRun, PngLimitRun, Report};
use pushblock::{growth, particles, ModelParams, Seed};

#[derive(Parser, Debug)]
#[command(name = "pushblock", version, about = "Push/block growth, its particle and array forms, LPP and PNG")]
struct Cli {
    /// Root seed; all randomness derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file. Defaults to a file named after the command in the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, env = "PUSHBLOCK_OUT_DIR", default_value = "pushblock-out")]
    out_dir: PathBuf,
    /// Worker threads for replica-level parallelism.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Geometric environments and their last passage tables (CSV).
    SampleLpp(LppArgs),
    SimulateGrowth(ModelArgs),
    SimulateParticles(ModelArgs),
    SimulateArray(ArrayArgs),
    SimulatePng(PngArgs),
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// SVG of a growth or particle trajectory file written by this tool.
    Plot(PlotArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct LppArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    v: f64,
    #[arg(long, default_value_t = 1)]
    samples: u64,
}

#[derive(Args, Debug, Serialize)]
struct ModelArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    v: f64,
    /// Half-width of the nucleation window.
    #[arg(long = "L", visible_alias = "half-width")]
    #[serde(rename = "L")]
    half_width: f64,
    /// Number of steps (default 2n).
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Also write the consumed noise (JSON) here, for replay.
    #[arg(long)]
    #[serde(skip)]
    noise_out: Option<PathBuf>,
}

impl ModelArgs {
    fn params(&self) -> anyhow::Result<ModelParams> {
        let p = ModelParams::new(self.v, self.n, self.half_width)?;
        Ok(match self.steps {
            Some(s) => p.with_steps(s),
            None => p,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Start {
    Stationary,
    Zero,
}

#[derive(Args, Debug, Serialize)]
struct ArrayArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    v: f64,
    #[arg(long, default_value_t = 1.0)]
    duration: f64,
    #[arg(long, value_enum, default_value_t = Start::Stationary)]
    start: Start,
    /// `json` writes the event path, `csv` the final state.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug, Serialize)]
struct PngArgs {
    #[arg(long = "L", visible_alias = "half-width", default_value_t = 3.0)]
    #[serde(rename = "L")]
    half_width: f64,
    #[arg(long, default_value_t = 1.0)]
    time: f64,
    /// `json` writes nucleations and edges, `csv` the height at each edge.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// JSON trajectory from simulate-growth or simulate-particles.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Subcommand, Debug)]
enum VerifyCommand {
    /// Height vector at the origin against the last passage vector.
    Identity(IdentityArgs),
    /// Growth and particle dynamics agree pathwise on shared noise.
    Coupling(CouplingArgs),
    /// Balance between forward and reversed array rates.
    Balance(BalanceArgs),
    /// Cell marginals of the array chain started in stationarity.
    Stationarity(StationarityArgs),
    /// Convergence to flat PNG as v = 1/n.
    PngLimit(PngLimitArgs),
    /// Max-plus recursion against brute-force path enumeration.
    LppOracle(OracleArgs),
    /// Structural invariants along simulated paths.
    Invariants(InvariantArgs),
}

#[derive(Args, Debug, Serialize)]
struct IdentityArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    v: f64,
    #[arg(long = "L", visible_alias = "half-width", default_value_t = 25.0)]
    half_width: f64,
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    #[arg(long, default_value_t = 200)]
    stabilize_samples: u64,
    #[arg(long, default_value_t = 200)]
    bootstrap: u64,
}

#[derive(Args, Debug, Serialize)]
struct CouplingArgs {
    /// One or more sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long)]
    v: f64,
    #[arg(long = "L", visible_alias = "half-width", default_value_t = 20.0)]
    half_width: f64,
    #[arg(long, default_value_t = 500)]
    samples: u64,
}

#[derive(Args, Debug, Serialize)]
struct BalanceArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    v: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    samples: u64,
}

#[derive(Args, Debug, Serialize)]
struct StationarityArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    v: f64,
    #[arg(long, default_value_t = 5.0)]
    duration: f64,
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    /// Cells to compare, as `i,j`; repeatable.
    #[arg(long = "cell", value_parser = parse_cell, default_values = ["1,1"])]
    cells: Vec<(usize, usize)>,
    #[arg(long, default_value_t = 200)]
    bootstrap: u64,
}

#[derive(Args, Debug, Serialize)]
struct PngLimitArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [4, 8, 16, 32])]
    n: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    #[arg(long = "L", visible_alias = "half-width", default_value_t = 3.0)]
    half_width: f64,
    #[arg(long, default_value_t = 0.05)]
    tv_max: f64,
    #[arg(long, default_value_t = 0.5)]
    top_row_time: f64,
    #[arg(long, default_value_t = 200)]
    bootstrap: u64,
}

#[derive(Args, Debug, Serialize)]
struct OracleArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 3])]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.3, 0.5, 0.8])]
    v: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    samples: u64,
}

#[derive(Args, Debug, Serialize)]
struct InvariantArgs {
    #[arg(long, default_value_t = 200)]
    samples: u64,
}

fn parse_cell(s: &str) -> Result<(usize, usize), String> {
    let (i, j) = s.split_once(',').ok_or_else(|| format!("expected i,j, got {s:?}"))?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    Ok((parse(i)?, parse(j)?))
}

/// Row of `sample-lpp` output.
#[derive(Serialize)]
struct LppRow {
    replica: u64,
    i: usize,
    j: usize,
    g: u64,
    #[serde(rename = "G")]
    big_g: u64,
}

struct Ctx {
    seed: Seed,
    out: Option<PathBuf>,
    out_dir: PathBuf,
}

impl Ctx {
    fn path(&self, stem: &str, ext: &str) -> anyhow::Result<PathBuf> {
        let path = match &self.out {
            Some(p) => p.clone(),
            None => self.out_dir.join(format!("{stem}.{ext}")),
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        Ok(path)
    }

    fn header(&self, config: Value) -> Header {
        Header::new(Some(self.seed), config)
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_json<D: Serialize>(path: &Path, header: Header, data: D) -> anyhow::Result<()> {
    io::write_json(create(path)?, &Document::new(header, data))?;
    Ok(())
}

fn write_csv<R: Serialize>(path: &Path, header: &Header, rows: Vec<R>) -> anyhow::Result<()> {
    io::write_csv(create(path)?, header, rows)?;
    Ok(())
}

fn config(command: &str, args: &impl Serialize) -> Value {
    json!({ "command": command, "args": args })
}

fn sample_lpp(ctx: &Ctx, a: &LppArgs) -> anyhow::Result<PathBuf> {
    if a.samples == 0 {
        bail!("--samples must be at least 1");
    }
    ModelParams::new(a.v, a.n, 1.0)?.geometric_ratio()?;
    let rows: Vec<Vec<LppRow>> = (0..a.samples)
        .into_par_iter()
        .map(|r| -> anyhow::Result<Vec<LppRow>> {
            let env = GeometricEnv::sample(a.n, a.v, ctx.seed.replica(r))?;
            let t = lpp_table(&env);
            Ok(io::env_rows(&env, &t).into_iter().map(|e| LppRow { replica: r, i: e.i, j: e.j, g: e.g, big_g: e.big_g }).collect())
        })
        .collect::<anyhow::Result<_>>()?;
    let path = ctx.path("sample-lpp", "csv")?;
    write_csv(&path, &ctx.header(config("sample-lpp", a)), rows.into_iter().flatten().collect())?;
    Ok(path)
}

fn simulate_growth(ctx: &Ctx, a: &ModelArgs) -> anyhow::Result<PathBuf> {
    let noise = make_noise::<f64>(&a.params()?, ctx.seed);
    let traj = growth::simulate_noise(&noise)?;
    let header = ctx.header(config("simulate-growth", a));
    if let Some(p) = &a.noise_out {
        write_json(p, header.clone(), noise.records(traj.usage())?)?;
    }
    let path = ctx.path("simulate-growth", a.format.ext())?;
    match a.format {
        Format::Json => write_json(&path, header, GrowthDoc::from(&traj))?,
        Format::Csv => write_csv(&path, &header, io::profile_rows(&traj))?,
    }
    Ok(path)
}

fn simulate_particles(ctx: &Ctx, a: &ModelArgs) -> anyhow::Result<PathBuf> {
    let noise = make_noise::<f64>(&a.params()?, ctx.seed);
    let traj = particles::simulate_noise(&noise)?;
    let header = ctx.header(config("simulate-particles", a));
    if let Some(p) = &a.noise_out {
        write_json(p, header.clone(), noise.records(traj.usage())?)?;
    }
    let path = ctx.path("simulate-particles", a.format.ext())?;
    match a.format {
        Format::Json => write_json(&path, header, &traj)?,
        Format::Csv => write_csv(&path, &header, io::path_rows(&traj))?,
    }
    Ok(path)
}

fn simulate_array(ctx: &Ctx, a: &ArrayArgs) -> anyhow::Result<PathBuf> {
    let params = ModelParams::new(a.v, a.n, 1.0)?;
    let s0 = match a.start {
        Start::Stationary => array::sample_stationary(&params, ctx.seed.replica(0))?,
        Start::Zero => ArrayState::zeros(a.n),
    };
    let traj = array::simulate_ct(&s0, a.duration, a.v, ctx.seed.replica(1))?;
    let header = ctx.header(config("simulate-array", a));
    let path = ctx.path("simulate-array", a.format.ext())?;
    match a.format {
        Format::Json => write_json(&path, header, &traj)?,
        Format::Csv => write_csv(&path, &header, io::state_rows(&traj.final_state()))?,
    }
    Ok(path)
}

fn simulate_png(ctx: &Ctx, a: &PngArgs) -> anyhow::Result<PathBuf> {
    if !(a.half_width.is_finite() && a.half_width > 0.0) {
        bail!("--L must be positive and finite");
    }
    let m = NucleationSet::<f64>::sample(a.half_width, ctx.seed);
    let state = png::simulate_png(&m, a.time)?;
    let header = ctx.header(config("simulate-png", a));
    let path = ctx.path("simulate-png", a.format.ext())?;
    match a.format {
        Format::Json => {
            let nucleations: Vec<NucleationRow> = m.points().iter().map(|&(s, x)| NucleationRow { s, x }).collect();
            write_json(&path, header, json!({ "nucleations": nucleations, "state": state, "height_at_origin": state.height(0.0) }))?;
        }
        Format::Csv => {
            let mut xs: Vec<f64> = state.kinks.iter().chain(&state.antikinks).copied().collect();
            xs.push(-a.half_width);
            xs.sort_by(f64::total_cmp);
            xs.dedup();
            let rows = xs.into_iter().map(|x| HeightRow { x, h: state.height(x) }).collect();
            write_csv(&path, &header, rows)?;
        }
    }
    Ok(path)
}

fn verify(ctx: &Ctx, cmd: &VerifyCommand) -> anyhow::Result<(Report, &'static str)> {
    let seed = ctx.seed;
    Ok(match cmd {
        VerifyCommand::Identity(a) => {
            let run = IdentityRun {
                n: a.n,
                v: a.v,
                half_width: a.half_width,
                samples: a.samples,
                stabilize_samples: a.stabilize_samples,
                bootstrap: a.bootstrap,
            };
            (verify::identity(&run, seed)?, "verify-identity")
        }
        VerifyCommand::Coupling(a) => (verify::coupling(&a.n, a.v, a.half_width, a.samples, seed)?, "verify-coupling"),
        VerifyCommand::Balance(a) => (verify::balance(&a.n, &a.v, a.samples, seed)?, "verify-balance"),
        VerifyCommand::Stationarity(a) => {
            let run = ArrayRun { n: a.n, v: a.v, duration: a.duration, replicas: a.samples, bootstrap: a.bootstrap };
            let stair = pushblock::staircase::Staircase::new(a.n.max(1));
            if let Some(c) = a.cells.iter().find(|c| !stair.contains(c.0, c.1)) {
                bail!("cell {c:?} is outside the staircase for n = {}", a.n);
            }
            (verify::stationarity(&run, &a.cells, seed)?, "verify-stationarity")
        }
        VerifyCommand::PngLimit(a) => {
            let run = PngLimitRun {
                n: a.n.clone(),
                samples: a.samples,
                half_width: a.half_width,
                bootstrap: a.bootstrap,
                tv_max: a.tv_max,
                top_row_time: a.top_row_time,
            };
            (verify::png_limit(&run, seed)?, "verify-png-limit")
        }
        VerifyCommand::LppOracle(a) => (verify::lpp_oracle(&a.n, &a.v, a.samples, seed)?, "verify-lpp-oracle"),
        VerifyCommand::Invariants(a) => (verify::invariants(a.samples, seed)?, "verify-invariants"),
    })
}

fn plot(ctx: &Ctx, a: &PlotArgs) -> anyhow::Result<PathBuf> {
    let text = std::fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let svg = if let Ok(doc) = serde_json::from_str::<Document<GrowthDoc>>(&text) {
        plot::growth_svg(&doc.data)
    } else if let Ok(doc) = serde_json::from_str::<Document<ParticleTrajectory<f64>>>(&text) {
        plot::particles_svg(&doc.data)
    } else {
        bail!("{} is neither a growth nor a particle trajectory", a.input.display());
    };
    let path = ctx.path("plot", "svg")?;
    std::fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    let ctx = Ctx { seed: Seed::new(cli.seed), out: cli.out, out_dir: cli.out_dir };
    let path = match &cli.command {
        Command::SampleLpp(a) => sample_lpp(&ctx, a)?,
        Command::SimulateGrowth(a) => simulate_growth(&ctx, a)?,
        Command::SimulateParticles(a) => simulate_particles(&ctx, a)?,
        Command::SimulateArray(a) => simulate_array(&ctx, a)?,
        Command::SimulatePng(a) => simulate_png(&ctx, a)?,
        Command::Plot(a) => plot(&ctx, a)?,
        Command::Verify(cmd) => {
            let (report, stem) = verify(&ctx, cmd)?;
            let path = ctx.path(stem, "json")?;
            let mut w = create(&path)?;
            serde_json::to_writer_pretty(&mut w, &report)?;
            std::io::Write::write_all(&mut w, b"\n")?;
            let passed = report.checks.iter().filter(|c| c.passed).count();
            println!("{}: {} ({passed}/{} checks passed)", report.test, if report.passed { "PASS" } else { "FAIL" }, report.checks.len());
            for c in &report.checks {
                let mark = if c.passed { "ok" } else { "FAILED" };
                let p = c.p_value.map(|p| format!(", p = {p:.3e}")).unwrap_or_default();
                println!("  {mark}: {} = {:.6e} (threshold {:.3e}{p}, {} samples)", c.label, c.statistic, c.threshold, c.n_samples);
            }
            println!("report: {}", path.display());
            return Ok(report.passed);
        }
    };
    println!("{}", path.display());
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
