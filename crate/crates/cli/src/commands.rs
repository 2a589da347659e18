use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context as _, Result};
use h2sched_core::bounding::{
    hull_envelope, read_envelope_csv, read_trajectory_csv, write_envelope_csv,
    write_trajectory_csv, BoundEnvelope, Trajectory,
};
use h2sched_core::control::{contract_volume, simulate_year, write_daily_csv, Controller, SimulationReport};
use h2sched_core::dispatch::{read_flows_csv, solve_annual_benchmark, write_flows_csv, DispatchSolution};
use h2sched_core::fuzzy::FuzzyModel;
use h2sched_core::plant::{max_hydrogen, PlantSpec};
use h2sched_core::pso::{exemplars_from_benchmark, train as train_model, variable_ranges, PsoConfig};
use h2sched_core::scenario::{demo_years, synthetic_year};
use h2sched_core::timeseries::{load_columns, load_csv, save_csv, HourlySeries, HydrogenPriceSynth};
use h2sched_core::Error as CoreError;
use log::warn;
use rayon::prelude::*;

use crate::config::{
    load_structured, read_contract_file, write_contract_file, ContractFile, RunConfig,
    DEFAULT_CONTRACT_FRACTION,
};
use crate::{ControllerChoice, GlobalArgs, ReportArgs, SimulateArgs, SynthArgs, TrainArgs, UsageError, YearsArgs};

pub const BENCHMARK_SUMMARY: &str = "benchmark_summary.csv";
pub const MODEL_FILE: &str = "model.txt";
pub const ENVELOPE_FILE: &str = "envelope.csv";
pub const TRACE_FILE: &str = "objective_trace.csv";
pub const COMPARISON_FILE: &str = "comparison.csv";
pub const COMPARISON_HEADER: [&str; 6] =
    ["year", "steady_rev", "bflc_rev", "benchmark_rev", "steady_norm", "bflc_norm"];

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(UsageError(msg.into()))
}

/// Flags merged over the optional config file.
pub struct Context {
    flags: GlobalArgs,
    cfg: RunConfig,
    plant: PlantSpec,
    out_dir: PathBuf,
}

impl Context {
    pub fn new(flags: GlobalArgs) -> Result<Self> {
        let cfg = match &flags.config {
            Some(p) => RunConfig::load(p).map_err(|e| usage(format!("{e:#}")))?,
            None => RunConfig::default(),
        };
        let plant = match &flags.plant_config {
            Some(p) => load_structured(p).map_err(|e| usage(format!("{e:#}")))?,
            None => cfg.plant.clone().unwrap_or_default(),
        };
        plant.validate().map_err(|e| usage(e.to_string()))?;
        if let Some(f) = flags.contract_fraction.or(cfg.contract_fraction) {
            if !(f > 0.0 && f <= 1.0) {
                return Err(usage(format!("contract fraction must be in (0, 1], got {f}")));
            }
        }
        if let Some(kg) = flags.contract_kg {
            if !(kg.is_finite() && kg >= 0.0) {
                return Err(usage(format!("contract volume must be >= 0 kg, got {kg}")));
            }
        }
        let out_dir = flags
            .out_dir
            .clone()
            .or_else(|| cfg.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok(Self { flags, cfg, plant, out_dir })
    }

    fn out_dir(&self) -> Result<&Path> {
        fs::create_dir_all(&self.out_dir)
            .with_context(|| format!("creating {}", self.out_dir.display()))?;
        Ok(&self.out_dir)
    }

    fn data_seed(&self) -> u64 {
        self.flags.seed.unwrap_or(0)
    }

    fn years(&self, given: &[PathBuf], fallback: &[PathBuf], what: &str) -> Result<Vec<PathBuf>> {
        let years = if given.is_empty() { fallback } else { given };
        if years.is_empty() {
            return Err(usage(format!("no {what} given: pass --years or set them in --config")));
        }
        Ok(years.to_vec())
    }

    /// Contract volume in kg. Flags first, then a `contract.json` written by an
    /// earlier stage, then the config file, then the default fraction of the
    /// given years' maximum production.
    fn contract(&self, series: &[HourlySeries], recorded_in: Option<&Path>) -> Result<f64> {
        if let Some(kg) = self.flags.contract_kg {
            return Ok(kg);
        }
        if let Some(f) = self.flags.contract_fraction {
            return fraction_of_max(series, &self.plant, f);
        }
        if let Some(dir) = recorded_in {
            if let Some(c) = read_contract_file(dir)? {
                return Ok(c.hpa_kg);
            }
        }
        if let Some(kg) = self.cfg.contract_kg {
            return Ok(kg);
        }
        let f = self.cfg.contract_fraction.unwrap_or(DEFAULT_CONTRACT_FRACTION);
        fraction_of_max(series, &self.plant, f)
    }
}

fn fraction_of_max(series: &[HourlySeries], plant: &PlantSpec, fraction: f64) -> Result<f64> {
    let maxima: Vec<f64> = series
        .iter()
        .map(|s| max_hydrogen(s.w(), plant).map(|kg| kg / 1000.0))
        .collect::<Result<_, _>>()?;
    Ok(contract_volume(&maxima, fraction)?)
}

fn load_years(paths: &[PathBuf]) -> Result<Vec<HourlySeries>> {
    paths
        .par_iter()
        .map(|p| load_csv(p).with_context(|| format!("loading {}", p.display())))
        .collect()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("creating {}", path.display()))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn synth(ctx: &Context, args: &SynthArgs) -> Result<()> {
    let e = load_columns(&args.e, &["e_eur_mwh"]).with_context(|| format!("reading {}", args.e.display()))?;
    let w = load_columns(&args.w, &["w"]).with_context(|| format!("reading {}", args.w.display()))?;
    if e.timestamps.len() != w.timestamps.len() {
        bail!(
            "{} has {} rows but {} has {}",
            args.e.display(),
            e.timestamps.len(),
            args.w.display(),
            w.timestamps.len()
        );
    }
    if let Some(row) = e.timestamps.iter().zip(&w.timestamps).position(|(a, b)| a != b) {
        bail!("timestamps differ at row {} of {} and {}", row + 1, args.e.display(), args.w.display());
    }
    let [e_vals] = <[Vec<f64>; 1]>::try_from(e.values).expect("one column requested");
    let [w_vals] = <[Vec<f64>; 1]>::try_from(w.values).expect("one column requested");
    let synth = HydrogenPriceSynth {
        target_mean: args.mean_h,
        noise: args.noise,
        ..HydrogenPriceSynth::default()
    };
    let h = synth.generate(&e_vals, ctx.data_seed())?;
    let label = args.out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let series = HourlySeries::new(label, e.timestamps, e_vals, h, w_vals)
        .with_context(|| format!("merging {} and {}", args.e.display(), args.w.display()))?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    save_csv(&series, &args.out)?;
    println!("wrote {} ({} hours)", args.out.display(), series.hours());
    Ok(())
}

pub fn demo_inputs(ctx: &Context) -> Result<()> {
    let dir = ctx.out_dir()?;
    let written: Vec<PathBuf> = demo_years(ctx.data_seed())
        .par_iter()
        .map(|cfg| {
            let path = dir.join(format!("{}.csv", cfg.year_label));
            save_csv(&synthetic_year(cfg)?, &path)?;
            Ok(path)
        })
        .collect::<Result<_>>()?;
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

pub fn benchmark(ctx: &Context, args: &YearsArgs) -> Result<()> {
    let paths = ctx.years(&args.years, &ctx.cfg.train_years, "years")?;
    let series = load_years(&paths)?;
    let total = ctx.contract(&series, None)?;
    let spec = ctx.plant.clone().with_contract(total);
    let dir = ctx.out_dir()?;

    let solved: Vec<_> = series.par_iter().map(|s| solve_annual_benchmark(s, &spec)).collect();
    let mut summary = csv::Writer::from_writer(create(&dir.join(BENCHMARK_SUMMARY))?);
    summary.write_record(["year", "total_revenue_eur"])?;
    let mut infeasible = Vec::new();
    for (s, result) in series.iter().zip(solved) {
        let sol = match result {
            Ok(sol) => sol,
            Err(err @ CoreError::Infeasible { .. }) => {
                eprintln!("{}: {err}", s.year_label);
                infeasible.push(s.year_label.clone());
                continue;
            }
            Err(err) => return Err(err).with_context(|| format!("benchmark for {}", s.year_label)),
        };
        write_flows_csv(&sol, create(&dir.join(format!("{}_flows.csv", s.year_label)))?)?;
        let trajectory = Trajectory::from_cumulative(sol.cumulative_hpa())?;
        write_trajectory_csv(&trajectory, create(&dir.join(format!("{}_trajectory.csv", s.year_label)))?)?;
        summary.write_record([s.year_label.clone(), sol.revenue.to_string()])?;
        println!("{}: revenue {:.2} EUR, contract {:.1} kg", s.year_label, sol.revenue, sol.hpa_delivered);
    }
    summary.flush()?;
    write_contract_file(dir, ContractFile { hpa_kg: total })?;
    if !infeasible.is_empty() {
        bail!("contract of {total} kg is infeasible for {}", infeasible.join(", "));
    }
    Ok(())
}

fn missing(path: &Path) -> anyhow::Error {
    anyhow!(
        "missing benchmark output {}; run `h2sched benchmark` for this year first",
        path.display()
    )
}

pub fn train(ctx: &Context, args: &TrainArgs) -> Result<()> {
    let paths = ctx.years(&args.years.years, &ctx.cfg.train_years, "training years")?;
    let bench_dir = args.benchmark_dir.clone().unwrap_or_else(|| ctx.out_dir.clone());
    let series = load_years(&paths)?;

    let mut exemplars = Vec::new();
    let mut trajectories = Vec::new();
    for s in &series {
        let flows_path = bench_dir.join(format!("{}_flows.csv", s.year_label));
        let traj_path = bench_dir.join(format!("{}_trajectory.csv", s.year_label));
        for p in [&flows_path, &traj_path] {
            if !p.exists() {
                return Err(missing(p));
            }
        }
        let flows = read_flows_csv(File::open(&flows_path)?)
            .with_context(|| format!("reading {}", flows_path.display()))?;
        let mut sol = DispatchSolution {
            hpa_delivered: flows.iter().map(|f| f.m2).sum(),
            flows,
            revenue: 0.0,
            dual_price: f64::NAN,
        };
        sol.revenue = sol.recompute_revenue(s.e(), s.h());
        exemplars.extend(
            exemplars_from_benchmark(s, &sol).with_context(|| format!("pairing {}", flows_path.display()))?,
        );
        trajectories.push(
            read_trajectory_csv(File::open(&traj_path)?)
                .with_context(|| format!("reading {}", traj_path.display()))?,
        );
    }
    if series.len() == 1 {
        warn!("a single training year: the envelope is that year's own hull");
    }

    let total = ctx.contract(&series, Some(&bench_dir))?;
    let spec = ctx.plant.clone().with_contract(total);
    let envelope = hull_envelope(&trajectories, total)?;
    let ranges = variable_ranges(&exemplars, &spec)?;
    let mut pso = PsoConfig {
        seed: ctx.flags.seed.or(ctx.cfg.pso.seed).unwrap_or(0),
        ..PsoConfig::default()
    };
    if let Some(n) = args.particles.or(ctx.cfg.pso.particles) {
        pso.particles = n;
    }
    if let Some(n) = args.iters.or(ctx.cfg.pso.iters) {
        pso.max_iters = n;
    }
    if pso.particles < 2 || pso.max_iters == 0 {
        return Err(usage("need at least 2 particles and 1 iteration"));
    }
    let trained = train_model(&exemplars, &ranges, &pso)?;

    let dir = ctx.out_dir()?;
    fs::write(dir.join(MODEL_FILE), trained.model.to_string())
        .with_context(|| format!("writing {}", dir.join(MODEL_FILE).display()))?;
    let mut trace = csv::Writer::from_writer(create(&dir.join(TRACE_FILE))?);
    trace.write_record(["iteration", "objective"])?;
    for (i, v) in trained.objective_trace.iter().enumerate() {
        trace.write_record([i.to_string(), v.to_string()])?;
    }
    trace.flush()?;
    write_envelope_csv(&envelope, create(&dir.join(ENVELOPE_FILE))?)?;
    write_contract_file(dir, ContractFile { hpa_kg: total })?;
    println!(
        "trained on {} days: objective {:.6}, {} iterations",
        exemplars.len(),
        trained.objective,
        trained.iterations_run
    );
    Ok(())
}

struct YearRun {
    label: String,
    benchmark: Option<f64>,
    reports: Vec<SimulationReport>,
}

pub fn simulate(ctx: &Context, args: &SimulateArgs) -> Result<()> {
    let paths = ctx.years(&args.years, &ctx.cfg.test_years, "years")?;
    let series = load_years(&paths)?;
    let model_path = args.model.clone().unwrap_or_else(|| ctx.out_dir.join(MODEL_FILE));
    let model_dir = model_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let total = ctx.contract(&series, Some(&model_dir))?;
    let spec = ctx.plant.clone().with_contract(total);

    let fuzzy: Option<(FuzzyModel, BoundEnvelope)> = match args.controller {
        ControllerChoice::Steady => None,
        _ => {
            let env_path = args.envelope.clone().unwrap_or_else(|| model_dir.join(ENVELOPE_FILE));
            let text = fs::read_to_string(&model_path)
                .with_context(|| format!("reading {}", model_path.display()))?;
            let model: FuzzyModel = text.parse().with_context(|| format!("parsing {}", model_path.display()))?;
            let envelope = read_envelope_csv(
                File::open(&env_path).with_context(|| format!("opening {}", env_path.display()))?,
            )
            .with_context(|| format!("reading {}", env_path.display()))?;
            if (envelope.total() - total).abs() > 1e-6 * total.max(1.0) {
                return Err(usage(format!(
                    "envelope {} ends at {} kg but the contract is {total} kg",
                    env_path.display(),
                    envelope.total()
                )));
            }
            Some((model, envelope))
        }
    };

    let runs: Vec<YearRun> = series
        .par_iter()
        .map(|s| -> Result<YearRun> {
            let benchmark = match solve_annual_benchmark(s, &spec) {
                Ok(sol) => Some(sol.revenue),
                Err(CoreError::Infeasible { .. }) => None,
                Err(e) => return Err(e.into()),
            };
            let mut controllers = Vec::new();
            if args.controller != ControllerChoice::Bflc {
                controllers.push(Controller::Steady);
            }
            if let Some((model, envelope)) = &fuzzy {
                controllers.push(Controller::Bflc { model, envelope });
            }
            let reports = controllers
                .into_iter()
                .map(|c| simulate_year(s, &spec, c, benchmark))
                .collect::<Result<_, _>>()
                .with_context(|| format!("simulating {}", s.year_label))?;
            Ok(YearRun { label: s.year_label.clone(), benchmark, reports })
        })
        .collect::<Result<_>>()?;

    let dir = ctx.out_dir()?;
    let mut comparison = csv::Writer::from_writer(create(&dir.join(COMPARISON_FILE))?);
    comparison.write_record(COMPARISON_HEADER)?;
    println!("{:<20} {:<8} {:>14} {:>12} {:>12} {:>10}", "year", "control", "revenue_eur", "hpa_kg", "short_kg", "norm");
    for run in &runs {
        let by_name = |name: &str| run.reports.iter().find(|r| r.controller_name == name);
        for r in &run.reports {
            write_daily_csv(r, create(&dir.join(format!("{}_{}.csv", run.label, r.controller_name)))?)?;
            if r.contract_shortfall_kg > 0.0 {
                warn!("{} {}: contract short by {:.1} kg", run.label, r.controller_name, r.contract_shortfall_kg);
            }
            println!(
                "{:<20} {:<8} {:>14.2} {:>12.1} {:>12.1} {:>10}",
                run.label,
                r.controller_name,
                r.total_revenue,
                r.hpa_delivered,
                r.contract_shortfall_kg,
                r.normalized_revenue.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into())
            );
        }
        let (steady, bflc) = (by_name("steady"), by_name("bflc"));
        comparison.write_record([
            run.label.clone(),
            opt(steady.map(|r| r.total_revenue)),
            opt(bflc.map(|r| r.total_revenue)),
            opt(run.benchmark),
            opt(steady.and_then(|r| r.normalized_revenue)),
            opt(bflc.and_then(|r| r.normalized_revenue)),
        ])?;
    }
    comparison.flush()?;
    Ok(())
}

pub fn report(ctx: &Context, args: &ReportArgs) -> Result<()> {
    let out = match &args.out {
        Some(p) => p.clone(),
        None => ctx.out_dir()?.join("report.csv"),
    };
    let mut wtr = csv::Writer::from_writer(create(&out)?);
    let mut header = vec!["run"];
    header.extend(COMPARISON_HEADER);
    wtr.write_record(&header)?;
    let mut rows = 0;
    for path in &args.inputs {
        let mut rdr = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
        if rdr.headers()?.iter().ne(COMPARISON_HEADER) {
            bail!("{} is not a comparison table", path.display());
        }
        let run = path
            .parent()
            .and_then(Path::file_name)
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        for record in rdr.records() {
            let record = record.with_context(|| format!("reading {}", path.display()))?;
            let mut row = vec![run.as_str()];
            row.extend(record.iter());
            wtr.write_record(&row)?;
            rows += 1;
        }
    }
    wtr.flush()?;
    println!("wrote {} ({rows} rows)", out.display());
    Ok(())
}
