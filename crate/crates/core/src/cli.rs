//! The `signalsim` command line.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::abstract_model::{
    convergence_check, default_convergence_setup, flapping_demo, FlappingReport, FlappingSpec,
};
use crate::engine::{diamond_sue_oracle, fmt_f64, run, summarize, sweep, write_csv, RunConfig, Summary};
use crate::error::{Error, Result};
use crate::instances::{diamond_net_text, diamond_trips_text, Instance, Reference};
use crate::network::{DemandTable, Network};
use crate::signaling::{SchemeParams, SchemeRegistry, SignalingScheme};

#[derive(Debug, Parser)]
#[command(name = "signalsim", version, about = "Congestion simulation under scalar and interval signaling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scheme on one instance.
    Run(RunArgs),
    /// Simulate now, mean and extreme r in {5, 10, 20} on one instance.
    Sweep(SweepArgs),
    /// Compare scalar and interval signaling on the flapping construction.
    FlappingDemo(FlappingArgs),
    /// Coupled-trajectory and distributional convergence of the abstract model.
    ConvergenceCheck(ConvergenceArgs),
    /// Write the Diamond network and trips files.
    GenDiamond(GenDiamondArgs),
    /// Minimise the Diamond two-route objective.
    SueOracle,
}

#[derive(Debug, Args)]
pub struct InstanceArgs {
    /// Built-in instance: diamond or sioux-falls.
    #[arg(long, conflicts_with_all = ["net", "trips"])]
    pub instance: Option<String>,
    /// TNTP network file.
    #[arg(long, requires = "trips")]
    pub net: Option<PathBuf>,
    /// TNTP trips file.
    #[arg(long, requires = "net")]
    pub trips: Option<PathBuf>,
}

impl InstanceArgs {
    fn resolve(&self) -> Result<Instance> {
        match (&self.instance, &self.net, &self.trips) {
            (Some(name), _, _) => Instance::from_name(name),
            (None, Some(net), Some(trips)) => Ok(Instance::Files {
                net: net.clone(),
                trips: trips.clone(),
            }),
            _ => Ok(Instance::Diamond),
        }
    }
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long, default_value_t = 500)]
    pub horizon: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Use uncapped BPR travel times.
    #[arg(long)]
    pub uncapped: bool,
    /// Number of risk types, evenly spaced on [0, 1].
    #[arg(long, default_value_t = 5)]
    pub types: usize,
    /// Half-width of the uniform population perturbation.
    #[arg(long, default_value_t = 0.15)]
    pub eps: f64,
    /// Reference social cost for the regret column.
    #[arg(long)]
    pub ref_capped: Option<f64>,
    /// Reference total excess.
    #[arg(long)]
    pub ref_excess: Option<f64>,
    /// Periods averaged in the summary (default min(50, horizon)).
    #[arg(long)]
    pub window: Option<usize>,
}

impl SimArgs {
    fn config(&self, scheme: Arc<dyn SignalingScheme>) -> RunConfig {
        RunConfig {
            scheme,
            horizon: self.horizon,
            seed: self.seed,
            capped: !self.uncapped,
            type_count: self.types,
            eps: self.eps,
        }
    }

    fn reference(&self, instance: &Instance) -> (Option<f64>, Option<f64>) {
        let builtin: Reference = instance.reference();
        (
            self.ref_capped.or(builtin.cost(!self.uncapped)),
            self.ref_excess.or(builtin.excess),
        )
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// One of now, mean, extreme, full-extreme, subinterval.
    #[arg(long)]
    pub scheme: String,
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Per-period CSV output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Directory receiving one CSV per scheme plus summary.csv.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct FlappingArgs {
    #[arg(long = "J")]
    pub j: f64,
    #[arg(long = "N")]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub horizon: usize,
    /// Interval scheme for the second run.
    #[arg(long, default_value = "extreme")]
    pub scheme: String,
    #[arg(long, default_value_t = 2)]
    pub r: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[arg(long = "N", default_value_t = 20)]
    pub n: usize,
    #[arg(long = "M", default_value_t = 2)]
    pub m: usize,
    #[arg(long, default_value_t = 2000)]
    pub trajectories: usize,
    #[arg(long, default_value_t = 200)]
    pub horizon: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// CSV of the coupled distance per period.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenDiamondArgs {
    #[arg(long, default_value = ".")]
    pub dir: PathBuf,
}

/// Parses `args` (program name first) and runs the command, printing
/// reports to `out`. Returns the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn execute(command: &Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Run(args) => cmd_run(args, out),
        Command::Sweep(args) => cmd_sweep(args, out),
        Command::FlappingDemo(args) => cmd_flapping(args, out),
        Command::ConvergenceCheck(args) => cmd_convergence(args, out),
        Command::GenDiamond(args) => cmd_gen_diamond(args, out),
        Command::SueOracle => cmd_sue_oracle(out),
    }
}

fn load(args: &InstanceArgs) -> Result<(Instance, Network, DemandTable)> {
    let instance = args.resolve()?;
    let (net, demand) = instance.load()?;
    Ok((instance, net, demand))
}

fn summary_line(label: &str, s: &Summary, ref_excess: Option<f64>) -> String {
    let mut line = format!(
        "scheme={label} window={} mean_cost={:.6} mean_excess={:.6}",
        s.window, s.mean_cost, s.mean_excess
    );
    if let Some(regret) = s.regret {
        line.push_str(&format!(" regret={regret:.6}"));
    }
    if let Some(x) = ref_excess {
        line.push_str(&format!(" excess_gap={:.6}", s.mean_excess - x));
    }
    line
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Result<()> {
    let registry = SchemeRegistry::with_builtin();
    let scheme = registry.build(
        &args.scheme,
        &SchemeParams {
            r: args.r,
            alpha: args.alpha,
        },
    )?;
    let (instance, net, demand) = load(&args.instance)?;
    let config = args.sim.config(scheme.clone());
    let records = run(&net, &demand, &config)?;
    if let Some(path) = &args.out {
        write_csv(&records, create(path)?)?;
    }
    let (ref_cost, ref_excess) = args.sim.reference(&instance);
    let s = summarize(&records, ref_cost, args.sim.window)?;
    writeln!(out, "{}", summary_line(&scheme.label(), &s, ref_excess))?;
    Ok(())
}

/// Schemes compared by `sweep`, with their `r`.
pub fn sweep_cells() -> Vec<(Arc<dyn SignalingScheme>, Option<usize>)> {
    let registry = SchemeRegistry::with_builtin();
    let build = |name: &str, r: Option<usize>| {
        (
            registry
                .build(name, &SchemeParams { r, alpha: None })
                .expect("built-in scheme"),
            r,
        )
    };
    vec![
        build("now", None),
        build("mean", None),
        build("extreme", Some(5)),
        build("extreme", Some(10)),
        build("extreme", Some(20)),
    ]
}

fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<()> {
    let (instance, net, demand) = load(&args.instance)?;
    let cells = sweep_cells();
    let schemes: Vec<_> = cells.iter().map(|(s, _)| s.clone()).collect();
    let base = args.sim.config(schemes[0].clone());
    let runs = sweep(&net, &demand, &base, &schemes)?;
    fs::create_dir_all(&args.out_dir)?;
    let (ref_cost, ref_excess) = args.sim.reference(&instance);

    let mut summary = csv::Writer::from_writer(create(&args.out_dir.join("summary.csv"))?);
    summary.write_record(["scheme", "r", "mean_cost", "mean_excess", "regret"])?;
    for ((scheme, r), records) in cells.iter().zip(&runs) {
        let label = scheme.label();
        write_csv(records, create(&args.out_dir.join(format!("{label}.csv")))?)?;
        let s = summarize(records, ref_cost, args.sim.window)?;
        summary.write_record([
            scheme.name().to_string(),
            r.map_or(String::new(), |r| r.to_string()),
            fmt_f64(s.mean_cost),
            fmt_f64(s.mean_excess),
            s.regret.map_or(String::new(), fmt_f64),
        ])?;
        writeln!(out, "{}", summary_line(&label, &s, ref_excess))?;
    }
    summary.flush()?;
    Ok(())
}

fn write_flapping_csv<W: Write>(report: &FlappingReport, w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record([
        "t",
        "scalar_cost",
        "interval_cost",
        "scalar_n_1",
        "scalar_n_2",
        "interval_n_1",
        "interval_n_2",
    ])?;
    for (s, i) in report.scalar.iter().zip(&report.interval) {
        w.write_record([
            s.t.to_string(),
            fmt_f64(s.social_cost),
            fmt_f64(i.social_cost),
            fmt_f64(s.counts[0]),
            fmt_f64(s.counts[1]),
            fmt_f64(i.counts[0]),
            fmt_f64(i.counts[1]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_flapping(args: &FlappingArgs, out: &mut dyn Write) -> Result<()> {
    let spec = FlappingSpec::new(args.j, args.n)?;
    let scheme = SchemeRegistry::with_builtin().build(
        &args.scheme,
        &SchemeParams {
            r: Some(args.r),
            alpha: None,
        },
    )?;
    if scheme.is_scalar() {
        return Err(Error::config("the second run needs an interval scheme"));
    }
    let report = flapping_demo(&spec, args.horizon, scheme)?;
    if let Some(path) = &args.out {
        write_flapping_csv(&report, create(path)?)?;
    }
    writeln!(out, "t scalar_cost interval_cost")?;
    for (s, i) in report.scalar.iter().zip(&report.interval) {
        writeln!(out, "{} {:.12} {:.12}", s.t, s.social_cost, i.social_cost)?;
    }
    writeln!(out, "gap={:.12}", report.gap)?;
    writeln!(out, "closed_form_gap={:.12}", report.closed_form_gap)?;
    writeln!(out, "continuum_gap={:.12}", args.j)?;
    writeln!(out, "lower_bound={:.12}", report.lower_bound)?;
    writeln!(out, "scalar_all_or_nothing={}", report.scalar_all_or_nothing())?;
    Ok(())
}

fn cmd_convergence(args: &ConvergenceArgs, out: &mut dyn Write) -> Result<()> {
    let (config, x, y) = default_convergence_setup(args.n, args.m, args.seed)?;
    let report = convergence_check(&config, args.trajectories, args.horizon, &x, &y)?;
    if let Some(path) = &args.out {
        let mut w = csv::Writer::from_writer(create(path)?);
        w.write_record(["t", "coupled_distance"])?;
        for (t, d) in report.coupled_distance.iter().enumerate() {
            w.write_record([(t + 1).to_string(), fmt_f64(*d)])?;
        }
        w.flush()?;
    }
    let d0 = report.coupled_distance[0];
    let mut t = 1;
    while t <= args.horizon {
        let d = report.coupled_distance[t];
        writeln!(out, "t={} coupled_distance={:.6e} ratio={:.6e}", t + 1, d, d / d0)?;
        t *= 2;
    }
    let last = *report.coupled_distance.last().expect("nonempty series");
    writeln!(out, "final coupled_distance={last:.6e} ratio={:.6e}", last / d0)?;
    for (m, ks) in report.ks_per_action.iter().enumerate() {
        writeln!(out, "ks_action_{}={ks:.6}", m + 1)?;
    }
    writeln!(out, "ks_distance={:.6}", report.ks_distance)?;
    Ok(())
}

fn cmd_gen_diamond(args: &GenDiamondArgs, out: &mut dyn Write) -> Result<()> {
    fs::create_dir_all(&args.dir)?;
    let net = args.dir.join("net.txt");
    let trips = args.dir.join("trips.txt");
    fs::write(&net, diamond_net_text())?;
    fs::write(&trips, diamond_trips_text())?;
    writeln!(out, "wrote {} and {}", net.display(), trips.display())?;
    Ok(())
}

fn cmd_sue_oracle(out: &mut dyn Write) -> Result<()> {
    let o = diamond_sue_oracle();
    writeln!(out, "x={:.6}", o.x)?;
    writeln!(out, "objective_min={:.6}", o.uncapped_cost)?;
    writeln!(out, "flow_2_3={:.6} flow_2_4={:.6}", o.flow_23, o.flow_24)?;
    writeln!(out, "capped_cost={:.6}", o.capped_cost)?;
    writeln!(out, "uncapped_cost={:.6}", o.network_uncapped_cost)?;
    writeln!(out, "excess={:.6}", o.excess)?;
    Ok(())
}
