//! The `roofkit` command line.
//!
//! Exit status: 0 success, 1 usage error, 2 input or schema error,
//! 3 internal invariant violation.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use roofkit_core::cost::{
    invocation_estimate, Conv2DSpec, ConvWeightTraffic, InvocationModel, LayerSpec, LstmSpec, WeightTraffic,
};
use roofkit_core::machine::{derive_tensor_core_peak, Ceilings, MachineSpec, TensorCorePeakParams};
use roofkit_core::plot::{render_chart, ChartKind, ChartSpec};
use roofkit_core::profile::FlopWeights;
use roofkit_core::report::{build_report, lenient_f64};
use roofkit_core::roofline::{arithmetic_intensity, bound_runtime, complexity_plane_region, total_overhead};
use roofkit_core::sweep::{build_measured_series, label_entry, SweepSeries};
use roofkit_core::units::sig6;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::machine_io::{load_machine_spec, LoadedMachine};
use crate::profile_io::{expand_profile_paths, load_profile_csv, profile_to_json};
use crate::report_io::{checked_report_json, report_to_markdown};
use crate::sweep_io::load_sweep_config;

#[derive(Debug, Parser)]
#[command(name = "roofkit", version, about = "Time-based roofline analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Machine characterization helpers.
    Machine {
        #[command(subcommand)]
        action: MachineCommand,
    },
    /// Canonicalize a profile CSV into JSON.
    Ingest(IngestArgs),
    /// Analyze measured profiles against a machine.
    Analyze(AnalyzeArgs),
    /// Analytical cost of a single layer.
    Model {
        #[command(subcommand)]
        layer: ModelCommand,
    },
    /// Run analytical parameter sweeps.
    Sweep(SweepArgs),
    /// Draw measured and predicted series on one chart.
    Plot(PlotArgs),
}

#[derive(Debug, Subcommand)]
enum MachineCommand {
    /// Tensor Core peak FLOP/s from its hardware factors.
    DeriveTc(DeriveTcArgs),
    /// Validate a machine spec and print its ceilings and balances.
    Show {
        #[arg(long)]
        machine: PathBuf,
    },
}

#[derive(Debug, Args)]
struct DeriveTcArgs {
    #[arg(long)]
    sms: u32,
    #[arg(long)]
    tc_per_sm: u32,
    #[arg(long)]
    clock_ghz: f64,
    #[arg(long, default_value_t = 64)]
    ops_per_cycle: u32,
    #[arg(long, default_value_t = 2)]
    fma: u32,
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long)]
    profile: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ChartArg {
    Classic,
    Complexity,
    Time,
    #[value(name = "4d")]
    FourD,
}

impl From<ChartArg> for ChartKind {
    fn from(c: ChartArg) -> Self {
        match c {
            ChartArg::Classic => ChartKind::ClassicRoofline,
            ChartArg::Complexity => ChartKind::ComplexityPlane,
            ChartArg::Time => ChartKind::TimePlane,
            ChartArg::FourD => ChartKind::ComplexityTime4D,
        }
    }
}

#[derive(Debug, Args)]
struct CeilingArgs {
    #[arg(long)]
    machine: PathBuf,
    /// Compute ceiling used for classification (default: first in the file).
    #[arg(long)]
    ceiling: Option<String>,
    /// Memory ceiling (default: first in the file).
    #[arg(long)]
    memory: Option<String>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Profile CSV files or directories of them; labels come from file stems.
    #[arg(long, required = true, num_args = 1..)]
    profile: Vec<PathBuf>,
    #[arg(long)]
    machine: PathBuf,
    #[arg(long)]
    ceiling: String,
    #[arg(long)]
    memory: Option<String>,
    /// Label key carrying the swept parameter (default: first key in the labels).
    #[arg(long)]
    key: Option<String>,
    #[arg(long)]
    series: Option<String>,
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    markdown: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "4d")]
    chart: ChartArg,
    #[arg(long)]
    title: Option<String>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, required = true, num_args = 1..)]
    config: Vec<PathBuf>,
    #[command(flatten)]
    ceilings: CeilingArgs,
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    markdown: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "4d")]
    chart: ChartArg,
    #[arg(long)]
    title: Option<String>,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[command(flatten)]
    ceilings: CeilingArgs,
    #[arg(long, value_enum)]
    chart: ChartArg,
    #[arg(long)]
    svg: PathBuf,
    /// Measured series as NAME=PATH, PATH being a CSV or a directory of CSVs.
    #[arg(long)]
    measured: Vec<String>,
    /// Sweep config whose predicted series is drawn.
    #[arg(long)]
    sweep: Vec<PathBuf>,
    #[arg(long)]
    key: Option<String>,
    /// Additional compute ceilings to draw.
    #[arg(long)]
    draw_ceiling: Vec<String>,
    #[arg(long)]
    title: Option<String>,
}

#[derive(Debug, Args)]
struct ModelOutputArgs {
    #[command(flatten)]
    ceilings: CeilingArgs,
    #[arg(long)]
    kernels_per_step: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConvTrafficArg {
    PerSample,
    ResidentOnce,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LstmTrafficArg {
    StreamedPerStep,
    ResidentOnce,
}

#[derive(Debug, Subcommand)]
enum ModelCommand {
    Conv2d {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        h: u64,
        #[arg(long)]
        w: u64,
        #[arg(long)]
        c_in: u64,
        #[arg(long)]
        k_h: u64,
        #[arg(long)]
        k_w: u64,
        #[arg(long)]
        c_out: u64,
        #[arg(long, default_value_t = 1)]
        stride: u64,
        #[arg(long, default_value_t = 0)]
        padding: u64,
        #[arg(long)]
        elem_bytes: u64,
        #[arg(long, value_enum, default_value = "per-sample")]
        weight_traffic: ConvTrafficArg,
        #[command(flatten)]
        output: ModelOutputArgs,
    },
    Lstm {
        #[arg(long)]
        batch: u64,
        #[arg(long)]
        seq_len: u64,
        #[arg(long)]
        input_features: u64,
        #[arg(long)]
        hidden: u64,
        #[arg(long)]
        elem_bytes: u64,
        #[arg(long, value_enum, default_value = "streamed-per-step")]
        weight_traffic: LstmTrafficArg,
        #[arg(long, default_value_t = 1)]
        activation_flops: u64,
        #[arg(long, default_value_t = 0)]
        epilogue_invocations: u64,
        #[command(flatten)]
        output: ModelOutputArgs,
    },
}

#[derive(Serialize)]
struct ModelOutput {
    layer: &'static str,
    cc: f64,
    bc: f64,
    #[serde(with = "lenient_f64")]
    ai: f64,
    invocations: u64,
    overhead_sec: f64,
    bound_runtime_sec: f64,
    class: &'static str,
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    color: bool,
}

impl Io<'_> {
    fn warn(&mut self, message: &str) {
        let prefix = if self.color {
            "\x1b[33mwarning\x1b[0m"
        } else {
            "warning"
        };
        let _ = writeln!(self.err, "{prefix}: {message}");
    }
}

/// Runs the CLI with plain diagnostics.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with_color(args, out, err, false)
}

pub fn run_with_color<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write, color: bool) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = if color {
                e.render().ansi().to_string()
            } else {
                e.render().to_string()
            };
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                1
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    let mut io = Io { out, err, color };
    match dispatch(cli.command, &mut io) {
        Ok(()) => 0,
        Err(e) => {
            let prefix = if color { "\x1b[31merror\x1b[0m" } else { "error" };
            let _ = writeln!(io.err, "{prefix}: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, io: &mut Io<'_>) -> Result<()> {
    match command {
        Command::Machine { action } => machine(action, io),
        Command::Ingest(args) => ingest(args),
        Command::Analyze(args) => analyze(args, io),
        Command::Model { layer } => model(layer, io),
        Command::Sweep(args) => sweep(args, io),
        Command::Plot(args) => plot(args, io),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn load_machine(path: &Path, io: &mut Io<'_>) -> Result<LoadedMachine> {
    let loaded = load_machine_spec(path)?;
    for w in &loaded.warnings {
        io.warn(w);
    }
    Ok(loaded)
}

fn select<'a>(machine: &'a MachineSpec, compute: Option<&str>, memory: Option<&str>) -> Result<Ceilings<'a>> {
    machine.select(compute, memory).map_err(|source| Error::Spec {
        origin: "ceiling selection".into(),
        source,
    })
}

fn machine(action: MachineCommand, io: &mut Io<'_>) -> Result<()> {
    match action {
        MachineCommand::DeriveTc(a) => {
            let params =
                TensorCorePeakParams::with_factors(a.sms, a.tc_per_sm, a.clock_ghz * 1e9, a.ops_per_cycle, a.fma)
                    .map_err(|e| Error::Input(e.to_string()))?;
            let _ = writeln!(io.out, "{}", sig6(derive_tensor_core_peak(&params)));
        }
        MachineCommand::Show { machine } => {
            let loaded = load_machine(&machine, io)?;
            let m = &loaded.spec;
            let _ = writeln!(io.out, "machine: {}", m.name);
            let _ = writeln!(io.out, "launch_overhead_sec: {}", sig6(m.launch_overhead_sec));
            for c in &m.compute_ceilings {
                let _ = writeln!(io.out, "compute {}: {} FLOP/s", c.label, sig6(c.flops_per_sec));
            }
            for mem in &m.memory_ceilings {
                let _ = writeln!(io.out, "memory {}: {} B/s", mem.label, sig6(mem.bytes_per_sec));
            }
            for c in &m.compute_ceilings {
                for mem in &m.memory_ceilings {
                    let balance = c.flops_per_sec / mem.bytes_per_sec;
                    let _ = writeln!(io.out, "balance {}/{}: {}", c.label, mem.label, sig6(balance));
                }
            }
        }
    }
    Ok(())
}

fn ingest(args: IngestArgs) -> Result<()> {
    let profile = load_profile_csv(&args.profile)?;
    write_file(&args.out, &profile_to_json(&profile))
}

/// Aggregated profiles as one measured series.
fn measured_series(
    name: &str,
    paths: &[PathBuf],
    key: Option<&str>,
    machine: &MachineSpec,
    ceilings: Ceilings<'_>,
) -> Result<SweepSeries> {
    let files = expand_profile_paths(paths)?;
    let mut profiles = files.iter().map(|p| load_profile_csv(p)).collect::<Result<Vec<_>>>()?;
    let inferred = profiles[0]
        .label
        .split(',')
        .find_map(|pair| pair.split_once('=').map(|(k, _)| k.trim().to_string()));
    let key = match (key, inferred) {
        (Some(k), _) => k.to_string(),
        (None, Some(k)) => k,
        (None, None) if profiles.len() == 1 => {
            // a lone profile without a parameter sits at 0
            profiles[0].label = format!("{},profile=0", profiles[0].label);
            "profile".into()
        }
        (None, None) => {
            return Err(Error::Input(format!(
                "profile label {:?} has no key=value entry; pass --key",
                profiles[0].label
            )))
        }
    };
    if let Some(missing) = profiles.iter().find(|p| label_entry(&p.label, &key).is_none()) {
        return Err(Error::Input(format!(
            "profile label {:?} has no {key:?} entry",
            missing.label
        )));
    }
    Ok(build_measured_series(
        name,
        &profiles,
        &key,
        machine,
        ceilings,
        &FlopWeights::default(),
    )?)
}

fn default_series_name(paths: &[PathBuf]) -> String {
    match paths {
        [single] if single.is_dir() => single
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "measured".into()),
        _ => "measured".into(),
    }
}

/// Re-checks the analysis identities on every point before anything is written.
fn check_invariants(series: &[SweepSeries]) -> Result<()> {
    for s in series {
        for p in &s.points {
            let k = &p.analyzed;
            if k.time.runtime() != k.measured_time_sec {
                return Err(Error::Internal(format!(
                    "{}: time coordinates do not reproduce the measured time",
                    k.label
                )));
            }
            if k.roofline_gap.is_nan() || k.roofline_gap < 0.0 {
                return Err(Error::Internal(format!("{}: negative roofline gap", k.label)));
            }
        }
    }
    Ok(())
}

fn warn_anomalies(series: &[SweepSeries], io: &mut Io<'_>) {
    for k in series.iter().flat_map(|s| &s.points).map(|p| &p.analyzed) {
        if k.measurement_anomaly {
            io.warn(&format!("{}: measured time is below the roofline bound", k.label));
        }
    }
}

struct Outputs<'a> {
    report: &'a Path,
    markdown: Option<&'a Path>,
    svg: Option<&'a Path>,
    chart: ChartKind,
    title: Option<&'a str>,
    draw_ceilings: Vec<String>,
}

fn write_outputs(series: Vec<SweepSeries>, machine: &MachineSpec, memory: Option<&str>, o: Outputs<'_>) -> Result<()> {
    check_invariants(&series)?;
    let report = build_report(&series, machine)?;
    let json = checked_report_json(&report)?;
    let svg = match o.svg {
        Some(_) => {
            let mut spec = ChartSpec::new(o.chart, machine.clone(), series);
            spec.compute_ceilings = o.draw_ceilings;
            spec.memory_ceiling = memory.map(str::to_string);
            if let Some(t) = o.title {
                spec.title = t.into();
            }
            Some(render_chart(&spec)?)
        }
        None => None,
    };
    write_file(o.report, &json)?;
    if let Some(path) = o.markdown {
        write_file(path, &report_to_markdown(&report))?;
    }
    if let (Some(path), Some(svg)) = (o.svg, svg) {
        write_file(path, &svg)?;
    }
    Ok(())
}

fn analyze(args: AnalyzeArgs, io: &mut Io<'_>) -> Result<()> {
    let loaded = load_machine(&args.machine, io)?;
    let machine = &loaded.spec;
    let ceilings = select(machine, Some(&args.ceiling), args.memory.as_deref())?;
    let name = args
        .series
        .clone()
        .unwrap_or_else(|| default_series_name(&args.profile));
    let series = measured_series(&name, &args.profile, args.key.as_deref(), machine, ceilings)?;
    warn_anomalies(std::slice::from_ref(&series), io);
    write_outputs(
        vec![series],
        machine,
        args.memory.as_deref(),
        Outputs {
            report: &args.report,
            markdown: args.markdown.as_deref(),
            svg: args.svg.as_deref(),
            chart: args.chart.into(),
            title: args.title.as_deref(),
            draw_ceilings: vec![args.ceiling.clone()],
        },
    )
}

fn sweep(args: SweepArgs, io: &mut Io<'_>) -> Result<()> {
    let loaded = load_machine(&args.ceilings.machine, io)?;
    let machine = &loaded.spec;
    let ceilings = select(
        machine,
        args.ceilings.ceiling.as_deref(),
        args.ceilings.memory.as_deref(),
    )?;
    let series = args
        .config
        .iter()
        .map(|path| load_sweep_config(path)?.run(machine, ceilings))
        .collect::<Result<Vec<_>>>()?;
    write_outputs(
        series,
        machine,
        args.ceilings.memory.as_deref(),
        Outputs {
            report: &args.report,
            markdown: args.markdown.as_deref(),
            svg: args.svg.as_deref(),
            chart: args.chart.into(),
            title: args.title.as_deref(),
            draw_ceilings: Vec::new(),
        },
    )
}

fn plot(args: PlotArgs, io: &mut Io<'_>) -> Result<()> {
    let loaded = load_machine(&args.ceilings.machine, io)?;
    let machine = &loaded.spec;
    let ceilings = select(
        machine,
        args.ceilings.ceiling.as_deref(),
        args.ceilings.memory.as_deref(),
    )?;
    let mut series = Vec::new();
    for entry in &args.measured {
        let (name, path) = entry
            .split_once('=')
            .ok_or_else(|| Error::Input(format!("--measured expects NAME=PATH, got {entry:?}")))?;
        let s = measured_series(name, &[PathBuf::from(path)], args.key.as_deref(), machine, ceilings)?;
        warn_anomalies(std::slice::from_ref(&s), io);
        series.push(s);
    }
    for path in &args.sweep {
        series.push(load_sweep_config(path)?.run(machine, ceilings)?);
    }
    check_invariants(&series)?;
    let mut spec = ChartSpec::new(args.chart.into(), machine.clone(), series);
    spec.compute_ceilings = args.draw_ceiling;
    spec.memory_ceiling = args.ceilings.memory;
    if let Some(t) = args.title {
        spec.title = t;
    }
    let svg = render_chart(&spec)?;
    write_file(&args.svg, &svg)
}

fn model(layer: ModelCommand, io: &mut Io<'_>) -> Result<()> {
    let (layer, output, model) = match layer {
        ModelCommand::Conv2d {
            n,
            h,
            w,
            c_in,
            k_h,
            k_w,
            c_out,
            stride,
            padding,
            elem_bytes,
            weight_traffic,
            output,
        } => {
            let spec = Conv2DSpec {
                n,
                h,
                w,
                c_in,
                k_h,
                k_w,
                c_out,
                stride,
                padding,
                elem_bytes,
                weight_traffic: match weight_traffic {
                    ConvTrafficArg::PerSample => ConvWeightTraffic::PerSample,
                    ConvTrafficArg::ResidentOnce => ConvWeightTraffic::ResidentOnce,
                },
            };
            let model = InvocationModel::new(output.kernels_per_step.unwrap_or(1), 0);
            (LayerSpec::Conv2D(spec), output, model)
        }
        ModelCommand::Lstm {
            batch,
            seq_len,
            input_features,
            hidden,
            elem_bytes,
            weight_traffic,
            activation_flops,
            epilogue_invocations,
            output,
        } => {
            let spec = LstmSpec {
                batch,
                seq_len,
                input_features,
                hidden,
                elem_bytes,
                weight_traffic: match weight_traffic {
                    LstmTrafficArg::StreamedPerStep => WeightTraffic::StreamedPerStep,
                    LstmTrafficArg::ResidentOnce => WeightTraffic::ResidentOnce,
                },
                activation_flops,
            };
            let model = InvocationModel::new(output.kernels_per_step.unwrap_or(2), epilogue_invocations);
            (LayerSpec::Lstm(spec), output, model)
        }
    };
    layer.validate()?;
    let loaded = load_machine(&output.ceilings.machine, io)?;
    let machine = &loaded.spec;
    let ceilings = select(
        machine,
        output.ceilings.ceiling.as_deref(),
        output.ceilings.memory.as_deref(),
    )?;
    let c = layer.complexity();
    let invocations = invocation_estimate(&layer, model);
    let t_ov = total_overhead(invocations, machine);
    let result = ModelOutput {
        layer: layer.kind(),
        cc: c.cc,
        bc: c.bc,
        ai: arithmetic_intensity(c),
        invocations,
        overhead_sec: t_ov,
        bound_runtime_sec: bound_runtime(c, ceilings, t_ov),
        class: complexity_plane_region(c, ceilings, t_ov).as_str(),
    };
    let text = serde_json::to_string_pretty(&result).map_err(|e| Error::Internal(e.to_string()))?;
    let _ = writeln!(io.out, "{text}");
    Ok(())
}
