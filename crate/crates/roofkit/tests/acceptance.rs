//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines always print; the process
//! fails if any criterion fails.

mod common;

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use common::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use roofkit::machine_io::load_machine_spec;
use roofkit::profile_io::{expand_profile_paths, load_profile_csv};
use roofkit::report_io::report_from_json;
use roofkit::sweep_io::load_sweep_config;
use roofkit_core::cost::{
    conv2d_complexity, conv2d_flops, conv2d_flops_oracle, conv2d_traffic, lstm_complexity, lstm_flops_oracle,
    Conv2DSpec, ConvWeightTraffic, LayerSpec, LstmSpec, WeightTraffic,
};
use roofkit_core::machine::{
    derive_tensor_core_peak, machine_balance, ComputeCeiling, MachineSpec, MemoryCeiling, TensorCorePeakParams,
};
use roofkit_core::profile::{FlopWeights, KernelAggregate};
use roofkit_core::roofline::{
    analyze, bound_runtime, classify, complexity_plane_region, overhead_ceiling_flops, overhead_escape_complexity,
    roofline_bound_flops, time_coordinates, BoundClass, ComplexityPoint,
};
use roofkit_core::sweep::{build_measured_series, SweepSeries};
use roofkit_core::units::sig6;

type Check = Result<String, String>;
type Criterion = (u32, &'static str, Duration, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn v100_spec() -> MachineSpec {
    load_machine_spec(&v100()).expect("fixture machine").spec
}

fn c1_tensor_core_peak() -> Check {
    let p = TensorCorePeakParams::with_factors(80, 8, 1.312e9, 64, 2).map_err(|e| e.to_string())?;
    let peak = derive_tensor_core_peak(&p);
    let err = rel(peak, 1.07479e14);
    ensure(err <= 1e-3, || format!("peak {peak:e}, rel err {err:e}"))?;
    Ok(format!("{} FLOP/s, rel err {err:.1e}", sig6(peak)))
}

fn c2_machine_balance() -> Check {
    let mb = machine_balance(
        &ComputeCeiling::new("tensor_core", 1.07479e14),
        &MemoryCeiling::new("hbm", 8.288e11),
    );
    ensure((mb - 129.68).abs() <= 0.01, || format!("balance {mb}"))?;
    Ok(format!("{mb:.4} FLOPs/Byte"))
}

fn c3_overhead_escape() -> Check {
    let t_ov = 4.2e-6;
    // the published threshold multiplies a peak of 1.06e14
    let published_peak = 1.06e14;
    let cc = overhead_escape_complexity(published_peak, t_ov);
    let err = rel(cc, 4.452e8);
    ensure(err <= 5e-3, || format!("cc* {cc:e}, rel err {err:e}"))?;
    let m = MachineSpec::new(
        "published",
        vec![ComputeCeiling::new("tc", published_peak)],
        vec![MemoryCeiling::new("hbm", 8.288e11)],
        t_ov,
    )
    .map_err(|e| e.to_string())?;
    let sel = m.default_ceilings().map_err(|e| e.to_string())?;
    let meets = overhead_ceiling_flops(cc, t_ov);
    ensure(rel(meets, published_peak) < 1e-12, || {
        format!("overhead ceiling at cc* is {meets:e}")
    })?;
    // below cc* the overhead ceiling binds, above it the peak does
    let below = roofline_bound_flops(1e6, sel, 0.9 * cc, t_ov);
    let above = roofline_bound_flops(1e6, sel, 1.1 * cc, t_ov);
    ensure(below < published_peak && above == published_peak, || {
        format!("bound below {below:e}, above {above:e}")
    })?;
    let derived = overhead_escape_complexity(1.07479e14, t_ov);
    Ok(format!(
        "cc* {} FLOPs (rel err {err:.1e}); with the derived 1.07479e14 peak cc* = {} ({:+.2}%)",
        sig6(cc),
        sig6(derived),
        100.0 * (derived / 4.452e8 - 1.0)
    ))
}

fn c4_conv2d_oracle() -> Check {
    let mut checked = 0u64;
    for n in 1..=8 {
        for h in 1..=8 {
            for w in 1..=8 {
                for c_in in 1..=4 {
                    for c_out in 1..=4 {
                        for k in 1..=3 {
                            for stride in 1..=3 {
                                for padding in 0..=2 {
                                    let s = Conv2DSpec {
                                        n,
                                        h,
                                        w,
                                        c_in,
                                        k_h: k,
                                        k_w: k,
                                        c_out,
                                        stride,
                                        padding,
                                        elem_bytes: 4,
                                        weight_traffic: ConvWeightTraffic::PerSample,
                                    };
                                    if s.validate().is_err() {
                                        continue;
                                    }
                                    let oracle = conv2d_flops_oracle(&s).map_err(|e| e.to_string())?;
                                    let cc = conv2d_complexity(&s).cc;
                                    ensure(cc == oracle as f64 && conv2d_flops(&s) == u128::from(oracle), || {
                                        format!("{s:?}: model {cc}, oracle {oracle}")
                                    })?;
                                    checked += 1;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(format!("{checked} valid configurations agree exactly"))
}

fn c5_lstm_oracle() -> Check {
    let mut checked = 0u64;
    for batch in 1..=6 {
        for seq_len in 1..=6 {
            for input_features in 1..=6 {
                for hidden in 1..=6 {
                    for activation_flops in [0, 1, 5] {
                        let s = LstmSpec {
                            batch,
                            seq_len,
                            input_features,
                            hidden,
                            elem_bytes: 4,
                            weight_traffic: WeightTraffic::StreamedPerStep,
                            activation_flops,
                        };
                        let oracle = lstm_flops_oracle(&s).map_err(|e| e.to_string())?;
                        let cc = lstm_complexity(&s).cc;
                        ensure(cc == oracle as f64, || format!("{s:?}: model {cc}, oracle {oracle}"))?;
                        checked += 1;
                    }
                }
            }
        }
    }
    Ok(format!("{checked} configurations agree exactly"))
}

fn log_uniform(rng: &mut StdRng, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.random_range(lo..hi))
}

fn c6_time_remap() -> Check {
    let mut rng = StdRng::seed_from_u64(0x5eed_0006);
    let mut worst_ratio = 0.0f64;
    let mut worst_collinear = 0.0f64;
    for i in 0..10_000 {
        let measured = log_uniform(&mut rng, -7.0, 1.0);
        let bw = log_uniform(&mut rng, 10.0, 13.0);
        let mb = log_uniform(&mut rng, 0.0, 3.0);
        let bc = log_uniform(&mut rng, 3.0, 12.0);
        let cc = bc * log_uniform(&mut rng, -3.0, 4.0);
        let m = MachineSpec::new(
            "random",
            vec![ComputeCeiling::new("c", mb * bw)],
            vec![MemoryCeiling::new("m", bw)],
            0.0,
        )
        .map_err(|e| e.to_string())?;
        let sel = m.default_ceilings().map_err(|e| e.to_string())?;
        let agg = KernelAggregate {
            computational_complexity: cc,
            bandwidth_complexity: bc,
            total_time_sec: measured,
            total_invocations: 1,
            zero_ai_bytes: 0.0,
        };
        let k = analyze("k", &agg, &m, sel).map_err(|e| e.to_string())?;
        let t = k.time;
        ensure(t.compute_time_sec.max(t.bandwidth_time_sec) == measured, || {
            format!("triple {i}: max(ct, bt) = {:e} != {measured:e}", t.runtime())
        })?;
        ensure(t == time_coordinates(measured, k.ai, k.machine_balance), || {
            format!("triple {i}: remap differs")
        })?;
        let ratio = rel(t.compute_time_sec / t.bandwidth_time_sec, k.ai / k.machine_balance);
        let closed = k.closed_symbol();
        let open = k.open_symbol();
        let collinear = rel(closed.cc / closed.bc, k.ai).max(rel(open.cc / open.bc, k.ai));
        worst_ratio = worst_ratio.max(ratio);
        worst_collinear = worst_collinear.max(collinear);
        ensure(ratio <= 1e-9 && collinear <= 1e-9, || {
            format!("triple {i}: ratio err {ratio:e}, collinearity err {collinear:e}")
        })?;
    }
    Ok(format!(
        "10000 triples; worst ct/bt err {worst_ratio:.1e}, worst diagonal err {worst_collinear:.1e}"
    ))
}

fn c7_classification() -> Check {
    let mut rng = StdRng::seed_from_u64(0x5eed_0007);
    let mut counts = [0usize; 2];
    let mut generated = 0;
    while generated < 10_000 {
        let bw = log_uniform(&mut rng, 10.0, 13.0);
        let mb = log_uniform(&mut rng, 0.0, 3.0);
        let t_ov = log_uniform(&mut rng, -7.0, -4.0);
        let bc = log_uniform(&mut rng, 3.0, 12.0);
        let cc = bc * log_uniform(&mut rng, -3.0, 4.0);
        let m = MachineSpec::new(
            "random",
            vec![ComputeCeiling::new("c", mb * bw)],
            vec![MemoryCeiling::new("m", bw)],
            t_ov,
        )
        .map_err(|e| e.to_string())?;
        let sel = m.default_ceilings().map_err(|e| e.to_string())?;
        let c = ComplexityPoint::new(cc, bc);
        let region = complexity_plane_region(c, sel, t_ov);
        if region == BoundClass::OverheadBound {
            continue;
        }
        generated += 1;
        let measured = bound_runtime(c, sel, t_ov) * rng.random_range(1.0..10.0);
        let class = classify(time_coordinates(measured, cc / bc, sel.machine_balance()), t_ov);
        ensure(class == region, || {
            format!("cc {cc:e} bc {bc:e} mb {mb}: classify {class}, region {region}")
        })?;
        counts[usize::from(class == BoundClass::BandwidthBound)] += 1;
    }
    // ai == mb exactly: powers of two keep every quotient exact
    for (mb_exp, bw_exp, bc_exp) in [(7, 36, 20), (0, 33, 30), (3, 40, 12), (10, 30, 25)] {
        let mb = 2f64.powi(mb_exp);
        let bw = 2f64.powi(bw_exp);
        let bc = 2f64.powi(bc_exp);
        let c = ComplexityPoint::new(mb * bc, bc);
        let m = MachineSpec::new(
            "tie",
            vec![ComputeCeiling::new("c", mb * bw)],
            vec![MemoryCeiling::new("m", bw)],
            0.0,
        )
        .map_err(|e| e.to_string())?;
        let sel = m.default_ceilings().map_err(|e| e.to_string())?;
        ensure(c.cc / c.bc == sel.machine_balance(), || "tie case is not exact".into())?;
        let region = complexity_plane_region(c, sel, 0.0);
        let class = classify(time_coordinates(1e-3, c.cc / c.bc, sel.machine_balance()), 0.0);
        ensure(
            region == BoundClass::ComputeBound && class == BoundClass::ComputeBound,
            || format!("tie at mb {mb}: region {region}, classify {class}"),
        )?;
    }
    Ok(format!(
        "10000 points agree ({} compute, {} bandwidth); 4 ties classify ComputeBound",
        counts[0], counts[1]
    ))
}

fn predicted(config: &str, m: &MachineSpec) -> Result<SweepSeries, String> {
    let cfg = load_sweep_config(&fixture(&format!("sweeps/{config}.json"))).map_err(|e| e.to_string())?;
    cfg.run(m, m.default_ceilings().map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())
}

fn c8_lstm_regime() -> Check {
    let m = v100_spec();
    let sel = m.default_ceilings().map_err(|e| e.to_string())?;
    let mut notes = Vec::new();
    for (fw, invocations) in [("pytorch", 36u64), ("tf2", 243), ("tf1", 277)] {
        let batch = predicted(&format!("lstm_{fw}_batch"), &m)?;
        let seq = predicted(&format!("lstm_{fw}_seq_len"), &m)?;
        let files = expand_profile_paths(&[fixture(&format!("lstm/{fw}"))]).map_err(|e| e.to_string())?;
        let profiles = files
            .iter()
            .map(|p| load_profile_csv(p))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let measured = build_measured_series(fw, &profiles, "batch", &m, sel, &FlopWeights::default())
            .map_err(|e| e.to_string())?;

        for s in [&batch, &seq, &measured] {
            for p in &s.points {
                ensure(p.analyzed.classification == BoundClass::OverheadBound, || {
                    format!(
                        "{}: {} = {} is {}",
                        s.series_label, s.parameter_name, p.value, p.analyzed.classification
                    )
                })?;
            }
        }
        ensure(batch.points.len() == 4 && measured.points.len() == 4, || {
            format!("{fw}: expected 4 batch points")
        })?;
        let values: Vec<f64> = batch.points.iter().map(|p| p.value).collect();
        ensure(values == [16.0, 32.0, 64.0, 128.0], || {
            format!("{fw}: batch values {values:?}")
        })?;
        for s in [&batch, &measured] {
            for p in &s.points {
                ensure(p.analyzed.invocations == invocations, || {
                    format!("{fw}: {} invocations, expected {invocations}", p.analyzed.invocations)
                })?;
            }
        }
        ensure(seq.points[0].analyzed.invocations == invocations, || {
            format!("{fw}: default seq_len invocations")
        })?;

        let runtimes: Vec<f64> = batch.points.iter().map(|p| p.analyzed.measured_time_sec).collect();
        let lo = runtimes.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = runtimes.iter().copied().fold(0.0, f64::max);
        ensure((hi - lo) / lo <= 0.01, || format!("{fw}: batch runtimes {runtimes:?}"))?;

        // runtime is affine in T: every point on the line through the ends
        let pts: Vec<(f64, f64)> = seq
            .points
            .iter()
            .map(|p| (p.value, p.analyzed.measured_time_sec))
            .collect();
        let (t0, r0) = pts[0];
        let (t1, r1) = pts[pts.len() - 1];
        let slope = (r1 - r0) / (t1 - t0);
        let worst = pts
            .iter()
            .map(|&(t, r)| rel(r, r0 + slope * (t - t0)))
            .fold(0.0, f64::max);
        ensure(worst <= 0.01, || {
            format!("{fw}: seq_len runtime off its line by {worst:e}")
        })?;
        ensure(slope > 0.0, || format!("{fw}: runtime does not grow with T"))?;
        notes.push(format!("{fw} {invocations} launches, {:.4e} s/step", slope));
    }
    Ok(format!(
        "all points OverheadBound; batch runtime flat; {}",
        notes.join(", ")
    ))
}

fn c9_conv2d_sweeps() -> Check {
    let m = v100_spec();
    let layer =
        |p: &roofkit_core::sweep::SweepPoint, template: &LayerSpec, param: &str| -> Result<Conv2DSpec, String> {
            match template.with_parameter(param, p.value).map_err(|e| e.to_string())? {
                LayerSpec::Conv2D(s) => Ok(s),
                LayerSpec::Lstm(_) => Err("expected a Conv2D template".into()),
            }
        };

    let batch = predicted("conv2d_batch", &m)?;
    let values: Vec<f64> = batch.points.iter().map(|p| p.value).collect();
    ensure(values == [16.0, 32.0, 64.0], || format!("batch values {values:?}"))?;
    let ai0 = batch.points[0].analyzed.ai;
    ensure(batch.points.iter().all(|p| p.analyzed.ai == ai0), || {
        format!(
            "ai across batch: {:?}",
            batch.points.iter().map(|p| p.analyzed.ai).collect::<Vec<_>>()
        )
    })?;

    let filters = predicted("conv2d_c_out", &m)?;
    let ais: Vec<f64> = filters.points.iter().map(|p| p.analyzed.ai).collect();
    ensure(filters.points.len() == 4 && ais.windows(2).all(|w| w[1] > w[0]), || {
        format!("ai across c_out: {ais:?}")
    })?;

    let cfg = load_sweep_config(&fixture("sweeps/conv2d_stride.json")).map_err(|e| e.to_string())?;
    let stride = predicted("conv2d_stride", &m)?;
    let ccs: Vec<f64> = stride.points.iter().map(|p| p.analyzed.complexity.cc).collect();
    ensure(stride.points.len() == 3 && ccs.windows(2).all(|w| w[1] < w[0]), || {
        format!("cc across stride: {ccs:?}")
    })?;
    let traffic = stride
        .points
        .iter()
        .map(|p| layer(p, &cfg.template, &cfg.parameter).map(|s| conv2d_traffic(&s)))
        .collect::<Result<Vec<_>, _>>()?;
    ensure(
        traffic
            .iter()
            .all(|t| t.input == traffic[0].input && t.weights == traffic[0].weights),
        || format!("input/weight traffic varies with stride: {traffic:?}"),
    )?;
    Ok(format!(
        "ai {ai0:.4} at every batch; ai over c_out {}; cc over stride {}",
        ais.iter().map(|a| format!("{a:.2}")).collect::<Vec<_>>().join(" < "),
        ccs.iter().map(|c| format!("{c:.4e}")).collect::<Vec<_>>().join(" > ")
    ))
}

/// Recomputes each golden report entry from the raw CSV text.
fn audit_report(report_text: &str, profile_dir: &Path, m: &MachineSpec) -> Result<(), String> {
    let report = report_from_json(report_text, "golden").map_err(|e| e.to_string())?;
    let peak = m.compute_ceiling("tensor_core").ok_or("no tensor_core")?.flops_per_sec;
    let bw = m.memory_ceilings[0].bytes_per_sec;
    for e in &report.entries {
        let path = profile_dir.join(format!("batch={}.csv", e.param));
        let text = fs::read_to_string(&path).map_err(|err| format!("{}: {err}", path.display()))?;
        let (mut cc, mut bc, mut ns, mut inv) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for line in text.lines().skip(1) {
            let cols: Vec<f64> = line.split(',').skip(1).map(|c| c.parse().unwrap()).collect();
            inv += cols[0];
            ns += cols[1];
            cc += cols[2] + cols[3] + cols[4] + cols[5];
            bc += cols[6] + cols[7];
        }
        let measured = ns / 1e9;
        let bound = (cc / peak).max(bc / bw).max(inv * m.launch_overhead_sec);
        let checks = [
            ("ai", e.ai, cc / bc),
            ("measured_sec", e.measured_sec, measured),
            ("bound_sec", e.bound_sec, bound),
            ("gap", e.gap, measured / bound),
            ("attained_flops", e.attained_flops, cc / measured),
            (
                "overhead_share",
                e.overhead_share,
                inv * m.launch_overhead_sec / measured,
            ),
        ];
        for (name, got, want) in checks {
            ensure(rel(got, want) < 1e-12, || {
                format!("batch={}: {name} {got:e} vs recomputed {want:e}", e.param)
            })?;
        }
    }
    Ok(())
}

fn c10_goldens() -> Check {
    let dirs = [
        tempfile::tempdir().map_err(|e| e.to_string())?,
        tempfile::tempdir().map_err(|e| e.to_string())?,
    ];
    let mut outputs: Vec<[String; 3]> = Vec::new();
    for dir in &dirs {
        let report = dir.path().join("report.json");
        let svg = dir.path().join("analyze.svg");
        let plot = dir.path().join("plot.svg");
        let (code, _, err) = roofkit_bin(&analyze_args(&fixture("lstm/pytorch"), &report, &svg, "4d"));
        ensure(code == 0, || format!("analyze exit {code}: {err}"))?;
        let (code, _, err) = roofkit_bin(&plot_lstm_args(&plot));
        ensure(code == 0, || format!("plot exit {code}: {err}"))?;
        let read = |p: &Path| fs::read_to_string(p).map_err(|e| e.to_string());
        outputs.push([read(&report)?, read(&svg)?, read(&plot)?]);
    }
    ensure(outputs[0] == outputs[1], || "two runs produced different bytes".into())?;
    let names = [
        "lstm_pytorch_report.json",
        "lstm_pytorch_4d.svg",
        "lstm_frameworks_4d.svg",
    ];
    for (name, text) in names.iter().zip(&outputs[0]) {
        check_golden(name, text)?;
    }
    audit_report(&outputs[0][0], &fixture("lstm/pytorch"), &v100_spec())?;
    Ok("analyze + plot byte-identical across runs and equal to goldens; report numbers re-derived from CSV".into())
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "tensor core peak", Duration::from_millis(1), c1_tensor_core_peak),
        (2, "machine balance", Duration::from_millis(1), c2_machine_balance),
        (
            3,
            "overhead-escape threshold",
            Duration::from_millis(1),
            c3_overhead_escape,
        ),
        (
            4,
            "conv2d oracle equivalence",
            Duration::from_secs(30),
            c4_conv2d_oracle,
        ),
        (5, "lstm oracle equivalence", Duration::from_secs(30), c5_lstm_oracle),
        (6, "time-remap invariants", Duration::from_secs(5), c6_time_remap),
        (
            7,
            "classification consistency",
            Duration::from_secs(5),
            c7_classification,
        ),
        (8, "lstm fixture regime", Duration::from_secs(1), c8_lstm_regime),
        (9, "conv2d analytical sweeps", Duration::from_secs(1), c9_conv2d_sweeps),
        (10, "determinism goldens", Duration::from_secs(5), c10_goldens),
    ];
    let mut failed = 0;
    for (n, name, limit, check) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let (status, detail) = match result {
            Ok(detail) if elapsed <= limit => ("PASS", detail),
            Ok(detail) => ("FAIL", format!("took {elapsed:?}, limit {limit:?}; {detail}")),
            Err(why) => ("FAIL", why),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("criterion {n:>2} {status} {name} ({elapsed:.2?}): {detail}");
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
