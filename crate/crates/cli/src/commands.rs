use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use epsicomp::class_complexity::minimax_error;
use epsicomp::coefficient_estimation::{
    difference_series, estimate_coefficients, slope_stability, ComplexityCoefficients,
};
use epsicomp::individual_complexity::convergence_check;
use epsicomp::segmentation::segment;
use epsicomp::{
    class_complexity, generate, holder_coefficients, minimax_cell_error_oracle, ApproximationMethod, ClassSpec,
    DetectorConfig, Error, GeneratorSpec, ModulusOfContinuity, RecoveryErrorCurve, SampledFunction, WindowConfig,
};
use rayon::ThreadPool;
use serde_json::{json, Value};

use crate::input::{parse_series, read_raw};
use crate::manifest::{ensure_dir, to_value, write_json, write_text, InputDigest, RunManifest};
use crate::{ClassArgs, CliError, Command, ConvergeArgs, EstimateArgs, GenArgs, SegmentArgs};

pub(crate) fn dispatch(command: Command, pool: Option<&ThreadPool>, stdin: &mut dyn Read) -> Result<String, CliError> {
    match command {
        Command::Class(args) => class(&args, pool),
        Command::Estimate(args) => estimate(&args, pool, stdin),
        Command::Gen(args) => gen(&args),
        Command::Segment(args) => segment_cmd(&args, pool, stdin),
        Command::Converge(args) => converge(&args, pool),
    }
}

fn in_pool<T: Send>(pool: Option<&ThreadPool>, job: impl FnOnce() -> T + Send) -> T {
    match pool {
        Some(p) => p.install(job),
        None => job(),
    }
}

fn load_series(input: Option<&Path>, stdin: &mut dyn Read) -> Result<(Vec<f64>, InputDigest), CliError> {
    let raw = read_raw(input, stdin)?;
    let text = std::str::from_utf8(&raw.bytes)
        .map_err(|e| CliError::Data(format!("{}: input is not UTF-8 ({e})", raw.source)))?;
    let values = parse_series(text)?;
    let digest = InputDigest::new(&raw.source, &raw.bytes, values.len());
    Ok((values, digest))
}

fn default_oracle_resolution(dim: usize) -> usize {
    match dim {
        1 => 501,
        2 => 201,
        3 => 61,
        _ => 21,
    }
}

fn class(args: &ClassArgs, pool: Option<&ThreadPool>) -> Result<String, CliError> {
    let modulus = ModulusOfContinuity::holder(args.holder_l, args.holder_p)?;
    let spec = ClassSpec::new(modulus.clone(), args.radius, args.dim)?;
    let coefficients = holder_coefficients(&spec)?;
    let resolution = args
        .oracle_resolution
        .unwrap_or_else(|| default_oracle_resolution(args.dim));

    let mut table = String::from("epsilon,s_cl,status");
    if args.oracle {
        table.push_str(",h,closed_form,oracle,discrepancy");
    }
    table.push('\n');
    for &eps in &args.eps_list {
        match class_complexity(&spec, eps) {
            Ok(s) => {
                write!(table, "{eps},{s},ok").unwrap();
                if args.oracle {
                    let h = 2.0 * modulus.inverse(eps)? / (args.dim as f64).sqrt();
                    let h = h.min(1.0);
                    let closed = minimax_error(&modulus, h, args.dim)?;
                    let oracle = in_pool(pool, || minimax_cell_error_oracle(&modulus, h, args.dim, resolution))?;
                    write!(table, ",{h},{closed},{oracle},{}", (oracle - closed).abs()).unwrap();
                }
            }
            Err(Error::ErrorTooLarge { .. }) => {
                write!(table, "{eps},,error_too_large").unwrap();
                if args.oracle {
                    table.push_str(",,,,");
                }
            }
            Err(e) => return Err(e.into()),
        }
        table.push('\n');
    }

    if let Some(out) = &args.out {
        ensure_dir(out)?;
        write_text(&out.join("class.csv"), &table)?;
        write_json(
            &out.join("coefficients.json"),
            &json!({ "a": coefficients.a, "b": coefficients.b, "log_base": "natural" }),
        )?;
        let config = json!({
            "holder_l": args.holder_l,
            "holder_p": args.holder_p,
            "radius": args.radius,
            "dim": args.dim,
            "eps_list": args.eps_list,
            "oracle": args.oracle,
            "oracle_resolution": resolution,
        });
        write_json(&out.join("manifest.json"), &RunManifest::new("class", config, json!({}), None))?;
    }
    Ok(format!("# A = {}, B = {} (natural log)\n{table}", coefficients.a, coefficients.b))
}

fn coefficients_json(c: &ComplexityCoefficients) -> Value {
    json!({
        "a": c.a,
        "b": c.b,
        "r_squared": c.r_squared,
        "slope_stderr": c.slope_stderr,
        "n_points_fit": c.n_points_fit,
        "interval_used": [c.interval_used.0, c.interval_used.1],
        "degenerate": c.degenerate,
    })
}

fn curve_csv(curve: &RecoveryErrorCurve) -> String {
    let mut out = String::from("fraction,mean_error,stddev,n_schemes\n");
    for r in &curve.rows {
        writeln!(out, "{},{},{},{}", r.fraction, r.mean_error, r.stddev, r.n_schemes).unwrap();
    }
    out
}

struct OrderOutcome {
    order: usize,
    curve: Option<RecoveryErrorCurve>,
    coefficients: ComplexityCoefficients,
    failure: Option<String>,
}

fn estimate(args: &EstimateArgs, pool: Option<&ThreadPool>, stdin: &mut dyn Read) -> Result<String, CliError> {
    let config = args.sweep.config(args.diff_orders);
    config.validate()?;
    let (values, digest) = load_series(args.input.as_deref(), stdin)?;
    let f = SampledFunction::from_series(values)?.normalize()?;

    let (curve, coefficients, stability, orders) = in_pool(pool, || -> Result<_, CliError> {
        let (curve, coefficients) = estimate_coefficients(&f, &config)?;
        let stability = if coefficients.degenerate {
            None
        } else {
            slope_stability(&curve, config.fit_interval)?
        };
        let orders: Vec<OrderOutcome> = (1..=args.diff_orders)
            .map(|order| match difference_series(&f, order).and_then(|g| estimate_coefficients(&g, &config)) {
                Ok((curve, coefficients)) => OrderOutcome {
                    order,
                    curve: Some(curve),
                    coefficients,
                    failure: None,
                },
                Err(e) => OrderOutcome {
                    order,
                    curve: None,
                    coefficients: ComplexityCoefficients::degenerate(config.fit_interval, 0),
                    failure: Some(e.to_string()),
                },
            })
            .collect();
        Ok((curve, coefficients, stability, orders))
    })?;

    ensure_dir(&args.out)?;
    write_text(&args.out.join("curve.csv"), &curve_csv(&curve))?;
    for o in &orders {
        if let Some(c) = &o.curve {
            write_text(&args.out.join(format!("curve_order{}.csv", o.order)), &curve_csv(c))?;
        }
    }
    let mut doc = coefficients_json(&coefficients);
    doc["log_base"] = json!("natural");
    doc["normalization"] = json!("uniform");
    doc["error_norm"] = to_value(&config.norm);
    doc["slope_stability"] = to_value(&stability);
    doc["difference_orders"] = Value::Array(
        orders
            .iter()
            .map(|o| {
                let mut v = coefficients_json(&o.coefficients);
                v["order"] = json!(o.order);
                v["failure"] = json!(o.failure);
                v
            })
            .collect(),
    );
    write_json(&args.out.join("coefficients.json"), &doc)?;
    let manifest = RunManifest::new(
        "estimate",
        to_value(&config),
        json!({ "rng_seed": config.rng_seed }),
        Some(digest),
    );
    write_json(&args.out.join("manifest.json"), &manifest)?;

    Ok(format!(
        "a,b,r_squared,degenerate\n{},{},{},{}\n",
        coefficients.a, coefficients.b, coefficients.r_squared, coefficients.degenerate
    ))
}

fn series_csv(values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 20);
    for v in values {
        writeln!(out, "{v}").unwrap();
    }
    out
}

fn generator_seeds(spec: &GeneratorSpec) -> Value {
    match spec.kind {
        epsicomp::GeneratorKind::FbmMidpoint { seed, .. } => json!({ "generator_seed": seed }),
        _ => json!({}),
    }
}

fn gen(args: &GenArgs) -> Result<String, CliError> {
    let spec = GeneratorSpec::new(args.generator.kind()?, args.n);
    let series = generate(&spec)?;
    let text = series_csv(series.values());
    match &args.out {
        Some(out) => {
            ensure_dir(out)?;
            write_text(&out.join("series.csv"), &text)?;
            let manifest = RunManifest::new("gen", to_value(&spec), generator_seeds(&spec), None);
            write_json(&out.join("manifest.json"), &manifest)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn segment_cmd(args: &SegmentArgs, pool: Option<&ThreadPool>, stdin: &mut dyn Read) -> Result<String, CliError> {
    let window = WindowConfig {
        window_length: args.window,
        hop: args.hop,
        estimation: args.sweep.config(0),
    };
    window.validate()?;
    let detector = DetectorConfig {
        min_separation: args.min_separation.unwrap_or(args.window),
        threshold_multiplier: args.threshold,
        permutations: args.permutations,
        seed: args.sweep.seed,
        ..DetectorConfig::new(args.window)
    };
    let (values, digest) = load_series(args.input.as_deref(), stdin)?;
    let series = SampledFunction::from_series(values)?;
    let result = in_pool(pool, || segment(&series, &window, &detector))?;

    ensure_dir(&args.out)?;
    let mut tracks = String::from("start,a,b,r_squared,degenerate\n");
    for t in &result.tracks {
        writeln!(tracks, "{},{},{},{},{}", t.start, t.a, t.b, t.r_squared, t.degenerate).unwrap();
    }
    write_text(&args.out.join("tracks.csv"), &tracks)?;
    write_json(
        &args.out.join("change_points.json"),
        &json!({
            "change_points": result.change_points,
            "candidates": result.detector_stats,
            "window_length": args.window,
            "hop": args.hop,
            "log_base": "natural",
            "normalization": "uniform",
        }),
    )?;
    let config = json!({ "window": window, "detector": detector });
    let manifest = RunManifest::new(
        "segment",
        config,
        json!({ "rng_seed": args.sweep.seed, "detector_seed": detector.seed }),
        Some(digest),
    );
    write_json(&args.out.join("manifest.json"), &manifest)?;

    let mut out = String::from("change_point\n");
    for c in &result.change_points {
        writeln!(out, "{c}").unwrap();
    }
    Ok(out)
}

fn converge(args: &ConvergeArgs, pool: Option<&ThreadPool>) -> Result<String, CliError> {
    let first = *args
        .n_list
        .first()
        .ok_or_else(|| CliError::Usage("--n-list is empty".into()))?;
    let spec = GeneratorSpec::new(args.generator.kind()?, first);
    let family = args.family.clone().unwrap_or_else(ApproximationMethod::default_family);
    let (s_ref, rows) = in_pool(pool, || convergence_check(&spec, args.eps, &args.n_list, &family, args.norm))?;

    let mut table = String::from("n_points,s_n,s_ref,gap\n");
    for r in &rows {
        writeln!(table, "{},{},{s_ref},{}", r.n_points, r.s_n, r.gap).unwrap();
    }
    if let Some(out) = &args.out {
        ensure_dir(out)?;
        write_text(&out.join("converge.csv"), &table)?;
        let config = json!({
            "generator": spec.kind,
            "eps": args.eps,
            "n_list": args.n_list,
            "family": family,
            "norm": args.norm,
        });
        let manifest = RunManifest::new("converge", config, generator_seeds(&spec), None);
        write_json(&out.join("manifest.json"), &manifest)?;
    }
    Ok(table)
}
