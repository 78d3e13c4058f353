use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;
use sha2::{Digest, Sha256};
use wabc::cloud::fmt_f64;
use wabc::discrepancy::{DataDistance, Discrepancy, DistanceConfig, DistanceMethod};
use wabc::models::{build_model, ModelOptions};
use wabc::reference::{cloud_w1, random_walk_mh, MhConfig};
use wabc::rng::purpose;
use wabc::smc::{run_second_stage, run_with, write_particles_csv, write_trace_csv, SmcState};
use wabc::timeseries::{aspect_ratio_lambda, Embedding, Series};
use wabc::{GenerativeModel, GroundMetric, MvNormal, RandomStream};

use crate::config::{parse_metric, RunConfig};
use crate::io::{data_csv, emit, read_data, read_theta_columns, write_file};
use crate::{BenchArgs, CliError, DistanceArgs, EvaluateArgs, MhArgs, SimulateArgs, SmcArgs};

fn usage(e: wabc::Error) -> CliError {
    CliError::Usage(e.to_string())
}

fn parse_theta(text: &str, model: &dyn GenerativeModel) -> Result<Vec<f64>, CliError> {
    let theta: Vec<f64> = text
        .split(',')
        .map(|f| f.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Usage(format!("--theta {text:?}: {e}")))?;
    let d = model.param_space().dim();
    if theta.len() != d {
        return Err(CliError::Usage(format!(
            "model {} takes {d} parameters ({}), got {}",
            model.name(),
            model.param_space().names().join(", "),
            theta.len()
        )));
    }
    model.param_space().check(&theta).map_err(usage)?;
    Ok(theta)
}

pub fn simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let opts = ModelOptions {
        toggle_horizon: a.toggle_horizon,
        ..Default::default()
    };
    let model = build_model(&a.model, &opts).map_err(usage)?;
    let theta = parse_theta(&a.theta, model.as_ref())?;
    if a.n == 0 {
        return Err(CliError::Usage("--n must be >= 1".into()));
    }
    let data = model.simulate(&theta, a.n, &mut RandomStream::new(a.seed, &[purpose::DATA]))?;
    emit(a.out.as_deref(), &data_csv(model.output(), &data)?)
}

pub fn distance(a: &DistanceArgs) -> Result<(), CliError> {
    let method = DistanceMethod::parse(&a.method).map_err(usage)?;
    let x = read_data(&a.x)?;
    let y = read_data(&a.y)?;
    let mut metric = parse_metric(&a.metric, a.p)?;
    let embedding = match a.embedding.as_str() {
        "none" => Embedding::None,
        "curve" => {
            let lambda = match a.lambda {
                Some(l) => l,
                None => aspect_ratio_lambda(&Series::new(x.clone()), 1.0, 1.0).map_err(usage)?,
            };
            metric = GroundMetric::curve_match(lambda, a.p).map_err(usage)?;
            Embedding::Curve { lambda }
        }
        "delay" => Embedding::Delay {
            lags: a.lags.clone(),
            stride: a.stride,
        },
        other => return Err(CliError::Usage(format!("unknown embedding {other:?} (none, curve, delay)"))),
    };
    let mut cfg = DistanceConfig::new(method, embedding, metric);
    cfg.subsample = a.subsample;
    let d = Discrepancy::new(x, cfg, a.seed).map_err(usage)?;
    let value = d.distance(&[], &y, &mut RandomStream::new(a.seed, &[purpose::SUBSAMPLE, 1]))?;
    let record = json!({
        "method": a.method,
        "x": a.x,
        "y": a.y,
        "p": a.p,
        "metric": a.metric,
        "embedding": a.embedding,
        "value": value,
    });
    println!("{}", fmt_f64(value));
    println!("{record}");
    if let Some(path) = &a.json {
        write_file(path, format!("{record}\n").as_bytes())?;
    }
    Ok(())
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn particles_bytes(state: &SmcState, names: &[String]) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_particles_csv(&state.particles, names, &mut buf)?;
    Ok(buf)
}

fn trace_bytes(state: &SmcState) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_trace_csv(&state.trace, &mut buf)?;
    Ok(buf)
}

fn finite_or_null(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else {
        serde_json::Value::Null
    }
}

pub fn smc(a: &SmcArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let text = fs::read_to_string(&a.config).map_err(|e| CliError::Usage(format!("{}: {e}", a.config.display())))?;
    let cfg = RunConfig::parse(&text)?;
    let base = a.config.parent().unwrap_or(Path::new("."));
    let out = match (&a.out, &cfg.output) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => resolve(base, o),
        (None, None) => return Err(CliError::Usage("no output directory: set `output` or pass --out".into())),
    };

    let plain_opts = cfg.model_options(None);
    let generator = build_model(&cfg.model, &plain_opts).map_err(usage)?;
    let observed = match (&cfg.data, &cfg.theta_true) {
        (Some(path), _) => {
            let y = read_data(&resolve(base, path))?;
            if cfg.n.is_some_and(|n| n != y.len()) {
                return Err(CliError::Usage(format!(
                    "config n = {} but the data file has {} rows",
                    cfg.n.unwrap_or(0),
                    y.len()
                )));
            }
            y
        }
        (None, Some(theta)) => {
            let n = cfg
                .n
                .ok_or_else(|| CliError::Usage("`n` is required with `theta_true`".into()))?;
            if theta.len() != generator.param_space().dim() {
                return Err(CliError::Usage(format!(
                    "theta_true has {} values, model {} takes {}",
                    theta.len(),
                    cfg.model,
                    generator.param_space().dim()
                )));
            }
            generator.param_space().check(theta).map_err(usage)?;
            let seed = cfg.data_seed.unwrap_or(cfg.seed);
            generator.simulate(theta, n, &mut RandomStream::new(seed, &[purpose::DATA]))?
        }
        (None, None) => return Err(CliError::Usage("set either `data` or `theta_true`".into())),
    };
    let model = build_model(&cfg.model, &cfg.model_options(Some(&observed))).map_err(usage)?;
    let dist_cfg = cfg.distance().build(&observed, model.as_ref())?;
    let disc = Discrepancy::new(observed.clone(), dist_cfg, cfg.seed).map_err(usage)?;
    let smc_cfg = cfg.smc_config(cfg.budget);
    smc_cfg.validate().map_err(usage)?;
    let second = match &cfg.second_stage {
        Some(s) => {
            let c = s.distance.build(&observed, model.as_ref())?;
            let d2 = Discrepancy::new(observed.clone(), c, cfg.seed).map_err(usage)?;
            let sc = cfg.smc_config(s.budget);
            sc.validate().map_err(usage)?;
            Some((d2, sc))
        }
        None => None,
    };
    let names = model.param_space().names().to_vec();
    let n_obs = observed.len();

    write_file(&out.join("observed.csv"), &data_csv(model.output(), &observed)?)?;
    let steps_dir = out.join("steps");
    let mut snapshot_err = None;
    let mut snapshot = |prefix: &str, s: &SmcState| {
        if !cfg.snapshots || snapshot_err.is_some() {
            return;
        }
        let r = particles_bytes(s, &names)
            .and_then(|b| write_file(&steps_dir.join(format!("{prefix}step_{:04}.csv", s.step)), &b));
        if let Err(e) = r {
            snapshot_err = Some(e);
        }
    };
    let first = run_with(model.as_ref(), &disc, n_obs, &smc_cfg, &mut |s| snapshot("", s))?;
    let (last, stage1) = match &second {
        Some((d2, sc)) => {
            write_file(&out.join("stage1_particles.csv"), &particles_bytes(&first, &names)?)?;
            write_file(&out.join("stage1_trace.csv"), &trace_bytes(&first)?)?;
            let s1 = json!({
                "simulations": first.simulations,
                "final_eps": finite_or_null(first.eps),
                "steps": first.step,
                "stop": first.stop.map(|s| s.name()),
            });
            let s2 = run_second_stage(first, model.as_ref(), &disc, d2, n_obs, sc, &mut |s| snapshot("stage2_", s))?;
            (s2, Some(s1))
        }
        None => (first, None),
    };
    if let Some(e) = snapshot_err {
        return Err(e);
    }
    write_file(&out.join("particles.csv"), &particles_bytes(&last, &names)?)?;
    write_file(&out.join("trace.csv"), &trace_bytes(&last)?)?;
    let hash = Sha256::digest(text.as_bytes());
    let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
    let mut meta = json!({
        "config_sha256": hex,
        "model": cfg.model,
        "method": cfg.method,
        "seed": cfg.seed,
        "particles": cfg.particles,
        "n_obs": n_obs,
        "simulations": last.trace.last().map(|r| r.simulations).unwrap_or(last.simulations),
        "final_eps": finite_or_null(last.eps),
        "steps": last.step,
        "stalls": last.stalls,
        "failures": last.failures,
        "stop": last.stop.map(|s| s.name()),
        "wall_seconds": started.elapsed().as_secs_f64(),
    });
    if let Some(s1) = stage1 {
        meta["stage1"] = s1;
    }
    let text = serde_json::to_string_pretty(&meta).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_file(&out.join("meta.json"), format!("{text}\n").as_bytes())?;
    eprintln!(
        "{} steps, {} simulations, final eps {}",
        last.step,
        last.simulations,
        fmt_f64(last.eps)
    );
    Ok(())
}

pub fn mh(a: &MhArgs) -> Result<(), CliError> {
    let model = build_model(&a.model, &ModelOptions::default()).map_err(usage)?;
    if !model.has_loglik() {
        return Err(CliError::Usage(format!("model {} has no tractable likelihood", a.model)));
    }
    let data = read_data(&a.data)?;
    let init = a.init.as_deref().map(|t| parse_theta(t, model.as_ref())).transpose()?;
    let cfg = MhConfig {
        iterations: a.iterations,
        burn_in: a.burn_in,
        thin: a.thin,
        chains: a.chains,
        pilot: a.pilot,
        seed: a.seed,
        init,
        step_cov: None,
    };
    if cfg.burn_in >= cfg.iterations || cfg.chains == 0 || cfg.thin == 0 {
        return Err(CliError::Usage(
            "need burn-in < iterations, chains >= 1 and thin >= 1".into(),
        ));
    }
    let out = random_walk_mh(model.as_ref(), &data, &cfg)?;
    let mut buf = Vec::new();
    out.write_csv(model.param_space().names(), &mut buf)?;
    emit(a.out.as_deref(), &buf)?;
    for (i, c) in out.chains.iter().enumerate() {
        eprintln!("chain {i}: acceptance {:.3}", c.acceptance());
    }
    Ok(())
}

/// Whether each value stays within `1 + slack` of the running minimum.
pub fn non_increasing_within(values: &[f64], slack: f64) -> bool {
    let mut best = f64::INFINITY;
    for &v in values {
        if v > best * (1.0 + slack) {
            return false;
        }
        best = best.min(v);
    }
    true
}

pub fn evaluate(a: &EvaluateArgs) -> Result<(), CliError> {
    let (ref_names, reference) = read_theta_columns(&a.reference)?;
    let compare = |path: &Path, k: u64| -> Result<f64, CliError> {
        let (names, cloud) = read_theta_columns(path)?;
        if names != ref_names {
            return Err(CliError::Usage(format!(
                "{}: parameter columns {:?} differ from the reference's {:?}",
                path.display(),
                names,
                ref_names
            )));
        }
        Ok(cloud_w1(&cloud, &reference, a.max_points, &mut RandomStream::new(a.seed, &[purpose::SUBSAMPLE, k]))?)
    };
    match (&a.particles, &a.steps) {
        (Some(p), None) => {
            let w = compare(p, 0)?;
            let record = json!({ "particles": p, "reference": a.reference, "w1": w });
            println!("{}", fmt_f64(w));
            println!("{record}");
            Ok(())
        }
        (None, Some(dir)) => {
            let mut files: Vec<PathBuf> = fs::read_dir(dir)
                .map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    p.file_name()
                        .and_then(|n| n.to_str())
                        .is_some_and(|n| n.starts_with("step_") && n.ends_with(".csv"))
                })
                .collect();
            files.sort();
            if files.is_empty() {
                return Err(CliError::Usage(format!("{}: no step_*.csv files", dir.display())));
            }
            let mut csv = String::from("step,w1\n");
            let mut values = Vec::new();
            for (k, f) in files.iter().enumerate() {
                let step: usize = f
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .and_then(|s| s.trim_start_matches("step_").parse().ok())
                    .unwrap_or(k);
                let w = compare(f, k as u64)?;
                csv.push_str(&format!("{step},{}\n", fmt_f64(w)));
                values.push(w);
            }
            emit(a.out.as_deref(), csv.as_bytes())?;
            let first = values[0];
            let last = values[values.len() - 1];
            eprintln!(
                "first {} last {} ratio {:.4} non-increasing within 10%: {}",
                fmt_f64(first),
                fmt_f64(last),
                last / first,
                non_increasing_within(&values, 0.1)
            );
            Ok(())
        }
        _ => Err(CliError::Usage("pass exactly one of --particles or --steps".into())),
    }
}

pub fn bench(a: &BenchArgs) -> Result<(), CliError> {
    if a.n.is_empty() {
        return Err(CliError::Usage("--n needs at least one sample size".into()));
    }
    if a.d == 0 || a.reps == 0 || a.n.contains(&0) {
        return Err(CliError::Usage("--d, --reps and every --n must be >= 1".into()));
    }
    let method = DistanceMethod::parse(&a.method).map_err(usage)?;
    let gauss = MvNormal::new(vec![0.0; a.d], (0..a.d).map(|i| (0..a.d).map(|j| (i == j) as u8 as f64).collect()).collect())?;
    let mut csv = String::from("method,n,d,seconds,ratio\n");
    let mut prev: Option<(usize, f64)> = None;
    for &n in &a.n {
        let mut times = Vec::with_capacity(a.reps);
        for rep in 0..a.reps {
            let mut rng = RandomStream::new(a.seed, &[purpose::BENCH, n as u64, rep as u64]);
            let x = gauss.sample_cloud(n, &mut rng);
            let y = gauss.sample_cloud(n, &mut rng);
            let cfg = DistanceConfig::new(method.clone(), Embedding::None, GroundMetric::euclidean(1.0));
            let d = Discrepancy::new(x, cfg, a.seed)?;
            let t = Instant::now();
            d.distance(&[], &y, &mut rng)?;
            times.push(t.elapsed().as_secs_f64());
        }
        times.sort_by(f64::total_cmp);
        let median = times[times.len() / 2];
        let ratio = match prev {
            Some((pn, pt)) if n == 2 * pn && pt > 0.0 => fmt_f64(median / pt),
            _ => String::new(),
        };
        csv.push_str(&format!("{},{n},{},{},{ratio}\n", a.method, a.d, fmt_f64(median)));
        prev = Some((n, median));
    }
    emit(a.out.as_deref(), csv.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trend_check() {
        assert!(non_increasing_within(&[5.0, 4.0, 4.3, 2.0], 0.1));
        assert!(!non_increasing_within(&[5.0, 4.0, 4.5, 2.0], 0.1));
        assert!(non_increasing_within(&[], 0.1));
    }
}
