//! The five subcommands: spectrum, curves, verify, simulate, yj.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use immse_core::infocore::verify_identities;
use immse_core::operator::{discretize, eigendecompose};
use immse_core::sim::{run_binary_sim, run_gaussian_sim, SignalModel, SimConfig};
use immse_core::stationary::convergence_study;

use crate::config::{ExperimentConfig, SignalConfig};
use crate::output::{fmt_float, timestamp_ms, write_csv, write_json};
use crate::verify::{run_suite, validate_tolerance_keys, VerificationReport};
use crate::AppError;

const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn cmd_spectrum(cfg: &ExperimentConfig, out_dir: &Path) -> Result<(), AppError> {
    let grid = cfg.require_grid()?;
    let kernel = cfg.require_kernel()?.build(&grid)?;
    let op = discretize(&kernel, &grid)?;
    let spectrum = eigendecompose(&op)?;
    let rows = spectrum
        .eigenvalues()
        .iter()
        .enumerate()
        .map(|(i, l)| vec![(i + 1).to_string(), fmt_float(*l)]);
    let csv = write_csv(out_dir, "spectrum.csv", "index,eigenvalue", rows)?;
    let meta = json!({
        "kernel": cfg.kernel,
        "grid": cfg.grid,
        "channel_dim": op.channel_dim(),
        "size": op.size(),
        "trace": op.matrix().trace(),
        "rank": spectrum.rank(),
        "version": VERSION,
        "timestamp_ms": timestamp_ms(),
    });
    write_json(out_dir, "spectrum_meta.json", &meta)?;
    println!("wrote {} ({} eigenvalues, rank {})", csv.display(), spectrum.len(), spectrum.rank());
    Ok(())
}

pub fn cmd_curves(cfg: &ExperimentConfig, out_dir: &Path) -> Result<(), AppError> {
    let grid = cfg.require_grid()?;
    let kernel = cfg.require_kernel()?.build(&grid)?;
    let gamma_grid = cfg.require_gamma_grid()?;
    let op = discretize(&kernel, &grid)?;
    let spectrum = eigendecompose(&op)?;
    let curves = verify_identities(&spectrum, &gamma_grid);
    let rows = curves.points.iter().map(|p| {
        vec![
            fmt_float(p.gamma),
            fmt_float(p.causal),
            fmt_float(p.noncausal),
            fmt_float(p.mutual_info),
            fmt_float(p.res_duncan),
            fmt_float(p.res_immse),
            fmt_float(p.res_link),
        ]
    });
    let csv = write_csv(
        out_dir,
        "curves.csv",
        "gamma,causal_mmse,noncausal_mmse,mutual_info,res_duncan,res_immse,res_link",
        rows,
    )?;
    let meta = json!({
        "kernel": cfg.kernel,
        "grid": cfg.grid,
        "gamma": cfg.gamma,
        "points": curves.points.len(),
        "max_relative_residual": curves.max_relative_residual(),
        "derivatives": "analytic",
        "version": VERSION,
        "timestamp_ms": timestamp_ms(),
    });
    write_json(out_dir, "curves_meta.json", &meta)?;
    println!(
        "wrote {} ({} gamma points, max relative residual {:.3e})",
        csv.display(),
        curves.points.len(),
        curves.max_relative_residual()
    );
    Ok(())
}

pub fn cmd_verify(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    seed: u64,
    threads: Option<usize>,
) -> Result<u8, AppError> {
    let verify_cfg = cfg.verify.clone().unwrap_or_default();
    validate_tolerance_keys(&verify_cfg)?;
    let started = Instant::now();
    let checks = run_suite(&verify_cfg, seed);
    let pass = checks.iter().all(|c| c.pass);
    let report = VerificationReport {
        version: VERSION.to_string(),
        seed,
        threads,
        timestamp_ms: timestamp_ms(),
        runtime_ms: started.elapsed().as_millis(),
        sizes: verify_cfg,
        checks,
        pass,
    };
    let path = write_json(out_dir, "verify_report.json", &report)?;
    for check in &report.checks {
        match &check.error {
            Some(e) => println!("ERROR {}: {e}", check.check),
            None => println!(
                "{} {}: residual {:.3e} (tolerance {:.3e})",
                if check.pass { "PASS" } else { "FAIL" },
                check.check,
                check.max_residual,
                check.tolerance
            ),
        }
    }
    println!(
        "{}: wrote {} in {} ms",
        if pass { "PASS" } else { "FAIL" },
        path.display(),
        report.runtime_ms
    );
    Ok(if pass { 0 } else { 1 })
}

#[derive(Serialize)]
struct EstimateOut {
    name: String,
    mean: f64,
    stderr: f64,
}

pub fn cmd_simulate(cfg: &ExperimentConfig, out_dir: &Path, seed: u64) -> Result<(), AppError> {
    let grid = cfg.require_grid()?;
    let gamma = cfg.require_single_gamma()?;
    let paths = cfg.paths.ok_or_else(|| AppError::Config("missing \"paths\"".into()))?;
    if paths < 2 {
        return Err(AppError::Config("at least 2 paths are required".into()));
    }
    let signal = cfg
        .signal
        .as_ref()
        .ok_or_else(|| AppError::Config("missing \"signal\" section".into()))?;
    let order = cfg.quadrature_order.unwrap_or(immse_core::sim::DEFAULT_QUADRATURE_ORDER);
    let started = Instant::now();
    let body = match signal {
        SignalConfig::GaussianKl {} => {
            let kernel = cfg.require_kernel()?.build(&grid)?;
            let op = discretize(&kernel, &grid)?;
            let spectrum = eigendecompose(&op)?;
            let sim_cfg = SimConfig::new(
                seed,
                paths,
                gamma,
                grid.clone(),
                SignalModel::GaussianKl(spectrum),
            )?;
            let result = run_gaussian_sim(&op, &sim_cfg)?;
            let estimates: Vec<EstimateOut> = result
                .batch
                .estimates
                .iter()
                .map(|e| EstimateOut { name: e.name.clone(), mean: e.mean, stderr: e.stderr })
                .collect();
            let duncan = &result.batch.estimates[1];
            let duncan_gap = (duncan.mean - result.mutual_information).abs();
            let within = duncan.stderr == 0.0 && duncan_gap == 0.0
                || duncan_gap <= 3.0 * duncan.stderr;
            json!({
                "signal": "gaussian_kl",
                "estimates": estimates,
                "exact_causal_error": result.exact_causal_error,
                "mutual_information": result.mutual_information,
                "duncan": {
                    "mc_minus_mi": duncan.mean - result.mutual_information,
                    "within_three_sigma": within,
                },
                "gaussian_method": result.batch.gaussian_method,
                "filter_convention": result.batch.filter_convention,
            })
        }
        SignalConfig::Binary { phi } => {
            let phi = match phi {
                Some(p) => p.clone(),
                None => {
                    let c = 1.0 / grid.horizon().sqrt();
                    vec![c; grid.len()]
                }
            };
            let sim_cfg =
                SimConfig::new(seed, paths, gamma, grid.clone(), SignalModel::Binary { phi })?;
            let result = run_binary_sim(&sim_cfg, order)?;
            let estimates: Vec<EstimateOut> = result
                .batch
                .estimates
                .iter()
                .map(|e| EstimateOut { name: e.name.clone(), mean: e.mean, stderr: e.stderr })
                .collect();
            let causal = &result.batch.estimates[0];
            let gap = (causal.mean - result.oracle_causal_error).abs();
            json!({
                "signal": "binary",
                "snr_scale": result.snr_scale,
                "estimates": estimates,
                "oracle_causal_error": result.oracle_causal_error,
                "quadrature_causal_error": result.quadrature_causal_error,
                "quadrature_noncausal_error": result.quadrature_noncausal_error,
                "mutual_information": result.mutual_information,
                "duncan": {
                    "quadrature_residual": result.duncan_residual,
                    "mc_minus_oracle": causal.mean - result.oracle_causal_error,
                    "within_three_sigma": gap <= 3.0 * causal.stderr,
                },
                "gap_ratio": result.gap_ratio,
                "gaussian_method": result.batch.gaussian_method,
                "filter_convention": result.batch.filter_convention,
            })
        }
    };
    let record = json!({
        "config": cfg,
        "seed": seed,
        "gamma": gamma,
        "paths": paths,
        "result": body,
        "version": VERSION,
        "runtime_ms": started.elapsed().as_millis(),
        "timestamp_ms": timestamp_ms(),
    });
    let path = write_json(out_dir, "simulate.json", &record)?;
    println!("wrote {} ({} paths, seed {})", path.display(), paths, seed);
    Ok(())
}

pub fn cmd_yj(cfg: &ExperimentConfig, out_dir: &Path) -> Result<(), AppError> {
    let density = cfg.require_density()?;
    let gamma = cfg.require_single_gamma()?;
    let horizons = cfg
        .horizons
        .clone()
        .ok_or_else(|| AppError::Config("missing \"horizons\" list".into()))?;
    let delta = cfg.delta.ok_or_else(|| AppError::Config("missing \"delta\"".into()))?;
    let study = convergence_study(&density, gamma, &horizons, delta)?;
    let rows = study.rows.iter().map(|r| {
        vec![
            fmt_float(r.horizon),
            r.n.to_string(),
            fmt_float(r.average),
            fmt_float(r.target),
            fmt_float(r.gap),
        ]
    });
    let csv = write_csv(out_dir, "yj_study.csv", "T,n,average,target,gap", rows)?;
    let header = json!({
        "density": cfg.density,
        "gamma": gamma,
        "delta": delta,
        "target": study.target,
        "fitted_rate": study.fitted_rate,
        "monotone": study.monotone,
        "version": VERSION,
        "timestamp_ms": timestamp_ms(),
    });
    write_json(out_dir, "yj_study.json", &header)?;
    println!(
        "wrote {} (target {:.8}, fitted rate {:?}, monotone {})",
        csv.display(),
        study.target,
        study.fitted_rate,
        study.monotone
    );
    Ok(())
}
