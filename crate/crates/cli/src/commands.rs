use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use mess::basis::{reconstruct, reconstruction_errors_scaled, ErrorReport, ErrorScale};
use mess::datagen::{galerkin_rom_demo, gen_brusselator, gen_random_walk, RomTrajectories};
use mess::matio::{read_matrix, write_matrix, MatrixFormat};
use mess::pod::pod_basis_from_factors;
use mess::report::{
    write_report, write_table, write_trace, Branch, Comparison, RunReport, StageTimes,
};
use mess::{
    diameter, euclidean_distance, mess_sample, mess_sample_streaming, orthonormalize, svd,
    EpsilonRule, MessError, PodTarget, ReducedBasis, SampleResult, SnapshotMatrix, SvdFactors,
};

use crate::{
    BasisMethod, CliError, Result, RunConfig, Source, REPORT_FILE, ROM_FILE, SWEEP_FILE, TRACE_FILE,
};

fn timed<T>(times: &mut StageTimes, stage: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let value = f();
    *times.entry(stage.to_string()).or_default() += start.elapsed().as_secs_f64();
    value
}

fn prepare_out(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out).map_err(|e| MessError::Io {
        path: cfg.out.clone(),
        source: e,
    })?;
    Ok(())
}

fn out_path(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.out.join(name)
}

fn load_input(cfg: &RunConfig) -> Result<(SnapshotMatrix, MatrixFormat)> {
    let path = cfg
        .input
        .as_deref()
        .ok_or_else(|| CliError::Usage("--input is required".into()))?;
    let format = match cfg.input_format.or_else(|| MatrixFormat::from_path(path)) {
        Some(f) => f,
        None => {
            return Err(CliError::Usage(format!(
                "cannot tell the format of {}; pass --input-format",
                path.display()
            )))
        }
    };
    Ok((read_matrix(path, format)?, format))
}

fn write_output_matrix(
    cfg: &RunConfig,
    stem: &str,
    x: &SnapshotMatrix,
    fallback: MatrixFormat,
) -> Result<PathBuf> {
    let format = cfg.format.unwrap_or(fallback);
    let path = out_path(cfg, &format!("{stem}.{}", format.extension()));
    write_matrix(x, &path, format)?;
    Ok(path)
}

fn basis_matrix(b: &ReducedBasis) -> Result<SnapshotMatrix> {
    Ok(SnapshotMatrix::from_col_major(
        b.dim(),
        b.ell(),
        b.as_col_major().to_vec(),
    )?)
}

/// Absolute radius plus the diameter when the rule needed it.
fn resolve(
    x: &SnapshotMatrix,
    rule: EpsilonRule,
    times: &mut StageTimes,
) -> Result<(f64, Option<f64>)> {
    match rule {
        EpsilonRule::Absolute(_) => Ok((rule.resolve_with_diameter(0.0)?, None)),
        EpsilonRule::RelativeToDiameter(_) => {
            let diam = timed(times, "diameter", || diameter(x));
            Ok((rule.resolve_with_diameter(diam)?, Some(diam)))
        }
    }
}

fn error_scale(x: &SnapshotMatrix, diam: Option<f64>) -> ErrorScale {
    match diam {
        Some(d) => ErrorScale::Diameter(d),
        None => ErrorScale::Frobenius(x.frobenius_norm()),
    }
}

struct Sampled {
    result: SampleResult,
    diam: Option<f64>,
}

fn sample(
    cfg: &RunConfig,
    x: &SnapshotMatrix,
    rule: EpsilonRule,
    times: &mut StageTimes,
) -> Result<Sampled> {
    let (eps_abs, diam) = resolve(x, rule, times)?;
    let mut result = timed(times, "sampling", || {
        if cfg.streaming {
            mess_sample_streaming(x.columns(), eps_abs, cfg.stop)
        } else {
            mess_sample(x, EpsilonRule::Absolute(eps_abs), cfg.stop)
        }
    })?;
    result.epsilon_rule = rule;
    Ok(Sampled { result, diam })
}

fn sampled_basis(
    cfg: &RunConfig,
    x: &SnapshotMatrix,
    s: &Sampled,
    times: &mut StageTimes,
) -> Result<ReducedBasis> {
    let y = x.select_columns(&s.result.selected)?;
    let b = timed(times, "factorization", || orthonormalize(&y, cfg.rank_tol))?;
    if !b.dropped.is_empty() {
        log::warn!(
            "{} sampled snapshot(s) fell below the rank tolerance and were dropped",
            b.dropped.len()
        );
    }
    Ok(b)
}

fn required_eps(cfg: &RunConfig) -> Result<EpsilonRule> {
    cfg.eps
        .ok_or_else(|| CliError::Usage("--eps is required".into()))
}

fn finish(cfg: &RunConfig, report: RunReport) -> Result<RunReport> {
    write_report(&report, out_path(cfg, REPORT_FILE))?;
    Ok(report)
}

pub fn cmd_gen(cfg: &RunConfig) -> Result<RunReport> {
    prepare_out(cfg)?;
    let mut times = StageTimes::new();
    let x = timed(&mut times, "generation", || match cfg.source {
        Source::Brusselator(b) => gen_brusselator(&b),
        Source::RandomWalk {
            dim,
            n_snapshots,
            step_scale,
        } => gen_random_walk(dim, n_snapshots, step_scale, cfg.seed),
    })?;
    write_output_matrix(cfg, "snapshots", &x, MatrixFormat::Csv)?;
    let mut report = RunReport::new("gen");
    report.n_snapshots = Some(x.ncols());
    report.cpu_seconds = times;
    finish(cfg, report)
}

pub fn cmd_sample(cfg: &RunConfig) -> Result<RunReport> {
    let (x, _) = load_input(cfg)?;
    prepare_out(cfg)?;
    let mut times = StageTimes::new();
    let s = sample(cfg, &x, required_eps(cfg)?, &mut times)?;
    write_trace(&s.result.trace, out_path(cfg, TRACE_FILE))?;
    let mut report = RunReport::new("sample").with_sample(&s.result);
    report.cpu_seconds = times;
    finish(cfg, report)
}

pub fn cmd_basis(cfg: &RunConfig) -> Result<RunReport> {
    let (x, format) = load_input(cfg)?;
    prepare_out(cfg)?;
    let mut times = StageTimes::new();
    let mut report = RunReport::new("basis");
    let b = match cfg.method {
        BasisMethod::Mess => {
            let s = sample(cfg, &x, required_eps(cfg)?, &mut times)?;
            write_trace(&s.result.trace, out_path(cfg, TRACE_FILE))?;
            let b = sampled_basis(cfg, &x, &s, &mut times)?;
            let errors = reconstruction_errors_scaled(
                &x,
                &b,
                s.result.epsilon_abs,
                error_scale(&x, s.diam),
            )?;
            report = report.with_sample(&s.result).with_errors(&errors);
            b
        }
        BasisMethod::Pod(target) => {
            let f = timed(&mut times, "factorization", || svd(&x))?;
            let b = timed(&mut times, "truncation", || {
                pod_basis_from_factors(&f, target)
            })?;
            let errors =
                reconstruction_errors_scaled(&x, &b, f64::INFINITY, error_scale(&x, None))?;
            report.n_snapshots = Some(x.ncols());
            report.max_abs_error = Some(errors.max_abs);
            report.max_rel_error = Some(errors.max_rel);
            b
        }
    };
    report.ell = Some(b.ell());
    write_output_matrix(cfg, "basis", &basis_matrix(&b)?, format)?;
    report.cpu_seconds = times;
    finish(cfg, report)
}

pub fn cmd_compress(cfg: &RunConfig) -> Result<RunReport> {
    let (x, format) = load_input(cfg)?;
    prepare_out(cfg)?;
    let mut times = StageTimes::new();
    let s = sample(cfg, &x, required_eps(cfg)?, &mut times)?;
    let b = sampled_basis(cfg, &x, &s, &mut times)?;
    let xhat = timed(&mut times, "projection", || reconstruct(&x, &b))?;
    let errors =
        reconstruction_errors_scaled(&x, &b, s.result.epsilon_abs, error_scale(&x, s.diam))?;
    write_output_matrix(cfg, "reconstruction", &xhat, format)?;
    write_trace(&s.result.trace, out_path(cfg, TRACE_FILE))?;

    let mut report = RunReport::new("compress")
        .with_sample(&s.result)
        .with_errors(&errors);
    report.ell = Some(b.ell());
    report.cpu_seconds = times;
    let report = finish(cfg, report)?;
    if !errors.within_radius() && b.dropped.is_empty() {
        return Err(MessError::Numerical(format!(
            "reconstruction error {:.6e} is not below the radius {:.6e}",
            errors.max_abs, errors.eps_abs
        ))
        .into());
    }
    Ok(report)
}

/// POD basis of the same size as the sampled one, padded with singular
/// vectors of zero singular values when the SVD rank falls short.
fn matched_pod_basis(f: &SvdFactors, ell: usize) -> mess::Result<ReducedBasis> {
    let rank = f.rank();
    if ell <= rank {
        return pod_basis_from_factors(f, PodTarget::Rank(ell));
    }
    log::warn!(
        "SVD rank {rank} is below the sampled basis size {ell}; padding with null directions"
    );
    f.leading_left_vectors(ell.min(f.rank_bound()))
}

fn branch(ell: usize, errors: &ErrorReport, cpu_seconds: StageTimes) -> Branch {
    Branch {
        ell,
        max_abs_error: errors.max_abs,
        max_rel_error: errors.max_rel,
        cpu_seconds,
    }
}

pub fn cmd_compare(cfg: &RunConfig) -> Result<RunReport> {
    let (x, _) = load_input(cfg)?;
    prepare_out(cfg)?;

    let mut mess_times = StageTimes::new();
    let s = sample(cfg, &x, required_eps(cfg)?, &mut mess_times)?;
    let b = sampled_basis(cfg, &x, &s, &mut mess_times)?;
    let scale = error_scale(&x, s.diam);
    let mess_errors = reconstruction_errors_scaled(&x, &b, s.result.epsilon_abs, scale)?;

    let mut svd_times = StageTimes::new();
    let f = timed(&mut svd_times, "factorization", || svd(&x))?;
    let p = timed(&mut svd_times, "truncation", || {
        matched_pod_basis(&f, b.ell())
    })?;
    let svd_errors = reconstruction_errors_scaled(&x, &p, s.result.epsilon_abs, scale)?;

    write_trace(&s.result.trace, out_path(cfg, TRACE_FILE))?;
    let mut report = RunReport::new("compare")
        .with_sample(&s.result)
        .with_errors(&mess_errors);
    report.ell = Some(b.ell());
    let mess = branch(b.ell(), &mess_errors, mess_times);
    let svd = branch(p.ell(), &svd_errors, svd_times);
    report
        .cpu_seconds
        .insert("mess_offline".into(), mess.offline_seconds());
    report
        .cpu_seconds
        .insert("svd_offline".into(), svd.offline_seconds());
    report.comparison = Some(Comparison { mess, svd });
    finish(cfg, report)
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<RunReport> {
    if cfg.eps_list.is_empty() {
        return Err(CliError::Usage("the radius list is empty".into()));
    }
    let (x, _) = load_input(cfg)?;
    prepare_out(cfg)?;
    let mut times = StageTimes::new();
    let relative = cfg
        .eps_list
        .iter()
        .any(|r| matches!(r, EpsilonRule::RelativeToDiameter(_)));
    let diam = if relative {
        Some(timed(&mut times, "diameter", || diameter(&x)))
    } else {
        None
    };

    let mut rows = Vec::with_capacity(cfg.eps_list.len());
    for &rule in &cfg.eps_list {
        // errors are reported in the units of the radius column
        let (value, eps_abs, scale) = match rule {
            EpsilonRule::Absolute(e) => (e, rule.resolve_with_diameter(0.0)?, None),
            EpsilonRule::RelativeToDiameter(f) => {
                let d = diam.unwrap_or_default();
                (f, rule.resolve_with_diameter(d)?, Some(d))
            }
        };
        let mut stage = StageTimes::new();
        let r = timed(&mut stage, "sampling", || {
            mess_sample(&x, EpsilonRule::Absolute(eps_abs), cfg.stop)
        })?;
        let y = x.select_columns(&r.selected)?;
        let b = timed(&mut stage, "factorization", || {
            orthonormalize(&y, cfg.rank_tol)
        })?;
        let errors = reconstruction_errors_scaled(&x, &b, eps_abs, error_scale(&x, scale))?;
        let error = if scale.is_some() {
            errors.max_rel
        } else {
            errors.max_abs
        };
        let seconds: f64 = stage.values().sum();
        *times.entry("sweep".into()).or_default() += seconds;
        rows.push(vec![value, b.ell() as f64, error, seconds, value]);
    }
    write_table(
        out_path(cfg, SWEEP_FILE),
        &["eps", "ell", "error", "time", "reference"],
        &rows,
    )?;
    let mut report = RunReport::new("sweep");
    report.n_snapshots = Some(x.ncols());
    report.cpu_seconds = times;
    finish(cfg, report)
}

fn rom_branch(rom: &RomTrajectories, ell: usize, cpu_seconds: StageTimes) -> Branch {
    let max_abs_error = rom
        .full
        .columns()
        .zip(rom.reduced.columns())
        .map(|(a, b)| euclidean_distance(a, b))
        .fold(0.0, f64::max);
    Branch {
        ell,
        max_abs_error,
        max_rel_error: rom.max_relative_error(),
        cpu_seconds,
    }
}

pub fn cmd_rom(cfg: &RunConfig) -> Result<RunReport> {
    let Source::Brusselator(bcfg) = cfg.source else {
        return Err(CliError::Usage(
            "the reduced model needs the brusselator source".into(),
        ));
    };
    prepare_out(cfg)?;
    let mut times = StageTimes::new();
    let x = timed(&mut times, "generation", || gen_brusselator(&bcfg))?;

    let mut mess_times = StageTimes::new();
    let s = sample(cfg, &x, required_eps(cfg)?, &mut mess_times)?;
    let b = sampled_basis(cfg, &x, &s, &mut mess_times)?;

    let mut svd_times = StageTimes::new();
    let f = timed(&mut svd_times, "factorization", || svd(&x))?;
    let p = timed(&mut svd_times, "truncation", || {
        matched_pod_basis(&f, b.ell())
    })?;

    let mess_rom = timed(&mut mess_times, "reduced_model", || {
        galerkin_rom_demo(&bcfg, &b)
    })?;
    let pod_rom = timed(&mut svd_times, "reduced_model", || {
        galerkin_rom_demo(&bcfg, &p)
    })?;

    let rows: Vec<Vec<f64>> = mess_rom
        .times
        .iter()
        .zip(&mess_rom.relative_errors)
        .zip(&pod_rom.relative_errors)
        .map(|((&t, &a), &b)| vec![t, a, b])
        .collect();
    write_table(out_path(cfg, ROM_FILE), &["t", "mess", "pod"], &rows)?;
    write_trace(&s.result.trace, out_path(cfg, TRACE_FILE))?;

    let mut report = RunReport::new("rom").with_sample(&s.result);
    report.ell = Some(b.ell());
    report.cpu_seconds = times;
    report.comparison = Some(Comparison {
        mess: rom_branch(&mess_rom, b.ell(), mess_times),
        svd: rom_branch(&pod_rom, p.ell(), svd_times),
    });
    finish(cfg, report)
}
