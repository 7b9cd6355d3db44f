use std::io::Write as _;

use qdka_core::scan::{
    asymmetry_visibility, default_eta_star, evaluate, extract_peaks, run_eta_scan, thermometry_curve,
    DEFAULT_PROMINENCE,
};

use crate::args::{Command, RunArgs, SelftestArgs};
use crate::config::{gather, json_number, Settings};
use crate::emit::{self, AsymmetryRecord, Emission};
use crate::error::CliError;
use crate::selftest::{self, BesselSource};

/// Runs one command; `env_seed` is the value of `QDKA_SEED`, if set.
pub fn execute(command: &Command, env_seed: Option<&str>) -> Result<(), CliError> {
    match command {
        Command::Selftest(args) => run_selftest(args),
        Command::ScanEta(args) => run_with(command.name(), args, env_seed, scan_eta),
        Command::ScanEll(args) => run_with(command.name(), args, env_seed, scan_ell),
        Command::Asymmetry(args) => run_with(command.name(), args, env_seed, asymmetry),
        Command::Thermometry(args) => run_with(command.name(), args, env_seed, thermometry),
    }
}

fn in_pool<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match workers {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::config(format!("key `workers`: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

fn run_with(
    name: &str,
    args: &RunArgs,
    env_seed: Option<&str>,
    job: fn(&mut Settings) -> Result<Emission, CliError>,
) -> Result<(), CliError> {
    let raw = gather(args.config.as_deref(), env_seed, &args.entries())?;
    let mut settings = Settings::from_raw(&raw)?;
    for w in settings.bundle()?.warnings() {
        eprintln!("warning: {w}");
    }
    let workers = settings.workers;
    let emission = in_pool(workers, || job(&mut settings))??;

    match &args.out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(emission.body.as_bytes())
                .map_err(|e| CliError::io("<stdout>", e))?;
        }
        Some(out) => {
            emit::write_file(out, &emission.body)?;
            for (tag, text) in &emission.extras {
                emit::write_file(&emit::sibling_path(out, tag), text)?;
            }
            let manifest = emit::manifest_text(
                name,
                settings.engine.engine().tag(),
                &settings,
                raw.digest.as_deref(),
                &emission.summary,
            );
            emit::write_file(&emit::manifest_path(out), &manifest)?;
        }
    }
    Ok(())
}

fn scan_eta(settings: &mut Settings) -> Result<Emission, CliError> {
    let bundle = settings.bundle()?;
    let result = run_eta_scan(&bundle, &settings.grid()?, settings.engine.engine(), &settings.setup())?;
    let mut summary = vec![("points", result.len().to_string())];
    if let Ok(report) = extract_peaks(&result, DEFAULT_PROMINENCE) {
        summary.push(("center_eta", json_number(report.center_eta)));
        summary.push(("center_height", json_number(report.height)));
        summary.push(("fwhm_g", report.fwhm_g.map_or_else(|| "null".into(), json_number)));
        summary.push(("side_peaks", report.side_peaks.len().to_string()));
    }
    Ok(Emission { body: emit::scan_table(&result, settings.format), extras: Vec::new(), summary })
}

fn scan_ell(settings: &mut Settings) -> Result<Emission, CliError> {
    let grid = settings.grid()?;
    let setup = settings.setup();
    let mut reports = Vec::new();
    let mut extras = Vec::new();
    for &ell in &settings.ells {
        let per = Settings { ell, ..settings.clone() };
        let result = run_eta_scan(&per.bundle()?, &grid, per.engine.engine(), &setup)?;
        let report = extract_peaks(&result, DEFAULT_PROMINENCE)?;
        extras.push((format!("ell{ell}"), emit::scan_table(&result, settings.format)));
        reports.push((ell, report));
    }
    let widths: Vec<String> = reports
        .iter()
        .map(|(_, r)| r.fwhm_g.map_or_else(|| "null".into(), json_number))
        .collect();
    let summary = vec![("fwhm_g", format!("[{}]", widths.join(",")))];
    Ok(Emission { body: emit::peak_table(&reports, settings.format), extras, summary })
}

fn resolve_eta_star(settings: &mut Settings, bundle: &qdka_core::BundleF64) -> Result<f64, CliError> {
    let eta_star = match settings.eta_star {
        Some(e) => e,
        None => default_eta_star(bundle)?,
    };
    settings.eta_star = Some(eta_star);
    Ok(eta_star)
}

fn asymmetry(settings: &mut Settings) -> Result<Emission, CliError> {
    let bundle = settings.bundle()?;
    let eta_star = resolve_eta_star(settings, &bundle)?;
    let engine = settings.engine.engine();
    let visibility = asymmetry_visibility(&bundle, eta_star, engine)?;
    let f_minus = evaluate(&bundle, -eta_star, engine)?.mean;
    let f_plus = evaluate(&bundle, eta_star, engine)?.mean;
    let record = AsymmetryRecord {
        beta0: bundle.ensemble().center(),
        fwhm: settings.fwhm,
        eta_star,
        f_minus,
        f_plus,
        visibility,
    };
    Ok(Emission {
        body: emit::asymmetry_table(&record, settings.format),
        extras: Vec::new(),
        summary: vec![("visibility", json_number(visibility))],
    })
}

fn thermometry(settings: &mut Settings) -> Result<Emission, CliError> {
    let bundle = settings.bundle()?;
    let eta_star = resolve_eta_star(settings, &bundle)?;
    let curve = thermometry_curve(&bundle, &settings.dbeta_grid, eta_star, settings.engine.engine())?;
    let summary = vec![
        ("slope", json_number(curve.fit.slope)),
        ("intercept", json_number(curve.fit.intercept)),
        ("r_squared", json_number(curve.fit.r_squared)),
        ("monotone", curve.monotone.to_string()),
    ];
    Ok(Emission { body: emit::thermometry_table(&curve, settings.format), extras: Vec::new(), summary })
}

fn run_selftest(args: &SelftestArgs) -> Result<(), CliError> {
    if args.workers == Some(0) {
        return Err(CliError::config("key `workers`: workers must be ≥ 1"));
    }
    let source = BesselSource { perturbation: args.perturb_bessel.unwrap_or(0.0) };
    let report = in_pool(args.workers, || selftest::run(source))?;
    println!("{report}");
    if report.passed() {
        Ok(())
    } else {
        let names: Vec<&str> = report.failures().map(|c| c.name).collect();
        Err(CliError::Numerical(format!("selftest failed: {}", names.join(", "))))
    }
}
