use schrod_core::exactalg::discriminant;
use schrod_core::fsm::{run_fsm_with, stability_scan, CompactVector, FsmOptions, FsmVerdict};
use schrod_core::spectral::{bands_with_width, dirichlet_eigenvalues, DEFAULT_EDGE_WIDTH};
use schrod_core::PotentialKind;

use crate::config::{ExperimentConfig, VERDICTS};
use crate::exit::Failure;
use crate::output::OutDir;

/// `bands.json`, `dirichlet.json` and `bands.csv` for a periodic potential.
pub fn bands(cfg: &ExperimentConfig) -> Result<(), Failure> {
    cfg.check_command("bands")?;
    let p = cfg.require_potential()?;
    if !matches!(p.kind(), PotentialKind::Periodic { .. }) {
        return Err(Failure::Usage("`bands` needs a periodic potential".into()));
    }
    let width = cfg.tolerances().band_edge_width.unwrap_or(DEFAULT_EDGE_WIDTH);
    let bs = bands_with_width(&discriminant(p)?, width)?;
    let rep = dirichlet_eigenvalues(p, &bs)?;
    let out = OutDir::create(&cfg.out_dir())?;
    out.write_json("config.json", cfg)?;
    out.write("bands.json", &(bs.to_json() + "\n"))?;
    out.write("dirichlet.json", &(rep.to_json() + "\n"))?;
    out.write("bands.csv", &bs.to_csv())?;
    for b in &bs.bands {
        println!("band [{:.12}, {:.12}]", b.lo.value, b.hi.value);
    }
    for e in &rep.eigenvalues {
        println!("dirichlet eigenvalue {:.12} ({:?})", e.value, e.gap);
    }
    if !rep.cross_validated() {
        return Err(Failure::Check("Dirichlet eigenvalues not confirmed by truncations".into()));
    }
    Ok(())
}

/// `fsm_report.json`, `fsm_report.csv`, `stability.json` and `stability.csv`.
pub fn fsm(cfg: &ExperimentConfig) -> Result<(), Failure> {
    cfg.check_command("fsm")?;
    let p = cfg.require_potential()?;
    let scheme = cfg.scheme.as_ref().ok_or_else(|| Failure::Usage("config has no `scheme`".into()))?;
    let z = cfg.z.ok_or_else(|| Failure::Usage("config has no `z`".into()))?;
    if let Some(e) = &cfg.expect {
        if !VERDICTS.contains(&e.as_str()) {
            return Err(Failure::Usage(format!("unknown verdict `{e}`; expected one of {VERDICTS:?}")));
        }
    }
    let rhs = cfg.rhs.clone().unwrap_or_else(|| CompactVector::unit(0));
    let tol = cfg.tolerances();
    let defaults = FsmOptions::default();
    let opts = FsmOptions {
        reference_tol: tol.reference_tol.unwrap_or(defaults.reference_tol),
        reference_cap: tol.reference_cap.unwrap_or(defaults.reference_cap),
    };
    let report = run_fsm_with(p, scheme, z, &rhs, opts)?;
    let scan = stability_scan(p, scheme, z)?;
    let out = OutDir::create(&cfg.out_dir())?;
    out.write_json("config.json", cfg)?;
    out.write("fsm_report.json", &(report.to_json() + "\n"))?;
    out.write("fsm_report.csv", &report.to_csv())?;
    out.write_json("stability.json", &scan)?;
    out.write("stability.csv", &scan.to_csv())?;
    let verdict = report.verdict.name();
    println!("verdict {verdict}");
    match &report.verdict {
        FsmVerdict::FailureObserved { reason, witness_row } => println!("witness row {witness_row}: {reason}"),
        FsmVerdict::Inconclusive { reason } => println!("{reason}"),
        FsmVerdict::ApplicableObserved => {}
    }
    println!("stability tail {:?}", scan.behavior);
    if cfg.exploratory {
        return Ok(());
    }
    match &cfg.expect {
        Some(e) if e == verdict => Ok(()),
        Some(e) if verdict == "inconclusive" => Err(Failure::Inconclusive(format!("expected {e}, got inconclusive"))),
        Some(e) => Err(Failure::Check(format!("expected {e}, got {verdict}"))),
        None if verdict == "inconclusive" => Err(Failure::Inconclusive("verdict inconclusive".into())),
        None => Ok(()),
    }
}
