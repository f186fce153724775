use std::fmt::Write as _;

use schrod_core::exactalg::{discriminant, integer_avoidance_sweep, monodromy_dirichlet_test};
use schrod_core::fsm::{reference_solution, stability_scan, CompactVector, REFERENCE_SIZE_CAP, REFERENCE_TOL};
use schrod_core::limitops::{is_fredholm, kernel_vector, limit_operators, Side};
use schrod_core::potential::{fibonacci_substitution_word, fibonacci_value};
use schrod_core::spectral::{dirichlet_eigenvalues, periodic_bands, truncation_spectrum};
use schrod_core::{BigRational, Potential, Regime, Scalar, SectionScheme, Sequence, TransferMatrix};
use serde::Serialize;

use crate::config::{ExperimentConfig, REPRODUCTIONS};
use crate::exit::Failure;
use crate::output::OutDir;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Reproduction {
    pub name: String,
    pub pass: bool,
    pub checks: Vec<Check>,
}

fn check(name: &'static str, pass: bool, detail: impl Into<String>) -> Check {
    Check { name, pass, detail: detail.into() }
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn bits(s: &str) -> Vec<Scalar> {
    s.bytes().map(|b| Scalar::int((b - b'0') as i64)).collect()
}

pub fn run(cfg: &ExperimentConfig) -> Result<(), Failure> {
    cfg.check_command("reproduce")?;
    let name = cfg.name.as_deref().ok_or_else(|| Failure::Usage("no reproduction name given".into()))?;
    let out = OutDir::create(&cfg.out_dir())?;
    let checks = match name {
        "example-4-1" => example_4_1(&out)?,
        "example-4-2" => example_4_2(&out)?,
        "fibonacci-prefix" => fibonacci_prefix(&out)?,
        "integer-avoidance" => integer_avoidance(cfg, &out)?,
        other => return Err(Failure::Usage(format!("unknown reproduction `{other}`; expected one of {REPRODUCTIONS:?}"))),
    };
    let rep = Reproduction { name: name.to_string(), pass: checks.iter().all(|c| c.pass), checks };
    out.write_json("config.json", cfg)?;
    out.write_json(&format!("{name}.json"), &rep)?;
    for c in &rep.checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if rep.pass {
        Ok(())
    } else {
        let failing: Vec<&str> = rep.checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
        Err(Failure::Check(format!("{name}: failing checks {failing:?}")))
    }
}

fn example_4_1(out: &OutDir) -> Result<Vec<Check>, Failure> {
    let p = Potential::periodic(vec![Scalar::ratio(1, 2), Scalar::int(2), Scalar::ratio(1, 2)], Regime::Rational)?;
    let zero = Scalar::int(0);
    let mut checks = Vec::new();

    let delta = discriminant(&p)?.eval(&rat(0, 1));
    checks.push(check("discriminant", delta == rat(5, 2), format!("Delta(0) = {delta}")));

    let cert = monodromy_dirichlet_test(&p, &zero)?;
    let entries = [&cert.m11, &cert.m12, &cert.m21, &cert.m22].map(|s| s.to_rational());
    let diag = entries == [Some(rat(2, 1)), Some(rat(0, 1)), Some(rat(0, 1)), Some(rat(1, 2))];
    let cert_json = serde_json::to_string(&cert).map_err(|e| Failure::Check(e.to_string()))?;
    checks.push(check("monodromy", diag, cert_json));

    let fredholm = is_fredholm(&p, &zero)?;
    checks.push(check("fredholm", fredholm.is_fredholm(), "every limit operator is invertible at 0"));

    let reference = reference_solution(&p, Side::FullLine, 0.0, &CompactVector::unit(0), REFERENCE_TOL, REFERENCE_SIZE_CAP);
    checks.push(match reference {
        Ok(r) => check(
            "full_line_invertible",
            r.residual < 1e-10,
            format!(
                "H x = e_0 solved on {} sites: ||x|| = {:.12}, residual {:e}, tail {:e}",
                r.size,
                r.values.iter().map(|v| v * v).sum::<f64>().sqrt(),
                r.residual,
                r.tail_mass
            ),
        ),
        Err(e) => check("full_line_invertible", false, e.to_string()),
    });

    let bs = periodic_bands(&p)?;
    let dirichlet = dirichlet_eigenvalues(&p, &bs)?;
    let at_zero = dirichlet.eigenvalues.iter().find(|e| e.value.abs() < 1e-12);
    let nearest = truncation_spectrum(&p, 0, 299)?.into_iter().map(f64::abs).fold(f64::INFINITY, f64::min);
    checks.push(check(
        "half_line_eigenvalue",
        at_zero.is_some() && nearest < 1e-6,
        format!("Dirichlet eigenvalue at 0: {}; nearest eigenvalue of the size-300 section {nearest:e}", at_zero.is_some()),
    ));

    let scheme = SectionScheme::half_line(Sequence::Arithmetic { start: 2, step: 3 }, Some(40));
    let scan = stability_scan(&p, &scheme, 0.0)?;
    out.write("stability.csv", &scan.to_csv())?;
    let ratio = scan.ratio_per_period.unwrap_or(f64::NAN);
    checks.push(check(
        "half_line_sigma_decay",
        (ratio - 0.5).abs() <= 0.05,
        format!("sigma_min of [0, 3k-1] decays by {ratio:.6} per period"),
    ));

    let lim = limit_operators(&p)?;
    let plus = lim.plus.len();
    checks.push(check("limit_operators", plus == 3, format!("{plus} distinct operators in Lim_+")));
    Ok(checks)
}

fn example_4_2(out: &OutDir) -> Result<Vec<Check>, Failure> {
    let p = Potential::eventually_periodic(bits("110001100011"), vec![], 0, bits("10101"), Regime::Integer)?;
    let zero = Scalar::int(0);
    let mut checks = Vec::new();

    let t0 = TransferMatrix::step(&zero, &zero)?;
    let t1 = TransferMatrix::step(&Scalar::int(1), &zero)?;
    let m = t1.mul(&t0).mul(&t1).mul(&t0).mul(&t1);
    checks.push(check(
        "monodromy_trace",
        m.trace() == Scalar::int(-3),
        format!("T1 T0 T1 T0 T1 = [[{}, {}], [{}, {}]]", m.a11(), m.a12(), m.a21(), m.a22()),
    ));
    checks.push(check("t0_identity", t0 == t0.inverse_unimodular().pow(3), "T0 = T0^-3"));
    checks.push(check("t1_identity", t1 == t1.inverse_unimodular().pow(2), "T1 = T1^-2"));

    let kv = kernel_vector(&p, &zero, -241, 101)?;
    let (mut res, mut norm) = (0.0, 0.0);
    let mut csv = String::from("n,x_n\n");
    for n in -240..=100 {
        let h = kv.get(n - 1) + p.eval_f64(n) * kv.get(n) + kv.get(n + 1);
        res += h * h;
        norm += kv.get(n).powi(2);
        let _ = writeln!(csv, "{n},{:?}", kv.get(n));
    }
    out.write("kernel.csv", &csv)?;
    let rel = (res / norm).sqrt();
    checks.push(check("kernel_residual", rel < 1e-10, format!("||Hx|| / ||x|| = {rel:e} on [-240, 100]")));

    let worst = (1..=8).map(|k| (kv.get(-12 * k) - kv.get(5 * k)).abs()).fold(0.0, f64::max);
    checks.push(check("reflection_identity", worst < 1e-10, format!("max |x_-12k - x_5k| = {worst:e} for k <= 8")));

    let expected = (3.0 - 5f64.sqrt()) / 2.0;
    let ratio = kv.right_multiplier.abs();
    checks.push(check(
        "decay_ratio",
        (ratio - expected).abs() < 1e-10,
        format!("|x_(n+5) / x_n| = {ratio:.12} on the right"),
    ));
    Ok(checks)
}

fn fibonacci_prefix(out: &OutDir) -> Result<Vec<Check>, Failure> {
    const LEN: usize = 10_000;
    let oracle = fibonacci_substitution_word(LEN);
    let mut csv = String::from("n,value\n");
    let mut first_mismatch = None;
    for n in 1..=LEN as i64 {
        let v = fibonacci_value(n);
        let _ = writeln!(csv, "{n},{v}");
        if first_mismatch.is_none() && v != oracle[(n - 1) as usize] {
            first_mismatch = Some(n);
        }
    }
    out.write("fibonacci_prefix.csv", &csv)?;
    let prefix: Vec<u8> = (1..=5).map(fibonacci_value).collect();
    Ok(vec![
        check("prefix", prefix == [1, 0, 1, 1, 0], format!("v(1..5) = {prefix:?}")),
        check(
            "substitution_word",
            first_mismatch.is_none(),
            match first_mismatch {
                None => format!("{LEN} symbols agree with the 1 -> 10, 0 -> 1 word"),
                Some(n) => format!("first mismatch at n = {n}"),
            },
        ),
    ])
}

fn integer_avoidance(cfg: &ExperimentConfig, out: &OutDir) -> Result<Vec<Check>, Failure> {
    let seed = cfg.seed.unwrap_or(1);
    let count = cfg.potentials.unwrap_or(1000);
    let sweep = integer_avoidance_sweep(seed, count, 8, 5)?;
    out.write_json("integer_avoidance_sweep.json", &sweep)?;
    let detail = match sweep.violations.first() {
        None => format!(
            "{count} potentials, {} integer gap points, 0 violations; M12 = 0 at {} points, all with |M22| = 1",
            sweep.gap_points, sweep.zero_m12_points
        ),
        Some(v) => format!(
            "{} violations, first {:?}: {}",
            sweep.violations.len(),
            v.word,
            serde_json::to_string(&v.certificate).unwrap_or_default()
        ),
    };
    Ok(vec![check("no_integer_dirichlet_eigenvalue", sweep.violations.is_empty(), detail)])
}
