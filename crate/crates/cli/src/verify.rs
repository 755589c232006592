//! Bundled verification suite: golden values from the worked examples,
//! oracle agreement, weighting dominance, value-route agreement, and the
//! incentive checks, printed as a pass/fail table.
//!
//! Goldens can be overridden (or corrupted, to exercise the harness) via
//! `[[verify.goldens]]` entries matching a check by name.

use categorize::priors::{
    build_receiver, build_sender, QualitySupport, ReceiverCdf, ReceiverFamily, SenderFamily,
    SenderWeighting,
};
use categorize::schooling::{solve_school, verify_ic, CostFunction, SchoolingConfig};
use categorize::solver::{solve_exact, Categorization};
use categorize::valuation::{
    dp_oracle, random_categorization, sender_value, sender_value_all, weighting_psi, ValueMethod,
};

use crate::config::RunConfig;
use crate::CliError;

struct Row {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn golden(cfg: &RunConfig, name: &str, default_expected: f64, default_tol: f64) -> (f64, f64) {
    cfg.verify
        .goldens
        .iter()
        .find(|g| g.name == name)
        .map(|g| (g.expected, g.tol))
        .unwrap_or((default_expected, default_tol))
}

fn intro_instance(eps: f64, n: usize) -> Result<(SenderWeighting, ReceiverCdf), CliError> {
    let unit = QualitySupport::unit();
    let r = build_receiver(&ReceiverFamily::Uniform, unit, n).map_err(CliError::from)?;
    let s = build_sender(
        &SenderFamily::UniformOn {
            lo: 0.75 - eps,
            hi: 0.75 + eps,
        },
        unit,
        n,
    )
    .map_err(CliError::from)?;
    Ok((s, r))
}

fn rotating_instance(seed: u64, n: usize) -> Result<(SenderWeighting, ReceiverCdf), CliError> {
    let unit = QualitySupport::unit();
    let receivers = [
        ReceiverFamily::Uniform,
        ReceiverFamily::Power { k: 2.0 },
        ReceiverFamily::Power { k: 0.6 },
        ReceiverFamily::Logistic { mu: 0.45, s: 0.12 },
    ];
    let senders = [
        SenderFamily::Power { k: 1.7 },
        SenderFamily::ReverseLogistic { mu: 0.5, s: 0.12 },
        SenderFamily::Logistic { mu: 0.6, s: 0.2 },
        SenderFamily::Power { k: 0.5 },
        SenderFamily::Uniform,
    ];
    let r = build_receiver(&receivers[(seed % 4) as usize], unit, n).map_err(CliError::from)?;
    let s = build_sender(&senders[(seed % 5) as usize], unit, n).map_err(CliError::from)?;
    Ok((s, r))
}

fn value_check(
    cfg: &RunConfig,
    name: &'static str,
    default_expected: f64,
    default_tol: f64,
    got: f64,
) -> Row {
    let (expected, tol) = golden(cfg, name, default_expected, default_tol);
    Row {
        name,
        pass: (got - expected).abs() <= tol,
        detail: format!("value {got}, golden {expected} ± {tol}"),
    }
}

pub fn run(cfg: &RunConfig) -> Result<u8, CliError> {
    let n = cfg.grids.prior_n.max(1001);
    let oracle_n = cfg.grids.oracle_n;
    let mut rows: Vec<Row> = Vec::new();

    // Worked-example values.
    for (name, eps, expected) in [
        ("intro-value-eps05", 0.05, 0.85),
        ("intro-value-eps10", 0.10, 0.825),
    ] {
        let (s, r) = intro_instance(eps, n)?;
        let (_, cat) = solve_exact(&s, &r)?;
        let v = sender_value(&cat, &s, &r, ValueMethod::Direct)?;
        rows.push(value_check(cfg, name, expected, 1e-3, v));
    }
    {
        let (s, r) = intro_instance(0.05, n)?;
        let pool = Categorization::full_pooling(&r);
        let v = sender_value(&pool, &s, &r, ValueMethod::Direct)?;
        rows.push(value_check(cfg, "full-pooling-value", 0.5, 1e-6, v));
        let separate = Categorization::full_separation(&r);
        let v = sender_value(&separate, &s, &r, ValueMethod::Direct)?;
        rows.push(value_check(cfg, "full-separation-value", 0.75, 1e-3, v));
    }

    // Oracle agreement on rotating instances.
    {
        let slack = 5.0 / oracle_n as f64;
        let mut worst: f64 = 0.0;
        for i in 0..5u64 {
            let (s, r) = rotating_instance(cfg.seed.wrapping_add(i), n)?;
            let (_, cat) = solve_exact(&s, &r)?;
            let v = sender_value(&cat, &s, &r, ValueMethod::Direct)?;
            let (ov, _) = dp_oracle(&s, &r, oracle_n)?;
            worst = worst.max((v - ov).abs());
        }
        rows.push(Row {
            name: "oracle-agreement",
            pass: worst <= slack,
            detail: format!("worst gap {worst:.2e}, allowed {slack:.2e}"),
        });
    }

    // Pointwise dominance of the optimum's weighting.
    {
        let mut worst: f64 = f64::NEG_INFINITY;
        for i in 0..3u64 {
            let (s, r) = rotating_instance(cfg.seed.wrapping_add(11 * i + 3), n)?;
            let (_, best) = solve_exact(&s, &r)?;
            let w_star = weighting_psi(&best, &s, &r)?;
            for k in 0..20 {
                let cat = random_categorization(&r, cfg.seed.wrapping_add(k * 97 + i), 8);
                let w = weighting_psi(&cat, &s, &r)?;
                for &x in w.xs() {
                    worst = worst.max(w_star.eval(x) - w.eval(x));
                }
            }
        }
        rows.push(Row {
            name: "psi-dominance",
            pass: worst <= 1e-9,
            detail: format!("worst excess {worst:.2e}"),
        });
    }

    // The three value routes agree.
    {
        let mut worst: f64 = 0.0;
        for i in 0..5u64 {
            let (s, r) = rotating_instance(cfg.seed.wrapping_add(29 * i + 7), n)?;
            for k in 0..10 {
                let cat = random_categorization(&r, cfg.seed.wrapping_add(k + 1000 * i), 6);
                let [a, b, c] = sender_value_all(&cat, &s, &r)?;
                worst = worst
                    .max((a - b).abs())
                    .max((a - c).abs())
                    .max((b - c).abs());
            }
        }
        rows.push(Row {
            name: "route-agreement",
            pass: worst <= 1e-6,
            detail: format!("worst disagreement {worst:.2e}"),
        });
    }

    // Incentive compatibility of a solved schedule, and detection of a
    // deliberately broken one.
    {
        let unit = QualitySupport::unit();
        let f0 = build_receiver(&ReceiverFamily::Power { k: 0.5 }, unit, n)?;
        let r = build_receiver(&ReceiverFamily::Uniform, unit, n)?;
        let school = SchoolingConfig::new(f0, r, CostFunction::Reciprocal, 0.7, 0.0)?;
        let sol = solve_school(&school, cfg.grids.solver_m)?;
        let worst = verify_ic(
            &sol.learning,
            &sol.categorization,
            &school,
            10_000,
            cfg.seed,
        );
        rows.push(Row {
            name: "ic-holds",
            pass: worst <= 1e-6,
            detail: format!("worst violation {worst:.2e}"),
        });
        let broken = sol.learning.with_bump(0.95, 0.1);
        let worst = verify_ic(&broken, &sol.categorization, &school, 10_000, cfg.seed);
        rows.push(Row {
            name: "ic-detects-perturbation",
            pass: worst > 1e-6,
            detail: format!("violation under perturbation {worst:.2e}"),
        });
    }

    let mut failed = 0;
    for row in &rows {
        let status = if row.pass { "pass" } else { "FAIL" };
        println!("{status}  {:<26} {}", row.name, row.detail);
        if !row.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        eprintln!("{failed} verification row(s) failed");
        return Ok(2);
    }
    println!("all {} verification rows passed", rows.len());
    Ok(0)
}
