//! Emission of report.json, curve.csv, sweep.csv, and the optional
//! envelope figure.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use categorize::analysis::DiagnosticsReport;
use categorize::priors::{QualitySupport, ReceiverCdf, SenderWeighting};
use categorize::schooling::SweepRow;
use categorize::solver::{Categorization, PercentileCurve};
use categorize::valuation::{weighting_psi, PosteriorFunction};

use crate::config::{Grids, RunConfig};
use crate::CliError;

#[derive(Serialize)]
pub struct ValueTriple {
    pub direct: f64,
    pub psi: f64,
    pub ibp: f64,
}

#[derive(Serialize)]
pub struct SchoolReport {
    pub payoff: f64,
    pub constant: f64,
    pub intrinsic_learning: bool,
    pub a_tilde: f64,
    pub learning_start: f64,
    pub learning_jumps: Vec<(f64, f64)>,
    pub ic_worst_violation: f64,
}

#[derive(Serialize)]
pub struct Report {
    pub mode: crate::config::Mode,
    pub seed: u64,
    pub grids: Grids,
    pub support: QualitySupport,
    pub value: ValueTriple,
    pub categorization: Categorization,
    pub degenerate_affine: bool,
    pub diagnostics: DiagnosticsReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub school: Option<SchoolReport>,
}

impl Report {
    pub fn instance(
        cfg: &RunConfig,
        cat: &Categorization,
        values: [f64; 3],
        diagnostics: DiagnosticsReport,
        school: Option<SchoolReport>,
    ) -> Report {
        Report {
            mode: cfg.mode,
            seed: cfg.seed,
            grids: cfg.grids,
            support: cat.support(),
            value: ValueTriple {
                direct: values[0],
                psi: values[1],
                ibp: values[2],
            },
            categorization: cat.clone(),
            degenerate_affine: diagnostics.degenerate_affine,
            diagnostics,
            school,
        }
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Config(format!("output error: {e}"))
}

pub fn write_all(
    cfg: &RunConfig,
    report: &Report,
    curve: &PercentileCurve,
    cat: &Categorization,
    s: &SenderWeighting,
    r: &ReceiverCdf,
) -> Result<(), CliError> {
    let dir = &cfg.output.dir;
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::Config(format!("serialization error: {e}")))?;
    std::fs::write(dir.join("report.json"), json + "\n").map_err(io_err)?;
    write_curve_csv(&dir.join("curve.csv"), curve, cat, s, r)?;
    if cfg.output.svg {
        write_envelope_svg(&dir.join("envelope.svg"), curve)?;
    }
    Ok(())
}

/// One row per percentile grid point: `z,a,H,envelope,pooled,A,Psi`.
pub fn write_curve_csv(
    path: &Path,
    curve: &PercentileCurve,
    cat: &Categorization,
    s: &SenderWeighting,
    r: &ReceiverCdf,
) -> Result<(), CliError> {
    let posterior = PosteriorFunction::new(cat, r);
    let psi = weighting_psi(cat, s, r).map_err(CliError::from)?;
    let mut out = String::with_capacity(curve.z().len() * 64);
    out.push_str("z,a,H,envelope,pooled,A,Psi\n");
    for (k, &z) in curve.z().iter().enumerate() {
        let a = if k == 0 {
            r.support().lo()
        } else {
            r.quantile(z)
        };
        let pooled = u8::from(curve.point_pooled(k));
        out.push_str(&format!(
            "{z},{a},{h},{env},{pooled},{post},{psi}\n",
            h = curve.h()[k],
            env = curve.env()[k],
            post = posterior.eval(a),
            psi = psi.eval(a),
        ));
    }
    std::fs::write(path, out).map_err(io_err)
}

/// One row per sweep cell: `gamma,lambda,a_tilde,full_pooling,payoff`.
pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<(), CliError> {
    let mut out = String::with_capacity(rows.len() * 48 + 48);
    out.push_str("gamma,lambda,a_tilde,full_pooling,payoff\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.gamma,
            row.lambda,
            row.a_tilde,
            u8::from(row.full_pooling),
            row.payoff,
        ));
    }
    std::fs::write(path, out).map_err(io_err)
}

/// Static figure: the curve in one stroke, the envelope in another, pooled
/// percentile spans shaded.
pub fn write_envelope_svg(path: &Path, curve: &PercentileCurve) -> Result<(), CliError> {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const PAD: f64 = 40.0;
    let lo = curve
        .h()
        .iter()
        .chain(curve.env())
        .fold(f64::INFINITY, |m, &v| m.min(v));
    let hi = curve
        .h()
        .iter()
        .chain(curve.env())
        .fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let span = (hi - lo).max(1e-9);
    let x = |z: f64| PAD + z * (W - 2.0 * PAD);
    let y = |v: f64| H - PAD - (v - lo) / span * (H - 2.0 * PAD);
    let polyline = |vals: &[f64]| {
        curve
            .z()
            .iter()
            .zip(vals)
            .map(|(&z, &v)| format!("{:.2},{:.2}", x(z), y(v)))
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    ));
    // Shaded pooled spans.
    let mut k = 0;
    let pooled = curve.pooled();
    while k < pooled.len() {
        if pooled[k] {
            let start = k;
            while k < pooled.len() && pooled[k] {
                k += 1;
            }
            let (x0, x1) = (x(curve.z()[start]), x(curve.z()[k]));
            svg.push_str(&format!(
                "<rect x=\"{x0:.2}\" y=\"{PAD}\" width=\"{:.2}\" height=\"{:.2}\" \
                 fill=\"#cccccc\" fill-opacity=\"0.45\"/>\n",
                x1 - x0,
                H - 2.0 * PAD
            ));
        } else {
            k += 1;
        }
    }
    svg.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\"/>\n",
        polyline(curve.h())
    ));
    svg.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\"/>\n",
        polyline(curve.env())
    ));
    svg.push_str(&format!(
        "<line x1=\"{PAD}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        H - PAD,
        W - PAD,
        H - PAD
    ));
    svg.push_str(&format!(
        "<line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        H - PAD
    ));
    svg.push_str("</svg>\n");

    let mut file = std::fs::File::create(path).map_err(io_err)?;
    file.write_all(svg.as_bytes()).map_err(io_err)
}
