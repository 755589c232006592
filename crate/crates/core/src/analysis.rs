//! Diagnostic predicates for an instance and a structured report.
//!
//! Dominance tests are grid tests with an absolute tolerance, and the worst
//! margin is recorded alongside the boolean so near-violations are visible.

use serde::Serialize;

use crate::priors::{union_sorted, ReceiverCdf, SenderWeighting};
use crate::solver::{compose_h_exact, flip_problem, solve, Categorization};
use crate::tolerances::TOL_ENV;
use crate::{Error, Result};

/// Outcome of a grid test: the predicate plus the worst slack observed.
/// Slack below `-TOL_ENV` fails the predicate; small positive slack means a
/// near-violation worth inspecting.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Margin {
    pub holds: bool,
    pub worst_slack: f64,
}

impl Margin {
    fn from_worst(worst_slack: f64) -> Self {
        Margin {
            holds: worst_slack >= -TOL_ENV,
            worst_slack,
        }
    }
}

/// Full pooling is optimal iff the sender mass above the left-endpoint
/// value stays above the receiver mass scaled by the total:
/// S(x) - S(a_lo) >= (1 - S(a_lo)) R(x) everywhere. For a cdf starting at
/// zero this is plain first-order dominance of the sender by the receiver.
pub fn check_full_pooling(s: &SenderWeighting, r: &ReceiverCdf) -> Margin {
    let grid = union_sorted(&[s.xs(), r.xs()]);
    let s_lo = s.value_at_lo();
    let mut worst = f64::INFINITY;
    for &x in grid.iter().skip(1) {
        let slack = (s.eval_upper(x) - s_lo) - (1.0 - s_lo) * r.eval(x);
        worst = worst.min(slack);
    }
    Margin::from_worst(worst)
}

/// Full separation is optimal iff the percentile curve is convex. The test
/// runs on the exact knot-image grid: at every interior breakpoint the
/// chord of the two neighbors must not dip below the curve.
pub fn check_full_separation(s: &SenderWeighting, r: &ReceiverCdf) -> Margin {
    let curve = match compose_h_exact(s, r) {
        Ok(c) => c,
        Err(_) => {
            return Margin {
                holds: false,
                worst_slack: f64::NEG_INFINITY,
            }
        }
    };
    Margin::from_worst(convexity_worst_gap(curve.z(), curve.h()))
}

fn convexity_worst_gap(z: &[f64], h: &[f64]) -> f64 {
    let mut worst = f64::INFINITY;
    for k in 1..z.len() - 1 {
        let t = (z[k] - z[k - 1]) / (z[k + 1] - z[k - 1]);
        let chord = h[k - 1] + t * (h[k + 1] - h[k - 1]);
        worst = worst.min(chord - h[k]);
    }
    worst
}

fn validate_interval(s: &SenderWeighting, interval: (f64, f64)) -> Result<(f64, f64)> {
    let (a, b) = interval;
    let support = s.support();
    if !support.contains(a) || !support.contains(b) || !(b > a) {
        return Err(Error::DegenerateInterval { lo: a, hi: b });
    }
    Ok((a, b))
}

/// Conditional first-order dominance of the sender by the receiver on an
/// interval, via the chord inequality: the sender mass accumulated from `a`
/// must everywhere outpace its pro-rata share of the receiver mass. Holding
/// with equality still counts as dominance.
pub fn check_fosd_on(s: &SenderWeighting, r: &ReceiverCdf, interval: (f64, f64)) -> Result<Margin> {
    if !s.is_cdf() {
        return Err(Error::NotACdf {
            context: "the sender weighting is not one",
        });
    }
    let (a, b) = validate_interval(s, interval)?;
    let grid = union_sorted(&[s.xs(), r.xs()]);
    let (sa, sb) = (s.eval(a), s.eval(b));
    let (ra, rb) = (r.eval(a), r.eval(b));
    let ratio = (sb - sa) / (rb - ra);
    let mut worst = f64::INFINITY;
    for &x in grid.iter().filter(|&&x| x > a && x < b).chain([b].iter()) {
        let slack = (s.eval(x) - sa) - ratio * (r.eval(x) - ra);
        worst = worst.min(slack);
    }
    Ok(Margin::from_worst(worst))
}

/// Likelihood-ratio dominance of the receiver by the sender on an interval,
/// tested as local convexity of the percentile curve over the interval's
/// percentile image. Necessary for the interval to sit inside a separating
/// region; not sufficient.
pub fn check_lr_on(s: &SenderWeighting, r: &ReceiverCdf, interval: (f64, f64)) -> Result<Margin> {
    let (a, b) = validate_interval(s, interval)?;
    let grid = union_sorted(&[s.xs(), r.xs()]);
    let lo = s.support().lo();
    let mut z = Vec::new();
    let mut h = Vec::new();
    let mut push = |x: f64| {
        let zx = r.eval(x);
        if z.last().is_none_or(|&last| zx > last) {
            z.push(zx);
            h.push(if x <= lo { s.eval(x) } else { s.eval_upper(x) });
        }
    };
    push(a);
    for &x in grid.iter().filter(|&&x| x > a && x < b) {
        push(x);
    }
    push(b);
    if z.len() < 3 {
        // No interior breakpoint: a single linear piece is trivially convex.
        return Ok(Margin::from_worst(0.0));
    }
    Ok(Margin::from_worst(convexity_worst_gap(&z, &h)))
}

/// Pooled-coverage summary of an instance and its prior-flipped companion.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FlipReport {
    /// Fraction of the support pooled in at least one of the two problems.
    pub coverage: f64,
    /// Fraction pooled in both.
    pub overlap: f64,
    /// Set when the percentile curve is globally affine; pooling and
    /// separating then tie everywhere and coverage is reported as 1.
    pub degenerate_affine: bool,
    pub original_pooled_fraction: f64,
    pub flipped_pooled_fraction: f64,
}

/// Solves the instance and its flip on a uniform percentile grid with `m`
/// cells and measures how the two pool layouts cover the support.
pub fn flip_report(s: &SenderWeighting, r: &ReceiverCdf, m: usize) -> Result<FlipReport> {
    let (flipped_s, flipped_r) = flip_problem(s, r)?;
    let (curve, cat) = solve(s, r, m)?;
    let (_, flipped_cat) = solve(&flipped_s, &flipped_r, m)?;
    let width = s.support().width();
    let degenerate_affine = curve.globally_affine();
    let original = cat.pooled_width() / width;
    let flipped = flipped_cat.pooled_width() / width;
    let overlap = intersection_measure(cat.pools(), flipped_cat.pools()) / width;
    let coverage = if degenerate_affine {
        1.0
    } else {
        original + flipped - overlap
    };
    Ok(FlipReport {
        coverage,
        overlap,
        degenerate_affine,
        original_pooled_fraction: original,
        flipped_pooled_fraction: flipped,
    })
}

fn intersection_measure(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let mut total = 0.0;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if hi > lo {
            total += hi - lo;
        }
        if a[i].1 <= b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    total
}

/// Outcome of the pooling/separation alternation check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternation {
    Holds,
    Violated,
    /// The hypothesis needs smooth strictly positive densities on both
    /// sides; table-built priors and jumping weightings are not eligible.
    NotApplicable,
}

/// Between any two distinct maximal pools there should be a zone of
/// separation, provided both priors have smooth positive densities.
pub fn check_alternation(
    s: &SenderWeighting,
    r: &ReceiverCdf,
    cat: &Categorization,
) -> Alternation {
    if !s.smooth_density() || !r.smooth_density() || s.jump_at_lo() > 1e-12 {
        return Alternation::NotApplicable;
    }
    let ok = cat.pools().windows(2).all(|w| w[1].0 > w[0].1);
    if ok {
        Alternation::Holds
    } else {
        Alternation::Violated
    }
}

/// Per-interval dominance diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct IntervalDiagnostics {
    pub lo: f64,
    pub hi: f64,
    /// Conditional first-order dominance; absent when the sender weighting
    /// is not a cdf.
    pub fosd: Option<Margin>,
    pub lr: Margin,
}

/// The full diagnostics block for an instance.
#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticsReport {
    pub full_pooling_optimal: bool,
    pub full_pooling: Margin,
    pub full_separation_optimal: bool,
    pub full_separation: Margin,
    pub fosd_global: Option<Margin>,
    pub lr_dominance_global: Margin,
    pub interval_results: Vec<IntervalDiagnostics>,
    /// Present when the flip is defined (the sender weighting is a strictly
    /// increasing continuous cdf).
    pub flip: Option<FlipReport>,
    pub flip_undefined_reason: Option<String>,
    pub alternation: Alternation,
    /// The percentile curve is globally affine: every categorization is
    /// value-equivalent and the pooling/separation labels carry no content.
    pub degenerate_affine: bool,
}

/// Runs every predicate against an instance. `m` is the percentile grid
/// used for the embedded solves; `intervals` are extra quality intervals to
/// test for conditional dominance.
pub fn diagnose(
    s: &SenderWeighting,
    r: &ReceiverCdf,
    m: usize,
    intervals: &[(f64, f64)],
) -> Result<DiagnosticsReport> {
    let support = s.support();
    let (curve, cat) = solve(s, r, m)?;
    let full_pooling = check_full_pooling(s, r);
    let full_separation = check_full_separation(s, r);
    let whole = (support.lo(), support.hi());
    let fosd_global = check_fosd_on(s, r, whole).ok();
    let lr_dominance_global = check_lr_on(s, r, whole)?;
    let mut interval_results = Vec::with_capacity(intervals.len());
    for &(lo, hi) in intervals {
        interval_results.push(IntervalDiagnostics {
            lo,
            hi,
            fosd: check_fosd_on(s, r, (lo, hi)).ok(),
            lr: check_lr_on(s, r, (lo, hi))?,
        });
    }
    let (flip, flip_undefined_reason) = match flip_report(s, r, m) {
        Ok(report) => (Some(report), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(DiagnosticsReport {
        full_pooling_optimal: full_pooling.holds,
        full_pooling,
        full_separation_optimal: full_separation.holds,
        full_separation,
        fosd_global,
        lr_dominance_global,
        interval_results,
        flip,
        flip_undefined_reason,
        alternation: check_alternation(s, r, &cat),
        degenerate_affine: curve.globally_affine(),
    })
}
