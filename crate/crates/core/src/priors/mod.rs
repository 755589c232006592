//! Receiver and sender priors on a common quality interval.
//!
//! The receiver side is a continuous, strictly increasing cdf stored as a
//! piecewise-linear knot list, so composition and inversion stay closed
//! under the operations the solver needs. The sender side is a
//! bounded-variation weighting: left-continuous, equal to 1 at the top of
//! the support, possibly non-monotone, possibly negative at the bottom, and
//! with at most one (upward) jump at the lower endpoint.

mod transforms;

pub use transforms::{
    transform_group_mixture, transform_peer_effects, transform_quadratic, transform_retail,
    transform_state_dependent,
};

use serde::{Deserialize, Serialize};

use crate::tolerances::SLOPE_FLOOR;
use crate::{Error, Result};

/// The closed quality interval shared by every prior in an instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualitySupport {
    lo: f64,
    hi: f64,
}

impl QualitySupport {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(Error::InvalidSupport { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    /// The unit interval, the default in examples and tests.
    pub fn unit() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// Receiver-side prior: a continuous, strictly increasing piecewise-linear
/// cdf with R(a_lo) = 0 and R(a_hi) = 1.
#[derive(Clone, Debug, Serialize)]
pub struct ReceiverCdf {
    support: QualitySupport,
    xs: Vec<f64>,
    ps: Vec<f64>,
    smooth_density: bool,
}

impl ReceiverCdf {
    /// Builds a cdf from `(quality, probability)` pairs. The first pair must
    /// be `(a_lo, 0)`, the last `(a_hi, 1)`, and both coordinates must be
    /// strictly increasing. Table-built cdfs are not flagged as having a
    /// smooth density.
    pub fn from_table(knots: &[(f64, f64)]) -> Result<Self> {
        if knots.len() < 3 {
            return Err(Error::GridTooSmall {
                need: 3,
                got: knots.len(),
            });
        }
        let support = QualitySupport::new(knots[0].0, knots[knots.len() - 1].0)?;
        let xs: Vec<f64> = knots.iter().map(|k| k.0).collect();
        let mut ps: Vec<f64> = knots.iter().map(|k| k.1).collect();
        if ps[0].abs() > 1e-12 {
            return Err(Error::BadFamilyParameter {
                family: "receiver table",
                reason: format!("probability at the lower endpoint must be 0, got {}", ps[0]),
            });
        }
        let last = *ps.last().unwrap();
        if (last - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized { at_hi: last });
        }
        ps[0] = 0.0;
        *ps.last_mut().unwrap() = 1.0;
        for i in 0..xs.len() - 1 {
            if !xs[i].is_finite() || !ps[i].is_finite() {
                return Err(Error::NonFinite {
                    context: "receiver table",
                });
            }
            let dx = xs[i + 1] - xs[i];
            let dp = ps[i + 1] - ps[i];
            if dx <= 0.0 || dp < SLOPE_FLOOR * dx {
                return Err(Error::TableNotIncreasing {
                    context: "receiver cdf",
                    index: i + 1,
                });
            }
        }
        Ok(Self {
            support,
            xs,
            ps,
            smooth_density: false,
        })
    }

    pub fn support(&self) -> QualitySupport {
        self.support
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ps(&self) -> &[f64] {
        &self.ps
    }

    /// Whether the prior came from an analytic family with a positive
    /// density on the open support. Tables never carry this flag.
    pub fn smooth_density(&self) -> bool {
        self.smooth_density
    }

    pub fn with_smooth_density(mut self, smooth: bool) -> Self {
        self.smooth_density = smooth;
        self
    }

    /// R(x). Qualities outside the support clamp to the endpoint values.
    pub fn eval(&self, x: f64) -> f64 {
        interp(&self.xs, &self.ps, x)
    }

    /// R^{-1}(z) for z in [0, 1]; well-defined because increments are
    /// bounded below by the slope floor.
    pub fn quantile(&self, z: f64) -> f64 {
        interp(&self.ps, &self.xs, z)
    }

    /// R(b) - R(a).
    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        self.eval(b) - self.eval(a)
    }

    /// The partial moment ∫ y dR over [a, b], exact for the piecewise-linear
    /// representation: each linear piece contributes its midpoint times its
    /// mass.
    pub fn partial_moment(&self, a: f64, b: f64) -> f64 {
        let a = a.max(self.support.lo);
        let b = b.min(self.support.hi);
        if b <= a {
            return 0.0;
        }
        let mut total = 0.0;
        let mut x0 = a;
        let mut p0 = self.eval(a);
        let start = self.xs.partition_point(|&x| x <= a);
        for i in start..self.xs.len() {
            let x1 = self.xs[i].min(b);
            let p1 = self.eval(x1);
            total += 0.5 * (x0 + x1) * (p1 - p0);
            if self.xs[i] >= b {
                break;
            }
            x0 = x1;
            p0 = p1;
        }
        total
    }

    /// E_R[y | y in [a, b]].
    pub fn mean_between(&self, a: f64, b: f64) -> f64 {
        self.partial_moment(a, b) / self.mass_between(a, b)
    }

    pub fn mean(&self) -> f64 {
        self.partial_moment(self.support.lo, self.support.hi)
    }

    /// Reads the cdf as a sender weighting over the same support.
    pub fn as_weighting(&self) -> SenderWeighting {
        SenderWeighting {
            support: self.support,
            value_at_lo: 0.0,
            jump_at_lo: 0.0,
            xs: self.xs.clone(),
            vs: self.ps.clone(),
            smooth_density: self.smooth_density,
        }
    }
}

/// Sender-side prior: left-continuous and of bounded variation, with
/// S(a_hi) = 1 and at most one upward jump, located at the lower endpoint.
/// Monotonicity is not required, and S(a_lo) may be negative.
///
/// Knot values carry the right limit at `a_lo`; the value at `a_lo` itself
/// (below the jump) is stored separately.
#[derive(Clone, Debug, Serialize)]
pub struct SenderWeighting {
    support: QualitySupport,
    value_at_lo: f64,
    jump_at_lo: f64,
    xs: Vec<f64>,
    vs: Vec<f64>,
    smooth_density: bool,
}

impl SenderWeighting {
    /// Builds a weighting from the left-endpoint value and the knot list.
    /// `knots[0]` sits at `a_lo` and carries the right limit there, so the
    /// jump is `knots[0].1 - value_at_lo`; the last knot must be `(a_hi, 1)`.
    pub fn from_knots(value_at_lo: f64, knots: &[(f64, f64)]) -> Result<Self> {
        if knots.len() < 3 {
            return Err(Error::GridTooSmall {
                need: 3,
                got: knots.len(),
            });
        }
        if !value_at_lo.is_finite() || knots.iter().any(|k| !k.0.is_finite() || !k.1.is_finite()) {
            return Err(Error::NonFinite {
                context: "sender weighting",
            });
        }
        let support = QualitySupport::new(knots[0].0, knots[knots.len() - 1].0)?;
        let xs: Vec<f64> = knots.iter().map(|k| k.0).collect();
        let mut vs: Vec<f64> = knots.iter().map(|k| k.1).collect();
        for i in 0..xs.len() - 1 {
            if xs[i + 1] <= xs[i] {
                return Err(Error::TableNotIncreasing {
                    context: "sender weighting grid",
                    index: i + 1,
                });
            }
        }
        let last = *vs.last().unwrap();
        if (last - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized { at_hi: last });
        }
        *vs.last_mut().unwrap() = 1.0;
        let mut jump = vs[0] - value_at_lo;
        if jump < 0.0 {
            if jump < -1e-12 {
                return Err(Error::DownwardJump { size: -jump });
            }
            jump = 0.0;
        }
        Ok(Self {
            support,
            value_at_lo,
            jump_at_lo: jump,
            xs,
            vs,
            smooth_density: false,
        })
    }

    pub fn support(&self) -> QualitySupport {
        self.support
    }

    /// S(a_lo), the left-endpoint value below any jump.
    pub fn value_at_lo(&self) -> f64 {
        self.value_at_lo
    }

    /// Mass of the permitted discontinuity at the lower endpoint.
    pub fn jump_at_lo(&self) -> f64 {
        self.jump_at_lo
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn vs(&self) -> &[f64] {
        &self.vs
    }

    pub fn smooth_density(&self) -> bool {
        self.smooth_density
    }

    pub fn with_smooth_density(mut self, smooth: bool) -> Self {
        self.smooth_density = smooth;
        self
    }

    /// S(x) with the left-continuous convention: at `a_lo` this is the value
    /// below the jump.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.support.lo {
            self.value_at_lo
        } else {
            interp(&self.xs, &self.vs, x)
        }
    }

    /// The right limit lim_{y -> x+} S(y); differs from `eval` only at `a_lo`.
    pub fn eval_upper(&self, x: f64) -> f64 {
        interp(&self.xs, &self.vs, x)
    }

    /// Whether the weighting is a bona fide cdf: continuous, starting at
    /// zero, and nondecreasing.
    pub fn is_cdf(&self) -> bool {
        self.value_at_lo.abs() <= 1e-9
            && self.jump_at_lo <= 1e-9
            && self.vs.windows(2).all(|w| w[1] >= w[0] - 1e-12)
    }

    /// Strict monotonicity at the slope floor, the requirement for serving
    /// as a receiver prior in the flipped problem.
    pub fn is_strictly_increasing(&self) -> bool {
        self.xs
            .windows(2)
            .zip(self.vs.windows(2))
            .all(|(x, v)| v[1] - v[0] >= SLOPE_FLOOR * (x[1] - x[0]))
    }

    /// The signed measure dS carried by the knot grid.
    pub fn to_measure(&self) -> SignedGridMeasure {
        let cell_masses = self.vs.windows(2).map(|w| w[1] - w[0]).collect();
        SignedGridMeasure {
            grid: self.xs.clone(),
            cell_masses,
            atom_at_lo: self.jump_at_lo,
        }
    }
}

/// Discretization carrier for Stieltjes integrals against dS: signed cell
/// masses over an increasing grid plus the atom at the lower endpoint.
#[derive(Clone, Debug)]
pub struct SignedGridMeasure {
    pub grid: Vec<f64>,
    pub cell_masses: Vec<f64>,
    pub atom_at_lo: f64,
}

impl SignedGridMeasure {
    pub fn total_mass(&self) -> f64 {
        self.cell_masses.iter().sum::<f64>() + self.atom_at_lo
    }
}

/// Analytic families for the receiver prior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ReceiverFamily {
    Uniform,
    /// R(x) = ((x - a_lo) / (a_hi - a_lo))^k, k > 0.
    Power {
        k: f64,
    },
    /// Logistic cdf in normalized coordinates, rescaled to hit 0 and 1 at
    /// the endpoints. `mu` is the midpoint in [0, 1], `s > 0` the scale.
    Logistic {
        mu: f64,
        s: f64,
    },
    /// The inverse of the normalized logistic: concave below, convex above.
    ReverseLogistic {
        mu: f64,
        s: f64,
    },
    Table {
        knots: Vec<(f64, f64)>,
    },
}

/// Families for the sender weighting. All analytic families are cdfs; use
/// the transform functions for weightings induced from richer primitives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum SenderFamily {
    Uniform,
    /// Uniform cdf on `[lo, hi]` inside the support: 0 below, 1 above.
    UniformOn {
        lo: f64,
        hi: f64,
    },
    Power {
        k: f64,
    },
    Logistic {
        mu: f64,
        s: f64,
    },
    ReverseLogistic {
        mu: f64,
        s: f64,
    },
    Table {
        #[serde(default)]
        value_at_lo: f64,
        knots: Vec<(f64, f64)>,
        #[serde(default)]
        normalize: bool,
    },
}

fn normalized_logistic(u: f64, mu: f64, s: f64) -> f64 {
    let l = |t: f64| 1.0 / (1.0 + (-(t - mu) / s).exp());
    let l0 = l(0.0);
    let l1 = l(1.0);
    (l(u) - l0) / (l1 - l0)
}

fn normalized_logistic_inverse(u: f64, mu: f64, s: f64) -> f64 {
    let l = |t: f64| 1.0 / (1.0 + (-(t - mu) / s).exp());
    let l0 = l(0.0);
    let l1 = l(1.0);
    let t = l0 + u * (l1 - l0);
    (mu + s * (t / (1.0 - t)).ln()).clamp(0.0, 1.0)
}

fn check_logistic_params(family: &'static str, mu: f64, s: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&mu) || !(s > 0.0) || !s.is_finite() {
        return Err(Error::BadFamilyParameter {
            family,
            reason: format!("need mu in [0,1] and s > 0, got mu={mu}, s={s}"),
        });
    }
    Ok(())
}

/// Samples a receiver family exactly at `n` knots over the support.
pub fn build_receiver(
    family: &ReceiverFamily,
    support: QualitySupport,
    n: usize,
) -> Result<ReceiverCdf> {
    if n < 3 {
        return Err(Error::GridTooSmall { need: 3, got: n });
    }
    let f: Box<dyn Fn(f64) -> f64> = match family {
        ReceiverFamily::Uniform => Box::new(|u| u),
        ReceiverFamily::Power { k } => {
            if !(*k > 0.0) || !k.is_finite() {
                return Err(Error::BadFamilyParameter {
                    family: "power",
                    reason: format!("exponent must be positive, got {k}"),
                });
            }
            let k = *k;
            Box::new(move |u| u.powf(k))
        }
        ReceiverFamily::Logistic { mu, s } => {
            check_logistic_params("logistic", *mu, *s)?;
            let (mu, s) = (*mu, *s);
            Box::new(move |u| normalized_logistic(u, mu, s))
        }
        ReceiverFamily::ReverseLogistic { mu, s } => {
            check_logistic_params("reverse-logistic", *mu, *s)?;
            let (mu, s) = (*mu, *s);
            Box::new(move |u| normalized_logistic_inverse(u, mu, s))
        }
        ReceiverFamily::Table { knots } => return ReceiverCdf::from_table(knots),
    };
    let knots = sample_unit_function(&f, support, n);
    Ok(ReceiverCdf::from_table(&knots)?.with_smooth_density(true))
}

/// Samples a sender family at `n` knots. Analytic families are normalized
/// by construction; tables are rescaled only when `normalize` is set.
pub fn build_sender(
    family: &SenderFamily,
    support: QualitySupport,
    n: usize,
) -> Result<SenderWeighting> {
    if n < 3 {
        return Err(Error::GridTooSmall { need: 3, got: n });
    }
    match family {
        SenderFamily::Uniform => analytic_sender(&|u| u, support, n, true),
        SenderFamily::UniformOn { lo, hi } => {
            if !(support.contains(*lo) && support.contains(*hi) && lo < hi) {
                return Err(Error::BadFamilyParameter {
                    family: "uniform-on",
                    reason: format!("need a_lo <= lo < hi <= a_hi, got [{lo}, {hi}]"),
                });
            }
            let (lo, hi) = (*lo, *hi);
            let w = support.width();
            let slo = support.lo();
            let f = move |u: f64| {
                let x = slo + u * w;
                ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
            };
            // Density vanishes outside [lo, hi], so no smooth flag.
            analytic_sender(&f, support, n, false)
        }
        SenderFamily::Power { k } => {
            if !(*k > 0.0) || !k.is_finite() {
                return Err(Error::BadFamilyParameter {
                    family: "power",
                    reason: format!("exponent must be positive, got {k}"),
                });
            }
            let k = *k;
            analytic_sender(&move |u| u.powf(k), support, n, true)
        }
        SenderFamily::Logistic { mu, s } => {
            check_logistic_params("logistic", *mu, *s)?;
            let (mu, s) = (*mu, *s);
            analytic_sender(&move |u| normalized_logistic(u, mu, s), support, n, true)
        }
        SenderFamily::ReverseLogistic { mu, s } => {
            check_logistic_params("reverse-logistic", *mu, *s)?;
            let (mu, s) = (*mu, *s);
            analytic_sender(
                &move |u| normalized_logistic_inverse(u, mu, s),
                support,
                n,
                true,
            )
        }
        SenderFamily::Table {
            value_at_lo,
            knots,
            normalize,
        } => {
            if knots.iter().any(|k| !k.0.is_finite() || !k.1.is_finite()) {
                return Err(Error::NonFinite {
                    context: "sender table",
                });
            }
            let mut value_at_lo = *value_at_lo;
            let mut knots = knots.clone();
            if *normalize {
                let last = knots.last().map(|k| k.1).unwrap_or(0.0);
                if last.abs() <= 1e-12 {
                    return Err(Error::DegenerateTransform { total: last });
                }
                for k in &mut knots {
                    k.1 /= last;
                }
                value_at_lo /= last;
            }
            SenderWeighting::from_knots(value_at_lo, &knots)
        }
    }
}

fn analytic_sender(
    f: &dyn Fn(f64) -> f64,
    support: QualitySupport,
    n: usize,
    smooth: bool,
) -> Result<SenderWeighting> {
    let knots = sample_unit_function(f, support, n);
    Ok(SenderWeighting::from_knots(0.0, &knots)?.with_smooth_density(smooth))
}

fn sample_unit_function(
    f: &dyn Fn(f64) -> f64,
    support: QualitySupport,
    n: usize,
) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let u = i as f64 / (n - 1) as f64;
            let x = if i == n - 1 {
                support.hi()
            } else {
                support.lo() + u * support.width()
            };
            (x, f(u))
        })
        .collect()
}

/// Linear interpolation over a sorted abscissa list, clamped at the ends.
/// Also used with (ps, xs) swapped to invert a cdf.
pub(crate) fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let last = xs.len() - 1;
    if x >= xs[last] {
        return ys[last];
    }
    // First knot strictly greater than x; the containing cell is [i-1, i].
    let i = xs.partition_point(|&k| k <= x);
    let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    ys[i - 1] + t * (ys[i] - ys[i - 1])
}

/// Sorted union of several sorted point lists, with exact duplicates removed.
pub(crate) fn union_sorted(lists: &[&[f64]]) -> Vec<f64> {
    let mut all: Vec<f64> = lists.iter().flat_map(|l| l.iter().copied()).collect();
    all.sort_by(|a, b| a.total_cmp(b));
    all.dedup();
    all
}
