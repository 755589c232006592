//! Transforms that induce a sender weighting from common-prior primitives.
//!
//! Each transform rescales the sender measure cell by cell (weights are
//! evaluated at cell midpoints, second-order accurate for smooth weights)
//! and then renormalizes the whole function, left-endpoint value included,
//! so that the weighting again equals 1 at the top of the support.

use super::{ReceiverCdf, SenderWeighting};
use crate::{Error, Result};

/// Reweights dS by a state-dependent factor: dS'(a) = alpha(a) dS(a),
/// renormalized. The identity weight returns the input unchanged.
pub fn transform_state_dependent<F>(s: &SenderWeighting, alpha: F) -> Result<SenderWeighting>
where
    F: Fn(f64) -> f64,
{
    let measure = s.to_measure();
    let scaled_atom = measure.atom_at_lo * alpha(s.support().lo());
    let scaled: Vec<f64> = measure
        .cell_masses
        .iter()
        .zip(measure.grid.windows(2))
        .map(|(m, w)| m * alpha(0.5 * (w[0] + w[1])))
        .collect();
    let total = s.value_at_lo() + scaled_atom + scaled.iter().sum::<f64>();
    if !total.is_finite() {
        return Err(Error::NonFinite {
            context: "transformed weighting",
        });
    }
    if total <= 1e-12 {
        return Err(Error::DegenerateTransform { total });
    }
    let value_at_lo = s.value_at_lo() / total;
    let mut knots = Vec::with_capacity(measure.grid.len());
    let mut v = (s.value_at_lo() + scaled_atom) / total;
    knots.push((measure.grid[0], v));
    for (mass, x) in scaled.iter().zip(measure.grid.iter().skip(1)) {
        v += mass / total;
        knots.push((*x, v));
    }
    let last = knots.last_mut().unwrap();
    debug_assert!((last.1 - 1.0).abs() < 1e-9);
    last.1 = 1.0;
    Ok(SenderWeighting::from_knots(value_at_lo, &knots)?.with_smooth_density(s.smooth_density()))
}

/// Intermediated sale with a per-prospect fee: dS(v) = pi(v) dR(v),
/// renormalized. `pi` should be nonnegative.
pub fn transform_retail<F>(r: &ReceiverCdf, pi: F) -> Result<SenderWeighting>
where
    F: Fn(f64) -> f64,
{
    transform_state_dependent(&r.as_weighting(), pi)
}

/// Track design with peer effects: dS(a) = lambda2(a) dR(a). Same code path
/// as the state-dependent transform applied to the receiver prior.
pub fn transform_peer_effects<F>(r: &ReceiverCdf, lambda2: F) -> Result<SenderWeighting>
where
    F: Fn(f64) -> f64,
{
    transform_state_dependent(&r.as_weighting(), lambda2)
}

/// Quadratic payoff in the posterior mean under a common prior, folded into
/// a linear instance: dS(x) = [lambda1(x) + lambda2 * x] dR(x).
pub fn transform_quadratic<F>(r: &ReceiverCdf, lambda1: F, lambda2: f64) -> Result<SenderWeighting>
where
    F: Fn(f64) -> f64,
{
    transform_state_dependent(&r.as_weighting(), |x| lambda1(x) + lambda2 * x)
}

/// Group-weighted disclosure: the sender weighting is the w-weighted mixture
/// of the group score distributions, the receiver prior their plain mixture.
/// Every group must be a cdf on the common support.
pub fn transform_group_mixture(
    groups: &[(f64, SenderWeighting)],
) -> Result<(SenderWeighting, ReceiverCdf)> {
    let Some((_, first)) = groups.first() else {
        return Err(Error::BadConfig {
            what: "group mixture needs at least one group".into(),
        });
    };
    let support = first.support();
    let mut weight_total = 0.0;
    for (w, g) in groups {
        if g.support() != support {
            return Err(Error::SupportMismatch);
        }
        if !g.is_cdf() {
            return Err(Error::NotACdf {
                context: "a mixture group is not a cdf",
            });
        }
        if !(*w >= 0.0) {
            return Err(Error::BadConfig {
                what: format!("group weight must be nonnegative, got {w}"),
            });
        }
        weight_total += w;
    }
    if weight_total <= 0.0 {
        return Err(Error::DegenerateTransform {
            total: weight_total,
        });
    }
    let grid = super::union_sorted(&groups.iter().map(|(_, g)| g.xs()).collect::<Vec<_>>());
    let count = groups.len() as f64;
    let mut s_knots = Vec::with_capacity(grid.len());
    let mut r_knots = Vec::with_capacity(grid.len());
    for &x in &grid {
        let mut s_val = 0.0;
        let mut r_val = 0.0;
        for (w, g) in groups {
            let v = g.eval_upper(x);
            s_val += w * v;
            r_val += v;
        }
        s_knots.push((x, s_val / weight_total));
        r_knots.push((x, r_val / count));
    }
    let sender = SenderWeighting::from_knots(0.0, &s_knots)?;
    let receiver = ReceiverCdf::from_table(&r_knots)?;
    Ok((sender, receiver))
}
