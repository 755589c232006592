//! Evaluating categorizations: posterior means, the pool weighting, sender
//! value by three independent routes, and a brute-force oracle.
//!
//! All integrals are taken segment by segment over the union of the sender
//! knots, the receiver knots, and the pool edges. Every integrand in sight
//! is linear or constant on such segments, so midpoint and trapezoid sums
//! are exact for the piecewise-linear representation and the three value
//! routes agree to rounding.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::priors::{interp, union_sorted, ReceiverCdf, SenderWeighting};
use crate::solver::Categorization;
use crate::tolerances::{MAX_ORACLE_N, TIE_EPS};
use crate::{Error, Result};

/// The map from quality to the receiver's posterior mean: the conditional
/// mean under the receiver prior inside each pool, the quality itself
/// elsewhere. Nondecreasing, right-continuous.
#[derive(Clone, Debug)]
pub struct PosteriorFunction {
    cat: Categorization,
    pool_means: Vec<f64>,
}

impl PosteriorFunction {
    pub fn new(cat: &Categorization, r: &ReceiverCdf) -> Self {
        let pool_means = cat
            .pools()
            .iter()
            .map(|&(p, q)| r.mean_between(p, q))
            .collect();
        Self {
            cat: cat.clone(),
            pool_means,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.cat.pool_containing(x) {
            Some(i) => self.pool_means[i],
            None => x,
        }
    }

    pub fn pool_means(&self) -> &[f64] {
        &self.pool_means
    }

    pub fn categorization(&self) -> &Categorization {
        &self.cat
    }
}

/// Posterior mean of a single quality under a categorization.
pub fn posterior_mean(cat: &Categorization, r: &ReceiverCdf, x: f64) -> Result<f64> {
    if !cat.support().contains(x) {
        return Err(Error::OutOfSupport { x });
    }
    Ok(PosteriorFunction::new(cat, r).eval(x))
}

/// The weighting attached to a categorization: equal to the sender
/// weighting on separating regions and affine in the receiver mass across
/// each pool. Left-continuous; inherits the sender's bottom jump only when
/// the bottom quality is separated.
#[derive(Clone, Debug)]
pub struct Weighting {
    xs: Vec<f64>,
    vs: Vec<f64>,
    value_at_lo: f64,
    jump_at_lo: f64,
}

impl Weighting {
    /// Value with the left-continuous convention; at the lower endpoint
    /// this is the value below any jump.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            self.value_at_lo
        } else {
            interp(&self.xs, &self.vs, x)
        }
    }

    pub fn value_at_lo(&self) -> f64 {
        self.value_at_lo
    }

    pub fn jump_at_lo(&self) -> f64 {
        self.jump_at_lo
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    /// Right-limit values on the grid; `vs()[0]` sits just above the jump.
    pub fn vs(&self) -> &[f64] {
        &self.vs
    }
}

/// Builds the weighting for a categorization.
pub fn weighting_psi(
    cat: &Categorization,
    s: &SenderWeighting,
    r: &ReceiverCdf,
) -> Result<Weighting> {
    if s.support() != r.support() {
        return Err(Error::SupportMismatch);
    }
    let edges: Vec<f64> = cat.pools().iter().flat_map(|&(p, q)| [p, q]).collect();
    let xs = union_sorted(&[s.xs(), r.xs(), &edges]);
    let hi = s.support().hi();
    let mut vs = Vec::with_capacity(xs.len());
    for &x in &xs {
        let v = match cat.pool_containing(x) {
            Some(i) => {
                let (p, q) = cat.pools()[i];
                let sp = s.eval(p);
                let sq = if q >= hi { 1.0 } else { s.eval(q) };
                let (rp, rq) = (r.eval(p), r.eval(q));
                sp + (r.eval(x) - rp) * (sq - sp) / (rq - rp)
            }
            None => s.eval_upper(x),
        };
        vs.push(v);
    }
    let jump_at_lo = if cat.pool_containing(s.support().lo()).is_some() {
        0.0
    } else {
        s.jump_at_lo()
    };
    Ok(Weighting {
        xs,
        vs,
        value_at_lo: s.value_at_lo(),
        jump_at_lo,
    })
}

/// The three routes to the sender's value of a categorization. They agree
/// to rounding; disagreement flags an implementation defect, which is why
/// all three are kept.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValueMethod {
    /// Expected posterior mean under the sender measure: sum of
    /// A(midpoint) dS over cells plus the bottom atom.
    Direct,
    /// First moment of the pool weighting.
    Psi,
    /// Integration by parts: -(1 - S(a_lo)) a_lo + integral of (1 - psi).
    Ibp,
}

pub fn sender_value(
    cat: &Categorization,
    s: &SenderWeighting,
    r: &ReceiverCdf,
    method: ValueMethod,
) -> Result<f64> {
    match method {
        ValueMethod::Direct => direct_value(cat, s, r),
        ValueMethod::Psi => {
            let w = weighting_psi(cat, s, r)?;
            Ok(psi_moment(&w, s.support().lo()))
        }
        ValueMethod::Ibp => {
            let w = weighting_psi(cat, s, r)?;
            Ok(ibp_value(&w, s))
        }
    }
}

/// All three routes at once.
pub fn sender_value_all(
    cat: &Categorization,
    s: &SenderWeighting,
    r: &ReceiverCdf,
) -> Result<[f64; 3]> {
    Ok([
        sender_value(cat, s, r, ValueMethod::Direct)?,
        sender_value(cat, s, r, ValueMethod::Psi)?,
        sender_value(cat, s, r, ValueMethod::Ibp)?,
    ])
}

fn direct_value(cat: &Categorization, s: &SenderWeighting, r: &ReceiverCdf) -> Result<f64> {
    if s.support() != r.support() {
        return Err(Error::SupportMismatch);
    }
    let pf = PosteriorFunction::new(cat, r);
    let edges: Vec<f64> = cat.pools().iter().flat_map(|&(p, q)| [p, q]).collect();
    let xs = union_sorted(&[s.xs(), &edges]);
    let mut total = 0.0;
    for w in xs.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        let mid = 0.5 * (x0 + x1);
        let a = match cat.pool_containing(mid) {
            Some(i) => pf.pool_means()[i],
            None => mid,
        };
        total += a * (s.eval_upper(x1) - s.eval_upper(x0));
    }
    total += pf.eval(s.support().lo()) * s.jump_at_lo();
    Ok(total)
}

// ∫ x dΨ; the atom at the bottom contributes a_lo times the jump.
fn psi_moment(w: &Weighting, lo: f64) -> f64 {
    let mut total = lo * w.jump_at_lo;
    for (x, v) in w.xs.windows(2).zip(w.vs.windows(2)) {
        total += 0.5 * (x[0] + x[1]) * (v[1] - v[0]);
    }
    total
}

fn ibp_value(w: &Weighting, s: &SenderWeighting) -> f64 {
    let lo = s.support().lo();
    let mut integral = 0.0;
    for (x, v) in w.xs.windows(2).zip(w.vs.windows(2)) {
        integral += (1.0 - 0.5 * (v[0] + v[1])) * (x[1] - x[0]);
    }
    -(1.0 - s.value_at_lo()) * lo + integral
}

/// Exact optimum of the `n`-cell discretized problem by dynamic programming
/// over breakpoints. Cells are atomic: a separated cell reveals its
/// midpoint, a pooled run pays its conditional mean under the receiver
/// prior times its (signed) sender mass, and the bottom atom follows the
/// first block. Value ties prefer fewer pools. O(n^2) after prefix sums.
pub fn dp_oracle(s: &SenderWeighting, r: &ReceiverCdf, n: usize) -> Result<(f64, Categorization)> {
    if n > MAX_ORACLE_N {
        return Err(Error::OracleGridTooLarge {
            n,
            max: MAX_ORACLE_N,
        });
    }
    if n < 2 {
        return Err(Error::GridTooSmall { need: 2, got: n });
    }
    if s.support() != r.support() {
        return Err(Error::SupportMismatch);
    }
    let support = s.support();
    let (lo, hi) = (support.lo(), support.hi());
    let dx = support.width() / n as f64;
    let xs: Vec<f64> = (0..=n)
        .map(|i| if i == n { hi } else { lo + i as f64 * dx })
        .collect();
    let r_vals: Vec<f64> = xs.iter().map(|&x| r.eval(x)).collect();
    let s_vals: Vec<f64> = xs.iter().map(|&x| s.eval_upper(x)).collect();
    // Prefix moments: sum over cells of midpoint times receiver cell mass.
    let mut moment = vec![0.0; n + 1];
    for i in 0..n {
        moment[i + 1] = moment[i] + 0.5 * (xs[i] + xs[i + 1]) * (r_vals[i + 1] - r_vals[i]);
    }
    let jump = s.jump_at_lo();

    let mut val = vec![0.0; n + 1];
    let mut pool_count = vec![0usize; n + 1];
    let mut parent = vec![0usize; n + 1];
    for j in 1..=n {
        let mut best = f64::NEG_INFINITY;
        let mut best_i = 0;
        let mut best_pools = usize::MAX;
        for i in 0..j {
            let mean = (moment[j] - moment[i]) / (r_vals[j] - r_vals[i]);
            let mut seg = mean * (s_vals[j] - s_vals[i]);
            if i == 0 {
                seg += mean * jump;
            }
            let cand = val[i] + seg;
            let cand_pools = pool_count[i] + usize::from(j - i >= 2);
            if cand > best + TIE_EPS || (cand > best - TIE_EPS && cand_pools < best_pools) {
                best = cand;
                best_i = i;
                best_pools = cand_pools;
            }
        }
        val[j] = best;
        parent[j] = best_i;
        pool_count[j] = best_pools;
    }

    let mut pools = Vec::new();
    let mut j = n;
    while j > 0 {
        let i = parent[j];
        if j - i >= 2 {
            pools.push((xs[i], xs[j]));
        }
        j = i;
    }
    pools.reverse();
    Ok((val[n], Categorization::new(r, pools)?))
}

/// Seeded random monotone categorization for adversarial checks: the pool
/// count is uniform on `0..=max_pools` and the edges are distinct receiver
/// knots, so sampled pools are always sorted and disjoint.
pub fn random_categorization(r: &ReceiverCdf, seed: u64, max_pools: usize) -> Categorization {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs = r.xs();
    let feasible = xs.len() / 2;
    let count = rng.random_range(0..=max_pools.min(feasible));
    if count == 0 {
        return Categorization::full_separation(r);
    }
    let mut idx = rand::seq::index::sample(&mut rng, xs.len(), 2 * count).into_vec();
    idx.sort_unstable();
    let pools = idx.chunks(2).map(|c| (xs[c[0]], xs[c[1]])).collect();
    Categorization::new(r, pools).expect("sampled knots are sorted and distinct")
}
