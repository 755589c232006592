//! Grade design with costly learning.
//!
//! A school certifies learning levels to a market that pays ability plus a
//! per-unit value of learning. Students privately learn their ability after
//! enrolling; single crossing in the effort cost forces any incentive-
//! compatible learning schedule to be monotone, so the school effectively
//! chooses a monotone categorization of abilities. Tuition extraction
//! against the lowest-belief enrollee folds the learning incentives into a
//! distorted sender weighting, after which the categorization solver
//! applies unchanged. The weighting need not be a cdf: it can start
//! negative, or acquire an upward jump at the lowest ability, in which case
//! the bottom pool carries zero learning.

use serde::{Deserialize, Serialize};

use crate::priors::{union_sorted, QualitySupport, ReceiverCdf, SenderWeighting};
use crate::solver::{solve, Categorization};
use crate::tolerances::TOL_ENV;
use crate::valuation::PosteriorFunction;
use crate::{Error, Result};

/// Marginal effort cost per unit of learning, positive and nonincreasing in
/// ability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CostFunction {
    /// c(a) = 1/a. Unbounded at zero; usable on supports touching zero only
    /// when effort costs are not internalized (sigma = 0).
    Reciprocal,
    /// c(a) = intercept + slope * a with slope <= 0.
    Affine { intercept: f64, slope: f64 },
}

impl CostFunction {
    pub fn eval(&self, a: f64) -> f64 {
        match self {
            CostFunction::Reciprocal => 1.0 / a,
            CostFunction::Affine { intercept, slope } => intercept + slope * a,
        }
    }
}

/// Primitives of the schooling instance.
///
/// `f0` is the most pessimistic enrollee belief (pins down tuition), `r`
/// the market/population ability distribution, `lambda` the market value
/// per unit of learning, and `sigma` the share of effort costs internalized
/// when enrolling. Requires c(a_hi) > lambda: learning rewards alone move
/// nobody, so learning is motivated purely through signaling.
#[derive(Clone, Debug)]
pub struct SchoolingConfig {
    support: QualitySupport,
    f0: ReceiverCdf,
    r: ReceiverCdf,
    cost: CostFunction,
    lambda: f64,
    sigma: f64,
}

impl SchoolingConfig {
    pub fn new(
        f0: ReceiverCdf,
        r: ReceiverCdf,
        cost: CostFunction,
        lambda: f64,
        sigma: f64,
    ) -> Result<Self> {
        let support = f0.support();
        if r.support() != support {
            return Err(Error::SupportMismatch);
        }
        if !(0.0..=1.0).contains(&sigma) || !sigma.is_finite() {
            return Err(Error::BadConfig {
                what: format!("sigma must lie in [0, 1], got {sigma}"),
            });
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::BadConfig {
                what: format!("lambda must be nonnegative, got {lambda}"),
            });
        }
        match cost {
            CostFunction::Affine { intercept, slope } => {
                if slope > 0.0 {
                    return Err(Error::BadConfig {
                        what: format!("cost slope must be nonpositive, got {slope}"),
                    });
                }
                if intercept + slope * support.lo() <= 0.0 {
                    return Err(Error::BadConfig {
                        what: "cost must be positive on the support".into(),
                    });
                }
            }
            CostFunction::Reciprocal => {
                if support.lo() < 0.0 {
                    return Err(Error::BadConfig {
                        what: "reciprocal cost needs a nonnegative support".into(),
                    });
                }
                if support.lo() == 0.0 && sigma > 0.0 {
                    return Err(Error::BadConfig {
                        what: "reciprocal cost at zero ability is not integrable; \
                               truncate the support or set sigma = 0"
                            .into(),
                    });
                }
            }
        }
        let cost_at_hi = cost.eval(support.hi());
        if !(cost_at_hi > lambda) {
            return Err(Error::ConditionViolated { cost_at_hi, lambda });
        }
        Ok(Self {
            support,
            f0,
            r,
            cost,
            lambda,
            sigma,
        })
    }

    pub fn support(&self) -> QualitySupport {
        self.support
    }

    pub fn f0(&self) -> &ReceiverCdf {
        &self.f0
    }

    pub fn r(&self) -> &ReceiverCdf {
        &self.r
    }

    pub fn cost(&self) -> CostFunction {
        self.cost
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(
            self.f0.clone(),
            self.r.clone(),
            self.cost,
            lambda,
            self.sigma,
        )
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(
            self.f0.clone(),
            self.r.clone(),
            self.cost,
            self.lambda,
            sigma,
        )
    }

    /// sigma * ∫ c dF0, the internalized average cost the market value of
    /// learning is compared against.
    pub fn internalized_cost_mean(&self) -> f64 {
        if self.sigma == 0.0 {
            return 0.0;
        }
        let xs = self.f0.xs();
        let mut total = 0.0;
        for w in xs.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            total += self.cost.eval(mid) * self.f0.mass_between(w[0], w[1]);
        }
        self.sigma * total
    }

    /// Whether the lowest-belief enrollees value learning intrinsically on
    /// average, which forces the learning schedule to start as high as
    /// incentive compatibility allows. Exact ties resolve to the
    /// zero-learning branch.
    pub fn intrinsic_learning(&self) -> bool {
        self.lambda > self.internalized_cost_mean()
    }

    // Suffix cumulative of (sigma c - lambda) dF0 on the f0 knot grid:
    // entry i is the integral from knot i to the top.
    fn net_cost_suffix(&self) -> Vec<f64> {
        let xs = self.f0.xs();
        let n = xs.len();
        let mut suffix = vec![0.0; n];
        for i in (0..n - 1).rev() {
            let mid = 0.5 * (xs[i] + xs[i + 1]);
            let weight = if self.sigma == 0.0 {
                -self.lambda
            } else {
                self.sigma * self.cost.eval(mid) - self.lambda
            };
            suffix[i] = suffix[i + 1] + weight * self.f0.mass_between(xs[i], xs[i + 1]);
        }
        suffix
    }
}

/// Derives the sender weighting the school's tuition problem induces,
/// together with the additive constant that closes the payoff identity.
///
/// S(a) = F0(a) + [suffix integral of (sigma c - lambda) dF0] / (c(a) -
/// lambda) above the bottom. When learning has net intrinsic value the
/// weighting starts negative and stays continuous and the constant is
/// a_lo * S(a_lo); otherwise S(a_lo) = 0, the weighting jumps upward at the
/// bottom, and the constant vanishes.
pub fn induce_sender(cfg: &SchoolingConfig) -> (SenderWeighting, f64) {
    let xs = cfg.f0.xs();
    let ps = cfg.f0.ps();
    let suffix = cfg.net_cost_suffix();
    let total = suffix[0];
    let c_lo = cfg.cost.eval(cfg.support.lo());
    let denom_lo = c_lo - cfg.lambda;
    let start = if total.is_finite() && denom_lo.is_finite() {
        total / denom_lo
    } else {
        0.0
    };
    let (value_at_lo, constant) = if total < 0.0 {
        // Intrinsic-value branch: continuous, possibly negative start.
        (start, cfg.support.lo() * start)
    } else {
        (0.0, 0.0)
    };
    let mut knots = Vec::with_capacity(xs.len());
    knots.push((xs[0], if total < 0.0 { start } else { start.max(0.0) }));
    for i in 1..xs.len() {
        let denom = cfg.cost.eval(xs[i]) - cfg.lambda;
        knots.push((xs[i], ps[i] + suffix[i] / denom));
    }
    knots.last_mut().unwrap().1 = 1.0;
    let weighting = SenderWeighting::from_knots(value_at_lo, &knots)
        .expect("induced weighting satisfies the construction invariants");
    let smooth = cfg.f0.smooth_density() && weighting.jump_at_lo() <= 1e-12;
    (weighting.with_smooth_density(smooth), constant)
}

/// The learning schedule attached to a categorization: constant on pools,
/// slope 1/(c - lambda) on separating stretches, and upward jumps at the
/// thresholds between adjacent intervals sized to keep the marginal type
/// indifferent. Values are right-continuous.
#[derive(Clone, Debug, Serialize)]
pub struct LearningFunction {
    xs: Vec<f64>,
    vals: Vec<f64>,
    jump_sizes: Vec<f64>,
}

impl LearningFunction {
    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    /// Right-continuous values on the grid.
    pub fn vals(&self) -> &[f64] {
        &self.vals
    }

    pub fn start(&self) -> f64 {
        self.vals[0]
    }

    /// Jump locations and sizes, thresholds only.
    pub fn jumps(&self) -> Vec<(f64, f64)> {
        self.xs
            .iter()
            .zip(&self.jump_sizes)
            .filter(|(_, &j)| j > 0.0)
            .map(|(&x, &j)| (x, j))
            .collect()
    }

    pub fn eval(&self, a: f64) -> f64 {
        if a <= self.xs[0] {
            return self.vals[0];
        }
        let n = self.xs.len();
        if a >= self.xs[n - 1] {
            return self.vals[n - 1];
        }
        let i = self.xs.partition_point(|&x| x <= a);
        if self.xs[i - 1] == a {
            return self.vals[i - 1];
        }
        // Interpolate toward the left limit at the next grid point so a
        // threshold jump is not smeared across the cell.
        let left_limit = self.vals[i] - self.jump_sizes[i];
        let t = (a - self.xs[i - 1]) / (self.xs[i] - self.xs[i - 1]);
        self.vals[i - 1] + t * (left_limit - self.vals[i - 1])
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.vals.windows(2).all(|w| w[1] >= w[0] - 1e-12)
    }

    /// Copy with the value at the grid point nearest `at` bumped by
    /// `delta`. Used to demonstrate that the incentive checker catches
    /// broken schedules.
    pub fn with_bump(&self, at: f64, delta: f64) -> LearningFunction {
        let mut out = self.clone();
        let i = self
            .xs
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - at).abs().total_cmp(&(b.1 - at).abs()))
            .map(|(i, _)| i)
            .unwrap();
        out.vals[i] += delta;
        out
    }
}

/// The incentive-compatible starting level for a categorization whose
/// posterior at the bottom is `posterior_at_lo`: the highest feasible level
/// when learning is intrinsically valued, zero otherwise.
pub fn learning_start(cfg: &SchoolingConfig, posterior_at_lo: f64) -> f64 {
    if !cfg.intrinsic_learning() {
        return 0.0;
    }
    let denom = cfg.cost.eval(cfg.support.lo()) - cfg.lambda;
    let top = (posterior_at_lo - cfg.support.lo()) / denom;
    if top.is_finite() {
        top
    } else {
        0.0
    }
}

/// Builds the unique learning schedule for a categorization with the
/// starting level of [`learning_start`]: trapezoidal integration of
/// 1/(c - lambda) across separating cells, constants inside pools, and the
/// threshold jump (A(t) - A(t-)) / (c(t) - lambda) wherever the posterior
/// jumps, including at the separated top point.
pub fn build_learning(cat: &Categorization, cfg: &SchoolingConfig) -> Result<LearningFunction> {
    let pf = PosteriorFunction::new(cat, cfg.r());
    let edges: Vec<f64> = cat.pools().iter().flat_map(|&(p, q)| [p, q]).collect();
    let xs = union_sorted(&[cfg.f0.xs(), cfg.r.xs(), &edges]);
    let lambda = cfg.lambda;
    let n = xs.len();
    let mut vals = Vec::with_capacity(n);
    let mut jump_sizes = vec![0.0; n];
    vals.push(learning_start(cfg, pf.eval(cfg.support.lo())));
    for i in 0..n - 1 {
        let (x0, x1) = (xs[i], xs[i + 1]);
        let mut v = vals[i];
        // Left limit of the posterior at x1, approached from inside the cell.
        let a_left = match cat.pool_containing(0.5 * (x0 + x1)) {
            Some(idx) => pf.pool_means()[idx],
            None => {
                let g0 = 1.0 / (cfg.cost.eval(x0) - lambda);
                let g1 = 1.0 / (cfg.cost.eval(x1) - lambda);
                if !g1.is_finite() || g0 < 0.0 || g1 < 0.0 {
                    return Err(Error::ConditionViolated {
                        cost_at_hi: cfg.cost.eval(x1),
                        lambda,
                    });
                }
                // g0 is zero in the limit of an unbounded bottom cost.
                let g0 = if g0.is_finite() { g0 } else { 0.0 };
                v += 0.5 * (g0 + g1) * (x1 - x0);
                x1
            }
        };
        let a_right = pf.eval(x1);
        let diff = a_right - a_left;
        if diff.abs() > 1e-15 {
            let jump = diff / (cfg.cost.eval(x1) - lambda);
            jump_sizes[i + 1] = jump;
            v += jump;
        }
        vals.push(v);
    }
    Ok(LearningFunction {
        xs,
        vals,
        jump_sizes,
    })
}

/// School payoff evaluated directly from the primitives: the expected
/// posterior plus the net learning term under the lowest belief.
pub fn school_payoff(cat: &Categorization, ell: &LearningFunction, cfg: &SchoolingConfig) -> f64 {
    let pf = PosteriorFunction::new(cat, cfg.r());
    let mut total = 0.0;
    for w in ell.xs().windows(2) {
        let (x0, x1) = (w[0], w[1]);
        let mass = cfg.f0.mass_between(x0, x1);
        if mass == 0.0 {
            continue;
        }
        let mid = 0.5 * (x0 + x1);
        let a = match cat.pool_containing(mid) {
            Some(i) => pf.pool_means()[i],
            None => mid,
        };
        let l = ell.eval(mid);
        let net = if l == 0.0 {
            0.0
        } else {
            (cfg.lambda - cfg.sigma * cfg.cost.eval(mid)) * l
        };
        total += (a + net) * mass;
    }
    total
}

/// Worst incentive violation over sampled report pairs: positive means a
/// profitable deviation exists. Single crossing makes neighboring reports
/// the binding deviations, so every adjacent grid pair is checked
/// deterministically (thresholds included); `samples` random pairs guard
/// the long-range comparisons, and every type is held against the outside
/// option of claiming the bottom with zero learning.
pub fn verify_ic(
    ell: &LearningFunction,
    cat: &Categorization,
    cfg: &SchoolingConfig,
    samples: usize,
    seed: u64,
) -> f64 {
    use rand::Rng;
    use rand::SeedableRng;
    let pf = PosteriorFunction::new(cat, cfg.r());
    let xs = ell.xs();
    let n = xs.len();
    let payoff = |a: f64, report: f64| -> f64 {
        let l = ell.eval(report);
        let net = if l == 0.0 {
            0.0
        } else {
            (cfg.lambda - cfg.cost.eval(a)) * l
        };
        pf.eval(report) + net
    };
    let mut worst = f64::NEG_INFINITY;
    let mut check = |i: usize, j: usize| {
        let truth = payoff(xs[i], xs[i]);
        let mimic = payoff(xs[i], xs[j]);
        worst = worst.max(mimic - truth);
        worst = worst.max(cfg.support.lo() - truth);
    };
    for k in 0..n - 1 {
        check(k, k + 1);
        check(k + 1, k);
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        check(i, j);
    }
    worst
}

/// Sufficient condition for full pooling: the suffix integral of
/// (sigma c - lambda) dF0 stays nonnegative all the way down. Holds for
/// every lambda below, and every sigma above, a switching point.
pub fn check_school_full_pooling(cfg: &SchoolingConfig) -> crate::analysis::Margin {
    let suffix = cfg.net_cost_suffix();
    let worst = suffix.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    crate::analysis::Margin {
        holds: worst >= -TOL_ENV,
        worst_slack: worst,
    }
}

/// Sweep helper for the monotone comparative static in the learning value:
/// the full-pooling condition, as lambda varies with everything else fixed.
pub fn full_pooling_lambda_sweep(cfg: &SchoolingConfig, lambdas: &[f64]) -> Result<Vec<bool>> {
    lambdas
        .iter()
        .map(|&l| Ok(check_school_full_pooling(&cfg.with_lambda(l)?).holds))
        .collect()
}

/// Same sweep in the internalization share.
pub fn full_pooling_sigma_sweep(cfg: &SchoolingConfig, sigmas: &[f64]) -> Result<Vec<bool>> {
    sigmas
        .iter()
        .map(|&s| Ok(check_school_full_pooling(&cfg.with_sigma(s)?).holds))
        .collect()
}

/// A solved schooling instance.
#[derive(Clone, Debug)]
pub struct SchoolSolution {
    pub induced: SenderWeighting,
    /// Additive constant closing the payoff identity.
    pub constant: f64,
    pub categorization: Categorization,
    pub learning: LearningFunction,
    /// School payoff evaluated directly from the primitives.
    pub payoff: f64,
}

/// Induces the sender weighting, solves the categorization problem on a
/// uniform percentile grid with `m` cells, and backs out the learning
/// schedule and payoff.
pub fn solve_school(cfg: &SchoolingConfig, m: usize) -> Result<SchoolSolution> {
    let (induced, constant) = induce_sender(cfg);
    let (_, categorization) = solve(&induced, cfg.r(), m)?;
    let learning = build_learning(&categorization, cfg)?;
    let payoff = school_payoff(&categorization, &learning, cfg);
    Ok(SchoolSolution {
        induced,
        constant,
        categorization,
        learning,
        payoff,
    })
}

/// The closed-form weighting of the uniform-market example: F0(a) = a^gamma
/// and c(a) = 1/a with no cost internalization give S(a) = (a^gamma -
/// lambda a) / (1 - lambda a) on the unit interval, a cdf with a
/// concave-convex shape whose optimum censors the bottom.
pub fn closed_form_weighting(gamma: f64, lambda: f64, n: usize) -> Result<SenderWeighting> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::BadFamilyParameter {
            family: "censorship closed form",
            reason: format!("gamma must lie in (0, 1], got {gamma}"),
        });
    }
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::BadFamilyParameter {
            family: "censorship closed form",
            reason: format!("lambda must lie in [0, 1), got {lambda}"),
        });
    }
    if n < 3 {
        return Err(Error::GridTooSmall { need: 3, got: n });
    }
    let knots: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let a = i as f64 / (n - 1) as f64;
            (a, (a.powf(gamma) - lambda * a) / (1.0 - lambda * a))
        })
        .collect();
    Ok(SenderWeighting::from_knots(0.0, &knots)?.with_smooth_density(true))
}

/// The censorship threshold of a categorization: the left edge of the first
/// separating stretch. Full pooling reports the top of the support.
pub fn censorship_threshold(cat: &Categorization) -> f64 {
    let support = cat.support();
    match cat.pools().first() {
        Some(&(p, q)) if p <= support.lo() => {
            if q >= support.hi() {
                support.hi()
            } else {
                q
            }
        }
        _ => support.lo(),
    }
}

/// One cell of the censorship sweep.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub lambda: f64,
    pub a_tilde: f64,
    pub full_pooling: bool,
    pub payoff: f64,
}

/// Solves the closed-form family over a (gamma, lambda) grid. The payoff
/// column is the school payoff, which for this family equals the sender
/// value of the optimum (the identity constant vanishes at zero bottom
/// ability).
pub fn censorship_threshold_sweep(
    prior_n: usize,
    m: usize,
    gammas: &[f64],
    lambdas: &[f64],
) -> Result<Vec<SweepRow>> {
    let unit = QualitySupport::unit();
    let r = crate::priors::build_receiver(&crate::priors::ReceiverFamily::Uniform, unit, prior_n)?;
    let mut rows = Vec::with_capacity(gammas.len() * lambdas.len());
    for &gamma in gammas {
        for &lambda in lambdas {
            let s = closed_form_weighting(gamma, lambda, prior_n)?;
            let (_, cat) = solve(&s, &r, m)?;
            let payoff = crate::valuation::sender_value(
                &cat,
                &s,
                &r,
                crate::valuation::ValueMethod::Direct,
            )?;
            rows.push(SweepRow {
                gamma,
                lambda,
                a_tilde: censorship_threshold(&cat),
                full_pooling: cat.is_full_pooling(),
                payoff,
            });
        }
    }
    Ok(rows)
}
