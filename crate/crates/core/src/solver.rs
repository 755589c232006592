//! Percentile curve, lower convex envelope, and categorization extraction.
//!
//! The sender's problem is solved in percentile space: sample the sender
//! mass at each receiver percentile, chalk out the lower convex envelope of
//! the sampled points with a monotone hull sweep, and pool exactly where
//! the envelope runs strictly below the curve. Each chord of the hull is
//! one pooling interval; where the envelope touches the curve the sender
//! reveals qualities exactly.

use serde::Serialize;

use crate::priors::{QualitySupport, ReceiverCdf, SenderWeighting};
use crate::tolerances::TOL_ENV;
use crate::{Error, Result};

/// Sender mass as a function of the receiver percentile, together with its
/// lower convex envelope once computed.
///
/// `h[0]` anchors the curve at the sender's left-endpoint value, below any
/// jump; the first interior sample reflects the right limit instead, so a
/// discontinuity at the bottom shows up as a steep initial rise that the
/// hull bridges with an initial pool.
#[derive(Clone, Debug)]
pub struct PercentileCurve {
    z: Vec<f64>,
    h: Vec<f64>,
    env: Vec<f64>,
    pooled: Vec<bool>,
    vertices: Vec<usize>,
}

impl PercentileCurve {
    /// Builds a curve from raw `(z, h)` samples; mainly useful in tests.
    pub fn from_samples(z: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        if z.len() != h.len() || z.len() < 3 {
            return Err(Error::GridTooSmall {
                need: 3,
                got: z.len().min(h.len()),
            });
        }
        for i in 0..z.len() - 1 {
            if z[i + 1] <= z[i] {
                return Err(Error::TableNotIncreasing {
                    context: "percentile grid",
                    index: i + 1,
                });
            }
        }
        Ok(Self {
            z,
            h,
            env: Vec::new(),
            pooled: Vec::new(),
            vertices: Vec::new(),
        })
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    /// Envelope values; empty until [`lower_convex_envelope`] has run.
    pub fn env(&self) -> &[f64] {
        &self.env
    }

    /// Per-cell pooling flags (cell k spans `[z[k], z[k+1]]`).
    pub fn pooled(&self) -> &[bool] {
        &self.pooled
    }

    /// Indices of the hull vertices, where the envelope touches the curve.
    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn is_enveloped(&self) -> bool {
        !self.env.is_empty()
    }

    /// Whether grid point `k` lies inside a pool. Pools are closed on the
    /// left and open on the right, so the point belongs iff its own cell
    /// is pooled.
    pub fn point_pooled(&self, k: usize) -> bool {
        k < self.pooled.len() && self.pooled[k]
    }

    /// Stretches where the curve itself is affine and sits on the envelope:
    /// pooling and separating are value-equivalent there.
    pub fn affine_stretches(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for w in self.vertices.windows(2) {
            let (i, j) = (w[0], w[1]);
            if j > i + 1 && !self.pooled[i] {
                out.push((self.z[i], self.z[j]));
            }
        }
        out
    }

    /// Whether the whole curve is affine within the envelope tolerance, the
    /// degenerate case where every categorization is value-equivalent.
    pub fn globally_affine(&self) -> bool {
        let (z0, zn) = (self.z[0], *self.z.last().unwrap());
        let (h0, hn) = (self.h[0], *self.h.last().unwrap());
        let slope = (hn - h0) / (zn - z0);
        self.z
            .iter()
            .zip(&self.h)
            .all(|(&z, &h)| (h - (h0 + slope * (z - z0))).abs() <= TOL_ENV)
    }
}

/// Samples H = S(R^{-1}(z)) on a uniform percentile grid with `m` cells.
/// The first sample is the sender's left-endpoint value exactly.
pub fn compose_h(s: &SenderWeighting, r: &ReceiverCdf, m: usize) -> Result<PercentileCurve> {
    if s.support() != r.support() {
        return Err(Error::SupportMismatch);
    }
    if m < 3 {
        return Err(Error::GridTooSmall { need: 3, got: m });
    }
    let mut z = Vec::with_capacity(m + 1);
    let mut h = Vec::with_capacity(m + 1);
    z.push(0.0);
    h.push(s.value_at_lo());
    for k in 1..m {
        let zk = k as f64 / m as f64;
        z.push(zk);
        h.push(s.eval_upper(r.quantile(zk)));
    }
    z.push(1.0);
    h.push(1.0);
    PercentileCurve::from_samples(z, h)
}

/// Samples H at the percentile images of every sender and receiver knot, an
/// exact representation when both priors are piecewise linear. Used where
/// tight value or dominance comparisons matter more than a uniform grid.
pub fn compose_h_exact(s: &SenderWeighting, r: &ReceiverCdf) -> Result<PercentileCurve> {
    if s.support() != r.support() {
        return Err(Error::SupportMismatch);
    }
    let grid = crate::priors::union_sorted(&[r.xs(), s.xs()]);
    let mut z = vec![0.0];
    let mut h = vec![s.value_at_lo()];
    for &x in grid.iter().skip(1) {
        let zx = r.eval(x);
        if zx <= *z.last().unwrap() {
            continue;
        }
        z.push(zx);
        h.push(s.eval_upper(x));
    }
    *h.last_mut().unwrap() = 1.0;
    PercentileCurve::from_samples(z, h)
}

fn cross(z: &[f64], h: &[f64], o: usize, a: usize, b: usize) -> f64 {
    (z[a] - z[o]) * (h[b] - h[o]) - (h[a] - h[o]) * (z[b] - z[o])
}

/// Computes the lower convex envelope of the sampled curve by a single
/// monotone hull sweep, fills in per-cell pooling flags, and records the
/// hull vertices. Collinear interior points are pruned, so an affine
/// stretch of the curve becomes a single hull segment.
pub fn lower_convex_envelope(mut curve: PercentileCurve) -> PercentileCurve {
    let z = &curve.z;
    let h = &curve.h;
    let n = z.len();
    let mut hull: Vec<usize> = Vec::with_capacity(n);
    for k in 0..n {
        while hull.len() >= 2 && cross(z, h, hull[hull.len() - 2], hull[hull.len() - 1], k) <= 0.0 {
            hull.pop();
        }
        hull.push(k);
    }

    let mut env = vec![0.0; n];
    let mut pooled = vec![false; n - 1];
    for w in hull.windows(2) {
        let (i, j) = (w[0], w[1]);
        let slope = (h[j] - h[i]) / (z[j] - z[i]);
        env[i] = h[i];
        for k in i + 1..j {
            env[k] = h[i] + slope * (z[k] - z[i]);
        }
        let strictly_below = (i + 1..j).any(|k| h[k] - env[k] > TOL_ENV);
        if strictly_below {
            for cell in pooled.iter_mut().take(j).skip(i) {
                *cell = true;
            }
        }
    }
    env[n - 1] = h[n - 1];

    curve.env = env;
    curve.pooled = pooled;
    curve.vertices = hull;
    curve
}

/// Ordered disjoint pooling intervals `[p, p')` in quality space with their
/// percentile images. Everything outside the pools is separated, and the
/// top of the support is always separated.
#[derive(Clone, Debug, Serialize)]
pub struct Categorization {
    support: QualitySupport,
    pools: Vec<(f64, f64)>,
    percentile_pools: Vec<(f64, f64)>,
}

impl Categorization {
    /// Validates and builds a categorization from quality pools; percentile
    /// images are computed against the receiver prior.
    pub fn new(r: &ReceiverCdf, pools: Vec<(f64, f64)>) -> Result<Self> {
        let support = r.support();
        let mut prev = support.lo();
        for &(p, q) in &pools {
            if !(p >= prev && q <= support.hi() && q > p) {
                return Err(Error::DegenerateInterval { lo: p, hi: q });
            }
            prev = q;
        }
        let percentile_pools = pools.iter().map(|&(p, q)| (r.eval(p), r.eval(q))).collect();
        Ok(Self {
            support,
            pools,
            percentile_pools,
        })
    }

    pub fn full_separation(r: &ReceiverCdf) -> Self {
        Self {
            support: r.support(),
            pools: Vec::new(),
            percentile_pools: Vec::new(),
        }
    }

    pub fn full_pooling(r: &ReceiverCdf) -> Self {
        let support = r.support();
        Self {
            support,
            pools: vec![(support.lo(), support.hi())],
            percentile_pools: vec![(0.0, 1.0)],
        }
    }

    pub fn support(&self) -> QualitySupport {
        self.support
    }

    pub fn pools(&self) -> &[(f64, f64)] {
        &self.pools
    }

    pub fn percentile_pools(&self) -> &[(f64, f64)] {
        &self.percentile_pools
    }

    pub fn is_full_separation(&self) -> bool {
        self.pools.is_empty()
    }

    pub fn is_full_pooling(&self) -> bool {
        self.pools.len() == 1
            && self.pools[0].0 <= self.support.lo()
            && self.pools[0].1 >= self.support.hi()
    }

    /// Index of the pool containing `x`, honoring the closed-left,
    /// open-right convention. The top of the support is never pooled.
    pub fn pool_containing(&self, x: f64) -> Option<usize> {
        if x >= self.support.hi() {
            return None;
        }
        let i = self.pools.partition_point(|&(p, _)| p <= x);
        if i == 0 {
            return None;
        }
        let (p, q) = self.pools[i - 1];
        (x >= p && x < q).then_some(i - 1)
    }

    /// Total quality width covered by pools.
    pub fn pooled_width(&self) -> f64 {
        self.pools.iter().map(|(p, q)| q - p).sum()
    }
}

/// Reads the optimal categorization off an enveloped curve: every hull
/// chord that runs strictly below the curve becomes one pooling interval.
/// Two chords meeting at a vertex yield two pools sharing a boundary, with
/// the shared point itself a hull contact and hence separated.
pub fn extract_categorization(curve: &PercentileCurve, r: &ReceiverCdf) -> Result<Categorization> {
    assert!(
        curve.is_enveloped(),
        "envelope must be computed before extraction"
    );
    let mut pools = Vec::new();
    for w in curve.vertices.windows(2) {
        let (i, j) = (w[0], w[1]);
        if j > i + 1 && curve.pooled[i] {
            let lo = if i == 0 {
                r.support().lo()
            } else {
                r.quantile(curve.z[i])
            };
            let hi = if j == curve.z.len() - 1 {
                r.support().hi()
            } else {
                r.quantile(curve.z[j])
            };
            pools.push((lo, hi));
        }
    }
    Categorization::new(r, pools)
}

/// Solves an instance end to end on a uniform percentile grid.
pub fn solve(
    s: &SenderWeighting,
    r: &ReceiverCdf,
    m: usize,
) -> Result<(PercentileCurve, Categorization)> {
    let curve = lower_convex_envelope(compose_h(s, r, m)?);
    let cat = extract_categorization(&curve, r)?;
    Ok((curve, cat))
}

/// Same pipeline on the exact knot-image grid.
pub fn solve_exact(
    s: &SenderWeighting,
    r: &ReceiverCdf,
) -> Result<(PercentileCurve, Categorization)> {
    let curve = lower_convex_envelope(compose_h_exact(s, r)?);
    let cat = extract_categorization(&curve, r)?;
    Ok((curve, cat))
}

/// Exchanges the priors: the receiver prior becomes the sender weighting
/// and the sender weighting becomes the receiver prior. Defined only when
/// the weighting is a continuous, strictly increasing cdf.
pub fn flip_problem(
    s: &SenderWeighting,
    r: &ReceiverCdf,
) -> Result<(SenderWeighting, ReceiverCdf)> {
    if s.jump_at_lo() > 1e-12 {
        return Err(Error::FlipUndefined {
            reason: "sender weighting jumps at the lower endpoint",
        });
    }
    if s.value_at_lo().abs() > 1e-9 {
        return Err(Error::FlipUndefined {
            reason: "sender weighting does not start at zero",
        });
    }
    if !s.is_strictly_increasing() {
        return Err(Error::FlipUndefined {
            reason: "sender weighting is not strictly increasing",
        });
    }
    let mut knots: Vec<(f64, f64)> = s.xs().iter().copied().zip(s.vs().iter().copied()).collect();
    knots[0].1 = 0.0;
    let new_receiver = ReceiverCdf::from_table(&knots)?.with_smooth_density(s.smooth_density());
    let new_sender = r.as_weighting();
    Ok((new_sender, new_receiver))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::{build_receiver, build_sender, ReceiverFamily, SenderFamily};

    fn unit() -> QualitySupport {
        QualitySupport::unit()
    }

    fn intro_instance(eps: f64, n: usize) -> (SenderWeighting, ReceiverCdf) {
        let r = build_receiver(&ReceiverFamily::Uniform, unit(), n).unwrap();
        let s = build_sender(
            &SenderFamily::UniformOn {
                lo: 0.75 - eps,
                hi: 0.75 + eps,
            },
            unit(),
            n,
        )
        .unwrap();
        (s, r)
    }

    #[test]
    fn identical_priors_compose_to_identity() {
        let r = build_receiver(&ReceiverFamily::Power { k: 2.0 }, unit(), 501).unwrap();
        let s = r.as_weighting();
        let curve = compose_h(&s, &r, 400).unwrap();
        for (z, h) in curve.z().iter().zip(curve.h()) {
            assert!((z - h).abs() < 1e-9);
        }
    }

    #[test]
    fn intro_curve_has_the_step_shape() {
        let (s, r) = intro_instance(0.05, 1001);
        let curve = compose_h(&s, &r, 1000).unwrap();
        let at = |z: f64| {
            let k = (z * 1000.0).round() as usize;
            curve.h()[k]
        };
        assert!((at(0.75) - 0.5).abs() < 1e-9);
        assert!(at(0.5).abs() < 1e-12);
        assert!((at(0.85) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn square_root_composition() {
        let r = build_receiver(&ReceiverFamily::Power { k: 2.0 }, unit(), 2001).unwrap();
        let s = build_sender(&SenderFamily::Uniform, unit(), 2001).unwrap();
        let curve = compose_h(&s, &r, 1000).unwrap();
        for k in [100usize, 250, 500, 900] {
            let z = curve.z()[k];
            assert!((curve.h()[k] - z.sqrt()).abs() < 1e-6, "z={z}");
        }
    }

    #[test]
    fn support_mismatch_is_an_error() {
        let r = build_receiver(&ReceiverFamily::Uniform, unit(), 101).unwrap();
        let sup = QualitySupport::new(0.0, 2.0).unwrap();
        let s = build_sender(&SenderFamily::Uniform, sup, 101).unwrap();
        assert!(matches!(
            compose_h(&s, &r, 100),
            Err(Error::SupportMismatch)
        ));
    }

    #[test]
    fn convex_curve_is_its_own_envelope() {
        let z: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
        let h: Vec<f64> = z.iter().map(|z| z * z).collect();
        let curve = lower_convex_envelope(PercentileCurve::from_samples(z, h).unwrap());
        for (h, e) in curve.h().iter().zip(curve.env()) {
            assert!((h - e).abs() < 1e-12);
        }
        assert!(curve.pooled().iter().all(|p| !p));
    }

    #[test]
    fn concave_curve_envelope_is_the_chord() {
        let z: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
        let h: Vec<f64> = z.iter().map(|z| z.sqrt()).collect();
        let curve = lower_convex_envelope(PercentileCurve::from_samples(z.clone(), h).unwrap());
        for (z, e) in z.iter().zip(curve.env()) {
            assert!((z - e).abs() < 1e-12);
        }
        assert!(curve.pooled().iter().all(|p| *p));
        assert_eq!(curve.vertices(), &[0, 100]);
    }

    #[test]
    fn intro_envelope_hull_vertices() {
        let (s, r) = intro_instance(0.05, 1001);
        let curve = lower_convex_envelope(compose_h(&s, &r, 1000).unwrap());
        // Hull touches at z = 0, z = 0.7, z = 1; the point (0.8, 1) sits
        // above the chord, whose value there is 1/3.
        assert_eq!(curve.vertices(), &[0, 700, 1000]);
        let env_08 = curve.env()[800];
        assert!((env_08 - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn envelope_is_idempotent() {
        let (s, r) = intro_instance(0.05, 1001);
        let first = lower_convex_envelope(compose_h(&s, &r, 500).unwrap());
        let again = lower_convex_envelope(
            PercentileCurve::from_samples(first.z().to_vec(), first.env().to_vec()).unwrap(),
        );
        for (a, b) in first.env().iter().zip(again.env()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(again.pooled().iter().all(|p| !p));
    }

    #[test]
    fn identical_priors_extract_no_pools() {
        let r = build_receiver(&ReceiverFamily::Uniform, unit(), 501).unwrap();
        let s = r.as_weighting();
        let (curve, cat) = solve(&s, &r, 400).unwrap();
        assert!(cat.is_full_separation());
        assert!(curve.globally_affine());
    }

    #[test]
    fn intro_extracts_single_terminal_pool() {
        let (s, r) = intro_instance(0.05, 1001);
        let (_, cat) = solve(&s, &r, 1000).unwrap();
        assert_eq!(cat.pools().len(), 1);
        let (p, q) = cat.pools()[0];
        assert!((p - 0.7).abs() < 1e-9);
        assert!((q - 1.0).abs() < 1e-9);
        let (zp, zq) = cat.percentile_pools()[0];
        assert!((zp - 0.7).abs() < 1e-9 && (zq - 1.0).abs() < 1e-9);
    }

    #[test]
    fn concave_h_extracts_full_pooling() {
        let r = build_receiver(&ReceiverFamily::Power { k: 2.0 }, unit(), 1001).unwrap();
        let s = build_sender(&SenderFamily::Uniform, unit(), 1001).unwrap();
        let (_, cat) = solve(&s, &r, 800).unwrap();
        assert!(cat.is_full_pooling());
    }

    #[test]
    fn bottom_jump_produces_initial_pool() {
        // Weighting with an atom at the bottom; the envelope bridges the
        // initial rise, pooling from the lower endpoint.
        let mut knots: Vec<(f64, f64)> = (0..=1000)
            .map(|i| {
                let x = i as f64 / 1000.0;
                (x, 0.3 + 0.7 * x)
            })
            .collect();
        knots.last_mut().unwrap().1 = 1.0;
        let s = SenderWeighting::from_knots(0.0, &knots).unwrap();
        assert!((s.jump_at_lo() - 0.3).abs() < 1e-12);
        let r = build_receiver(&ReceiverFamily::Uniform, unit(), 1001).unwrap();
        let (_, cat) = solve(&s, &r, 2000).unwrap();
        assert!(!cat.pools().is_empty());
        assert_eq!(cat.pools()[0].0, 0.0);
    }

    #[test]
    fn exact_compose_matches_uniform_on_smooth_instance() {
        let r = build_receiver(&ReceiverFamily::Power { k: 2.0 }, unit(), 1001).unwrap();
        let s = build_sender(&SenderFamily::Logistic { mu: 0.5, s: 0.1 }, unit(), 1001).unwrap();
        let exact = lower_convex_envelope(compose_h_exact(&s, &r).unwrap());
        let uniform = lower_convex_envelope(compose_h(&s, &r, 2000).unwrap());
        let cat_e = extract_categorization(&exact, &r).unwrap();
        let cat_u = extract_categorization(&uniform, &r).unwrap();
        assert_eq!(cat_e.pools().len(), cat_u.pools().len());
        for (a, b) in cat_e.pools().iter().zip(cat_u.pools()) {
            assert!((a.0 - b.0).abs() < 5e-3 && (a.1 - b.1).abs() < 5e-3);
        }
    }

    #[test]
    fn flip_of_identical_priors_is_identity() {
        let r = build_receiver(&ReceiverFamily::Uniform, unit(), 301).unwrap();
        let s = r.as_weighting();
        let (s2, r2) = flip_problem(&s, &r).unwrap();
        for i in 0..=10 {
            let x = i as f64 / 10.0;
            assert!((s2.eval_upper(x) - s.eval_upper(x)).abs() < 1e-12);
            assert!((r2.eval(x) - r.eval(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn flip_swaps_square_and_identity() {
        let r = build_receiver(&ReceiverFamily::Uniform, unit(), 1001).unwrap();
        let s = build_sender(&SenderFamily::Power { k: 2.0 }, unit(), 1001).unwrap();
        let (s_f, r_f) = flip_problem(&s, &r).unwrap();
        // Flipped curve is the square root.
        let curve = compose_h(&s_f, &r_f, 1000).unwrap();
        let k = 250;
        let z = curve.z()[k];
        assert!((curve.h()[k] - z.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn flip_rejects_jumps_and_non_cdfs() {
        let r = build_receiver(&ReceiverFamily::Uniform, unit(), 101).unwrap();
        let jumped =
            SenderWeighting::from_knots(0.0, &[(0.0, 0.2), (0.5, 0.6), (1.0, 1.0)]).unwrap();
        assert!(matches!(
            flip_problem(&jumped, &r),
            Err(Error::FlipUndefined { .. })
        ));
        let negative =
            SenderWeighting::from_knots(-0.1, &[(0.0, -0.1), (0.5, 0.4), (1.0, 1.0)]).unwrap();
        assert!(matches!(
            flip_problem(&negative, &r),
            Err(Error::FlipUndefined { .. })
        ));
    }

    #[test]
    fn categorization_validation() {
        let r = build_receiver(&ReceiverFamily::Uniform, unit(), 101).unwrap();
        assert!(Categorization::new(&r, vec![(0.2, 0.2)]).is_err());
        assert!(Categorization::new(&r, vec![(0.4, 0.6), (0.5, 0.8)]).is_err());
        assert!(Categorization::new(&r, vec![(0.0, 1.1)]).is_err());
        let ok = Categorization::new(&r, vec![(0.1, 0.3), (0.3, 0.5)]).unwrap();
        assert_eq!(ok.pool_containing(0.3), Some(1));
        assert_eq!(ok.pool_containing(0.5), None);
        assert_eq!(ok.pool_containing(1.0), None);
        assert!((ok.pooled_width() - 0.4).abs() < 1e-15);
    }
}
