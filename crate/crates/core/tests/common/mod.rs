//! Shared instance generators for the integration suites.
#![allow(dead_code)] // each suite uses a different subset

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use categorize::priors::{
    build_receiver, build_sender, transform_group_mixture, QualitySupport, ReceiverCdf,
    ReceiverFamily, SenderFamily, SenderWeighting,
};

pub const PRIOR_N: usize = 1001;

/// A random instance from the power/logistic/mixture families, with both
/// sides strictly increasing cdfs on the unit interval so the flipped
/// problem is always defined.
pub fn random_instance(seed: u64) -> (SenderWeighting, ReceiverCdf) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = QualitySupport::unit();
    let r = match rng.random_range(0..4u8) {
        0 => build_receiver(&ReceiverFamily::Uniform, unit, PRIOR_N),
        1 => build_receiver(
            &ReceiverFamily::Power {
                k: rng.random_range(0.4..3.0),
            },
            unit,
            PRIOR_N,
        ),
        2 => build_receiver(
            &ReceiverFamily::Logistic {
                mu: rng.random_range(0.25..0.75),
                s: rng.random_range(0.06..0.3),
            },
            unit,
            PRIOR_N,
        ),
        _ => build_receiver(
            &ReceiverFamily::ReverseLogistic {
                mu: rng.random_range(0.25..0.75),
                s: rng.random_range(0.06..0.3),
            },
            unit,
            PRIOR_N,
        ),
    }
    .unwrap();
    let s = match rng.random_range(0..5u8) {
        0 => build_sender(
            &SenderFamily::Power {
                k: rng.random_range(0.4..3.0),
            },
            unit,
            PRIOR_N,
        )
        .unwrap(),
        1 => build_sender(
            &SenderFamily::Logistic {
                mu: rng.random_range(0.25..0.75),
                s: rng.random_range(0.06..0.3),
            },
            unit,
            PRIOR_N,
        )
        .unwrap(),
        2 => build_sender(
            &SenderFamily::ReverseLogistic {
                mu: rng.random_range(0.25..0.75),
                s: rng.random_range(0.06..0.3),
            },
            unit,
            PRIOR_N,
        )
        .unwrap(),
        3 => mixture_sender(&mut rng),
        _ => build_sender(&SenderFamily::Uniform, unit, PRIOR_N).unwrap(),
    };
    (s, r)
}

// Weighted two-group mixture of power cdfs; strictly increasing by
// construction.
fn mixture_sender(rng: &mut ChaCha8Rng) -> SenderWeighting {
    let unit = QualitySupport::unit();
    let g1 = build_sender(
        &SenderFamily::Power {
            k: rng.random_range(0.4..1.0),
        },
        unit,
        PRIOR_N,
    )
    .unwrap();
    let g2 = build_sender(
        &SenderFamily::Power {
            k: rng.random_range(1.0..3.0),
        },
        unit,
        PRIOR_N,
    )
    .unwrap();
    let w1 = rng.random_range(0.2..2.0);
    let w2 = rng.random_range(0.2..2.0);
    let (s, _) = transform_group_mixture(&[(w1, g1), (w2, g2)]).unwrap();
    s
}

/// The worked two-uniform instance: uniform receiver, sender mass uniform
/// on an interval of width `2 * eps` centered at 3/4.
pub fn intro_instance(eps: f64, n: usize) -> (SenderWeighting, ReceiverCdf) {
    let unit = QualitySupport::unit();
    let r = build_receiver(&ReceiverFamily::Uniform, unit, n).unwrap();
    let s = build_sender(
        &SenderFamily::UniformOn {
            lo: 0.75 - eps,
            hi: 0.75 + eps,
        },
        unit,
        n,
    )
    .unwrap();
    (s, r)
}

/// Reverse-logistic sender against a concave power receiver: one interior
/// pool with clear separation zones on both sides.
pub fn panel_a_instance() -> (SenderWeighting, ReceiverCdf) {
    let unit = QualitySupport::unit();
    let r = build_receiver(&ReceiverFamily::Power { k: 0.4 }, unit, PRIOR_N).unwrap();
    let s = build_sender(
        &SenderFamily::ReverseLogistic { mu: 0.5, s: 0.15 },
        unit,
        PRIOR_N,
    )
    .unwrap();
    (s, r)
}

/// Reverse-logistic sender against a convex power receiver: bottom pooling
/// in the original problem and substantial overlap with the flip.
pub fn panel_b_instance() -> (SenderWeighting, ReceiverCdf) {
    let unit = QualitySupport::unit();
    let r = build_receiver(&ReceiverFamily::Power { k: 2.0 }, unit, PRIOR_N).unwrap();
    let s = build_sender(
        &SenderFamily::ReverseLogistic { mu: 0.5, s: 0.1 },
        unit,
        PRIOR_N,
    )
    .unwrap();
    (s, r)
}
