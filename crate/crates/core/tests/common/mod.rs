//! Helpers shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::f64::consts::TAU;

use kerrfocus::dt_model::SymbolBlock;
use kerrfocus::focusing::RingConstellation;
use kerrfocus::User;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Uniform i.i.d. draws from a constellation.
pub fn draw_block(c: &RingConstellation, n: usize, user: User, seed: u64) -> SymbolBlock {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = c.points();
    SymbolBlock::new((0..n).map(|_| pts[rng.random_range(0..pts.len())]).collect(), user)
}

/// i.i.d. circular Gaussian symbols of mean power `power`; off every
/// focusing grid with probability one.
pub fn gaussian_block(n: usize, power: f64, user: User, seed: u64) -> SymbolBlock {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = (power / 2.0).sqrt();
    SymbolBlock::new(
        (0..n)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im) * s
            })
            .collect(),
        user,
    )
}

/// Mutual information of the uniform-input channel
/// `Y = x exp(i h |x|^2) + CN(0, N)` by deterministic quadrature.
///
/// Around every rotated point `mu`, `y = mu + sqrt(N) r e^{ia}`; the
/// conditional density becomes `e^{-r^2} r / pi` in `(r, a)`. Composite
/// Simpson in `r` on `[0, r_max]`, periodic trapezoid in `a`, with the
/// weights renormalized to unit mass.
pub fn mi_quadrature(points: &[Complex64], h_self: f64, noise: f64, r_nodes: usize, a_nodes: usize) -> f64 {
    let means: Vec<Complex64> = points
        .iter()
        .map(|x| x * Complex64::from_polar(1.0, h_self * x.norm_sqr()))
        .collect();
    let size = means.len() as f64;
    let r_max = 7.0;
    let intervals = if r_nodes.is_multiple_of(2) {
        r_nodes
    } else {
        r_nodes + 1
    };
    let hr = r_max / intervals as f64;
    let sd = noise.sqrt();

    let mut total = 0.0;
    let mut mass = 0.0;
    for mu in &means {
        for i in 0..=intervals {
            let r = i as f64 * hr;
            let simpson = if i == 0 || i == intervals {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let w_r = simpson * hr / 3.0 * (-r * r).exp() * r / std::f64::consts::PI;
            if w_r == 0.0 {
                continue;
            }
            for k in 0..a_nodes {
                let a = TAU * k as f64 / a_nodes as f64;
                let w = w_r * TAU / a_nodes as f64;
                let y = mu + Complex64::from_polar(sd * r, a);
                let own = (y - mu).norm_sqr();
                let s: f64 = means.iter().map(|m| (-((y - m).norm_sqr() - own) / noise).exp()).sum();
                total += w * (size.log2() - s.log2());
                mass += w;
            }
        }
    }
    total / mass
}
