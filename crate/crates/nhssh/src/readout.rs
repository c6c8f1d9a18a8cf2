//! Spin-state readout through spin-dependent photoluminescence.
//!
//! Each basis state |0↑⟩, |0↓⟩, |-1↑⟩, |-1↓⟩ fluoresces at its own mean rate
//! N1..N4. A measurement returns the population-weighted rate N_f = Σ P_i N_i,
//! so a single number cannot separate four populations; the experiment runs
//! the same readout after π-pulse permutations of the populations and solves
//! the resulting linear system
//!
//! ```text
//! | N1 N2 N3 N4 | |P1|   | N_f           |
//! | N1 N4 N3 N2 | |P2| = | N_f^{π24}     |
//! | N3 N2 N1 N4 | |P3|   | N_f^{π13}     |
//! | N4 N2 N1 N3 | |P4|   | N_f^{π13 π34} |
//! ```
//!
//! Shot noise makes the raw solution violate positivity, so the estimate is
//! projected back onto the probability simplex (the constrained
//! maximum-likelihood point under a Gaussian equal-variance approximation).
//!
//! The quantity the topology pipeline needs is the renormalized population
//! P1/(P1+P3) of |0↑⟩ within the |↑⟩ subspace, after a nuclear π/2 rotation
//! maps the post-selection basis |±⟩ onto |↑⟩/|↓⟩.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use nalgebra::{Matrix4, Vector4};

use crate::linalg::{c, V2, V4};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReadoutError {
    /// The four flip rows are linearly dependent (e.g. all rates equal).
    #[error("measurement matrix is singular or ill-conditioned (cond ≈ {cond:.2e})")]
    SingularRates { cond: f64 },
    /// P1 + P3 vanished: no weight in the |↑⟩ subspace to renormalize.
    #[error("populations in the ↑ subspace sum to {sum:.3e}, below 1e-10")]
    SubspaceEmpty { sum: f64 },
}

/// Mean photon counts per shot for the four basis states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlRates {
    pub n: [f64; 4],
}

impl PlRates {
    pub fn new(n: [f64; 4]) -> Self {
        assert!(n.iter().all(|&x| x >= 0.0), "rates must be non-negative");
        Self { n }
    }

    /// Synthetic defaults with the bright-state ordering N1 > N2, N1 > N3
    /// expected from spin-dependent fluorescence contrast.
    pub fn defaults() -> Self {
        Self::new([0.040, 0.037, 0.027, 0.030])
    }
}

/// Four level populations; normalized instances live on the simplex.
pub type Populations = [f64; 4];

/// π-pulse configuration applied before reading the fluorescence rate.
///
/// `Pi13Pi34` applies π13 first, then π34, matching the composite row of the
/// measurement matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlipConfig {
    None,
    Pi24,
    Pi13,
    Pi13Pi34,
}

impl FlipConfig {
    pub const ALL: [FlipConfig; 4] = [
        FlipConfig::None,
        FlipConfig::Pi24,
        FlipConfig::Pi13,
        FlipConfig::Pi13Pi34,
    ];

    /// Apply the population permutation of this configuration.
    pub fn apply(&self, p: Populations) -> Populations {
        let swap = |mut q: Populations, a: usize, b: usize| {
            q.swap(a, b);
            q
        };
        match self {
            FlipConfig::None => p,
            FlipConfig::Pi24 => swap(p, 1, 3),
            FlipConfig::Pi13 => swap(p, 0, 2),
            FlipConfig::Pi13Pi34 => swap(swap(p, 0, 2), 2, 3),
        }
    }
}

/// Expected fluorescence rate after the flip sequence: Σ_i N_i P'_i.
pub fn observe(p: &Populations, rates: &PlRates, flips: FlipConfig) -> f64 {
    let permuted = flips.apply(*p);
    permuted.iter().zip(&rates.n).map(|(pi, ni)| pi * ni).sum()
}

/// The 4×4 measurement matrix whose row f maps populations to the expected
/// rate under flip configuration f.
pub fn measurement_matrix(rates: &PlRates) -> Matrix4<f64> {
    let mut w = Matrix4::zeros();
    for (f, flip) in FlipConfig::ALL.iter().enumerate() {
        for j in 0..4 {
            let mut e = [0.0; 4];
            e[j] = 1.0;
            w[(f, j)] = observe(&e, rates, *flip);
        }
    }
    w
}

const COND_LIMIT: f64 = 1e8;

fn inverse_checked(rates: &PlRates) -> Result<(Matrix4<f64>, Matrix4<f64>), ReadoutError> {
    let w = measurement_matrix(rates);
    let w_inv = w.try_inverse().ok_or(ReadoutError::SingularRates {
        cond: f64::INFINITY,
    })?;
    let norm = |m: &Matrix4<f64>| {
        (0..4)
            .map(|i| (0..4).map(|j| m[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let cond = norm(&w) * norm(&w_inv);
    if !cond.is_finite() || cond > COND_LIMIT {
        return Err(ReadoutError::SingularRates { cond });
    }
    Ok((w, w_inv))
}

/// Solve the 4×4 system for the raw populations. Under noise the result may
/// leave the simplex; see [`mle_normalize`].
pub fn invert(measurements: &[f64; 4], rates: &PlRates) -> Result<Populations, ReadoutError> {
    let (_, w_inv) = inverse_checked(rates)?;
    let b = Vector4::from_column_slice(measurements);
    let p = w_inv * b;
    Ok([p[0], p[1], p[2], p[3]])
}

/// Euclidean projection of a raw population vector onto the probability
/// simplex, by the sorted-threshold construction. This is the constrained
/// maximum-likelihood estimate under the equal-variance Gaussian model.
pub fn mle_normalize(raw: &Populations) -> Populations {
    let mut sorted = *raw;
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (j as f64 + 1.0);
        if u - candidate > 0.0 {
            tau = candidate;
        }
    }
    let mut out = raw.map(|x| (x - tau).max(0.0));
    // Guard against accumulated roundoff in the sum.
    let total: f64 = out.iter().sum();
    if total > 0.0 {
        for x in &mut out {
            *x /= total;
        }
    }
    out
}

/// Populations of the dilated state after the nuclear π/2 rotation that maps
/// |-⟩ → |↑⟩ and |+⟩ → |↓⟩.
pub fn mapped_populations(psi: &V4) -> Populations {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut p = [0.0; 4];
    let mut total = 0.0;
    for e in 0..2 {
        let up = (psi[2 * e] + c(0.0, 1.0) * psi[2 * e + 1]) * c(s, 0.0);
        let down = (c(0.0, 1.0) * psi[2 * e] + psi[2 * e + 1]) * c(s, 0.0);
        p[2 * e] = up.norm_sqr();
        p[2 * e + 1] = down.norm_sqr();
        total += p[2 * e] + p[2 * e + 1];
    }
    [p[0] / total, p[1] / total, p[2] / total, p[3] / total]
}

fn sigma_z_from_populations(p: &Populations) -> Result<f64, ReadoutError> {
    let sum = p[0] + p[2];
    if sum < 1e-10 {
        return Err(ReadoutError::SubspaceEmpty { sum });
    }
    Ok(2.0 * p[0] / sum - 1.0)
}

/// Noiseless readout: exact rates through the full inversion pipeline.
/// The infinite-shot limit of [`measure_electron_z`].
pub fn electron_z_exact(psi: &V4, rates: &PlRates) -> Result<f64, ReadoutError> {
    let p = mapped_populations(psi);
    let mut meas = [0.0; 4];
    for (f, flip) in FlipConfig::ALL.iter().enumerate() {
        meas[f] = observe(&p, rates, *flip);
    }
    let raw = invert(&meas, rates)?;
    let est = mle_normalize(&raw);
    sigma_z_from_populations(&est)
}

/// Simulated readout of ⟨σz⟩ in the ↑ subspace with Poisson photon counting.
///
/// Each flip configuration accumulates `shots` shots; the total count is a
/// single Poisson draw with mean shots·N_f.
pub fn measure_electron_z(
    psi: &V4,
    rates: &PlRates,
    shots: u64,
    seed: u64,
) -> Result<f64, ReadoutError> {
    assert!(shots >= 1, "at least one shot required");
    let p = mapped_populations(psi);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut meas = [0.0; 4];
    for (f, flip) in FlipConfig::ALL.iter().enumerate() {
        let mean = shots as f64 * observe(&p, rates, *flip);
        let counts = if mean > 0.0 {
            Poisson::new(mean).expect("positive mean").sample(&mut rng)
        } else {
            0.0
        };
        meas[f] = counts / shots as f64;
    }
    let raw = invert(&meas, rates)?;
    let est = mle_normalize(&raw);
    sigma_z_from_populations(&est)
}

/// Delta-method standard error of the ⟨σz⟩ estimator at the given state,
/// propagating Poisson count variance through the linear inversion and the
/// subspace renormalization.
pub fn sigma_z_standard_error(psi: &V4, rates: &PlRates, shots: u64) -> Result<f64, ReadoutError> {
    let p = mapped_populations(psi);
    let (_, w_inv) = inverse_checked(rates)?;
    // cov(N̂) = diag(μ_f / shots)
    let mut cov_p = Matrix4::zeros();
    for (f, flip) in FlipConfig::ALL.iter().enumerate() {
        let var = observe(&p, rates, *flip) / shots as f64;
        for i in 0..4 {
            for j in 0..4 {
                cov_p[(i, j)] += w_inv[(i, f)] * var * w_inv[(j, f)];
            }
        }
    }
    let sum = p[0] + p[2];
    if sum < 1e-10 {
        return Err(ReadoutError::SubspaceEmpty { sum });
    }
    // f = P1/(P1+P3); ⟨σz⟩ = 2f - 1.
    let g = Vector4::new(p[2] / (sum * sum), 0.0, -p[0] / (sum * sum), 0.0);
    let var_f = (g.transpose() * cov_p * g)[(0, 0)];
    Ok(2.0 * var_f.max(0.0).sqrt())
}

/// Embed a bare electron state as |ψ⟩|-⟩, the post-selected branch.
pub fn embed_minus(psi: &V2) -> V4 {
    let minus = crate::dilation::nuclear_minus();
    let mut out = V4::zeros();
    for e in 0..2 {
        for n in 0..2 {
            out[2 * e + n] = psi[e] * minus[n];
        }
    }
    out / c(out.norm(), 0.0)
}
