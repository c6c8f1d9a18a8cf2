//! Winding numbers from eigenvector loops and from measured spin textures.
//!
//! For a loop of biorthogonal eigenvector pairs (L_k, R_k) the discretized
//! winding number accumulates principal-branch link phases
//!
//! ```text
//! A_i = ln [ ⟨L_{k_{i+1}}|R_{k_i}⟩ / ⟨L_{k_i}|R_{k_i}⟩ ],   w = (1/π) Σ_i Im A_i,
//! ```
//!
//! which is manifestly invariant under per-sample rescaling of the
//! eigenvectors. On a dense loop every regular link phase is small and the
//! winding is carried by isolated links where the Bloch angle wraps the
//! principal branch, each contributing ±π.
//!
//! The continuous definition w = (i/π) ∮ ⟨L|∂_k|R⟩ dk is evaluated on an
//! independent gauge: in the eigenbasis of the chiral operator σy the
//! Hamiltonian is off-diagonal with corners q± = γ(h_z + i/2 ∓ i h_x), and
//! the branch-tracked square roots (√q+, √q-) form smooth eigenvectors whose
//! Berry-type connection integrates to the winding of the q± corners around
//! the exceptional points. The two routes agree on fine grids and are tested
//! against each other.
//!
//! Measured data enter through the texture map: a sample (⟨σx⟩, ⟨σz⟩)
//! determines the Bloch angle up to the sign of its imaginary part,
//!
//! ```text
//! Re θ = atan2(-sx, sz),   |Im θ| = arccosh(1/√(sx² + sz²)),
//! ```
//!
//! from which right and left eigenvectors are rebuilt. Loops that enclose a
//! single exceptional point close only after 4π; the band-swap relation
//! (sx, sz) → (-sx, -sz) supplies the second sheet.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{c, cr, C64, V2};
use crate::ssh_model::{self, eigensystem_from_theta, ModelError, SshParams};

/// Relative overlap below which biorthogonality has broken down.
pub const OVERLAP_TOL: f64 = 1e-10;
/// Pure-state bound slack for ingested texture data (3-decimal rounding).
pub const TEXTURE_NORM_SLACK: f64 = 5e-3;
/// Strict pure-state bound for direct reconstruction calls.
pub const RECONSTRUCT_NORM_SLACK: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    /// |⟨L|R⟩| vanished at a sample: the pair is defective (near an
    /// exceptional point) and link phases are meaningless.
    #[error("biorthogonal overlap vanished at loop index {index}")]
    OverlapVanished { index: usize },
    /// The loop was not declared closed; the formula needs a cycle.
    #[error("winding requires a closed loop")]
    OpenLoop,
    /// sx² + sz² exceeded the pure-state bound.
    #[error("texture point lies outside the Bloch disk: sx² + sz² = {norm2}")]
    OutsideBloch { norm2: f64 },
    /// sx = sz = 0 carries no angular information.
    #[error("texture point at the origin is ambiguous")]
    Ambiguous,
    /// 4π extension requested for a series that already closes at 2π.
    #[error("series already closes at 2π; no half-winding extension applies")]
    NotHalfWinding,
    /// Texture tables must be sorted by momentum.
    #[error("momentum column is not strictly increasing at row {row}")]
    NonMonotonicK { row: usize },
    #[error("texture table: {0}")]
    Parse(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One measured (or simulated) texture point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TextureSample {
    /// Momentum in radians.
    pub k: f64,
    pub sx: f64,
    pub sz: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sx_err: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sz_err: Option<f64>,
}

impl TextureSample {
    pub fn new(k: f64, sx: f64, sz: f64) -> Self {
        Self {
            k,
            sx,
            sz,
            sx_err: None,
            sz_err: None,
        }
    }
}

/// Loop period of a winding computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LoopPeriod {
    #[serde(rename = "2pi")]
    TwoPi,
    #[serde(rename = "4pi")]
    FourPi,
}

/// Result of a discretized winding computation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindingResult {
    /// (1/π) Σ Im A_i over the full loop.
    pub w: f64,
    /// Im A_i per link. Regular links take the principal branch in
    /// (-π, π]; wrap links are branched toward the loop orientation and sit
    /// within a grid residual of ±π.
    pub link_phases: Vec<f64>,
    pub period: LoopPeriod,
    pub grid_size: usize,
    /// Links carrying a branch wrap (|Im A| near π).
    pub wrap_count: usize,
    /// Largest |Im A| among non-wrap links.
    pub max_regular_link: f64,
    /// Set when some link phase falls in the suspicious band between π/2
    /// and the wrap threshold: the grid is too coarse to trust branch
    /// assignments.
    pub grid_too_coarse: bool,
}

impl WindingResult {
    /// Winding per 2π Brillouin zone: `w` for 2π loops, `w/2` for 4π loops.
    pub fn w_per_zone(&self) -> f64 {
        match self.period {
            LoopPeriod::TwoPi => self.w,
            LoopPeriod::FourPi => self.w / 2.0,
        }
    }
}

/// A biorthogonal eigenvector pair at one momentum.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub right: V2,
    pub left: V2,
}

const WRAP_BAND: f64 = std::f64::consts::PI / 8.0;

/// Bloch angle of a right eigenvector, recovered from the gauge-invariant
/// component ratio tan(θ/2) = -R[1]/R[0], on the principal strip.
fn theta_of_right(r: &V2) -> C64 {
    if r[0].norm() >= r[1].norm() {
        (-r[1] / r[0]).atan() * cr(2.0)
    } else {
        // cot(θ/2) = -R[0]/R[1] near the strip edge.
        cr(std::f64::consts::PI) - (-r[0] / r[1]).atan() * cr(2.0)
    }
}

/// Discretized winding number over an ordered loop of eigenvector pairs.
///
/// The loop must be declared closed; the final link connects the last pair
/// back to the first. Link logs take the principal branch. Links whose
/// ratio sits at the branch cut (phase within π/8 of ±π) are the wrap links
/// that carry the winding; there the principal branch is decided by terms
/// quadratic in the grid spacing, so their sign is pinned instead to the
/// local direction of travel of the Bloch angle, which is gauge invariant.
pub fn winding_discrete(pairs: &[EigenPair], closed: bool) -> Result<WindingResult, TopologyError> {
    if !closed {
        return Err(TopologyError::OpenLoop);
    }
    let n = pairs.len();
    assert!(n >= 3, "a loop needs at least three samples");
    let thetas: Vec<C64> = pairs.iter().map(|p| theta_of_right(&p.right)).collect();
    let mut link_phases = Vec::with_capacity(n);
    let mut sum = 0.0;
    let mut wrap_count = 0;
    let mut max_regular: f64 = 0.0;
    let mut suspicious = false;
    for i in 0..n {
        let j = (i + 1) % n;
        let denom = pairs[i].left.dotc(&pairs[i].right);
        let numer = pairs[j].left.dotc(&pairs[i].right);
        let scale_i = pairs[i].left.norm() * pairs[i].right.norm();
        let scale_j = pairs[j].left.norm() * pairs[i].right.norm();
        if denom.norm() < OVERLAP_TOL * scale_i || numer.norm() < OVERLAP_TOL * scale_j {
            return Err(TopologyError::OverlapVanished { index: i });
        }
        let mut phase = (numer / denom).arg();
        let mag = phase.abs();
        if mag > std::f64::consts::PI - WRAP_BAND {
            wrap_count += 1;
            // Residual advance of θ across this link, re-centered mod 2π,
            // gives the travel direction. Moving the log onto the branch on
            // that side (rather than overwriting the value) keeps per-sample
            // gauge phases telescoping exactly around the loop.
            let d = thetas[j].re - thetas[i].re;
            let residual = d - std::f64::consts::TAU * (d / std::f64::consts::TAU).round();
            if residual > 0.0 && phase < 0.0 {
                phase += std::f64::consts::TAU;
            } else if residual < 0.0 && phase > 0.0 {
                phase -= std::f64::consts::TAU;
            }
        } else {
            max_regular = max_regular.max(mag);
            if mag >= std::f64::consts::FRAC_PI_2 {
                suspicious = true;
            }
        }
        link_phases.push(phase);
        sum += phase;
    }
    Ok(WindingResult {
        w: sum / std::f64::consts::PI,
        link_phases,
        period: LoopPeriod::TwoPi,
        grid_size: n,
        wrap_count,
        max_regular_link: max_regular,
        grid_too_coarse: suspicious,
    })
}

/// Continuity-tracked model eigenvectors along a momentum list.
///
/// Each sample re-anchors the Bloch angle against the previous one by
/// shifting integer multiples of π (even shifts stay on the band, odd shifts
/// follow the band through a crossing), so the returned loop follows the
/// analytic band continuation rather than the pointwise Im-dominant band.
#[derive(Debug, Clone)]
pub struct TrackedSample {
    pub k: f64,
    pub theta: C64,
    pub pair: EigenPair,
}

pub fn model_band_loop(
    v: f64,
    r: f64,
    gamma: f64,
    ks: &[f64],
) -> Result<Vec<TrackedSample>, TopologyError> {
    let mut out = Vec::with_capacity(ks.len());
    let mut prev: Option<C64> = None;
    for &k in ks {
        let es = ssh_model::eigensystem(&SshParams::new(v, r, gamma, k))?;
        let theta = match prev {
            None => es.theta,
            Some(p) => {
                let shift = ((p.re - es.theta.re) / std::f64::consts::PI).round();
                c(es.theta.re + shift * std::f64::consts::PI, es.theta.im)
            }
        };
        prev = Some(theta);
        let sys = eigensystem_from_theta(theta, es.lambda1, es.ordering_degenerate);
        out.push(TrackedSample {
            k,
            theta,
            pair: EigenPair {
                right: sys.r1,
                left: sys.l1,
            },
        });
    }
    Ok(out)
}

/// Continuous winding number by finite differences of continuity-tracked
/// eigenvectors in the chiral gauge, on `n_grid` momenta over one Brillouin
/// zone.
///
/// Asserts that the imaginary residue of the discretized integral is below
/// 1e-6 and returns the real part.
pub fn winding_continuous(v: f64, r: f64, n_grid: usize) -> Result<f64, TopologyError> {
    assert!(n_grid >= 8, "grid too small");
    let dk = std::f64::consts::TAU / n_grid as f64;
    // Corners of the chiral-basis Hamiltonian (γ = 1; the winding is
    // scale-free): q± = h_z + i/2 ∓ i h_x.
    let q = |k: f64, sign: f64| -> C64 {
        let p = SshParams::new(v, r, 1.0, k);
        c(p.h_z(), 0.5) - c(0.0, sign) * cr(p.h_x())
    };
    // Track both square roots from k = -dk through k = 2π + small overhang.
    let track = |sign: f64| -> Result<Vec<C64>, TopologyError> {
        let mut out = Vec::with_capacity(n_grid + 2);
        let mut prev: Option<C64> = None;
        for i in -1..=(n_grid as i64) {
            let k = i as f64 * dk;
            let qv = q(k, sign);
            if qv.norm() < 1e-12 {
                // The corner vanishes exactly at an exceptional point.
                return Err(TopologyError::Model(ModelError::ExceptionalPoint {
                    gap: qv.norm(),
                    tol: 1e-12,
                }));
            }
            let mut root = qv.sqrt();
            if let Some(p) = prev {
                if (root + p).norm() < (root - p).norm() {
                    root = -root;
                }
            }
            prev = Some(root);
            out.push(root);
        }
        Ok(out)
    };
    let plus = track(1.0)?;
    let minus = track(-1.0)?;

    // Eigenvectors in the chiral basis, anchored on the first component:
    // R = (1, √(q-/q+)), ⟨L| = (√q-, √q+). The anchor fixes the gauge class
    // whose connection integrates to the signed winding around the
    // exceptional points; the left gauge drops out of the ratio.
    let mut acc = c(0.0, 0.0);
    for i in 1..=n_grid {
        let r_next = V2::new(c(1.0, 0.0), minus[i + 1] / plus[i + 1]);
        let r_prevv = V2::new(c(1.0, 0.0), minus[i - 1] / plus[i - 1]);
        let l_row = V2::new(minus[i], plus[i]);
        let r_here = V2::new(c(1.0, 0.0), minus[i] / plus[i]);
        let derivative = (r_next - r_prevv) * cr(1.0 / (2.0 * dk));
        let numer = l_row[0] * derivative[0] + l_row[1] * derivative[1];
        let denom = l_row[0] * r_here[0] + l_row[1] * r_here[1];
        acc += numer / denom * cr(dk);
    }
    let w = acc * c(0.0, 1.0) / cr(std::f64::consts::PI);
    assert!(
        w.im.abs() < 1e-6,
        "imaginary residue {:.3e} of the winding integral exceeds 1e-6",
        w.im
    );
    Ok(w.re)
}

/// Sign choice for the imaginary part of a reconstructed Bloch angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImSign {
    Positive,
    Negative,
}

/// Rebuild the (R, L) eigenvector pair from one texture sample.
///
/// The texture fixes Re θ and |Im θ|; the sign must be supplied (two states
/// share the same (sx, sz) but opposite ⟨σy⟩). Model-aware callers can use
/// [`reconstruct_for_model`], which picks the sign that makes the pair an
/// actual eigenvector of H(k).
pub fn reconstruct_eigenvectors(
    sample: &TextureSample,
    im_sign: ImSign,
) -> Result<(EigenPair, C64), TopologyError> {
    let theta = theta_from_texture(sample.sx, sample.sz, RECONSTRUCT_NORM_SLACK)?;
    let theta = match im_sign {
        ImSign::Positive => theta,
        ImSign::Negative => c(theta.re, -theta.im),
    };
    Ok((pair_from_theta(theta), theta))
}

fn theta_from_texture(sx: f64, sz: f64, slack: f64) -> Result<C64, TopologyError> {
    let norm2 = sx * sx + sz * sz;
    if norm2 == 0.0 {
        return Err(TopologyError::Ambiguous);
    }
    if norm2 > 1.0 + slack {
        return Err(TopologyError::OutsideBloch { norm2 });
    }
    let re = (-sx).atan2(sz);
    let cosh_im = (1.0 / norm2.min(1.0)).sqrt();
    let im = cosh_im.acosh();
    Ok(c(re, im))
}

fn pair_from_theta(theta: C64) -> EigenPair {
    let sys = eigensystem_from_theta(theta, c(0.0, 0.0), false);
    EigenPair {
        right: sys.r1,
        left: sys.l1,
    }
}

/// Reconstruct with the Im-sign fixed by the model: of the two candidates,
/// keep the one whose pair is an eigenvector of H(k) (smaller residual of
/// H R - λ R with the biorthogonal Rayleigh quotient λ).
pub fn reconstruct_for_model(
    sample: &TextureSample,
    v: f64,
    r: f64,
    gamma: f64,
    slack: f64,
) -> Result<(EigenPair, C64), TopologyError> {
    let base = theta_from_texture(sample.sx, sample.sz, slack)?;
    let h = ssh_model::hamiltonian(&SshParams::new(v, r, gamma, sample.k));
    let mut best: Option<(f64, EigenPair, C64)> = None;
    for theta in [base, c(base.re, -base.im)] {
        let pair = pair_from_theta(theta);
        let lam = pair.left.dotc(&(h * pair.right)) / pair.left.dotc(&pair.right);
        let resid = (h * pair.right - pair.right * lam).norm() / pair.right.norm();
        if best.as_ref().map_or(true, |(b, _, _)| resid < *b) {
            best = Some((resid, pair, theta));
        }
    }
    let (_, pair, theta) = best.expect("two candidates");
    Ok((pair, theta))
}

/// Append the band-swapped continuation (sx, sz) → (-sx, -sz) on
/// k ∈ [2π, 4π), closing a half-winding trajectory.
pub fn extend_to_4pi(series: &[TextureSample]) -> Result<Vec<TextureSample>, TopologyError> {
    match classify_closure(series) {
        Closure::HalfWinding => {}
        Closure::Closed => return Err(TopologyError::NotHalfWinding),
    }
    let mut out = series.to_vec();
    for s in series {
        out.push(TextureSample {
            k: s.k + std::f64::consts::TAU,
            sx: -s.sx,
            sz: -s.sz,
            sx_err: s.sx_err,
            sz_err: s.sz_err,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Closure {
    Closed,
    HalfWinding,
}

/// Endpoint heuristic: a half-winding series reconnects to the *negated*
/// first sample better than to the first sample itself.
fn classify_closure(series: &[TextureSample]) -> Closure {
    let a = series.first().expect("nonempty series");
    let b = series.last().expect("nonempty series");
    let gap_closed = ((b.sx - a.sx).powi(2) + (b.sz - a.sz).powi(2)).sqrt();
    let gap_half = ((b.sx + a.sx).powi(2) + (b.sz + a.sz).powi(2)).sqrt();
    if gap_half < gap_closed {
        Closure::HalfWinding
    } else {
        Closure::Closed
    }
}

/// How crossing momenta are chosen in [`winding_from_data`].
#[derive(Debug, Clone)]
pub enum CrossingSpec {
    /// Detect sign flips from consecutive Bloch vectors with negative inner
    /// product (confirmed against the model when one is supplied).
    Auto,
    /// Flip the sign convention after each of these momenta (radians).
    At(Vec<f64>),
    /// The data are already continuous; apply no flips.
    None,
}

/// Optional model reference for sign selection and crossing confirmation.
#[derive(Debug, Clone, Copy)]
pub struct ModelRef {
    pub v: f64,
    pub r: f64,
    pub gamma: f64,
}

/// Winding number from a measured texture table.
///
/// Sign conventions are repaired at band crossings, eigenvectors are
/// reconstructed per sample, half-winding series are extended to 4π, and the
/// discretized formula runs on the closed loop.
pub fn winding_from_data(
    table: &[TextureSample],
    crossings: CrossingSpec,
    model: Option<ModelRef>,
) -> Result<WindingResult, TopologyError> {
    for (i, w) in table.windows(2).enumerate() {
        if w[1].k <= w[0].k {
            return Err(TopologyError::NonMonotonicK { row: i + 1 });
        }
    }
    // Clamp rounding overshoot outside the Bloch disk.
    let mut samples: Vec<TextureSample> = Vec::with_capacity(table.len());
    for s in table {
        let norm2 = s.sx * s.sx + s.sz * s.sz;
        if norm2 > 1.0 + TEXTURE_NORM_SLACK {
            return Err(TopologyError::OutsideBloch { norm2 });
        }
        let scale = if norm2 > 1.0 { 1.0 / norm2.sqrt() } else { 1.0 };
        samples.push(TextureSample {
            sx: s.sx * scale,
            sz: s.sz * scale,
            ..*s
        });
    }

    // Sign-flip convention after each crossing.
    let flip_after = match &crossings {
        CrossingSpec::None => Vec::new(),
        CrossingSpec::At(ks) => ks.clone(),
        CrossingSpec::Auto => detect_crossings(&samples, model.as_ref()),
    };
    for s in &mut samples {
        let flips = flip_after.iter().filter(|&&kc| s.k > kc).count();
        if flips % 2 == 1 {
            s.sx = -s.sx;
            s.sz = -s.sz;
        }
    }

    // Close at 2π or extend to the 4π sheet.
    let span = samples.last().unwrap().k - samples.first().unwrap().k;
    let (samples, period) = if span > 1.5 * std::f64::consts::TAU {
        (samples, LoopPeriod::FourPi)
    } else if classify_closure(&samples) == Closure::HalfWinding {
        (extend_to_4pi(&samples)?, LoopPeriod::FourPi)
    } else {
        (samples, LoopPeriod::TwoPi)
    };

    let mut pairs = Vec::with_capacity(samples.len());
    for s in &samples {
        let (pair, _) = match model {
            Some(m) => reconstruct_for_model(s, m.v, m.r, m.gamma, TEXTURE_NORM_SLACK)?,
            None => {
                let theta = theta_from_texture(s.sx, s.sz, TEXTURE_NORM_SLACK)?;
                (pair_from_theta(theta), theta)
            }
        };
        pairs.push(pair);
    }
    let mut result = winding_discrete(&pairs, true)?;
    result.period = period;
    Ok(result)
}

/// Crossing detection: consecutive normalized Bloch vectors with negative
/// inner product, confirmed (when a model is present) by an imaginary-gap
/// closing of the spectrum between the two momenta.
fn detect_crossings(samples: &[TextureSample], model: Option<&ModelRef>) -> Vec<f64> {
    let mut out = Vec::new();
    for w in samples.windows(2) {
        let n0 = (w[0].sx * w[0].sx + w[0].sz * w[0].sz).sqrt();
        let n1 = (w[1].sx * w[1].sx + w[1].sz * w[1].sz).sqrt();
        if n0 == 0.0 || n1 == 0.0 {
            continue;
        }
        let dot = (w[0].sx * w[1].sx + w[0].sz * w[1].sz) / (n0 * n1);
        if dot >= 0.0 {
            continue;
        }
        if let Some(m) = model {
            if !im_gap_closes_between(m, w[0].k, w[1].k) {
                continue;
            }
        }
        out.push(0.5 * (w[0].k + w[1].k));
    }
    out
}

/// The imaginary eigenvalue ordering can only exchange where the spectrum
/// turns real, which requires h_z = 0 with |h_x| > 1/2: momenta at integer
/// multiples of π.
fn im_gap_closes_between(m: &ModelRef, k0: f64, k1: f64) -> bool {
    let mut n = (k0 / std::f64::consts::PI).ceil() as i64;
    loop {
        let k = n as f64 * std::f64::consts::PI;
        if k >= k1 {
            return false;
        }
        if k > k0 {
            let h_x = m.v + m.r * k.cos();
            if h_x * h_x > 0.25 {
                return true;
            }
        }
        n += 1;
    }
}

/// Parse a columnar texture table: '#' metadata lines (with an optional
/// `k-units = pi` flag), a header row `k,sx,sz[,sx_err,sz_err]`, then data.
pub fn parse_texture_table(text: &str) -> Result<Vec<TextureSample>, TopologyError> {
    let mut k_units_pi = false;
    let mut header: Option<Vec<String>> = None;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim().to_lowercase().replace(' ', "");
            if comment == "k-units=pi" {
                k_units_pi = true;
            }
            continue;
        }
        if header.is_none() {
            let cols: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
            if cols.len() < 3 || cols[0] != "k" || cols[1] != "sx" || cols[2] != "sz" {
                return Err(TopologyError::Parse(format!(
                    "line {}: expected header k,sx,sz[,sx_err,sz_err]",
                    lineno + 1
                )));
            }
            header = Some(cols);
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(|s| s.trim()).collect();
        let ncols = header.as_ref().unwrap().len();
        if fields.len() != ncols {
            return Err(TopologyError::Parse(format!(
                "line {}: expected {} fields, found {}",
                lineno + 1,
                ncols,
                fields.len()
            )));
        }
        let parse = |s: &str| -> Result<f64, TopologyError> {
            s.parse::<f64>()
                .map_err(|e| TopologyError::Parse(format!("line {}: {e}", lineno + 1)))
        };
        let mut sample = TextureSample::new(parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
        if ncols >= 5 {
            sample.sx_err = Some(parse(fields[3])?);
            sample.sz_err = Some(parse(fields[4])?);
        }
        if k_units_pi {
            sample.k *= std::f64::consts::PI;
        }
        out.push(sample);
    }
    if out.is_empty() {
        return Err(TopologyError::Parse("no data rows".into()));
    }
    Ok(out)
}

/// Render a texture table with metadata comments; momenta are written in
/// units of π with the matching header flag.
pub fn write_texture_table(samples: &[TextureSample], metadata: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in metadata {
        out.push_str(&format!("# {k} = {v}\n"));
    }
    out.push_str("# k-units = pi\n");
    let with_err = samples.iter().any(|s| s.sx_err.is_some());
    out.push_str(if with_err {
        "k,sx,sz,sx_err,sz_err\n"
    } else {
        "k,sx,sz\n"
    });
    for s in samples {
        let k_pi = s.k / std::f64::consts::PI;
        if with_err {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                k_pi,
                s.sx,
                s.sz,
                s.sx_err.unwrap_or(0.0),
                s.sz_err.unwrap_or(0.0)
            ));
        } else {
            out.push_str(&format!("{},{},{}\n", k_pi, s.sx, s.sz));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{fidelity, ONE, ZERO};
    use crate::reference;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{PI, TAU};

    fn uniform_ks(n: usize, span: f64) -> Vec<f64> {
        (0..n).map(|i| i as f64 * span / n as f64).collect()
    }

    #[test]
    fn constant_loop_has_zero_winding() {
        let pair = EigenPair {
            right: V2::new(ONE, ZERO),
            left: V2::new(ONE, ZERO),
        };
        let pairs = vec![pair.clone(), pair.clone(), pair.clone(), pair];
        let res = winding_discrete(&pairs, true).unwrap();
        assert_eq!(res.w, 0.0);
        assert_eq!(res.wrap_count, 0);
    }

    #[test]
    fn open_loop_is_refused() {
        let pair = EigenPair {
            right: V2::new(ONE, ZERO),
            left: V2::new(ONE, ZERO),
        };
        assert!(matches!(
            winding_discrete(&vec![pair.clone(), pair.clone(), pair], false),
            Err(TopologyError::OpenLoop)
        ));
    }

    #[test]
    fn unit_winding_on_model_loop() {
        let loop_ = model_band_loop(0.3, 1.0, 3.5, &uniform_ks(200, TAU)).unwrap();
        let pairs: Vec<EigenPair> = loop_.into_iter().map(|s| s.pair).collect();
        let res = winding_discrete(&pairs, true).unwrap();
        assert!((res.w - 1.0).abs() < 1e-2, "w = {}", res.w);
        assert_eq!(res.wrap_count, 1);
        assert!(!res.grid_too_coarse);
    }

    #[test]
    fn half_winding_needs_the_4pi_loop() {
        let loop_ = model_band_loop(0.3, 0.3, 3.5, &uniform_ks(400, 2.0 * TAU)).unwrap();
        let pairs: Vec<EigenPair> = loop_.into_iter().map(|s| s.pair).collect();
        let mut res = winding_discrete(&pairs, true).unwrap();
        res.period = LoopPeriod::FourPi;
        assert!((res.w - 1.0).abs() < 1e-2, "w = {}", res.w);
        assert_relative_eq!(res.w_per_zone(), res.w / 2.0);
    }

    #[test]
    fn trivial_phase_winds_zero() {
        let loop_ = model_band_loop(0.3, 0.18, 3.5, &uniform_ks(200, TAU)).unwrap();
        let pairs: Vec<EigenPair> = loop_.into_iter().map(|s| s.pair).collect();
        let res = winding_discrete(&pairs, true).unwrap();
        assert!(res.w.abs() < 1e-2, "w = {}", res.w);
        assert_eq!(res.wrap_count, 0);
    }

    #[test]
    fn grid_refinement_converges() {
        // Offset grids break the k → 2π-k mirror symmetry that otherwise
        // cancels the discretization error exactly.
        let mut errs = Vec::new();
        for n in [100, 1000, 10000] {
            let ks: Vec<f64> = (0..n).map(|i| (i as f64 + 0.3) * TAU / n as f64).collect();
            let loop_ = model_band_loop(0.3, 1.0, 3.5, &ks).unwrap();
            let pairs: Vec<EigenPair> = loop_.into_iter().map(|s| s.pair).collect();
            let res = winding_discrete(&pairs, true).unwrap();
            errs.push((res.w - 1.0).abs());
        }
        // Non-increasing within a roundoff floor; tight at 10⁴ points.
        assert!(errs[0] + 1e-12 >= errs[1] && errs[1] + 1e-12 >= errs[2], "errors {errs:?}");
        assert!(errs[2] < 1e-6, "1e4-point error {}", errs[2]);
    }

    #[test]
    fn gauge_invariance_under_rescaling() {
        // R-gauge scalars are exactly cancelled per link; L-gauge scalars
        // cancel around the loop as long as their phases stay off the branch
        // cut, so moduli are unconstrained and phases bounded.
        let loop_ = model_band_loop(0.3, 1.0, 3.5, &uniform_ks(100, TAU)).unwrap();
        let pairs: Vec<EigenPair> = loop_.into_iter().map(|s| s.pair).collect();
        let base = winding_discrete(&pairs, true).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let gauged: Vec<EigenPair> = pairs
                .iter()
                .map(|p| {
                    let mag_r = 10f64.powf(rng.gen_range(-3.0_f64..3.0));
                    let ph_r = rng.gen_range(-PI..PI);
                    let mag_l = 10f64.powf(rng.gen_range(-3.0_f64..3.0));
                    // L phases stay inside the wrap-detection band so every
                    // gauged link keeps its branch classification.
                    let ph_l = rng.gen_range(-0.15_f64..0.15);
                    EigenPair {
                        right: p.right * c(mag_r * ph_r.cos(), mag_r * ph_r.sin()),
                        left: p.left * c(mag_l * ph_l.cos(), mag_l * ph_l.sin()),
                    }
                })
                .collect();
            let res = winding_discrete(&gauged, true).unwrap();
            assert!(
                (res.w - base.w).abs() < 1e-10,
                "gauge shifted w: {} vs {}",
                res.w,
                base.w
            );
        }
    }

    #[test]
    fn quantization_away_from_boundaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        while checked < 30 {
            let v = rng.gen_range(0.05..1.2);
            let r = rng.gen_range(0.05..1.2);
            // Stay clearly off the |v ± r| = 1/2 boundaries.
            let margin = [v + r - 0.5, v - r - 0.5, v + r + 0.5, v - r + 0.5]
                .iter()
                .map(|x: &f64| x.abs())
                .fold(f64::INFINITY, f64::min);
            if margin < 0.05 {
                continue;
            }
            let expect = ssh_model::classify_phase(v, r).unwrap().w;
            let (ks, scale) = if expect == 0.5 {
                (uniform_ks(4000, 2.0 * TAU), 2.0)
            } else {
                (uniform_ks(2000, TAU), 1.0)
            };
            let loop_ = model_band_loop(v, r, 2.0, &ks).unwrap();
            let pairs: Vec<EigenPair> = loop_.into_iter().map(|s| s.pair).collect();
            let res = winding_discrete(&pairs, true).unwrap();
            let w = res.w / scale;
            assert!(
                (w - expect).abs() < 1e-3,
                "(v, r) = ({v:.3}, {r:.3}): w = {w} vs {expect}"
            );
            checked += 1;
        }
    }

    #[test]
    fn continuous_matches_phase_classification() {
        assert!((winding_continuous(0.3, 0.18, 1000).unwrap()).abs() < 1e-3);
        assert!((winding_continuous(0.3, 1.0, 1000).unwrap() - 1.0).abs() < 1e-3);
        // One enclosed exceptional point: the 2π integral reports the half
        // winding directly in this gauge.
        assert!((winding_continuous(0.3, 0.3, 1000).unwrap() - 0.5).abs() < 1e-3);
    }

    #[test]
    fn continuous_agrees_with_discrete_on_fine_grids() {
        for (v, r, expect) in [(0.3, 0.18, 0.0), (0.3, 1.0, 1.0)] {
            let n = 20000;
            let cont = winding_continuous(v, r, n).unwrap();
            let loop_ = model_band_loop(v, r, 1.0, &uniform_ks(n, TAU)).unwrap();
            let pairs: Vec<EigenPair> = loop_.into_iter().map(|s| s.pair).collect();
            let disc = winding_discrete(&pairs, true).unwrap().w;
            assert!(
                (cont - disc).abs() < 1e-6,
                "(v, r) = ({v}, {r}): {cont} vs {disc} (expect {expect})"
            );
        }
    }

    #[test]
    fn reconstruct_basis_point() {
        let (pair, theta) =
            reconstruct_eigenvectors(&TextureSample::new(0.0, 0.0, 1.0), ImSign::Positive).unwrap();
        assert!(theta.norm() < 1e-12);
        assert!((pair.right - V2::new(ONE, ZERO)).norm() < 1e-12);
    }

    #[test]
    fn reconstruct_roundtrips_model_state() {
        let p = SshParams::new(0.3, 1.0, 3.5, 0.3 * PI);
        let es = ssh_model::eigensystem(&p).unwrap();
        let (sx, sz) = ssh_model::texture_of(&es.r1).unwrap();
        let (pair, _) =
            reconstruct_for_model(&TextureSample::new(p.k, sx, sz), 0.3, 1.0, 3.5, 1e-9).unwrap();
        assert!(fidelity(&pair.right, &es.r1) > 1.0 - 1e-10);
        // Reconstructed expectations reproduce the inputs.
        let (rx, rz) = ssh_model::texture_of(&pair.right).unwrap();
        assert_relative_eq!(rx, sx, epsilon = 1e-10);
        assert_relative_eq!(rz, sz, epsilon = 1e-10);
    }

    #[test]
    fn reconstruct_reference_row() {
        // Published texture row at k = 0.4π for the trivial phase.
        let sample = TextureSample::new(0.4 * PI, 0.266, 0.761);
        let (pair, _) = reconstruct_for_model(&sample, 0.3, 0.18, 1.0, TEXTURE_NORM_SLACK).unwrap();
        let (rx, rz) = ssh_model::texture_of(&pair.right).unwrap();
        assert!((rx - 0.266).abs() < 1e-3);
        assert!((rz - 0.761).abs() < 1e-3);
    }

    #[test]
    fn reconstruct_rejects_bad_points() {
        assert!(matches!(
            reconstruct_eigenvectors(&TextureSample::new(0.0, 0.8, 0.8), ImSign::Positive),
            Err(TopologyError::OutsideBloch { .. })
        ));
        assert!(matches!(
            reconstruct_eigenvectors(&TextureSample::new(0.0, 0.0, 0.0), ImSign::Positive),
            Err(TopologyError::Ambiguous)
        ));
    }

    #[test]
    fn extension_closes_half_winding_series() {
        let table = reference::s2_table();
        let extended = extend_to_4pi(&table).unwrap();
        assert_eq!(extended.len(), 2 * table.len());
        // Junction continuity at the 2π seam, to grid resolution.
        let last = table.last().unwrap();
        let first_ext = &extended[table.len()];
        let jump =
            ((first_ext.sx - last.sx).powi(2) + (first_ext.sz - last.sz).powi(2)).sqrt();
        assert!(jump < 0.6, "seam jump {jump}");
        // A closed series refuses extension.
        assert!(matches!(
            extend_to_4pi(&reference::s1_table()),
            Err(TopologyError::NotHalfWinding)
        ));
    }

    #[test]
    fn winding_from_reference_tables() {
        let model = |v, r| Some(ModelRef { v, r, gamma: 1.0 });
        let w1 = winding_from_data(&reference::s1_table(), CrossingSpec::Auto, model(0.3, 0.18))
            .unwrap();
        assert!(w1.w_per_zone().abs() < 0.05, "w = {}", w1.w_per_zone());

        let w2 =
            winding_from_data(&reference::s2_table(), CrossingSpec::Auto, model(0.3, 0.3)).unwrap();
        assert_eq!(w2.period, LoopPeriod::FourPi);
        assert!((w2.w_per_zone() - 0.5).abs() < 0.05, "w = {}", w2.w_per_zone());

        let w3 =
            winding_from_data(&reference::s3_table(), CrossingSpec::Auto, model(0.3, 1.0)).unwrap();
        assert!((w3.w_per_zone() - 1.0).abs() < 0.05, "w = {}", w3.w_per_zone());
    }

    #[test]
    fn raw_pipeline_data_get_sign_corrected() {
        // Build the raw (pointwise dominant-band) texture for the unit
        // winding phase; the crossing at k = π must be auto-detected and the
        // printed convention recovered.
        let mut raw = Vec::new();
        for i in 0..40 {
            let k = TAU * (0.5 + i as f64) / 40.0;
            let es = ssh_model::eigensystem(&SshParams::new(0.3, 1.0, 3.5, k)).unwrap();
            let (sx, sz) = ssh_model::texture_of(&es.r1).unwrap();
            raw.push(TextureSample::new(k, sx, sz));
        }
        let res = winding_from_data(
            &raw,
            CrossingSpec::Auto,
            Some(ModelRef {
                v: 0.3,
                r: 1.0,
                gamma: 3.5,
            }),
        )
        .unwrap();
        assert!((res.w_per_zone() - 1.0).abs() < 0.05, "w = {}", res.w_per_zone());
    }

    #[test]
    fn non_monotonic_k_is_rejected() {
        let table = vec![
            TextureSample::new(0.0, 0.1, 0.9),
            TextureSample::new(0.5, 0.2, 0.8),
            TextureSample::new(0.4, 0.3, 0.7),
        ];
        assert!(matches!(
            winding_from_data(&table, CrossingSpec::None, None),
            Err(TopologyError::NonMonotonicK { row: 2 })
        ));
    }

    #[test]
    fn parse_and_write_roundtrip() {
        let text = "# sample = yes\n# k-units = pi\nk,sx,sz\n0.0,0.1,0.9\n0.5,0.2,0.8\n";
        let table = parse_texture_table(text).unwrap();
        assert_eq!(table.len(), 2);
        assert_relative_eq!(table[1].k, 0.5 * PI);
        let written = write_texture_table(&table, &[("sample".into(), "yes".into())]);
        let reparsed = parse_texture_table(&written).unwrap();
        assert_relative_eq!(reparsed[1].k, table[1].k, epsilon = 1e-12);
        assert_relative_eq!(reparsed[0].sx, table[0].sx);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_texture_table("k,sx\n1,2\n").is_err());
        assert!(parse_texture_table("k,sx,sz\n1,2\n").is_err());
        assert!(parse_texture_table("# nothing\n").is_err());
    }
}
