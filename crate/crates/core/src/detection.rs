//! Constrained Neyman-Pearson environment detection.
//!
//! A sensor that collected `k` samples operates on a ROC curve `PD = f_k(UE)`.
//! Given the distribution of `k`, [`solve_thresholds`] picks one false-alarm
//! threshold per sample count so that the expected detection probability is
//! maximal while the expected false-alarm probability equals `alpha`. The
//! optimum equalises the ROC slopes across every interior threshold; the
//! common slope is the Lagrange multiplier reported as `gamma`.
//!
//! The module also carries the binary-channel decision fusion maps and the
//! active/passive/sleep classification of the decision statistic `Di`.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const MAX_SOLVER_ITERATIONS: usize = 200;
const DISTRIBUTION_SUM_TOL: f64 = 1e-12;
const CONCAVITY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectionError {
    #[error("{name} = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("expected {expected} per-k values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("sample-count probabilities sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },
    #[error("sample-count distribution is empty")]
    EmptyDistribution,
    #[error("ROC sensitivity must be positive and finite, got {0}")]
    InvalidSensitivity(f64),
    #[error("ROC curve {k} is invalid: {reason}")]
    InvalidCurve { k: usize, reason: String },
    #[error("ROC model covers k <= {roc_k_max} but the distribution needs k <= {dist_k_max}")]
    RocTooShort { roc_k_max: usize, dist_k_max: usize },
    #[error("alpha = {0} must lie strictly inside (0, 1)")]
    InvalidAlpha(f64),
    #[error("solver tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error(
        "every sample count with positive probability has a linear ROC; the optimum is not unique"
    )]
    DegenerateDistribution,
    #[error("threshold solver did not converge after {iterations} iterations (gamma bracket [{lower}, {upper}])")]
    NonConvergence {
        iterations: usize,
        lower: f64,
        upper: f64,
    },
    #[error("mode band epsilon = {0} must lie in (0, 0.5)")]
    InvalidEpsilon(f64),
}

pub type Result<T> = std::result::Result<T, DetectionError>;

fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(DetectionError::OutOfRange { name, value })
    }
}

/// A piecewise-linear, concave ROC curve from `(0, 0)` to `(1, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    points: Vec<(f64, f64)>,
    slopes: Vec<f64>,
}

impl RocCurve {
    pub fn new(k: usize, points: Vec<(f64, f64)>) -> Result<Self> {
        let invalid = |reason: &str| DetectionError::InvalidCurve {
            k,
            reason: reason.to_string(),
        };
        if points.len() < 2 {
            return Err(invalid("needs at least two points"));
        }
        if points[0] != (0.0, 0.0) || points[points.len() - 1] != (1.0, 1.0) {
            return Err(invalid("must start at (0, 0) and end at (1, 1)"));
        }
        let mut slopes = Vec::with_capacity(points.len() - 1);
        for w in points.windows(2) {
            let (u0, p0) = w[0];
            let (u1, p1) = w[1];
            if !(u1 > u0) {
                return Err(invalid(
                    "false-alarm coordinates must be strictly increasing",
                ));
            }
            if p1 < p0 {
                return Err(invalid("detection coordinates must be nondecreasing"));
            }
            slopes.push((p1 - p0) / (u1 - u0));
        }
        if slopes.windows(2).any(|s| s[1] > s[0] + CONCAVITY_TOL) {
            return Err(invalid("slopes must be nonincreasing (concave curve)"));
        }
        Ok(Self { points, slopes })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    fn segment(&self, u: f64) -> usize {
        // index of the segment [u_j, u_{j+1}) containing u; u = 1 maps to the last one
        let idx = self.points.partition_point(|&(x, _)| x <= u);
        idx.saturating_sub(1).min(self.slopes.len() - 1)
    }

    fn value(&self, u: f64) -> f64 {
        let j = self.segment(u);
        let (u0, p0) = self.points[j];
        p0 + self.slopes[j] * (u - u0)
    }

    fn slope_bounds(&self, u: f64) -> (f64, f64) {
        let j = self.segment(u);
        let right = self.slopes[j];
        let left = if u == self.points[j].0 && j > 0 {
            self.slopes[j - 1]
        } else if u == self.points[j].0 {
            f64::INFINITY
        } else {
            right
        };
        (right, left)
    }

    fn argmax_interval(&self, gamma: f64) -> (f64, f64) {
        let n = self.points.len();
        // lowest vertex whose right slope is <= gamma (the endpoint u = 1 always qualifies)
        let lo = (0..n)
            .find(|&j| j == n - 1 || self.slopes[j] <= gamma)
            .map(|j| self.points[j].0)
            .unwrap_or(1.0);
        // highest vertex whose left slope is >= gamma (u = 0 always qualifies)
        let hi = (0..n)
            .rev()
            .find(|&j| j == 0 || self.slopes[j - 1] >= gamma)
            .map(|j| self.points[j].0)
            .unwrap_or(0.0);
        (lo, hi)
    }

    fn is_linear(&self) -> bool {
        self.slopes
            .iter()
            .all(|s| (s - self.slopes[0]).abs() <= CONCAVITY_TOL)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RocFamily {
    /// `f_k(u) = u^(1 / (1 + (k + k_offset) * sensitivity))`.
    PowerLaw { sensitivity: f64, k_offset: usize },
    /// One interpolated curve per sample count, index = k.
    Tabulated(Vec<RocCurve>),
}

/// The family of ROC curves `PD^k = f_k(UE^k)` for `k = 0..=k_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocModel {
    family: RocFamily,
    k_max: usize,
}

impl RocModel {
    pub fn power_law(sensitivity: f64, k_max: usize) -> Result<Self> {
        if !(sensitivity > 0.0 && sensitivity.is_finite()) {
            return Err(DetectionError::InvalidSensitivity(sensitivity));
        }
        Ok(Self {
            family: RocFamily::PowerLaw {
                sensitivity,
                k_offset: 0,
            },
            k_max,
        })
    }

    /// Shift the power-law index so that `k = 0` already uses `k_offset` samples.
    /// No effect on tabulated models.
    pub fn with_k_offset(mut self, offset: usize) -> Self {
        if let RocFamily::PowerLaw { k_offset, .. } = &mut self.family {
            *k_offset = offset;
        }
        self
    }

    pub fn tabulated(curves: Vec<Vec<(f64, f64)>>) -> Result<Self> {
        if curves.is_empty() {
            return Err(DetectionError::EmptyDistribution);
        }
        let k_max = curves.len() - 1;
        let curves = curves
            .into_iter()
            .enumerate()
            .map(|(k, pts)| RocCurve::new(k, pts))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            family: RocFamily::Tabulated(curves),
            k_max,
        })
    }

    pub fn family(&self) -> &RocFamily {
        &self.family
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    fn exponent(sensitivity: f64, k_offset: usize, k: usize) -> f64 {
        1.0 / (1.0 + (k + k_offset) as f64 * sensitivity)
    }

    /// Detection probability `f_k(u)`.
    pub fn pd(&self, k: usize, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match &self.family {
            RocFamily::PowerLaw {
                sensitivity,
                k_offset,
            } => u.powf(Self::exponent(*sensitivity, *k_offset, k)),
            RocFamily::Tabulated(curves) => curves[k].value(u),
        }
    }

    /// Slope `f'_k(u)`. At a kink of a tabulated curve this is the right slope.
    pub fn slope(&self, k: usize, u: f64) -> f64 {
        self.slope_bounds(k, u).0
    }

    /// `(right, left)` one-sided slopes at `u`; equal wherever `f_k` is smooth.
    pub fn slope_bounds(&self, k: usize, u: f64) -> (f64, f64) {
        match &self.family {
            RocFamily::PowerLaw {
                sensitivity,
                k_offset,
            } => {
                let e = Self::exponent(*sensitivity, *k_offset, k);
                let d = if e == 1.0 {
                    1.0
                } else if u <= 0.0 {
                    f64::INFINITY
                } else {
                    e * u.powf(e - 1.0)
                };
                (d, d)
            }
            RocFamily::Tabulated(curves) => curves[k].slope_bounds(u.clamp(0.0, 1.0)),
        }
    }

    /// The interval `[lo, hi]` of maximisers of `f_k(u) - gamma * u` over `[0, 1]`.
    fn argmax_interval(&self, k: usize, gamma: f64) -> (f64, f64) {
        match &self.family {
            RocFamily::PowerLaw {
                sensitivity,
                k_offset,
            } => {
                let e = Self::exponent(*sensitivity, *k_offset, k);
                if e == 1.0 {
                    if gamma < 1.0 {
                        (1.0, 1.0)
                    } else if gamma > 1.0 {
                        (0.0, 0.0)
                    } else {
                        (0.0, 1.0)
                    }
                } else if gamma <= e {
                    (1.0, 1.0)
                } else {
                    let u = (e / gamma).powf(1.0 / (1.0 - e));
                    (u, u)
                }
            }
            RocFamily::Tabulated(curves) => curves[k].argmax_interval(gamma),
        }
    }

    fn is_linear(&self, k: usize) -> bool {
        match &self.family {
            RocFamily::PowerLaw {
                sensitivity,
                k_offset,
            } => Self::exponent(*sensitivity, *k_offset, k) == 1.0,
            RocFamily::Tabulated(curves) => curves[k].is_linear(),
        }
    }
}

/// Probability `p_k` of collecting `k` samples, truncated at `k_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleCountDistribution {
    probs: Vec<f64>,
}

impl SampleCountDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(DetectionError::EmptyDistribution);
        }
        for &p in &probs {
            check_probability("p_k", p)?;
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > DISTRIBUTION_SUM_TOL {
            return Err(DetectionError::NotNormalized { sum });
        }
        Ok(Self { probs })
    }

    pub fn uniform(k_max: usize) -> Self {
        let n = k_max + 1;
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn k_max(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        // probabilities were validated on construction
        WeightedIndex::new(&self.probs)
            .expect("validated distribution")
            .sample(rng)
    }
}

/// Solved per-k thresholds and the common ROC slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSolution {
    pub ue: Vec<f64>,
    pub gamma: f64,
    pub expected_ue: f64,
    pub expected_pd: f64,
    pub iterations: usize,
}

fn check_thresholds(dist: &SampleCountDistribution, ue: &[f64]) -> Result<()> {
    if ue.len() != dist.probs.len() {
        return Err(DetectionError::LengthMismatch {
            expected: dist.probs.len(),
            actual: ue.len(),
        });
    }
    ue.iter().try_for_each(|&u| check_probability("ue_k", u))
}

/// `E(UE) = sum_k p_k * ue_k`.
pub fn expected_ue(dist: &SampleCountDistribution, ue: &[f64]) -> Result<f64> {
    check_thresholds(dist, ue)?;
    let e: f64 = dist.probs.iter().zip(ue).map(|(p, u)| p * u).sum();
    Ok(e.clamp(0.0, 1.0))
}

/// `E(PD) = sum_k p_k * f_k(ue_k)`.
pub fn expected_pd(dist: &SampleCountDistribution, ue: &[f64], roc: &RocModel) -> Result<f64> {
    check_thresholds(dist, ue)?;
    if roc.k_max < dist.k_max() {
        return Err(DetectionError::RocTooShort {
            roc_k_max: roc.k_max,
            dist_k_max: dist.k_max(),
        });
    }
    let e: f64 = dist
        .probs
        .iter()
        .zip(ue)
        .enumerate()
        .map(|(k, (p, &u))| p * roc.pd(k, u))
        .sum();
    Ok(e.clamp(0.0, 1.0))
}

/// Maximise `E(PD)` subject to `E(UE) = alpha`.
///
/// Bisects on the multiplier `gamma`. For a given slope every sample count
/// contributes the maximisers of `f_k(u) - gamma * u`, which shrink as
/// `gamma` grows, so `E(UE)` is nonincreasing in `gamma`. Once the bracket is
/// narrower than `tol` the thresholds on either side are blended so the
/// constraint holds exactly; this also resolves linear (flat-slope) curves
/// whose maximiser set jumps from 1 to 0.
pub fn solve_thresholds(
    roc: &RocModel,
    dist: &SampleCountDistribution,
    alpha: f64,
    tol: f64,
) -> Result<ThresholdSolution> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(DetectionError::InvalidAlpha(alpha));
    }
    if !(tol > 0.0) {
        return Err(DetectionError::InvalidTolerance(tol));
    }
    let k_max = dist.k_max();
    if roc.k_max < k_max {
        return Err(DetectionError::RocTooShort {
            roc_k_max: roc.k_max,
            dist_k_max: k_max,
        });
    }
    let active: Vec<usize> = (0..=k_max).filter(|&k| dist.probs[k] > 0.0).collect();
    if active.iter().all(|&k| roc.is_linear(k)) {
        return Err(DetectionError::DegenerateDistribution);
    }

    let upper_set = |gamma: f64| -> Vec<f64> {
        (0..=k_max)
            .map(|k| roc.argmax_interval(k, gamma).1)
            .collect()
    };
    let mass = |ue: &[f64]| -> f64 { dist.probs.iter().zip(ue).map(|(p, u)| p * u).sum() };

    // invariant: mass(upper_set(lower)) >= alpha > mass(upper_set(upper))
    let mut lower = 0.0_f64;
    let mut upper = 1.0_f64;
    let mut iterations = 0;
    while mass(&upper_set(upper)) >= alpha {
        lower = upper;
        upper *= 2.0;
        iterations += 1;
        if iterations >= MAX_SOLVER_ITERATIONS || !upper.is_finite() {
            return Err(DetectionError::NonConvergence {
                iterations,
                lower,
                upper,
            });
        }
    }
    while upper - lower > tol {
        let mid = 0.5 * (lower + upper);
        if mid <= lower || mid >= upper || iterations >= MAX_SOLVER_ITERATIONS {
            return Err(DetectionError::NonConvergence {
                iterations,
                lower,
                upper,
            });
        }
        if mass(&upper_set(mid)) >= alpha {
            lower = mid;
        } else {
            upper = mid;
        }
        iterations += 1;
    }

    let at_lower = upper_set(lower);
    let at_upper = upper_set(upper);
    let (m_lower, m_upper) = (mass(&at_lower), mass(&at_upper));
    let theta = if m_lower > m_upper {
        ((alpha - m_upper) / (m_lower - m_upper)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let ue: Vec<f64> = at_lower
        .iter()
        .zip(&at_upper)
        .map(|(a, b)| (theta * a + (1.0 - theta) * b).clamp(0.0, 1.0))
        .collect();

    Ok(ThresholdSolution {
        expected_ue: expected_ue(dist, &ue)?,
        expected_pd: expected_pd(dist, &ue, roc)?,
        gamma: 0.5 * (lower + upper),
        ue,
        iterations,
    })
}

/// Bit-flip probabilities of the channel carrying a sensor's binary decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionParams {
    /// Probability a transmitted "0" is received as "1".
    pub pc0: f64,
    /// Probability a transmitted "1" is received as "0".
    pub pc1: f64,
}

impl FusionParams {
    pub fn new(pc0: f64, pc1: f64) -> Result<Self> {
        check_probability("pc0", pc0)?;
        check_probability("pc1", pc1)?;
        Ok(Self { pc0, pc1 })
    }

    pub fn symmetric(pc: f64) -> Result<Self> {
        Self::new(pc, pc)
    }
}

/// False-alarm probability after the channel: `ue (1 - pc1) + (1 - ue) pc0`.
pub fn fuse_ue(ue: f64, params: &FusionParams) -> Result<f64> {
    check_probability("ue", ue)?;
    Ok((ue * (1.0 - params.pc1) + (1.0 - ue) * params.pc0).clamp(0.0, 1.0))
}

/// Detection probability after a symmetric channel: `pd + (1 - 2 pd) pc`.
pub fn fuse_pd(pd: f64, pc: f64) -> Result<f64> {
    check_probability("pd", pd)?;
    check_probability("pc", pc)?;
    Ok((pd + (1.0 - 2.0 * pd) * pc).clamp(0.0, 1.0))
}

/// Decision statistic `Di = IOE - E(PD)`.
pub fn compute_di(ioe: f64, expected_pd: f64) -> f64 {
    ioe - expected_pd
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    Active,
    Passive,
    Sleep,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Active, Mode::Passive, Mode::Sleep];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeDecision {
    pub di: f64,
    pub mode: Mode,
    pub epsilon: f64,
}

/// Passive within `epsilon` of 1, Active within `epsilon` of 0, Sleep otherwise.
pub fn decide_mode(di: f64, epsilon: f64) -> Result<ModeDecision> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(DetectionError::InvalidEpsilon(epsilon));
    }
    let mode = if (di - 1.0).abs() <= epsilon {
        Mode::Passive
    } else if di.abs() <= epsilon {
        Mode::Active
    } else {
        Mode::Sleep
    };
    Ok(ModeDecision { di, mode, epsilon })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sqrt_family() -> RocModel {
        // f_0 = sqrt(u), f_1 = u^(1/3)
        RocModel::power_law(1.0, 1).unwrap().with_k_offset(1)
    }

    #[test]
    fn expected_ue_examples() {
        let single = SampleCountDistribution::new(vec![1.0]).unwrap();
        assert_eq!(expected_ue(&single, &[0.25]).unwrap(), 0.25);
        assert_eq!(expected_ue(&single, &[0.0]).unwrap(), 0.0);
        let half = SampleCountDistribution::new(vec![0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(
            expected_ue(&half, &[0.2, 0.4]).unwrap(),
            0.3,
            epsilon = 1e-15
        );
    }

    #[test]
    fn expected_ue_rejects_bad_input() {
        let half = SampleCountDistribution::new(vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            expected_ue(&half, &[0.2]),
            Err(DetectionError::LengthMismatch { .. })
        ));
        assert!(matches!(
            expected_ue(&half, &[0.2, 1.5]),
            Err(DetectionError::OutOfRange { .. })
        ));
    }

    #[test]
    fn expected_pd_examples() {
        let roc = sqrt_family();
        let single = SampleCountDistribution::new(vec![1.0]).unwrap();
        assert_abs_diff_eq!(
            expected_pd(&single, &[0.25], &roc).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert_eq!(expected_pd(&single, &[1.0], &roc).unwrap(), 1.0);
        let half = SampleCountDistribution::new(vec![0.5, 0.5]).unwrap();
        // 0.5 * 0.5 + 0.5 * 0.25^(1/3)
        assert_abs_diff_eq!(
            expected_pd(&half, &[0.25, 0.25], &roc).unwrap(),
            0.5649802624737184,
            epsilon = 1e-12
        );
    }

    #[test]
    fn distribution_must_normalize() {
        assert!(matches!(
            SampleCountDistribution::new(vec![0.5, 0.4]),
            Err(DetectionError::NotNormalized { .. })
        ));
        assert!(SampleCountDistribution::new(vec![]).is_err());
        assert!(SampleCountDistribution::new(vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn single_point_solution_is_forced() {
        let roc = sqrt_family();
        let dist = SampleCountDistribution::new(vec![1.0]).unwrap();
        let sol = solve_thresholds(&roc, &dist, 0.25, 1e-9).unwrap();
        assert_abs_diff_eq!(sol.ue[0], 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.gamma, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.expected_pd, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn two_point_solution_matches_grid_maximum() {
        // grid maximum at step 1e-3 is 0.3902090088296355 (u0 = 0.102, u1 = 0.098)
        let roc = sqrt_family();
        let dist = SampleCountDistribution::new(vec![0.5, 0.5]).unwrap();
        let sol = solve_thresholds(&roc, &dist, 0.1, 1e-9).unwrap();
        assert!(sol.expected_pd >= 0.3902090088296355 - 1e-3);
        assert!((sol.expected_pd - 0.3902090088296355).abs() <= 1e-3);
        assert_abs_diff_eq!(sol.expected_ue, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn alpha_near_one_saturates() {
        let roc = RocModel::power_law(0.7, 3).unwrap().with_k_offset(1);
        let dist = SampleCountDistribution::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let sol = solve_thresholds(&roc, &dist, 1.0 - 1e-9, 1e-12).unwrap();
        assert!(sol.ue.iter().all(|&u| u > 1.0 - 1e-6));
        assert!(sol.expected_pd > 1.0 - 1e-6);
    }

    #[test]
    fn linear_component_absorbs_residual_mass() {
        // f_0 linear, f_1 = sqrt: the optimum puts f_1 at slope 1 (u = 1/4)
        let roc = RocModel::power_law(1.0, 1).unwrap();
        let dist = SampleCountDistribution::new(vec![0.5, 0.5]).unwrap();
        let sol = solve_thresholds(&roc, &dist, 0.3, 1e-10).unwrap();
        assert_abs_diff_eq!(sol.gamma, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.ue[1], 0.25, epsilon = 1e-8);
        assert_abs_diff_eq!(sol.ue[0], 0.35, epsilon = 1e-8);
        assert_abs_diff_eq!(sol.expected_ue, 0.3, epsilon = 1e-12);
    }

    #[test]
    fn linear_only_mass_is_degenerate() {
        let roc = RocModel::power_law(1.0, 2).unwrap();
        let dist = SampleCountDistribution::new(vec![1.0]).unwrap();
        assert_eq!(
            solve_thresholds(&roc, &dist, 0.2, 1e-9),
            Err(DetectionError::DegenerateDistribution)
        );
    }

    #[test]
    fn solver_rejects_bad_parameters() {
        let roc = sqrt_family();
        let dist = SampleCountDistribution::new(vec![1.0]).unwrap();
        assert!(matches!(
            solve_thresholds(&roc, &dist, 1.0, 1e-9),
            Err(DetectionError::InvalidAlpha(_))
        ));
        assert!(matches!(
            solve_thresholds(&roc, &dist, 0.0, 1e-9),
            Err(DetectionError::InvalidAlpha(_))
        ));
        assert!(matches!(
            solve_thresholds(&roc, &dist, 0.5, 0.0),
            Err(DetectionError::InvalidTolerance(_))
        ));
        let long = SampleCountDistribution::uniform(4);
        assert!(matches!(
            solve_thresholds(&roc, &long, 0.5, 1e-9),
            Err(DetectionError::RocTooShort { .. })
        ));
    }

    #[test]
    fn unreachable_tolerance_reports_bracket() {
        let roc = sqrt_family();
        let dist = SampleCountDistribution::new(vec![0.5, 0.5]).unwrap();
        match solve_thresholds(&roc, &dist, 0.1, 1e-30) {
            Err(DetectionError::NonConvergence { lower, upper, .. }) => {
                assert!(lower < upper);
                assert!(lower > 1.5 && upper < 1.6);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn tabulated_curve_solution_sits_on_kinks() {
        let roc = RocModel::tabulated(vec![
            vec![(0.0, 0.0), (0.1, 0.5), (1.0, 1.0)],
            vec![(0.0, 0.0), (0.2, 0.8), (1.0, 1.0)],
        ])
        .unwrap();
        let dist = SampleCountDistribution::new(vec![0.5, 0.5]).unwrap();
        let sol = solve_thresholds(&roc, &dist, 0.15, 1e-10).unwrap();
        assert_abs_diff_eq!(sol.expected_ue, 0.15, epsilon = 1e-12);
        // both curves at their kinks: 0.5*0.5 + 0.5*0.8
        assert_abs_diff_eq!(sol.expected_pd, 0.65, epsilon = 1e-9);
        for (k, &u) in sol.ue.iter().enumerate() {
            let (right, left) = roc.slope_bounds(k, u);
            assert!(right <= sol.gamma + 1e-9 && sol.gamma <= left + 1e-9);
        }
    }

    #[test]
    fn tabulated_curves_are_validated() {
        assert!(RocModel::tabulated(vec![vec![(0.0, 0.0), (0.5, 0.2), (1.0, 1.0)]]).is_err());
        assert!(RocModel::tabulated(vec![vec![(0.0, 0.0), (0.5, 0.6)]]).is_err());
        assert!(
            RocModel::tabulated(vec![vec![(0.0, 0.0), (0.5, 0.9), (0.5, 0.95), (1.0, 1.0)]])
                .is_err()
        );
        let ok = RocModel::tabulated(vec![vec![(0.0, 0.0), (0.5, 0.9), (1.0, 1.0)]]).unwrap();
        assert_abs_diff_eq!(ok.pd(0, 0.25), 0.45, epsilon = 1e-15);
        assert_abs_diff_eq!(ok.pd(0, 0.75), 0.95, epsilon = 1e-15);
    }

    #[test]
    fn fusion_examples() {
        let p = FusionParams::new(0.3, 0.2).unwrap();
        assert_abs_diff_eq!(fuse_ue(0.1, &p).unwrap(), 0.35, epsilon = 1e-15);
        assert_eq!(
            fuse_ue(0.1, &FusionParams::symmetric(0.0).unwrap()).unwrap(),
            0.1
        );
        assert_eq!(
            fuse_ue(0.9, &FusionParams::symmetric(0.5).unwrap()).unwrap(),
            0.5
        );
        assert_abs_diff_eq!(fuse_pd(0.8, 0.1).unwrap(), 0.74, epsilon = 1e-15);
        assert_eq!(fuse_pd(0.8, 0.0).unwrap(), 0.8);
        assert_eq!(fuse_pd(0.5, 0.37).unwrap(), 0.5);
        assert!(fuse_pd(1.2, 0.1).is_err());
        assert!(FusionParams::new(0.1, -0.1).is_err());
    }

    #[test]
    fn di_examples() {
        assert_eq!(compute_di(1.5, 0.5), 1.0);
        assert_eq!(compute_di(0.5, 0.5), 0.0);
        assert_abs_diff_eq!(compute_di(1.8, 0.3), 1.5, epsilon = 1e-15);
    }

    #[test]
    fn mode_examples() {
        assert_eq!(decide_mode(1.0, 0.05).unwrap().mode, Mode::Passive);
        assert_eq!(decide_mode(0.0, 0.05).unwrap().mode, Mode::Active);
        assert_eq!(decide_mode(1.5, 0.05).unwrap().mode, Mode::Sleep);
        assert_eq!(decide_mode(-0.2, 0.05).unwrap().mode, Mode::Sleep);
        assert_eq!(decide_mode(f64::NAN, 0.05).unwrap().mode, Mode::Sleep);
        assert!(decide_mode(0.0, 0.5).is_err());
        assert!(decide_mode(0.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn power_law_roc_is_a_valid_concave_curve(s in 0.01f64..20.0, k in 0usize..6) {
            let roc = RocModel::power_law(s, 6).unwrap().with_k_offset(1);
            prop_assert_eq!(roc.pd(k, 0.0), 0.0);
            prop_assert_eq!(roc.pd(k, 1.0), 1.0);
            let mut prev_f = 0.0;
            let mut prev_d = f64::INFINITY;
            for i in 1..1000 {
                let u = i as f64 * 1e-3;
                let f = roc.pd(k, u);
                let d = roc.slope(k, u);
                prop_assert!(f >= prev_f);
                prop_assert!(d <= prev_d * (1.0 + 1e-12));
                prev_f = f;
                prev_d = d;
            }
        }

        #[test]
        fn fusion_preserves_unit_interval(x in 0.0f64..=1.0, pc0 in 0.0f64..=1.0, pc1 in 0.0f64..=1.0) {
            let p = FusionParams::new(pc0, pc1).unwrap();
            let b = fuse_ue(x, &p).unwrap();
            prop_assert!((0.0..=1.0).contains(&b));
            let g = fuse_pd(x, pc0).unwrap();
            prop_assert!((0.0..=1.0).contains(&g));
            prop_assert!((fuse_pd(x, 0.5).unwrap() - 0.5).abs() < 1e-15);
            prop_assert_eq!(fuse_pd(x, 0.0).unwrap(), x);
        }

        #[test]
        fn mode_partition_is_exhaustive(di in -3.0f64..3.0, eps in 0.001f64..0.499) {
            let d = decide_mode(di, eps).unwrap();
            let passive = (di - 1.0).abs() <= eps;
            let active = di.abs() <= eps;
            prop_assert!(!(passive && active));
            let expected = if passive { Mode::Passive } else if active { Mode::Active } else { Mode::Sleep };
            prop_assert_eq!(d.mode, expected);
        }

        #[test]
        fn solution_is_feasible_and_stationary(
            s in 0.05f64..5.0,
            raw in prop::collection::vec(0.01f64..1.0, 1..5),
            alpha in 0.01f64..0.99,
        ) {
            let total: f64 = raw.iter().sum();
            let mut probs: Vec<f64> = raw.iter().map(|p| p / total).collect();
            let tail: f64 = probs[..probs.len() - 1].iter().sum();
            *probs.last_mut().unwrap() = 1.0 - tail;
            let dist = SampleCountDistribution::new(probs).unwrap();
            let roc = RocModel::power_law(s, dist.k_max()).unwrap().with_k_offset(1);
            let tol = 1e-9;
            let sol = solve_thresholds(&roc, &dist, alpha, tol).unwrap();
            prop_assert!((sol.expected_ue - alpha).abs() <= tol);
            prop_assert!((expected_ue(&dist, &sol.ue).unwrap() - sol.expected_ue).abs() <= 1e-12);
            prop_assert!((expected_pd(&dist, &sol.ue, &roc).unwrap() - sol.expected_pd).abs() <= 1e-12);
            for (k, &u) in sol.ue.iter().enumerate() {
                if u > 0.0 && u < 1.0 {
                    let d = roc.slope(k, u);
                    prop_assert!((d - sol.gamma).abs() <= tol,
                        "k={} u={} slope={} gamma={}", k, u, d, sol.gamma);
                }
            }
        }
    }
}
