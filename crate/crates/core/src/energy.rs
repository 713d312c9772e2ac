//! Energy bookkeeping: per-mode consumption, network sums, link admission and
//! the annulus traffic/energy model around the sink.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("expected {expected} indicators, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("node energy {0} J is negative")]
    NegativeEnergy(f64),
    #[error("duration {0} s is negative")]
    NegativeDuration(f64),
    #[error("link admission needs at least one candidate next hop")]
    NoCandidates,
    #[error("normalized distance {0} is outside (0, 1]")]
    DistanceOutOfRange(f64),
    #[error("minimum link energy must be positive, got {0}")]
    InvalidMinimumEnergy(f64),
    #[error("invalid energy parameters: {0}")]
    InvalidParams(String),
    #[error("inner radius {inner} exceeds outer radius {outer}")]
    InvertedAnnulus { inner: f64, outer: f64 },
}

pub type Result<T> = std::result::Result<T, EnergyError>;

/// Radio and battery parameters. Powers are in mW, transmit powers in dBm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    pub power_comm: f64,
    pub power_sense: f64,
    pub power_sleep: f64,
    pub tx_power_min: f64,
    pub tx_power_max: f64,
    /// Minimum admissible received link energy, J.
    pub e_min: f64,
    pub path_loss_n: f64,
    /// Harvested power credited while passive, mW.
    pub harvest_rate: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            power_comm: 160.0,
            power_sense: 12.0,
            power_sleep: 0.5,
            tx_power_min: -20.0,
            tx_power_max: 12.0,
            e_min: 1.0e-3,
            path_loss_n: 2.0,
            harvest_rate: 0.5,
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(EnergyError::InvalidParams(msg));
        for (name, v) in [
            ("power_comm", self.power_comm),
            ("power_sense", self.power_sense),
            ("power_sleep", self.power_sleep),
            ("e_min", self.e_min),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.power_sleep < self.power_sense && self.power_sense < self.power_comm) {
            return bad("expected power_sleep < power_sense < power_comm".into());
        }
        if !(self.tx_power_min <= self.tx_power_max) {
            return bad(format!(
                "tx_power_min {} dBm exceeds tx_power_max {} dBm",
                self.tx_power_min, self.tx_power_max
            ));
        }
        if !(self.path_loss_n >= 1.0) {
            return bad(format!(
                "path_loss_n must be >= 1, got {}",
                self.path_loss_n
            ));
        }
        if !(self.harvest_rate >= 0.0 && self.harvest_rate.is_finite()) {
            return bad(format!(
                "harvest_rate must be >= 0, got {}",
                self.harvest_rate
            ));
        }
        Ok(())
    }

    /// Draw of a mode in watts. Passive draws nothing; its credit is separate.
    pub fn power_w(&self, mode: EnergyMode) -> f64 {
        match mode {
            EnergyMode::ActiveComm => self.power_comm * 1e-3,
            EnergyMode::ActiveSense => self.power_sense * 1e-3,
            EnergyMode::Passive => 0.0,
            EnergyMode::Sleep => self.power_sleep * 1e-3,
        }
    }

    pub fn harvest_w(&self) -> f64 {
        self.harvest_rate * 1e-3
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EnergyMode {
    ActiveComm,
    ActiveSense,
    Passive,
    Sleep,
}

/// Energy drawn in `mode` over `duration` seconds, J.
pub fn mode_energy(mode: EnergyMode, duration: f64, params: &EnergyParams) -> Result<f64> {
    if duration < 0.0 {
        return Err(EnergyError::NegativeDuration(duration));
    }
    Ok(params.power_w(mode) * duration)
}

/// Harvest credit earned in passive mode over `duration`, before any battery cap.
pub fn harvest_credit(duration: f64, params: &EnergyParams) -> Result<f64> {
    if duration < 0.0 {
        return Err(EnergyError::NegativeDuration(duration));
    }
    Ok(params.harvest_w() * duration)
}

/// Sum of node energies whose indicator is set.
pub fn network_energy(node_energies: &[f64], indicators: &[bool]) -> Result<f64> {
    if node_energies.len() != indicators.len() {
        return Err(EnergyError::LengthMismatch {
            expected: node_energies.len(),
            actual: indicators.len(),
        });
    }
    let mut total = 0.0;
    for (&e, &on) in node_energies.iter().zip(indicators) {
        if e < 0.0 {
            return Err(EnergyError::NegativeEnergy(e));
        }
        if on {
            total += e;
        }
    }
    Ok(total)
}

/// Link indicator: a node only counts as a receiver when some energy arrives.
pub fn link_indicator(received_energy: f64) -> bool {
    received_energy > 0.0
}

/// Received energy on link `i -> j` and the normalized distances to the
/// candidate next hops of `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub e_ij: f64,
    pub r_candidates: Vec<f64>,
}

impl LinkBudget {
    pub fn new(e_ij: f64, r_candidates: Vec<f64>) -> Result<Self> {
        check_candidates(&r_candidates)?;
        if e_ij < 0.0 {
            return Err(EnergyError::NegativeEnergy(e_ij));
        }
        Ok(Self { e_ij, r_candidates })
    }

    pub fn indicator(&self) -> bool {
        link_indicator(self.e_ij)
    }

    pub fn admissible(&self, n: f64, e_min: f64) -> Result<bool> {
        link_admissible(self.e_ij, &self.r_candidates, n, e_min)
    }
}

fn check_candidates(r: &[f64]) -> Result<()> {
    if r.is_empty() {
        return Err(EnergyError::NoCandidates);
    }
    match r.iter().find(|&&x| !(x > 0.0 && x <= 1.0)) {
        Some(&x) => Err(EnergyError::DistanceOutOfRange(x)),
        None => Ok(()),
    }
}

/// `e_ij > (1 + min r^n) * e_min`, strictly.
pub fn link_admissible(e_ij: f64, r_candidates: &[f64], n: f64, e_min: f64) -> Result<bool> {
    check_candidates(r_candidates)?;
    if !(e_min > 0.0) {
        return Err(EnergyError::InvalidMinimumEnergy(e_min));
    }
    let min_rn = r_candidates
        .iter()
        .map(|r| r.powf(n))
        .fold(f64::INFINITY, f64::min);
    Ok(e_ij > (1.0 + min_rn) * e_min)
}

/// Ring `inner <= x <= outer` around the sink with uniform node density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusParams {
    /// Nodes per m².
    pub lambda: f64,
    pub outer_radius: f64,
    /// `r + t/2`.
    pub inner_radius: f64,
    /// Transmission factor.
    pub td: f64,
    /// Data-generation speed factor.
    pub ds: f64,
    /// Energy-consumption speed factor.
    pub vj: f64,
}

impl AnnulusParams {
    pub fn new(lambda: f64, inner_radius: f64, outer_radius: f64) -> Self {
        Self {
            lambda,
            outer_radius,
            inner_radius,
            td: 1.0,
            ds: 1.0,
            vj: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(EnergyError::InvalidParams(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if !(self.inner_radius >= 0.0) {
            return Err(EnergyError::InvalidParams(format!(
                "inner radius must be >= 0, got {}",
                self.inner_radius
            )));
        }
        if self.inner_radius > self.outer_radius {
            return Err(EnergyError::InvertedAnnulus {
                inner: self.inner_radius,
                outer: self.outer_radius,
            });
        }
        Ok(())
    }

    /// `2π ∫ λ x dx` over the ring: the expected node count it contains.
    pub fn node_mass(&self) -> f64 {
        PI * self.lambda * (self.outer_radius.powi(2) - self.inner_radius.powi(2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusTotals {
    pub transmission: f64,
    pub generation: f64,
    pub consumption: f64,
    pub total: f64,
}

pub fn annulus_totals(params: &AnnulusParams) -> Result<AnnulusTotals> {
    params.validate()?;
    let mass = params.node_mass();
    let transmission = mass * params.td;
    let generation = mass * params.ds;
    let consumption = mass * params.vj;
    Ok(AnnulusTotals {
        transmission,
        generation,
        consumption,
        total: consumption + generation + transmission,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    #[test]
    fn network_energy_examples() {
        assert_eq!(
            network_energy(&[2.0, 3.0, 5.0], &[true, false, true]).unwrap(),
            7.0
        );
        assert_eq!(network_energy(&[2.0, 3.0], &[false, false]).unwrap(), 0.0);
        assert_eq!(network_energy(&[1.5], &[true]).unwrap(), 1.5);
        assert!(network_energy(&[1.0], &[true, true]).is_err());
        assert_eq!(
            network_energy(&[-1.0], &[false]),
            Err(EnergyError::NegativeEnergy(-1.0))
        );
    }

    #[test]
    fn link_admission_examples() {
        assert!(link_admissible(1.3, &[0.5, 0.8], 2.0, 1.0).unwrap());
        assert!(!link_admissible(1.2, &[0.5, 0.8], 2.0, 1.0).unwrap());
        assert!(!link_admissible(2.0, &[1.0], 1.0, 1.0).unwrap());
        assert!(link_admissible(2.0 + 1e-12, &[1.0], 1.0, 1.0).unwrap());
        assert_eq!(
            link_admissible(2.0, &[], 1.0, 1.0),
            Err(EnergyError::NoCandidates)
        );
        assert!(link_admissible(2.0, &[0.0], 1.0, 1.0).is_err());
        assert!(link_admissible(2.0, &[1.5], 1.0, 1.0).is_err());
    }

    #[test]
    fn link_budget_indicator() {
        let silent = LinkBudget::new(0.0, vec![0.4]).unwrap();
        assert!(!silent.indicator());
        assert!(!silent.admissible(2.0, 1e-3).unwrap());
        let heard = LinkBudget::new(0.01, vec![0.4]).unwrap();
        assert!(heard.indicator());
        assert!(heard.admissible(2.0, 1e-3).unwrap());
    }

    #[test]
    fn mode_energy_examples() {
        let p = EnergyParams::default();
        assert_abs_diff_eq!(
            mode_energy(EnergyMode::ActiveComm, 10.0, &p).unwrap(),
            1.6,
            epsilon = 1e-15
        );
        assert_eq!(mode_energy(EnergyMode::Sleep, 0.0, &p).unwrap(), 0.0);
        assert_abs_diff_eq!(
            mode_energy(EnergyMode::ActiveSense, 100.0, &p).unwrap(),
            1.2,
            epsilon = 1e-15
        );
        assert_eq!(mode_energy(EnergyMode::Passive, 100.0, &p).unwrap(), 0.0);
        assert_abs_diff_eq!(harvest_credit(100.0, &p).unwrap(), 0.05, epsilon = 1e-15);
        assert!(mode_energy(EnergyMode::Sleep, -1.0, &p).is_err());
    }

    #[test]
    fn default_params_are_valid() {
        EnergyParams::default().validate().unwrap();
        let p = EnergyParams {
            power_sleep: 20.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = EnergyParams {
            tx_power_min: 15.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = EnergyParams {
            path_loss_n: 0.5,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn annulus_examples() {
        let lambda = 105.0 / (200.0 * 200.0);
        let t = annulus_totals(&AnnulusParams::new(lambda, 20.0, 100.0)).unwrap();
        assert_relative_eq!(t.transmission, PI * lambda * 9600.0, max_relative = 1e-14);
        assert_abs_diff_eq!(t.transmission, 79.1681348704628, epsilon = 1e-9);
        assert_relative_eq!(t.total, 3.0 * t.transmission, max_relative = 1e-14);

        let empty = annulus_totals(&AnnulusParams::new(lambda, 50.0, 50.0)).unwrap();
        assert_eq!(empty.total, 0.0);
        assert!(matches!(
            annulus_totals(&AnnulusParams::new(lambda, 60.0, 50.0)),
            Err(EnergyError::InvertedAnnulus { .. })
        ));
    }

    #[test]
    fn annulus_matches_numeric_quadrature() {
        use crate::oracle::annulus_mass_by_quadrature;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let lambda = rng.gen_range(1e-4..0.1);
            let outer = rng.gen_range(1.0..300.0);
            let inner = rng.gen_range(0.0..outer);
            let mut p = AnnulusParams::new(lambda, inner, outer);
            (p.td, p.ds, p.vj) = (
                rng.gen_range(0.1..5.0),
                rng.gen_range(0.1..5.0),
                rng.gen_range(0.1..5.0),
            );
            let t = annulus_totals(&p).unwrap();
            let mass = annulus_mass_by_quadrature(lambda, inner, outer, 1e-12);
            assert_relative_eq!(t.transmission, mass * p.td, max_relative = 1e-9);
            assert_relative_eq!(t.generation, mass * p.ds, max_relative = 1e-9);
            assert_relative_eq!(t.consumption, mass * p.vj, max_relative = 1e-9);
        }
    }

    proptest! {
        #[test]
        fn mode_energy_is_additive(a in 0.0f64..1e4, b in 0.0f64..1e4) {
            let p = EnergyParams::default();
            for mode in [EnergyMode::ActiveComm, EnergyMode::ActiveSense, EnergyMode::Passive, EnergyMode::Sleep] {
                let whole = mode_energy(mode, a + b, &p).unwrap();
                let parts = mode_energy(mode, a, &p).unwrap() + mode_energy(mode, b, &p).unwrap();
                prop_assert!((whole - parts).abs() <= 1e-12 * whole.abs().max(1e-300));
            }
        }

        #[test]
        fn admission_is_monotone(e in 0.0f64..5.0, de in 0.0f64..1.0, r in 0.01f64..1.0, dr in 0.0f64..0.5, n in 1.0f64..4.0) {
            let r2 = (r + dr).min(1.0);
            let base = link_admissible(e, &[r], n, 1.0).unwrap();
            prop_assert!(!base || link_admissible(e + de, &[r], n, 1.0).unwrap());
            prop_assert!(!link_admissible(e, &[r2], n, 1.0).unwrap() || base);
        }

        #[test]
        fn network_energy_is_permutation_invariant(
            pairs in prop::collection::vec((0.0f64..100.0, any::<bool>()), 1..20),
            rot in 0usize..20,
        ) {
            let (e, ind): (Vec<f64>, Vec<bool>) = pairs.iter().cloned().unzip();
            let mut shuffled = pairs.clone();
            shuffled.reverse();
            let k = rot % shuffled.len();
            shuffled.rotate_left(k);
            let (e2, ind2): (Vec<f64>, Vec<bool>) = shuffled.into_iter().unzip();
            let a = network_energy(&e, &ind).unwrap();
            let b = network_energy(&e2, &ind2).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
        }
    }
}
