//! Energy-preserving time integration for `x' = A ∇S(x)`.
//!
//! One step solves
//!
//! ```text
//! x1 = x0 + h A Σ_i a_i ∇S((1 - N_i) x0 + N_i x1)
//! ```
//!
//! where `(N_i, a_i)` is an x-point quadrature rule on `[0, 1]` whose weights
//! are the integrals of the Lagrange basis polynomials. With a constant
//! skew-symmetric `A` and a rule exact for the integrand, `S(x1) = S(x0)`
//! up to the fixed-point tolerance.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegratorError {
    #[error("quadrature needs at least one node")]
    NoNodes,
    #[error("quadrature nodes {0} and {1} coincide")]
    DuplicateNodes(usize, usize),
    #[error("basis index {index} out of range for {len} nodes")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("structure matrix has {actual} entries, expected {expected}")]
    MatrixShape { expected: usize, actual: usize },
    #[error("state has dimension {actual}, system has {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
}

pub type Result<T> = std::result::Result<T, IntegratorError>;

fn check_distinct(nodes: &[f64]) -> Result<()> {
    if nodes.is_empty() {
        return Err(IntegratorError::NoNodes);
    }
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            if nodes[i] == nodes[j] {
                return Err(IntegratorError::DuplicateNodes(i, j));
            }
        }
    }
    Ok(())
}

/// `ℓ_i(τ) = Π_{j≠i} (τ - N_j) / (N_i - N_j)`.
pub fn lagrange_basis(nodes: &[f64], i: usize, tau: f64) -> Result<f64> {
    check_distinct(nodes)?;
    if i >= nodes.len() {
        return Err(IntegratorError::IndexOutOfRange {
            index: i,
            len: nodes.len(),
        });
    }
    Ok(nodes
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &nj)| (tau - nj) / (nodes[i] - nj))
        .product())
}

/// Monomial coefficients (ascending powers) of `ℓ_i`.
fn basis_coefficients(nodes: &[f64], i: usize) -> Vec<f64> {
    let mut coeffs = vec![1.0];
    for (j, &nj) in nodes.iter().enumerate() {
        if j == i {
            continue;
        }
        let scale = 1.0 / (nodes[i] - nj);
        let mut next = vec![0.0; coeffs.len() + 1];
        for (m, &c) in coeffs.iter().enumerate() {
            next[m + 1] += c * scale;
            next[m] -= c * nj * scale;
        }
        coeffs = next;
    }
    coeffs
}

/// `a_i = ∫_0^1 ℓ_i(τ) dτ`, integrating the expanded polynomial exactly.
pub fn quadrature_weights(nodes: &[f64]) -> Result<Vec<f64>> {
    check_distinct(nodes)?;
    Ok((0..nodes.len())
        .map(|i| {
            basis_coefficients(nodes, i)
                .iter()
                .enumerate()
                .map(|(m, c)| c / (m + 1) as f64)
                .sum()
        })
        .collect())
}

/// Legendre `P_n(t)` and its derivative by the three-term recurrence.
fn legendre(n: usize, t: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, t);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, dp)
}

fn gauss_legendre(x: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if x == 0 {
        return Err(IntegratorError::NoNodes);
    }
    let mut nodes = Vec::with_capacity(x);
    let mut weights = Vec::with_capacity(x);
    for i in 1..=x {
        let mut t = (std::f64::consts::PI * (i as f64 - 0.25) / (x as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(x, t);
            let dt = p / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(x, t);
        // shift from [-1, 1] to [0, 1]; the weight halves with the interval
        nodes.push(0.5 * (1.0 - t));
        weights.push(1.0 / ((1.0 - t * t) * dp * dp));
    }
    Ok((nodes, weights))
}

/// Roots of the degree-`x` Legendre polynomial mapped to `[0, 1]`, ascending.
pub fn gauss_nodes(x: usize) -> Result<Vec<f64>> {
    gauss_legendre(x).map(|(n, _)| n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Interpolatory rule on arbitrary distinct nodes.
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        let weights = quadrature_weights(&nodes)?;
        Ok(Self { nodes, weights })
    }

    /// Gauss-Legendre rule; exact for polynomials of degree `2x - 1`.
    pub fn gauss(x: usize) -> Result<Self> {
        let (nodes, weights) = gauss_legendre(x)?;
        Ok(Self { nodes, weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&n, &w)| w * f(n))
            .sum()
    }
}

/// Scalar energy `S` and its gradient.
pub trait EnergyFunction {
    fn energy(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
}

/// `S(q, p) = (q² + p²) / 2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct HarmonicOscillator;

impl EnergyFunction for HarmonicOscillator {
    fn energy(&self, x: &[f64]) -> f64 {
        0.5 * (x[0] * x[0] + x[1] * x[1])
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out[0] = x[0];
        out[1] = x[1];
    }
}

/// `S(q, p) = p² / 2 - cos q`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Pendulum;

impl EnergyFunction for Pendulum {
    fn energy(&self, x: &[f64]) -> f64 {
        0.5 * x[1] * x[1] - x[0].cos()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out[0] = x[0].sin();
        out[1] = x[1];
    }
}

/// `x' = A ∇S(x)` with a constant structure matrix stored row-major.
#[derive(Debug, Clone)]
pub struct GradientFlowSystem<E> {
    dimension: usize,
    structure: Vec<f64>,
    energy: E,
}

impl<E: EnergyFunction> GradientFlowSystem<E> {
    pub fn new(dimension: usize, structure: Vec<f64>, energy: E) -> Result<Self> {
        if structure.len() != dimension * dimension || dimension == 0 {
            return Err(IntegratorError::MatrixShape {
                expected: dimension * dimension,
                actual: structure.len(),
            });
        }
        Ok(Self {
            dimension,
            structure,
            energy,
        })
    }

    /// Canonical two-dimensional Hamiltonian system, `A = [[0, 1], [-1, 0]]`.
    pub fn canonical(energy: E) -> Self {
        Self {
            dimension: 2,
            structure: vec![0.0, 1.0, -1.0, 0.0],
            energy,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn structure(&self) -> &[f64] {
        &self.structure
    }

    pub fn energy(&self, x: &[f64]) -> f64 {
        self.energy.energy(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dimension];
        self.energy.gradient(x, &mut g);
        g
    }

    /// `max |A + Aᵀ|`.
    pub fn skew_defect(&self) -> f64 {
        let n = self.dimension;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.structure[i * n + j] + self.structure[j * n + i]).abs());
            }
        }
        worst
    }

    pub fn is_hamiltonian(&self) -> bool {
        self.skew_defect() <= 1e-12
    }

    fn apply_structure(&self, v: &[f64], out: &mut [f64]) {
        let n = self.dimension;
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..n).map(|j| self.structure[i * n + j] * v[j]).sum();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// Step size. May be zero or negative (backward stepping).
    pub step: f64,
    pub points: usize,
    pub fixed_point_tol: f64,
    pub max_fixed_point_iters: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            step: 0.1,
            points: 2,
            fixed_point_tol: 1e-13,
            max_fixed_point_iters: 100,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.step.is_finite() {
            return Err(IntegratorError::InvalidConfig(format!(
                "step must be finite, got {}",
                self.step
            )));
        }
        if self.points == 0 {
            return Err(IntegratorError::InvalidConfig(
                "points must be positive".into(),
            ));
        }
        if !(self.fixed_point_tol > 0.0) {
            return Err(IntegratorError::InvalidConfig(format!(
                "fixed_point_tol must be positive, got {}",
                self.fixed_point_tol
            )));
        }
        if self.max_fixed_point_iters == 0 {
            return Err(IntegratorError::InvalidConfig(
                "max_fixed_point_iters must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A configured stepper; builds the Gauss rule once.
#[derive(Debug, Clone)]
pub struct EnergyPreservingIntegrator {
    rule: QuadratureRule,
    config: IntegratorConfig,
}

impl EnergyPreservingIntegrator {
    pub fn new(config: IntegratorConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            rule: QuadratureRule::gauss(config.points)?,
            config,
        })
    }

    pub fn with_rule(config: IntegratorConfig, rule: QuadratureRule) -> Result<Self> {
        config.validate()?;
        Ok(Self { rule, config })
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.config
    }

    pub fn step<E: EnergyFunction>(
        &self,
        system: &GradientFlowSystem<E>,
        state: &[f64],
        step: f64,
    ) -> Result<Vec<f64>> {
        let n = system.dimension;
        if state.len() != n {
            return Err(IntegratorError::DimensionMismatch {
                expected: n,
                actual: state.len(),
            });
        }
        let mut next = state.to_vec();
        if step == 0.0 {
            return Ok(next);
        }
        let mut stage = vec![0.0; n];
        let mut grad = vec![0.0; n];
        let mut avg = vec![0.0; n];
        let mut flow = vec![0.0; n];
        let mut residual = f64::INFINITY;
        for _ in 0..self.config.max_fixed_point_iters {
            avg.iter_mut().for_each(|v| *v = 0.0);
            for (&node, &weight) in self.rule.nodes.iter().zip(&self.rule.weights) {
                for d in 0..n {
                    stage[d] = (1.0 - node) * state[d] + node * next[d];
                }
                system.energy.gradient(&stage, &mut grad);
                for d in 0..n {
                    avg[d] += weight * grad[d];
                }
            }
            system.apply_structure(&avg, &mut flow);
            residual = 0.0;
            for d in 0..n {
                let updated = state[d] + step * flow[d];
                residual = residual.max((updated - next[d]).abs());
                next[d] = updated;
            }
            if residual <= self.config.fixed_point_tol {
                return Ok(next);
            }
        }
        Err(IntegratorError::NonConvergence {
            iterations: self.config.max_fixed_point_iters,
            residual,
        })
    }
}

/// One step of the energy-preserving method with a Gauss rule of `config.points` nodes.
pub fn step_energy_preserving<E: EnergyFunction>(
    system: &GradientFlowSystem<E>,
    state: &[f64],
    config: &IntegratorConfig,
) -> Result<Vec<f64>> {
    EnergyPreservingIntegrator::new(*config)?.step(system, state, config.step)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub step: f64,
    pub states: Vec<Vec<f64>>,
    pub energies: Vec<f64>,
}

impl Trajectory {
    /// `|S(x_n) - S(x_0)|`.
    pub fn drift_at(&self, n: usize) -> f64 {
        (self.energies[n] - self.energies[0]).abs()
    }

    pub fn max_drift(&self) -> f64 {
        (0..self.energies.len())
            .map(|n| self.drift_at(n))
            .fold(0.0, f64::max)
    }
}

pub fn integrate<E: EnergyFunction>(
    system: &GradientFlowSystem<E>,
    x0: &[f64],
    config: &IntegratorConfig,
    steps: usize,
) -> Result<Trajectory> {
    let stepper = EnergyPreservingIntegrator::new(*config)?;
    if x0.len() != system.dimension {
        return Err(IntegratorError::DimensionMismatch {
            expected: system.dimension,
            actual: x0.len(),
        });
    }
    let mut states = Vec::with_capacity(steps + 1);
    let mut energies = Vec::with_capacity(steps + 1);
    states.push(x0.to_vec());
    energies.push(system.energy(x0));
    for _ in 0..steps {
        let next = stepper.step(system, states.last().expect("non-empty"), config.step)?;
        energies.push(system.energy(&next));
        states.push(next);
    }
    Ok(Trajectory {
        step: config.step,
        states,
        energies,
    })
}
