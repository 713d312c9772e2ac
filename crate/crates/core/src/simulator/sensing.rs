use rand::Rng;

use super::config::DetectionSettings;
use super::environment::{Environment, EnvironmentField};
use super::topology::Node;
use super::SimError;
use crate::detection::{
    compute_di, decide_mode, fuse_pd, fuse_ue, solve_thresholds, FusionParams, ModeDecision,
    RocModel, SampleCountDistribution, ThresholdSolution,
};

/// Solved detector shared by every node of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionContext {
    pub roc: RocModel,
    pub dist: SampleCountDistribution,
    pub solution: ThresholdSolution,
    pub epsilon: f64,
}

impl DetectionContext {
    pub fn new(settings: &DetectionSettings) -> Result<Self, SimError> {
        let roc = settings.roc()?;
        let dist = settings.distribution()?;
        let solution = solve_thresholds(&roc, &dist, settings.alpha, settings.solver_tol)?;
        Ok(Self {
            roc,
            dist,
            solution,
            epsilon: settings.epsilon_mode,
        })
    }
}

/// One sensing decision for `node`.
///
/// Draws the sample count `k`, evaluates the branch the ground truth selects
/// (detection probability indoors, false-alarm probability outdoors), passes
/// it through the decision channel, forms `IOE = E(PD) + branch` and
/// classifies `Di = IOE - E(PD)`. Depleted nodes make no decision. Energy for
/// the sensing interval is charged by the caller.
pub fn sense_and_decide<R: Rng + ?Sized>(
    node: &Node,
    env: &EnvironmentField,
    ctx: &DetectionContext,
    rng: &mut R,
) -> Result<Option<ModeDecision>, SimError> {
    if node.is_depleted() {
        return Ok(None);
    }
    let k = ctx.dist.sample(rng);
    let ue = ctx.solution.ue[k];
    let branch = match env.label(node.position) {
        Environment::Indoor => fuse_pd(ctx.roc.pd(k, ue), env.pc)?,
        Environment::Outdoor => fuse_ue(ue, &FusionParams::symmetric(env.pc)?)?,
    };
    let expected_pd = ctx.solution.expected_pd;
    let di = compute_di(expected_pd + branch, expected_pd);
    Ok(Some(decide_mode(di, ctx.epsilon)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::Mode;
    use crate::simulator::environment::IndoorZone;
    use crate::simulator::topology::{Position, Role};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn node_at(x: f64, y: f64, residual_j: f64) -> Node {
        Node {
            id: 0,
            position: Position::new(x, y),
            region: 0,
            role: Role::Member,
            mode: Mode::Sleep,
            residual_j,
            mode_time_s: [0.0; 3],
        }
    }

    fn field(pc: f64) -> EnvironmentField {
        EnvironmentField::new(vec![IndoorZone::new(0.0, 0.0, 10.0, 10.0)], pc)
    }

    #[test]
    fn noiseless_sharp_detector_indoors_goes_passive() {
        let settings = DetectionSettings {
            roc_sensitivity: 1e6,
            pc: 0.0,
            ..Default::default()
        };
        let ctx = DetectionContext::new(&settings).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let d = sense_and_decide(&node_at(5.0, 5.0, 1.0), &field(0.0), &ctx, &mut rng)
                .unwrap()
                .unwrap();
            // Di is the fused detection probability, here f_k(ue_k) with pc = 0
            assert!((d.di - 1.0).abs() < 1e-4, "di = {}", d.di);
            assert_eq!(d.mode, Mode::Passive);
        }
    }

    #[test]
    fn outdoor_di_is_the_threshold() {
        let settings = DetectionSettings {
            pc: 0.0,
            ..Default::default()
        };
        let ctx = DetectionContext::new(&settings).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let d = sense_and_decide(&node_at(50.0, 50.0, 1.0), &field(0.0), &ctx, &mut rng)
                .unwrap()
                .unwrap();
            assert!(ctx.solution.ue.iter().any(|&u| (u - d.di).abs() < 1e-12));
        }
    }

    #[test]
    fn coin_flip_channel_sends_everyone_to_sleep() {
        let settings = DetectionSettings::default();
        let ctx = DetectionContext::new(&settings).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (x, y) in [(5.0, 5.0), (50.0, 50.0)] {
            for _ in 0..20 {
                let d = sense_and_decide(&node_at(x, y, 1.0), &field(0.5), &ctx, &mut rng)
                    .unwrap()
                    .unwrap();
                assert_eq!(d.di, 0.5);
                assert_eq!(d.mode, Mode::Sleep);
            }
        }
    }

    #[test]
    fn depleted_node_makes_no_decision() {
        let ctx = DetectionContext::new(&DetectionSettings::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let out = sense_and_decide(&node_at(5.0, 5.0, 0.0), &field(0.0), &ctx, &mut rng).unwrap();
        assert!(out.is_none());
    }
}
