//! Multi-hypothesis localization on room entry.
//!
//! Entering a room spawns a population of candidate explanations: for every
//! known place, one hypothesis per door the agent could have come through,
//! plus every canvas alignment compatible with the first observation, plus a
//! single new-place alternative. Each step reweights the population by how
//! well the live observation agrees with each aligned canvas, erases the
//! worst third, and renormalizes, until one explanation is dominant.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{PlaceCanvas, PlaceId, PlacePose, Transform};
use crate::gridworld::{ObsCell, Observation, TileKind};
use crate::window::{self, WINDOW};

/// What a hypothesis claims the current place is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HypoTarget {
    KnownPlace(PlaceId),
    NewPlace,
}

/// One candidate explanation: a target place and the rigid alignment from the
/// agent's current local frame into that place's canvas frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub target: HypoTarget,
    pub transform: Transform,
    /// Log of the normalized weight.
    pub log_weight: f64,
}

/// Pruned hypothesis population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisSet {
    hypotheses: Vec<Hypothesis>,
    step_count: u32,
}

/// Outcome of a decision attempt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decision {
    Localized(PlaceId, Transform),
    NewPlace,
    Undecided,
}

/// Knobs of the hypothesis machinery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HypoParams {
    /// Hard cap on the spawned population size.
    pub spawn_cap: usize,
    /// A hypothesis wins once its normalized weight exceeds this.
    pub decide_threshold: f64,
    /// ... and it leads the runner-up by at least this margin.
    pub decide_margin: f64,
    /// Dirichlet smoothing of per-cell agreement likelihoods.
    pub smoothing: f64,
    /// Log-weight bonus for places adjacent (in the graph) to the place the
    /// agent just left.
    pub adjacency_bonus: f64,
    /// Extra log-weight bonus for re-entering the previous place through the
    /// same door that was used to leave it.
    pub previous_door_bonus: f64,
    /// Per-update log-weight edge of the new-place alternative over exact
    /// chance. Breaks ties against alignments that merely fail to overlap any
    /// evidence, so genuinely novel rooms resolve instead of stalling.
    pub novelty_bonus: f64,
}

impl Default for HypoParams {
    fn default() -> HypoParams {
        HypoParams {
            spawn_cap: 600,
            decide_threshold: 0.9,
            decide_margin: 0.5,
            smoothing: 0.5,
            adjacency_bonus: 1.0,
            previous_door_bonus: 2.0,
            novelty_bonus: 6.0,
        }
    }
}

/// Pose-integration context: log prior of localizing into `place` under
/// `transform`, given where odometry says the agent is. Distant look-alike
/// places get suppressed here, which is what disambiguates aliasing.
pub trait PosePrior {
    fn log_prior(&self, place: PlaceId, transform: &Transform) -> f64;
}

/// Prior that carries no pose information (uniform).
pub struct FlatPosePrior;

impl PosePrior for FlatPosePrior {
    fn log_prior(&self, _place: PlaceId, _transform: &Transform) -> f64 {
        0.0
    }
}

/// Where the agent came from when the hypothesis phase started.
#[derive(Debug, Clone, Default)]
pub struct SpawnContext {
    /// Place the agent just left.
    pub previous: Option<PlaceId>,
    /// Places connected to `previous` in the cognitive map.
    pub adjacent: Vec<PlaceId>,
    /// Door tile (in the previous place's frame) the agent left through.
    pub exit_door: Option<(i32, i32)>,
}

/// Log-likelihood of chance agreement for one cell: a uniform draw over the
/// tile alternatives.
fn chance_log() -> f64 {
    -(TileKind::SYMBOLS as f64).ln()
}

/// Per-cell agreement log-likelihood of `obs` (taken at `pose` in the current
/// frame) against `canvas` under `transform`. Cells with no evidence behind
/// them score exactly chance.
fn observation_log_lik(
    canvas: &PlaceCanvas,
    transform: &Transform,
    pose: PlacePose,
    obs: &Observation,
    smoothing: f64,
) -> f64 {
    let mut total = 0.0;
    let k = TileKind::SYMBOLS as f64;
    for row in 0..WINDOW {
        for col in 0..WINDOW {
            let ObsCell::Visible(kind) = obs.cell(row, col) else {
                continue;
            };
            let local = window::cell_to_grid(pose.x, pose.y, pose.heading, row, col);
            let (qx, qy) = transform.apply_point(local);
            let evidence = canvas.evidence_total(qx, qy);
            if evidence == 0 {
                total += chance_log();
            } else {
                let hits = canvas.evidence_for(qx, qy, kind) as f64;
                total += ((hits + smoothing) / (evidence as f64 + smoothing * k)).ln();
            }
        }
    }
    total
}

/// Chance score of the same observation: what a brand-new place explains.
fn observation_chance(obs: &Observation) -> f64 {
    obs.visible_count() as f64 * chance_log()
}

fn normalize(hypotheses: &mut [Hypothesis]) {
    let max = hypotheses
        .iter()
        .map(|h| h.log_weight)
        .fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = hypotheses.iter().map(|h| (h.log_weight - max).exp()).sum();
    let log_z = max + sum.ln();
    for h in hypotheses.iter_mut() {
        h.log_weight -= log_z;
    }
}

/// Deterministic ordering key for ties.
fn tie_key(h: &Hypothesis) -> (u8, u32, u8, i32, i32) {
    match h.target {
        HypoTarget::NewPlace => (0, 0, 0, 0, 0),
        HypoTarget::KnownPlace(id) => {
            (1, id.0, h.transform.rot, h.transform.dy, h.transform.dx)
        }
    }
}

/// Spawn the hypothesis population for a room entry.
///
/// The agent's local frame starts fresh at spawn: it stands at the local
/// origin facing local north, so `first_obs` is scored at the origin pose.
pub fn hypo_spawn(
    known: &[(PlaceId, &PlaceCanvas)],
    first_obs: &Observation,
    context: &SpawnContext,
    pose_prior: &dyn PosePrior,
    params: &HypoParams,
) -> HypothesisSet {
    let origin = PlacePose::origin();
    let chance = observation_chance(first_obs);
    // Deduplicate by (place, transform); keep the best-scored variant.
    let mut candidates: BTreeMap<(u32, u8, i32, i32), f64> = BTreeMap::new();

    for &(id, canvas) in known {
        let mut consider = |transform: Transform, door_bonus: f64, always_keep: bool| {
            let (ax, ay) = transform.apply_point((origin.x, origin.y));
            if !canvas.in_bounds(ax, ay) {
                return;
            }
            let lik =
                observation_log_lik(canvas, &transform, origin, first_obs, params.smoothing);
            // Alignments that explain the observation worse than chance are
            // not worth tracking.
            if lik < chance - 1e-9 && !always_keep {
                return;
            }
            let adjacency = if context.previous == Some(id) || context.adjacent.contains(&id) {
                params.adjacency_bonus
            } else {
                0.0
            };
            let weight = lik + adjacency + door_bonus + pose_prior.log_prior(id, &transform);
            let key = (id.0, transform.rot, transform.dx, transform.dy);
            let entry = candidates.entry(key).or_insert(f64::NEG_INFINITY);
            if weight > *entry {
                *entry = weight;
            }
        };

        // One hypothesis per door of the place, per entry heading through it:
        // having just crossed, the agent stands on the wall-ring hole one
        // step inside the door, facing inward.
        if let Some(bounds) = canvas.room_bounds() {
            for exit in &bounds.exits {
                let door = exit.door_cell();
                let inward = exit.outward.rotate_cw(2);
                let transform = Transform::new(inward.index(), exit.hole.0, exit.hole.1);
                let same_door = context.previous == Some(id)
                    && context.exit_door == Some(door);
                let bonus = if same_door {
                    params.previous_door_bonus
                } else {
                    0.0
                };
                consider(transform, bonus, true);
            }
        }

        // Alignments over canvas translations and rotations compatible with
        // the first observation.
        let h = (canvas.size() / 2) as i32;
        for rot in 0..4u8 {
            for dy in -h..=h {
                for dx in -h..=h {
                    consider(Transform::new(rot, dx, dy), 0.0, false);
                }
            }
        }
    }

    let mut hypotheses: Vec<Hypothesis> = candidates
        .into_iter()
        .map(|((id, rot, dx, dy), weight)| Hypothesis {
            target: HypoTarget::KnownPlace(PlaceId(id)),
            transform: Transform::new(rot, dx, dy),
            log_weight: weight,
        })
        .collect();

    // Keep the best-scored candidates up to the cap, reserving one slot for
    // the new-place alternative.
    hypotheses.sort_by(|a, b| {
        b.log_weight
            .total_cmp(&a.log_weight)
            .then_with(|| tie_key(a).cmp(&tie_key(b)))
    });
    hypotheses.truncate(params.spawn_cap.saturating_sub(1));
    hypotheses.push(Hypothesis {
        target: HypoTarget::NewPlace,
        transform: Transform::identity(),
        log_weight: chance,
    });

    normalize(&mut hypotheses);
    HypothesisSet {
        hypotheses,
        step_count: 0,
    }
}

/// Reweight every hypothesis by the live observation (and the odometry
/// consistency of its implied pose), erase the worst third, and renormalize.
pub fn hypo_update(
    set: &HypothesisSet,
    known: &[(PlaceId, &PlaceCanvas)],
    pose: PlacePose,
    obs: &Observation,
    pose_prior: &dyn PosePrior,
    params: &HypoParams,
) -> HypothesisSet {
    assert!(!set.hypotheses.is_empty(), "hypothesis set must not be empty");
    let lookup: BTreeMap<PlaceId, &PlaceCanvas> = known.iter().copied().collect();
    let chance = observation_chance(obs);

    let mut next: Vec<Hypothesis> = set
        .hypotheses
        .iter()
        .map(|h| {
            let delta = match h.target {
                HypoTarget::NewPlace => chance + params.novelty_bonus,
                HypoTarget::KnownPlace(id) => match lookup.get(&id) {
                    Some(canvas) => {
                        observation_log_lik(canvas, &h.transform, pose, obs, params.smoothing)
                            + pose_prior.log_prior(id, &h.transform)
                    }
                    None => f64::NEG_INFINITY,
                },
            };
            Hypothesis {
                log_weight: h.log_weight + delta,
                ..*h
            }
        })
        .collect();

    // Erase the worst third, but keep at least the best hypothesis of every
    // distinct target place (and the new-place alternative) alive.
    let mut order: Vec<usize> = (0..next.len()).collect();
    order.sort_by(|&a, &b| {
        next[a]
            .log_weight
            .total_cmp(&next[b].log_weight)
            .then_with(|| tie_key(&next[b]).cmp(&tie_key(&next[a])))
    });
    let mut best_of_target: BTreeMap<HypoTarget, usize> = BTreeMap::new();
    for &i in &order {
        best_of_target.insert(next[i].target, i); // last write = highest weight
    }
    let protected: Vec<usize> = best_of_target.values().copied().collect();
    let to_remove = next.len() / 3;
    let mut removed = vec![false; next.len()];
    let mut count = 0;
    for &i in &order {
        if count >= to_remove {
            break;
        }
        if protected.contains(&i) {
            continue;
        }
        removed[i] = true;
        count += 1;
    }
    let mut survivors: Vec<Hypothesis> = next
        .drain(..)
        .enumerate()
        .filter_map(|(i, h)| (!removed[i]).then_some(h))
        .collect();

    normalize(&mut survivors);
    HypothesisSet {
        hypotheses: survivors,
        step_count: set.step_count + 1,
    }
}

/// Commit to the dominant hypothesis, if any.
pub fn hypo_decide(set: &HypothesisSet, params: &HypoParams) -> Decision {
    if set.hypotheses.is_empty() {
        return Decision::Undecided;
    }
    let best = set.best();
    let top = best.log_weight.exp();
    let runner_weight = set
        .hypotheses
        .iter()
        .filter(|h| !std::ptr::eq(*h, best))
        .map(|h| h.log_weight.exp())
        .fold(0.0f64, f64::max);
    if top > params.decide_threshold && top - runner_weight >= params.decide_margin {
        match best.target {
            HypoTarget::KnownPlace(id) => Decision::Localized(id, best.transform),
            HypoTarget::NewPlace => Decision::NewPlace,
        }
    } else {
        Decision::Undecided
    }
}

impl HypothesisSet {
    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn step_count(&self) -> u32 {
        self.step_count
    }

    pub fn hypotheses(&self) -> &[Hypothesis] {
        &self.hypotheses
    }

    /// Normalized weight of one target (summed over its alignments).
    pub fn target_weight(&self, target: HypoTarget) -> f64 {
        self.hypotheses
            .iter()
            .filter(|h| h.target == target)
            .map(|h| h.log_weight.exp())
            .sum()
    }

    /// Sum of normalized weights; 1.0 up to rounding.
    pub fn weight_sum(&self) -> f64 {
        self.hypotheses.iter().map(|h| h.log_weight.exp()).sum()
    }

    /// Re-express every alignment after the source (current) frame's
    /// coordinates were shifted by `delta` (canvas recentering).
    pub fn shift_source_frame(&mut self, delta: (i32, i32)) {
        for h in &mut self.hypotheses {
            if matches!(h.target, HypoTarget::KnownPlace(_)) {
                h.transform = h.transform.source_shifted(delta);
            }
        }
    }

    /// The current best hypothesis regardless of thresholds.
    pub fn best(&self) -> &Hypothesis {
        self.hypotheses
            .iter()
            .max_by(|a, b| {
                a.log_weight
                    .total_cmp(&b.log_weight)
                    .then_with(|| tie_key(b).cmp(&tie_key(a)))
            })
            .expect("hypothesis set never empty")
    }
}
