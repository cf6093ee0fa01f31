//! Placement of flow-discovery entries on route switches.
//!
//! Each discovery entry is expected to pull `1 + mu * |src| * |dst|` entries
//! into the table that hosts it (itself plus the active host-pair entries it
//! discovers). The balanced strategy walks flows from heaviest to lightest and
//! drops each onto the route switch with the most free entries left; the
//! baseline picks one of the flow's observed switches at random.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discovery::{AggregatedFlow, FlowToObs, RouteMap};
use crate::topology::SwitchId;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AssignmentError {
    #[error("mu must lie in [0, 1], got {0}")]
    InvalidMu(f64),
    #[error("instance too large for exhaustive search ({flows} flows, {combinations} combinations)")]
    TooLarge { flows: usize, combinations: f64 },
    #[error("flow {0:?} has no eligible switch")]
    NoCandidate(AggregatedFlow),
}

/// Expected fraction of host pairs inside an aggregate that are active at once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadModel {
    mu: f64,
}

impl LoadModel {
    pub fn new(mu: f64) -> Result<Self, AssignmentError> {
        if !(0.0..=1.0).contains(&mu) {
            return Err(AssignmentError::InvalidMu(mu));
        }
        Ok(Self { mu })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

impl Default for LoadModel {
    fn default() -> Self {
        Self { mu: 0.05 }
    }
}

/// Expected number of table entries created by a discovery entry.
pub fn load_of(flow: &AggregatedFlow, m: &LoadModel) -> f64 {
    1.0 + m.mu * flow.src_subnet.size() as f64 * flow.dst_subnet.size() as f64
}

/// Where each discovery entry is installed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    mapping: BTreeMap<AggregatedFlow, SwitchId>,
}

impl Assignment {
    pub fn switch_for(&self, f: &AggregatedFlow) -> Option<SwitchId> {
        self.mapping.get(f).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&AggregatedFlow, &SwitchId)> {
        self.mapping.iter()
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    /// Every flow sits on a switch of its own route.
    pub fn is_valid(&self, routes: &RouteMap) -> bool {
        self.mapping
            .iter()
            .all(|(f, s)| routes.get(f).is_some_and(|r| r.contains(*s)))
    }

    /// Expected load placed on each switch.
    pub fn load_per_switch(&self, m: &LoadModel) -> BTreeMap<SwitchId, f64> {
        let mut out = BTreeMap::new();
        for (f, s) in &self.mapping {
            *out.entry(*s).or_insert(0.0) += load_of(f, m);
        }
        out
    }
}

impl FromIterator<(AggregatedFlow, SwitchId)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (AggregatedFlow, SwitchId)>>(iter: I) -> Self {
        Self {
            mapping: iter.into_iter().collect(),
        }
    }
}

/// Greedy balanced placement.
///
/// Flows are taken in non-increasing load order (equal loads by flow key).
/// Each goes to the route switch with the largest residual capacity, smallest
/// id on ties, and that residual is then reduced by the flow's load. Residuals
/// may go negative. Switches missing from `free` count as having none.
pub fn assign_balanced<'a>(
    flows: impl IntoIterator<Item = &'a AggregatedFlow>,
    routes: &RouteMap,
    free: &BTreeMap<SwitchId, i64>,
    m: &LoadModel,
) -> Assignment {
    let mut residual: BTreeMap<SwitchId, f64> = free.iter().map(|(s, c)| (*s, *c as f64)).collect();
    let mut order: Vec<(&AggregatedFlow, f64)> = flows.into_iter().map(|f| (f, load_of(f, m))).collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let mut mapping = BTreeMap::new();
    for (f, load) in order {
        let route = &routes[f];
        let candidates: BTreeSet<SwitchId> = route.switch_set();
        let mut best: Option<(SwitchId, f64)> = None;
        for s in candidates {
            let c = residual.get(&s).copied().unwrap_or(0.0);
            // Candidates ascend by id, so strict comparison keeps the smallest id on ties.
            if best.map_or(true, |(_, bc)| c > bc) {
                best = Some((s, c));
            }
        }
        let (chosen, _) = best.expect("routes are never empty");
        *residual.entry(chosen).or_insert(0.0) -= load;
        mapping.insert(*f, chosen);
    }
    Assignment { mapping }
}

/// Baseline placement: a uniformly random OBS among those the flow crosses.
pub fn assign_baseline<'a>(
    flows: impl IntoIterator<Item = &'a AggregatedFlow>,
    flow_to_obs: &FlowToObs,
    seed: u64,
) -> Result<Assignment, AssignmentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    let mut sorted: Vec<&AggregatedFlow> = flows.into_iter().collect();
    sorted.sort();
    let mut mapping = BTreeMap::new();
    for f in sorted {
        let candidates: Vec<SwitchId> = flow_to_obs
            .get(f)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default();
        if candidates.is_empty() {
            return Err(AssignmentError::NoCandidate(*f));
        }
        let pick = candidates[rng.gen_range(0..candidates.len())];
        mapping.insert(*f, pick);
    }
    Ok(Assignment { mapping })
}

/// Placement quality: worst per-switch deficit, then total overflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    /// max over switches of (assigned load - free entries).
    pub max_deficit: f64,
    /// Sum over switches of max(0, assigned load - free entries).
    pub overflow: f64,
}

impl Objective {
    fn cmp(&self, other: &Objective) -> Ordering {
        self.max_deficit
            .total_cmp(&other.max_deficit)
            .then(self.overflow.total_cmp(&other.overflow))
    }
}

/// Scores an assignment against the free capacities. Every switch in `free`
/// and every assigned switch takes part in the maximum.
pub fn evaluate(a: &Assignment, free: &BTreeMap<SwitchId, i64>, m: &LoadModel) -> Objective {
    let loads = a.load_per_switch(m);
    let switches: BTreeSet<SwitchId> = free.keys().chain(loads.keys()).copied().collect();
    let mut max_deficit = f64::NEG_INFINITY;
    let mut overflow = 0.0;
    for s in switches {
        let d = loads.get(&s).copied().unwrap_or(0.0) - free.get(&s).copied().unwrap_or(0) as f64;
        max_deficit = max_deficit.max(d);
        overflow += d.max(0.0);
    }
    Objective {
        max_deficit,
        overflow,
    }
}

/// Exhaustive search for the placement minimizing [`Objective`], first by
/// worst deficit, then by overflow, then lexicographically by switch ids in
/// flow order. Meant as a test oracle for small instances.
pub fn assign_optimal_bruteforce<'a>(
    flows: impl IntoIterator<Item = &'a AggregatedFlow>,
    routes: &RouteMap,
    free: &BTreeMap<SwitchId, i64>,
    m: &LoadModel,
) -> Result<Assignment, AssignmentError> {
    const MAX_FLOWS: usize = 10;
    const MAX_COMBINATIONS: f64 = 1e6;

    let mut flows: Vec<&AggregatedFlow> = flows.into_iter().collect();
    flows.sort();
    let choices: Vec<Vec<SwitchId>> = flows
        .iter()
        .map(|f| routes[*f].switch_set().into_iter().collect())
        .collect();
    let combinations: f64 = choices.iter().map(|c| c.len() as f64).product();
    if flows.len() > MAX_FLOWS || combinations > MAX_COMBINATIONS {
        return Err(AssignmentError::TooLarge {
            flows: flows.len(),
            combinations,
        });
    }

    let mut index = vec![0usize; flows.len()];
    let build = |index: &[usize]| -> Assignment {
        flows
            .iter()
            .zip(index)
            .zip(&choices)
            .map(|((f, i), c)| (**f, c[*i]))
            .collect()
    };
    let mut best = build(&index);
    let mut best_score = evaluate(&best, free, m);
    loop {
        // Odometer with the first flow as the most significant digit, so the
        // first optimum seen is the lexicographically smallest.
        let mut pos = flows.len();
        loop {
            if pos == 0 {
                return Ok(best);
            }
            pos -= 1;
            index[pos] += 1;
            if index[pos] < choices[pos].len() {
                break;
            }
            index[pos] = 0;
        }
        let candidate = build(&index);
        let score = evaluate(&candidate, free, m);
        if score.cmp(&best_score) == Ordering::Less {
            best = candidate;
            best_score = score;
        }
    }
}
