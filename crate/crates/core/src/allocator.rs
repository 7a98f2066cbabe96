//! Δ optimisation, per-policy target rates and resource block assignment.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelState;
use crate::error::{Error, Result};
use crate::zot::{min_qos_for, SatisfactionLevel, ZoTProfile};

/// Slack when comparing rates, in Mb/s.
pub const RATE_EPS: f64 = 1e-9;

/// Largest search space `(users + 1)^rbs` the exhaustive oracle accepts.
pub const MAX_EXHAUSTIVE_ASSIGNMENTS: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    Personalized { s_min: SatisfactionLevel },
    NonPersonalized,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Personalized { .. } => "personalized",
            PolicyKind::NonPersonalized => "baseline",
        }
    }

    pub fn is_personalized(self) -> bool {
        matches!(self, PolicyKind::Personalized { .. })
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Policy name as used on the command line and in result files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyName {
    Personalized,
    Baseline,
}

impl PolicyName {
    pub fn with_s_min(self, s_min: SatisfactionLevel) -> PolicyKind {
        match self {
            PolicyName::Personalized => PolicyKind::Personalized { s_min },
            PolicyName::Baseline => PolicyKind::NonPersonalized,
        }
    }
}

impl FromStr for PolicyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "personalized" => Ok(PolicyName::Personalized),
            "baseline" | "non_personalized" | "non-personalized" => Ok(PolicyName::Baseline),
            other => Err(Error::Config(format!("unknown policy `{other}`"))),
        }
    }
}

/// Largest gap to the demand that still reaches `s_min` under `profile`.
pub fn optimize_delta(profile: &ZoTProfile, s_min: SatisfactionLevel) -> f64 {
    profile.qos_demand() - min_qos_for(profile, s_min)
}

pub fn target_rate(policy: PolicyKind, profile: &ZoTProfile, demand: f64) -> f64 {
    match policy {
        PolicyKind::Personalized { s_min } => demand - optimize_delta(profile, s_min),
        PolicyKind::NonPersonalized => demand,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationDecision {
    pub target_rate: f64,
    /// Ascending RB indices.
    pub assigned_rbs: Vec<usize>,
    pub achieved_rate: f64,
    pub delta: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub decisions: Vec<AllocationDecision>,
}

impl Allocation {
    pub fn total_rbs(&self) -> usize {
        self.decisions.iter().map(|d| d.assigned_rbs.len()).sum()
    }

    pub fn all_feasible(&self) -> bool {
        self.decisions.iter().all(|d| d.feasible)
    }

    /// Σ min(achieved, target), the amount of requested rate served.
    pub fn coverage(&self) -> f64 {
        self.decisions.iter().map(|d| d.achieved_rate.min(d.target_rate)).sum()
    }

    /// Owner of each RB, `None` when idle.
    pub fn owners(&self, num_rbs: usize) -> Vec<Option<usize>> {
        let mut owners = vec![None; num_rbs];
        for (u, d) in self.decisions.iter().enumerate() {
            for &rb in &d.assigned_rbs {
                owners[rb] = Some(u);
            }
        }
        owners
    }
}

fn check_shape(targets: &[f64], demands: &[f64], channel: &ChannelState) {
    assert_eq!(targets.len(), demands.len(), "one demand per target");
    assert_eq!(targets.len(), channel.num_users(), "one channel row per user");
}

/// Builds decisions from an RB ownership vector.
pub fn decisions_from_owners(owners: &[Option<usize>], targets: &[f64], demands: &[f64], channel: &ChannelState) -> Allocation {
    check_shape(targets, demands, channel);
    let decisions = targets
        .iter()
        .zip(demands)
        .enumerate()
        .map(|(u, (&target, &demand))| {
            let assigned_rbs: Vec<usize> = (0..owners.len()).filter(|&rb| owners[rb] == Some(u)).collect();
            let achieved_rate: f64 = assigned_rbs.iter().map(|&rb| channel.rate(u, rb)).sum();
            AllocationDecision {
                target_rate: target,
                delta: (demand - achieved_rate.min(demand)).max(0.0),
                feasible: achieved_rate >= target - RATE_EPS,
                assigned_rbs,
                achieved_rate,
            }
        })
        .collect();
    Allocation { decisions }
}

fn achieved(owners: &[Option<usize>], user: usize, channel: &ChannelState) -> f64 {
    (0..owners.len())
        .filter(|&rb| owners[rb] == Some(user))
        .map(|rb| channel.rate(user, rb))
        .sum()
}

/// Deficit-driven greedy: the user with the largest remaining deficit (lower
/// id on ties) takes its best idle RB (lower index on ties) until every
/// deficit is closed or no useful RB is left.
fn greedy_fill(owners: &mut [Option<usize>], targets: &[f64], channel: &ChannelState) {
    let n = targets.len();
    let mut rate: Vec<f64> = (0..n).map(|u| achieved(owners, u, channel)).collect();
    loop {
        let mut pick: Option<(usize, f64, usize)> = None;
        for u in 0..n {
            let deficit = targets[u] - rate[u];
            if deficit <= RATE_EPS {
                continue;
            }
            let best_rb = (0..owners.len())
                .filter(|&rb| owners[rb].is_none() && channel.rate(u, rb) > 0.0)
                .fold(None, |best: Option<usize>, rb| match best {
                    Some(b) if channel.rate(u, b) >= channel.rate(u, rb) => Some(b),
                    _ => Some(rb),
                });
            if let Some(rb) = best_rb {
                if pick.is_none_or(|(_, d, _)| deficit > d) {
                    pick = Some((u, deficit, rb));
                }
            }
        }
        match pick {
            Some((u, _, rb)) => {
                owners[rb] = Some(u);
                rate[u] += channel.rate(u, rb);
            }
            None => break,
        }
    }
}

/// The plain greedy assignment without any repair.
pub fn greedy_allocate(targets: &[f64], demands: &[f64], channel: &ChannelState) -> Allocation {
    check_shape(targets, demands, channel);
    let mut owners = vec![None; channel.num_rbs()];
    greedy_fill(&mut owners, targets, channel);
    decisions_from_owners(&owners, targets, demands, channel)
}

/// One RB reassignment: `(rb, new owner)`.
type Move = (usize, Option<usize>);

/// Owner vector with cached per-user rates, ranked by `(served rate, RBs)`.
#[derive(Clone)]
struct State<'a> {
    targets: &'a [f64],
    channel: &'a ChannelState,
    owners: Vec<Option<usize>>,
    rate: Vec<f64>,
    used: usize,
}

impl<'a> State<'a> {
    fn new(owners: Vec<Option<usize>>, targets: &'a [f64], channel: &'a ChannelState) -> Self {
        let rate = (0..targets.len()).map(|u| achieved(&owners, u, channel)).collect();
        let used = owners.iter().flatten().count();
        State {
            targets,
            channel,
            owners,
            rate,
            used,
        }
    }

    fn served(&self) -> f64 {
        self.rate.iter().zip(self.targets).map(|(r, t)| r.min(*t)).sum()
    }

    fn score(&self) -> (f64, usize) {
        (self.served(), self.used)
    }

    fn set(&mut self, rb: usize, owner: Option<usize>) {
        if let Some(u) = self.owners[rb] {
            self.rate[u] -= self.channel.rate(u, rb);
            self.used -= 1;
        }
        if let Some(u) = owner {
            self.rate[u] += self.channel.rate(u, rb);
            self.used += 1;
        }
        self.owners[rb] = owner;
    }

    /// Score after applying `changes`, leaving the state untouched.
    fn probe(&mut self, changes: &[(usize, Option<usize>)]) -> (f64, usize) {
        let mut undo = [(0, None); 3];
        for (k, &(rb, o)) in changes.iter().enumerate() {
            undo[k] = (rb, self.owners[rb]);
            self.set(rb, o);
        }
        let s = self.score();
        for &(rb, o) in undo[..changes.len()].iter().rev() {
            self.set(rb, o);
        }
        s
    }

    /// Upper bound on the served rate: every RB to whoever gains most from it.
    fn served_bound(&self) -> f64 {
        let best: f64 = (0..self.owners.len())
            .map(|rb| (0..self.targets.len()).map(|u| self.channel.rate(u, rb)).fold(0.0, f64::max))
            .sum();
        best.min(self.targets.iter().sum())
    }

    /// Lower bound on RBs for a vector serving every target.
    fn rb_bound(&self) -> usize {
        (0..self.targets.len())
            .map(|u| {
                let mut rates: Vec<f64> = (0..self.owners.len()).map(|rb| self.channel.rate(u, rb)).collect();
                rates.sort_by(|a, b| b.total_cmp(a));
                let mut sum = 0.0;
                rates
                    .iter()
                    .take_while(|&&r| {
                        let short = sum < self.targets[u] - RATE_EPS;
                        sum += r;
                        short
                    })
                    .count()
            })
            .sum()
    }

    fn is_provably_optimal(&self) -> bool {
        let served = self.served();
        if served < self.served_bound() - RATE_EPS {
            return false;
        }
        let all_met = self.rate.iter().zip(self.targets).all(|(r, t)| *r >= t - RATE_EPS);
        !all_met || self.used <= self.rb_bound()
    }
}

fn improves(candidate: (f64, usize), current: (f64, usize)) -> bool {
    candidate.0 > current.0 + RATE_EPS || (candidate.0 >= current.0 - RATE_EPS && candidate.1 < current.1)
}

/// Best-improvement descent over reassignments of up to `depth` RBs,
/// widening the neighbourhood only when the narrower one is exhausted.
fn local_search(state: &mut State<'_>, max_depth: usize) {
    let n = state.targets.len();
    let rbs = state.owners.len();
    let choices: Vec<Option<usize>> = std::iter::once(None).chain((0..n).map(Some)).collect();
    let mut depth = 1;
    while depth <= max_depth {
        if state.is_provably_optimal() {
            return;
        }
        let current = state.score();
        let mut best: Option<((f64, usize), Vec<Move>)> = None;
        let mut consider = |state: &mut State<'_>, changes: &[Move]| {
            let s = state.probe(changes);
            if improves(s, best.as_ref().map_or(current, |b| b.0)) {
                best = Some((s, changes.to_vec()));
            }
        };
        let snapshot = state.owners.clone();
        for a in 0..rbs {
            for &oa in choices.iter().filter(|&&o| o != snapshot[a]) {
                if depth == 1 {
                    consider(state, &[(a, oa)]);
                    continue;
                }
                for b in a + 1..rbs {
                    for &ob in choices.iter().filter(|&&o| o != snapshot[b]) {
                        if depth == 2 {
                            consider(state, &[(a, oa), (b, ob)]);
                            continue;
                        }
                        for (c, &owner_c) in snapshot.iter().enumerate().skip(b + 1) {
                            for &oc in choices.iter().filter(|&&o| o != owner_c) {
                                consider(state, &[(a, oa), (b, ob), (c, oc)]);
                            }
                        }
                    }
                }
            }
        }
        match best {
            Some((_, changes)) => {
                for (rb, o) in changes {
                    state.set(rb, o);
                }
                depth = 1;
            }
            None => depth += 1,
        }
    }
}

/// Greedy assignment (see [`greedy_allocate`]) refined by a local search
/// that first raises the served rate and then frees RBs.
pub fn allocate_rbs(targets: &[f64], demands: &[f64], channel: &ChannelState) -> Allocation {
    check_shape(targets, demands, channel);
    let mut owners = vec![None; channel.num_rbs()];
    greedy_fill(&mut owners, targets, channel);
    let mut best = State::new(owners, targets, channel);
    local_search(&mut best, 3);
    if !best.is_provably_optimal() {
        for order in priority_orders(targets.len()) {
            let mut owners = vec![None; channel.num_rbs()];
            for &u in &order {
                let mut single = vec![0.0; targets.len()];
                single[u] = targets[u];
                greedy_fill(&mut owners, &single, channel);
            }
            let mut state = State::new(owners, targets, channel);
            local_search(&mut state, 3);
            if improves(state.score(), best.score()) {
                best = state;
            }
        }
    }
    decisions_from_owners(&best.owners, targets, demands, channel)
}

/// Every ordering of `0..n` in lexicographic order.
fn priority_orders(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 0..n {
        for rest in priority_orders(n - 1) {
            let mut order = vec![first];
            order.extend(rest.into_iter().map(|u| if u >= first { u + 1 } else { u }));
            out.push(order);
        }
    }
    out
}

/// Minimum-RB assignment by enumerating every owner vector in lexicographic
/// order (idle before user 0 before user 1 ...). When no vector meets all
/// targets, the one serving the most requested rate wins, then fewer RBs.
pub fn exhaustive_allocate(targets: &[f64], demands: &[f64], channel: &ChannelState) -> Result<Allocation> {
    check_shape(targets, demands, channel);
    let n = targets.len();
    let rbs = channel.num_rbs();
    let space = (n as u64 + 1).checked_pow(rbs as u32);
    if space.is_none_or(|s| s > MAX_EXHAUSTIVE_ASSIGNMENTS) {
        return Err(Error::InstanceTooLarge { users: n, rbs });
    }
    struct Search<'a> {
        targets: &'a [f64],
        channel: &'a ChannelState,
        owners: Vec<Option<usize>>,
        rate: Vec<f64>,
        used: usize,
        best: Option<(f64, usize, Vec<Option<usize>>)>,
    }
    impl Search<'_> {
        fn coverage(&self) -> f64 {
            self.rate.iter().zip(self.targets).map(|(r, t)| r.min(*t)).sum()
        }

        fn visit(&mut self, rb: usize) {
            if rb == self.owners.len() {
                let cov = self.coverage();
                let better = match &self.best {
                    None => true,
                    Some((bc, bu, _)) => match cov.partial_cmp(bc).unwrap_or(Ordering::Equal) {
                        _ if (cov - bc).abs() <= RATE_EPS => self.used < *bu,
                        ordering => ordering == Ordering::Greater,
                    },
                };
                if better {
                    self.best = Some((cov, self.used, self.owners.clone()));
                }
                return;
            }
            for choice in 0..=self.targets.len() {
                if choice == 0 {
                    self.owners[rb] = None;
                    self.visit(rb + 1);
                } else {
                    let u = choice - 1;
                    self.owners[rb] = Some(u);
                    self.rate[u] += self.channel.rate(u, rb);
                    self.used += 1;
                    self.visit(rb + 1);
                    self.used -= 1;
                    self.rate[u] -= self.channel.rate(u, rb);
                }
            }
            self.owners[rb] = None;
        }
    }
    let mut search = Search {
        targets,
        channel,
        owners: vec![None; rbs],
        rate: vec![0.0; n],
        used: 0,
        best: None,
    };
    search.visit(0);
    let (_, _, owners) = search.best.expect("at least the all-idle vector is visited");
    Ok(decisions_from_owners(&owners, targets, demands, channel))
}
