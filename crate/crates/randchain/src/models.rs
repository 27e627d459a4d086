//! Generators for random chains `{W(k)}`.
//!
//! A [`ChainModel`] is an immutable description; sampling is a pure function
//! of `(model, k, stream key)`. Every kind exposes its exact expected matrix
//! `E[W(k)]`, and finite-support kinds expose their per-step atom law so the
//! property checkers can take exact expectations instead of sampling.

use crate::error::{Error, Result};
use crate::linalg::{StochasticMatrix, StochasticVector, TOL_ROW};
use crate::rng::{stream_rng, StreamKey};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// What a finite schedule does after its last explicit step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailRule {
    #[default]
    RepeatLast,
    /// The chain goes quiet: `W(k) = I` past the schedule.
    Identity,
}

/// A finitely supported distribution over stochastic matrices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiniteSupportDistribution {
    atoms: Vec<(StochasticMatrix, f64)>,
}

impl FiniteSupportDistribution {
    pub fn new(atoms: Vec<(StochasticMatrix, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Invalid("distribution needs at least one atom".into()));
        }
        let dim = atoms[0].0.dim();
        let mut total = 0.0;
        for (w, p) in &atoms {
            if w.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: w.dim(),
                });
            }
            if !(*p >= 0.0) {
                return Err(Error::Invalid(format!("negative atom probability {p}")));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid(format!("atom probabilities sum to {total}")));
        }
        Ok(FiniteSupportDistribution { atoms })
    }

    pub fn point(w: StochasticMatrix) -> Self {
        FiniteSupportDistribution {
            atoms: vec![(w, 1.0)],
        }
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].0.dim()
    }

    pub fn atoms(&self) -> &[(StochasticMatrix, f64)] {
        &self.atoms
    }

    pub fn expected(&self) -> StochasticMatrix {
        let m = self.dim();
        let mut acc = vec![0.0; m * m];
        for (w, p) in &self.atoms {
            for (a, e) in acc.iter_mut().zip(w.entries()) {
                *a += p * e;
            }
        }
        StochasticMatrix::validate(m, &acc, TOL_ROW).expect("convex mix of stochastic matrices")
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> &StochasticMatrix {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (w, p) in &self.atoms {
            acc += p;
            if u < acc {
                return w;
            }
        }
        &self.atoms.last().unwrap().0
    }
}

impl<'de> Deserialize<'de> for FiniteSupportDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let atoms = Vec::<(StochasticMatrix, f64)>::deserialize(d)?;
        FiniteSupportDistribution::new(atoms).map_err(serde::de::Error::custom)
    }
}

/// Per-step pair-selection law for the gossip protocol: a symmetric matrix of
/// pair probabilities with zero diagonal, normalized over unordered pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct GossipSchedule {
    dim: usize,
    /// One pair-probability matrix per scheduled step, row-major.
    steps: Vec<Vec<f64>>,
    tail: TailRule,
}

impl GossipSchedule {
    pub fn new(dim: usize, steps: Vec<Vec<f64>>, tail: TailRule) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::Invalid("gossip schedule needs at least one step".into()));
        }
        for p in &steps {
            if p.len() != dim * dim {
                return Err(Error::DimensionMismatch {
                    expected: dim * dim,
                    got: p.len(),
                });
            }
            let mut total = 0.0;
            for i in 0..dim {
                if p[i * dim + i] != 0.0 {
                    return Err(Error::Invalid("pair probabilities must have zero diagonal".into()));
                }
                for j in 0..dim {
                    let v = p[i * dim + j];
                    if !(v >= 0.0) {
                        return Err(Error::Invalid(format!("negative pair probability {v}")));
                    }
                    if (v - p[j * dim + i]).abs() > 1e-12 {
                        return Err(Error::Invalid("pair probabilities must be symmetric".into()));
                    }
                    if i < j {
                        total += v;
                    }
                }
            }
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::Invalid(format!(
                    "pair probabilities sum to {total} over unordered pairs"
                )));
            }
        }
        Ok(GossipSchedule { dim, steps, tail })
    }

    /// Static schedule from a symmetric nonnegative weight matrix; weights are
    /// normalized over unordered pairs.
    pub fn from_static_weights(dim: usize, weights: &[f64]) -> Result<Self> {
        let mut p = weights.to_vec();
        let total: f64 = (0..dim)
            .flat_map(|i| (i + 1..dim).map(move |j| (i, j)))
            .map(|(i, j)| weights[i * dim + j])
            .sum();
        if total <= 0.0 {
            return Err(Error::Invalid("gossip weights are all zero".into()));
        }
        for v in p.iter_mut() {
            *v /= total;
        }
        GossipSchedule::new(dim, vec![p], TailRule::RepeatLast)
    }

    /// Uniform pair selection over the complete graph.
    pub fn complete_uniform(dim: usize) -> Self {
        let pairs = (dim * (dim - 1) / 2) as f64;
        let mut p = vec![1.0 / pairs; dim * dim];
        for i in 0..dim {
            p[i * dim + i] = 0.0;
        }
        GossipSchedule::new(dim, vec![p], TailRule::RepeatLast).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Pair probabilities at step `k`, or `None` when the identity tail rule
    /// is in effect (no pair wakes up; `W(k) = I`).
    pub fn pair_probs_at(&self, k: u64) -> Option<&[f64]> {
        let k = k as usize;
        if k < self.steps.len() {
            Some(&self.steps[k])
        } else {
            match self.tail {
                TailRule::RepeatLast => Some(self.steps.last().unwrap()),
                TailRule::Identity => None,
            }
        }
    }

    fn sample_pair<R: Rng>(&self, k: u64, rng: &mut R) -> Option<(usize, usize)> {
        let p = self.pair_probs_at(k)?;
        let m = self.dim;
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut last = (0, 1);
        for i in 0..m {
            for j in i + 1..m {
                let pij = p[i * m + j];
                if pij == 0.0 {
                    continue;
                }
                acc += pij;
                last = (i, j);
                if u < acc {
                    return Some((i, j));
                }
            }
        }
        Some(last)
    }
}

impl Serialize for GossipSchedule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        // Mirror the deserialized shape: one row-of-rows matrix per step.
        let steps: Vec<Vec<&[f64]>> = self
            .steps
            .iter()
            .map(|p| p.chunks(self.dim).collect())
            .collect();
        let mut doc = s.serialize_struct("GossipSchedule", 3)?;
        doc.serialize_field("dim", &self.dim)?;
        doc.serialize_field("steps", &steps)?;
        doc.serialize_field("tail", &self.tail)?;
        doc.end()
    }
}

impl<'de> Deserialize<'de> for GossipSchedule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Doc {
            dim: usize,
            steps: Vec<Vec<Vec<f64>>>,
            #[serde(default)]
            tail: TailRule,
        }
        let doc = Doc::deserialize(d)?;
        let steps = doc
            .steps
            .into_iter()
            .map(|rows| rows.into_iter().flatten().collect())
            .collect();
        GossipSchedule::new(doc.dim, steps, doc.tail).map_err(serde::de::Error::custom)
    }
}

/// Deterministic sequence of mixing weights `a(k)` for the weighted gossip
/// update, constrained to `[a_min, 1 - a_min]` with `a_min` in `(0, 1/2]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSequence {
    a_min: f64,
    steps: Vec<f64>,
    tail: TailRule,
}

impl WeightSequence {
    pub fn new(a_min: f64, steps: Vec<f64>, tail: TailRule) -> Result<Self> {
        if !(a_min > 0.0 && a_min <= 0.5) {
            return Err(Error::Invalid(format!("a_min {a_min} outside (0, 1/2]")));
        }
        if steps.is_empty() {
            return Err(Error::Invalid("weight sequence needs at least one step".into()));
        }
        for &a in &steps {
            if a < a_min || a > 1.0 - a_min {
                return Err(Error::WeightOutOfRange(a, a_min, 1.0 - a_min));
            }
        }
        Ok(WeightSequence { a_min, steps, tail })
    }

    pub fn constant(a: f64) -> Result<Self> {
        let a_min = a.min(1.0 - a);
        Self::new(a_min, vec![a], TailRule::RepeatLast)
    }

    pub fn at(&self, k: u64) -> f64 {
        let k = k as usize;
        if k < self.steps.len() {
            self.steps[k]
        } else {
            match self.tail {
                TailRule::RepeatLast => *self.steps.last().unwrap(),
                // No scheduled weight: fall back to the plain symmetric average.
                TailRule::Identity => 0.5,
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameters", rename_all = "snake_case")]
pub enum ChainKind {
    Deterministic {
        schedule: Vec<StochasticMatrix>,
        #[serde(default)]
        tail: TailRule,
    },
    IidFiniteSupport {
        dist: FiniteSupportDistribution,
    },
    IndependentTimeVarying {
        steps: Vec<FiniteSupportDistribution>,
        #[serde(default)]
        tail: TailRule,
    },
    Gossip {
        schedule: GossipSchedule,
    },
    WeightedGossip {
        schedule: GossipSchedule,
        weights: WeightSequence,
    },
    UniformPermutation,
}

/// An immutable description of a random chain `{W(k)}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainModel {
    dim: usize,
    #[serde(flatten)]
    kind: ChainKind,
    #[serde(default)]
    description: String,
}

impl ChainModel {
    pub fn new(dim: usize, kind: ChainKind, description: impl Into<String>) -> Result<Self> {
        let model = ChainModel {
            dim,
            kind,
            description: description.into(),
        };
        model.check_dims()?;
        Ok(model)
    }

    fn check_dims(&self) -> Result<()> {
        let dim = self.dim;
        if dim < 2 {
            return Err(Error::Invalid("chain dimension must be at least 2".into()));
        }
        let ok = match &self.kind {
            ChainKind::Deterministic { schedule, .. } => {
                !schedule.is_empty() && schedule.iter().all(|w| w.dim() == dim)
            }
            ChainKind::IidFiniteSupport { dist } => dist.dim() == dim,
            ChainKind::IndependentTimeVarying { steps, .. } => {
                !steps.is_empty() && steps.iter().all(|d| d.dim() == dim)
            }
            ChainKind::Gossip { schedule } => schedule.dim() == dim,
            ChainKind::WeightedGossip { schedule, .. } => schedule.dim() == dim,
            ChainKind::UniformPermutation => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid("model parameters disagree with dim".into()))
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &ChainKind {
        &self.kind
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// True when `W(k)` carries no randomness for any `k`.
    pub fn is_deterministic(&self) -> bool {
        matches!(self.kind, ChainKind::Deterministic { .. })
    }

    pub fn is_independent(&self) -> bool {
        // Every supported kind draws W(k) from disjoint per-k streams.
        true
    }

    /// Draws `W(k)`. Deterministic function of `(model, k, key)`.
    pub fn sample(&self, k: u64, key: StreamKey) -> StochasticMatrix {
        match &self.kind {
            ChainKind::Deterministic { schedule, tail } => {
                deterministic_at(self.dim, schedule, *tail, k)
            }
            ChainKind::IidFiniteSupport { dist } => {
                dist.sample(&mut stream_rng(key, k)).clone()
            }
            ChainKind::IndependentTimeVarying { steps, tail } => {
                let ki = k as usize;
                if ki < steps.len() {
                    steps[ki].sample(&mut stream_rng(key, k)).clone()
                } else {
                    match tail {
                        TailRule::RepeatLast => {
                            steps.last().unwrap().sample(&mut stream_rng(key, k)).clone()
                        }
                        TailRule::Identity => StochasticMatrix::identity(self.dim),
                    }
                }
            }
            ChainKind::Gossip { schedule } => {
                match schedule.sample_pair(k, &mut stream_rng(key, k)) {
                    Some((i, j)) => StochasticMatrix::pair_average(self.dim, i, j, 0.5),
                    None => StochasticMatrix::identity(self.dim),
                }
            }
            ChainKind::WeightedGossip { schedule, weights } => {
                match schedule.sample_pair(k, &mut stream_rng(key, k)) {
                    Some((i, j)) => {
                        StochasticMatrix::pair_average(self.dim, i, j, weights.at(k))
                    }
                    None => StochasticMatrix::identity(self.dim),
                }
            }
            ChainKind::UniformPermutation => {
                let mut rng = stream_rng(key, k);
                let mut perm: Vec<usize> = (0..self.dim).collect();
                // Fisher-Yates; avoids enumerating m! atoms.
                for i in (1..self.dim).rev() {
                    let j = rng.gen_range(0..=i);
                    perm.swap(i, j);
                }
                StochasticMatrix::permutation(&perm)
            }
        }
    }

    /// Exact expected matrix `E[W(k)]`.
    pub fn expected(&self, k: u64) -> StochasticMatrix {
        match &self.kind {
            ChainKind::Deterministic { schedule, tail } => {
                deterministic_at(self.dim, schedule, *tail, k)
            }
            ChainKind::IidFiniteSupport { dist } => dist.expected(),
            ChainKind::IndependentTimeVarying { steps, tail } => {
                let ki = k as usize;
                if ki < steps.len() {
                    steps[ki].expected()
                } else {
                    match tail {
                        TailRule::RepeatLast => steps.last().unwrap().expected(),
                        TailRule::Identity => StochasticMatrix::identity(self.dim),
                    }
                }
            }
            ChainKind::Gossip { schedule } => {
                gossip_expected(self.dim, schedule.pair_probs_at(k), 0.5)
            }
            ChainKind::WeightedGossip { schedule, weights } => {
                gossip_expected(self.dim, schedule.pair_probs_at(k), weights.at(k))
            }
            ChainKind::UniformPermutation => StochasticMatrix::uniform(self.dim),
        }
    }

    /// The exact per-step law at time `k` as a list of atoms, when available.
    /// The uniform permutation model only enumerates its `m!` atoms at small
    /// dimension; otherwise callers fall back to Monte Carlo.
    pub fn atoms_at(&self, k: u64) -> Option<FiniteSupportDistribution> {
        match &self.kind {
            ChainKind::Deterministic { schedule, tail } => Some(FiniteSupportDistribution::point(
                deterministic_at(self.dim, schedule, *tail, k),
            )),
            ChainKind::IidFiniteSupport { dist } => Some(dist.clone()),
            ChainKind::IndependentTimeVarying { steps, tail } => {
                let ki = k as usize;
                if ki < steps.len() {
                    Some(steps[ki].clone())
                } else {
                    match tail {
                        TailRule::RepeatLast => Some(steps.last().unwrap().clone()),
                        TailRule::Identity => Some(FiniteSupportDistribution::point(
                            StochasticMatrix::identity(self.dim),
                        )),
                    }
                }
            }
            ChainKind::Gossip { schedule } => gossip_atoms(self.dim, schedule.pair_probs_at(k), 0.5),
            ChainKind::WeightedGossip { schedule, weights } => {
                gossip_atoms(self.dim, schedule.pair_probs_at(k), weights.at(k))
            }
            ChainKind::UniformPermutation => {
                if self.dim > 6 {
                    return None;
                }
                let perms = permutations(self.dim);
                let p = 1.0 / perms.len() as f64;
                Some(
                    FiniteSupportDistribution::new(
                        perms
                            .into_iter()
                            .map(|perm| (StochasticMatrix::permutation(&perm), p))
                            .collect(),
                    )
                    .unwrap(),
                )
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&DocWrapper {
            dim: self.dim,
            kind: &self.kind,
            description: &self.description,
        })
        .expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: ChainModel =
            serde_json::from_str(text).map_err(|e| Error::Invalid(format!("model JSON: {e}")))?;
        model.check_dims()?;
        Ok(model)
    }
}

#[derive(Serialize)]
struct DocWrapper<'a> {
    dim: usize,
    #[serde(flatten)]
    kind: &'a ChainKind,
    description: &'a str,
}

fn deterministic_at(
    dim: usize,
    schedule: &[StochasticMatrix],
    tail: TailRule,
    k: u64,
) -> StochasticMatrix {
    let ki = k as usize;
    if ki < schedule.len() {
        schedule[ki].clone()
    } else {
        match tail {
            TailRule::RepeatLast => schedule.last().unwrap().clone(),
            TailRule::Identity => StochasticMatrix::identity(dim),
        }
    }
}

/// `E[W(k)] = I - (1-a) * sum_{i<j} P_ij (e_i - e_j)(e_i - e_j)^T`.
fn gossip_expected(dim: usize, probs: Option<&[f64]>, a: f64) -> StochasticMatrix {
    let mut e = StochasticMatrix::identity(dim).entries().to_vec();
    if let Some(p) = probs {
        let c = 1.0 - a;
        for i in 0..dim {
            for j in i + 1..dim {
                let pij = p[i * dim + j];
                if pij == 0.0 {
                    continue;
                }
                e[i * dim + i] -= c * pij;
                e[j * dim + j] -= c * pij;
                e[i * dim + j] += c * pij;
                e[j * dim + i] += c * pij;
            }
        }
    }
    StochasticMatrix::validate(dim, &e, TOL_ROW).expect("gossip expectation is stochastic")
}

fn gossip_atoms(
    dim: usize,
    probs: Option<&[f64]>,
    a: f64,
) -> Option<FiniteSupportDistribution> {
    let p = match probs {
        Some(p) => p,
        None => {
            return Some(FiniteSupportDistribution::point(StochasticMatrix::identity(
                dim,
            )))
        }
    };
    let mut atoms = Vec::new();
    for i in 0..dim {
        for j in i + 1..dim {
            let pij = p[i * dim + j];
            if pij > 0.0 {
                atoms.push((StochasticMatrix::pair_average(dim, i, j, a), pij));
            }
        }
    }
    Some(FiniteSupportDistribution::new(atoms).expect("pair probabilities normalize"))
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..m).collect();
    heap_permute(&mut cur, m, &mut out);
    out
}

fn heap_permute(cur: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
    if n == 1 {
        out.push(cur.clone());
        return;
    }
    for i in 0..n {
        heap_permute(cur, n - 1, out);
        if n % 2 == 0 {
            cur.swap(i, n - 1);
        } else {
            cur.swap(0, n - 1);
        }
    }
}

/// Builds the matrix implementing the two-agent weighted update
/// `x_i <- a x_i + (1-a) x_j`, `x_j <- a x_j + (1-a) x_i`, identity elsewhere.
pub fn weighted_gossip_sample(
    schedule: &GossipSchedule,
    weights: &WeightSequence,
    k: u64,
    key: StreamKey,
) -> StochasticMatrix {
    let model = ChainModel::new(
        schedule.dim(),
        ChainKind::WeightedGossip {
            schedule: schedule.clone(),
            weights: weights.clone(),
        },
        "",
    )
    .expect("dims agree");
    model.sample(k, key)
}

// ---------------------------------------------------------------------------
// Canned chains
// ---------------------------------------------------------------------------

pub const CANNED_NAMES: [&str; 7] = [
    "example_noerg",
    "example_2x2_cf",
    "example_cons_nontriv",
    "example_permutation",
    "example_feed_static",
    "gossip_complete",
    "gossip_two_blocks",
];

/// One rank-one averaging step `e v^T`, identity forever after: the chain
/// reaches consensus from time 0 but is not ergodic (restarting at t >= 1
/// nothing ever mixes).
pub fn example_noerg(v: StochasticVector) -> ChainModel {
    let dim = v.dim();
    ChainModel::new(
        dim,
        ChainKind::Deterministic {
            schedule: vec![StochasticMatrix::rank_one(&v)],
            tail: TailRule::Identity,
        },
        "rank-one averaging at k=0, identity afterwards; consensus without ergodicity",
    )
    .unwrap()
}

/// 2x2 chain: full averaging at k=0, then the swap matrix forever. Consensus
/// holds and flow diverges, yet the chain truncated at t=1 never settles.
pub fn example_2x2_cf() -> ChainModel {
    let swap = StochasticMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    ChainModel::new(
        2,
        ChainKind::Deterministic {
            schedule: vec![StochasticMatrix::uniform(2), swap],
            tail: TailRule::RepeatLast,
        },
        "average once then swap forever; consensus and infinite flow without ergodicity",
    )
    .unwrap()
}

/// At k=0, full averaging with probability `p`, identity otherwise; identity
/// for all k >= 1. Consensus happens with probability exactly `p` while the
/// flow and ergodicity events are empty.
pub fn example_cons_nontriv(p: f64, dim: usize) -> Result<ChainModel> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Invalid(format!("p = {p} outside (0, 1]")));
    }
    let step = FiniteSupportDistribution::new(vec![
        (StochasticMatrix::uniform(dim), p),
        (StochasticMatrix::identity(dim), 1.0 - p),
    ])?;
    ChainModel::new(
        dim,
        ChainKind::IndependentTimeVarying {
            steps: vec![step],
            tail: TailRule::Identity,
        },
        "one-shot averaging with probability p, then identity; consensus probability p",
    )
}

/// i.i.d. uniform draws over all m x m permutation matrices. The expected
/// matrix is (1/m) e e^T so flow diverges, yet consensus never happens.
pub fn example_permutation(dim: usize) -> ChainModel {
    ChainModel::new(
        dim,
        ChainKind::UniformPermutation,
        "i.i.d. uniform permutation matrices; infinite flow, consensus probability zero",
    )
    .unwrap()
}

/// The static 3x3 matrix with zero diagonal and all off-diagonal entries 1/2.
/// It has no feedback (zero diagonal) but weak feedback with constant 1/4,
/// and its steady state is uniform.
pub fn example_feed_static() -> ChainModel {
    let a = StochasticMatrix::from_rows(&[
        vec![0.0, 0.5, 0.5],
        vec![0.5, 0.0, 0.5],
        vec![0.5, 0.5, 0.0],
    ])
    .unwrap();
    ChainModel::new(
        3,
        ChainKind::Deterministic {
            schedule: vec![a],
            tail: TailRule::RepeatLast,
        },
        "static zero-diagonal averaging matrix; weak feedback (constant 1/4) only",
    )
    .unwrap()
}

/// Uniform gossip over the complete graph on `dim` agents.
pub fn gossip_complete(dim: usize) -> ChainModel {
    ChainModel::new(
        dim,
        ChainKind::Gossip {
            schedule: GossipSchedule::complete_uniform(dim),
        },
        "pairwise randomized averaging, uniform over all pairs",
    )
    .unwrap()
}

/// Gossip restricted to two blocks with no cross-block pairs; the block cut
/// never carries flow and consensus never happens across blocks.
pub fn gossip_two_blocks(dim: usize) -> Result<ChainModel> {
    if dim < 4 {
        return Err(Error::Invalid("two-block gossip needs dim >= 4".into()));
    }
    let half = dim / 2;
    let mut weights = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in i + 1..dim {
            if (i < half) == (j < half) {
                weights[i * dim + j] = 1.0;
                weights[j * dim + i] = 1.0;
            }
        }
    }
    ChainModel::new(
        dim,
        ChainKind::Gossip {
            schedule: GossipSchedule::from_static_weights(dim, &weights)?,
        },
        "gossip with two isolated blocks; the block cut carries zero flow forever",
    )
}

/// Resolves a canned model by name, with default parameters.
pub fn canned(name: &str) -> Result<ChainModel> {
    match name {
        "example_noerg" => Ok(example_noerg(StochasticVector::uniform(2))),
        "example_2x2_cf" => Ok(example_2x2_cf()),
        "example_cons_nontriv" => example_cons_nontriv(0.3, 3),
        "example_permutation" => Ok(example_permutation(3)),
        "example_feed_static" => Ok(example_feed_static()),
        "gossip_complete" => Ok(gossip_complete(8)),
        "gossip_two_blocks" => gossip_two_blocks(8),
        other => Err(Error::UnknownExample(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{spread, Cut};
    use proptest::prelude::*;

    #[test]
    fn deterministic_sample_ignores_seed() {
        let model = example_feed_static();
        let a = model.sample(5, StreamKey::new(1, 0));
        let b = model.sample(5, StreamKey::new(999, 42));
        assert_eq!(a, b);
    }

    #[test]
    fn noerg_first_step_is_rank_one() {
        let model = example_noerg(StochasticVector::validate(vec![0.5, 0.5], 1e-9).unwrap());
        let w0 = model.sample(0, StreamKey::new(0, 0));
        assert_eq!(w0, StochasticMatrix::uniform(2));
        assert_eq!(model.sample(1, StreamKey::new(0, 0)), StochasticMatrix::identity(2));
    }

    #[test]
    fn gossip_sample_is_pair_average() {
        let model = gossip_complete(4);
        for k in 0..50 {
            let w = model.sample(k, StreamKey::new(11, 0));
            assert!(w.is_doubly_stochastic(1e-12));
            // Exactly one pair averaged: diagonal has two entries 1/2.
            let halves = (0..4).filter(|&i| w.get(i, i) == 0.5).count();
            assert_eq!(halves, 2);
        }
    }

    #[test]
    fn permutation_samples_are_permutations() {
        let model = example_permutation(5);
        for k in 0..100 {
            let w = model.sample(k, StreamKey::new(3, 0));
            for i in 0..5 {
                assert_eq!(w.row(i).iter().filter(|&&v| v == 1.0).count(), 1);
                let col_ones = (0..5).filter(|&r| w.get(r, i) == 1.0).count();
                assert_eq!(col_ones, 1);
            }
        }
    }

    #[test]
    fn permutation_two_agents_hits_both_atoms() {
        let model = example_permutation(2);
        let mut seen_id = false;
        let mut seen_swap = false;
        for k in 0..64 {
            let w = model.sample(k, StreamKey::new(5, 0));
            if w.get(0, 0) == 1.0 {
                seen_id = true;
            } else {
                seen_swap = true;
            }
        }
        assert!(seen_id && seen_swap);
    }

    #[test]
    fn expected_matrices_closed_forms() {
        let perm = example_permutation(4);
        assert!(perm.expected(3).max_abs_diff(&StochasticMatrix::uniform(4)) < 1e-15);

        let gossip = gossip_complete(3);
        let e = gossip.expected(0);
        for i in 0..3 {
            assert!((e.get(i, i) - 2.0 / 3.0).abs() < 1e-15);
            for j in 0..3 {
                if i != j {
                    assert!((e.get(i, j) - 1.0 / 6.0).abs() < 1e-15);
                }
            }
        }
        // Cross-check against exhaustive atom enumeration.
        let from_atoms = gossip.atoms_at(0).unwrap().expected();
        assert!(e.max_abs_diff(&from_atoms) < 1e-15);
    }

    #[test]
    fn cons_nontriv_expected_is_atom_weighted_sum() {
        let model = example_cons_nontriv(0.3, 2).unwrap();
        let e = model.expected(0);
        assert!((e.get(0, 0) - (0.3 * 0.5 + 0.7)).abs() < 1e-15);
        assert!((e.get(0, 1) - 0.3 * 0.5).abs() < 1e-15);
        assert_eq!(model.expected(1), StochasticMatrix::identity(2));
    }

    #[test]
    fn weighted_gossip_constructs_stated_update() {
        let schedule = GossipSchedule::complete_uniform(2);
        let weights = WeightSequence::constant(0.3).unwrap();
        let w = weighted_gossip_sample(&schedule, &weights, 0, StreamKey::new(0, 0));
        assert!((w.get(0, 0) - 0.3).abs() < 1e-15);
        assert!((w.get(0, 1) - 0.7).abs() < 1e-15);
        assert!((w.get(1, 0) - 0.7).abs() < 1e-15);
        assert!((w.get(1, 1) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn weight_bounds_reject_degenerate_weights() {
        assert!(matches!(
            WeightSequence::new(0.25, vec![0.8], TailRule::RepeatLast),
            Err(Error::WeightOutOfRange(..))
        ));
        assert!(WeightSequence::constant(1.0).is_err());
    }

    #[test]
    fn sampling_is_bit_reproducible() {
        let model = gossip_complete(6);
        for k in [0u64, 7, 123] {
            let a = model.sample(k, StreamKey::new(77, 5));
            let b = model.sample(k, StreamKey::new(77, 5));
            assert_eq!(a.entries(), b.entries());
        }
    }

    #[test]
    fn model_json_round_trip() {
        let model = gossip_two_blocks(6).unwrap();
        let text = model.to_json();
        let back = ChainModel::from_json(&text).unwrap();
        assert_eq!(model.dim(), back.dim());
        assert_eq!(
            model.sample(3, StreamKey::new(9, 1)),
            back.sample(3, StreamKey::new(9, 1))
        );
    }

    #[test]
    fn empirical_mean_matches_expected_within_four_se() {
        // Monte Carlo consistency: 1e5 draws of the gossip law at k=0.
        let model = gossip_complete(3);
        let n = 100_000u64;
        let m = model.dim();
        let mut sum = vec![0.0; m * m];
        let mut sumsq = vec![0.0; m * m];
        for trial in 0..n {
            let w = model.sample(0, StreamKey::new(20_240_501, trial));
            for (idx, &v) in w.entries().iter().enumerate() {
                sum[idx] += v;
                sumsq[idx] += v * v;
            }
        }
        let expected = model.expected(0);
        for idx in 0..m * m {
            let mean = sum[idx] / n as f64;
            let var = (sumsq[idx] / n as f64 - mean * mean).max(0.0);
            let se = (var / n as f64).sqrt();
            let diff = (mean - expected.entries()[idx]).abs();
            assert!(
                diff <= 4.0 * se + 1e-12,
                "entry {idx}: diff {diff} > 4 se {se}"
            );
        }
    }

    #[test]
    fn two_block_gossip_never_crosses_blocks() {
        let model = gossip_two_blocks(6).unwrap();
        let block = Cut::new(6, &[0, 1, 2]).unwrap();
        for k in 0..200 {
            let w = model.sample(k, StreamKey::new(4, 0));
            assert_eq!(crate::linalg::cut_flow(&w, &block), 0.0);
        }
    }

    proptest! {
        #[test]
        fn gossip_samples_doubly_stochastic(seed in 0u64..200, k in 0u64..50) {
            let model = gossip_complete(5);
            let w = model.sample(k, StreamKey::new(seed, 0));
            prop_assert!(w.is_doubly_stochastic(1e-12));
            // Consensus vector is fixed: spread of W e is 0.
            prop_assert!(spread(&w.apply(&[1.0; 5])) < 1e-15);
        }
    }
}
