//! Stand-alone numerical oracles for the deterministic inequalities that
//! underpin the convergence analysis, runnable as randomized sweeps.
//!
//! Each verifier evaluates both sides of one inequality on concrete inputs
//! and reports a [`VerificationCase`]; the sweeps hammer them with sampled
//! instances. A failure beyond the float slack indicates a bug, never a
//! statistical fluke — these are theorems.

use crate::error::{Error, Result};
use crate::flow::enumerate_cuts;
use crate::linalg::{cut_flow, lyapunov_v, spread, Cut, StochasticMatrix, StochasticVector};
use crate::rng::{stream_rng, StreamKey};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Relative float slack: a case passes when `rhs - lhs >= -SLACK * max(1, |rhs|)`.
pub const SLACK: f64 = 1e-10;

/// One evaluated inequality instance. `margin = rhs - lhs`; negative beyond
/// slack means the claimed `lhs <= rhs` failed.
#[derive(Clone, Debug, Serialize)]
pub struct VerificationCase {
    pub check: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
}

impl VerificationCase {
    fn new(check: &'static str, lhs: f64, rhs: f64) -> Self {
        let margin = rhs - lhs;
        VerificationCase {
            check,
            lhs,
            rhs,
            margin,
            pass: margin >= -SLACK * rhs.abs().max(1.0),
        }
    }
}

/// Cut confinement bound: along `z(k+1) = A(k) z(k)`, the maximum over `S`
/// can rise above its initial value, and the minimum over the complement can
/// fall below its own, by at most the spread of `z(0)` times the accumulated
/// cut flow. Checks both sides at every prefix length and returns the
/// worst-margin case of each.
pub fn verify_flow_bound(
    chain: &[StochasticMatrix],
    s: &Cut,
    z0: &[f64],
) -> Result<(VerificationCase, VerificationCase)> {
    let m = z0.len();
    if s.dim() != m || chain.iter().any(|a| a.dim() != m) {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: s.dim(),
        });
    }
    let d0 = spread(z0);
    let members: Vec<usize> = s.members();
    let outside: Vec<usize> = (0..m).filter(|&i| !s.contains(i)).collect();
    let max_in = |z: &[f64]| members.iter().map(|&i| z[i]).fold(f64::NEG_INFINITY, f64::max);
    let min_out = |z: &[f64]| outside.iter().map(|&j| z[j]).fold(f64::INFINITY, f64::min);
    let (max0, min0) = (max_in(z0), min_out(z0));

    let mut z = z0.to_vec();
    let mut next = vec![0.0; m];
    let mut accum = 0.0;
    let mut worst_upper = VerificationCase::new("flow_bound_upper", max0, max0);
    let mut worst_lower = VerificationCase::new("flow_bound_lower", min0, min0);
    for a in chain {
        accum += cut_flow(a, s);
        a.apply_into(&z, &mut next);
        std::mem::swap(&mut z, &mut next);
        let upper = VerificationCase::new("flow_bound_upper", max_in(&z), max0 + d0 * accum);
        if upper.margin < worst_upper.margin {
            worst_upper = upper;
        }
        // Lower bound: min over the complement must stay at or above
        // `min0 - d0 * accum`; phrased as lhs <= rhs with the bound on the left.
        let lower = VerificationCase::new("flow_bound_lower", min0 - d0 * accum, min_out(&z));
        if lower.margin < worst_lower.margin {
            worst_lower = lower;
        }
    }
    Ok((worst_upper, worst_lower))
}

/// Near-consensus contraction: when every column of `A` has spread at most
/// `1/(2m)`, the image of any `x` in the unit box has spread at most `1/2`.
pub fn verify_uniform_contraction(a: &StochasticMatrix, x: &[f64]) -> Result<VerificationCase> {
    let m = a.dim();
    if x.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: x.len(),
        });
    }
    if x.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::Invalid("x must lie in the unit box".into()));
    }
    let cap = 1.0 / (2.0 * m as f64);
    for l in 0..m {
        let col: Vec<f64> = (0..m).map(|i| a.get(i, l)).collect();
        if spread(&col) > cap + 1e-15 {
            return Err(Error::PremiseNotMet(format!(
                "column {l} spread {:.3e} exceeds 1/(2m) = {:.3e}",
                spread(&col),
                cap
            )));
        }
    }
    Ok(VerificationCase::new("uniform_contraction", spread(&a.apply(x)), 0.5))
}

/// Quadratic-to-cubic gap bound: for a stochastic weight vector and a
/// nondecreasing `x`, `V(x)/(m-1)^2` is at most the cubed-gap sum divided by
/// the total range. A constant `x` is the degenerate limit with both sides 0.
pub fn verify_cubic_spread_bound(pi: &StochasticVector, x: &[f64]) -> Result<VerificationCase> {
    let m = x.len();
    if pi.dim() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: pi.dim(),
        });
    }
    if x.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Invalid("x must be sorted nondecreasing".into()));
    }
    let range = x[m - 1] - x[0];
    if range == 0.0 {
        return Ok(VerificationCase::new("cubic_spread_bound", 0.0, 0.0));
    }
    let lhs = lyapunov_v(x, pi) / (((m - 1) * (m - 1)) as f64);
    let rhs = x
        .windows(2)
        .map(|w| {
            let g = w[1] - w[0];
            g * g * g
        })
        .sum::<f64>()
        / range;
    Ok(VerificationCase::new("cubic_spread_bound", lhs, rhs))
}

/// Scalar rearrangement step used inside the cubic bound:
/// `a b^2 + b a^2 <= a^3 + b^3` for nonnegative `a`, `b`.
pub fn verify_scalar_cubic(alpha: f64, beta: f64) -> Result<VerificationCase> {
    if alpha < 0.0 || beta < 0.0 {
        return Err(Error::Invalid("alpha and beta must be nonnegative".into()));
    }
    Ok(VerificationCase::new(
        "scalar_cubic",
        alpha * beta * beta + beta * alpha * alpha,
        alpha * alpha * alpha + beta * beta * beta,
    ))
}

/// Accumulated disagreement bound: once every cut has gathered flow at least
/// `delta` within the first `T` steps, the weighted sum of squared pairwise
/// disagreements along the trajectory dominates a cubed-gap functional of
/// the sorted initial vector.
pub fn verify_disagreement_accumulation(
    chain: &[StochasticMatrix],
    z0: &[f64],
    delta: f64,
) -> Result<VerificationCase> {
    let m = z0.len();
    if chain.is_empty() {
        return Err(Error::Invalid("empty chain prefix".into()));
    }
    if chain.iter().any(|a| a.dim() != m) {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: chain[0].dim(),
        });
    }
    if !(0.0 < delta && delta < 1.0) {
        return Err(Error::Invalid("delta must lie in (0,1)".into()));
    }
    // Premise: accumulated flow at least delta on every nontrivial cut.
    for cut in enumerate_cuts(m, 25)? {
        let total: f64 = chain.iter().map(|a| cut_flow(a, &cut)).sum();
        if total < delta {
            return Err(Error::PremiseNotMet(format!(
                "cut {} accumulates only {total:.6} < delta = {delta}",
                cut.label()
            )));
        }
    }
    let mut sorted = z0.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let range = sorted[m - 1] - sorted[0];
    if range == 0.0 {
        return Ok(VerificationCase::new("disagreement_accumulation", 0.0, 0.0));
    }
    let rhs = delta * (1.0 - delta) * (1.0 - delta) / range
        * sorted
            .windows(2)
            .map(|w| {
                let g = w[1] - w[0];
                g * g * g
            })
            .sum::<f64>();
    let mut z = z0.to_vec();
    let mut next = vec![0.0; m];
    let mut lhs = 0.0;
    for a in chain {
        for i in 0..m {
            for j in i + 1..m {
                let d = z[j] - z[i];
                lhs += (a.get(i, j) + a.get(j, i)) * d * d;
            }
        }
        a.apply_into(&z, &mut next);
        std::mem::swap(&mut z, &mut next);
    }
    // Inequality direction is lhs >= rhs; phrase with the bound on the left.
    Ok(VerificationCase::new("disagreement_accumulation", rhs, lhs))
}

// ---------------------------------------------------------------------------
// Instance samplers. The inequalities are universal, so test power comes
// from diverse sampling rather than adversarial construction.

/// Random stochastic matrix via row-wise normalized exponentials.
pub fn random_stochastic_matrix<R: Rng>(rng: &mut R, m: usize) -> StochasticMatrix {
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            let raw: Vec<f64> = (0..m).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
            let sum: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / sum).collect()
        })
        .collect();
    StochasticMatrix::from_rows(&rows).expect("normalized rows are stochastic")
}

/// Random stochastic vector by the same normalization.
pub fn random_stochastic_vector<R: Rng>(rng: &mut R, m: usize) -> StochasticVector {
    let raw: Vec<f64> = (0..m).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    let sum: f64 = raw.iter().sum();
    StochasticVector::validate(raw.into_iter().map(|v| v / sum).collect(), 1e-9)
        .expect("normalized vector is stochastic")
}

/// Uniform draw over the canonical nontrivial cuts of `[m]`.
pub fn random_cut<R: Rng>(rng: &mut R, m: usize) -> Cut {
    let free_bits = rng.gen_range(0u64..(1 << (m - 1)) - 1) + 1;
    // Keep index 0 inside; the remaining bits are the draw, excluding the
    // all-ones pattern which would make the complement empty.
    let mask = 1 | (free_bits << 1);
    let mask = if mask.count_ones() as usize == m { 1 } else { mask };
    Cut::from_mask(m, mask).expect("canonical nontrivial mask")
}

/// Random sorted vector of uniforms scaled to `[lo, hi]`.
pub fn random_sorted_vector<R: Rng>(rng: &mut R, m: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..m).map(|_| lo + (hi - lo) * rng.gen::<f64>()).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

// ---------------------------------------------------------------------------
// Randomized sweeps. Cases are pure functions of their index, evaluated in
// parallel and merged by order-independent reduction.

#[derive(Clone, Debug, Serialize)]
pub struct SweepSummary {
    pub check: &'static str,
    pub cases: u64,
    pub evaluated: u64,
    pub skipped: u64,
    pub failures: u64,
    pub worst_margin: f64,
    pub first_failure: Option<VerificationCase>,
}

fn summarize(
    check: &'static str,
    cases: u64,
    results: Vec<Option<VerificationCase>>,
) -> SweepSummary {
    let mut summary = SweepSummary {
        check,
        cases,
        evaluated: 0,
        skipped: 0,
        failures: 0,
        worst_margin: f64::INFINITY,
        first_failure: None,
    };
    for r in results {
        match r {
            None => summary.skipped += 1,
            Some(case) => {
                summary.evaluated += 1;
                summary.worst_margin = summary.worst_margin.min(case.margin);
                if !case.pass {
                    summary.failures += 1;
                    if summary.first_failure.is_none() {
                        summary.first_failure = Some(case);
                    }
                }
            }
        }
    }
    summary
}

fn worse(a: VerificationCase, b: VerificationCase) -> VerificationCase {
    if a.margin <= b.margin {
        a
    } else {
        b
    }
}

pub fn sweep_flow_bound(cases: u64, seed: u64) -> SweepSummary {
    let results: Vec<Option<VerificationCase>> = (0..cases)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(StreamKey::new(seed, i), 0);
            let m = rng.gen_range(2..=6);
            let len = rng.gen_range(1..=8);
            let chain: Vec<StochasticMatrix> =
                (0..len).map(|_| random_stochastic_matrix(&mut rng, m)).collect();
            let s = random_cut(&mut rng, m);
            let z0: Vec<f64> = (0..m).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let (upper, lower) = verify_flow_bound(&chain, &s, &z0).unwrap();
            Some(worse(upper, lower))
        })
        .collect();
    summarize("flow_bound", cases, results)
}

pub fn sweep_uniform_contraction(cases: u64, seed: u64) -> SweepSummary {
    let results: Vec<Option<VerificationCase>> = (0..cases)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(StreamKey::new(seed, i), 0);
            let m = rng.gen_range(2..=8);
            // Mix the averaging matrix with a random stochastic perturbation
            // at weight <= 1/(2m): column spreads stay within the premise.
            let theta = rng.gen::<f64>() / (2.0 * m as f64);
            let noise = random_stochastic_matrix(&mut rng, m);
            let rows: Vec<Vec<f64>> = (0..m)
                .map(|r| {
                    (0..m)
                        .map(|c| (1.0 - theta) / m as f64 + theta * noise.get(r, c))
                        .collect()
                })
                .collect();
            let a = StochasticMatrix::from_rows(&rows).unwrap();
            let x: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
            match verify_uniform_contraction(&a, &x) {
                Ok(case) => Some(case),
                Err(Error::PremiseNotMet(_)) => None,
                Err(e) => panic!("unexpected error: {e}"),
            }
        })
        .collect();
    summarize("uniform_contraction", cases, results)
}

pub fn sweep_cubic_spread_bound(cases: u64, seed: u64) -> SweepSummary {
    let results: Vec<Option<VerificationCase>> = (0..cases)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(StreamKey::new(seed, i), 0);
            let m = rng.gen_range(2..=10);
            let pi = random_stochastic_vector(&mut rng, m);
            let x = random_sorted_vector(&mut rng, m, -10.0, 10.0);
            Some(verify_cubic_spread_bound(&pi, &x).unwrap())
        })
        .collect();
    summarize("cubic_spread_bound", cases, results)
}

pub fn sweep_scalar_cubic(cases: u64, seed: u64) -> SweepSummary {
    let results: Vec<Option<VerificationCase>> = (0..cases)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(StreamKey::new(seed, i), 0);
            let scale = 10f64.powi(rng.gen_range(-3..=3));
            let alpha = scale * rng.gen::<f64>();
            let beta = scale * rng.gen::<f64>();
            Some(verify_scalar_cubic(alpha, beta).unwrap())
        })
        .collect();
    summarize("scalar_cubic", cases, results)
}

pub fn sweep_disagreement_accumulation(cases: u64, seed: u64) -> SweepSummary {
    const DELTA: f64 = 0.3;
    let results: Vec<Option<VerificationCase>> = (0..cases)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(StreamKey::new(seed, i), 0);
            let m = rng.gen_range(2..=5);
            // Random gossip realization extended until every cut has
            // accumulated at least DELTA (each pair average adds 1 to every
            // cut separating the pair, so short prefixes suffice).
            let mut chain = Vec::new();
            let cuts = enumerate_cuts(m, 25).unwrap();
            let mut flows = vec![0.0; cuts.len()];
            for _ in 0..64 {
                let a = rng.gen_range(0..m);
                let b = (a + rng.gen_range(1..m)) % m;
                let (a, b) = (a.min(b), a.max(b));
                let w = StochasticMatrix::pair_average(m, a, b, 0.5);
                for (f, c) in flows.iter_mut().zip(&cuts) {
                    *f += cut_flow(&w, c);
                }
                chain.push(w);
                if flows.iter().all(|&f| f >= DELTA) {
                    break;
                }
            }
            if flows.iter().any(|&f| f < DELTA) {
                return None;
            }
            let z0: Vec<f64> = (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect();
            Some(verify_disagreement_accumulation(&chain, &z0, DELTA).unwrap())
        })
        .collect();
    summarize("disagreement_accumulation", cases, results)
}

pub const SWEEP_NAMES: &[&str] = &[
    "flow_bound",
    "uniform_contraction",
    "cubic_spread_bound",
    "scalar_cubic",
    "disagreement_accumulation",
];

pub fn sweep_by_name(name: &str, cases: u64, seed: u64) -> Result<SweepSummary> {
    match name {
        "flow_bound" => Ok(sweep_flow_bound(cases, seed)),
        "uniform_contraction" => Ok(sweep_uniform_contraction(cases, seed)),
        "cubic_spread_bound" => Ok(sweep_cubic_spread_bound(cases, seed)),
        "scalar_cubic" => Ok(sweep_scalar_cubic(cases, seed)),
        "disagreement_accumulation" => Ok(sweep_disagreement_accumulation(cases, seed)),
        _ => Err(Error::Invalid(format!("unknown check '{name}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn identity_chain_flow_bound_is_equality() {
        let chain = vec![StochasticMatrix::identity(4); 6];
        let s = Cut::new(4, &[0, 2]).unwrap();
        let z0 = [1.0, -2.0, 0.5, 3.0];
        let (upper, lower) = verify_flow_bound(&chain, &s, &z0).unwrap();
        assert!(upper.pass && lower.pass);
        assert_eq!(upper.margin, 0.0);
        assert_eq!(lower.margin, 0.0);
    }

    #[test]
    fn starved_cut_keeps_groups_separated() {
        // Within-group averaging plus geometrically vanishing cross mass
        // summing to 1/8 < 1/4 across the cut {0,1}: starting from 0 on the
        // cut and 1 outside, the gap must stay above 1/2 forever.
        let m = 4;
        let block = StochasticMatrix::from_rows(&[
            vec![0.5, 0.5, 0.0, 0.0],
            vec![0.5, 0.5, 0.0, 0.0],
            vec![0.0, 0.0, 0.5, 0.5],
            vec![0.0, 0.0, 0.5, 0.5],
        ])
        .unwrap();
        let uniform = StochasticMatrix::uniform(m);
        let s = Cut::new(m, &[0, 1]).unwrap();
        let mut chain = Vec::new();
        let mut total_flow = 0.0;
        for k in 0..60 {
            let theta = (1.0 / 16.0) * 0.5f64.powi(k + 1);
            let rows: Vec<Vec<f64>> = (0..m)
                .map(|r| {
                    (0..m)
                        .map(|c| (1.0 - theta) * block.get(r, c) + theta * uniform.get(r, c))
                        .collect()
                })
                .collect();
            let w = StochasticMatrix::from_rows(&rows).unwrap();
            total_flow += cut_flow(&w, &s);
            chain.push(w);
        }
        assert!(total_flow < 0.25);
        let z0 = [0.0, 0.0, 1.0, 1.0];
        let (upper, lower) = verify_flow_bound(&chain, &s, &z0).unwrap();
        assert!(upper.pass && lower.pass);
        let mut z = z0.to_vec();
        for w in &chain {
            z = w.apply(&z);
        }
        let gap = z[2].min(z[3]) - z[0].max(z[1]);
        assert!(gap > 0.5, "gap {gap}");
    }

    #[test]
    fn averaging_matrix_contracts_to_zero_spread() {
        let a = StochasticMatrix::uniform(5);
        let case = verify_uniform_contraction(&a, &[0.0, 1.0, 0.3, 0.7, 0.5]).unwrap();
        assert!(case.pass);
        assert!(case.lhs < 1e-15);
    }

    #[test]
    fn identity_fails_contraction_premise() {
        let a = StochasticMatrix::identity(3);
        match verify_uniform_contraction(&a, &[0.0, 0.5, 1.0]) {
            Err(Error::PremiseNotMet(_)) => {}
            other => panic!("expected PremiseNotMet, got {other:?}"),
        }
    }

    #[test]
    fn cubic_spread_two_point_case() {
        let pi = StochasticVector::validate(vec![0.5, 0.5], 1e-9).unwrap();
        let case = verify_cubic_spread_bound(&pi, &[0.0, 1.0]).unwrap();
        assert!((case.lhs - 0.25).abs() < 1e-15);
        assert!((case.rhs - 1.0).abs() < 1e-15);
        assert!(case.pass);
    }

    #[test]
    fn cubic_spread_equally_spaced() {
        // x = (0, 1, ..., m-1), uniform pi: rhs = (m-1)/(m-1) = 1 and
        // lhs = Var(x)/(m-1)^2 with Var of 0..m-1 equal to (m^2-1)/12.
        let m = 6;
        let pi = StochasticVector::uniform(m);
        let x: Vec<f64> = (0..m).map(|i| i as f64).collect();
        let case = verify_cubic_spread_bound(&pi, &x).unwrap();
        let expected_lhs = (m * m - 1) as f64 / 12.0 / (((m - 1) * (m - 1)) as f64);
        assert!((case.lhs - expected_lhs).abs() < 1e-12);
        assert!((case.rhs - 1.0).abs() < 1e-12);
        assert!(case.pass);
    }

    #[test]
    fn cubic_spread_constant_is_degenerate_pass() {
        let pi = StochasticVector::uniform(3);
        let case = verify_cubic_spread_bound(&pi, &[2.0, 2.0, 2.0]).unwrap();
        assert!(case.pass && case.lhs == 0.0 && case.rhs == 0.0);
    }

    #[test]
    fn scalar_cubic_edge_cases() {
        let eq = verify_scalar_cubic(1.0, 1.0).unwrap();
        assert!(eq.pass && eq.margin == 0.0);
        let zero = verify_scalar_cubic(0.0, 2.0).unwrap();
        assert!(zero.pass && (zero.rhs - 8.0).abs() < 1e-15 && zero.lhs == 0.0);
    }

    #[test]
    fn disagreement_static_full_mixing_prefix() {
        let model = crate::models::example_feed_static();
        let w = model.sample(0, StreamKey::new(0, 0));
        let chain = vec![w];
        let mut rng = stream_rng(StreamKey::new(77, 0), 0);
        for _ in 0..50 {
            let z0: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let case = verify_disagreement_accumulation(&chain, &z0, 0.9).unwrap();
            assert!(case.pass, "{case:?}");
        }
    }

    #[test]
    fn disagreement_constant_start_is_degenerate_pass() {
        let chain = vec![StochasticMatrix::uniform(3)];
        let case = verify_disagreement_accumulation(&chain, &[1.0, 1.0, 1.0], 0.5).unwrap();
        assert!(case.pass && case.lhs == 0.0 && case.rhs == 0.0);
    }

    #[test]
    fn disagreement_premise_screened() {
        let chain = vec![StochasticMatrix::identity(3)];
        match verify_disagreement_accumulation(&chain, &[0.0, 1.0, 2.0], 0.5) {
            Err(Error::PremiseNotMet(_)) => {}
            other => panic!("expected PremiseNotMet, got {other:?}"),
        }
    }

    #[test]
    fn disagreement_invariant_under_relabeling() {
        let mut rng = stream_rng(StreamKey::new(5, 0), 0);
        let m = 4;
        let chain: Vec<StochasticMatrix> =
            (0..6).map(|_| random_stochastic_matrix(&mut rng, m)).collect();
        let z0 = [0.7, -1.2, 0.7, 2.0];
        let base = verify_disagreement_accumulation(&chain, &z0, 0.4).unwrap();
        let perm = [2usize, 0, 3, 1];
        let p = StochasticMatrix::permutation(&perm);
        // Relabeled system: z0' = P z0, A'(k) = P A(k) P^T.
        let z0p = p.apply(&z0);
        let pt_rows: Vec<Vec<f64>> =
            (0..m).map(|r| (0..m).map(|c| p.get(c, r)).collect()).collect();
        let pt = StochasticMatrix::from_rows(&pt_rows).unwrap();
        let chain_p: Vec<StochasticMatrix> = chain
            .iter()
            .map(|a| {
                let pa = StochasticMatrix::from_rows(
                    &(0..m)
                        .map(|r| (0..m).map(|c| {
                            (0..m).map(|l| p.get(r, l) * a.get(l, 0 + c)).sum::<f64>()
                        }).collect())
                        .collect::<Vec<Vec<f64>>>(),
                )
                .unwrap();
                StochasticMatrix::from_rows(
                    &(0..m)
                        .map(|r| (0..m).map(|c| {
                            (0..m).map(|l| pa.get(r, l) * pt.get(l, c)).sum::<f64>()
                        }).collect())
                        .collect::<Vec<Vec<f64>>>(),
                )
                .unwrap()
            })
            .collect();
        let relabeled = verify_disagreement_accumulation(&chain_p, &z0p, 0.4).unwrap();
        assert!((base.lhs - relabeled.lhs).abs() < 1e-12);
        assert!((base.rhs - relabeled.rhs).abs() < 1e-12);
    }

    #[test]
    fn small_sweeps_have_zero_failures() {
        for name in SWEEP_NAMES {
            let summary = sweep_by_name(name, 300, 1234).unwrap();
            assert_eq!(summary.failures, 0, "{name}: {:?}", summary.first_failure);
            assert!(summary.evaluated > 0, "{name} evaluated nothing");
        }
    }

    #[test]
    fn sweeps_are_reproducible() {
        let a = sweep_cubic_spread_bound(200, 9);
        let b = sweep_cubic_spread_bound(200, 9);
        assert_eq!(a.worst_margin, b.worst_margin);
    }

    proptest! {
        #[test]
        fn scalar_cubic_always_holds(a in 0.0..1e6f64, b in 0.0..1e6f64) {
            prop_assert!(verify_scalar_cubic(a, b).unwrap().pass);
        }

        #[test]
        fn random_cut_is_canonical_nontrivial(seed in 0u64..500, m in 2usize..10) {
            let mut rng = stream_rng(StreamKey::new(seed, 0), 0);
            let c = random_cut(&mut rng, m);
            prop_assert!(c.contains(0));
            let size = c.members().len();
            prop_assert!(size >= 1 && size < m);
        }

        #[test]
        fn sampled_matrices_are_stochastic(seed in 0u64..200, m in 1usize..8) {
            let mut rng = stream_rng(StreamKey::new(seed, 0), 0);
            let w = random_stochastic_matrix(&mut rng, m);
            for i in 0..m {
                let row: f64 = (0..m).map(|j| w.get(i, j)).sum();
                prop_assert!((row - 1.0).abs() < 1e-12);
            }
        }
    }
}
