//! Feedback-grade and steady-state checkers.
//!
//! The three feedback grades quantify over all times, so every check here is
//! horizon-bounded (default K = 64) and the report states the horizon. For
//! finite-support models the expectations are exact atom sums; otherwise a
//! Monte Carlo fallback runs, which can refute an almost-sure property with a
//! witness but can never confirm one — those passes report `Undetermined`.

use crate::error::{Error, Result};
use crate::linalg::{StochasticMatrix, StochasticVector, TOL_ROW};
use crate::models::ChainModel;
use crate::rng::StreamKey;
use serde::Serialize;

pub const DEFAULT_HORIZON: usize = 64;
const MC_SAMPLES: u64 = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Undetermined,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    MonteCarlo,
}

/// A counterexample location: time index and entry indices (0-based).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Witness {
    pub k: u64,
    pub i: usize,
    pub j: usize,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PropertyReport {
    pub property: String,
    pub verdict: Verdict,
    /// Best constant found (the tight minimum ratio), when meaningful.
    pub gamma_star: Option<f64>,
    pub witness: Option<Witness>,
    pub method: Method,
    pub horizon: usize,
}

impl PropertyReport {
    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }
}

fn atoms_for_all(model: &ChainModel, horizon: usize) -> Option<Vec<crate::models::FiniteSupportDistribution>> {
    (0..horizon as u64).map(|k| model.atoms_at(k)).collect()
}

/// Strong feedback: diagonal entries at least `gamma` almost surely.
/// Exact over atoms; Monte Carlo passes report `Undetermined` because a
/// sample cannot certify an almost-sure bound.
pub fn check_strong_feedback(model: &ChainModel, horizon: usize, gamma: f64) -> PropertyReport {
    assert!(gamma > 0.0, "feedback constant must be positive");
    let m = model.dim();
    let mut best = f64::INFINITY;
    if let Some(atom_seq) = atoms_for_all(model, horizon) {
        for (k, dist) in atom_seq.iter().enumerate() {
            for (w, p) in dist.atoms() {
                if *p == 0.0 {
                    continue;
                }
                for i in 0..m {
                    let d = w.get(i, i);
                    best = best.min(d);
                    if d < gamma {
                        return PropertyReport {
                            property: "strong_feedback".into(),
                            verdict: Verdict::Fails,
                            gamma_star: Some(best),
                            witness: Some(Witness {
                                k: k as u64,
                                i,
                                j: i,
                                lhs: d,
                                rhs: gamma,
                            }),
                            method: Method::Exact,
                            horizon,
                        };
                    }
                }
            }
        }
        PropertyReport {
            property: "strong_feedback".into(),
            verdict: Verdict::Holds,
            gamma_star: Some(best),
            witness: None,
            method: Method::Exact,
            horizon,
        }
    } else {
        for k in 0..horizon as u64 {
            for trial in 0..MC_SAMPLES {
                let w = model.sample(k, StreamKey::new(0x5eed, trial));
                for i in 0..m {
                    let d = w.get(i, i);
                    best = best.min(d);
                    if d < gamma {
                        return PropertyReport {
                            property: "strong_feedback".into(),
                            verdict: Verdict::Fails,
                            gamma_star: Some(best),
                            witness: Some(Witness {
                                k,
                                i,
                                j: i,
                                lhs: d,
                                rhs: gamma,
                            }),
                            method: Method::MonteCarlo,
                            horizon,
                        };
                    }
                }
            }
        }
        PropertyReport {
            property: "strong_feedback".into(),
            verdict: Verdict::Undetermined,
            gamma_star: Some(best),
            witness: None,
            method: Method::MonteCarlo,
            horizon,
        }
    }
}

/// Shared driver for the two expectation-ratio feedback grades.
/// `num(dist, i, j)` and `den(dist, i, j)` return the two sides before the
/// constant; the inequality checked is `num >= gamma * den`, with `den = 0`
/// treated as vacuously satisfied.
fn ratio_check<F, G>(
    model: &ChainModel,
    horizon: usize,
    gamma: f64,
    name: &str,
    num: F,
    den: G,
) -> PropertyReport
where
    F: Fn(&crate::models::FiniteSupportDistribution, usize, usize) -> f64,
    G: Fn(&crate::models::FiniteSupportDistribution, usize, usize) -> f64,
{
    assert!(gamma > 0.0, "feedback constant must be positive");
    let m = model.dim();
    let atom_seq = match atoms_for_all(model, horizon) {
        Some(a) => a,
        None => {
            return PropertyReport {
                property: name.into(),
                verdict: Verdict::Undetermined,
                gamma_star: None,
                witness: None,
                method: Method::MonteCarlo,
                horizon,
            }
        }
    };
    let mut gamma_star = f64::INFINITY;
    let mut worst: Option<Witness> = None;
    for (k, dist) in atom_seq.iter().enumerate() {
        for i in 0..m {
            for j in 0..m {
                if i == j {
                    continue;
                }
                let d = den(dist, i, j);
                if d <= 0.0 {
                    continue; // vacuous: both sides zero
                }
                let n = num(dist, i, j);
                let ratio = n / d;
                if ratio < gamma_star {
                    gamma_star = ratio;
                    worst = Some(Witness {
                        k: k as u64,
                        i,
                        j,
                        lhs: n,
                        rhs: gamma * d,
                    });
                }
            }
        }
    }
    if gamma_star == f64::INFINITY {
        // Every pair vacuous at every step (e.g. the identity chain).
        return PropertyReport {
            property: name.into(),
            verdict: Verdict::Holds,
            gamma_star: None,
            witness: None,
            method: Method::Exact,
            horizon,
        };
    }
    let holds = gamma_star >= gamma * (1.0 - 1e-12);
    PropertyReport {
        property: name.into(),
        verdict: if holds { Verdict::Holds } else { Verdict::Fails },
        gamma_star: Some(gamma_star),
        witness: if holds { None } else { worst },
        method: Method::Exact,
        horizon,
    }
}

/// Feedback: `E[W_ii W_ij] >= gamma E[W_ij]` for all k <= K and i != j.
pub fn check_feedback(model: &ChainModel, horizon: usize, gamma: f64) -> PropertyReport {
    ratio_check(
        model,
        horizon,
        gamma,
        "feedback",
        |dist, i, j| {
            dist.atoms()
                .iter()
                .map(|(w, p)| p * w.get(i, i) * w.get(i, j))
                .sum()
        },
        |dist, i, j| dist.atoms().iter().map(|(w, p)| p * w.get(i, j)).sum(),
    )
}

/// Weak feedback: `E[(W^i)^T W^j] >= gamma (E[W_ij] + E[W_ji])`.
/// Also reports the tight constant: the minimum ratio over all non-vacuous
/// `(k, i, j)`.
pub fn check_weak_feedback(model: &ChainModel, horizon: usize, gamma: f64) -> PropertyReport {
    let m = model.dim();
    ratio_check(
        model,
        horizon,
        gamma,
        "weak_feedback",
        move |dist, i, j| {
            dist.atoms()
                .iter()
                .map(|(w, p)| {
                    let dot: f64 = (0..m).map(|l| w.get(l, i) * w.get(l, j)).sum();
                    p * dot
                })
                .sum()
        },
        |dist, i, j| {
            dist.atoms()
                .iter()
                .map(|(w, p)| p * (w.get(i, j) + w.get(j, i)))
                .sum()
        },
    )
}

/// Guaranteed strong-feedback constant of the expected chain when the model
/// itself has the feedback property with constant `gamma`: `gamma / m`.
pub fn expected_strong_feedback_constant(gamma_feedback: f64, m: usize) -> f64 {
    assert!(gamma_feedback > 0.0 && gamma_feedback <= 1.0 && m >= 2);
    gamma_feedback / m as f64
}

/// Almost-sure invertibility of every `W(k)`: exact over atoms (determinant
/// of every atom), Monte Carlo refutation otherwise.
pub fn check_invertibility(model: &ChainModel, horizon: usize) -> PropertyReport {
    const DET_TOL: f64 = 1e-12;
    if let Some(atom_seq) = atoms_for_all(model, horizon) {
        for (k, dist) in atom_seq.iter().enumerate() {
            for (w, p) in dist.atoms() {
                if *p == 0.0 {
                    continue;
                }
                let det = w.determinant();
                if det.abs() <= DET_TOL {
                    return PropertyReport {
                        property: "invertibility".into(),
                        verdict: Verdict::Fails,
                        gamma_star: Some(det.abs()),
                        witness: Some(Witness {
                            k: k as u64,
                            i: 0,
                            j: 0,
                            lhs: det,
                            rhs: 0.0,
                        }),
                        method: Method::Exact,
                        horizon,
                    };
                }
            }
        }
        return PropertyReport {
            property: "invertibility".into(),
            verdict: Verdict::Holds,
            gamma_star: None,
            witness: None,
            method: Method::Exact,
            horizon,
        };
    }
    for k in 0..horizon as u64 {
        for trial in 0..MC_SAMPLES / 10 {
            let w = model.sample(k, StreamKey::new(0xdead, trial));
            let det = w.determinant();
            if det.abs() <= DET_TOL {
                return PropertyReport {
                    property: "invertibility".into(),
                    verdict: Verdict::Fails,
                    gamma_star: Some(det.abs()),
                    witness: Some(Witness {
                        k,
                        i: 0,
                        j: 0,
                        lhs: det,
                        rhs: 0.0,
                    }),
                    method: Method::MonteCarlo,
                    horizon,
                };
            }
        }
    }
    PropertyReport {
        property: "invertibility".into(),
        verdict: Verdict::Undetermined,
        gamma_star: None,
        witness: None,
        method: Method::MonteCarlo,
        horizon,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SteadyState {
    pub pi: StochasticVector,
    /// True when every entry is strictly positive (needed by the ergodicity
    /// equivalence results).
    pub strictly_positive: bool,
    /// Worst residual `max_k ||pi^T E[W(k)] - pi^T||_inf` over the horizon.
    pub residual: f64,
    pub horizon: usize,
}

fn left_residual(pi: &[f64], e: &StochasticMatrix) -> f64 {
    let m = e.dim();
    let mut worst = 0.0f64;
    for j in 0..m {
        let mut acc = 0.0;
        for i in 0..m {
            acc += pi[i] * e.get(i, j);
        }
        worst = worst.max((acc - pi[j]).abs());
    }
    worst
}

/// Finds one stochastic `pi` with `pi^T E[W(k)] = pi^T` for all `k <= K`.
///
/// The uniform vector is tried first (it certifies every doubly-stochastic-
/// in-expectation model and is strictly positive); otherwise the left fixed
/// vector of `E[W(0)]` is solved for and verified against the rest of the
/// horizon.
pub fn find_common_steady_state(
    model: &ChainModel,
    horizon: usize,
    tol: f64,
) -> Result<SteadyState> {
    assert!(horizon >= 1);
    let m = model.dim();
    let expected: Vec<StochasticMatrix> = (0..horizon as u64).map(|k| model.expected(k)).collect();

    let check_all = |pi: &[f64]| -> Option<f64> {
        let mut worst = 0.0f64;
        for e in &expected {
            worst = worst.max(left_residual(pi, e));
            if worst > tol {
                return None;
            }
        }
        Some(worst)
    };

    let uniform = vec![1.0 / m as f64; m];
    if let Some(residual) = check_all(&uniform) {
        return Ok(SteadyState {
            pi: StochasticVector::validate(uniform, TOL_ROW)?,
            strictly_positive: true,
            residual,
            horizon,
        });
    }

    // Least-squares solve of (E[W(0)]^T - I) pi = 0 with the normalization
    // row sum(pi) = 1, via the normal equations. m is small.
    let e0 = &expected[0];
    let rows = m + 1;
    let mut a = vec![0.0; rows * m];
    for j in 0..m {
        for i in 0..m {
            a[j * m + i] = e0.get(i, j) - if i == j { 1.0 } else { 0.0 };
        }
    }
    for i in 0..m {
        a[m * m + i] = 1.0;
    }
    let b: Vec<f64> = (0..rows).map(|r| if r == m { 1.0 } else { 0.0 }).collect();
    let mut ata = vec![0.0; m * m];
    let mut atb = vec![0.0; m];
    for i in 0..m {
        for j in 0..m {
            ata[i * m + j] = (0..rows).map(|r| a[r * m + i] * a[r * m + j]).sum();
        }
        atb[i] = (0..rows).map(|r| a[r * m + i] * b[r]).sum();
    }
    let pi_raw = crate::linalg::solve_linear(&mut ata, &mut atb)
        .map_err(|_| Error::NoCommonSteadyState)?;
    let pi = StochasticVector::validate(
        pi_raw.iter().map(|&x| x.max(0.0)).collect(),
        1e-6,
    )
    .map_err(|_| Error::NoCommonSteadyState)?;
    match check_all(pi.entries()) {
        Some(residual) => Ok(SteadyState {
            strictly_positive: pi.is_strictly_positive(),
            pi,
            residual,
            horizon,
        }),
        None => Err(Error::NoCommonSteadyState),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{self, ChainKind, ChainModel, TailRule};

    #[test]
    fn gossip_has_strong_feedback_half() {
        let model = models::gossip_complete(4);
        let report = check_strong_feedback(&model, 16, 0.5);
        assert_eq!(report.verdict, Verdict::Holds);
        assert_eq!(report.gamma_star, Some(0.5));
    }

    #[test]
    fn zero_diagonal_chain_fails_strong_feedback_with_witness() {
        let model = models::example_feed_static();
        let report = check_strong_feedback(&model, 8, 1e-6);
        assert_eq!(report.verdict, Verdict::Fails);
        let w = report.witness.unwrap();
        assert_eq!(w.k, 0);
        assert_eq!(w.lhs, 0.0);
    }

    #[test]
    fn identity_chain_strong_feedback_gamma_one() {
        let model = ChainModel::new(
            3,
            ChainKind::Deterministic {
                schedule: vec![StochasticMatrix::identity(3)],
                tail: TailRule::RepeatLast,
            },
            "",
        )
        .unwrap();
        assert_eq!(check_strong_feedback(&model, 8, 1.0).verdict, Verdict::Holds);
        // Identity chain: every off-diagonal expectation is zero, so the
        // ratio grades hold vacuously.
        assert_eq!(check_feedback(&model, 8, 0.9).verdict, Verdict::Holds);
        assert_eq!(check_weak_feedback(&model, 8, 0.9).verdict, Verdict::Holds);
    }

    #[test]
    fn zero_diagonal_chain_fails_feedback_but_holds_weak_quarter() {
        let model = models::example_feed_static();
        let fb = check_feedback(&model, 8, 0.1);
        assert_eq!(fb.verdict, Verdict::Fails);
        assert!(fb.witness.is_some());
        let weak = check_weak_feedback(&model, 8, 0.25);
        assert_eq!(weak.verdict, Verdict::Holds);
        assert!((weak.gamma_star.unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn weak_feedback_constant_is_tight() {
        let model = models::example_feed_static();
        let gamma_star = check_weak_feedback(&model, 8, 0.25).gamma_star.unwrap();
        let bumped = check_weak_feedback(&model, 8, gamma_star * (1.0 + 1e-9));
        assert_eq!(bumped.verdict, Verdict::Fails);
    }

    #[test]
    fn gossip_feedback_holds_half() {
        // Atom-wise W_ii W_ij = 1/4 = (1/2) W_ij on active pairs.
        let model = models::gossip_complete(4);
        let report = check_feedback(&model, 16, 0.5);
        assert_eq!(report.verdict, Verdict::Holds);
        assert!((report.gamma_star.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn feedback_implies_weak_feedback_on_catalog() {
        for name in ["gossip_complete", "example_feed_static", "example_permutation"] {
            let model = models::canned(name).unwrap();
            let fb = check_feedback(&model, 16, 1e-3);
            let weak = check_weak_feedback(&model, 16, 1e-3);
            if fb.verdict == Verdict::Holds {
                assert_eq!(weak.verdict, Verdict::Holds, "{name}");
            }
        }
    }

    #[test]
    fn strong_feedback_implies_feedback_for_positive_diagonal_iid() {
        // Lazy averaging atoms keep diagonals at 1/2 or above.
        let dist = crate::models::FiniteSupportDistribution::new(vec![
            (StochasticMatrix::pair_average(3, 0, 1, 0.5), 0.5),
            (StochasticMatrix::identity(3), 0.5),
        ])
        .unwrap();
        let model = ChainModel::new(3, ChainKind::IidFiniteSupport { dist }, "").unwrap();
        assert_eq!(check_strong_feedback(&model, 8, 0.5).verdict, Verdict::Holds);
        let fb = check_feedback(&model, 8, 1e-6);
        assert_eq!(fb.verdict, Verdict::Holds);
        // Tight constant: min over active pairs of E[W_ii W_ij] / E[W_ij].
        assert!((fb.gamma_star.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn expected_constant_formula() {
        assert!((expected_strong_feedback_constant(0.5, 8) - 1.0 / 16.0).abs() < 1e-15);
        assert!((expected_strong_feedback_constant(1.0, 2) - 0.5).abs() < 1e-15);
        // Cross-validation on gossip m=4: expected diagonals stay above gamma/m.
        let model = models::gossip_complete(4);
        let gamma = check_feedback(&model, 8, 1e-9).gamma_star.unwrap();
        let bound = expected_strong_feedback_constant(gamma.min(1.0), 4);
        for k in 0..8 {
            let e = model.expected(k);
            for i in 0..4 {
                assert!(e.get(i, i) >= bound - 1e-12);
            }
        }
    }

    #[test]
    fn invertibility_verdicts() {
        assert_eq!(
            check_invertibility(&models::example_permutation(3), 8).verdict,
            Verdict::Holds
        );
        let gossip = check_invertibility(&models::gossip_complete(3), 8);
        assert_eq!(gossip.verdict, Verdict::Fails);
    }

    #[test]
    fn doubly_stochastic_steady_state_is_uniform() {
        let model = models::gossip_complete(5);
        let ss = find_common_steady_state(&model, 32, 1e-10).unwrap();
        assert!(ss.strictly_positive);
        for &p in ss.pi.entries() {
            assert!((p - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn iid_left_fixed_vector_is_found() {
        // Single-atom deterministic chain with a non-uniform fixed vector.
        let w = StochasticMatrix::from_rows(&[vec![0.9, 0.1], vec![0.3, 0.7]]).unwrap();
        // pi solves pi = pi W: pi = (0.75, 0.25).
        let model = ChainModel::new(
            2,
            ChainKind::Deterministic {
                schedule: vec![w],
                tail: TailRule::RepeatLast,
            },
            "",
        )
        .unwrap();
        let ss = find_common_steady_state(&model, 16, 1e-9).unwrap();
        assert!((ss.pi.get(0) - 0.75).abs() < 1e-9);
        assert!((ss.pi.get(1) - 0.25).abs() < 1e-9);
        assert!(ss.residual <= 1e-9);
    }

    #[test]
    fn alternating_fixed_vectors_have_no_common_steady_state() {
        let w0 = StochasticMatrix::from_rows(&[vec![0.9, 0.1], vec![0.3, 0.7]]).unwrap();
        let w1 = StochasticMatrix::from_rows(&[vec![0.6, 0.4], vec![0.2, 0.8]]).unwrap();
        let model = ChainModel::new(
            2,
            ChainKind::Deterministic {
                schedule: vec![w0, w1],
                tail: TailRule::RepeatLast,
            },
            "",
        )
        .unwrap();
        assert!(matches!(
            find_common_steady_state(&model, 8, 1e-9),
            Err(Error::NoCommonSteadyState)
        ));
    }
}
