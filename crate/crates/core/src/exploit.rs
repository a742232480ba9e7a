//! Pitcher exploitability: the intuitive baseline strategy, the comparison
//! of pitcher-specific against general strategies, and the exact binomial
//! tails behind the population-level hypothesis test.

use num_bigint::BigUint;
use serde::Serialize;
use thiserror::Error;

use crate::atbat::{BattingAction, Count, ModelKind, COUNT_ORDER};
use crate::estimation::{general_strategy_performance, GeneralPool};
use crate::ingest::PitchClassMap;
use crate::mdp::{policy_evaluation, root_value, Policy, SolverConfig, TransitionModel};

/// Absolute slack when testing `j_specific >= j_general`: both sides come
/// out of iterative solvers.
pub const WEAK_EQUALITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ExploitError {
    #[error("no results to test")]
    EmptyResults,
    #[error(transparent)]
    Solver(#[from] crate::mdp::SolverError),
    #[error(transparent)]
    Estimation(#[from] crate::estimation::EstimationError),
}

/// The hand-built baseline: swing only in a batter's count.
///
/// Swing at 1-0, 2-0, 3-0, 2-1 and 3-1; stand everywhere else. In the
/// class-bearing space the same count rule repeats across all four classes.
pub fn intuitive_policy(kind: ModelKind) -> Policy {
    let swing_counts = [(1, 0), (2, 0), (3, 0), (2, 1), (3, 1)];
    let mut policy = Policy::new(kind);
    let blocks = kind.nonterminal_states() / COUNT_ORDER.len();
    for block in 0..blocks {
        for count in Count::all() {
            let action = if swing_counts.contains(&(count.balls(), count.strikes())) {
                BattingAction::Swing
            } else {
                BattingAction::Stand
            };
            policy.set(block * COUNT_ORDER.len() + count.index(), Some(action));
        }
    }
    policy
}

/// Outcome of evaluating one pitcher's specific strategy against the
/// general strategy on held-out data.
#[derive(Debug, Clone, Serialize)]
pub struct ExploitResult {
    pub pitcher_id: String,
    pub train_season: i32,
    pub test_season: i32,
    pub j_specific: f64,
    pub j_general: f64,
    pub exploited_weak: bool,
    pub exploited_strict: bool,
    pub degree_diff: f64,
    pub degree_ratio: Option<f64>,
}

/// Labels carried through to the result row.
#[derive(Debug, Clone)]
pub struct ComparisonLabels {
    pub pitcher_id: String,
    pub train_season: i32,
    pub test_season: i32,
}

/// Evaluates the pitcher-specific strategy and the pool-averaged general
/// strategy on the same test model and decides exploitation.
pub fn compare_strategies(
    test_model: &TransitionModel,
    pi_specific: &Policy,
    general_pools: &[GeneralPool],
    test_class_counts: &[u64; 4],
    map: &PitchClassMap,
    cfg: &SolverConfig,
    labels: ComparisonLabels,
) -> Result<ExploitResult, ExploitError> {
    let evaluated = policy_evaluation(test_model, pi_specific, cfg)?;
    let j_specific = root_value(test_model.kind(), &evaluated, test_class_counts)?;
    let j_general =
        general_strategy_performance(general_pools, test_model, test_class_counts, map, cfg)?;
    Ok(build_result(labels, j_specific, j_general))
}

/// Assembles the result row from the two root values.
pub fn build_result(labels: ComparisonLabels, j_specific: f64, j_general: f64) -> ExploitResult {
    let degree_diff = j_specific - j_general;
    ExploitResult {
        pitcher_id: labels.pitcher_id,
        train_season: labels.train_season,
        test_season: labels.test_season,
        j_specific,
        j_general,
        exploited_weak: j_specific >= j_general - WEAK_EQUALITY_TOLERANCE,
        exploited_strict: degree_diff > 0.0,
        degree_diff,
        degree_ratio: (j_general != 0.0).then(|| j_specific / j_general),
    }
}

/// Exact upper binomial tail P(X > m) for X ~ Binomial(n, p).
///
/// Binomial coefficients are carried exactly as big integers through the
/// multiplicative recurrence; only the powers of p and the final sum round,
/// which keeps the result well inside 1e-12 relative error for n up to a
/// few hundred.
pub fn binomial_tail_pvalue(n: u64, m: u64, p: f64) -> f64 {
    assert!(m <= n, "successes cannot exceed trials");
    assert!((0.0..=1.0).contains(&p), "p must be a probability");
    let q = 1.0 - p;
    let mut coefficient = binomial_coefficient(n, m + 1);
    let mut tail = 0.0f64;
    for i in (m + 1)..=n {
        tail += biguint_to_f64(&coefficient) * p.powi(i as i32) * q.powi((n - i) as i32);
        if i < n {
            // C(n, i+1) = C(n, i) (n - i) / (i + 1), exactly.
            coefficient = coefficient * BigUint::from(n - i) / BigUint::from(i + 1);
        }
    }
    tail.min(1.0)
}

fn binomial_coefficient(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u32);
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

fn biguint_to_f64(value: &BigUint) -> f64 {
    let bits = value.bits();
    if bits <= 53 {
        // Fits the mantissa exactly.
        let digits = value.to_u64_digits();
        return digits.first().copied().unwrap_or(0) as f64;
    }
    let shift = bits - 53;
    let mantissa = (value >> shift).to_u64_digits()[0];
    mantissa as f64 * 2f64.powi(shift as i32)
}

/// Population-level exploitability test against p = 1/2, under both the
/// strictly-better and the at-least-as-good alternative.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub n: u64,
    pub m_weak: u64,
    pub m_strict: u64,
    pub p_value_weak: f64,
    pub p_value_strict: f64,
    pub alpha: f64,
    /// The strict tail P(X > m) is exactly 0 when m = n; these flags mark
    /// that degenerate full-success case instead of switching formulas.
    pub degenerate_weak: bool,
    pub degenerate_strict: bool,
}

pub fn run_hypothesis_test(
    results: &[ExploitResult],
    alpha: f64,
) -> Result<HypothesisReport, ExploitError> {
    if results.is_empty() {
        return Err(ExploitError::EmptyResults);
    }
    let n = results.len() as u64;
    let m_weak = results.iter().filter(|r| r.exploited_weak).count() as u64;
    let m_strict = results.iter().filter(|r| r.exploited_strict).count() as u64;
    Ok(HypothesisReport {
        n,
        m_weak,
        m_strict,
        p_value_weak: binomial_tail_pvalue(n, m_weak, 0.5),
        p_value_strict: binomial_tail_pvalue(n, m_strict, 0.5),
        alpha,
        degenerate_weak: m_weak == n,
        degenerate_strict: m_strict == n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atbat::PitchClass;

    #[test]
    fn intuitive_policy_counts() {
        let policy = intuitive_policy(ModelKind::Srlib);
        let swing_at = |b, s| policy.action(Count::new(b, s).unwrap().index()).unwrap();
        assert_eq!(swing_at(2, 0), BattingAction::Swing);
        assert_eq!(swing_at(0, 2), BattingAction::Stand);
        assert_eq!(swing_at(0, 0), BattingAction::Stand);
        assert_eq!(swing_at(3, 2), BattingAction::Stand);

        let policy = intuitive_policy(ModelKind::Crlib);
        let index = PitchClass::CurveChange.index() * 12 + Count::new(3, 1).unwrap().index();
        assert_eq!(policy.action(index), Some(BattingAction::Swing));
        // Total across all classes: 5 swings per class.
        let swings = policy
            .actions()
            .iter()
            .filter(|a| **a == Some(BattingAction::Swing))
            .count();
        assert_eq!(swings, 20);
    }

    #[test]
    fn result_flags() {
        let labels = |id: &str| ComparisonLabels {
            pitcher_id: id.to_string(),
            train_season: 2008,
            test_season: 2009,
        };
        let equal = build_result(labels("a"), 0.7, 0.7);
        assert!(equal.exploited_weak);
        assert!(!equal.exploited_strict);
        assert_eq!(equal.degree_diff, 0.0);
        assert_eq!(equal.degree_ratio, Some(1.0));

        // Matches the published Halladay 2008->2009 comparison direction.
        let losing = build_result(labels("b"), 0.604, 0.655);
        assert!(!losing.exploited_weak);
        assert!(!losing.exploited_strict);

        let winning = build_result(labels("c"), 0.766, 0.569);
        assert!(winning.exploited_strict && winning.exploited_weak);
        assert!(winning.degree_diff > 0.0);
    }

    #[test]
    fn binomial_tail_small_cases() {
        assert!((binomial_tail_pvalue(2, 0, 0.5) - 0.75).abs() < 1e-15);
        assert_eq!(binomial_tail_pvalue(10, 10, 0.3), 0.0);
        // P(X > 2) for n = 4, p = 1/2: (4 + 1) / 16.
        assert!((binomial_tail_pvalue(4, 2, 0.5) - 0.3125).abs() < 1e-15);
        // Degenerate probabilities.
        assert_eq!(binomial_tail_pvalue(5, 2, 0.0), 0.0);
        assert_eq!(binomial_tail_pvalue(5, 2, 1.0), 1.0);
    }

    #[test]
    fn binomial_tail_strictly_decreasing_in_m() {
        for n in [3u64, 17, 50] {
            for p in [0.25, 0.5, 0.75] {
                let mut previous = binomial_tail_pvalue(n, 0, p);
                for m in 1..=n {
                    let current = binomial_tail_pvalue(n, m, p);
                    // Strict except where the tail saturates at 1 beyond
                    // float resolution.
                    if previous < 1.0 - 1e-12 {
                        assert!(current < previous, "tail not decreasing at n={n} m={m}");
                    } else {
                        assert!(current <= previous);
                    }
                    previous = current;
                }
            }
        }
    }

    #[test]
    fn binomial_tail_complements_the_lower_sum() {
        for n in [12u64, 60] {
            for p in [0.25, 0.5, 0.75] {
                for m in 0..=n {
                    let tail = binomial_tail_pvalue(n, m, p);
                    let mut lower = 0.0;
                    for i in 0..=m {
                        lower += biguint_to_f64(&binomial_coefficient(n, i))
                            * p.powi(i as i32)
                            * (1.0 - p).powi((n - i) as i32);
                    }
                    assert!((tail + lower - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn hypothesis_report_counts_and_flags() {
        let labels = |i: usize| ComparisonLabels {
            pitcher_id: format!("p{i}"),
            train_season: 2008,
            test_season: 2009,
        };
        let results: Vec<ExploitResult> = (0..10).map(|i| build_result(labels(i), 1.0, 0.5)).collect();
        let report = run_hypothesis_test(&results, 0.05).unwrap();
        assert_eq!((report.n, report.m_strict, report.m_weak), (10, 10, 10));
        assert_eq!(report.p_value_strict, 0.0);
        assert!(report.degenerate_strict && report.degenerate_weak);

        let mixed: Vec<ExploitResult> = (0..4)
            .map(|i| {
                if i < 2 {
                    build_result(labels(i), 1.0, 0.5)
                } else {
                    build_result(labels(i), 0.4, 0.5)
                }
            })
            .collect();
        let report = run_hypothesis_test(&mixed, 0.05).unwrap();
        assert_eq!((report.m_weak, report.m_strict), (2, 2));
        assert!((report.p_value_weak - 0.3125).abs() < 1e-15);
        assert!(!report.degenerate_weak);

        assert!(matches!(
            run_hypothesis_test(&[], 0.05),
            Err(ExploitError::EmptyResults)
        ));
    }

    #[test]
    fn strict_implies_weak() {
        let labels = ComparisonLabels {
            pitcher_id: "p".into(),
            train_season: 2008,
            test_season: 2010,
        };
        for (js, jg) in [(0.5, 0.5), (0.50000001, 0.5), (0.4, 0.5), (0.9, 0.1)] {
            let r = build_result(labels.clone(), js, jg);
            if r.exploited_strict {
                assert!(r.exploited_weak);
                assert!(r.degree_diff > 0.0);
            }
            if r.degree_diff > 0.0 {
                assert!(r.exploited_strict);
            }
        }
    }
}
