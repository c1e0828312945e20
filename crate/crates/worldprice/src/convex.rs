//! Constrained convex common-weight operator.
//!
//! Finds the campus weight vector closest to a baseline subject to the simplex
//! constraints and the cost-preservation hyperplane Σ_j w_j s_j = C, where s is
//! the campus exposure vector. The equality-only projection has a closed form
//! through a 2×2 system; nonnegativity is enforced by an active-set loop that
//! fixes negative components to zero and re-projects on the free indices.
//!
//! When C lies outside [min s, max s] the exact problem is infeasible; two
//! fallbacks are provided: a penalized-slack relaxation solved over the
//! simplex with an increasing penalty, and a boundary projection that clips C
//! to the exposure hull.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{OperatorTag, WorldPriceVector};
use crate::panel::PricePanel;

/// How the cost constraint was satisfied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Feasibility {
    /// Exact solution of the constrained projection.
    FeasibleExact,
    /// Penalized-slack relaxation; carries the final penalty strength and the
    /// slack tolerance it was asked to meet.
    SlackFallback { rho_penalty: f64, epsilon_tol: f64 },
    /// Cost target clipped to the exposure hull before solving.
    BoundaryProjected { cost_clipped: f64 },
}

/// Solution of the common-weight problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvexSolution {
    /// Unified campus weights; nonnegative, summing to one.
    pub weights: Vec<f64>,
    /// Baseline (anchor) weights the solution stays close to.
    pub baseline: Vec<f64>,
    /// Campus indices fixed at zero by the active-set loop.
    pub active_set: Vec<usize>,
    /// Σ_j w_j s_j − C against the original cost target.
    pub cost_slack: f64,
    pub feasibility: Feasibility,
    /// Active-set loop passes.
    pub iterations: usize,
}

impl ConvexSolution {
    pub fn operator_tag(&self) -> OperatorTag {
        match self.feasibility {
            Feasibility::FeasibleExact => OperatorTag::ConvexWeights,
            Feasibility::SlackFallback { .. } => OperatorTag::ConvexSlack,
            Feasibility::BoundaryProjected { .. } => OperatorTag::ConvexBoundary,
        }
    }
}

/// Position of the cost target relative to the exposure hull.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FeasibilityStatus {
    Feasible,
    /// C below min exposure; gap is the distance to the lower bound.
    InfeasibleLow { gap: f64 },
    /// C above max exposure; gap is the distance to the upper bound.
    InfeasibleHigh { gap: f64 },
}

/// The constraint set is nonempty iff C ∈ [min_j s_j, max_j s_j].
pub fn feasibility_check(exposure: &[f64], cost: f64) -> FeasibilityStatus {
    let min = exposure.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = exposure.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if cost < min {
        FeasibilityStatus::InfeasibleLow { gap: min - cost }
    } else if cost > max {
        FeasibilityStatus::InfeasibleHigh { gap: cost - max }
    } else {
        FeasibilityStatus::Feasible
    }
}

/// Relative spread of the (unit-normalized) exposure row below which the cost
/// constraint is treated as collinear with the sum constraint.
const COLLINEAR_SPREAD: f64 = 1e-9;

/// Project `baseline` onto {w : Σ w = 1, Σ w_j s_j = cost} in Euclidean norm.
///
/// Centering the exposure row (s̃ = s − s̄) makes the two constraint normals
/// orthogonal (1ᵀs̃ = 0), so the projection decouples into two exactly
/// conditioned one-dimensional steps:
///   w = w⁰ − ((Σw⁰ − 1)/n)·1 − ((s̃ᵀw⁰ − (C − s̄))/‖s̃‖²)·s̃.
/// Degeneracy is then simply ‖s̃‖ ≈ 0: the cost constraint is collinear with
/// the sum constraint. If the two agree the cost row is redundant and the
/// sum-only projection is returned; otherwise no solution exists.
pub fn affine_projection(baseline: &[f64], exposure: &[f64], cost: f64) -> Result<Vec<f64>> {
    let n = baseline.len();
    assert_eq!(n, exposure.len(), "baseline/exposure length mismatch");
    assert!(n > 0, "empty weight vector");

    // The constraint row {sᵀw = C} can be rescaled freely without moving the
    // affine set; normalizing by max|s| makes the collinearity threshold
    // about genuine parallelism rather than units.
    let sigma = exposure.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if sigma > 0.0 && sigma != 1.0 {
        let scaled: Vec<f64> = exposure.iter().map(|s| s / sigma).collect();
        return affine_projection(baseline, &scaled, cost / sigma);
    }

    let nf = n as f64;
    let s_mean: f64 = exposure.iter().sum::<f64>() / nf;
    let centered: Vec<f64> = exposure.iter().map(|s| s - s_mean).collect();
    let var: f64 = centered.iter().map(|c| c * c).sum();

    let r1: f64 = baseline.iter().sum::<f64>() - 1.0;
    let shift = r1 / nf;

    if var > nf * COLLINEAR_SPREAD * COLLINEAR_SPREAD {
        let r2 = dot(&centered, baseline) - (cost - s_mean);
        let coeff = r2 / var;
        let w = baseline
            .iter()
            .zip(&centered)
            .map(|(w0, c)| w0 - shift - coeff * c)
            .collect();
        return Ok(w);
    }

    // Exposure ≈ c·1: the constraints are parallel. Consistent (up to the
    // collinearity itself) means the cost row is redundant.
    let s_min = exposure.iter().cloned().fold(f64::INFINITY, f64::min);
    let s_max = exposure.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scale = s_max.abs().max(1.0).max(cost.abs());
    if (cost - s_mean).abs() <= 1e-9 * scale + (s_max - s_min) {
        return Ok(baseline.iter().map(|w0| w0 - shift).collect());
    }
    Err(Error::DegenerateExposure)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Unique minimizer of ‖w − w⁰‖² over the simplex intersected with the cost
/// hyperplane, via the active-set loop: fix negative components to zero and
/// re-project the free indices. Terminates in at most J passes.
pub fn active_set_project(
    baseline: &[f64],
    exposure: &[f64],
    cost: f64,
) -> Result<ConvexSolution> {
    let n = baseline.len();
    assert_eq!(n, exposure.len(), "baseline/exposure length mismatch");
    match feasibility_check(exposure, cost) {
        FeasibilityStatus::Feasible => {}
        _ => {
            let min = exposure.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = exposure.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            return Err(Error::InfeasibleCost { cost, min, max });
        }
    }

    let mut free: Vec<usize> = (0..n).collect();
    let mut fixed: Vec<usize> = Vec::new();
    let mut weights = vec![0.0; n];
    let mut iterations = 0usize;

    loop {
        iterations += 1;
        if iterations > n {
            return Err(Error::Numerical(
                "active-set loop exceeded its iteration bound".into(),
            ));
        }
        let w_free = if free.len() == 1 {
            // Single free campus: the simplex constraint pins its weight to 1;
            // the cost constraint must then hold on its own.
            let j = free[0];
            let scale = exposure[j].abs().max(cost.abs()).max(1.0);
            if (exposure[j] - cost).abs() > 1e-9 * scale {
                return Err(Error::Numerical(
                    "active-set loop reduced to a single campus that cannot meet the cost target"
                        .into(),
                ));
            }
            vec![1.0]
        } else {
            let w0: Vec<f64> = free.iter().map(|&j| baseline[j]).collect();
            let s: Vec<f64> = free.iter().map(|&j| exposure[j]).collect();
            affine_projection(&w0, &s, cost)?
        };

        let negatives: Vec<usize> = w_free
            .iter()
            .enumerate()
            .filter(|(_, w)| **w < 0.0)
            .map(|(k, _)| k)
            .collect();
        if negatives.is_empty() {
            for (k, &j) in free.iter().enumerate() {
                weights[j] = w_free[k];
            }
            break;
        }
        // Move negative components to the fixed set (reverse order keeps the
        // remove indices valid).
        for &k in negatives.iter().rev() {
            fixed.push(free.remove(k));
        }
        if free.is_empty() {
            return Err(Error::Numerical(
                "active-set loop fixed every campus to zero".into(),
            ));
        }
    }

    fixed.sort_unstable();
    let cost_slack = dot(exposure, &weights) - cost;
    Ok(ConvexSolution {
        weights,
        baseline: baseline.to_vec(),
        active_set: fixed,
        cost_slack,
        feasibility: Feasibility::FeasibleExact,
        iterations,
    })
}

/// Minimize ½‖w − u‖² + (ρ/2)(sᵀw − C)² over the simplex.
///
/// Active-set loop on the KKT system of the penalized objective; the inner
/// equality solve uses the Sherman–Morrison form of (I + ρ s sᵀ)⁻¹. Returns
/// the weights and the number of passes.
fn penalized_simplex_min(
    baseline: &[f64],
    exposure: &[f64],
    cost: f64,
    rho: f64,
) -> Result<(Vec<f64>, usize)> {
    let n = baseline.len();
    let mut free: Vec<usize> = (0..n).collect();
    let mut weights = vec![0.0; n];
    let mut passes = 0usize;
    let max_passes = 3 * n + 3;
    let mut visited: Vec<Vec<usize>> = Vec::new();

    loop {
        passes += 1;
        if passes > max_passes {
            return Err(Error::Numerical(
                "penalized active-set loop failed to settle".into(),
            ));
        }
        visited.push(free.clone());
        let s: Vec<f64> = free.iter().map(|&j| exposure[j]).collect();
        let u: Vec<f64> = free.iter().map(|&j| baseline[j]).collect();
        let k = free.len() as f64;
        let s_sum: f64 = s.iter().sum();
        let u_sum: f64 = u.iter().sum();
        // Stationarity on the free set gives w = u − (ρt)s − μ1 with slack
        // t = sᵀw − C; eliminating w against both constraints yields a 2×2
        // system solved for ρt directly, which stays O(1) as ρ → ∞ (the
        // naive (I+ρssᵀ)⁻¹ form cancels catastrophically at large ρ).
        let variance = dot(&s, &s) - s_sum * s_sum / k;
        let excess = dot(&s, &u) - cost - s_sum * (u_sum - 1.0) / k;
        let denom = 1.0 / rho + variance;
        if !(denom > 0.0) {
            return Err(Error::Numerical(
                "penalized KKT system lost positive definiteness".into(),
            ));
        }
        let rho_t = excess / denom;
        let mu = (u_sum - 1.0 - rho_t * s_sum) / k;
        let w_free: Vec<f64> = u
            .iter()
            .zip(&s)
            .map(|(ui, si)| ui - rho_t * si - mu)
            .collect();

        let negatives: Vec<usize> = w_free
            .iter()
            .enumerate()
            .filter(|(_, w)| **w < 0.0)
            .map(|(k, _)| k)
            .collect();
        if !negatives.is_empty() {
            for &k in negatives.iter().rev() {
                free.remove(k);
            }
            if free.is_empty() {
                return Err(Error::Numerical(
                    "penalized loop fixed every campus to zero".into(),
                ));
            }
            continue;
        }

        for w in weights.iter_mut() {
            *w = 0.0;
        }
        for (k, &j) in free.iter().enumerate() {
            weights[j] = w_free[k];
        }

        // Dual feasibility for the zero-fixed coordinates: the bound
        // multiplier g_j + μ must be nonnegative, else j re-enters.
        let s_abs_max = exposure.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        let scale = 1.0
            + baseline.iter().fold(0.0f64, |m, b| m.max(b.abs()))
            + s_abs_max * rho_t.abs()
            + mu.abs();
        let tol = 1e-10 * scale;
        let mut worst = (f64::INFINITY, usize::MAX);
        for j in 0..n {
            if free.contains(&j) {
                continue;
            }
            let lambda = -baseline[j] + rho_t * exposure[j] + mu;
            if lambda < worst.0 {
                worst = (lambda, j);
            }
        }
        if worst.1 != usize::MAX && worst.0 < -tol {
            let mut candidate = free.clone();
            candidate.push(worst.1);
            candidate.sort_unstable();
            // A repeated free set means the fix/free pair is cycling on
            // borderline duals; the current iterate already satisfies the
            // KKT system to working precision.
            if !visited.contains(&candidate) {
                free = candidate;
                continue;
            }
        }
        return Ok((weights, passes));
    }
}

/// Penalty cap multiplier over the starting ρ = 1 / (max exposure)².
const RHO_CAP_FACTOR: f64 = 1e12;

/// Penalized-slack fallback for cost targets outside (or near the edge of)
/// the exposure hull.
///
/// ρ starts at 1/(max exposure)² and grows geometrically (×10) until the cost
/// slack is within `epsilon_tol`, then a bisection on log ρ finds the smallest
/// penalty meeting the tolerance. If the cap is reached and the cost target
/// lies outside the hull by more than `epsilon_tol`, the tolerance is
/// unreachable: the limiting slack equals the hull gap and is reported in the
/// error.
pub fn slack_penalized_weights(
    baseline: &[f64],
    exposure: &[f64],
    cost: f64,
    epsilon_tol: f64,
) -> Result<ConvexSolution> {
    assert!(epsilon_tol > 0.0, "epsilon_tol must be positive");
    let n = baseline.len();
    assert_eq!(n, exposure.len(), "baseline/exposure length mismatch");

    let s_abs_max = exposure.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let rho_min = if s_abs_max > 0.0 {
        1.0 / (s_abs_max * s_abs_max)
    } else {
        1.0
    };

    // Baseline already within tolerance: no adjustment needed.
    let baseline_slack = dot(exposure, baseline) - cost;
    if baseline_slack.abs() <= epsilon_tol {
        return Ok(ConvexSolution {
            weights: baseline.to_vec(),
            baseline: baseline.to_vec(),
            active_set: Vec::new(),
            cost_slack: baseline_slack,
            feasibility: Feasibility::SlackFallback {
                rho_penalty: rho_min,
                epsilon_tol,
            },
            iterations: 0,
        });
    }

    let rho_cap = rho_min * RHO_CAP_FACTOR;
    let slack_at = |rho: f64| -> Result<(Vec<f64>, usize, f64)> {
        let (w, passes) = penalized_simplex_min(baseline, exposure, cost, rho)?;
        let slack = dot(exposure, &w) - cost;
        Ok((w, passes, slack))
    };

    let mut rho = rho_min;
    let mut prev_rho = rho_min;
    let (mut weights, mut passes, mut slack) = slack_at(rho)?;
    while slack.abs() > epsilon_tol {
        if rho >= rho_cap {
            let status = feasibility_check(exposure, cost);
            let hull_gap = match status {
                FeasibilityStatus::Feasible => 0.0,
                FeasibilityStatus::InfeasibleLow { gap } => gap,
                FeasibilityStatus::InfeasibleHigh { gap } => -gap,
            };
            if hull_gap.abs() > epsilon_tol {
                return Err(Error::ToleranceUnreachable {
                    limiting_slack: hull_gap,
                    tolerance: epsilon_tol,
                });
            }
            // The limit is within tolerance but the geometric ladder stopped
            // short; keep the best solution found.
            break;
        }
        prev_rho = rho;
        rho = (rho * 10.0).min(rho_cap);
        let (w, p, s) = slack_at(rho)?;
        weights = w;
        passes = p;
        slack = s;
    }

    // Bisection on log ρ for the smallest penalty meeting the tolerance.
    if slack.abs() <= epsilon_tol && prev_rho < rho {
        let mut lo = prev_rho.ln();
        let mut hi = rho.ln();
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let (w, p, s) = slack_at(mid.exp())?;
            if s.abs() <= epsilon_tol {
                hi = mid;
                weights = w;
                passes = p;
                slack = s;
                rho = mid.exp();
            } else {
                lo = mid;
            }
        }
    }

    let active_set = weights
        .iter()
        .enumerate()
        .filter(|(_, w)| **w == 0.0)
        .map(|(j, _)| j)
        .collect();
    Ok(ConvexSolution {
        weights,
        baseline: baseline.to_vec(),
        active_set,
        cost_slack: slack,
        feasibility: Feasibility::SlackFallback {
            rho_penalty: rho,
            epsilon_tol,
        },
        iterations: passes,
    })
}

/// Boundary-projection fallback: clip the cost target to the exposure hull,
/// then solve the exact problem at the clipped target.
pub fn boundary_projection_weights(
    baseline: &[f64],
    exposure: &[f64],
    cost: f64,
) -> Result<ConvexSolution> {
    let min = exposure.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = exposure.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let clipped = cost.clamp(min, max);
    let mut sol = active_set_project(baseline, exposure, clipped)?;
    sol.cost_slack = dot(exposure, &sol.weights) - cost;
    sol.feasibility = Feasibility::BoundaryProjected {
        cost_clipped: clipped,
    };
    Ok(sol)
}

/// What to do when the exact cost constraint is infeasible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FallbackPolicy {
    /// Propagate [`Error::InfeasibleCost`].
    Error,
    /// Penalized slack with the given tolerance.
    Slack { epsilon_tol: f64 },
    /// Clip the cost target to the exposure hull.
    Boundary,
}

/// Solve the common-weight problem, applying `policy` when the cost target is
/// infeasible.
pub fn solve_convex_weights(
    baseline: &[f64],
    exposure: &[f64],
    cost: f64,
    policy: FallbackPolicy,
) -> Result<ConvexSolution> {
    match feasibility_check(exposure, cost) {
        FeasibilityStatus::Feasible => active_set_project(baseline, exposure, cost),
        _ => match policy {
            FallbackPolicy::Error => {
                let min = exposure.iter().cloned().fold(f64::INFINITY, f64::min);
                let max = exposure.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                Err(Error::InfeasibleCost { cost, min, max })
            }
            FallbackPolicy::Slack { epsilon_tol } => {
                slack_penalized_weights(baseline, exposure, cost, epsilon_tol)
            }
            FallbackPolicy::Boundary => boundary_projection_weights(baseline, exposure, cost),
        },
    }
}

/// World prices under unified weights: p̄_i = Σ_j w_j p_ij.
///
/// Requires a fully observed panel; incomplete panels must be completed via
/// FE imputation first.
pub fn convex_world_prices(
    solution: &ConvexSolution,
    panel: &PricePanel,
) -> Result<WorldPriceVector> {
    if !panel.is_complete() {
        return Err(Error::IncompletePanel {
            missing: panel.missing_cells().len(),
        });
    }
    assert_eq!(solution.weights.len(), panel.n_campuses());
    let prices = (0..panel.n_products())
        .map(|i| {
            (0..panel.n_campuses())
                .map(|j| solution.weights[j] * panel.price(i, j).unwrap())
                .sum()
        })
        .collect();
    Ok(WorldPriceVector {
        operator_tag: solution.operator_tag(),
        product_ids: panel.product_ids().to_vec(),
        prices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testdata::minimal_simpson_panel;

    #[test]
    fn feasible_baseline_is_returned_unchanged() {
        // 0.5·2200 + 0.5·1000 = 1600: the baseline already satisfies both
        // constraints.
        let w = affine_projection(&[0.5, 0.5], &[2200.0, 1000.0], 1600.0).unwrap();
        assert!((w[0] - 0.5).abs() < 1e-12);
        assert!((w[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn projection_meets_both_constraints() {
        let s = [1.0, 2.0, 3.0];
        let w = affine_projection(&[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], &s, 2.5).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!((dot(&s, &w) - 2.5).abs() < 1e-10);
    }

    #[test]
    fn degenerate_exposure_with_inconsistent_cost_errors() {
        let r = affine_projection(&[0.5, 0.5], &[5.0, 5.0 + 1e-13], 7.0);
        assert!(matches!(r, Err(Error::DegenerateExposure)));
    }

    #[test]
    fn degenerate_exposure_with_redundant_cost_projects_onto_sum() {
        let w = affine_projection(&[0.2, 0.3], &[5.0, 5.0], 5.0).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // Sum-only projection shifts both entries equally.
        assert!((w[0] - 0.45).abs() < 1e-12);
        assert!((w[1] - 0.55).abs() < 1e-12);
    }

    #[test]
    fn feasibility_check_matches_the_hull() {
        let s = [2200.0, 1000.0];
        assert_eq!(feasibility_check(&s, 1600.0), FeasibilityStatus::Feasible);
        assert_eq!(
            feasibility_check(&s, 900.0),
            FeasibilityStatus::InfeasibleLow { gap: 100.0 }
        );
        assert_eq!(
            feasibility_check(&s, 2300.0),
            FeasibilityStatus::InfeasibleHigh { gap: 100.0 }
        );
        assert_eq!(
            feasibility_check(&[5.0, 5.0, 5.0], 5.0),
            FeasibilityStatus::Feasible
        );
    }

    #[test]
    fn nonnegative_projection_needs_one_pass() {
        let sol = active_set_project(&[0.5, 0.5], &[2200.0, 1000.0], 1600.0).unwrap();
        assert_eq!(sol.iterations, 1);
        assert!(sol.active_set.is_empty());
        assert_eq!(sol.feasibility, Feasibility::FeasibleExact);
        assert!(sol.cost_slack.abs() <= 1e-12);
        assert!((sol.weights[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn infeasible_cost_is_rejected() {
        let r = active_set_project(&[0.5, 0.5], &[2200.0, 1000.0], 900.0);
        assert!(matches!(r, Err(Error::InfeasibleCost { .. })));
    }

    #[test]
    fn active_set_pins_negative_weights_to_zero() {
        // Pulling the cost to the upper edge forces weight off the cheap
        // campuses.
        let s = [10.0, 20.0, 30.0, 40.0];
        let sol = active_set_project(&[0.7, 0.1, 0.1, 0.1], &s, 38.0).unwrap();
        assert!(sol.weights.iter().all(|w| *w >= -1e-12));
        assert!((sol.weights.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!((dot(&s, &sol.weights) - 38.0).abs() < 1e-9);
        assert!(!sol.active_set.is_empty());
        assert!(sol.iterations <= 4);
    }

    #[test]
    fn boundary_projection_clips_to_the_hull() {
        let sol = boundary_projection_weights(&[0.5, 0.5], &[2200.0, 1000.0], 900.0).unwrap();
        assert_eq!(
            sol.feasibility,
            Feasibility::BoundaryProjected {
                cost_clipped: 1000.0
            }
        );
        assert!((sol.weights[0]).abs() < 1e-12);
        assert!((sol.weights[1] - 1.0).abs() < 1e-12);
        // Slack is reported against the original target.
        assert!((sol.cost_slack - 100.0).abs() < 1e-9);
    }

    #[test]
    fn boundary_projection_is_identity_when_feasible() {
        let exact = active_set_project(&[0.5, 0.5], &[2200.0, 1000.0], 1600.0).unwrap();
        let clipped = boundary_projection_weights(&[0.5, 0.5], &[2200.0, 1000.0], 1600.0).unwrap();
        assert_eq!(exact.weights, clipped.weights);
        assert_eq!(
            clipped.feasibility,
            Feasibility::BoundaryProjected {
                cost_clipped: 1600.0
            }
        );
    }

    #[test]
    fn slack_fallback_returns_baseline_when_already_within_tolerance() {
        let sol = slack_penalized_weights(&[0.5, 0.5], &[2200.0, 1000.0], 1600.5, 1.0).unwrap();
        assert_eq!(sol.weights, vec![0.5, 0.5]);
        assert_eq!(sol.iterations, 0);
        match sol.feasibility {
            Feasibility::SlackFallback { rho_penalty, .. } => {
                assert!((rho_penalty - 1.0 / (2200.0f64 * 2200.0)).abs() < 1e-20);
            }
            other => panic!("unexpected feasibility {other:?}"),
        }
    }

    #[test]
    fn slack_fallback_matches_exact_solution_for_feasible_cost() {
        let baseline = [0.7, 0.1, 0.1, 0.1];
        let s = [10.0, 20.0, 30.0, 40.0];
        let exact = active_set_project(&baseline, &s, 38.0).unwrap();
        let relaxed = slack_penalized_weights(&baseline, &s, 38.0, 1e-8).unwrap();
        for (a, b) in exact.weights.iter().zip(&relaxed.weights) {
            assert!((a - b).abs() < 1e-6, "exact {a} vs relaxed {b}");
        }
    }

    #[test]
    fn slack_fallback_limits_to_the_extreme_vertex() {
        // C above max exposure by g: all weight drifts to the argmax campus
        // and the slack approaches −g.
        let baseline = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
        let s = [10.0, 20.0, 30.0];
        let g = 0.5;
        let sol = slack_penalized_weights(&baseline, &s, 30.0 + g, g * 1.01).unwrap();
        assert!(sol.weights[2] > 0.99);
        assert!((sol.cost_slack + g).abs() < 0.1 * g);
    }

    #[test]
    fn slack_fallback_reports_unreachable_tolerance() {
        let baseline = [0.5, 0.5];
        let s = [10.0, 20.0];
        let r = slack_penalized_weights(&baseline, &s, 25.0, 1e-3);
        match r {
            Err(Error::ToleranceUnreachable { limiting_slack, .. }) => {
                assert!((limiting_slack + 5.0).abs() < 1e-9);
            }
            other => panic!("expected ToleranceUnreachable, got {other:?}"),
        }
    }

    #[test]
    fn simpson_panel_convex_prices() {
        let panel = minimal_simpson_panel();
        let sol = active_set_project(&[0.5, 0.5], &[2200.0, 1000.0], 1600.0).unwrap();
        let world = convex_world_prices(&sol, &panel).unwrap();
        assert!((world.prices[0] - 7.0).abs() < 1e-10);
        assert!((world.prices[1] - 9.0).abs() < 1e-10);
        assert_eq!(world.operator_tag, OperatorTag::ConvexWeights);
    }

    #[test]
    fn unit_weight_selects_a_price_column() {
        let panel = minimal_simpson_panel();
        let sol = ConvexSolution {
            weights: vec![0.0, 1.0],
            baseline: vec![0.5, 0.5],
            active_set: vec![0],
            cost_slack: 0.0,
            feasibility: Feasibility::FeasibleExact,
            iterations: 1,
        };
        let world = convex_world_prices(&sol, &panel).unwrap();
        assert_eq!(world.prices, vec![4.0, 6.0]);
    }
}

