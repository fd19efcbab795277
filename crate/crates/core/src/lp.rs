//! Max-min-component linear program over a linear subspace, used by the
//! harmonic-measure detector: given a basis B of a nullspace, solve
//!
//!   maximize t   subject to   sum_j (B c)_j = 1,   (B c)_j >= t  for all j,
//!
//! over coefficients c and level t.  The sum normalization removes the scale
//! gauge; the optimum is strictly positive iff the subspace meets the open
//! positive orthant.

use minilp::{ComparisonOp, OptimizationDirection, Problem};

/// Returns `(t*, mu)` where `mu = B c*` attains the optimum, or `None` when
/// the normalized problem is infeasible (no subspace vector has unit
/// coordinate sum).
pub(crate) fn max_min_component(basis: &[Vec<f64>]) -> Option<(f64, Vec<f64>)> {
    if basis.is_empty() {
        return None;
    }
    let dim = basis[0].len();
    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let t = problem.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    let coeffs: Vec<_> = basis
        .iter()
        .map(|_| problem.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();

    let sum_row: Vec<_> = coeffs
        .iter()
        .zip(basis)
        .map(|(&var, b)| (var, b.iter().sum::<f64>()))
        .collect();
    problem.add_constraint(&sum_row[..], ComparisonOp::Eq, 1.0);

    for j in 0..dim {
        let mut row: Vec<_> = coeffs
            .iter()
            .zip(basis)
            .map(|(&var, b)| (var, b[j]))
            .collect();
        row.push((t, -1.0));
        problem.add_constraint(&row[..], ComparisonOp::Ge, 0.0);
    }

    let solution = problem.solve().ok()?;
    let c: Vec<f64> = coeffs.iter().map(|&v| solution[v]).collect();
    let mut mu = vec![0.0; dim];
    for (ck, b) in c.iter().zip(basis) {
        for (m, bj) in mu.iter_mut().zip(b) {
            *m += ck * bj;
        }
    }
    Some((solution.objective(), mu))
}
