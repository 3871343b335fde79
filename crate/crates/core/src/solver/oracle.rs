//! Slow reference projection used to cross-check the exact solver.
//!
//! Dykstra's algorithm cycles through the half-spaces `{ξ : ξ_a <= ξ_b}`, one per
//! generating edge, projecting in the `w`-weighted inner product and carrying
//! a correction term per half-space. It converges to the projection onto the
//! intersection of the half-spaces, which is the isotonic cone.

use crate::error::{Error, Result};
use crate::preorder::PreOrder;

use super::WeightedFunction;

pub fn oracle_projection(
    order: &PreOrder,
    f: &WeightedFunction,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    f.check_len(order.len())?;
    let w = &f.weights;
    let mut x = f.values.clone();
    let constraints: Vec<(usize, usize)> = order
        .edges()
        .iter()
        .copied()
        .filter(|&(a, b)| a != b)
        .collect();
    if constraints.is_empty() {
        return Ok(x);
    }
    // correction terms at (a, b) for each constraint
    let mut corr = vec![(0.0f64, 0.0f64); constraints.len()];
    let mut last_change = f64::INFINITY;
    for _sweep in 0..max_iter {
        let before = x.clone();
        for (k, &(a, b)) in constraints.iter().enumerate() {
            let za = x[a] + corr[k].0;
            let zb = x[b] + corr[k].1;
            let (pa, pb) = if za > zb {
                let m = (w[a] * za + w[b] * zb) / (w[a] + w[b]);
                (m, m)
            } else {
                (za, zb)
            };
            corr[k] = (za - pa, zb - pb);
            x[a] = pa;
            x[b] = pb;
        }
        last_change = x
            .iter()
            .zip(&before)
            .fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        if last_change < tol {
            return Ok(x);
        }
    }
    Err(Error::NoConvergence {
        max_iter,
        last_change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_pair() {
        let p = PreOrder::grid(&[2]).unwrap();
        let f = WeightedFunction::unit(vec![2.0, 1.0]).unwrap();
        let x = oracle_projection(&p, &f, 1e-12, 10_000).unwrap();
        assert!((x[0] - 1.5).abs() < 1e-12 && (x[1] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn antichain_is_identity() {
        let p = PreOrder::from_indices(3, &[]).unwrap();
        let f = WeightedFunction::unit(vec![3.0, -1.0, 2.0]).unwrap();
        assert_eq!(oracle_projection(&p, &f, 1e-10, 10).unwrap(), f.values);
    }

    #[test]
    fn reports_non_convergence() {
        let p = PreOrder::grid(&[2, 2]).unwrap();
        let f = WeightedFunction::unit(vec![3.0, 1.0, 2.0, 4.0]).unwrap();
        assert!(matches!(
            oracle_projection(&p, &f, 1e-14, 1),
            Err(Error::NoConvergence { max_iter: 1, .. })
        ));
        assert!(oracle_projection(&p, &f, 0.0, 10).is_err());
    }
}
