//! Jacobi-preconditioned conjugate gradients on a matrix-free operator.
//!
//! All inner products are deterministic pairwise sums, so a solve is
//! bit-reproducible as long as the operator itself is.

use crate::util::pairwise_sum;

/// Deterministic dot product; `scratch` is reused between calls.
pub(crate) fn dot(a: &[f64], b: &[f64], scratch: &mut Vec<f64>) -> f64 {
    scratch.clear();
    scratch.extend(a.iter().zip(b.iter()).map(|(x, y)| x * y));
    pairwise_sum(scratch)
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct CgOutcome {
    pub iters: usize,
    pub converged: bool,
    /// Hit non-positive curvature or a preconditioner breakdown; the caller
    /// should fall back to a safer direction.
    pub breakdown: bool,
}

/// Solves `A x = b` for a symmetric positive-semidefinite operator, starting
/// from the warm start in `x`. Because CG minimizes the quadratic
/// `½xᵀAx - bᵀx` monotonically over the expanding Krylov space, every iterate
/// has an energy no larger than the warm start's — callers rely on that.
///
/// `diag` is the operator diagonal for Jacobi preconditioning; non-positive
/// entries fall back to the identity. Convergence is `‖r‖₂ <= rel_tol·‖b‖₂`.
pub(crate) fn pcg(
    apply: &mut dyn FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    diag: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> CgOutcome {
    let n = b.len();
    assert_eq!(x.len(), n);
    assert_eq!(diag.len(), n);
    let inv_diag: Vec<f64> = diag
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut scratch = Vec::with_capacity(n);
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];

    apply(x, &mut ap);
    for i in 0..n {
        r[i] = b[i] - ap[i];
    }
    let b_norm = dot(b, b, &mut scratch).sqrt();
    let target = rel_tol * b_norm.max(f64::MIN_POSITIVE);

    for i in 0..n {
        z[i] = inv_diag[i] * r[i];
    }
    let mut rz = dot(&r, &z, &mut scratch);
    p.copy_from_slice(&z);

    let mut iters = 0;
    loop {
        let r_norm = dot(&r, &r, &mut scratch).sqrt();
        if r_norm <= target {
            return CgOutcome { iters, converged: true, breakdown: false };
        }
        if iters >= max_iter {
            return CgOutcome { iters, converged: false, breakdown: false };
        }
        if rz <= 0.0 {
            // Round-off exhausted the preconditioned residual while the
            // plain residual is still above target.
            return CgOutcome { iters, converged: false, breakdown: true };
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap, &mut scratch);
        if pap <= 0.0 {
            return CgOutcome { iters, converged: false, breakdown: true };
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = inv_diag[i] * r[i];
        }
        let rz_new = dot(&r, &z, &mut scratch);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        iters += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_apply(m: Vec<Vec<f64>>) -> impl FnMut(&[f64], &mut [f64]) {
        move |x, y| {
            for (i, row) in m.iter().enumerate() {
                y[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
            }
        }
    }

    #[test]
    fn solves_small_spd_system() {
        let m = vec![
            vec![4.0, 1.0, 0.0],
            vec![1.0, 3.0, 1.0],
            vec![0.0, 1.0, 2.0],
        ];
        let diag = vec![4.0, 3.0, 2.0];
        let b = vec![1.0, 2.0, 3.0];
        let mut x = vec![0.0; 3];
        let out = pcg(&mut dense_apply(m.clone()), &b, &mut x, &diag, 1e-12, 100);
        assert!(out.converged);
        let mut ax = vec![0.0; 3];
        dense_apply(m)(&x, &mut ax);
        for i in 0..3 {
            assert!((ax[i] - b[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn warm_start_at_solution_takes_no_iterations() {
        let m = vec![vec![2.0, 0.0], vec![0.0, 5.0]];
        let b = vec![2.0, 10.0];
        let mut x = vec![1.0, 2.0];
        let out = pcg(&mut dense_apply(m), &b, &mut x, &[2.0, 5.0], 1e-12, 100);
        assert!(out.converged);
        assert_eq!(out.iters, 0);
        assert_eq!(x, vec![1.0, 2.0]);
    }

    #[test]
    fn indefinite_operator_reports_breakdown() {
        let m = vec![vec![1.0, 0.0], vec![0.0, -1.0]];
        let b = vec![1.0, 1.0];
        let mut x = vec![0.0, 0.0];
        let out = pcg(&mut dense_apply(m), &b, &mut x, &[1.0, 1.0], 1e-12, 100);
        assert!(out.breakdown);
    }

    #[test]
    fn monotone_quadratic_descent() {
        // Track q(x) = ½xᵀAx - bᵀx across iterations by capping max_iter.
        let m = vec![
            vec![5.0, 1.0, 0.5, 0.0],
            vec![1.0, 4.0, 1.0, 0.5],
            vec![0.5, 1.0, 3.0, 1.0],
            vec![0.0, 0.5, 1.0, 2.0],
        ];
        let diag = vec![5.0, 4.0, 3.0, 2.0];
        let b = vec![1.0, -2.0, 0.5, 3.0];
        let q = |x: &[f64]| {
            let mut ax = vec![0.0; 4];
            dense_apply(m.clone())(x, &mut ax);
            0.5 * x.iter().zip(&ax).map(|(a, b)| a * b).sum::<f64>()
                - x.iter().zip(&b).map(|(a, b)| a * b).sum::<f64>()
        };
        let warm = vec![1.0, 1.0, -1.0, 0.5];
        let mut prev = q(&warm);
        for cap in 1..=6 {
            let mut x = warm.clone();
            pcg(&mut dense_apply(m.clone()), &b, &mut x, &diag, 1e-30, cap);
            let cur = q(&x);
            assert!(cur <= prev + 1e-14, "iteration {cap} increased the quadratic");
            prev = cur;
        }
    }
}
