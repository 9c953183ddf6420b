//! Independent reference implementations used for cross-validation.
//!
//! Nothing in this module is called on the production path. The test suite
//! and the `selftest` command compare production results against these
//! routines, which are written from scratch (the eigensolver is a cyclic
//! Jacobi iteration, not the dense solver used elsewhere) so that an error
//! in one path cannot hide an error in the other.

use nalgebra::{DMatrix, DVector};

/// Cyclic Jacobi eigensolver for a dense symmetric matrix.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvalues sorted
/// non-increasingly and eigenvectors in the corresponding columns.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut m = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let max_sweeps = 60;

    for _ in 0..max_sweeps {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() <= 1e-15 * m.norm().max(1.0) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                // Stable rotation angle computation.
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].partial_cmp(&m[(i, i)]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| m[(i, i)]).collect();
    let vecs = DMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    (vals, vecs)
}

/// PSD projection by clamping Jacobi eigenvalues at zero.
pub fn clamp_project(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (vals, vecs) = jacobi_eigen(a);
    let clamped = DVector::from_iterator(vals.len(), vals.iter().map(|&l| l.max(0.0)));
    &vecs * DMatrix::from_diagonal(&clamped) * vecs.transpose()
}

/// Pseudoinverse by reciprocal Jacobi eigenvalues on the support.
pub fn spectral_pinv(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let (vals, vecs) = jacobi_eigen(a);
    let inv = DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&l| if l.abs() > tol { 1.0 / l } else { 0.0 }),
    );
    &vecs * DMatrix::from_diagonal(&inv) * vecs.transpose()
}

/// Rank of a dense matrix by Gaussian elimination with full pivoting.
///
/// Written without any factorization library so it can vouch for
/// rank-revealing results obtained elsewhere.
pub fn elimination_rank(a: &DMatrix<f64>, tol: f64) -> usize {
    let mut m = a.clone();
    let (rows, cols) = (m.nrows(), m.ncols());
    let scale = m.iter().fold(0.0f64, |acc, &x| acc.max(x.abs())).max(1.0);
    let mut rank = 0;
    let mut used_rows = vec![false; rows];
    for _ in 0..cols.min(rows) {
        // Full pivot over the remaining submatrix.
        let mut best = (0usize, 0usize, 0.0f64);
        for i in 0..rows {
            if used_rows[i] {
                continue;
            }
            for j in 0..cols {
                if m[(i, j)].abs() > best.2 {
                    best = (i, j, m[(i, j)].abs());
                }
            }
        }
        if best.2 <= tol * scale {
            break;
        }
        let (pi, pj, _) = best;
        used_rows[pi] = true;
        rank += 1;
        for i in 0..rows {
            if used_rows[i] {
                continue;
            }
            let f = m[(i, pj)] / m[(pi, pj)];
            if f != 0.0 {
                for j in 0..cols {
                    let upd = m[(pi, j)] * f;
                    m[(i, j)] -= upd;
                }
            }
        }
    }
    rank
}

/// Sigma-term value `2⟨Γ, S g† S⟩` computed through the divided-difference
/// reformulation `2 Σ_{i∈α, k∈γ} (λ_k / λ_i) Ṽ_ik²`, where `Ṽ = P_αᵀ S P_γ`
/// and `(λ, P)` decompose `g + Γ`.
///
/// Serves as the second, algebraically independent route to the curvature
/// correction used by the reduced-operator construction.
pub fn sigma_term_divided_difference(
    lambda: &[f64],
    p: &DMatrix<f64>,
    alpha: &[usize],
    gamma: &[usize],
    s: &DMatrix<f64>,
) -> f64 {
    let mut total = 0.0;
    for (ia, &i) in alpha.iter().enumerate() {
        for (kg, &k) in gamma.iter().enumerate() {
            let _ = (ia, kg);
            let pi = p.column(i);
            let pk = p.column(k);
            let v_ik = (pi.transpose() * s * pk)[(0, 0)];
            total += (lambda[k] / lambda[i]) * v_ik * v_ik;
        }
    }
    2.0 * total
}
