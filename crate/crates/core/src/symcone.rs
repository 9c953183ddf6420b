//! Spectral kernel for symmetric matrices.
//!
//! Everything downstream works with eigenvalue decompositions
//! `A = P Λ Pᵀ` whose eigenvalues are sorted non-increasingly and split
//! into the index sets `alpha` (positive), `beta` (zero within `tol_eig`)
//! and `gamma` (negative). The `beta` block measures the failure of strict
//! complementarity at a cone point and drives all the nonsmooth analysis.
//!
//! Symmetric matrices are stored in a packed row-major upper-triangle
//! layout ([`SymMat`]); the isometric vectorization [`SymMat::svec`] carries
//! the trace inner product to the Euclidean dot product, which makes every
//! adjoint in the crate a plain matrix transpose.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Dimension of the vectorized space of `p × p` symmetric matrices.
pub fn svec_dim(p: usize) -> usize {
    p * (p + 1) / 2
}

/// Index of entry `(i, j)`, `i ≤ j`, in the row-major upper-triangle layout.
fn tri_index(p: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < p);
    i * (2 * p + 1 - i) / 2 + (j - i)
}

/// A real symmetric matrix with structural symmetry: only the upper
/// triangle is stored, so `A = Aᵀ` holds exactly by construction.
///
/// The canonical storage is the svec layout itself (row-major upper
/// triangle, off-diagonal entries carrying the √2 factor). This makes
/// [`SymMat::svec`] and [`SymMat::from_svec`] bit-exact copies and the
/// trace inner product literally the dot product of the stored arrays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymMat {
    dim: usize,
    /// Row-major upper triangle in svec scaling.
    upper: Vec<f64>,
}

impl SymMat {
    pub fn zeros(p: usize) -> Self {
        SymMat {
            dim: p,
            upper: vec![0.0; svec_dim(p)],
        }
    }

    pub fn identity(p: usize) -> Self {
        let mut m = SymMat::zeros(p);
        for i in 0..p {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Build from an entry function; `f` is only consulted for `i ≤ j`.
    pub fn from_fn(p: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = SymMat::zeros(p);
        for i in 0..p {
            for j in i..p {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Store the symmetric part `(m + mᵀ)/2` of a dense matrix.
    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "SymMat::from_dense needs a square matrix");
        let p = m.nrows();
        SymMat::from_fn(p, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
    }

    /// Diagonal matrix from a vector of diagonal entries.
    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = SymMat::zeros(d.len());
        for (i, v) in d.iter().enumerate() {
            m.set(i, i, *v);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let u = self.upper[tri_index(self.dim, i, j)];
        if i == j {
            u
        } else {
            u / SQRT2
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let u = if i == j { v } else { v * SQRT2 };
        self.upper[tri_index(self.dim, i, j)] = u;
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    /// Isometric vectorization: row-major upper triangle with off-diagonal
    /// entries scaled by √2, so `⟨A, B⟩ = svec(A)·svec(B)`. Bit-exact copy
    /// of the canonical storage.
    pub fn svec(&self) -> DVector<f64> {
        DVector::from_vec(self.upper.clone())
    }

    /// Inverse of [`SymMat::svec`]; round-trips bit-exactly.
    pub fn from_svec(p: usize, v: &DVector<f64>) -> Self {
        assert_eq!(v.len(), svec_dim(p), "svec length does not match dimension");
        SymMat {
            dim: p,
            upper: v.iter().cloned().collect(),
        }
    }

    /// Trace inner product `⟨A, B⟩ = trace(AB)`; equals the dot product of
    /// the svec images exactly.
    pub fn inner(&self, other: &SymMat) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.upper
            .iter()
            .zip(other.upper.iter())
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    pub fn scale(&self, c: f64) -> SymMat {
        SymMat {
            dim: self.dim,
            upper: self.upper.iter().map(|e| c * e).collect(),
        }
    }

    pub fn add(&self, other: &SymMat) -> SymMat {
        assert_eq!(self.dim, other.dim);
        SymMat {
            dim: self.dim,
            upper: self
                .upper
                .iter()
                .zip(other.upper.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &SymMat) -> SymMat {
        self.add(&other.scale(-1.0))
    }

    pub fn is_finite(&self) -> bool {
        self.upper.iter().all(|e| e.is_finite())
    }

    /// Largest eigenvalue; `-inf` for the empty matrix.
    pub fn lambda_max(&self) -> f64 {
        if self.dim == 0 {
            return f64::NEG_INFINITY;
        }
        let eig = SymmetricEigen::new(self.to_dense());
        eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest eigenvalue; `+inf` for the empty matrix.
    pub fn lambda_min(&self) -> f64 {
        if self.dim == 0 {
            return f64::INFINITY;
        }
        let eig = SymmetricEigen::new(self.to_dense());
        eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Eigenvalue decomposition of a symmetric matrix together with the sign
/// partition of its spectrum.
///
/// The columns of `p` are ordered so that `lambda` is non-increasing, hence
/// `alpha` always precedes `beta` which precedes `gamma`. Within an
/// eigenvalue tie the column order is unspecified; downstream operations
/// must be invariant to it.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    /// Orthogonal eigenvector matrix.
    pub p: DMatrix<f64>,
    /// Eigenvalues, sorted non-increasingly.
    pub lambda: DVector<f64>,
    /// Indices with `lambda[i] > tol_eig`.
    pub alpha: Vec<usize>,
    /// Indices with `|lambda[i]| ≤ tol_eig`.
    pub beta: Vec<usize>,
    /// Indices with `lambda[i] < -tol_eig`.
    pub gamma: Vec<usize>,
    /// Threshold that defined the partition.
    pub tol_eig: f64,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    /// Columns of `P` indexed by `idx`, as a dense matrix.
    pub fn p_cols(&self, idx: &[usize]) -> DMatrix<f64> {
        let p = self.dim();
        DMatrix::from_fn(p, idx.len(), |i, k| self.p[(i, idx[k])])
    }

    /// Compression `P_Iᵀ M P_K` for index sets `I`, `K`.
    pub fn compress(&self, rows: &[usize], cols: &[usize], m: &DMatrix<f64>) -> DMatrix<f64> {
        self.p_cols(rows).transpose() * m * self.p_cols(cols)
    }

    /// `beta ∪ gamma` in order.
    pub fn beta_gamma(&self) -> Vec<usize> {
        self.beta.iter().chain(self.gamma.iter()).cloned().collect()
    }

    /// Reassemble `P Λ Pᵀ`.
    pub fn reconstruct(&self) -> SymMat {
        let lam = DMatrix::from_diagonal(&self.lambda);
        SymMat::from_dense(&(&self.p * lam * self.p.transpose()))
    }
}

/// Eigen-decompose `A` and partition its spectrum by sign.
///
/// Eigenvalues with `|λ| ≤ tol_eig` are assigned to `beta`. The partition
/// of `c·A` for `c > 0` equals the partition of `A` when `tol_eig` is
/// scaled by `c`.
pub fn eig_partition(a: &SymMat, tol_eig: f64) -> Result<SpectralDecomposition> {
    if !a.is_finite() {
        return Err(Error::NonFinite("eig_partition input"));
    }
    if tol_eig < 0.0 {
        return Err(Error::InvalidInput("tol_eig must be nonnegative".into()));
    }
    let p = a.dim();
    if p == 0 {
        return Ok(SpectralDecomposition {
            p: DMatrix::zeros(0, 0),
            lambda: DVector::zeros(0),
            alpha: vec![],
            beta: vec![],
            gamma: vec![],
            tol_eig,
        });
    }
    let eig = SymmetricEigen::new(a.to_dense());
    // Sort non-increasingly, carrying the eigenvector columns along.
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let lambda = DVector::from_fn(p, |i, _| eig.eigenvalues[order[i]]);
    let vecs = DMatrix::from_fn(p, p, |i, k| eig.eigenvectors[(i, order[k])]);

    let mut alpha = vec![];
    let mut beta = vec![];
    let mut gamma = vec![];
    for i in 0..p {
        if lambda[i] > tol_eig {
            alpha.push(i);
        } else if lambda[i] < -tol_eig {
            gamma.push(i);
        } else {
            beta.push(i);
        }
    }
    Ok(SpectralDecomposition {
        p: vecs,
        lambda,
        alpha,
        beta,
        gamma,
        tol_eig,
    })
}

/// Default partition threshold for a matrix of norm `‖A‖`.
pub fn default_tol_eig(a: &SymMat) -> f64 {
    1e-8 * a.norm().max(1.0)
}

/// Metric projection onto the PSD cone and its complement.
///
/// Returns `(A₊, A₋)` with `A₊ ⪰ 0`, `A₋ ⪯ 0`, `A₊ + A₋ = A` exactly in
/// the packed storage, and `⟨A₊, A₋⟩ = 0` up to round-off.
pub fn psd_project(a: &SymMat, tol_eig: f64) -> Result<(SymMat, SymMat)> {
    let dec = eig_partition(a, tol_eig)?;
    let clamped = DVector::from_fn(a.dim(), |i, _| dec.lambda[i].max(0.0));
    let aplus_dense = &dec.p * DMatrix::from_diagonal(&clamped) * dec.p.transpose();
    let aplus = SymMat::from_dense(&aplus_dense);
    let aminus = a.sub(&aplus);
    Ok((aplus, aminus))
}

/// Moore–Penrose pseudoinverse; eigenvalues with `|λ| ≤ tol_eig` are
/// treated as exactly zero.
pub fn sym_pinv(a: &SymMat, tol_eig: f64) -> Result<SymMat> {
    let dec = eig_partition(a, tol_eig)?;
    let inv = DVector::from_fn(a.dim(), |i, _| {
        let l = dec.lambda[i];
        if l.abs() > tol_eig {
            1.0 / l
        } else {
            0.0
        }
    });
    let dense = &dec.p * DMatrix::from_diagonal(&inv) * dec.p.transpose();
    Ok(SymMat::from_dense(&dense))
}

/// First divided difference of `t ↦ max(t, 0)` at an eigenvalue pair.
///
/// Equal arguments follow the limiting convention of the projection
/// derivative: the value is 1 for a positive tie and 0 otherwise.
pub fn projection_difference_quotient(li: f64, lk: f64) -> f64 {
    if li == lk {
        if li > 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        (li.max(0.0) - lk.max(0.0)) / (li - lk)
    }
}

/// Matrix of divided differences `Σ_ik` of the eigenvalues of a
/// decomposition. All entries lie in `[0, 1]`; the `alpha × alpha` block is
/// all ones and the `gamma × gamma` block is all zeros.
pub fn sigma_matrix(dec: &SpectralDecomposition) -> DMatrix<f64> {
    let p = dec.dim();
    DMatrix::from_fn(p, p, |i, k| {
        projection_difference_quotient(dec.lambda[i], dec.lambda[k])
    })
}

/// Submatrix of a dense matrix given by row and column index sets.
pub fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, k| m[(rows[i], cols[k])])
}

/// Membership of `Z` in the tangent cone (and its lineality space) of the
/// PSD cone at the point whose decomposition is `dec`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TangentMembership {
    pub in_tangent: bool,
    pub in_lineality: bool,
}

/// Tests `P_{β∪γ}ᵀ Z P_{β∪γ} ⪰ 0` (tangent cone) and `= 0` (lineality).
pub fn tangent_membership(
    z: &SymMat,
    dec: &SpectralDecomposition,
    tol: f64,
) -> Result<TangentMembership> {
    if z.dim() != dec.dim() {
        return Err(Error::DimensionMismatch {
            what: "tangent_membership",
            expected: dec.dim(),
            got: z.dim(),
        });
    }
    let bg = dec.beta_gamma();
    if bg.is_empty() {
        return Ok(TangentMembership {
            in_tangent: true,
            in_lineality: true,
        });
    }
    let c = SymMat::from_dense(&dec.compress(&bg, &bg, &z.to_dense()));
    Ok(TangentMembership {
        in_tangent: c.lambda_min() >= -tol,
        in_lineality: c.norm() <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

    pub fn random_sym(rng: &mut impl Rng, p: usize) -> SymMat {
        SymMat::from_fn(p, |_, _| rng.random_range(-1.0..1.0))
    }

    fn example_neg_pair() -> SymMat {
        // Rank-degenerate 3×3 with spectrum (2, 0, −3).
        SymMat::from_fn(3, |i, j| match (i, j) {
            (0, 0) | (1, 1) => 0.0,
            (0, 1) => -2.0,
            (0, 2) | (1, 2) => -1.0,
            (2, 2) => -1.0,
            _ => unreachable!(),
        })
    }

    #[test]
    fn eig_partition_known_spectrum() {
        let a = example_neg_pair();
        let dec = eig_partition(&a, 1e-8).unwrap();
        assert_abs_diff_eq!(dec.lambda[0], 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(dec.lambda[1], 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(dec.lambda[2], -3.0, epsilon = 1e-10);
        assert_eq!((dec.alpha.as_slice(), dec.beta.as_slice(), dec.gamma.as_slice()),
                   (&[0][..], &[1][..], &[2][..]));
        // P orthogonal and A reconstructed.
        let ortho = dec.p.transpose() * &dec.p - DMatrix::identity(3, 3);
        assert!(ortho.norm() < 1e-12);
        assert!(dec.reconstruct().sub(&a).norm() < 1e-12);
    }

    #[test]
    fn eig_partition_zero_matrix() {
        let dec = eig_partition(&SymMat::zeros(4), 1e-8).unwrap();
        assert!(dec.alpha.is_empty() && dec.gamma.is_empty());
        assert_eq!(dec.beta.len(), 4);
        assert_eq!(dec.lambda.iter().cloned().fold(0.0, f64::max), 0.0);
    }

    #[test]
    fn eig_partition_rejects_non_finite() {
        let mut a = SymMat::zeros(2);
        a.set(0, 1, f64::NAN);
        assert!(matches!(eig_partition(&a, 1e-8), Err(Error::NonFinite(_))));
    }

    #[test]
    fn eig_partition_matches_jacobi_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let a = random_sym(&mut rng, 6);
            let dec = eig_partition(&a, 1e-8).unwrap();
            let (oracle_vals, _) = oracle::jacobi_eigen(&a.to_dense());
            for i in 0..6 {
                assert_abs_diff_eq!(dec.lambda[i], oracle_vals[i], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn eig_partition_scale_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = random_sym(&mut rng, 5);
            let c = rng.random_range(0.1..10.0);
            let tol = 1e-6;
            let d1 = eig_partition(&a, tol).unwrap();
            let d2 = eig_partition(&a.scale(c), c * tol).unwrap();
            assert_eq!(d1.alpha, d2.alpha);
            assert_eq!(d1.beta, d2.beta);
            assert_eq!(d1.gamma, d2.gamma);
        }
    }

    #[test]
    fn psd_project_known_split() {
        let a = example_neg_pair();
        let (ap, am) = psd_project(&a, 1e-8).unwrap();
        let expect_plus = SymMat::from_fn(3, |i, j| match (i, j) {
            (0, 0) | (1, 1) => 1.0,
            (0, 1) => -1.0,
            _ => 0.0,
        });
        let expect_minus = SymMat::from_fn(3, |_, _| -1.0);
        assert!(ap.sub(&expect_plus).norm() < 1e-10);
        assert!(am.sub(&expect_minus).norm() < 1e-10);
    }

    #[test]
    fn psd_project_fixes_psd_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = random_sym(&mut rng, 4).to_dense();
        let a = SymMat::from_dense(&(&r * r.transpose()));
        let (ap, am) = psd_project(&a, 1e-8).unwrap();
        assert!(ap.sub(&a).norm() < 1e-10 * a.norm().max(1.0));
        assert!(am.norm() < 1e-10 * a.norm().max(1.0));
    }

    #[test]
    fn psd_project_matches_clamp_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let a = random_sym(&mut rng, 7);
            let (ap, _) = psd_project(&a, 1e-8).unwrap();
            let oracle_plus = oracle::clamp_project(&a.to_dense());
            assert!((ap.to_dense() - oracle_plus).norm() <= 1e-10);
        }
    }

    #[test]
    fn psd_project_property_battery() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let p = rng.random_range(2..=8);
            let a = random_sym(&mut rng, p);
            let (ap, am) = psd_project(&a, 1e-8).unwrap();
            assert!(ap.lambda_min() >= -1e-10);
            assert!(am.lambda_max() <= 1e-10);
            assert!(ap.add(&am).sub(&a).norm() <= 1e-12 * a.norm().max(1.0));
            assert!(ap.inner(&am).abs() <= 1e-10 * a.norm().powi(2).max(1.0));
        }
    }

    #[test]
    fn sym_pinv_diagonal() {
        let a = SymMat::from_diagonal(&[2.0, 0.0, 0.0]);
        let pinv = sym_pinv(&a, 1e-8).unwrap();
        assert!(pinv.sub(&SymMat::from_diagonal(&[0.5, 0.0, 0.0])).norm() < 1e-12);
        let id = SymMat::identity(3);
        assert!(sym_pinv(&id, 1e-8).unwrap().sub(&id).norm() < 1e-12);
    }

    #[test]
    fn sym_pinv_moore_penrose_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        // Random rank-2 PSD of order 5.
        let b = DMatrix::from_fn(5, 2, |_, _| rng.random_range(-1.0..1.0));
        let a = SymMat::from_dense(&(&b * b.transpose()));
        let pinv = sym_pinv(&a, 1e-10).unwrap();
        let (ad, pd) = (a.to_dense(), pinv.to_dense());
        assert!((&ad * &pd * &ad - &ad).norm() < 1e-9);
        assert!((&pd * &ad * &pd - &pd).norm() < 1e-9);
        assert!(((&ad * &pd).transpose() - &ad * &pd).norm() < 1e-9);
        assert!(((&pd * &ad).transpose() - &pd * &ad).norm() < 1e-9);
        // Agreement with the reciprocal-eigenvalue oracle.
        let oracle_pinv = oracle::spectral_pinv(&ad, 1e-10);
        assert!((pd - oracle_pinv).norm() < 1e-9);
    }

    #[test]
    fn sigma_matrix_known_values() {
        let dec = eig_partition(&example_neg_pair(), 1e-8).unwrap();
        let sigma = sigma_matrix(&dec);
        assert_abs_diff_eq!(sigma[(0, 2)], 0.4, epsilon = 1e-12);
        // Two positive eigenvalues, including a tie.
        let dec = eig_partition(&SymMat::from_diagonal(&[3.0, 3.0, 1.0]), 1e-8).unwrap();
        let sigma = sigma_matrix(&dec);
        assert!(sigma.iter().all(|&s| (s - 1.0).abs() < 1e-15));
        // Direct evaluation for (1, -1).
        let dec = eig_partition(&SymMat::from_diagonal(&[1.0, -1.0]), 1e-8).unwrap();
        assert_abs_diff_eq!(sigma_matrix(&dec)[(0, 1)], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn sigma_matrix_range_and_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let a = random_sym(&mut rng, 6);
            let dec = eig_partition(&a, 1e-8).unwrap();
            let sigma = sigma_matrix(&dec);
            assert!(sigma.iter().all(|&s| (-1e-15..=1.0 + 1e-15).contains(&s)));
            for &i in &dec.alpha {
                for &k in &dec.alpha {
                    assert_abs_diff_eq!(sigma[(i, k)], 1.0, epsilon = 1e-15);
                }
            }
            for &i in &dec.gamma {
                for &k in &dec.gamma {
                    assert_abs_diff_eq!(sigma[(i, k)], 0.0, epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn tangent_membership_examples() {
        let a = SymMat::from_diagonal(&[1.0, 0.0, 0.0]);
        let dec = eig_partition(&a, 1e-8).unwrap();
        let e22 = SymMat::from_fn(3, |i, j| if (i, j) == (1, 1) { 1.0 } else { 0.0 });
        let m = tangent_membership(&e22, &dec, 1e-10).unwrap();
        assert!(m.in_tangent && !m.in_lineality);

        let e12 = SymMat::from_fn(3, |i, j| if (i, j) == (0, 1) { 1.0 } else { 0.0 });
        let m = tangent_membership(&e12, &dec, 1e-10).unwrap();
        assert!(m.in_lineality && m.in_tangent);

        let m = tangent_membership(&e22.scale(-1.0), &dec, 1e-10).unwrap();
        assert!(!m.in_tangent);
    }

    #[test]
    fn svec_round_trip_and_isometry() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..50 {
            let p = rng.random_range(1..=8);
            let a = random_sym(&mut rng, p);
            let b = random_sym(&mut rng, p);
            let back = SymMat::from_svec(p, &a.svec());
            assert_eq!(a, back, "svec/unsvec must round-trip bit-exactly");
            let dot = a.svec().dot(&b.svec());
            let tr = a.inner(&b);
            assert!((dot - tr).abs() <= 4.0 * f64::EPSILON * a.norm() * b.norm() + 1e-15);
        }
    }
}
