//! Membership certificates for the limiting coderivative of the PSD
//! normal-cone map.
//!
//! At a complementary pair `(A₊, A₋)` the coderivative of the normal-cone
//! map of the PSD cone admits an explicit description in the eigenbasis of
//! `A = A₊ + A₋`: the rotated matrices `Ũ = PᵀUP`, `Ṽ = PᵀVP` must carry a
//! fixed zero pattern, satisfy a divided-difference coupling on the
//! `alpha × gamma` block, and their `beta` blocks must be related through a
//! pattern pair `(Ξ₁, Ξ₂)` built from a limit of divided-difference
//! matrices `D(z)`, conjugated by some orthogonal matrix `O`.
//!
//! Membership here is *certificate based*: a [`CoderivCertificate`] names a
//! concrete `(Ξ₁, Ξ₂, O)` triple and verification is a finite numerical
//! check. Certificates are only ever produced constructively from a
//! generator vector `z` (the ray limit of `D`), which keeps every accepted
//! certificate sound; no attempt is made to decide membership of arbitrary
//! pattern matrices. A bounded best-effort search is provided separately
//! and reports failures as inconclusive rather than negative.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::symcone::{
    projection_difference_quotient, submatrix, SpectralDecomposition, SymMat,
};

/// Divided-difference matrix `D(z)` of `t ↦ max(t, 0)`.
///
/// `D(z)` is invariant under positive scaling of `z`, so it equals its own
/// ray limit for `t ↓ 0`.
pub fn d_matrix(z: &[f64]) -> DMatrix<f64> {
    let n = z.len();
    DMatrix::from_fn(n, n, |i, k| projection_difference_quotient(z[i], z[k]))
}

/// A limit element of the divided-difference family, together with the
/// sign partition of its generator.
///
/// The pattern of `xi1` is: all ones on `β₊ × β₊` and `β₊ × β₀`, entries
/// `z_i/(z_i − z_k) ∈ [0, 1]` on `β₊ × β₋`, zeros elsewhere.
#[derive(Clone, Debug)]
pub struct UpsilonElement {
    pub beta_plus: Vec<usize>,
    pub beta_zero: Vec<usize>,
    pub beta_minus: Vec<usize>,
    pub xi1: DMatrix<f64>,
    /// Generator, sorted non-increasingly.
    pub z: DVector<f64>,
}

impl UpsilonElement {
    pub fn dim(&self) -> usize {
        self.z.len()
    }

    /// The companion pattern: `E − Ξ₁` on `β₊ × β₋`, all ones on
    /// `β₀ × β₋` and `β₋ × β₋`, zeros elsewhere.
    pub fn xi2(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut xi2 = DMatrix::zeros(n, n);
        for &i in &self.beta_plus {
            for &k in &self.beta_minus {
                xi2[(i, k)] = 1.0 - self.xi1[(i, k)];
                xi2[(k, i)] = xi2[(i, k)];
            }
        }
        for &i in &self.beta_zero {
            for &k in &self.beta_minus {
                xi2[(i, k)] = 1.0;
                xi2[(k, i)] = 1.0;
            }
        }
        for &i in &self.beta_minus {
            for &k in &self.beta_minus {
                xi2[(i, k)] = 1.0;
            }
        }
        xi2
    }
}

/// Ray-limit element of the divided-difference family for a generator `z`.
///
/// `z` is sorted non-increasingly if it is not already; the partition is by
/// exact sign of the entries.
pub fn upsilon_from_z(z: &[f64]) -> UpsilonElement {
    let mut zs: Vec<f64> = z.to_vec();
    zs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let beta_plus: Vec<usize> = (0..zs.len()).filter(|&i| zs[i] > 0.0).collect();
    let beta_zero: Vec<usize> = (0..zs.len()).filter(|&i| zs[i] == 0.0).collect();
    let beta_minus: Vec<usize> = (0..zs.len()).filter(|&i| zs[i] < 0.0).collect();
    UpsilonElement {
        xi1: d_matrix(&zs),
        beta_plus,
        beta_zero,
        beta_minus,
        z: DVector::from_vec(zs),
    }
}

/// A complete membership certificate for the coderivative at the origin:
/// the pattern pair and the conjugating orthogonal matrix.
#[derive(Clone, Debug)]
pub struct CoderivCertificate {
    pub upsilon: UpsilonElement,
    pub o: DMatrix<f64>,
    pub xi2: DMatrix<f64>,
}

impl CoderivCertificate {
    pub fn new(upsilon: UpsilonElement, o: DMatrix<f64>) -> Result<Self> {
        let n = upsilon.dim();
        if o.nrows() != n || o.ncols() != n {
            return Err(Error::DimensionMismatch {
                what: "certificate orthogonal factor",
                expected: n,
                got: o.nrows(),
            });
        }
        let err = (o.transpose() * &o - DMatrix::identity(n, n)).norm();
        if err > 1e-10 * (n as f64).max(1.0) {
            return Err(Error::InvalidInput(format!(
                "certificate factor is not orthogonal, ‖OᵀO − I‖ = {err:.3e}"
            )));
        }
        let xi2 = upsilon.xi2();
        Ok(CoderivCertificate { upsilon, o, xi2 })
    }

    /// Certificate with identity conjugation.
    pub fn from_generator(z: &[f64]) -> Self {
        let upsilon = upsilon_from_z(z);
        let n = upsilon.dim();
        let xi2 = upsilon.xi2();
        CoderivCertificate {
            upsilon,
            o: DMatrix::identity(n, n),
            xi2,
        }
    }

    pub fn dim(&self) -> usize {
        self.upsilon.dim()
    }
}

fn hadamard(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.component_mul(b)
}

/// Verifies that `(U, V)` is certified by `cert` as a coderivative pair of
/// the normal-cone map at the origin of the `|β|`-dimensional PSD cone.
///
/// Checks `Ξ₁ ∘ OᵀUO = Ξ₂ ∘ OᵀVO` within `tol` and that the `β₀`
/// compressions of both `U` and `V` are negative semidefinite within `tol`.
pub fn verify_zero_membership(
    u: &SymMat,
    v: &SymMat,
    cert: &CoderivCertificate,
    tol: f64,
) -> Result<bool> {
    let n = cert.dim();
    if u.dim() != n || v.dim() != n {
        return Err(Error::DimensionMismatch {
            what: "verify_zero_membership",
            expected: n,
            got: u.dim(),
        });
    }
    if n == 0 {
        return Ok(true);
    }
    let ur = cert.o.transpose() * u.to_dense() * &cert.o;
    let vr = cert.o.transpose() * v.to_dense() * &cert.o;
    let residual = hadamard(&cert.upsilon.xi1, &ur) - hadamard(&cert.xi2, &vr);
    if residual.norm() > tol {
        return Ok(false);
    }
    let b0 = &cert.upsilon.beta_zero;
    if !b0.is_empty() {
        let u0 = SymMat::from_dense(&submatrix(&ur, b0, b0));
        let v0 = SymMat::from_dense(&submatrix(&vr, b0, b0));
        if u0.lambda_max() > tol || v0.lambda_max() > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Verifies a coderivative pair at a general complementary point given by
/// `dec`: the zero patterns of the rotated matrices, the divided-difference
/// coupling on `alpha × gamma`, and the certified `beta`-block membership.
pub fn verify_general_membership(
    u: &SymMat,
    v: &SymMat,
    dec: &SpectralDecomposition,
    cert: &CoderivCertificate,
    tol: f64,
) -> Result<bool> {
    let p = dec.dim();
    if u.dim() != p || v.dim() != p {
        return Err(Error::DimensionMismatch {
            what: "verify_general_membership",
            expected: p,
            got: u.dim(),
        });
    }
    if cert.dim() != dec.beta.len() {
        return Err(Error::DimensionMismatch {
            what: "certificate dimension vs beta block",
            expected: dec.beta.len(),
            got: cert.dim(),
        });
    }
    let ut = dec.p.transpose() * u.to_dense() * &dec.p;
    let vt = dec.p.transpose() * v.to_dense() * &dec.p;
    let (al, be, ga) = (&dec.alpha, &dec.beta, &dec.gamma);

    // Structural zero blocks of the rotated pair.
    if submatrix(&ut, al, al).norm() > tol || submatrix(&ut, al, be).norm() > tol {
        return Ok(false);
    }
    if submatrix(&vt, be, ga).norm() > tol || submatrix(&vt, ga, ga).norm() > tol {
        return Ok(false);
    }

    // Divided-difference coupling on alpha × gamma.
    if !al.is_empty() && !ga.is_empty() {
        let sigma_ag = DMatrix::from_fn(al.len(), ga.len(), |i, k| {
            projection_difference_quotient(dec.lambda[al[i]], dec.lambda[ga[k]])
        });
        let ones = DMatrix::from_element(al.len(), ga.len(), 1.0);
        let coupling = hadamard(&sigma_ag, &submatrix(&ut, al, ga))
            - hadamard(&(ones - &sigma_ag), &submatrix(&vt, al, ga));
        if coupling.norm() > tol {
            return Ok(false);
        }
    }

    let ub = SymMat::from_dense(&submatrix(&ut, be, be));
    let vb = SymMat::from_dense(&submatrix(&vt, be, be));
    verify_zero_membership(&ub, &vb, cert, tol)
}

/// Construction recipe for [`generate_member`].
#[derive(Clone, Debug)]
pub enum GeneratorMode {
    /// `β₊ = β`: forces a zero `beta` block of `U`, any `V` block.
    PosAll,
    /// `β₀ = β`: requires `V`'s `beta` block negative semidefinite; pairs
    /// it with a random negative semidefinite `U` block.
    ZeroAllIfVNsd,
    /// General partition from a generator vector.
    FromZ(Vec<f64>),
}

/// A generated coderivative pair together with its certificate.
#[derive(Clone, Debug)]
pub struct MemberPair {
    pub u: SymMat,
    pub v: SymMat,
    pub cert: CoderivCertificate,
}

fn random_nsd(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let r = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    -(&r * r.transpose()) / (n as f64).max(1.0)
}

/// Constructs a pair `(U, V)` certified to lie in the coderivative at the
/// complementary point described by `dec`, with the `beta` block of the
/// rotated `V` prescribed by `v_beta`.
///
/// The free blocks of the rotated pair are drawn from `rng`; the
/// `alpha × gamma` block of `U` is derived from the eigenvalue coupling so
/// that the divided-difference relation holds by construction.
pub fn generate_member(
    dec: &SpectralDecomposition,
    v_beta: &SymMat,
    mode: &GeneratorMode,
    rng: &mut impl Rng,
    tol: f64,
) -> Result<MemberPair> {
    let p = dec.dim();
    let nb = dec.beta.len();
    if v_beta.dim() != nb {
        return Err(Error::DimensionMismatch {
            what: "generate_member v_beta",
            expected: nb,
            got: v_beta.dim(),
        });
    }
    let (al, be, ga) = (&dec.alpha, &dec.beta, &dec.gamma);
    let vb = v_beta.to_dense();

    // Certificate and the beta block of U, mode by mode.
    let (cert, ub) = match mode {
        GeneratorMode::PosAll => {
            let cert = CoderivCertificate::from_generator(&vec![1.0; nb]);
            (cert, DMatrix::zeros(nb, nb))
        }
        GeneratorMode::ZeroAllIfVNsd => {
            if v_beta.lambda_max() > tol {
                return Err(Error::InvalidInput(
                    "zero_all mode requires a negative semidefinite V beta block".into(),
                ));
            }
            let cert = CoderivCertificate::from_generator(&vec![0.0; nb]);
            (cert, random_nsd(rng, nb))
        }
        GeneratorMode::FromZ(z) => {
            if z.len() != nb {
                return Err(Error::DimensionMismatch {
                    what: "generator vector",
                    expected: nb,
                    got: z.len(),
                });
            }
            let cert = CoderivCertificate::from_generator(z);
            let (bp, b0, bm) = (
                &cert.upsilon.beta_plus,
                &cert.upsilon.beta_zero,
                &cert.upsilon.beta_minus,
            );
            // Compatibility of the prescribed V block with the partition.
            if submatrix(&vb, b0, bm).norm() > tol || submatrix(&vb, bm, bm).norm() > tol {
                return Err(Error::InvalidInput(
                    "V beta block must vanish on β₀×β₋ and β₋×β₋ for this generator".into(),
                ));
            }
            if !b0.is_empty() {
                let v00 = SymMat::from_dense(&submatrix(&vb, b0, b0));
                if v00.lambda_max() > tol {
                    return Err(Error::InvalidInput(
                        "V beta block must be negative semidefinite on β₀×β₀".into(),
                    ));
                }
            }
            let mut ub = DMatrix::zeros(nb, nb);
            // Coupled rows: Ξ₁ ∘ U = Ξ₂ ∘ V entrywise on β₊ × β₋.
            for &i in bp {
                for &k in bm {
                    let c = cert.upsilon.xi1[(i, k)];
                    ub[(i, k)] = (1.0 - c) / c * vb[(i, k)];
                    ub[(k, i)] = ub[(i, k)];
                }
            }
            // Free blocks.
            let u00 = random_nsd(rng, b0.len());
            for (a, &i) in b0.iter().enumerate() {
                for (b, &k) in b0.iter().enumerate() {
                    ub[(i, k)] = u00[(a, b)];
                }
            }
            for &i in b0 {
                for &k in bm {
                    let x = rng.random_range(-1.0..1.0);
                    ub[(i, k)] = x;
                    ub[(k, i)] = x;
                }
            }
            for (a, &i) in bm.iter().enumerate() {
                for &k in &bm[a..] {
                    let x = rng.random_range(-1.0..1.0);
                    ub[(i, k)] = x;
                    ub[(k, i)] = x;
                }
            }
            (cert, ub)
        }
    };

    // Assemble the rotated pair with the structural patterns.
    let mut ut = DMatrix::zeros(p, p);
    let mut vt = DMatrix::zeros(p, p);
    for (a, &i) in be.iter().enumerate() {
        for (b, &k) in be.iter().enumerate() {
            ut[(i, k)] = ub[(a, b)];
            vt[(i, k)] = vb[(a, b)];
        }
    }
    // Free V blocks: alpha × (alpha ∪ beta), symmetric.
    for (ia, &i) in al.iter().enumerate() {
        for &k in &al[ia..] {
            let x = rng.random_range(-1.0..1.0);
            vt[(i, k)] = x;
            vt[(k, i)] = x;
        }
        for &k in be {
            let x = rng.random_range(-1.0..1.0);
            vt[(i, k)] = x;
            vt[(k, i)] = x;
        }
    }
    // alpha × gamma of V is free; the matching block of U comes from the
    // eigenvalue coupling λ_i u + λ_k v = 0.
    for &i in al {
        for &k in ga {
            let x = rng.random_range(-1.0..1.0);
            vt[(i, k)] = x;
            vt[(k, i)] = x;
            let u = -dec.lambda[k] / dec.lambda[i] * x;
            ut[(i, k)] = u;
            ut[(k, i)] = u;
        }
    }
    // Free U blocks: beta × gamma and gamma × gamma.
    for &i in be {
        for &k in ga {
            let x = rng.random_range(-1.0..1.0);
            ut[(i, k)] = x;
            ut[(k, i)] = x;
        }
    }
    for (ia, &i) in ga.iter().enumerate() {
        for &k in &ga[ia..] {
            let x = rng.random_range(-1.0..1.0);
            ut[(i, k)] = x;
            ut[(k, i)] = x;
        }
    }

    let u = SymMat::from_dense(&(&dec.p * ut * dec.p.transpose()));
    let v = SymMat::from_dense(&(&dec.p * vt * dec.p.transpose()));
    Ok(MemberPair { u, v, cert })
}

/// Outcome of the bounded certificate search.
#[derive(Clone, Debug)]
pub enum SearchOutcome {
    Verified(CoderivCertificate),
    /// No certificate found within the search budget. This is *not* a
    /// negative membership result.
    Inconclusive,
}

/// Best-effort search for a certificate of `(U, V)` at the origin.
///
/// Tries the three one-sided partitions first, then, for `|β| ≤ 4`, size
/// splits of the partition with conjugating factors drawn from the
/// eigenbases of `U` and `V`, solving for a compatible generator on the
/// coupled block. Failure is reported as [`SearchOutcome::Inconclusive`].
pub fn search_zero_certificate(u: &SymMat, v: &SymMat, tol: f64) -> SearchOutcome {
    let nb = u.dim();
    if v.dim() != nb {
        return SearchOutcome::Inconclusive;
    }
    let mut candidates: Vec<CoderivCertificate> = vec![
        CoderivCertificate::from_generator(&vec![1.0; nb]),
        CoderivCertificate::from_generator(&vec![0.0; nb]),
        CoderivCertificate::from_generator(&vec![-1.0; nb]),
    ];

    if (1..=4).contains(&nb) {
        let mut bases = vec![DMatrix::identity(nb, nb)];
        for m in [u, v] {
            if let Ok(dec) = crate::symcone::eig_partition(m, 0.0) {
                bases.push(dec.p.clone());
            }
        }
        for o in bases {
            let ur = o.transpose() * u.to_dense() * &o;
            let vr = o.transpose() * v.to_dense() * &o;
            for npos in 0..=nb {
                for nzero in 0..=(nb - npos) {
                    let nneg = nb - npos - nzero;
                    if let Some(z) = solve_generator(&ur, &vr, npos, nzero, nneg) {
                        if let Ok(cert) = CoderivCertificate::new(upsilon_from_z(&z), o.clone()) {
                            candidates.push(cert);
                        }
                    }
                }
            }
        }
    }

    for cert in candidates {
        if cert.dim() == nb {
            if let Ok(true) = verify_zero_membership(u, v, &cert, tol) {
                return SearchOutcome::Verified(cert);
            }
        }
    }
    SearchOutcome::Inconclusive
}

/// Solves for a generator `z` whose coupling ratios match the rotated pair
/// on the `β₊ × β₋` block, if the required ratios are consistent.
fn solve_generator(
    ur: &DMatrix<f64>,
    vr: &DMatrix<f64>,
    npos: usize,
    nzero: usize,
    nneg: usize,
) -> Option<Vec<f64>> {
    let nb = npos + nzero + nneg;
    let mut z = vec![0.0; nb];
    for zi in z.iter_mut().take(npos) {
        *zi = 1.0;
    }
    for zi in z.iter_mut().skip(npos + nzero) {
        *zi = -1.0;
    }
    if npos == 0 || nneg == 0 {
        return Some(z);
    }
    // Required ratio c = v/(u+v) on a coupled entry; c = z_i/(z_i − z_k).
    let ratio = |i: usize, k: usize| -> Option<f64> {
        let (uu, vv) = (ur[(i, k)], vr[(i, k)]);
        let s = uu + vv;
        if s.abs() < 1e-14 {
            return None;
        }
        let c = vv / s;
        if (0.0..=1.0).contains(&c) {
            Some(c)
        } else {
            None
        }
    };
    let neg0 = npos + nzero;
    // Anchor z on the first coupled pair, then propagate.
    let c00 = ratio(0, neg0)?;
    if c00 <= 0.0 || c00 >= 1.0 {
        return Some(z); // degenerate ratio: keep the unit generator, let verification decide
    }
    z[0] = 1.0;
    z[neg0] = -(1.0 - c00) / c00;
    for k in 1..nneg {
        let c = ratio(0, neg0 + k)?;
        if c <= 0.0 || c >= 1.0 {
            return None;
        }
        z[neg0 + k] = -z[0] * (1.0 - c) / c;
    }
    for i in 1..npos {
        let c = ratio(i, neg0)?;
        if c <= 0.0 || c >= 1.0 {
            return None;
        }
        z[i] = -z[neg0] * c / (1.0 - c);
    }
    Some(z)
}
