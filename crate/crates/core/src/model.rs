//! Problem representation: instances, KKT points, Lagrangian derivatives,
//! and the nonsmooth KKT residual.
//!
//! An instance is anything implementing [`NlsdpInstance`]: a smooth
//! objective, equality constraints, and a family of symmetric-matrix-valued
//! constraint functions required to land in the PSD cone. Matrix-valued
//! primal variables are embedded into `ℝⁿ` through the isometric svec of
//! [`crate::symcone`], so a single flat primal vector serves every
//! instance.
//!
//! Derivatives are supplied analytically by each instance; the
//! finite-difference comparison in [`fd_check`] is a test oracle only and
//! never enters the computational path.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

use crate::error::{Error, Result};
use crate::symcone::{psd_project, svec_dim, SymMat};

/// Evaluation contract for a nonlinear semidefinite program
///
/// ```text
///   minimize    f(x)
///   subject to  h(x) = 0,    g_j(x) ∈ S₊^{p_j},  j = 1..J.
/// ```
///
/// All evaluators must be re-entrant; instances are immutable after
/// construction.
pub trait NlsdpInstance {
    /// Primal dimension (after any svec embedding).
    fn n(&self) -> usize;
    /// Number of equality constraints.
    fn m(&self) -> usize;
    /// Number of PSD blocks.
    fn num_blocks(&self) -> usize;
    /// Order of block `j`.
    fn block_dim(&self, j: usize) -> usize;

    fn objective(&self, x: &DVector<f64>) -> f64;
    fn grad_objective(&self, x: &DVector<f64>) -> DVector<f64>;
    /// Hessian-vector product `∇²f(x) d`.
    fn hess_objective_vec(&self, x: &DVector<f64>, d: &DVector<f64>) -> DVector<f64>;

    fn eq_constraints(&self, x: &DVector<f64>) -> DVector<f64>;
    /// Jacobian of the equality constraints, `m × n`.
    fn jac_eq(&self, x: &DVector<f64>) -> DMatrix<f64>;
    /// Curvature term `Σ_i ζ_i ∇²h_i(x) d`.
    fn eq_curvature(&self, x: &DVector<f64>, d: &DVector<f64>, zeta: &DVector<f64>)
        -> DVector<f64>;

    fn block(&self, j: usize, x: &DVector<f64>) -> SymMat;
    /// Directional derivative `g_j'(x) d`.
    fn block_dir(&self, j: usize, x: &DVector<f64>, d: &DVector<f64>) -> SymMat;
    /// Adjoint `∇g_j(x) M`, satisfying `⟨∇g_j(x) M, d⟩ = ⟨M, g_j'(x) d⟩`.
    fn block_adjoint(&self, j: usize, x: &DVector<f64>, mat: &SymMat) -> DVector<f64>;
    /// Curvature term `d ↦ ∇_x ⟨Γ, g_j''(x)[d, ·]⟩`.
    fn block_curvature(
        &self,
        j: usize,
        x: &DVector<f64>,
        d: &DVector<f64>,
        gamma: &SymMat,
    ) -> DVector<f64>;

    /// Dimension of the stacked residual `n + m + Σ_j p_j(p_j+1)/2`.
    fn residual_dim(&self) -> usize {
        self.n()
            + self.m()
            + (0..self.num_blocks())
                .map(|j| svec_dim(self.block_dim(j)))
                .sum::<usize>()
    }
}

/// A primal-dual candidate: primal point, equality multiplier, and one
/// matrix multiplier per PSD block.
#[derive(Clone, Debug, PartialEq)]
pub struct KktPoint {
    pub x: DVector<f64>,
    pub zeta: DVector<f64>,
    pub gammas: Vec<SymMat>,
}

impl KktPoint {
    pub fn zeros(inst: &dyn NlsdpInstance) -> Self {
        KktPoint {
            x: DVector::zeros(inst.n()),
            zeta: DVector::zeros(inst.m()),
            gammas: (0..inst.num_blocks())
                .map(|j| SymMat::zeros(inst.block_dim(j)))
                .collect(),
        }
    }

    pub fn check_dims(&self, inst: &dyn NlsdpInstance) -> Result<()> {
        if self.x.len() != inst.n() {
            return Err(Error::DimensionMismatch {
                what: "primal point",
                expected: inst.n(),
                got: self.x.len(),
            });
        }
        if self.zeta.len() != inst.m() {
            return Err(Error::DimensionMismatch {
                what: "equality multiplier",
                expected: inst.m(),
                got: self.zeta.len(),
            });
        }
        if self.gammas.len() != inst.num_blocks() {
            return Err(Error::DimensionMismatch {
                what: "block multiplier count",
                expected: inst.num_blocks(),
                got: self.gammas.len(),
            });
        }
        for (j, g) in self.gammas.iter().enumerate() {
            if g.dim() != inst.block_dim(j) {
                return Err(Error::DimensionMismatch {
                    what: "block multiplier order",
                    expected: inst.block_dim(j),
                    got: g.dim(),
                });
            }
        }
        Ok(())
    }

    /// Stacks `(x; ζ; svec Γ_1; …; svec Γ_J)` into one vector.
    pub fn to_full_vector(&self) -> DVector<f64> {
        let mut parts: Vec<f64> = Vec::new();
        parts.extend(self.x.iter());
        parts.extend(self.zeta.iter());
        for g in &self.gammas {
            parts.extend(g.svec().iter());
        }
        DVector::from_vec(parts)
    }

    /// Inverse of [`KktPoint::to_full_vector`] for the given instance shape.
    pub fn from_full_vector(inst: &dyn NlsdpInstance, v: &DVector<f64>) -> Self {
        assert_eq!(v.len(), inst.residual_dim());
        let n = inst.n();
        let m = inst.m();
        let x = DVector::from_fn(n, |i, _| v[i]);
        let zeta = DVector::from_fn(m, |i, _| v[n + i]);
        let mut offset = n + m;
        let mut gammas = Vec::new();
        for j in 0..inst.num_blocks() {
            let p = inst.block_dim(j);
            let s = svec_dim(p);
            let sv = DVector::from_fn(s, |i, _| v[offset + i]);
            gammas.push(SymMat::from_svec(p, &sv));
            offset += s;
        }
        KktPoint { x, zeta, gammas }
    }

    /// Euclidean distance to another point in the stacked coordinates.
    pub fn distance(&self, other: &KktPoint) -> f64 {
        (self.to_full_vector() - other.to_full_vector()).norm()
    }
}

/// Gradient of the Lagrangian in the primal variable:
/// `∇f(x) + ∇h(x) ζ + Σ_j ∇g_j(x) Γ_j`.
pub fn lagrangian_grad(inst: &dyn NlsdpInstance, point: &KktPoint) -> DVector<f64> {
    let mut g = inst.grad_objective(&point.x);
    if inst.m() > 0 {
        g += inst.jac_eq(&point.x).transpose() * &point.zeta;
    }
    for (j, gamma) in point.gammas.iter().enumerate() {
        g += inst.block_adjoint(j, &point.x, gamma);
    }
    g
}

/// Hessian-vector product of the Lagrangian in the primal variable.
pub fn lagrangian_hess_vec(
    inst: &dyn NlsdpInstance,
    point: &KktPoint,
    d: &DVector<f64>,
) -> DVector<f64> {
    let mut h = inst.hess_objective_vec(&point.x, d);
    if inst.m() > 0 {
        h += inst.eq_curvature(&point.x, d, &point.zeta);
    }
    for (j, gamma) in point.gammas.iter().enumerate() {
        h += inst.block_curvature(j, &point.x, d, gamma);
    }
    h
}

/// The stacked nonsmooth KKT residual and its norm.
#[derive(Clone, Debug)]
pub struct KktResidual {
    pub vector: DVector<f64>,
    pub norm: f64,
}

/// Evaluates the nonsmooth KKT residual
///
/// ```text
///   F(x, y) = ( ∇ₓL(x, y) ;  −h(x) ;  −g_j(x) + Π_{S₊}(g_j(x) + Γ_j) … )
/// ```
///
/// in svec coordinates. The point solves the KKT system iff the residual
/// vanishes; the equality component reduces to `−h(x)` because the
/// projection onto `{0}` is identically zero.
pub fn kkt_residual(inst: &dyn NlsdpInstance, point: &KktPoint) -> Result<KktResidual> {
    point.check_dims(inst)?;
    let mut parts: Vec<f64> = Vec::with_capacity(inst.residual_dim());
    parts.extend(lagrangian_grad(inst, point).iter());
    parts.extend(inst.eq_constraints(&point.x).iter().map(|v| -v));
    for (j, gamma) in point.gammas.iter().enumerate() {
        let g = inst.block(j, &point.x);
        let (proj, _) = psd_project(&g.add(gamma), 0.0)?;
        parts.extend(proj.sub(&g).svec().iter());
    }
    let vector = DVector::from_vec(parts);
    let norm = vector.norm();
    Ok(KktResidual { vector, norm })
}

/// Worst relative errors of the analytic derivatives against central
/// finite differences.
#[derive(Clone, Debug, Default)]
pub struct FdReport {
    pub gradient: f64,
    pub hessian: f64,
    pub eq_jacobian: f64,
    pub block_derivative: f64,
    pub adjoint: f64,
    pub eq_curvature: f64,
    pub block_curvature: f64,
}

impl FdReport {
    pub fn worst(&self) -> f64 {
        [
            self.gradient,
            self.hessian,
            self.eq_jacobian,
            self.block_derivative,
            self.adjoint,
            self.eq_curvature,
            self.block_curvature,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Central-finite-difference audit of every derivative evaluator at
/// `(x, y)`, with probe directions drawn from `rng`.
pub fn fd_check(
    inst: &dyn NlsdpInstance,
    point: &KktPoint,
    step: f64,
    rng: &mut impl Rng,
) -> Result<FdReport> {
    if step <= 0.0 {
        return Err(Error::InvalidInput("fd step must be positive".into()));
    }
    point.check_dims(inst)?;
    let x = &point.x;
    let n = inst.n();
    let mut report = FdReport::default();
    let rel = |err: f64, scale: f64| err / scale.max(1.0);

    // Objective gradient.
    let grad = inst.grad_objective(x);
    let mut grad_fd = DVector::zeros(n);
    for l in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[l] += step;
        xm[l] -= step;
        grad_fd[l] = (inst.objective(&xp) - inst.objective(&xm)) / (2.0 * step);
    }
    report.gradient = rel((grad_fd - &grad).norm(), grad.norm());

    let random_dir = |rng: &mut dyn rand::RngCore| {
        let d = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0f64));
        let nrm = d.norm();
        if nrm > 0.0 {
            d / nrm
        } else {
            DVector::zeros(n)
        }
    };

    for _ in 0..4 {
        let d = random_dir(rng);
        let xp = x + step * &d;
        let xm = x - step * &d;

        // Lagrangian-free second derivatives of the objective.
        let hv = inst.hess_objective_vec(x, &d);
        let hv_fd = (inst.grad_objective(&xp) - inst.grad_objective(&xm)) / (2.0 * step);
        report.hessian = report.hessian.max(rel((hv_fd - &hv).norm(), hv.norm()));

        if inst.m() > 0 {
            // Equality Jacobian along d.
            let jd = inst.jac_eq(x) * &d;
            let jd_fd = (inst.eq_constraints(&xp) - inst.eq_constraints(&xm)) / (2.0 * step);
            report.eq_jacobian = report.eq_jacobian.max(rel((jd_fd - &jd).norm(), jd.norm()));

            // Multiplier-weighted equality curvature.
            let hc = inst.eq_curvature(x, &d, &point.zeta);
            let hc_fd = (inst.jac_eq(&xp).transpose() * &point.zeta
                - inst.jac_eq(&xm).transpose() * &point.zeta)
                / (2.0 * step);
            report.eq_curvature = report
                .eq_curvature
                .max(rel((hc_fd - &hc).norm(), hc.norm()));
        }

        for j in 0..inst.num_blocks() {
            let p = inst.block_dim(j);
            let dg = inst.block_dir(j, x, &d);
            let dg_fd = inst.block(j, &xp).sub(&inst.block(j, &xm)).scale(1.0 / (2.0 * step));
            report.block_derivative = report
                .block_derivative
                .max(rel(dg_fd.sub(&dg).norm(), dg.norm()));

            // Adjoint consistency on a random probe matrix.
            let probe = SymMat::from_fn(p, |_, _| rng.random_range(-1.0..1.0));
            let lhs = inst.block_adjoint(j, x, &probe).dot(&d);
            let rhs = probe.inner(&dg);
            report.adjoint = report
                .adjoint
                .max(rel((lhs - rhs).abs(), lhs.abs().max(rhs.abs())));

            // Multiplier-weighted block curvature.
            let gc = inst.block_curvature(j, x, &d, &point.gammas[j]);
            let gc_fd = (inst.block_adjoint(j, &xp, &point.gammas[j])
                - inst.block_adjoint(j, &xm, &point.gammas[j]))
                / (2.0 * step);
            report.block_curvature = report
                .block_curvature
                .max(rel((gc_fd - &gc).norm(), gc.norm()));
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// The quadratic-objective, affine-constraint family
// ---------------------------------------------------------------------------

/// One affine PSD block `x ↦ unsvec(map · x) + offset`.
#[derive(Clone, Debug)]
pub struct AffineBlock {
    pub p: usize,
    /// `svec_dim(p) × n`, acting on the primal vector in svec coordinates.
    pub map: DMatrix<f64>,
    pub offset: SymMat,
}

/// Quadratic objective `½ xᵀHx + cᵀx`, affine equalities `Ax = b`, and
/// affine PSD blocks. Every builtin instance lives in this family.
#[derive(Clone, Debug)]
pub struct QuadraticSdp {
    pub hess: DMatrix<f64>,
    pub lin: DVector<f64>,
    pub eq_mat: DMatrix<f64>,
    pub eq_rhs: DVector<f64>,
    pub blocks: Vec<AffineBlock>,
}

impl QuadraticSdp {
    pub fn validate(&self) -> Result<()> {
        let n = self.hess.nrows();
        if self.hess.ncols() != n {
            return Err(Error::InvalidInput("objective matrix must be square".into()));
        }
        if (self.hess.transpose() - &self.hess).norm() > 1e-12 * self.hess.norm().max(1.0) {
            return Err(Error::InvalidInput("objective matrix must be symmetric".into()));
        }
        if self.lin.len() != n {
            return Err(Error::DimensionMismatch {
                what: "objective linear term",
                expected: n,
                got: self.lin.len(),
            });
        }
        if self.eq_mat.ncols() != n {
            return Err(Error::DimensionMismatch {
                what: "equality matrix columns",
                expected: n,
                got: self.eq_mat.ncols(),
            });
        }
        if self.eq_rhs.len() != self.eq_mat.nrows() {
            return Err(Error::DimensionMismatch {
                what: "equality right-hand side",
                expected: self.eq_mat.nrows(),
                got: self.eq_rhs.len(),
            });
        }
        for b in &self.blocks {
            if b.map.nrows() != svec_dim(b.p) || b.map.ncols() != n {
                return Err(Error::InvalidInput(format!(
                    "block map must be {}×{}, got {}×{}",
                    svec_dim(b.p),
                    n,
                    b.map.nrows(),
                    b.map.ncols()
                )));
            }
            if b.offset.dim() != b.p {
                return Err(Error::DimensionMismatch {
                    what: "block offset order",
                    expected: b.p,
                    got: b.offset.dim(),
                });
            }
        }
        let finite = self.hess.iter().all(|v| v.is_finite())
            && self.lin.iter().all(|v| v.is_finite())
            && self.eq_mat.iter().all(|v| v.is_finite())
            && self.eq_rhs.iter().all(|v| v.is_finite())
            && self
                .blocks
                .iter()
                .all(|b| b.map.iter().all(|v| v.is_finite()) && b.offset.is_finite());
        if !finite {
            return Err(Error::NonFinite("instance data"));
        }
        Ok(())
    }
}

impl NlsdpInstance for QuadraticSdp {
    fn n(&self) -> usize {
        self.hess.nrows()
    }
    fn m(&self) -> usize {
        self.eq_mat.nrows()
    }
    fn num_blocks(&self) -> usize {
        self.blocks.len()
    }
    fn block_dim(&self, j: usize) -> usize {
        self.blocks[j].p
    }

    fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * (x.transpose() * &self.hess * x)[(0, 0)] + self.lin.dot(x)
    }
    fn grad_objective(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.hess * x + &self.lin
    }
    fn hess_objective_vec(&self, _x: &DVector<f64>, d: &DVector<f64>) -> DVector<f64> {
        &self.hess * d
    }

    fn eq_constraints(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.eq_mat * x - &self.eq_rhs
    }
    fn jac_eq(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        self.eq_mat.clone()
    }
    fn eq_curvature(
        &self,
        _x: &DVector<f64>,
        _d: &DVector<f64>,
        _zeta: &DVector<f64>,
    ) -> DVector<f64> {
        DVector::zeros(self.n())
    }

    fn block(&self, j: usize, x: &DVector<f64>) -> SymMat {
        let b = &self.blocks[j];
        SymMat::from_svec(b.p, &(&b.map * x)).add(&b.offset)
    }
    fn block_dir(&self, j: usize, _x: &DVector<f64>, d: &DVector<f64>) -> SymMat {
        let b = &self.blocks[j];
        SymMat::from_svec(b.p, &(&b.map * d))
    }
    fn block_adjoint(&self, j: usize, _x: &DVector<f64>, mat: &SymMat) -> DVector<f64> {
        self.blocks[j].map.transpose() * mat.svec()
    }
    fn block_curvature(
        &self,
        _j: usize,
        _x: &DVector<f64>,
        _d: &DVector<f64>,
        _gamma: &SymMat,
    ) -> DVector<f64> {
        DVector::zeros(self.n())
    }
}

// ---------------------------------------------------------------------------
// Builtin instances
// ---------------------------------------------------------------------------

/// The rank-one-constrained three-by-three instance: minimize
/// `½‖x‖² − ½x₁₁²` over `x ∈ S³` with `x₁₁ = 1` and `x ⪰ 0`.
///
/// Its unique KKT pair is `x̄ = Diag(1, 0, 0)` with both multipliers zero;
/// strict complementarity fails there with a two-dimensional zero block.
pub fn eg2() -> (QuadraticSdp, KktPoint) {
    eg2_scaled(0.0)
}

/// The same instance with the objective weakened by `−(c/2)·x₃₃²`.
///
/// The KKT pair of [`eg2`] stays stationary for every `c`; the reduced
/// second-order margin along the `x₃₃` direction is `1 − c`, so `c > 1`
/// destroys the strong second-order condition while `c < 1` keeps it.
pub fn eg2_scaled(c: f64) -> (QuadraticSdp, KktPoint) {
    let n = svec_dim(3);
    let mut hess = DMatrix::identity(n, n);
    hess[(0, 0)] = 0.0; // remove the x₁₁ curvature
    hess[(5, 5)] = 1.0 - c; // weaken the x₃₃ curvature
    let mut eq_mat = DMatrix::zeros(1, n);
    eq_mat[(0, 0)] = 1.0;
    let inst = QuadraticSdp {
        hess,
        lin: DVector::zeros(n),
        eq_mat,
        eq_rhs: DVector::from_element(1, 1.0),
        blocks: vec![AffineBlock {
            p: 3,
            map: DMatrix::identity(n, n),
            offset: SymMat::zeros(3),
        }],
    };
    let xbar = SymMat::from_diagonal(&[1.0, 0.0, 0.0]);
    let point = KktPoint {
        x: xbar.svec(),
        zeta: DVector::zeros(1),
        gammas: vec![SymMat::zeros(3)],
    };
    (inst, point)
}

/// The textbook kernel basis for [`eg2`]: the five elementary symmetric
/// matrices spanning `{d ∈ S³ : d₁₁ = 0}`, as svec columns. Unnormalized,
/// so the reduced matrix comes out as `Diag(2, 2, 1, 2, 1)`.
pub fn eg2_paper_basis() -> Vec<DVector<f64>> {
    let units = [(0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
    units
        .iter()
        .map(|&(i, j)| {
            let mut m = SymMat::zeros(3);
            m.set(i, j, 1.0);
            m.svec()
        })
        .collect()
}

/// Construction parameters for a seeded random instance with a known
/// KKT pair.
#[derive(Clone, Debug)]
pub struct RandomQsdpParams {
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    /// Per block: number of positive, zero, and negative eigenvalues of
    /// `g_j(x̄) + Γ_j`; the block order is their sum.
    pub partitions: Vec<(usize, usize, usize)>,
    /// When set, the objective curvature is deflated along an engineered
    /// direction so that the strong second-order condition fails with a
    /// reduced eigenvalue of `-magnitude`; requires a nonempty zero block.
    pub break_ssosc: Option<f64>,
}

impl RandomQsdpParams {
    pub fn new(seed: u64) -> Self {
        RandomQsdpParams {
            seed,
            n: 10,
            m: 2,
            partitions: vec![(1, 1, 1)],
            break_ssosc: None,
        }
    }
}

fn random_orthogonal(rng: &mut impl Rng, p: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0));
    let qr = a.qr();
    qr.q()
}

/// Quadratic-objective, affine-constraint instance with a constructed KKT
/// pair at a seeded random point.
///
/// The multiplier blocks are built complementary to the constraint blocks
/// with the requested eigenvalue sign partition, the equality right-hand
/// side is chosen to make the random point feasible, and the objective's
/// linear term closes the stationarity equation. With a positive definite
/// base Hessian the strong second-order condition holds by construction;
/// `break_ssosc` deflates it along a direction engineered to be detectable
/// from the polar side of the reduced cone.
pub fn random_qsdp(params: &RandomQsdpParams) -> Result<(QuadraticSdp, KktPoint)> {
    let n = params.n;
    let m = params.m;
    if params.partitions.is_empty() {
        return Err(Error::InvalidInput("at least one block required".into()));
    }
    let row_budget: usize = m
        + params
            .partitions
            .iter()
            .map(|&(_, b, g)| b * g + svec_dim(g))
            .sum::<usize>();
    if row_budget >= n {
        return Err(Error::InvalidInput(format!(
            "primal dimension {n} too small for the requested constraint structure \
             (needs > {row_budget})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let xbar = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));

    // Orthonormal equality rows keep the nondegeneracy margin healthy.
    let eq_mat = if m > 0 {
        let a = DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
        a.qr().q().transpose()
    } else {
        DMatrix::zeros(0, n)
    };
    let eq_rhs = &eq_mat * &xbar;

    let mut blocks = Vec::new();
    let mut gammas = Vec::new();
    for &(na, nb, ng) in &params.partitions {
        let p = na + nb + ng;
        if p == 0 {
            return Err(Error::InvalidInput("empty block".into()));
        }
        let q = random_orthogonal(&mut rng, p);
        let mut gpos = vec![0.0; p];
        let mut gneg = vec![0.0; p];
        for (i, gp) in gpos.iter_mut().enumerate().take(na) {
            *gp = rng.random_range(1.0..2.0);
            let _ = i;
        }
        for gn in gneg.iter_mut().skip(na + nb) {
            *gn = -rng.random_range(1.0..2.0);
        }
        let gbar = SymMat::from_dense(
            &(&q * DMatrix::from_diagonal(&DVector::from_vec(gpos)) * q.transpose()),
        );
        let gamma = SymMat::from_dense(
            &(&q * DMatrix::from_diagonal(&DVector::from_vec(gneg)) * q.transpose()),
        );
        let map = DMatrix::from_fn(svec_dim(p), n, |_, _| rng.random_range(-1.0..1.0));
        let offset = gbar.sub(&SymMat::from_svec(p, &(&map * &xbar)));
        blocks.push(AffineBlock { p, map, offset });
        gammas.push(gamma);
    }

    // Well-conditioned positive definite base curvature.
    let r = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let mut hess = &r * r.transpose() / (n as f64) + DMatrix::identity(n, n);

    let mut inst = QuadraticSdp {
        hess: hess.clone(),
        lin: DVector::zeros(n),
        eq_mat,
        eq_rhs,
        blocks,
    };
    let point = KktPoint {
        x: xbar.clone(),
        zeta: DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0)),
        gammas,
    };

    if let Some(magnitude) = params.break_ssosc {
        if magnitude <= 0.0 {
            return Err(Error::InvalidInput("break magnitude must be positive".into()));
        }
        let total_zero: usize = params.partitions.iter().map(|&(_, b, _)| b).sum();
        if total_zero == 0 {
            return Err(Error::InvalidInput(
                "breaking the strong second-order condition needs a nonempty zero block".into(),
            ));
        }
        // Close stationarity for the provisional instance, then deflate the
        // reduced curvature along a polar-cone direction.
        inst.lin = -(lagrangian_grad(&inst, &point) - &inst.lin);
        let deflation = engineered_deflation(&inst, &point, magnitude, &mut rng)?;
        hess += deflation;
        inst.hess = hess;
    }

    // Close the stationarity equation with the final Hessian.
    inst.lin = DVector::zeros(n);
    inst.lin = -lagrangian_grad(&inst, &point);
    point.check_dims(&inst)?;
    Ok((inst, point))
}

/// Rank-two symmetric update that turns the reduced curvature matrix into
/// one with an exact negative eigenvalue along the direction generated by
/// a random negative semidefinite multiplier tuple.
fn engineered_deflation(
    inst: &QuadraticSdp,
    point: &KktPoint,
    magnitude: f64,
    rng: &mut impl Rng,
) -> Result<DMatrix<f64>> {
    use crate::reduction;
    let decs = reduction::block_decompositions(inst, point, 1e-8)?;
    let b = reduction::build_b(inst, point, &decs)?;
    let w = reduction::nullspace_basis(&b, &reduction::BasisMode::Orthonormal, 1e-10)?;
    let amaps = reduction::build_amaps(inst, point, &decs, &w)?;
    let m0 = reduction::reduced_hessian(inst, point, &decs, &w)?;

    // Draw a nonzero polar direction η = Σ_j A_jᵀ svec(Θ_j), Θ_j ⪯ 0.
    let mut eta = DVector::zeros(w.ncols());
    for _ in 0..16 {
        let thetas: Vec<SymMat> = decs
            .iter()
            .map(|dec| {
                let nb = dec.beta.len();
                let r = DMatrix::from_fn(nb, nb, |_, _| rng.random_range(-1.0..1.0));
                SymMat::from_dense(&(-(&r * r.transpose())))
            })
            .collect();
        eta = amaps.polar_direction(&thetas);
        if eta.norm() > 1e-6 {
            break;
        }
    }
    if eta.norm() <= 1e-6 {
        return Err(Error::InvalidInput(
            "could not generate a nonzero polar direction for the break".into(),
        ));
    }
    let nu = &eta / eta.norm();
    let s = &m0 * &nu;
    let q = nu.dot(&s);
    // ΔM = −sνᵀ − νsᵀ + (q − μ)ννᵀ makes ν an exact eigenvector with
    // eigenvalue −μ while keeping the complement positive definite.
    let dm = -(&s * nu.transpose()) - (&nu * s.transpose())
        + (q - magnitude) * (&nu * nu.transpose());
    Ok(&w * dm * w.transpose())
}

/// Parses a builtin instance specifier: `eg2`, `eg2_scaled?c=2`, or
/// `random_qsdp?seed=3&n=10&m=2&blocks=1:1:1,2:0:1&break=0.5`.
pub fn builtin_instance(spec: &str) -> Result<(QuadraticSdp, KktPoint)> {
    let (name, query) = match spec.split_once('?') {
        Some((n, q)) => (n, Some(q)),
        None => (spec, None),
    };
    let mut args = std::collections::BTreeMap::new();
    if let Some(q) = query {
        for pair in q.split('&').filter(|s| !s.is_empty()) {
            let (k, v) = pair.split_once('=').ok_or_else(|| {
                Error::InvalidInput(format!("malformed parameter `{pair}` in `{spec}`"))
            })?;
            args.insert(k.to_string(), v.to_string());
        }
    }
    let parse_f64 = |args: &std::collections::BTreeMap<String, String>, key: &str, def: f64| {
        args.get(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("parameter `{key}`: bad number `{v}`")))
            })
            .unwrap_or(Ok(def))
    };
    let parse_usize = |args: &std::collections::BTreeMap<String, String>, key: &str, def: usize| {
        args.get(key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| Error::InvalidInput(format!("parameter `{key}`: bad integer `{v}`")))
            })
            .unwrap_or(Ok(def))
    };
    match name {
        "eg2" => Ok(eg2()),
        "eg2_scaled" => Ok(eg2_scaled(parse_f64(&args, "c", 0.0)?)),
        "random_qsdp" => {
            let mut params = RandomQsdpParams::new(parse_usize(&args, "seed", 0)? as u64);
            params.n = parse_usize(&args, "n", params.n)?;
            params.m = parse_usize(&args, "m", params.m)?;
            if let Some(bspec) = args.get("blocks") {
                let mut partitions = Vec::new();
                for part in bspec.split(',') {
                    let nums: Vec<usize> = part
                        .split(':')
                        .map(|t| {
                            t.parse::<usize>().map_err(|_| {
                                Error::InvalidInput(format!("bad block partition `{part}`"))
                            })
                        })
                        .collect::<Result<_>>()?;
                    if nums.len() != 3 {
                        return Err(Error::InvalidInput(format!(
                            "block partition `{part}` must be pos:zero:neg"
                        )));
                    }
                    partitions.push((nums[0], nums[1], nums[2]));
                }
                params.partitions = partitions;
            }
            if args.contains_key("break") {
                params.break_ssosc = Some(parse_f64(&args, "break", 0.5)?);
            }
            random_qsdp(&params)
        }
        other => Err(Error::UnknownInstance(other.to_string())),
    }
}
