//! Actuator spaces, spectral auxiliary spaces, and the oblique projections
//! between them.
//!
//! With actuators `Ψ_i` and eigenfunctions `e_j`, the Gram matrix
//! `G_ij = (Ψ_i, e_j)` is invertible exactly when `L² = U_M ⊕ E_M^⊥`. Both
//! projections reduce to M×M solves with `G` or `Gᵀ`:
//!
//! * onto `E_M` along `U_M^⊥`: `c = G⁻¹ [(Ψ_i, h)]`, result `Σ c_j e_j`;
//! * onto `U_M` along `E_M^⊥`: `d = G⁻ᵀ [(e_j, h)]`, result `Σ d_i Ψ_i`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, LU};

use crate::error::{invalid, Error, Result};
use crate::fem::{assemble_a, assemble_mass, BoundaryCondition, Field, Mesh};
use crate::linalg::{
    condition_number, finite_rank_norm, generalized_symmetric_eigen, smallest_singular_value,
};

/// Gram matrices with condition number above this are treated as singular.
pub const SINGULAR_PAIR_THRESHOLD: f64 = 1e12;

/// Indicator-function actuators `1_{ω_j}`, `ω_j` centred at `(2j-1)/(2M)`.
#[derive(Debug, Clone)]
pub struct ActuatorSet {
    support_ratio: f64,
    intervals: Vec<(f64, f64)>,
    /// `∫ 1_{ω_j} φ_k`, i.e. `M_h Ψ_j`.
    loads: Vec<Vec<f64>>,
    /// L²-projection of each indicator onto the P1 space.
    fields: Vec<Field>,
}

/// Places `m` equal actuators covering a total length `support_ratio`.
pub fn make_actuators(m: usize, support_ratio: f64, mesh: &Mesh) -> Result<ActuatorSet> {
    if m == 0 {
        return Err(invalid("m", "need at least one actuator"));
    }
    if !(support_ratio > 0.0 && support_ratio < 1.0) {
        return Err(invalid(
            "support_ratio",
            format!("must lie in (0, 1), got {support_ratio}"),
        ));
    }
    let mf = m as f64;
    let half = support_ratio / (2.0 * mf);
    let intervals: Vec<(f64, f64)> = (1..=m)
        .map(|j| {
            let c = (2 * j - 1) as f64 / (2.0 * mf);
            (c - half, c + half)
        })
        .collect();
    let mass = assemble_mass(mesh).factor()?;
    let mut loads = Vec::with_capacity(m);
    let mut fields = Vec::with_capacity(m);
    for &(a, b) in &intervals {
        let load = mesh.indicator_load(a, b);
        let mut psi = load.clone();
        mass.solve_in_place(&mut psi);
        loads.push(load);
        fields.push(Field::new(*mesh, psi)?);
    }
    Ok(ActuatorSet {
        support_ratio,
        intervals,
        loads,
        fields,
    })
}

impl ActuatorSet {
    /// Arbitrary actuator fields on a shared mesh (no interval geometry).
    pub fn custom(fields: Vec<Field>) -> Result<Self> {
        let first = fields
            .first()
            .ok_or_else(|| invalid("fields", "need at least one actuator"))?;
        let mesh = *first.mesh();
        let mass = assemble_mass(&mesh);
        let loads = fields
            .iter()
            .map(|f| mass.apply(f).map(Field::into_values))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            support_ratio: 0.0,
            intervals: Vec::new(),
            loads,
            fields,
        })
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn support_ratio(&self) -> f64 {
        self.support_ratio
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn total_support(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn loads(&self) -> &[Vec<f64>] {
        &self.loads
    }

    pub fn mesh(&self) -> &Mesh {
        self.fields[0].mesh()
    }

    /// `[(Ψ_i, h)]_i`
    pub fn moments(&self, h: &Field) -> Result<DVector<f64>> {
        if h.mesh() != self.mesh() {
            return Err(Error::MeshMismatch);
        }
        Ok(DVector::from_iterator(
            self.len(),
            self.loads
                .iter()
                .map(|b| b.iter().zip(h.values()).map(|(x, y)| x * y).sum::<f64>()),
        ))
    }

    /// `Σ d_i Ψ_i`
    pub fn combine(&self, coeffs: &DVector<f64>) -> Field {
        combine_fields(&self.fields, coeffs)
    }

    /// `M_h Σ d_i Ψ_i = Σ d_i b_i`, the load vector of a control.
    pub fn combine_loads(&self, coeffs: &DVector<f64>, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (load, &d) in self.loads.iter().zip(coeffs.iter()) {
            for (o, b) in out.iter_mut().zip(load) {
                *o += d * b;
            }
        }
    }
}

/// First `M` eigenfunctions of `-νΔ + 1` under the mesh boundary condition.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    nu: f64,
    eigenvalues: Vec<f64>,
    fields: Vec<Field>,
}

/// Neumann: `cos((j-1)πx)`, `α_j = ν((j-1)π)² + 1`.
/// Dirichlet: `sin(jπx)`, `α_j = ν(jπ)² + 1`.
pub fn make_eigenbasis(m: usize, nu: f64, mesh: &Mesh) -> Result<EigenBasis> {
    if m == 0 {
        return Err(invalid("m", "need at least one eigenfunction"));
    }
    if !(nu > 0.0) {
        return Err(invalid("nu", format!("must be positive, got {nu}")));
    }
    let (eigenvalues, fields) = (1..=m)
        .map(|j| {
            let freq = match mesh.bc() {
                BoundaryCondition::NeumannHomogeneous => (j - 1) as f64 * PI,
                BoundaryCondition::DirichletHomogeneous => j as f64 * PI,
            };
            let field = match mesh.bc() {
                BoundaryCondition::NeumannHomogeneous => {
                    Field::from_fn(*mesh, |x| (freq * x).cos())
                }
                BoundaryCondition::DirichletHomogeneous => {
                    let mut f = Field::from_fn(*mesh, |x| (freq * x).sin());
                    let n = f.len();
                    f.values_mut()[0] = 0.0;
                    f.values_mut()[n - 1] = 0.0;
                    f
                }
            };
            (nu * freq * freq + 1.0, field)
        })
        .unzip();
    Ok(EigenBasis {
        nu,
        eigenvalues,
        fields,
    })
}

impl EigenBasis {
    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `α̂_M`, the largest included eigenvalue.
    pub fn alpha_hat(&self) -> f64 {
        *self.eigenvalues.last().expect("nonempty basis")
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn mesh(&self) -> &Mesh {
        self.fields[0].mesh()
    }

    /// `[(e_j, h)]_j`
    pub fn moments(&self, h: &Field) -> Result<DVector<f64>> {
        if h.mesh() != self.mesh() {
            return Err(Error::MeshMismatch);
        }
        let mesh = self.mesh();
        Ok(DVector::from_iterator(
            self.len(),
            self.fields
                .iter()
                .map(|e| mesh.inner_slices(e.values(), h.values())),
        ))
    }

    pub fn combine(&self, coeffs: &DVector<f64>) -> Field {
        combine_fields(&self.fields, coeffs)
    }
}

fn combine_fields(fields: &[Field], coeffs: &DVector<f64>) -> Field {
    let mut out = Field::zeros(*fields[0].mesh());
    for (f, &c) in fields.iter().zip(coeffs.iter()) {
        out.axpy(c, f).expect("fields share a mesh");
    }
    out
}

fn gram_matrix(a: &[Field], b: &[Field]) -> DMatrix<f64> {
    let mesh = *a[0].mesh();
    DMatrix::from_fn(a.len(), b.len(), |i, j| {
        mesh.inner_slices(a[i].values(), b[j].values())
    })
}

/// Actuators and eigenfunctions with their Gram matrices and cached factors.
#[derive(Debug, Clone)]
pub struct SubspacePair {
    actuators: ActuatorSet,
    eigen: EigenBasis,
    gram: DMatrix<f64>,
    gram_u: DMatrix<f64>,
    gram_e: DMatrix<f64>,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    lu_t: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    cond: f64,
}

/// Assembles the Gram matrices and rejects pairs that are not a direct sum.
pub fn build_pair(actuators: ActuatorSet, eigen: EigenBasis) -> Result<SubspacePair> {
    if actuators.len() != eigen.len() {
        return Err(Error::DimensionMismatch {
            actuators: actuators.len(),
            eigenfunctions: eigen.len(),
        });
    }
    if actuators.mesh() != eigen.mesh() {
        return Err(Error::MeshMismatch);
    }
    let gram = gram_matrix(actuators.fields(), eigen.fields());
    let gram_u = gram_matrix(actuators.fields(), actuators.fields());
    let gram_e = gram_matrix(eigen.fields(), eigen.fields());
    let cond = condition_number(&gram);
    // cosines (Ψ_i, e_j)/(‖Ψ_i‖‖e_j‖): a near-zero singular value means the
    // spaces are nearly orthogonal even when G itself is well scaled
    let cosines = DMatrix::from_fn(gram.nrows(), gram.ncols(), |i, j| {
        gram[(i, j)] / (gram_u[(i, i)] * gram_e[(j, j)]).sqrt()
    });
    let sigma_min = smallest_singular_value(&cosines);
    let severity = cond.max(1.0 / sigma_min);
    if !(severity <= SINGULAR_PAIR_THRESHOLD) {
        return Err(Error::SingularPair { cond: severity });
    }
    let lu = gram.clone().lu();
    let lu_t = gram.transpose().lu();
    Ok(SubspacePair {
        actuators,
        eigen,
        gram,
        gram_u,
        gram_e,
        lu,
        lu_t,
        cond,
    })
}

impl SubspacePair {
    /// Paper-style family: `m` actuators of total length `support_ratio`
    /// and the first `m` eigenfunctions.
    pub fn standard(m: usize, support_ratio: f64, nu: f64, mesh: &Mesh) -> Result<Self> {
        build_pair(
            make_actuators(m, support_ratio, mesh)?,
            make_eigenbasis(m, nu, mesh)?,
        )
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn actuators(&self) -> &ActuatorSet {
        &self.actuators
    }

    pub fn eigen(&self) -> &EigenBasis {
        &self.eigen
    }

    pub fn mesh(&self) -> &Mesh {
        self.actuators.mesh()
    }

    /// `G_ij = (Ψ_i, e_j)`
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn gram_u(&self) -> &DMatrix<f64> {
        &self.gram_u
    }

    pub fn gram_e(&self) -> &DMatrix<f64> {
        &self.gram_e
    }

    pub fn condition_number(&self) -> f64 {
        self.cond
    }

    pub(crate) fn solve_gram(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.lu.solve(rhs).expect("gram checked nonsingular")
    }

    pub(crate) fn solve_gram_t(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.lu_t.solve(rhs).expect("gram checked nonsingular")
    }

    pub(crate) fn gram_inverse(&self) -> DMatrix<f64> {
        self.lu.try_inverse().expect("gram checked nonsingular")
    }

    /// Eigen-coefficients of the projection onto `E_M` along `U_M^⊥`.
    pub fn e_coefficients(&self, h: &Field) -> Result<DVector<f64>> {
        Ok(self.solve_gram(&self.actuators.moments(h)?))
    }

    /// Projection onto `E_M` along `U_M^⊥`.
    pub fn project_e_along_u_perp(&self, h: &Field) -> Result<Field> {
        Ok(self.eigen.combine(&self.e_coefficients(h)?))
    }

    /// Projection onto `U_M` along `E_M^⊥`.
    pub fn project_u_along_e_perp(&self, h: &Field) -> Result<Field> {
        let d = self.solve_gram_t(&self.eigen.moments(h)?);
        Ok(self.actuators.combine(&d))
    }

    /// Mass-weighted L² operator norm of the projection onto `U_M` along `E_M^⊥`.
    pub fn c_p(&self) -> Result<f64> {
        // h ↦ Ψ G⁻ᵀ Eᵀ M h
        let core = self.gram_inverse().transpose();
        finite_rank_norm(&self.gram_u, &core, &self.gram_e)
    }

    /// Poincaré-like constant for the actuator constraints of this pair.
    pub fn beta_mplus(&self) -> Result<f64> {
        estimate_beta_mplus(&self.actuators, self.eigen.nu)
    }
}

/// Free-function form of [`SubspacePair::project_e_along_u_perp`].
pub fn project_e_along_u_perp(pair: &SubspacePair, h: &Field) -> Result<Field> {
    pair.project_e_along_u_perp(h)
}

/// Free-function form of [`SubspacePair::project_u_along_e_perp`].
pub fn project_u_along_e_perp(pair: &SubspacePair, h: &Field) -> Result<Field> {
    pair.project_u_along_e_perp(h)
}

/// Operator norm of the projection onto `U_M` along `E_M^⊥`.
pub fn estimate_c_p(pair: &SubspacePair) -> Result<f64> {
    pair.c_p()
}

/// `β_{M+} = min ‖h‖_V / ‖h‖` over `h ≠ 0` with `(Ψ_i, h) = 0` for every actuator.
pub fn estimate_beta_mplus(actuators: &ActuatorSet, nu: f64) -> Result<f64> {
    poincare_constant(actuators.mesh(), nu, actuators.loads())
}

const RITZ_TOL: f64 = 1e-12;
const RITZ_MAX_ITER: usize = 2000;

/// Square root of the smallest eigenvalue of `(A_h, M_h)` restricted to
/// `{h : cᵀ h = 0 for every c in constraints}`.
///
/// Block inverse iteration on the constrained pencil with a Rayleigh–Ritz
/// step per sweep. Each constrained solve uses the Schur complement
/// `Cᵀ A⁻¹ C` of the saddle-point system.
pub fn poincare_constant(mesh: &Mesh, nu: f64, constraints: &[Vec<f64>]) -> Result<f64> {
    let n = mesh.n_nodes();
    let a = assemble_a(mesh, nu)?;
    let mass = assemble_mass(mesh);
    let factor = a.factor()?;
    let m = constraints.len();
    if m + 2 >= n {
        return Err(invalid("constraints", "too many constraints for the mesh"));
    }

    // W = A⁻¹ C, S = Cᵀ W
    let w: Vec<Vec<f64>> = constraints
        .iter()
        .map(|c| {
            let mut x = c.clone();
            factor.solve_in_place(&mut x);
            x
        })
        .collect();
    let schur = if m > 0 {
        let s = DMatrix::from_fn(m, m, |i, j| dot(&constraints[i], &w[j]));
        Some(s.lu())
    } else {
        None
    };
    let constrained_solve = |rhs: &[f64]| -> Vec<f64> {
        let mut x = rhs.to_vec();
        factor.solve_in_place(&mut x);
        if let Some(s) = &schur {
            let t = DVector::from_iterator(m, constraints.iter().map(|c| dot(c, &x)));
            let mu = s.solve(&t).expect("Schur complement of SPD system");
            for (wi, &mi) in w.iter().zip(mu.iter()) {
                for (xk, wk) in x.iter_mut().zip(wi) {
                    *xk -= mi * wk;
                }
            }
        }
        x
    };

    let p = (m + 3).min(n - m - 1);
    let mut block: Vec<Vec<f64>> = (0..p)
        .map(|j| {
            let start: Vec<f64> = mesh
                .nodes()
                .map(|x| (j as f64 * PI * x).cos() + 0.1 * x)
                .collect();
            constrained_solve(&start)
        })
        .collect();

    let mut tmp = vec![0.0; n];
    let mut previous = f64::INFINITY;
    for _ in 0..RITZ_MAX_ITER {
        // Rayleigh–Ritz on span(block)
        let mut ak = DMatrix::zeros(p, p);
        let mut mk = DMatrix::zeros(p, p);
        let av: Vec<Vec<f64>> = block
            .iter()
            .map(|v| {
                a.apply_slice(v, &mut tmp);
                tmp.clone()
            })
            .collect();
        for i in 0..p {
            for j in i..p {
                let aij = dot(&block[i], &av[j]);
                let mij = mesh.inner_slices(&block[i], &block[j]);
                ak[(i, j)] = aij;
                ak[(j, i)] = aij;
                mk[(i, j)] = mij;
                mk[(j, i)] = mij;
            }
        }
        let (values, vectors) = generalized_symmetric_eigen(&ak, &mk)?;
        let lowest = values[0];
        let ritz: Vec<Vec<f64>> = (0..p)
            .map(|c| {
                let mut v = vec![0.0; n];
                for (k, b) in block.iter().enumerate() {
                    let s = vectors[(k, c)];
                    for (vi, bi) in v.iter_mut().zip(b) {
                        *vi += s * bi;
                    }
                }
                v
            })
            .collect();
        if (previous - lowest).abs() <= RITZ_TOL * lowest.abs() {
            return Ok(lowest.max(0.0).sqrt());
        }
        previous = lowest;
        block = ritz
            .iter()
            .map(|v| {
                mass.apply_slice(v, &mut tmp);
                constrained_solve(&tmp)
            })
            .collect();
    }
    log::warn!("constrained eigen-iteration hit the iteration cap");
    Ok(previous.max(0.0).sqrt())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One row of the subspace diagnostics table.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PairDiagnostics {
    pub m: usize,
    pub alpha_hat: f64,
    pub c_p: f64,
    /// Running maximum of `c_p` over the M values reported so far.
    pub c_p_running_max: f64,
    pub beta_mplus: f64,
    pub cond: f64,
}

/// Diagnostics of the standard family for each M in `ms`.
pub fn pair_diagnostics(
    ms: &[usize],
    support_ratio: f64,
    nu: f64,
    mesh: &Mesh,
) -> Result<Vec<PairDiagnostics>> {
    let mut running = 0.0_f64;
    let mut rows = Vec::with_capacity(ms.len());
    for &m in ms {
        let pair = SubspacePair::standard(m, support_ratio, nu, mesh)?;
        let c_p = pair.c_p()?;
        running = running.max(c_p);
        rows.push(PairDiagnostics {
            m,
            alpha_hat: pair.eigen().alpha_hat(),
            c_p,
            c_p_running_max: running,
            beta_mplus: pair.beta_mplus()?,
            cond: pair.condition_number(),
        });
    }
    Ok(rows)
}
