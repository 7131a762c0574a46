//! Piecewise-linear finite elements on a uniform mesh of `[0, 1]`.
//!
//! All operators are symmetric tridiagonal. Inner products use the consistent
//! (non-lumped) mass matrix. Homogeneous Dirichlet conditions are imposed at
//! solve time by row/column elimination with a unit diagonal, so the assembled
//! operators always describe the unconstrained bilinear forms.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Homogeneous boundary condition imposed on both ends of `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    NeumannHomogeneous,
    DirichletHomogeneous,
}

/// Uniform mesh with nodes `x_i = i * h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh {
    n_nodes: usize,
    h: f64,
    bc: BoundaryCondition,
}

/// Builds a uniform mesh of `[0, 1]` with `n_nodes` nodes.
pub fn build_mesh(n_nodes: usize, bc: BoundaryCondition) -> Result<Mesh> {
    Mesh::new(n_nodes, bc)
}

impl Mesh {
    pub fn new(n_nodes: usize, bc: BoundaryCondition) -> Result<Self> {
        if n_nodes < 3 {
            return Err(Error::TooFewNodes(n_nodes));
        }
        Ok(Self {
            n_nodes,
            h: 1.0 / (n_nodes - 1) as f64,
            bc,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn node(&self, i: usize) -> f64 {
        // the last node is pinned to 1 exactly
        if i + 1 == self.n_nodes {
            1.0
        } else {
            i as f64 * self.h
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_nodes).map(move |i| self.node(i))
    }

    /// `fᵀ M_h g` without materializing the mass matrix.
    pub fn inner_slices(&self, f: &[f64], g: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.n_nodes);
        debug_assert_eq!(g.len(), self.n_nodes);
        let mut acc = 0.0;
        for i in 0..self.n_nodes - 1 {
            let (f0, f1, g0, g1) = (f[i], f[i + 1], g[i], g[i + 1]);
            acc += 2.0 * f0 * g0 + f0 * g1 + f1 * g0 + 2.0 * f1 * g1;
        }
        acc * self.h / 6.0
    }

    /// Exact integrals `∫ 1_(a,b) φ_i dx` against every hat function.
    pub fn indicator_load(&self, a: f64, b: f64) -> Vec<f64> {
        let mut load = vec![0.0; self.n_nodes];
        let h = self.h;
        for i in 0..self.n_nodes - 1 {
            let (x0, x1) = (self.node(i), self.node(i + 1));
            let lo = a.max(x0);
            let hi = b.min(x1);
            if hi <= lo {
                continue;
            }
            // φ_i = (x1 - x)/h and φ_{i+1} = (x - x0)/h on this element
            let len = hi - lo;
            let mid = 0.5 * (lo + hi);
            load[i] += len * (x1 - mid) / h;
            load[i + 1] += len * (mid - x0) / h;
        }
        load
    }
}

/// Nodal coefficients of a P1 function on a given mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    mesh: Mesh,
    values: Vec<f64>,
}

impl Field {
    pub fn new(mesh: Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_nodes {
            return Err(Error::LengthMismatch {
                expected: mesh.n_nodes,
                got: values.len(),
            });
        }
        Ok(Self { mesh, values })
    }

    pub fn zeros(mesh: Mesh) -> Self {
        Self {
            mesh,
            values: vec![0.0; mesh.n_nodes],
        }
    }

    pub fn constant(mesh: Mesh, c: f64) -> Self {
        Self {
            mesh,
            values: vec![c; mesh.n_nodes],
        }
    }

    /// Samples `f` at the nodes.
    pub fn from_fn(mesh: Mesh, f: impl Fn(f64) -> f64) -> Self {
        Self {
            mesh,
            values: mesh.nodes().map(f).collect(),
        }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn check_mesh(&self, other: &Field) -> Result<()> {
        if self.mesh == other.mesh {
            Ok(())
        } else {
            Err(Error::MeshMismatch)
        }
    }

    /// L² norm through the consistent mass matrix.
    pub fn norm(&self) -> f64 {
        self.mesh
            .inner_slices(&self.values, &self.values)
            .max(0.0)
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> Field {
        self.map(|v| v * s)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            mesh: self.mesh,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `self + s * other`
    pub fn add_scaled(&self, s: f64, other: &Field) -> Result<Field> {
        self.check_mesh(other)?;
        Ok(Field {
            mesh: self.mesh,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + s * b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.add_scaled(-1.0, other)
    }

    /// In-place `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Field) -> Result<()> {
        self.check_mesh(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
        Ok(())
    }
}

/// L² inner product `fᵀ M_h g`.
pub fn l2_inner(f: &Field, g: &Field) -> Result<f64> {
    f.check_mesh(g)?;
    Ok(f.mesh.inner_slices(&f.values, &g.values))
}

/// `∫ f g⁺` for piecewise-linear `f` and `g`, exact: elements are split where
/// `g` changes sign and each piece is integrated by Simpson's rule.
pub fn inner_positive_part(f: &Field, g: &Field) -> Result<f64> {
    f.check_mesh(g)?;
    let h = f.mesh.h;
    let (fv, gv) = (&f.values, &g.values);
    let simpson = |len: f64, f0: f64, f1: f64, g0: f64, g1: f64| {
        len / 6.0 * (f0 * g0 + (f0 + f1) * (g0 + g1) + f1 * g1)
    };
    let mut sum = 0.0;
    for e in 0..fv.len() - 1 {
        let (f0, f1, g0, g1) = (fv[e], fv[e + 1], gv[e], gv[e + 1]);
        if g0 >= 0.0 && g1 >= 0.0 {
            sum += simpson(h, f0, f1, g0, g1);
        } else if g0 > 0.0 {
            let t = g0 / (g0 - g1);
            sum += simpson(t * h, f0, f0 + t * (f1 - f0), g0, 0.0);
        } else if g1 > 0.0 {
            let t = g0 / (g0 - g1);
            sum += simpson((1.0 - t) * h, f0 + t * (f1 - f0), f1, 0.0, g1);
        }
    }
    Ok(sum)
}

/// `‖f⁺‖_{L²}` of the piecewise-linear `f`, in closed form per element.
pub fn positive_part_norm(f: &Field) -> f64 {
    positive_part_norm_slice(&f.values, f.mesh.h)
}

pub(crate) fn positive_part_norm_slice(values: &[f64], h: f64) -> f64 {
    let mut sum = 0.0;
    for w in values.windows(2) {
        let (a, b) = (w[0], w[1]);
        sum += match (a > 0.0, b > 0.0) {
            (true, true) => h * (a * a + a * b + b * b) / 3.0,
            (true, false) => h * a / (a - b) * a * a / 3.0,
            (false, true) => h * b / (b - a) * b * b / 3.0,
            (false, false) => 0.0,
        };
    }
    sum.sqrt()
}

/// Symmetric tridiagonal matrix stored by its diagonal and off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedOperator {
    mesh: Mesh,
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl BandedOperator {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Entries `(i, i+1)` = `(i+1, i)`.
    pub fn off_diag(&self) -> &[f64] {
        &self.off
    }

    /// Interior stencil `(off, diag, off)` at row `i`.
    pub fn row(&self, i: usize) -> (f64, f64, f64) {
        let n = self.diag.len();
        let lo = if i > 0 { self.off[i - 1] } else { 0.0 };
        let up = if i + 1 < n { self.off[i] } else { 0.0 };
        (lo, self.diag[i], up)
    }

    pub fn apply_slice(&self, x: &[f64], out: &mut [f64]) {
        let n = self.diag.len();
        debug_assert_eq!(x.len(), n);
        debug_assert_eq!(out.len(), n);
        out[0] = self.diag[0] * x[0] + self.off[0] * x[1];
        for i in 1..n - 1 {
            out[i] = self.off[i - 1] * x[i - 1] + self.diag[i] * x[i] + self.off[i] * x[i + 1];
        }
        out[n - 1] = self.off[n - 2] * x[n - 2] + self.diag[n - 1] * x[n - 1];
    }

    pub fn apply(&self, x: &Field) -> Result<Field> {
        if *x.mesh() != self.mesh {
            return Err(Error::MeshMismatch);
        }
        let mut out = Field::zeros(self.mesh);
        self.apply_slice(x.values(), out.values_mut());
        Ok(out)
    }

    /// `xᵀ A x`
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let n = self.diag.len();
        let mut acc = 0.0;
        for i in 0..n {
            acc += self.diag[i] * x[i] * x[i];
        }
        for i in 0..n - 1 {
            acc += 2.0 * self.off[i] * x[i] * x[i + 1];
        }
        acc
    }

    /// `alpha * self + beta * other`
    pub fn combine(&self, alpha: f64, other: &BandedOperator, beta: f64) -> Result<Self> {
        if self.mesh != other.mesh {
            return Err(Error::MeshMismatch);
        }
        let mix = |a: &[f64], b: &[f64]| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| alpha * x + beta * y).collect()
        };
        Ok(Self {
            mesh: self.mesh,
            diag: mix(&self.diag, &other.diag),
            off: mix(&self.off, &other.off),
        })
    }

    /// Copy with Dirichlet rows/columns replaced by a unit diagonal
    /// (no-op under Neumann).
    pub fn constrained(&self) -> Self {
        let mut out = self.clone();
        if self.mesh.bc == BoundaryCondition::DirichletHomogeneous {
            let n = out.diag.len();
            out.diag[0] = 1.0;
            out.diag[n - 1] = 1.0;
            out.off[0] = 0.0;
            out.off[n - 2] = 0.0;
        }
        out
    }

    /// LDLᵀ factorization of the constrained operator.
    pub fn factor(&self) -> Result<TridiagonalFactor> {
        TridiagonalFactor::new(&self.constrained())
    }
}

/// P1 mass matrix; interior row `(h/6, 2h/3, h/6)`.
pub fn assemble_mass(mesh: &Mesh) -> BandedOperator {
    let n = mesh.n_nodes;
    let h = mesh.h;
    let mut diag = vec![2.0 * h / 3.0; n];
    diag[0] = h / 3.0;
    diag[n - 1] = h / 3.0;
    BandedOperator {
        mesh: *mesh,
        diag,
        off: vec![h / 6.0; n - 1],
    }
}

/// P1 stiffness matrix for `(∇y, ∇z)`; interior row `(-1/h, 2/h, -1/h)`.
pub fn assemble_stiffness(mesh: &Mesh) -> BandedOperator {
    let n = mesh.n_nodes;
    let h = mesh.h;
    let mut diag = vec![2.0 / h; n];
    diag[0] = 1.0 / h;
    diag[n - 1] = 1.0 / h;
    BandedOperator {
        mesh: *mesh,
        diag,
        off: vec![-1.0 / h; n - 1],
    }
}

/// `A_h = nu * K_h + M_h`, the discrete `-nu Δ + 1`.
pub fn assemble_a(mesh: &Mesh, nu: f64) -> Result<BandedOperator> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(invalid("nu", format!("must be positive, got {nu}")));
    }
    assemble_stiffness(mesh).combine(nu, &assemble_mass(mesh), 1.0)
}

/// Cached LDLᵀ factors of a symmetric positive definite tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct TridiagonalFactor {
    bc: BoundaryCondition,
    // l_i = off_i / d_i
    lower: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl TridiagonalFactor {
    fn new(op: &BandedOperator) -> Result<Self> {
        let n = op.diag.len();
        let mut lower = vec![0.0; n - 1];
        let mut inv_pivot = vec![0.0; n];
        let mut d = op.diag[0];
        for i in 0..n {
            if i > 0 {
                d = op.diag[i] - lower[i - 1] * op.off[i - 1];
            }
            let scale = op.diag[i].abs().max(f64::MIN_POSITIVE);
            if !(d > 1e-14 * scale) {
                return Err(Error::NotSpd { row: i, pivot: d });
            }
            inv_pivot[i] = 1.0 / d;
            if i + 1 < n {
                lower[i] = op.off[i] / d;
            }
        }
        Ok(Self {
            bc: op.mesh.bc,
            lower,
            inv_pivot,
        })
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.inv_pivot.len();
        debug_assert_eq!(x.len(), n);
        if self.bc == BoundaryCondition::DirichletHomogeneous {
            x[0] = 0.0;
            x[n - 1] = 0.0;
        }
        for i in 1..n {
            x[i] -= self.lower[i - 1] * x[i - 1];
        }
        for i in 0..n {
            x[i] *= self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.lower[i] * x[i + 1];
        }
    }
}

/// Direct O(n) solve of `op x = rhs`, Dirichlet constraints applied per the mesh.
pub fn solve_spd(op: &BandedOperator, rhs: &Field) -> Result<Field> {
    if *rhs.mesh() != op.mesh {
        return Err(Error::MeshMismatch);
    }
    let factor = op.factor()?;
    let mut x = rhs.clone();
    factor.solve_in_place(x.values_mut());
    Ok(x)
}
