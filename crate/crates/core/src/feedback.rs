//! The explicit oblique-projection feedback `K = -λ P_U^{E⊥} A P_E^{U⊥}`.
//!
//! `apply` returns the control that is *added* to the right-hand side of the
//! controlled equation, so the closed loop reads `ż + Az + … = K z`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::fem::Field;
use crate::linalg::finite_rank_norm;
use crate::spaces::SubspacePair;

#[derive(Debug, Clone)]
pub struct FeedbackOperator {
    pair: SubspacePair,
    lambda: f64,
    /// Actuator moments `[(Ψ_i, z)]` to actuator coefficients of `K z`.
    core: DMatrix<f64>,
}

/// Assembles the M×M core `-λ G⁻ᵀ G_E diag(α) G⁻¹`.
///
/// `P_E z = Σ c_j e_j` with `c = G⁻¹ [(Ψ_i, z)]`; since `A e_j = α_j e_j`,
/// `A P_E z = E diag(α) c`, whose projection onto `U_M` along `E_M^⊥` has
/// actuator coefficients `G⁻ᵀ G_E diag(α) c`.
pub fn build_feedback(pair: SubspacePair, lambda: f64) -> Result<FeedbackOperator> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(invalid("lambda", format!("must be nonnegative, got {lambda}")));
    }
    let g_inv = pair.gram_inverse();
    let alpha = DMatrix::from_diagonal(&DVector::from_column_slice(pair.eigen().eigenvalues()));
    let core = -lambda * g_inv.transpose() * pair.gram_e() * alpha * &g_inv;
    Ok(FeedbackOperator { pair, lambda, core })
}

impl FeedbackOperator {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn pair(&self) -> &SubspacePair {
        &self.pair
    }

    pub fn core(&self) -> &DMatrix<f64> {
        &self.core
    }

    /// Actuator coefficients `u_i` of `K z = Σ u_i Ψ_i`.
    pub fn coefficients(&self, z: &Field) -> Result<DVector<f64>> {
        Ok(&self.core * self.pair.actuators().moments(z)?)
    }

    pub fn apply(&self, z: &Field) -> Result<Field> {
        Ok(self.pair.actuators().combine(&self.coefficients(z)?))
    }

    /// Mass-weighted L² operator norm of `K`.
    pub fn norm(&self) -> Result<f64> {
        let gu = self.pair.gram_u();
        finite_rank_norm(gu, &self.core, gu)
    }

    pub fn alpha_hat(&self) -> f64 {
        self.pair.eigen().alpha_hat()
    }

    pub fn certify(&self) -> Result<BoundReport> {
        let c_p = self.pair.c_p()?;
        let computed_norm = self.norm()?;
        let bound = self.lambda * self.alpha_hat() * c_p * c_p;
        Ok(BoundReport {
            m: self.pair.dim(),
            lambda: self.lambda,
            alpha_hat: self.alpha_hat(),
            c_p,
            computed_norm,
            bound,
            margin: bound - computed_norm,
        })
    }
}

/// Free-function form of [`FeedbackOperator::apply`].
pub fn apply_feedback(op: &FeedbackOperator, z: &Field) -> Result<Field> {
    op.apply(z)
}

/// Free-function form of [`FeedbackOperator::certify`].
pub fn certify_bounds(op: &FeedbackOperator) -> Result<BoundReport> {
    op.certify()
}

/// Relative rounding slack when comparing the computed norm with its bound.
pub const BOUND_RELATIVE_SLACK: f64 = 1e-10;

/// Computed norm of `K` against `λ α̂_M C_P²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub m: usize,
    pub lambda: f64,
    pub alpha_hat: f64,
    pub c_p: f64,
    pub computed_norm: f64,
    pub bound: f64,
    pub margin: f64,
}

impl BoundReport {
    pub const CSV_HEADER: &'static str = "M,lambda,alpha_hat,C_P,computed_norm,bound,margin";

    /// The bound is attained for the standard actuator family, so the
    /// comparison allows rounding at `BOUND_RELATIVE_SLACK` of the bound.
    pub fn holds(&self) -> bool {
        self.margin >= -BOUND_RELATIVE_SLACK * self.bound
    }

    pub fn csv_row(&self) -> String {
        use crate::io::fmt_f64 as f;
        format!(
            "{},{},{},{},{},{},{}",
            self.m,
            f(self.lambda),
            f(self.alpha_hat),
            f(self.c_p),
            f(self.computed_norm),
            f(self.bound),
            f(self.margin)
        )
    }

    /// Bound on `‖K z‖_{L²(ℝ₊, L²)}` for a closed loop decaying at rate `mu`.
    pub fn control_energy_bound(&self, mu: f64, z0_norm: f64) -> f64 {
        self.bound / mu * z0_norm
    }
}

/// Sufficiency margins `Ξ₁(M)` and `Ξ₂(λ)` for a chosen split `(γ₁, γ₂)`.
///
/// Stabilization at rate `μ` is guaranteed once both are at least `4μ` and
/// `2λ - (2 - γ₁)(γ₂⁻¹ - 1) > 0`. The constants are not tight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SufficiencyMargins {
    gamma1: f64,
    gamma2: f64,
    c_rc: f64,
}

impl SufficiencyMargins {
    /// `c_rc` bounds `a·1 + b·∇` as a map from V to L².
    pub fn new(gamma1: f64, gamma2: f64, c_rc: f64) -> Result<Self> {
        if !(gamma1 > 0.0 && gamma1 < 2.0) {
            return Err(invalid("gamma1", "must lie in (0, 2)"));
        }
        if !(gamma2 > 0.0 && gamma2 < 1.0) {
            return Err(invalid("gamma2", "must lie in (0, 1)"));
        }
        if !(c_rc >= 0.0) {
            return Err(invalid("c_rc", "must be nonnegative"));
        }
        Ok(Self {
            gamma1,
            gamma2,
            c_rc,
        })
    }

    fn coupling(&self) -> f64 {
        2.0 / self.gamma1 * self.c_rc * self.c_rc
    }

    pub fn xi_1(&self, beta_mplus: f64) -> f64 {
        (2.0 - self.gamma1) * (1.0 - self.gamma2) * beta_mplus - self.coupling()
    }

    pub fn xi_2(&self, lambda: f64, alpha_1: f64) -> f64 {
        (2.0 * lambda - (2.0 - self.gamma1) * (1.0 / self.gamma2 - 1.0)) * alpha_1 - self.coupling()
    }

    /// Whether `(λ, M)` with the given `β_{M+}` and `α₁` certifies rate `mu`.
    pub fn certifies(&self, mu: f64, lambda: f64, alpha_1: f64, beta_mplus: f64) -> bool {
        2.0 * lambda - (2.0 - self.gamma1) * (1.0 / self.gamma2 - 1.0) > 0.0
            && self.xi_2(lambda, alpha_1) >= 4.0 * mu
            && self.xi_1(beta_mplus) >= 4.0 * mu
    }
}
