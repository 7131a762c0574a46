//! Dense reference constructions shared by the integration tests. Everything
//! here is rebuilt from first principles rather than through the library.

#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use obstab::{Field, Mesh};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn nodes(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// Consistent P1 mass matrix by element loops with 3-point Gauss quadrature.
pub fn dense_mass(n: usize) -> DMatrix<f64> {
    let x = nodes(n);
    let (gp, gw) = gauss3();
    let mut m = DMatrix::zeros(n, n);
    for e in 0..n - 1 {
        let (a, b) = (x[e], x[e + 1]);
        let h = b - a;
        for (&s, &w) in gp.iter().zip(&gw) {
            let t = 0.5 * (s + 1.0);
            let phi = [1.0 - t, t];
            for p in 0..2 {
                for q in 0..2 {
                    m[(e + p, e + q)] += 0.5 * h * w * phi[p] * phi[q];
                }
            }
        }
    }
    m
}

/// Dense stiffness `∫ φ_i' φ_j'`.
pub fn dense_stiffness(n: usize) -> DMatrix<f64> {
    let h = 1.0 / (n - 1) as f64;
    let mut k = DMatrix::zeros(n, n);
    for e in 0..n - 1 {
        k[(e, e)] += 1.0 / h;
        k[(e + 1, e + 1)] += 1.0 / h;
        k[(e, e + 1)] -= 1.0 / h;
        k[(e + 1, e)] -= 1.0 / h;
    }
    k
}

fn gauss3() -> ([f64; 3], [f64; 3]) {
    let r = (0.6_f64).sqrt();
    ([-r, 0.0, r], [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
}

fn gauss_integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (gp, gw) = gauss3();
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    gp.iter().zip(&gw).map(|(&s, &w)| w * half * f(mid + half * s)).sum()
}

fn hat(x: &[f64], k: usize, t: f64) -> f64 {
    let n = x.len();
    if k > 0 && t >= x[k - 1] && t <= x[k] {
        return (t - x[k - 1]) / (x[k] - x[k - 1]);
    }
    if k + 1 < n && t >= x[k] && t <= x[k + 1] {
        return (x[k + 1] - t) / (x[k + 1] - x[k]);
    }
    0.0
}

/// `∫ 1_[a,b] φ_k` for every node, split at nodes and at `a`, `b`.
pub fn indicator_load(n: usize, a: f64, b: f64) -> DVector<f64> {
    let x = nodes(n);
    let mut cuts: Vec<f64> = x.iter().cloned().filter(|&t| t > a && t < b).collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    DVector::from_fn(n, |k, _| {
        cuts.windows(2)
            .map(|w| gauss_integrate(|t| hat(&x, k, t), w[0], w[1]))
            .sum()
    })
}

/// Actuator intervals: centres `(2j − 1)/(2M)`, half-width `r/(2M)`.
pub fn intervals(m: usize, ratio: f64) -> Vec<(f64, f64)> {
    (1..=m)
        .map(|j| {
            let c = (2 * j - 1) as f64 / (2 * m) as f64;
            let hw = ratio / (2 * m) as f64;
            (c - hw, c + hw)
        })
        .collect()
}

/// Columns are the L²-projections of the actuator indicators.
pub fn actuator_matrix(n: usize, m: usize, ratio: f64) -> DMatrix<f64> {
    let mass = dense_mass(n);
    let lu = mass.clone().lu();
    let cols: Vec<DVector<f64>> = intervals(m, ratio)
        .into_iter()
        .map(|(a, b)| lu.solve(&indicator_load(n, a, b)).unwrap())
        .collect();
    DMatrix::from_columns(&cols)
}

/// Neumann eigenfunctions `cos((j − 1)πx)` as columns, with their eigenvalues.
pub fn neumann_eigen(n: usize, m: usize, nu: f64) -> (DMatrix<f64>, Vec<f64>) {
    let x = nodes(n);
    let e = DMatrix::from_fn(n, m, |i, j| (j as f64 * PI * x[i]).cos());
    let alpha = (0..m).map(|j| nu * (j as f64 * PI).powi(2) + 1.0).collect();
    (e, alpha)
}

/// Dense matrix of the projection onto span(range) along span(test)^⊥:
/// `P h ∈ span(range)` and `(test_i, h − P h) = 0` for every i. Built one
/// unit vector at a time.
pub fn dense_projector(range: &DMatrix<f64>, test: &DMatrix<f64>, mass: &DMatrix<f64>) -> DMatrix<f64> {
    let n = range.nrows();
    let gram = test.transpose() * mass * range;
    let lu = gram.lu();
    let mut p = DMatrix::zeros(n, n);
    for k in 0..n {
        let mut unit = DVector::zeros(n);
        unit[k] = 1.0;
        let rhs = test.transpose() * mass * &unit;
        let c = lu.solve(&rhs).expect("nonsingular gram");
        p.set_column(k, &(range * c));
    }
    p
}

/// Dense `−λ P_U^{E⊥} A P_E^{U⊥}` with `A` acting on E through its eigenvalues.
pub fn dense_feedback(n: usize, m: usize, ratio: f64, nu: f64, lambda: f64) -> DMatrix<f64> {
    let mass = dense_mass(n);
    let u = actuator_matrix(n, m, ratio);
    let (e, alpha) = neumann_eigen(n, m, nu);
    let p_u = dense_projector(&u, &e, &mass);
    // coefficients of P_E h in the eigenbasis, scaled by α
    let gram = u.transpose() * &mass * &e;
    let coeff = gram.lu().solve(&(u.transpose() * &mass)).unwrap();
    let scaled = DMatrix::from_diagonal(&DVector::from_vec(alpha)) * coeff;
    -lambda * p_u * (e * scaled)
}

pub fn random_field(rng: &mut ChaCha8Rng, mesh: Mesh) -> Field {
    let values = (0..mesh.n_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Field::new(mesh, values).unwrap()
}

pub fn dvec(f: &Field) -> DVector<f64> {
    DVector::from_column_slice(f.values())
}

pub fn max_abs_diff(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax()
}

/// `∫₀¹ g(u₁(x), …, u_r(x)) dx` for P1 fields `u`, splitting every element
/// at the zeros of the linear `kinks`. Exact when `g` is a polynomial of
/// degree ≤ 5 between breakpoints.
pub fn integrate_p1(fields: &[&[f64]], kinks: &[&[f64]], h: f64, g: impl Fn(&[f64]) -> f64) -> f64 {
    let r = (0.6_f64).sqrt();
    let (pts, wts) = ([-r, 0.0, r], [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0]);
    let n = fields[0].len();
    let mut vals = vec![0.0; fields.len()];
    let mut sum = 0.0;
    for e in 0..n - 1 {
        let mut cuts = vec![0.0, 1.0];
        for k in kinks {
            let (a, b) = (k[e], k[e + 1]);
            if (a > 0.0) != (b > 0.0) && a != b {
                cuts.push(a / (a - b));
            }
        }
        cuts.sort_by(f64::total_cmp);
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            for (&p, &wt) in pts.iter().zip(&wts) {
                let s = 0.5 * (a + b) + 0.5 * (b - a) * p;
                for (v, f) in vals.iter_mut().zip(fields) {
                    *v = f[e] + s * (f[e + 1] - f[e]);
                }
                sum += 0.5 * (b - a) * h * wt * g(&vals);
            }
        }
    }
    sum
}

/// `(‖N_k(z₁) − N_k(z₂)‖², (N_k(z₁) − N_k(z₂), z₁ − z₂), ‖z₁ − z₂‖²)` with
/// the pointwise operator integrated exactly over the P1 fields.
pub fn nk_moments(z1: &[f64], z2: &[f64], y: &[f64], psi: &[f64], k: f64, h: f64) -> (f64, f64, f64) {
    let gap: Vec<f64> = y.iter().zip(psi).map(|(a, b)| a - b).collect();
    let s1: Vec<f64> = z1.iter().zip(&gap).map(|(a, b)| a + b).collect();
    let s2: Vec<f64> = z2.iter().zip(&gap).map(|(a, b)| a + b).collect();
    let fields: [&[f64]; 4] = [z1, z2, y, psi];
    let kinks: [&[f64]; 3] = [&gap, &s1, &s2];
    let diff = |v: &[f64]| {
        obstab::dynamics::n_k(v[0], v[2], v[3], k) - obstab::dynamics::n_k(v[1], v[2], v[3], k)
    };
    let dn2 = integrate_p1(&fields, &kinks, h, |v| diff(v).powi(2));
    let cross = integrate_p1(&fields, &kinks, h, |v| diff(v) * (v[0] - v[1]));
    let dz2 = integrate_p1(&fields, &kinks, h, |v| (v[0] - v[1]).powi(2));
    (dn2, cross, dz2)
}
