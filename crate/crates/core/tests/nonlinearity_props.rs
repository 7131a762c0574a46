mod common;

use common::nk_moments;
use obstab::dynamics::{n_k, nonlinearity_n, penalty};
use obstab::fem::{inner_positive_part, positive_part_norm};
use obstab::{BoundaryCondition, Field, Mesh};
use proptest::prelude::*;

const N: usize = 64;

fn mesh() -> Mesh {
    Mesh::new(N, BoundaryCondition::NeumannHomogeneous).unwrap()
}

fn field() -> impl Strategy<Value = Field> {
    prop::collection::vec(-3.0..3.0_f64, N).prop_map(|v| Field::new(mesh(), v).unwrap())
}

/// `∫ f g⁺` by 3-point Gauss on each element, split at the zero of `g`.
fn quadrature_f_gplus(f: &[f64], g: &[f64], h: f64) -> f64 {
    let r = (0.6_f64).sqrt();
    let (pts, wts) = ([-r, 0.0, r], [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0]);
    let mut sum = 0.0;
    for e in 0..f.len() - 1 {
        let lin = |v: &[f64], s: f64| v[e] + s * (v[e + 1] - v[e]);
        let mut cuts = vec![0.0, 1.0];
        if (g[e] > 0.0) != (g[e + 1] > 0.0) {
            cuts.insert(1, g[e] / (g[e] - g[e + 1]));
        }
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            for (&p, &wt) in pts.iter().zip(&wts) {
                let s = 0.5 * (a + b) + 0.5 * (b - a) * p;
                sum += 0.5 * (b - a) * h * wt * lin(f, s) * lin(g, s).max(0.0);
            }
        }
    }
    sum
}

fn quadrature_h_hplus(h: &[f64], dx: f64) -> f64 {
    quadrature_f_gplus(h, h, dx)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn n_k_is_k_lipschitz(z1 in field(), z2 in field(), y in field(), psi in field(), k in 1.0..1e4_f64) {
        let h = z1.mesh().h();
        let (dn2, _, dz2) = nk_moments(z1.values(), z2.values(), y.values(), psi.values(), k, h);
        prop_assert!(dn2.sqrt() <= k * dz2.sqrt() * (1.0 + 1e-10));
    }

    #[test]
    fn n_k_is_monotone(z1 in field(), z2 in field(), y in field(), psi in field(), k in 1.0..1e4_f64) {
        let h = z1.mesh().h();
        let (dn2, cross, dz2) = nk_moments(z1.values(), z2.values(), y.values(), psi.values(), k, h);
        prop_assert!(cross >= -1e-10 * (dn2 * dz2).sqrt());
    }

    #[test]
    fn nodal_map_samples_the_pointwise_operator(z in field(), y in field(), psi in field(), k in 0.0..1e4_f64) {
        let nodal = nonlinearity_n(&z, &y, &psi, k).unwrap();
        for i in 0..N {
            let (zi, yi, pi) = (z.values()[i], y.values()[i], psi.values()[i]);
            prop_assert_eq!(nodal.values()[i], n_k(zi, yi, pi, k));
            // nodewise Lipschitz and monotone against z = 0
            prop_assert!(nodal.values()[i].abs() <= k * zi.abs() * (1.0 + 1e-12));
            prop_assert!(nodal.values()[i] * zi >= 0.0);
        }
    }

    #[test]
    fn positive_part_identity(h in field()) {
        let lhs = inner_positive_part(&h, &h).unwrap();
        let rhs = positive_part_norm(&h).powi(2);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
        let oracle = quadrature_h_hplus(h.values(), h.mesh().h());
        prop_assert!((lhs - oracle).abs() <= 1e-12 * (1.0 + oracle));
    }

    #[test]
    fn positive_part_inner_matches_quadrature(f in field(), g in field()) {
        let got = inner_positive_part(&f, &g).unwrap();
        let want = quadrature_f_gplus(f.values(), g.values(), f.mesh().h());
        prop_assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()));
    }

    #[test]
    fn penalty_sign(y in field(), psi in field(), k in 0.0..1e4_f64) {
        let p = penalty(&y, &psi, k).unwrap();
        for ((&pv, &yv), &sv) in p.values().iter().zip(y.values()).zip(psi.values()) {
            prop_assert!(pv >= 0.0);
            if yv <= sv {
                prop_assert_eq!(pv, 0.0);
            }
        }
    }
}
