use super::*;
use crate::activation::{ActivationKind, ActivationModel};
use approx::{assert_abs_diff_eq, assert_relative_eq};

fn engine(kind: ActivationKind) -> MomentEngine {
    MomentEngine::new(ActivationModel::new(kind).unwrap())
}

fn relu() -> MomentEngine {
    engine(ActivationKind::Relu)
}

fn cov1(k: f64) -> Covariance {
    Covariance::scalar(k).unwrap()
}

fn cov2(k11: f64, k12: f64, k22: f64) -> Covariance {
    Covariance::new(2, vec![k11, k12, k12, k22]).unwrap()
}

#[test]
fn relu_second_moment_is_half_k() {
    // <sigma sigma> = K/2 for ReLU
    let q = MomentQuery::product(&[(0, 0), (0, 0)]);
    let got = relu().expect_product(&q, &cov1(3.0)).unwrap();
    assert_relative_eq!(got, 1.5, epsilon = 1e-14);
}

#[test]
fn identity_derivative_pair_is_one() {
    let q = MomentQuery::product(&[(0, 1), (1, 1)]);
    let e = engine(ActivationKind::Identity);
    for cov in [cov2(1.0, 0.0, 1.0), cov2(2.0, 1.0, 2.0), cov2(0.3, -0.2, 5.0)] {
        assert_relative_eq!(e.expect_product(&q, &cov).unwrap(), 1.0, epsilon = 1e-14);
    }
}

#[test]
fn relu_cross_moment_at_independent_inputs() {
    // <sigma(z1) sigma(z2)> at unit covariance: 1/(2 pi), also checked
    // against the dense quadrature oracle.
    let q = MomentQuery::product(&[(0, 0), (1, 0)]);
    let e = relu();
    let cov = cov2(1.0, 0.0, 1.0);
    let got = e.expect_product(&q, &cov).unwrap();
    let oracle = e.quadrature_reference(&q, &cov, 200).unwrap();
    let expected = 1.0 / (2.0 * std::f64::consts::PI);
    assert_relative_eq!(got, expected, epsilon = 1e-13);
    assert_relative_eq!(oracle, expected, epsilon = 1e-10);
}

#[test]
fn identity_mixed_partial_is_one() {
    // <d^2(sigma1 sigma2)/dz1 dz2> = <d^2(z1 z2)/dz1 dz2> = 1
    let q = MomentQuery::with_partials(&[(0, 0), (1, 0)], &[0, 1]);
    let e = engine(ActivationKind::Identity);
    let got = e.expect_product(&q, &cov2(2.0, 1.0, 2.0)).unwrap();
    assert_relative_eq!(got, 1.0, epsilon = 1e-13);
}

#[test]
fn relu_total_derivative_of_sigma_sigmaprime() {
    // <d(sigma sigma')/dz> = <sigma' sigma'> + <sigma sigma''> = 1/2 + 0
    // for any K > 0, cross-checked against <sigma sigma' z>/K by quadrature.
    let e = relu();
    for k in [0.5, 1.0, 3.0] {
        let cov = cov1(k);
        let q = MomentQuery::with_partials(&[(0, 0), (0, 1)], &[0]);
        let got = e.expect_product(&q, &cov).unwrap();
        assert_relative_eq!(got, 0.5, epsilon = 1e-13);
        let stein = MomentQuery::with_monomials(&[(0, 0), (0, 1)], &[0]);
        let oracle = e.quadrature_reference(&stein, &cov, 200).unwrap() / k;
        assert_relative_eq!(oracle, 0.5, max_relative = 1e-9);
    }
}

#[test]
fn gelu_total_derivative_golden_value() {
    // v = <d(sigma' sigma)/dz>_{K=1}; golden value from 25-digit quadrature,
    // and two engine node counts agree to 1e-10.
    let e = engine(ActivationKind::Gelu);
    let q = MomentQuery::with_partials(&[(0, 1), (0, 0)], &[0]);
    let cov = cov1(1.0);
    let got = e.expect_product(&q, &cov).unwrap();
    assert_relative_eq!(got, 0.48648024872827557, epsilon = 1e-11);
    let a = e.quadrature_reference(&q, &cov, 80).unwrap();
    let b = e.quadrature_reference(&q, &cov, 160).unwrap();
    assert_abs_diff_eq!(a, b, epsilon = 1e-10);
}

#[test]
fn registered_closed_forms() {
    // ReLU 1-D <sigma' sigma'> is K-independent: (a+^2 + a-^2)/2 = 1/2
    let q = MomentQuery::product(&[(0, 1), (0, 1)]);
    let got = relu().scale_invariant_closed_form(&q, &cov1(5.0)).unwrap();
    assert_relative_eq!(got, 0.5, epsilon = 1e-15);

    // identity 2-D <sigma1 sigma2> = K12
    let q = MomentQuery::product(&[(0, 0), (1, 0)]);
    let e = engine(ActivationKind::Identity);
    let got = e.scale_invariant_closed_form(&q, &cov2(2.0, 1.0, 2.0)).unwrap();
    assert_relative_eq!(got, 1.0, epsilon = 1e-15);

    // LeakyReLU(0.1) 1-D <sigma sigma> = 0.505 * K
    let e = engine(ActivationKind::LeakyRelu { alpha: 0.1 });
    let q = MomentQuery::product(&[(0, 0), (0, 0)]);
    let got = e.scale_invariant_closed_form(&q, &cov1(2.0)).unwrap();
    assert_relative_eq!(got, 1.01, epsilon = 1e-14);

    // <sigma' sigma' z^2> = A K for scale-invariant sigma
    let q = MomentQuery::with_monomials(&[(0, 1), (0, 1)], &[0, 0]);
    let got = relu().scale_invariant_closed_form(&q, &cov1(3.0)).unwrap();
    assert_relative_eq!(got, 1.5, epsilon = 1e-14);

    // <sigma sigma'' . f> = 0 when the kink variable carries a sigma factor
    let q = MomentQuery::product(&[(0, 0), (0, 2), (1, 0)]);
    let got = relu().scale_invariant_closed_form(&q, &cov2(1.0, 0.3, 2.0)).unwrap();
    assert_eq!(got, 0.0);

    // absence is a value, not an error
    let q = MomentQuery::product(&[(0, 0), (1, 0), (2, 0)]);
    let cov = Covariance::new(3, vec![1.0, 0.1, 0.1, 0.1, 1.0, 0.1, 0.1, 0.1, 1.0]).unwrap();
    assert!(relu().scale_invariant_closed_form(&q, &cov).is_none());
}

#[test]
fn gram_inverse_examples() {
    let id = Covariance::new(2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
    let inv = gram_inverse(&id).unwrap();
    assert_eq!(inv, vec![1.0, 0.0, 0.0, 1.0]);

    let cov = cov2(2.0, 1.0, 2.0);
    let inv = gram_inverse(&cov).unwrap();
    let want = [2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0, 2.0 / 3.0];
    for (g, w) in inv.iter().zip(want.iter()) {
        assert_relative_eq!(g, w, epsilon = 1e-12);
    }

    // two equal rows: singular
    let dup = Covariance::new(2, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
    assert!(gram_inverse(&dup).is_err());
}

#[test]
fn analytic_matches_quadrature_on_grid() {
    // every registered analytic moment vs the dense quadrature oracle,
    // over a grid of variances and correlations
    for kind in [ActivationKind::Relu, ActivationKind::LeakyRelu { alpha: 0.1 }] {
        let e = engine(kind);
        for &k1 in &[0.1, 1.0, 10.0] {
            for &k2 in &[0.4, 2.5] {
                for &rho in &[-0.95, -0.5, 0.0, 0.5, 0.95] {
                    let cov = cov2(k1, rho * (k1 * k2).sqrt(), k2);
                    for q in [
                        MomentQuery::product(&[(0, 0), (1, 0)]),
                        MomentQuery::product(&[(0, 1), (1, 1)]),
                        MomentQuery::product(&[(0, 0), (1, 1)]),
                        MomentQuery::product(&[(0, 1), (0, 1), (1, 1), (1, 1)]),
                    ] {
                        let analytic = e.scale_invariant_closed_form(&q, &cov).unwrap();
                        let quad = e.quadrature_reference(&q, &cov, 200).unwrap();
                        let scale = analytic.abs().max(1e-3);
                        assert!(
                            (analytic - quad).abs() / scale < 1e-8,
                            "{kind:?} {q:?} k1={k1} k2={k2} rho={rho}: {analytic} vs {quad}"
                        );
                        // the production orthant route agrees to machine grade
                        let prod = e.expect_product(&q, &cov).unwrap();
                        assert!(
                            (analytic - prod).abs() / scale < 1e-12,
                            "orthant route {kind:?} {q:?}: {analytic} vs {prod}"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn quadrature_doubling_is_stable() {
    let cases = [
        (ActivationKind::Relu, MomentQuery::product(&[(0, 0), (1, 0)])),
        (ActivationKind::Relu, MomentQuery::product(&[(0, 1), (1, 1)])),
        (ActivationKind::Gelu, MomentQuery::product(&[(0, 0), (1, 0)])),
        (ActivationKind::Gelu, MomentQuery::product(&[(0, 0), (0, 0)])),
    ];
    let cov = cov2(1.3, 0.6, 0.8);
    for (kind, q) in cases {
        let e = engine(kind);
        let a = e.quadrature_reference(&q, &cov, 60).unwrap();
        let b = e.quadrature_reference(&q, &cov, 120).unwrap();
        assert!(
            (a - b).abs() < 1e-9,
            "{kind:?} {q:?}: doubling moved {a} -> {b}"
        );
    }
}

#[test]
fn four_dimensional_doubling_is_stable_for_smooth() {
    let e = engine(ActivationKind::Gelu);
    let q = MomentQuery::product(&[(0, 0), (1, 0), (2, 1), (3, 1)]);
    let cov = cov4();
    let a = e.quadrature_reference(&q, &cov, 24).unwrap();
    let b = e.quadrature_reference(&q, &cov, 48).unwrap();
    assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    // and the production engine sits on the same value
    let p = e.expect_product(&q, &cov).unwrap();
    assert!((p - b).abs() < 1e-6);
}

fn cov4() -> Covariance {
    // a moderately correlated PSD matrix: G G^T / 2 + diag
    let g = [
        [1.0, 0.2, -0.3, 0.1],
        [0.4, 1.1, 0.2, -0.2],
        [-0.1, 0.3, 0.9, 0.2],
        [0.2, -0.2, 0.4, 1.2],
    ];
    let mut k = vec![0.0; 16];
    for i in 0..4 {
        for j in 0..4 {
            let mut s = 0.0;
            for t in 0..4 {
                s += g[i][t] * g[j][t];
            }
            k[i * 4 + j] = 0.5 * s + if i == j { 0.4 } else { 0.0 };
        }
    }
    Covariance::new(4, k).unwrap()
}

#[test]
fn kinked_four_point_factorizes_on_block_covariance() {
    // vars {0,1} independent of {2,3}: <s1 s2 s'3 s'4> = <s1 s2><s'3 s'4>
    let e = engine(ActivationKind::LeakyRelu { alpha: 0.3 });
    let mut k = vec![0.0; 16];
    let blocks = [(0usize, 1usize, 1.4, 0.7, 0.9), (2, 3, 0.8, -0.3, 1.1)];
    for &(i, j, kii, kij, kjj) in &blocks {
        k[i * 4 + i] = kii;
        k[i * 4 + j] = kij;
        k[j * 4 + i] = kij;
        k[j * 4 + j] = kjj;
    }
    let cov = Covariance::new(4, k).unwrap();
    let q = MomentQuery::product(&[(0, 0), (1, 0), (2, 1), (3, 1)]);
    let got = e.expect_product(&q, &cov).unwrap();
    let ss = e
        .expect_product(&MomentQuery::product(&[(0, 0), (1, 0)]), &cov)
        .unwrap();
    let pp = e
        .expect_product(&MomentQuery::product(&[(2, 1), (3, 1)]), &cov)
        .unwrap();
    assert_relative_eq!(got, ss * pp, epsilon = 1e-12);
}

#[test]
fn kinked_four_point_matches_reference_quadrature() {
    let e = relu();
    let cov = cov4();
    for q in [
        MomentQuery::product(&[(0, 0), (1, 0), (2, 0), (3, 0)]),
        MomentQuery::product(&[(0, 0), (1, 0), (2, 1), (3, 1)]),
        MomentQuery::product(&[(0, 1), (1, 1), (2, 1), (3, 1)]),
    ] {
        let exact = e.expect_product(&q, &cov).unwrap();
        let quad = e.quadrature_reference(&q, &cov, 32).unwrap();
        assert_relative_eq!(exact, quad, max_relative = 2e-5, epsilon = 1e-6);
    }
}

#[test]
fn projection_of_out_of_span_monomials() {
    // E[sigma(z0) z1] = K01 <sigma'> by Stein; <sigma'> = (a+ + a-)/2
    let e = engine(ActivationKind::LeakyRelu { alpha: 0.25 });
    let cov = cov2(1.7, 0.8, 1.2);
    let q = MomentQuery::with_monomials(&[(0, 0)], &[1]);
    let got = e.expect_product(&q, &cov).unwrap();
    assert_relative_eq!(got, 0.8 * 0.5 * 1.25, epsilon = 1e-13);
}

#[test]
fn partial_of_monomial_product() {
    // <d(sigma(z) z)/dz> = <sigma' z> + <sigma> = 2 c sqrt(K / 2 pi)
    let e = relu();
    let k = 2.3;
    let q = MomentQuery {
        factors: vec![(0, 0)],
        monomials: vec![0],
        partials: vec![0],
    };
    let got = e.expect_product(&q, &cov1(k)).unwrap();
    let want = 2.0 * (k / (2.0 * std::f64::consts::PI)).sqrt();
    assert_relative_eq!(got, want, epsilon = 1e-13);
}

#[test]
fn stein_identity_for_smooth_models() {
    // sum_a E[f z_a] (K^-1)_{a g} equals the pointwise product-rule
    // expansion of <d f / d z_g>, evaluated by plain quadrature.
    let e = engine(ActivationKind::Gelu);
    let cov = cov2(1.2, -0.5, 0.9);
    let kinv = gram_inverse(&cov).unwrap();
    // f = sigma'(z0) sigma(z1), g = 0
    let mut lhs = 0.0;
    for a in 0..2 {
        let q = MomentQuery::with_monomials(&[(0, 1), (1, 0)], &[a]);
        lhs += e.quadrature_reference(&q, &cov, 120).unwrap() * kinv[a * 2];
    }
    // d f / d z_0 = sigma''(z0) sigma(z1)
    let rhs = e
        .quadrature_reference(&MomentQuery::product(&[(0, 2), (1, 0)]), &cov, 120)
        .unwrap();
    assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-8);
    // and the engine's partial route gives the same number
    let via_engine = e
        .expect_product(&MomentQuery::with_partials(&[(0, 1), (1, 0)], &[0]), &cov)
        .unwrap();
    assert_abs_diff_eq!(via_engine, rhs, epsilon = 1e-8);
}

#[test]
fn product_symmetry_under_variable_permutation() {
    // permuting factor labels together with covariance rows/columns leaves
    // the expectation unchanged, exactly
    let e = relu();
    let cov = cov2(1.5, 0.4, 0.7);
    let swapped = cov2(0.7, 0.4, 1.5);
    let a = e
        .expect_product(&MomentQuery::product(&[(0, 0), (1, 1)]), &cov)
        .unwrap();
    let b = e
        .expect_product(&MomentQuery::product(&[(1, 0), (0, 1)]), &swapped)
        .unwrap();
    assert_abs_diff_eq!(a, b, epsilon = 1e-15);
}

#[test]
fn kinked_higher_derivatives_are_rejected() {
    let e = relu();
    // sigma'' against sigma' at the same variable: delta against a jump
    let q = MomentQuery::product(&[(0, 2), (0, 1)]);
    assert!(e.expect_product(&q, &cov1(1.0)).is_err());
    // sigma''' outright
    let q = MomentQuery::product(&[(0, 3), (1, 0)]);
    assert!(e.expect_product(&q, &cov2(1.0, 0.1, 1.0)).is_err());
}

#[test]
fn kinked_chi_bowtie_via_conditional_rule() {
    // <sigma''(z0) sigma(z1)> = (a+ - a-) phi_0(0) E[sigma(z1) | z0 = 0],
    // conditional N(0, K11 - K01^2/K00)
    let e = relu();
    let (k00, k01, k11) = (2.0, 0.9, 1.5);
    let cov = cov2(k00, k01, k11);
    let got = e
        .expect_product(&MomentQuery::product(&[(0, 2), (1, 0)]), &cov)
        .unwrap();
    let s2 = k11 - k01 * k01 / k00;
    let want = (1.0 / (2.0 * std::f64::consts::PI * k00).sqrt())
        * (s2 / (2.0 * std::f64::consts::PI)).sqrt();
    assert_relative_eq!(got, want, epsilon = 1e-13);
    // on the diagonal the sigma factor kills it
    let got = e
        .expect_product(&MomentQuery::product(&[(0, 2), (0, 0)]), &cov1(1.0))
        .unwrap();
    assert_eq!(got, 0.0);
}

#[test]
fn covariance_validation() {
    assert!(Covariance::new(2, vec![1.0, 0.5, 0.499, 1.0]).is_err());
    assert!(Covariance::new(2, vec![1.0, 2.0, 2.0, 1.0]).is_err()); // indefinite
    assert!(Covariance::new(2, vec![1.0, 0.0, 0.0]).is_err());
    assert!(Covariance::new(1, vec![f64::NAN]).is_err());
}
