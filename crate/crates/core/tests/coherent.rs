use invariant_maxent::coherent::{
    alpha_from_means, build_oscillator, coherent_state_vector, saturation_gradient, saturation_residual,
    solve_saturated, su2_family, variance,
};
use invariant_maxent::maxent::Status;
use invariant_maxent::numerics::{unitary_exp, CMatrix};
use invariant_maxent::random::{random_density, random_hermitian, rng_from_seed};
use invariant_maxent::symmetry::{act_on_state, GroupElement};
use invariant_maxent::{HermitianMatrix, State};
use proptest::prelude::*;
use rand::Rng;

/// A random density matrix on the lowest `m` of `n` Fock levels.
fn embedded_density<R: Rng>(m: usize, n: usize, rng: &mut R) -> HermitianMatrix {
    let small = random_density(m, rng);
    let mut big = CMatrix::zeros(n, n);
    big.view_mut((0, 0), (m, m)).copy_from(small.as_matrix());
    HermitianMatrix::new(big).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn uncertainty_relation(seed in any::<u64>(), n in 4usize..=12, hbar in 0.2f64..3.0) {
        let mut rng = rng_from_seed(seed);
        let ops = build_oscillator(n, hbar).unwrap();
        let m = rng.random_range(1..n);
        let s = State::quantum(embedded_density(m, n, &mut rng)).unwrap();
        let dq = variance(&s, &ops.q).unwrap().sqrt();
        let dp = variance(&s, &ops.p).unwrap().sqrt();
        prop_assert!(dq * dp >= hbar / 2.0 - 1e-6);
    }

    #[test]
    fn saturation_gradient_matches_finite_differences(seed in any::<u64>(), n in 4usize..=8) {
        let mut rng = rng_from_seed(seed);
        let ops = build_oscillator(n, 1.0).unwrap();
        let rho = random_density(n, &mut rng);
        let s = State::quantum(rho.clone()).unwrap();
        let (gq, gp) = saturation_gradient(&s, &ops).unwrap();
        let x = random_hermitian(n, &mut rng);
        let x = x.sub(&HermitianMatrix::identity(n).scale(x.trace() / n as f64));
        let h = 1e-5;
        // the residuals are polynomials in ρ, so evaluate them directly off the state space
        let raw = |r: &HermitianMatrix, a: &HermitianMatrix| {
            let m = a.inner(r);
            a.square().inner(r) - m * m
        };
        for (a, g) in [(&ops.q, &gq), (&ops.p, &gp)] {
            let fd = (raw(&rho.add(&x.scale(h)), a) - raw(&rho.sub(&x.scale(h)), a)) / (2.0 * h);
            let an = g.inner(&x);
            prop_assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "fd {fd} vs {an}");
        }
    }
}

#[test]
fn saturated_states_are_coherent() {
    let mut rng = rng_from_seed(3);
    let ops = build_oscillator(30, 1.0).unwrap();
    for _ in 0..3 {
        let q0 = rng.random_range(-1.5..1.5);
        let p0 = rng.random_range(-1.5..1.5);
        let sol = solve_saturated(&ops, q0, p0).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        let v = coherent_state_vector(alpha_from_means(q0, p0, ops.hbar), &ops).unwrap();
        let f = sol.state.fidelity_with_pure(&v).unwrap();
        assert!(f >= 1.0 - 1e-4, "({q0}, {p0}): fidelity {f}");
        let (rq, rp) = saturation_residual(&sol.state, &ops).unwrap();
        assert!(rq.abs() <= 1e-6 && rp.abs() <= 1e-6);
    }
}

#[test]
fn spin_reference_is_stable_up_to_phase() {
    for two_j in 1..=6 {
        let fam = su2_family(two_j, two_j + 2).unwrap();
        let s0 = State::pure(&fam.reference);
        for theta in [0.3, 1.1, 2.9] {
            let u = unitary_exp(&fam.stability_generator, theta);
            let g = GroupElement::Unitary(u);
            let moved = act_on_state(&g, &s0).unwrap();
            assert!(moved.distance(&s0).unwrap() <= 1e-10);
        }
        // a generic rotation does move it
        let r = GroupElement::Unitary(fam.ops.rotation(0.7, 0.2));
        assert!(act_on_state(&r, &s0).unwrap().distance(&s0).unwrap() > 1e-3);
    }
}
