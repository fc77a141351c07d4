mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use qmsep::balance::{sqdb_check, sqdb_theta_check, witness_residual, BalanceVariant};
use qmsep::entropy::{entropy_production, ep_limit_estimate, EpValue};
use qmsep::gksl::{invariant_states, DensityMatrix, GkslGenerator, SuperoperatorKind};
use qmsep::matops::{
    expm, flip, hermitian_eig, identity, log_on_support, span_basis, tensor, theta_conj, theta_map,
};
use qmsep::models::{classical_ep, cycle_model, theta_eigenbasis, two_level_model, CycleSpec};
use qmsep::support::{commutator_family, reachable_space, support_at_t};
use qmsep::twopoint::{build_d, build_r, flip_conjugate, forward_density, phi_pair};
use qmsep::{CMatrix, CVector, C64, DEFAULT_TOL};

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

fn random_generator(seed: u64, n: usize, d: usize) -> GkslGenerator {
    let mut r = rng(seed);
    let jumps = (0..d).map(|_| random_matrix(&mut r, n) * C64::from(0.7)).collect();
    GkslGenerator::new(random_hermitian(&mut r, n), jumps).unwrap()
}

fn trace_norm(x: &CMatrix) -> f64 {
    let h = (x + x.adjoint()) * C64::from(0.5);
    hermitian_eig(&h, DEFAULT_TOL).unwrap().eigenvalues.iter().map(|v| v.abs()).sum()
}

proptest! {
    #![proptest_config(cfg(32))]

    #[test]
    fn theta_is_antiunitary(seed in any::<u64>(), n in 2usize..5) {
        let mut r = rng(seed);
        let (u, v) = (random_vector(&mut r, n), random_vector(&mut r, n));
        let lhs = theta_conj(&v).dotc(&theta_conj(&u));
        let rhs = u.dotc(&v);
        prop_assert!((lhs - rhs).norm() <= 1e-13 * (1.0 + u.norm() * v.norm()));
    }

    #[test]
    fn big_theta_is_a_star_antihomomorphism(seed in any::<u64>(), n in 2usize..5) {
        let mut r = rng(seed);
        let (a, b) = (random_matrix(&mut r, n), random_matrix(&mut r, n));
        let ab = theta_map(&(&a * &b)).unwrap();
        prop_assert!((ab - theta_map(&b).unwrap() * theta_map(&a).unwrap()).norm() < 1e-12);
        let star = theta_map(&a.adjoint()).unwrap();
        prop_assert!((star - theta_map(&a).unwrap().adjoint()).norm() < 1e-12);
    }

    #[test]
    fn flip_swaps_tensor_factors(seed in any::<u64>(), n in 2usize..4) {
        let mut r = rng(seed);
        let (a, b) = (random_matrix(&mut r, n), random_matrix(&mut r, n));
        let f = flip(n).unwrap();
        prop_assert!((&f * tensor(&a, &b) * &f - tensor(&b, &a)).norm() < 1e-12);
    }

    #[test]
    fn span_basis_ignores_order(seed in any::<u64>(), n in 2usize..4, k in 1usize..6) {
        let mut r = rng(seed);
        let mut mats: Vec<CMatrix> = (0..k).map(|_| random_matrix(&mut r, n)).collect();
        // include a dependent member
        let dep = &mats[0] * C64::new(0.3, -1.0);
        mats.push(dep);
        let a = span_basis(&mats, DEFAULT_TOL).unwrap();
        mats.reverse();
        let shift = seed as usize % mats.len();
        mats.rotate_left(shift);
        let b = span_basis(&mats, DEFAULT_TOL).unwrap();
        prop_assert_eq!(a.dim(), b.dim());
        prop_assert!(a.distance(&b) <= 1e-10);
    }

    #[test]
    fn log_inverts_expm_on_positive_diagonal(seed in any::<u64>(), n in 1usize..6) {
        let mut r = rng(seed);
        let d: Vec<f64> = (0..n).map(|_| gauss(&mut r)).collect();
        let x = CMatrix::from_diagonal(&CVector::from_iterator(n, d.iter().map(|&v| C64::from(v))));
        let back = log_on_support(&expm(&x).unwrap(), DEFAULT_TOL).unwrap();
        prop_assert!((back - x).norm() < 1e-12);
    }
}

proptest! {
    #![proptest_config(cfg(16))]

    #[test]
    fn generators_are_unital_and_trace_preserving(seed in any::<u64>(), n in 2usize..4, d in 1usize..4) {
        let gen = random_generator(seed, n, d);
        prop_assert!(gen.apply_heisenberg(&identity(n)).unwrap().norm() < 1e-12);
        let mut r = rng(seed ^ 1);
        let x = random_matrix(&mut r, n);
        prop_assert!(gen.apply_schrodinger(&x).unwrap().trace().norm() < 1e-12);
    }

    #[test]
    fn make_special_preserves_the_superoperator(seed in any::<u64>(), n in 2usize..4) {
        let (gen, rho) = random_special_model(&mut rng(seed), n, 2);
        let mut r = rng(seed ^ 7);
        // undo the normalization with a gauge shift, then normalize again
        let c = C64::new(gauss(&mut r), gauss(&mut r));
        let shifted: Vec<CMatrix> = gen.jumps().iter().map(|l| l + identity(n) * c).collect();
        let h_shift = gen
            .jumps()
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, l| acc + (l.adjoint() * c - l * c.conj()) * C64::new(0.0, -0.5));
        let moved = GkslGenerator::new(gen.hamiltonian() - h_shift, shifted).unwrap();
        let a = moved.superoperator(SuperoperatorKind::Heisenberg).mat;
        let b = gen.superoperator(SuperoperatorKind::Heisenberg).mat;
        prop_assert!((&a - &b).norm() < 1e-12);
        let again = moved.make_special(&rho, DEFAULT_TOL).unwrap();
        let c2 = again.superoperator(SuperoperatorKind::Heisenberg).mat;
        prop_assert!((c2 - a).norm() < 1e-12);
    }

    #[test]
    fn propagators_are_completely_positive(seed in any::<u64>(), n in 2usize..4, d in 1usize..3) {
        let gen = random_generator(seed, n, d);
        let sup = gen.superoperator(SuperoperatorKind::Schrodinger);
        for t in [0.1, 1.0] {
            let choi = sup.choi(t).unwrap();
            let h = (&choi + choi.adjoint()) * C64::from(0.5);
            prop_assert!(hermitian_eig(&h, DEFAULT_TOL).unwrap().min() >= -1e-8);
        }
    }

    #[test]
    fn invariant_states_are_stationary(seed in any::<u64>(), n in 2usize..4) {
        let gen = random_generator(seed, n, 2);
        let inv = invariant_states(&gen, DEFAULT_TOL).unwrap();
        for rho in &inv.states {
            for t in [0.5, 5.0] {
                let later = gen.evolve(rho, t).unwrap();
                prop_assert!((later.matrix() - rho.matrix()).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn kms_dual_is_involutive(seed in any::<u64>(), n in 2usize..4) {
        let (gen, rho) = random_special_model(&mut rng(seed), n, 2);
        let dual = gen.kms_dual(&rho, DEFAULT_TOL).unwrap();
        let back = dual.kms_dual(&rho, DEFAULT_TOL).unwrap();
        let a = gen.superoperator(SuperoperatorKind::Heisenberg).mat;
        let b = back.superoperator(SuperoperatorKind::Heisenberg).mat;
        prop_assert!((a - b).norm() < 1e-10);
    }

    #[test]
    fn r_is_separating(seed in any::<u64>(), n in 2usize..5) {
        let mut r = rng(seed);
        let rho = DensityMatrix::new(random_real_density(&mut r, n), DEFAULT_TOL).unwrap();
        let rv = build_r(&rho, DEFAULT_TOL).unwrap();
        let x = random_matrix(&mut r, n);
        let image = tensor(&identity(n), &x) * &rv.vec;
        let bound = rho.min_eigenvalue().sqrt() * x.norm();
        prop_assert!(image.norm() >= bound * (1.0 - 1e-12));
        prop_assert!(bound > 0.0);
    }

    #[test]
    fn phi_images_flip_and_share_trace(seed in any::<u64>(), n in 2usize..4, d in 1usize..4) {
        let (gen, rho) = random_special_model(&mut rng(seed), n, d);
        let (pf, pb) = phi_pair(&gen, &rho, DEFAULT_TOL).unwrap();
        prop_assert!((flip_conjugate(&pf.mat, n).unwrap() - &pb.mat).norm() < 1e-12);
        let expected: f64 = gen.jumps().iter().map(|l| (rho.matrix() * l.adjoint() * l).trace().re).sum();
        prop_assert!((pf.trace() - expected).abs() < 1e-12 * expected.max(1.0));
        prop_assert!((pb.trace() - expected).abs() < 1e-12 * expected.max(1.0));
    }

    #[test]
    fn forward_density_is_lipschitz_at_zero(seed in any::<u64>(), n in 2usize..4) {
        let (gen, rho) = random_special_model(&mut rng(seed), n, 2);
        let d = build_d(&build_r(&rho, DEFAULT_TOL).unwrap());
        let slopes: Vec<f64> = [0.1, 0.01, 0.001]
            .iter()
            .map(|&t| trace_norm(&(forward_density(&gen, &rho, t, DEFAULT_TOL).unwrap().mat - &d.mat)) / t)
            .collect();
        let c = slopes.iter().cloned().fold(0.0, f64::max);
        let bound = 4.0 * gen.scale();
        prop_assert!(c <= bound, "slopes {:?} exceed {}", slopes, bound);
    }

    #[test]
    fn entropy_production_is_nonnegative_and_gauge_invariant(seed in any::<u64>(), n in 2usize..4, d in 1usize..4) {
        let (gen, rho) = random_special_model(&mut rng(seed), n, d);
        let rep = entropy_production(&gen, &rho, DEFAULT_TOL).unwrap();
        prop_assert!(rep.value.value() >= 0.0);
        if let EpValue::Finite(v) = rep.value {
            if v == 0.0 {
                prop_assert!(rep.phi_difference <= 1e-8);
            }
            if rep.phi_difference > 1e-6 {
                prop_assert!(v > 0.0);
            }
        }
        let w = random_unitary(&mut rng(seed ^ 3), gen.jumps().len());
        let mixed = gen.remix_jumps(&w).unwrap();
        let other = entropy_production(&mixed, &rho, DEFAULT_TOL).unwrap().value;
        match (rep.value, other) {
            (EpValue::Infinite, EpValue::Infinite) => {}
            (EpValue::Finite(a), EpValue::Finite(b)) => prop_assert!((a - b).abs() <= 1e-9),
            (a, b) => prop_assert!(false, "gauge changed {a} to {b}"),
        }
    }

    #[test]
    fn limit_estimate_converges_to_formula(seed in any::<u64>()) {
        // qubit with three jumps: Φ supports agree and D→_t, D←_t are full rank
        let (gen, rho) = random_special_model(&mut rng(seed), 2, 3);
        let rep = entropy_production(&gen, &rho, DEFAULT_TOL).unwrap();
        prop_assume!(!rep.value.is_infinite());
        let ep = rep.value.value();
        let trace = ep_limit_estimate(&gen, &rho, &[1e-3, 1e-4, 1e-5], DEFAULT_TOL).unwrap();
        let errs: Vec<f64> = trace.iter().map(|s| (s.s_over_t.value() - ep).abs()).collect();
        prop_assert!(errs[2] <= 0.02 * ep + 1e-6, "errors {:?}, ep {}", errs, ep);
        prop_assert!(errs[2] <= errs[0] + 1e-6);
    }

    #[test]
    fn gauge_covariant_witness(seed in any::<u64>(), n in 2usize..4, d in 1usize..4) {
        let (gen, rho) = random_special_model(&mut rng(seed), n, d);
        let w = random_unitary(&mut rng(seed ^ 5), gen.jumps().len());
        let mixed = gen.remix_jumps(&w).unwrap();
        for variant in [BalanceVariant::Standard, BalanceVariant::Theta] {
            let (a, b) = match variant {
                BalanceVariant::Standard => (sqdb_check(&gen, &rho, DEFAULT_TOL).unwrap(), sqdb_check(&mixed, &rho, DEFAULT_TOL).unwrap()),
                BalanceVariant::Theta => (sqdb_theta_check(&gen, &rho, DEFAULT_TOL).unwrap(), sqdb_theta_check(&mixed, &rho, DEFAULT_TOL).unwrap()),
            };
            prop_assert_eq!(a.holds, b.holds);
            // θ is antilinear, so the θ witness picks up `w` rather than `conj(w)`.
            let left = match variant {
                BalanceVariant::Standard => w.map(|z| z.conj()),
                BalanceVariant::Theta => w.clone(),
            };
            let predicted = left * &a.u * w.adjoint();
            prop_assert!(witness_residual(&mixed, &rho, &predicted, variant) <= 1e-9 + a.residual_jump * 10.0);
        }
    }

    #[test]
    fn time_ordered_products_stay_in_the_support(seed in any::<u64>(), n in 2usize..4) {
        let gen = random_generator(seed, n, 1);
        let mut r = rng(seed ^ 11);
        let u = random_vector(&mut r, n);
        let t = 0.7;
        let space = support_at_t(&gen, &u, t, DEFAULT_TOL).unwrap();
        for _ in 0..5 {
            let k = 1 + (seed as usize % 3);
            let mut cuts: Vec<f64> = (0..k).map(|_| r.random::<f64>() * t).collect();
            cuts.sort_by(f64::total_cmp);
            let mut times = Vec::with_capacity(k + 1);
            let mut prev = 0.0;
            for c in &cuts {
                times.push(c - prev);
                prev = *c;
            }
            times.push(t - prev);
            let mut v = expm(&(gen.drift() * C64::from(times[0]))).unwrap() * &u;
            for s in &times[1..] {
                v = gen.jumps()[0].clone() * v;
                v = expm(&(gen.drift() * C64::from(*s))).unwrap() * v;
            }
            prop_assert!(space.residual(&v) <= 1e-8 * v.norm().max(1.0));
        }
    }

    #[test]
    fn backward_reachable_space_is_the_flipped_forward_one(seed in any::<u64>(), n in 2usize..4) {
        let (gen, rho) = random_deficient_model(&mut rng(seed), n);
        let rv = build_r(&rho, DEFAULT_TOL).unwrap();
        let fwd = reachable_space(&gen.lift_forward(), &rv.vec, DEFAULT_TOL).unwrap();
        let bwd = reachable_space(&gen.lift_backward(), &rv.vec, DEFAULT_TOL).unwrap();
        let f = flip(n).unwrap();
        let flipped: Vec<CVector> = fwd.space.basis.iter().map(|b| &f * b).collect();
        let flipped = qmsep::matops::span_of_vectors(&flipped, DEFAULT_TOL).unwrap();
        prop_assert_eq!(flipped.dim(), bwd.dim);
        prop_assert!(flipped.distance(&bwd.space) <= 1e-8);
    }

    #[test]
    fn commutator_family_rank_is_monotone(seed in any::<u64>(), n in 2usize..4) {
        let gen = random_generator(seed, n, 1);
        let mut prev = 0;
        for m in 0..n * n {
            let fam = commutator_family(&gen, Some(m), DEFAULT_TOL);
            let dim = span_basis(&fam, DEFAULT_TOL).map(|s| s.dim()).unwrap_or(0);
            prop_assert!(dim >= prev);
            prev = dim;
        }
        let full = commutator_family(&gen, None, DEFAULT_TOL);
        prop_assert_eq!(span_basis(&full, DEFAULT_TOL).unwrap().dim(), prev);
    }

    #[test]
    fn quantum_and_classical_ep_agree(seed in any::<u64>(), n in 3usize..5) {
        let gamma = random_reversible_support_rates(&mut rng(seed), n);
        let (gen, rho) = generic(gamma.clone());
        let diag: Vec<f64> = (0..n).map(|j| rho.matrix()[(j, j)].re).collect();
        let q = entropy_production(&gen, &rho, DEFAULT_TOL).unwrap().value.value();
        let c = classical_ep(&gamma, &diag).unwrap().value();
        prop_assert!((q - c).abs() <= 1e-9);
    }

    #[test]
    fn theta_eigenbasis_diagonalizes(seed in any::<u64>(), n in 2usize..6) {
        let rho = random_real_density(&mut rng(seed), n);
        let tb = theta_eigenbasis(&rho, DEFAULT_TOL).unwrap();
        prop_assert!((tb.reconstruct() - &rho).norm() <= 1e-10);
    }
}

#[test]
fn cycle_ep_is_independent_of_the_hamiltonian() {
    let mut r = rng(31);
    let rates = [0.5, 1.0, 2.0, 5.0];
    for n in [3, 4, 5] {
        for &lambda in &rates {
            for &mu in &rates {
                let mut spec = CycleSpec::new(n, lambda, mu);
                spec.h_diag = (0..n).map(|_| gauss(&mut r)).collect();
                let (gen, rho) = cycle_model(&spec).unwrap();
                let ep = entropy_production(&gen, &rho, DEFAULT_TOL).unwrap().value.value();
                // classical cycle: ½ Σ (J_lm − J_ml) ln(J_lm / J_ml) with J = ρ γ
                let expected = (lambda - mu) * (lambda / mu).ln();
                assert!((ep - expected).abs() <= 1e-9, "n={n} λ={lambda} μ={mu}: {ep} vs {expected}");
            }
        }
    }
}

fn bundled() -> Vec<(GkslGenerator, DensityMatrix)> {
    let mut out = Vec::new();
    for (n, l, m) in [(3, 2.0, 1.0), (4, 1.0, 1.0), (3, 0.5, 0.5), (5, 5.0, 0.5)] {
        out.push(cycle_model(&CycleSpec::new(n, l, m)).unwrap());
    }
    out.push(two_level_model(0.7).unwrap());
    let mut r = rng(41);
    for n in [3, 4] {
        out.push(generic(random_balanced_rates(&mut r, n).0));
        out.push(generic(random_reversible_support_rates(&mut r, n)));
    }
    for k in 0..12 {
        out.push(random_special_model(&mut r, 2 + k % 2, 1 + k % 3));
    }
    out
}

#[test]
fn witness_verification_and_balance_implications() {
    for (gen, rho) in bundled() {
        let std = sqdb_check(&gen, &rho, DEFAULT_TOL).unwrap();
        let th = sqdb_theta_check(&gen, &rho, DEFAULT_TOL).unwrap();
        if std.holds {
            assert!(witness_residual(&gen, &rho, &std.u, BalanceVariant::Standard) <= 1e-10);
        }
        if th.holds {
            assert!(witness_residual(&gen, &rho, &th.u, BalanceVariant::Theta) <= 1e-10);
        }
        let ep = entropy_production(&gen, &rho, DEFAULT_TOL).unwrap().value;
        if th.holds {
            assert!(ep.value().abs() <= 1e-10);
        }
        if ep == EpValue::Finite(0.0) {
            assert!(std.holds, "zero entropy production without standard detailed balance");
        }
    }
}
