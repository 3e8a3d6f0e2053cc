use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Strategy;
use super::*;
use crate::operator::pauli;

fn id2() -> HermitianOperator {
    HermitianOperator::identity(2)
}

/// `{(I + sσ)/2, (I − sσ)/2}`.
fn unsharp_qubit(sigma: &HermitianOperator, s: f64) -> DiscretePovm {
    let plus = (&id2() + &sigma.scale(s)).scale(0.5);
    let minus = (&id2() - &sigma.scale(s)).scale(0.5);
    DiscretePovm::new(vec![plus, minus]).unwrap()
}

fn qubit_kernel(s: f64) -> StochasticKernel {
    StochasticKernel::from_rows(&[vec![(1.0 + s) / 2.0, (1.0 - s) / 2.0], vec![(1.0 - s) / 2.0, (1.0 + s) / 2.0]])
        .unwrap()
}

fn sharp_x() -> DiscretePovm {
    unsharp_qubit(&pauli::x(), 1.0)
}

/// Oracle: brute-force maximum of `‖Δ(x)‖` over a uniform grid of the square.
fn grid_max_2(p: &DiscretePovm, steps: usize) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..=steps {
        for j in 0..=steps {
            let x = -1.0 + 2.0 * i as f64 / steps as f64;
            let y = -1.0 + 2.0 * j as f64 / steps as f64;
            let w = WeightVector::new(vec![x, y]).unwrap();
            best = best.max(noise_operator(p, &w).unwrap().op_norm());
        }
    }
    best
}

#[test]
fn validation_rejects_bad_povms() {
    let half = id2().scale(0.5);
    assert!(DiscretePovm::new(vec![half.clone()]).is_err());
    assert!(DiscretePovm::new(vec![half.clone(), half.clone(), half.scale(0.0)]).is_ok());
    let neg = HermitianOperator::from_real_diagonal(&[1.5, 0.5]).unwrap();
    let comp = HermitianOperator::from_real_diagonal(&[-0.5, 0.5]).unwrap();
    assert!(matches!(DiscretePovm::new(vec![neg, comp]), Err(Error::InvalidPovm(_))));
    assert!(DiscretePovm::new(vec![]).is_err());
}

#[test]
fn weight_vector_and_kernel_validation() {
    assert!(WeightVector::new(vec![0.0, 1.0, -1.0]).is_ok());
    assert!(WeightVector::new(vec![1.0 + 1e-9]).is_err());
    assert!(StochasticKernel::from_rows(&[vec![0.5, 0.5], vec![1.0, 0.0]]).is_ok());
    assert!(StochasticKernel::from_rows(&[vec![0.5, 0.6]]).is_err());
    assert!(StochasticKernel::from_rows(&[vec![1.5, -0.5]]).is_err());
}

#[test]
fn expectation_operator_examples() {
    let a = unsharp_qubit(&pauli::x(), 1.0);
    let ones = WeightVector::constant(2, 1.0).unwrap();
    assert_abs_diff_eq!(expectation_operator(&a, &ones).unwrap().distance(&id2()).unwrap(), 0.0, epsilon = 1e-14);
    let zero = WeightVector::constant(2, 0.0).unwrap();
    assert_abs_diff_eq!(expectation_operator(&a, &zero).unwrap().op_norm(), 0.0);
    let x = WeightVector::new(vec![1.0, -1.0]).unwrap();
    assert_abs_diff_eq!(expectation_operator(&a, &x).unwrap().distance(&pauli::x()).unwrap(), 0.0, epsilon = 1e-14);
    assert!(expectation_operator(&a, &WeightVector::constant(3, 0.0).unwrap()).is_err());
}

#[test]
fn noise_operator_examples() {
    let sharp = sharp_x();
    let x = WeightVector::new(vec![0.3, -0.8]).unwrap();
    assert_abs_diff_eq!(noise_operator(&sharp, &x).unwrap().op_norm(), 0.0, epsilon = 1e-14);
    let a = unsharp_qubit(&pauli::x(), 0.5);
    let c = WeightVector::constant(2, 0.7).unwrap();
    assert_abs_diff_eq!(noise_operator(&a, &c).unwrap().op_norm(), 0.0, epsilon = 1e-14);
    let x = WeightVector::new(vec![1.0, -1.0]).unwrap();
    let delta = noise_operator(&a, &x).unwrap();
    // (1 − s²) I at s = 1/2.
    assert_abs_diff_eq!(delta.distance(&id2().scale(0.75)).unwrap(), 0.0, epsilon = 1e-14);
}

#[test]
fn magnitude_of_noise_examples() {
    assert_abs_diff_eq!(magnitude_of_noise(&sharp_x()).value, 0.0, epsilon = 1e-12);
    let a = unsharp_qubit(&pauli::x(), 0.5);
    let oracle = grid_max_2(&a, 200);
    assert_abs_diff_eq!(oracle, 0.75, epsilon = 1e-12);
    let n = magnitude_of_noise(&a);
    assert_eq!(n.strategy, Strategy::HeuristicMax);
    assert_abs_diff_eq!(n.value, oracle, epsilon = 1e-10);

    // Δ(x) = (x₁ − x₂)²/4 · I for {I/2, I/2}: maximum 1 at (1, −1).
    let half = DiscretePovm::new(vec![id2().scale(0.5), id2().scale(0.5)]).unwrap();
    let oracle = grid_max_2(&half, 200);
    assert_abs_diff_eq!(oracle, 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(magnitude_of_noise(&half).value, 1.0, epsilon = 1e-10);

    assert_eq!(magnitude_of_noise(&DiscretePovm::trivial(3)).value, 0.0);
}

#[test]
fn nu_q_examples() {
    let a = unsharp_qubit(&pauli::x(), 0.5);
    let b = unsharp_qubit(&pauli::z(), 0.5);
    assert_abs_diff_eq!(nu_q(&a), 0.0, epsilon = 1e-14);
    let spectral =
        DiscretePovm::spectral_measure(&HermitianOperator::from_real_diagonal(&[1.0, 2.0, 2.0, 5.0]).unwrap());
    assert_eq!(spectral.len(), 3);
    assert_abs_diff_eq!(nu_q(&spectral), 0.0, epsilon = 1e-14);
    // [A(x), B(y)] = (x₁−x₂)(y₁−y₂)/16 · [σx, σz].
    let detailed = nu_q_pair_detailed(&a, &b, &CubeSearch::default()).unwrap();
    assert_eq!(detailed.strategy, Strategy::VertexEnumeration);
    assert_abs_diff_eq!(detailed.value, 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(nu_q_pair(&a, &a).unwrap(), 0.0, epsilon = 1e-14);
    assert_abs_diff_eq!(nu_q_pair(&a, &DiscretePovm::trivial(2)).unwrap(), 0.0);
    assert!(nu_q_pair(&a, &DiscretePovm::trivial(3)).is_err());
}

#[test]
fn nu_q_of_a_non_commutative_povm() {
    // Four outcomes mixing σx and σz measurements with equal probability.
    let a = unsharp_qubit(&pauli::x(), 1.0);
    let b = unsharp_qubit(&pauli::z(), 1.0);
    let effects: Vec<_> = a.effects().iter().chain(b.effects()).map(|e| e.scale(0.5)).collect();
    let mixed = DiscretePovm::new(effects).unwrap();
    // A(x) = ((x₁+x₂+x₃+x₄)I + (x₁−x₂)σx + (x₃−x₄)σz)/4, so
    // [A(x),A(y)] = ((x₁−x₂)(y₃−y₄) − (x₃−x₄)(y₁−y₂))/16 · [σx,σz], at most 8/16 · 2.
    assert_abs_diff_eq!(nu_q(&mixed), 1.0, epsilon = 1e-12);
}

#[test]
fn pair_search_falls_back_to_sign_ascent() {
    let a = unsharp_qubit(&pauli::x(), 0.5);
    let b = unsharp_qubit(&pauli::z(), 0.5);
    let search = CubeSearch { pair_vertex_limit: 2, ..CubeSearch::default() };
    let m = nu_q_pair_detailed(&a, &b, &search).unwrap();
    assert_eq!(m.strategy, Strategy::SignAscent);
    assert_abs_diff_eq!(m.value, 0.5, epsilon = 1e-12);
}

#[test]
fn smear_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let b = random_povm(&mut rng, 3, 4);
    let same = smear(&b, &StochasticKernel::identity(4)).unwrap();
    assert!(same.distance(&b).unwrap() < 1e-14);

    let p = [0.2, 0.5, 0.3];
    let total = smear(&b, &StochasticKernel::constant_rows(4, &p).unwrap()).unwrap();
    for (e, pj) in total.effects().iter().zip(p) {
        assert!(e.distance(&HermitianOperator::identity(3).scale(pj)).unwrap() < 1e-14);
    }

    let s = 0.4;
    let smeared = smear(&sharp_x(), &qubit_kernel(s)).unwrap();
    assert!(smeared.distance(&unsharp_qubit(&pauli::x(), s)).unwrap() < 1e-14);
    assert!(smear(&b, &StochasticKernel::identity(3)).is_err());
}

#[test]
fn smeared_variable_examples() {
    let x = WeightVector::new(vec![0.2, -0.7, 1.0]).unwrap();
    assert_eq!(smeared_variable(&StochasticKernel::identity(3), &x).unwrap(), x);
    let k = StochasticKernel::constant_rows(2, &[0.5, 0.25, 0.25]).unwrap();
    let c = smeared_variable(&k, &x).unwrap();
    assert_abs_diff_eq!(c.as_slice()[0], c.as_slice()[1]);
    let s = 0.3;
    let v = smeared_variable(&qubit_kernel(s), &WeightVector::new(vec![1.0, -1.0]).unwrap()).unwrap();
    assert_abs_diff_eq!(v.as_slice()[0], s, epsilon = 1e-15);
    assert_abs_diff_eq!(v.as_slice()[1], -s, epsilon = 1e-15);
}

#[test]
fn smearing_noise_sup_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let k = random_kernel(&mut rng, 2, 3);
    assert_abs_diff_eq!(smearing_noise_sup(&sharp_x(), &k).unwrap().value, 0.0, epsilon = 1e-12);

    let b = random_povm(&mut rng, 2, 3);
    let via_kernel = smearing_noise_sup(&b, &StochasticKernel::identity(3)).unwrap().value;
    assert_abs_diff_eq!(via_kernel, magnitude_of_noise(&b).value, epsilon = 1e-9);

    assert_abs_diff_eq!(smearing_noise_sup(&sharp_x(), &qubit_kernel(0.5)).unwrap().value, 0.0, epsilon = 1e-12);
}

#[test]
fn inherent_noise_bracket_examples() {
    let sharp = sharp_x();
    let br = inherent_noise_bracket(&sharp, &[]);
    assert_abs_diff_eq!(br.lower, 0.0);
    assert_abs_diff_eq!(br.upper, 0.0, epsilon = 1e-12);

    let a = unsharp_qubit(&pauli::x(), 0.5);
    let k = qubit_kernel(0.5);
    let bad = qubit_kernel(0.3);
    let br = inherent_noise_bracket(
        &a,
        &[
            SmearingCandidate { name: "wrong".into(), parent: &sharp, kernel: &bad },
            SmearingCandidate { name: "sharp parent".into(), parent: &sharp, kernel: &k },
        ],
    );
    assert_abs_diff_eq!(br.lower, 0.0);
    assert_abs_diff_eq!(br.upper, 0.0, epsilon = 1e-12);
    assert!(br.witness.starts_with("sharp parent"));
    assert_eq!(br.rejected.len(), 1);

    // No valid candidate: A smears itself.
    let br = inherent_noise_bracket(&a, &[SmearingCandidate { name: "wrong".into(), parent: &sharp, kernel: &bad }]);
    assert_abs_diff_eq!(br.upper, 0.75, epsilon = 1e-10);
}

#[test]
fn commutative_parent_recovers_sharp_measurement() {
    let a = unsharp_qubit(&pauli::x(), 0.5);
    let (parent, kernel) = commutative_sharp_parent(&a).unwrap();
    assert_eq!(parent.len(), 2);
    assert!(parent.sharpness_defect() < 1e-12);
    assert!(smear(&parent, &kernel).unwrap().distance(&a).unwrap() < 1e-12);

    let three = DiscretePovm::new(vec![
        HermitianOperator::from_real_diagonal(&[0.5, 0.2, 0.2]).unwrap(),
        HermitianOperator::from_real_diagonal(&[0.5, 0.3, 0.0]).unwrap(),
        HermitianOperator::from_real_diagonal(&[0.0, 0.5, 0.8]).unwrap(),
    ])
    .unwrap();
    let (parent, kernel) = commutative_sharp_parent(&three).unwrap();
    assert_eq!(parent.len(), 3);
    assert!(smear(&parent, &kernel).unwrap().distance(&three).unwrap() < 1e-12);

    let mixed = DiscretePovm::new(vec![
        (&id2() + &pauli::x().scale(0.5)).scale(0.25),
        (&id2() - &pauli::x().scale(0.5)).scale(0.25),
        (&id2() + &pauli::z().scale(0.5)).scale(0.25),
        (&id2() - &pauli::z().scale(0.5)).scale(0.25),
    ])
    .unwrap();
    assert!(commutative_sharp_parent(&mixed).is_none());
}

#[test]
fn joint_marginals_examples() {
    let a = unsharp_qubit(&pauli::x(), 0.5);
    let p = [0.25, 0.75];
    let product: Vec<_> = a.effects().iter().flat_map(|e| p.iter().map(move |pj| e.scale(*pj))).collect();
    let c = DiscretePovm::joint(2, 2, product).unwrap();
    let (ma, mb) = joint_marginals(&c).unwrap();
    assert!(ma.distance(&a).unwrap() < 1e-14);
    for (e, pj) in mb.effects().iter().zip(p) {
        assert!(e.distance(&id2().scale(pj)).unwrap() < 1e-14);
    }

    let zero = HermitianOperator::zeros(2);
    let diag = vec![a.effect(0).clone(), zero.clone(), zero, a.effect(1).clone()];
    let (ma, mb) = joint_marginals(&DiscretePovm::joint(2, 2, diag).unwrap()).unwrap();
    assert!(ma.distance(&a).unwrap() < 1e-14);
    assert!(mb.distance(&a).unwrap() < 1e-14);

    assert!(matches!(joint_marginals(&a), Err(Error::NotAGrid)));
}

#[test]
fn joint_noise_lower_examples() {
    let a = unsharp_qubit(&pauli::x(), 0.5);
    let b = unsharp_qubit(&pauli::z(), 0.5);
    assert_abs_diff_eq!(joint_noise_lower(&a, &sharp_x()).unwrap(), 0.0, epsilon = 1e-14);
    assert_abs_diff_eq!(joint_noise_lower(&a, &b).unwrap(), 0.25, epsilon = 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let r = random_povm(&mut rng, 3, 3);
    assert_abs_diff_eq!(joint_noise_lower(&r, &r).unwrap(), nu_q(&r) / 2.0, epsilon = 1e-12);
}

#[test]
fn json_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = random_povm(&mut rng, 3, 4);
    let doc = PovmDocument::from_povm(&p);
    let back = PovmDocument::from_json(&doc.to_json().unwrap()).unwrap().to_povm().unwrap();
    assert!(back.distance(&p).unwrap() < 1e-15);

    let a = unsharp_qubit(&pauli::x(), 0.5);
    let prod: Vec<_> = a.effects().iter().flat_map(|e| [e.scale(0.5), e.scale(0.5)]).collect();
    let c = DiscretePovm::joint(2, 2, prod).unwrap();
    let back = PovmDocument::from_json(&PovmDocument::from_povm(&c).to_json().unwrap()).unwrap().to_povm().unwrap();
    assert_eq!(back.grid_shape(), Some((2, 2)));
    assert!(PovmDocument::from_json(r#"{"dim":1,"outcomes":["a"],"effects":[[[1,0]]],"extra":0}"#).is_err());
}

#[test]
fn kernel_composition_matches_sequential_smearing() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let c = random_povm(&mut rng, 3, 5);
    let k_cb = random_kernel(&mut rng, 5, 4);
    let k_ba = random_kernel(&mut rng, 4, 3);
    let b = smear(&c, &k_cb).unwrap();
    let a = smear(&b, &k_ba).unwrap();
    let direct = smear(&c, &k_cb.compose(&k_ba).unwrap()).unwrap();
    assert!(direct.distance(&a).unwrap() < 1e-13);
}

fn instance(seed: u64) -> (DiscretePovm, StochasticKernel, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = 2 + (seed % 7) as usize;
    let k = 2 + (seed / 7 % 5) as usize;
    let l = 2 + (seed / 35 % 4) as usize;
    let b = random_povm(&mut rng, dim, k);
    let kernel = random_kernel(&mut rng, k, l);
    (b, kernel, rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn martens_de_muynck(seed in 0u64..10_000) {
        let (b, kernel, mut rng) = instance(seed);
        let a = smear(&b, &kernel).unwrap();
        let x = random_weights(&mut rng, a.len());
        let gx = smeared_variable(&kernel, &x).unwrap();
        let gap = &noise_operator(&a, &x).unwrap() - &noise_operator(&b, &gx).unwrap();
        prop_assert!(gap.min_eigenvalue() >= -1e-9);
    }

    #[test]
    fn janssens_inequality(seed in 0u64..10_000) {
        let (b, _, mut rng) = instance(seed);
        let u = random_weights(&mut rng, b.len());
        let v = random_weights(&mut rng, b.len());
        let du = noise_operator(&b, &u).unwrap().op_norm();
        let dv = noise_operator(&b, &v).unwrap().op_norm();
        let comm = commutator_norm(&expectation_operator(&b, &u).unwrap(), &expectation_operator(&b, &v).unwrap()).unwrap();
        prop_assert!(du.sqrt() * dv.sqrt() >= comm / 2.0 - 1e-9);
    }

    #[test]
    fn nu_q_is_monotone_under_smearing(seed in 0u64..10_000) {
        let (b, kernel, _) = instance(seed);
        let a = smear(&b, &kernel).unwrap();
        prop_assert!(nu_q(&a) <= nu_q(&b) + 1e-9);
    }

    #[test]
    fn noise_operator_is_positive(seed in 0u64..10_000) {
        let (b, _, mut rng) = instance(seed);
        let x = random_weights(&mut rng, b.len());
        prop_assert!(noise_operator(&b, &x).unwrap().min_eigenvalue() >= -1e-9);
    }

    #[test]
    fn magnitude_of_noise_in_unit_interval(seed in 0u64..10_000) {
        let (b, _, _) = instance(seed);
        let search = CubeSearch { gradient_starts: 12, ..CubeSearch::with_seed(seed) };
        let n = magnitude_of_noise_with(&b, &search).value;
        prop_assert!((0.0..=1.0 + 1e-9).contains(&n));
    }

    #[test]
    fn unsharpness_lower_bound_below_noise(seed in 0u64..10_000) {
        // ν_q(A)/2 ≤ N(A): A smears itself through the identity kernel.
        let (b, _, _) = instance(seed);
        let search = CubeSearch { gradient_starts: 12, ..CubeSearch::with_seed(seed) };
        let n = magnitude_of_noise_with(&b, &search).value;
        prop_assert!(nu_q(&b) / 2.0 <= n + 1e-9);
    }

    #[test]
    fn inherent_noise_chain(seed in 0u64..10_000) {
        let (c, k_cb, mut rng) = instance(seed);
        let k_ba = random_kernel(&mut rng, k_cb.cols(), 3);
        let k_ca = k_cb.compose(&k_ba).unwrap();
        let q_ca = NoiseQuadratic::new(&c, &k_ca).unwrap();
        let q_cb = NoiseQuadratic::new(&c, &k_cb).unwrap();
        let mut sup_ca: f64 = 0.0;
        let mut sup_cb: f64 = 0.0;
        for _ in 0..16 {
            let x = random_weights(&mut rng, 3);
            let y = smeared_variable(&k_ba, &x).unwrap();
            let via_a = q_ca.value(x.as_slice());
            let via_b = q_cb.value(y.as_slice());
            prop_assert!((via_a - via_b).abs() <= 1e-10);
            sup_ca = sup_ca.max(via_a);
            sup_cb = sup_cb.max(via_b).max(q_cb.value(random_weights(&mut rng, k_cb.cols()).as_slice()));
        }
        prop_assert!(sup_ca <= sup_cb + 1e-9);
    }
}
