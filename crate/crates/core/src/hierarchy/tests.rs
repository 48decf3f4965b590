use super::*;
use crate::linalg::{c, exp_i_hermitian, hermiticity_defect, max_abs, unitarity_defect, SpinMatrix};
use crate::model::{pauli, Model, ModelConfig, PhaseVector, Vec3};
use crate::ode::OdeOptions;
use crate::oracle::{LinearObservable, ObservableSpec};
use proptest::prelude::*;

fn minimal(beta: [f64; 3]) -> Model {
    Model::new(ModelConfig::minimal(beta)).unwrap()
}

fn two_spin() -> Model {
    let mut c = ModelConfig::minimal([0.2, -0.1, 0.7]);
    c.spins.count = 2;
    c.spins.positions = vec![[0.0, 0.0, 0.0], [0.3, -0.2, 0.5]];
    c.grid.radial_nodes = 2;
    c.grid.kmax = Some(3.0);
    c.grid.directions = crate::model::Directions::Named("octahedral".into());
    Model::new(c).unwrap()
}

fn point(d: usize, seed: f64, radius: f64) -> PhaseVector {
    let q: Vec<f64> = (0..d).map(|j| (seed * (j as f64 + 1.3)).sin()).collect();
    let p: Vec<f64> = (0..d).map(|j| (seed * (j as f64 + 0.7) + 1.0).cos()).collect();
    let x = PhaseVector::from_slices(&q, &p);
    x.scale(radius / x.norm())
}

fn tight() -> OdeOptions {
    OdeOptions::with_tol(1e-12)
}

fn rel(a: &SpinMatrix, b: &SpinMatrix) -> f64 {
    max_abs(&(a - b)) / max_abs(a).max(max_abs(b)).max(1e-12)
}

fn spin(model: &Model, lam: usize, m: usize) -> LinearObservable {
    LinearObservable::resolve(&ObservableSpec::Spin { spin: lam, axis: m }, model).unwrap()
}

#[test]
fn reduced_basis_is_orthonormal_and_invariant() {
    for model in [minimal([0.0, 0.0, 1.0]), two_spin()] {
        let basis = ReducedBasis::build(&model);
        assert!(basis.rank() > 0);
        assert!(basis.orthonormality_defect() < 1e-12);
        for lam in 0..model.n_spins() {
            for m in 0..3 {
                for t in [0.0, 0.7, -1.9] {
                    let v = chi_flow(&model.grid, t, model.b(lam, m));
                    assert!(basis.residual(&v).norm() < 1e-12 * v.norm().max(1.0));
                    assert!(basis.residual(&v.fcal()).norm() < 1e-12 * v.norm().max(1.0));
                }
            }
        }
    }
    // B_1 and B_2 at the origin are independent over C on the single k-point
    assert_eq!(ReducedBasis::build(&minimal([0.0; 3])).rank(), 2);
}

#[test]
fn jet_space_counts() {
    let s = JetSpace::new(2, 3);
    // monomials in 4 variables up to degree 3: C(7, 3) = 35
    assert_eq!(s.len(3), 35);
    assert_eq!(s.len(1), 5);
    assert_eq!(s.len(0), 1);
    for i in 0..s.len(3) {
        let deg: u32 = s.monomial(i).iter().map(|&e| e as u32).sum();
        assert!(deg <= 3);
        if i > 0 {
            let prev: u32 = s.monomial(i - 1).iter().map(|&e| e as u32).sum();
            assert!(prev <= deg);
        }
    }
}

#[test]
fn propagator_constant_generator() {
    let b = 0.8;
    let model = minimal([0.0, 0.0, b]);
    let x = PhaseVector::zeros(model.dim());
    for t in [0.3, 1.0, 2.0] {
        let g = propagator_g(&model, t, 0.0, &x, &tight()).unwrap();
        let want = exp_i_hermitian(&(pauli(2) * c(b)), t);
        assert!(rel(&g.g, &want) < 1e-10);
        assert!(unitarity_defect(&g.g) < 1e-10);
    }
    let id = propagator_g(&model, 0.4, 0.4, &x, &tight()).unwrap();
    assert_eq!(id.g, SpinMatrix::identity(2, 2));
}

#[test]
fn propagator_group_law() {
    let model = two_spin();
    let x = point(model.dim(), 0.37, 1.0);
    let opts = OdeOptions::with_tol(1e-11);
    for (s, t) in [(0.4, 1.1), (1.3, 0.2), (-0.5, 0.9)] {
        let gs = propagator_g(&model, s, 0.0, &x, &opts).unwrap().g;
        let gt = propagator_g(&model, t, 0.0, &x, &opts).unwrap().g;
        let xs = chi_flow(&model.grid, s, &x);
        let g = propagator_g(&model, t - s, 0.0, &xs, &opts).unwrap().g;
        assert!(rel(&(gs.adjoint() * gt), &g) < 1e-8);
    }
}

#[test]
fn precession_quarter_turn() {
    let model = minimal([0.0, 0.0, 1.0]);
    let x = PhaseVector::zeros(model.dim());
    let t = std::f64::consts::FRAC_PI_4;
    let s1 = order0(&model, &spin(&model, 0, 0), t, &x, &tight()).unwrap();
    assert!(rel(&s1, &(-pauli(1))) < 1e-10);
    let bl = bloch_spin0(&model, t, &x, &tight()).unwrap();
    assert!(rel(&bl[0][0], &(-pauli(1))) < 1e-10);
}

#[test]
fn order0_examples() {
    let model = two_spin();
    let x = point(model.dim(), 1.1, 0.8);
    let opts = tight();
    let f = model.coupling_b(1, &Vec3::new(0.1, 0.4, -0.3)).unwrap();
    let field = LinearObservable {
        constant: SpinMatrix::zeros(4, 4),
        fields: vec![(f.clone(), SpinMatrix::identity(4, 4))],
        number: 0.0,
    };
    let t = 0.9;
    let a = order0(&model, &field, t, &x, &opts).unwrap();
    let want = SpinMatrix::identity(4, 4) * c(f.dot(&chi_flow(&model.grid, t, &x)));
    assert!(rel(&a, &want) < 1e-12);
    let s = spin(&model, 1, 2);
    assert!(rel(&order0(&model, &s, 0.0, &x, &opts).unwrap(), &s.constant) < 1e-15);
}

#[test]
fn bloch_matches_conjugated_spins() {
    let model = two_spin();
    let x = point(model.dim(), 2.3, 1.0);
    let opts = tight();
    let times: Vec<f64> = (1..=8).map(|i| 0.25 * i as f64).collect();
    let (bl, _) = bloch_spin0_dense(&model, &times, &x, &opts).unwrap();
    for (k, &t) in times.iter().enumerate() {
        for lam in 0..2 {
            for m in 0..3 {
                let g = order0(&model, &spin(&model, lam, m), t, &x, &opts).unwrap();
                assert!(rel(&g, &bl[k][lam][m]) < 1e-9, "t={t} λ={lam} m={m}");
            }
        }
        assert!(casimir_defect(&bl[k]) < 1e-9);
    }
    let still = bloch_spin0(&minimal([0.0; 3]), 1.5, &PhaseVector::zeros(4), &opts).unwrap();
    for m in 0..3 {
        assert!(rel(&still[0][m], &pauli(m)) < 1e-14);
    }
}

#[test]
fn jets_order0_matches_propagator() {
    let model = two_spin();
    let basis = ReducedBasis::build(&model);
    let x = point(model.dim(), 0.61, 0.9);
    let obs = LinearObservable::resolve(&ObservableSpec::NumberRate, &model).unwrap();
    for t in [0.5, 1.7] {
        let jets = solve_jets(&model, &basis, &obs, t, &x, 0, &tight()).unwrap();
        let g = order0(&model, &obs, t, &x, &tight()).unwrap();
        assert!(rel(jets.value(0), &g) < 1e-9);
    }
}

#[test]
fn tangent_agrees_with_finite_difference() {
    let model = two_spin();
    let x = point(model.dim(), 0.2, 1.0);
    let v = point(model.dim(), 3.3, 1.0);
    for lam in 0..2 {
        let r = tangent_fd_residual(&model, lam, &v, 1.0, &x, 1e-5, &tight()).unwrap();
        assert!(r < 1e-6, "residual {r}");
    }
    // order-0 tangent from the ODE vs the linear jet of the recursion
    let basis = ReducedBasis::build(&model);
    let dirs = basis.real_directions();
    let ode = tangent0(&model, 0, &dirs[3], &[0.8], &x, &tight()).unwrap().pop().unwrap();
    let jet = solve_jets(&model, &basis, &spin(&model, 0, 1), 0.8, &x, 1, &tight()).unwrap();
    assert!(rel(&ode[1], &jet.derivative_x(0, &dirs[3]).unwrap()) < 1e-9);
    let zero = tangent0(&model, 1, &PhaseVector::zeros(model.dim()), &[0.5], &x, &tight()).unwrap();
    assert!(zero[0].iter().all(|m| max_abs(m) == 0.0));
}

#[test]
fn spin_correction_two_paths() {
    let model = two_spin();
    let basis = ReducedBasis::build(&model);
    let x = point(model.dim(), 0.83, 0.7);
    for t in [0.4, 1.0] {
        let fo = first_order(&model, t, &x, &tight()).unwrap();
        for lam in 0..2 {
            for m in 0..3 {
                let jets = solve_jets(&model, &basis, &spin(&model, lam, m), t, &x, 1, &tight()).unwrap();
                let a = jets.value(1);
                assert!(rel(a, &fo.s1[lam][m]) < 1e-8, "t={t} λ={lam} m={m}: {}", rel(a, &fo.s1[lam][m]));
                assert!(hermiticity_defect(a) < 1e-10);
            }
        }
        assert!(casimir_balance1(&fo) < 1e-9);
    }
}

#[test]
fn maxwell_two_paths_and_transversality() {
    let model = two_spin();
    let x = point(model.dim(), 1.9, 0.6);
    let probes = [Vec3::new(0.5, 0.1, -0.2)];
    for t in [0.5, 1.0] {
        let rep = maxwell_cross_check(&model, t, &x, &probes, &tight()).unwrap();
        assert!(rep.max_rel_dev < 1e-8, "{rep:?}");
        assert!(rep.max_divergence < 1e-10 * rep.scale.max(1.0), "{rep:?}");
    }
}

#[test]
fn pure_field_duhamel_matches_recursion() {
    let model = two_spin();
    let basis = ReducedBasis::build(&model);
    let x = point(model.dim(), 0.44, 1.2);
    let f = model.coupling_e(2, &Vec3::new(-0.2, 0.3, 0.1)).unwrap();
    let obs = LinearObservable {
        constant: SpinMatrix::zeros(4, 4),
        fields: vec![(f.clone(), SpinMatrix::identity(4, 4))],
        number: 0.0,
    };
    let t = 1.3;
    let quad = order1_pure_field(&model, &f, t, &x, 1e-10, &tight()).unwrap();
    let jets = solve_jets(&model, &basis, &obs, t, &x, 1, &tight()).unwrap();
    assert!(rel(&quad, jets.value(1)) < 1e-8);
}

#[test]
fn higher_orders_vanish_at_time_zero_and_without_coupling() {
    let model = two_spin();
    let basis = ReducedBasis::build(&model);
    let x = point(model.dim(), 0.9, 1.0);
    let obs = spin(&model, 0, 0);
    let jets = solve_jets(&model, &basis, &obs, 0.0, &x, 3, &tight()).unwrap();
    for j in 1..=3 {
        assert_eq!(max_abs(jets.value(j)), 0.0);
    }
    let free = model.decoupled().unwrap();
    let fb = ReducedBasis::build(&free);
    assert_eq!(fb.rank(), 0);
    let jets = solve_jets(&free, &fb, &obs, 1.2, &x, 2, &tight()).unwrap();
    assert_eq!(max_abs(jets.value(1)), 0.0);
    assert_eq!(max_abs(jets.value(2)), 0.0);
    let fo = first_order(&free, 1.2, &x, &tight()).unwrap();
    assert!(fo.s1.iter().flatten().all(|m| max_abs(m) == 0.0));
    assert!(fo.z1_q.iter().chain(&fo.z1_p).all(|m| max_abs(m) == 0.0));
}

#[test]
fn higher_orders_are_hermitian() {
    let model = two_spin();
    let basis = ReducedBasis::build(&model);
    let x = point(model.dim(), 0.3, 0.8);
    for spec in [ObservableSpec::NumberRate, ObservableSpec::Spin { spin: 1, axis: 0 }] {
        let obs = LinearObservable::resolve(&spec, &model).unwrap();
        let jets = solve_jets(&model, &basis, &obs, 0.9, &x, 2, &OdeOptions::with_tol(1e-10)).unwrap();
        for j in 0..=2 {
            assert!(hermiticity_defect(jets.value(j)) < 1e-9 * max_abs(jets.value(j)).max(1.0));
        }
    }
}

#[test]
fn photon_rate_two_paths() {
    let model = two_spin();
    let basis = ReducedBasis::build(&model);
    let x = point(model.dim(), 1.4, 0.9);
    let t = 0.8;
    let exp = photon_rate_expansion(&model, t, &x, 1, &tight()).unwrap();
    let obs = LinearObservable::resolve(&ObservableSpec::NumberRate, &model).unwrap();
    let jets = solve_jets(&model, &basis, &obs, t, &x, 1, &tight()).unwrap();
    assert!(rel(&exp.orders[0], jets.value(0)) < 1e-9);
    assert!(rel(&exp.orders[1], jets.value(1)) < 1e-8);
    let at_origin = photon_rate_expansion(&model, t, &PhaseVector::zeros(model.dim()), 0, &tight()).unwrap();
    assert_eq!(max_abs(&at_origin.orders[0]), 0.0);
}

#[test]
fn hierarchy_result_serializes() {
    let model = minimal([0.1, 0.0, 0.6]);
    let x = point(model.dim(), 0.5, 0.5);
    let spec = ObservableSpec::Spin { spin: 0, axis: 0 };
    let r = hierarchy(&model, &spec, 1.0, &x, 2, &tight()).unwrap();
    assert_eq!(r.orders.len(), 3);
    let json = serde_json::to_string(&r).unwrap();
    assert!(json.contains("\"X\""));
    let back: HierarchyResult = serde_json::from_str(&json).unwrap();
    assert_eq!(back.order(1), r.order(1));
    assert!(matches!(
        hierarchy(&model, &ObservableSpec::Number, 1.0, &x, 1, &tight()),
        Err(crate::Error::Observable(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn propagator_is_unitary_and_bloch_consistent(seed in 0.0f64..10.0, t in -2.0f64..2.0) {
        let model = minimal([0.3, -0.2, 0.5]);
        let x = point(model.dim(), seed, 1.0);
        let g = propagator_g(&model, t, 0.0, &x, &OdeOptions::with_tol(1e-10)).unwrap().g;
        prop_assert!(unitarity_defect(&g) < 1e-8);
        let s = bloch_spin0(&model, t.abs(), &x, &OdeOptions::with_tol(1e-10)).unwrap();
        prop_assert!(casimir_defect(&s) < 1e-8);
    }
}
