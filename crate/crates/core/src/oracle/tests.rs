use super::*;
use crate::fock::{coherent_state, tensor_with_spin_basis};
use crate::hierarchy::chi_flow;
use crate::linalg::{c, exp_i_hermitian, frobenius, hermiticity_defect, SpinMatrix};
use crate::model::{Model, ModelConfig, PhaseVector};
use nalgebra::DVector;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn minimal(beta: [f64; 3]) -> Model {
    Model::new(ModelConfig::minimal(beta)).unwrap()
}

fn point(d: usize, seed: f64, radius: f64) -> PhaseVector {
    let q: Vec<f64> = (0..d).map(|j| (seed * (j as f64 + 1.3)).sin()).collect();
    let p: Vec<f64> = (0..d).map(|j| (seed * (j as f64 + 0.7) + 1.0).cos()).collect();
    let x = PhaseVector::from_slices(&q, &p);
    x.scale(radius / x.norm())
}

fn tight() -> PropagationOptions {
    PropagationOptions::default().with_tol(1e-12)
}

#[test]
fn minimal_grid_quantizes_two_modes() {
    let m = minimal([0.0, 0.0, 0.5]);
    let ham = Hamiltonian::build(&m, 30, 0.1, &ModeSelection::Active).unwrap();
    assert_eq!(ham.modes.len(), 2);
    assert_eq!(ham.basis.dim(), 496);
    assert_eq!(ham.dim(), 992);
    assert!(ham.h_int.hermiticity_defect() <= 1e-12 * ham.h_int.max_abs());
    assert!(Hamiltonian::build(&m, 30, 0.0, &ModeSelection::Active).is_err());
}

#[test]
fn decoupled_hamiltonian_is_free_field() {
    let m = minimal([0.0, 0.0, 0.0]).decoupled().unwrap();
    assert!(Hamiltonian::build(&m, 4, 0.3, &ModeSelection::Active).is_err());
    let ham = Hamiltonian::build(&m, 4, 0.3, &ModeSelection::All).unwrap();
    assert_eq!(ham.h_int.max_abs(), 0.0);
    let full = ham.full_operator().unwrap().to_dense().unwrap();
    for i in 0..ham.dim() {
        let e = 0.3 * ham.photon_energies[i / ham.spin_dim];
        assert!((full[(i, i)] - c(e)).norm() < 1e-15);
    }
}

#[test]
fn coupling_lowers_ground_energy() {
    let coupled = minimal([0.0, 0.0, 0.4]);
    let free = coupled.decoupled().unwrap();
    let h = 0.5;
    let sel = ModeSelection::Explicit(coupled.active_modes());
    let hc = Hamiltonian::build(&coupled, 10, h, &sel).unwrap();
    let hf = Hamiltonian::build(&free, 10, h, &sel).unwrap();
    let ground = |ham: &Hamiltonian| {
        let d = ham.full_operator().unwrap().to_dense().unwrap();
        d.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    };
    let (ec, ef) = (ground(&hc), ground(&hf));
    // vacuum ⊗ spin ground state is a trial state with energy −h|β| for both
    assert!((ef + h * 0.4).abs() < 1e-12);
    assert!(ec < ef - 1e-6, "{ec} vs {ef}");
}

#[test]
fn decoupled_evolution_matches_free_phases() {
    let m = minimal([0.2, -0.1, 0.3]).decoupled().unwrap();
    let ham = Hamiltonian::build(&m, 5, 0.4, &ModeSelection::Explicit(vec![0, 1])).unwrap();
    let n = ham.dim();
    let psi0: Vec<C64> = (0..n).map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect();
    let nrm = psi0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let psi0: Vec<C64> = psi0.iter().map(|z| z / nrm).collect();
    let t = 1.3;
    let (got, log) = evolve_interaction_picture(&ham, &psi0, t, tight()).unwrap();
    let spin_h = m.h_int_symbol(&PhaseVector::zeros(m.dim())).unwrap();
    let us = exp_i_hermitian(&spin_h, -t);
    let sd = ham.spin_dim;
    for p in 0..ham.basis.dim() {
        let ph = C64::from_polar(1.0, -t * ham.photon_energies[p]);
        for a in 0..sd {
            let want: C64 = (0..sd).map(|b| us[(a, b)] * psi0[p * sd + b]).sum::<C64>() * ph;
            assert!((got[p * sd + a] - want).norm() < 1e-10);
        }
    }
    assert!(log.final_norm_defect < 1e-12);
}

#[test]
fn interaction_picture_matches_dense_exponential() {
    let m = minimal([0.1, 0.0, 0.6]);
    let h = 0.3;
    let ham = Hamiltonian::build(&m, 8, h, &ModeSelection::Active).unwrap();
    let full = ham.full_operator().unwrap().to_dense().unwrap();
    let x = point(m.dim(), 0.8, 0.5);
    let (xa, _) = ham.split(&x).unwrap();
    let cs = coherent_state(&ham.basis, &xa, h).unwrap();
    let psi0 = tensor_with_spin_basis(&cs.amplitudes, ham.spin_dim, 1);
    for t in [0.7, -1.1] {
        let (got, log) = evolve_interaction_picture(&ham, psi0.as_slice(), t, tight()).unwrap();
        let u = exp_i_hermitian(&full, -t / h);
        let want = &u * &psi0;
        let err = (DVector::from_vec(got) - want).norm();
        assert!(err < 1e-8, "t = {t}: {err:e}");
        assert!(log.max_local_error <= 1e-12);
        assert!(log.accepted > 0);
    }
}

#[test]
fn norm_and_energy_are_conserved() {
    let m = minimal([0.0, 0.3, 0.5]);
    let h = 0.2;
    let ham = Hamiltonian::build(&m, 25, h, &ModeSelection::Active).unwrap();
    let oracle = Oracle::new(&m, ham, PropagationOptions::default());
    let x = point(m.dim(), 1.7, 0.5);
    let (ev, log) = oracle.evolve_coherent(&x, &[0.0, 0.5, 1.0]).unwrap();
    let e0 = oracle.energies(&ev[0]);
    for e in &ev[1..] {
        for (a, b) in oracle.energies(e).iter().zip(&e0) {
            assert!((a - b).abs() < 1e-6 * b.abs().max(h));
        }
        for s in &e.states {
            let n: f64 = s.iter().map(|z| z.norm_sqr()).sum();
            assert!((n - 1.0).abs() < 1e-7);
        }
    }
    assert!(log.max_unitarity_defect < 1e-9);
    assert!(log.top_shell_mass < 1e-10);
}

#[test]
fn symbols_at_time_zero() {
    let m = minimal([0.0, 0.0, 0.5]);
    let h = 0.25;
    let ham = Hamiltonian::build(&m, 30, h, &ModeSelection::Active).unwrap();
    let oracle = Oracle::new(&m, ham, PropagationOptions::default());
    let x = point(m.dim(), 0.3, 0.7);
    let (ev, _) = oracle.evolve_coherent(&x, &[0.0]).unwrap();
    let n = oracle.symbol_of(&ev[0], &ObservableSpec::Number).unwrap();
    let want = SpinMatrix::identity(2, 2) * c(x.norm().powi(2) / (2.0 * h));
    assert!(frobenius(&(n - want)) < 1e-10);
    for axis in 0..3 {
        let s = oracle.symbol_of(&ev[0], &ObservableSpec::Spin { spin: 0, axis }).unwrap();
        assert!(frobenius(&(s - m.sigma(0, axis))) < 1e-12);
        let b = oracle
            .symbol_of(&ev[0], &ObservableSpec::FieldB { axis, point: [0.1, 0.0, -0.2] })
            .unwrap();
        let v = m.coupling_b(axis, &crate::model::Vec3::new(0.1, 0.0, -0.2)).unwrap();
        assert!(frobenius(&(b - SpinMatrix::identity(2, 2) * c(v.dot(&x)))) < 1e-10);
    }
    assert!(oracle.symbol_of(&ev[0], &ObservableSpec::Spin { spin: 1, axis: 0 }).is_err());
}

#[test]
fn free_fields_follow_classical_flow() {
    let m = minimal([0.0, 0.0, 0.0]).decoupled().unwrap();
    let h = 0.5;
    let ham = Hamiltonian::build(&m, 12, h, &ModeSelection::Explicit(vec![0, 3])).unwrap();
    let oracle = Oracle::new(&m, ham, tight());
    let x = point(m.dim(), 2.1, 0.8);
    let times = [0.4, 1.3, -0.9];
    let (evs, _) = oracle.evolve_coherent(&x, &times).unwrap();
    let pt = [0.2, -0.3, 0.5];
    for ev in &evs {
        let xt = chi_flow(&m.grid, ev.t, &x);
        for axis in 0..3 {
            for spec in [ObservableSpec::FieldB { axis, point: pt }, ObservableSpec::FieldE { axis, point: pt }] {
                let lin = LinearObservable::resolve(&spec, &m).unwrap();
                let got = oracle.symbol(ev, &lin).unwrap();
                let want = lin.fields[0].0.dot(&xt);
                assert!(frobenius(&(got - SpinMatrix::identity(2, 2) * c(want))) < 1e-9);
            }
        }
        let n = oracle.symbol_of(ev, &ObservableSpec::Number).unwrap();
        assert!((n[(0, 0)] - c(x.norm().powi(2) / (2.0 * h))).norm() < 1e-9);
    }
}

#[test]
fn photon_rate_trivial_cases() {
    let m = minimal([0.0, 0.0, 0.5]);
    let h = 0.2;
    let ham = Hamiltonian::build(&m, 20, h, &ModeSelection::Active).unwrap();
    let (r0, _) = photon_rate_exact(&m, &ham, 0.0, &PhaseVector::zeros(m.dim()), tight()).unwrap();
    assert!(frobenius(&r0) < 1e-14);
    let free = m.decoupled().unwrap();
    let hf = Hamiltonian::build(&free, 10, h, &ModeSelection::Explicit(m.active_modes())).unwrap();
    let (rf, _) = photon_rate_exact(&free, &hf, 0.8, &point(m.dim(), 0.5, 0.5), tight()).unwrap();
    assert!(frobenius(&rf) < 1e-14);
}

/// Central difference of the symbol of `spec` at `t`.
fn fd_symbol(oracle: &Oracle, x: &PhaseVector, spec: &ObservableSpec, t: f64, dt: f64) -> (SpinMatrix, SpinMatrix) {
    let (ev, _) = oracle.evolve_coherent(x, &[t - dt, t, t + dt]).unwrap();
    let lo = oracle.symbol_of(&ev[0], spec).unwrap();
    let hi = oracle.symbol_of(&ev[2], spec).unwrap();
    ((hi - lo) * c(0.5 / dt), oracle.symbol_of(&ev[1], spec).unwrap())
}

#[test]
fn photon_rate_is_time_derivative_of_number() {
    let m = minimal([0.2, 0.0, 0.5]);
    let h = 0.2;
    let ham = Hamiltonian::build(&m, 25, h, &ModeSelection::Active).unwrap();
    let oracle = Oracle::new(&m, ham, tight());
    let x = point(m.dim(), 0.9, 0.5);
    let t = 0.6;
    let dt = 1e-3;
    let (fd, _) = fd_symbol(&oracle, &x, &ObservableSpec::Number, t, dt);
    let (ev, _) = oracle.evolve_coherent(&x, &[t]).unwrap();
    let rate = oracle.symbol_of(&ev[0], &ObservableSpec::NumberRate).unwrap();
    assert!(hermiticity_defect(&rate) < 1e-10);
    assert!(frobenius(&(fd - &rate)) < 1e-5 * frobenius(&rate).max(1e-3), "{rate}");
}

#[test]
fn operator_maxwell_equation() {
    let m = minimal([0.0, 0.1, 0.5]);
    let h = 0.25;
    let ham = Hamiltonian::build(&m, 25, h, &ModeSelection::Active).unwrap();
    let oracle = Oracle::new(&m, ham, tight());
    let x = point(m.dim(), 1.4, 0.5);
    let pt = [0.3, 0.1, -0.2];
    for axis in 0..3 {
        let (db, _) = fd_symbol(&oracle, &x, &ObservableSpec::FieldB { axis, point: pt }, 0.8, 1e-3);
        let (ev, _) = oracle.evolve_coherent(&x, &[0.8]).unwrap();
        let curl = oracle.symbol_of(&ev[0], &ObservableSpec::CurlE { axis, point: pt }).unwrap();
        assert!(frobenius(&(&db + &curl)) < 1e-5 * frobenius(&db).max(1e-2), "axis {axis}: {db} vs {curl}");
    }
}

#[test]
fn operator_bloch_equation() {
    let m = minimal([0.3, -0.2, 0.5]);
    let h = 0.2;
    let ham = Hamiltonian::build(&m, 25, h, &ModeSelection::Active).unwrap();
    let oracle = Oracle::new(&m, ham, tight());
    let x = point(m.dim(), 0.2, 0.5);
    for axis in 0..3 {
        let (ds, _) = fd_symbol(&oracle, &x, &ObservableSpec::Spin { spin: 0, axis }, 0.7, 1e-3);
        let (ev, _) = oracle.evolve_coherent(&x, &[0.7]).unwrap();
        let rhs = oracle.symbol_of(&ev[0], &ObservableSpec::BlochRate { spin: 0, axis }).unwrap();
        assert!(frobenius(&(ds - &rhs)) < 1e-5 * frobenius(&rhs).max(1e-2));
    }
}

#[test]
fn observable_spec_parses() {
    let s: ObservableSpec = toml::from_str("kind = \"field_B\"\naxis = 2\npoint = [0.0, 0.0, 0.0]").unwrap();
    assert_eq!(s, ObservableSpec::FieldB { axis: 2, point: [0.0; 3] });
    let s: ObservableSpec = toml::from_str("kind = \"spin\"\nspin = 0\naxis = 1").unwrap();
    assert_eq!(s.label(), "spin[0][1]");
    assert!(toml::from_str::<ObservableSpec>("kind = \"weird\"").is_err());
}

#[test]
fn truncation_is_refused() {
    let m = minimal([0.0, 0.0, 0.5]);
    let h = 0.01;
    let ham = Hamiltonian::build(&m, 10, h, &ModeSelection::Active).unwrap();
    let oracle = Oracle::new(&m, ham, PropagationOptions::default());
    let x = point(m.dim(), 0.4, 1.0);
    assert!(matches!(
        oracle.evolve_coherent(&x, &[0.1]),
        Err(crate::Error::Truncation { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn free_covariance_of_number_and_fields(seed in 0.0f64..10.0, t in -2.0f64..2.0) {
        let m = minimal([0.0, 0.0, 0.0]).decoupled().unwrap();
        let h = 0.5;
        let ham = Hamiltonian::build(&m, 14, h, &ModeSelection::Explicit(vec![1, 2])).unwrap();
        let oracle = Oracle::new(&m, ham, PropagationOptions::default());
        let x = point(m.dim(), seed, 0.9);
        let (ev, _) = oracle.evolve_coherent(&x, &[t]).unwrap();
        let xt = chi_flow(&m.grid, t, &x);
        let spec = ObservableSpec::FieldEPol { axis: 0, point: [0.0, 0.2, 0.1] };
        let lin = LinearObservable::resolve(&spec, &m).unwrap();
        let got = oracle.symbol(&ev[0], &lin).unwrap()[(0, 0)];
        prop_assert!((got - c(lin.fields[0].0.dot(&xt))).norm() < 1e-9);
    }
}
