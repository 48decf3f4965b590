//! Exact evolved symbols against partial sums of the expansion on the minimal grid.

use spinfield::hierarchy::hierarchy;
use spinfield::linalg::{c, op_norm};
use spinfield::model::{Model, ModelConfig, PhaseVector};
use spinfield::ode::OdeOptions;
use spinfield::oracle::{Hamiltonian, ModeSelection, ObservableSpec, Oracle, PropagationOptions};

fn point(d: usize, radius: f64) -> PhaseVector {
    let q: Vec<f64> = (0..d).map(|j| (0.7 * (j as f64 + 1.3)).sin()).collect();
    let p: Vec<f64> = (0..d).map(|j| (0.7 * (j as f64 + 0.7) + 1.0).cos()).collect();
    let x = PhaseVector::from_slices(&q, &p);
    x.scale(radius / x.norm())
}

/// Successive halving rates `log2(e(h)/e(h/2))`.
fn rates(errs: &[f64]) -> Vec<f64> {
    errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[test]
fn truncation_errors_scale_with_the_order() {
    let model = Model::new(ModelConfig::minimal([0.0, 0.0, 0.5])).unwrap();
    let x = point(model.dim(), 0.5);
    let t = 1.0;
    let opts = OdeOptions::with_tol(1e-12);
    let specs = [
        ObservableSpec::Spin { spin: 0, axis: 0 },
        ObservableSpec::FieldB { axis: 0, point: [0.0; 3] },
        ObservableSpec::NumberRate,
    ];
    let coeffs: Vec<_> = specs.iter().map(|s| hierarchy(&model, s, t, &x, 2, &opts).unwrap()).collect();
    let hs = [0.2, 0.1, 0.05];
    let mut errs = vec![[Vec::new(), Vec::new(), Vec::new()]; specs.len()];
    for &h in &hs {
        let ham = Hamiltonian::build(&model, 30, h, &ModeSelection::Active).unwrap();
        let oracle = Oracle::new(&model, ham, PropagationOptions::default().with_tol(1e-11));
        let (ev, _) = oracle.evolve_coherent(&x, &[t]).unwrap();
        for (k, s) in specs.iter().enumerate() {
            let mut rest = oracle.symbol_of(&ev[0], s).unwrap();
            for m in 0..3 {
                rest -= coeffs[k].order(m) * c(h.powi(m as i32));
                errs[k][m].push(op_norm(&rest));
            }
        }
    }
    for (k, s) in specs.iter().enumerate() {
        for m in 0..2 {
            for r in rates(&errs[k][m]) {
                let want = (m + 1) as f64;
                assert!((r - want).abs() < 0.2, "{} M={m}: rate {r}, errors {:?}", s.label(), errs[k][m]);
            }
        }
        // the second-order term still helps, until the propagation floor
        for (e2, e1) in errs[k][2].iter().zip(&errs[k][1]) {
            assert!(e2 < e1, "{}: {e2} vs {e1}", s.label());
        }
    }
}

#[test]
fn decoupled_model_is_expanded_exactly() {
    let mut cfg = ModelConfig::minimal([0.3, 0.0, 0.4]);
    cfg.cutoff.family = "zero".into();
    let model = Model::new(cfg).unwrap();
    let x = point(model.dim(), 0.5);
    let opts = OdeOptions::with_tol(1e-12);
    let spec = ObservableSpec::Spin { spin: 0, axis: 1 };
    let r = hierarchy(&model, &spec, 0.8, &x, 1, &opts).unwrap();
    assert!(op_norm(&r.order(1)) < 1e-14);
    for h in [0.4, 0.1] {
        // nothing couples, so every mode is quantized
        let ham = Hamiltonian::build(&model, 20, h, &ModeSelection::All).unwrap();
        let oracle = Oracle::new(&model, ham, PropagationOptions::default().with_tol(1e-11));
        let (ev, _) = oracle.evolve_coherent(&x, &[0.8]).unwrap();
        let exact = oracle.symbol_of(&ev[0], &spec).unwrap();
        assert!(op_norm(&(exact - r.order(0))) < 1e-8);
    }
}
