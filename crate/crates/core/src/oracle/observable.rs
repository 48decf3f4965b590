use super::hamiltonian::Hamiltonian;
use super::propagate::{PropagationLog, PropagationOptions, Propagator};
use crate::error::{Error, Result};
use crate::fock::{coherent_state, number_operator, segal_field, tensor_with_spin_basis, FockOperator};
use crate::hierarchy::chi_flow;
use crate::linalg::{c, SpinMatrix};
use crate::model::{levi_civita, Model, PhaseVector, Vec3};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Observable selector, as written in plan files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObservableSpec {
    /// `Φ_{S,h}(B_{m x}) ⊗ I`.
    #[serde(rename = "field_B")]
    FieldB { axis: usize, point: [f64; 3] },
    /// `Φ_{S,h}(E_{m x}) ⊗ I`.
    #[serde(rename = "field_E")]
    FieldE { axis: usize, point: [f64; 3] },
    /// `Φ_{S,h}(𝓕 B_{m x}) ⊗ I`.
    #[serde(rename = "field_E_pol")]
    FieldEPol { axis: usize, point: [f64; 3] },
    /// `I ⊗ σ_m^{[λ]}`.
    Spin { spin: usize, axis: usize },
    /// `N ⊗ I`.
    Number,
    /// `N' = −Σ_{λ,m} Φ_{S,h}(𝓕 B_{m x_λ}) ⊗ σ_m^{[λ]}`.
    NumberRate,
    /// `Φ_{S,h}((curl E)_m(x)) ⊗ I`.
    #[serde(rename = "curl_E")]
    CurlE { axis: usize, point: [f64; 3] },
    /// Right side of the operator Bloch equation, `2((β + B(x_λ)) × S^{[λ]})_m`.
    BlochRate { spin: usize, axis: usize },
}

impl ObservableSpec {
    pub fn label(&self) -> String {
        match self {
            Self::FieldB { axis, point } => format!("field_B[{axis}]@{point:?}"),
            Self::FieldE { axis, point } => format!("field_E[{axis}]@{point:?}"),
            Self::FieldEPol { axis, point } => format!("field_E_pol[{axis}]@{point:?}"),
            Self::Spin { spin, axis } => format!("spin[{spin}][{axis}]"),
            Self::Number => "number".into(),
            Self::NumberRate => "number_rate".into(),
            Self::CurlE { axis, point } => format!("curl_E[{axis}]@{point:?}"),
            Self::BlochRate { spin, axis } => format!("bloch_rate[{spin}][{axis}]"),
        }
    }
}

/// Observable of the form `I ⊗ S_0 + Σ_k Φ_{S,h}(V_k) ⊗ M_k + c_N N ⊗ I`.
#[derive(Debug, Clone)]
pub struct LinearObservable {
    pub constant: SpinMatrix,
    pub fields: Vec<(PhaseVector, SpinMatrix)>,
    pub number: f64,
}

impl LinearObservable {
    pub fn resolve(spec: &ObservableSpec, model: &Model) -> Result<Self> {
        let n = model.spin_dim();
        let id = SpinMatrix::identity(n, n);
        let zero = SpinMatrix::zeros(n, n);
        let check_axis = |m: usize| {
            if m < 3 {
                Ok(())
            } else {
                Err(Error::Index {
                    what: "axis",
                    value: m,
                    lo: 0,
                    hi: 2,
                })
            }
        };
        let check_spin = |l: usize| {
            if l < model.n_spins() {
                Ok(())
            } else {
                Err(Error::Index {
                    what: "spin",
                    value: l,
                    lo: 0,
                    hi: model.n_spins() - 1,
                })
            }
        };
        let field = |v: PhaseVector| Self {
            constant: zero.clone(),
            fields: vec![(v, id.clone())],
            number: 0.0,
        };
        let pt = |p: &[f64; 3]| Vec3::new(p[0], p[1], p[2]);
        Ok(match spec {
            ObservableSpec::FieldB { axis, point } => field(model.coupling_b(*axis, &pt(point))?),
            ObservableSpec::FieldE { axis, point } => field(model.coupling_e(*axis, &pt(point))?),
            ObservableSpec::FieldEPol { axis, point } => field(model.coupling_e_pol(*axis, &pt(point))?),
            ObservableSpec::CurlE { axis, point } => {
                check_axis(*axis)?;
                field(model.curl_coupling_e(*axis, &pt(point))?)
            }
            ObservableSpec::Spin { spin, axis } => {
                check_spin(*spin)?;
                check_axis(*axis)?;
                Self {
                    constant: model.sigma(*spin, *axis).clone(),
                    fields: vec![],
                    number: 0.0,
                }
            }
            ObservableSpec::Number => Self {
                constant: zero,
                fields: vec![],
                number: 1.0,
            },
            ObservableSpec::NumberRate => {
                let mut fields = Vec::new();
                for l in 0..model.n_spins() {
                    for m in 0..3 {
                        fields.push((model.b(l, m).fcal().scale(-1.0), model.sigma(l, m).clone()));
                    }
                }
                Self {
                    constant: zero,
                    fields,
                    number: 0.0,
                }
            }
            ObservableSpec::BlochRate { spin, axis } => {
                check_spin(*spin)?;
                check_axis(*axis)?;
                let mut constant = zero;
                let mut fields = Vec::new();
                for m in 0..3 {
                    for l in 0..3 {
                        let e = levi_civita(*axis, m, l);
                        if e == 0.0 {
                            continue;
                        }
                        let s = model.sigma(*spin, l) * c(2.0 * e);
                        constant += &s * c(model.beta[m]);
                        fields.push((model.b(*spin, m).clone(), s));
                    }
                }
                Self {
                    constant,
                    fields,
                    number: 0.0,
                }
            }
        })
    }

    /// Tensor operator on the quantized modes, with the freely transported parts
    /// folded in as scalars at the classical point `x_free_t` (already flowed).
    fn assemble(
        &self,
        ham: &Hamiltonian,
        x_free_t: &PhaseVector,
        free_number: f64,
    ) -> Result<FockOperator> {
        let pd = ham.basis.dim();
        let mut spin_const = self.constant.clone() + SpinMatrix::identity(ham.spin_dim, ham.spin_dim) * c(self.number * free_number);
        let mut op = FockOperator::zero(ham.dim(), ham.h_int.kind);
        for (v, m) in &self.fields {
            let (va, vf) = ham.split(v)?;
            if va.norm() > 0.0 {
                op = op.add(&segal_field(&ham.basis, &va, ham.h)?.tensor(m)?)?;
            }
            if vf.dim() > 0 {
                spin_const += m * c(vf.dot(x_free_t));
            }
        }
        if self.number != 0.0 {
            op = op.add(&number_operator(&ham.basis).scale(c(self.number)).tensor(&SpinMatrix::identity(ham.spin_dim, ham.spin_dim))?)?;
        }
        op.add(&FockOperator::spin_only(pd, &spin_const))
    }
}

/// `e^{−i(t/h)H}(Ψ_X ⊗ e_i)` for every spin basis vector `e_i`.
#[derive(Debug, Clone)]
pub struct EvolvedStates {
    pub x: PhaseVector,
    pub t: f64,
    pub states: Vec<Vec<C64>>,
    /// Free-mode part of `χ_t X`.
    pub x_free_t: PhaseVector,
    /// `|X_free|² / (2h)`.
    pub free_number: f64,
    pub tail_mass: f64,
}

/// Exact dynamics on one truncated space for fixed `h`.
pub struct Oracle<'a> {
    pub model: &'a Model,
    pub ham: Hamiltonian,
    pub opts: PropagationOptions,
}

impl<'a> Oracle<'a> {
    pub fn new(model: &'a Model, ham: Hamiltonian, opts: PropagationOptions) -> Self {
        Self { model, ham, opts }
    }

    /// Evolves the coherent basis states at `X` to each of `times`.
    pub fn evolve_coherent(&self, x: &PhaseVector, times: &[f64]) -> Result<(Vec<EvolvedStates>, PropagationLog)> {
        let (xa, xf) = self.ham.split(x)?;
        let cs = coherent_state(&self.ham.basis, &xa, self.ham.h)?;
        if cs.tail_mass > self.opts.tail_threshold {
            return Err(Error::Truncation {
                tail: cs.tail_mass,
                threshold: self.opts.tail_threshold,
                n_max: self.ham.basis.n_max(),
            });
        }
        let prop = Propagator::new(&self.ham, self.opts);
        let mut per_time: Vec<Vec<Vec<C64>>> = vec![Vec::new(); times.len()];
        let mut log = PropagationLog::default();
        for i in 0..self.ham.spin_dim {
            let psi0 = tensor_with_spin_basis(&cs.amplitudes, self.ham.spin_dim, i);
            let (outs, l) = prop.evolve_times(psi0.as_slice(), times)?;
            log.merge(&l);
            if l.top_shell_mass > self.opts.tail_threshold {
                return Err(Error::Truncation {
                    tail: l.top_shell_mass,
                    threshold: self.opts.tail_threshold,
                    n_max: self.ham.basis.n_max(),
                });
            }
            for (k, v) in outs.into_iter().enumerate() {
                per_time[k].push(v);
            }
        }
        let free_number = xf.norm().powi(2) / (2.0 * self.ham.h);
        let out = times
            .iter()
            .zip(per_time)
            .map(|(&t, states)| {
                let xt = chi_flow(&self.model.grid, t, x);
                let (_, xf_t) = self.ham.split(&xt)?;
                Ok(EvolvedStates {
                    x: x.clone(),
                    t,
                    states,
                    x_free_t: xf_t,
                    free_number,
                    tail_mass: cs.tail_mass,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((out, log))
    }

    /// `S_{ji} = ⟨φ_j, A φ_i⟩` for the evolved states `φ_i`.
    pub fn symbol(&self, ev: &EvolvedStates, obs: &LinearObservable) -> Result<SpinMatrix> {
        let op = obs.assemble(&self.ham, &ev.x_free_t, ev.free_number)?;
        Ok(sandwich(&op, &ev.states))
    }

    pub fn symbol_of(&self, ev: &EvolvedStates, spec: &ObservableSpec) -> Result<SpinMatrix> {
        self.symbol(ev, &LinearObservable::resolve(spec, self.model)?)
    }

    /// Symbol of an arbitrary tensor operator on the quantized modes.
    pub fn symbol_custom(&self, ev: &EvolvedStates, op: &FockOperator) -> Result<SpinMatrix> {
        if op.dim() != self.ham.dim() {
            return Err(Error::Dimension {
                expected: self.ham.dim(),
                got: op.dim(),
            });
        }
        Ok(sandwich(op, &ev.states))
    }

    /// `⟨φ_i, H(h) φ_i⟩` for each evolved basis state.
    pub fn energies(&self, ev: &EvolvedStates) -> Vec<f64> {
        ev.states.iter().map(|s| self.ham.energy(s)).collect()
    }
}

fn sandwich(op: &FockOperator, states: &[Vec<C64>]) -> SpinMatrix {
    let n = states.len();
    let applied: Vec<Vec<C64>> = states
        .iter()
        .map(|s| {
            let mut y = vec![c(0.0); s.len()];
            op.apply(s, &mut y);
            y
        })
        .collect();
    SpinMatrix::from_fn(n, n, |j, i| states[j].iter().zip(&applied[i]).map(|(a, b)| a.conj() * b).sum())
}

/// One-shot `σ_h^{wick}(e^{i(t/h)H} A e^{−i(t/h)H})(X)`.
pub fn evolved_wick_symbol(
    model: &Model,
    ham: &Hamiltonian,
    spec: &ObservableSpec,
    t: f64,
    x: &PhaseVector,
    opts: PropagationOptions,
) -> Result<(SpinMatrix, PropagationLog)> {
    let oracle = Oracle::new(model, ham.clone(), opts);
    let (ev, log) = oracle.evolve_coherent(x, &[t])?;
    Ok((oracle.symbol_of(&ev[0], spec)?, log))
}

/// Wick symbol of the photon-number rate `N'(t, h)` at `X`.
pub fn photon_rate_exact(
    model: &Model,
    ham: &Hamiltonian,
    t: f64,
    x: &PhaseVector,
    opts: PropagationOptions,
) -> Result<(SpinMatrix, PropagationLog)> {
    evolved_wick_symbol(model, ham, &ObservableSpec::NumberRate, t, x, opts)
}
