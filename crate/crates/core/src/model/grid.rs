use super::config::{CutoffConfig, ModelConfig};
use crate::error::{Error, Result};
use gauss_quad::GaussLegendre;
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

pub type Vec3 = Vector3<f64>;

/// Ultraviolet cutoff `χ(|k|)`.
#[derive(Clone)]
pub enum Cutoff {
    /// `χ(r) = exp(−r² / (2Λ²))`.
    Gaussian { lambda: f64 },
    /// Plug-in hook for any other profile.
    Custom {
        name: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for Cutoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cutoff::Gaussian { lambda } => write!(f, "Gaussian(lambda={lambda})"),
            Cutoff::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl Cutoff {
    pub fn from_config(c: &CutoffConfig) -> Result<Self> {
        match c.family.as_str() {
            "gaussian" => Ok(Cutoff::Gaussian { lambda: c.lambda }),
            // decoupled control: every coupling vanishes
            "zero" => Ok(Self::custom("zero", |_| 0.0)),
            other => Err(Error::Config(format!(
                "unknown cutoff family '{other}' (use a custom hook)"
            ))),
        }
    }

    pub fn custom(name: &str, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Cutoff::Custom {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    /// `χ ≡ 1`, handy for closed-form checks on hand-built grids.
    pub fn unit() -> Self {
        Self::custom("unit", |_| 1.0)
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Cutoff::Gaussian { lambda } => (-r * r / (2.0 * lambda * lambda)).exp(),
            Cutoff::Custom { f, .. } => f(r),
        }
    }

    pub fn name(&self) -> String {
        format!("{self:?}")
    }

    /// Radius beyond which a Gaussian cutoff is below `1e-12`.
    pub fn default_kmax(&self) -> f64 {
        match self {
            Cutoff::Gaussian { lambda } => lambda * (2.0 * 1e12f64.ln()).sqrt(),
            Cutoff::Custom { .. } => 8.0,
        }
    }
}

/// Finite quadrature discretization of the transverse one-photon space.
///
/// Mode `j = 4i + 2c + a` belongs to k-point `i`, parity `c` (0 = cos, 1 = sin)
/// and polarization `a` (frame vector `ε_{a+1}`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeGrid {
    pub kpoints: Vec<Vec3>,
    pub weights: Vec<f64>,
    pub frames: Vec<(Vec3, Vec3)>,
    pub omegas: Vec<f64>,
}

pub const COS: usize = 0;
pub const SIN: usize = 1;

/// Mode index of (k-point, parity, polarization).
#[inline]
pub fn mode_index(i: usize, parity: usize, pol: usize) -> usize {
    4 * i + 2 * parity + pol
}

/// Transverse frame with `ε₂ = k̂ × ε₁`; for `k̂ = ẑ` this is `(x̂, ŷ)`.
pub fn frame_for(k: &Vec3) -> Result<(Vec3, Vec3)> {
    let n = k.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Grid("zero or non-finite k-point".into()));
    }
    let kh = k / n;
    let seed = if kh.x.abs() < 0.9 {
        Vec3::x()
    } else {
        Vec3::y()
    };
    let e1 = seed - kh * kh.dot(&seed);
    let len = e1.norm();
    if len < 1e-8 {
        return Err(Error::Grid("degenerate frame".into()));
    }
    let e1 = e1 / len;
    let e2 = kh.cross(&e1);
    Ok((e1, e2))
}

impl ModeGrid {
    /// Grid from explicit k-points and weights.
    pub fn from_points(kpoints: Vec<Vec3>, weights: Vec<f64>) -> Result<Self> {
        if kpoints.is_empty() {
            return Err(Error::Grid("no k-points".into()));
        }
        if kpoints.len() != weights.len() {
            return Err(Error::Dimension {
                expected: kpoints.len(),
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::Grid("weights must be positive".into()));
        }
        let frames = kpoints.iter().map(frame_for).collect::<Result<Vec<_>>>()?;
        let omegas = kpoints.iter().map(|k| k.norm()).collect();
        let g = Self {
            kpoints,
            weights,
            frames,
            omegas,
        };
        g.check_frames(1e-14)?;
        Ok(g)
    }

    /// Radial Gauss–Legendre nodes on `(0, kmax]` times equally weighted directions.
    pub fn build(config: &ModelConfig, cutoff: &Cutoff) -> Result<Self> {
        let dirs = config.grid.directions.resolve()?;
        if dirs.is_empty() {
            return Err(Error::Grid("direction set is empty".into()));
        }
        let n = config.grid.radial_nodes;
        if n == 0 {
            return Err(Error::Grid("need at least one radial node".into()));
        }
        let kmax = config.grid.kmax.unwrap_or_else(|| cutoff.default_kmax());
        let radial: Vec<(f64, f64)> = if n == 1 {
            vec![(0.0, 2.0)]
        } else {
            GaussLegendre::new(n)
                .map_err(|e| Error::Grid(e.to_string()))?
                .as_node_weight_pairs()
                .to_vec()
        };
        let mut radial: Vec<(f64, f64)> = radial
            .into_iter()
            .map(|(x, w)| (0.5 * kmax * (x + 1.0), 0.5 * kmax * w))
            .collect();
        radial.sort_by(|a, b| a.0.total_cmp(&b.0));
        let dw = 4.0 * PI / dirs.len() as f64;
        let mut kp = Vec::new();
        let mut wt = Vec::new();
        for &(r, w) in &radial {
            for d in &dirs {
                let u = Vec3::new(d[0], d[1], d[2]);
                let len = u.norm();
                if !(len > 0.0) {
                    return Err(Error::Grid("zero direction vector".into()));
                }
                kp.push(u * (r / len));
                wt.push(r * r * w * dw);
            }
        }
        Self::from_points(kp, wt)
    }

    pub fn n_kpoints(&self) -> usize {
        self.kpoints.len()
    }

    /// Real dimension `D` of the one-photon space.
    pub fn dim(&self) -> usize {
        4 * self.kpoints.len()
    }

    pub fn mode_omega(&self, j: usize) -> f64 {
        self.omegas[j / 4]
    }

    /// Diagonal of `M_ω` over all modes.
    pub fn mode_omegas(&self) -> Vec<f64> {
        (0..self.dim()).map(|j| self.mode_omega(j)).collect()
    }

    pub fn frame_vector(&self, i: usize, pol: usize) -> &Vec3 {
        if pol == 0 {
            &self.frames[i].0
        } else {
            &self.frames[i].1
        }
    }

    pub fn check_frames(&self, tol: f64) -> Result<()> {
        for (i, k) in self.kpoints.iter().enumerate() {
            let kh = k / k.norm();
            let (e1, e2) = &self.frames[i];
            let bad = e1.dot(k).abs() > tol * k.norm()
                || e2.dot(k).abs() > tol * k.norm()
                || e1.dot(e2).abs() > tol
                || (e1.norm() - 1.0).abs() > tol
                || (e2.norm() - 1.0).abs() > tol
                || (kh.cross(e1) - e2).norm() > tol;
            if bad {
                return Err(Error::Grid(format!("frame {i} violates orthonormality")));
            }
            if !(self.omegas[i] > 0.0) {
                return Err(Error::Grid(format!("non-positive frequency at {i}")));
            }
        }
        Ok(())
    }

    /// Groups modes by frequency (tolerance relative 1e-12); returns `(ω, mode indices)`.
    pub fn frequency_shells(&self) -> Vec<(f64, Vec<usize>)> {
        let mut shells: Vec<(f64, Vec<usize>)> = Vec::new();
        for j in 0..self.dim() {
            let w = self.mode_omega(j);
            match shells
                .iter_mut()
                .find(|(v, _)| (v - w).abs() <= 1e-12 * w.max(1.0))
            {
                Some((_, idx)) => idx.push(j),
                None => shells.push((w, vec![j])),
            }
        }
        shells
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::config::{Directions, ModelConfig};

    #[test]
    fn minimal_grid() {
        let c = ModelConfig::minimal([0.0; 3]);
        let g = ModeGrid::build(&c, &Cutoff::Gaussian { lambda: 1.0 }).unwrap();
        assert_eq!(g.n_kpoints(), 1);
        assert_eq!(g.dim(), 4);
        assert!((g.omegas[0] - 1.0).abs() < 1e-15);
        // r² · radial weight · 4π
        assert!((g.weights[0] - 8.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn octahedral_two_nodes() {
        let mut c = ModelConfig::minimal([0.0; 3]);
        c.grid.radial_nodes = 2;
        c.grid.directions = Directions::Named("octahedral".into());
        let g = ModeGrid::build(&c, &Cutoff::Gaussian { lambda: 1.0 }).unwrap();
        assert_eq!(g.n_kpoints(), 12);
        assert_eq!(g.dim(), 48);
        assert_eq!(g.frequency_shells().len(), 2);
    }

    #[test]
    fn frame_for_z_axis() {
        let (e1, e2) = frame_for(&Vec3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(e1, Vec3::x());
        assert!((e2 - Vec3::y()).norm() < 1e-15);
    }

    #[test]
    fn rejects_zero_kpoint() {
        assert!(ModeGrid::from_points(vec![Vec3::zeros()], vec![1.0]).is_err());
    }

    #[test]
    fn radial_weights_integrate_gaussian_moment() {
        // ∫_0^kmax r² e^{-r²} dr · 4π with 40 nodes ≈ π^{3/2}
        let mut c = ModelConfig::minimal([0.0; 3]);
        c.grid.radial_nodes = 40;
        c.grid.kmax = Some(7.0);
        let g = ModeGrid::build(&c, &Cutoff::Gaussian { lambda: 1.0 }).unwrap();
        let s: f64 = g
            .kpoints
            .iter()
            .zip(&g.weights)
            .map(|(k, w)| w * (-k.norm_squared()).exp())
            .sum();
        assert!((s - PI.powf(1.5)).abs() < 1e-9, "{s} vs {}", PI.powf(1.5));
    }
}
