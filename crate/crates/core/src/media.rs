//! Lorentz-oscillator media, the block-diagonal material tensor and its noise spectra.

use crate::dual::{block_diag, blocks, cx, modulus, Mat3, Mat6};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::units::UnitsMode;
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sector {
    Electric,
    Magnetic,
}

/// `χ(ω) = strength / (ω0² − ω² − iγω)`.
///
/// `strength` is `1/(M ε0)` for the electric sector and `μ0/M` for the magnetic one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzOscillator<T> {
    pub omega0: T,
    pub gamma: T,
    pub strength: T,
}

impl<T: Real> LorentzOscillator<T> {
    pub fn new(omega0: T, gamma: T, strength: T) -> Result<Self> {
        let ok = |x: T| x.is_finite() && x >= T::zero();
        if !ok(omega0) || !ok(strength) {
            return Err(Error::Invalid("omega0 and strength must be finite and non-negative".into()));
        }
        if !gamma.is_finite() || gamma < T::zero() {
            return Err(Error::Active(format!("damping {} < 0", gamma.as_f64())));
        }
        Ok(LorentzOscillator { omega0, gamma, strength })
    }

    fn denominator(&self, omega: T) -> Result<Complex<T>> {
        let d = Complex::new(self.omega0 * self.omega0 - omega * omega, -self.gamma * omega);
        if modulus(d) == T::zero() {
            return Err(Error::Pole(format!("lossless resonance at omega = {}", omega.as_f64())));
        }
        Ok(d)
    }
}

pub fn susceptibility<T: Real>(osc: &LorentzOscillator<T>, omega: T) -> Result<Complex<T>> {
    if !omega.is_finite() {
        return Err(Error::Invalid("frequency must be finite".into()));
    }
    Ok(cx(osc.strength) / osc.denominator(omega)?)
}

/// Block-diagonal dual material tensor `diag(ε, μ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialTensor<T: Real> {
    pub eps: Mat3<T>,
    pub mu: Mat3<T>,
}

impl<T: Real> MaterialTensor<T> {
    pub fn vacuum() -> Self {
        Self::isotropic(cx(T::one()), cx(T::one()))
    }

    pub fn isotropic(eps: Complex<T>, mu: Complex<T>) -> Self {
        MaterialTensor { eps: Mat3::identity() * eps, mu: Mat3::identity() * mu }
    }

    pub fn full(&self) -> Mat6<T> {
        block_diag(&self.eps, &self.mu)
    }

    /// Splits a 6×6 tensor; fails if the off-diagonal blocks are not zero.
    pub fn from_full(m: &Mat6<T>) -> Result<Self> {
        let [ee, eh, he, hh] = blocks(m);
        if eh.iter().chain(he.iter()).any(|z| modulus(*z) != T::zero()) {
            return Err(Error::Invalid("material tensor must be block diagonal".into()));
        }
        Ok(MaterialTensor { eps: ee, mu: hh })
    }

    /// Scalar ε and μ when the tensor is isotropic.
    pub fn scalars(&self) -> Option<(Complex<T>, Complex<T>)> {
        let iso = |m: &Mat3<T>| {
            let d = m[(0, 0)];
            let off = (0..3).all(|i| (0..3).all(|j| i == j || m[(i, j)] == cx(T::zero())));
            (off && m[(1, 1)] == d && m[(2, 2)] == d).then_some(d)
        };
        Some((iso(&self.eps)?, iso(&self.mu)?))
    }

    pub fn transpose(&self) -> Self {
        MaterialTensor { eps: self.eps.transpose(), mu: self.mu.transpose() }
    }

    pub fn is_reciprocal(&self) -> bool {
        self.eps == self.eps.transpose() && self.mu == self.mu.transpose()
    }

    /// Smallest eigenvalue of the anti-Hermitian part ε̄_I.
    pub fn min_loss_eigenvalue(&self) -> T {
        let (_, im) = hermitian_split(self);
        im.symmetric_eigenvalues().iter().copied().fold(T::max_value().unwrap(), |a, b| a.min(b))
    }

    pub fn is_passive(&self, tol: T) -> bool {
        self.min_loss_eigenvalue() >= -tol
    }

    pub fn is_lossless(&self, tol: T) -> bool {
        let (_, im) = hermitian_split(self);
        im.iter().all(|z| modulus(*z) <= tol)
    }
}

/// `ε̄ = I + diag(χe, χm)` from full 3×3 susceptibility blocks.
pub fn material_tensor<T: Real>(chi_e: &Mat3<T>, chi_m: &Mat3<T>) -> MaterialTensor<T> {
    MaterialTensor { eps: Mat3::identity() + chi_e, mu: Mat3::identity() + chi_m }
}

/// Isotropic version of [`material_tensor`].
pub fn material_tensor_scalar<T: Real>(chi_e: Complex<T>, chi_m: Complex<T>) -> MaterialTensor<T> {
    MaterialTensor::isotropic(cx(T::one()) + chi_e, cx(T::one()) + chi_m)
}

/// `(ε̄_R, ε̄_I)` with `ε̄ = ε̄_R + i ε̄_I`, both Hermitian.
pub fn hermitian_split<T: Real>(m: &MaterialTensor<T>) -> (Mat6<T>, Mat6<T>) {
    let f = m.full();
    let a = f.adjoint();
    let re = (f + a) * cx(T::lit(0.5));
    let im = (f - a) * Complex::new(T::zero(), -T::lit(0.5));
    (re, im)
}

/// Reduced mass `M̃` entering the Markov condition: `M_P ε0²` (electric) or `M_M / Z0²` (magnetic).
pub fn mass_tilde<T: Real>(osc: &LorentzOscillator<T>, sector: Sector, units: UnitsMode) -> Result<T> {
    if !(osc.strength > T::zero()) {
        return Err(Error::Invalid("mass is undefined for zero strength".into()));
    }
    let c = units.constants();
    Ok(match sector {
        Sector::Electric => T::lit(c.eps0) / osc.strength,
        Sector::Magnetic => T::lit(c.mu0 / (c.z0 * c.z0)) / osc.strength,
    })
}

/// `|κ|² = M̃ ħ γ ω / (4π³)`.
pub fn markov_coupling<T: Real>(osc: &LorentzOscillator<T>, mass_tilde: T, omega: T, units: UnitsMode) -> Result<T> {
    if !(omega > T::zero()) {
        return Err(Error::Invalid("Markov coupling needs omega > 0".into()));
    }
    let pi = T::pi();
    Ok(mass_tilde * T::lit(units.constants().hbar) * osc.gamma * omega / (T::lit(4.0) * pi * pi * pi))
}

/// Noise spectrum `χ_N` of one oscillator, with the coupling fixed by the Markov condition.
pub fn noise_spectrum<T: Real>(osc: &LorentzOscillator<T>, sector: Sector, omega: T, units: UnitsMode) -> Result<Complex<T>> {
    if !(omega > T::zero()) {
        return Err(Error::Invalid("noise spectrum needs omega > 0".into()));
    }
    let d = osc.denominator(omega)?;
    if osc.strength == T::zero() || osc.gamma == T::zero() {
        return Ok(cx(T::zero()));
    }
    let c = units.constants();
    let kappa = markov_coupling(osc, mass_tilde(osc, sector, units)?, omega, units)?.sqrt();
    let coupling = match sector {
        Sector::Electric => osc.strength,
        Sector::Magnetic => osc.strength * T::lit(c.z0 / c.mu0),
    };
    Ok(Complex::new(T::zero(), T::two_pi() * kappa * coupling) / d)
}

/// Isotropic medium made of Lorentz oscillators in both sectors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LorentzMaterial<T> {
    pub oscillators: Vec<(Sector, LorentzOscillator<T>)>,
}

impl<T: Real> LorentzMaterial<T> {
    pub fn susceptibilities(&self, omega: T) -> Result<(Complex<T>, Complex<T>)> {
        let mut chi = (cx(T::zero()), cx(T::zero()));
        for (s, o) in &self.oscillators {
            let x = susceptibility(o, omega)?;
            match s {
                Sector::Electric => chi.0 += x,
                Sector::Magnetic => chi.1 += x,
            }
        }
        Ok(chi)
    }

    pub fn tensor(&self, omega: T) -> Result<MaterialTensor<T>> {
        let (e, m) = self.susceptibilities(omega)?;
        Ok(material_tensor_scalar(e, m))
    }
}

/// One oscillator entry of a material file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorSpec {
    pub sector: Sector,
    pub omega0: f64,
    pub gamma: f64,
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub z_min: f64,
    pub z_max: f64,
    pub material: String,
}

/// Material definition file: named oscillator lists plus a layer stack in vacuum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialFile {
    pub materials: BTreeMap<String, Vec<OscillatorSpec>>,
    #[serde(default)]
    pub layers: Vec<LayerSpec>,
}

impl MaterialFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let f: MaterialFile = serde_json::from_str(text)?;
        f.validate()?;
        Ok(f)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, list) in &self.materials {
            for o in list {
                LorentzOscillator::new(o.omega0, o.gamma, o.strength)
                    .map_err(|e| Error::Invalid(format!("material '{name}': {e}")))?;
            }
        }
        let mut prev = f64::NEG_INFINITY;
        for l in &self.layers {
            if !(l.z_max > l.z_min) || !l.z_min.is_finite() || !l.z_max.is_finite() {
                return Err(Error::Invalid(format!("layer [{}, {}] is empty", l.z_min, l.z_max)));
            }
            if l.z_min < prev {
                return Err(Error::Invalid(format!("layer starting at {} overlaps or is out of order", l.z_min)));
            }
            if !self.materials.contains_key(&l.material) {
                return Err(Error::Invalid(format!("unknown material '{}'", l.material)));
            }
            prev = l.z_max;
        }
        Ok(())
    }

    pub fn material(&self, name: &str) -> Result<LorentzMaterial<f64>> {
        let list = self.materials.get(name).ok_or_else(|| Error::Invalid(format!("unknown material '{name}'")))?;
        Ok(LorentzMaterial {
            oscillators: list
                .iter()
                .map(|o| Ok((o.sector, LorentzOscillator::new(o.omega0, o.gamma, o.strength)?)))
                .collect::<Result<_>>()?,
        })
    }

    /// Evaluates the layer stack at one frequency.
    pub fn profile(&self, omega: f64) -> Result<MaterialProfile> {
        let layers = self
            .layers
            .iter()
            .map(|l| Ok((l.z_min, l.z_max, self.material(&l.material)?.tensor(omega)?)))
            .collect::<Result<_>>()?;
        MaterialProfile::new(layers)
    }
}

/// Piecewise-constant profile along z in a vacuum background.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialProfile {
    pub layers: Vec<(f64, f64, MaterialTensor<f64>)>,
}

impl MaterialProfile {
    pub fn new(layers: Vec<(f64, f64, MaterialTensor<f64>)>) -> Result<Self> {
        let mut prev = f64::NEG_INFINITY;
        for (a, b, _) in &layers {
            if !(b > a) || *a < prev {
                return Err(Error::Invalid("layers must be non-empty, ordered and disjoint".into()));
            }
            prev = *b;
        }
        Ok(MaterialProfile { layers })
    }

    pub fn at(&self, z: f64) -> MaterialTensor<f64> {
        self.layers
            .iter()
            .find(|(a, b, _)| z >= *a && z < *b)
            .map(|l| l.2)
            .unwrap_or_else(MaterialTensor::vacuum)
    }

    /// Interval containing every point where the medium differs from vacuum.
    pub fn support(&self) -> Option<(f64, f64)> {
        Some((self.layers.first()?.0, self.layers.last()?.1))
    }
}
