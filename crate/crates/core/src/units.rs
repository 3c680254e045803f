//! Unit system switch. Every physical prefactor goes through [`UnitsMode`].

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitsMode {
    /// ħ = ε0 = c = Z0 = 1, so k0 = ω.
    #[default]
    Dimensionless,
    /// CODATA 2018 constants.
    Si,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub hbar: f64,
    pub eps0: f64,
    pub mu0: f64,
    pub c: f64,
    pub z0: f64,
}

impl UnitsMode {
    pub fn constants(self) -> Constants {
        match self {
            UnitsMode::Dimensionless => Constants { hbar: 1.0, eps0: 1.0, mu0: 1.0, c: 1.0, z0: 1.0 },
            UnitsMode::Si => {
                let c = 299_792_458.0;
                let mu0 = 1.256_637_062_12e-6;
                let eps0 = 8.854_187_812_8e-12;
                Constants { hbar: 1.054_571_817e-34, eps0, mu0, c, z0: mu0 * c }
            }
        }
    }

    /// Free-space wavenumber k0 = ω/c.
    pub fn k0(self, omega: f64) -> f64 {
        omega / self.constants().c
    }

    /// ħ/(π ε0): weight of the volume noise commutator per unit ε̄_I.
    pub fn volume_noise_prefactor(self) -> f64 {
        let c = self.constants();
        c.hbar / (PI * c.eps0)
    }

    /// ħ k0/(2π ε0): weight of the boundary (incoming vacuum) channel.
    pub fn boundary_prefactor(self, k0: f64) -> f64 {
        let c = self.constants();
        c.hbar * k0 / (2.0 * PI * c.eps0)
    }

    /// ħ k0/(π ε0): field commutator in terms of Im g.
    pub fn commutator_prefactor(self, k0: f64) -> f64 {
        2.0 * self.boundary_prefactor(k0)
    }

    pub fn label(self) -> &'static str {
        match self {
            UnitsMode::Dimensionless => "dimensionless",
            UnitsMode::Si => "si",
        }
    }
}
