use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FanoParameters {
    /// Background far from the resonance, fm².
    #[serde(rename = "sigma0_fm2")]
    pub sigma0: f64,
    pub q: f64,
    #[serde(rename = "E_r_keV")]
    pub e_r: f64,
    #[serde(rename = "Gamma_keV")]
    pub gamma: f64,
}

impl FanoParameters {
    pub fn new(sigma0: f64, q: f64, e_r: f64, gamma: f64) -> Result<Self> {
        let p = Self { sigma0, q, e_r, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return Err(Error::Config(format!("sigma0 must be positive, got {}", self.sigma0)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("Gamma must be positive, got {}", self.gamma)));
        }
        if !self.q.is_finite() || !self.e_r.is_finite() {
            return Err(Error::Config("q and E_r must be finite".into()));
        }
        Ok(())
    }

    /// Energy of the exact zero, `E_r - qΓ/2`.
    pub fn zero_energy(&self) -> f64 {
        self.e_r - 0.5 * self.q * self.gamma
    }

    /// Energy of the maximum, `E_r + Γ/(2q)`.
    pub fn peak_energy(&self) -> f64 {
        self.e_r + 0.5 * self.gamma / self.q
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.sigma0, self.q, self.e_r, self.gamma]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BreitWignerParameters {
    #[serde(rename = "sigma_bg_fm2")]
    pub sigma_bg: f64,
    #[serde(rename = "amplitude_fm2")]
    pub amplitude: f64,
    #[serde(rename = "E_r_keV")]
    pub e_r: f64,
    #[serde(rename = "Gamma_keV")]
    pub gamma: f64,
}

impl BreitWignerParameters {
    pub fn new(sigma_bg: f64, amplitude: f64, e_r: f64, gamma: f64) -> Result<Self> {
        let p = Self { sigma_bg, amplitude, e_r, gamma };
        if !(sigma_bg >= 0.0 && sigma_bg.is_finite()) {
            return Err(Error::Config(format!("sigma_bg must be >= 0, got {sigma_bg}")));
        }
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::Config(format!("amplitude must be positive, got {amplitude}")));
        }
        if !(gamma > 0.0 && gamma.is_finite()) || !e_r.is_finite() {
            return Err(Error::Config(format!("Gamma must be positive and E_r finite, got {gamma}, {e_r}")));
        }
        Ok(p)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.sigma_bg, self.amplitude, self.e_r, self.gamma]
    }
}

/// Reduced energy `ε = (E - E_r)/(Γ/2)`.
#[inline]
pub fn reduced_energy(e: f64, e_r: f64, gamma: f64) -> f64 {
    (e - e_r) / (0.5 * gamma)
}

/// `(q + ε)²/(1 + ε²)`.
#[inline]
pub fn fano_shape(epsilon: f64, q: f64) -> f64 {
    let t = q + epsilon;
    t * t / (1.0 + epsilon * epsilon)
}

pub fn fano_profile(e: f64, p: &FanoParameters) -> f64 {
    p.sigma0 * fano_shape(reduced_energy(e, p.e_r, p.gamma), p.q)
}

pub fn breit_wigner_profile(e: f64, p: &BreitWignerParameters) -> f64 {
    let eps = reduced_energy(e, p.e_r, p.gamma);
    p.sigma_bg + p.amplitude / (1.0 + eps * eps)
}

/// `∂σ/∂(σ₀, q, E_r, Γ)`.
pub fn fano_gradient(e: f64, p: &FanoParameters) -> [f64; 4] {
    let eps = reduced_energy(e, p.e_r, p.gamma);
    let d = 1.0 + eps * eps;
    let t = p.q + eps;
    let d_eps = 2.0 * p.sigma0 * t * (1.0 - p.q * eps) / (d * d);
    [
        t * t / d,
        2.0 * p.sigma0 * t / d,
        d_eps * (-2.0 / p.gamma),
        d_eps * (-eps / p.gamma),
    ]
}

/// `∂σ/∂(σ_bg, amplitude, E_r, Γ)`.
pub fn breit_wigner_gradient(e: f64, p: &BreitWignerParameters) -> [f64; 4] {
    let eps = reduced_energy(e, p.e_r, p.gamma);
    let d = 1.0 + eps * eps;
    let d_eps = -2.0 * p.amplitude * eps / (d * d);
    [1.0, 1.0 / d, d_eps * (-2.0 / p.gamma), d_eps * (-eps / p.gamma)]
}
