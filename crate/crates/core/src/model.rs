//! Units, physical constants and the n + n + core system configuration.
//!
//! Energies are carried in MeV inside the library; keV appears only in the
//! JSON/CSV surfaces. Momenta are in fm⁻¹. Pair interactions are rank-one
//! separable s-wave potentials with form factor `g(p) = 1/(p² + β²)`, which
//! gives the two-body propagator in closed form.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots;

pub const KEV_PER_MEV: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalConstants {
    /// ħc in MeV·fm.
    #[serde(rename = "hbar_c_MeV_fm")]
    pub hbar_c: f64,
    /// Nucleon (neutron) mass in MeV/c².
    #[serde(rename = "nucleon_mass_MeV")]
    pub nucleon_mass: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            hbar_c: 197.327,
            nucleon_mass: 939.565,
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        if !(self.hbar_c > 0.0 && self.hbar_c.is_finite()) {
            return Err(Error::Config(format!("hbar_c must be positive, got {}", self.hbar_c)));
        }
        if !(self.nucleon_mass > 0.0 && self.nucleon_mass.is_finite()) {
            return Err(Error::Config(format!(
                "nucleon_mass must be positive, got {}",
                self.nucleon_mass
            )));
        }
        Ok(())
    }

    /// (ħc)²/m_N in MeV·fm²: converts fm⁻² (in units ħ = m_N = 1) to MeV.
    pub fn energy_unit(&self) -> f64 {
        self.hbar_c * self.hbar_c / self.nucleon_mass
    }

    pub fn mev_to_internal(&self, e_mev: f64) -> f64 {
        e_mev / self.energy_unit()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelLabel {
    NeutronCore,
    NeutronNeutron,
}

impl std::fmt::Display for ChannelLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ChannelLabel::NeutronCore => f.write_str("nc"),
            ChannelLabel::NeutronNeutron => f.write_str("nn"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoleKind {
    Bound,
    Virtual,
}

impl PoleKind {
    fn sign(self) -> f64 {
        match self {
            PoleKind::Bound => 1.0,
            PoleKind::Virtual => -1.0,
        }
    }
}

/// A scattering length, which diverges for a pole sitting exactly at threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScatteringLength {
    Finite(f64),
    Unitary,
}

impl ScatteringLength {
    pub fn finite(self) -> Option<f64> {
        match self {
            ScatteringLength::Finite(a) => Some(a),
            ScatteringLength::Unitary => None,
        }
    }
}

/// How the scattering length is derived from the pole position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScatteringLengthRelation {
    /// `|a| = ħc/√(2μ ε₂)`.
    #[default]
    ZeroRange,
    /// Exact low-energy limit of the rational form-factor amplitude,
    /// `a = 2(β+γ)²/(βγ(2β+γ))` with `γ = 1/a_zero_range`.
    FiniteRange,
}

/// One pair interaction, parameterized by its two-body pole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairChannel {
    pub label: ChannelLabel,
    pub pole_kind: PoleKind,
    /// Magnitude of the pole energy below the pair threshold, MeV.
    pub epsilon2_mev: f64,
    /// Form-factor range parameter β, fm⁻¹.
    pub beta: f64,
    pub scattering_length: ScatteringLength,
}

impl PairChannel {
    /// Builds a channel from its pole energy and stores the zero-range scattering length.
    pub fn from_pole(
        label: ChannelLabel,
        pole_kind: PoleKind,
        epsilon2_mev: f64,
        beta: f64,
        mu_mev: f64,
        constants: &PhysicalConstants,
    ) -> Result<Self> {
        if !(epsilon2_mev >= 0.0 && epsilon2_mev.is_finite()) {
            return Err(Error::Config(format!(
                "{label}: epsilon2 must be finite and >= 0, got {epsilon2_mev} MeV"
            )));
        }
        let mut channel = Self {
            label,
            pole_kind,
            epsilon2_mev,
            beta,
            scattering_length: ScatteringLength::Unitary,
        };
        channel.scattering_length = match scattering_length_from_pole(&channel, mu_mev, constants) {
            Ok(a) => ScatteringLength::Finite(a),
            Err(Error::UnitaryLimit) => ScatteringLength::Unitary,
            Err(e) => return Err(e),
        };
        channel.validate()?;
        Ok(channel)
    }

    /// Builds a channel from a (zero-range) scattering length; the sign fixes the pole kind.
    pub fn from_scattering_length(
        label: ChannelLabel,
        a_fm: f64,
        beta: f64,
        mu_mev: f64,
        constants: &PhysicalConstants,
    ) -> Result<Self> {
        if a_fm == 0.0 || !a_fm.is_finite() {
            return Err(Error::Config(format!(
                "{label}: scattering length must be finite and nonzero, got {a_fm} fm"
            )));
        }
        let pole_kind = if a_fm > 0.0 { PoleKind::Bound } else { PoleKind::Virtual };
        let epsilon2_mev = pole_energy_from_scattering_length(a_fm, mu_mev, constants);
        let channel = Self {
            label,
            pole_kind,
            epsilon2_mev,
            beta,
            scattering_length: ScatteringLength::Finite(a_fm),
        };
        channel.validate()?;
        Ok(channel)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!(
                "{}: beta must be positive, got {} fm^-1",
                self.label, self.beta
            )));
        }
        if let ScatteringLength::Finite(a) = self.scattering_length {
            let sign_ok = match self.pole_kind {
                PoleKind::Bound => a > 0.0,
                PoleKind::Virtual => a < 0.0,
            };
            if !sign_ok {
                return Err(Error::Config(format!(
                    "{}: scattering length {a} fm inconsistent with {:?} pole",
                    self.label, self.pole_kind
                )));
            }
            // The rational form factor only supports a virtual pole inside its range.
            if a < 0.0 && self.beta * a.abs() <= 1.0 {
                return Err(Error::Config(format!(
                    "{}: virtual pole requires beta > 1/|a| (beta = {}, a = {a} fm)",
                    self.label, self.beta
                )));
            }
        }
        Ok(())
    }

    pub fn epsilon2_kev(&self) -> f64 {
        self.epsilon2_mev * KEV_PER_MEV
    }

    /// Signed pole momentum γ (fm⁻¹): `+√(2με₂)/ħc` for a bound pole, negative for a virtual one.
    pub fn pole_momentum(&self, mu_mev: f64, constants: &PhysicalConstants) -> f64 {
        self.pole_kind.sign() * (2.0 * mu_mev * self.epsilon2_mev).sqrt() / constants.hbar_c
    }
}

/// `ε₂ = (ħc)²/(2μa²)`.
pub fn pole_energy_from_scattering_length(a_fm: f64, mu_mev: f64, constants: &PhysicalConstants) -> f64 {
    constants.hbar_c * constants.hbar_c / (2.0 * mu_mev * a_fm * a_fm)
}

/// The n + n + core system.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub core_mass_number: u32,
    pub nc_channel: PairChannel,
    pub nn_channel: PairChannel,
    pub constants: PhysicalConstants,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        if self.core_mass_number < 1 {
            return Err(Error::Config("core_mass_number must be >= 1".into()));
        }
        if self.nc_channel.label != ChannelLabel::NeutronCore {
            return Err(Error::Config("nc channel carries the wrong label".into()));
        }
        if self.nn_channel.label != ChannelLabel::NeutronNeutron {
            return Err(Error::Config("nn channel carries the wrong label".into()));
        }
        self.nc_channel.validate()?;
        self.nn_channel.validate()
    }

    pub fn mass_ratio(&self) -> f64 {
        self.core_mass_number as f64
    }

    pub fn channel(&self, label: ChannelLabel) -> &PairChannel {
        match label {
            ChannelLabel::NeutronCore => &self.nc_channel,
            ChannelLabel::NeutronNeutron => &self.nn_channel,
        }
    }

    pub fn pole_momentum(&self, label: ChannelLabel) -> f64 {
        self.channel(label)
            .pole_momentum(reduced_mass(self, label), &self.constants)
    }

    /// Lowest two-body threshold in MeV relative to three-body breakup:
    /// `-ε₂` of the deepest bound pair, or 0 when no pair is bound.
    pub fn lowest_threshold_mev(&self) -> f64 {
        [&self.nc_channel, &self.nn_channel]
            .iter()
            .filter(|c| c.pole_kind == PoleKind::Bound)
            .map(|c| -c.epsilon2_mev)
            .fold(0.0, f64::min)
    }

    /// The n + (n+core) threshold, when the neutron–core pair is bound.
    pub fn dimer_threshold_mev(&self) -> Option<f64> {
        (self.nc_channel.pole_kind == PoleKind::Bound).then(|| -self.nc_channel.epsilon2_mev)
    }

    /// Returns a copy with the neutron–core pole energy replaced (range kept).
    pub fn with_nc_epsilon2(&self, epsilon2_mev: f64) -> Result<Self> {
        let mu = reduced_mass(self, ChannelLabel::NeutronCore);
        let nc = PairChannel::from_pole(
            ChannelLabel::NeutronCore,
            self.nc_channel.pole_kind,
            epsilon2_mev,
            self.nc_channel.beta,
            mu,
            &self.constants,
        )?;
        Ok(Self { nc_channel: nc, ..self.clone() })
    }

    /// Returns a copy with the neutron–core range parameter replaced (pole kept).
    pub fn with_nc_beta(&self, beta: f64) -> Result<Self> {
        let mut out = self.clone();
        out.nc_channel.beta = beta;
        out.nc_channel.validate()?;
        Ok(out)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let spec: SystemSpec = serde_json::from_str(s)?;
        spec.build()
    }

    pub fn to_spec(&self) -> SystemSpec {
        let channel_spec = |c: &PairChannel| ChannelSpec {
            pole: Some(c.pole_kind),
            epsilon2_kev: Some(c.epsilon2_kev()),
            scattering_length_fm: None,
            beta_inv_fm: c.beta,
        };
        SystemSpec {
            core_mass_number: self.core_mass_number,
            nc: channel_spec(&self.nc_channel),
            nn: channel_spec(&self.nn_channel),
            constants: (self.constants != PhysicalConstants::default()).then_some(self.constants),
        }
    }
}

/// Default ²⁰C setup: bound n–¹⁸C pole at the given energy, singlet nn virtual state.
pub fn carbon20(epsilon2_kev: f64) -> Result<SystemConfig> {
    SystemSpec {
        core_mass_number: 18,
        nc: ChannelSpec::bound(epsilon2_kev, 1.0),
        nn: ChannelSpec::virtual_nn(),
        constants: None,
    }
    .build()
}

pub const DEFAULT_NN_SCATTERING_LENGTH_FM: f64 = -18.5;
pub const DEFAULT_BETA_INV_FM: f64 = 1.0;

/// JSON form of one pair channel. Exactly one of `epsilon2_keV` or
/// `scattering_length_fm` is required; both are accepted when consistent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pole: Option<PoleKind>,
    #[serde(rename = "epsilon2_keV", default, skip_serializing_if = "Option::is_none")]
    pub epsilon2_kev: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scattering_length_fm: Option<f64>,
    #[serde(default = "default_beta")]
    pub beta_inv_fm: f64,
}

fn default_beta() -> f64 {
    DEFAULT_BETA_INV_FM
}

impl ChannelSpec {
    pub fn bound(epsilon2_kev: f64, beta_inv_fm: f64) -> Self {
        Self {
            pole: Some(PoleKind::Bound),
            epsilon2_kev: Some(epsilon2_kev),
            scattering_length_fm: None,
            beta_inv_fm,
        }
    }

    pub fn scattering_length(a_fm: f64, beta_inv_fm: f64) -> Self {
        Self {
            pole: None,
            epsilon2_kev: None,
            scattering_length_fm: Some(a_fm),
            beta_inv_fm,
        }
    }

    pub fn virtual_nn() -> Self {
        Self {
            pole: Some(PoleKind::Virtual),
            ..Self::scattering_length(DEFAULT_NN_SCATTERING_LENGTH_FM, DEFAULT_BETA_INV_FM)
        }
    }

    fn build(
        &self,
        label: ChannelLabel,
        mu_mev: f64,
        constants: &PhysicalConstants,
    ) -> Result<PairChannel> {
        let channel = match (self.epsilon2_kev, self.scattering_length_fm) {
            (None, None) => {
                return Err(Error::Config(format!(
                    "{label}: one of epsilon2_keV or scattering_length_fm is required"
                )))
            }
            (Some(e_kev), None) => PairChannel::from_pole(
                label,
                self.pole.unwrap_or(PoleKind::Bound),
                e_kev / KEV_PER_MEV,
                self.beta_inv_fm,
                mu_mev,
                constants,
            )?,
            (None, Some(a)) => {
                PairChannel::from_scattering_length(label, a, self.beta_inv_fm, mu_mev, constants)?
            }
            (Some(e_kev), Some(a)) => {
                let from_a =
                    PairChannel::from_scattering_length(label, a, self.beta_inv_fm, mu_mev, constants)?;
                let rel = (from_a.epsilon2_kev() - e_kev).abs() / e_kev.abs().max(f64::MIN_POSITIVE);
                if rel > 1e-6 {
                    return Err(Error::Config(format!(
                        "{label}: epsilon2_keV = {e_kev} and scattering_length_fm = {a} are inconsistent \
                         (a implies {} keV)",
                        from_a.epsilon2_kev()
                    )));
                }
                from_a
            }
        };
        if let Some(pole) = self.pole {
            if pole != channel.pole_kind && channel.scattering_length != ScatteringLength::Unitary {
                return Err(Error::Config(format!(
                    "{label}: pole '{pole:?}' contradicts the sign of the scattering length"
                )));
            }
        }
        Ok(channel)
    }
}

/// JSON configuration fragment for a [`SystemConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub core_mass_number: u32,
    pub nc: ChannelSpec,
    #[serde(default = "ChannelSpec::virtual_nn")]
    pub nn: ChannelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<PhysicalConstants>,
}

impl SystemSpec {
    pub fn build(&self) -> Result<SystemConfig> {
        let constants = self.constants.unwrap_or_default();
        constants.validate()?;
        if self.core_mass_number < 1 {
            return Err(Error::Config("core_mass_number must be >= 1".into()));
        }
        let a = self.core_mass_number as f64;
        let m = constants.nucleon_mass;
        let nc = self
            .nc
            .build(ChannelLabel::NeutronCore, m * a / (a + 1.0), &constants)?;
        let nn = self.nn.build(ChannelLabel::NeutronNeutron, m / 2.0, &constants)?;
        let config = SystemConfig {
            core_mass_number: self.core_mass_number,
            nc_channel: nc,
            nn_channel: nn,
            constants,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Reduced mass of a pair in MeV/c². The core mass is `A·m_N`.
pub fn reduced_mass(config: &SystemConfig, pair: ChannelLabel) -> f64 {
    let m = config.constants.nucleon_mass;
    match pair {
        ChannelLabel::NeutronCore => {
            let a = config.mass_ratio();
            m * a / (a + 1.0)
        }
        ChannelLabel::NeutronNeutron => m / 2.0,
    }
}

/// Zero-range scattering length `±ħc/√(2μ ε₂)` in fm; sign from the pole kind.
pub fn scattering_length_from_pole(
    channel: &PairChannel,
    mu_mev: f64,
    constants: &PhysicalConstants,
) -> Result<f64> {
    scattering_length_from_pole_with(channel, mu_mev, constants, ScatteringLengthRelation::ZeroRange)
}

pub fn scattering_length_from_pole_with(
    channel: &PairChannel,
    mu_mev: f64,
    constants: &PhysicalConstants,
    relation: ScatteringLengthRelation,
) -> Result<f64> {
    if channel.epsilon2_mev == 0.0 {
        return Err(Error::UnitaryLimit);
    }
    let gamma = channel.pole_momentum(mu_mev, constants);
    Ok(match relation {
        ScatteringLengthRelation::ZeroRange => 1.0 / gamma,
        ScatteringLengthRelation::FiniteRange => {
            let b = channel.beta;
            2.0 * (b + gamma).powi(2) / (b * gamma * (2.0 * b + gamma))
        }
    })
}

/// Closed-form denominator function τ(z) of the separable t-matrix
/// `t(p, p'; z) = g(p) τ(z) g(p')`, in units ħ = m_N = 1 (fm⁻³).
///
/// `z` is in the same units (fm⁻²); `mu` is the reduced mass over m_N.
/// On the real axis above threshold the `z + i0` limit is taken.
pub(crate) fn tau_internal(z: Complex64, mu: f64, beta: f64, gamma: f64) -> Complex64 {
    let kappa = pair_kappa(z, mu);
    let num = 4.0 * PI * beta * (beta + kappa) * (beta + kappa) * (beta + gamma) * (beta + gamma);
    num / (mu * (gamma - kappa) * (2.0 * beta + gamma + kappa))
}

/// `κ = √(−2μz)` on the physical sheet, with `z + i0` above threshold.
pub(crate) fn pair_kappa(z: Complex64, mu: f64) -> Complex64 {
    if z.im == 0.0 && z.re > 0.0 {
        Complex64::new(0.0, -(2.0 * mu * z.re).sqrt())
    } else {
        (-2.0 * mu * z).sqrt()
    }
}

/// Real-axis version of [`tau_internal`] below threshold (`z < 0`).
#[inline]
pub(crate) fn tau_real(z: f64, mu: f64, beta: f64, gamma: f64) -> f64 {
    let kappa = (-2.0 * mu * z).sqrt();
    let bg = beta + gamma;
    let bk = beta + kappa;
    4.0 * PI * beta * bk * bk * bg * bg / (mu * (gamma - kappa) * (2.0 * beta + gamma + kappa))
}

/// Residue of τ at the bound pole, `τ(z) ≈ R/(z + ε₂)` (internal units).
pub(crate) fn tau_residue(mu: f64, beta: f64, gamma: f64) -> f64 {
    2.0 * PI * beta * gamma * (beta + gamma).powi(3) / (mu * mu)
}

/// Two-body propagator τ(z) for complex energy `z` in MeV.
///
/// The result is in units ħ = m_N = 1 (fm⁻³). Fails when `z` lies on the
/// bound pole.
pub fn two_body_propagator(
    channel: &PairChannel,
    mu_mev: f64,
    z_mev: Complex64,
    constants: &PhysicalConstants,
) -> Result<Complex64> {
    if channel.pole_kind == PoleKind::Bound {
        let pole = -channel.epsilon2_mev;
        let distance = (z_mev - pole).norm();
        if distance <= 1e-13 * channel.epsilon2_mev.max(1e-300) {
            return Err(Error::PoleProximity { pole_mev: pole, distance_mev: distance });
        }
    }
    let mu = mu_mev / constants.nucleon_mass;
    let gamma = channel.pole_momentum(mu_mev, constants);
    let z = z_mev / constants.energy_unit();
    Ok(tau_internal(z, mu, channel.beta, gamma))
}

/// Finds the pole momentum γ that reproduces a finite-range scattering length.
pub fn pole_momentum_for_finite_range_length(a_fm: f64, beta: f64) -> Result<f64> {
    let f = |g: f64| 2.0 * (beta + g).powi(2) / (beta * g * (2.0 * beta + g)) - a_fm;
    let (lo, hi) = if a_fm > 0.0 { (1e-12 * beta, 1e6 * beta) } else { (-beta * (1.0 - 1e-12), -1e-12 * beta) };
    roots::bisect(f, lo, hi, 1e-15, 400)
        .ok_or_else(|| Error::Numerical(format!("no pole momentum for a = {a_fm} fm, beta = {beta}")))
}
