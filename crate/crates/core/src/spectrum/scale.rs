use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::roots;

/// Which pairs sit at unitarity when computing the scale factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ResonantPairs {
    /// Both neutron–core pairs and the nn pair.
    AllThree,
    /// Only the two neutron–core pairs.
    NcOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleFactor {
    pub s0: f64,
    pub mass_ratio: f64,
    /// `exp(2π/s0)`, the ratio of consecutive level energies.
    pub energy_ratio: f64,
}

/// `2 sinh(φs)/(s cosh(πs/2) sin 2φ)`, the Mellin transform of the s-wave
/// exchange kernel at imaginary order; → `2φ/sin 2φ` as `s → 0`.
fn exchange_mellin(s: f64, phi: f64) -> f64 {
    if s == 0.0 {
        return 2.0 * phi / (2.0 * phi).sin();
    }
    2.0 * (phi * s).sinh() / (s * (PI * s / 2.0).cosh() * (2.0 * phi).sin())
}

/// Residual of the transcendental equation at `s`; zero at `s0`.
pub(crate) fn scale_equation(s: f64, mass_ratio: f64, pairs: ResonantPairs) -> f64 {
    let a = mass_ratio;
    // angle between the two neutron–core Jacobi sets (the core is exchanged)
    let phi_nn = (1.0 / (a + 1.0)).asin();
    match pairs {
        ResonantPairs::NcOnly => exchange_mellin(s, phi_nn) - 1.0,
        ResonantPairs::AllThree => {
            // angle between a neutron–core set and the nn set (a neutron is exchanged)
            let phi_nc = (a / (2.0 * (a + 1.0))).sqrt().asin();
            let m_nc = exchange_mellin(s, phi_nc);
            exchange_mellin(s, phi_nn) + 2.0 * m_nc * m_nc - 1.0
        }
    }
}

/// Efimov scale factor for two neutrons and a core of `mass_ratio` neutron masses.
pub fn efimov_scale_factor(mass_ratio: f64, pairs: ResonantPairs) -> Result<ScaleFactor> {
    if !(mass_ratio > 0.0 && mass_ratio.is_finite()) {
        return Err(Error::Config(format!("mass ratio must be positive, got {mass_ratio}")));
    }
    let f = |s: f64| scale_equation(s, mass_ratio, pairs);
    // first sign change on a coarse mesh, then bisection
    let no_root = Error::NoEfimovRegime { mass_ratio };
    if !(f(0.0) > 0.0) {
        return Err(no_root);
    }
    let mut lo = 0.0;
    let mut hi = None;
    let mut s = 1e-3;
    while s < 50.0 {
        if f(s) <= 0.0 {
            hi = Some(s);
            break;
        }
        lo = s;
        s *= 1.1;
    }
    let hi = hi.ok_or(no_root)?;
    let s0 = roots::bisect(f, lo, hi, 1e-15, 400).ok_or(Error::NoEfimovRegime { mass_ratio })?;
    if !(s0 > 0.0) {
        return Err(Error::NoEfimovRegime { mass_ratio });
    }
    Ok(ScaleFactor { s0, mass_ratio, energy_ratio: (2.0 * PI / s0).exp() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_bosons() {
        let s = efimov_scale_factor(1.0, ResonantPairs::AllThree).unwrap();
        // independent form of the same equation: s cosh(πs/2) = (8/√3) sinh(πs/6)
        let g = |s: f64| s * (PI * s / 2.0).cosh() - 8.0 / 3f64.sqrt() * (PI * s / 6.0).sinh();
        let r = roots::bisect(g, 0.5, 1.5, 1e-15, 200).unwrap();
        assert!((s.s0 - r).abs() < 1e-12);
        assert!((s.s0 - 1.00624).abs() < 1e-5);
        assert!(scale_equation(s.s0, 1.0, ResonantPairs::AllThree).abs() < 1e-12);
        assert!((s.energy_ratio - 515.03).abs() < 0.1);
        assert_eq!(s.energy_ratio, (2.0 * PI / s.s0).exp());
    }

    #[test]
    fn equal_masses_two_resonant_pairs() {
        // two resonant pairs among equal masses: s0 ≈ 0.4137
        let s = efimov_scale_factor(1.0, ResonantPairs::NcOnly).unwrap();
        assert!((s.s0 - 0.4137).abs() < 1e-3, "{}", s.s0);
    }

    fn sweep(pairs: ResonantPairs) -> Vec<f64> {
        (0..=58)
            .map(|i| {
                let a = 1.0 + 0.5 * i as f64;
                let s = efimov_scale_factor(a, pairs).unwrap().s0;
                assert!(scale_equation(s, a, pairs).abs() < 1e-12);
                s
            })
            .collect()
    }

    #[test]
    fn all_three_smooth_over_mass_ratio() {
        let s = sweep(ResonantPairs::AllThree);
        assert!(s.windows(2).all(|w| w[1] > w[0]));
        assert!(s.windows(2).all(|w| (w[1] - w[0]).abs() / w[0] < 0.05));
    }

    #[test]
    fn nc_only_smooth_over_mass_ratio() {
        // s0 falls roughly like 1/A here, so steps shrink but never jump
        let s = sweep(ResonantPairs::NcOnly);
        assert!(s.windows(2).all(|w| w[1] < w[0]));
        let steps: Vec<f64> = s.windows(2).map(|w| w[0] - w[1]).collect();
        assert!(steps.windows(2).all(|w| w[1] < w[0]), "{steps:?}");
    }

    #[test]
    fn rejects_bad_ratio() {
        assert!(efimov_scale_factor(0.0, ResonantPairs::AllThree).is_err());
        assert!(efimov_scale_factor(f64::NAN, ResonantPairs::NcOnly).is_err());
    }
}
