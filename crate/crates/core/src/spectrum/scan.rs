use rayon::prelude::*;
use serde::Serialize;

use super::{count_at_threshold, find_trimers, level_function, SearchWindow, ThreeBodySpectrum};
use crate::error::{Error, Result};
use crate::grid::MomentumGrid;
use crate::kernel::ThreeBody;
use crate::model::{ChannelSpec, SystemConfig, SystemSpec, KEV_PER_MEV};
use crate::roots;

/// Crossings are refined well past the 0.1 keV reporting resolution.
const CROSSING_XTOL_KEV: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPoint {
    #[serde(rename = "epsilon2_keV")]
    pub epsilon2_kev: f64,
    pub bound_excited_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub state_index: usize,
    #[serde(rename = "epsilon2_star_keV")]
    pub epsilon2_star_kev: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdScan {
    pub points: Vec<ScanPoint>,
    /// Ordered by state index.
    pub crossings: Vec<Crossing>,
}

fn dimer_threshold(config: &SystemConfig) -> Result<f64> {
    config
        .dimer_threshold_mev()
        .ok_or_else(|| Error::Config("threshold scan needs a bound neutron-core pair".into()))
}

/// `λ_n - 1` exactly at the n + dimer threshold for a given ε₂ (keV).
fn threshold_margin(template: &SystemConfig, grid: &MomentumGrid, eps_kev: f64, n: usize) -> Result<f64> {
    let c = template.with_nc_epsilon2(eps_kev / KEV_PER_MEV)?;
    level_function(&ThreeBody::new(&c), grid, -c.nc_channel.epsilon2_mev, n)
}

/// Trimers (ground included) below the n + dimer threshold at ε₂ (keV).
fn bound_count(template: &SystemConfig, grid: &MomentumGrid, eps_kev: f64) -> Result<usize> {
    let c = template.with_nc_epsilon2(eps_kev / KEV_PER_MEV)?;
    count_at_threshold(&ThreeBody::new(&c), grid, dimer_threshold(&c)?)
}

fn root_in_epsilon2(
    template: &SystemConfig,
    grid: &MomentumGrid,
    n: usize,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    let mut failure = None;
    let f = |eps: f64| match threshold_margin(template, grid, eps, n) {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            f64::NAN
        }
    };
    let r = roots::brent(f, lo, hi, CROSSING_XTOL_KEV, 200);
    if let Some(e) = failure {
        return Err(e);
    }
    r.ok_or_else(|| Error::Numerical(format!("crossing of state {n} not bracketed in [{lo}, {hi}] keV")))
}

/// Counts bound excited trimers over ascending ε₂ values (keV) and locates the
/// ε₂ at which each excited state meets the n + dimer threshold.
pub fn threshold_scan(template: &SystemConfig, epsilon2_kev: &[f64], grid: &MomentumGrid) -> Result<ThresholdScan> {
    template.validate()?;
    dimer_threshold(template)?;
    if epsilon2_kev.is_empty() {
        return Err(Error::Config("scan needs at least one epsilon2 value".into()));
    }
    if let Some(bad) = epsilon2_kev.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::Config(format!("scan epsilon2 values must be positive, got {bad}")));
    }
    if epsilon2_kev.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("scan epsilon2 values must be strictly ascending".into()));
    }
    let counts: Vec<usize> = epsilon2_kev
        .par_iter()
        .map(|&e| bound_count(template, grid, e))
        .collect::<Result<_>>()?;
    let points = epsilon2_kev
        .iter()
        .zip(&counts)
        .map(|(&e, &c)| ScanPoint { epsilon2_kev: e, bound_excited_count: c.saturating_sub(1) })
        .collect();
    let mut brackets = Vec::new();
    for i in 1..counts.len() {
        let (before, after) = (counts[i - 1], counts[i]);
        for n in after..before {
            brackets.push((n, epsilon2_kev[i - 1], epsilon2_kev[i]));
        }
    }
    let mut crossings: Vec<Crossing> = brackets
        .par_iter()
        .filter(|(n, _, _)| *n >= 1)
        .map(|&(n, lo, hi)| {
            root_in_epsilon2(template, grid, n, lo, hi)
                .map(|e| Crossing { state_index: n, epsilon2_star_kev: e })
        })
        .collect::<Result<_>>()?;
    crossings.sort_by_key(|c| c.state_index);
    Ok(ThresholdScan { points, crossings })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub beta_nc: f64,
    pub epsilon2_star_kev: f64,
    /// Template with the calibrated β_nc (ε₂ unchanged).
    pub config: SystemConfig,
}

/// Adjusts β_nc so that the first excited trimer meets the n + dimer threshold
/// at `target_kev`.
pub fn calibrate_beta_nc(template: &SystemConfig, grid: &MomentumGrid, target_kev: f64) -> Result<Calibration> {
    template.validate()?;
    dimer_threshold(template)?;
    if !(target_kev > 0.0 && target_kev.is_finite()) {
        return Err(Error::Config(format!("calibration target must be positive, got {target_kev} keV")));
    }
    let margin = |ln_beta: f64| -> Result<f64> {
        let c = template.with_nc_beta(ln_beta.exp())?;
        threshold_margin(&c, grid, target_kev, 1)
    };
    // a shorter range (larger β) binds more strongly, so the margin grows with β
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    let (mut flo, mut fhi) = (margin(lo)?, margin(hi)?);
    let step = 2f64.ln();
    for _ in 0..12 {
        if flo < 0.0 && fhi > 0.0 {
            break;
        }
        if flo >= 0.0 {
            lo -= step;
            flo = margin(lo)?;
        }
        if fhi <= 0.0 {
            hi += step;
            fhi = margin(hi)?;
        }
    }
    if !(flo < 0.0 && fhi > 0.0) {
        return Err(Error::Numerical(format!(
            "no beta_nc in [{:.4}, {:.4}] fm^-1 puts the first excited state at {target_kev} keV",
            lo.exp(),
            hi.exp()
        )));
    }
    let mut failure = None;
    let f = |x: f64| match margin(x) {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            f64::NAN
        }
    };
    let root = roots::brent(f, lo, hi, 1e-10, 200);
    if let Some(e) = failure {
        return Err(e);
    }
    let beta_nc = root.ok_or_else(|| Error::Numerical("calibration root search failed".into()))?.exp();
    Ok(Calibration { beta_nc, epsilon2_star_kev: target_kev, config: template.with_nc_beta(beta_nc)? })
}

pub const BORON19_NC_SCATTERING_LENGTH_FM: f64 = -179.0;
/// Range parameter of the ¹⁹B preset: short enough that both pairs act as
/// zero-range interactions on the scale of |a|.
pub const BORON19_BETA_INV_FM: f64 = 64.0;

/// n + n + ¹⁷B with a virtual n–core state of scattering length `a_nc_fm`.
pub fn boron19_config(a_nc_fm: f64, beta: f64) -> Result<SystemConfig> {
    SystemSpec {
        core_mass_number: 17,
        nc: ChannelSpec::scattering_length(a_nc_fm, beta),
        nn: ChannelSpec { beta_inv_fm: beta, ..ChannelSpec::virtual_nn() },
        constants: None,
    }
    .build()
}

/// All trimers of a ¹⁹B-like configuration below the lowest threshold.
pub fn boron19_check(config: &SystemConfig, grid: &MomentumGrid) -> Result<ThreeBodySpectrum> {
    find_trimers(config, grid, SearchWindow::below_threshold(config), usize::MAX)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::model::carbon20;

    #[test]
    fn scan_rejects_unsorted() {
        let c = carbon20(250.0).unwrap();
        let g = build_grid(16, 1.0).unwrap();
        assert!(matches!(threshold_scan(&c, &[100.0, 50.0], &g), Err(Error::Config(_))));
        assert!(matches!(threshold_scan(&c, &[100.0, 100.0], &g), Err(Error::Config(_))));
        assert!(threshold_scan(&c, &[-1.0], &g).is_err());
    }

    #[test]
    fn single_point_scan() {
        let c = carbon20(250.0).unwrap();
        let g = build_grid(48, 1.0).unwrap();
        let s = threshold_scan(&c, &[100.0], &g).unwrap();
        assert_eq!(s.points.len(), 1);
        assert!(s.crossings.is_empty());
    }

    #[test]
    fn crossing_matches_spectrum() {
        let c = carbon20(250.0).unwrap();
        let g = build_grid(48, 1.0).unwrap();
        let eps: Vec<f64> = (0..8).map(|i| 50.0 + 50.0 * i as f64).collect();
        let s = threshold_scan(&c, &eps, &g).unwrap();
        assert!(s.points.windows(2).all(|w| w[1].bound_excited_count <= w[0].bound_excited_count));
        let x = s.crossings.iter().find(|c| c.state_index == 1).expect("first excited crossing");
        // just below the crossing the excited state is bound, just above it is not
        let spec = |e: f64| {
            let cc = c.with_nc_epsilon2(e / 1e3).unwrap();
            find_trimers(&cc, &g, SearchWindow::below_threshold(&cc), usize::MAX).unwrap().len()
        };
        assert_eq!(spec(x.epsilon2_star_kev - 0.05), 2);
        assert_eq!(spec(x.epsilon2_star_kev + 0.05), 1);
    }

    #[test]
    fn boron19_count_grows_with_scattering_length() {
        let g = build_grid(96, 1.0).unwrap();
        let count = |a: f64| boron19_check(&boron19_config(a, BORON19_BETA_INV_FM).unwrap(), &g).unwrap().len();
        let (n10, n179, n358) = (count(-10.0), count(-179.0), count(-358.0));
        assert!(n10 < n179, "{n10} {n179}");
        assert!(n358 >= n179);
    }
}
