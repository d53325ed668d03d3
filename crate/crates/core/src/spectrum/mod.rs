//! Trimer bound states below the lowest two-body threshold.
//!
//! A level at energy `E` is a point where one eigenvalue of the real kernel
//! `K(E)` passes through 1. Eigenvalues grow monotonically as `E` rises toward
//! threshold, so the number of levels below threshold is the number of
//! eigenvalues above 1 evaluated at threshold, and level `n` is the root of
//! `λ_n(E) = 1` for the n-th largest eigenvalue.

mod scale;
mod scan;

pub use scale::{efimov_scale_factor, ResonantPairs, ScaleFactor};
pub use scan::{
    boron19_check, boron19_config, calibrate_beta_nc, threshold_scan, Calibration, Crossing, ScanPoint,
    ThresholdScan, BORON19_BETA_INV_FM, BORON19_NC_SCATTERING_LENGTH_FM,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::MomentumGrid;
use crate::kernel::{real_kernel_spectrum, ThreeBody};
use crate::model::{SystemConfig, KEV_PER_MEV};
use crate::roots;

/// Offset below threshold (MeV) used as the shallow end of a root bracket.
const SHALLOW_MEV: f64 = 1e-15;
/// Relative tolerance on the binding measured from threshold.
const LEVEL_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrimerLevel {
    pub index: usize,
    /// Binding relative to three-body breakup, keV (positive).
    #[serde(rename = "epsilon3_keV")]
    pub energy_kev: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThreeBodySpectrum {
    /// Deepest first.
    pub levels: Vec<TrimerLevel>,
    pub config_snapshot: SystemConfig,
}

impl ThreeBodySpectrum {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn energies_kev(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy_kev).collect()
    }
}

/// Range of bindings (keV, relative to breakup) to report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchWindow {
    pub min_binding_kev: f64,
    pub max_binding_kev: f64,
}

impl SearchWindow {
    /// Everything below the lowest two-body threshold.
    pub fn below_threshold(config: &SystemConfig) -> Self {
        Self {
            min_binding_kev: -config.lowest_threshold_mev() * KEV_PER_MEV,
            max_binding_kev: f64::INFINITY,
        }
    }

    fn contains(&self, binding_kev: f64) -> bool {
        binding_kev > self.min_binding_kev && binding_kev <= self.max_binding_kev
    }
}

fn check_below_threshold(config: &SystemConfig, e_mev: f64) -> Result<()> {
    let thr = config.lowest_threshold_mev();
    if !(e_mev < thr) {
        return Err(Error::Domain(format!(
            "E = {e_mev} MeV is not below the lowest threshold {thr} MeV"
        )));
    }
    Ok(())
}

/// `det(1 - K(E))` for real `E` (MeV) below every threshold.
pub fn trimer_determinant(config: &SystemConfig, grid: &MomentumGrid, e_mev: f64) -> Result<f64> {
    config.validate()?;
    check_below_threshold(config, e_mev)?;
    Ok(real_kernel_spectrum(&ThreeBody::new(config), grid, e_mev)?.determinant)
}

/// Eigenvalues of `K(E)`, descending, for real `E` (MeV) below every threshold.
pub fn kernel_eigenvalues(config: &SystemConfig, grid: &MomentumGrid, e_mev: f64) -> Result<Vec<f64>> {
    config.validate()?;
    check_below_threshold(config, e_mev)?;
    Ok(real_kernel_spectrum(&ThreeBody::new(config), grid, e_mev)?.eigenvalues)
}

/// Number of trimers below the threshold at `thr_mev` (strict: `λ > 1`).
pub(crate) fn count_at_threshold(tb: &ThreeBody, grid: &MomentumGrid, thr_mev: f64) -> Result<usize> {
    let s = real_kernel_spectrum(tb, grid, thr_mev)?;
    Ok(s.eigenvalues.iter().filter(|&&l| l > 1.0).count())
}

/// `λ_n(E) - 1`.
fn level_function(tb: &ThreeBody, grid: &MomentumGrid, e_mev: f64, n: usize) -> Result<f64> {
    Ok(real_kernel_spectrum(tb, grid, e_mev)?.eigenvalues[n] - 1.0)
}

/// Energy (MeV) of level `n`, known to lie below `thr_mev`.
fn solve_level(tb: &ThreeBody, grid: &MomentumGrid, thr_mev: f64, n: usize) -> Result<f64> {
    // deep end of the bracket: push down until λ_n < 1
    let mut depth = 1.0f64;
    let mut found = false;
    for _ in 0..80 {
        if level_function(tb, grid, thr_mev - depth, n)? < 0.0 {
            found = true;
            break;
        }
        depth *= 4.0;
    }
    if !found {
        return Err(Error::Numerical(format!("no lower bracket for trimer {n}")));
    }
    let mut failure = None;
    let f = |u: f64| match level_function(tb, grid, thr_mev - u.exp(), n) {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            f64::NAN
        }
    };
    let root = roots::brent(f, SHALLOW_MEV.ln(), depth.ln(), LEVEL_RTOL, 400);
    if let Some(e) = failure {
        return Err(e);
    }
    root.map(|u| thr_mev - u.exp())
        .ok_or_else(|| Error::Numerical(format!("trimer {n} not bracketed below threshold")))
}

/// All trimers in `window`, deepest first, at most `max_states`.
pub fn find_trimers(
    config: &SystemConfig,
    grid: &MomentumGrid,
    window: SearchWindow,
    max_states: usize,
) -> Result<ThreeBodySpectrum> {
    config.validate()?;
    let thr = config.lowest_threshold_mev();
    let thr_kev = -thr * KEV_PER_MEV;
    if !(window.min_binding_kev >= thr_kev * (1.0 - 1e-12)) || window.max_binding_kev < window.min_binding_kev {
        return Err(Error::Domain(format!(
            "search window [{}, {}] keV must lie below the threshold at binding {thr_kev} keV",
            window.min_binding_kev, window.max_binding_kev
        )));
    }
    let tb = ThreeBody::new(config);
    let count = count_at_threshold(&tb, grid, thr)?;
    let mut levels = Vec::new();
    for n in 0..count {
        if levels.len() >= max_states {
            break;
        }
        let binding = -solve_level(&tb, grid, thr, n)? * KEV_PER_MEV;
        if binding < window.min_binding_kev {
            break;
        }
        if window.contains(binding) {
            levels.push(TrimerLevel { index: n, energy_kev: binding });
        }
    }
    Ok(ThreeBodySpectrum { levels, config_snapshot: config.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::model::carbon20;

    #[test]
    fn determinant_tends_to_one_far_below() {
        let c = carbon20(250.0).unwrap();
        let g = build_grid(48, 1.0).unwrap();
        let d: Vec<f64> = [-1e2, -1e4, -1e6].iter().map(|&e| trimer_determinant(&c, &g, e).unwrap()).collect();
        assert!((d[2] - 1.0).abs() < 1e-3, "{d:?}");
        assert!((d[2] - 1.0).abs() < (d[0] - 1.0).abs());
        assert!(trimer_determinant(&c, &g, -0.2).is_err());
        assert!(trimer_determinant(&c, &g, -0.25).is_err());
    }

    #[test]
    fn log_mesh_scan_agrees_with_eigenvalue_counting() {
        // independent route: sign changes of det(1-K) on a log mesh, then bisection
        let c = carbon20(100.0).unwrap();
        let g = build_grid(48, 1.0).unwrap();
        let spec = find_trimers(&c, &g, SearchWindow::below_threshold(&c), usize::MAX).unwrap();
        let thr = -0.1;
        let det = |e: f64| trimer_determinant(&c, &g, e).unwrap();
        let per_decade = 32;
        let mut roots = Vec::new();
        let mut prev: Option<(f64, f64)> = None;
        for i in 0..=(9 * per_decade) {
            let d = 10f64.powf(-7.0 + i as f64 / per_decade as f64);
            let e = thr - d;
            let v = det(e);
            if let Some((ep, vp)) = prev {
                if vp.signum() != v.signum() {
                    roots.push(roots::bisect(det, e, ep, 1e-14, 200).unwrap());
                }
            }
            prev = Some((e, v));
        }
        roots.sort_by(|a, b| a.total_cmp(b));
        assert_eq!(roots.len(), spec.len(), "{roots:?} vs {:?}", spec.levels);
        for (r, l) in roots.iter().zip(&spec.levels) {
            let b = -r * 1e3;
            assert!((b - l.energy_kev).abs() < 1e-8 * (l.energy_kev - 100.0), "{b} {}", l.energy_kev);
        }
    }

    #[test]
    fn truncation_and_ordering() {
        let c = carbon20(100.0).unwrap();
        let g = build_grid(48, 1.0).unwrap();
        let all = find_trimers(&c, &g, SearchWindow::below_threshold(&c), usize::MAX).unwrap();
        assert!(all.len() >= 2);
        assert!(all.levels.windows(2).all(|w| w[0].energy_kev > w[1].energy_kev));
        assert!(all.levels.iter().all(|l| l.energy_kev > 100.0));
        let one = find_trimers(&c, &g, SearchWindow::below_threshold(&c), 1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.levels[0], all.levels[0]);
        let empty = SearchWindow { min_binding_kev: 1e9, max_binding_kev: 2e9 };
        assert!(find_trimers(&c, &g, empty, 5).unwrap().is_empty());
        let bad = SearchWindow { min_binding_kev: 50.0, max_binding_kev: 1e3 };
        assert!(find_trimers(&c, &g, bad, 5).is_err());
    }

    #[test]
    fn levels_refined_to_tolerance() {
        let c = carbon20(100.0).unwrap();
        let g = build_grid(48, 1.0).unwrap();
        let spec = find_trimers(&c, &g, SearchWindow::below_threshold(&c), usize::MAX).unwrap();
        let tb = ThreeBody::new(&c);
        for l in &spec.levels {
            let e = -l.energy_kev / 1e3;
            let gap = e + 0.1;
            let above = level_function(&tb, &g, e + 1e-8 * gap.abs(), l.index).unwrap();
            let below = level_function(&tb, &g, e - 1e-8 * gap.abs(), l.index).unwrap();
            assert!(above > 0.0 && below < 0.0, "{l:?}");
        }
    }
}
