//! Production presets and the end-to-end reproduction run for ²⁰C.
//!
//! The run calibrates β_nc so the first excited trimer meets the n + ¹⁹C
//! threshold at 220 keV, scans ε₂, computes elastic cross sections at
//! ε₂ = 250 and 150 keV, fits both with Fano and Breit–Wigner shapes and
//! compares the two profile indices.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::fanofit::{fit, q_consistency, FitModel, FitResult, Seed, WindowMode};
use crate::grid::{build_grid, MomentumGrid};
use crate::io::{format_sig, write_table};
use crate::model::{carbon20, SystemConfig, KEV_PER_MEV};
use crate::scattering::{cross_section_curve, resonance_window, CrossSectionCurve, ResonanceWindow};
use crate::spectrum::{calibrate_beta_nc, threshold_scan, Calibration, ThresholdScan};

/// ²⁰C grid: eigenvalues change by ~1e-6 relative on doubling.
pub const CARBON20_GRID: (usize, f64) = (64, 1.0);
/// ¹⁹B grid for β = 64 fm⁻¹ form factors.
pub const BORON19_GRID: (usize, f64) = (96, 1.0);
/// ε₂ at which the first excited ²⁰C trimer becomes unbound.
pub const CARBON20_FIRST_CROSSING_KEV: f64 = 220.0;
pub const SCAN_START_KEV: f64 = 50.0;
pub const SCAN_STOP_KEV: f64 = 400.0;
pub const SCAN_STEP_KEV: f64 = 5.0;
pub const CURVE_EPSILON2_KEV: [f64; 2] = [250.0, 150.0];
/// Largest relative q spread still read as "the same q".
pub const SAME_Q_SPREAD: f64 = 0.3;

pub fn carbon20_grid() -> MomentumGrid {
    build_grid(CARBON20_GRID.0, CARBON20_GRID.1).expect("valid preset grid")
}

pub fn boron19_grid() -> MomentumGrid {
    build_grid(BORON19_GRID.0, BORON19_GRID.1).expect("valid preset grid")
}

/// `start, start + step, …` up to `stop` inclusive.
pub fn linear_mesh(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && start.is_finite() && stop.is_finite()) || stop < start {
        return Err(Error::Config(format!("bad mesh {start}..{stop} step {step}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + step * i as f64).collect())
}

pub fn default_scan_mesh() -> Vec<f64> {
    linear_mesh(SCAN_START_KEV, SCAN_STOP_KEV, SCAN_STEP_KEV).expect("valid preset mesh")
}

/// 0.05 to 10 keV in 0.05 keV steps: the few-keV region above the n + ¹⁹C threshold.
pub fn curve_mesh() -> Vec<f64> {
    (1..=200).map(|i| 0.05 * i as f64).collect()
}

/// ²⁰C with β_nc calibrated to [`CARBON20_FIRST_CROSSING_KEV`].
pub fn calibrated_carbon20(grid: &MomentumGrid) -> Result<Calibration> {
    let template = carbon20(CARBON20_FIRST_CROSSING_KEV)?;
    calibrate_beta_nc(&template, grid, CARBON20_FIRST_CROSSING_KEV)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig1Fig2,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig1Fig2 => "fig1-fig2",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig1-fig2" => Ok(Preset::Fig1Fig2),
            _ => Err(Error::Config(format!("unknown preset '{s}' (known: fig1-fig2)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CurveFits {
    pub epsilon2_kev: f64,
    pub curve: CrossSectionCurve,
    pub window: Option<ResonanceWindow>,
    pub fano: FitResult,
    pub breit_wigner: FitResult,
}

impl CurveFits {
    fn tag(&self) -> String {
        format!("eps{}keV", format_sig(self.epsilon2_kev))
    }
}

#[derive(Debug, Clone)]
pub struct Reproduction {
    pub preset: Preset,
    pub calibration: Calibration,
    pub scan: ThresholdScan,
    pub curves: Vec<CurveFits>,
    /// Fitted Fano q per curve, whether or not the fits converged.
    pub q_values: Vec<f64>,
    /// `max |q_i - q_j| / |mean q|` over the raw fitted values.
    pub q_spread: f64,
    /// Indices of curves whose Fano fit did not converge.
    pub unconverged: Vec<usize>,
}

impl Reproduction {
    /// Same-q diagnostic: every Fano fit converged and the spread is below [`SAME_Q_SPREAD`].
    pub fn same_q(&self) -> bool {
        self.unconverged.is_empty() && self.q_spread < SAME_Q_SPREAD
    }

    pub fn report(&self) -> String {
        let mut r = String::new();
        let _ = writeln!(r, "preset {}", self.preset.name());
        let _ = writeln!(r, "beta_nc_inv_fm {}", format_sig(self.calibration.beta_nc));
        let _ = writeln!(r, "calibrated_epsilon2_star_1_keV {}", format_sig(self.calibration.epsilon2_star_kev));
        let _ = writeln!(r, "scan_points {}", self.scan.points.len());
        let _ = writeln!(r, "crossings {}", self.scan.crossings.len());
        for c in &self.scan.crossings {
            let _ = writeln!(r, "epsilon2_star_{}_keV {}", c.state_index, format_sig(c.epsilon2_star_kev));
        }
        for c in &self.curves {
            let tag = c.tag();
            let w = match &c.window {
                Some(w) => format!("{} {}", format_sig(w.lo_kev), format_sig(w.hi_kev)),
                None => "none".into(),
            };
            let _ = writeln!(r, "{tag} resonance_window_keV {w}");
            for f in [&c.fano, &c.breit_wigner] {
                let m = match f.model {
                    FitModel::Fano => "fano",
                    FitModel::BreitWigner => "bw",
                };
                let q = f.q().map(|q| format!(" q {}", format_sig(q))).unwrap_or_default();
                let _ = writeln!(
                    r,
                    "{tag} {m}{q} E_r_keV {} Gamma_keV {} residual_norm {} converged {} points {}",
                    format_sig(f.params.e_r()),
                    format_sig(f.params.gamma()),
                    format_sig(f.residual_norm),
                    f.converged,
                    f.points_used
                );
            }
        }
        let qs: Vec<String> = self.q_values.iter().map(|&q| format_sig(q)).collect();
        let _ = writeln!(r, "q_values {}", qs.join(" "));
        let _ = writeln!(r, "q_spread {}", format_sig(self.q_spread));
        let bad: Vec<String> = self.unconverged.iter().map(usize::to_string).collect();
        let _ = writeln!(r, "unconverged_fits {}", if bad.is_empty() { "none".into() } else { bad.join(" ") });
        let _ = writeln!(r, "same_q {}", self.same_q());
        r
    }

    /// Writes CSV/JSON artifacts and `report.txt` into `dir`; returns the paths in write order.
    pub fn write_artifacts(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        let mut put = |name: &str, bytes: Vec<u8>| -> Result<()> {
            let p = dir.join(name);
            fs::write(&p, bytes)?;
            paths.push(p);
            Ok(())
        };
        let cal = json!({
            "beta_nc_inv_fm": rounded(self.calibration.beta_nc),
            "epsilon2_star_1_keV": rounded(self.calibration.epsilon2_star_kev),
            "system": self.calibration.config.to_spec(),
        });
        put("calibration.json", json_bytes(&cal))?;
        put("scan.csv", scan_csv(&self.scan)?)?;
        put("crossings.json", json_bytes(&crossings_json(&self.scan)))?;
        for c in &self.curves {
            let tag = c.tag();
            let mut buf = Vec::new();
            c.curve.write_csv(&mut buf)?;
            put(&format!("curve_{tag}.csv"), buf)?;
            put(&format!("fit_fano_{tag}.json"), json_bytes(&c.fano.to_json()))?;
            put(&format!("fit_bw_{tag}.json"), json_bytes(&c.breit_wigner.to_json()))?;
            put(&format!("overlay_{tag}.csv"), overlay_csv(&c.curve, &[&c.fano, &c.breit_wigner])?)?;
        }
        put("report.txt", self.report().into_bytes())?;
        Ok(paths)
    }
}

fn rounded(x: f64) -> Value {
    let v: f64 = format_sig(x).parse().unwrap_or(x);
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
}

pub fn json_bytes(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

pub fn scan_csv(scan: &ThresholdScan) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_table(
        &mut buf,
        &["epsilon2_keV", "bound_excited_count"],
        scan.points.iter().map(|p| vec![p.epsilon2_kev, p.bound_excited_count as f64]),
    )?;
    Ok(buf)
}

pub fn crossings_json(scan: &ThresholdScan) -> Value {
    Value::Array(
        scan.crossings
            .iter()
            .map(|c| json!({"state_index": c.state_index, "epsilon2_star_keV": rounded(c.epsilon2_star_kev)}))
            .collect(),
    )
}

/// Plot-ready table: energy, data and one column per fitted model.
pub fn overlay_csv(curve: &CrossSectionCurve, fits: &[&FitResult]) -> Result<Vec<u8>> {
    let mut header = vec!["E_keV", "sigma_fm2"];
    for f in fits {
        header.push(match f.model {
            FitModel::Fano => "fano_fm2",
            FitModel::BreitWigner => "bw_fm2",
        });
    }
    let rows = curve.points.iter().map(|p| {
        let mut row = vec![p.e_cm_kev, p.sigma];
        row.extend(fits.iter().map(|f| f.params.evaluate(p.e_cm_kev)));
        row
    });
    let mut buf = Vec::new();
    write_table(&mut buf, &header, rows)?;
    Ok(buf)
}

/// Cross section at one ε₂ with both fits.
pub fn curve_with_fits(template: &SystemConfig, grid: &MomentumGrid, epsilon2_kev: f64, energies_kev: &[f64]) -> Result<CurveFits> {
    let config = template.with_nc_epsilon2(epsilon2_kev / KEV_PER_MEV)?;
    let curve = cross_section_curve(&config, grid, energies_kev)?;
    let window = resonance_window(&curve);
    let fano = fit(&curve, FitModel::Fano, Seed::Auto, WindowMode::Auto)?;
    let breit_wigner = fit(&curve, FitModel::BreitWigner, Seed::Auto, WindowMode::Auto)?;
    Ok(CurveFits { epsilon2_kev, curve, window, fano, breit_wigner })
}

pub fn reproduce(preset: Preset) -> Result<Reproduction> {
    match preset {
        Preset::Fig1Fig2 => {
            let grid = carbon20_grid();
            let calibration = calibrated_carbon20(&grid)?;
            let scan = threshold_scan(&calibration.config, &default_scan_mesh(), &grid)?;
            let mesh = curve_mesh();
            let curves = CURVE_EPSILON2_KEV
                .iter()
                .map(|&e2| curve_with_fits(&calibration.config, &grid, e2, &mesh))
                .collect::<Result<Vec<_>>>()?;
            let fano: Vec<FitResult> = curves.iter().map(|c| c.fano.clone()).collect();
            let q_values: Vec<f64> = fano.iter().filter_map(FitResult::q).collect();
            let (q_spread, unconverged) = match q_consistency(&fano) {
                Ok(c) => (c.max_relative_spread, Vec::new()),
                Err(Error::NotConverged(bad)) => (raw_spread(&q_values), bad),
                Err(e) => return Err(e),
            };
            Ok(Reproduction { preset, calibration, scan, curves, q_values, q_spread, unconverged })
        }
    }
}

fn raw_spread(q: &[f64]) -> f64 {
    let mean = q.iter().sum::<f64>() / q.len() as f64;
    let mut spread: f64 = 0.0;
    for a in q {
        for b in q {
            spread = spread.max((a - b).abs());
        }
    }
    spread / mean.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meshes() {
        let scan = default_scan_mesh();
        assert_eq!(scan.len(), 71);
        assert_eq!(scan[0], 50.0);
        assert_eq!(*scan.last().unwrap(), 400.0);
        let m = curve_mesh();
        assert_eq!(m.len(), 200);
        assert!(m.windows(2).all(|w| w[1] > w[0]));
        assert!(linear_mesh(2.0, 1.0, 0.5).is_err());
        assert_eq!(linear_mesh(1.0, 1.0, 0.5).unwrap(), vec![1.0]);
    }

    #[test]
    fn preset_names() {
        assert_eq!("fig1-fig2".parse::<Preset>().unwrap(), Preset::Fig1Fig2);
        assert!("fig3".parse::<Preset>().unwrap_err().is_config());
    }

    #[test]
    fn spread_matches_consistency() {
        assert!((raw_spread(&[4.0, 4.4]) - 0.4 / 4.2).abs() < 1e-15);
    }
}
