//! Elastic n + (n+core) scattering below three-body breakup.
//!
//! The half-off-shell amplitude obeys the inhomogeneous version of the trimer
//! equation, driven by the exchange term at the on-shell momentum `k`. The
//! dimer pole of `τ_nc` sits on the integration path at `q = k`; it is handled
//! either by principal-value subtraction (default) or by rotating the
//! integration contour into the lower half plane.

use std::f64::consts::{PI, SQRT_2};
use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::MomentumGrid;
use crate::io;
use crate::kernel::{exchange_blocks, AngularRule, ThreeBody};
use crate::model::{tau_residue, PoleKind, SystemConfig, KEV_PER_MEV};

pub const CURVE_HEADER: [&str; 2] = ["E_keV", "sigma_fm2"];
pub const FM2_PER_BARN: f64 = 100.0;

/// Treatment of the dimer pole on the integration path.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum AmplitudeMethod {
    #[default]
    PrincipalValue,
    /// Momenta `q → q e^{-iθ}`; `θ` in radians, `0 < θ < π/4`.
    ContourRotation { angle: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringPoint {
    pub e_cm_kev: f64,
    /// Relative n–dimer momentum, fm⁻¹.
    pub k: f64,
    /// s-wave amplitude `f = 1/(k cot δ - i k)`, fm.
    pub amplitude: Complex64,
    /// `4π|f|²`, fm².
    pub sigma: f64,
}

impl ScatteringPoint {
    pub fn unitarity_residual(&self) -> f64 {
        let f2 = self.amplitude.norm_sqr();
        (self.amplitude.im - self.k * f2).abs() / (self.k * f2)
    }

    pub fn unitarity_bound(&self) -> f64 {
        4.0 * PI / (self.k * self.k)
    }

    pub fn k_cot_delta(&self) -> f64 {
        (1.0 / self.amplitude).re
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossSectionCurve {
    /// Strictly increasing in energy.
    pub points: Vec<ScatteringPoint>,
    /// `None` for curves read from a file.
    pub config_snapshot: Option<SystemConfig>,
}

impl CrossSectionCurve {
    /// Wraps externally supplied `(E_keV, σ_fm2)` samples. Only energies and
    /// cross sections are meaningful on such a curve.
    pub fn from_samples(samples: &[(f64, f64)]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Config("curve has no points".into()));
        }
        if samples.iter().any(|(e, s)| !e.is_finite() || !s.is_finite()) {
            return Err(Error::Config("curve contains non-finite values".into()));
        }
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Config("curve energies must be strictly increasing".into()));
        }
        let points = samples
            .iter()
            .map(|&(e, s)| ScatteringPoint { e_cm_kev: e, k: f64::NAN, amplitude: Complex64::new(f64::NAN, 0.0), sigma: s })
            .collect();
        Ok(Self { points, config_snapshot: None })
    }

    pub fn energies_kev(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.e_cm_kev).collect()
    }

    pub fn sigmas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.sigma).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        io::write_table(out, &CURVE_HEADER, self.points.iter().map(|p| vec![p.e_cm_kev, p.sigma]))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        Self::from_samples(&io::read_pairs(input, CURVE_HEADER)?)
    }
}

/// Elastic window `(0, E_max)` in keV above the n + dimer threshold.
pub fn elastic_window_kev(config: &SystemConfig) -> Result<(f64, f64)> {
    if config.nc_channel.pole_kind != PoleKind::Bound || config.nc_channel.epsilon2_mev <= 0.0 {
        return Err(Error::Config("n + dimer scattering needs a bound neutron-core pair".into()));
    }
    let dimer = config.nc_channel.epsilon2_mev;
    // breakup, or an nn-bound channel opening first
    let mut top = dimer;
    if config.nn_channel.pole_kind == PoleKind::Bound {
        top = top.min(dimer - config.nn_channel.epsilon2_mev);
    }
    if top <= 0.0 {
        return Err(Error::Config("the n + dimer channel is not the lowest threshold".into()));
    }
    Ok((0.0, top * KEV_PER_MEV))
}

/// Elastic amplitude (fm) with the default principal-value treatment.
pub fn elastic_amplitude(config: &SystemConfig, grid: &MomentumGrid, e_cm_kev: f64) -> Result<Complex64> {
    Ok(scattering_point(config, grid, e_cm_kev, AmplitudeMethod::PrincipalValue)?.amplitude)
}

/// Full scattering observables at one energy.
pub fn scattering_point(
    config: &SystemConfig,
    grid: &MomentumGrid,
    e_cm_kev: f64,
    method: AmplitudeMethod,
) -> Result<ScatteringPoint> {
    config.validate()?;
    let (lo, hi) = elastic_window_kev(config)?;
    if !(e_cm_kev > lo && e_cm_kev < hi) {
        return Err(Error::Domain(format!(
            "E_cm = {e_cm_kev} keV outside the elastic window (0, {hi}) keV; \
             three-body breakup opens at {hi} keV"
        )));
    }
    let tb = ThreeBody::new(config);
    let e_cm = tb.to_internal(e_cm_kev / KEV_PER_MEV);
    let e = tb.to_internal(-config.nc_channel.epsilon2_mev) + e_cm;
    let k = (2.0 * tb.mu_n * e_cm).sqrt();
    let x_on_shell = match method {
        AmplitudeMethod::PrincipalValue => solve_principal_value(&tb, grid, e, k)?,
        AmplitudeMethod::ContourRotation { angle } => {
            if !(angle > 0.0 && angle < PI / 4.0) {
                return Err(Error::Config(format!("rotation angle must lie in (0, π/4), got {angle}")));
            }
            solve_rotated(&tb, grid, e, k, angle)?
        }
    };
    let residue = tau_residue(tb.mu_nc, tb.beta_nc, tb.gamma_nc);
    let amplitude = -(tb.mu_n / (2.0 * PI)) * residue * x_on_shell;
    if !(amplitude.re.is_finite() && amplitude.im.is_finite()) {
        return Err(Error::Numerical(format!("non-finite amplitude at {e_cm_kev} keV")));
    }
    Ok(ScatteringPoint { e_cm_kev, k, amplitude, sigma: 4.0 * PI * amplitude.norm_sqr() })
}

/// Symmetrized exchange matrix over n points `pn` and core points `pc`:
/// `[[Z_nn, √2 Z_nc], [√2 Z_ncᵀ, 0]]`.
fn exchange_matrix(tb: &ThreeBody, pn: &[Complex64], pc: &[Complex64], e: Complex64) -> DMatrix<Complex64> {
    let rule = AngularRule::standard();
    let (znn, _) = exchange_blocks(tb, pn, pn, e, rule);
    let (_, znc) = exchange_blocks(tb, pn, pc, e, rule);
    let (nn, nc) = (pn.len(), pc.len());
    let s2 = Complex64::from(SQRT_2);
    DMatrix::from_fn(nn + nc, nn + nc, |r, c| match (r < nn, c < nn) {
        (true, true) => znn[(r, c)],
        (true, false) => s2 * znc[(r, c - nn)],
        (false, true) => s2 * znc[(c, r - nn)],
        (false, false) => Complex64::new(0.0, 0.0),
    })
}

fn solve_linear(mut a: DMatrix<Complex64>, d: &[Complex64], b: DVector<Complex64>) -> Result<DVector<Complex64>> {
    // A ← 1 - Ẑ D
    let n = a.nrows();
    for c in 0..n {
        for r in 0..n {
            a[(r, c)] = -a[(r, c)] * d[c];
        }
        a[(c, c)] += 1.0;
    }
    a.lu()
        .solve(&b)
        .ok_or_else(|| Error::Numerical("singular scattering equation".into()))
}

/// Real-axis nodes plus the on-shell point; subtraction removes the pole.
fn solve_principal_value(tb: &ThreeBody, grid: &MomentumGrid, e: f64, k: f64) -> Result<Complex64> {
    let n = grid.count;
    if let Some(q) = grid.nodes.iter().find(|&&q| ((q - k) / k).abs() < 1e-9) {
        return Err(Error::Numerical(format!(
            "grid node {q} fm^-1 coincides with the on-shell momentum"
        )));
    }
    let mut pn: Vec<Complex64> = grid.nodes.iter().map(|&q| Complex64::from(q)).collect();
    pn.push(Complex64::from(k));
    let pc: Vec<Complex64> = grid.nodes.iter().map(|&q| Complex64::from(q)).collect();
    let ec = Complex64::from(e);
    let z = exchange_matrix(tb, &pn, &pc, ec);

    let residue = tau_residue(tb.mu_nc, tb.beta_nc, tb.gamma_nc);
    let mut d = Vec::with_capacity(2 * n + 1);
    let measure = |j: usize| grid.weights[j] * grid.nodes[j] * grid.nodes[j] / (2.0 * PI * PI);
    for j in 0..n {
        d.push(Complex64::from(measure(j) * tb.tau_n(e, grid.nodes[j])));
    }
    let subtraction: f64 = grid
        .nodes
        .iter()
        .zip(&grid.weights)
        .map(|(&q, &w)| w / (k * k - q * q))
        .sum();
    let pole_weight = tb.mu_n * k * k * residue / (PI * PI);
    d.push(Complex64::new(-pole_weight * subtraction, -tb.mu_n * k * residue / (2.0 * PI)));
    for j in 0..n {
        d.push(Complex64::from(measure(j) * tb.tau_c(e, grid.nodes[j])));
    }
    let b = z.column(n).into_owned();
    let x = solve_linear(z, &d, b)?;
    Ok(x[n])
}

/// Rotated contour: solve off the real axis, then integrate back to `k`.
fn solve_rotated(tb: &ThreeBody, grid: &MomentumGrid, e: f64, k: f64, angle: f64) -> Result<Complex64> {
    let n = grid.count;
    let phase = Complex64::from_polar(1.0, -angle);
    let p: Vec<Complex64> = grid.nodes.iter().map(|&q| q * phase).collect();
    let ec = Complex64::from(e);
    let z = exchange_matrix(tb, &p, &p, ec);
    let mut d = Vec::with_capacity(2 * n);
    for j in 0..n {
        let w = grid.weights[j] * phase * p[j] * p[j] / (2.0 * PI * PI);
        d.push(w * tb.tau_n(ec, p[j]));
    }
    for j in 0..n {
        let w = grid.weights[j] * phase * p[j] * p[j] / (2.0 * PI * PI);
        d.push(w * tb.tau_c(ec, p[j]));
    }
    // column of Ẑ at the real on-shell point, seen from the rotated points
    let kk = [Complex64::from(k)];
    let rule = AngularRule::standard();
    let (zn_k, _) = exchange_blocks(tb, &p, &kk, ec, rule);
    let (_, zc_k) = exchange_blocks(tb, &kk, &p, ec, rule);
    let b = DVector::from_fn(2 * n, |r, _| {
        if r < n {
            zn_k[(r, 0)]
        } else {
            SQRT_2 * zc_k[(0, r - n)]
        }
    });
    let x = solve_linear(z, &d, b.clone())?;
    let z_kk = tb.z_nn(kk[0], kk[0], ec, rule);
    let mut total = z_kk;
    for j in 0..2 * n {
        total += b[j] * d[j] * x[j];
    }
    Ok(total)
}

/// σ(E) on the given energies (keV, strictly increasing, inside the elastic window).
pub fn cross_section_curve(config: &SystemConfig, grid: &MomentumGrid, energies_kev: &[f64]) -> Result<CrossSectionCurve> {
    cross_section_curve_with(config, grid, energies_kev, AmplitudeMethod::PrincipalValue)
}

pub fn cross_section_curve_with(
    config: &SystemConfig,
    grid: &MomentumGrid,
    energies_kev: &[f64],
    method: AmplitudeMethod,
) -> Result<CrossSectionCurve> {
    config.validate()?;
    if energies_kev.is_empty() {
        return Err(Error::Config("energy mesh is empty".into()));
    }
    if energies_kev.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("energies must be strictly increasing".into()));
    }
    let points = energies_kev
        .par_iter()
        .map(|&e| {
            scattering_point(config, grid, e, method)
                .map_err(|err| Error::AtEnergy { energy_kev: e, source: Box::new(err) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CrossSectionCurve { points, config_snapshot: Some(config.clone()) })
}

/// An energy interval bracketing a peak–dip pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceWindow {
    pub lo_kev: f64,
    pub hi_kev: f64,
    pub peak_kev: f64,
    pub dip_kev: f64,
}

impl ResonanceWindow {
    /// Edges are widened by 1e-9 of the width: they often fall on mesh
    /// points, and membership must not hinge on rounding.
    pub fn contains(&self, e: f64) -> bool {
        let slack = 1e-9 * (self.hi_kev - self.lo_kev);
        e >= self.lo_kev - slack && e <= self.hi_kev + slack
    }
}

/// Locates the strongest interior maximum and the deepest interior minimum and
/// returns a window 10× their separation around their midpoint. `None` when
/// the curve has no interior maximum or no interior minimum.
pub fn resonance_window(curve: &CrossSectionCurve) -> Option<ResonanceWindow> {
    let e = curve.energies_kev();
    let s = curve.sigmas();
    let limits = match &curve.config_snapshot {
        Some(c) => elastic_window_kev(c).ok(),
        None => None,
    };
    resonance_window_samples(&e, &s, limits)
}

pub(crate) fn resonance_window_samples(e: &[f64], s: &[f64], limits: Option<(f64, f64)>) -> Option<ResonanceWindow> {
    let n = s.len();
    if n < 3 {
        return None;
    }
    let maxima: Vec<usize> = (1..n - 1).filter(|&i| s[i] > s[i - 1] && s[i] >= s[i + 1]).collect();
    let minima: Vec<usize> = (1..n - 1).filter(|&i| s[i] < s[i - 1] && s[i] <= s[i + 1]).collect();
    let peak = *maxima.iter().max_by(|&&a, &&b| s[a].total_cmp(&s[b]).then(b.cmp(&a)))?;
    // deepest rather than nearest, so noise wiggles beside the peak are ignored
    let dip = *minima.iter().min_by(|&&a, &&b| s[a].total_cmp(&s[b]).then(a.abs_diff(peak).cmp(&b.abs_diff(peak))))?;
    let (ep, ed) = (e[peak], e[dip]);
    let mid = 0.5 * (ep + ed);
    let half = 5.0 * (ep - ed).abs();
    let (lo_lim, hi_lim) = limits.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    Some(ResonanceWindow {
        lo_kev: (mid - half).max(lo_lim),
        hi_kev: (mid + half).min(hi_lim),
        peak_kev: ep,
        dip_kev: ed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::model::carbon20;

    fn energies(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64).collect()
    }

    #[test]
    fn unitarity_and_bound() {
        let c = carbon20(250.0).unwrap();
        let g = build_grid(48, 1.0).unwrap();
        let curve = cross_section_curve(&c, &g, &energies(0.0, 250.0, 20)).unwrap();
        for p in &curve.points {
            assert!(p.unitarity_residual() < 1e-10, "{} {}", p.e_cm_kev, p.unitarity_residual());
            assert!(p.sigma <= p.unitarity_bound() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn contour_rotation_agrees() {
        let c = carbon20(250.0).unwrap();
        // rotation converges more slowly at low energy; PV is converged far earlier
        let g = build_grid(256, 0.3).unwrap();
        for e in [1.0, 30.0, 150.0, 240.0] {
            let pv = scattering_point(&c, &g, e, AmplitudeMethod::PrincipalValue).unwrap();
            let cr = scattering_point(&c, &g, e, AmplitudeMethod::ContourRotation { angle: 0.3 }).unwrap();
            assert!((pv.amplitude - cr.amplitude).norm() < 1e-5 * pv.amplitude.norm(), "{e}: {} {}", pv.amplitude, cr.amplitude);
        }
    }

    #[test]
    fn window_edges_rejected() {
        let c = carbon20(250.0).unwrap();
        let g = build_grid(16, 1.0).unwrap();
        for e in [0.0, -1.0, 250.0, 300.0] {
            let err = elastic_amplitude(&c, &g, e).unwrap_err();
            assert!(err.to_string().contains("breakup"), "{err}");
        }
        let err = cross_section_curve(&c, &g, &[10.0, 260.0]).unwrap_err();
        assert!(matches!(err, Error::AtEnergy { energy_kev, .. } if energy_kev == 260.0));
    }

    #[test]
    fn low_energy_effective_range() {
        let c = carbon20(250.0).unwrap();
        let g = build_grid(64, 1.0).unwrap();
        let pts: Vec<ScatteringPoint> = [0.1, 0.25, 0.5, 0.75, 0.95]
            .iter()
            .map(|&e| scattering_point(&c, &g, e, AmplitudeMethod::PrincipalValue).unwrap())
            .collect();
        // k cot δ = -1/a + r k²/2: least-squares line in k²
        let xs: Vec<f64> = pts.iter().map(|p| p.k * p.k).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.k_cot_delta()).collect();
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        assert!(intercept.is_finite());
        let resid = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).abs()).fold(0.0, f64::max);
        assert!(resid < 1e-3 * intercept.abs().max(1e-3), "{resid} {intercept}");
    }

    #[test]
    fn synthetic_fano_window() {
        let (q, er, gam) = (4.0, 1.63, 0.25);
        let e = energies(0.5, 3.5, 400);
        let s: Vec<f64> = e
            .iter()
            .map(|&x| {
                let eps = 2.0 * (x - er) / gam;
                (q + eps).powi(2) / (1.0 + eps * eps)
            })
            .collect();
        let w = resonance_window_samples(&e, &s, None).unwrap();
        assert!(w.contains(er - q * gam / 2.0) && w.contains(er + gam / (2.0 * q)));
        let mono: Vec<f64> = e.iter().map(|x| 1.0 / x).collect();
        assert!(resonance_window_samples(&e, &mono, None).is_none());
    }

    #[test]
    fn curve_csv_round_trip() {
        let curve = CrossSectionCurve::from_samples(&[(1.0, 2.0), (2.0, 3.5)]).unwrap();
        let mut buf = Vec::new();
        curve.write_csv(&mut buf).unwrap();
        let back = CrossSectionCurve::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.sigmas(), vec![2.0, 3.5]);
        assert!(CrossSectionCurve::from_samples(&[(2.0, 1.0), (1.0, 1.0)]).is_err());
    }
}
