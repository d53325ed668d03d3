//! Fano and Breit–Wigner line-shape fits to cross-section curves.
//!
//! Fits minimize relative residuals `(model - σ)/max(|σ|, floor)` with a
//! Levenberg–Marquardt solver on the analytic Jacobian. Positive parameters
//! are carried as logarithms (the Fano background through the peak height). Automatic seeding runs a deterministic set of
//! starts, each first relaxed on absolute residuals (robust far from the
//! optimum) and then refined on relative residuals.

mod lm;
mod profile;

pub use profile::{
    breit_wigner_gradient, breit_wigner_profile, fano_gradient, fano_profile, fano_shape, reduced_energy,
    BreitWignerParameters, FanoParameters,
};

use nalgebra::{DMatrix, DVector, Vector4};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::io::format_sig;
use crate::scattering::{elastic_window_kev, resonance_window_samples, CrossSectionCurve, ResonanceWindow};
use lm::{minimize, LmOptions};

pub const MIN_FIT_POINTS: usize = 8;
/// Relative-residual denominators are floored at this fraction of max σ.
pub const RELATIVE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    Fano,
    BreitWigner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowMode {
    /// Restrict to the resonance window when one is found.
    #[default]
    Auto,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Seed {
    Auto,
    Fano(FanoParameters),
    BreitWigner(BreitWignerParameters),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitParams {
    Fano(FanoParameters),
    BreitWigner(BreitWignerParameters),
}

impl FitParams {
    pub fn evaluate(&self, e: f64) -> f64 {
        match self {
            FitParams::Fano(p) => fano_profile(e, p),
            FitParams::BreitWigner(p) => breit_wigner_profile(e, p),
        }
    }

    pub fn fano(&self) -> Option<&FanoParameters> {
        match self {
            FitParams::Fano(p) => Some(p),
            FitParams::BreitWigner(_) => None,
        }
    }

    pub fn e_r(&self) -> f64 {
        match self {
            FitParams::Fano(p) => p.e_r,
            FitParams::BreitWigner(p) => p.e_r,
        }
    }

    pub fn gamma(&self) -> f64 {
        match self {
            FitParams::Fano(p) => p.gamma,
            FitParams::BreitWigner(p) => p.gamma,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: FitModel,
    pub params: FitParams,
    /// RMS of the relative residuals.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Parameter covariance estimate, in the order of the parameter record.
    pub covariance: [[f64; 4]; 4],
    /// Window the fit was restricted to, if any.
    pub window: Option<ResonanceWindow>,
    pub points_used: usize,
}

fn rounded(x: f64) -> Value {
    let v: f64 = format_sig(x).parse().unwrap_or(x);
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
}

impl FitResult {
    pub fn q(&self) -> Option<f64> {
        self.params.fano().map(|p| p.q)
    }

    /// JSON record with values rounded to 12 significant digits.
    pub fn to_json(&self) -> Value {
        let cov: Vec<Value> = self
            .covariance
            .iter()
            .map(|row| Value::Array(row.iter().map(|&x| rounded(x)).collect()))
            .collect();
        let mut v = match &self.params {
            FitParams::Fano(p) => json!({
                "model": "fano",
                "sigma0_fm2": rounded(p.sigma0),
                "q": rounded(p.q),
                "E_r_keV": rounded(p.e_r),
                "Gamma_keV": rounded(p.gamma),
            }),
            FitParams::BreitWigner(p) => json!({
                "model": "breit_wigner",
                "sigma_bg_fm2": rounded(p.sigma_bg),
                "amplitude_fm2": rounded(p.amplitude),
                "E_r_keV": rounded(p.e_r),
                "Gamma_keV": rounded(p.gamma),
            }),
        };
        let obj = v.as_object_mut().expect("object");
        obj.insert("residual_norm".into(), rounded(self.residual_norm));
        obj.insert("iterations".into(), json!(self.iterations));
        obj.insert("converged".into(), json!(self.converged));
        obj.insert("covariance".into(), Value::Array(cov));
        v
    }
}

/// Internal coordinates and their map to the natural parameters.
trait Shape {
    fn params(theta: &Vector4<f64>) -> Option<FitParams>;
    /// Value and gradient w.r.t. the internal coordinates.
    fn eval(theta: &Vector4<f64>, e: f64) -> (f64, [f64; 4]);
    /// Natural-parameter gradient (for the covariance).
    fn natural_gradient(p: &FitParams, e: f64) -> [f64; 4];
    fn project(_theta: &mut Vector4<f64>) {}
}

struct FanoShape;

impl Shape for FanoShape {
    // coordinates (ln h, q, E_r, ln Γ) with peak height h = σ₀(1+q²): the
    // valley σ₀q² ≈ const along which near-symmetric data push q is then straight
    fn params(t: &Vector4<f64>) -> Option<FitParams> {
        let q = t[1];
        FanoParameters::new(t[0].exp() / (1.0 + q * q), q, t[2], t[3].exp()).ok().map(FitParams::Fano)
    }

    fn eval(t: &Vector4<f64>, e: f64) -> (f64, [f64; 4]) {
        let q = t[1];
        let p = FanoParameters { sigma0: t[0].exp() / (1.0 + q * q), q, e_r: t[2], gamma: t[3].exp() };
        let g = fano_gradient(e, &p);
        let v = fano_profile(e, &p);
        let dq = g[1] - g[0] * p.sigma0 * 2.0 * q / (1.0 + q * q);
        (v, [v, dq, g[2], g[3] * p.gamma])
    }

    fn natural_gradient(p: &FitParams, e: f64) -> [f64; 4] {
        match p {
            FitParams::Fano(p) => fano_gradient(e, p),
            FitParams::BreitWigner(_) => unreachable!("Fano shape with Breit-Wigner parameters"),
        }
    }
}

struct BreitWignerShape;

impl Shape for BreitWignerShape {
    fn params(t: &Vector4<f64>) -> Option<FitParams> {
        BreitWignerParameters::new(t[0], t[1].exp(), t[2], t[3].exp()).ok().map(FitParams::BreitWigner)
    }

    fn eval(t: &Vector4<f64>, e: f64) -> (f64, [f64; 4]) {
        let p = BreitWignerParameters { sigma_bg: t[0], amplitude: t[1].exp(), e_r: t[2], gamma: t[3].exp() };
        let g = breit_wigner_gradient(e, &p);
        (breit_wigner_profile(e, &p), [g[0], g[1] * p.amplitude, g[2], g[3] * p.gamma])
    }

    fn natural_gradient(p: &FitParams, e: f64) -> [f64; 4] {
        match p {
            FitParams::BreitWigner(p) => breit_wigner_gradient(e, p),
            FitParams::Fano(_) => unreachable!("Breit-Wigner shape with Fano parameters"),
        }
    }

    fn project(t: &mut Vector4<f64>) {
        t[0] = t[0].max(0.0);
    }
}

struct Data<'a> {
    e: &'a [f64],
    s: &'a [f64],
    /// Residual weights.
    w: Vec<f64>,
}

impl<'a> Data<'a> {
    fn absolute(e: &'a [f64], s: &'a [f64]) -> Self {
        let scale = s.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
        Self { e, s, w: vec![1.0 / scale; s.len()] }
    }

    fn relative(e: &'a [f64], s: &'a [f64]) -> Self {
        let floor = RELATIVE_FLOOR * s.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let floor = floor.max(f64::MIN_POSITIVE);
        Self { e, s, w: s.iter().map(|x| 1.0 / x.abs().max(floor)).collect() }
    }

    fn residuals<S: Shape>(&self, t: &Vector4<f64>) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let n = self.e.len();
        let mut r = DVector::zeros(n);
        let mut j = DMatrix::zeros(n, 4);
        for i in 0..n {
            let (v, g) = S::eval(t, self.e[i]);
            r[i] = (v - self.s[i]) * self.w[i];
            for c in 0..4 {
                j[(i, c)] = g[c] * self.w[i];
            }
        }
        (r.iter().all(|x| x.is_finite()) && j.iter().all(|x| x.is_finite())).then_some((r, j))
    }
}

fn to_internal(p: &FitParams) -> Vector4<f64> {
    match p {
        FitParams::Fano(p) => Vector4::new((p.sigma0 * (1.0 + p.q * p.q)).ln(), p.q, p.e_r, p.gamma.ln()),
        FitParams::BreitWigner(p) => Vector4::new(p.sigma_bg, p.amplitude.ln(), p.e_r, p.gamma.ln()),
    }
}

struct Run {
    theta: Vector4<f64>,
    cost: f64,
    iterations: usize,
    converged: bool,
}

fn run<S: Shape>(e: &[f64], s: &[f64], start: Vector4<f64>, staged: bool) -> Run {
    let opts = LmOptions::default();
    let mut theta = start;
    let mut iterations = 0;
    if staged {
        let abs = Data::absolute(e, s);
        let out = minimize(theta, |t| abs.residuals::<S>(t), S::project, &opts);
        if out.cost.is_finite() {
            theta = out.theta;
        }
        iterations += out.iterations;
    }
    let rel = Data::relative(e, s);
    let out = minimize(theta, |t| rel.residuals::<S>(t), S::project, &opts);
    Run { theta: out.theta, cost: out.cost, iterations: iterations + out.iterations, converged: out.converged }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median σ over the lowest and highest quarters of the energy range.
fn outer_quartile_median(s: &[f64]) -> f64 {
    let k = (s.len() / 4).max(1);
    median(s[..k].iter().chain(&s[s.len() - k..]).copied().collect())
}

fn argmax(s: &[f64]) -> usize {
    (0..s.len()).fold(0, |best, i| if s[i] > s[best] { i } else { best })
}

fn argmin(s: &[f64]) -> usize {
    (0..s.len()).fold(0, |best, i| if s[i] < s[best] { i } else { best })
}

/// Full width at half height of the peak at `i` above `base`, or a tenth of the range.
fn half_width(e: &[f64], s: &[f64], i: usize, base: f64) -> f64 {
    let half = base + 0.5 * (s[i] - base);
    let lo = (0..i).rev().find(|&j| s[j] < half).map(|j| e[j]);
    let hi = (i + 1..s.len()).find(|&j| s[j] < half).map(|j| e[j]);
    match (lo, hi) {
        (Some(a), Some(b)) => b - a,
        (Some(a), None) => 2.0 * (e[i] - a),
        (None, Some(b)) => 2.0 * (b - e[i]),
        (None, None) => 0.1 * (e[e.len() - 1] - e[0]),
    }
    .max(1e-6 * (e[e.len() - 1] - e[0]))
}

fn fano_starts(e: &[f64], s: &[f64], window: Option<&ResonanceWindow>) -> Vec<FanoParameters> {
    let bg = outer_quartile_median(s).abs().max(f64::MIN_POSITIVE);
    let mut starts = Vec::new();
    let (peak, dip) = match window {
        Some(w) => (w.peak_kev, w.dip_kev),
        None => (e[argmax(s)], e[argmin(s)]),
    };
    let sign = if peak >= dip { 1.0 } else { -1.0 };
    let sep = (peak - dip).abs().max(1e-6 * (e[e.len() - 1] - e[0]));
    // the prescribed seed first, then starts placing peak and zero exactly for a ladder of |q|
    starts.push(FanoParameters { sigma0: bg, q: 2.0 * sign, e_r: 0.5 * (peak + dip), gamma: sep });
    let s_peak = s[argmax(s)];
    for qm in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
        let gamma = 2.0 * sep / (qm + 1.0 / qm);
        let e_r = peak - sign * gamma / (2.0 * qm);
        for sigma0 in [bg, (s_peak / (1.0 + qm * qm)).max(f64::MIN_POSITIVE)] {
            starts.push(FanoParameters { sigma0, q: sign * qm, e_r, gamma });
        }
    }
    if window.is_none() {
        // peak-only or dip-only shapes
        let i = argmax(s);
        let w = half_width(e, s, i, bg);
        let qm = ((s[i] / bg - 1.0).max(1e-6)).sqrt();
        for q in [qm, -qm] {
            starts.push(FanoParameters { sigma0: bg, q, e_r: e[i], gamma: w });
        }
        let d = argmin(s);
        starts.push(FanoParameters { sigma0: bg, q: 0.0, e_r: e[d], gamma: half_width(e, &s.iter().map(|x| -x).collect::<Vec<_>>(), d, -bg) });
    }
    starts
}

fn breit_wigner_starts(e: &[f64], s: &[f64]) -> Vec<BreitWignerParameters> {
    let bg = outer_quartile_median(s).max(0.0);
    let i = argmax(s);
    let amp = (s[i] - bg).max(1e-6 * s[i].abs()).max(f64::MIN_POSITIVE);
    let w = half_width(e, s, i, bg);
    [1.0, 0.5, 2.0]
        .iter()
        .map(|&f| BreitWignerParameters { sigma_bg: bg, amplitude: amp, e_r: e[i], gamma: w * f })
        .collect()
}

fn covariance<S: Shape>(e: &[f64], s: &[f64], p: &FitParams) -> [[f64; 4]; 4] {
    let rel = Data::relative(e, s);
    let n = e.len();
    let mut j = DMatrix::zeros(n, 4);
    let mut rss = 0.0;
    for i in 0..n {
        let g = S::natural_gradient(p, e[i]);
        for c in 0..4 {
            j[(i, c)] = g[c] * rel.w[i];
        }
        rss += ((p.evaluate(e[i]) - s[i]) * rel.w[i]).powi(2);
    }
    let dof = if n > 4 { (n - 4) as f64 } else { n as f64 };
    let jtj = j.transpose() * &j;
    let inv = jtj
        .clone()
        .try_inverse()
        .or_else(|| jtj.pseudo_inverse(1e-300).ok())
        .unwrap_or_else(|| DMatrix::from_element(4, 4, f64::NAN));
    let mut out = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            out[a][b] = 0.5 * (inv[(a, b)] + inv[(b, a)]) * rss / dof;
        }
    }
    out
}

fn validate_samples(e: &[f64], s: &[f64]) -> Result<()> {
    if e.len() != s.len() {
        return Err(Error::Config("energy and cross-section lengths differ".into()));
    }
    if e.len() < MIN_FIT_POINTS {
        return Err(Error::Config(format!("fit needs at least {MIN_FIT_POINTS} points, got {}", e.len())));
    }
    if e.iter().chain(s).any(|x| !x.is_finite()) {
        return Err(Error::Config("fit data contain non-finite values".into()));
    }
    if e.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("fit energies must be strictly increasing".into()));
    }
    let (lo, hi) = s.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if hi - lo <= 1e-14 * hi.abs().max(lo.abs()) {
        return Err(Error::FlatData);
    }
    Ok(())
}

/// Fits a curve. With `WindowMode::Auto` the fit uses the points inside the
/// resonance window when the curve has one (and it holds enough points).
pub fn fit(curve: &CrossSectionCurve, model: FitModel, seed: Seed, window: WindowMode) -> Result<FitResult> {
    let limits = curve.config_snapshot.as_ref().and_then(|c| elastic_window_kev(c).ok());
    fit_samples(&curve.energies_kev(), &curve.sigmas(), model, seed, window, limits)
}

pub fn fit_samples(
    e: &[f64],
    s: &[f64],
    model: FitModel,
    seed: Seed,
    window: WindowMode,
    limits: Option<(f64, f64)>,
) -> Result<FitResult> {
    validate_samples(e, s)?;
    let mut win = resonance_window_samples(e, s, limits);
    let (fe, fs): (Vec<f64>, Vec<f64>) = match (window, &win) {
        (WindowMode::Auto, Some(w)) => e.iter().zip(s).filter(|(x, _)| w.contains(**x)).map(|(a, b)| (*a, *b)).unzip(),
        _ => (e.to_vec(), s.to_vec()),
    };
    let (fe, fs) = if fe.len() >= MIN_FIT_POINTS {
        (fe, fs)
    } else {
        (e.to_vec(), s.to_vec())
    };
    if window == WindowMode::Full || fe.len() == e.len() {
        win = win.filter(|_| window == WindowMode::Auto && fe.len() < e.len());
    }
    validate_samples(&fe, &fs)?;

    let (starts, staged): (Vec<FitParams>, bool) = match (model, seed) {
        (FitModel::Fano, Seed::Fano(p)) => {
            p.validate()?;
            (vec![FitParams::Fano(p)], false)
        }
        (FitModel::BreitWigner, Seed::BreitWigner(p)) => {
            BreitWignerParameters::new(p.sigma_bg, p.amplitude, p.e_r, p.gamma)?;
            (vec![FitParams::BreitWigner(p)], false)
        }
        (FitModel::Fano, Seed::Auto) => {
            let w = resonance_window_samples(&fe, &fs, limits);
            (fano_starts(&fe, &fs, w.as_ref()).into_iter().map(FitParams::Fano).collect(), true)
        }
        (FitModel::BreitWigner, Seed::Auto) => {
            (breit_wigner_starts(&fe, &fs).into_iter().map(FitParams::BreitWigner).collect(), true)
        }
        _ => return Err(Error::Config("seed does not match the fit model".into())),
    };

    let mut best: Option<Run> = None;
    let mut iterations = 0;
    for p in &starts {
        let theta = to_internal(p);
        let r = match model {
            FitModel::Fano => run::<FanoShape>(&fe, &fs, theta, staged),
            FitModel::BreitWigner => run::<BreitWignerShape>(&fe, &fs, theta, staged),
        };
        iterations += r.iterations;
        let better = match &best {
            None => r.cost.is_finite(),
            Some(b) => r.cost < b.cost,
        };
        if better {
            best = Some(r);
        }
    }
    let best = best.ok_or_else(|| Error::Numerical("every fit start failed".into()))?;
    let params = match model {
        FitModel::Fano => FanoShape::params(&best.theta),
        FitModel::BreitWigner => BreitWignerShape::params(&best.theta),
    }
    .ok_or_else(|| Error::Numerical("fit left the parameter domain".into()))?;
    let covariance = match model {
        FitModel::Fano => covariance::<FanoShape>(&fe, &fs, &params),
        FitModel::BreitWigner => covariance::<BreitWignerShape>(&fe, &fs, &params),
    };
    let residual_norm = (2.0 * best.cost / fe.len() as f64).sqrt();
    Ok(FitResult {
        model,
        params,
        residual_norm,
        iterations,
        converged: best.converged,
        covariance,
        window: win,
        points_used: fe.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QConsistency {
    pub q_values: Vec<f64>,
    pub max_relative_spread: f64,
}

/// Spread of the profile indices of several converged Fano fits.
pub fn q_consistency(fits: &[FitResult]) -> Result<QConsistency> {
    if fits.len() < 2 {
        return Err(Error::Config("q consistency needs at least two fits".into()));
    }
    let bad: Vec<usize> = (0..fits.len()).filter(|&i| !fits[i].converged).collect();
    if !bad.is_empty() {
        return Err(Error::NotConverged(bad));
    }
    let q_values = fits
        .iter()
        .enumerate()
        .map(|(i, f)| f.q().ok_or_else(|| Error::Config(format!("fit {i} is not a Fano fit"))))
        .collect::<Result<Vec<_>>>()?;
    let mean = q_values.iter().sum::<f64>() / q_values.len() as f64;
    let mut spread: f64 = 0.0;
    for a in &q_values {
        for b in &q_values {
            spread = spread.max((a - b).abs());
        }
    }
    Ok(QConsistency { max_relative_spread: spread / mean.abs(), q_values })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    fn fano_data(p: &FanoParameters, e: &[f64]) -> Vec<f64> {
        e.iter().map(|&x| fano_profile(x, p)).collect()
    }

    #[test]
    fn recovers_noise_free_fano() {
        let truth = FanoParameters::new(1.0, 4.0, 1.63, 0.25).unwrap();
        let e = mesh(0.5, 3.5, 200);
        let s = fano_data(&truth, &e);
        let r = fit_samples(&e, &s, FitModel::Fano, Seed::Auto, WindowMode::Auto, None).unwrap();
        assert!(r.converged);
        let p = r.params.fano().unwrap();
        for (a, b) in p.as_array().iter().zip(truth.as_array()) {
            assert!((a - b).abs() < 1e-8 * b.abs(), "{p:?}");
        }
        assert!((p.zero_energy() - truth.zero_energy()).abs() < 1e-6);
    }

    #[test]
    fn negative_q_mirror() {
        let truth = FanoParameters::new(2.0, -3.0, 5.0, 0.8).unwrap();
        let e = mesh(1.0, 9.0, 150);
        let r = fit_samples(&e, &fano_data(&truth, &e), FitModel::Fano, Seed::Auto, WindowMode::Full, None).unwrap();
        let p = r.params.fano().unwrap();
        assert!((p.q + 3.0).abs() < 1e-8, "{p:?}");
    }

    #[test]
    fn idempotent_refit() {
        let truth = FanoParameters::new(1.0, 4.0, 1.63, 0.25).unwrap();
        let e = mesh(0.5, 3.5, 200);
        let s = fano_data(&truth, &e);
        let r1 = fit_samples(&e, &s, FitModel::Fano, Seed::Auto, WindowMode::Auto, None).unwrap();
        let p1 = *r1.params.fano().unwrap();
        let r2 = fit_samples(&e, &s, FitModel::Fano, Seed::Fano(p1), WindowMode::Auto, None).unwrap();
        let p2 = r2.params.fano().unwrap();
        for (a, b) in p1.as_array().iter().zip(p2.as_array()) {
            assert!((a - b).abs() <= 1e-12 * b.abs(), "{p1:?} {p2:?}");
        }
    }

    #[test]
    fn breit_wigner_data_pushes_q_large() {
        let bw = BreitWignerParameters::new(0.0, 5.0, 2.0, 0.3).unwrap();
        let e = mesh(0.5, 3.5, 120);
        let s: Vec<f64> = e.iter().map(|&x| breit_wigner_profile(x, &bw)).collect();
        let r = fit_samples(&e, &s, FitModel::Fano, Seed::Auto, WindowMode::Full, None).unwrap();
        let p = r.params.fano().unwrap();
        assert!(p.q.abs() > 50.0, "{p:?}");
        assert!(r.residual_norm < 1e-6, "{}", r.residual_norm);
        let rb = fit_samples(&e, &s, FitModel::BreitWigner, Seed::Auto, WindowMode::Full, None).unwrap();
        assert!(rb.residual_norm < 1e-10);
    }

    #[test]
    fn flat_and_short_data_rejected() {
        let e = mesh(0.0, 1.0, 20);
        assert!(matches!(
            fit_samples(&e, &[3.0; 20], FitModel::Fano, Seed::Auto, WindowMode::Auto, None),
            Err(Error::FlatData)
        ));
        let e = mesh(0.0, 1.0, 7);
        let s: Vec<f64> = e.iter().map(|x| x + 1.0).collect();
        assert!(fit_samples(&e, &s, FitModel::Fano, Seed::Auto, WindowMode::Auto, None).is_err());
    }

    #[test]
    fn covariance_symmetric_psd() {
        let truth = FanoParameters::new(1.0, 4.0, 1.63, 0.25).unwrap();
        let e = mesh(0.5, 3.5, 200);
        let s: Vec<f64> = fano_data(&truth, &e)
            .iter()
            .enumerate()
            .map(|(i, x)| x * (1.0 + 0.01 * ((i * 7919) % 13) as f64 / 13.0 - 0.005))
            .collect();
        let r = fit_samples(&e, &s, FitModel::Fano, Seed::Auto, WindowMode::Full, None).unwrap();
        let c = nalgebra::Matrix4::from_fn(|i, j| r.covariance[i][j]);
        assert!((c - c.transpose()).amax() == 0.0);
        assert!(c.symmetric_eigenvalues().iter().all(|&l| l >= -1e-12 * c.amax()));
    }

    #[test]
    fn q_spread() {
        let mk = |q: f64| FitResult {
            model: FitModel::Fano,
            params: FitParams::Fano(FanoParameters::new(1.0, q, 0.0, 1.0).unwrap()),
            residual_norm: 0.0,
            iterations: 1,
            converged: true,
            covariance: [[0.0; 4]; 4],
            window: None,
            points_used: 8,
        };
        assert_eq!(q_consistency(&[mk(4.0), mk(4.0)]).unwrap().max_relative_spread, 0.0);
        let s = q_consistency(&[mk(4.0), mk(5.0)]).unwrap().max_relative_spread;
        assert!((s - 1.0 / 4.5).abs() < 1e-12);
        let mut bad = mk(4.0);
        bad.converged = false;
        assert!(matches!(q_consistency(&[mk(4.0), bad]), Err(Error::NotConverged(v)) if v == vec![1]));
        assert!(q_consistency(&[mk(1.0)]).is_err());
    }

    #[test]
    fn json_shape() {
        let truth = FanoParameters::new(1.0, 4.0, 1.63, 0.25).unwrap();
        let e = mesh(0.5, 3.5, 60);
        let r = fit_samples(&e, &fano_data(&truth, &e), FitModel::Fano, Seed::Auto, WindowMode::Auto, None).unwrap();
        let v = r.to_json();
        for key in ["model", "sigma0_fm2", "q", "E_r_keV", "Gamma_keV", "residual_norm", "converged", "covariance"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["model"], "fano");
        assert_eq!(v["covariance"].as_array().unwrap().len(), 4);
    }
}
