//! Coupled spectator-function kernel for two identical neutrons and a core.
//!
//! With separable pair t-matrices `t = |g⟩τ⟨g|` the Faddeev components reduce
//! to two one-variable amplitudes: `F_n(q)` (a neutron spectating the
//! neutron–core pair) and `F_c(q)` (the core spectating the nn pair):
//!
//! ```text
//! F_n = Z_nn τ_nc F_n + Z_nc τ_nn F_c
//! F_c = 2 Z_cn τ_nc F_n
//! ```
//!
//! `Z` is the one-particle-exchange term `⟨g q| (E - H₀)⁻¹ |g q'⟩`, s-wave
//! projected. Units inside this module: ħ = m_N = 1, momenta in fm⁻¹,
//! energies in fm⁻².

use std::f64::consts::PI;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{gauss_legendre, MomentumGrid};
use crate::model::{tau_internal, tau_real, ChannelLabel, SystemConfig};

/// Angular points used for the s-wave projection.
pub const ANGULAR_POINTS: usize = 48;

pub(crate) trait Scalar:
    Copy
    + Send
    + Sync
    + From<f64>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Mul<f64, Output = Self>
{
    fn tau(z: Self, mu: f64, beta: f64, gamma: f64) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn tau(z: f64, mu: f64, beta: f64, gamma: f64) -> f64 {
        tau_real(z, mu, beta, gamma)
    }
}

impl Scalar for Complex64 {
    #[inline]
    fn tau(z: Complex64, mu: f64, beta: f64, gamma: f64) -> Complex64 {
        tau_internal(z, mu, beta, gamma)
    }
}

/// Gauss–Legendre rule on `[-1, 1]` with weights halved, so `Σ w f(x) = ½∫f dx`.
#[derive(Debug, Clone)]
pub(crate) struct AngularRule {
    x: Vec<f64>,
    w: Vec<f64>,
}

impl AngularRule {
    pub(crate) fn new(points: usize) -> Self {
        let (x, w) = gauss_legendre(points);
        Self { x, w: w.into_iter().map(|w| 0.5 * w).collect() }
    }

    pub(crate) fn standard() -> &'static AngularRule {
        static RULE: OnceLock<AngularRule> = OnceLock::new();
        RULE.get_or_init(|| AngularRule::new(ANGULAR_POINTS))
    }
}

/// Mass and interaction constants of one configuration, in internal units.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ThreeBody {
    /// Core mass over neutron mass.
    pub a: f64,
    pub mu_nc: f64,
    pub mu_nn: f64,
    /// Neutron relative to the neutron–core pair.
    pub mu_n: f64,
    /// Core relative to the nn pair.
    pub mu_c: f64,
    pub beta_nc: f64,
    pub gamma_nc: f64,
    pub beta_nn: f64,
    pub gamma_nn: f64,
    /// MeV per internal energy unit.
    pub energy_unit: f64,
}

impl ThreeBody {
    pub(crate) fn new(config: &SystemConfig) -> Self {
        let a = config.mass_ratio();
        Self {
            a,
            mu_nc: a / (a + 1.0),
            mu_nn: 0.5,
            mu_n: (a + 1.0) / (a + 2.0),
            mu_c: 2.0 * a / (a + 2.0),
            beta_nc: config.nc_channel.beta,
            gamma_nc: config.pole_momentum(ChannelLabel::NeutronCore),
            beta_nn: config.nn_channel.beta,
            gamma_nn: config.pole_momentum(ChannelLabel::NeutronNeutron),
            energy_unit: config.constants.energy_unit(),
        }
    }

    pub(crate) fn to_internal(&self, e_mev: f64) -> f64 {
        e_mev / self.energy_unit
    }

    /// Exchange of the core between two neutron spectators, s-wave projected.
    pub(crate) fn z_nn<T: Scalar>(&self, q: T, qp: T, e: T, rule: &AngularRule) -> T {
        let a = self.a;
        let c = 1.0 / (a + 1.0);
        let kin = 0.5 + 0.5 / a;
        let qq = q * qp;
        let a0 = -e + q * q * kin + qp * qp * kin;
        let b0 = qq * (1.0 / a);
        let b2 = self.beta_nc * self.beta_nc;
        let a1 = qp * qp + q * q * (c * c) + b2;
        let a2 = q * q + qp * qp * (c * c) + b2;
        let b1 = qq * (2.0 * c);
        angular_sum(rule, a0, b0, a1, b1, a2, b1)
    }

    /// Exchange of a neutron between a neutron spectator (`q`) and the core spectator (`qc`).
    pub(crate) fn z_nc<T: Scalar>(&self, q: T, qc: T, e: T, rule: &AngularRule) -> T {
        let a = self.a;
        let c = a / (a + 1.0);
        let qq = q * qc;
        let a0 = -e + q * q + qc * qc * (0.5 / a + 0.5);
        let b0 = qq;
        let a1 = qc * qc + q * q * (c * c) + self.beta_nc * self.beta_nc;
        let b1 = qq * (2.0 * c);
        let a2 = q * q + qc * qc * 0.25 + self.beta_nn * self.beta_nn;
        let b2 = qq;
        angular_sum(rule, a0, b0, a1, b1, a2, b2)
    }

    /// `τ_nc` at the pair energy left when a neutron carries momentum `q`.
    #[inline]
    pub(crate) fn tau_n<T: Scalar>(&self, e: T, q: T) -> T {
        T::tau(e - q * q * (0.5 / self.mu_n), self.mu_nc, self.beta_nc, self.gamma_nc)
    }

    /// `τ_nn` at the pair energy left when the core carries momentum `q`.
    #[inline]
    pub(crate) fn tau_c<T: Scalar>(&self, e: T, q: T) -> T {
        T::tau(e - q * q * (0.5 / self.mu_c), self.mu_nn, self.beta_nn, self.gamma_nn)
    }
}

/// `½∫dx 1/((-(a0 + b0 x))(a1 + b1 x)(a2 + b2 x))`, the propagator `1/(E - H₀)`
/// times two rational form factors.
#[inline]
fn angular_sum<T: Scalar>(rule: &AngularRule, a0: T, b0: T, a1: T, b1: T, a2: T, b2: T) -> T {
    let mut acc = T::from(0.0);
    for (&x, &w) in rule.x.iter().zip(&rule.w) {
        let d = (a0 + b0 * x) * (a1 + b1 * x) * (a2 + b2 * x);
        acc = acc + T::from(w) / d;
    }
    -acc
}

/// Exchange blocks on a set of momenta: `Z_nn(q_i, q_j)` and `Z_nc(q_i, q_j)`
/// (rows neutron-spectator, columns core-spectator).
pub(crate) fn exchange_blocks<T: Scalar>(
    tb: &ThreeBody,
    rows: &[T],
    cols: &[T],
    e: T,
    rule: &AngularRule,
) -> (DMatrix<T>, DMatrix<T>)
where
    T: nalgebra::Scalar,
{
    let n_rows = rows.len();
    let n_cols = cols.len();
    let data: Vec<(Vec<T>, Vec<T>)> = rows
        .par_iter()
        .map(|&q| {
            let zn = cols.iter().map(|&qp| tb.z_nn(q, qp, e, rule)).collect();
            let zc = cols.iter().map(|&qp| tb.z_nc(q, qp, e, rule)).collect();
            (zn, zc)
        })
        .collect();
    let znn = DMatrix::from_fn(n_rows, n_cols, |i, j| data[i].0[j]);
    let znc = DMatrix::from_fn(n_rows, n_cols, |i, j| data[i].1[j]);
    (znn, znc)
}

/// Which spectator a kernel block belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spectator {
    Neutron,
    Core,
}

impl Spectator {
    fn offset(self, n: usize) -> usize {
        match self {
            Spectator::Neutron => 0,
            Spectator::Core => n,
        }
    }
}

/// Discretized kernel `K(E)`; the trimer condition is `det(1 - K(E)) = 0`.
///
/// Layout: rows/columns `0..n` are the neutron-spectator amplitude, `n..2n`
/// the core-spectator amplitude, both on the same momentum grid.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    pub energy_mev: Complex64,
    pub grid_count: usize,
    pub entries: DMatrix<Complex64>,
}

impl KernelMatrix {
    pub fn block(&self, row: Spectator, col: Spectator) -> DMatrix<Complex64> {
        let n = self.grid_count;
        self.entries
            .view((row.offset(n), col.offset(n)), (n, n))
            .into_owned()
    }

    pub fn max_imag(&self) -> f64 {
        self.entries.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }
}

/// Builds `K(E)` for a complex three-body energy `E` (MeV, relative to breakup).
///
/// Real energies on or above the lowest two-body threshold lie on a scattering
/// cut and are rejected; those belong to [`crate::scattering`].
pub fn build_kernel(config: &SystemConfig, grid: &MomentumGrid, energy_mev: Complex64) -> Result<KernelMatrix> {
    config.validate()?;
    if !(energy_mev.re.is_finite() && energy_mev.im.is_finite()) {
        return Err(Error::Domain(format!("non-finite energy {energy_mev}")));
    }
    let threshold = config.lowest_threshold_mev();
    if energy_mev.im == 0.0 && energy_mev.re >= threshold {
        return Err(Error::Domain(format!(
            "E = {} MeV lies on the scattering cut (threshold {threshold} MeV); \
             use the scattering module for energies above threshold",
            energy_mev.re
        )));
    }
    let tb = ThreeBody::new(config);
    let e = energy_mev / tb.energy_unit;
    let q: Vec<Complex64> = grid.nodes.iter().map(|&p| Complex64::from(p)).collect();
    let (znn, znc) = exchange_blocks(&tb, &q, &q, e, AngularRule::standard());
    let n = grid.count;
    let measure = |j: usize| grid.weights[j] * grid.nodes[j] * grid.nodes[j] / (2.0 * PI * PI);
    let tau_n: Vec<Complex64> = q.iter().map(|&p| tb.tau_n(e, p)).collect();
    let tau_c: Vec<Complex64> = q.iter().map(|&p| tb.tau_c(e, p)).collect();
    let entries = DMatrix::from_fn(2 * n, 2 * n, |r, c| match (r < n, c < n) {
        (true, true) => znn[(r, c)] * tau_n[c] * measure(c),
        (true, false) => znc[(r, c - n)] * tau_c[c - n] * measure(c - n),
        (false, true) => znc[(c, r - n)] * tau_n[c] * (2.0 * measure(c)),
        (false, false) => Complex64::new(0.0, 0.0),
    });
    Ok(KernelMatrix { energy_mev, grid_count: n, entries })
}

/// Spectrum of the real kernel below threshold.
#[derive(Debug, Clone)]
pub(crate) struct KernelSpectrum {
    /// Eigenvalues of `K(E)`, descending.
    pub eigenvalues: Vec<f64>,
    /// `det(1 - K(E))`.
    pub determinant: f64,
}

/// Eigenvalues of the real kernel at real `e_mev`. The caller guarantees
/// `e_mev` is at or below the lowest threshold (the threshold itself is the
/// one-sided limit, finite on the grid since all nodes are positive).
///
/// Below threshold every `τ` is negative, so `K` is similar to the real
/// symmetric matrix `√d (-Ẑ) √d` with `d = -w q² τ / 2π²` and
/// `Ẑ = [[Z_nn, √2 Z_nc], [√2 Z_ncᵀ, 0]]`.
pub(crate) fn real_kernel_spectrum(tb: &ThreeBody, grid: &MomentumGrid, e_mev: f64) -> Result<KernelSpectrum> {
    real_kernel_spectrum_with(tb, grid, e_mev, AngularRule::standard())
}

pub(crate) fn real_kernel_spectrum_with(
    tb: &ThreeBody,
    grid: &MomentumGrid,
    e_mev: f64,
    rule: &AngularRule,
) -> Result<KernelSpectrum> {
    let e = tb.to_internal(e_mev);
    let n = grid.count;
    let q = &grid.nodes;
    let (znn, znc) = exchange_blocks(tb, q, q, e, rule);
    let mut d = Vec::with_capacity(2 * n);
    for (j, &p) in q.iter().enumerate() {
        d.push(-grid.weights[j] * p * p * tb.tau_n(e, p) / (2.0 * PI * PI));
    }
    for (j, &p) in q.iter().enumerate() {
        d.push(-grid.weights[j] * p * p * tb.tau_c(e, p) / (2.0 * PI * PI));
    }
    if d.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical(format!("non-finite kernel at E = {e_mev} MeV")));
    }
    let eigenvalues = if d.iter().all(|&x| x > 0.0) {
        let s: Vec<f64> = d.iter().map(|x| x.sqrt()).collect();
        let sqrt2 = std::f64::consts::SQRT_2;
        let m = DMatrix::from_fn(2 * n, 2 * n, |r, c| {
            let z = match (r < n, c < n) {
                (true, true) => znn[(r, c)],
                (true, false) => sqrt2 * znc[(r, c - n)],
                (false, true) => sqrt2 * znc[(c, r - n)],
                (false, false) => 0.0,
            };
            -s[r] * z * s[c]
        });
        let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    } else {
        // Not symmetrizable (a repulsive propagator); use the general spectrum.
        let k = DMatrix::from_fn(2 * n, 2 * n, |r, c| {
            let (z, dd) = match (r < n, c < n) {
                (true, true) => (znn[(r, c)], d[c]),
                (true, false) => (znc[(r, c - n)], d[c]),
                (false, true) => (2.0 * znc[(c, r - n)], d[c]),
                (false, false) => (0.0, 0.0),
            };
            -z * dd
        });
        let mut ev: Vec<f64> = k.complex_eigenvalues().iter().map(|z| z.re).collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    };
    let determinant = eigenvalues.iter().map(|l| 1.0 - l).product();
    Ok(KernelSpectrum { eigenvalues, determinant })
}
