//! Spectral information read off the coherent product.
//!
//! Everything here is driven by the autocorrelation `K_t(z, z') = K(z, e^{−ιtH} z')`
//! with `ι = i/ℏ`: time averages give eigenprojector matrix elements, Hann-windowed
//! Fourier scans give line spectra, and damped time quadrature gives the resolvent
//! `G(E) = −ι ∫₀^∞ e^{ιtE} K_t dt` for `Im E > 0`.

use std::f64::consts::PI;

use rayon::prelude::*;
use thiserror::Error;

use crate::catalog::{make_space, SpaceSpec};
use crate::dynamics::{flow_exact, DynamicsError};
use crate::fock::{dgamma_element, FockError, OscGenerator};
use crate::linalg;
use crate::space::{Point, SpaceError, SpaceHandle};
use crate::C64;

/// `−ln(1e-12)`: damped integrands are truncated once `e^{−Im E·t/ℏ}` drops below 1e-12.
const DECAY_CUTOFF: f64 = 27.631021115928547;
const STEPS_PER_PERIOD: f64 = 64.0;
const MAX_QUADRATURE_POINTS: usize = 20_000_000;
const REANCHOR_EVERY: usize = 256;

#[derive(Debug, Error, Clone)]
pub enum SpectralError {
    #[error("{0}")]
    Precondition(String),
    #[error("series covers |t| ≤ {have}, need {needed}")]
    InsufficientCoverage { needed: f64, have: f64 },
    #[error("energy grid step {step} exceeds the resolution {bin} of the series")]
    GridTooCoarse { step: f64, bin: f64 },
    #[error("roots {0} and {1} collide")]
    RootCollision(C64, C64),
    #[error("root {0} lies on the spectrum")]
    RootOnSpectrum(C64),
    #[error("energy grid [{lo}, {hi}] leaves less than 20η around the detected spectrum")]
    InsufficientSpan { lo: f64, hi: f64 },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// Uniform samples `K(z, ψ(t0 + k·dt))`.
#[derive(Clone, Debug, PartialEq)]
pub struct AutocorrSeries {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<C64>,
    pub z: Point,
    pub z_prime: Point,
    pub space_id: String,
}

impl AutocorrSeries {
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.values.len().saturating_sub(1))
    }

    fn validate(&self) -> Result<(), SpectralError> {
        if !(self.dt > 0.0) || self.values.is_empty() {
            return Err(SpectralError::Precondition("series needs dt > 0 and at least one sample".into()));
        }
        if self.values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(SpectralError::Precondition("series contains non-finite values".into()));
        }
        Ok(())
    }

    /// Samples on `[−T, T]` with `T = t_end`, filling negative times from
    /// `K_{−t}(z, z') = conj(K_t(z', z))`. A series that already starts at or
    /// before `−t_end` is returned unchanged.
    pub fn two_sided(&self, swapped: Option<&AutocorrSeries>) -> Result<(f64, Vec<C64>), SpectralError> {
        self.validate()?;
        if self.t0 < 0.0 {
            return Ok((self.t0, self.values.clone()));
        }
        if self.t0.abs() > 1e-12 * self.dt {
            return Err(SpectralError::Precondition("one-sided series must start at t = 0".into()));
        }
        let mirror = match swapped {
            Some(s) => {
                s.validate()?;
                if s.values.len() != self.values.len() || (s.dt - self.dt).abs() > 1e-12 * self.dt || s.t0 != self.t0 {
                    return Err(SpectralError::Precondition("swapped series must share the time grid".into()));
                }
                &s.values
            }
            None if self.z == self.z_prime => &self.values,
            None => {
                return Err(SpectralError::Precondition(
                    "off-diagonal series need the swapped series K_t(z', z) for negative times".into(),
                ))
            }
        };
        let n = self.values.len();
        let values = (1..n).rev().map(|k| mirror[k].conj()).chain(self.values.iter().cloned()).collect();
        Ok((-self.t_end(), values))
    }
}

/// A discrete line of the spectral measure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralLine {
    pub energy: f64,
    pub weight: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResolventSample {
    pub energy: C64,
    pub value: C64,
    /// Real-axis value obtained by `η → 0` extrapolation.
    pub extrapolated: bool,
}

/// Single Klauder space driven by an oscillator generator.
#[derive(Clone, Debug)]
pub struct OscillatorModel {
    space: SpaceHandle,
    generator: OscGenerator,
    hbar: f64,
}

impl OscillatorModel {
    pub fn new(generator: OscGenerator, hbar: f64) -> Result<Self, SpectralError> {
        if !(hbar > 0.0) {
            return Err(SpectralError::Precondition("hbar must be positive".into()));
        }
        let space = make_space(&SpaceSpec::Klauder(generator.modes()))
            .map_err(|e| SpectralError::Precondition(e.to_string()))?;
        Ok(OscillatorModel { space, generator, hbar })
    }

    /// `H = Σ ωⱼ a*ⱼaⱼ`.
    pub fn harmonic(omegas: &[f64], hbar: f64) -> Result<Self, SpectralError> {
        Self::new(OscGenerator::number(omegas), hbar)
    }

    pub fn space(&self) -> &SpaceHandle {
        &self.space
    }

    pub fn generator(&self) -> &OscGenerator {
        &self.generator
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// `e^{−ιtH} w`.
    pub fn evolve(&self, w: &Point, t: f64) -> Result<Point, SpectralError> {
        Ok(flow_exact(&self.generator, t, w, self.hbar)?)
    }

    /// `ψ(k·dt)` for `k < len`, stepping with one block exponential and
    /// re-anchoring on the exact flow periodically.
    pub fn flow_points(&self, w: &Point, dt: f64, len: usize) -> Result<Vec<Point>, SpectralError> {
        self.space.check(w)?;
        let step = self.generator.exp(C64::new(0.0, -dt / self.hbar))?;
        let mut out = Vec::with_capacity(len);
        let mut p = w.clone();
        for k in 0..len {
            if k > 0 {
                p = if k % REANCHOR_EVERY == 0 { self.evolve(w, k as f64 * dt)? } else { step.act(&p)? };
            }
            out.push(p.clone());
        }
        Ok(out)
    }

    /// `K_t(z, w)` for `t = k·dt`, `k < len`.
    pub fn kernel_series(&self, z: &Point, w: &Point, dt: f64, len: usize) -> Result<AutocorrSeries, SpectralError> {
        let values = self
            .flow_points(w, dt, len)?
            .iter()
            .map(|p| self.space.kernel(z, p))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(AutocorrSeries { t0: 0.0, dt, values, z: z.clone(), z_prime: w.clone(), space_id: self.space.id().to_string() })
    }

    /// Heuristic upper bound on the energies carrying weight in `⟨z|·|w⟩`.
    pub fn bandwidth(&self, z: &Point, w: &Point) -> f64 {
        let g = &self.generator;
        let mode_sq = |p: &Point| p.as_klauder().map(|(_, v)| v.iter().map(|c| c.norm_sqr()).sum::<f64>()).unwrap_or(0.0);
        let m = mode_sq(z).max(mode_sq(w));
        let n_max = m + 10.0 * m.sqrt() + 10.0;
        let x_norm = (0..g.x.nrows()).map(|i| g.x.row(i).iter().map(|c| c.norm()).sum::<f64>()).fold(0.0, f64::max);
        x_norm * n_max + g.rho.norm() + (g.p.norm() + g.q.norm()) * (n_max.sqrt() + 1.0)
    }

    /// Time step and sample count for damped quadrature at energies up to `e_abs`
    /// with decay rate `decay`.
    fn quadrature_grid(&self, z: &Point, w: &Point, e_abs: f64, decay: f64, t_max: f64, dt: f64) -> Result<(f64, usize), SpectralError> {
        let t_max = if t_max > 0.0 { t_max } else { DECAY_CUTOFF * self.hbar / decay };
        let dt = if dt > 0.0 { dt } else { 2.0 * PI * self.hbar / (STEPS_PER_PERIOD * (e_abs + decay + self.bandwidth(z, w)).max(1e-3)) };
        let mut intervals = (t_max / dt).ceil() as usize;
        intervals += intervals % 2;
        if intervals + 1 > MAX_QUADRATURE_POINTS {
            return Err(SpectralError::Precondition(format!("quadrature needs {} points", intervals + 1)));
        }
        Ok((t_max / intervals as f64, intervals + 1))
    }
}

fn check_upper(e: C64) -> Result<(), SpectralError> {
    if e.im > 0.0 && e.re.is_finite() && e.im.is_finite() {
        Ok(())
    } else {
        Err(SpectralError::Precondition(format!("resolvent quadrature needs Im E > 0, got {e}")))
    }
}

fn simpson_weighted(values: &[C64], dt: f64) -> Vec<C64> {
    values.iter().zip(linalg::simpson_weights(values.len(), dt)).map(|(f, w)| f * w).collect()
}

/// `−ι Σ_k e^{ιt_kE} g_k` for pre-weighted samples `g_k = w_k f(t_k)`.
fn damped_sum(weighted: &[C64], dt: f64, e: C64, hbar: f64) -> C64 {
    let step = C64::new(0.0, dt / hbar) * e;
    let rot = step.exp();
    let mut phase = C64::from(1.0);
    let mut acc = C64::from(0.0);
    for (k, g) in weighted.iter().enumerate() {
        if k % REANCHOR_EVERY == 0 {
            phase = (step * k as f64).exp();
        }
        acc += phase * g;
        phase *= rot;
    }
    C64::new(0.0, -1.0 / hbar) * acc
}

/// `−ι Σ_k w_k e^{ιt_kE} f_k` with Simpson weights.
fn damped_transform(values: &[C64], dt: f64, e: C64, hbar: f64) -> C64 {
    damped_sum(&simpson_weighted(values, dt), dt, e, hbar)
}

/// `(1/2T) ∫_{−T}^{T} e^{ιtE} K_t dt` by the trapezoidal rule.
pub fn time_average_overlap(
    series: &AutocorrSeries,
    swapped: Option<&AutocorrSeries>,
    e: f64,
    t_half: f64,
    hbar: f64,
) -> Result<C64, SpectralError> {
    let (t0, values) = series.two_sided(swapped)?;
    let dt = series.dt;
    let t_last = t0 + (values.len() - 1) as f64 * dt;
    let have = (-t0).min(t_last);
    if !(t_half > 0.0) || have < t_half - 1e-9 * t_half.max(1.0) {
        return Err(SpectralError::InsufficientCoverage { needed: t_half, have });
    }
    let slack = 1e-9 * t_half.max(dt);
    let idx: Vec<usize> = (0..values.len()).filter(|&k| (t0 + k as f64 * dt).abs() <= t_half + slack).collect();
    if idx.len() < 2 {
        return Err(SpectralError::InsufficientCoverage { needed: t_half, have });
    }
    let w = linalg::trapezoid_weights(idx.len(), dt);
    let span = (idx.len() - 1) as f64 * dt;
    let mut acc = C64::from(0.0);
    for (j, &k) in idx.iter().enumerate() {
        let t = t0 + k as f64 * dt;
        acc += w[j] * C64::new(0.0, t * e / hbar).exp() * values[k];
    }
    Ok(acc / span)
}

/// One-sided time average `(1/T) ∫₀^T e^{ιtE} K(z', ψ(t)) dt` along a trajectory.
pub fn eigencomponent_overlap(
    space: &SpaceHandle,
    z_prime: &Point,
    traj: &crate::dynamics::Trajectory,
    e: f64,
    t_end: f64,
    hbar: f64,
) -> Result<C64, SpectralError> {
    let series = crate::dynamics::autocorrelation(space, z_prime, traj)?;
    series.validate()?;
    let n = series.values.iter().enumerate().filter(|(k, _)| series.time(*k) <= t_end + 1e-9 * t_end.max(series.dt)).count();
    if n < 2 || series.time(n - 1) < t_end - 1e-9 * t_end.max(1.0) {
        return Err(SpectralError::InsufficientCoverage { needed: t_end, have: series.t_end() });
    }
    let w = linalg::trapezoid_weights(n, series.dt);
    let acc: C64 = (0..n).map(|k| w[k] * C64::new(0.0, series.time(k) * e / hbar).exp() * series.values[k]).sum();
    Ok(acc / (series.time(n - 1) - series.t0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanOptions {
    pub hbar: f64,
    /// Peaks below `noise_floor · max|S|` are discarded.
    pub noise_floor: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { hbar: 1.0, noise_floor: 1e-4 }
    }
}

struct Windowed {
    t0: f64,
    dt: f64,
    weighted: Vec<C64>,
    hbar: f64,
}

impl Windowed {
    fn at(&self, e: f64) -> C64 {
        let rot = C64::new(0.0, self.dt * e / self.hbar).exp();
        let mut phase = C64::from(1.0);
        let mut acc = C64::from(0.0);
        for (k, v) in self.weighted.iter().enumerate() {
            if k % REANCHOR_EVERY == 0 {
                phase = C64::new(0.0, (self.t0 + k as f64 * self.dt) * e / self.hbar).exp();
            }
            acc += phase * v;
            phase *= rot;
        }
        acc
    }
}

/// Hann-windowed Fourier scan of a two-sided autocorrelation with peak picking.
pub fn spectrum_scan(
    series: &AutocorrSeries,
    swapped: Option<&AutocorrSeries>,
    e_grid: &[f64],
    opts: ScanOptions,
) -> Result<Vec<SpectralLine>, SpectralError> {
    if e_grid.len() < 3 {
        return Err(SpectralError::Precondition("energy grid needs at least 3 points".into()));
    }
    let step = (e_grid[e_grid.len() - 1] - e_grid[0]) / (e_grid.len() - 1) as f64;
    if !(step > 0.0) || e_grid.windows(2).any(|w| ((w[1] - w[0]) - step).abs() > 1e-9 * step.max(1.0)) {
        return Err(SpectralError::Precondition("energy grid must be uniform and increasing".into()));
    }
    let (t0, values) = series.two_sided(swapped)?;
    let n = values.len();
    let half = (n - 1) as f64 * series.dt / 2.0;
    if !(half > 0.0) {
        return Err(SpectralError::InsufficientCoverage { needed: f64::MIN_POSITIVE, have: 0.0 });
    }
    let centre = t0 + half;
    let bin = 2.0 * PI * opts.hbar / (2.0 * half);
    if step > bin * (1.0 + 1e-3) {
        return Err(SpectralError::GridTooCoarse { step, bin });
    }
    let times: Vec<f64> = (0..n).map(|k| t0 + k as f64 * series.dt).collect();
    let hann: Vec<f64> = times.iter().map(|t| (PI * (t - centre) / (2.0 * half)).cos().powi(2)).collect();
    let gain: f64 = hann.iter().sum();
    let weighted = values.iter().zip(&hann).map(|(v, h)| v * (h / gain)).collect();
    let win = Windowed { t0, dt: series.dt, weighted, hbar: opts.hbar };

    let mags: Vec<f64> = e_grid.par_iter().map(|&e| win.at(e).norm()).collect();
    let max = mags.iter().cloned().fold(0.0, f64::max);
    let reach = ((3.0 * bin / step).ceil() as usize).max(1);
    let mut lines = Vec::new();
    for i in 0..mags.len() {
        if mags[i] <= opts.noise_floor * max || mags[i] == 0.0 {
            continue;
        }
        let lo = i.saturating_sub(reach);
        let hi = (i + reach).min(mags.len() - 1);
        let left_ok = (lo..i).all(|j| mags[j] < mags[i]);
        let right_ok = (i + 1..=hi).all(|j| mags[j] <= mags[i]);
        if !(left_ok && right_ok) {
            continue;
        }
        let a = e_grid[i.saturating_sub(1)];
        let b = e_grid[(i + 1).min(e_grid.len() - 1)];
        let energy = golden_max(|e| win.at(e).norm(), a, b, e_grid[i]);
        lines.push(SpectralLine { energy, weight: win.at(energy).norm() });
    }
    Ok(lines)
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, seed: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if (b - a).abs() < 1e-13 * a.abs().max(1.0) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let best = (a + b) / 2.0;
    if f(best) >= f(seed) {
        best
    } else {
        seed
    }
}

/// `0.05 ×` the smallest spacing between detected lines.
pub fn default_eta(lines: &[SpectralLine]) -> Option<f64> {
    let mut e: Vec<f64> = lines.iter().map(|l| l.energy).collect();
    e.sort_by(f64::total_cmp);
    e.windows(2).map(|w| w[1] - w[0]).filter(|d| *d > 0.0).min_by(f64::total_cmp).map(|d| 0.05 * d)
}

/// `⟨z|(E − H)⁻¹|z'⟩` for `Im E > 0` by damped Simpson quadrature; zero
/// `t_max` or `dt` selects them automatically.
pub fn resolvent_element(
    model: &OscillatorModel,
    z: &Point,
    z_prime: &Point,
    e: C64,
    t_max: f64,
    dt: f64,
) -> Result<ResolventSample, SpectralError> {
    check_upper(e)?;
    let (dt, n) = model.quadrature_grid(z, z_prime, e.re.abs(), e.im, t_max, dt)?;
    let series = model.kernel_series(z, z_prime, dt, n)?;
    Ok(ResolventSample { energy: e, value: damped_transform(&series.values, dt, e, model.hbar), extrapolated: false })
}

/// `⟨z|(E − H)⁻¹|z'⟩` for `Im E < 0` by the reflected quadrature
/// `ι ∫₀^∞ e^{−ιtE} K_{−t}(z, z') dt`, integrating the backward flow.
pub fn reflected_resolvent_element(
    model: &OscillatorModel,
    z: &Point,
    z_prime: &Point,
    e: C64,
    t_max: f64,
    dt: f64,
) -> Result<ResolventSample, SpectralError> {
    check_upper(e.conj())?;
    let (dt, n) = model.quadrature_grid(z, z_prime, e.re.abs(), -e.im, t_max, dt)?;
    let series = model.kernel_series(z, z_prime, -dt, n)?;
    let w = linalg::simpson_weights(n, dt);
    let acc: C64 = series
        .values
        .iter()
        .zip(&w)
        .enumerate()
        .map(|(k, (f, w))| *w * (C64::new(0.0, -(k as f64 * dt) / model.hbar) * e).exp() * f)
        .sum();
    Ok(ResolventSample { energy: e, value: C64::new(0.0, 1.0 / model.hbar) * acc, extrapolated: false })
}

fn poly_eval(coeffs: &[C64], x: C64) -> C64 {
    coeffs.iter().rev().fold(C64::from(0.0), |acc, c| acc * x + c)
}

/// `⟨z|B(H)/A(H)|z'⟩` for monic `A` with the given simple roots, through
/// `−Σⱼ B(Eⱼ)/A'(Eⱼ) · G(Eⱼ)`. `b` lists coefficients in ascending order.
/// Real roots use `2G(E + iη/2) − G(E + iη)`.
pub fn rational_element(
    model: &OscillatorModel,
    z: &Point,
    z_prime: &Point,
    roots: &[C64],
    b: &[C64],
    eta: f64,
) -> Result<C64, SpectralError> {
    if roots.is_empty() {
        return Err(SpectralError::Precondition("A needs at least one root".into()));
    }
    let deg_b = b.iter().rposition(|c| *c != C64::from(0.0)).map_or(0, |d| d);
    if deg_b >= roots.len() {
        return Err(SpectralError::Precondition(format!("deg B = {deg_b} must be below deg A = {}", roots.len())));
    }
    if !(eta > 0.0) {
        return Err(SpectralError::Precondition("eta must be positive".into()));
    }
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            if (roots[i] - roots[j]).norm() <= 1e-8 {
                return Err(SpectralError::RootCollision(roots[i], roots[j]));
            }
        }
    }
    let g_at = |e: C64| -> Result<C64, SpectralError> {
        if e.im.abs() > 1e-12 * e.re.abs().max(1.0) {
            return Ok(if e.im > 0.0 {
                resolvent_element(model, z, z_prime, e, 0.0, 0.0)?.value
            } else {
                reflected_resolvent_element(model, z, z_prime, e, 0.0, 0.0)?.value
            });
        }
        let (dt, n) = model.quadrature_grid(z, z_prime, e.re.abs(), eta / 2.0, 0.0, 0.0)?;
        let weighted = simpson_weighted(&model.kernel_series(z, z_prime, dt, n)?.values, dt);
        let full = damped_sum(&weighted, dt, C64::new(e.re, eta), model.hbar);
        let half = damped_sum(&weighted, dt, C64::new(e.re, eta / 2.0), model.hbar);
        if full.im.abs() > full.norm() / 3.0 {
            return Err(SpectralError::RootOnSpectrum(e));
        }
        Ok(2.0 * half - full)
    };
    let parts = roots
        .par_iter()
        .enumerate()
        .map(|(j, &ej)| {
            let a_prime: C64 = roots.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, ek)| ej - ek).product();
            Ok(-poly_eval(b, ej) / a_prime * g_at(ej)?)
        })
        .collect::<Result<Vec<C64>, SpectralError>>()?;
    Ok(parts.into_iter().sum())
}

/// `G(E + iη)` on a real grid from one shared time series.
fn resolvent_on_grid(model: &OscillatorModel, z: &Point, z_prime: &Point, e_grid: &[f64], eta: f64) -> Result<Vec<C64>, SpectralError> {
    let e_abs = e_grid.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let (dt, n) = model.quadrature_grid(z, z_prime, e_abs, eta, 0.0, 0.0)?;
    let weighted = simpson_weighted(&model.kernel_series(z, z_prime, dt, n)?.values, dt);
    Ok(e_grid.par_iter().map(|&e| damped_sum(&weighted, dt, C64::new(e, eta), model.hbar)).collect())
}

/// `−Im G(E + iη)(z, z') / π` per grid point.
pub fn spectral_density(model: &OscillatorModel, z: &Point, z_prime: &Point, e_grid: &[f64], eta: f64) -> Result<Vec<f64>, SpectralError> {
    if !(eta > 0.0) {
        return Err(SpectralError::Precondition("eta must be positive".into()));
    }
    Ok(resolvent_on_grid(model, z, z_prime, e_grid, eta)?.iter().map(|g| -g.im / PI).collect())
}

/// `∫_{edge}^{±∞} e^{−ιtE} c/(E − E_c)² dE` for a Lorentzian-type tail fitted to the
/// last three grid values at one end.
fn tail_integral(e: [f64; 3], rho: [C64; 3], t: f64, hbar: f64, outward: f64) -> C64 {
    let h = (e[0] - e[1]).abs();
    let d = (3.0 * rho[0] - 4.0 * rho[1] + rho[2]) / (2.0 * h);
    if d.norm() == 0.0 {
        return C64::from(0.0);
    }
    let l = (-2.0 * rho[0] / d).re;
    if !(l > 0.0) {
        return C64::from(0.0);
    }
    let (x, w) = linalg::gauss_legendre_unit(64);
    x.iter()
        .zip(&w)
        .map(|(u, w)| *w * rho[0] * C64::new(0.0, -t * (e[0] + outward * (l / u - l)) / hbar).exp() * l)
        .sum()
}

/// `|∫ e^{−ιtE} ρ(E) dE − K_t(z, z')| / |K(z, z')|` where
/// `ρ = (G(E − iη) − G(E + iη)) / 2πi` is the broadened spectral density.
pub fn kt_roundtrip_residual(
    model: &OscillatorModel,
    z: &Point,
    z_prime: &Point,
    t: f64,
    eta: f64,
    e_grid: &[f64],
) -> Result<f64, SpectralError> {
    if !(eta > 0.0) || e_grid.len() < 8 {
        return Err(SpectralError::Precondition("need eta > 0 and at least 8 grid points".into()));
    }
    let h = e_grid[1] - e_grid[0];
    let plus = resolvent_on_grid(model, z, z_prime, e_grid, eta)?;
    let swapped = if z == z_prime { plus.clone() } else { resolvent_on_grid(model, z_prime, z, e_grid, eta)? };
    let rho: Vec<C64> = plus.iter().zip(&swapped).map(|(gp, gs)| (gs.conj() - gp) / C64::new(0.0, 2.0 * PI)).collect();

    let mags: Vec<f64> = rho.iter().map(|r| r.norm()).collect();
    let max = mags.iter().cloned().fold(0.0, f64::max);
    let peaks: Vec<f64> = (1..mags.len() - 1)
        .filter(|&i| mags[i] >= 1e-3 * max && mags[i] > mags[i - 1] && mags[i] >= mags[i + 1])
        .map(|i| e_grid[i])
        .collect();
    let (lo, hi) = (e_grid[0], e_grid[e_grid.len() - 1]);
    if let (Some(first), Some(last)) = (peaks.first(), peaks.last()) {
        if first - lo < 20.0 * eta || hi - last < 20.0 * eta {
            return Err(SpectralError::InsufficientSpan { lo, hi });
        }
    }

    let hbar = model.hbar;
    let w = linalg::trapezoid_weights(e_grid.len(), h);
    let mut integral: C64 = e_grid.iter().zip(&rho).zip(&w).map(|((e, r), w)| *w * C64::new(0.0, -t * e / hbar).exp() * r).sum();
    let n = e_grid.len();
    integral += tail_integral([e_grid[n - 1], e_grid[n - 2], e_grid[n - 3]], [rho[n - 1], rho[n - 2], rho[n - 3]], t, hbar, 1.0);
    integral += tail_integral([e_grid[0], e_grid[1], e_grid[2]], [rho[0], rho[1], rho[2]], t, hbar, -1.0);

    let kt = model.space.kernel(z, &model.evolve(z_prime, t)?)?;
    let k0 = model.space.kernel(z, z_prime)?;
    Ok((integral - kt).norm() / k0.norm())
}

/// `|iℏ ∂ₜK_t − ⟨z|H|ψ(t)⟩| / |K_t|` with a centered time difference.
pub fn schwinger_dyson_residual(
    model: &OscillatorModel,
    z: &Point,
    z_prime: &Point,
    t: f64,
    dt_fd: f64,
) -> Result<f64, SpectralError> {
    if !(dt_fd > 0.0) {
        return Err(SpectralError::Precondition("dt_fd must be positive".into()));
    }
    let k = |s: f64| -> Result<C64, SpectralError> { Ok(model.space.kernel(z, &model.evolve(z_prime, s)?)?) };
    let lhs = C64::new(0.0, model.hbar) * (k(t + dt_fd)? - k(t - dt_fd)?) / (2.0 * dt_fd);
    let psi = model.evolve(z_prime, t)?;
    let rhs = dgamma_element(&model.generator, z, &psi)?;
    let kt = model.space.kernel(z, &psi)?;
    Ok((lhs - rhs).norm() / kt.norm())
}

/// `|E·G(E) − ⟨z|H(E − H)⁻¹|z'⟩ − K(z, z')| / |K(z, z')|` with both terms by
/// the same damped quadrature.
pub fn resolvent_equation_residual(model: &OscillatorModel, z: &Point, z_prime: &Point, e: C64) -> Result<f64, SpectralError> {
    check_upper(e)?;
    let (dt, n) = model.quadrature_grid(z, z_prime, e.re.abs(), e.im, 0.0, 0.0)?;
    let points = model.flow_points(z_prime, dt, n)?;
    let k: Vec<C64> = points.iter().map(|p| model.space.kernel(z, p)).collect::<Result<_, _>>()?;
    let hk: Vec<C64> = points.iter().map(|p| dgamma_element(&model.generator, z, p)).collect::<Result<_, _>>()?;
    let g = damped_transform(&k, dt, e, model.hbar);
    let hg = damped_transform(&hk, dt, e, model.hbar);
    let k0 = k[0];
    Ok((e * g - hg - k0).norm() / k0.norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn harmonic_point() -> Point {
        Point::klauder(c(-0.5, 0.0), &[c(1.0, 0.0)])
    }

    #[test]
    fn two_sided_mirrors_the_diagonal_series() {
        let z = harmonic_point();
        let s = AutocorrSeries { t0: 0.0, dt: 0.5, values: vec![c(1.0, 0.0), c(0.5, 0.5), c(0.0, 1.0)], z: z.clone(), z_prime: z, space_id: "k".into() };
        let (t0, v) = s.two_sided(None).unwrap();
        assert_eq!(t0, -1.0);
        assert_eq!(v, vec![c(0.0, -1.0), c(0.5, -0.5), c(1.0, 0.0), c(0.5, 0.5), c(0.0, 1.0)]);
    }

    #[test]
    fn off_diagonal_series_needs_its_swap() {
        let s = AutocorrSeries {
            t0: 0.0,
            dt: 0.5,
            values: vec![c(1.0, 0.0); 3],
            z: harmonic_point(),
            z_prime: Point::klauder(c(0.0, 0.0), &[c(0.0, 0.0)]),
            space_id: "k".into(),
        };
        assert!(s.two_sided(None).is_err());
    }

    #[test]
    fn constant_series_averages_to_its_value() {
        let model = OscillatorModel::new(OscGenerator::zero(1), 1.0).unwrap();
        let z = harmonic_point();
        let w = Point::klauder(c(0.2, 0.1), &[c(0.3, -0.4)]);
        let s = model.kernel_series(&z, &w, 0.1, 101).unwrap();
        let sw = model.kernel_series(&w, &z, 0.1, 101).unwrap();
        let avg = time_average_overlap(&s, Some(&sw), 0.0, 10.0, 1.0).unwrap();
        let k = model.space().kernel(&z, &w).unwrap();
        assert!((avg - k).norm() < 1e-14 * k.norm());
    }

    #[test]
    fn constant_series_has_one_line_at_zero() {
        let model = OscillatorModel::new(OscGenerator::zero(1), 1.0).unwrap();
        let z = harmonic_point();
        let s = model.kernel_series(&z, &z, 0.1, 1001).unwrap();
        let grid: Vec<f64> = (0..=400).map(|k| -1.0 + k as f64 * 0.005).collect();
        let lines = spectrum_scan(&s, None, &grid, ScanOptions::default()).unwrap();
        assert_eq!(lines.len(), 1);
        assert!(lines[0].energy.abs() < 0.005);
        assert!((lines[0].weight - 1.0).abs() < 1e-6);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let model = OscillatorModel::new(OscGenerator::zero(1), 1.0).unwrap();
        let z = harmonic_point();
        let s = model.kernel_series(&z, &z, 0.1, 101).unwrap();
        let grid: Vec<f64> = (0..10).map(|k| k as f64).collect();
        assert!(matches!(spectrum_scan(&s, None, &grid, ScanOptions::default()), Err(SpectralError::GridTooCoarse { .. })));
    }

    #[test]
    fn free_resolvent_is_a_simple_pole() {
        let model = OscillatorModel::new(OscGenerator::zero(1), 1.0).unwrap();
        let z = harmonic_point();
        let w = Point::klauder(c(0.1, 0.0), &[c(0.5, 0.2)]);
        let e = c(0.7, 0.5);
        let g = resolvent_element(&model, &z, &w, e, 0.0, 0.0).unwrap().value;
        let k = model.space().kernel(&z, &w).unwrap();
        assert!((g - k / e).norm() < 1e-6 * k.norm());
        assert!(resolvent_element(&model, &z, &w, c(0.7, 0.0), 0.0, 0.0).is_err());
    }

    #[test]
    fn free_model_residuals_vanish() {
        let model = OscillatorModel::new(OscGenerator::zero(1), 1.0).unwrap();
        let z = harmonic_point();
        assert_eq!(schwinger_dyson_residual(&model, &z, &z, 0.3, 1e-4).unwrap(), 0.0);
        assert!(resolvent_equation_residual(&model, &z, &z, c(0.5, 0.3)).unwrap() < 1e-6);
    }

    #[test]
    fn colliding_roots_are_rejected() {
        let model = OscillatorModel::harmonic(&[1.0], 1.0).unwrap();
        let z = harmonic_point();
        let r = rational_element(&model, &z, &z, &[c(-1.0, 0.0), c(-1.0, 1e-9)], &[c(1.0, 0.0)], 0.01);
        assert!(matches!(r, Err(SpectralError::RootCollision(..))));
    }

    #[test]
    fn root_on_a_line_is_rejected() {
        let model = OscillatorModel::harmonic(&[1.0], 1.0).unwrap();
        let z = harmonic_point();
        let r = rational_element(&model, &z, &z, &[c(1.0, 0.0)], &[c(1.0, 0.0)], 0.05);
        assert!(matches!(r, Err(SpectralError::RootOnSpectrum(_))));
    }

    #[test]
    fn default_eta_uses_smallest_spacing() {
        let lines = [0.0, 1.0, 1.5, 4.0].map(|energy| SpectralLine { energy, weight: 1.0 });
        assert_eq!(default_eta(&lines), Some(0.025));
    }
}
