//! Oscillatory kernels
//! D_{N,ν}(x) = e^{i2πνb} ∫_{1/2}^{2} N q(t) e^{−i2πνN²t²} (Nt)^{d−1} \widehat{dσ}(Nt|x|) dt
//! and their decay envelopes.
//!
//! \widehat{dσ} is real, so |D_{N,−ν}| = |D_{N,ν}|; sums over ν ≠ 0 are twice the sums
//! over ν > 0.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

use crate::error::{LabError, Result};
use crate::fit::{fit_power_law, SlopeFit};
use crate::functions::smooth_step;
use crate::quadrature::GaussLegendre;
use crate::report::Check;
use crate::special::bessel_j;

/// Smooth bump supported in [1/2, 2] with q(x) + q(x/2) = 1 on [1, 2].
pub fn q_bump(x: f64) -> f64 {
    if !(x > 0.5 && x < 2.0) {
        return 0.0;
    }
    let y = x.log2();
    if y <= 0.0 {
        smooth_step(y + 1.0)
    } else {
        1.0 - smooth_step(y)
    }
}

/// Fourier transform of the normalized surface measure on S^{d−1} at radius r:
/// Γ(d/2) (πr)^{1−d/2} J_{d/2−1}(2πr).
pub fn surface_measure_ft(d: usize, r: f64) -> f64 {
    assert!(d >= 2, "sphere needs d >= 2");
    let r = r.abs();
    let z = PI * r;
    if 2.0 * z < 1e-4 {
        return 1.0 - 2.0 * z * z / d as f64;
    }
    let half = d as f64 / 2.0;
    gamma(half) * z.powf(1.0 - half) * bessel_j(d as u32 - 2, 2.0 * z)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelProbe {
    pub dim: usize,
    pub n: u32,
    pub nu: i64,
    pub b: f64,
    pub x_mag: f64,
}

impl KernelProbe {
    fn validate(&self) -> Result<()> {
        if self.dim < 2 || self.n < 2 || self.nu == 0 || !(self.x_mag > 1.0) {
            return Err(LabError::InvalidParameter(format!(
                "kernel probe needs d >= 2, N >= 2, nu != 0, |x| > 1 (got {self:?})"
            )));
        }
        Ok(())
    }
}

/// Largest number of Gauss panels a single kernel evaluation may use.
pub const MAX_PANELS: usize = 1 << 21;
const NODES: usize = 20;
const REL_TOL: f64 = 1e-6;

/// Quadrature nodes on [1/2, 2]: (N²t² mod 1, weight × amplitude).
fn kernel_nodes(d: usize, n: f64, x_mag: f64, panels: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NODES);
    let h = 1.5 / panels as f64;
    (0..panels)
        .into_par_iter()
        .flat_map_iter(|k| {
            let lo = 0.5 + h * k as f64;
            rule.mapped(lo, lo + h)
                .map(|(t, w)| {
                    let amp = n * q_bump(t) * (n * t).powi(d as i32 - 1)
                        * surface_measure_ft(d, n * t * x_mag);
                    let s = n * n * t * t;
                    (s - s.floor(), w * amp)
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// ∫ amplitude·e^{−i2πνs} for ν = 1..=nu_max, by repeated multiplication.
fn moments(nodes: &[(f64, f64)], nu_max: usize) -> Vec<Complex64> {
    let partial: Vec<Vec<Complex64>> = nodes
        .par_chunks(4096)
        .map(|chunk| {
            let mut acc = vec![Complex64::new(0.0, 0.0); nu_max];
            for &(s, a) in chunk {
                let z = Complex64::from_polar(1.0, -2.0 * PI * s);
                let mut w = Complex64::new(a, 0.0);
                for slot in acc.iter_mut() {
                    w *= z;
                    *slot += w;
                }
            }
            acc
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); nu_max];
    for p in &partial {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
    }
    out
}

fn panels_for(n: f64, x_mag: f64, nu_max: f64) -> usize {
    // oscillations of e^{−i2πνN²t²} and of \widehat{dσ}(Nt|x|) over t ∈ [1/2, 2]
    (3.75 * nu_max * n * n + 1.5 * n * x_mag).ceil() as usize + 16
}

/// D_{N,ν} for ν = 1..=nu_max (b = 0).
#[derive(Debug, Clone, PartialEq)]
pub struct KernelFamily {
    pub values: Vec<Complex64>,
    /// Largest relative change, among values well above the noise floor, seen when the
    /// panel count was doubled.
    pub quadrature_change: f64,
    /// Rounding level 1e−13·∫|integrand|; values below it are indistinguishable from 0.
    pub noise_floor: f64,
}

pub fn kernel_family(d: usize, n: u32, x_mag: f64, nu_max: usize) -> Result<KernelFamily> {
    let nf = n as f64;
    let mut panels = panels_for(nf, x_mag, nu_max as f64);
    let mut coarse = moments(&kernel_nodes(d, nf, x_mag, panels), nu_max);
    loop {
        if 2 * panels > MAX_PANELS {
            return Err(LabError::QuadratureBudget(format!(
                "N={n}, |x|={x_mag}, nu up to {nu_max} needs more than {MAX_PANELS} panels"
            )));
        }
        let fine_nodes = kernel_nodes(d, nf, x_mag, 2 * panels);
        let mass: f64 = fine_nodes.iter().map(|(_, a)| a.abs()).sum();
        let fine = moments(&fine_nodes, nu_max);
        let floor = 1e-13 * mass;
        let mut worst: f64 = 0.0;
        let mut ok = true;
        for (c, f) in coarse.iter().zip(&fine) {
            let diff = (c - f).norm();
            if diff > REL_TOL * f.norm() + floor {
                ok = false;
            }
            if f.norm() > 1e6 * floor {
                worst = worst.max(diff / f.norm());
            }
        }
        if ok {
            return Ok(KernelFamily { values: fine, quadrature_change: worst, noise_floor: floor });
        }
        panels *= 2;
        coarse = fine;
    }
}

/// D_{N,ν}(x) for one probe, to relative accuracy 1e−6.
pub fn kernel_d_n_nu(probe: &KernelProbe) -> Result<Complex64> {
    probe.validate()?;
    let nf = probe.n as f64;
    let nu = probe.nu as f64;
    let eval = |panels: usize| -> (Complex64, f64) {
        let nodes = kernel_nodes(probe.dim, nf, probe.x_mag, panels);
        let mass = nodes.iter().map(|(_, a)| a.abs()).sum::<f64>();
        let v = nodes
            .par_chunks(4096)
            .map(|chunk| {
                chunk
                    .iter()
                    .map(|&(s, a)| {
                        let ph = nu * s;
                        Complex64::from_polar(a, -2.0 * PI * (ph - ph.floor()))
                    })
                    .sum::<Complex64>()
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum();
        (v, mass)
    };
    let mut panels = panels_for(nf, probe.x_mag, nu.abs());
    let (mut coarse, _) = eval(panels);
    loop {
        if 2 * panels > MAX_PANELS {
            return Err(LabError::QuadratureBudget(format!(
                "phase of {probe:?} exceeds {MAX_PANELS} panels"
            )));
        }
        let (fine, mass) = eval(2 * panels);
        if (fine - coarse).norm() <= REL_TOL * fine.norm() + 1e-13 * mass {
            return Ok(fine * Complex64::from_polar(1.0, 2.0 * PI * nu * probe.b));
        }
        panels *= 2;
        coarse = fine;
    }
}

/// Σ_{ν≠0} |D_{N,ν}(x)| with the ν-range grown until the terms are negligible.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelSum {
    pub n: u32,
    pub x_mag: f64,
    pub measured: f64,
    /// measured plus the rounding allowance of every term.
    pub upper_bound: f64,
    pub nu_max: usize,
    /// |D_{N,nu_max}| relative to the sum.
    pub last_term: f64,
    pub quadrature_change: f64,
    pub noise_floor: f64,
}

pub fn kernel_abs_sum(d: usize, n: u32, x_mag: f64, nu_cap: usize) -> Result<KernelSum> {
    let c = x_mag / n as f64;
    let mut nu_max = ((1.25 * c).ceil() as usize + 4).min(nu_cap);
    loop {
        let fam = kernel_family(d, n, x_mag, nu_max)?;
        let mags: Vec<f64> = fam.values.iter().map(|v| v.norm()).collect();
        let sum: f64 = mags.iter().sum();
        let last = mags[mags.len() - 1].max(mags[mags.len().saturating_sub(2)]);
        let rel = if sum > 0.0 { last / sum } else { 0.0 };
        if (rel < 1e-10 || last <= fam.noise_floor) && nu_max as f64 > c + 2.0 {
            return Ok(KernelSum {
                n,
                x_mag,
                measured: 2.0 * sum,
                upper_bound: 2.0 * (sum + nu_max as f64 * fam.noise_floor),
                nu_max,
                last_term: rel,
                quadrature_change: fam.quadrature_change,
                noise_floor: fam.noise_floor,
            });
        }
        if nu_max >= nu_cap {
            return Err(LabError::TailNotCertified {
                tol: 1e-10,
                reason: format!("nu-sum at N={n}, |x|={x_mag} not settled by nu={nu_cap}"),
            });
        }
        nu_max = (nu_max * 3 / 2 + 1).min(nu_cap);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// |x| ≥ N/2, envelope C (N/|x|)^{(d−2)/2}.
    Far,
    /// 1 < |x| ≤ N/2, envelope C/N.
    Near,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeProbe {
    pub n: u32,
    pub x_mag: f64,
    pub branch: Branch,
    pub measured: f64,
    pub upper_bound: f64,
    pub envelope_unit: f64,
    /// upper_bound / envelope_unit.
    pub ratio: f64,
    pub nu_max: usize,
    pub quadrature_change: f64,
    pub noise_floor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleConstant {
    pub n: u32,
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchSummary {
    pub per_scale: Vec<ScaleConstant>,
    /// Smallest C with measured ≤ C·envelope on every probe of the branch.
    pub fitted_c: f64,
    /// max/min of the per-scale constants.
    pub spread: f64,
    /// max over k of C_{N_k} / max_{j<k} C_{N_j}: how much a larger scale raises the
    /// constant already needed at smaller scales.
    pub growth: f64,
}

fn summarize(probes: &[EnvelopeProbe], branch: Branch, n_list: &[u32]) -> Option<BranchSummary> {
    let per_scale: Vec<ScaleConstant> = n_list
        .iter()
        .filter_map(|&n| {
            probes
                .iter()
                .filter(|p| p.n == n && p.branch == branch)
                .map(|p| p.ratio)
                .reduce(f64::max)
                .map(|constant| ScaleConstant { n, constant })
        })
        .collect();
    if per_scale.is_empty() {
        return None;
    }
    let cs: Vec<f64> = per_scale.iter().map(|s| s.constant).collect();
    let max = cs.iter().cloned().fold(0.0, f64::max);
    let min = cs.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut growth: f64 = 1.0;
    let mut running = cs[0];
    for &c in &cs[1..] {
        growth = growth.max(c / running);
        running = running.max(c);
    }
    Some(BranchSummary { per_scale, fitted_c: max, spread: max / min, growth })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DyadicSum {
    pub x_mag: f64,
    pub scales: Vec<u32>,
    pub sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeConfig {
    pub dim: usize,
    pub n_list: Vec<u32>,
    /// Far-branch radii as multiples c = |x|/N (c ≥ 1/2).
    pub far_ratios: Vec<f64>,
    /// Far-branch probes with c at least this enter the exponent fit.
    pub fit_min_ratio: f64,
    /// Near-branch radii 1 < |x| ≤ N/2 (those out of range for a given N are skipped).
    pub near_radii: Vec<f64>,
    pub nu_cap: usize,
    /// Radii for Σ_j Σ_ν |D_{2^j,ν}(x)|.
    pub dyadic_radii: Vec<f64>,
    /// Scales 2^j entering the dyadic sums.
    pub dyadic_scales: Vec<u32>,
}

impl EnvelopeConfig {
    pub fn standard(dim: usize) -> Self {
        Self {
            dim,
            n_list: vec![8, 16, 32],
            far_ratios: vec![0.5, 1.0, 2.0, 4.0, 8.0, 16.0],
            fit_min_ratio: 2.0,
            near_radii: vec![1.5, 2.0, 3.0, 4.0],
            nu_cap: 10_000,
            dyadic_radii: vec![1.5, 3.0, 6.0, 12.0, 24.0, 48.0, 96.0],
            dyadic_scales: vec![2, 4, 8, 16, 32, 64],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeReport {
    pub config: EnvelopeConfig,
    pub probes: Vec<EnvelopeProbe>,
    pub far: Option<BranchSummary>,
    pub near: Option<BranchSummary>,
    /// Slope of log measured against log(N/|x|) over far probes with |x|/N ≥ fit_min_ratio.
    pub exponent: Option<SlopeFit>,
    pub expected_exponent: f64,
    pub dyadic: Vec<DyadicSum>,
    pub checks: Vec<Check>,
}

impl EnvelopeReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Measures Σ_ν |D_{N,ν}| over the probe grid and fits the envelope constants.
///
/// Envelope violations are reported through `checks`, not as errors.
pub fn envelope_check(config: &EnvelopeConfig) -> Result<EnvelopeReport> {
    let d = config.dim;
    if d < 3 || config.n_list.iter().any(|&n| n < 2) {
        return Err(LabError::InvalidParameter("envelope check needs d >= 3 and N >= 2".into()));
    }
    let e = (d as f64 - 2.0) / 2.0;
    let mut jobs: Vec<(u32, f64, Branch)> = Vec::new();
    for &n in &config.n_list {
        let nf = n as f64;
        for &c in &config.far_ratios {
            if c >= 0.5 && c * nf > 1.0 {
                jobs.push((n, c * nf, Branch::Far));
            }
        }
        for &x in &config.near_radii {
            if x > 1.0 && x <= nf / 2.0 {
                jobs.push((n, x, Branch::Near));
            }
        }
    }
    let probes = jobs
        .par_iter()
        .map(|&(n, x, branch)| {
            let s = kernel_abs_sum(d, n, x, config.nu_cap)?;
            let envelope_unit = match branch {
                Branch::Far => (n as f64 / x).powf(e),
                Branch::Near => 1.0 / n as f64,
            };
            Ok(EnvelopeProbe {
                n,
                x_mag: x,
                branch,
                measured: s.measured,
                upper_bound: s.upper_bound,
                envelope_unit,
                ratio: s.upper_bound / envelope_unit,
                nu_max: s.nu_max,
                quadrature_change: s.quadrature_change,
                noise_floor: s.noise_floor,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let far = summarize(&probes, Branch::Far, &config.n_list);
    let near = summarize(&probes, Branch::Near, &config.n_list);
    let fit_pts: Vec<&EnvelopeProbe> = probes
        .iter()
        .filter(|p| p.branch == Branch::Far && p.x_mag / p.n as f64 >= config.fit_min_ratio)
        .collect();
    let exponent = fit_power_law(
        &fit_pts.iter().map(|p| p.n as f64 / p.x_mag).collect::<Vec<_>>(),
        &fit_pts.iter().map(|p| p.measured).collect::<Vec<_>>(),
    )
    .ok();

    let dyadic = config
        .dyadic_radii
        .par_iter()
        .map(|&x| {
            let mut sum = 0.0;
            for &n in &config.dyadic_scales {
                sum += kernel_abs_sum(d, n, x, config.nu_cap)?.measured;
            }
            Ok(DyadicSum { x_mag: x, scales: config.dyadic_scales.clone(), sum })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut checks = Vec::new();
    if let Some(f) = &far {
        checks.push(Check::new(
            "far-branch constant spread <= 2",
            f.spread <= 2.0,
            format!("per-N constants {:?}, spread {:.4}", consts(f), f.spread),
        ));
    }
    if let Some(nb) = &near {
        checks.push(Check::new(
            "near-branch constant spread <= 2",
            nb.spread <= 2.0,
            format!("per-N constants {:?}, spread {:.4e}", consts(nb), nb.spread),
        ));
        checks.push(Check::new(
            "near-branch constant growth <= 2",
            nb.growth <= 2.0,
            format!("per-N constants {:?}, growth {:.4}", consts(nb), nb.growth),
        ));
    }
    let all_finite = probes.iter().all(|p| p.ratio.is_finite());
    checks.push(Check::new("fitted constants finite", all_finite, format!("{} probes", probes.len())));
    match &exponent {
        Some(fit) => checks.push(Check::new(
            "far-branch exponent within 0.2",
            (fit.slope - e).abs() <= 0.2,
            format!("slope {:.4} ± {:.4} (R² {:.4}), expected {e}", fit.slope, fit.half_width, fit.r_squared),
        )),
        None => checks.push(Check::new("far-branch exponent within 0.2", false, "fit unavailable".into())),
    }
    if !dyadic.is_empty() {
        let half = dyadic.len() / 2;
        let head = dyadic[..half.max(1)].iter().map(|s| s.sum).fold(0.0, f64::max);
        let whole = dyadic.iter().map(|s| s.sum).fold(0.0, f64::max);
        checks.push(Check::new(
            "dyadic sum uniformly bounded",
            whole.is_finite() && whole <= 2.0 * head,
            format!(
                "sums {:?}",
                dyadic.iter().map(|s| (s.x_mag, s.sum)).collect::<Vec<_>>()
            ),
        ));
    }
    Ok(EnvelopeReport {
        config: config.clone(),
        probes,
        far,
        near,
        exponent,
        expected_exponent: e,
        dyadic,
        checks,
    })
}

fn consts(b: &BranchSummary) -> Vec<(u32, f64)> {
    b.per_scale.iter().map(|s| (s.n, s.constant)).collect()
}
