//! Periodizations g_ρ(x) = Σ_{ν∈Z^d} f(ρ(x − ν)) on uniform grids, their Fourier
//! coefficients, and the rotated-lattice Parseval identity ĝ_ρ(m) = f̂(ρm).
//!
//! Two routes build a grid:
//!
//! * `LatticeSum` sums f over all lattice translates within a certified radius; used
//!   whenever f has a certified space-side envelope (Gaussians).
//! * `SpectralSynthesis` sums the finitely many nonzero Fourier modes
//!   Σ_m f̂(ρm) e^{2πi m·x}; used when f̂ has compact support, where it is exact.

use std::io::{Read, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::functions::TestFunction;
use crate::haar::Rotation;

/// A point of Z^d.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct LatticePoint {
    pub coords: Vec<i64>,
}

impl LatticePoint {
    pub fn new(coords: Vec<i64>) -> Self {
        Self { coords }
    }

    pub fn origin(d: usize) -> Self {
        Self { coords: vec![0; d] }
    }

    /// e_j.
    pub fn unit(d: usize, j: usize) -> Self {
        let mut coords = vec![0; d];
        coords[j] = 1;
        Self { coords }
    }

    pub fn norm_sq(&self) -> u64 {
        self.coords.iter().map(|c| (c * c) as u64).sum()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.coords.iter().map(|&c| c as f64).collect()
    }
}

/// All m ∈ Z^d with |m|² ≤ bound.
pub fn lattice_points_within(d: usize, norm_sq_bound: u64) -> Vec<LatticePoint> {
    fn recurse(
        d: usize,
        remaining: u64,
        prefix: &mut Vec<i64>,
        out: &mut Vec<LatticePoint>,
    ) {
        if prefix.len() == d {
            out.push(LatticePoint::new(prefix.clone()));
            return;
        }
        let k = (remaining as f64).sqrt().floor() as i64;
        // guard against sqrt rounding
        let k = (k - 1..=k + 1).rev().find(|v| *v >= 0 && (v * v) as u64 <= remaining).unwrap_or(0);
        for c in -k..=k {
            prefix.push(c);
            recurse(d, remaining - (c * c) as u64, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    recurse(d, norm_sq_bound, &mut Vec::with_capacity(d), &mut out);
    out
}

/// Number of m ∈ Z^d with |m|_∞ = k.
fn linf_shell_count(d: usize, k: u64) -> f64 {
    if k == 0 {
        1.0
    } else {
        (2.0 * k as f64 + 1.0).powi(d as i32) - (2.0 * k as f64 - 1.0).powi(d as i32)
    }
}

/// Certified bound on Σ envelope(|y|) over points y = x − ν (ν ∈ Z^d) with |y| > r.
///
/// `offset` bounds |x|_∞ (0 for the lattice itself, 1 for x ∈ [0,1)^d), and `envelope`
/// must be nonincreasing. Points are grouped by k = |ν|_∞: such a point satisfies
/// |y| ≥ k − offset and |y| ≤ (k + offset)√d, so each omitted term is at most
/// envelope(max(r, k − offset)).
pub fn lattice_tail_bound<E: Fn(f64) -> f64>(d: usize, r: f64, offset: f64, envelope: E) -> f64 {
    let sqrt_d = (d as f64).sqrt();
    let mut total = 0.0;
    let mut k: u64 = 0;
    loop {
        let kf = k as f64;
        if (kf + offset) * sqrt_d > r {
            let e = envelope(r.max(kf - offset));
            let term = linf_shell_count(d, k) * e;
            total += term;
            if kf - offset > r && (term == 0.0 || term < 1e-30 * total.max(1e-300)) {
                break;
            }
        }
        k += 1;
        if k > 1_000_000 {
            return f64::INFINITY;
        }
    }
    total
}

/// How a grid was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PeriodizationRoute {
    LatticeSum,
    SpectralSynthesis,
}

/// Samples of g_ρ on the grid (k/n_g)_{k ∈ {0..n_g−1}^d}, row-major (last axis fastest).
#[derive(Debug, Clone)]
pub struct PeriodizationGrid {
    pub dim: usize,
    pub grid_size: usize,
    pub samples: Vec<Complex64>,
    pub rotation: Rotation,
    pub truncation_radius: f64,
    pub truncation_error: f64,
    pub route: PeriodizationRoute,
}

fn grid_point(index: usize, d: usize, n: usize, out: &mut [f64]) {
    let mut rest = index;
    for axis in (0..d).rev() {
        out[axis] = (rest % n) as f64 / n as f64;
        rest /= n;
    }
}

/// Radius R for which the omitted lattice-sum tail over x ∈ [0,1)^d is ≤ `budget`.
fn lattice_sum_radius(f: &TestFunction, budget: f64) -> Result<(f64, f64)> {
    let d = f.dimension();
    let env = |r: f64| f.space_envelope(r).unwrap_or(f64::INFINITY);
    let mut r = f.space_decay(budget).unwrap_or(1.0).max(0.5);
    for _ in 0..200 {
        let tail = lattice_tail_bound(d, r, 1.0, env);
        if tail <= budget {
            return Ok((r, tail));
        }
        r *= 1.1;
    }
    Err(LabError::Truncation {
        tol: budget,
        reason: format!("lattice tail still above budget at radius {r}"),
    })
}

/// Direct lattice sum Σ_{|x−ν| ≤ radius} f(ρ(x − ν)) at one point.
pub fn eval_periodization(f: &TestFunction, rho: &Rotation, x: &[f64], radius: f64) -> Complex64 {
    let d = f.dimension();
    let box_r = radius.ceil() as i64 + 1;
    let mut total = Complex64::new(0.0, 0.0);
    let mut nu = vec![-box_r; d];
    let mut y = vec![0.0; d];
    let mut ry = vec![0.0; d];
    loop {
        let mut dist = 0.0;
        for i in 0..d {
            y[i] = x[i] - nu[i] as f64;
            dist += y[i] * y[i];
        }
        if dist <= radius * radius {
            rho.apply_into(&y, &mut ry);
            total += f.eval_space(&ry);
        }
        // odometer
        let mut i = 0;
        while i < d {
            nu[i] += 1;
            if nu[i] <= box_r {
                break;
            }
            nu[i] = -box_r;
            i += 1;
        }
        if i == d {
            break;
        }
    }
    total
}

/// Builds the periodization grid of `f` under `rho`, with certified absolute error ≤ `tol`.
pub fn periodize(f: &TestFunction, rho: &Rotation, n_g: usize, tol: f64) -> Result<PeriodizationGrid> {
    let d = f.dimension();
    if rho.dim() != d {
        return Err(LabError::InvalidParameter(format!(
            "rotation dimension {} != function dimension {d}",
            rho.dim()
        )));
    }
    if n_g < 4 {
        return Err(LabError::InvalidParameter(format!("grid size {n_g} < 4")));
    }
    if !(tol > 0.0) {
        return Err(LabError::InvalidParameter(format!("tolerance {tol} must be positive")));
    }
    let total = n_g.pow(d as u32);

    if f.space_envelope(0.0).is_some() {
        // half the budget as safety margin
        let (radius, tail) = lattice_sum_radius(f, 0.5 * tol)?;
        let box_r = radius.ceil() as i64 + 1;
        // rotated translates ρν within reach of [0,1)^d
        let shifts: Vec<Vec<f64>> = {
            let mut v = Vec::new();
            let mut nu = vec![-box_r; d];
            loop {
                // distance from the unit cube to ν
                let gap: f64 = nu
                    .iter()
                    .map(|&c| {
                        let c = c as f64;
                        if c < 0.0 {
                            c * c
                        } else if c > 1.0 {
                            (c - 1.0) * (c - 1.0)
                        } else {
                            0.0
                        }
                    })
                    .sum();
                if gap <= radius * radius {
                    v.push(nu.iter().map(|&c| c as f64).collect());
                }
                let mut i = 0;
                while i < d {
                    nu[i] += 1;
                    if nu[i] <= box_r {
                        break;
                    }
                    nu[i] = -box_r;
                    i += 1;
                }
                if i == d {
                    break;
                }
            }
            v
        };
        let samples: Vec<Complex64> = (0..total)
            .into_par_iter()
            .map(|idx| {
                let mut x = vec![0.0; d];
                grid_point(idx, d, n_g, &mut x);
                let mut y = vec![0.0; d];
                let mut ry = vec![0.0; d];
                let mut acc = Complex64::new(0.0, 0.0);
                for nu in &shifts {
                    let mut dist = 0.0;
                    for i in 0..d {
                        y[i] = x[i] - nu[i];
                        dist += y[i] * y[i];
                    }
                    if dist <= radius * radius {
                        rho.apply_into(&y, &mut ry);
                        acc += f.eval_space(&ry);
                    }
                }
                acc
            })
            .collect();
        return Ok(PeriodizationGrid {
            dim: d,
            grid_size: n_g,
            samples,
            rotation: rho.clone(),
            truncation_radius: radius,
            truncation_error: tail,
            route: PeriodizationRoute::LatticeSum,
        });
    }

    if let Some(support) = f.freq_support_radius() {
        let bound = (support * support).floor() as u64;
        let modes: Vec<(Vec<f64>, Complex64)> = lattice_points_within(d, bound)
            .into_iter()
            .filter_map(|m| {
                let c = fourier_coefficient(f, rho, &m, 1.0);
                (c.norm() > 0.0).then(|| (m.as_f64(), c))
            })
            .collect();
        let samples: Vec<Complex64> = (0..total)
            .into_par_iter()
            .map(|idx| {
                let mut x = vec![0.0; d];
                grid_point(idx, d, n_g, &mut x);
                modes
                    .iter()
                    .map(|(m, c)| {
                        let phase: f64 = m.iter().zip(&x).map(|(a, b)| a * b).sum();
                        c * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * phase)
                    })
                    .sum()
            })
            .collect();
        return Ok(PeriodizationGrid {
            dim: d,
            grid_size: n_g,
            samples,
            rotation: rho.clone(),
            truncation_radius: support,
            truncation_error: 0.0,
            route: PeriodizationRoute::SpectralSynthesis,
        });
    }

    Err(LabError::Truncation {
        tol,
        reason: format!("{} has neither a space envelope nor compact spectrum", f.id()),
    })
}

/// ĝ_ρ(m) = f̂(scale · ρm). `scale = 1` is the lattice Z^d, `scale = 1/√2` the
/// rescaled lattice on which all shells have odd index.
pub fn fourier_coefficient(f: &TestFunction, rho: &Rotation, m: &LatticePoint, scale: f64) -> Complex64 {
    let mut xi = rho.apply(&m.as_f64());
    for v in &mut xi {
        *v *= scale;
    }
    f.eval_freq(&xi)
}

impl PeriodizationGrid {
    /// Discrete Fourier coefficients (1/n^d) Σ_k g(k/n) e^{−2πi m·k/n}, indexed like the
    /// samples with frequency m stored at m mod n.
    pub fn dft(&self) -> Vec<Complex64> {
        let n = self.grid_size;
        let d = self.dim;
        let mut data = self.samples.clone();
        let mut planner = FftPlanner::<f64>::new();
        let fft = planner.plan_fft_forward(n);
        let total = data.len();
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for axis in 0..d {
            let stride = n.pow((d - 1 - axis) as u32);
            for start in 0..total {
                // first element of each line along `axis`
                if (start / stride) % n != 0 {
                    continue;
                }
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = data[start + j * stride];
                }
                fft.process(&mut line);
                for (j, v) in line.iter().enumerate() {
                    data[start + j * stride] = *v;
                }
            }
        }
        let norm = 1.0 / total as f64;
        data.iter_mut().for_each(|v| *v *= norm);
        data
    }

    /// Index of frequency `m` in the output of [`dft`](Self::dft).
    pub fn frequency_index(&self, m: &LatticePoint) -> usize {
        let n = self.grid_size as i64;
        m.coords
            .iter()
            .fold(0usize, |acc, &c| acc * self.grid_size + c.rem_euclid(n) as usize)
    }

    /// ‖g_ρ‖₂² estimated as the grid mean of |g|².
    pub fn norm_sq(&self) -> f64 {
        self.samples.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    pub fn grid_point(&self, index: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        grid_point(index, self.dim, self.grid_size, &mut x);
        x
    }

    /// CSV dump: `#`-prefixed header lines, then one row per sample
    /// `k_0,…,k_{d−1},re,im` in row-major order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# dim={}", self.dim)?;
        writeln!(w, "# grid_size={}", self.grid_size)?;
        writeln!(w, "# truncation_error={:e}", self.truncation_error)?;
        writeln!(w, "# truncation_radius={}", self.truncation_radius)?;
        writeln!(w, "# route={:?}", self.route)?;
        for row in self.rotation.rows() {
            let r: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "# rotation_row={}", r.join(","))?;
        }
        let axes: Vec<String> = (0..self.dim).map(|i| format!("k{i}")).collect();
        writeln!(w, "{},re,im", axes.join(","))?;
        let n = self.grid_size;
        for (idx, v) in self.samples.iter().enumerate() {
            let mut rest = idx;
            let mut k = vec![0usize; self.dim];
            for axis in (0..self.dim).rev() {
                k[axis] = rest % n;
                rest /= n;
            }
            let k: Vec<String> = k.iter().map(|c| c.to_string()).collect();
            writeln!(w, "{},{:e},{:e}", k.join(","), v.re, v.im)?;
        }
        Ok(())
    }

    /// Little-endian binary dump:
    /// magic `PGRD`, u32 dim, u32 grid_size, f64 truncation_error, f64 truncation_radius,
    /// dim² f64 rotation entries (row-major), then (re, im) f64 pairs in row-major order.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"PGRD")?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.grid_size as u32).to_le_bytes())?;
        w.write_all(&self.truncation_error.to_le_bytes())?;
        w.write_all(&self.truncation_radius.to_le_bytes())?;
        for row in self.rotation.rows() {
            for v in row {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        for v in &self.samples {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a dump written by [`write_binary`](Self::write_binary). The route is not
    /// stored and is reported as `LatticeSum` when the truncation error is nonzero.
    pub fn read_binary<R: Read>(mut r: R) -> Result<PeriodizationGrid> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"PGRD" {
            return Err(LabError::Io("bad magic".into()));
        }
        let mut u4 = [0u8; 4];
        let mut f8 = [0u8; 8];
        r.read_exact(&mut u4)?;
        let dim = u32::from_le_bytes(u4) as usize;
        r.read_exact(&mut u4)?;
        let grid_size = u32::from_le_bytes(u4) as usize;
        let mut next = |r: &mut R| -> Result<f64> {
            r.read_exact(&mut f8)?;
            Ok(f64::from_le_bytes(f8))
        };
        let truncation_error = next(&mut r)?;
        let truncation_radius = next(&mut r)?;
        let mut entries = Vec::with_capacity(dim * dim);
        for _ in 0..dim * dim {
            entries.push(next(&mut r)?);
        }
        let rotation = Rotation::from_row_major(dim, &entries)?;
        let total = grid_size.pow(dim as u32);
        let mut samples = Vec::with_capacity(total);
        for _ in 0..total {
            let re = next(&mut r)?;
            let im = next(&mut r)?;
            samples.push(Complex64::new(re, im));
        }
        Ok(PeriodizationGrid {
            dim,
            grid_size,
            samples,
            rotation,
            truncation_radius,
            truncation_error,
            route: if truncation_error > 0.0 {
                PeriodizationRoute::LatticeSum
            } else {
                PeriodizationRoute::SpectralSynthesis
            },
        })
    }
}

/// Outcome of comparing grid-transform coefficients with f̂(ρm).
#[derive(Debug, Clone, Serialize)]
pub struct ParsevalReport {
    pub dim: usize,
    pub grid_size: usize,
    pub m_max: i64,
    /// max_{|m|_∞ ≤ m_max} |ĝ_grid(m) − f̂(ρm)| divided by `scale`.
    pub discrepancy: f64,
    pub max_abs_error: f64,
    /// max_{|m|_∞ ≤ m_max} |f̂(ρm)|; normalizes the discrepancy.
    pub scale: f64,
    pub truncation_error: f64,
    /// Certified bound on Σ_{j≠0} |f̂(ρ(m + n_g j))|.
    pub aliasing_bound: f64,
    /// Grid mean of |g_ρ|².
    pub grid_norm_sq: f64,
    /// Σ_{|m|_∞ ≤ m_max} |f̂(ρm)|².
    pub coefficient_norm_sq: f64,
    /// Certified bound on Σ_{|m|_∞ > m_max} |f̂(ρm)|².
    pub coefficient_tail: f64,
    pub route: PeriodizationRoute,
}

impl ParsevalReport {
    /// Discrepancy allowance max(10·truncation error, aliasing), relative to `scale`.
    pub fn allowance(&self) -> f64 {
        (10.0 * self.truncation_error).max(self.aliasing_bound) / self.scale
    }
}

/// Compares the discrete transform of the periodization grid with f̂(ρm) on
/// |m|_∞ ≤ m_max. Errors when the certified aliasing bound (relative) exceeds `tol`.
pub fn parseval_check(
    f: &TestFunction,
    rho: &Rotation,
    n_g: usize,
    m_max: i64,
    tol: f64,
) -> Result<ParsevalReport> {
    let d = f.dimension();
    if m_max < 0 || 2 * m_max as usize >= n_g {
        return Err(LabError::InvalidParameter(format!(
            "grid size {n_g} cannot resolve |m|_inf <= {m_max} without aliasing"
        )));
    }
    let env = |t: f64| f.freq_envelope(t.max(0.0));
    let aliasing_bound = {
        let mut total = 0.0;
        let mut k = 1u64;
        loop {
            let t = (n_g as u64 * k) as f64 - m_max as f64;
            let term = linf_shell_count(d, k) * env(t);
            total += term;
            if term == 0.0 || term < 1e-30 * total {
                break;
            }
            k += 1;
        }
        total
    };
    let grid = periodize(f, rho, n_g, tol)?;
    let coeffs = grid.dft();

    let mut box_points = Vec::new();
    let mut m = vec![-m_max; d];
    loop {
        box_points.push(LatticePoint::new(m.clone()));
        let mut i = 0;
        while i < d {
            m[i] += 1;
            if m[i] <= m_max {
                break;
            }
            m[i] = -m_max;
            i += 1;
        }
        if i == d {
            break;
        }
    }
    let mut max_abs_error: f64 = 0.0;
    let mut scale: f64 = 0.0;
    let mut coefficient_norm_sq = 0.0;
    for m in &box_points {
        let exact = fourier_coefficient(f, rho, m, 1.0);
        let got = coeffs[grid.frequency_index(m)];
        max_abs_error = max_abs_error.max((got - exact).norm());
        scale = scale.max(exact.norm());
        coefficient_norm_sq += exact.norm_sqr();
    }
    let scale = if scale > 0.0 { scale } else { 1.0 };
    // points outside the box have |m| ≥ m_max + 1
    let coefficient_tail = lattice_tail_bound(d, m_max as f64 + 0.5, 0.0, |t| env(t).powi(2));
    let report = ParsevalReport {
        dim: d,
        grid_size: n_g,
        m_max,
        discrepancy: max_abs_error / scale,
        max_abs_error,
        scale,
        truncation_error: grid.truncation_error,
        aliasing_bound,
        grid_norm_sq: grid.norm_sq(),
        coefficient_norm_sq,
        coefficient_tail,
        route: grid.route,
    };
    if aliasing_bound / scale > tol {
        return Err(LabError::Aliasing { bound: aliasing_bound / scale, tol });
    }
    Ok(report)
}

/// ‖g_ρ‖₂² = Σ_m |f̂(scale·ρm)|², with the lattice points and certified tail fixed once
/// so the same sum can be evaluated for many rotations.
#[derive(Debug, Clone)]
pub struct CoefficientSum {
    dim: usize,
    scale: f64,
    points: Vec<Vec<f64>>,
    tail_bound: f64,
    radius: f64,
}

impl CoefficientSum {
    pub fn new(f: &TestFunction, scale: f64, tol: f64) -> Result<Self> {
        let d = f.dimension();
        if !(scale > 0.0) {
            return Err(LabError::InvalidParameter(format!("scale {scale} must be positive")));
        }
        let env_sq = |t: f64| f.freq_envelope(scale * t.max(0.0)).powi(2);
        let (radius, tail_bound) = if let Some(support) = f.freq_support_radius() {
            (support / scale, 0.0)
        } else {
            let mut r: f64 = 1.0;
            let mut found = None;
            for _ in 0..400 {
                let tail = lattice_tail_bound(d, r, 0.0, env_sq);
                if tail <= tol {
                    found = Some((r, tail));
                    break;
                }
                r *= 1.05;
            }
            found.ok_or_else(|| LabError::Truncation {
                tol,
                reason: "coefficient tail not certifiable".into(),
            })?
        };
        let bound = (radius * radius).floor() as u64;
        let points = lattice_points_within(d, bound).iter().map(|m| m.as_f64()).collect();
        Ok(Self { dim: d, scale, points, tail_bound, radius })
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn norm_sq(&self, f: &TestFunction, rho: &Rotation) -> f64 {
        let mut xi = vec![0.0; self.dim];
        self.points
            .iter()
            .map(|m| {
                rho.apply_into(m, &mut xi);
                xi.iter_mut().for_each(|v| *v *= self.scale);
                f.eval_freq(&xi).norm_sqr()
            })
            .sum()
    }

    /// Same sum without the m = 0 term.
    pub fn norm_sq_without_dc(&self, f: &TestFunction, rho: &Rotation) -> f64 {
        self.norm_sq(f, rho) - f.dc().powi(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{make_band_limited, make_gaussian};
    use crate::haar::sample_haar;

    #[test]
    fn lattice_points_counts() {
        assert_eq!(lattice_points_within(2, 1).len(), 5);
        assert_eq!(lattice_points_within(3, 2).len(), 1 + 6 + 12);
        assert_eq!(lattice_points_within(4, 0).len(), 1);
    }

    #[test]
    fn gaussian_periodization_at_origin_matches_direct_sum() {
        let f = make_gaussian(2, &[1.0, 1.0]).unwrap();
        let rho = Rotation::identity(2);
        let grid = periodize(&f, &rho, 8, 1e-13).unwrap();
        // oracle: direct sum over |ν|_∞ ≤ 6
        let mut oracle = 0.0;
        for a in -6i32..=6 {
            for b in -6i32..=6 {
                oracle += (-std::f64::consts::PI * (a * a + b * b) as f64).exp();
            }
        }
        assert!((grid.samples[0].re - oracle).abs() < 1e-13);
        assert!(grid.truncation_error <= 1e-13);
    }

    #[test]
    fn quarter_turn_is_a_lattice_symmetry() {
        let f = make_gaussian(2, &[1.0, 3.0]).unwrap();
        let quarter = Rotation::from_row_major(2, &[0.0, -1.0, 1.0, 0.0]).unwrap();
        let a = periodize(&f, &Rotation::identity(2), 8, 1e-12).unwrap();
        let b = periodize(&f, &quarter, 8, 1e-12).unwrap();
        // g_{ρ}(x) = g(ρx) with ρ permuting the grid
        for idx in 0..a.samples.len() {
            let x = a.grid_point(idx);
            let rx = quarter.apply(&x);
            let j = rx
                .iter()
                .fold(0usize, |acc, v| acc * 8 + ((v * 8.0).round() as i64).rem_euclid(8) as usize);
            assert!((b.samples[idx] - a.samples[j]).norm() < 1e-12);
        }
        let f = make_gaussian(2, &[1.0, 1.0]).unwrap();
        let a = periodize(&f, &Rotation::identity(2), 8, 1e-12).unwrap();
        let b = periodize(&f, &quarter, 8, 1e-12).unwrap();
        for (u, v) in a.samples.iter().zip(&b.samples) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    #[test]
    fn periodicity_of_defining_sum() {
        let f = make_gaussian(3, &[1.0, 2.0, 0.7]).unwrap();
        let rho = sample_haar(3, 11);
        let grid = periodize(&f, &rho, 6, 1e-12).unwrap();
        let x = [0.31, 0.77, 0.05];
        let base = eval_periodization(&f, &rho, &x, grid.truncation_radius + 2.0);
        for j in 0..3 {
            let mut y = x;
            y[j] += 1.0;
            let shifted = eval_periodization(&f, &rho, &y, grid.truncation_radius + 2.0);
            assert!((base - shifted).norm() <= 2.0 * grid.truncation_error + 1e-14);
        }
    }

    #[test]
    fn band_limited_grid_is_constant_one() {
        let f = make_band_limited(4, 0.5).unwrap();
        let rho = sample_haar(4, 5);
        let grid = periodize(&f, &rho, 4, 1e-9).unwrap();
        assert_eq!(grid.route, PeriodizationRoute::SpectralSynthesis);
        assert!(grid.samples.iter().all(|v| (v - 1.0).norm() < 1e-12));
    }

    #[test]
    fn parseval_gaussian_identity_rotation() {
        let f = make_gaussian(2, &[1.0, 1.0]).unwrap();
        let report = parseval_check(&f, &Rotation::identity(2), 12, 3, 1e-12).unwrap();
        assert!(report.discrepancy <= 1e-8, "{report:?}");
        assert!(report.discrepancy <= report.allowance().max(1e-14));
    }

    #[test]
    fn parseval_rejects_underresolved_grid() {
        let f = make_gaussian(2, &[1.0, 1.0]).unwrap();
        assert!(matches!(
            parseval_check(&f, &Rotation::identity(2), 6, 3, 1e-12),
            Err(LabError::InvalidParameter(_))
        ));
        // wide spectrum: aliasing flagged
        let wide = make_gaussian(2, &[25.0, 25.0]).unwrap();
        assert!(matches!(
            parseval_check(&wide, &Rotation::identity(2), 8, 2, 1e-10),
            Err(LabError::Aliasing { .. })
        ));
    }

    #[test]
    fn binary_dump_round_trip() {
        let f = make_gaussian(2, &[1.0, 2.0]).unwrap();
        let grid = periodize(&f, &sample_haar(2, 3), 4, 1e-10).unwrap();
        let mut buf = Vec::new();
        grid.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 8 + 16 + 4 * 8 + 16 * 16);
        let back = PeriodizationGrid::read_binary(buf.as_slice()).unwrap();
        assert_eq!(back.samples, grid.samples);
        assert_eq!(back.rotation.rows(), grid.rotation.rows());
        let mut csv = Vec::new();
        grid.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("# dim=2\n# grid_size=4\n"));
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 17);
    }

    #[test]
    fn tail_bound_dominates_actual_tail() {
        // Σ_{|m|>r} e^{−π|m|²} over Z³ versus the certified bound
        let pts = lattice_points_within(3, 100);
        for r in [1.0f64, 2.0, 2.5] {
            let actual: f64 = pts
                .iter()
                .filter(|m| (m.norm_sq() as f64) > r * r)
                .map(|m| (-std::f64::consts::PI * m.norm_sq() as f64).exp())
                .sum();
            let bound = lattice_tail_bound(3, r, 0.0, |t| (-std::f64::consts::PI * t * t).exp());
            assert!(bound >= actual, "r={r}: {bound} < {actual}");
        }
    }
}
