//! G² as a sum over lattice shells: G² = |f̂(0)|² + Σ_{n≥1} r_d(n) A(s√n).

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::functions::{Symmetry, TestFunction};
use crate::haar::{mean_and_stderr, so_d_average_g2, spherical_average, NormRoute, SphereQuadrature};
use crate::lattice::lattice_tail_bound;
use crate::sos::{build_rd_table, RdTable};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShellTerm {
    pub n: usize,
    pub r: u64,
    pub average: f64,
    pub average_stderr: f64,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShellDecomposition {
    pub function: String,
    pub dim: usize,
    pub scale: f64,
    pub n_max: usize,
    pub terms: Vec<ShellTerm>,
    pub dc_term: f64,
    pub tail_bound: f64,
    /// Standard error of Σ contributions; shells share sphere nodes, so this is computed
    /// from per-pair shell sums rather than by adding per-shell errors.
    pub stderr: f64,
    pub total: f64,
    pub sphere_pairs: usize,
    pub sphere_seed: u64,
}

impl ShellDecomposition {
    /// Σ_{n≥1} r_d(n) A(s√n).
    pub fn modulo_constants(&self) -> f64 {
        self.terms.iter().map(|t| t.contribution).sum()
    }

    /// `n,r,A,contribution` lines with a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n,r,A,contribution")?;
        writeln!(out, "0,1,{:e},{:e}", self.dc_term, self.dc_term)?;
        for t in &self.terms {
            writeln!(out, "{},{},{:e},{:e}", t.n, t.r, t.average, t.contribution)?;
        }
        Ok(())
    }
}

/// ∫_{SO(d)} ‖g_ρ − ĝ_ρ(0)‖₂² dρ from a decomposition.
pub fn g2_modulo_constants(decomp: &ShellDecomposition) -> f64 {
    decomp.modulo_constants()
}

/// Certified bound on Σ_{n>n_max} r_d(n) A(s√n).
pub fn shell_tail_bound(f: &TestFunction, scale: f64, n_max: usize) -> f64 {
    let r_next = ((n_max + 1) as f64).sqrt();
    if let Some(support) = f.freq_support_radius() {
        if scale * r_next > support {
            return 0.0;
        }
    }
    let env_sq = |t: f64| f.freq_envelope(scale * t.max(0.0)).powi(2);
    // |m|² > n_max ⇔ |m| ≥ √(n_max+1); the bound below sums over |m| > √n_max
    lattice_tail_bound(f.dimension(), (n_max as f64).sqrt(), 0.0, env_sq)
}

/// Smallest n_max whose certified tail is at most `tol`.
pub fn shells_needed(f: &TestFunction, scale: f64, tol: f64) -> Result<usize> {
    if let Some(support) = f.freq_support_radius() {
        let n = ((support / scale).powi(2)).floor() as usize;
        if shell_tail_bound(f, scale, n) == 0.0 {
            return Ok(n.max(1));
        }
    }
    let mut n = 1usize;
    while n <= 1 << 20 {
        if shell_tail_bound(f, scale, n) <= tol {
            // refine downward by bisection within (n/2, n]
            let (mut lo, mut hi) = (n / 2, n);
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if shell_tail_bound(f, scale, mid) <= tol {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(hi.max(1));
        }
        n *= 2;
    }
    Err(LabError::TailNotCertified { tol, reason: format!("no n_max ≤ 2^20 suffices for {f}") })
}

fn table_count(table: &RdTable, n: usize) -> Result<u64> {
    table
        .count_u64(n)
        .ok_or_else(|| LabError::OutOfRange(format!("r_{}({n}) exceeds 64 bits", table.dim())))
}

/// Shell decomposition truncated at n_max, failing if the certified tail exceeds `tol`.
pub fn g2_by_shells(
    f: &TestFunction,
    scale: f64,
    n_max: usize,
    quad: &SphereQuadrature,
    tol: f64,
) -> Result<ShellDecomposition> {
    let d = f.dimension();
    if n_max == 0 {
        return Err(LabError::InvalidParameter("n_max must be at least 1".into()));
    }
    if !(scale > 0.0) {
        return Err(LabError::InvalidParameter(format!("scale {scale} must be positive")));
    }
    if quad.dim != d {
        return Err(LabError::InvalidParameter(format!(
            "sphere quadrature has dimension {}, function has {d}",
            quad.dim
        )));
    }
    let tail_bound = shell_tail_bound(f, scale, n_max);
    if !(tail_bound <= tol) {
        return Err(LabError::TailNotCertified {
            tol,
            reason: format!("tail beyond n = {n_max} is bounded only by {tail_bound:e}"),
        });
    }
    let table = build_rd_table(d, n_max)?;
    let shells: Vec<(usize, u64)> = (1..=n_max)
        .map(|n| table_count(&table, n).map(|r| (n, r)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|&(_, r)| r > 0)
        .collect();
    let inner = f.freq_inner_radius();
    let support = f.freq_support_radius().unwrap_or(f64::INFINITY);
    let vanishes = |t: f64| t < inner || t > support;

    let (terms, stderr) = if matches!(f.symmetry(), Symmetry::None) {
        // common random numbers: per pair, Σ_n r(n)·pair mean
        let radii: Vec<f64> = shells.iter().map(|&(n, _)| scale * (n as f64).sqrt()).collect();
        let per_pair: Vec<Vec<f64>> = quad
            .nodes
            .par_chunks(2)
            .map(|pair| {
                let mut xi = vec![0.0; d];
                radii
                    .iter()
                    .map(|&t| {
                        if vanishes(t) {
                            return 0.0;
                        }
                        let mut acc = 0.0;
                        for node in pair {
                            xi.iter_mut().zip(node).for_each(|(x, v)| *x = t * v);
                            acc += f.eval_freq(&xi).norm_sqr();
                        }
                        0.5 * acc
                    })
                    .collect()
            })
            .collect();
        let terms: Vec<ShellTerm> = shells
            .iter()
            .enumerate()
            .map(|(k, &(n, r))| {
                let column: Vec<f64> = per_pair.iter().map(|row| row[k]).collect();
                let (average, average_stderr) = mean_and_stderr(&column);
                ShellTerm { n, r, average, average_stderr, contribution: r as f64 * average }
            })
            .collect();
        let sums: Vec<f64> = per_pair
            .iter()
            .map(|row| row.iter().zip(&shells).map(|(a, &(_, r))| r as f64 * a).sum())
            .collect();
        (terms, mean_and_stderr(&sums).1)
    } else {
        let terms = shells
            .par_iter()
            .map(|&(n, r)| {
                let t = scale * (n as f64).sqrt();
                let a = if vanishes(t) { Default::default() } else { spherical_average(f, t, quad)? };
                Ok(ShellTerm {
                    n,
                    r,
                    average: a.value,
                    average_stderr: a.stderr,
                    contribution: r as f64 * a.value,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        (terms, 0.0)
    };
    let dc_term = f.dc().powi(2);
    let total = dc_term + terms.iter().map(|t| t.contribution).sum::<f64>();
    Ok(ShellDecomposition {
        function: f.id(),
        dim: d,
        scale,
        n_max,
        terms,
        dc_term,
        tail_bound,
        stderr,
        total,
        sphere_pairs: quad.pairs(),
        sphere_seed: quad.seed,
    })
}

/// Shell decomposition with n_max chosen so the certified tail is at most `tol`.
pub fn g2_by_shells_auto(
    f: &TestFunction,
    scale: f64,
    quad: &SphereQuadrature,
    tol: f64,
) -> Result<ShellDecomposition> {
    let n_max = shells_needed(f, scale, tol)?;
    g2_by_shells(f, scale, n_max, quad, tol)
}

/// Agreement between the Haar Monte Carlo estimate of G² and the shell sum.
#[derive(Debug, Clone, Serialize)]
pub struct McVsShells {
    pub function: String,
    pub rotations: usize,
    pub seed: u64,
    pub mc_estimate: f64,
    pub mc_stderr: f64,
    pub mc_truncation: f64,
    pub shell_total: f64,
    pub shell_stderr: f64,
    pub shell_tail_bound: f64,
    pub n_max: usize,
    pub relative_difference: f64,
    pub z: f64,
}

impl McVsShells {
    pub fn passes(&self) -> bool {
        self.z.abs() <= 3.0
    }
}

/// Compares `so_d_average_g2` (Parseval route) against `g2_by_shells`.
///
/// The z-score divides by the combined standard error, floored at the truncation bounds
/// and at 1e−10 of the shell total so that two exact paths are compared relatively.
pub fn mc_vs_shells(
    f: &TestFunction,
    n_rot: usize,
    n_max: Option<usize>,
    seed: u64,
    sphere_pairs: usize,
    tol: f64,
) -> Result<McVsShells> {
    let quad = SphereQuadrature::monte_carlo(f.dimension(), sphere_pairs, seed)?;
    let shells = match n_max {
        Some(n) => g2_by_shells(f, 1.0, n, &quad, tol)?,
        None => g2_by_shells_auto(f, 1.0, &quad, tol)?,
    };
    let mc = so_d_average_g2(f, n_rot, seed, NormRoute::Coefficients, tol)?;
    let diff = mc.estimate - shells.total;
    let denom = mc
        .stderr
        .hypot(shells.stderr)
        .max(mc.truncation_bound + shells.tail_bound)
        .max(1e-10 * shells.total.abs())
        .max(f64::MIN_POSITIVE);
    Ok(McVsShells {
        function: f.id(),
        rotations: n_rot,
        seed,
        mc_estimate: mc.estimate,
        mc_stderr: mc.stderr,
        mc_truncation: mc.truncation_bound,
        shell_total: shells.total,
        shell_stderr: shells.stderr,
        shell_tail_bound: shells.tail_bound,
        n_max: shells.n_max,
        relative_difference: if shells.total != 0.0 { diff / shells.total } else { diff },
        z: diff / denom,
    })
}

/// First n in [0, (n_max − 1)/2] with r_4(2n+1) < 8(2n+1), if any.
pub fn odd_shell_violation(table: &RdTable) -> Option<usize> {
    assert_eq!(table.dim(), 4, "odd-shell bound concerns four squares");
    (0..)
        .map(|n| 2 * n + 1)
        .take_while(|&m| m <= table.n_max())
        .find(|&m| table.count_f64(m) < 8.0 * m as f64)
        .map(|m| (m - 1) / 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{make_band_limited, make_gaussian, make_plate};
    use crate::lattice::lattice_points_within;

    #[test]
    fn band_limited_has_only_dc() {
        let f = make_band_limited(4, 0.5).unwrap();
        let q = SphereQuadrature::monte_carlo(4, 8, 0).unwrap();
        let s = g2_by_shells_auto(&f, 1.0, &q, 1e-12).unwrap();
        assert_eq!(s.total, 1.0);
        assert_eq!(s.dc_term, 1.0);
        assert_eq!(g2_modulo_constants(&s), 0.0);
        assert!(s.terms.iter().all(|t| t.contribution == 0.0));
    }

    #[test]
    fn radial_gaussian_matches_direct_lattice_sum() {
        let f = make_gaussian(5, &[1.0; 5]).unwrap();
        let q = SphereQuadrature::monte_carlo(5, 4, 0).unwrap();
        let s = g2_by_shells_auto(&f, 1.0, &q, 1e-14).unwrap();
        let direct: f64 = lattice_points_within(5, 16)
            .iter()
            .map(|m| (-2.0 * std::f64::consts::PI * m.norm_sq() as f64).exp())
            .sum();
        assert!((s.total - direct).abs() < 1e-10 * direct);
        assert_eq!(s.stderr, 0.0);
    }

    #[test]
    fn plate_uses_the_unit_shell_only() {
        let f = make_plate(4, 0.1).unwrap();
        let q = SphereQuadrature::monte_carlo(4, 4, 0).unwrap();
        let s = g2_by_shells_auto(&f, 1.0, &q, 1e-12).unwrap();
        assert_eq!(s.n_max, 1);
        assert_eq!(s.dc_term, 0.0);
        let t = s.terms[0];
        assert_eq!((t.n, t.r), (1, 8));
        assert!(t.average > 0.0);
        assert_eq!(s.modulo_constants(), 8.0 * t.average);
    }

    #[test]
    fn tail_must_be_certified() {
        let f = make_gaussian(4, &[1.0; 4]).unwrap();
        let q = SphereQuadrature::monte_carlo(4, 4, 0).unwrap();
        assert!(matches!(
            g2_by_shells(&f, 1.0, 1, &q, 1e-12),
            Err(LabError::TailNotCertified { .. })
        ));
    }

    #[test]
    fn anisotropic_monte_carlo_path_uses_shared_nodes() {
        let f = make_gaussian(4, &[4.0, 2.0, 1.0, 1.0]).unwrap();
        assert_eq!(f.symmetry(), Symmetry::None);
        let q = SphereQuadrature::monte_carlo(4, 2000, 5).unwrap();
        let s = g2_by_shells_auto(&f, 1.0, &q, 1e-12).unwrap();
        assert!(s.stderr > 0.0);
        let sum: f64 = s.terms.iter().map(|t| t.contribution).sum();
        assert!((s.total - s.dc_term - sum).abs() < 1e-12);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), s.terms.len() + 2);
    }

    #[test]
    fn odd_shells_in_four_dimensions() {
        let t = build_rd_table(4, 2001).unwrap();
        assert_eq!(odd_shell_violation(&t), None);
    }
}
