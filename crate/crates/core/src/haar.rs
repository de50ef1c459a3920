//! Haar measure on SO(d), Monte Carlo sphere quadrature, and spherical averages
//! A(t) = ∫_{|ξ|=1} |f̂(tξ)|² dσ(ξ) with dσ the normalized surface measure.
//!
//! The surface-measure weighted average h(t) = ∫ |f̂|² dσ_t over the sphere of radius t
//! with full surface measure is h(t) = ω_{d−1} t^{d−1} A(t).

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::ser::{SerializeSeq, Serializer};
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::functions::{Symmetry, TestFunction};
use crate::lattice::{periodize, CoefficientSum};
use crate::quadrature::{adaptive, GaussLegendre};
use crate::rng::{stream, Purpose};

/// An element of SO(d).
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    matrix: DMatrix<f64>,
}

impl Serialize for Rotation {
    /// Row-major nested arrays.
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows = self.rows();
        let mut seq = serializer.serialize_seq(Some(rows.len()))?;
        for row in &rows {
            seq.serialize_element(row)?;
        }
        seq.end()
    }
}

const ORTHO_TOL: f64 = 1e-12;

impl Rotation {
    pub fn identity(d: usize) -> Self {
        Self { matrix: DMatrix::identity(d, d) }
    }

    /// Validates ρᵀρ = I and det ρ = 1 to 1e−12.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(LabError::InvalidParameter("rotation must be square".into()));
        }
        let r = Self { matrix };
        let defect = r.orthogonality_defect();
        let det = r.determinant();
        if defect > ORTHO_TOL || (det - 1.0).abs() > ORTHO_TOL {
            return Err(LabError::InvalidParameter(format!(
                "not in SO(d): |ρᵀρ − I| = {defect:e}, det = {det}"
            )));
        }
        Ok(r)
    }

    pub fn from_row_major(d: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != d * d {
            return Err(LabError::InvalidParameter(format!(
                "expected {} entries, got {}",
                d * d,
                entries.len()
            )));
        }
        Self::from_matrix(DMatrix::from_row_slice(d, d, entries))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| self.matrix.row(i).iter().copied().collect())
            .collect()
    }

    /// max |(ρᵀρ − I)_{ij}|.
    pub fn orthogonality_defect(&self) -> f64 {
        let d = self.dim();
        let g = self.matrix.transpose() * &self.matrix;
        (g - DMatrix::<f64>::identity(d, d)).amax()
    }

    pub fn determinant(&self) -> f64 {
        self.matrix.determinant()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        self.apply_into(v, &mut out);
        out
    }

    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        let d = self.dim();
        for (i, o) in out.iter_mut().enumerate().take(d) {
            *o = (0..d).map(|j| self.matrix[(i, j)] * v[j]).sum();
        }
    }
}

/// Haar-distributed rotation from stream `index` of `seed`.
///
/// QR-factorizes a matrix of independent standard normals, multiplies Q by the signs
/// of R's diagonal (giving Haar measure on O(d)), then flips the first column when the
/// determinant is −1.
pub fn sample_haar_indexed(d: usize, seed: u64, index: u64) -> Rotation {
    assert!(d >= 2, "SO(d) sampling needs d >= 2");
    let mut rng = stream(seed, Purpose::Rotation, index);
    let gauss = DMatrix::<f64>::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng));
    let qr = gauss.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    Rotation { matrix: q }
}

/// Haar-distributed rotation, deterministic in `seed`.
pub fn sample_haar(d: usize, seed: u64) -> Rotation {
    sample_haar_indexed(d, seed, 0)
}

/// `n` independent Haar rotations (streams 0..n of `seed`).
pub fn haar_rotations(d: usize, n: usize, seed: u64) -> Vec<Rotation> {
    (0..n as u64)
        .into_par_iter()
        .map(|i| sample_haar_indexed(d, seed, i))
        .collect()
}

/// Monte Carlo nodes on the unit sphere with equal weights, in antithetic pairs
/// (ξ, −ξ) stored consecutively.
#[derive(Debug, Clone, Serialize)]
pub struct SphereQuadrature {
    pub dim: usize,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub seed: u64,
}

impl SphereQuadrature {
    pub fn monte_carlo(d: usize, pairs: usize, seed: u64) -> Result<Self> {
        if d < 2 || pairs == 0 {
            return Err(LabError::InvalidParameter(format!(
                "sphere quadrature needs d >= 2 and at least one pair (d={d}, pairs={pairs})"
            )));
        }
        let mut nodes = Vec::with_capacity(2 * pairs);
        for i in 0..pairs as u64 {
            let mut rng = stream(seed, Purpose::SphereNodes, i);
            let v: Vec<f64> = loop {
                let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if n > 1e-300 {
                    break v.into_iter().map(|x| x / n).collect();
                }
            };
            nodes.push(v.iter().map(|x| -x).collect());
            nodes.push(v);
        }
        let w = 1.0 / nodes.len() as f64;
        Ok(Self { dim: d, weights: vec![w; nodes.len()], nodes, seed })
    }

    pub fn pairs(&self) -> usize {
        self.nodes.len() / 2
    }

    /// Σ w_i g(ξ_i) with the standard error computed from pair means.
    pub fn integrate<G: Fn(&[f64]) -> f64 + Sync>(&self, g: G) -> (f64, f64) {
        let pair_means: Vec<f64> = self
            .nodes
            .par_chunks(2)
            .map(|pair| 0.5 * (g(&pair[0]) + g(&pair[1])))
            .collect();
        mean_and_stderr(&pair_means)
    }
}

pub(crate) fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// A(t) with its standard error (0 on deterministic paths).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ShellAverage {
    pub radius: f64,
    pub value: f64,
    pub stderr: f64,
}

/// Normalized density of the polar angle θ ∈ [0, π] of a uniform point on S^{d−1}:
/// sin^{d−2}θ / ∫₀^π sin^{d−2}.
pub fn polar_angle_density(d: usize, theta: f64) -> f64 {
    let k = d as f64 - 2.0;
    // ∫₀^π sin^k = √π Γ((k+1)/2)/Γ(k/2 + 1)
    use statrs::function::gamma::ln_gamma;
    let norm = (0.5 * std::f64::consts::PI.ln() + ln_gamma((k + 1.0) / 2.0) - ln_gamma(k / 2.0 + 1.0))
        .exp();
    theta.sin().powf(k) / norm
}

/// A(t) for |f̂| depending only on (ξ_axis, |ξ_⊥|): a one-dimensional integral over the
/// polar angle from the axis.
pub fn axial_average(f: &TestFunction, t: f64, axis: usize) -> Result<f64> {
    let d = f.dimension();
    let other = if axis == 0 { 1 } else { 0 };
    let integrand = |theta: f64| {
        let mut xi = vec![0.0; d];
        xi[axis] = t * theta.cos();
        xi[other] = t * theta.sin();
        f.eval_freq(&xi).norm_sqr() * polar_angle_density(d, theta)
    };
    let pi = std::f64::consts::PI;
    let mut breaks = vec![0.0];
    if let Some(a) = f.axial_support_angle(t) {
        if a <= 0.0 {
            return Ok(0.0);
        }
        if a < pi {
            breaks.push(a);
            breaks.push(pi - a);
            breaks.sort_by(f64::total_cmp);
            breaks.dedup();
        }
    } else {
        breaks.extend([0.25 * pi, 0.5 * pi, 0.75 * pi]);
    }
    breaks.push(pi);
    let est = adaptive(integrand, &breaks, 1e-300, 1e-12, 20_000)?;
    Ok(est.value)
}

/// A(t) = ∫_{|ξ|=1} |f̂(tξ)|² dσ(ξ).
///
/// Radial members use |f̂(te₁)|²; axially symmetric members use a one-dimensional
/// adaptive integral; all others fall back to the Monte Carlo nodes in `quad`.
pub fn spherical_average(f: &TestFunction, t: f64, quad: &SphereQuadrature) -> Result<ShellAverage> {
    if !(t >= 0.0) {
        return Err(LabError::InvalidParameter(format!("radius {t} must be nonnegative")));
    }
    let d = f.dimension();
    if t == 0.0 {
        return Ok(ShellAverage { radius: 0.0, value: f.dc().powi(2), stderr: 0.0 });
    }
    match f.symmetry() {
        Symmetry::Radial => {
            let mut xi = vec![0.0; d];
            xi[0] = t;
            Ok(ShellAverage { radius: t, value: f.eval_freq(&xi).norm_sqr(), stderr: 0.0 })
        }
        Symmetry::Axial { axis } => {
            Ok(ShellAverage { radius: t, value: axial_average(f, t, axis)?, stderr: 0.0 })
        }
        Symmetry::None => Ok(spherical_average_mc(f, t, quad)),
    }
}

/// Monte Carlo A(t) regardless of symmetry.
pub fn spherical_average_mc(f: &TestFunction, t: f64, quad: &SphereQuadrature) -> ShellAverage {
    let (value, stderr) = quad.integrate(|xi| {
        let p: Vec<f64> = xi.iter().map(|v| t * v).collect();
        f.eval_freq(&p).norm_sqr()
    });
    ShellAverage { radius: t, value, stderr }
}

/// How ‖g_ρ‖₂² is evaluated for one rotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum NormRoute {
    /// Σ_m |f̂(ρm)|² over a certified ball of lattice points.
    Coefficients,
    /// Grid mean of |g_ρ|² from a periodization grid with `n_g` points per axis.
    Grid { n_g: usize },
}

/// Monte Carlo estimate of G² = ∫_{SO(d)} ‖g_ρ‖₂² dρ.
#[derive(Debug, Clone, Serialize)]
pub struct HaarEstimate {
    pub estimate: f64,
    pub stderr: f64,
    /// The same average with the DC mode |f̂(0)|² removed.
    pub estimate_without_dc: f64,
    pub stderr_without_dc: f64,
    pub rotations: usize,
    pub seed: u64,
    pub route: NormRoute,
    pub truncation_bound: f64,
}

/// Mean of ‖g_ρ‖₂² over `n_rot` Haar rotations drawn from `seed`.
pub fn so_d_average_g2(
    f: &TestFunction,
    n_rot: usize,
    seed: u64,
    route: NormRoute,
    tol: f64,
) -> Result<HaarEstimate> {
    if n_rot < 2 {
        return Err(LabError::InvalidParameter(format!("need at least 2 rotations, got {n_rot}")));
    }
    let d = f.dimension();
    let dc_sq = f.dc().powi(2);
    let rotations = haar_rotations(d, n_rot, seed);
    let (norms, truncation_bound) = match route {
        NormRoute::Coefficients => {
            let sum = CoefficientSum::new(f, 1.0, tol)?;
            let norms: Vec<f64> = rotations.par_iter().map(|rho| sum.norm_sq(f, rho)).collect();
            (norms, sum.tail_bound())
        }
        NormRoute::Grid { n_g } => {
            let grids: Vec<Result<(f64, f64)>> = rotations
                .par_iter()
                .map(|rho| {
                    let g = periodize(f, rho, n_g, tol)?;
                    Ok((g.norm_sq(), g.truncation_error))
                })
                .collect();
            let mut norms = Vec::with_capacity(n_rot);
            let mut worst: f64 = 0.0;
            for g in grids {
                let (n, e) = g?;
                norms.push(n);
                worst = worst.max(e);
            }
            (norms, worst)
        }
    };
    let (estimate, stderr) = mean_and_stderr(&norms);
    let without: Vec<f64> = norms.iter().map(|v| v - dc_sq).collect();
    let (estimate_without_dc, stderr_without_dc) = mean_and_stderr(&without);
    Ok(HaarEstimate {
        estimate,
        stderr,
        estimate_without_dc,
        stderr_without_dc,
        rotations: n_rot,
        seed,
        route,
        truncation_bound,
    })
}

/// ∫₀^∞ ω_{d−1} t^{d−1} A(t) dt = ‖f̂‖₂², by Gauss–Legendre panels on [0, t_max].
pub fn polar_l2_norm_sq(f: &TestFunction, t_max: f64, quad: &SphereQuadrature) -> Result<f64> {
    let d = f.dimension();
    let rule = GaussLegendre::new(20);
    let panels = 64;
    let h = t_max / panels as f64;
    let area = crate::special::sphere_area(d);
    let mut total = 0.0;
    for k in 0..panels {
        let lo = h * k as f64;
        for (t, w) in rule.mapped(lo, lo + h) {
            total += w * area * t.powi(d as i32 - 1) * spherical_average(f, t, quad)?.value;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{make_band_limited, make_gaussian, make_plate};

    #[test]
    fn haar_samples_are_special_orthogonal() {
        for d in 2..=6 {
            for seed in 0..20 {
                let r = sample_haar(d, seed);
                assert!(r.orthogonality_defect() < 1e-12);
                assert!((r.determinant() - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(sample_haar(4, 9), sample_haar(4, 9));
        assert_ne!(sample_haar(4, 9), sample_haar(4, 10));
    }

    #[test]
    fn rotation_validation() {
        assert!(Rotation::from_row_major(2, &[1.0, 0.0, 0.0, -1.0]).is_err());
        assert!(Rotation::from_row_major(2, &[1.0, 0.1, 0.0, 1.0]).is_err());
        assert!(Rotation::from_row_major(2, &[0.0, -1.0, 1.0, 0.0]).is_ok());
        let json = serde_json::to_string(&Rotation::identity(2)).unwrap();
        assert_eq!(json, "[[1.0,0.0],[0.0,1.0]]");
    }

    #[test]
    fn sphere_quadrature_exactness() {
        let q = SphereQuadrature::monte_carlo(5, 500, 3).unwrap();
        let w: f64 = q.weights.iter().sum();
        assert!((w - 1.0).abs() < 1e-12);
        assert!(q.nodes.iter().all(|v| (v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12));
        let (one, se) = q.integrate(|_| 1.0);
        assert!((one - 1.0).abs() < 1e-12 && se == 0.0);
        // odd monomials vanish exactly under antithetic pairing
        let (odd, _) = q.integrate(|x| x[0] * x[1] * x[1]);
        assert!(odd.abs() < 1e-15);
        // E[ξ₁²] = 1/d within a few standard errors
        let (sq, se) = q.integrate(|x| x[0] * x[0]);
        assert!((sq - 0.2).abs() < 4.0 * se);
    }

    #[test]
    fn spherical_average_fast_paths() {
        let q = SphereQuadrature::monte_carlo(5, 64, 1).unwrap();
        let g = make_gaussian(5, &[1.0; 5]).unwrap();
        let a = spherical_average(&g, 1.0, &q).unwrap();
        assert!((a.value - (-2.0 * std::f64::consts::PI).exp()).abs() < 1e-15);
        assert_eq!(a.stderr, 0.0);
        let b = make_band_limited(4, 0.5).unwrap();
        let q4 = SphereQuadrature::monte_carlo(4, 8, 1).unwrap();
        assert_eq!(spherical_average(&b, 0.0, &q4).unwrap().value, 1.0);
        assert!(spherical_average(&b, -1.0, &q4).is_err());
    }

    #[test]
    fn axial_path_agrees_with_monte_carlo() {
        let f = make_gaussian(4, &[4.0, 1.0, 1.0, 1.0]).unwrap();
        let q = SphereQuadrature::monte_carlo(4, 20_000, 7).unwrap();
        for t in [0.5, 1.0, 2.0] {
            let exact = spherical_average(&f, t, &q).unwrap();
            let mc = spherical_average_mc(&f, t, &q);
            assert!((exact.value - mc.value).abs() < 4.0 * mc.stderr, "t={t}: {exact:?} {mc:?}");
        }
        let p = make_plate(4, 0.25).unwrap();
        let exact = axial_average(&p, 1.0, 0).unwrap();
        let mc = spherical_average_mc(&p, 1.0, &q);
        assert!((exact - mc.value).abs() < 4.0 * mc.stderr, "{exact} vs {mc:?}");
    }

    #[test]
    fn polar_coordinates_recover_l2_norm() {
        let f = make_gaussian(3, &[1.0, 1.0, 2.0]).unwrap();
        let q = SphereQuadrature::monte_carlo(3, 4, 0).unwrap();
        let got = polar_l2_norm_sq(&f, 8.0, &q).unwrap();
        let exact = f.lp_norm(2.0).unwrap().powi(2);
        assert!((got - exact).abs() < 1e-4 * exact, "{got} vs {exact}");
    }

    #[test]
    fn radial_haar_average_has_no_variance() {
        let f = make_gaussian(4, &[1.0; 4]).unwrap();
        let est = so_d_average_g2(&f, 16, 3, NormRoute::Coefficients, 1e-14).unwrap();
        assert!(est.stderr <= 1e-8);
        let b = make_band_limited(4, 0.5).unwrap();
        let est = so_d_average_g2(&b, 8, 3, NormRoute::Coefficients, 1e-14).unwrap();
        assert_eq!(est.estimate, 1.0);
        assert_eq!(est.estimate_without_dc, 0.0);
        assert!(so_d_average_g2(&b, 1, 3, NormRoute::Coefficients, 1e-14).is_err());
    }

    #[test]
    fn grid_and_coefficient_routes_agree() {
        let f = make_gaussian(3, &[1.0, 2.0, 1.5]).unwrap();
        let a = so_d_average_g2(&f, 6, 21, NormRoute::Coefficients, 1e-13).unwrap();
        let b = so_d_average_g2(&f, 6, 21, NormRoute::Grid { n_g: 12 }, 1e-13).unwrap();
        assert!((a.estimate - b.estimate).abs() < 1e-10, "{a:?} {b:?}");
    }
}
