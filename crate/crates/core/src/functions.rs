//! Catalog of test functions with exactly known Fourier transforms.
//!
//! Fourier convention throughout: f̂(ξ) = ∫ f(x) e^{−2πi x·ξ} dx.
//!
//! Three families are provided:
//!
//! * anisotropic Gaussians `exp(−π Σ a_i x_i²)`, everything in closed form;
//! * band-limited functions with f̂(ξ) = φ(ξ/ε) for the smooth bump
//!   φ(y) = exp(1 − 1/(1 − |y|²)) on the unit ball;
//! * plates with f̂(ξ) = ψ((ξ₁ − 1)/ε², ξ₂/ε, …, ξ_d/ε) for a radial plateau ψ that is 1 on
//!   B(0,1) and vanishes outside B(0,2).
//!
//! The space-side functions of the last two families are inverse transforms of radial
//! profiles. They are evaluated through the one-dimensional projection of the profile,
//! φ̌(s) = 2∫₀^R M(u) cos(2πsu) du with M(u) = ∫_{R^{d−1}} φ(√(u² + |y|²)) dy, which is a
//! plain cosine sum once M is tabulated on Gauss–Legendre nodes.
//!
//! Every member may be dilated: `f_λ(x) = λ^{−d/2} f(x/λ)`, which keeps ‖f‖₂ fixed.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::gamma_ur;

use crate::error::{LabError, Result};
use crate::quadrature::GaussLegendre;
use crate::special::sphere_area;

/// Radial profiles used as the frequency-side building blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Profile {
    /// exp(1 − 1/(1 − r²)) on r < 1; value 1 at the origin.
    Bump,
    /// 1 on r ≤ 1, 0 on r ≥ 2, smooth monotone transition in between.
    Plateau,
}

impl Profile {
    pub fn value(self, r: f64) -> f64 {
        match self {
            Profile::Bump => {
                if r >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - r * r)).exp()
                }
            }
            Profile::Plateau => {
                if r <= 1.0 {
                    1.0
                } else if r >= 2.0 {
                    0.0
                } else {
                    smooth_step(2.0 - r)
                }
            }
        }
    }

    pub fn support(self) -> f64 {
        match self {
            Profile::Bump => 1.0,
            Profile::Plateau => 2.0,
        }
    }
}

/// C^∞ step rising from 0 at s ≤ 0 to 1 at s ≥ 1.
pub fn smooth_step(s: f64) -> f64 {
    fn e(t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            (-1.0 / t).exp()
        }
    }
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let a = e(s);
        a / (a + e(1.0 - s))
    }
}

/// Resolution of a tabulated radial inverse transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformGrid {
    pub u_panels: usize,
    pub u_nodes_per_panel: usize,
    pub projection_nodes: usize,
    /// Largest radius s at which φ̌(s) is resolved; φ̌ is treated as 0 beyond it.
    pub s_max: f64,
}

const S_MAX: f64 = 160.0;
const NORM_PANEL_WIDTH: f64 = 0.125;

/// φ̌ for a radial profile in R^d, tabulated as a cosine sum.
#[derive(Debug)]
pub struct RadialInverse {
    dim: usize,
    profile: Profile,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    grid: TransformGrid,
    norms: Mutex<HashMap<u64, f64>>,
}

impl RadialInverse {
    fn build(profile: Profile, dim: usize) -> Self {
        let support = profile.support();
        let per_panel = 16;
        let u_panels = (support * S_MAX).ceil() as usize + 16;
        let rule = GaussLegendre::new(per_panel);
        let proj_rule = GaussLegendre::new(32);
        let proj_panels = 8;
        let area = if dim >= 2 { sphere_area(dim - 1) } else { 0.0 };
        let h = support / u_panels as f64;
        let mut nodes = Vec::with_capacity(u_panels * per_panel);
        let mut weights = Vec::with_capacity(u_panels * per_panel);
        for k in 0..u_panels {
            let lo = h * k as f64;
            for (u, w) in rule.mapped(lo, lo + h) {
                let m = if dim == 1 {
                    profile.value(u)
                } else {
                    let top = (support * support - u * u).max(0.0).sqrt();
                    area * proj_rule.composite(0.0, top, proj_panels, |rho| {
                        profile.value((u * u + rho * rho).sqrt()) * rho.powi(dim as i32 - 2)
                    })
                };
                nodes.push(u);
                weights.push(2.0 * w * m);
            }
        }
        Self {
            dim,
            profile,
            nodes,
            weights,
            grid: TransformGrid {
                u_panels,
                u_nodes_per_panel: per_panel,
                projection_nodes: 32 * proj_panels,
                s_max: S_MAX,
            },
            norms: Mutex::new(HashMap::new()),
        }
    }

    /// Shared, lazily built table for `(profile, dim)`.
    pub fn shared(profile: Profile, dim: usize) -> Arc<RadialInverse> {
        static CACHE: OnceLock<Mutex<HashMap<(Profile, usize), Arc<RadialInverse>>>> =
            OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("transform cache poisoned");
        guard
            .entry((profile, dim))
            .or_insert_with(|| Arc::new(RadialInverse::build(profile, dim)))
            .clone()
    }

    pub fn grid(&self) -> TransformGrid {
        self.grid
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    /// φ̌(s) for radius `s ≥ 0`.
    pub fn eval(&self, s: f64) -> f64 {
        let s = s.abs();
        if s > self.grid.s_max {
            return 0.0;
        }
        let k = 2.0 * PI * s;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&u, &w)| w * (k * u).cos())
            .sum()
    }

    /// ‖φ̌‖_p over R^d; `p = ∞` gives φ̌(0) (the profile is nonnegative).
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.eval(0.0).abs();
        }
        let key = p.to_bits();
        if let Some(v) = self.norms.lock().expect("norm cache poisoned").get(&key) {
            return *v;
        }
        let rule = GaussLegendre::new(16);
        let panels = (self.grid.s_max / NORM_PANEL_WIDTH).ceil() as usize;
        let d = self.dim as i32;
        let integral: f64 = (0..panels)
            .into_par_iter()
            .map(|k| {
                let lo = NORM_PANEL_WIDTH * k as f64;
                rule.integrate(lo, lo + NORM_PANEL_WIDTH, |s| {
                    self.eval(s).abs().powf(p) * s.powi(d - 1)
                })
            })
            .collect::<Vec<_>>()
            .iter()
            .sum();
        let norm = (sphere_area(self.dim) * integral).powf(1.0 / p);
        self.norms
            .lock()
            .expect("norm cache poisoned")
            .insert(key, norm);
        norm
    }

    /// ‖φ‖₂² on the frequency side, by radial quadrature of the profile.
    pub fn profile_l2_sq(&self) -> f64 {
        let rule = GaussLegendre::new(32);
        let d = self.dim as i32;
        let support = self.profile.support();
        sphere_area(self.dim)
            * rule.composite(0.0, support, 64, |r| self.profile.value(r).powi(2) * r.powi(d - 1))
    }
}

/// Symmetry of |f̂| used to pick fast spherical-average paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Symmetry {
    /// |f̂(ξ)| depends on |ξ| only.
    Radial,
    /// |f̂(ξ)| depends on (ξ_axis, |ξ_⊥|) only.
    Axial { axis: usize },
    None,
}

#[derive(Debug, Clone)]
enum Kind {
    Gaussian { anisotropy: Vec<f64> },
    BandLimited { eps: f64, transform: Arc<RadialInverse> },
    Plate { eps: f64, transform: Arc<RadialInverse> },
}

/// A function/Fourier-transform pair with decay metadata. Immutable once built.
#[derive(Debug, Clone)]
pub struct TestFunction {
    dim: usize,
    kind: Kind,
    dilation: f64,
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// f(x) = exp(−π Σ a_i x_i²), f̂(ξ) = (Π a_i)^{−1/2} exp(−π Σ ξ_i²/a_i).
pub fn make_gaussian(d: usize, anisotropy: &[f64]) -> Result<TestFunction> {
    if d < 2 {
        return Err(LabError::InvalidParameter(format!("dimension {d} < 2")));
    }
    if anisotropy.len() != d {
        return Err(LabError::InvalidParameter(format!(
            "anisotropy has {} entries, expected {d}",
            anisotropy.len()
        )));
    }
    if let Some(a) = anisotropy.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return Err(LabError::InvalidParameter(format!(
            "anisotropy entries must be positive, got {a}"
        )));
    }
    Ok(TestFunction {
        dim: d,
        kind: Kind::Gaussian { anisotropy: anisotropy.to_vec() },
        dilation: 1.0,
    })
}

/// f̂(ξ) = φ(ξ/ε) with φ the unit bump; f(x) = ε^d φ̌(εx).
pub fn make_band_limited(d: usize, eps: f64) -> Result<TestFunction> {
    if d < 2 {
        return Err(LabError::InvalidParameter(format!("dimension {d} < 2")));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(LabError::InvalidParameter(format!("eps = {eps} outside (0, 1]")));
    }
    Ok(TestFunction {
        dim: d,
        kind: Kind::BandLimited { eps, transform: RadialInverse::shared(Profile::Bump, d) },
        dilation: 1.0,
    })
}

/// f̂(ξ) = ψ((ξ₁ − 1)/ε², ξ₂/ε, …, ξ_d/ε); f(x) = ε^{d+1} e^{2πi x₁} ψ̌(ε²x₁, εx₂, …).
///
/// `eps ≤ 1/4` keeps the support of f̂ inside the annulus 1/2 < |ξ| < 3/2, so only the
/// unit lattice shell ever meets it.
pub fn make_plate(d: usize, eps: f64) -> Result<TestFunction> {
    if d < 2 {
        return Err(LabError::InvalidParameter(format!("dimension {d} < 2")));
    }
    if !(eps > 0.0 && eps <= 0.25) {
        return Err(LabError::InvalidParameter(format!(
            "plate eps = {eps} outside (0, 1/4]"
        )));
    }
    Ok(TestFunction {
        dim: d,
        kind: Kind::Plate { eps, transform: RadialInverse::shared(Profile::Plateau, d) },
        dilation: 1.0,
    })
}

impl TestFunction {
    /// Parses a catalog id such as `gaussian:d=4:a=1,1,1,1`, `band:d=4:eps=0.5`,
    /// `plate:d=4:eps=0.1`, optionally suffixed with `:lambda=<dilation>`.
    pub fn from_id(id: &str) -> Result<TestFunction> {
        let unknown = || LabError::UnknownFunction(id.to_string());
        let mut parts = id.split(':');
        let family = parts.next().ok_or_else(unknown)?;
        let mut d = None;
        let mut a = None;
        let mut eps = None;
        let mut lambda = 1.0;
        for part in parts {
            let (key, value) = part.split_once('=').ok_or_else(unknown)?;
            let num = |v: &str| v.trim().parse::<f64>().map_err(|_| unknown());
            match key.trim() {
                "d" => d = Some(value.trim().parse::<usize>().map_err(|_| unknown())?),
                "a" => a = Some(value.split(',').map(num).collect::<Result<Vec<_>>>()?),
                "eps" => eps = Some(num(value)?),
                "lambda" => lambda = num(value)?,
                _ => return Err(unknown()),
            }
        }
        let d = d.ok_or_else(unknown)?;
        let f = match family {
            "gaussian" => make_gaussian(d, &a.unwrap_or_else(|| vec![1.0; d]))?,
            "band" | "band_limited" => make_band_limited(d, eps.ok_or_else(unknown)?)?,
            "plate" => make_plate(d, eps.ok_or_else(unknown)?)?,
            _ => return Err(unknown()),
        };
        f.dilated(lambda)
    }

    /// Canonical catalog id.
    pub fn id(&self) -> String {
        let base = match &self.kind {
            Kind::Gaussian { anisotropy } => {
                let a: Vec<String> = anisotropy.iter().map(|v| format!("{v}")).collect();
                format!("gaussian:d={}:a={}", self.dim, a.join(","))
            }
            Kind::BandLimited { eps, .. } => format!("band:d={}:eps={eps}", self.dim),
            Kind::Plate { eps, .. } => format!("plate:d={}:eps={eps}", self.dim),
        };
        if self.dilation == 1.0 {
            base
        } else {
            format!("{base}:lambda={}", self.dilation)
        }
    }

    /// `f_λ(x) = λ^{−d/2} f(x/λ)` (composes with any existing dilation).
    pub fn dilated(&self, lambda: f64) -> Result<TestFunction> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(LabError::InvalidParameter(format!("dilation {lambda} must be positive")));
        }
        let mut out = self.clone();
        out.dilation *= lambda;
        Ok(out)
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn dilation(&self) -> f64 {
        self.dilation
    }

    /// ε for the band-limited and plate families.
    pub fn eps(&self) -> Option<f64> {
        match &self.kind {
            Kind::Gaussian { .. } => None,
            Kind::BandLimited { eps, .. } | Kind::Plate { eps, .. } => Some(*eps),
        }
    }

    pub fn is_plate(&self) -> bool {
        matches!(self.kind, Kind::Plate { .. })
    }

    pub fn is_band_limited(&self) -> bool {
        matches!(self.kind, Kind::BandLimited { .. })
    }

    fn amp_space(&self) -> f64 {
        self.dilation.powf(-(self.dim as f64) / 2.0)
    }

    fn amp_freq(&self) -> f64 {
        self.dilation.powf(self.dim as f64 / 2.0)
    }

    /// f(x).
    pub fn eval_space(&self, x: &[f64]) -> Complex64 {
        debug_assert_eq!(x.len(), self.dim);
        let l = self.dilation;
        let base = match &self.kind {
            Kind::Gaussian { anisotropy } => {
                let q: f64 = x.iter().zip(anisotropy).map(|(xi, a)| a * (xi / l).powi(2)).sum();
                Complex64::new((-PI * q).exp(), 0.0)
            }
            Kind::BandLimited { eps, transform } => {
                let r = x.iter().map(|v| (v / l).powi(2)).sum::<f64>().sqrt();
                Complex64::new(eps.powi(self.dim as i32) * transform.eval(eps * r), 0.0)
            }
            Kind::Plate { eps, transform } => {
                let x1 = x[0] / l;
                let perp: f64 = x[1..].iter().map(|v| (v / l).powi(2)).sum();
                let r = ((eps * eps * x1).powi(2) + eps * eps * perp).sqrt();
                let mag = eps.powi(self.dim as i32 + 1) * transform.eval(r);
                Complex64::from_polar(1.0, 2.0 * PI * x1) * mag
            }
        };
        base * self.amp_space()
    }

    /// f̂(ξ).
    pub fn eval_freq(&self, xi: &[f64]) -> Complex64 {
        debug_assert_eq!(xi.len(), self.dim);
        let l = self.dilation;
        let base = match &self.kind {
            Kind::Gaussian { anisotropy } => {
                let norm: f64 = anisotropy.iter().product::<f64>().sqrt();
                let q: f64 = xi.iter().zip(anisotropy).map(|(v, a)| (l * v).powi(2) / a).sum();
                (-PI * q).exp() / norm
            }
            Kind::BandLimited { eps, .. } => {
                let r = xi.iter().map(|v| (l * v).powi(2)).sum::<f64>().sqrt();
                Profile::Bump.value(r / eps)
            }
            Kind::Plate { eps, .. } => {
                let y1 = (l * xi[0] - 1.0) / (eps * eps);
                let perp: f64 = xi[1..].iter().map(|v| (l * v / eps).powi(2)).sum();
                Profile::Plateau.value((y1 * y1 + perp).sqrt())
            }
        };
        Complex64::new(base * self.amp_freq(), 0.0)
    }

    /// ‖f‖_p for p ∈ [1, ∞].
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(LabError::InvalidParameter(format!("p = {p} < 1")));
        }
        let d = self.dim as f64;
        // ‖f_λ‖_p = λ^{d/p − d/2} ‖f‖_p
        let inv_p = if p.is_infinite() { 0.0 } else { 1.0 / p };
        let dil = self.dilation.powf(d * inv_p - d / 2.0);
        let inv_conj = 1.0 - inv_p; // 1/p′
        let base = match &self.kind {
            Kind::Gaussian { anisotropy } => {
                if p.is_infinite() {
                    1.0
                } else {
                    let prod: f64 = anisotropy.iter().map(|a| p * a).product();
                    prod.powf(-0.5 / p)
                }
            }
            Kind::BandLimited { eps, transform } => eps.powf(d * inv_conj) * transform.lp_norm(p),
            Kind::Plate { eps, transform } => {
                eps.powf((d + 1.0) * inv_conj) * transform.lp_norm(p)
            }
        };
        Ok(base * dil)
    }

    /// Radial decreasing bound: |f(x)| ≤ space_envelope(r) whenever |x| ≥ r.
    /// `None` when the family has no certified space-side decay.
    pub fn space_envelope(&self, r: f64) -> Option<f64> {
        match &self.kind {
            Kind::Gaussian { anisotropy } => {
                let amin = anisotropy.iter().cloned().fold(f64::INFINITY, f64::min);
                let r = (r / self.dilation).max(0.0);
                Some(self.amp_space() * (-PI * amin * r * r).exp())
            }
            _ => None,
        }
    }

    /// Radius R with ∫_{|x|>R} |f| < δ, when certifiable.
    pub fn space_decay(&self, delta: f64) -> Option<f64> {
        match &self.kind {
            Kind::Gaussian { anisotropy } => {
                let d = self.dim as f64;
                let amin = anisotropy.iter().cloned().fold(f64::INFINITY, f64::min);
                // ∫_{|y|>R} exp(−π a|y|²) dy = a^{−d/2} Q(d/2, πaR²); for f_λ the integral
                // picks up λ^{d/2} and R scales by λ.
                let scale = self.dilation.powf(d / 2.0) * amin.powf(-d / 2.0);
                let tail = |r: f64| scale * gamma_ur(d / 2.0, PI * amin * r * r);
                let mut hi = 1.0;
                while tail(hi) >= delta {
                    hi *= 2.0;
                    if hi > 1e6 {
                        return None;
                    }
                }
                let mut lo = 0.0;
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if tail(mid) >= delta {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Some(hi * self.dilation)
            }
            _ => None,
        }
    }

    /// Radius beyond which f̂ vanishes identically.
    pub fn freq_support_radius(&self) -> Option<f64> {
        match &self.kind {
            Kind::Gaussian { .. } => None,
            Kind::BandLimited { eps, .. } => Some(eps / self.dilation),
            Kind::Plate { eps, .. } => {
                let e2 = eps * eps;
                Some(((1.0 + 2.0 * e2).powi(2) + 4.0 * e2).sqrt() / self.dilation)
            }
        }
    }

    /// Radius below which f̂ vanishes identically (plates only).
    pub fn freq_inner_radius(&self) -> f64 {
        match &self.kind {
            Kind::Plate { eps, .. } => (1.0 - 2.0 * eps * eps) / self.dilation,
            _ => 0.0,
        }
    }

    /// Decreasing bound: |f̂(ξ)| ≤ freq_envelope(t) whenever |ξ| ≥ t.
    pub fn freq_envelope(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Gaussian { anisotropy } => {
                let amax = anisotropy.iter().cloned().fold(0.0, f64::max);
                let norm: f64 = anisotropy.iter().product::<f64>().sqrt();
                let t = (self.dilation * t).max(0.0);
                self.amp_freq() * (-PI * t * t / amax).exp() / norm
            }
            _ => {
                if t < self.freq_support_radius().unwrap_or(f64::INFINITY) {
                    self.amp_freq()
                } else {
                    0.0
                }
            }
        }
    }

    pub fn symmetry(&self) -> Symmetry {
        match &self.kind {
            Kind::Gaussian { anisotropy } => {
                let first = anisotropy[0];
                if anisotropy.iter().all(|a| *a == first) {
                    return Symmetry::Radial;
                }
                if self.dim == 2 {
                    return Symmetry::Axial { axis: 0 };
                }
                // all entries but one coincide
                for axis in 0..self.dim {
                    let mut rest = anisotropy.iter().enumerate().filter(|(i, _)| *i != axis);
                    let (_, r0) = rest.next().expect("d >= 3");
                    if rest.all(|(_, v)| v == r0) {
                        return Symmetry::Axial { axis };
                    }
                }
                Symmetry::None
            }
            Kind::BandLimited { .. } => Symmetry::Radial,
            Kind::Plate { .. } => Symmetry::Axial { axis: 0 },
        }
    }

    /// Angular half-width (from the symmetry axis) outside of which f̂(tξ) vanishes, for
    /// axially symmetric members with compact support. Used as a quadrature breakpoint.
    pub fn axial_support_angle(&self, t: f64) -> Option<f64> {
        match &self.kind {
            Kind::Plate { eps, .. } => {
                let lt = self.dilation * t;
                if lt <= 0.0 {
                    return Some(0.0);
                }
                let s = (2.0 * eps / lt).min(1.0);
                Some(if s >= 1.0 { PI } else { s.asin() })
            }
            _ => None,
        }
    }

    /// Tabulation parameters of quadrature-backed space evaluations.
    pub fn transform_grid(&self) -> Option<TransformGrid> {
        match &self.kind {
            Kind::Gaussian { .. } => None,
            Kind::BandLimited { transform, .. } | Kind::Plate { transform, .. } => {
                Some(transform.grid())
            }
        }
    }

    /// |f̂(0)|.
    pub fn dc(&self) -> f64 {
        self.eval_freq(&vec![0.0; self.dim]).norm()
    }
}
