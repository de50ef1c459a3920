//! Empirical checks of the L² inequalities for periodizations and the sharpness sweeps.
//!
//! Direct inequalities: ‖f‖₂ ≤ C(G + ‖f‖₁) for d ≥ 4, and ‖f‖₂ ≤ C(G + ‖f‖_p) for
//! d ≥ 4, 1 ≤ p < 2d/(d+2). Inverse inequalities (d ≥ 5): G ≤ C(‖f‖₂ + ‖f‖₁), and
//! G_mod ≤ C(‖f‖₂ + ‖f‖_p) with the constant mode removed. The constants are never
//! explicit, so records carry ratios lhs/rhs and sweeps watch how those ratios move.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fit::{fit_power_law, SlopeFit};
use crate::functions::{make_band_limited, make_plate, TestFunction};
use crate::haar::{so_d_average_g2, NormRoute, SphereQuadrature};
use crate::shells::g2_by_shells_auto;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// ‖f‖₂ ≤ C(G + ‖f‖₁), d ≥ 4.
    T1,
    /// ‖f‖₂ ≤ C(G + ‖f‖_p), d ≥ 4, 1 ≤ p < 2d/(d+2).
    T2,
    /// G ≤ C(‖f‖₂ + ‖f‖₁), d ≥ 5.
    T1Prime,
    /// G_mod ≤ C(‖f‖₂ + ‖f‖_p), d ≥ 5, 1 ≤ p < 2d/(d+2).
    T2Prime,
    /// The T2′ form with G in place of G_mod; fails for p > 1.
    T2PrimeWithoutQuotient,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::T1,
        Variant::T2,
        Variant::T1Prime,
        Variant::T2Prime,
        Variant::T2PrimeWithoutQuotient,
    ];

    pub fn is_direct(self) -> bool {
        matches!(self, Variant::T1 | Variant::T2)
    }

    fn min_dim(self) -> usize {
        if self.is_direct() {
            4
        } else {
            5
        }
    }

    fn fixed_p(self) -> bool {
        matches!(self, Variant::T1 | Variant::T1Prime)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::T1 => "T1",
            Variant::T2 => "T2",
            Variant::T1Prime => "T1'",
            Variant::T2Prime => "T2'",
            Variant::T2PrimeWithoutQuotient => "T2'-no-quotient",
        }
    }

    pub fn parse(s: &str) -> Result<Variant> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| LabError::InvalidParameter(format!("unknown variant {s}")))
    }
}

/// 2d/(d+2), the exclusive upper end of the admissible p.
pub fn critical_p(d: usize) -> f64 {
    2.0 * d as f64 / (d as f64 + 2.0)
}

/// (2d+2)/(d+3), beyond which the inverse inequality provably fails.
pub fn sharp_p(d: usize) -> f64 {
    (2.0 * d as f64 + 2.0) / (d as f64 + 3.0)
}

/// Validates (d, p) against the stated range of `variant`.
pub fn check_range(variant: Variant, d: usize, p: f64) -> Result<()> {
    if d < variant.min_dim() {
        return Err(LabError::OutOfRange(format!(
            "{} requires d >= {}, got d = {d}",
            variant.name(),
            variant.min_dim()
        )));
    }
    if variant.fixed_p() {
        if p != 1.0 {
            return Err(LabError::OutOfRange(format!("{} is stated for p = 1, got p = {p}", variant.name())));
        }
        return Ok(());
    }
    let pc = critical_p(d);
    if !(p >= 1.0 && p < pc) {
        return Err(LabError::OutOfRange(format!(
            "{} requires 1 <= p < 2d/(d+2) = {pc} (strict) for d = {d}, got p = {p}",
            variant.name()
        )));
    }
    Ok(())
}

/// How G is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum GSource {
    /// Shell decomposition with a certified tail.
    Shells,
    /// Haar Monte Carlo over `rotations` rotations from the settings seed.
    Haar { rotations: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckSettings {
    pub tol: f64,
    pub sphere_pairs: usize,
    pub seed: u64,
    pub g_source: GSource,
}

impl Default for CheckSettings {
    fn default() -> Self {
        Self { tol: 1e-12, sphere_pairs: 4096, seed: 0, g_source: GSource::Shells }
    }
}

/// G, G_mod and their standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GValues {
    pub g: f64,
    pub g_mod: f64,
    /// Standard error of G² (0 on deterministic paths).
    pub g2_stderr: f64,
    pub dc_sq: f64,
}

pub fn compute_g(f: &TestFunction, settings: &CheckSettings) -> Result<GValues> {
    match settings.g_source {
        GSource::Shells => {
            let quad = SphereQuadrature::monte_carlo(f.dimension(), settings.sphere_pairs, settings.seed)?;
            let s = g2_by_shells_auto(f, 1.0, &quad, settings.tol)?;
            Ok(GValues {
                g: s.total.sqrt(),
                g_mod: s.modulo_constants().max(0.0).sqrt(),
                g2_stderr: s.stderr,
                dc_sq: s.dc_term,
            })
        }
        GSource::Haar { rotations } => {
            let est = so_d_average_g2(f, rotations, settings.seed, NormRoute::Coefficients, settings.tol)?;
            Ok(GValues {
                g: est.estimate.sqrt(),
                g_mod: est.estimate_without_dc.max(0.0).sqrt(),
                g2_stderr: est.stderr,
                dc_sq: f.dc().powi(2),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityRecord {
    pub function: String,
    pub dim: usize,
    pub p: f64,
    pub variant: Variant,
    pub lhs: f64,
    pub g: f64,
    pub g_mod: f64,
    pub g2_stderr: f64,
    pub norm_p: f64,
    pub norm_2: f64,
    pub norm_1: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub seed: u64,
    pub tol: f64,
    pub g_source: GSource,
}

fn record(f: &TestFunction, p: f64, variant: Variant, settings: &CheckSettings) -> Result<InequalityRecord> {
    let g = compute_g(f, settings)?;
    let norm_p = f.lp_norm(p)?;
    let norm_2 = f.lp_norm(2.0)?;
    let norm_1 = f.lp_norm(1.0)?;
    let (lhs, rhs) = match variant {
        Variant::T1 | Variant::T2 => (norm_2, g.g + norm_p),
        Variant::T1Prime | Variant::T2PrimeWithoutQuotient => (g.g, norm_2 + norm_p),
        Variant::T2Prime => (g.g_mod, norm_2 + norm_p),
    };
    Ok(InequalityRecord {
        function: f.id(),
        dim: f.dimension(),
        p,
        variant,
        lhs,
        g: g.g,
        g_mod: g.g_mod,
        g2_stderr: g.g2_stderr,
        norm_p,
        norm_2,
        norm_1,
        rhs,
        ratio: lhs / rhs,
        seed: settings.seed,
        tol: settings.tol,
        g_source: settings.g_source,
    })
}

/// Direct inequality record (T1 or T2); lhs = ‖f‖₂, rhs = G + ‖f‖_p.
pub fn check_direct(f: &TestFunction, p: f64, variant: Variant, settings: &CheckSettings) -> Result<InequalityRecord> {
    if !variant.is_direct() {
        return Err(LabError::InvalidParameter(format!("{} is not a direct inequality", variant.name())));
    }
    check_range(variant, f.dimension(), p)?;
    record(f, p, variant, settings)
}

/// Inverse inequality record (T1′, T2′ or T2′ without the quotient); rhs = ‖f‖₂ + ‖f‖_p.
pub fn check_inverse(f: &TestFunction, p: f64, variant: Variant, settings: &CheckSettings) -> Result<InequalityRecord> {
    if variant.is_direct() {
        return Err(LabError::InvalidParameter(format!("{} is not an inverse inequality", variant.name())));
    }
    check_range(variant, f.dimension(), p)?;
    record(f, p, variant, settings)
}

/// Either kind of record, dispatched on the variant.
pub fn check(f: &TestFunction, p: f64, variant: Variant, settings: &CheckSettings) -> Result<InequalityRecord> {
    if variant.is_direct() {
        check_direct(f, p, variant, settings)
    } else {
        check_inverse(f, p, variant, settings)
    }
}

/// T2′ records for 2d/(d+2) ≤ p < (2d+2)/(d+3), where validity is unknown. No range
/// gate and no pass/fail meaning.
pub fn exploratory_records(
    kind: SweepKind,
    d: usize,
    p: f64,
    eps_list: &[f64],
    settings: &CheckSettings,
) -> Result<Vec<InequalityRecord>> {
    if !(p >= critical_p(d) && p < sharp_p(d)) {
        return Err(LabError::OutOfRange(format!(
            "exploratory range for d = {d} is [{}, {}), got p = {p}",
            critical_p(d),
            sharp_p(d)
        )));
    }
    eps_list
        .iter()
        .map(|&eps| record(&kind.build(d, eps)?, p, Variant::T2Prime, settings))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    BandLimited,
    Plate,
}

impl SweepKind {
    pub fn build(self, d: usize, eps: f64) -> Result<TestFunction> {
        match self {
            SweepKind::BandLimited => make_band_limited(d, eps),
            SweepKind::Plate => make_plate(d, eps),
        }
    }

    pub fn parse(s: &str) -> Result<SweepKind> {
        match s {
            "band" | "band_limited" => Ok(SweepKind::BandLimited),
            "plate" => Ok(SweepKind::Plate),
            _ => Err(LabError::InvalidParameter(format!("unknown sweep kind {s}"))),
        }
    }
}

/// One measured quantity over the ε list with its log-log fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSeries {
    pub quantity: String,
    pub values: Vec<f64>,
    pub expected_slope: f64,
    pub fit: SlopeFit,
}

impl SweepSeries {
    pub fn within(&self, tolerance: f64) -> bool {
        (self.fit.slope - self.expected_slope).abs() <= tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub kind: SweepKind,
    pub dim: usize,
    pub p: f64,
    pub eps: Vec<f64>,
    pub series: Vec<SweepSeries>,
}

impl SweepResult {
    pub fn series(&self, quantity: &str) -> Option<&SweepSeries> {
        self.series.iter().find(|s| s.quantity == quantity)
    }
}

pub const MIN_R_SQUARED: f64 = 0.99;

fn is_dyadic(eps: f64) -> bool {
    let l = eps.log2();
    eps > 0.0 && (l - l.round()).abs() < 1e-12
}

fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

fn series(quantity: &str, eps: &[f64], values: Vec<f64>, expected_slope: f64) -> Result<SweepSeries> {
    let fit = fit_power_law(eps, &values)?;
    if fit.r_squared < MIN_R_SQUARED {
        return Err(LabError::FitRejected(format!(
            "{quantity}: slope {:.4} with R² {:.5} < {MIN_R_SQUARED}",
            fit.slope, fit.r_squared
        )));
    }
    Ok(SweepSeries { quantity: quantity.to_string(), values, expected_slope, fit })
}

/// Fits the ε-exponents of the sharpness examples.
///
/// Band-limited: ‖f‖_p ∝ ε^{d/p′}. Plate: G_mod² ∝ ε^{d−1} and ‖f‖_p² ∝ ε^{(2d+2)/p′}.
pub fn sharpness_sweep(
    kind: SweepKind,
    d: usize,
    p: f64,
    eps_list: &[f64],
    settings: &CheckSettings,
) -> Result<SweepResult> {
    if eps_list.len() < 4 {
        return Err(LabError::InvalidParameter("sweep needs at least 4 values of eps".into()));
    }
    if let Some(e) = eps_list.iter().find(|e| !is_dyadic(**e)) {
        return Err(LabError::InvalidParameter(format!("eps = {e} is not a power of two")));
    }
    if !(p >= 1.0) {
        return Err(LabError::InvalidParameter(format!("p = {p} must be at least 1")));
    }
    let inv_conj = 1.0 / conjugate(p);
    let functions: Vec<TestFunction> = eps_list.iter().map(|&e| kind.build(d, e)).collect::<Result<_>>()?;
    let norms: Vec<f64> = functions.iter().map(|f| f.lp_norm(p)).collect::<Result<_>>()?;
    let series = match kind {
        SweepKind::BandLimited => {
            vec![series(&format!("norm_{p}"), eps_list, norms, d as f64 * inv_conj)?]
        }
        SweepKind::Plate => {
            let g_mod_sq: Vec<f64> = functions
                .iter()
                .map(|f| compute_g(f, settings).map(|g| g.g_mod * g.g_mod))
                .collect::<Result<_>>()?;
            vec![
                series("g_mod_sq", eps_list, g_mod_sq, d as f64 - 1.0)?,
                series(
                    &format!("norm_{p}_sq"),
                    eps_list,
                    norms.iter().map(|v| v * v).collect(),
                    (2.0 * d as f64 + 2.0) * inv_conj,
                )?,
            ]
        }
    };
    Ok(SweepResult { kind, dim: d, p, eps: eps_list.to_vec(), series })
}

/// How a family of ratios moves.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioVariation {
    pub label: String,
    pub ratios: Vec<f64>,
    pub all_finite: bool,
    /// max/min over the strictly positive ratios.
    pub spread: f64,
    /// max_k ratio_k / max_{j<k} ratio_j, with the family ordered from the reference
    /// point outward (decreasing ε, or successive seeds).
    pub growth: f64,
    /// ratio_last / ratio_first.
    pub end_to_end: f64,
}

pub fn ratio_variation(label: &str, ratios: Vec<f64>) -> RatioVariation {
    let all_finite = ratios.iter().all(|r| r.is_finite() && *r >= 0.0);
    let positive: Vec<f64> = ratios.iter().copied().filter(|r| *r > 0.0).collect();
    let (spread, growth, end_to_end) = if positive.is_empty() {
        (1.0, 1.0, 1.0)
    } else {
        let max = positive.iter().cloned().fold(0.0, f64::max);
        let min = positive.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut growth: f64 = 1.0;
        let mut running = ratios[0];
        for &r in &ratios[1..] {
            growth = growth.max(if running > 0.0 { r / running } else if r > 0.0 { f64::INFINITY } else { 1.0 });
            running = running.max(r);
        }
        let first = ratios[0];
        let last = ratios[ratios.len() - 1];
        (max / min, growth, if first > 0.0 { last / first } else { f64::INFINITY })
    };
    RatioVariation { label: label.to_string(), ratios, all_finite, spread, growth, end_to_end }
}

/// Ratios of `variant` along an ε sweep of `kind`, ordered by decreasing ε.
pub fn ratio_sweep(
    kind: SweepKind,
    d: usize,
    p: f64,
    variant: Variant,
    eps_list: &[f64],
    settings: &CheckSettings,
) -> Result<RatioVariation> {
    let mut eps: Vec<f64> = eps_list.to_vec();
    eps.sort_by(|a, b| b.total_cmp(a));
    let ratios = eps
        .iter()
        .map(|&e| check(&kind.build(d, e)?, p, variant, settings).map(|r| r.ratio))
        .collect::<Result<Vec<_>>>()?;
    let label = format!("{} {:?} d={d} p={p}", variant.name(), kind);
    Ok(ratio_variation(&label, ratios))
}

/// Ratios of `variant` for `f` with G from Haar Monte Carlo under each seed.
pub fn seed_sweep(
    f: &TestFunction,
    p: f64,
    variant: Variant,
    seeds: &[u64],
    rotations: usize,
    settings: &CheckSettings,
) -> Result<RatioVariation> {
    let ratios = seeds
        .iter()
        .map(|&seed| {
            let s = CheckSettings { seed, g_source: GSource::Haar { rotations }, ..*settings };
            check(f, p, variant, &s).map(|r| r.ratio)
        })
        .collect::<Result<Vec<_>>>()?;
    let label = format!("{} {} p={p} seeds={seeds:?}", variant.name(), f.id());
    Ok(ratio_variation(&label, ratios))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::make_gaussian;

    #[test]
    fn range_gates() {
        assert!(check_range(Variant::T1, 4, 1.0).is_ok());
        assert!(check_range(Variant::T1, 3, 1.0).is_err());
        assert!(check_range(Variant::T1, 4, 1.1).is_err());
        assert!(check_range(Variant::T2, 4, 4.0 / 3.0).is_err());
        assert!(check_range(Variant::T2, 4, 1.3).is_ok());
        assert!(check_range(Variant::T2, 4, 0.9).is_err());
        assert!(check_range(Variant::T2Prime, 4, 1.2).is_err());
        assert!(check_range(Variant::T2Prime, 5, 1.2).is_ok());
        assert!(check_range(Variant::T1Prime, 5, 1.0).is_ok());
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(Variant::parse(v.name()).unwrap(), v);
        }
        assert!(Variant::parse("T3").is_err());
    }

    #[test]
    fn gaussian_direct_record() {
        let f = make_gaussian(4, &[1.0; 4]).unwrap();
        let r = check_direct(&f, 1.0, Variant::T1, &CheckSettings::default()).unwrap();
        assert!((r.norm_2 - 0.5).abs() < 1e-12);
        assert!(r.ratio > 0.0 && r.ratio < 1.0);
        assert!(check_inverse(&f, 1.0, Variant::T1, &CheckSettings::default()).is_err());
    }

    #[test]
    fn ratio_variation_measures_growth() {
        let v = ratio_variation("x", vec![1.0, 0.5, 0.25]);
        assert_eq!(v.growth, 1.0);
        assert_eq!(v.spread, 4.0);
        let v = ratio_variation("x", vec![1.0, 3.0, 9.0]);
        assert_eq!(v.growth, 3.0);
        assert_eq!(v.end_to_end, 9.0);
        let v = ratio_variation("x", vec![0.0, 0.0]);
        assert!(v.all_finite && v.growth == 1.0);
    }

    #[test]
    fn sweep_validation() {
        let s = CheckSettings::default();
        assert!(sharpness_sweep(SweepKind::BandLimited, 4, 1.0, &[0.5, 0.25, 0.125], &s).is_err());
        assert!(sharpness_sweep(SweepKind::BandLimited, 4, 1.0, &[0.5, 0.3, 0.125, 0.0625], &s).is_err());
        assert!(sharpness_sweep(SweepKind::Plate, 4, 1.0, &[0.5, 0.25, 0.125, 0.0625], &s).is_err());
    }
}
