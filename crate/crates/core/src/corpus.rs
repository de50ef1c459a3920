//! Runs every check over a corpus of test functions and assembles a report bundle.

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::functions::TestFunction;
use crate::haar::haar_rotations;
use crate::kernels::{envelope_check, EnvelopeConfig, EnvelopeReport};
use crate::lattice::parseval_check;
use crate::report::Check;
use crate::shells::{g2_by_shells_auto, mc_vs_shells, McVsShells};
use crate::haar::SphereQuadrature;
use crate::sos::{bound_statistics, build_rd_table, BoundSummary, Parity};
use crate::theorems::{
    check, ratio_sweep, seed_sweep, sharpness_sweep, CheckSettings, GSource, InequalityRecord,
    RatioVariation, SweepKind, SweepResult, Variant,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParsevalSettings {
    pub grid_size: usize,
    pub m_max: i64,
    pub rotations: usize,
    /// Grids cost n_g^d samples; larger dimensions are skipped.
    pub max_dim: usize,
}

impl Default for ParsevalSettings {
    fn default() -> Self {
        Self { grid_size: 16, m_max: 3, rotations: 5, max_dim: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSettings {
    pub eps: Vec<f64>,
    /// (kind, d, p) triples.
    pub sharpness: Vec<(SweepKind, usize, f64)>,
    /// (kind, d, p, variant) ratio sweeps expected to stay bounded.
    pub ratios: Vec<(SweepKind, usize, f64, Variant)>,
    /// (kind, d, p, variant, eps list) sweeps expected to diverge.
    pub counter: Vec<(SweepKind, usize, f64, Variant, Vec<f64>)>,
    /// Functions whose ratios are recomputed with Haar G under each seed.
    pub seed_functions: Vec<(String, f64, Variant)>,
    pub seeds: Vec<u64>,
    pub seed_rotations: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        use SweepKind::*;
        use Variant::*;
        Self {
            eps: vec![0.25, 0.125, 0.0625, 0.03125, 0.015625],
            sharpness: vec![(BandLimited, 4, 1.0), (Plate, 4, 4.0 / 3.0)],
            ratios: vec![
                (BandLimited, 4, 1.0, T1),
                (Plate, 4, 1.0, T1),
                (BandLimited, 4, 1.2, T2),
                (Plate, 4, 1.2, T2),
                (BandLimited, 5, 1.0, T1Prime),
                (Plate, 5, 1.0, T1Prime),
                (BandLimited, 5, 1.2, T2Prime),
                (Plate, 5, 1.2, T2Prime),
            ],
            counter: vec![(
                BandLimited,
                5,
                1.2,
                T2PrimeWithoutQuotient,
                vec![0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125],
            )],
            seed_functions: vec![
                ("gaussian:d=5:a=3,2,1,1,1".into(), 1.0, T1Prime),
                ("gaussian:d=5:a=3,2,1,1,1".into(), 1.2, T2Prime),
            ],
            seeds: vec![1, 2, 3, 4, 5],
            seed_rotations: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    pub seed: u64,
    pub tol: f64,
    pub rotations: usize,
    pub sphere_pairs: usize,
    pub functions: Vec<String>,
    /// Exponents tried for every theorem variant; out-of-range pairs are recorded as
    /// rejections.
    pub p_values: Vec<f64>,
    pub parseval: Option<ParsevalSettings>,
    pub mc_vs_shells: bool,
    pub sweeps: Option<SweepSettings>,
    /// Dimensions for the kernel envelope check.
    pub kernel_dims: Vec<usize>,
    /// (d, n_max) representation-count scans.
    pub rd: Vec<(usize, usize)>,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            seed: 20240607,
            tol: 1e-12,
            rotations: 256,
            sphere_pairs: 4096,
            functions: [
                "gaussian:d=2",
                "gaussian:d=3:a=1,2,3",
                "gaussian:d=4",
                "gaussian:d=4:a=4,1,1,1",
                "gaussian:d=4:a=3,2,1,1",
                "gaussian:d=5",
                "gaussian:d=5:a=3,2,1,1,1",
                "band:d=4:eps=0.5",
                "band:d=5:eps=0.5",
                "plate:d=4:eps=0.2",
                "plate:d=5:eps=0.25",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            p_values: vec![1.0, 1.2],
            parseval: Some(ParsevalSettings::default()),
            mc_vs_shells: true,
            sweeps: Some(SweepSettings::default()),
            kernel_dims: Vec::new(),
            rd: vec![(4, 10_000), (5, 10_000)],
        }
    }
}

impl CorpusConfig {
    /// A config with nothing to run.
    pub fn empty() -> Self {
        Self {
            functions: Vec::new(),
            parseval: None,
            mc_vs_shells: false,
            sweeps: None,
            kernel_dims: Vec::new(),
            rd: Vec::new(),
            ..Self::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    fn settings(&self) -> CheckSettings {
        CheckSettings {
            tol: self.tol,
            sphere_pairs: self.sphere_pairs,
            seed: self.seed,
            g_source: GSource::Shells,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParsevalEntry {
    pub function: String,
    pub rotation: usize,
    pub discrepancy: f64,
    pub allowance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rejection {
    pub function: String,
    pub variant: Variant,
    pub p: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuotientEntry {
    pub function: String,
    pub g2: f64,
    pub g_mod2_plus_dc: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorpusReport {
    pub config: CorpusConfig,
    pub parseval: Vec<ParsevalEntry>,
    pub mc_vs_shells: Vec<McVsShells>,
    pub quotient: Vec<QuotientEntry>,
    pub records: Vec<InequalityRecord>,
    pub rejections: Vec<Rejection>,
    pub sharpness: Vec<SweepResult>,
    pub ratio_sweeps: Vec<RatioVariation>,
    pub counter_sweeps: Vec<RatioVariation>,
    pub seed_sweeps: Vec<RatioVariation>,
    pub envelopes: Vec<EnvelopeReport>,
    pub rd: Vec<BoundSummary>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Slope tolerance for the sharpness sweeps.
pub const SLOPE_TOLERANCE: f64 = 0.1;
/// Bound on ratio growth along sweeps and across seeds.
pub const RATIO_GROWTH_LIMIT: f64 = 10.0;

pub fn run_corpus(config: &CorpusConfig) -> Result<CorpusReport> {
    let settings = config.settings();
    let functions: Vec<TestFunction> =
        config.functions.iter().map(|id| TestFunction::from_id(id)).collect::<Result<_>>()?;
    let mut checks = Vec::new();

    let mut parseval = Vec::new();
    if let Some(ps) = &config.parseval {
        for f in functions.iter().filter(|f| f.dimension() <= ps.max_dim) {
            let rotations = haar_rotations(f.dimension(), ps.rotations, config.seed);
            let entries = rotations
                .par_iter()
                .enumerate()
                .map(|(i, rho)| {
                    let r = parseval_check(f, rho, ps.grid_size, ps.m_max, config.tol)?;
                    Ok(ParsevalEntry {
                        function: f.id(),
                        rotation: i,
                        discrepancy: r.discrepancy,
                        allowance: r.allowance(),
                        passed: r.discrepancy <= 1e-6,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            parseval.extend(entries);
        }
        let worst = parseval.iter().map(|e| e.discrepancy).fold(0.0, f64::max);
        checks.push(Check::new(
            "parseval coefficients within 1e-6",
            parseval.iter().all(|e| e.passed),
            format!("{} grids, worst relative discrepancy {worst:.3e}", parseval.len()),
        ));
    }

    let mut mvs = Vec::new();
    if config.mc_vs_shells {
        for f in &functions {
            mvs.push(mc_vs_shells(f, config.rotations, None, config.seed, config.sphere_pairs, config.tol)?);
        }
        let worst = mvs.iter().map(|m| m.z.abs()).fold(0.0, f64::max);
        checks.push(Check::new(
            "monte carlo vs shells |z| <= 3",
            mvs.iter().all(|m| m.passes()),
            format!("{} functions, max |z| = {worst:.3}", mvs.len()),
        ));
    }

    let quotient = functions
        .iter()
        .map(|f| {
            let quad = SphereQuadrature::monte_carlo(f.dimension(), config.sphere_pairs, config.seed)?;
            let s = g2_by_shells_auto(f, 1.0, &quad, config.tol)?;
            let sum = s.modulo_constants() + s.dc_term;
            Ok(QuotientEntry {
                function: f.id(),
                g2: s.total,
                g_mod2_plus_dc: sum,
                passed: (sum - s.total).abs() <= 1e-10 * s.total.abs().max(1e-300),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if !quotient.is_empty() {
        checks.push(Check::new(
            "G_mod^2 + |f(0)|^2 = G^2",
            quotient.iter().all(|q| q.passed),
            format!("{} functions", quotient.len()),
        ));
    }

    let mut records = Vec::new();
    let mut rejections = Vec::new();
    for f in &functions {
        for variant in Variant::ALL {
            for &p in &config.p_values {
                match check(f, p, variant, &settings) {
                    Ok(r) => records.push(r),
                    Err(LabError::OutOfRange(reason)) => rejections.push(Rejection {
                        function: f.id(),
                        variant,
                        p,
                        reason,
                    }),
                    Err(e) => return Err(e),
                }
            }
        }
    }
    if !functions.is_empty() {
        checks.push(Check::new(
            "theorem ratios finite",
            records.iter().all(|r| r.ratio.is_finite() && r.ratio >= 0.0),
            format!("{} records, {} range rejections", records.len(), rejections.len()),
        ));
    }

    let mut sharpness = Vec::new();
    let mut ratio_sweeps = Vec::new();
    let mut counter_sweeps = Vec::new();
    let mut seed_sweeps = Vec::new();
    if let Some(sw) = &config.sweeps {
        for &(kind, d, p) in &sw.sharpness {
            let s = sharpness_sweep(kind, d, p, &sw.eps, &settings)?;
            for series in &s.series {
                checks.push(Check::new(
                    &format!("{kind:?} d={d} {} slope", series.quantity),
                    series.within(SLOPE_TOLERANCE),
                    format!(
                        "slope {:.4} ± {:.4} (R² {:.5}), expected {:.4}",
                        series.fit.slope, series.fit.half_width, series.fit.r_squared, series.expected_slope
                    ),
                ));
            }
            sharpness.push(s);
        }
        for &(kind, d, p, variant) in &sw.ratios {
            ratio_sweeps.push(ratio_sweep(kind, d, p, variant, &sw.eps, &settings)?);
        }
        for (kind, d, p, variant, eps) in &sw.counter {
            counter_sweeps.push(ratio_sweep(*kind, *d, *p, *variant, eps, &settings)?);
        }
        for (id, p, variant) in &sw.seed_functions {
            let f = TestFunction::from_id(id)?;
            seed_sweeps.push(seed_sweep(&f, *p, *variant, &sw.seeds, sw.seed_rotations, &settings)?);
        }
        for v in ratio_sweeps.iter().chain(&seed_sweeps) {
            checks.push(Check::new(
                &format!("ratio growth < 10: {}", v.label),
                v.all_finite && v.growth < RATIO_GROWTH_LIMIT,
                format!("growth {:.4}, spread {:.4e}, ratios {:?}", v.growth, v.spread, v.ratios),
            ));
        }
        for v in &counter_sweeps {
            checks.push(Check::new(
                &format!("ratio diverges without quotient: {}", v.label),
                v.all_finite && v.end_to_end > RATIO_GROWTH_LIMIT,
                format!("last/first {:.4e}, ratios {:?}", v.end_to_end, v.ratios),
            ));
        }
    }

    let envelopes = config
        .kernel_dims
        .iter()
        .map(|&d| envelope_check(&EnvelopeConfig::standard(d)))
        .collect::<Result<Vec<_>>>()?;
    for e in &envelopes {
        for c in &e.checks {
            checks.push(Check::new(&format!("kernel d={}: {}", e.config.dim, c.name), c.passed, c.detail.clone()));
        }
    }

    let mut rd = Vec::new();
    for &(d, n_max) in &config.rd {
        let table = build_rd_table(d, n_max)?;
        rd.push(bound_statistics(&table, Parity::All));
        if d == 4 {
            rd.push(bound_statistics(&table, Parity::Odd));
        }
    }

    let passed = checks.iter().all(|c| c.passed);
    Ok(CorpusReport {
        config: config.clone(),
        parseval,
        mc_vs_shells: mvs,
        quotient,
        records,
        rejections,
        sharpness,
        ratio_sweeps,
        counter_sweeps,
        seed_sweeps,
        envelopes,
        rd,
        checks,
        passed,
    })
}

impl CorpusReport {
    /// Writes `report.json`, `records.csv` and `checks.csv` into `dir`.
    pub fn write_bundle(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        fs::write(dir.join("report.json"), json)?;

        let mut out = fs::File::create(dir.join("records.csv"))?;
        writeln!(out, "function,variant,d,p,lhs,g,g_mod,norm_p,norm_2,norm_1,rhs,ratio")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                r.function,
                r.variant.name(),
                r.dim,
                r.p,
                r.lhs,
                r.g,
                r.g_mod,
                r.norm_p,
                r.norm_2,
                r.norm_1,
                r.rhs,
                r.ratio
            )?;
        }
        let mut out = fs::File::create(dir.join("checks.csv"))?;
        writeln!(out, "check,passed")?;
        for c in &self.checks {
            writeln!(out, "\"{}\",{}", c.name.replace('"', "'"), c.passed)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_corpus_is_vacuously_successful() {
        let r = run_corpus(&CorpusConfig::empty()).unwrap();
        assert!(r.passed);
        assert!(r.checks.is_empty() && r.records.is_empty());
    }

    #[test]
    fn low_dimension_is_rejected_not_fatal() {
        let config = CorpusConfig {
            functions: vec!["gaussian:d=3".into()],
            p_values: vec![1.0],
            ..CorpusConfig::empty()
        };
        let r = run_corpus(&config).unwrap();
        assert!(r.records.is_empty());
        assert_eq!(r.rejections.len(), Variant::ALL.len());
        assert!(r.rejections.iter().any(|x| x.variant == Variant::T1 && x.reason.contains("d >= 4")));
        assert!(r.passed);
    }

    #[test]
    fn config_json_defaults_fill_in() {
        let c = CorpusConfig::from_json(r#"{"seed": 3, "functions": []}"#).unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.tol, CorpusConfig::default().tol);
        assert!(CorpusConfig::from_json("{").is_err());
    }
}
