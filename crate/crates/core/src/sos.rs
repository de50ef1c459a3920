//! Representation counts r_d(n) = #{m ∈ Z^d : |m|² = n} and growth statistics.

use std::io::Write;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq)]
enum Counts {
    Native(Vec<u64>),
    Big(Vec<BigUint>),
}

/// r_d(n) for 0 ≤ n ≤ n_max, built by convolving the one-dimensional table d − 1 times.
#[derive(Debug, Clone, PartialEq)]
pub struct RdTable {
    dim: usize,
    n_max: usize,
    counts: Counts,
}

fn r1(n_max: usize) -> Vec<u64> {
    let mut t = vec![0u64; n_max + 1];
    t[0] = 1;
    let mut k = 1usize;
    while k * k <= n_max {
        t[k * k] = 2;
        k += 1;
    }
    t
}

fn squares(n_max: usize) -> Vec<(usize, u64)> {
    r1(n_max).into_iter().enumerate().filter(|&(_, c)| c > 0).collect()
}

fn convolve_native(prev: &[u64], sq: &[(usize, u64)]) -> Option<Vec<u64>> {
    let n_max = prev.len() - 1;
    let mut next = vec![0u64; n_max + 1];
    for (n, slot) in next.iter_mut().enumerate() {
        let mut acc = 0u64;
        for &(s, w) in sq {
            if s > n {
                break;
            }
            acc = acc.checked_add(prev[n - s].checked_mul(w)?)?;
        }
        *slot = acc;
    }
    Some(next)
}

fn convolve_big(prev: &[BigUint], sq: &[(usize, u64)]) -> Vec<BigUint> {
    let n_max = prev.len() - 1;
    (0..=n_max)
        .map(|n| {
            sq.iter()
                .take_while(|&&(s, _)| s <= n)
                .map(|&(s, w)| &prev[n - s] * w)
                .sum()
        })
        .collect()
}

/// Builds r_d(n) for n ≤ n_max with exact integers, switching to big integers on overflow.
pub fn build_rd_table(d: usize, n_max: usize) -> Result<RdTable> {
    if d == 0 {
        return Err(LabError::InvalidParameter("dimension must be at least 1".into()));
    }
    let sq = squares(n_max);
    let mut native = r1(n_max);
    for step in 1..d {
        match convolve_native(&native, &sq) {
            Some(next) => native = next,
            None => {
                let mut big: Vec<BigUint> = native.iter().map(|&c| BigUint::from(c)).collect();
                for _ in step..d {
                    big = convolve_big(&big, &sq);
                }
                return Ok(RdTable { dim: d, n_max, counts: Counts::Big(big) });
            }
        }
    }
    Ok(RdTable { dim: d, n_max, counts: Counts::Native(native) })
}

impl RdTable {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Whether the counts needed arbitrary precision.
    pub fn is_big(&self) -> bool {
        matches!(self.counts, Counts::Big(_))
    }

    pub fn count(&self, n: usize) -> BigUint {
        match &self.counts {
            Counts::Native(c) => BigUint::from(c[n]),
            Counts::Big(c) => c[n].clone(),
        }
    }

    /// r_d(n) if it fits in a u64.
    pub fn count_u64(&self, n: usize) -> Option<u64> {
        match &self.counts {
            Counts::Native(c) => c.get(n).copied(),
            Counts::Big(c) => c.get(n).and_then(|v| v.to_u64()),
        }
    }

    pub fn count_f64(&self, n: usize) -> f64 {
        match &self.counts {
            Counts::Native(c) => c[n] as f64,
            Counts::Big(c) => c[n].to_f64().unwrap_or(f64::INFINITY),
        }
    }

    #[cfg(test)]
    fn counts_big(&self) -> Vec<BigUint> {
        (0..=self.n_max).map(|n| self.count(n)).collect()
    }

    /// Σ_{n ≤ bound} r_d(n), the number of lattice points in the closed ball of radius √bound.
    pub fn cumulative(&self, bound: usize) -> BigUint {
        (0..=bound.min(self.n_max)).map(|n| self.count(n)).sum()
    }

    /// `n,r_d(n)` lines with a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n,r_{}(n)", self.dim)?;
        for n in 0..=self.n_max {
            writeln!(out, "{},{}", n, self.count(n))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    All,
    Odd,
}

/// Extremes of one normalized ratio over the scanned range.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioExtrema {
    pub name: String,
    pub min: f64,
    pub argmin: usize,
    pub max: f64,
    pub argmax: usize,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSummary {
    pub dim: usize,
    pub n_max: usize,
    pub parity: Parity,
    /// n in range with r_d(n) = 0.
    pub zero_count: usize,
    pub ratios: Vec<RatioExtrema>,
}

impl BoundSummary {
    pub fn ratio(&self, name: &str) -> Option<&RatioExtrema> {
        self.ratios.iter().find(|r| r.name == name)
    }
}

fn extrema<F: Fn(usize) -> f64>(name: &str, ns: &[usize], ratio: F) -> Option<RatioExtrema> {
    let mut out: Option<RatioExtrema> = None;
    for &n in ns {
        let v = ratio(n);
        let e = out.get_or_insert(RatioExtrema {
            name: name.to_string(),
            min: v,
            argmin: n,
            max: v,
            argmax: n,
            samples: 0,
        });
        e.samples += 1;
        if v < e.min {
            e.min = v;
            e.argmin = n;
        }
        if v > e.max {
            e.max = v;
            e.argmax = n;
        }
    }
    out
}

/// Name of the polynomial growth ratio r_d(n)/n^{(d−2)/2}.
pub const GROWTH_RATIO: &str = "r/n^((d-2)/2)";
/// r_3(n)/(√n ln n ln ln n), n > 3.
pub const LOG_RATIO_3: &str = "r/(sqrt(n) ln n ln ln n)";
/// r_4(n)/(n ln ln n), n > 3.
pub const LOG_RATIO_4: &str = "r/(n ln ln n)";

/// Extremal ratios over 1 ≤ n ≤ n_max (odd n only for `Parity::Odd`).
pub fn bound_statistics(table: &RdTable, parity: Parity) -> BoundSummary {
    let d = table.dim;
    let ns: Vec<usize> = (1..=table.n_max)
        .filter(|n| parity == Parity::All || n % 2 == 1)
        .collect();
    let zero_count = ns.iter().filter(|&&n| table.count_f64(n) == 0.0).count();
    let mut ratios = Vec::new();
    let e = (d as f64 - 2.0) / 2.0;
    ratios.extend(extrema(GROWTH_RATIO, &ns, |n| table.count_f64(n) / (n as f64).powf(e)));
    let large: Vec<usize> = ns.iter().copied().filter(|&n| n > 3).collect();
    let lll = |n: usize| {
        let l = (n as f64).ln();
        (l, l.ln())
    };
    if d == 3 {
        ratios.extend(extrema(LOG_RATIO_3, &large, |n| {
            let (l, ll) = lll(n);
            table.count_f64(n) / ((n as f64).sqrt() * l * ll)
        }));
    }
    if d == 4 {
        ratios.extend(extrema(LOG_RATIO_4, &large, |n| {
            let (_, ll) = lll(n);
            table.count_f64(n) / (n as f64 * ll)
        }));
    }
    BoundSummary { dim: d, n_max: table.n_max, parity, zero_count, ratios }
}

/// (2^k, r_d(2^k)) for 1 ≤ k with 2^k ≤ n_max.
pub fn powers_of_two(table: &RdTable) -> Vec<(usize, BigUint)> {
    std::iter::successors(Some(2usize), |n| n.checked_mul(2))
        .take_while(|&n| n <= table.n_max)
        .map(|n| (n, table.count(n)))
        .collect()
}
