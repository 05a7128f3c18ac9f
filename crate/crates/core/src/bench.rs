//! Classification cost versus posting-list height.
//!
//! For each class count the harness builds a seeded synthetic model, times a
//! fixed batch of random queries (one warm-up pass, then the median of
//! several timed passes), and fits latency against `K * h`.

use std::hint::black_box;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::index::{FeatureVector, Model};
use crate::synth;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassLayout {
    /// Classes drawn uniformly from `[0, X)^K`.
    Uniform,
    /// Pairwise-distinct values per dimension; needs `n <= X`.
    Spread,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub dims: usize,
    pub range: u32,
    pub radius: u32,
    pub queries: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub layout: ClassLayout,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            sizes: vec![1_000, 10_000, 100_000],
            dims: 26,
            range: 256,
            radius: 0,
            queries: 2_000,
            repetitions: 5,
            seed: 1,
            layout: ClassLayout::Uniform,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub classes: usize,
    pub avg_height: f64,
    pub k_times_h: f64,
    pub mean_touched_mass: f64,
    /// Median over timed passes of the mean per-query latency.
    pub latency_ns: f64,
    /// Queries where the instrumented visit counter differed from the analytic touched mass.
    pub counter_mismatches: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub format_version: u32,
    pub config: BenchConfig,
    pub rows: Vec<BenchRow>,
    /// Latency against `K * h`.
    pub fit: Option<LinearFit>,
}

/// Ordinary least squares `y = slope * x + intercept` with its coefficient of determination.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

pub fn measure(
    model: &Model,
    queries: &[FeatureVector],
    repetitions: usize,
) -> Result<(f64, f64, usize)> {
    let mut touched = 0u64;
    let mut mismatches = 0;
    for q in queries {
        let analytic = model.touched_mass(q)?;
        let (_, visited) = model.classify_instrumented(q, model.radius())?;
        touched += analytic;
        mismatches += (analytic != visited) as usize;
    }

    // warm-up, not timed
    for q in queries {
        black_box(model.classify(q)?);
    }
    let mut passes = Vec::with_capacity(repetitions);
    for _ in 0..repetitions.max(1) {
        let start = Instant::now();
        for q in queries {
            black_box(model.classify(black_box(q))?);
        }
        passes.push(start.elapsed().as_nanos() as f64 / queries.len().max(1) as f64);
    }
    Ok((
        median(passes),
        touched as f64 / queries.len().max(1) as f64,
        mismatches,
    ))
}

pub fn run_bench(config: &BenchConfig) -> Result<BenchReport> {
    if config.repetitions < 5 {
        return Err(Error::Config("use at least 5 timed repetitions".into()));
    }
    let mut rng = synth::rng(config.seed);
    let mut rows = Vec::new();
    for &n in &config.sizes {
        let model = match config.layout {
            ClassLayout::Uniform => {
                synth::uniform_model(&mut rng, n, config.dims, config.range, config.radius)
            }
            ClassLayout::Spread => {
                if n > config.range as usize {
                    return Err(Error::Config(format!(
                        "spread layout needs n <= X, got n = {n}, X = {}",
                        config.range
                    )));
                }
                synth::spread_model(n as u32, config.dims, config.range)
            }
        };
        let queries: Vec<FeatureVector> = (0..config.queries)
            .map(|_| synth::uniform_vector(&mut rng, config.dims, config.range))
            .collect();
        let h = model.avg_height()?.value();
        let (latency_ns, mean_touched_mass, counter_mismatches) =
            measure(&model, &queries, config.repetitions)?;
        log::info!(
            "n = {n}: h = {h:.2}, touched = {mean_touched_mass:.1}, {latency_ns:.0} ns/query"
        );
        rows.push(BenchRow {
            classes: n,
            avg_height: h,
            k_times_h: config.dims as f64 * h,
            mean_touched_mass,
            latency_ns,
            counter_mismatches,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.k_times_h).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.latency_ns).collect();
    Ok(BenchReport {
        format_version: crate::io::FORMAT_VERSION,
        config: config.clone(),
        fit: linear_fit(&xs, &ys),
        rows,
    })
}

impl BenchReport {
    pub fn table(&self) -> String {
        let mut s = format!(
            "{:>10} {:>10} {:>12} {:>14} {:>14}\n",
            "N", "h", "K*h", "touched/query", "ns/query"
        );
        for r in &self.rows {
            s.push_str(&format!(
                "{:>10} {:>10.3} {:>12.1} {:>14.1} {:>14.1}\n",
                r.classes, r.avg_height, r.k_times_h, r.mean_touched_mass, r.latency_ns
            ));
        }
        if let Some(f) = self.fit {
            s.push_str(&format!(
                "latency = {:.4} * K*h + {:.1} ns  (R^2 = {:.4})\n",
                f.slope, f.intercept, f.r_squared
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let f = linear_fit(&[1.0, 2.0, 4.0], &[3.0, 5.0, 9.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(linear_fit(&[1.0], &[1.0]).is_none());
        assert!(linear_fit(&[2.0, 2.0], &[1.0, 3.0]).is_none());
    }

    #[test]
    fn median_of_passes() {
        assert_eq!(median(vec![5.0, 1.0, 3.0]), 3.0);
        assert_eq!(median(vec![4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn too_few_repetitions() {
        let cfg = BenchConfig {
            repetitions: 3,
            ..BenchConfig::default()
        };
        assert!(run_bench(&cfg).is_err());
    }

    #[test]
    fn spread_layout_keeps_unit_height() {
        let cfg = BenchConfig {
            sizes: vec![16, 64, 256],
            dims: 8,
            queries: 50,
            layout: ClassLayout::Spread,
            ..BenchConfig::default()
        };
        let report = run_bench(&cfg).unwrap();
        for r in &report.rows {
            assert_eq!(r.avg_height, 1.0);
            assert_eq!(r.counter_mismatches, 0);
            assert!(r.mean_touched_mass <= 8.0);
        }
    }
}
