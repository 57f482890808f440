//! Per-(feature, bin, arm) statistic aggregation.
//!
//! Both boosters reduce a row to one `(arm, g, h)` triple: CausalGBM uses the
//! loss gradient and hessian, TDDP the working label and a unit weight. A
//! histogram cell therefore holds `count`, `sum_g` and `sum_h` for one arm,
//! which covers every aggregate either split criterion needs.

use std::ops::{Add, AddAssign, Sub, SubAssign};

use rayon::prelude::*;

use crate::dataset::BinnedDataset;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowStat {
    pub arm: usize,
    pub g: f64,
    pub h: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ArmStats {
    pub count: u64,
    pub sum_g: f64,
    pub sum_h: f64,
}

impl ArmStats {
    #[inline]
    pub fn push(&mut self, g: f64, h: f64) {
        self.count += 1;
        self.sum_g += g;
        self.sum_h += h;
    }
}

impl AddAssign for ArmStats {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        self.count += o.count;
        self.sum_g += o.sum_g;
        self.sum_h += o.sum_h;
    }
}

impl SubAssign for ArmStats {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        self.count -= o.count;
        self.sum_g -= o.sum_g;
        self.sum_h -= o.sum_h;
    }
}

impl Add for ArmStats {
    type Output = ArmStats;
    fn add(mut self, o: Self) -> Self {
        self += o;
        self
    }
}

impl Sub for ArmStats {
    type Output = ArmStats;
    fn sub(mut self, o: Self) -> Self {
        self -= o;
        self
    }
}

/// Node totals per arm, summed in row order.
pub fn sum_stats(rows: &[usize], stats: &[RowStat], num_arms: usize) -> Vec<ArmStats> {
    let mut total = vec![ArmStats::default(); num_arms + 1];
    for &r in rows {
        let s = stats[r];
        total[s.arm].push(s.g, s.h);
    }
    total
}

/// Histograms of one node: for every feature, `num_bins * (K + 1)` cells
/// laid out bin-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramSet {
    width: usize,
    features: Vec<Vec<ArmStats>>,
}

impl HistogramSet {
    /// Arm slots per bin (`K + 1`).
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn num_features(&self) -> usize {
        self.features.len()
    }

    pub fn num_bins(&self, feature: usize) -> usize {
        self.features[feature].len() / self.width
    }

    /// Per-arm statistics of one bin.
    pub fn bin(&self, feature: usize, bin: usize) -> &[ArmStats] {
        &self.features[feature][bin * self.width..(bin + 1) * self.width]
    }

    pub fn feature(&self, feature: usize) -> &[ArmStats] {
        &self.features[feature]
    }

    /// `self - other`, cell by cell: the sibling of `other` when `self` is
    /// their parent.
    pub fn subtract(&self, other: &HistogramSet) -> HistogramSet {
        let features = self
            .features
            .iter()
            .zip(&other.features)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| x - y).collect())
            .collect();
        HistogramSet {
            width: self.width,
            features,
        }
    }
}

/// Aggregates `stats` of `rows` into per-feature histograms.
///
/// Features are processed in parallel but each feature is accumulated
/// sequentially in row order, so the result does not depend on the number
/// of worker threads.
pub fn build_histograms(rows: &[usize], data: &BinnedDataset, stats: &[RowStat], num_arms: usize) -> HistogramSet {
    let width = num_arms + 1;
    let features = (0..data.num_features())
        .into_par_iter()
        .map(|f| {
            let bins = data.feature_bins(f);
            let mut cells = vec![ArmStats::default(); data.num_bins(f) * width];
            for &r in rows {
                let s = stats[r];
                cells[bins[r] as usize * width + s.arm].push(s.g, s.h);
            }
            cells
        })
        .collect();
    HistogramSet { width, features }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{bin_features, Matrix, UpliftDataset};
    use rand::{Rng, SeedableRng};

    fn random_problem(n: usize, p: usize, seed: u64) -> (BinnedDataset, Vec<RowStat>) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n * p)
            .map(|_| if rng.random::<f64>() < 0.05 { f64::NAN } else { (rng.random::<f64>() * 20.0).floor() })
            .collect();
        let w: Vec<usize> = (0..n).map(|i| i % 3).collect();
        let d = UpliftDataset::new(
            Matrix::new(n, p, x).unwrap(),
            vec![0.0; n],
            w.clone(),
            (0..p).map(|j| format!("f{j}")).collect(),
        )
        .unwrap();
        let stats = w
            .iter()
            .map(|&arm| RowStat { arm, g: rng.random::<f64>() - 0.5, h: rng.random::<f64>() })
            .collect();
        (bin_features(&d, 8).unwrap(), stats)
    }

    #[test]
    fn single_row_fills_one_bin() {
        let d = UpliftDataset::new(Matrix::new(2, 1, vec![3.0, 7.0]).unwrap(), vec![0.0, 1.0], vec![0, 1], vec!["a".into()]).unwrap();
        let b = bin_features(&d, 255).unwrap();
        let stats = [RowStat { arm: 0, g: 0.5, h: 2.0 }, RowStat { arm: 1, g: 1.0, h: 1.0 }];
        let h = build_histograms(&[1], &b, &stats, 1);
        let nonzero: Vec<(usize, usize)> = (0..h.num_bins(0))
            .flat_map(|bin| (0..2).map(move |a| (bin, a)))
            .filter(|&(bin, a)| h.bin(0, bin)[a].count > 0)
            .collect();
        assert_eq!(nonzero, vec![(2, 1)]);
        assert_eq!(h.bin(0, 2)[1], ArmStats { count: 1, sum_g: 1.0, sum_h: 1.0 });
    }

    #[test]
    fn matches_naive_loop_and_conserves_totals() {
        let (b, stats) = random_problem(200, 4, 3);
        let rows: Vec<usize> = (0..200).filter(|i| i % 7 != 0).collect();
        let h = build_histograms(&rows, &b, &stats, 2);
        let totals = sum_stats(&rows, &stats, 2);
        for f in 0..4 {
            // oracle: filter rows per (bin, arm) and sum directly
            for bin in 0..h.num_bins(f) {
                for arm in 0..3 {
                    let mut expect = ArmStats::default();
                    for &r in &rows {
                        if b.feature_bins(f)[r] as usize == bin && stats[r].arm == arm {
                            expect.push(stats[r].g, stats[r].h);
                        }
                    }
                    assert_eq!(h.bin(f, bin)[arm], expect);
                }
            }
            for arm in 0..3 {
                let mut acc = ArmStats::default();
                for bin in 0..h.num_bins(f) {
                    acc += h.bin(f, bin)[arm];
                }
                assert_eq!(acc.count, totals[arm].count);
                assert!((acc.sum_g - totals[arm].sum_g).abs() <= 1e-9 * totals[arm].sum_g.abs().max(1.0));
                assert!((acc.sum_h - totals[arm].sum_h).abs() <= 1e-9 * totals[arm].sum_h.abs().max(1.0));
            }
        }
    }

    #[test]
    fn sibling_subtraction() {
        let (b, stats) = random_problem(300, 3, 9);
        let all: Vec<usize> = (0..300).collect();
        let (left, right): (Vec<usize>, Vec<usize>) = all.iter().partition(|&&i| stats[i].g > 0.1);
        let parent = build_histograms(&all, &b, &stats, 2);
        let l = build_histograms(&left, &b, &stats, 2);
        let r = build_histograms(&right, &b, &stats, 2);
        let derived = parent.subtract(&l);
        for f in 0..3 {
            for (x, y) in derived.feature(f).iter().zip(r.feature(f)) {
                assert_eq!(x.count, y.count);
                assert!((x.sum_g - y.sum_g).abs() <= 1e-9 * y.sum_g.abs().max(1.0));
                assert!((x.sum_h - y.sum_h).abs() <= 1e-9 * y.sum_h.abs().max(1.0));
            }
        }
    }

    #[test]
    fn independent_of_thread_count() {
        let (b, stats) = random_problem(500, 12, 5);
        let rows: Vec<usize> = (0..500).collect();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| build_histograms(&rows, &b, &stats, 2))
        };
        let one = run(1);
        assert_eq!(one, run(4));
        assert_eq!(one, run(8));
    }
}
