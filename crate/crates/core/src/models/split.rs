use crate::ingest::{Attribute, AttributeSet, FeatureVector};

use super::{ModelError, Result, SplitTest};

/// Gains at or below this are treated as no improvement.
pub(crate) const MIN_GAIN: f64 = 1e-12;

/// Population standard deviation. Zero for an empty slice.
pub fn population_sd(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// `SD(parent) - sum(|child| / |parent| * SD(child))`.
pub fn sd_reduction(parent: &[f64], children: &[&[f64]]) -> Result<f64> {
    if parent.is_empty() {
        return Err(ModelError::NotAPartition);
    }
    let mut pooled: Vec<f64> = children.iter().flat_map(|c| c.iter().copied()).collect();
    let mut whole = parent.to_vec();
    pooled.sort_by(f64::total_cmp);
    whole.sort_by(f64::total_cmp);
    if pooled.len() != whole.len() || pooled.iter().zip(&whole).any(|(a, b)| a.to_bits() != b.to_bits()) {
        return Err(ModelError::NotAPartition);
    }
    let n = parent.len() as f64;
    let weighted: f64 = children
        .iter()
        .map(|c| c.len() as f64 / n * population_sd(c))
        .sum();
    Ok(population_sd(parent) - weighted)
}

/// Count, mean and sum of squared deviations. Built with Welford updates
/// and combined pairwise, so nearly constant groups keep an exact zero
/// spread.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn add(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    fn merge(&self, o: &Moments) -> Moments {
        if self.n == 0 {
            return *o;
        }
        if o.n == 0 {
            return *self;
        }
        let n = self.n + o.n;
        let (a, b, nf) = (self.n as f64, o.n as f64, n as f64);
        let d = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * b / nf,
            m2: self.m2 + o.m2 + d * d * a * b / nf,
        }
    }

    fn sd(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        (self.m2 / self.n as f64).max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub attribute: Attribute,
    pub test: SplitTest,
    pub gain: f64,
    pub left_count: usize,
    pub right_count: usize,
}

impl SplitCandidate {
    pub fn goes_left(&self, f: &FeatureVector) -> bool {
        let code = f.code(self.attribute);
        match self.test {
            SplitTest::AtMost(t) => code <= t,
            SplitTest::InSet { left, .. } => left & (1 << code) != 0,
        }
    }
}

/// Best binary split of `rows[idx]` by SD reduction, each side holding at
/// least `min_leaf` rows.
///
/// Ordered attributes split on `code <= t` with `t` a present code; season
/// splits into two category subsets, the left one holding the smallest
/// present code. Ties keep the earlier attribute and then the lower
/// threshold (or smaller subset mask).
pub fn best_split(
    rows: &[FeatureVector],
    idx: &[usize],
    attributes: AttributeSet,
    min_leaf: usize,
) -> Option<SplitCandidate> {
    if idx.len() < 2 {
        return None;
    }
    let min_leaf = min_leaf.max(1);
    let n = idx.len() as f64;

    let mut best: Option<SplitCandidate> = None;
    let mut parent_sd = None;
    let mut consider = |attribute: Attribute, test: SplitTest, left: &Moments, right: &Moments, parent: f64| {
        if left.n < min_leaf || right.n < min_leaf {
            return;
        }
        let gain = parent - (left.n as f64 / n) * left.sd() - (right.n as f64 / n) * right.sd();
        if best.is_none_or(|b| gain > b.gain) {
            best = Some(SplitCandidate {
                attribute,
                test,
                gain,
                left_count: left.n,
                right_count: right.n,
            });
        }
    };

    for attribute in attributes.iter() {
        let mut buckets = [Moments::default(); 64];
        for &i in idx {
            let code = usize::from(rows[i].code(attribute)).min(63);
            buckets[code].add(rows[i].consumption);
        }
        let present: Vec<usize> = (0..64).filter(|&c| buckets[c].n > 0).collect();
        let parent = *parent_sd.get_or_insert_with(|| {
            present
                .iter()
                .fold(Moments::default(), |acc, &c| acc.merge(&buckets[c]))
                .sd()
        });
        if present.len() < 2 {
            continue;
        }
        if attribute.is_categorical() {
            let full: u8 = present.iter().fold(0u8, |m, &c| m | (1 << c));
            let lowest = 1u8 << present[0];
            for mask in 1..=u8::MAX {
                if mask & !full != 0 || mask & lowest == 0 || mask == full {
                    continue;
                }
                let (mut left, mut right) = (Moments::default(), Moments::default());
                for &c in &present {
                    if mask & (1 << c) != 0 {
                        left = left.merge(&buckets[c]);
                    } else {
                        right = right.merge(&buckets[c]);
                    }
                }
                consider(attribute, SplitTest::InSet { left: mask, right: full & !mask }, &left, &right, parent);
            }
        } else {
            let k = present.len();
            let mut suffix = vec![Moments::default(); k + 1];
            for i in (0..k).rev() {
                suffix[i] = buckets[present[i]].merge(&suffix[i + 1]);
            }
            let mut left = Moments::default();
            for i in 0..k - 1 {
                left = left.merge(&buckets[present[i]]);
                consider(attribute, SplitTest::AtMost(present[i] as u8), &left, &suffix[i + 1], parent);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_examples() {
        let g = sd_reduction(&[0.0, 0.0, 10.0, 10.0], &[&[0.0, 0.0], &[10.0, 10.0]]).unwrap();
        assert!((g - 5.0).abs() < 1e-12);
        let g = sd_reduction(&[0.0, 10.0], &[&[0.0], &[10.0]]).unwrap();
        assert!((g - 5.0).abs() < 1e-12);
        let g = sd_reduction(&[3.0; 6], &[&[3.0; 2], &[3.0; 4]]).unwrap();
        assert_eq!(g, 0.0);
    }

    #[test]
    fn non_partition_rejected() {
        assert!(sd_reduction(&[1.0, 2.0], &[&[1.0], &[3.0]]).is_err());
        assert!(sd_reduction(&[1.0, 2.0], &[&[1.0]]).is_err());
        assert!(sd_reduction(&[], &[]).is_err());
    }
}
