//! Small numeric helpers shared by the engine.

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of an iterator of floats.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}

/// `base^exp` for small integers, refusing anything that does not fit in u128.
pub(crate) fn checked_pow(base: usize, exp: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base as u128);
    }
    acc
}

/// Log-spaced grid of `n` points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|k| {
                    if k == 0 {
                        lo
                    } else if k == n - 1 {
                        hi
                    } else {
                        (a + (b - a) * k as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut values = vec![1.0];
        values.extend(std::iter::repeat_n(1e-16, 10_000));
        values.push(-1.0);
        let naive: f64 = values.iter().sum();
        let compensated = compensated_sum(values.iter().copied());
        assert!((compensated - 1e-12).abs() < 1e-20);
        assert!((naive - 1e-12).abs() > 1e-14);
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(0.05, 10.0, 200);
        assert_eq!(g.len(), 200);
        assert_eq!(g[0], 0.05);
        assert_eq!(g[199], 10.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn checked_pow_saturates() {
        assert_eq!(checked_pow(4, 3), 64);
        assert_eq!(checked_pow(2, 200), u128::MAX);
    }
}
