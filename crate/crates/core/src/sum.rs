//! Compensated summation.
//!
//! Every quadrature in the crate accumulates through [`KahanSum`] in node
//! order, so a result depends only on the rule and the integrand, never on
//! how callers schedule work across threads.

#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    /// Neumaier variant: stays compensated when the addend dominates the running sum.
    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

pub fn kahan_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<KahanSum>().value()
}

/// A fixed-length vector of compensated accumulators.
#[derive(Debug, Clone)]
pub struct KahanVec {
    acc: Vec<KahanSum>,
}

impl KahanVec {
    pub fn zeros(len: usize) -> Self {
        Self {
            acc: vec![KahanSum::new(); len],
        }
    }

    #[inline]
    pub fn add(&mut self, i: usize, value: f64) {
        self.acc[i].add(value);
    }

    pub fn values(&self) -> Vec<f64> {
        self.acc.iter().map(KahanSum::value).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_small_addends() {
        let mut values = vec![1.0];
        values.extend(std::iter::repeat_n(1e-16, 10_000));
        let naive: f64 = values.iter().sum();
        assert_eq!(naive, 1.0);
        assert!((kahan_sum(values) - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn large_cancellation() {
        let s = kahan_sum([1e100, 1.0, -1e100]);
        assert_eq!(s, 1.0);
    }
}
