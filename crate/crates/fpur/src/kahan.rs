//! Compensated (Kahan) summation for cumulative sums that are prone to
//! catastrophic cancellation.

#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    err: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.err;
        let t = self.sum + y;
        self.err = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Sum a slice with compensation.
pub fn kahan_sum(xs: &[f64]) -> f64 {
    let mut k = KahanSum::new();
    for &x in xs {
        k.add(x);
    }
    k.value()
}
