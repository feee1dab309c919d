//! Small numerical helpers shared by experiments and tests.

/// Least-squares slope of `ln(y)` against `ln(x)`.
///
/// Used to fit convergence rates from (mesh size, error) ladders. All inputs
/// must be positive.
pub fn fit_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need at least two samples to fit a slope");
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in lx.iter().zip(ly.iter()) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

/// FNV-1a hash over a byte stream, used to fingerprint meshes for archives.
pub struct Fnv1a(u64);

impl Fnv1a {
    pub fn new() -> Self {
        Fnv1a(0xcbf29ce484222325)
    }

    pub fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x100000001b3);
        }
    }

    pub fn write_f64(&mut self, v: f64) {
        self.write(&v.to_le_bytes());
    }

    pub fn write_usize(&mut self, v: usize) {
        self.write(&(v as u64).to_le_bytes());
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}

impl Default for Fnv1a {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_pure_power_law() {
        let xs = [1.0, 0.5, 0.25, 0.125];
        let ys: Vec<f64> = xs.iter().map(|&x: &f64| 3.7 * x.powi(3)).collect();
        let s = fit_log_slope(&xs, &ys);
        assert!((s - 3.0).abs() < 1e-12, "slope {s}");
    }

    #[test]
    fn fnv_is_order_sensitive() {
        let mut a = Fnv1a::new();
        a.write(&[1, 2, 3]);
        let mut b = Fnv1a::new();
        b.write(&[3, 2, 1]);
        assert_ne!(a.finish(), b.finish());
    }
}
