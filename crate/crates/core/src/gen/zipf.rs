use rand::Rng;

/// Inverse-CDF sampler for `P(k) ∝ k^(-s)` on `1..=k_max`.
#[derive(Debug, Clone)]
pub struct Zipf {
    cdf: Vec<f64>,
}

impl Zipf {
    pub fn new(k_max: u32, s: f64) -> Self {
        assert!(k_max >= 1 && s > 0.0, "zipf needs k_max >= 1 and s > 0");
        let mut cdf = Vec::with_capacity(k_max as usize);
        let mut acc = 0.0;
        for k in 1..=k_max {
            acc += (k as f64).powf(-s);
            cdf.push(acc);
        }
        for c in &mut cdf {
            *c /= acc;
        }
        Zipf { cdf }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        let k = self.cdf.partition_point(|&c| c <= u);
        (k.min(self.cdf.len() - 1) + 1) as u32
    }

    /// Probability of drawing `k`.
    pub fn pmf(&self, k: u32) -> f64 {
        let i = (k - 1) as usize;
        if i == 0 {
            self.cdf[0]
        } else {
            self.cdf[i] - self.cdf[i - 1]
        }
    }
}

pub fn zipf_sample<R: Rng + ?Sized>(rng: &mut R, k_max: u32, s: f64) -> u32 {
    Zipf::new(k_max, s).sample(rng)
}
