//! Pinned normal generator for reproducible initial points.
//!
//! Uniforms come from SplitMix64 (64-bit state, increment
//! `0x9E3779B97F4A7C15`, the standard mixing finalizer). A uniform in `[0, 1)`
//! is the top 53 bits of an output times `2⁻⁵³`. Normals use the basic
//! Box–Muller transform on two consecutive uniforms `v1, v2`:
//!
//! ```text
//! r = √(−2 ln(1 − v1)),  θ = 2π v2,  z0 = r cos θ,  z1 = r sin θ
//! ```
//!
//! `z0` is returned first and `z1` on the next call. The whole sequence is a
//! pure function of the seed, so any implementation following these rules
//! reproduces the same draws.

#[derive(Debug, Clone)]
pub struct NormalRng {
    state: u64,
    spare: Option<f64>,
}

impl NormalRng {
    pub fn new(seed: u64) -> Self {
        Self {
            state: seed,
            spare: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let v1 = self.next_uniform();
        let v2 = self.next_uniform();
        let r = (-2.0 * (1.0 - v1).ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * v2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn normal_vec(&mut self, len: usize) -> Vec<f64> {
        (0..len).map(|_| self.next_normal()).collect()
    }
}
