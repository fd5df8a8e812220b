//! Reproducible random streams.
//!
//! Every stochastic quantity is drawn from ChaCha20 (the IETF 20-round
//! stream cipher used as a counter-based generator). The 256-bit key is
//! expanded from the 64-bit user seed with `SeedableRng::seed_from_u64`
//! (PCG32 expansion, as specified by `rand_core`), and the 64-bit ChaCha
//! stream id selects an independent sequence. Replicate `r` with role `k`
//! uses stream `r * ROLE_COUNT + k`, so results never depend on the order in
//! which replicates are scheduled.
//!
//! Uniforms take the top 53 bits of each 64-bit word; normals use the
//! Box–Muller transform with both outputs consumed in order. Both steps are
//! simple enough to reproduce bit-for-bit in another language.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// What a stream is used for inside a replicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    /// The evaluated process X.
    Integrand = 0,
    /// The integrator Y.
    Integrator = 1,
    /// Extra draws (perturbations, marginal samples).
    Auxiliary = 2,
    /// A second auxiliary stream.
    Perturbation = 3,
}

pub const ROLE_COUNT: u64 = 4;

pub struct Stream {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl Stream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, spare: None }
    }

    pub fn for_replicate(seed: u64, replicate: u64, role: Role) -> Self {
        Self::new(seed, replicate * ROLE_COUNT + role as u64)
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 - u lies in (0, 1], keeping the logarithm finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let phase = std::f64::consts::TAU * u2;
        self.spare = Some(r * phase.sin());
        r * phase.cos()
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for z in out.iter_mut() {
            *z = self.normal();
        }
    }
}
