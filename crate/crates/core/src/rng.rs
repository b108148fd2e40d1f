//! Seeded randomness. Every random object is drawn from a ChaCha stream
//! selected by `(seed, stream id)`, so results do not depend on the order in
//! which independent pieces are generated.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::numkernel::{c, Mat};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream {
    seed: u64,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, id: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(id);
        rng
    }
}

/// Matrix of i.i.d. standard complex Gaussians.
pub fn ginibre<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Mat {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    Mat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re * scale, im * scale)
    })
}

pub fn random_hermitian<R: Rng>(n: usize, rng: &mut R) -> Mat {
    let g = ginibre(n, n, rng);
    (&g + g.adjoint()) * c(0.5, 0.0)
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of the
/// diagonal of R folded back into Q.
pub fn random_unitary<R: Rng>(n: usize, rng: &mut R) -> Mat {
    if n == 0 {
        return Mat::zeros(0, 0);
    }
    let qr = ginibre(n, n, rng).qr();
    let mut q = qr.q();
    let rr = qr.r();
    for j in 0..n {
        let d = rr[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            c(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}
