//! Active object search in a simulated tabletop scene: geometric
//! perception, particle beliefs over object positions, expected free
//! energy viewpoint planning, and a seeded benchmark harness.

pub mod belief;
pub mod exec;
pub mod geometry;
pub mod harness;
pub mod perception;
pub mod planning;
pub mod scene;

use rand::SeedableRng;

pub type SimRng = rand_chacha::ChaCha8Rng;

/// Independent deterministic stream `stream` of generator `seed`.
pub fn rng_from(seed: u64, stream: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
