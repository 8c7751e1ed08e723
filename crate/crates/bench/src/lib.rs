//! Fixtures shared by the benchmarks.

use seqplace::synthetic::generate;
use seqplace::{SynthConfig, SynthPair};

/// A mildly noisy synthetic pair of `frames` frames and `dim` dimensions.
pub fn pair(frames: usize, dim: usize) -> SynthPair {
    generate(&SynthConfig {
        frames,
        dim,
        condition_noise: 0.1,
        seed: 1,
        ..SynthConfig::default()
    })
    .expect("benchmark fixture configuration is valid")
}

#[cfg(test)]
mod tests {
    #[test]
    fn fixture_shapes() {
        let p = super::pair(30, 8);
        assert_eq!(p.reference.frame_count(), 30);
        assert_eq!(p.query.descriptors().dim(), 8);
    }
}
