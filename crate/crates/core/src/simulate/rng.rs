use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic generator for `(seed, stream)`.
///
/// Streams are ChaCha8 substreams of the master seed: stream `i` is the
/// keystream selected by the 64-bit stream id `i`, so substreams never
/// overlap and batch `i` draws the same numbers whether it runs serially or
/// on another thread.
#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    stream: u64,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng { seed, stream: 0 }
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        SeededRng { seed, stream }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// The same master seed on another stream.
    pub fn substream(&self, stream: u64) -> SeededRng {
        SeededRng { seed: self.seed, stream }
    }

    /// Generator for item `index` of a batch run from `self`: stream
    /// `stream · 2³² + index` of the same seed. Distinct for `index < 2³²`.
    pub fn child(&self, index: u64) -> SeededRng {
        SeededRng { seed: self.seed, stream: (self.stream << 32).wrapping_add(index) }
    }

    pub fn generator(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_seed_and_stream_repeat() {
        let a: Vec<u64> = SeededRng::with_stream(7, 3).generator().sample_iter(rand::distributions::Standard).take(8).collect();
        let b: Vec<u64> = SeededRng::with_stream(7, 3).generator().sample_iter(rand::distributions::Standard).take(8).collect();
        let c: Vec<u64> = SeededRng::with_stream(7, 4).generator().sample_iter(rand::distributions::Standard).take(8).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
