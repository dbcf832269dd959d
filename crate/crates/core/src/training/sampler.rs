use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Epoch-wise shuffled draws without replacement; a batch may straddle two
/// epochs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchSampler {
    order: Vec<usize>,
    pos: usize,
    pub epoch: u64,
}

impl BatchSampler {
    pub fn new(items: Vec<usize>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::Empty("training items"));
        }
        let pos = items.len();
        Ok(Self { order: items, pos, epoch: 0 })
    }

    pub fn next_batch<R: Rng>(&mut self, rng: &mut R, n: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            if self.pos == self.order.len() {
                self.order.sort_unstable();
                self.order.shuffle(rng);
                self.pos = 0;
                self.epoch += 1;
            }
            out.push(self.order[self.pos]);
            self.pos += 1;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn each_epoch_is_a_permutation() {
        let mut s = BatchSampler::new((0..10).collect()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut a = s.next_batch(&mut rng, 4);
        a.extend(s.next_batch(&mut rng, 6));
        a.sort();
        assert_eq!(a, (0..10).collect::<Vec<_>>());
        assert_eq!(s.next_batch(&mut rng, 12).len(), 12);
        assert_eq!(s.epoch, 3);
        assert!(BatchSampler::new(vec![]).is_err());
    }
}
