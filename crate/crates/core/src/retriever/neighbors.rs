use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::rank::cosine_similarity;
use crate::math;
use crate::synthworld::RegionFeatureGrid;
use crate::{Error, Result};

/// `max(1, ⌈0.01·n⌉)`: the top one percent of `n` images.
pub fn neighbor_count(n: usize) -> usize {
    (math::ceil(0.01 * n as f64) as usize).max(1)
}

/// Per training image, its most similar other training images by cosine
/// similarity of the raw global features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborTable {
    pub k: usize,
    pub entries: BTreeMap<usize, Vec<usize>>,
}

impl NeighborTable {
    pub fn neighbors(&self, image: usize) -> Result<&[usize]> {
        self.entries
            .get(&image)
            .map(|v| v.as_slice())
            .ok_or(Error::MissingNeighbors(image))
    }

    pub fn contains(&self, image: usize, candidate: usize) -> bool {
        self.entries.get(&image).is_some_and(|v| v.contains(&candidate))
    }
}

pub fn build_neighbor_table(grids: &[&RegionFeatureGrid]) -> Result<NeighborTable> {
    if grids.len() < 2 {
        return Err(Error::Empty("neighbor table needs at least 2 training images"));
    }
    let k = neighbor_count(grids.len());
    let mut entries = BTreeMap::new();
    for a in grids {
        let mut scored: Vec<(f64, usize)> = grids
            .iter()
            .filter(|b| b.image_id != a.image_id)
            .map(|b| {
                let s = cosine_similarity(&a.global, &b.global).unwrap_or(0.0);
                (s, b.image_id)
            })
            .collect();
        scored.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
        entries.insert(a.image_id, scored.into_iter().take(k).map(|(_, id)| id).collect());
    }
    Ok(NeighborTable { k, entries })
}

/// Uniform draw from `image`'s neighbor list.
pub fn select_contrastive<R: Rng>(image: usize, table: &NeighborTable, rng: &mut R) -> Result<usize> {
    let list = table.neighbors(image)?;
    if list.is_empty() {
        return Err(Error::MissingNeighbors(image));
    }
    Ok(list[rng.random_range(0..list.len())])
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid(id: usize, g: Vec<f64>) -> RegionFeatureGrid {
        RegionFeatureGrid {
            image_id: id,
            regions: vec![g.clone()],
            global: g,
        }
    }

    #[test]
    fn counts() {
        assert_eq!(neighbor_count(200), 2);
        assert_eq!(neighbor_count(400), 4);
        assert_eq!(neighbor_count(2), 1);
        assert_eq!(neighbor_count(101), 2);
    }

    #[test]
    fn two_images_point_at_each_other() {
        let gs = [grid(5, vec![1.0, 0.0]), grid(9, vec![0.0, 1.0])];
        let t = build_neighbor_table(&gs.iter().collect::<Vec<_>>()).unwrap();
        assert_eq!(t.neighbors(5).unwrap(), &[9]);
        assert_eq!(t.neighbors(9).unwrap(), &[5]);
    }

    #[test]
    fn excludes_self_and_breaks_ties_by_id() {
        let gs: Vec<RegionFeatureGrid> = (0..150)
            .map(|i| grid(i, vec![1.0, (i % 3) as f64]))
            .collect();
        let t = build_neighbor_table(&gs.iter().collect::<Vec<_>>()).unwrap();
        assert_eq!(t.k, 2);
        for (id, list) in &t.entries {
            assert_eq!(list.len(), 2);
            assert!(!list.contains(id));
        }
        // image 0 ties with 3, 6, 9, ... and takes the two lowest ids
        assert_eq!(t.neighbors(0).unwrap(), &[3, 6]);
    }

    #[test]
    fn selection_uniform_and_reproducible() {
        let mut entries = BTreeMap::new();
        entries.insert(0, vec![1, 2]);
        entries.insert(1, vec![0]);
        let t = NeighborTable { k: 2, entries };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws: Vec<usize> = (0..10_000).map(|_| select_contrastive(0, &t, &mut rng).unwrap()).collect();
        let ones = draws.iter().filter(|&&d| d == 1).count() as f64 / 10_000.0;
        assert!((0.45..=0.55).contains(&ones), "{ones}");
        let mut rng2 = ChaCha8Rng::seed_from_u64(3);
        let again: Vec<usize> = (0..10_000).map(|_| select_contrastive(0, &t, &mut rng2).unwrap()).collect();
        assert_eq!(draws, again);
        assert_eq!(select_contrastive(1, &t, &mut rng).unwrap(), 0);
        assert!(matches!(select_contrastive(7, &t, &mut rng), Err(Error::MissingNeighbors(7))));
    }
}
