use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{render_features, RegionFeatureGrid, ENCODED_DIM};
use super::grammar::{make_captions, CaptionRecord, CAPTIONS_PER_IMAGE};
use super::ontology::{Category, Color, Position, SceneObject, SceneSpec, Size};
use super::rng::{derive_seed, STREAM_CAPTION, STREAM_SCENE, STREAM_SPLIT};
use super::vocab::Vocabulary;
use crate::math;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub num_images: usize,
    pub max_objects: usize,
    pub regions: usize,
    pub feat_dim: usize,
    pub noise_sigma: f64,
    pub generic_fraction: f64,
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub min_count: usize,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            num_images: 500,
            max_objects: 3,
            regions: 4,
            feat_dim: 32,
            noise_sigma: 0.05,
            generic_fraction: 0.6,
            train_frac: 0.8,
            val_frac: 0.1,
            test_frac: 0.1,
            min_count: 5,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.num_images < 30 {
            return bad(format!("num_images {} below the minimum of 30", self.num_images));
        }
        if self.max_objects == 0 || self.max_objects > self.regions {
            return bad(format!(
                "max_objects {} must be in 1..={} (the region count)",
                self.max_objects, self.regions
            ));
        }
        if self.max_objects > Position::ALL.len() {
            return bad(format!("max_objects {} exceeds the 4 grid cells", self.max_objects));
        }
        if self.feat_dim < ENCODED_DIM {
            return bad(format!("feat_dim {} below the {ENCODED_DIM} encoded dims", self.feat_dim));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise_sigma {} must be finite and >= 0", self.noise_sigma));
        }
        if !(0.0..=1.0).contains(&self.generic_fraction) {
            return bad(format!("generic_fraction {} outside [0, 1]", self.generic_fraction));
        }
        let fr = [self.train_frac, self.val_frac, self.test_frac];
        if fr.iter().any(|&f| f <= 0.0) || (fr.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad(format!("split fractions {fr:?} must be positive and sum to 1"));
        }
        if self.min_count == 0 {
            return bad("min_count must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl core::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            _ => Err(Error::Config(format!("unknown split {s:?}"))),
        }
    }
}

/// Disjoint image-id sets, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl DatasetSplits {
    /// Shuffles `0..n` and cuts it at rounded train/val proportions; the
    /// test split takes the remainder.
    pub fn assign(n: usize, train_frac: f64, val_frac: f64, seed: u64) -> Self {
        let mut ids: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_SPLIT, 0));
        ids.shuffle(&mut rng);
        let n_train = math::round(n as f64 * train_frac) as usize;
        let n_val = math::round(n as f64 * val_frac) as usize;
        let take = |r: core::ops::Range<usize>| {
            let mut v = ids[r].to_vec();
            v.sort_unstable();
            v
        };
        Self {
            train: take(0..n_train),
            val: take(n_train..n_train + n_val),
            test: take(n_train + n_val..n),
        }
    }

    pub fn ids(&self, split: Split) -> &[usize] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }
}

/// A complete synthetic dataset. Image ids are `0..num_images` and index
/// every per-image vector directly.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub scenes: Vec<SceneSpec>,
    pub grids: Vec<RegionFeatureGrid>,
    /// Grouped by image, [`CAPTIONS_PER_IMAGE`] consecutive records each.
    pub captions: Vec<CaptionRecord>,
    pub splits: DatasetSplits,
    pub vocab: Vocabulary,
}

fn make_scene(id: usize, max_objects: usize, seed: u64) -> SceneSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_SCENE, id as u64));
    let n = rng.random_range(1..=max_objects);
    let mut cells: Vec<Position> = Position::ALL.to_vec();
    cells.shuffle(&mut rng);
    let mut objects: Vec<SceneObject> = cells[..n]
        .iter()
        .map(|&position| SceneObject {
            category: *Category::ALL.choose(&mut rng).expect("non-empty"),
            color: *Color::ALL.choose(&mut rng).expect("non-empty"),
            size: *Size::ALL.choose(&mut rng).expect("non-empty"),
            position,
        })
        .collect();
    objects.sort_by_key(|o| o.position);
    SceneSpec { scene_id: id, objects }
}

/// Deterministic in `(config, seed)`. Every per-image quantity is drawn from
/// its own seeded stream so images can be generated independently.
pub fn generate_dataset(config: &WorldConfig, seed: u64) -> Result<Dataset> {
    config.validate()?;
    let n = config.num_images;
    let scenes: Vec<SceneSpec> = (0..n).map(|i| make_scene(i, config.max_objects, seed)).collect();
    let grids = scenes
        .iter()
        .map(|s| render_features(s, config.regions, config.feat_dim, config.noise_sigma, seed))
        .collect();
    let captions: Vec<CaptionRecord> = scenes
        .iter()
        .flat_map(|s| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_CAPTION, s.scene_id as u64));
            make_captions(s, config.generic_fraction, &mut rng)
        })
        .collect();
    let splits = DatasetSplits::assign(n, config.train_frac, config.val_frac, seed);
    let vocab = Vocabulary::build(
        splits
            .train
            .iter()
            .flat_map(|&i| captions_slice(&captions, i))
            .map(|c| c.words.as_slice()),
        config.min_count,
    )?;
    Ok(Dataset {
        scenes,
        grids,
        captions,
        splits,
        vocab,
    })
}

fn captions_slice(captions: &[CaptionRecord], image: usize) -> &[CaptionRecord] {
    &captions[image * CAPTIONS_PER_IMAGE..(image + 1) * CAPTIONS_PER_IMAGE]
}

impl Dataset {
    pub fn num_images(&self) -> usize {
        self.grids.len()
    }

    pub fn grid(&self, image: usize) -> Result<&RegionFeatureGrid> {
        self.grids.get(image).ok_or(Error::UnknownImage(image))
    }

    pub fn captions_of(&self, image: usize) -> Result<&[CaptionRecord]> {
        if image >= self.num_images() {
            return Err(Error::UnknownImage(image));
        }
        Ok(captions_slice(&self.captions, image))
    }

    /// Exact caption strings of the training split.
    pub fn training_caption_set(&self) -> BTreeSet<String> {
        self.splits
            .train
            .iter()
            .flat_map(|&i| captions_slice(&self.captions, i))
            .map(|c| c.text())
            .collect()
    }

    /// Checks the structural invariants a dataset loaded from files must
    /// satisfy.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_images();
        if self.scenes.len() != n || self.captions.len() != n * CAPTIONS_PER_IMAGE {
            return Err(Error::Config(format!(
                "{} scenes, {} grids, {} captions do not line up",
                self.scenes.len(),
                n,
                self.captions.len()
            )));
        }
        for (i, (s, g)) in self.scenes.iter().zip(&self.grids).enumerate() {
            if s.scene_id != i || g.image_id != i {
                return Err(Error::Config(format!("image ids out of order at {i}")));
            }
        }
        if let Some(c) = self.captions.iter().enumerate().find(|(k, c)| c.image_id != k / CAPTIONS_PER_IMAGE) {
            return Err(Error::Config(format!("caption {} has wrong image id", c.0)));
        }
        let mut seen = alloc::vec![false; n];
        for &i in self.splits.train.iter().chain(&self.splits.val).chain(&self.splits.test) {
            if i >= n || seen[i] {
                return Err(Error::Config(format!("splits are not a partition (image {i})")));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Config("splits do not cover every image".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthworld::grammar::{parse_specific, Specificity};

    #[test]
    fn deterministic_for_fixed_seed() {
        let cfg = WorldConfig { num_images: 60, ..Default::default() };
        let a = generate_dataset(&cfg, 11).unwrap();
        let b = generate_dataset(&cfg, 11).unwrap();
        assert_eq!(a, b);
        let c = generate_dataset(&cfg, 12).unwrap();
        assert_ne!(a.grids, c.grids);
        a.validate().unwrap();
    }

    #[test]
    fn split_arithmetic() {
        let s = DatasetSplits::assign(500, 0.8, 0.1, 0);
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (400, 50, 50));
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..500).collect::<Vec<_>>());
    }

    #[test]
    fn rejects_more_objects_than_regions() {
        let cfg = WorldConfig { max_objects: 3, regions: 2, ..Default::default() };
        assert!(matches!(generate_dataset(&cfg, 0), Err(Error::Config(_))));
        let cfg = WorldConfig { num_images: 29, ..Default::default() };
        assert!(generate_dataset(&cfg, 0).is_err());
    }

    #[test]
    fn every_image_has_five_clean_captions() {
        let d = generate_dataset(&WorldConfig { num_images: 40, ..Default::default() }, 5).unwrap();
        for i in 0..40 {
            let caps = d.captions_of(i).unwrap();
            assert_eq!(caps.len(), 5);
            for c in caps {
                assert!(c.words.iter().all(|w| w.chars().all(|ch| ch.is_ascii_lowercase())));
            }
        }
        assert_eq!(d.grids[0].regions.len(), 4);
        assert!(d.grids.iter().all(|g| g.is_finite()));
    }

    /// With noise off and every caption specific, each caption names exactly
    /// one scene, and only images sharing that scene match it.
    #[test]
    fn retrieval_solvability_by_exhaustive_matching() {
        let cfg = WorldConfig {
            num_images: 200,
            noise_sigma: 0.0,
            generic_fraction: 0.0,
            min_count: 1,
            ..Default::default()
        };
        let d = generate_dataset(&cfg, 21).unwrap();
        for c in &d.captions {
            assert_eq!(c.specificity, Specificity::Specific);
            let parsed = parse_specific(&c.words).unwrap();
            let matches: Vec<usize> = d
                .scenes
                .iter()
                .filter(|s| s.objects == parsed)
                .map(|s| s.scene_id)
                .collect();
            assert!(matches.contains(&c.image_id));
            for m in matches {
                assert_eq!(d.scenes[m].objects, d.scenes[c.image_id].objects);
            }
        }
    }

    #[test]
    fn vocab_built_from_training_split_only() {
        let cfg = WorldConfig { num_images: 60, min_count: 1, ..Default::default() };
        let d = generate_dataset(&cfg, 8).unwrap();
        let train_words: BTreeSet<&str> = d
            .splits
            .train
            .iter()
            .flat_map(|&i| d.captions_of(i).unwrap())
            .flat_map(|c| c.words.iter().map(|w| w.as_str()))
            .collect();
        let vocab_words: BTreeSet<&str> = d.vocab.content_words().iter().map(|w| w.as_str()).collect();
        assert_eq!(train_words, vocab_words);
    }
}
