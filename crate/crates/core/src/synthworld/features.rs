use alloc::vec;
use alloc::vec::Vec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::ontology::{Category, Color, Position, SceneObject, SceneSpec, Size};
use super::rng::{derive_seed, STREAM_NOISE};

const CAT_OFF: usize = 0;
const COLOR_OFF: usize = CAT_OFF + Category::ALL.len();
const SIZE_OFF: usize = COLOR_OFF + Color::ALL.len();
const POS_OFF: usize = SIZE_OFF + Size::ALL.len();
/// Leading dimensions carrying the category ‖ color ‖ size ‖ position code.
pub const ENCODED_DIM: usize = POS_OFF + Position::ALL.len();

/// Per-image stand-in for CNN region activations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionFeatureGrid {
    pub image_id: usize,
    /// `K` rows of `d_feat` values.
    pub regions: Vec<Vec<f64>>,
    /// Mean of the region rows.
    pub global: Vec<f64>,
}

impl RegionFeatureGrid {
    pub fn num_regions(&self) -> usize {
        self.regions.len()
    }

    pub fn feat_dim(&self) -> usize {
        self.global.len()
    }

    pub fn is_finite(&self) -> bool {
        self.global.iter().chain(self.regions.iter().flatten()).all(|x| x.is_finite())
    }
}

/// Index ranges of the four attribute blocks.
pub fn blocks() -> [core::ops::Range<usize>; 4] {
    [CAT_OFF..COLOR_OFF, COLOR_OFF..SIZE_OFF, SIZE_OFF..POS_OFF, POS_OFF..ENCODED_DIM]
}

/// Category, color, size and position weights of an object code; the
/// category dominates, as object identity does in CNN activations.
pub const BLOCK_WEIGHTS: [f64; 4] = [0.8, 0.45, 0.25, 0.3];

/// Noise-free unit-norm code of one object.
pub(crate) fn object_code(o: &SceneObject, dim: usize) -> Vec<f64> {
    let norm = crate::math::sqrt(BLOCK_WEIGHTS.iter().map(|w| w * w).sum());
    let [c, k, s, p] = BLOCK_WEIGHTS.map(|w| w / norm);
    let mut v = vec![0.0; dim];
    v[CAT_OFF + o.category.index()] = c;
    v[COLOR_OFF + o.color.index()] = k;
    v[SIZE_OFF + o.size.index()] = s;
    v[POS_OFF + o.position.index()] = p;
    v
}

/// Renders a scene into `regions` rows of width `dim`, adding isotropic
/// Gaussian noise drawn from a stream keyed by `(noise_seed, scene_id)`.
pub fn render_features(
    scene: &SceneSpec,
    regions: usize,
    dim: usize,
    sigma: f64,
    noise_seed: u64,
) -> RegionFeatureGrid {
    let mut rows: Vec<Vec<f64>> = (0..regions)
        .map(|k| match scene.objects.get(k) {
            Some(o) => object_code(o, dim),
            None => vec![0.0; dim],
        })
        .collect();
    if sigma > 0.0 {
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(noise_seed, STREAM_NOISE, scene.scene_id as u64));
        let normal = Normal::new(0.0, sigma).expect("sigma is positive");
        for x in rows.iter_mut().flatten() {
            *x += normal.sample(&mut rng);
        }
    }
    let mut global = vec![0.0; dim];
    for row in &rows {
        for (g, x) in global.iter_mut().zip(row) {
            *g += x;
        }
    }
    for g in &mut global {
        *g /= regions as f64;
    }
    RegionFeatureGrid {
        image_id: scene.scene_id,
        regions: rows,
        global,
    }
}
