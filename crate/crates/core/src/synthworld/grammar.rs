//! Caption template grammar.
//!
//! A caption lists every object of the scene, in a random order, joined by a
//! connector word:
//!
//! ```text
//! caption   := phrase (connector phrase)*
//! connector := "and" | "with" | "near"
//! specific  := "a" <size> <color> <category> <position>
//! generic   := "a" "nice" "looking" <category> "somewhere"
//! ```
//!
//! All phrases of one caption share its specificity. Specific phrases name
//! every attribute of the object, so a specific caption determines its scene
//! exactly. Generic phrases keep the category and replace each attribute
//! slot with a fixed filler word, so generic and specific captions of the
//! same scene have the same length.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ontology::{Category, Color, Position, SceneObject, SceneSpec, Size};

pub const CAPTIONS_PER_IMAGE: usize = 5;
pub(crate) const CONNECTORS: [&str; 3] = ["and", "with", "near"];
pub(crate) const GENERIC_FILLERS: [&str; 3] = ["nice", "looking", "somewhere"];
const PHRASE_LEN: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Specificity {
    Generic,
    Specific,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionRecord {
    pub image_id: usize,
    pub words: Vec<String>,
    pub specificity: Specificity,
}

impl CaptionRecord {
    pub fn text(&self) -> String {
        self.words.join(" ")
    }
}

fn phrase(o: &SceneObject, spec: Specificity, out: &mut Vec<String>) {
    let words: [&str; PHRASE_LEN] = match spec {
        Specificity::Specific => [
            "a",
            o.size.word(),
            o.color.word(),
            o.category.word(),
            o.position.word(),
        ],
        Specificity::Generic => [
            "a",
            GENERIC_FILLERS[0],
            GENERIC_FILLERS[1],
            o.category.word(),
            GENERIC_FILLERS[2],
        ],
    };
    out.extend(words.iter().map(|w| w.to_string()));
}

/// Draws the five captions of one scene. Each caption is independently
/// generic with probability `generic_fraction`.
pub fn make_captions<R: Rng>(
    scene: &SceneSpec,
    generic_fraction: f64,
    rng: &mut R,
) -> Vec<CaptionRecord> {
    (0..CAPTIONS_PER_IMAGE)
        .map(|_| {
            let spec = if rng.random::<f64>() < generic_fraction {
                Specificity::Generic
            } else {
                Specificity::Specific
            };
            let mut order: Vec<&SceneObject> = scene.objects.iter().collect();
            order.shuffle(rng);
            let mut words = Vec::with_capacity(order.len() * (PHRASE_LEN + 1));
            for (j, o) in order.iter().enumerate() {
                if j > 0 {
                    words.push(CONNECTORS[rng.random_range(0..CONNECTORS.len())].to_string());
                }
                phrase(o, spec, &mut words);
            }
            CaptionRecord {
                image_id: scene.scene_id,
                words,
                specificity: spec,
            }
        })
        .collect()
}

/// Inverse of the specific template: the sorted object set a specific
/// caption describes, or `None` when the words are not a specific caption.
pub fn parse_specific<S: AsRef<str>>(words: &[S]) -> Option<Vec<SceneObject>> {
    let mut objects = Vec::new();
    let mut i = 0;
    loop {
        let at = i;
        let w = |k: usize| words.get(at + k).map(|s| s.as_ref());
        if w(0)? != "a" {
            return None;
        }
        objects.push(SceneObject {
            size: Size::from_word(w(1)?)?,
            color: Color::from_word(w(2)?)?,
            category: Category::from_word(w(3)?)?,
            position: Position::from_word(w(4)?)?,
        });
        i += PHRASE_LEN;
        match words.get(i).map(|s| s.as_ref()) {
            None => break,
            Some(c) if CONNECTORS.contains(&c) => i += 1,
            Some(_) => return None,
        }
    }
    objects.sort_by_key(|o| o.position);
    Some(objects)
}

/// True for the words that carry attribute information.
pub fn is_attribute_word(w: &str) -> bool {
    Size::from_word(w).is_some() || Color::from_word(w).is_some() || Position::from_word(w).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scene(objects: Vec<SceneObject>) -> SceneSpec {
        SceneSpec { scene_id: 3, objects }
    }

    fn cat() -> SceneObject {
        SceneObject {
            category: Category::Cat,
            color: Color::Black,
            size: Size::Small,
            position: Position::TopLeft,
        }
    }

    fn bench() -> SceneObject {
        SceneObject {
            category: Category::Bench,
            color: Color::Red,
            size: Size::Large,
            position: Position::BottomRight,
        }
    }

    #[test]
    fn all_specific_at_zero_fraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = scene(vec![cat(), bench()]);
        let caps = make_captions(&s, 0.0, &mut rng);
        assert_eq!(caps.len(), 5);
        for c in &caps {
            assert_eq!(c.specificity, Specificity::Specific);
            assert_eq!(parse_specific(&c.words).unwrap(), s.objects);
        }
    }

    #[test]
    fn no_attribute_words_at_full_generic() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = scene(vec![cat(), bench()]);
        for c in make_captions(&s, 1.0, &mut rng) {
            assert_eq!(c.specificity, Specificity::Generic);
            assert!(!c.words.iter().any(|w| is_attribute_word(w)), "{}", c.text());
            assert!(c.words.contains(&"cat".into()) && c.words.contains(&"bench".into()));
        }
    }

    #[test]
    fn single_object_specific_template() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let caps = make_captions(&scene(vec![cat()]), 0.0, &mut rng);
        for c in caps {
            assert_eq!(c.text(), "a small black cat topleft");
        }
    }

    #[test]
    fn generic_and_specific_lengths_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = scene(vec![cat(), bench()]);
        let g = make_captions(&s, 1.0, &mut rng);
        let sp = make_captions(&s, 0.0, &mut rng);
        assert_eq!(g[0].words.len(), sp[0].words.len());
        assert_eq!(g[0].words.len(), 11);
    }

    #[test]
    fn generic_fraction_is_expected_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = scene(vec![cat()]);
        let mut generic = 0;
        let rounds = 4000;
        for _ in 0..rounds {
            generic += make_captions(&s, 0.3, &mut rng)
                .iter()
                .filter(|c| c.specificity == Specificity::Generic)
                .count();
        }
        let rate = generic as f64 / (rounds * 5) as f64;
        assert!((rate - 0.3).abs() < 0.01, "{rate}");
    }

    #[test]
    fn parse_rejects_generic_and_garbage() {
        assert!(parse_specific(&["a", "nice", "looking", "cat", "somewhere"]).is_none());
        assert!(parse_specific(&["a", "small", "black", "cat", "topleft", "and"]).is_none());
        assert!(parse_specific::<&str>(&[]).is_none());
    }
}
