use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

macro_rules! word_enum {
    ($(#[$m:meta])* $name:ident { $($variant:ident => $word:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "lowercase")]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn word(self) -> &'static str {
                match self { $($name::$variant => $word),+ }
            }

            pub fn index(self) -> usize {
                self as usize
            }

            pub fn from_word(w: &str) -> Option<Self> {
                match w { $($word => Some($name::$variant),)+ _ => None }
            }
        }
    };
}

word_enum!(Category {
    Cat => "cat",
    Dog => "dog",
    Man => "man",
    Woman => "woman",
    Car => "car",
    Bench => "bench",
    Flower => "flower",
    Bird => "bird",
});

word_enum!(Color {
    Black => "black",
    White => "white",
    Red => "red",
    Blue => "blue",
    Green => "green",
    Yellow => "yellow",
});

word_enum!(Size {
    Small => "small",
    Large => "large",
});

word_enum!(
    /// Cell of the 2×2 scene grid.
    Position {
        TopLeft => "topleft",
        TopRight => "topright",
        BottomLeft => "bottomleft",
        BottomRight => "bottomright",
    }
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SceneObject {
    pub category: Category,
    pub color: Color,
    pub size: Size,
    pub position: Position,
}

/// Objects are stored sorted by grid cell; object `j` occupies region `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub scene_id: usize,
    pub objects: Vec<SceneObject>,
}
