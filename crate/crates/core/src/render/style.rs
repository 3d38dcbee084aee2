//! Seeded visual style: background, palette, gridlines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::raster::Rgba;

const BACKGROUNDS: [Rgba; 3] = [[255, 255, 255, 255], [250, 250, 244, 255], [244, 247, 252, 255]];

const PALETTES: [[Rgba; 8]; 3] = [
    [
        [31, 119, 180, 255],
        [255, 127, 14, 255],
        [44, 160, 44, 255],
        [214, 39, 40, 255],
        [148, 103, 189, 255],
        [140, 86, 75, 255],
        [227, 119, 194, 255],
        [23, 190, 207, 255],
    ],
    [
        [78, 121, 167, 255],
        [242, 142, 43, 255],
        [225, 87, 89, 255],
        [118, 183, 178, 255],
        [89, 161, 79, 255],
        [237, 201, 72, 255],
        [176, 122, 161, 255],
        [156, 117, 95, 255],
    ],
    [
        [0, 63, 92, 255],
        [88, 80, 141, 255],
        [188, 80, 144, 255],
        [255, 99, 97, 255],
        [255, 166, 0, 255],
        [0, 137, 123, 255],
        [120, 94, 240, 255],
        [100, 143, 255, 255],
    ],
];

#[derive(Debug, Clone)]
pub(crate) struct Style {
    pub background: Rgba,
    pub axis: Rgba,
    pub text: Rgba,
    pub grid: Option<Rgba>,
    palette: [Rgba; 8],
    offset: usize,
}

impl Style {
    pub fn from_seed(seed: u64) -> Style {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let background = BACKGROUNDS[rng.gen_range(0..BACKGROUNDS.len())];
        let palette = PALETTES[rng.gen_range(0..PALETTES.len())];
        let offset = rng.gen_range(0..palette.len());
        let grid = rng.gen_bool(0.5).then_some([222, 222, 222, 255]);
        let ink = rng.gen_range(0..48u8);
        Style {
            background,
            axis: [ink, ink, ink, 255],
            text: [ink, ink, ink, 255],
            grid,
            palette,
            offset,
        }
    }

    pub fn series_color(&self, i: usize) -> Rgba {
        self.palette[(i + self.offset) % self.palette.len()]
    }
}
