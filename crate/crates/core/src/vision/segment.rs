use std::collections::BTreeMap;

use super::{pixel_winner_with_radius, RasterImage};
use crate::error::{Error, Result};
use crate::index::Model;
use crate::levels::{LabelTable, UNLABELED};

/// Rectangular teacher sub-area carrying an external label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrainingArea {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
    pub label: String,
}

impl TrainingArea {
    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x && y >= self.y && x < self.x + self.width && y < self.y + self.height
    }
}

/// Trains the pixel model on each sub-area and links every class found there
/// (new or matched) to the area's label. Returns the number of new classes.
pub fn train_areas(
    model: &mut Model,
    table: &mut LabelTable,
    img: &RasterImage,
    areas: &[TrainingArea],
) -> Result<usize> {
    if model.dims() != img.channels() as usize {
        return Err(Error::DimensionMismatch {
            expected: model.dims(),
            got: img.channels() as usize,
        });
    }
    let mut created = 0;
    for area in areas {
        if area.x + area.width > img.width() || area.y + area.height > img.height() {
            return Err(Error::ImageMismatch(format!(
                "area {}x{}+{}+{} exceeds the {}x{} image",
                area.width,
                area.height,
                area.x,
                area.y,
                img.width(),
                img.height()
            )));
        }
        for y in area.y..area.y + area.height {
            for x in area.x..area.x + area.width {
                let (id, new) = model.train_step(&img.pixel_features(x, y))?;
                created += new as usize;
                table.attach(id, area.label.as_str());
            }
        }
    }
    Ok(created)
}

/// Per-pixel external labels. Cell value 0 is unlabeled, `i` names `legend[i - 1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMap {
    width: u32,
    height: u32,
    legend: Vec<String>,
    cells: Vec<u16>,
}

impl LabelMap {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn legend(&self) -> &[String] {
        &self.legend
    }

    pub fn label_at(&self, x: u32, y: u32) -> &str {
        match self.cells[y as usize * self.width as usize + x as usize] {
            0 => UNLABELED,
            i => &self.legend[i as usize - 1],
        }
    }

    pub fn is_labeled(&self, x: u32, y: u32) -> bool {
        self.cells[y as usize * self.width as usize + x as usize] != 0
    }

    pub fn labeled_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c != 0).count()
    }

    /// Pixel count per label, unlabeled included.
    pub fn counts(&self) -> BTreeMap<&str, usize> {
        let mut out = BTreeMap::new();
        for y in 0..self.height {
            for x in 0..self.width {
                *out.entry(self.label_at(x, y)).or_default() += 1;
            }
        }
        out
    }

    /// Paints each label with its palette color; unlabeled and unknown labels are black.
    pub fn render(&self, palette: &BTreeMap<String, [u8; 3]>) -> RasterImage {
        let colors: Vec<[u8; 3]> = std::iter::once([0, 0, 0])
            .chain(
                self.legend
                    .iter()
                    .map(|l| palette.get(l).copied().unwrap_or([0, 0, 0])),
            )
            .collect();
        let samples = self
            .cells
            .iter()
            .flat_map(|&c| colors[c as usize])
            .collect();
        RasterImage::new(self.width, self.height, 3, samples)
            .expect("label map shape is consistent")
    }
}

/// Labels every pixel whose winning class matches in all channels.
pub fn segment_image(model: &Model, table: &LabelTable, img: &RasterImage) -> Result<LabelMap> {
    segment_image_with_radius(model, table, img, model.radius())
}

pub fn segment_image_with_radius(
    model: &Model,
    table: &LabelTable,
    img: &RasterImage,
    radius: u32,
) -> Result<LabelMap> {
    if model.dims() != img.channels() as usize {
        return Err(Error::DimensionMismatch {
            expected: model.dims(),
            got: img.channels() as usize,
        });
    }
    let legend: Vec<String> = table
        .distinct_labels()
        .into_iter()
        .map(str::to_owned)
        .collect();
    if legend.len() >= u16::MAX as usize {
        return Err(Error::Config("too many distinct labels".into()));
    }
    let slot: BTreeMap<&str, u16> = legend
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i as u16 + 1))
        .collect();

    let mut cells = Vec::with_capacity(img.pixel_count());
    for y in 0..img.height() {
        for x in 0..img.width() {
            let cell = pixel_winner_with_radius(model, img, x, y, radius)?
                .and_then(|id| table.get(id))
                .map_or(0, |l| slot[l]);
            cells.push(cell);
        }
    }
    Ok(LabelMap {
        width: img.width(),
        height: img.height(),
        legend,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_tone() -> RasterImage {
        let mut img = RasterImage::filled(8, 4, &[20, 40, 200]).unwrap();
        for y in 0..4 {
            for x in 4..8 {
                img.set_pixel(x, y, &[30, 160, 40]);
            }
        }
        img
    }

    fn areas() -> Vec<TrainingArea> {
        vec![
            TrainingArea {
                x: 0,
                y: 0,
                width: 2,
                height: 2,
                label: "water".into(),
            },
            TrainingArea {
                x: 6,
                y: 2,
                width: 2,
                height: 2,
                label: "vegetation".into(),
            },
        ]
    }

    #[test]
    fn training_pixels_get_their_area_label() {
        let img = two_tone();
        let mut m = Model::new(3, 256, 0).unwrap();
        let mut t = LabelTable::new();
        assert_eq!(train_areas(&mut m, &mut t, &img, &areas()).unwrap(), 2);
        let map = segment_image(&m, &t, &img).unwrap();
        assert_eq!(map.label_at(0, 0), "water");
        assert_eq!(map.label_at(3, 3), "water");
        assert_eq!(map.label_at(5, 0), "vegetation");
        assert_eq!(map.labeled_count(), 32);
    }

    #[test]
    fn unseen_color_stays_unlabeled() {
        let mut img = two_tone();
        img.set_pixel(3, 0, &[21, 40, 200]);
        let mut m = Model::new(3, 256, 0).unwrap();
        let mut t = LabelTable::new();
        train_areas(&mut m, &mut t, &img, &areas()).unwrap();
        let map = segment_image(&m, &t, &img).unwrap();
        assert_eq!(map.label_at(3, 0), UNLABELED);
        assert_eq!(
            segment_image_with_radius(&m, &t, &img, 1)
                .unwrap()
                .label_at(3, 0),
            "water"
        );
    }

    #[test]
    fn area_outside_image_rejected() {
        let img = two_tone();
        let mut m = Model::new(3, 256, 0).unwrap();
        let mut t = LabelTable::new();
        let bad = [TrainingArea {
            x: 7,
            y: 0,
            width: 2,
            height: 1,
            label: "x".into(),
        }];
        assert!(train_areas(&mut m, &mut t, &img, &bad).is_err());
    }

    #[test]
    fn render_uses_palette() {
        let img = two_tone();
        let mut m = Model::new(3, 256, 0).unwrap();
        let mut t = LabelTable::new();
        train_areas(&mut m, &mut t, &img, &areas()[..1]).unwrap();
        let map = segment_image(&m, &t, &img).unwrap();
        let palette = BTreeMap::from([("water".to_string(), [0, 0, 255])]);
        let out = map.render(&palette);
        assert_eq!(out.pixel(0, 0), &[0, 0, 255]);
        assert_eq!(out.pixel(7, 0), &[0, 0, 0]);
    }
}
