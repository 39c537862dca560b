//! VOMTC-style corpus handling: XML labels, per-pixel distance maps,
//! sub-dataset selection and crop-based training label generation.
//!
//! Directory layout: `label/<id>.xml` and `image/distance/<id>.json`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("malformed label file: {0}")]
    Xml(String),
    #[error("label file is missing <{0}>")]
    Missing(&'static str),
    #[error("<{tag}> is not a number: {text:?}")]
    Number { tag: &'static str, text: String },
    #[error("unknown object class {0:?}")]
    UnknownClass(String),
    #[error("bounding box {0:?} is degenerate or outside the image")]
    BBox(BBox),
    #[error("image size must be positive")]
    ImageSize,
    #[error("distance map has {got} entries, expected {expected}")]
    DistanceLength { expected: usize, got: usize },
    #[error("distance map entry {0} is negative or not finite")]
    DistanceValue(usize),
    #[error("distance file: {0}")]
    Json(String),
    #[error("object box does not intersect the crop region")]
    EmptyIntersection,
    #[error("at least one predicted box is required")]
    NoPredictions,
    #[error("invalid selection query: {0}")]
    Query(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ObjectClass {
    Person,
    Phone,
    Laptop,
}

impl ObjectClass {
    pub const ALL: [ObjectClass; 3] = [ObjectClass::Person, ObjectClass::Phone, ObjectClass::Laptop];

    pub fn tag(self) -> &'static str {
        match self {
            ObjectClass::Person => "person",
            ObjectClass::Phone => "P",
            ObjectClass::Laptop => "L",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self, DatasetError> {
        match tag {
            "person" => Ok(ObjectClass::Person),
            "P" => Ok(ObjectClass::Phone),
            "L" => Ok(ObjectClass::Laptop),
            other => Err(DatasetError::UnknownClass(other.to_owned())),
        }
    }

    /// 0 = person, 1 = cell phone, 2 = laptop.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BBox {
    pub const fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Self { x_min, y_min, x_max, y_max }
    }

    pub fn is_proper(&self) -> bool {
        self.x_min < self.x_max && self.y_min < self.y_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        if self.is_proper() {
            self.width() * self.height()
        } else {
            0.0
        }
    }

    pub fn intersection(&self, o: &BBox) -> Option<BBox> {
        let b = BBox::new(
            self.x_min.max(o.x_min),
            self.y_min.max(o.y_min),
            self.x_max.min(o.x_max),
            self.y_max.min(o.y_max),
        );
        b.is_proper().then_some(b)
    }

    pub fn iou(&self, o: &BBox) -> f64 {
        let inter = self.intersection(o).map_or(0.0, |b| b.area());
        let union = self.area() + o.area() - inter;
        if union > 0.0 {
            inter / union
        } else {
            0.0
        }
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledObject {
    pub cls: ObjectClass,
    pub bbox: BBox,
    /// Distance from the camera; `None` until a distance map is attached.
    pub distance_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    /// (width, height, channels).
    pub image_size: (u32, u32, u32),
    pub objects: Vec<LabeledObject>,
    pub distance_ref: Option<String>,
}

impl SampleRecord {
    pub fn count(&self, cls: ObjectClass) -> usize {
        self.objects.iter().filter(|o| o.cls == cls).count()
    }

    fn validate(&self) -> Result<(), DatasetError> {
        let (w, h, _) = self.image_size;
        if w == 0 || h == 0 {
            return Err(DatasetError::ImageSize);
        }
        for o in &self.objects {
            let b = o.bbox;
            let inside = b.x_min >= 0.0 && b.y_min >= 0.0 && b.x_max <= w as f64 && b.y_max <= h as f64;
            if !b.is_proper() || !inside {
                return Err(DatasetError::BBox(b));
            }
            if let Some(d) = o.distance_m {
                if !(d >= 0.0 && d.is_finite()) {
                    return Err(DatasetError::DistanceValue(0));
                }
            }
        }
        Ok(())
    }

    /// Fills every object's distance from the map value at its box center.
    pub fn attach_distances(&mut self, map: &DistanceMap) {
        for o in &mut self.objects {
            o.distance_m = Some(map.at_center(&o.bbox));
        }
    }
}

fn child<'a, 'i>(node: roxmltree::Node<'a, 'i>, tag: &'static str) -> Result<roxmltree::Node<'a, 'i>, DatasetError> {
    node.children()
        .find(|n| n.has_tag_name(tag))
        .ok_or(DatasetError::Missing(tag))
}

fn text_of<'a>(node: roxmltree::Node<'a, '_>, tag: &'static str) -> Result<&'a str, DatasetError> {
    Ok(child(node, tag)?.text().unwrap_or("").trim())
}

fn number<T: std::str::FromStr>(node: roxmltree::Node<'_, '_>, tag: &'static str) -> Result<T, DatasetError> {
    let t = text_of(node, tag)?;
    t.parse().map_err(|_| DatasetError::Number { tag, text: t.to_owned() })
}

pub fn parse_label_file(bytes: &[u8]) -> Result<SampleRecord, DatasetError> {
    let text = std::str::from_utf8(bytes).map_err(|e| DatasetError::Xml(e.to_string()))?;
    let doc = roxmltree::Document::parse(text).map_err(|e| DatasetError::Xml(e.to_string()))?;
    let root = doc.root_element();
    let id = text_of(root, "filename")?.to_owned();
    let size = child(root, "size")?;
    let image_size = (number(size, "width")?, number(size, "height")?, number(size, "depth")?);
    let distance_ref = root
        .children()
        .find(|n| n.has_tag_name("distance_file"))
        .and_then(|n| n.text())
        .map(|s| s.trim().to_owned());
    let mut objects = Vec::new();
    for obj in root.children().filter(|n| n.has_tag_name("object")) {
        let cls = ObjectClass::from_tag(text_of(obj, "name")?)?;
        let bb = child(obj, "bndbox")?;
        let bbox = BBox::new(number(bb, "xmin")?, number(bb, "ymin")?, number(bb, "xmax")?, number(bb, "ymax")?);
        let distance_m = match obj.children().find(|n| n.has_tag_name("distance")) {
            Some(_) => Some(number(obj, "distance")?),
            None => None,
        };
        objects.push(LabeledObject { cls, bbox, distance_m });
    }
    let rec = SampleRecord { id, image_size, objects, distance_ref };
    rec.validate()?;
    Ok(rec)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn write_label_file(r: &SampleRecord) -> String {
    let mut s = String::new();
    s.push_str("<annotation>\n");
    let _ = writeln!(s, "  <filename>{}</filename>", escape(&r.id));
    let (w, h, c) = r.image_size;
    let _ = writeln!(s, "  <size>\n    <width>{w}</width>\n    <height>{h}</height>\n    <depth>{c}</depth>\n  </size>");
    if let Some(d) = &r.distance_ref {
        let _ = writeln!(s, "  <distance_file>{}</distance_file>", escape(d));
    }
    for o in &r.objects {
        let b = o.bbox;
        let _ = writeln!(s, "  <object>\n    <name>{}</name>", o.cls.tag());
        let _ = writeln!(
            s,
            "    <bndbox>\n      <xmin>{}</xmin>\n      <ymin>{}</ymin>\n      <xmax>{}</xmax>\n      <ymax>{}</ymax>\n    </bndbox>",
            b.x_min, b.y_min, b.x_max, b.y_max
        );
        if let Some(d) = o.distance_m {
            let _ = writeln!(s, "    <distance>{d}</distance>");
        }
        s.push_str("  </object>\n");
    }
    s.push_str("</annotation>\n");
    s
}

/// Row-major per-pixel distances in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMap {
    pub width: usize,
    pub height: usize,
    pub distances: Vec<f64>,
}

impl DistanceMap {
    pub fn new(width: usize, height: usize, distances: Vec<f64>) -> Result<Self, DatasetError> {
        if width * height != distances.len() {
            return Err(DatasetError::DistanceLength { expected: width * height, got: distances.len() });
        }
        if let Some(i) = distances.iter().position(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(DatasetError::DistanceValue(i));
        }
        Ok(Self { width, height, distances })
    }

    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.distances[y * self.width + x]
    }

    /// Value at the pixel containing the box center.
    pub fn at_center(&self, b: &BBox) -> f64 {
        let (cx, cy) = b.center();
        let x = (cx.floor().max(0.0) as usize).min(self.width - 1);
        let y = (cy.floor().max(0.0) as usize).min(self.height - 1);
        self.at(x, y)
    }
}

pub fn parse_distance_file(bytes: &[u8], width: usize, height: usize) -> Result<DistanceMap, DatasetError> {
    let m: DistanceMap = serde_json::from_slice(bytes).map_err(|e| DatasetError::Json(e.to_string()))?;
    if m.width != width || m.height != height {
        return Err(DatasetError::DistanceLength { expected: width * height, got: m.width * m.height });
    }
    DistanceMap::new(m.width, m.height, m.distances)
}

pub fn write_distance_file(m: &DistanceMap) -> String {
    serde_json::to_string(m).expect("plain data")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectMode {
    /// Every active class appears at least once.
    #[default]
    MustContain,
    /// Every active class appears, and nothing outside the active set does.
    OnlyContain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionQuery {
    pub active_classes: BTreeSet<ObjectClass>,
    /// `None` means unlimited.
    pub max_people: Option<usize>,
    /// May be `f64::INFINITY`.
    pub max_dist_m: f64,
    pub mode: SelectMode,
}

impl SelectionQuery {
    pub fn new(active: &[ObjectClass], max_people: Option<usize>, max_dist_m: f64) -> Result<Self, DatasetError> {
        let q = Self {
            active_classes: active.iter().copied().collect(),
            max_people,
            max_dist_m,
            mode: SelectMode::MustContain,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.active_classes.is_empty() {
            return Err(DatasetError::Query("no active classes"));
        }
        if !(self.max_dist_m > 0.0) {
            return Err(DatasetError::Query("max distance must be positive"));
        }
        Ok(())
    }

    /// Objects without a known distance fail any finite distance bound.
    pub fn matches(&self, r: &SampleRecord) -> bool {
        let has_all = self.active_classes.iter().all(|&c| r.count(c) > 0);
        let only = match self.mode {
            SelectMode::MustContain => true,
            SelectMode::OnlyContain => r.objects.iter().all(|o| self.active_classes.contains(&o.cls)),
        };
        let people_ok = self.max_people.map_or(true, |m| r.count(ObjectClass::Person) <= m);
        let dist_ok = self.max_dist_m == f64::INFINITY
            || r.objects.iter().all(|o| o.distance_m.is_some_and(|d| d <= self.max_dist_m));
        has_all && only && people_ok && dist_ok
    }
}

/// Records satisfying the query, in input order.
pub fn select(records: &[SampleRecord], q: &SelectionQuery) -> Vec<SampleRecord> {
    records.iter().filter(|r| q.matches(r)).cloned().collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropSpec {
    pub person_bbox: BBox,
    pub output_size: (f64, f64),
}

impl CropSpec {
    fn scale(&self) -> (f64, f64) {
        (
            self.output_size.0 / self.person_bbox.width(),
            self.output_size.1 / self.person_bbox.height(),
        )
    }
}

/// Maps a box into the resized crop of `crop.person_bbox`, clamped to the
/// output frame.
pub fn crop_transform(obj: &BBox, crop: &CropSpec) -> Result<BBox, DatasetError> {
    let p = crop.person_bbox;
    if !p.is_proper() || !(crop.output_size.0 > 0.0 && crop.output_size.1 > 0.0) {
        return Err(DatasetError::BBox(p));
    }
    if obj.intersection(&p).is_none() {
        return Err(DatasetError::EmptyIntersection);
    }
    let (sx, sy) = crop.scale();
    let (wc, hc) = crop.output_size;
    let fx = |x: f64| ((x - p.x_min) * sx).clamp(0.0, wc);
    let fy = |y: f64| ((y - p.y_min) * sy).clamp(0.0, hc);
    Ok(BBox::new(fx(obj.x_min), fy(obj.y_min), fx(obj.x_max), fy(obj.y_max)))
}

/// Maps a box in the crop frame back to image coordinates.
pub fn crop_inverse(b: &BBox, crop: &CropSpec) -> BBox {
    let p = crop.person_bbox;
    let (sx, sy) = crop.scale();
    BBox::new(
        b.x_min / sx + p.x_min,
        b.y_min / sy + p.y_min,
        b.x_max / sx + p.x_min,
        b.y_max / sy + p.y_min,
    )
}

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

/// One-hot (phone, background) row per predicted box.
pub fn ground_truth_scores(pred: &[BBox], gt_phones: &[BBox], iou_threshold: f64) -> Result<Vec<[u8; 2]>, DatasetError> {
    if pred.is_empty() {
        return Err(DatasetError::NoPredictions);
    }
    Ok(pred
        .iter()
        .map(|p| {
            let best = gt_phones.iter().map(|g| p.iou(g)).fold(0.0, f64::max);
            if best >= iou_threshold {
                [1, 0]
            } else {
                [0, 1]
            }
        })
        .collect())
}

/// Training sample derived from one person box: the phone boxes that
/// overlap it, expressed in the resized crop frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CropLabel {
    pub source_id: String,
    pub person_index: usize,
    pub person_bbox: BBox,
    pub phones: Vec<BBox>,
}

pub fn make_crop_labels(r: &SampleRecord, output_size: (f64, f64)) -> Vec<CropLabel> {
    let phones: Vec<BBox> = r.objects.iter().filter(|o| o.cls == ObjectClass::Phone).map(|o| o.bbox).collect();
    r.objects
        .iter()
        .filter(|o| o.cls == ObjectClass::Person)
        .enumerate()
        .map(|(k, person)| {
            let crop = CropSpec { person_bbox: person.bbox, output_size };
            CropLabel {
                source_id: r.id.clone(),
                person_index: k,
                person_bbox: person.bbox,
                phones: phones.iter().filter_map(|b| crop_transform(b, &crop).ok()).collect(),
            }
        })
        .collect()
}

/// Reads `label/*.xml` in file-name order, attaching distances from
/// `image/distance/<id>.json` where that file exists.
pub fn load_corpus(dir: &Path) -> Result<Vec<SampleRecord>, DatasetError> {
    let mut paths: Vec<_> = fs::read_dir(dir.join("label"))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "xml"))
        .collect();
    paths.sort();
    let mut out = Vec::with_capacity(paths.len());
    for p in paths {
        let mut rec = parse_label_file(&fs::read(&p)?)?;
        let dist = dir.join("image").join("distance").join(format!("{}.json", rec.id));
        if dist.exists() {
            let (w, h, _) = rec.image_size;
            let map = parse_distance_file(&fs::read(&dist)?, w as usize, h as usize)?;
            rec.attach_distances(&map);
        }
        out.push(rec);
    }
    Ok(out)
}

fn random_box<R: Rng + ?Sized>(rng: &mut R, w: u32, h: u32, min: f64, max: f64) -> BBox {
    let bw = rng.gen_range(min..max).min(w as f64 - 1.0);
    let bh = rng.gen_range(min..max).min(h as f64 - 1.0);
    let x = rng.gen_range(0.0..(w as f64 - bw)).floor();
    let y = rng.gen_range(0.0..(h as f64 - bh)).floor();
    BBox::new(x, y, x + bw.ceil(), y + bh.ceil())
}

/// Random record with 0–8 people, 0–3 phones and 0–2 laptops, each with a
/// distance drawn from [0.5, 40) m.
pub fn synth_record<R: Rng + ?Sized>(rng: &mut R, id: &str, width: u32, height: u32) -> SampleRecord {
    let mut objects = Vec::new();
    let counts = [
        (ObjectClass::Person, rng.gen_range(0..=8), 20.0, 60.0),
        (ObjectClass::Phone, rng.gen_range(0..=3), 3.0, 10.0),
        (ObjectClass::Laptop, rng.gen_range(0..=2), 8.0, 25.0),
    ];
    for (cls, n, lo, hi) in counts {
        for _ in 0..n {
            let bbox = random_box(rng, width, height, lo, hi);
            let d = (rng.gen_range(0.5..40.0) * 100.0f64).round() / 100.0;
            objects.push(LabeledObject { cls, bbox, distance_m: Some(d) });
        }
    }
    SampleRecord {
        id: id.to_owned(),
        image_size: (width, height, 3),
        objects,
        distance_ref: Some(format!("image/distance/{id}.json")),
    }
}

/// Distance map that reproduces each object's distance at its box center
/// and holds `background_m` elsewhere.
pub fn synth_distance_map(r: &SampleRecord, background_m: f64) -> DistanceMap {
    let (w, h, _) = r.image_size;
    let (w, h) = (w as usize, h as usize);
    let mut m = DistanceMap { width: w, height: h, distances: vec![background_m; w * h] };
    for o in &r.objects {
        if let Some(d) = o.distance_m {
            let (cx, cy) = o.bbox.center();
            let x = (cx.floor() as usize).min(w - 1);
            let y = (cy.floor() as usize).min(h - 1);
            m.distances[y * w + x] = d;
        }
    }
    m
}

/// Writes `count` synthetic records under `dir` in the corpus layout.
pub fn write_synthetic_corpus<R: Rng + ?Sized>(dir: &Path, count: usize, rng: &mut R) -> Result<(), DatasetError> {
    let labels = dir.join("label");
    let dists = dir.join("image").join("distance");
    fs::create_dir_all(&labels)?;
    fs::create_dir_all(&dists)?;
    for i in 0..count {
        let id = format!("{i:06}");
        let rec = synth_record(rng, &id, 160, 120);
        fs::write(labels.join(format!("{id}.xml")), write_label_file(&rec))?;
        fs::write(dists.join(format!("{id}.json")), write_distance_file(&synth_distance_map(&rec, 50.0)))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::rng_from_seed;
    use proptest::prelude::*;

    const FIXTURE: &str = r#"<annotation>
  <filename>scene_0001</filename>
  <size><width>640</width><height>480</height><depth>3</depth></size>
  <object><name>person</name><bndbox><xmin>100</xmin><ymin>100</ymin><xmax>300</xmax><ymax>300</ymax></bndbox></object>
  <object><name>P</name><bndbox><xmin>110</xmin><ymin>120</ymin><xmax>130</xmax><ymax>140</ymax></bndbox><distance>4.5</distance></object>
</annotation>"#;

    #[test]
    fn parse_fixture() {
        let r = parse_label_file(FIXTURE.as_bytes()).unwrap();
        assert_eq!(r.id, "scene_0001");
        assert_eq!(r.image_size, (640, 480, 3));
        assert_eq!(r.objects.len(), 2);
        assert_eq!(r.objects[0].cls, ObjectClass::Person);
        assert_eq!(r.objects[1].cls, ObjectClass::Phone);
        assert_eq!(r.objects[1].distance_m, Some(4.5));
        assert_eq!(r.objects[0].distance_m, None);
    }

    #[test]
    fn parse_rejections() {
        let empty = "<annotation><filename>a</filename><size><width>4</width><height>4</height><depth>3</depth></size></annotation>";
        assert!(parse_label_file(empty.as_bytes()).unwrap().objects.is_empty());
        let degenerate = FIXTURE.replace("<xmax>130</xmax>", "<xmax>110</xmax>");
        assert!(matches!(parse_label_file(degenerate.as_bytes()), Err(DatasetError::BBox(_))));
        let outside = FIXTURE.replace("<xmax>300</xmax>", "<xmax>700</xmax>");
        assert!(matches!(parse_label_file(outside.as_bytes()), Err(DatasetError::BBox(_))));
        let unknown = FIXTURE.replace("<name>P</name>", "<name>dog</name>");
        assert!(matches!(parse_label_file(unknown.as_bytes()), Err(DatasetError::UnknownClass(_))));
        assert!(matches!(parse_label_file(b"<annotation>"), Err(DatasetError::Xml(_))));
        let nosize = "<annotation><filename>a</filename></annotation>";
        assert!(matches!(parse_label_file(nosize.as_bytes()), Err(DatasetError::Missing("size"))));
    }

    #[test]
    fn distance_maps() {
        let zeros = parse_distance_file(br#"{"width":2,"height":1,"distances":[0,0]}"#, 2, 1).unwrap();
        assert_eq!(zeros.at(1, 0), 0.0);
        let five = DistanceMap::new(3, 3, vec![5.0; 9]).unwrap();
        assert!((0..3).all(|x| (0..3).all(|y| five.at(x, y) == 5.0)));
        let m = parse_distance_file(br#"{"width":2,"height":2,"distances":[1,2,3,4]}"#, 2, 2).unwrap();
        assert_eq!((m.at(0, 0), m.at(1, 0), m.at(0, 1), m.at(1, 1)), (1.0, 2.0, 3.0, 4.0));
        assert_eq!(m.at_center(&BBox::new(1.0, 1.0, 2.0, 2.0)), 4.0);
        assert!(matches!(
            parse_distance_file(br#"{"width":2,"height":2,"distances":[1,2,3]}"#, 2, 2),
            Err(DatasetError::DistanceLength { .. })
        ));
        assert!(parse_distance_file(br#"{"width":1,"height":1,"distances":[-1]}"#, 1, 1).is_err());
        assert!(parse_distance_file(br#"{"width":1,"height":1,"distances":[1]}"#, 2, 1).is_err());
    }

    #[test]
    fn crop_examples() {
        let crop = CropSpec { person_bbox: BBox::new(100.0, 100.0, 300.0, 300.0), output_size: (512.0, 512.0) };
        let b = crop_transform(&BBox::new(110.0, 120.0, 130.0, 140.0), &crop).unwrap();
        assert_eq!(b, BBox::new(25.6, 51.2, 76.8, 102.4));
        assert_eq!(crop_transform(&crop.person_bbox, &crop).unwrap(), BBox::new(0.0, 0.0, 512.0, 512.0));
        let corner = crop_transform(&BBox::new(100.0, 100.0, 101.0, 101.0), &crop).unwrap();
        assert_eq!((corner.x_min, corner.y_min), (0.0, 0.0));
        assert!(corner.x_max < 3.0);
        assert!(matches!(
            crop_transform(&BBox::new(0.0, 0.0, 50.0, 50.0), &crop),
            Err(DatasetError::EmptyIntersection)
        ));
    }

    #[test]
    fn score_examples() {
        let g = BBox::new(0.0, 0.0, 10.0, 10.0);
        assert_eq!(ground_truth_scores(&[g], &[g], 0.5).unwrap(), vec![[1, 0]]);
        let far = BBox::new(20.0, 20.0, 30.0, 30.0);
        assert_eq!(ground_truth_scores(&[far], &[g], 0.5).unwrap(), vec![[0, 1]]);
        let shifted = BBox::new(5.0, 5.0, 15.0, 15.0);
        assert!((g.iou(&shifted) - 1.0 / 7.0).abs() < 1e-15);
        assert_eq!(ground_truth_scores(&[shifted], &[g], 0.5).unwrap(), vec![[0, 1]]);
        assert!(ground_truth_scores(&[], &[g], 0.5).is_err());
        assert_eq!(ground_truth_scores(&[g], &[], 0.5).unwrap(), vec![[0, 1]]);
    }

    #[test]
    fn select_examples() {
        let mut rng = rng_from_seed(21);
        let recs: Vec<_> = (0..50).map(|i| synth_record(&mut rng, &i.to_string(), 160, 120)).collect();
        let all = SelectionQuery::new(&[ObjectClass::Person], None, f64::INFINITY).unwrap();
        let with_person: Vec<_> = recs.iter().filter(|r| r.count(ObjectClass::Person) > 0).cloned().collect();
        assert_eq!(select(&recs, &all), with_person);
        let phones = SelectionQuery::new(&[ObjectClass::Phone], None, f64::INFINITY).unwrap();
        let got = select(&recs, &phones);
        assert!(!got.is_empty() && got.iter().all(|r| r.count(ObjectClass::Phone) > 0));
        assert!(SelectionQuery::new(&[], None, 1.0).is_err());
        assert!(SelectionQuery::new(&[ObjectClass::Phone], None, 0.0).is_err());

        let mut strict = phones.clone();
        strict.mode = SelectMode::OnlyContain;
        assert!(select(&recs, &strict).iter().all(|r| r.objects.iter().all(|o| o.cls == ObjectClass::Phone)));
    }

    #[test]
    fn missing_distance_fails_finite_bound() {
        let r = parse_label_file(FIXTURE.as_bytes()).unwrap();
        let q = SelectionQuery::new(&[ObjectClass::Phone], None, 100.0).unwrap();
        assert!(select(std::slice::from_ref(&r), &q).is_empty());
        let mut with = r.clone();
        with.attach_distances(&DistanceMap::new(640, 480, vec![3.0; 640 * 480]).unwrap());
        assert_eq!(select(std::slice::from_ref(&with), &q).len(), 1);
    }

    #[test]
    fn crop_labels() {
        let r = parse_label_file(FIXTURE.as_bytes()).unwrap();
        let labels = make_crop_labels(&r, (512.0, 512.0));
        assert_eq!(labels.len(), 1);
        assert_eq!(labels[0].phones, vec![BBox::new(25.6, 51.2, 76.8, 102.4)]);
    }

    #[test]
    fn corpus_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        write_synthetic_corpus(dir.path(), 5, &mut rng_from_seed(2)).unwrap();
        let recs = load_corpus(dir.path()).unwrap();
        assert_eq!(recs.len(), 5);
        let mut rng = rng_from_seed(2);
        for (i, r) in recs.iter().enumerate() {
            let expect = synth_record(&mut rng, &format!("{i:06}"), 160, 120);
            // Distances come back from the map; overlapping centers keep the last writer.
            assert_eq!(r.objects.len(), expect.objects.len());
            assert_eq!(r.id, expect.id);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn label_roundtrip(seed in any::<u64>()) {
            let r = synth_record(&mut rng_from_seed(seed), "rec", 160, 120);
            prop_assert_eq!(parse_label_file(write_label_file(&r).as_bytes()).unwrap(), r);
        }
    }

    proptest! {
        #[test]
        fn select_is_idempotent_subsequence(seed in any::<u64>(), people in 0usize..8, dist in 1.0..50.0f64, phone in any::<bool>()) {
            let mut rng = rng_from_seed(seed);
            let recs: Vec<_> = (0..40).map(|i| synth_record(&mut rng, &i.to_string(), 160, 120)).collect();
            let cls = if phone { ObjectClass::Phone } else { ObjectClass::Laptop };
            let q = SelectionQuery::new(&[ObjectClass::Person, cls], Some(people), dist).unwrap();
            let once = select(&recs, &q);
            prop_assert_eq!(select(&once, &q), once.clone());
            let mut it = recs.iter();
            prop_assert!(once.iter().all(|r| it.any(|x| x == r)));
        }

        #[test]
        fn crop_inverse_recovers_box(
            px in 0.0..100.0f64, py in 0.0..100.0f64, pw in 10.0..200.0f64, ph in 10.0..200.0f64,
            fx in 0.0..0.8f64, fy in 0.0..0.8f64, fw in 0.05..0.2f64, fh in 0.05..0.2f64,
            wc in 16.0..1024.0f64, hc in 16.0..1024.0f64,
        ) {
            let person = BBox::new(px, py, px + pw, py + ph);
            let obj = BBox::new(px + fx * pw, py + fy * ph, px + (fx + fw) * pw, py + (fy + fh) * ph);
            let crop = CropSpec { person_bbox: person, output_size: (wc, hc) };
            let back = crop_inverse(&crop_transform(&obj, &crop).unwrap(), &crop);
            for (a, b) in [(back.x_min, obj.x_min), (back.y_min, obj.y_min), (back.x_max, obj.x_max), (back.y_max, obj.y_max)] {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn score_rows_are_one_hot(seed in any::<u64>()) {
            let mut rng = rng_from_seed(seed);
            let pred: Vec<_> = (0..5).map(|_| random_box(&mut rng, 100, 100, 5.0, 30.0)).collect();
            let gt: Vec<_> = (0..3).map(|_| random_box(&mut rng, 100, 100, 5.0, 30.0)).collect();
            for row in ground_truth_scores(&pred, &gt, 0.5).unwrap() {
                prop_assert_eq!(row[0] + row[1], 1);
            }
        }
    }
}
