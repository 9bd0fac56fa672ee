//! XOR and RGB-cube training sets, plus the on-disk dataset format.
//!
//! Files are comma-separated text with a version line, a header row and one
//! row per example:
//!
//! ```text
//! # langbp-dataset v1 input_dim=2 word_count=2 output_dim=2
//! x_1,x_2,word,d_1,d_2
//! 0,0,1,1,
//! ```
//!
//! An empty `d_*` cell is an unspecified desired value. Polarity is not
//! stored; an example is positive when one of its specified slots is at
//! least 0.5.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::network::WordId;
use crate::training::{Polarity, TrainingExample};

pub const DATASET_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "# langbp-dataset";

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub input_dim: usize,
    pub word_count: u32,
    pub output_dim: usize,
    pub examples: Vec<TrainingExample>,
}

/// Input vector with the apartment expected to win when no word is given.
#[derive(Clone, Debug, PartialEq)]
pub struct WordlessCase {
    pub x: Vec<f64>,
    pub expected_apartment: usize,
}

impl Dataset {
    pub fn new(
        input_dim: usize,
        word_count: u32,
        output_dim: usize,
        examples: Vec<TrainingExample>,
    ) -> Result<Self> {
        let ds = Dataset {
            input_dim,
            word_count,
            output_dim,
            examples,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(Error::Dataset("dimensions must be positive".into()));
        }
        for (row, ex) in self.examples.iter().enumerate() {
            let bad = |msg: String| Error::Dataset(format!("example {row}: {msg}"));
            if ex.x.len() != self.input_dim {
                return Err(bad(format!(
                    "{} input components, expected {}",
                    ex.x.len(),
                    self.input_dim
                )));
            }
            if ex.desired.len() != self.output_dim {
                return Err(bad(format!(
                    "{} desired slots, expected {}",
                    ex.desired.len(),
                    self.output_dim
                )));
            }
            if ex.word.value() > self.word_count {
                return Err(bad(format!(
                    "word {} exceeds word_count {}",
                    ex.word, self.word_count
                )));
            }
            if let Some(v) = ex.x.iter().find(|v| !v.is_finite()) {
                return Err(bad(format!("input component {v} is not finite")));
            }
            if let Some(v) = ex
                .specified_slots()
                .map(|(_, d)| d)
                .find(|d| !(0.0..=1.0).contains(d))
            {
                return Err(bad(format!("desired value {v} outside [0, 1]")));
            }
            if ex.specified_slots().next().is_none() {
                return Err(bad("no desired slot is specified".into()));
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut out = format!(
            "{MAGIC} v{DATASET_FORMAT_VERSION} input_dim={} word_count={} output_dim={}\n",
            self.input_dim, self.word_count, self.output_dim
        );
        let mut writer = csv::Writer::from_writer(Vec::new());
        let header: Vec<String> = (1..=self.input_dim)
            .map(|i| format!("x_{i}"))
            .chain(std::iter::once("word".to_string()))
            .chain((1..=self.output_dim).map(|i| format!("d_{i}")))
            .collect();
        writer.write_record(&header)?;
        for ex in &self.examples {
            let record: Vec<String> =
                ex.x.iter()
                    .map(f64::to_string)
                    .chain(std::iter::once(ex.word.to_string()))
                    .chain(
                        ex.desired
                            .iter()
                            .map(|d| d.map(|v| v.to_string()).unwrap_or_default()),
                    )
                    .collect();
            writer.write_record(&record)?;
        }
        let body = writer
            .into_inner()
            .map_err(|e| Error::Dataset(e.to_string()))?;
        out.push_str(std::str::from_utf8(&body).expect("csv output is utf-8"));
        Ok(out)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
        let (input_dim, word_count, output_dim) = parse_version_line(first.trim_end())?;

        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(rest.as_bytes());
        let header = reader.headers()?.clone();
        let expected: Vec<String> = (1..=input_dim)
            .map(|i| format!("x_{i}"))
            .chain(std::iter::once("word".to_string()))
            .chain((1..=output_dim).map(|i| format!("d_{i}")))
            .collect();
        if header.iter().ne(expected.iter().map(String::as_str)) {
            return Err(Error::Dataset(format!(
                "header {:?} does not match declared dimensions",
                header.iter().collect::<Vec<_>>()
            )));
        }

        let mut examples = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let bad = |msg: String| Error::Dataset(format!("row {}: {msg}", row + 1));
            let number = |cell: &str| -> Result<f64> {
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| bad(format!("invalid number {cell:?}")))
            };
            let x = (0..input_dim)
                .map(|i| number(&record[i]))
                .collect::<Result<Vec<_>>>()?;
            let word: u32 = record[input_dim]
                .parse()
                .map_err(|_| bad(format!("invalid word {:?}", &record[input_dim])))?;
            let desired = (0..output_dim)
                .map(|i| {
                    let cell = &record[input_dim + 1 + i];
                    if cell.is_empty() {
                        Ok(None)
                    } else {
                        number(cell).map(Some)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let polarity = infer_polarity(&desired);
            examples.push(TrainingExample::new(x, word, desired, polarity));
        }
        Dataset::new(input_dim, word_count, output_dim, examples)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv_string()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Dataset::from_csv_str(&text)
    }

    /// SHA-256 of the canonical file encoding, hex encoded.
    pub fn fingerprint(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(
            self.to_csv_string()?.as_bytes(),
        )))
    }
}

pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    ds.save(path)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    Dataset::load(path)
}

fn parse_version_line(line: &str) -> Result<(usize, u32, usize)> {
    let bad = || Error::Dataset(format!("bad version line {line:?}"));
    let rest = line.strip_prefix(MAGIC).ok_or_else(bad)?;
    let mut parts = rest.split_whitespace();
    let version = parts.next().ok_or_else(bad)?;
    if version != format!("v{DATASET_FORMAT_VERSION}") {
        return Err(Error::Dataset(format!(
            "unsupported dataset version {version}"
        )));
    }
    let (mut input_dim, mut word_count, mut output_dim) = (None, None, None);
    for part in parts {
        let (key, value) = part.split_once('=').ok_or_else(bad)?;
        match key {
            "input_dim" => input_dim = value.parse().ok(),
            "word_count" => word_count = value.parse().ok(),
            "output_dim" => output_dim = value.parse().ok(),
            _ => return Err(bad()),
        }
    }
    Ok((
        input_dim.ok_or_else(bad)?,
        word_count.ok_or_else(bad)?,
        output_dim.ok_or_else(bad)?,
    ))
}

fn infer_polarity(desired: &[Option<f64>]) -> Polarity {
    if desired.iter().flatten().any(|&d| d >= 0.5) {
        Polarity::Positive
    } else {
        Polarity::Negative
    }
}

const XOR_INPUTS: [[f64; 2]; 4] = [[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]];

/// Category (1-based word) of an XOR input: word 1 collects the equal
/// pairs, word 2 the unequal ones.
fn xor_class(x: &[f64; 2]) -> u32 {
    if x[0] == x[1] {
        1
    } else {
        2
    }
}

/// The eight word-accompanied XOR examples: every input paired with its own
/// word (positive, desired 1) and with the other word (negative, desired 0).
/// Only the presented word's slot is specified.
pub fn xor_dataset() -> Dataset {
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for x in XOR_INPUTS {
        let class = xor_class(&x);
        for word in 1..=2u32 {
            let mut desired = vec![None; 2];
            let (target, bucket) = if word == class {
                (1.0, &mut positives)
            } else {
                (0.0, &mut negatives)
            };
            desired[word as usize - 1] = Some(target);
            let polarity = infer_polarity(&desired);
            bucket.push(TrainingExample::new(x.to_vec(), word, desired, polarity));
        }
    }
    // Table order: positives grouped by word, negatives by the other word.
    positives.sort_by_key(|e| e.word);
    negatives.sort_by_key(|e| std::cmp::Reverse(e.word));
    positives.extend(negatives);
    Dataset::new(2, 2, 2, positives).expect("xor dataset is valid")
}

/// XOR examples with every null replaced by 0, plus the four word-less
/// inputs with their one-hot category as desired output.
pub fn xor_complete_dataset() -> Dataset {
    let mut examples: Vec<TrainingExample> = xor_dataset()
        .examples
        .into_iter()
        .map(|mut ex| {
            ex.desired
                .iter_mut()
                .for_each(|d| *d = Some(d.unwrap_or(0.0)));
            ex
        })
        .collect();
    for x in XOR_INPUTS {
        let class = xor_class(&x);
        let desired = (1..=2u32)
            .map(|w| Some(if w == class { 1.0 } else { 0.0 }))
            .collect();
        examples.push(TrainingExample::new(
            x.to_vec(),
            WordId::NONE,
            desired,
            Polarity::Positive,
        ));
    }
    Dataset::new(2, 2, 2, examples).expect("complete xor dataset is valid")
}

pub fn xor_wordless_cases() -> Vec<WordlessCase> {
    [[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]]
        .into_iter()
        .map(|x| WordlessCase {
            expected_apartment: xor_class(&x) as usize - 1,
            x: x.to_vec(),
        })
        .collect()
}

/// RGB cube vertices in word order (word = index + 1).
pub const RGB_VERTICES: [(&str, [u8; 3]); 8] = [
    ("Black", [0, 0, 0]),
    ("Blue", [0, 0, 255]),
    ("Magenta", [255, 0, 255]),
    ("Red", [255, 0, 0]),
    ("Yellow", [255, 255, 0]),
    ("Green", [0, 255, 0]),
    ("Cyan", [0, 255, 255]),
    ("White", [255, 255, 255]),
];

pub const RGB_DEFAULT_OFFSETS: [f64; 4] = [8.0, 16.0, 24.0, 32.0];

/// Geometry and units of the RGB training set.
#[derive(Clone, Debug, PartialEq)]
pub struct RgbOptions {
    /// Distances from the vertex, in 0-255 units, at which points are placed
    /// along each inward direction.
    pub offsets: Vec<f64>,
    /// Colour components are divided by this before reaching the network.
    /// `1.0` keeps raw 0-255 values, `255.0` maps them onto `[0, 1]`.
    pub input_divisor: f64,
}

impl Default for RgbOptions {
    fn default() -> Self {
        RgbOptions {
            offsets: RGB_DEFAULT_OFFSETS.to_vec(),
            input_divisor: 1.0,
        }
    }
}

/// Inward directions from a vertex as axis masks: three axes, three face
/// diagonals, one body diagonal.
const INWARD_MASKS: [[bool; 3]; 7] = [
    [true, false, false],
    [false, true, false],
    [false, false, true],
    [true, true, false],
    [true, false, true],
    [false, true, true],
    [true, true, true],
];

/// The vertex plus points pushed toward the cube interior along each inward
/// direction at every offset, in 0-255 units.
pub fn rgb_points_around(vertex: [u8; 3], offsets: &[f64]) -> Vec<[f64; 3]> {
    let base = vertex.map(f64::from);
    let mut points = vec![base];
    for mask in INWARD_MASKS {
        for &r in offsets {
            let mut p = base;
            for axis in 0..3 {
                if mask[axis] {
                    p[axis] += if vertex[axis] == 0 { r } else { -r };
                }
            }
            points.push(p);
        }
    }
    points
}

/// RGB set with default geometry, in raw 0-255 units.
pub fn rgb_dataset() -> Dataset {
    rgb_dataset_with(&RgbOptions::default())
}

/// Every sample point paired with all eight words. The presented word's
/// slot is 1 when it names the point's vertex and 0 otherwise; every other
/// slot is unspecified.
pub fn rgb_dataset_with(options: &RgbOptions) -> Dataset {
    let words = RGB_VERTICES.len();
    let mut examples = Vec::with_capacity(words * (1 + 7 * options.offsets.len()) * words);
    for (class, (_, vertex)) in RGB_VERTICES.iter().enumerate() {
        for point in rgb_points_around(*vertex, &options.offsets) {
            let x: Vec<f64> = point.iter().map(|c| c / options.input_divisor).collect();
            for word in 0..words {
                let mut desired = vec![None; words];
                let (target, polarity) = if word == class {
                    (1.0, Polarity::Positive)
                } else {
                    (0.0, Polarity::Negative)
                };
                desired[word] = Some(target);
                examples.push(TrainingExample::new(
                    x.clone(),
                    word as u32 + 1,
                    desired,
                    polarity,
                ));
            }
        }
    }
    Dataset::new(3, words as u32, words, examples).expect("rgb dataset is valid")
}

/// The eight cube vertices in raw 0-255 units, each expected to select its
/// own apartment.
pub fn rgb_vertex_cases() -> Vec<WordlessCase> {
    rgb_vertex_cases_with(&RgbOptions::default())
}

pub fn rgb_vertex_cases_with(options: &RgbOptions) -> Vec<WordlessCase> {
    RGB_VERTICES
        .iter()
        .enumerate()
        .map(|(i, (_, v))| WordlessCase {
            x: v.iter()
                .map(|&c| f64::from(c) / options.input_divisor)
                .collect(),
            expected_apartment: i,
        })
        .collect()
}
