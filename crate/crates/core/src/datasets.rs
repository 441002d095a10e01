//! MNIST IDX and CIFAR-10 binary readers and the binary-task preprocessing
//! pipeline (grayscale, resize, flatten, unit ℓ2 columns).

use std::fmt;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{l2_norm, Matrix, SeededRng};

const IDX_IMAGES: u32 = 0x0000_0803;
const IDX_LABELS: u32 = 0x0000_0801;
pub const CIFAR_RECORD: usize = 3073;
const CIFAR_SIDE: usize = 32;

/// 8-bit images with class labels. Each image is stored channel-planar:
/// all of channel 0 row by row, then channel 1, and so on.
#[derive(Debug, Clone, PartialEq)]
pub struct RawImageSet {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub images: Vec<Vec<u8>>,
    pub labels: Vec<u8>,
}

impl RawImageSet {
    pub fn new(
        height: usize,
        width: usize,
        channels: usize,
        images: Vec<Vec<u8>>,
        labels: Vec<u8>,
    ) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::Data(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        let px = height * width * channels;
        if let Some(i) = images.iter().position(|im| im.len() != px) {
            return Err(Error::Data(format!(
                "image {i} has {} bytes, expected {px}",
                images[i].len()
            )));
        }
        Ok(RawImageSet {
            height,
            width,
            channels,
            images,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }
}

/// Decoded contents of one IDX file.
#[derive(Debug, Clone, PartialEq)]
pub enum IdxContents {
    Images {
        rows: usize,
        cols: usize,
        pixels: Vec<Vec<u8>>,
    },
    Labels(Vec<u8>),
}

fn be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Parse {
            offset: bytes.len(),
            msg: format!("header truncated, need 4 bytes at {offset}"),
        })
}

/// Parses an IDX image (`0x00000803`) or label (`0x00000801`) file.
pub fn parse_idx(bytes: &[u8]) -> Result<IdxContents> {
    let magic = be_u32(bytes, 0)?;
    match magic {
        IDX_IMAGES => {
            let count = be_u32(bytes, 4)? as usize;
            let rows = be_u32(bytes, 8)? as usize;
            let cols = be_u32(bytes, 12)? as usize;
            let px = rows
                .checked_mul(cols)
                .ok_or_else(|| Error::Parse {
                    offset: 8,
                    msg: "image dimensions overflow".into(),
                })?;
            let payload = count.checked_mul(px).ok_or_else(|| Error::Parse {
                offset: 4,
                msg: "payload size overflows".into(),
            })?;
            let body = &bytes[16..];
            if body.len() != payload {
                return Err(Error::Parse {
                    offset: 16 + body.len().min(payload),
                    msg: format!("expected {payload} pixel bytes, found {}", body.len()),
                });
            }
            let pixels = if px == 0 {
                vec![Vec::new(); count]
            } else {
                body.chunks_exact(px).map(<[u8]>::to_vec).collect()
            };
            Ok(IdxContents::Images { rows, cols, pixels })
        }
        IDX_LABELS => {
            let count = be_u32(bytes, 4)? as usize;
            let body = &bytes[8..];
            if body.len() != count {
                return Err(Error::Parse {
                    offset: 8 + body.len().min(count),
                    msg: format!("expected {count} labels, found {}", body.len()),
                });
            }
            Ok(IdxContents::Labels(body.to_vec()))
        }
        other => Err(Error::Parse {
            offset: 0,
            msg: format!("bad IDX magic {other:#010x}"),
        }),
    }
}

impl IdxContents {
    /// Serializes back to the IDX layout accepted by [`parse_idx`].
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let u32_of = |v: usize| {
            u32::try_from(v).map_err(|_| Error::invalid(format!("{v} does not fit an IDX header")))
        };
        let mut out = Vec::new();
        match self {
            IdxContents::Images { rows, cols, pixels } => {
                out.extend_from_slice(&IDX_IMAGES.to_be_bytes());
                out.extend_from_slice(&u32_of(pixels.len())?.to_be_bytes());
                out.extend_from_slice(&u32_of(*rows)?.to_be_bytes());
                out.extend_from_slice(&u32_of(*cols)?.to_be_bytes());
                for (i, img) in pixels.iter().enumerate() {
                    if img.len() != rows * cols {
                        return Err(Error::Data(format!("image {i} has {} bytes", img.len())));
                    }
                    out.extend_from_slice(img);
                }
            }
            IdxContents::Labels(labels) => {
                out.extend_from_slice(&IDX_LABELS.to_be_bytes());
                out.extend_from_slice(&u32_of(labels.len())?.to_be_bytes());
                out.extend_from_slice(labels);
            }
        }
        Ok(out)
    }
}

/// Combines an IDX image file and its label file into one set.
pub fn mnist_from_idx(images: &[u8], labels: &[u8]) -> Result<RawImageSet> {
    let (rows, cols, pixels) = match parse_idx(images)? {
        IdxContents::Images { rows, cols, pixels } => (rows, cols, pixels),
        IdxContents::Labels(_) => {
            return Err(Error::Data("expected an image file, got labels".into()))
        }
    };
    let labels = match parse_idx(labels)? {
        IdxContents::Labels(l) => l,
        IdxContents::Images { .. } => {
            return Err(Error::Data("expected a label file, got images".into()))
        }
    };
    RawImageSet::new(rows, cols, 1, pixels, labels)
}

/// Parses concatenated CIFAR-10 binary records (label byte + 3×32×32 pixels).
pub fn parse_cifar10_bin(bytes: &[u8]) -> Result<RawImageSet> {
    if bytes.len() % CIFAR_RECORD != 0 {
        return Err(Error::Parse {
            offset: bytes.len() - bytes.len() % CIFAR_RECORD,
            msg: format!(
                "length {} is not a multiple of {CIFAR_RECORD}",
                bytes.len()
            ),
        });
    }
    let mut images = Vec::with_capacity(bytes.len() / CIFAR_RECORD);
    let mut labels = Vec::with_capacity(bytes.len() / CIFAR_RECORD);
    for rec in bytes.chunks_exact(CIFAR_RECORD) {
        labels.push(rec[0]);
        images.push(rec[1..].to_vec());
    }
    RawImageSet::new(CIFAR_SIDE, CIFAR_SIDE, 3, images, labels)
}

impl RawImageSet {
    /// IDX image and label files for a single-channel set.
    pub fn to_idx(&self) -> Result<(Vec<u8>, Vec<u8>)> {
        if self.channels != 1 {
            return Err(Error::invalid("IDX export needs a single channel"));
        }
        let images = IdxContents::Images {
            rows: self.height,
            cols: self.width,
            pixels: self.images.clone(),
        };
        Ok((images.to_bytes()?, IdxContents::Labels(self.labels.clone()).to_bytes()?))
    }

    /// CIFAR-10 binary records; needs 3×32×32 images.
    pub fn to_cifar10_bin(&self) -> Result<Vec<u8>> {
        if (self.height, self.width, self.channels) != (CIFAR_SIDE, CIFAR_SIDE, 3) {
            return Err(Error::invalid("CIFAR-10 export needs 3×32×32 images"));
        }
        let mut out = Vec::with_capacity(self.len() * CIFAR_RECORD);
        for (label, img) in self.labels.iter().zip(&self.images) {
            out.push(*label);
            out.extend_from_slice(img);
        }
        Ok(out)
    }
}

/// Transparently gunzips when the gzip magic is present.
pub fn maybe_gunzip(bytes: Vec<u8>) -> Result<Vec<u8>> {
    if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        flate2::read::GzDecoder::new(&bytes[..]).read_to_end(&mut out)?;
        Ok(out)
    } else {
        Ok(bytes)
    }
}

fn read_first(dir: &Path, names: &[&str]) -> Result<Vec<u8>> {
    for name in names {
        for candidate in [name.to_string(), format!("{name}.gz")] {
            let p = dir.join(&candidate);
            if p.is_file() {
                return maybe_gunzip(std::fs::read(&p)?);
            }
        }
    }
    Err(Error::Data(format!(
        "none of {names:?} (optionally .gz) found in {}",
        dir.display()
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// Loads the MNIST split from the standard file names in `dir`.
pub fn load_mnist_dir(dir: &Path, split: Split) -> Result<RawImageSet> {
    let prefix = match split {
        Split::Train => "train",
        Split::Test => "t10k",
    };
    let images = read_first(
        dir,
        &[
            &format!("{prefix}-images-idx3-ubyte"),
            &format!("{prefix}-images.idx3-ubyte"),
        ],
    )?;
    let labels = read_first(
        dir,
        &[
            &format!("{prefix}-labels-idx1-ubyte"),
            &format!("{prefix}-labels.idx1-ubyte"),
        ],
    )?;
    mnist_from_idx(&images, &labels)
}

/// Loads CIFAR-10 batches (`data_batch_{1..5}.bin` or `test_batch.bin`) from
/// `dir` or its `cifar-10-batches-bin` subdirectory.
pub fn load_cifar10_dir(dir: &Path, split: Split) -> Result<RawImageSet> {
    let base: PathBuf = if dir.join("cifar-10-batches-bin").is_dir() {
        dir.join("cifar-10-batches-bin")
    } else {
        dir.to_path_buf()
    };
    let names: Vec<String> = match split {
        Split::Train => (1..=5).map(|i| format!("data_batch_{i}.bin")).collect(),
        Split::Test => vec!["test_batch.bin".into()],
    };
    let mut bytes = Vec::new();
    for name in &names {
        bytes.extend(read_first(&base, &[name])?);
    }
    parse_cifar10_bin(&bytes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Mnist,
    Cifar10,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Mnist => "mnist",
            Source::Cifar10 => "cifar10",
        })
    }
}

impl FromStr for Source {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mnist" => Ok(Source::Mnist),
            "cifar10" | "cifar-10" | "cifar" => Ok(Source::Cifar10),
            _ => Err(Error::invalid(format!("unknown dataset source {s:?}"))),
        }
    }
}

/// One-vs-one task on a source dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaskSpec {
    pub source: Source,
    pub positive_class: u8,
    pub negative_class: u8,
    pub target_side: usize,
}

impl TaskSpec {
    pub fn new(source: Source, positive_class: u8, negative_class: u8) -> Result<Self> {
        if positive_class == negative_class {
            return Err(Error::InvalidTask(format!(
                "positive and negative class are both {positive_class}"
            )));
        }
        Ok(TaskSpec {
            source,
            positive_class,
            negative_class,
            target_side: 32,
        })
    }

    /// Digits 1 (positive) versus 7.
    pub fn mnist_1_vs_7() -> Self {
        TaskSpec::new(Source::Mnist, 1, 7).unwrap()
    }

    /// Airplane (class 0, positive) versus automobile (class 1).
    pub fn cifar_airplane_vs_automobile() -> Self {
        TaskSpec::new(Source::Cifar10, 0, 1).unwrap()
    }

    pub fn name(&self) -> String {
        format!(
            "{}_{}v{}",
            self.source, self.positive_class, self.negative_class
        )
    }
}

impl FromStr for TaskSpec {
    type Err = Error;

    /// Parses the [`TaskSpec::name`] form, e.g. `mnist_1v7` or `cifar10_0v1`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidTask(format!("expected <source>_<pos>v<neg>, got {s:?}"));
        let (source, classes) = s.rsplit_once('_').ok_or_else(bad)?;
        let (pos, neg) = classes.split_once('v').ok_or_else(bad)?;
        let class = |c: &str| c.parse::<u8>().ok().filter(|&c| c < 10).ok_or_else(bad);
        TaskSpec::new(source.parse()?, class(pos)?, class(neg)?)
    }
}

/// How images whose side differs from the target side are brought to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Resize {
    /// Bilinear interpolation on a corner-aligned grid.
    #[default]
    Bilinear,
    /// Center the image on a zero canvas (only enlarges).
    ZeroPad,
}

impl fmt::Display for Resize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Resize::Bilinear => "bilinear",
            Resize::ZeroPad => "zero_pad",
        })
    }
}

impl FromStr for Resize {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bilinear" => Ok(Resize::Bilinear),
            "zero_pad" | "zeropad" | "pad" => Ok(Resize::ZeroPad),
            _ => Err(Error::invalid(format!("unknown resize mode {s:?}"))),
        }
    }
}

/// Reduction of multi-channel images to one channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Grayscale {
    /// Unweighted mean of the channels.
    #[default]
    ChannelMean,
    /// ITU-R BT.601 luma weights (0.299, 0.587, 0.114).
    Luma,
}

impl fmt::Display for Grayscale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Grayscale::ChannelMean => "channel_mean",
            Grayscale::Luma => "luma",
        })
    }
}

impl FromStr for Grayscale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "channel_mean" | "mean" => Ok(Grayscale::ChannelMean),
            "luma" => Ok(Grayscale::Luma),
            _ => Err(Error::invalid(format!("unknown grayscale mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Preprocess {
    pub resize: Resize,
    pub grayscale: Grayscale,
}

/// Column-stacked unit-norm inputs with ±1 labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Matrix,
    y: Vec<f64>,
    name: String,
}

impl Dataset {
    /// Validates that every column has unit ℓ2 norm (within 1e-10) and every
    /// label is ±1.
    pub fn new(x: Matrix, y: Vec<f64>, name: impl Into<String>) -> Result<Self> {
        Dataset::check(&x, &y)?;
        for j in 0..x.cols() {
            let norm = l2_norm(&x.column(j));
            if (norm - 1.0).abs() > 1e-10 {
                return Err(Error::Data(format!("column {j} has norm {norm}, expected 1")));
            }
        }
        Ok(Dataset {
            x,
            y,
            name: name.into(),
        })
    }

    /// Like [`Dataset::new`] but without the unit-norm requirement, for
    /// synthetic instances that probe scaling behaviour.
    pub fn new_unnormalized(x: Matrix, y: Vec<f64>, name: impl Into<String>) -> Result<Self> {
        Dataset::check(&x, &y)?;
        Ok(Dataset {
            x,
            y,
            name: name.into(),
        })
    }

    fn check(x: &Matrix, y: &[f64]) -> Result<()> {
        if x.cols() != y.len() {
            return Err(Error::shape("Dataset::new", x.cols(), y.len()));
        }
        if let Some(i) = y.iter().position(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::Data(format!("label {i} is {}, expected ±1", y[i])));
        }
        Ok(())
    }

    /// `d × n` input matrix, one example per column.
    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn d(&self) -> usize {
        self.x.rows()
    }

    pub fn n(&self) -> usize {
        self.x.cols()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `(positives, negatives)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.y.iter().filter(|&&v| v > 0.0).count();
        (pos, self.y.len() - pos)
    }

    /// Keeps the listed examples in the listed order.
    pub fn select(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_columns(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            name: self.name.clone(),
        }
    }
}

/// Builds the ±1 task with default preprocessing.
pub fn build_binary_task(raw: &RawImageSet, spec: &TaskSpec) -> Result<Dataset> {
    build_binary_task_with(raw, spec, &Preprocess::default())
}

pub fn build_binary_task_with(
    raw: &RawImageSet,
    spec: &TaskSpec,
    pre: &Preprocess,
) -> Result<Dataset> {
    if raw.is_empty() {
        return Err(Error::InvalidTask("raw image set is empty".into()));
    }
    if spec.positive_class == spec.negative_class {
        return Err(Error::InvalidTask("positive class equals negative class".into()));
    }
    for class in [spec.positive_class, spec.negative_class] {
        if !raw.labels.contains(&class) {
            return Err(Error::InvalidTask(format!("class {class} absent from data")));
        }
    }
    let side = spec.target_side;
    let d = side * side;
    let keep: Vec<usize> = (0..raw.len())
        .filter(|&i| raw.labels[i] == spec.positive_class || raw.labels[i] == spec.negative_class)
        .collect();
    let n = keep.len();
    // fill X column by column through a transposed buffer
    let mut xt = vec![0.0; n * d];
    let mut y = Vec::with_capacity(n);
    for (col, &i) in keep.iter().enumerate() {
        let gray = to_gray(raw, &raw.images[i], pre.grayscale);
        let img = resize(&gray, raw.height, raw.width, side, pre.resize)?;
        let norm = l2_norm(&img);
        if norm == 0.0 {
            return Err(Error::Data(format!("image {i} is all zeros")));
        }
        let dst = &mut xt[col * d..(col + 1) * d];
        for (o, v) in dst.iter_mut().zip(&img) {
            *o = v / norm;
        }
        y.push(if raw.labels[i] == spec.positive_class {
            1.0
        } else {
            -1.0
        });
    }
    let x = Matrix::from_vec(n, d, xt)?.transpose();
    Dataset::new(x, y, spec.name())
}

fn to_gray(raw: &RawImageSet, img: &[u8], mode: Grayscale) -> Vec<f64> {
    let plane = raw.height * raw.width;
    if raw.channels == 1 {
        return img.iter().map(|&p| p as f64).collect();
    }
    let weights: Vec<f64> = match (mode, raw.channels) {
        (Grayscale::Luma, 3) => vec![0.299, 0.587, 0.114],
        _ => vec![1.0 / raw.channels as f64; raw.channels],
    };
    (0..plane)
        .map(|p| {
            weights
                .iter()
                .enumerate()
                .map(|(ch, w)| w * img[ch * plane + p] as f64)
                .sum()
        })
        .collect()
}

fn resize(img: &[f64], h: usize, w: usize, side: usize, mode: Resize) -> Result<Vec<f64>> {
    if h == side && w == side {
        return Ok(img.to_vec());
    }
    match mode {
        Resize::Bilinear => Ok(bilinear(img, h, w, side, side)),
        Resize::ZeroPad => {
            if h > side || w > side {
                return Err(Error::invalid(format!(
                    "cannot zero-pad {h}x{w} into {side}x{side}"
                )));
            }
            let (top, left) = ((side - h) / 2, (side - w) / 2);
            let mut out = vec![0.0; side * side];
            for r in 0..h {
                out[(top + r) * side + left..(top + r) * side + left + w]
                    .copy_from_slice(&img[r * w..(r + 1) * w]);
            }
            Ok(out)
        }
    }
}

/// Corner-aligned bilinear resampling: output pixel `(0,0)` and
/// `(oh-1, ow-1)` coincide with the input corners.
pub fn bilinear(img: &[f64], h: usize, w: usize, oh: usize, ow: usize) -> Vec<f64> {
    let coord = |o: usize, out: usize, inp: usize| -> (usize, usize, f64) {
        if out <= 1 || inp <= 1 {
            return (0, 0, 0.0);
        }
        let s = o as f64 * (inp - 1) as f64 / (out - 1) as f64;
        let lo = (s.floor() as usize).min(inp - 1);
        let hi = (lo + 1).min(inp - 1);
        (lo, hi, s - lo as f64)
    };
    let mut out = Vec::with_capacity(oh * ow);
    for r in 0..oh {
        let (r0, r1, fr) = coord(r, oh, h);
        for c in 0..ow {
            let (c0, c1, fc) = coord(c, ow, w);
            let top = img[r0 * w + c0] * (1.0 - fc) + img[r0 * w + c1] * fc;
            let bot = img[r1 * w + c0] * (1.0 - fc) + img[r1 * w + c1] * fc;
            out.push(top * (1.0 - fr) + bot * fr);
        }
    }
    out
}

/// Uniform sample of `n_keep` examples without replacement. The kept indices
/// are returned in increasing order, so `n_keep = n` is the identity.
pub fn subsample(ds: &Dataset, n_keep: usize, rng: &mut SeededRng) -> Result<Dataset> {
    Ok(ds.select(&subsample_indices(ds.n(), n_keep, rng)?))
}

pub fn subsample_indices(n: usize, n_keep: usize, rng: &mut SeededRng) -> Result<Vec<usize>> {
    if n_keep == 0 || n_keep > n {
        return Err(Error::invalid(format!(
            "subsample size {n_keep} outside 1..={n}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    // partial Fisher–Yates: the first n_keep slots become the sample
    for i in 0..n_keep {
        let j = i + rng.below(n - i);
        idx.swap(i, j);
    }
    idx.truncate(n_keep);
    idx.sort_unstable();
    Ok(idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{encode_cifar, encode_idx_images, encode_idx_labels};

    #[test]
    fn task_names_parse_back() {
        for t in [TaskSpec::mnist_1_vs_7(), TaskSpec::cifar_airplane_vs_automobile()] {
            assert_eq!(t.name().parse::<TaskSpec>().unwrap(), t);
        }
        for bad in ["mnist", "mnist_1", "mnist_1v1", "svhn_1v7", "mnist_1v12"] {
            assert!(bad.parse::<TaskSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn idx_round_trip() {
        let bytes = encode_idx_images(2, 2, &[vec![0, 128, 255, 7]]);
        assert_eq!(bytes.len(), 20);
        match parse_idx(&bytes).unwrap() {
            IdxContents::Images { rows, cols, pixels } => {
                assert_eq!((rows, cols), (2, 2));
                assert_eq!(pixels, vec![vec![0, 128, 255, 7]]);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(
            parse_idx(&encode_idx_labels(&[1, 7, 1])).unwrap(),
            IdxContents::Labels(vec![1, 7, 1])
        );
        let raw = mnist_from_idx(&bytes, &encode_idx_labels(&[7])).unwrap();
        let (img, lab) = raw.to_idx().unwrap();
        assert_eq!((img, lab), (bytes, encode_idx_labels(&[7])));
    }

    #[test]
    fn idx_rejects_bad_input() {
        let mut bytes = encode_idx_labels(&[1, 2]);
        bytes[..4].copy_from_slice(&[0, 0, 0, 0]);
        match parse_idx(&bytes) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("{other:?}"),
        }
        let mut img = encode_idx_images(2, 2, &[vec![1, 2, 3, 4]]);
        img.pop();
        assert!(matches!(parse_idx(&img), Err(Error::Parse { .. })));
        assert!(matches!(parse_idx(&[0, 0, 8]), Err(Error::Parse { .. })));
    }

    #[test]
    fn cifar_round_trip() {
        let px: Vec<u8> = (0..3072).map(|i| (i % 256) as u8).collect();
        let bytes = encode_cifar(&[(0, px.clone())]);
        let raw = parse_cifar10_bin(&bytes).unwrap();
        assert_eq!(raw.labels, vec![0]);
        assert_eq!(raw.images[0], px);
        assert_eq!((raw.height, raw.width, raw.channels), (32, 32, 3));
        assert_eq!(raw.to_cifar10_bin().unwrap(), bytes);
        assert!(parse_cifar10_bin(&[]).unwrap().is_empty());
        assert!(matches!(
            parse_cifar10_bin(&vec![0u8; 3074]),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn gzip_is_transparent() {
        use flate2::{write::GzEncoder, Compression};
        use std::io::Write;
        let plain = encode_idx_labels(&[3, 4]);
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(&plain).unwrap();
        let gz = enc.finish().unwrap();
        assert_eq!(maybe_gunzip(gz).unwrap(), plain);
        assert_eq!(maybe_gunzip(plain.clone()).unwrap(), plain);
    }

    fn toy_mnist() -> RawImageSet {
        let images = (0..6)
            .map(|k| (0..28 * 28).map(|p| ((p * (k + 3)) % 251) as u8).collect())
            .collect();
        RawImageSet::new(28, 28, 1, images, vec![1, 7, 3, 1, 7, 7]).unwrap()
    }

    #[test]
    fn binary_task_filters_and_normalizes() {
        let ds = build_binary_task(&toy_mnist(), &TaskSpec::mnist_1_vs_7()).unwrap();
        assert_eq!(ds.d(), 1024);
        assert_eq!(ds.n(), 5);
        assert_eq!(ds.y(), &[1.0, -1.0, 1.0, -1.0, -1.0]);
        assert_eq!(ds.class_counts(), (2, 3));
        for j in 0..ds.n() {
            assert!((l2_norm(&ds.x().column(j)) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn binary_task_errors() {
        let raw = toy_mnist();
        let spec = TaskSpec::new(Source::Mnist, 1, 9).unwrap();
        assert!(matches!(
            build_binary_task(&raw, &spec),
            Err(Error::InvalidTask(_))
        ));
        assert!(TaskSpec::new(Source::Mnist, 2, 2).is_err());
        let zero = RawImageSet::new(28, 28, 1, vec![vec![0; 784], vec![1; 784]], vec![1, 7]).unwrap();
        assert!(matches!(
            build_binary_task(&zero, &TaskSpec::mnist_1_vs_7()),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn bilinear_preserves_corners_and_constants() {
        let img: Vec<f64> = (0..28 * 28).map(|p| p as f64).collect();
        let out = bilinear(&img, 28, 28, 32, 32);
        assert_eq!(out[0], img[0]);
        assert_eq!(out[31], img[27]);
        assert_eq!(out[32 * 31], img[28 * 27]);
        assert!((out[32 * 32 - 1] - img[28 * 28 - 1]).abs() < 1e-9);
        // a linear ramp is reproduced exactly
        for r in 0..32 {
            for c in 0..32 {
                let sr = r as f64 * 27.0 / 31.0;
                let sc = c as f64 * 27.0 / 31.0;
                assert!((out[r * 32 + c] - (sr * 28.0 + sc)).abs() < 1e-9);
            }
        }
        let flat = bilinear(&[5.0; 784], 28, 28, 32, 32);
        assert!(flat.iter().all(|&v| (v - 5.0).abs() < 1e-12));
    }

    #[test]
    fn zero_pad_centers() {
        let pre = Preprocess {
            resize: Resize::ZeroPad,
            ..Default::default()
        };
        let raw = RawImageSet::new(28, 28, 1, vec![vec![9; 784], vec![3; 784]], vec![1, 7]).unwrap();
        let ds = build_binary_task_with(&raw, &TaskSpec::mnist_1_vs_7(), &pre).unwrap();
        let col = ds.x().column(0);
        assert_eq!(col[0], 0.0);
        assert!(col[2 * 32 + 2] > 0.0);
        assert_eq!(col.iter().filter(|&&v| v > 0.0).count(), 784);
    }

    #[test]
    fn cifar_grayscale_is_channel_mean() {
        let mut px = vec![0u8; 3072];
        px[0] = 30;
        px[1024] = 60;
        px[2048] = 90;
        px[5] = 3;
        let raw = parse_cifar10_bin(&encode_cifar(&[(0, px), (1, vec![1; 3072])])).unwrap();
        let ds = build_binary_task(&raw, &TaskSpec::cifar_airplane_vs_automobile()).unwrap();
        let col = ds.x().column(0);
        // pixel 0 has gray 60, pixel 5 has gray 1
        assert!((col[0] / col[5] - 60.0).abs() < 1e-9);
        assert_eq!(ds.d(), 1024);
    }

    #[test]
    fn subsample_rules() {
        let ds = build_binary_task(&toy_mnist(), &TaskSpec::mnist_1_vs_7()).unwrap();
        let all = subsample(&ds, ds.n(), &mut SeededRng::new(1)).unwrap();
        assert_eq!(all, ds);
        let one = subsample(&ds, 1, &mut SeededRng::new(1)).unwrap();
        assert_eq!(one.n(), 1);
        assert!(one.y()[0].abs() == 1.0);
        let a = subsample_indices(100, 30, &mut SeededRng::new(4)).unwrap();
        let b = subsample_indices(100, 30, &mut SeededRng::new(4)).unwrap();
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert!(subsample(&ds, 0, &mut SeededRng::new(1)).is_err());
        assert!(subsample(&ds, 6, &mut SeededRng::new(1)).is_err());
    }
}
