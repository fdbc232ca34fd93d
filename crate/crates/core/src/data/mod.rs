//! Binary image datasets: IDX files, binarization, synthetic data, splits.

mod idx;

pub use idx::{
    load_idx, load_idx_labels, parse_idx_images, write_idx, write_idx_labels, RawImages,
};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::stream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum BinarizeMode {
    /// Pixel ≥ 128 → 1.
    ThresholdHalf,
    /// Each pixel is a Bernoulli draw with bias `pixel/255`.
    Bernoulli { seed: u64 },
    /// Already-binary data stored at some maximum value: pixel ≥ max/2 → 1.
    Prebinarized,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Test,
    All,
}

/// Example indices of each split; disjoint and covering the dataset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

impl Splits {
    /// Shuffles `0..n` with `seed` and cuts it 80/10/10.
    pub fn new(n: usize, seed: u64) -> Self {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut stream(seed, 0));
        let n_train = n * 8 / 10;
        let n_val = n / 10;
        let test = order.split_off(n_train + n_val);
        let validation = order.split_off(n_train);
        Splits {
            train: order,
            validation,
            test,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    /// `n × d` row-major, entries in {0, 1}.
    pub images: Vec<u8>,
    pub n: usize,
    pub height: usize,
    pub width: usize,
    pub splits: Splits,
    /// SHA-256 of the source file, or the generator and its seed.
    pub provenance: String,
}

impl Dataset {
    pub fn new(
        images: Vec<u8>,
        height: usize,
        width: usize,
        provenance: String,
        split_seed: u64,
    ) -> Result<Self> {
        let d = height * width;
        if d == 0 || !images.len().is_multiple_of(d) {
            return Err(Error::Contract(format!(
                "{} pixels do not form whole {height}×{width} images",
                images.len()
            )));
        }
        if images.iter().any(|&p| p > 1) {
            return Err(Error::Contract("dataset pixels must be 0 or 1".into()));
        }
        let n = images.len() / d;
        Ok(Dataset {
            images,
            n,
            height,
            width,
            splits: Splits::new(n, split_seed),
            provenance,
        })
    }

    pub fn dim(&self) -> usize {
        self.height * self.width
    }

    pub fn example(&self, i: usize) -> &[u8] {
        let d = self.dim();
        &self.images[i * d..(i + 1) * d]
    }

    pub fn example_f64(&self, i: usize) -> Vec<f64> {
        self.example(i).iter().map(|&p| p as f64).collect()
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        match split {
            Split::Train => self.splits.train.clone(),
            Split::Validation => self.splits.validation.clone(),
            Split::Test => self.splits.test.clone(),
            Split::All => (0..self.n).collect(),
        }
    }

    /// The dataset restricted to `split`, in split order, with every example
    /// assigned to the training split of the result.
    pub fn subset(&self, split: Split) -> Dataset {
        let idx = self.indices(split);
        let images = idx
            .iter()
            .flat_map(|&i| self.example(i).iter().copied())
            .collect();
        Dataset {
            images,
            n: idx.len(),
            height: self.height,
            width: self.width,
            splits: Splits {
                train: (0..idx.len()).collect(),
                validation: vec![],
                test: vec![],
                seed: self.splits.seed,
            },
            provenance: format!("{}:{:?}", self.provenance, split),
        }
    }

    /// Mean pixel value.
    pub fn pixel_mean(&self) -> f64 {
        self.images.iter().map(|&p| p as f64).sum::<f64>() / self.images.len().max(1) as f64
    }
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Binarizes raw 8-bit images. `split_seed` fixes the train/validation/test
/// partition.
pub fn binarize(raw: &RawImages, mode: BinarizeMode, split_seed: u64) -> Result<Dataset> {
    let images: Vec<u8> = match mode {
        BinarizeMode::ThresholdHalf => raw.pixels.iter().map(|&p| (p >= 128) as u8).collect(),
        BinarizeMode::Prebinarized => {
            let max = raw.pixels.iter().copied().max().unwrap_or(1).max(1);
            raw.pixels
                .iter()
                .map(|&p| (2 * p as u16 >= max as u16) as u8)
                .collect()
        }
        BinarizeMode::Bernoulli { seed } => {
            let mut rng = stream(seed, 0);
            raw.pixels
                .iter()
                .map(|&p| (rng.random::<f64>() < p as f64 / 255.0) as u8)
                .collect()
        }
    };
    let provenance = format!("{} {:?}", raw.provenance, mode);
    Dataset::new(images, raw.rows, raw.cols, provenance, split_seed)
}

/// Image side lengths for `d` pixels: square when `d` is a perfect square.
fn shape_for(d: usize) -> (usize, usize) {
    let s = (d as f64).sqrt().round() as usize;
    if s * s == d {
        (s, s)
    } else {
        (1, d)
    }
}

/// Bernoulli images drawn from `k` prototype bias vectors with entries
/// uniform in `[0.02, 0.98]`; each example picks a prototype uniformly.
pub fn synth_dataset(n: usize, d: usize, k: usize, seed: u64) -> Result<Dataset> {
    if d == 0 || k == 0 {
        return Err(Error::Contract(
            "synthetic data needs positive d and k".into(),
        ));
    }
    let mut rng = stream(seed, 0);
    let prototypes: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..d).map(|_| rng.random_range(0.02..0.98)).collect())
        .collect();
    synth_from_prototypes(n, &prototypes, seed)
}

/// Bernoulli images from the given prototype bias vectors.
pub fn synth_from_prototypes(n: usize, prototypes: &[Vec<f64>], seed: u64) -> Result<Dataset> {
    let d = prototypes.first().map_or(0, Vec::len);
    if d == 0
        || prototypes
            .iter()
            .any(|p| p.len() != d || p.iter().any(|b| !(0.0..=1.0).contains(b)))
    {
        return Err(Error::Contract(
            "prototypes must be equal-length bias vectors".into(),
        ));
    }
    let mut rng = stream(seed, 1);
    let mut images = Vec::with_capacity(n * d);
    for _ in 0..n {
        let proto = &prototypes[rng.random_range(0..prototypes.len())];
        images.extend(proto.iter().map(|&b| (rng.random::<f64>() < b) as u8));
    }
    let (h, w) = shape_for(d);
    let provenance = format!("synth k={} d={d} seed={seed}", prototypes.len());
    Dataset::new(images, h, w, provenance, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(pixels: Vec<u8>, n: usize) -> RawImages {
        RawImages {
            n,
            rows: 2,
            cols: 2,
            pixels,
            provenance: "test".into(),
        }
    }

    #[test]
    fn zeros_stay_zero() {
        let r = raw(vec![0; 16], 4);
        for mode in [
            BinarizeMode::ThresholdHalf,
            BinarizeMode::Bernoulli { seed: 1 },
        ] {
            assert!(binarize(&r, mode, 0)
                .unwrap()
                .images
                .iter()
                .all(|&p| p == 0));
        }
    }

    #[test]
    fn full_intensity_is_one() {
        let r = raw(vec![255; 16], 4);
        for mode in [
            BinarizeMode::ThresholdHalf,
            BinarizeMode::Bernoulli { seed: 1 },
        ] {
            assert!(binarize(&r, mode, 0)
                .unwrap()
                .images
                .iter()
                .all(|&p| p == 1));
        }
    }

    #[test]
    fn threshold_at_128() {
        let r = raw(vec![127, 128, 0, 255], 1);
        assert_eq!(
            binarize(&r, BinarizeMode::ThresholdHalf, 0).unwrap().images,
            vec![0, 1, 0, 1]
        );
    }

    #[test]
    fn prebinarized_scales_by_max() {
        let r = raw(vec![0, 1, 1, 0], 1);
        assert_eq!(
            binarize(&r, BinarizeMode::Prebinarized, 0).unwrap().images,
            vec![0, 1, 1, 0]
        );
    }

    #[test]
    fn bernoulli_mean_for_mid_gray() {
        let n = 2500;
        let r = RawImages {
            n,
            rows: 2,
            cols: 2,
            pixels: vec![128; 4 * n],
            provenance: "gray".into(),
        };
        let ds = binarize(&r, BinarizeMode::Bernoulli { seed: 9 }, 0).unwrap();
        let p = 128.0 / 255.0;
        let se = (p * (1.0 - p) / (4 * n) as f64).sqrt();
        assert!((ds.pixel_mean() - p).abs() < 3.0 * se);
    }

    #[test]
    fn synth_is_deterministic() {
        let a = synth_dataset(64, 16, 4, 5).unwrap();
        let b = synth_dataset(64, 16, 4, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.height, a.width), (4, 4));
        assert_ne!(a.images, synth_dataset(64, 16, 4, 6).unwrap().images);
    }

    #[test]
    fn synth_single_half_prototype() {
        let ds = synth_from_prototypes(1000, &[vec![0.5; 64]], 3).unwrap();
        let se = (0.25 / 64_000f64).sqrt();
        assert!((ds.pixel_mean() - 0.5).abs() < 3.0 * se);
    }

    #[test]
    fn splits_partition() {
        let s = Splits::new(103, 4);
        assert_eq!(
            (s.train.len(), s.validation.len(), s.test.len()),
            (82, 10, 11)
        );
        let mut all: Vec<usize> = s
            .train
            .iter()
            .chain(&s.validation)
            .chain(&s.test)
            .copied()
            .collect();
        all.sort();
        assert_eq!(all, (0..103).collect::<Vec<_>>());
        assert_eq!(s, Splits::new(103, 4));
    }
}
