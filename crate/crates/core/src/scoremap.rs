//! Per-pixel class-score tensors and the measures computed on them.
//!
//! Storage is raster order: row `v` outermost, column `u`, then class `c`.
//! The last class channel is always background.

use std::fmt;

use num_rational::Ratio;
use num_traits::{CheckedAdd, Zero};

use crate::error::{Error, Result};

/// Allowed deviation of a pixel's score sum from 1 (scores are `f32`).
pub const SUM_TOLERANCE: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScoreMode {
    /// Soft class probabilities summing to one.
    Scores,
    /// One-hot labels.
    Labels,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreMap {
    height: usize,
    width: usize,
    num_classes: usize,
    mode: ScoreMode,
    data: Vec<f32>,
    class_names: Vec<String>,
}

impl ScoreMap {
    /// Checks shape only; value invariants are reported by [`ScoreMap::validate`].
    pub fn new(
        height: usize,
        width: usize,
        mode: ScoreMode,
        data: Vec<f32>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let num_classes = class_names.len();
        if num_classes < 2 {
            return Err(Error::invalid(
                "score map",
                format!("need at least 2 classes, got {num_classes}"),
            ));
        }
        if height == 0 || width == 0 {
            return Err(Error::invalid(
                "score map",
                format!("size {width}x{height} must be positive"),
            ));
        }
        let expected = height * width * num_classes;
        if data.len() != expected {
            return Err(Error::Shape(format!(
                "score map {height}x{width}x{num_classes} needs {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            num_classes,
            mode,
            data,
            class_names,
        })
    }

    /// Every pixel set to `1/C`.
    pub fn uniform(height: usize, width: usize, class_names: Vec<String>) -> Result<Self> {
        let c = class_names.len().max(1);
        let data = vec![1.0 / c as f32; height * width * c];
        Self::new(height, width, ScoreMode::Scores, data, class_names)
    }

    /// Every pixel one-hot on `class`.
    pub fn constant_label(
        height: usize,
        width: usize,
        class: usize,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let c = class_names.len();
        if class >= c {
            return Err(Error::OutOfRange {
                axis: "class",
                index: class,
                len: c,
            });
        }
        let mut data = vec![0.0; height * width * c];
        for px in data.chunks_exact_mut(c) {
            px[class] = 1.0;
        }
        Self::new(height, width, ScoreMode::Labels, data, class_names)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn mode(&self) -> ScoreMode {
        self.mode
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn background_class(&self) -> usize {
        self.num_classes - 1
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    /// Score vector at column `u`, row `v`, without bounds reporting.
    #[inline]
    pub fn pixel(&self, u: usize, v: usize) -> &[f32] {
        let start = (v * self.width + u) * self.num_classes;
        &self.data[start..start + self.num_classes]
    }

    /// Copy of the score vector at column `u`, row `v`.
    pub fn sample(&self, u: usize, v: usize) -> Result<ScoreVector> {
        if u >= self.width {
            return Err(Error::OutOfRange {
                axis: "u (column)",
                index: u,
                len: self.width,
            });
        }
        if v >= self.height {
            return Err(Error::OutOfRange {
                axis: "v (row)",
                index: v,
                len: self.height,
            });
        }
        Ok(ScoreVector(self.pixel(u, v).to_vec()))
    }

    fn pixels(&self) -> impl Iterator<Item = ((usize, usize), &[f32])> {
        let width = self.width;
        self.data
            .chunks_exact(self.num_classes)
            .enumerate()
            .map(move |(i, px)| ((i % width, i / width), px))
    }

    /// Lists every violated invariant with the first offending pixel.
    pub fn validate(&self) -> ValidationReport {
        let mut range = Tally::default();
        let mut sum = Tally::default();
        let mut one_hot = Tally::default();
        for ((u, v), px) in self.pixels() {
            if let Some(c) = px.iter().position(|s| !(0.0..=1.0).contains(s)) {
                range.hit(u, v, format!("class {c} score {}", px[c]));
            }
            match self.mode {
                ScoreMode::Scores => {
                    let total: f64 = px.iter().map(|&s| s as f64).sum();
                    if !((total - 1.0).abs() <= SUM_TOLERANCE) {
                        sum.hit(u, v, format!("sum {total}"));
                    }
                }
                ScoreMode::Labels => {
                    let ones = px.iter().filter(|&&s| s == 1.0).count();
                    let zeros = px.iter().filter(|&&s| s == 0.0).count();
                    if ones != 1 || zeros != px.len() - 1 {
                        one_hot.hit(u, v, format!("{px:?}"));
                    }
                }
            }
        }
        let mut violations = Vec::new();
        range.push(ViolationKind::ScoreOutOfRange, &mut violations);
        sum.push(ViolationKind::SumNotOne, &mut violations);
        one_hot.push(ViolationKind::NotOneHot, &mut violations);
        ValidationReport { violations }
    }

    /// Per-pixel argmax as a label map.
    pub fn argmax_labels(&self) -> LabelMap {
        LabelMap {
            height: self.height,
            width: self.width,
            labels: self
                .data
                .chunks_exact(self.num_classes)
                .map(|px| argmax(px) as u32)
                .collect(),
        }
    }

    /// Replaces every pixel by the one-hot encoding of its argmax (ties go to
    /// the lowest class index).
    pub fn to_one_hot(&self) -> ScoreMap {
        let mut data = vec![0.0f32; self.data.len()];
        for (dst, src) in data
            .chunks_exact_mut(self.num_classes)
            .zip(self.data.chunks_exact(self.num_classes))
        {
            dst[argmax(src)] = 1.0;
        }
        ScoreMap {
            data,
            mode: ScoreMode::Labels,
            ..self.clone_header()
        }
    }

    fn clone_header(&self) -> ScoreMap {
        ScoreMap {
            height: self.height,
            width: self.width,
            num_classes: self.num_classes,
            mode: self.mode,
            data: Vec::new(),
            class_names: self.class_names.clone(),
        }
    }
}

pub fn to_one_hot(s: &ScoreMap) -> ScoreMap {
    s.to_one_hot()
}

#[derive(Default)]
struct Tally {
    count: usize,
    first: Option<(usize, usize, String)>,
}

impl Tally {
    fn hit(&mut self, u: usize, v: usize, detail: String) {
        self.count += 1;
        if self.first.is_none() {
            self.first = Some((u, v, detail));
        }
    }

    fn push(self, kind: ViolationKind, out: &mut Vec<Violation>) {
        if let Some((u, v, detail)) = self.first {
            out.push(Violation {
                kind,
                u,
                v,
                count: self.count,
                detail,
            });
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    ScoreOutOfRange,
    SumNotOne,
    NotOneHot,
}

/// One violated invariant: where it first occurred and how many pixels break it.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub u: usize,
    pub v: usize,
    pub count: usize,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(
                f,
                "{:?} at (u={}, v={}): {} ({} pixel(s))",
                v.kind, v.u, v.v, v.detail, v.count
            )?;
        }
        Ok(())
    }
}

/// A single pixel's class scores.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreVector(pub Vec<f32>);

impl ScoreVector {
    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn entropy(&self) -> f64 {
        entropy(&self.0)
    }

    pub fn margin(&self) -> f64 {
        margin(&self.0)
    }

    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }
}

/// Index of the largest score, lowest index on ties.
#[inline]
pub fn argmax(scores: &[f32]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Shannon entropy in nats, with `0 · ln 0 = 0`.
#[inline]
pub fn entropy(scores: &[f32]) -> f64 {
    let mut h = 0.0f64;
    for &s in scores {
        if s > 0.0 {
            let s = s as f64;
            h -= s * s.ln();
        }
    }
    h
}

/// Largest score minus the second largest.
#[inline]
pub fn margin(scores: &[f32]) -> f64 {
    let mut first = f32::NEG_INFINITY;
    let mut second = f32::NEG_INFINITY;
    for &s in scores {
        if s > first {
            second = first;
            first = s;
        } else if s > second {
            second = s;
        }
    }
    first as f64 - second as f64
}

/// An `H × W` map of integer class labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMap {
    pub height: usize,
    pub width: usize,
    pub labels: Vec<u32>,
}

impl LabelMap {
    pub fn new(height: usize, width: usize, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != height * width {
            return Err(Error::Shape(format!(
                "label map {height}x{width} needs {} labels, got {}",
                height * width,
                labels.len()
            )));
        }
        Ok(Self {
            height,
            width,
            labels,
        })
    }
}

/// Mean intersection-over-union over the classes present in either map.
pub fn miou(pred: &LabelMap, truth: &LabelMap, num_classes: usize) -> Result<f64> {
    if pred.height != truth.height || pred.width != truth.width {
        return Err(Error::Shape(format!(
            "prediction is {}x{}, truth is {}x{}",
            pred.width, pred.height, truth.width, truth.height
        )));
    }
    let mut intersection = vec![0u64; num_classes];
    let mut union = vec![0u64; num_classes];
    for (&p, &t) in pred.labels.iter().zip(&truth.labels) {
        let (p, t) = (p as usize, t as usize);
        for label in [p, t] {
            if label >= num_classes {
                return Err(Error::OutOfRange {
                    axis: "class",
                    index: label,
                    len: num_classes,
                });
            }
        }
        if p == t {
            intersection[p] += 1;
            union[p] += 1;
        } else {
            union[p] += 1;
            union[t] += 1;
        }
    }
    let present: Vec<(u64, u64)> = intersection
        .iter()
        .zip(&union)
        .filter(|(_, &u)| u > 0)
        .map(|(&i, &u)| (i, u))
        .collect();
    if present.is_empty() {
        return Err(Error::Shape("label maps are empty".into()));
    }
    // Exact rational mean where it fits, so small hand-checkable cases come
    // out correctly rounded.
    let exact = present.iter().try_fold(Ratio::<u128>::zero(), |acc, &(i, u)| {
        acc.checked_add(&Ratio::new(i as u128, u as u128))
    });
    Ok(match exact {
        Some(sum) => {
            let mean = sum / present.len() as u128;
            ratio_to_f64(mean)
        }
        None => {
            present.iter().map(|&(i, u)| i as f64 / u as f64).sum::<f64>() / present.len() as f64
        }
    })
}

fn ratio_to_f64(r: Ratio<u128>) -> f64 {
    const EXACT: u128 = 1 << 53;
    if *r.numer() <= EXACT && *r.denom() <= EXACT {
        *r.numer() as f64 / *r.denom() as f64
    } else {
        // Only the leading bits matter once rounding is unavoidable.
        let shift = (128 - r.denom().leading_zeros()).saturating_sub(53);
        (*r.numer() >> shift) as f64 / (*r.denom() >> shift) as f64
    }
}
