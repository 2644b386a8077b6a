//! Post-painting class remapping between segmentation and detection taxonomies.
//!
//! Segmentation labels a bicycle and its rider separately while detection has
//! a single cyclist class. [`remap_cyclist`] turns bike points near a rider
//! into cyclist points, every other bike point into the fallback class, and
//! the rider points themselves into cyclist.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::painter::PaintedCloud;
use crate::scoremap::argmax;

/// Above this many bike×rider pairs the neighbor search switches to a grid.
const BRUTE_FORCE_PAIRS: usize = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RemapRule {
    /// Class relabelled by proximity (bike).
    pub source_class: usize,
    /// Class whose points define proximity (rider).
    pub anchor_class: usize,
    /// Class assigned to nearby source points and to anchors (cyclist).
    pub target_class: usize,
    /// Class assigned to source points with no anchor in range (background).
    pub fallback_class: usize,
    /// 3D distance in meters, inclusive.
    pub radius: f64,
}

impl RemapRule {
    pub const DEFAULT_RADIUS: f64 = 1.0;

    pub fn validate(&self, num_classes: usize) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::invalid(
                "remap rule",
                format!("radius {} must be positive", self.radius),
            ));
        }
        for (name, idx) in [
            ("source", self.source_class),
            ("anchor", self.anchor_class),
            ("target", self.target_class),
            ("fallback", self.fallback_class),
        ] {
            if idx >= num_classes {
                return Err(Error::invalid(
                    "remap rule",
                    format!("{name} class {idx} out of range for {num_classes} classes"),
                ));
            }
        }
        if self.source_class == self.anchor_class {
            return Err(Error::invalid("remap rule", "source and anchor classes coincide"));
        }
        // Either would leave source points behind and break idempotence.
        if self.target_class == self.source_class || self.fallback_class == self.source_class {
            return Err(Error::invalid(
                "remap rule",
                "target and fallback must differ from the source class",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RemapStats {
    /// Source points moved to the target class.
    pub source_to_target: usize,
    /// Source points moved to the fallback class.
    pub source_to_fallback: usize,
    /// Anchor points relabelled as target.
    pub anchors: usize,
}

impl RemapStats {
    /// All points now labelled with the target class by this pass.
    pub fn target_total(&self) -> usize {
        self.source_to_target + self.anchors
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NeighborSearch {
    /// Brute force for small problems, grid otherwise.
    #[default]
    Auto,
    BruteForce,
    Grid,
}

#[inline]
fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

struct Grid {
    cell: f64,
    cells: HashMap<[i64; 3], Vec<[f64; 3]>>,
}

impl Grid {
    fn new(points: &[[f64; 3]], cell: f64) -> Self {
        let mut cells: HashMap<[i64; 3], Vec<[f64; 3]>> = HashMap::new();
        for &p in points {
            cells.entry(Self::key(p, cell)).or_default().push(p);
        }
        Self { cell, cells }
    }

    fn key(p: [f64; 3], cell: f64) -> [i64; 3] {
        p.map(|x| (x / cell).floor() as i64)
    }

    fn any_within(&self, p: [f64; 3], radius: f64) -> bool {
        let [kx, ky, kz] = Self::key(p, self.cell);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(pts) = self.cells.get(&[kx + dx, ky + dy, kz + dz]) {
                        if pts.iter().any(|&q| distance(p, q) <= radius) {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }
}

pub fn remap_cyclist(cloud: &PaintedCloud, rule: &RemapRule) -> Result<(PaintedCloud, RemapStats)> {
    remap_cyclist_with(cloud, rule, NeighborSearch::Auto)
}

/// [`remap_cyclist`] with an explicit neighbor-search backend. All backends
/// give identical results.
pub fn remap_cyclist_with(
    cloud: &PaintedCloud,
    rule: &RemapRule,
    search: NeighborSearch,
) -> Result<(PaintedCloud, RemapStats)> {
    rule.validate(cloud.num_classes())?;
    let classes: Vec<usize> = (0..cloud.len()).map(|i| argmax(cloud.scores(i))).collect();
    let anchors: Vec<[f64; 3]> = classes
        .iter()
        .enumerate()
        .filter(|(_, &c)| c == rule.anchor_class)
        .map(|(i, _)| cloud.cloud().xyz(i))
        .collect();
    let sources: Vec<usize> = classes
        .iter()
        .enumerate()
        .filter(|(_, &c)| c == rule.source_class)
        .map(|(i, _)| i)
        .collect();

    let use_grid = match search {
        NeighborSearch::BruteForce => false,
        NeighborSearch::Grid => true,
        NeighborSearch::Auto => sources.len().saturating_mul(anchors.len()) > BRUTE_FORCE_PAIRS,
    };
    let near: Vec<bool> = if anchors.is_empty() {
        vec![false; sources.len()]
    } else if use_grid {
        // Cell edge equal to the radius keeps every neighbor within the 27-cell stencil.
        let grid = Grid::new(&anchors, rule.radius);
        sources
            .par_iter()
            .map(|&i| grid.any_within(cloud.cloud().xyz(i), rule.radius))
            .collect()
    } else {
        sources
            .par_iter()
            .map(|&i| {
                let p = cloud.cloud().xyz(i);
                anchors.iter().any(|&q| distance(p, q) <= rule.radius)
            })
            .collect()
    };

    let mut out = cloud.clone();
    let mut stats = RemapStats::default();
    for (&i, &is_near) in sources.iter().zip(&near) {
        let class = if is_near {
            stats.source_to_target += 1;
            rule.target_class
        } else {
            stats.source_to_fallback += 1;
            rule.fallback_class
        };
        set_one_hot(out.scores_mut(i), class);
    }
    for (i, &c) in classes.iter().enumerate() {
        if c == rule.anchor_class {
            stats.anchors += 1;
            set_one_hot(out.scores_mut(i), rule.target_class);
        }
    }
    Ok((out, stats))
}

fn set_one_hot(scores: &mut [f32], class: usize) {
    scores.fill(0.0);
    scores[class] = 1.0;
}
