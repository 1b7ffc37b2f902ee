//! Synthetic ground-truth scenes for demos, training runs and tests.
//!
//! Scenes pair a depth map with an intensity image whose edges coincide
//! with the depth discontinuities, the structure guided reconstruction
//! relies on.

use ndarray::Array2;
use spadsr_core::{DepthMap, IntensityMap, SplitMix64};

use crate::simulator::ScenePair;

/// Available generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceneKind {
    /// Smooth diagonal depth gradient.
    Ramp,
    /// Piecewise-constant vertical bands.
    Steps,
    /// Rectangles and disks over a gentle gradient background.
    Blobs,
}

impl std::str::FromStr for SceneKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ramp" => Ok(Self::Ramp),
            "steps" => Ok(Self::Steps),
            "blobs" => Ok(Self::Blobs),
            other => Err(format!("unknown scene kind {other:?} (ramp|steps|blobs)")),
        }
    }
}

/// Generate a scene of the given kind and size.
pub fn make_scene(kind: SceneKind, h: usize, w: usize, seed: u64) -> ScenePair {
    match kind {
        SceneKind::Ramp => ramp(h, w),
        SceneKind::Steps => steps(h, w, seed),
        SceneKind::Blobs => blobs(h, w, seed),
    }
}

fn ramp(h: usize, w: usize) -> ScenePair {
    let span = (h + w).max(2) as f32 - 2.0;
    let depth = Array2::from_shape_fn((h, w), |(i, j)| 0.2 + 0.6 * (i + j) as f32 / span);
    let intensity = depth.mapv(|d| 0.9 - 0.75 * (d - 0.2) / 0.6);
    ScenePair {
        depth: DepthMap::from_values(depth).expect("in range"),
        intensity: IntensityMap::new(intensity).expect("in range"),
    }
}

fn steps(h: usize, w: usize, seed: u64) -> ScenePair {
    let mut rng = SplitMix64::derive(seed, &[0x57e9]);
    let bands = 4 + rng.next_below(3); // 4..=6
    let band_depth: Vec<f32> = (0..bands).map(|_| rng.uniform(0.2, 0.8) as f32).collect();
    let band_inten: Vec<f32> = (0..bands).map(|_| rng.uniform(0.25, 0.95) as f32).collect();
    let depth = Array2::from_shape_fn((h, w), |(_, j)| band_depth[j * bands / w.max(1)]);
    let intensity = Array2::from_shape_fn((h, w), |(_, j)| band_inten[j * bands / w.max(1)]);
    ScenePair {
        depth: DepthMap::from_values(depth).expect("in range"),
        intensity: IntensityMap::new(intensity).expect("in range"),
    }
}

fn blobs(h: usize, w: usize, seed: u64) -> ScenePair {
    let mut rng = SplitMix64::derive(seed, &[0xb10b]);
    let span = (h + w).max(2) as f32 - 2.0;
    let mut depth = Array2::from_shape_fn((h, w), |(i, j)| 0.55 + 0.3 * (i + j) as f32 / span);
    let mut intensity = depth.mapv(|d| 0.85 - 0.6 * (d - 0.55) / 0.3);

    let shapes = 5 + rng.next_below(4); // 5..=8
    for _ in 0..shapes {
        let d = rng.uniform(0.15, 0.5) as f32;
        let r_int = rng.uniform(0.3, 0.95) as f32;
        let ci = rng.next_below(h) as i64;
        let cj = rng.next_below(w) as i64;
        let rad = (2 + rng.next_below(h.min(w) / 3 + 1)) as i64;
        let disk = rng.next_below(2) == 0;
        for i in (ci - rad).max(0)..(ci + rad + 1).min(h as i64) {
            for j in (cj - rad).max(0)..(cj + rad + 1).min(w as i64) {
                let inside = if disk {
                    let (di, dj) = (i - ci, j - cj);
                    di * di + dj * dj <= rad * rad
                } else {
                    true
                };
                if inside {
                    depth[[i as usize, j as usize]] = d;
                    intensity[[i as usize, j as usize]] = r_int;
                }
            }
        }
    }
    ScenePair {
        depth: DepthMap::from_values(depth).expect("in range"),
        intensity: IntensityMap::new(intensity).expect("in range"),
    }
}
