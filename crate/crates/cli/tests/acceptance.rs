//! Acceptance suite: one test per criterion, each ending in a printed
//! `[PASS]` line (visible with `--nocapture`).
//!
//! Oracles here are written from the closed forms, independent of the
//! library code paths they verify.

use std::process::Command;
use std::time::Instant;

use ndarray::{Array2, Array3};
use spadsr_core::{DepthMap, HistogramCube, NoiseSpec, SplitMix64};
use spadsr_histnet::gradcheck;
use spadsr_histnet::model::HistNet;
use spadsr_histnet::train::{train, TrainConfig};
use spadsr_histnet::Sample;
use spadsr_pipeline::baselines::{guided_filter, GuidedFilterParams};
use spadsr_pipeline::features::{
    build_features, center_of_mass_depth, estimate_background, find_peak, second_depth,
    temporal_crop, PeakMap, PeakMethod, PipelineConfig,
};
use spadsr_pipeline::metrics::{measure_noise, rmse};
use spadsr_pipeline::simulator::{
    block_sum, calibrate, expected_lr_histogram, simulate, simulate_hr_cube, true_peaks, ScenePair,
};
use spadsr_pipeline::synth::{make_scene, SceneKind};

fn pass(criterion: usize, detail: String) {
    println!("[PASS] criterion {criterion}: {detail}");
}

// ---------------------------------------------------------------- oracles

fn brute_median(hist: &[u32]) -> f64 {
    let mut sorted = hist.to_vec();
    sorted.sort_unstable();
    sorted[(sorted.len() - 1) / 2] as f64
}

fn brute_argmax(hist: &[u32]) -> usize {
    let mut best = 0;
    for (i, &c) in hist.iter().enumerate() {
        if c > hist[best] {
            best = i;
        }
    }
    best + 1
}

fn window(d_max: usize, t_bins: usize) -> (usize, usize) {
    (d_max.saturating_sub(1).max(1), (d_max + 1).min(t_bins))
}

fn brute_com(hist: &[u32], b: f64, d_max: usize) -> Option<f64> {
    let (lo, hi) = window(d_max, hist.len());
    let mut num = 0.0;
    let mut den = 0.0;
    for t in lo..=hi {
        let e = (hist[t - 1] as f64 - b).max(0.0);
        num += t as f64 * e;
        den += e;
    }
    (den > 0.0).then(|| num / den)
}

fn brute_second(hist: &[u32], b: f64, d1: usize, level: f64) -> Option<f64> {
    let t_bins = hist.len();
    let (ex_lo, ex_hi) = window(d1, t_bins);
    let mut cand: Option<usize> = None;
    for t in 1..=t_bins {
        if t >= ex_lo && t <= ex_hi {
            continue;
        }
        if cand.map_or(true, |c| hist[t - 1] > hist[c - 1]) {
            cand = Some(t);
        }
    }
    let t2 = cand?;
    if hist[t2 - 1] as f64 > b + level * b.sqrt() {
        brute_com(hist, b, t2)
    } else {
        None
    }
}

fn brute_matched(hist: &[u32], sigma: f64) -> usize {
    let m = ((3.0 * sigma).ceil() as i64).max(1);
    let raw: Vec<f64> = (-m..=m)
        .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    let t_bins = hist.len() as i64;
    let mut best_t = 1usize;
    let mut best = f64::NEG_INFINITY;
    for t in 1..=t_bins {
        let mut score = 0.0;
        for (ki, tap) in raw.iter().enumerate() {
            let neighbour = t + ki as i64 - m;
            if neighbour >= 1 && neighbour <= t_bins {
                score += tap / total * hist[(neighbour - 1) as usize] as f64;
            }
        }
        if score > best {
            best = score;
            best_t = t as usize;
        }
    }
    best_t
}

// In-window SBR and ppp of a single histogram.
fn brute_noise(hist: &[u32], b: f64, d_max: usize) -> (f64, f64) {
    let (lo, hi) = window(d_max, hist.len());
    let mut signal = 0.0;
    for t in lo..=hi {
        signal += hist[t - 1] as f64 - b;
    }
    let width = (hi - lo + 1) as f64;
    let sbr = if b > 0.0 { signal / (b * width) } else { f64::INFINITY };
    (sbr, signal)
}

fn brute_crop(aggregate: &[u64], level: f64, median_window: usize) -> (usize, usize) {
    let t_bins = aggregate.len();
    let b = {
        let mut sorted = aggregate.to_vec();
        sorted.sort_unstable();
        sorted[(t_bins - 1) / 2] as f64
    };
    let mask: Vec<bool> = aggregate
        .iter()
        .map(|&a| a as f64 > b + level * b.sqrt())
        .collect();
    let r = median_window / 2;
    let filtered: Vec<bool> = (0..t_bins)
        .map(|t| {
            let mut ones = 0;
            for k in t.saturating_sub(r)..=(t + r).min(t_bins - 1) {
                if mask[k] {
                    ones += 1;
                }
            }
            ones >= median_window / 2 + 1
        })
        .collect();
    match (
        filtered.iter().position(|&m| m),
        filtered.iter().rposition(|&m| m),
    ) {
        (Some(lo), Some(hi)) => (lo + 1, hi + 1),
        _ => (1, t_bins),
    }
}

fn single_pixel_cube(hist: &[u32]) -> HistogramCube {
    let t = hist.len();
    let mut counts = Array3::<u32>::zeros((1, 1, t));
    for (i, &c) in hist.iter().enumerate() {
        counts[[0, 0, i]] = c;
    }
    HistogramCube::new(counts, 1.0).unwrap()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

// ------------------------------------------------------------ criterion 1

#[test]
fn criterion_1_estimator_oracle_suite() {
    let started = Instant::now();
    let mut rng = SplitMix64::new(0xACC1);
    let sigma = 0.5714;
    let level = 12.0;
    for case in 0..1000 {
        let t = 3 + rng.next_below(30); // T in 3..=32
        let max_count = [3usize, 12, 80][rng.next_below(3)];
        let hist: Vec<u32> = (0..t)
            .map(|_| rng.next_below(max_count + 1) as u32)
            .collect();
        let cube = single_pixel_cube(&hist);

        // Background (median) and both peak finders.
        let b = estimate_background(&cube);
        assert_eq!(b[[0, 0]], brute_median(&hist), "case {case}: median");
        let peaks = find_peak(&cube, PeakMethod::Argmax, sigma);
        assert_eq!(peaks.bins[[0, 0]], brute_argmax(&hist), "case {case}: argmax");
        let matched = find_peak(&cube, PeakMethod::MatchedFilter, sigma);
        assert_eq!(
            matched.bins[[0, 0]],
            brute_matched(&hist, sigma),
            "case {case}: matched filter"
        );

        // Centre-of-mass depth around the detected peak.
        let depth = center_of_mass_depth(&cube, &b, &peaks);
        match brute_com(&hist, b[[0, 0]], peaks.bins[[0, 0]]) {
            Some(bins) => {
                let expected = (bins / t as f64) as f32 as f64;
                assert!(
                    rel_err(depth.get(0, 0) as f64, expected) <= 1e-9,
                    "case {case}: com {} vs {expected}",
                    depth.get(0, 0)
                );
            }
            None => assert!(!depth.is_valid(0, 0), "case {case}: com mask"),
        }

        // Second-peak depth with the relevance criterion.
        let second = second_depth(&cube, &b, &peaks, level);
        match brute_second(&hist, b[[0, 0]], peaks.bins[[0, 0]], level) {
            Some(bins) => {
                let expected = (bins / t as f64) as f32 as f64;
                assert!(
                    rel_err(second.get(0, 0) as f64, expected) <= 1e-9,
                    "case {case}: second depth"
                );
            }
            None => {
                assert!(!second.is_valid(0, 0), "case {case}: second mask");
                assert_eq!(second.get(0, 0), 0.0);
            }
        }

        // In-window SBR / ppp measures.
        let stats = measure_noise(&cube, &b, &peaks);
        let (sbr_expected, ppp_expected) = brute_noise(&hist, b[[0, 0]], peaks.bins[[0, 0]]);
        if sbr_expected.is_finite() {
            assert!(
                rel_err(stats.sbr, sbr_expected) <= 1e-9,
                "case {case}: sbr {} vs {sbr_expected}",
                stats.sbr
            );
        } else {
            assert!(stats.sbr.is_infinite() && stats.excluded_pixels == 1);
        }
        assert!(
            rel_err(stats.ppp, ppp_expected) <= 1e-9 || (stats.ppp == 0.0 && ppp_expected == 0.0),
            "case {case}: ppp {} vs {ppp_expected}",
            stats.ppp
        );

        // Temporal crop against the aggregate histogram (with an
        // occasional planted band so both branches are exercised).
        let mut banded = hist.clone();
        if case % 3 == 0 && t >= 8 {
            let lo = 1 + rng.next_below(t - 6);
            for bin in banded.iter_mut().skip(lo).take(4) {
                *bin += 60;
            }
        }
        let crop_cube = single_pixel_cube(&banded);
        let aggregate: Vec<u64> = banded.iter().map(|&c| c as u64).collect();
        assert_eq!(
            temporal_crop(&crop_cube, level, 3),
            brute_crop(&aggregate, level, 3),
            "case {case}: crop"
        );
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "oracle suite took {elapsed:.1} s");
    pass(1, format!("6 estimators match brute force on 1000 histograms in {elapsed:.2} s"));
}

// ------------------------------------------------------------ criterion 2

#[test]
fn criterion_2_simulator_calibration() {
    let started = Instant::now();
    // 256x128 ground truth -> 64x32x16 measurements.
    let scene = make_scene(SceneKind::Blobs, 256, 128, 42);
    let mut summary = Vec::new();
    for (name, ppp, sbr) in [
        ("high", 1200.0, 2.0),
        ("medium", 4.0, 0.02),
        ("low", 4.0, 0.006),
    ] {
        let base = NoiseSpec::new(ppp, sbr);
        let (expect, _) = expected_lr_histogram(&scene, 16, &base, 4).unwrap();
        let peaks = PeakMap {
            bins: true_peaks(&expect),
            method: PeakMethod::Argmax,
        };
        let mut ppp_sum = 0.0;
        let mut sbr_sum = 0.0;
        for seed in 0..20u64 {
            let spec = base.with_seed(9_000 + seed);
            let m = simulate(&scene, 16, &spec, 4).unwrap();
            let (lh, lw, _) = m.histogram.dims();
            assert_eq!((lh, lw), (64, 32));
            let b = Array2::from_elem((lh, lw), m.true_background);
            let stats = measure_noise(&m.histogram, &b, &peaks);
            ppp_sum += stats.ppp;
            sbr_sum += stats.sbr;
        }
        let ppp_avg = ppp_sum / 20.0;
        let sbr_avg = sbr_sum / 20.0;
        assert!(
            (ppp_avg - ppp).abs() / ppp < 0.05,
            "{name}: ppp {ppp_avg} vs target {ppp}"
        );
        assert!(
            (sbr_avg - sbr).abs() / sbr < 0.10,
            "{name}: sbr {sbr_avg} vs target {sbr}"
        );
        summary.push(format!("{name} ppp {ppp_avg:.3}/{ppp} sbr {sbr_avg:.4}/{sbr}"));
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "calibration took {elapsed:.1} s");
    pass(2, format!("{} in {elapsed:.1} s", summary.join("; ")));
}

// ------------------------------------------------------------ criterion 3

#[test]
fn criterion_3_count_conservation() {
    let kinds = [SceneKind::Blobs, SceneKind::Steps, SceneKind::Ramp];
    let mut rng = SplitMix64::new(0xC3);
    for case in 0..100u64 {
        let scene = make_scene(kinds[(case % 3) as usize], 32, 32, case);
        let spec = NoiseSpec::new(rng.uniform(1.0, 400.0), rng.uniform(0.01, 20.0))
            .with_seed(case);
        let calib = calibrate(&scene, 16, &spec, 4).unwrap();
        let hr = simulate_hr_cube(&scene, 16, &spec, 4, &calib).unwrap();
        let lr = block_sum(&hr, 4).unwrap();
        assert_eq!(
            hr.total_counts(),
            lr.total_counts(),
            "case {case}: photon count not conserved"
        );
    }
    pass(3, "block integration conserved total counts on 100 random scenes".into());
}

// ------------------------------------------------------------ criterion 4

#[test]
fn criterion_4_gradient_check() {
    let started = Instant::now();
    // Width 1/16 on a 32x32 target; every ReLU strictly active so central
    // differences of the piecewise-linear network are exact.
    let (mut net, input, gt) = gradcheck::all_active_instance(1.0 / 16.0, 32, 32, 7);
    let report = gradcheck::check(&mut net, &input, &gt, 64, 1e-3, 13);
    let elapsed = started.elapsed().as_secs_f64();
    assert!(
        report.max_rel < 1e-3,
        "max relative error {} at {}",
        report.max_rel,
        report.worst_tensor
    );
    assert!(elapsed < 300.0, "gradient check took {elapsed:.1} s");
    pass(
        4,
        format!(
            "{} coordinates, max rel err {:.2e} in {elapsed:.1} s",
            report.checked, report.max_rel
        ),
    );
}

// ------------------------------------------------------------ criterion 5

#[test]
fn criterion_5_overfit_single_scene() {
    let started = Instant::now();
    let scene = make_scene(SceneKind::Blobs, 64, 64, 505);
    let spec = NoiseSpec::new(1200.0, 2.0).with_seed(505);
    let m = simulate(&scene, 16, &spec, 4).unwrap();
    let features = build_features(&m, &PipelineConfig::for_factor(4)).unwrap();
    let dataset = vec![Sample::new(&features, &scene.depth).unwrap()];

    let cfg = TrainConfig {
        batch_size: 4,
        learning_rate: 0.1,
        steps: Some(500),
        seed: 5,
        ..TrainConfig::default()
    };
    let mut net = HistNet::new(1.0 / 8.0, 5);
    let curve = train(&mut net, &dataset, &cfg).unwrap();
    let final_loss = curve.last().unwrap().1;
    let elapsed = started.elapsed().as_secs_f64();
    assert!(final_loss < 0.01, "final l1 loss {final_loss}");
    assert!(elapsed < 900.0, "overfit check took {elapsed:.1} s");
    pass(
        5,
        format!("overfit to l1 loss {final_loss:.5} after 500 steps in {elapsed:.0} s"),
    );
}

// ------------------------------------------------------------ criterion 6

#[test]
fn criterion_6_baseline_ordering() {
    let started = Instant::now();
    let pc = PipelineConfig::for_factor(4);
    let spec = NoiseSpec::new(1200.0, 2.0);

    // Train on patches from three scenes of the same family.
    let mut samples = Vec::new();
    for (scene_idx, seed) in [100u64, 101, 102].iter().enumerate() {
        let scene = make_scene(SceneKind::Blobs, 64, 64, *seed);
        for (variant_idx, variant) in spadsr_pipeline::simulator::augment(&scene)
            .iter()
            .enumerate()
        {
            let vspec = spec.with_seed(100 + (scene_idx * 131 + variant_idx) as u64);
            let m = simulate(variant, 16, &vspec, 4).unwrap();
            let mut i = 0;
            while i + 32 <= 64 {
                let mut j = 0;
                while j + 32 <= 64 {
                    let window =
                        spadsr_pipeline::simulator::crop_measurement(&m, i / 4, j / 4, 8, 8)
                            .unwrap();
                    let features = build_features(&window, &pc).unwrap();
                    let gt = DepthMap::new(
                        variant
                            .depth
                            .values()
                            .slice(ndarray::s![i..i + 32, j..j + 32])
                            .to_owned(),
                        variant
                            .depth
                            .valid()
                            .slice(ndarray::s![i..i + 32, j..j + 32])
                            .to_owned(),
                    )
                    .unwrap();
                    samples.push(Sample::new(&features, &gt).unwrap());
                    j += 16;
                }
                i += 16;
            }
        }
    }

    let cfg = TrainConfig {
        batch_size: 2,
        learning_rate: 0.1,
        steps: Some(2000),
        seed: 100,
        ..TrainConfig::default()
    };
    let mut net = HistNet::new(0.25, 100);
    train(&mut net, &samples, &cfg).unwrap();

    // Four held-out scenes at the high preset.
    let mut net_wins = 0;
    let mut lines = Vec::new();
    for seed in [200u64, 201, 202, 203] {
        let scene = make_scene(SceneKind::Blobs, 64, 64, seed);
        let m = simulate(&scene, 16, &spec.with_seed(seed), 4).unwrap();
        let features = build_features(&m, &pc).unwrap();
        let nn = features.first_depth.clone();
        let guided =
            guided_filter(&features.first_depth, &features.intensity, &GuidedFilterParams::default())
                .unwrap();
        let pred = net.infer(&features).unwrap();
        let r_nn = rmse(&nn, &scene.depth).unwrap();
        let r_gf = rmse(&guided, &scene.depth).unwrap();
        let r_net = rmse(&pred, &scene.depth).unwrap();
        assert!(
            r_gf < r_nn,
            "scene {seed}: guided {r_gf:.4} must beat nn {r_nn:.4}"
        );
        if r_net < r_gf {
            net_wins += 1;
        }
        lines.push(format!("scene {seed}: nn {r_nn:.4} gf {r_gf:.4} net {r_net:.4}"));
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(
        net_wins >= 3,
        "network beat the guided filter on only {net_wins}/4 scenes\n{}",
        lines.join("\n")
    );
    pass(
        6,
        format!(
            "guided < nn on 4/4, histnet < guided on {net_wins}/4 in {elapsed:.0} s ({})",
            lines.join("; ")
        ),
    );
}

// ------------------------------------------------------------ criterion 7

#[test]
fn criterion_7_shape_contracts() {
    // 4x path: 64x32x16 cube + 256x128 intensity -> 256x128 output.
    let scene4 = make_scene(SceneKind::Blobs, 256, 128, 71);
    let m4 = simulate(&scene4, 16, &NoiseSpec::new(1200.0, 2.0).with_seed(71), 4).unwrap();
    assert_eq!(m4.histogram.dims(), (64, 32, 16));
    let f4 = build_features(&m4, &PipelineConfig::for_factor(4)).unwrap();
    let net = HistNet::new(1.0 / 16.0, 7);
    let out4 = net.infer(&f4).unwrap();
    assert_eq!(out4.dims(), (256, 128));

    // 8x path: depth band inside 1024 bins -> crop -> 72x88xTcrop cube +
    // 576x704 intensity -> 576x704 output.
    let scene8 = make_scene(SceneKind::Blobs, 576, 704, 72);
    let squeezed = DepthMap::from_values(scene8.depth.values().mapv(|d| 0.28 + 0.05 * d)).unwrap();
    let scene8 = ScenePair::new(squeezed, scene8.intensity).unwrap();
    let m8 = simulate(&scene8, 1024, &NoiseSpec::new(20.0, 40.0).with_seed(72), 8).unwrap();
    assert_eq!(m8.histogram.dims(), (72, 88, 1024));
    let f8 = build_features(&m8, &PipelineConfig::for_factor(8)).unwrap();
    let (lo, hi) = f8.crop_range;
    assert!(lo > 200 && hi < 400, "crop ({lo}, {hi}) should isolate the band");
    assert_eq!(f8.first_depth.dims(), (576, 704));
    assert_eq!(f8.d4.dims(), (36, 44));
    let out8 = net.infer(&f8).unwrap();
    assert_eq!(out8.dims(), (576, 704));
    pass(
        7,
        format!(
            "4x: 64x32x16 -> 256x128; 8x: 72x88x{} (crop {lo}..{hi} of 1024) -> 576x704",
            hi - lo + 1
        ),
    );
}

// ------------------------------------------------------------ criterion 8

#[test]
fn criterion_8_robustness_sweep_trend() {
    let started = Instant::now();
    let pc = PipelineConfig::for_factor(4);
    // Train a compact network at the medium preset.
    let medium = NoiseSpec::new(4.0, 0.02);
    let mut samples = Vec::new();
    for seed in [300u64, 301] {
        let scene = make_scene(SceneKind::Blobs, 64, 64, seed);
        let m = simulate(&scene, 16, &medium.with_seed(seed), 4).unwrap();
        let mut i = 0;
        while i + 32 <= 64 {
            let mut j = 0;
            while j + 32 <= 64 {
                let window =
                    spadsr_pipeline::simulator::crop_measurement(&m, i / 4, j / 4, 8, 8).unwrap();
                let features = build_features(&window, &pc).unwrap();
                let gt = DepthMap::new(
                    scene
                        .depth
                        .values()
                        .slice(ndarray::s![i..i + 32, j..j + 32])
                        .to_owned(),
                    scene
                        .depth
                        .valid()
                        .slice(ndarray::s![i..i + 32, j..j + 32])
                        .to_owned(),
                )
                .unwrap();
                samples.push(Sample::new(&features, &gt).unwrap());
                j += 16;
            }
            i += 16;
        }
    }
    let cfg = TrainConfig {
        batch_size: 4,
        steps: Some(400),
        seed: 300,
        ..TrainConfig::default()
    };
    let mut net = HistNet::new(1.0 / 8.0, 300);
    train(&mut net, &samples, &cfg).unwrap();

    // 4x4 grid from mild to heavy noise; training cell at index (1, 1).
    let ppp_grid = [16.0, 4.0, 1.0, 0.25];
    let sbr_grid = [0.08, 0.02, 0.005, 0.00125];
    let scene = make_scene(SceneKind::Blobs, 64, 64, 777);
    let mut grid = [[0.0f64; 4]; 4];
    for (i, &ppp) in ppp_grid.iter().enumerate() {
        for (j, &sbr) in sbr_grid.iter().enumerate() {
            let spec = NoiseSpec::new(ppp, sbr).with_seed(777 + (i * 4 + j) as u64);
            let m = simulate(&scene, 16, &spec, 4).unwrap();
            let features = build_features(&m, &pc).unwrap();
            let pred = net.infer(&features).unwrap();
            grid[i][j] = rmse(&pred, &scene.depth).unwrap();
        }
    }

    // Minimum at or adjacent to the training cell.
    let mut min_cell = (0usize, 0usize);
    for i in 0..4 {
        for j in 0..4 {
            if grid[i][j] < grid[min_cell.0][min_cell.1] {
                min_cell = (i, j);
            }
        }
    }
    let dist = min_cell.0.abs_diff(1).max(min_cell.1.abs_diff(1));
    assert!(
        dist <= 1,
        "RMSE minimum at {min_cell:?}, not adjacent to the training cell (1, 1); grid {grid:?}"
    );

    // Noisier rows must not improve in at least 75% of adjacent-row pairs.
    let mut holds = 0;
    let mut total = 0;
    for i in 0..3 {
        for j in 0..4 {
            total += 1;
            if grid[i + 1][j] >= grid[i][j] - 1e-6 {
                holds += 1;
            }
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(
        holds * 4 >= total * 3,
        "monotone degradation in {holds}/{total} row pairs; grid {grid:?}"
    );
    pass(
        8,
        format!(
            "min at {min_cell:?} (train cell (1,1)), degradation holds in {holds}/{total} pairs, {elapsed:.0} s"
        ),
    );
}

// ------------------------------------------------------------ criterion 9

fn spadsr() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spadsr"))
}

fn run_cli(args: &[&str]) {
    let out = spadsr().args(args).output().unwrap();
    assert!(
        out.status.success(),
        "spadsr {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn dir_snapshot(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(current) = stack.pop() {
        for entry in std::fs::read_dir(&current).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                files.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    files.sort_by(|a, b| a.0.cmp(&b.0));
    files
}

fn assert_identical_outputs(label: &str, a: &std::path::Path, b: &std::path::Path) {
    let sa = dir_snapshot(a);
    let sb = dir_snapshot(b);
    let names_a: Vec<&String> = sa.iter().map(|(n, _)| n).collect();
    let names_b: Vec<&String> = sb.iter().map(|(n, _)| n).collect();
    assert_eq!(names_a, names_b, "{label}: file sets differ");
    for ((name, bytes_a), (_, bytes_b)) in sa.iter().zip(sb.iter()) {
        assert_eq!(bytes_a, bytes_b, "{label}: {name} differs between runs");
    }
}

#[test]
fn criterion_9_cli_determinism() {
    let root = tempfile::tempdir().unwrap();
    let path = |name: &str| root.path().join(name).to_string_lossy().into_owned();

    // simulate, twice
    for run in ["a", "b"] {
        run_cli(&[
            "simulate",
            "--out",
            &path(&format!("sim_{run}")),
            "--synthetic",
            "blobs",
            "--height",
            "64",
            "--width",
            "64",
            "--ppp",
            "300",
            "--sbr",
            "1.5",
            "--bins",
            "8",
            "--factor",
            "4",
            "--seed",
            "11",
        ]);
    }
    assert_identical_outputs(
        "simulate",
        &root.path().join("sim_a"),
        &root.path().join("sim_b"),
    );
    let cube = path("sim_a/histogram.spdt");
    let intensity = path("sim_a/intensity.pgm");
    let gt = path("sim_a/gt_depth.pfm");

    // features, twice
    for run in ["a", "b"] {
        run_cli(&[
            "features",
            "--out",
            &path(&format!("feat_{run}")),
            "--cube",
            &cube,
            "--intensity",
            &intensity,
            "--factor",
            "4",
        ]);
    }
    assert_identical_outputs(
        "features",
        &root.path().join("feat_a"),
        &root.path().join("feat_b"),
    );

    // train, twice (tiny run)
    for run in ["a", "b"] {
        run_cli(&[
            "train",
            "--out",
            &path(&format!("train_{run}")),
            "--synthetic-count",
            "1",
            "--synthetic",
            "steps",
            "--height",
            "32",
            "--width",
            "32",
            "--patch-size",
            "32",
            "--stride",
            "32",
            "--augment=false",
            "--ppp",
            "200",
            "--sbr",
            "2",
            "--width-scale",
            "0.0625",
            "--steps",
            "3",
            "--batch-size",
            "1",
            "--seed",
            "12",
        ]);
    }
    assert_identical_outputs(
        "train",
        &root.path().join("train_a"),
        &root.path().join("train_b"),
    );
    let checkpoint = path("train_a/checkpoint");

    // reconstruct with every method, twice
    for method in ["nn", "guided", "histnet"] {
        for run in ["a", "b"] {
            run_cli(&[
                "reconstruct",
                "--out",
                &path(&format!("rec_{method}_{run}")),
                "--cube",
                &cube,
                "--intensity",
                &intensity,
                "--method",
                method,
                "--checkpoint",
                &checkpoint,
                "--factor",
                "4",
            ]);
        }
        assert_identical_outputs(
            method,
            &root.path().join(format!("rec_{method}_a")),
            &root.path().join(format!("rec_{method}_b")),
        );
    }

    // infer, twice
    for run in ["a", "b"] {
        run_cli(&[
            "infer",
            "--out",
            &path(&format!("inf_{run}")),
            "--cube",
            &cube,
            "--intensity",
            &intensity,
            "--checkpoint",
            &checkpoint,
            "--factor",
            "4",
        ]);
    }
    assert_identical_outputs(
        "infer",
        &root.path().join("inf_a"),
        &root.path().join("inf_b"),
    );

    // eval, twice
    for run in ["a", "b"] {
        run_cli(&[
            "eval",
            "--out",
            &path(&format!("eval_{run}")),
            "--pred",
            &path("rec_nn_a/depth.pfm"),
            "--gt",
            &gt,
            "--cube",
            &cube,
            "--scene",
            "det",
            "--method",
            "nn",
            "--runtime-ms",
            "1.5",
        ]);
    }
    assert_identical_outputs(
        "eval",
        &root.path().join("eval_a"),
        &root.path().join("eval_b"),
    );

    // sweep, twice
    for run in ["a", "b"] {
        run_cli(&[
            "sweep",
            "--out",
            &path(&format!("sweep_{run}")),
            "--checkpoint",
            &checkpoint,
            "--synthetic",
            "ramp",
            "--height",
            "32",
            "--width",
            "32",
            "--bins",
            "8",
            "--ppp-grid",
            "20,5",
            "--sbr-grid",
            "1,0.1",
            "--seed",
            "13",
        ]);
    }
    assert_identical_outputs(
        "sweep",
        &root.path().join("sweep_a"),
        &root.path().join("sweep_b"),
    );

    pass(9, "all 7 subcommands produced bit-identical outputs across reruns".into());
}
