use geoconsist::imageio::Frame;
use geoconsist::matching::descriptor_distance;
use geoconsist::sift::{
    build_scale_space, detect_keypoints, extract, octave_count, Features, SiftParams,
};
use geoconsist::synth::{render_preset, SceneConfig, SyntheticScene};
use geoconsist::Keypoint;

fn frame(w: usize, h: usize, f: impl Fn(f64, f64) -> f64) -> Frame {
    let px = (0..w * h)
        .map(|i| f((i % w) as f64, (i / w) as f64).clamp(0.0, 1.0) as f32)
        .collect();
    Frame::new(0, w, h, px, "test").unwrap()
}

fn bilinear(src: &Frame, x: f64, y: f64) -> f64 {
    let (w, h) = (src.width() as f64, src.height() as f64);
    if x < 0.0 || y < 0.0 || x > w - 1.0 || y > h - 1.0 {
        return 0.5;
    }
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = (
        (x0 + 1).min(src.width() - 1),
        (y0 + 1).min(src.height() - 1),
    );
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let g = |x, y| src.get(x, y) as f64;
    (g(x0, y0) * (1.0 - fx) + g(x1, y0) * fx) * (1.0 - fy)
        + (g(x0, y1) * (1.0 - fx) + g(x1, y1) * fx) * fy
}

/// Rotate by `angle` radians about the image centre; returns the frame and
/// the forward point map.
fn rotate(src: &Frame, angle: f64) -> (Frame, impl Fn(f64, f64) -> (f64, f64)) {
    let (cx, cy) = (
        (src.width() - 1) as f64 / 2.0,
        (src.height() - 1) as f64 / 2.0,
    );
    let (s, c) = angle.sin_cos();
    let out = frame(src.width(), src.height(), |x, y| {
        let (dx, dy) = (x - cx, y - cy);
        bilinear(src, c * dx + s * dy + cx, -s * dx + c * dy + cy)
    });
    let fwd = move |x: f64, y: f64| {
        let (dx, dy) = (x - cx, y - cy);
        (c * dx - s * dy + cx, s * dx + c * dy + cy)
    };
    (out, fwd)
}

fn synth_frames(seed: u64, n: usize) -> (SyntheticScene, Vec<Frame>, geoconsist::synth::Ledger) {
    render_preset(&SceneConfig::orbit(n, seed)).unwrap()
}

#[test]
fn constant_image_has_flat_dog_and_no_keypoints() {
    let f = frame(64, 48, |_, _| 0.5);
    let space = build_scale_space(&f, &SiftParams::default()).unwrap();
    for o in &space.octaves {
        for d in &o.dogs {
            assert!(d.data.iter().all(|&v| v == 0.0));
        }
    }
    assert!(detect_keypoints(&space).is_empty());
}

#[test]
fn octave_count_for_256() {
    let p = SiftParams::default();
    assert_eq!(octave_count(256, 256, &p), 6);
    let f = frame(256, 256, |x, y| {
        ((x * 0.1).sin() * (y * 0.07).cos() + 1.0) / 2.0
    });
    assert_eq!(build_scale_space(&f, &p).unwrap().octaves.len(), 6);
}

#[test]
fn too_small_image_is_rejected() {
    let p = SiftParams {
        upsample: false,
        min_octave_size: 32,
        ..SiftParams::default()
    };
    let f = frame(20, 20, |_, _| 0.3);
    assert!(build_scale_space(&f, &p).is_err());
}

#[test]
fn blob_peaks_at_its_own_scale() {
    let p = SiftParams::default();
    for s in [3.0, 5.0, 8.0] {
        let f = frame(128, 128, |x, y| {
            let r2 = (x - 63.5).powi(2) + (y - 63.5).powi(2);
            0.1 + 0.8 * (-r2 / (2.0 * s * s)).exp()
        });
        let space = build_scale_space(&f, &p).unwrap();
        // brute-force scan of the DoG value at the blob centre
        let mut best = (0.0f32, 0.0f64);
        for (o, oct) in space.octaves.iter().enumerate() {
            let px = space.octave_pixel(o);
            for (l, d) in oct.dogs.iter().enumerate() {
                let (cx, cy) = ((63.5 / px).round() as usize, (63.5 / px).round() as usize);
                if cx >= d.width || cy >= d.height {
                    continue;
                }
                let v = d.at(cx, cy).abs();
                if v > best.0 {
                    // DoG level l sits between Gaussian levels l and l+1
                    best = (v, space.layer_sigma(l as f64 + 0.5) * px);
                }
            }
        }
        let step = 1.0 / p.octave_layers as f64;
        let off = (best.1 / s).log2().abs();
        assert!(
            off <= step + 0.1,
            "blob {s}: peak scale {} ({off} octaves off)",
            best.1
        );

        let kps = detect_keypoints(&space);
        let centre = kps
            .iter()
            .filter(|k| (k.x - 63.5).hypot(k.y - 63.5) < 2.0)
            .map(|k| k.sigma)
            .collect::<Vec<_>>();
        assert!(!centre.is_empty(), "blob {s}: no keypoint at centre");
        assert!(
            centre.iter().any(|&ks| (ks / s).log2().abs() <= step + 0.1),
            "blob {s}: keypoint scales {centre:?}"
        );
    }
}

#[test]
fn square_keypoints_sit_at_corners_or_centre() {
    // 16 px square; pixel centres are integers, so its edges lie on half pixels
    let (lo, hi) = (56.0, 71.0);
    let f = frame(128, 128, |x, y| {
        if (lo..=hi).contains(&x) && (lo..=hi).contains(&y) {
            1.0
        } else {
            0.0
        }
    });
    let feats = extract(&f, &SiftParams::default()).unwrap();
    assert!(!feats.keypoints.is_empty());
    let (gl, gh) = (lo - 0.5, hi + 0.5);
    let centre = (gl + gh) / 2.0;
    let anchors = [(gl, gl), (gh, gl), (gl, gh), (gh, gh), (centre, centre)];
    // per-axis offset from the nearest anchor
    let offset = |k: &Keypoint, (ax, ay): (f64, f64)| (k.x - ax).abs().max((k.y - ay).abs());
    for k in &feats.keypoints {
        let d = anchors
            .iter()
            .map(|&a| offset(k, a))
            .fold(f64::INFINITY, f64::min);
        assert!(
            d <= 3.0,
            "keypoint at ({:.2}, {:.2}) is {d:.2} px from every corner",
            k.x,
            k.y
        );
    }
    for &a in &anchors {
        assert!(
            feats.keypoints.iter().any(|k| offset(k, a) <= 3.0),
            "no keypoint near {a:?}"
        );
    }
}

#[test]
fn rotation_by_90_degrees_keeps_count() {
    let (_, frames, _) = synth_frames(3, 1);
    let f = &frames[0];
    let (w, h) = (f.width(), f.height());
    // exact pixel permutation: (x, y) -> (h - 1 - y, x)
    let mut px = vec![0.0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            px[x * h + (h - 1 - y)] = f.get(x, y);
        }
    }
    let r = Frame::new(0, h, w, px, "rot").unwrap();
    let p = SiftParams::default();
    let (a, b) = (
        extract(f, &p).unwrap().len(),
        extract(&r, &p).unwrap().len(),
    );
    let rel = (a as f64 - b as f64).abs() / a as f64;
    eprintln!("rot90: {a} vs {b} keypoints ({rel:.3})");
    assert!(rel <= 0.10, "{a} vs {b}");
}

#[test]
fn descriptors_are_unit_and_nonnegative() {
    let (_, frames, _) = synth_frames(5, 1);
    let p = SiftParams::default();
    let feats = extract(&frames[0], &p).unwrap();
    assert!(feats.len() > 50);
    for (k, d) in feats.keypoints.iter().zip(&feats.descriptors) {
        assert!((d.norm() - 1.0).abs() <= 1e-6);
        assert!(d.as_slice().iter().all(|&v| v >= 0.0));
        assert!(k.response >= p.response_threshold());
        assert!(k.x >= 0.0 && k.x < 320.0 && k.y >= 0.0 && k.y < 240.0 && k.sigma > 0.0);
        assert!((0.0..std::f64::consts::TAU).contains(&k.orientation));
    }
}

/// For each keypoint of `a` mapped through `map`, the nearest keypoint of
/// `b` at a similar scale; returns pairs of indices.
fn correspond(
    a: &Features,
    b: &Features,
    map: impl Fn(f64, f64) -> (f64, f64),
    tol: f64,
) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, ka) in a.keypoints.iter().enumerate() {
        let (x, y) = map(ka.x, ka.y);
        let best = b
            .keypoints
            .iter()
            .enumerate()
            .filter(|(_, kb)| (kb.sigma / ka.sigma - 1.0).abs() < 0.2)
            .map(|(j, kb)| (j, (kb.x - x).hypot(kb.y - y)))
            .filter(|(_, d)| *d <= tol)
            .min_by(|p, q| p.1.total_cmp(&q.1));
        if let Some((j, _)) = best {
            out.push((i, j));
        }
    }
    out
}

#[test]
fn rotation_by_15_degrees_keeps_descriptors() {
    let (_, frames, _) = synth_frames(2, 1);
    let f = &frames[0];
    let angle = 15f64.to_radians();
    let (r, fwd) = rotate(f, angle);
    let p = SiftParams::default();
    let (a, b) = (extract(f, &p).unwrap(), extract(&r, &p).unwrap());
    let pairs = correspond(&a, &b, fwd, 1.0);
    // among orientation duplicates pick the descriptor rotated by the angle
    let mut dists: Vec<f64> = pairs
        .iter()
        .filter(|(i, _)| {
            let k: &Keypoint = &a.keypoints[*i];
            k.x > 40.0 && k.x < 280.0 && k.y > 40.0 && k.y < 200.0
        })
        .map(|&(i, _)| {
            let ka = &a.keypoints[i];
            let (x, y) = (
                (ka.x - 159.5) * angle.cos() - (ka.y - 119.5) * angle.sin() + 159.5,
                (ka.x - 159.5) * angle.sin() + (ka.y - 119.5) * angle.cos() + 119.5,
            );
            b.keypoints
                .iter()
                .zip(&b.descriptors)
                .filter(|(kb, _)| {
                    (kb.x - x).hypot(kb.y - y) <= 1.0 && (kb.sigma / ka.sigma - 1.0).abs() < 0.2
                })
                .map(|(_, db)| descriptor_distance(a.descriptors[i].as_slice(), db.as_slice()))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    dists.sort_by(f64::total_cmp);
    let n = dists.len();
    eprintln!(
        "rot15: {n} pairs, median {:.3}, p90 {:.3}, max {:.3}, frac<0.45 {:.3}",
        dists[n / 2],
        dists[n * 9 / 10],
        dists[n - 1],
        dists.iter().filter(|&&d| d < 0.45).count() as f64 / n as f64
    );
    assert!(n > 30);
    assert!(dists[n / 2] < 0.45);
}

#[test]
fn brightness_offset_keeps_descriptors() {
    let (_, frames, _) = synth_frames(4, 1);
    let f = &frames[0];
    let dim = frame(f.width(), f.height(), |x, y| {
        0.85 * f.get(x as usize, y as usize) as f64
    });
    let lit = frame(f.width(), f.height(), |x, y| {
        0.85 * f.get(x as usize, y as usize) as f64 + 0.1
    });
    let p = SiftParams::default();
    let (a, b) = (extract(&dim, &p).unwrap(), extract(&lit, &p).unwrap());
    let pairs: Vec<(usize, usize)> = a
        .keypoints
        .iter()
        .enumerate()
        .filter_map(|(i, ka)| {
            b.keypoints
                .iter()
                .position(|kb| {
                    (kb.x - ka.x).hypot(kb.y - ka.y) < 0.01
                        && (kb.orientation - ka.orientation).abs() < 1e-3
                })
                .map(|j| (i, j))
        })
        .collect();
    eprintln!(
        "brightness: {} of {} keypoints matched",
        pairs.len(),
        a.len()
    );
    assert!(pairs.len() as f64 >= 0.9 * a.len() as f64);
    let worst = pairs
        .iter()
        .map(|&(i, j)| {
            descriptor_distance(a.descriptors[i].as_slice(), b.descriptors[j].as_slice())
        })
        .fold(0.0, f64::max);
    eprintln!("brightness: worst distance {worst:.2e}");
    assert!(worst < 0.05);
}

#[test]
fn extraction_is_deterministic_across_thread_counts() {
    let (_, frames, _) = synth_frames(6, 1);
    let p = SiftParams::default();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| extract(&frames[0], &p).unwrap())
    };
    let (a, b) = (run(1), run(8));
    assert_eq!(a.keypoints, b.keypoints);
    assert!(a.descriptors == b.descriptors);
    assert_eq!(extract(&frames[0], &p).unwrap().keypoints, a.keypoints);
}

#[test]
fn repeatability_on_rigid_render() {
    let (scene, frames, ledger) = synth_frames(1, 6);
    let p = SiftParams::default();
    let (a, b) = (
        extract(&frames[0], &p).unwrap(),
        extract(&frames[5], &p).unwrap(),
    );
    let dots_a = &ledger.frames[0].projections;
    let dots_b = &ledger.frames[5].projections;
    let mut hits = 0;
    let mut total = 0;
    for ka in &a.keypoints {
        // a keypoint on a dot follows the dot; anything else lies on the ground
        let on_dot = dots_a
            .iter()
            .filter(|d| (d.xy[0] - ka.x).hypot(d.xy[1] - ka.y) < 1.5)
            .min_by(|p, q| {
                let dp = (p.xy[0] - ka.x).hypot(p.xy[1] - ka.y);
                let dq = (q.xy[0] - ka.x).hypot(q.xy[1] - ka.y);
                dp.total_cmp(&dq)
            });
        let target = match on_dot {
            Some(d) => dots_b.iter().find(|q| q.point == d.point).map(|q| q.xy),
            None => scene.transfer_ground(0, 5, [ka.x, ka.y]),
        };
        let Some(t) = target else { continue };
        total += 1;
        if b.keypoints
            .iter()
            .any(|kb| (kb.x - t[0]).hypot(kb.y - t[1]) <= 2.0)
        {
            hits += 1;
        }
    }
    let rate = hits as f64 / total as f64;
    eprintln!("repeatability: {hits}/{total} = {rate:.3}");
    assert!(rate >= 0.30);
}
