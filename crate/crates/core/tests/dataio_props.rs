use std::collections::HashSet;

use pointprop_core::dataio::{
    crop, read_instances, read_points, read_probmap, read_rgb, read_stain_model, read_trilabel, split_dataset,
    stitch, tile, write_instances, write_points, write_probmap, write_rgb, write_stain_model, write_trilabel,
    SplitSpec,
};
use pointprop_core::synthetic::{generate_tile, TileConfig, EOSIN_OD, HEMATOXYLIN_OD};
use pointprop_core::{Point, PointSet, ProbMap, RgbImage, StainModel, TriLabelMap, Validate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(51);

    let points = PointSet::new((0..20).map(|i| Point::new(i * 3, 40 - i)).collect()).unwrap();
    write_points(&points, &dir.path().join("p.csv")).unwrap();
    assert_eq!(read_points(&dir.path().join("p.csv")).unwrap(), points);

    let values: Vec<f64> = (0..35).map(|_| f64::from(rng.random::<f32>())).collect();
    let map = ProbMap::new(7, 5, values).unwrap();
    write_probmap(&map, &dir.path().join("m.pfg")).unwrap();
    assert_eq!(read_probmap(&dir.path().join("m.pfg")).unwrap(), map);

    let labels = TriLabelMap::new(9, 4, (0..36).map(|_| rng.random_range(0..3)).collect()).unwrap();
    write_trilabel(&labels, &dir.path().join("t.png")).unwrap();
    assert_eq!(read_trilabel(&dir.path().join("t.png")).unwrap(), labels);

    let tile = generate_tile(&TileConfig::default());
    write_instances(&tile.instances, &dir.path().join("i.png")).unwrap();
    assert_eq!(read_instances(&dir.path().join("i.png")).unwrap(), tile.instances);

    write_rgb(&tile.image, &dir.path().join("rgb.png")).unwrap();
    let back = read_rgb(&dir.path().join("rgb.png")).unwrap();
    back.validate().unwrap();
    for (a, b) in back.samples.iter().zip(&tile.image.samples) {
        assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
    }

    let model = StainModel {
        columns: [HEMATOXYLIN_OD, EOSIN_OD],
        h_column: 0,
    };
    write_stain_model(&model, &dir.path().join("s.txt")).unwrap();
    assert_eq!(read_stain_model(&dir.path().join("s.txt")).unwrap(), model);
}

#[test]
fn quantized_rgb_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let img = RgbImage::new(2, 1, vec![0.0, 1.0, 128.0 / 255.0, 3.0 / 255.0, 0.5, 1.0]).unwrap();
    let path = dir.path().join("q.png");
    write_rgb(&img, &path).unwrap();
    let once = read_rgb(&path).unwrap();
    write_rgb(&once, &path).unwrap();
    assert_eq!(read_rgb(&path).unwrap(), once);
}

fn brute_stitch(patches: &[((usize, usize), ProbMap)], w: usize, h: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let covering: Vec<f64> = patches
                .iter()
                .filter(|((ox, oy), p)| x >= *ox && x < ox + p.width && y >= *oy && y < oy + p.height)
                .map(|((ox, oy), p)| p.get(x - ox, y - oy))
                .collect();
            out.push(covering.iter().sum::<f64>() / covering.len() as f64);
        }
    }
    out
}

#[test]
fn stitch_is_the_per_pixel_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(52);
    for _ in 0..100 {
        let (w, h) = (rng.random_range(2..=24), rng.random_range(2..=24));
        // one full cover plus two random patches
        let mut patches = vec![((0, 0), ProbMap::filled(w, h, rng.random_range(0.0..1.0)))];
        for _ in 0..2 {
            let (pw, ph) = (rng.random_range(1..=w), rng.random_range(1..=h));
            let origin = (rng.random_range(0..=w - pw), rng.random_range(0..=h - ph));
            let values = (0..pw * ph).map(|_| rng.random_range(0.0..1.0)).collect();
            patches.push((origin, ProbMap::new(pw, ph, values).unwrap()));
        }
        let got = stitch(&patches, w, h).unwrap();
        for (a, b) in got.values.iter().zip(brute_stitch(&patches, w, h)) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn tile_crop_stitch_reproduces_the_source() {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    for _ in 0..50 {
        let (w, h) = (rng.random_range(8..=60), rng.random_range(8..=60));
        let patch = rng.random_range(1..=w.min(h));
        let overlap = rng.random_range(0..patch);
        let source = ProbMap::new(w, h, (0..w * h).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap();
        let grid = tile(w, h, patch, overlap).unwrap();
        let patches: Vec<_> = grid
            .origins
            .iter()
            .map(|&o| (o, crop(&source, o, patch, patch).unwrap()))
            .collect();
        let back = stitch(&patches, w, h).unwrap();
        for (a, b) in back.values.iter().zip(&source.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn tile_layouts() {
    let axis = |g: &pointprop_core::dataio::PatchGrid| {
        let mut xs: Vec<usize> = g.origins.iter().map(|o| o.0).collect();
        xs.sort_unstable();
        xs.dedup();
        xs
    };
    let g = tile(1000, 1000, 250, 125).unwrap();
    assert_eq!(g.len(), 49);
    assert_eq!(axis(&g), vec![0, 125, 250, 375, 500, 625, 750]);
    assert_eq!(tile(224, 224, 224, 80).unwrap().origins, vec![(0, 0)]);
    assert_eq!(axis(&tile(500, 500, 224, 80).unwrap()), vec![0, 144, 276]);
    assert!(tile(100, 50, 64, 8).is_err());
}

#[test]
fn split_contract() {
    let ids: Vec<u32> = (1..=30).collect();
    let (a, b) = split_dataset(&ids, &SplitSpec::disjoint(3)).unwrap();
    assert_eq!((a.len(), b.len()), (15, 15));
    let sa: HashSet<_> = a.iter().collect();
    assert!(b.iter().all(|id| !sa.contains(id)));

    let full = SplitSpec {
        seed: 3,
        overlap_ratio: 1.0,
    };
    assert_eq!(split_dataset(&ids, &full).unwrap(), (ids.clone(), ids.clone()));

    for n in [20usize, 30] {
        let ids: Vec<usize> = (0..n).collect();
        for r in [0.2, 0.4, 0.6, 0.8] {
            let spec = SplitSpec {
                seed: 7,
                overlap_ratio: r,
            };
            let (a, b) = split_dataset(&ids, &spec).unwrap();
            let sa: HashSet<_> = a.iter().copied().collect();
            let sb: HashSet<_> = b.iter().copied().collect();
            let size = (n as f64 * (1.0 + r) / 2.0 - 1e-9).ceil() as usize;
            assert_eq!(sa.intersection(&sb).count(), (r * n as f64 + 1e-9).floor() as usize);
            assert_eq!(a.len().max(b.len()), size);
            assert_eq!(sa.union(&sb).count(), n);
            assert_eq!(split_dataset(&ids, &spec).unwrap(), (a, b));
        }
    }
}

#[test]
fn odd_disjoint_split() {
    let ids: Vec<u32> = (0..7).collect();
    let (a, b) = split_dataset(&ids, &SplitSpec::disjoint(0)).unwrap();
    assert_eq!((a.len(), b.len()), (4, 3));
}
