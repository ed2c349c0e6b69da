use proptest::prelude::*;

use ssm_edge::conv::valid_convolve;
use ssm_edge::crossbar::{crossbar_convolve, estimate_throughput, CrossbarConfig, ThroughputModel};
use ssm_edge::erosion::{wind_erosion, ErosionParams};
use ssm_edge::kernels::{Kernel3, SOBEL_X};
use ssm_edge::metrics::{count_confusion, f_measure, ods_ois, ssim, ConfusionCounts};
use ssm_edge::postproc::{
    gradient_direction, gradient_magnitude, hysteresis_threshold, non_max_suppress, BinaryEdgeMap,
    HysteresisParams, EDGE,
};
use ssm_edge::scan::{scan_image, scan_with_flips, GradientField, ScanBackend, ScanConfig};
use ssm_edge::{GrayImage, Grid};

fn image(rows: usize, cols: usize) -> impl Strategy<Value = GrayImage> {
    prop::collection::vec(0.0..=255.0f64, rows * cols).prop_map(move |v| Grid::from_vec(rows, cols, v).unwrap())
}

fn sized_image() -> impl Strategy<Value = GrayImage> {
    (3usize..14, 3usize..14).prop_flat_map(|(r, c)| image(r, c))
}

fn edge_map(rows: usize, cols: usize, density: f64) -> impl Strategy<Value = BinaryEdgeMap> {
    prop::collection::vec(prop::bool::weighted(density), rows * cols)
        .prop_map(move |v| BinaryEdgeMap::from_mask(&Grid::from_vec(rows, cols, v).unwrap()))
}

fn field(rows: usize, cols: usize) -> impl Strategy<Value = GradientField> {
    let plane = move || prop::collection::vec(-50.0..50.0f64, rows * cols);
    (plane(), plane()).prop_map(move |(x, y)| {
        GradientField::new(Grid::from_vec(rows, cols, x).unwrap(), Grid::from_vec(rows, cols, y).unwrap()).unwrap()
    })
}

fn naive_confusion(pred: &BinaryEdgeMap, gt: &BinaryEdgeMap) -> ConfusionCounts {
    let (rows, cols) = gt.dims();
    let mut c = ConfusionCounts::default();
    for r in 0..rows {
        for col in 0..cols {
            let mut n = 0;
            for rr in r.saturating_sub(2)..=(r + 2).min(rows - 1) {
                for cc in col.saturating_sub(2)..=(col + 2).min(cols - 1) {
                    n += usize::from(pred.is_edge((rr, cc)));
                }
            }
            if gt.is_edge((r, col)) {
                if (3..=12).contains(&n) {
                    c.tp += 1;
                } else {
                    c.fn_ += 1;
                }
            } else if n >= 12 {
                c.fp += 1;
            }
        }
    }
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scan_is_linear(pair in (3usize..12, 3usize..12).prop_flat_map(|(r, c)| (image(r, c), image(r, c))), k in -3.0..3.0f64) {
        let (x, y) = pair;
        let cfg = ScanConfig::default();
        let combo = x.zip_map(&y, |a, b| k * a + b).unwrap();
        let fx = scan_image(&x, &cfg).unwrap();
        let fy = scan_image(&y, &cfg).unwrap();
        let fc = scan_image(&combo, &cfg).unwrap();
        let scale = fx.gx.max_abs().max(fy.gx.max_abs()).max(fx.gy.max_abs()).max(fy.gy.max_abs()).max(1.0);
        for (plane_c, (plane_x, plane_y)) in [(&fc.gx, (&fx.gx, &fy.gx)), (&fc.gy, (&fx.gy, &fy.gy))] {
            for ((c, a), b) in plane_c.iter().zip(plane_x.iter()).zip(plane_y.iter()) {
                prop_assert!((c - (k * a + b)).abs() <= 1e-9 * scale * (1.0 + k.abs()));
            }
        }
    }

    #[test]
    fn scan_is_deterministic(img in sized_image()) {
        let cfg = ScanConfig::default();
        let a = scan_with_flips(&img, &cfg, &ScanBackend::Exact).unwrap();
        let b = scan_with_flips(&img, &cfg, &ScanBackend::Exact).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn magnitude_and_direction_ranges(f in field(6, 7)) {
        let m = gradient_magnitude(&f);
        let d = gradient_direction(&f);
        prop_assert!(m.iter().all(|&v| v >= 0.0));
        prop_assert!(d.iter().all(|&t| t > -std::f64::consts::FRAC_PI_2 && t <= std::f64::consts::FRAC_PI_2));
    }

    #[test]
    fn nms_only_zeroes(f in field(9, 8)) {
        let m = gradient_magnitude(&f);
        let t = non_max_suppress(&m, &gradient_direction(&f)).unwrap();
        for (a, b) in t.iter().zip(m.iter()) {
            prop_assert!(*a == 0.0 || a == b);
        }
    }

    #[test]
    fn hysteresis_contract(
        vals in prop::collection::vec(0.0..255.0f64, 100),
        high in 0.0..255.0f64,
        frac in 0.0..=1.0f64,
    ) {
        let m = Grid::from_vec(10, 10, vals).unwrap();
        let low = high * frac;
        let e = hysteresis_threshold(&m, &HysteresisParams::new(high, low).unwrap()).unwrap();
        for ((p, &v), &o) in m.indexed_iter().zip(e.as_grid().iter()) {
            prop_assert!(o == 0 || o == EDGE);
            if v > high {
                prop_assert_eq!(o, EDGE, "strong pixel {:?} dropped", p);
            }
            if v < low {
                prop_assert_eq!(o, 0);
            }
        }
    }

    #[test]
    fn raising_high_never_adds_edges(
        vals in prop::collection::vec(0.0..255.0f64, 144),
        h1 in 0.0..255.0f64,
        dh in 0.0..60.0f64,
    ) {
        let m = Grid::from_vec(12, 12, vals).unwrap();
        let h2 = (h1 + dh).min(255.0);
        let lo = hysteresis_threshold(&m, &HysteresisParams::from_high(h1).unwrap()).unwrap();
        let hi = hysteresis_threshold(&m, &HysteresisParams::from_high(h2).unwrap()).unwrap();
        for p in hi.edge_pixels() {
            prop_assert!(lo.is_edge(p));
        }
    }

    #[test]
    fn erosion_removes_only(map in edge_map(24, 24, 0.25)) {
        let (out, trace) = wind_erosion(&map, &ErosionParams::default()).unwrap();
        for p in out.edge_pixels() {
            prop_assert!(map.is_edge(p));
        }
        prop_assert_eq!(trace.steps.len(), 7);
        prop_assert_eq!(trace.input_pixels, map.edge_count());
        prop_assert_eq!(trace.output_pixels, out.edge_count());
        prop_assert_eq!(
            trace.input_pixels,
            trace.output_pixels + trace.deleted_pixels + trace.dropped_junction_pixels
        );
        let (again, _) = wind_erosion(&map, &ErosionParams::default()).unwrap();
        prop_assert_eq!(again, out);
    }

    #[test]
    fn confusion_matches_naive(pred in edge_map(16, 16, 0.3), gt in edge_map(16, 16, 0.15)) {
        let c = count_confusion(&pred, &gt).unwrap();
        prop_assert_eq!(c, naive_confusion(&pred, &gt));
        prop_assert_eq!(c.tp + c.fn_, gt.edge_count() as u64);
        let f = f_measure(&c);
        prop_assert!((0.0..=1.0).contains(&f));
    }

    #[test]
    fn empty_prediction_scores(gt in edge_map(12, 15, 0.2)) {
        let c = count_confusion(&BinaryEdgeMap::empty(12, 15), &gt).unwrap();
        prop_assert_eq!(c.fp, 0);
        prop_assert_eq!(c.tp, 0);
        prop_assert_eq!(c.fn_, gt.edge_count() as u64);
    }

    #[test]
    fn ssim_symmetric_and_reflexive(a in edge_map(20, 20, 0.2), b in edge_map(20, 20, 0.2)) {
        let ab = ssim(&a, &b).unwrap();
        let ba = ssim(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12);
        prop_assert!((-1.0..=1.0).contains(&ab));
        prop_assert!((ssim(&a, &a).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn ods_ois_in_unit_interval(
        counts in prop::collection::vec(prop::collection::vec((0u64..50, 0u64..50, 0u64..50), 5), 1..4)
    ) {
        let sweep: Vec<Vec<ConfusionCounts>> = counts
            .iter()
            .map(|img| img.iter().map(|&(tp, fp, fn_)| ConfusionCounts { tp, fp, fn_ }).collect())
            .collect();
        let s = ods_ois(&sweep).unwrap();
        prop_assert!((0.0..=1.0).contains(&s.ods));
        prop_assert!((0.0..=1.0).contains(&s.ois));
    }

    #[test]
    fn throughput_increases(a in 100_000u64..2_000_000_000, d in 1u64..10_000_000) {
        let m = ThroughputModel::reference();
        let t1 = estimate_throughput(a, &m).unwrap();
        let t2 = estimate_throughput(a + d, &m).unwrap();
        prop_assert!(t2.seconds > t1.seconds);
        prop_assert!(t2.fps < t1.fps);
    }

    #[test]
    fn ideal_crossbar_is_exact_and_linear(
        pair in (3usize..10, 3usize..10).prop_flat_map(|(r, c)| (image(r, c), image(r, c))),
        k in prop::array::uniform3(prop::array::uniform3(-2.0..2.0f64)),
    ) {
        let (x, y) = pair;
        let kernel = Kernel3(k);
        let cfg = CrossbarConfig::ideal();
        let mut rng = rand::rng();
        let ox = crossbar_convolve(&x, &kernel, &cfg, &mut rng).unwrap();
        let oy = crossbar_convolve(&y, &kernel, &cfg, &mut rng).unwrap();
        let sum = x.zip_map(&y, |a, b| a + b).unwrap();
        let os = crossbar_convolve(&sum, &kernel, &cfg, &mut rng).unwrap();
        let exact = valid_convolve(&x, &kernel).unwrap();
        let scale = exact.max_abs().max(1.0);
        for (d, e) in ox.decoded.iter().zip(exact.iter()) {
            prop_assert!((d - e).abs() <= 1e-12 * scale);
        }
        let vscale = os.volts.max_abs().max(1e-30);
        for ((s, a), b) in os.volts.iter().zip(ox.volts.iter()).zip(oy.volts.iter()) {
            prop_assert!((s - (a + b)).abs() <= 1e-12 * vscale);
        }
    }
}

#[test]
fn zero_sum_kernel_on_flat_input() {
    let x = Grid::filled(7, 7, 1.0);
    let mut rng = rand::rng();
    let noisy_ideal = CrossbarConfig {
        noise_level: 0.3,
        ..CrossbarConfig::ideal()
    };
    let out = crossbar_convolve(&x, &SOBEL_X, &noisy_ideal, &mut rng).unwrap();
    assert!(out.decoded.iter().all(|&v| v == 0.0));

    // 256 levels put zero entries half a step off; the residue stays small
    // next to the kernel's full-scale response of 4.
    let quantized = CrossbarConfig {
        noise_level: 0.05,
        samples_per_pulse: 4,
        ..CrossbarConfig::default()
    };
    let out = crossbar_convolve(&x, &SOBEL_X, &quantized, &mut rng).unwrap();
    assert!(out.decoded.iter().all(|v| v.abs() < 0.04), "{:?}", out.decoded.max_abs());
}
