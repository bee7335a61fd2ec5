use dtmad::data::{Dataset, Label};
use dtmad::detectors::{dtm_score, score_dataset, DetectorConfig, Method};
use dtmad::eval::roc_auc;
use dtmad::{NeighborIndex, Order};
use proptest::prelude::*;

fn cloud(max_n: usize, d: usize) -> impl Strategy<Value = Dataset> {
    prop::collection::vec(prop::collection::vec(-10.0f64..10.0, d), 6..max_n)
        .prop_map(|rows| Dataset::from_rows(&rows).unwrap())
}

fn scores(data: &Dataset, cfg: DetectorConfig) -> Vec<f64> {
    score_dataset(data, &cfg).unwrap().scores
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dtm_is_one_lipschitz(
        data in cloud(60, 3),
        x in prop::collection::vec(-12.0f64..12.0, 3),
        y in prop::collection::vec(-12.0f64..12.0, 3),
        kf in 0.0f64..1.0,
        q in prop::sample::select(vec![1.0, 1.5, 2.0, 4.0, f64::INFINITY]),
    ) {
        let index = NeighborIndex::build(&data);
        let k = 1 + (kf * (data.n() - 1) as f64) as usize;
        let q = Order::new(q).unwrap();
        let dx = dtm_score(&index, &x, k, q).unwrap();
        let dy = dtm_score(&index, &y, k, q).unwrap();
        let gap = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        prop_assert!((dx - dy).abs() <= gap + 1e-9);
    }

    #[test]
    fn dtm_is_monotone_in_q(data in cloud(60, 2), kf in 0.0f64..1.0) {
        let k = 1 + (kf * (data.n() - 1) as f64) as usize;
        let mut prev = vec![0.0f64; data.n()];
        for q in [1.0, 1.5, 2.0, 3.0, 8.0, f64::INFINITY] {
            let s = scores(&data, DetectorConfig::dtm(Order::new(q).unwrap()).with_k(k));
            for (a, b) in prev.iter().zip(&s) {
                prop_assert!(*b >= a - 1e-12 * (1.0 + a.abs()));
            }
            prev = s;
        }
    }

    #[test]
    fn scores_are_invariant_under_rigid_motions(
        data in cloud(50, 2),
        angle in 0.0f64..std::f64::consts::TAU,
        shift in prop::collection::vec(-100.0f64..100.0, 2),
        method in prop::sample::select(Method::ALL.to_vec()),
    ) {
        let (s, c) = angle.sin_cos();
        let moved = data
            .map_points(2, |p, out| {
                out[0] = c * p[0] - s * p[1] + shift[0];
                out[1] = s * p[0] + c * p[1] + shift[1];
            })
            .unwrap();
        let cfg = DetectorConfig::new(method).with_k(3);
        prop_assert!(close(&scores(&data, cfg), &scores(&moved, cfg), 1e-9));
    }

    #[test]
    fn distance_scores_scale_and_ratio_scores_do_not(
        data in cloud(50, 3),
        factor in 0.01f64..100.0,
        method in prop::sample::select(Method::ALL.to_vec()),
    ) {
        let scaled = data.map_points(3, |p, out| {
            for (o, v) in out.iter_mut().zip(p) {
                *o = factor * v;
            }
        }).unwrap();
        let cfg = DetectorConfig::new(method).with_k(4);
        let base = scores(&data, cfg);
        let expected: Vec<f64> = match method {
            Method::Dtmf | Method::Lof => base.clone(),
            _ => base.iter().map(|v| v * factor).collect(),
        };
        prop_assert!(close(&expected, &scores(&scaled, cfg), 1e-9));
    }

    #[test]
    fn knn_and_kthnn_are_dtm_endpoints(data in cloud(80, 4), kf in 0.0f64..1.0) {
        let k = 1 + (kf * (data.n() - 1) as f64) as usize;
        prop_assert_eq!(
            scores(&data, DetectorConfig::new(Method::Knn).with_k(k)),
            scores(&data, DetectorConfig::dtm(Order::Finite(1.0)).with_k(k))
        );
        prop_assert_eq!(
            scores(&data, DetectorConfig::new(Method::Kthnn).with_k(k)),
            scores(&data, DetectorConfig::dtm(Order::Infinity).with_k(k))
        );
    }

    #[test]
    fn auc_is_rank_based(
        raw in prop::collection::vec((-5.0f64..5.0, any::<bool>()), 2..60),
    ) {
        let mut labels: Vec<Label> = raw.iter().map(|(_, b)| if *b { Label::Anomaly } else { Label::Normal }).collect();
        labels[0] = Label::Anomaly;
        labels[1] = Label::Normal;
        let s: Vec<f64> = raw.iter().map(|(v, _)| *v).collect();
        let auc = roc_auc(&s, &labels).unwrap();
        let transformed: Vec<f64> = s.iter().map(|v| v.exp() * 3.0 + 1.0).collect();
        prop_assert_eq!(auc, roc_auc(&transformed, &labels).unwrap());
        let mut sorted = s.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).all(|w| w[0] < w[1]) {
            let neg: Vec<f64> = s.iter().map(|v| -v).collect();
            prop_assert!((auc + roc_auc(&neg, &labels).unwrap() - 1.0).abs() <= 1e-15);
        }
    }
}

#[test]
fn thread_count_does_not_change_scores() {
    let mut rng = dtmad::rng::SeededRng::new(3);
    let data = Dataset::new((0..3000).map(|_| rng.standard_normal()).collect(), 3).unwrap();
    for method in Method::ALL {
        let cfg = DetectorConfig::new(method);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| scores(&data, cfg))
        };
        assert_eq!(run(1), run(4), "{method}");
    }
}
