//! Desk-scale performance of the exact index.

use std::time::{Duration, Instant};

use dtmad::rng::SeededRng;
use dtmad::{Dataset, NeighborIndex};

#[test]
fn hundred_thousand_points_in_ten_dimensions() {
    let (n, d, k) = (100_000, 10, 100);
    let mut rng = SeededRng::new(42);
    let data = Dataset::new((0..n * d).map(|_| rng.standard_normal()).collect(), d).unwrap();
    let start = Instant::now();
    let index = NeighborIndex::build(&data);
    let lists = index.knn_all(k).unwrap();
    let elapsed = start.elapsed();
    println!("n={n} d={d} k={k}: build + self queries in {elapsed:.2?}");
    assert_eq!(lists.len(), n);
    assert!(lists.iter().enumerate().all(|(i, l)| l.len() == k && l.indices[0] == i));
    // Spot-check against exhaustive search.
    for i in (0..n).step_by(9_973) {
        assert_eq!(lists[i], index.knn_query_brute_force(data.point(i), k).unwrap());
    }
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
}
