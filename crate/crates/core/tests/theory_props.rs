mod common;

use cecib::theory::{empirical_beta_threshold, merge_clusters};
use cecib::{cecib_cost, Clustering};
use common::*;

#[test]
fn threshold_separates_split_and_merged_costs() {
    let mut r = rng(41);
    for _ in 0..100 {
        let inst = coarsening_instance(&mut r, 200, 3);
        let data = dataset(&inst.points);
        let side = full_side(&inst.labels);
        let fine = Clustering::from_assignment(inst.fine.clone());
        // a point whose cluster changed identifies the merged pair
        let moved = inst.fine.iter().zip(&inst.coarse).position(|(f, c)| f != c).unwrap();
        let block = [inst.coarse[moved], inst.fine[moved]];
        let merged = merge_clusters(&fine, &block).unwrap();
        let b0 = empirical_beta_threshold(&data, &fine, &block, 0.0).unwrap();

        let cost = |c: &Clustering, beta: f64| cecib_cost(&data, c, &side, beta, 0.0).unwrap().total;
        let at = (cost(&fine, b0.max(0.0)) - cost(&merged, b0.max(0.0))).abs();
        if b0 >= 0.0 {
            assert!(at < 1e-8, "costs differ by {at} at the threshold");
        }
        for d in [1e-3, 0.1, 1.0] {
            let above = b0 + d;
            if above >= 0.0 {
                assert!(cost(&fine, above) <= cost(&merged, above) + 1e-8);
            }
            let below = b0 - d;
            if below >= 0.0 {
                assert!(cost(&fine, below) >= cost(&merged, below) - 1e-8);
            }
        }
    }
}
