use std::f64::consts::E;

use cuspdyn::algebra::RootData;
use cuspdyn::covering::{count_patterns, guaranteed_gap, BoxSpec};
use cuspdyn::entropy::{brin_katok_estimate, main_inequality_check, max_entropy};
use cuspdyn::height::{FlowParams, HeightLevels};
use cuspdyn::modular::{
    classical_height, closed_geodesic, excursions_of, injectivity_radius, sample_haar, trajectory, EmpiricalMeasure,
};

fn levels(ratio: f64) -> HeightLevels {
    HeightLevels::with_ratio(1.0, E, 1.1, ratio).unwrap()
}

#[test]
fn simulated_excursions_respect_the_transition_gap() {
    for ratio in [E.powi(2), E.powf(2.5), E.powi(3)] {
        let lv = levels(ratio);
        let gap = guaranteed_gap(&lv, E) as usize;
        for g in sample_haar(3000, 21) {
            let t = trajectory(&g, E, 80).unwrap();
            let rep = excursions_of(&t.heights, &lv);
            if let Some(seen) = rep.pattern.min_gap() {
                assert!(seen >= gap, "ratio {ratio}: gap {seen} < {gap}");
            }
        }
    }
}

#[test]
fn observed_patterns_are_counted_by_the_census() {
    // every observed pattern must be one of the admissible ones, so the
    // number of distinct observed patterns is below the census count
    let lv = levels(E * E);
    let len = 16;
    let census = count_patterns(len, &lv, E).unwrap();
    let mut seen = std::collections::BTreeSet::new();
    for g in sample_haar(20_000, 3) {
        let t = trajectory(&g, E, len).unwrap();
        seen.insert(excursions_of(&t.heights, &lv).pattern.intervals);
    }
    assert!((seen.len() as u128) <= census.count);
    assert!(census.within_bounds());
}

#[test]
fn periodic_orbits_return_to_their_heights() {
    let geo = closed_geodesic(&[4, 1]).unwrap();
    let h0 = classical_height(&geo.point).unwrap();
    let t = trajectory(&geo.point, geo.period.exp(), 3).unwrap();
    for h in t.heights {
        assert!((h - h0).abs() <= 1e-8 * h0);
    }
}

#[test]
fn estimated_entropies_satisfy_the_main_inequality() {
    let flow = FlowParams::new(E, RootData::real(1).unwrap()).unwrap();
    let h_m = max_entropy(&flow);
    let lv = levels(E * E);
    let spec = BoxSpec::new(0.5 * injectivity_radius(lv.s3), 25, E).unwrap();
    let haar = EmpiricalMeasure::haar(3000, 8).unwrap();
    let per = EmpiricalMeasure::periodic(&closed_geodesic(&[12, 1]).unwrap(), 3000).unwrap();
    for lambda in [0.0, 0.3, 1.0] {
        let mu = EmpiricalMeasure::mixture(lambda, &haar, &per).unwrap();
        let h = brin_katok_estimate(&mu, &spec, 0.05, 1).unwrap().value;
        assert!((h - lambda * 24.0 / 25.0).abs() < 0.05, "lambda {lambda}: {h}");
        let (nu, kept) = mu.restrict(|a| classical_height(&a.point).map_or(false, |y| y <= lv.s));
        let h_nu = kept.map_or(0.0, |k| brin_katok_estimate(&k, &spec, 0.05, 1).unwrap().value);
        let check = main_inequality_check(nu, h.min(h_m), h_nu.min(h_m), h_m, 0.05).unwrap();
        assert!(check.holds, "lambda {lambda}: slack {}", check.slack);
    }
}
