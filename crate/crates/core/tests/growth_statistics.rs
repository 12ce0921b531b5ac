use std::collections::BTreeMap;

use idla::analysis::stats::{chi_square, mean, std_error, total_variation};
use idla::growth::{build_classical, grow, grow_coupled_pair, GrowthSpec, Variant};
use idla::oracle::exact_small_aggregate_distribution;
use idla::random::level_count;
use idla::{RandomSource, Site};

#[test]
fn poisson_usual_mean_size() {
    let sizes: Vec<f64> = (0..2000u64)
        .map(|seed| grow(&GrowthSpec::new(Variant::PoissonUsual, 4, 10, seed)).unwrap().aggregate.len() as f64)
        .collect();
    let m = mean(&sizes);
    let se = (84.0f64 / 2000.0).sqrt();
    assert!((m - 84.0).abs() <= 3.0 * se, "mean size {m}, 3σ = {}", 3.0 * se);
}

#[test]
fn clock_level_counts_have_mean_n() {
    let per_level: Vec<f64> = (0..2000u64).map(|seed| level_count(seed, 3, 6.0) as f64).collect();
    let m = mean(&per_level);
    assert!((m - 6.0).abs() <= 3.0 * (6.0f64 / 2000.0).sqrt(), "mean count {m}");
    let spec_counts: Vec<f64> = (0..2000u64)
        .map(|seed| {
            let plan = GrowthSpec::new(Variant::PoissonClock, 6, 2, seed).plan();
            plan.iter().filter(|e| e.level == -1).count() as f64
        })
        .collect();
    let m = mean(&spec_counts);
    assert!((m - 6.0).abs() <= 3.0 * std_error(&spec_counts), "mean count {m}");
}

fn classical_histogram(n: u32, reps: u64) -> BTreeMap<Vec<Site>, u64> {
    let mut hist = BTreeMap::new();
    for seed in 0..reps {
        let mut sites = build_classical(n, seed).unwrap().sites().to_vec();
        sites.sort();
        *hist.entry(sites).or_insert(0u64) += 1;
    }
    hist
}

#[test]
fn classical_three_particles_match_the_exact_law() {
    let exact = exact_small_aggregate_distribution(&[(0, 3)]).unwrap();
    let reps = 200_000u64;
    let hist = classical_histogram(3, reps);
    for k in hist.keys() {
        assert!(exact.contains_key(k), "{k:?} has probability zero");
    }
    let empirical: BTreeMap<Vec<Site>, f64> = hist.iter().map(|(k, &c)| (k.clone(), c as f64 / reps as f64)).collect();
    assert!(total_variation(&exact, &empirical) < 0.01);
    let counts: Vec<u64> = exact.keys().map(|k| hist.get(k).copied().unwrap_or(0)).collect();
    let probs: Vec<f64> = exact.values().copied().collect();
    assert!(chi_square(&counts, &probs).p_value > 1e-3);
}

#[test]
fn two_particles_pick_a_uniform_neighbor() {
    let reps = 100_000u64;
    let mut hist: BTreeMap<Site, u64> = BTreeMap::new();
    for seed in 0..reps {
        let agg = grow(&GrowthSpec::new(Variant::Deterministic, 2, 0, seed)).unwrap().aggregate;
        assert!(agg.contains(Site::ORIGIN));
        let other = agg.sites().iter().copied().find(|&s| s != Site::ORIGIN).unwrap();
        *hist.entry(other).or_default() += 1;
    }
    assert_eq!(hist.len(), 4);
    let sigma = (0.25 * 0.75 / reps as f64).sqrt();
    for (s, c) in hist {
        assert!((c as f64 / reps as f64 - 0.25).abs() <= 3.0 * sigma, "{s}: {c}");
    }
}

#[test]
fn streams_and_stacks_agree_in_law() {
    let reps = 600u64;
    let width = |source: RandomSource| -> Vec<f64> {
        (0..reps)
            .map(|seed| {
                let spec = GrowthSpec::new(Variant::Deterministic, 6, 30, seed).with_source(source);
                let agg = grow(&spec).unwrap().aggregate;
                (agg.row_width(0) + agg.row_width(5)) as f64 / 2.0
            })
            .collect()
    };
    let a = width(RandomSource::Stacks);
    let b = width(RandomSource::Streams);
    let se = (std_error(&a).powi(2) + std_error(&b).powi(2)).sqrt();
    assert!((mean(&a) - mean(&b)).abs() <= 3.0 * se, "{} vs {}", mean(&a), mean(&b));
}

#[test]
fn deterministic_truncations_are_nested() {
    for seed in 0..200u64 {
        let small = 1 + (seed % 6) as u32;
        let large = small + 1 + (seed % 5) as u32;
        let spec = GrowthSpec::new(Variant::Deterministic, 1 + (seed % 4) as u32, small, seed);
        let (a, b, log) = grow_coupled_pair(&spec, small, large).unwrap();
        assert!(log.inclusion_held, "seed {seed}");
        assert!(a.site_set().is_subset(&b.site_set()), "seed {seed}");
    }
}
