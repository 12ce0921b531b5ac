use std::collections::{BTreeSet, VecDeque};

use proptest::prelude::*;

use idla::forest::build_forest;
use idla::growth::{grow, grow_plan, shuffle_plan, GrowthSpec, Variant};
use idla::io::{parse_aggregate, parse_config, parse_forest, parse_site, parse_sites, write_aggregate, write_forest};
use idla::oracle::exact_exit_distribution;
use idla::Site;

fn connected(sites: &BTreeSet<Site>) -> bool {
    let Some(&first) = sites.iter().next() else {
        return true;
    };
    let mut seen = BTreeSet::from([first]);
    let mut queue = VecDeque::from([first]);
    while let Some(s) = queue.pop_front() {
        for t in s.neighbors() {
            if sites.contains(&t) && seen.insert(t) {
                queue.push_back(t);
            }
        }
    }
    seen.len() == sites.len()
}

fn variant() -> impl Strategy<Value = Variant> {
    prop_oneof![
        Just(Variant::Deterministic),
        Just(Variant::PoissonUsual),
        Just(Variant::PoissonClock),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn deterministic_size_and_axis(n in 1u32..8, m in 0u32..12, seed in any::<u64>()) {
        let agg = grow(&GrowthSpec::new(Variant::Deterministic, n, m, seed)).unwrap().aggregate;
        prop_assert_eq!(agg.len(), (2 * m as usize + 1) * n as usize);
        prop_assert_eq!(agg.site_set().len(), agg.len());
        for y in -(m as i32)..=m as i32 {
            prop_assert!(agg.contains(Site::new(0, y)));
        }
        prop_assert!(connected(&agg.site_set()));
    }

    #[test]
    fn any_plan_size_matches_particles(v in variant(), n in 1u32..6, m in 0u32..10, seed in any::<u64>()) {
        let spec = GrowthSpec::new(v, n, m, seed);
        let plan = spec.plan();
        let agg = grow_plan(&spec, &plan).unwrap().aggregate;
        prop_assert_eq!(agg.len(), plan.len());
        prop_assert!(agg.check().is_ok());
        let shuffled = grow_plan(&spec, &shuffle_plan(&plan, seed, 1)).unwrap().aggregate;
        prop_assert_eq!(shuffled.site_set(), agg.site_set());
    }

    #[test]
    fn forests_are_valid_and_round_trip(n in 1u32..6, m in 0u32..10, seed in any::<u64>()) {
        let agg = grow(&GrowthSpec::new(Variant::PoissonClock, n, m, seed)).unwrap().aggregate;
        let f = build_forest(&agg).unwrap();
        prop_assert!(f.validate().is_ok());
        prop_assert_eq!(f.edge_count(), f.len() - f.roots().count());
        let text = write_forest(&f);
        let back = parse_forest(&text).unwrap();
        prop_assert_eq!(write_forest(&back), text);
    }

    #[test]
    fn aggregates_round_trip(v in variant(), n in 1u32..6, m in 0u32..10, seed in any::<u64>()) {
        let agg = grow(&GrowthSpec::new(v, n, m, seed)).unwrap().aggregate;
        let text = write_aggregate(&agg);
        let back = parse_aggregate(&text).unwrap();
        prop_assert_eq!(back.site_set(), agg.site_set());
        prop_assert_eq!(write_aggregate(&back), text);
    }

    #[test]
    fn exit_laws_are_probability_vectors(cells in proptest::collection::btree_set((-3i32..=3, -3i32..=3), 1..12)) {
        let mut sites: Vec<Site> = cells.into_iter().map(|(x, y)| Site::new(x, y)).collect();
        sites.push(Site::ORIGIN);
        let d = exact_exit_distribution(&sites, Site::ORIGIN).unwrap();
        prop_assert!((d.total() - 1.0).abs() < 1e-9);
        for (s, p) in &d.probabilities {
            prop_assert!(*p >= 0.0);
            prop_assert!(!d.interior.contains(s));
            prop_assert!(s.neighbors().iter().any(|t| d.interior.contains(t)));
        }
    }

    #[test]
    fn parsers_never_panic(text in "\\PC{0,200}") {
        let _ = parse_aggregate(&text);
        let _ = parse_forest(&text);
        let _ = parse_config(&text);
        let _ = parse_sites(&text);
        let _ = parse_site(&text);
    }

    #[test]
    fn sites_round_trip(xs in proptest::collection::vec((any::<i32>(), any::<i32>()), 0..20)) {
        let sites: Vec<Site> = xs.iter().map(|&(x, y)| Site::new(x, y)).collect();
        let text = sites.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ");
        prop_assert_eq!(parse_sites(&text).unwrap(), sites);
    }
}
