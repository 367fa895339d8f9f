mod common;

use coalisure::compression::*;
use coalisure::game::{Coalition, CoalitionValue, GameSpec, ValueModel};
use coalisure::sampling::PrivateSamples;
use coalisure::scenario_core::ScenarioCore;

#[test]
fn algorithm_output_is_valid_and_not_below_minimum() {
    let mut rng = common::rng(41);
    let mut empty = 0;
    for case in 0..100 {
        let (spec, samples) = common::compression_instance(&mut rng, BRUTE_FORCE_LIMIT);
        let core = ScenarioCore::from_samples(&spec, &samples).unwrap();
        if core.is_empty().unwrap() {
            empty += 1;
        }
        let set = compress_all(&spec, &samples, CompressionOptions::default()).unwrap();
        let validity = check_validity(&spec, &samples, &set).unwrap();
        assert!(validity.is_valid(), "case {case}: {validity:?}");
        let min = brute_force_min_compression(&spec, &samples).unwrap();
        assert!(check_validity(&spec, &samples, &min).unwrap().is_valid());
        assert!(set.total() >= min.total(), "case {case}");
        let allowed: usize = (0..spec.n_agents()).map(|i| spec.allowed(i).len()).sum();
        assert!(set.total() <= allowed);
        for (i, kept) in set.per_agent.iter().enumerate() {
            assert!(kept.len() <= spec.allowed(i).len());
            assert!(kept.windows(2).all(|w| w[0].index < w[1].index));
        }
    }
    println!("{empty} of 100 instances have an empty core");
}

#[test]
fn minimal_set_is_minimal() {
    // no subset one smaller than the reported minimum reproduces the core
    let mut rng = common::rng(42);
    for _ in 0..20 {
        let (spec, samples) = common::compression_instance(&mut rng, 8);
        let min = brute_force_min_compression(&spec, &samples).unwrap();
        let full = ScenarioCore::from_samples(&spec, &samples).unwrap();
        let flat: Vec<(usize, usize)> = (0..spec.n_agents())
            .flat_map(|a| (0..samples.count(a)).map(move |k| (a, k)))
            .collect();
        if min.total() == 0 {
            continue;
        }
        use itertools::Itertools;
        for subset in (0..flat.len()).combinations(min.total() - 1) {
            let mut sel = vec![Vec::new(); spec.n_agents()];
            for p in subset {
                sel[flat[p].0].push(flat[p].1);
            }
            let rebuilt = rebuild_core(&spec, &samples, &sel).unwrap();
            let same = rebuilt.same_set_as(&full).unwrap()
                || (rebuilt.is_empty().unwrap() && full.is_empty().unwrap());
            assert!(!same);
        }
    }
}

#[test]
fn compression_is_deterministic() {
    let mut rng = common::rng(43);
    let (spec, samples) = common::compression_instance(&mut rng, 12);
    let a = compress_all(&spec, &samples, CompressionOptions::default()).unwrap();
    let b = compress_all(&spec, &samples, CompressionOptions::default()).unwrap();
    assert_eq!(a, b);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let c = pool
        .install(|| compress_all(&spec, &samples, CompressionOptions::default()))
        .unwrap();
    assert_eq!(a, c);
}

#[test]
fn duplicate_samples_keep_first_occurrence() {
    let mut model = ValueModel::new();
    for i in 0..2 {
        let mut slope = vec![0.0; 2];
        slope[i] = 1.0;
        model.insert(Coalition::singleton(i), CoalitionValue::affine(0.0, slope));
    }
    let spec = GameSpec::new(2, 10.0, 2, model, None).unwrap();
    let xs = PrivateSamples::from_vectors(
        vec![
            vec![vec![2.0, 0.0], vec![2.0, 0.0], vec![1.0, 0.0]],
            vec![vec![0.0, 1.0]],
        ],
        None,
    )
    .unwrap();
    let set = compress_all(&spec, &xs, CompressionOptions::default()).unwrap();
    assert_eq!(set.selection(), vec![vec![0], vec![0]]);
    assert_eq!(set.per_agent[0][0].recruited_by, vec![Coalition::singleton(0)]);
    assert!(check_validity(&spec, &xs, &set).unwrap().is_valid());
}
