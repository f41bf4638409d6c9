mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_block, random_defi_block};
use txparallax::analysis::{analyze_block, AnalysisOptions, CliqueSearch};
use txparallax::disentangle::remove_router;
use txparallax::report::{emit_report, MetricRecord, MetricSeries, ReportFormat, Window, DEFAULT_PERCENTILES};
use txparallax::{build_tx_graph, conflicting, ConflictMode, DisentangleConfig, TxAccess, TxGraph};

fn edges(g: &TxGraph) -> std::collections::BTreeSet<(usize, usize)> {
    g.edges().collect()
}

fn graph_from(seed: u64, n: usize, density: f64) -> TxGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<u64> = (0..n).map(|_| rng.gen_range(1..=1000)).collect();
    let mut e = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(density) {
                e.push((u, v));
            }
        }
    }
    TxGraph::from_edges(&weights, &e)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conflicts_are_symmetric(seed in any::<u64>()) {
        let b = random_block(&mut ChaCha8Rng::seed_from_u64(seed), 1, 6, 15);
        for x in &b.transactions {
            for y in &b.transactions {
                for mode in [ConflictMode::WriteAware, ConflictMode::AnyTouch] {
                    prop_assert_eq!(conflicting(x, y, mode), conflicting(y, x, mode));
                }
            }
        }
    }

    #[test]
    fn write_aware_edges_are_any_touch_edges(seed in any::<u64>()) {
        let b = random_defi_block(&mut ChaCha8Rng::seed_from_u64(seed), 1, 12);
        let blocks = std::slice::from_ref(&b);
        let cfg = DisentangleConfig::default();
        for rewrites in [None, Some(&cfg)] {
            let aware = build_tx_graph(blocks, ConflictMode::WriteAware, rewrites).unwrap();
            let touch = build_tx_graph(blocks, ConflictMode::AnyTouch, rewrites).unwrap();
            prop_assert!(edges(&aware).is_subset(&edges(&touch)));
        }
    }

    #[test]
    fn disentangling_only_removes_edges(seed in any::<u64>(), tokens in any::<bool>(), routers in any::<bool>()) {
        let b = random_defi_block(&mut ChaCha8Rng::seed_from_u64(seed), 1, 12);
        let blocks = std::slice::from_ref(&b);
        let cfg = DisentangleConfig { enable_tokens: tokens, enable_routers: routers, ..DisentangleConfig::default() };
        for mode in [ConflictMode::WriteAware, ConflictMode::AnyTouch] {
            let original = build_tx_graph(blocks, mode, None).unwrap();
            let rewritten = build_tx_graph(blocks, mode, Some(&cfg)).unwrap();
            prop_assert!(edges(&rewritten).is_subset(&edges(&original)));
            prop_assert_eq!(rewritten.weights(), original.weights());
        }
    }

    #[test]
    fn router_removal_is_idempotent(seed in any::<u64>()) {
        let b = random_defi_block(&mut ChaCha8Rng::seed_from_u64(seed), 1, 8);
        let cfg = DisentangleConfig::default();
        for t in &b.transactions {
            let once = remove_router(&t.root_call, t.sender, &cfg);
            prop_assert_eq!(&remove_router(&once, t.sender, &cfg), &once);
            let mut again = t.clone();
            again.root_call = once;
            prop_assert_eq!(TxAccess::of(&again, Some(&cfg)).scopes, TxAccess::of(t, Some(&cfg)).scopes);
        }
    }

    #[test]
    fn adding_a_transaction_keeps_existing_edges(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = random_defi_block(&mut rng, 1, 10);
        let extra = random_defi_block(&mut rng, 1, 1).transactions.pop().unwrap();
        let cfg = DisentangleConfig::default();
        for rewrites in [None, Some(&cfg)] {
            for mode in [ConflictMode::WriteAware, ConflictMode::AnyTouch] {
                let before = edges(&build_tx_graph(std::slice::from_ref(&b), mode, rewrites).unwrap());
                let mut bigger = b.clone();
                bigger.gas_used += extra.gas_used;
                bigger.transactions.push(extra.clone());
                let after = edges(&build_tx_graph(std::slice::from_ref(&bigger), mode, rewrites).unwrap());
                prop_assert!(before.is_subset(&after));
            }
        }
    }

    #[test]
    fn bounds_form_a_chain(seed in any::<u64>(), n in 0usize..30, density in 0.0f64..1.0) {
        let g = graph_from(seed, n, density);
        for clique in [CliqueSearch::Exact { budget: None }, CliqueSearch::Skip] {
            let m = analyze_block(&g, &AnalysisOptions { clique, ..Default::default() });
            let upper = m.upper_bound_gas();
            prop_assert!(m.heaviest_tx_gas <= upper);
            prop_assert!(upper <= m.schedule_sequential_gas);
            prop_assert!(m.schedule_sequential_gas <= m.heaviest_cc_gas);
            prop_assert!(m.heaviest_cc_gas <= m.total_gas);
            prop_assert!(m.speedup_lower <= m.speedup_upper);
            prop_assert!(m.speedup_upper <= m.speedup_loose);
            if let Some(e) = m.relative_error {
                prop_assert!(e >= 0.0);
            }
        }
    }

    #[test]
    fn aggregation_ignores_order_within_a_window(seed in any::<u64>(), n in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let records: Vec<MetricRecord> = (0..n)
            .map(|i| {
                let g = graph_from(rng.gen(), rng.gen_range(1..12), 0.4);
                MetricRecord {
                    first_block: i as u64,
                    last_block: i as u64,
                    timestamp: 1_656_633_600,
                    metrics: analyze_block(&g, &AnalysisOptions::default()),
                }
            })
            .collect();
        let render = |records: Vec<MetricRecord>| {
            let mut out = Vec::new();
            emit_report(&MetricSeries::new(records, Window::Daily), ReportFormat::Csv, &DEFAULT_PERCENTILES, &mut out).unwrap();
            out
        };
        let mut shuffled = records.clone();
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.gen_range(0..=i));
        }
        prop_assert_eq!(render(records), render(shuffled));
    }
}
