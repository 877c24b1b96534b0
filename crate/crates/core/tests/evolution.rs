use std::collections::{BTreeMap, BTreeSet};

use evolsm::config::ExperimentConfig;
use evolsm::env::TaskId;
use evolsm::evolution::{evaluate_fitness, evolve, mutate, Chromosome, EvolutionParams, FitnessContext};
use evolsm::harness::{evolve_task, task_setup};
use evolsm::seed;
use evolsm::snn::LifParams;
use evolsm::topology::{LiquidGrid, TopologyParams};
use rand::Rng as _;

/// Every `(source, target)` a mutation may add, by direct enumeration.
fn legal_mutations(c: &Chromosome, activity: &[bool]) -> BTreeSet<(usize, usize)> {
    let grid = c.grid();
    let n = c.neurons();
    let mut out = BTreeSet::new();
    for j in (0..n).filter(|&j| !activity[j]) {
        for i in (0..n).filter(|&i| activity[i]) {
            let d = grid.distance(i, j);
            if i != j && d <= c.d_th() && !c.get(i, j) {
                out.insert((i, j));
            }
        }
    }
    out
}

#[test]
fn three_by_three_mutations_match_enumeration() {
    let grid = LiquidGrid::new(3, 3).unwrap();
    let mut rng = seed::rng(31, &[]);
    for case in 0..40 {
        let d_th = [1.0, 1.5, 3.0][case % 3];
        let n = grid.neurons();
        let eligible: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && grid.distance(i, j) <= d_th)
            .collect();
        let mut bits = vec![0u8; n * n];
        for &(i, j) in &eligible {
            if rng.gen_bool(0.2) {
                bits[i * n + j] = 1;
            }
        }
        let c = Chromosome::from_bits(grid, d_th, bits).unwrap();
        let activity: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        let legal = legal_mutations(&c, &activity);
        let targets: BTreeSet<usize> = legal.iter().map(|&(_, j)| j).collect();

        let mut seen_targets: BTreeMap<usize, usize> = BTreeMap::new();
        let mut seen_pairs = BTreeSet::new();
        let draws = 600;
        for _ in 0..draws {
            let (child, changed) = mutate(&c, &activity, 1.0, &mut rng);
            assert_eq!(changed, !legal.is_empty());
            if !changed {
                assert_eq!(child, c);
                continue;
            }
            let added: Vec<(usize, usize)> = child.edges().filter(|&(i, j)| !c.get(i, j)).collect();
            assert_eq!(added.len(), 1);
            assert_eq!(child.edge_count(), c.edge_count() + 1);
            assert!(legal.contains(&added[0]), "{:?} not legal", added[0]);
            *seen_targets.entry(added[0].1).or_default() += 1;
            seen_pairs.insert(added[0]);
        }
        if !legal.is_empty() {
            assert_eq!(seen_pairs, legal, "every legal mutation should occur");
            // Targets are uniform over inactive neurons with a free active neighbour.
            let expected = draws as f64 / targets.len() as f64;
            for t in &targets {
                let got = seen_targets[t] as f64;
                assert!((got - expected).abs() < 5.0 * expected.sqrt() + 1.0, "target {t}: {got} vs {expected}");
            }
        }
    }
}

#[test]
fn density_cap_is_never_exceeded() {
    let grid = LiquidGrid::default();
    let c = Chromosome::random(grid, &TopologyParams::default(), 4).unwrap();
    let activity: Vec<bool> = (0..100).map(|i| i % 2 == 0).collect();
    let cap = (c.edge_count() + 3) as f64 / 10_000.0;
    let mut rng = seed::rng(5, &[]);
    let mut cur = c;
    let mut added = 0;
    for _ in 0..10 {
        let (next, changed) = mutate(&cur, &activity, cap, &mut rng);
        added += usize::from(changed);
        cur = next;
        assert!(cur.density() <= cap + 1e-12);
    }
    assert_eq!(added, 3);
}

#[test]
fn task_evolution_is_monotone_and_capped() {
    let mut cfg = ExperimentConfig::for_task(TaskId::TMaze);
    cfg.evolution = EvolutionParams {
        n_ini: 16,
        n_opt: 5,
        offspring_per_individual: 4,
        g_th: 4,
        generations: 8,
        ..cfg.evolution
    };
    for master in 0..3 {
        let setup = task_setup(&cfg, master).unwrap();
        let out = evolve_task(&cfg, &setup, master).unwrap();
        let best = out.record.best();
        assert_eq!(best.len(), 9);
        assert!(best.windows(2).all(|w| w[0] <= w[1]), "{best:?}");
        assert_eq!(out.survivors.len(), 5);
        assert_eq!(out.survivors[0].fitness.sp, *best.last().unwrap());
        for s in &out.survivors {
            assert!(s.chromosome.density() <= cfg.evolution.density_cap);
        }
    }
}

#[test]
fn evolve_rejects_bad_params() {
    let grid = LiquidGrid::default();
    let cfg = ExperimentConfig::for_task(TaskId::TMaze);
    let setup = task_setup(&cfg, 0).unwrap();
    let params = EvolutionParams {
        n_opt: 200,
        ..EvolutionParams::default()
    };
    assert!(evolve(&params, grid, &setup.context, 0).is_err());
}

/// Best fitness reachable from `c` by any sequence of at most `depth` legal mutations.
fn exhaustive_best(c: &Chromosome, ctx: &FitnessContext, depth: usize) -> usize {
    let f = evaluate_fitness(c, ctx).unwrap();
    if depth == 0 {
        return f.sp;
    }
    let mut best = f.sp;
    for (i, j) in legal_mutations(c, &f.activity) {
        let mut bits = c.bits().to_vec();
        bits[i * c.neurons() + j] = 1;
        let child = Chromosome::from_bits(*c.grid(), c.d_th(), bits).unwrap();
        best = best.max(exhaustive_best(&child, ctx, depth - 1));
    }
    best
}

#[test]
fn tiny_grid_evolution_matches_exhaustive_search() {
    let grid = LiquidGrid::new(3, 3).unwrap();
    let topology = TopologyParams::default();
    let mut rng = seed::rng(3, &[]);
    for case in 0..6 {
        // Drive two or three random neurons with varied strengths over a few presentations.
        let trains: Vec<Vec<Vec<f64>>> = (0..3)
            .map(|_| {
                let mut drive = vec![0.0; 9];
                for _ in 0..rng.gen_range(2..=3) {
                    drive[rng.gen_range(0..9)] = rng.gen_range(0.6..3.0);
                }
                vec![drive; 6]
            })
            .collect();
        let ctx = FitnessContext::from_trains(trains, topology, LifParams::default()).unwrap();
        let params = EvolutionParams {
            n_ini: 1,
            n_opt: 1,
            offspring_per_individual: 400,
            g_th: 1,
            generations: 2,
            rate: 0.0,
            density_cap: 1.0,
            ..EvolutionParams::default()
        };
        let out = evolve(&params, grid, &ctx, case).unwrap();
        let initial = Chromosome::random(grid, &topology, seed::derive(case, &[seed::stream::INITIAL, 0])).unwrap();
        let best = out.record.best();
        assert_eq!(best[0], evaluate_fitness(&initial, &ctx).unwrap().sp);
        // With every one-edge mutation sampled, generation 1 reaches the one-step optimum,
        // and nothing beats the two-step optimum.
        assert_eq!(best[1], exhaustive_best(&initial, &ctx, 1), "case {case}");
        assert!(best[2] <= exhaustive_best(&initial, &ctx, 2), "case {case}");
        assert!(best[2] >= best[1]);
    }
}
