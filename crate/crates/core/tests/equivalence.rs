//! Pruned and exhaustive mining agree on instances with real signal, where
//! the discovery phase has work to do.

use sdsm::{diff_results, generate, mine, oracle_mine, GenConfig, MiningConfig};

#[test]
fn planted_instances_agree() {
    let mut with_discoveries = 0;
    for seed in 0..12u64 {
        let (ds, _) = generate(&GenConfig {
            n_pos: 20,
            n_neg: 20,
            traj_len: 14,
            step_sigma: 1.0,
            planted_len: 6,
            planted_frac: 0.5 + 0.1 * (seed % 4) as f64,
            noise_sigma: 0.1,
            seed,
        })
        .unwrap();
        for eps in [0.2, 0.4, 1.0] {
            let config = MiningConfig {
                eps,
                min_len: 4,
                top_k: 2 + (seed % 3) as usize,
                perms: 100,
                alpha: 0.05,
                seed,
                threads: 1,
                ..MiningConfig::default()
            };
            let a = mine(&ds, &config).unwrap();
            let b = oracle_mine(&ds, &config).unwrap();
            let diffs = diff_results(&a, &b);
            assert!(diffs.is_empty(), "seed {seed}, eps {eps}: {diffs:?}");
            assert!(a.diagnostics.nodes_visited <= b.diagnostics.nodes_visited);
            if !a.discoveries.is_empty() {
                with_discoveries += 1;
            }
        }
    }
    assert!(
        with_discoveries >= 24,
        "only {with_discoveries} runs had discoveries"
    );
}

#[test]
fn thread_count_does_not_change_results() {
    let (ds, _) = generate(&GenConfig {
        n_pos: 15,
        n_neg: 15,
        traj_len: 20,
        planted_len: 6,
        planted_frac: 0.6,
        noise_sigma: 0.1,
        seed: 3,
        ..GenConfig::default()
    })
    .unwrap();
    let base = MiningConfig {
        eps: 0.3,
        min_len: 4,
        top_k: 3,
        perms: 200,
        seed: 9,
        ..MiningConfig::default()
    };
    let one = mine(&ds, &base).unwrap();
    assert!(!one.discoveries.is_empty());
    for threads in [2, 4, 8] {
        let many = mine(
            &ds,
            &MiningConfig {
                threads,
                ..base.clone()
            },
        )
        .unwrap();
        assert!(diff_results(&one, &many).is_empty(), "threads = {threads}");
        assert_eq!(one.discoveries, many.discoveries);
    }
}
