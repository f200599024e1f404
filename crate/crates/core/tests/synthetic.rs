use std::collections::{BTreeMap, BTreeSet};

use commvec::classify::{run_baseline, run_experiment, Channel, ExperimentConfig, GoldLabel};
use commvec::cooccur::{build_cooccurrence, BuildOptions};
use commvec::embed::{train, EmbedConfig};
use commvec::ingest::{accumulate_activity, select_active_memberships, SubredditVocab};
use commvec::pipeline::synth::{generate_block_dump, generate_context_corpus, BlockSpec, ContextSpec};

#[test]
fn block_model_has_denser_diagonal_blocks() {
    let spec = BlockSpec::default();
    let dump = generate_block_dump(&spec, 9);

    // oracle straight from the records: users with >= 10 comments per subreddit
    let mut counts: BTreeMap<(&str, &str), u32> = BTreeMap::new();
    for r in &dump.records {
        *counts.entry((r.subreddit.as_str(), r.author.as_str())).or_default() += 1;
    }
    let mut members: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for (&(s, u), &c) in &counts {
        if c >= 10 {
            members.entry(s).or_default().insert(u);
        }
    }
    let (mut on, mut on_n, mut off, mut off_n) = (0usize, 0usize, 0usize, 0usize);
    let subs: Vec<&str> = members.keys().copied().collect();
    for (i, a) in subs.iter().enumerate() {
        for b in &subs[i + 1..] {
            let shared = members[a].intersection(&members[b]).count();
            if dump.block_of[*a] == dump.block_of[*b] {
                on += shared;
                on_n += 1;
            } else {
                off += shared;
                off_n += 1;
            }
        }
    }
    let (on_mean, off_mean) = (on as f64 / on_n as f64, off as f64 / off_n as f64);
    assert!(on_mean > 5.0 * off_mean, "block {on_mean} vs off-block {off_mean}");

    // the library's own path agrees with the oracle
    let table = accumulate_activity(dump.records.iter().cloned());
    let sets = select_active_memberships(&table, 10);
    let vocab = SubredditVocab::from_sets(&sets);
    let (m, _) = build_cooccurrence(&sets, &vocab, &BuildOptions::default()).unwrap();
    let total: u64 = m.entries().iter().map(|e| u64::from(e.count)).sum();
    assert_eq!(total, (on + off) as u64);
}

#[test]
fn training_loss_falls_on_the_block_model() {
    let dump = generate_block_dump(
        &BlockSpec {
            users: 1500,
            ..BlockSpec::default()
        },
        4,
    );
    let table = accumulate_activity(dump.records.iter().cloned());
    let sets = select_active_memberships(&table, 10);
    let vocab = SubredditVocab::from_sets(&sets);
    let (m, _) = build_cooccurrence(&sets, &vocab, &BuildOptions::default()).unwrap();
    let out = train(
        &m,
        &EmbedConfig {
            dim: 16,
            epochs: 60,
            seed: 4,
            ..EmbedConfig::default()
        },
    )
    .unwrap();
    let t = &out.loss_trace;
    assert!(t[t.len() - 1] < 0.1 * t[0]);
    // smoothed trace is non-increasing
    let smooth: Vec<f64> = t.windows(5).map(|w| w.iter().sum::<f64>() / 5.0).collect();
    assert!(smooth.windows(2).all(|w| w[1] <= w[0] * 1.001));
}

#[test]
fn perfectly_correlated_context_is_fully_recoverable() {
    let spec = ContextSpec {
        comments: 1500,
        rho: 1.0,
        cue_share: 0.0,
        ..ContextSpec::default()
    };
    let side = |b: usize| (0..10).map(|s| format!("b{b}_s{s:02}")).collect::<Vec<_>>();
    let corpus = generate_context_corpus(&spec, &side(0), &side(1), 8);
    let config = ExperimentConfig {
        seed: 8,
        ..ExperimentConfig::default()
    };
    let name = run_experiment(&corpus, Channel::Name, None, &config, None).unwrap();
    assert_eq!(name.accuracy, 1.0);

    // text carries no label information, so the baseline cannot beat the
    // majority rate by more than noise
    let base = run_baseline(&corpus, &config).unwrap();
    let deg = corpus.iter().filter(|c| c.gold == GoldLabel::Derogatory).count() as f64;
    let majority = (deg / corpus.len() as f64).max(1.0 - deg / corpus.len() as f64);
    assert!(base.accuracy <= majority + 0.02, "{} vs {majority}", base.accuracy);
}
