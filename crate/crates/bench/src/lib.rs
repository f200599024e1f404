//! Shared fixtures for the benchmarks.

use commvec::cooccur::{build_cooccurrence, BuildOptions, CooccurrenceMatrix};
use commvec::ingest::{accumulate_activity, select_active_memberships, MembershipSets, SubredditVocab};
use commvec::pipeline::synth::{generate_block_dump, BlockSpec};

/// Memberships from the default three-block synthetic dump.
pub fn block_memberships(users: usize, seed: u64) -> MembershipSets {
    let dump = generate_block_dump(
        &BlockSpec {
            users,
            ..BlockSpec::default()
        },
        seed,
    );
    let table = accumulate_activity(dump.records);
    select_active_memberships(&table, 10)
}

pub fn block_matrix(users: usize, seed: u64) -> CooccurrenceMatrix {
    let sets = block_memberships(users, seed);
    let vocab = SubredditVocab::from_sets(&sets);
    build_cooccurrence(&sets, &vocab, &BuildOptions::default())
        .expect("synthetic memberships are consistent")
        .0
}
