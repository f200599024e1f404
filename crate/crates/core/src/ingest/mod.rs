//! Streaming ingest of comment dumps into per-(user, subreddit) activity
//! counts, bot and activity filtering, and vocabulary selection.

mod parse;
mod stream;
mod tsv;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intern::Interner;

pub use parse::{parse_comment_line, CommentRecord, LineError, ParsedLine, SkipReason};
pub use stream::{expand_inputs, ingest_paths, ingest_reader, IngestReport};
pub use tsv::{read_activity, read_memberships, write_activity, write_memberships};

pub const DEFAULT_MIN_COMMENTS: u64 = 10;
pub const DEFAULT_TOP: usize = 10_400;

/// Comment counts per (user, subreddit) pair.
///
/// All stored counts are ≥ 1 and their total equals the number of records
/// accumulated into the table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActivityTable {
    users: Interner,
    subreddits: Interner,
    counts: HashMap<(u32, u32), u64>,
}

impl ActivityTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, author: &str, subreddit: &str) {
        self.add(author, subreddit, 1);
    }

    pub fn add(&mut self, author: &str, subreddit: &str, count: u64) {
        if count == 0 {
            return;
        }
        let u = self.users.intern(author);
        let s = self.subreddits.intern(subreddit);
        *self.counts.entry((u, s)).or_insert(0) += count;
    }

    pub fn get(&self, author: &str, subreddit: &str) -> u64 {
        match (self.users.get(author), self.subreddits.get(subreddit)) {
            (Some(u), Some(s)) => self.counts.get(&(u, s)).copied().unwrap_or(0),
            _ => 0,
        }
    }

    pub fn users(&self) -> &Interner {
        &self.users
    }

    pub fn subreddits(&self) -> &Interner {
        &self.subreddits
    }

    /// Number of stored (user, subreddit) rows.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Rows as `(user id, subreddit id, count)`, sorted by ids.
    pub fn rows(&self) -> Vec<(u32, u32, u64)> {
        let mut rows: Vec<_> = self.counts.iter().map(|(&(u, s), &c)| (u, s, c)).collect();
        rows.sort_unstable();
        rows
    }

    /// Exact merge: counts of shared pairs are summed, ids of `other` are
    /// remapped onto this table's interners.
    pub fn merge(&mut self, other: ActivityTable) {
        for (u, s, c) in other.rows() {
            self.add(other.users.name(u), other.subreddits.name(s), c);
        }
    }

    /// Re-assigns ids so that users and subreddits are numbered in
    /// lexicographic name order. Two tables holding the same counts are
    /// equal after canonicalisation regardless of ingestion order.
    pub fn canonicalize(&self) -> ActivityTable {
        let mut users: Vec<&str> = self.users.names().iter().map(String::as_str).collect();
        let mut subs: Vec<&str> = self.subreddits.names().iter().map(String::as_str).collect();
        users.sort_unstable();
        subs.sort_unstable();
        let users = Interner::from_names(users);
        let subreddits = Interner::from_names(subs);
        let counts = self
            .counts
            .iter()
            .map(|(&(u, s), &c)| {
                let u = users.get(self.users.name(u)).unwrap();
                let s = subreddits.get(self.subreddits.name(s)).unwrap();
                ((u, s), c)
            })
            .collect();
        ActivityTable {
            users,
            subreddits,
            counts,
        }
    }

    /// Name-keyed view, independent of id assignment.
    pub fn to_named(&self) -> BTreeMap<(String, String), u64> {
        self.counts
            .iter()
            .map(|(&(u, s), &c)| {
                (
                    (
                        self.users.name(u).to_owned(),
                        self.subreddits.name(s).to_owned(),
                    ),
                    c,
                )
            })
            .collect()
    }

    pub(crate) fn from_parts(
        users: Interner,
        subreddits: Interner,
        counts: HashMap<(u32, u32), u64>,
    ) -> Self {
        ActivityTable {
            users,
            subreddits,
            counts,
        }
    }
}

pub fn accumulate_activity<I>(records: I) -> ActivityTable
where
    I: IntoIterator<Item = CommentRecord>,
{
    let mut table = ActivityTable::new();
    for r in records {
        table.record(&r.author, &r.subreddit);
    }
    table
}

/// Accounts excluded before thresholding.
#[derive(Debug, Clone, Default)]
pub struct BotList {
    names: HashSet<String>,
    /// Also treat any account whose name ends in "bot" (any case) as a bot.
    pub suffix_heuristic: bool,
}

impl BotList {
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        BotList {
            names: names.into_iter().map(Into::into).collect(),
            suffix_heuristic: false,
        }
    }

    pub fn with_suffix_heuristic(mut self, on: bool) -> Self {
        self.suffix_heuristic = on;
        self
    }

    /// One account per line; everything after `#` is a comment.
    pub fn parse(text: &str) -> Self {
        let names = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(str::to_owned);
        BotList::new(names)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn is_bot(&self, name: &str) -> bool {
        if self.names.contains(name) {
            return true;
        }
        self.suffix_heuristic && name.to_ascii_lowercase().ends_with("bot")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty() && !self.suffix_heuristic
    }
}

/// Removes every row whose user is a bot. Remaining rows keep their counts;
/// users and subreddits left without rows disappear from the interners.
pub fn filter_bots(table: &ActivityTable, bots: &BotList) -> ActivityTable {
    let mut out = ActivityTable::new();
    for (u, s, c) in table.rows() {
        let user = table.users.name(u);
        if !bots.is_bot(user) {
            out.add(user, table.subreddits.name(s), c);
        }
    }
    out
}

/// Users active (count ≥ threshold) in each subreddit.
///
/// Every subreddit of the source table is kept, possibly with an empty
/// set; users active nowhere are dropped from the user interner.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MembershipSets {
    users: Interner,
    subreddits: Interner,
    /// Indexed by subreddit id; each list sorted ascending, no duplicates.
    members: Vec<Vec<u32>>,
}

impl MembershipSets {
    pub fn users(&self) -> &Interner {
        &self.users
    }

    pub fn subreddits(&self) -> &Interner {
        &self.subreddits
    }

    pub fn members(&self, subreddit: u32) -> &[u32] {
        &self.members[subreddit as usize]
    }

    pub fn members_of(&self, name: &str) -> Option<Vec<&str>> {
        let s = self.subreddits.get(name)?;
        Some(self.members(s).iter().map(|&u| self.users.name(u)).collect())
    }

    pub fn num_subreddits(&self) -> usize {
        self.members.len()
    }

    pub fn num_memberships(&self) -> usize {
        self.members.iter().map(Vec::len).sum()
    }

    /// For each user, the subreddit ids they are active in (ascending).
    pub fn user_lists(&self) -> Vec<Vec<u32>> {
        let mut lists = vec![Vec::new(); self.users.len()];
        for (s, users) in self.members.iter().enumerate() {
            for &u in users {
                lists[u as usize].push(s as u32);
            }
        }
        lists
    }

    /// Builds sets from explicit name lists. Users are interned in order of
    /// first appearance.
    pub fn from_named<S, U, I>(sets: impl IntoIterator<Item = (S, I)>) -> Self
    where
        S: AsRef<str>,
        U: AsRef<str>,
        I: IntoIterator<Item = U>,
    {
        let mut users = Interner::new();
        let mut subreddits = Interner::new();
        let mut members: Vec<BTreeSet<u32>> = Vec::new();
        for (sub, us) in sets {
            let s = subreddits.intern(sub.as_ref()) as usize;
            if s == members.len() {
                members.push(BTreeSet::new());
            }
            for u in us {
                members[s].insert(users.intern(u.as_ref()));
            }
        }
        MembershipSets {
            users,
            subreddits,
            members: members
                .into_iter()
                .map(|m| m.into_iter().collect())
                .collect(),
        }
    }

    pub fn to_named(&self) -> BTreeMap<String, BTreeSet<String>> {
        self.members
            .iter()
            .enumerate()
            .map(|(s, us)| {
                (
                    self.subreddits.name(s as u32).to_owned(),
                    us.iter().map(|&u| self.users.name(u).to_owned()).collect(),
                )
            })
            .collect()
    }

    /// Same as [`filter_bots`] but applied after thresholding.
    pub fn without_bots(&self, bots: &BotList) -> MembershipSets {
        self.restrict(|_, user| !bots.is_bot(user), None)
    }

    /// Keeps memberships accepted by `keep(subreddit, user)`; with `order`
    /// the subreddits are re-indexed in that order (names absent from the
    /// sets are ignored). Users left without memberships are dropped.
    fn restrict(
        &self,
        keep: impl Fn(&str, &str) -> bool,
        order: Option<&[String]>,
    ) -> MembershipSets {
        let subs: Vec<u32> = match order {
            Some(names) => names
                .iter()
                .filter_map(|n| self.subreddits.get(n))
                .collect(),
            None => (0..self.members.len() as u32).collect(),
        };
        let subreddits = Interner::from_names(subs.iter().map(|&s| self.subreddits.name(s)));
        // Keep user ids in their original relative order.
        let mut active = vec![false; self.users.len()];
        let mut kept: Vec<Vec<u32>> = Vec::with_capacity(subs.len());
        for &s in &subs {
            let sub = self.subreddits.name(s);
            let list: Vec<u32> = self.members[s as usize]
                .iter()
                .copied()
                .filter(|&u| keep(sub, self.users.name(u)))
                .collect();
            for &u in &list {
                active[u as usize] = true;
            }
            kept.push(list);
        }
        let mut remap = vec![u32::MAX; self.users.len()];
        let mut users = Interner::new();
        for (u, _) in active.iter().enumerate().filter(|(_, &a)| a) {
            remap[u] = users.intern(self.users.name(u as u32));
        }
        let members = kept
            .into_iter()
            .map(|l| l.into_iter().map(|u| remap[u as usize]).collect())
            .collect();
        MembershipSets {
            users,
            subreddits,
            members,
        }
    }

    pub(crate) fn from_parts(users: Interner, subreddits: Interner, members: Vec<Vec<u32>>) -> Self {
        debug_assert_eq!(subreddits.len(), members.len());
        MembershipSets {
            users,
            subreddits,
            members,
        }
    }
}

pub fn select_active_memberships(table: &ActivityTable, threshold: u64) -> MembershipSets {
    assert!(threshold >= 1, "activity threshold must be at least 1");
    let mut active: Vec<(u32, u32)> = table
        .counts
        .iter()
        .filter(|(_, &c)| c >= threshold)
        .map(|(&(u, s), _)| (u, s))
        .collect();
    active.sort_unstable();

    let mut users = Interner::new();
    let mut members = vec![Vec::new(); table.subreddits.len()];
    for (u, s) in active {
        let id = users.intern(table.users.name(u));
        members[s as usize].push(id);
    }
    for m in &mut members {
        m.sort_unstable();
    }
    MembershipSets {
        users,
        subreddits: table.subreddits.clone(),
        members,
    }
}

/// Retained subreddits, ordered by descending active-user count with ties
/// broken by name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubredditVocab {
    pub names: Vec<String>,
    pub activity: Vec<u64>,
}

impl SubredditVocab {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Vocabulary in the sets' own subreddit order, activity = set size.
    pub fn from_sets(sets: &MembershipSets) -> Self {
        SubredditVocab {
            names: sets.subreddits.names().to_vec(),
            activity: sets.members.iter().map(|m| m.len() as u64).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TopSelection {
    pub vocab: SubredditVocab,
    /// Memberships restricted to `vocab`, subreddit ids in vocab order.
    pub sets: MembershipSets,
    pub warning: Option<String>,
}

pub fn select_top_subreddits(sets: &MembershipSets, limit: usize) -> TopSelection {
    assert!(limit >= 1, "limit must be at least 1");
    let mut ranked: Vec<(u64, &str)> = sets
        .members
        .iter()
        .enumerate()
        .map(|(s, m)| (m.len() as u64, sets.subreddits.name(s as u32)))
        .collect();
    ranked.sort_unstable_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)));

    let warning = (limit > ranked.len()).then(|| {
        format!(
            "requested top {limit} subreddits but only {} are available; keeping all",
            ranked.len()
        )
    });
    ranked.truncate(limit);

    let vocab = SubredditVocab {
        names: ranked.iter().map(|(_, n)| (*n).to_owned()).collect(),
        activity: ranked.iter().map(|(a, _)| *a).collect(),
    };
    let restricted = sets.restrict(|_, _| true, Some(&vocab.names));
    TopSelection {
        vocab,
        sets: restricted,
        warning,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestOptions {
    pub inputs: Vec<String>,
    pub bots: Option<std::path::PathBuf>,
    pub bot_suffix_heuristic: bool,
    pub min_comments: u64,
    pub top: usize,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            inputs: Vec::new(),
            bots: None,
            bot_suffix_heuristic: false,
            min_comments: DEFAULT_MIN_COMMENTS,
            top: DEFAULT_TOP,
        }
    }
}

pub struct IngestOutput {
    /// Bot-filtered activity counts.
    pub table: ActivityTable,
    pub selection: TopSelection,
    pub report: IngestReport,
}

/// parse → shard merge → bot filter → activity threshold → top selection.
pub fn run_ingest(opts: &IngestOptions) -> Result<IngestOutput> {
    if opts.min_comments == 0 || opts.top == 0 {
        return Err(Error::Config("min_comments and top must be at least 1".into()));
    }
    let paths = expand_inputs(&opts.inputs)?;
    let (raw, mut report) = ingest_paths(&paths)?;
    let bots = match &opts.bots {
        Some(p) => BotList::load(p)?,
        None => BotList::default(),
    }
    .with_suffix_heuristic(opts.bot_suffix_heuristic);

    let table = filter_bots(&raw, &bots);
    report.bot_rows_removed = (raw.len() - table.len()) as u64;
    report.bot_comments_removed = raw.total() - table.total();
    report.users = table.users().len();
    report.subreddits = table.subreddits().len();

    let sets = select_active_memberships(&table, opts.min_comments);
    report.active_users = sets.users().len();
    let selection = select_top_subreddits(&sets, opts.top);
    report.retained_subreddits = selection.vocab.len();
    report.retained_users = selection.sets.users().len();
    if let Some(w) = &selection.warning {
        log::warn!("{w}");
        report.warnings.push(w.clone());
    }
    Ok(IngestOutput {
        table,
        selection,
        report,
    })
}
