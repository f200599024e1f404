//! Symmetric subreddit × subreddit co-occurrence counts.
//!
//! `A[i][j]` is the number of users active in both subreddit `i` and
//! subreddit `j`. Only the strict upper triangle is stored; the diagonal is
//! never stored and zero entries never appear.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checksum::crc32;
use crate::error::{Error, Result};
use crate::ingest::{MembershipSets, SubredditVocab};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Entry {
    pub row: u32,
    pub col: u32,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CooccurrenceMatrix {
    vocab: SubredditVocab,
    /// Sorted by (row, col), row < col, count > 0.
    entries: Vec<Entry>,
}

impl CooccurrenceMatrix {
    /// Validates and sorts `entries`. Entries may be given in either
    /// orientation; `(j, i)` is stored as `(i, j)`.
    pub fn from_entries(vocab: SubredditVocab, entries: Vec<Entry>) -> Result<Self> {
        let n = vocab.len() as u32;
        let mut out = Vec::with_capacity(entries.len());
        for e in entries {
            if e.row == e.col {
                return Err(Error::Config(format!("diagonal entry ({}, {})", e.row, e.col)));
            }
            if e.row >= n || e.col >= n {
                return Err(Error::Config(format!(
                    "entry ({}, {}) outside vocabulary of {n}",
                    e.row, e.col
                )));
            }
            if e.count == 0 {
                continue;
            }
            let (row, col) = if e.row < e.col { (e.row, e.col) } else { (e.col, e.row) };
            out.push(Entry {
                row,
                col,
                count: e.count,
            });
        }
        out.sort_unstable();
        if out.windows(2).any(|w| (w[0].row, w[0].col) == (w[1].row, w[1].col)) {
            return Err(Error::Config("duplicate co-occurrence entry".into()));
        }
        Ok(CooccurrenceMatrix {
            vocab,
            entries: out,
        })
    }

    pub fn vocab(&self) -> &SubredditVocab {
        &self.vocab
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn dim(&self) -> usize {
        self.vocab.len()
    }

    /// Symmetric lookup; the diagonal and absent pairs read as 0.
    pub fn get(&self, i: u32, j: u32) -> u32 {
        if i == j {
            return 0;
        }
        let key = if i < j { (i, j) } else { (j, i) };
        self.entries
            .binary_search_by(|e| (e.row, e.col).cmp(&key))
            .map(|k| self.entries[k].count)
            .unwrap_or(0)
    }

    /// Subreddits without any stored entry. They cannot be embedded.
    pub fn zero_rows(&self) -> Vec<u32> {
        let mut seen = vec![false; self.dim()];
        for e in &self.entries {
            seen[e.row as usize] = true;
            seen[e.col as usize] = true;
        }
        (0..self.dim() as u32).filter(|&i| !seen[i as usize]).collect()
    }

    /// Debug export, one `name_i<TAB>name_j<TAB>count` line per stored entry.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for e in &self.entries {
            writeln!(
                w,
                "{}\t{}\t{}",
                self.vocab.names[e.row as usize], self.vocab.names[e.col as usize], e.count
            )?;
        }
        w.flush()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildOptions {
    /// Users active in more subreddits than this are left out entirely.
    pub max_memberships_per_user: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildReport {
    pub vocab_size: usize,
    pub users: usize,
    pub users_capped: usize,
    pub membership_cap: Option<usize>,
    pub pair_increments: u64,
    pub nnz: usize,
    pub empty_memberships: Vec<String>,
    pub zero_rows: Vec<String>,
}

const SHARD_USERS: usize = 4096;

fn pair_key(i: u32, j: u32) -> u64 {
    (u64::from(i) << 32) | u64::from(j)
}

/// Counts, for every pair of vocabulary subreddits, the users active in
/// both. Users are processed in parallel shards; each user with `d`
/// memberships contributes `d(d-1)/2` increments, and the shard maps are
/// merged by addition, so the result does not depend on scheduling.
pub fn build_cooccurrence(
    sets: &MembershipSets,
    vocab: &SubredditVocab,
    opts: &BuildOptions,
) -> Result<(CooccurrenceMatrix, BuildReport)> {
    if sets.subreddits().names() != vocab.names.as_slice() {
        return Err(Error::Config(
            "membership sets are not restricted to the vocabulary (names or order differ)".into(),
        ));
    }
    let lists = sets.user_lists();
    let cap = opts.max_memberships_per_user;
    let capped = cap.map_or(0, |c| lists.iter().filter(|l| l.len() > c).count());

    let (counts, increments) = lists
        .par_chunks(SHARD_USERS)
        .map(|shard| {
            let mut local: HashMap<u64, u32> = HashMap::new();
            let mut incs = 0u64;
            for subs in shard {
                if cap.is_some_and(|c| subs.len() > c) {
                    continue;
                }
                for (a, &i) in subs.iter().enumerate() {
                    for &j in &subs[a + 1..] {
                        *local.entry(pair_key(i, j)).or_insert(0) += 1;
                        incs += 1;
                    }
                }
            }
            (local, incs)
        })
        .reduce(
            || (HashMap::new(), 0),
            |(a, na), (b, nb)| {
                let (mut big, small) = if a.len() >= b.len() { (a, b) } else { (b, a) };
                for (k, v) in small {
                    *big.entry(k).or_insert(0) += v;
                }
                (big, na + nb)
            },
        );

    let entries: Vec<Entry> = counts
        .into_iter()
        .map(|(k, count)| Entry {
            row: (k >> 32) as u32,
            col: k as u32,
            count,
        })
        .collect();
    let matrix = CooccurrenceMatrix::from_entries(vocab.clone(), entries)?;

    let name = |i: u32| vocab.names[i as usize].clone();
    let report = BuildReport {
        vocab_size: vocab.len(),
        users: lists.len(),
        users_capped: capped,
        membership_cap: cap,
        pair_increments: increments,
        nnz: matrix.nnz(),
        empty_memberships: (0..vocab.len() as u32)
            .filter(|&s| sets.members(s).is_empty())
            .map(name)
            .collect(),
        zero_rows: matrix.zero_rows().into_iter().map(name).collect(),
    };
    if !report.zero_rows.is_empty() {
        log::warn!(
            "{} subreddits have no co-occurrence and cannot be embedded",
            report.zero_rows.len()
        );
    }
    Ok((matrix, report))
}

const MAGIC: &[u8; 4] = b"CVCM";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 8 + 4;

/// Binary layout, little endian:
///
/// ```text
/// magic "CVCM" | version u32 | vocab size u64 | entry count u64 | crc32 of payload u32
/// payload: per vocab entry (name len u32, name bytes, activity u64),
///          then per entry (row u32, col u32, count u32) sorted by (row, col)
/// ```
pub fn write_matrix<W: Write>(m: &CooccurrenceMatrix, mut w: W) -> std::io::Result<()> {
    let mut payload = Vec::with_capacity(m.vocab.len() * 24 + m.entries.len() * 12);
    for (name, &act) in m.vocab.names.iter().zip(&m.vocab.activity) {
        payload.extend_from_slice(&(name.len() as u32).to_le_bytes());
        payload.extend_from_slice(name.as_bytes());
        payload.extend_from_slice(&act.to_le_bytes());
    }
    for e in &m.entries {
        payload.extend_from_slice(&e.row.to_le_bytes());
        payload.extend_from_slice(&e.col.to_le_bytes());
        payload.extend_from_slice(&e.count.to_le_bytes());
    }
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(m.vocab.len() as u64).to_le_bytes())?;
    w.write_all(&(m.entries.len() as u64).to_le_bytes())?;
    w.write_all(&crc32(&payload).to_le_bytes())?;
    w.write_all(&payload)?;
    w.flush()
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::format(self.path, 0, "unexpected end of matrix payload"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// `path` is only used in diagnostics.
pub fn read_matrix<R: Read>(mut r: R, path: &Path) -> Result<CooccurrenceMatrix> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(path, 0, "file shorter than matrix header"));
    }
    let mut head = Cursor {
        buf: &bytes[..HEADER_LEN],
        pos: 0,
        path,
    };
    if head.take(4)? != MAGIC {
        return Err(Error::format(path, 0, "not a co-occurrence matrix file (bad magic)"));
    }
    let version = head.u32()?;
    if version != VERSION {
        return Err(Error::format(path, 0, format!("unsupported matrix version {version}")));
    }
    let n = head.u64()? as usize;
    let nnz = head.u64()? as usize;
    let expected = head.u32()?;
    let payload = &bytes[HEADER_LEN..];
    let actual = crc32(payload);
    if actual != expected {
        return Err(Error::Checksum {
            path: path.to_path_buf(),
            expected,
            actual,
        });
    }

    let mut cur = Cursor {
        buf: payload,
        pos: 0,
        path,
    };
    let mut vocab = SubredditVocab::default();
    for _ in 0..n {
        let len = cur.u32()? as usize;
        let name = std::str::from_utf8(cur.take(len)?)
            .map_err(|_| Error::format(path, 0, "subreddit name is not UTF-8"))?;
        vocab.names.push(name.to_owned());
        vocab.activity.push(cur.u64()?);
    }
    let mut entries = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        entries.push(Entry {
            row: cur.u32()?,
            col: cur.u32()?,
            count: cur.u32()?,
        });
    }
    if cur.pos != payload.len() {
        return Err(Error::format(path, 0, "trailing bytes after matrix payload"));
    }
    if entries.windows(2).any(|w| (w[0].row, w[0].col) >= (w[1].row, w[1].col)) {
        return Err(Error::format(path, 0, "matrix entries are not strictly sorted"));
    }
    CooccurrenceMatrix::from_entries(vocab, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::select_top_subreddits;
    use proptest::prelude::*;

    fn build(sets: &[(&str, Vec<&str>)]) -> CooccurrenceMatrix {
        let sets = MembershipSets::from_named(sets.iter().map(|(s, us)| (*s, us.clone())));
        let vocab = SubredditVocab::from_sets(&sets);
        build_cooccurrence(&sets, &vocab, &BuildOptions::default()).unwrap().0
    }

    fn idx(m: &CooccurrenceMatrix, name: &str) -> u32 {
        m.vocab().names.iter().position(|n| n == name).unwrap() as u32
    }

    #[test]
    fn intersection_counts() {
        let m = build(&[("A", vec!["u1", "u2"]), ("B", vec!["u1", "u2"]), ("C", vec!["u3"])]);
        let (a, b, c) = (idx(&m, "A"), idx(&m, "B"), idx(&m, "C"));
        assert_eq!(m.get(a, b), 2);
        assert_eq!(m.get(b, a), 2);
        assert_eq!(m.get(a, c), 0);
        assert_eq!(m.get(b, c), 0);
        assert_eq!(m.get(a, a), 0);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.zero_rows(), vec![c]);
    }

    #[test]
    fn single_subreddit_gives_empty_matrix() {
        let m = build(&[("A", vec!["u1", "u2"])]);
        assert_eq!(m.nnz(), 0);
    }

    #[test]
    fn cap_attained() {
        let m = build(&[("A", vec!["u1"]), ("B", vec!["u1"])]);
        assert_eq!(m.get(0, 1), 1);
    }

    #[test]
    fn empty_membership_is_flagged() {
        let sets = MembershipSets::from_named([("A", vec!["u1"]), ("B", vec!["u1"]), ("C", vec![])]);
        let vocab = SubredditVocab::from_sets(&sets);
        let (m, report) = build_cooccurrence(&sets, &vocab, &BuildOptions::default()).unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(report.empty_memberships, vec!["C"]);
        assert_eq!(report.zero_rows, vec!["C"]);
    }

    #[test]
    fn membership_cap_drops_heavy_users() {
        let sets = MembershipSets::from_named([
            ("A", vec!["u1", "heavy"]),
            ("B", vec!["u1", "heavy"]),
            ("C", vec!["heavy"]),
        ]);
        let vocab = SubredditVocab::from_sets(&sets);
        let opts = BuildOptions {
            max_memberships_per_user: Some(2),
        };
        let (m, report) = build_cooccurrence(&sets, &vocab, &opts).unwrap();
        assert_eq!(m.get(0, 1), 1);
        assert_eq!(m.get(0, 2), 0);
        assert_eq!(report.users_capped, 1);
        assert_eq!(report.pair_increments, 1);
    }

    #[test]
    fn rejects_unrestricted_sets() {
        let sets = MembershipSets::from_named([("A", vec!["u1"]), ("B", vec!["u1"])]);
        let top = select_top_subreddits(&sets, 1);
        assert!(build_cooccurrence(&sets, &top.vocab, &BuildOptions::default()).is_err());
        assert!(build_cooccurrence(&top.sets, &top.vocab, &BuildOptions::default()).is_ok());
    }

    #[test]
    fn from_entries_validates() {
        let vocab = SubredditVocab {
            names: vec!["a".into(), "b".into()],
            activity: vec![1, 1],
        };
        let e = |row, col, count| Entry { row, col, count };
        assert!(CooccurrenceMatrix::from_entries(vocab.clone(), vec![e(0, 0, 1)]).is_err());
        assert!(CooccurrenceMatrix::from_entries(vocab.clone(), vec![e(0, 2, 1)]).is_err());
        assert!(CooccurrenceMatrix::from_entries(vocab.clone(), vec![e(0, 1, 1), e(1, 0, 2)]).is_err());
        let m = CooccurrenceMatrix::from_entries(vocab, vec![e(1, 0, 3), e(0, 1, 0)]).unwrap();
        assert_eq!(m.entries(), &[e(0, 1, 3)]);
    }

    #[test]
    fn tsv_export() {
        let m = build(&[("A", vec!["u1", "u2"]), ("B", vec!["u1", "u2"])]);
        let mut buf = Vec::new();
        m.write_tsv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "A\tB\t2\n");
    }

    #[test]
    fn empty_matrix_round_trip() {
        let m = CooccurrenceMatrix::from_entries(SubredditVocab::default(), vec![]).unwrap();
        let mut buf = Vec::new();
        write_matrix(&m, &mut buf).unwrap();
        assert_eq!(read_matrix(buf.as_slice(), Path::new("mem")).unwrap(), m);
    }

    #[test]
    fn truncation_and_corruption_fail_the_checksum() {
        let m = build(&[("A", vec!["u1", "u2"]), ("B", vec!["u1", "u2"]), ("C", vec!["u1"])]);
        let mut buf = Vec::new();
        write_matrix(&m, &mut buf).unwrap();

        let truncated = &buf[..buf.len() - 5];
        assert!(matches!(
            read_matrix(truncated, Path::new("mem")),
            Err(Error::Checksum { .. })
        ));

        let mut flipped = buf.clone();
        let last = flipped.len() - 1;
        flipped[last] ^= 0x40;
        assert!(matches!(
            read_matrix(flipped.as_slice(), Path::new("mem")),
            Err(Error::Checksum { .. })
        ));

        assert!(read_matrix(&buf[..10], Path::new("mem")).is_err());
    }

    fn arb_sets() -> impl Strategy<Value = MembershipSets> {
        prop::collection::vec(prop::collection::btree_set(0u8..40, 0..15), 1..12).prop_map(|subs| {
            MembershipSets::from_named(subs.into_iter().enumerate().map(|(s, us)| {
                (
                    format!("s{s}"),
                    us.into_iter().map(|u| format!("u{u}")).collect::<Vec<_>>(),
                )
            }))
        })
    }

    proptest! {
        #[test]
        fn matrix_round_trip(sets in arb_sets()) {
            let vocab = SubredditVocab::from_sets(&sets);
            let (m, _) = build_cooccurrence(&sets, &vocab, &BuildOptions::default()).unwrap();
            let mut buf = Vec::new();
            write_matrix(&m, &mut buf).unwrap();
            prop_assert_eq!(read_matrix(buf.as_slice(), Path::new("mem")).unwrap(), m);
        }

        #[test]
        fn entries_are_bounded_by_set_sizes(sets in arb_sets()) {
            let vocab = SubredditVocab::from_sets(&sets);
            let (m, _) = build_cooccurrence(&sets, &vocab, &BuildOptions::default()).unwrap();
            for e in m.entries() {
                prop_assert!(e.row < e.col);
                prop_assert!(e.count > 0);
                let cap = sets.members(e.row).len().min(sets.members(e.col).len());
                prop_assert!(e.count as usize <= cap);
            }
        }
    }
}
