//! Synthetic data with planted structure: a block-model comment dump, a
//! city × sport lattice with its composition and analogy suites, and a
//! labelled corpus whose labels depend on the posting community.
//!
//! Everything is a pure function of the spec. Each generator draws from its
//! own ChaCha stream, so toggling one part leaves the others unchanged.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classify::{write_corpus, GoldLabel, LabeledComment};
use crate::error::{Error, Result};
use crate::ingest::CommentRecord;
use crate::vecspace::{AnalogyTest, CompositionTest};

const BASE_UTC: i64 = 1_500_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlockSpec {
    pub blocks: usize,
    /// Subreddits per block.
    pub subs_per_block: usize,
    pub users: usize,
    pub p_in: f64,
    pub p_out: f64,
    /// Comments per active (user, subreddit), inclusive range.
    pub min_comments: u32,
    pub max_comments: u32,
    /// Each user also leaves up to this many stray comments in random
    /// subreddits. These stay below the activity threshold.
    pub stray_comments: u32,
}

impl Default for BlockSpec {
    fn default() -> Self {
        BlockSpec {
            blocks: 3,
            subs_per_block: 20,
            users: 5000,
            p_in: 0.3,
            p_out: 0.01,
            min_comments: 10,
            max_comments: 14,
            stray_comments: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeSpec {
    pub cities: usize,
    pub sports: usize,
    /// Fans per team; each is also active in the team's city and sport hubs.
    pub team_users: usize,
    /// Users active in a single hub only.
    pub hub_users: usize,
    /// Chance that a team fan is also active in one random other team.
    pub crossover: f64,
    pub min_comments: u32,
    pub max_comments: u32,
}

impl Default for LatticeSpec {
    fn default() -> Self {
        LatticeSpec {
            cities: 4,
            sports: 3,
            team_users: 80,
            hub_users: 150,
            crossover: 0.1,
            min_comments: 10,
            max_comments: 14,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContextSpec {
    pub comments: usize,
    /// Probability that an ambiguous-token comment carries its community's
    /// dominant label (DEG in antagonistic, NDG in supportive communities).
    pub rho: f64,
    /// Ambiguous tokens; also the stratification `slur` field.
    pub tokens: Vec<String>,
    /// Share of comments posted in antagonistic communities.
    pub antagonistic_share: f64,
    /// Share of comments carrying a textual cue whose label does not depend
    /// on the community.
    pub cue_share: f64,
    pub cue_reliability: f64,
    pub filler_words: usize,
    /// Communities per side when no block model supplies subreddit names.
    pub communities_per_side: usize,
}

impl Default for ContextSpec {
    fn default() -> Self {
        ContextSpec {
            comments: 5000,
            rho: 0.9,
            tokens: vec!["qwerk".into(), "blatz".into()],
            antagonistic_share: 0.55,
            cue_share: 0.3,
            cue_reliability: 0.95,
            filler_words: 300,
            communities_per_side: 20,
        }
    }
}

/// Dump hygiene: things ingest must filter out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    /// Bot accounts, each commenting heavily everywhere.
    pub bots: usize,
    pub deleted_comments: usize,
    pub malformed_lines: usize,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            bots: 2,
            deleted_comments: 50,
            malformed_lines: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub block: Option<BlockSpec>,
    pub lattice: Option<LatticeSpec>,
    pub context: Option<ContextSpec>,
    pub noise: NoiseSpec,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            seed: 0,
            block: Some(BlockSpec::default()),
            lattice: Some(LatticeSpec::default()),
            context: Some(ContextSpec::default()),
            noise: NoiseSpec::default(),
        }
    }
}

impl SyntheticSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: SyntheticSpec =
            toml::from_str(text).map_err(|e| Error::Config(format!("synthetic spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_owned()));
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if let Some(b) = &self.block {
            if b.blocks == 0 || b.subs_per_block == 0 {
                return bad("block model needs at least one block and one subreddit");
            }
            if !prob(b.p_in) || !prob(b.p_out) || b.p_out > b.p_in {
                return bad("block model needs 0 <= p_out <= p_in <= 1");
            }
            if b.min_comments == 0 || b.max_comments < b.min_comments {
                return bad("block model comment range is empty");
            }
        }
        if let Some(l) = &self.lattice {
            if l.cities < 2 || l.sports < 1 {
                return bad("lattice needs at least 2 cities and 1 sport");
            }
            if !prob(l.crossover) || l.min_comments == 0 || l.max_comments < l.min_comments {
                return bad("lattice parameters out of range");
            }
        }
        if let Some(c) = &self.context {
            if !prob(c.rho) || !prob(c.antagonistic_share) || !prob(c.cue_share) || !prob(c.cue_reliability) {
                return bad("context corpus probabilities must lie in [0, 1]");
            }
            if c.tokens.is_empty() || c.filler_words == 0 || c.communities_per_side == 0 {
                return bad("context corpus needs tokens, filler words and communities");
            }
            if let Some(b) = &self.block {
                if b.blocks < 2 {
                    return bad("context corpus draws its communities from blocks 0 and 1");
                }
            }
        }
        Ok(())
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub fn block_subreddit(block: usize, sub: usize) -> String {
    format!("b{block}_s{sub:02}")
}

pub fn city_name(c: usize) -> String {
    format!("city_{c}")
}

pub fn sport_name(p: usize) -> String {
    format!("sport_{p}")
}

pub fn team_name(c: usize, p: usize) -> String {
    format!("team_{c}_{p}")
}

struct Emitter {
    prefix: char,
    records: Vec<CommentRecord>,
}

impl Emitter {
    fn emit(&mut self, author: &str, subreddit: &str, n: u32) {
        for _ in 0..n {
            let k = self.records.len() as i64;
            self.records.push(CommentRecord {
                author: author.to_owned(),
                subreddit: subreddit.to_owned(),
                created_utc: BASE_UTC + k,
                id: format!("{}{k:x}", self.prefix),
                body: String::new(),
            });
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockDump {
    pub records: Vec<CommentRecord>,
    /// Planted block of every subreddit.
    pub block_of: BTreeMap<String, usize>,
}

pub fn generate_block_dump(spec: &BlockSpec, seed: u64) -> BlockDump {
    let mut rng = stream(seed, 1);
    let subs: Vec<Vec<String>> = (0..spec.blocks)
        .map(|b| (0..spec.subs_per_block).map(|s| block_subreddit(b, s)).collect())
        .collect();
    let mut out = Emitter {
        prefix: 'b',
        records: Vec::new(),
    };
    for u in 0..spec.users {
        let user = format!("bu{u:05}");
        let home = rng.gen_range(0..spec.blocks);
        for (b, names) in subs.iter().enumerate() {
            let p = if b == home { spec.p_in } else { spec.p_out };
            for name in names {
                if rng.gen_bool(p) {
                    let n = rng.gen_range(spec.min_comments..=spec.max_comments);
                    out.emit(&user, name, n);
                }
            }
        }
        if spec.stray_comments > 0 {
            let n = rng.gen_range(0..=spec.stray_comments);
            for _ in 0..n {
                let b = rng.gen_range(0..spec.blocks);
                let s = rng.gen_range(0..spec.subs_per_block);
                out.emit(&user, &subs[b][s], 1);
            }
        }
    }
    let block_of = subs
        .iter()
        .enumerate()
        .flat_map(|(b, names)| names.iter().map(move |n| (n.clone(), b)))
        .collect();
    BlockDump {
        records: out.records,
        block_of,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeDump {
    pub records: Vec<CommentRecord>,
    /// `city + sport = team`, one per team.
    pub composition: Vec<CompositionTest>,
    /// `city_c : team(c, p) :: city_{c+1} : team(c+1, p)`, one per team.
    pub analogy: Vec<AnalogyTest>,
}

pub fn generate_lattice_dump(spec: &LatticeSpec, seed: u64) -> LatticeDump {
    let mut rng = stream(seed, 2);
    let mut out = Emitter {
        prefix: 'l',
        records: Vec::new(),
    };
    let draw = |rng: &mut ChaCha8Rng| rng.gen_range(spec.min_comments..=spec.max_comments);
    let mut uid = 0usize;
    let mut next_user = || {
        uid += 1;
        format!("lu{uid:05}")
    };

    for c in 0..spec.cities {
        for p in 0..spec.sports {
            for _ in 0..spec.team_users {
                let user = next_user();
                for sub in [team_name(c, p), city_name(c), sport_name(p)] {
                    let n = draw(&mut rng);
                    out.emit(&user, &sub, n);
                }
                if rng.gen_bool(spec.crossover) {
                    let (oc, op) = (rng.gen_range(0..spec.cities), rng.gen_range(0..spec.sports));
                    if (oc, op) != (c, p) {
                        let n = draw(&mut rng);
                        out.emit(&user, &team_name(oc, op), n);
                    }
                }
            }
        }
    }
    let hubs: Vec<String> = (0..spec.cities)
        .map(city_name)
        .chain((0..spec.sports).map(sport_name))
        .collect();
    for hub in &hubs {
        for _ in 0..spec.hub_users {
            let user = next_user();
            let n = draw(&mut rng);
            out.emit(&user, hub, n);
        }
    }

    let mut composition = Vec::new();
    let mut analogy = Vec::new();
    for c in 0..spec.cities {
        for p in 0..spec.sports {
            composition.push(CompositionTest {
                left: city_name(c),
                right: sport_name(p),
                expected: team_name(c, p),
            });
            let c2 = (c + 1) % spec.cities;
            analogy.push(AnalogyTest {
                a: city_name(c),
                b: team_name(c, p),
                c: city_name(c2),
                expected: team_name(c2, p),
            });
        }
    }
    LatticeDump {
        records: out.records,
        composition,
        analogy,
    }
}

const SYLLABLES: [&str; 16] = [
    "ka", "lo", "mi", "ne", "ru", "ta", "vo", "shi", "pe", "gu", "da", "fe", "zo", "bri", "mo", "tal",
];

fn filler_vocabulary(n: usize) -> Vec<String> {
    // Three syllables per word, so the stemmer leaves them alone and they
    // never collide with stop words.
    let s = SYLLABLES.len();
    (0..n)
        .map(|i| {
            format!(
                "{}{}{}",
                SYLLABLES[i % s],
                SYLLABLES[(i / s) % s],
                SYLLABLES[(i / (s * s) + i) % s]
            )
        })
        .collect()
}

const DEG_CUES: [&str; 4] = ["disgusting", "vermin", "subhuman", "worthless"];
const NDG_CUES: [&str; 4] = ["proud", "sibling", "reclaiming", "community"];

/// Labelled comments whose label for ambiguous-token comments follows the
/// posting community with probability `rho`.
pub fn generate_context_corpus(
    spec: &ContextSpec,
    antagonistic: &[String],
    supportive: &[String],
    seed: u64,
) -> Vec<LabeledComment> {
    let mut rng = stream(seed, 3);
    let filler = filler_vocabulary(spec.filler_words);
    let ndg_labels = |rng: &mut ChaCha8Rng, supportive: bool| {
        let x: f64 = rng.gen();
        if supportive {
            if x < 0.7 {
                GoldLabel::Appropriative
            } else if x < 0.9 {
                GoldLabel::NonDerogatoryNonAppropriative
            } else {
                GoldLabel::Homonym
            }
        } else if x < 0.6 {
            GoldLabel::NonDerogatoryNonAppropriative
        } else {
            GoldLabel::Homonym
        }
    };

    (0..spec.comments)
        .map(|i| {
            let hostile = rng.gen_bool(spec.antagonistic_share);
            let pool = if hostile { antagonistic } else { supportive };
            let subreddit = pool.choose(&mut rng).expect("non-empty community list").clone();
            let token = spec.tokens.choose(&mut rng).unwrap().clone();

            let mut words: Vec<String> = (0..rng.gen_range(3..=7))
                .map(|_| filler.choose(&mut rng).unwrap().clone())
                .collect();
            let gold = if rng.gen_bool(spec.cue_share) {
                let deg = rng.gen_bool(0.5);
                let cues: &[&str] = if deg { &DEG_CUES } else { &NDG_CUES };
                words.push(cues.choose(&mut rng).unwrap().to_string());
                let deg = if rng.gen_bool(spec.cue_reliability) { deg } else { !deg };
                if deg {
                    GoldLabel::Derogatory
                } else {
                    ndg_labels(&mut rng, !hostile)
                }
            } else {
                let dominant = rng.gen_bool(spec.rho);
                if hostile == dominant {
                    GoldLabel::Derogatory
                } else {
                    ndg_labels(&mut rng, !hostile)
                }
            };
            let at = rng.gen_range(0..=words.len());
            words.insert(at, token.clone());
            LabeledComment {
                id: format!("x{i:06}"),
                subreddit,
                author: format!("cu{:04}", rng.gen_range(0..2000)),
                created_utc: Some(BASE_UTC + i as i64),
                slur: token,
                gold,
                body: words.join(" "),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub records: Vec<CommentRecord>,
    pub block_of: BTreeMap<String, usize>,
    pub bots: Vec<String>,
    pub deleted_comments: usize,
    pub malformed_lines: usize,
    pub composition: Vec<CompositionTest>,
    pub analogy: Vec<AnalogyTest>,
    pub corpus: Vec<LabeledComment>,
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut records = Vec::new();
    let mut block_of = BTreeMap::new();
    let mut all_subs: Vec<String> = Vec::new();

    if let Some(b) = &spec.block {
        let d = generate_block_dump(b, spec.seed);
        records.extend(d.records);
        all_subs.extend(d.block_of.keys().cloned());
        block_of = d.block_of;
    }
    let (mut composition, mut analogy) = (Vec::new(), Vec::new());
    if let Some(l) = &spec.lattice {
        let d = generate_lattice_dump(l, spec.seed);
        records.extend(d.records);
        composition = d.composition;
        analogy = d.analogy;
        all_subs.extend((0..l.cities).map(city_name));
        all_subs.extend((0..l.sports).map(sport_name));
        for c in 0..l.cities {
            all_subs.extend((0..l.sports).map(|p| team_name(c, p)));
        }
    }

    let mut rng = stream(spec.seed, 4);
    let bots: Vec<String> = (0..spec.noise.bots)
        .map(|i| if i == 0 { "AutoModerator".to_owned() } else { format!("helper{i}_bot") })
        .collect();
    if !all_subs.is_empty() {
        for bot in &bots {
            for sub in &all_subs {
                let n = rng.gen_range(10..=30);
                for _ in 0..n {
                    records.push(CommentRecord {
                        author: bot.clone(),
                        subreddit: sub.clone(),
                        created_utc: 0,
                        id: String::new(),
                        body: String::new(),
                    });
                }
            }
        }
        for _ in 0..spec.noise.deleted_comments {
            records.push(CommentRecord {
                author: "[deleted]".into(),
                subreddit: all_subs.choose(&mut rng).unwrap().clone(),
                created_utc: 0,
                id: String::new(),
                body: String::new(),
            });
        }
    }
    for (k, r) in records.iter_mut().enumerate() {
        r.id = format!("{k:x}");
        r.created_utc = BASE_UTC + k as i64;
    }

    let corpus = match &spec.context {
        None => Vec::new(),
        Some(c) => {
            let side = |b: usize, label: &str| -> Vec<String> {
                if spec.block.is_some() {
                    block_of.iter().filter(|&(_, &x)| x == b).map(|(n, _)| n.clone()).collect()
                } else {
                    (0..c.communities_per_side).map(|i| format!("{label}_{i:02}")).collect()
                }
            };
            generate_context_corpus(c, &side(0, "hostile"), &side(1, "friendly"), spec.seed)
        }
    };

    Ok(SyntheticData {
        records,
        block_of,
        bots,
        deleted_comments: spec.noise.deleted_comments,
        malformed_lines: if all_subs.is_empty() { 0 } else { spec.noise.malformed_lines },
        composition,
        analogy,
        corpus,
    })
}

#[derive(Serialize)]
struct DumpLine<'a> {
    author: &'a str,
    subreddit: &'a str,
    created_utc: i64,
    id: &'a str,
    body: &'a str,
}

/// Writes NDJSON; malformed lines are interleaved at fixed positions.
pub fn write_dump<W: Write>(records: &[CommentRecord], malformed: usize, mut w: W) -> std::io::Result<()> {
    // evenly spread, before record `j * n / (malformed + 1)`
    let mut at = (1..=malformed).map(|j| j * records.len() / (malformed + 1)).peekable();
    for (k, r) in records.iter().enumerate() {
        while at.next_if_eq(&k).is_some() {
            w.write_all(b"{\"author\": \"truncated\n")?;
        }
        let line = DumpLine {
            author: &r.author,
            subreddit: &r.subreddit,
            created_utc: r.created_utc,
            id: &r.id,
            body: &r.body,
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    for _ in at {
        w.write_all(b"{\"author\": \"truncated\n")?;
    }
    w.flush()
}

/// File names written by [`SyntheticData::write`].
pub const DUMP_FILE: &str = "dump.ndjson";
pub const BOTS_FILE: &str = "bots.txt";
pub const COMPOSITION_FILE: &str = "composition.tsv";
pub const ANALOGY_FILE: &str = "analogy.tsv";
pub const CORPUS_FILE: &str = "corpus.csv";
pub const CONFIG_FILE: &str = "pipeline.toml";

impl SyntheticData {
    /// Writes the dump, bot list, suites, corpus, and a ready-to-run
    /// pipeline config into `dir`. Returns the written paths.
    pub fn write(&self, dir: &Path, seed: u64) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        let create = |name: &str| -> Result<(PathBuf, BufWriter<File>)> {
            let p = dir.join(name);
            let f = File::create(&p).map_err(|e| Error::io(&p, e))?;
            Ok((p, BufWriter::new(f)))
        };

        let (p, w) = create(DUMP_FILE)?;
        write_dump(&self.records, self.malformed_lines, w).map_err(|e| Error::io(&p, e))?;
        written.push(p);

        let (p, mut w) = create(BOTS_FILE)?;
        (|| -> std::io::Result<()> {
            writeln!(w, "# known bot accounts")?;
            for b in &self.bots {
                writeln!(w, "{b}")?;
            }
            w.flush()
        })()
        .map_err(|e| Error::io(&p, e))?;
        written.push(p);

        let (p, mut w) = create(COMPOSITION_FILE)?;
        (|| -> std::io::Result<()> {
            writeln!(w, "# left\tright\texpected")?;
            for t in &self.composition {
                writeln!(w, "{}\t{}\t{}", t.left, t.right, t.expected)?;
            }
            w.flush()
        })()
        .map_err(|e| Error::io(&p, e))?;
        written.push(p);

        let (p, mut w) = create(ANALOGY_FILE)?;
        (|| -> std::io::Result<()> {
            writeln!(w, "# a\tb\tc\texpected")?;
            for t in &self.analogy {
                writeln!(w, "{}\t{}\t{}\t{}", t.a, t.b, t.c, t.expected)?;
            }
            w.flush()
        })()
        .map_err(|e| Error::io(&p, e))?;
        written.push(p);

        if !self.corpus.is_empty() {
            let (p, w) = create(CORPUS_FILE)?;
            write_corpus(&self.corpus, w)?;
            written.push(p);
        }

        let (p, mut w) = create(CONFIG_FILE)?;
        let config = self.pipeline_config(seed);
        w.write_all(config.as_bytes()).and_then(|_| w.flush()).map_err(|e| Error::io(&p, e))?;
        written.push(p);
        Ok(written)
    }

    fn pipeline_config(&self, seed: u64) -> String {
        let mut s = format!(
            "seed = {seed}\nout_dir = \"out\"\n\n[ingest]\ninputs = [\"{DUMP_FILE}\"]\nbots = \"{BOTS_FILE}\"\n\n[cooccur]\n\n[embed]\n\n[eval]\n"
        );
        let mut suites = Vec::new();
        if !self.composition.is_empty() {
            suites.push(format!("{{ path = \"{COMPOSITION_FILE}\", kind = \"composition\" }}"));
        }
        if !self.analogy.is_empty() {
            suites.push(format!("{{ path = \"{ANALOGY_FILE}\", kind = \"analogy\" }}"));
        }
        s.push_str(&format!("suites = [{}]\n\n[classify]\n", suites.join(", ")));
        if self.corpus.is_empty() {
            s.push_str("enabled = false\n");
        } else {
            s.push_str(&format!("corpus = \"{CORPUS_FILE}\"\n"));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticSpec {
        SyntheticSpec {
            seed: 5,
            block: Some(BlockSpec {
                users: 300,
                ..BlockSpec::default()
            }),
            lattice: Some(LatticeSpec::default()),
            context: Some(ContextSpec {
                comments: 400,
                ..ContextSpec::default()
            }),
            noise: NoiseSpec::default(),
        }
    }

    #[test]
    fn generation_is_a_pure_function_of_the_spec() {
        let a = generate_synthetic(&small()).unwrap();
        let b = generate_synthetic(&small()).unwrap();
        assert_eq!(a, b);
        let mut other = small();
        other.seed = 6;
        assert_ne!(a.records, generate_synthetic(&other).unwrap().records);
    }

    #[test]
    fn parts_are_independent() {
        let full = generate_synthetic(&small()).unwrap();
        let mut spec = small();
        spec.block = None;
        spec.context = None;
        let lattice_only = generate_synthetic(&spec).unwrap();
        assert_eq!(full.composition, lattice_only.composition);
        let lattice = generate_lattice_dump(&LatticeSpec::default(), 5);
        assert!(full
            .records
            .iter()
            .filter(|r| r.author.starts_with("lu"))
            .map(|r| (&r.author, &r.subreddit))
            .eq(lattice.records.iter().map(|r| (&r.author, &r.subreddit))));
    }

    #[test]
    fn lattice_suites_have_one_test_per_team() {
        let d = generate_lattice_dump(&LatticeSpec::default(), 0);
        assert_eq!(d.composition.len(), 12);
        assert_eq!(d.analogy.len(), 12);
        let t = &d.analogy[0];
        assert_eq!((t.a.as_str(), t.b.as_str(), t.c.as_str(), t.expected.as_str()),
                   ("city_0", "team_0_0", "city_1", "team_1_0"));
    }

    #[test]
    fn active_block_users_clear_the_threshold() {
        let spec = BlockSpec {
            users: 200,
            ..BlockSpec::default()
        };
        let d = generate_block_dump(&spec, 1);
        assert_eq!(d.block_of.len(), 60);
        assert_eq!(d.block_of["b2_s07"], 2);
        assert!(!d.records.is_empty());
    }

    #[test]
    fn context_labels_follow_the_community_at_rho_one() {
        let spec = ContextSpec {
            comments: 600,
            rho: 1.0,
            cue_share: 0.0,
            ..ContextSpec::default()
        };
        let hostile = vec!["h".to_string()];
        let friendly = vec!["f".to_string()];
        let corpus = generate_context_corpus(&spec, &hostile, &friendly, 2);
        for c in &corpus {
            assert_eq!(c.subreddit == "h", c.gold == GoldLabel::Derogatory, "{c:?}");
            assert!(spec.tokens.contains(&c.slur));
            assert!(c.body.split(' ').any(|w| w == c.slur));
        }
    }

    #[test]
    fn filler_words_are_distinct() {
        let v = filler_vocabulary(300);
        let set: std::collections::HashSet<_> = v.iter().collect();
        assert_eq!(set.len(), 300);
    }

    #[test]
    fn spec_round_trips_through_toml() {
        let spec = small();
        let text = toml::to_string(&spec).unwrap();
        assert_eq!(SyntheticSpec::from_toml(&text).unwrap(), spec);
        assert!(SyntheticSpec::from_toml("[block]\np_in = 0.1\np_out = 0.5\n").is_err());
    }
}
