//! TSV forms of [`ActivityTable`] and [`MembershipSets`].
//!
//! Both files start with a magic line, then name sections whose line order
//! defines the integer ids, then integer rows sorted ascending:
//!
//! ```text
//! #commvec-activity v1          #commvec-memberships v1
//! subreddits<TAB>n              subreddits<TAB>n
//! <name>  (n lines)             <name>  (n lines, vocabulary order)
//! users<TAB>m                   users<TAB>m
//! <name>  (m lines)             <name>  (m lines)
//! counts<TAB>k                  members<TAB>k
//! <user><TAB><sub><TAB><count>  <sub><TAB><user>
//! ```

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use super::{ActivityTable, MembershipSets};
use crate::error::{Error, Result};
use crate::intern::Interner;

const ACTIVITY_MAGIC: &str = "#commvec-activity v1";
const MEMBERSHIP_MAGIC: &str = "#commvec-memberships v1";

fn check_name(name: &str) -> std::io::Result<()> {
    if name.is_empty() || name.contains(['\t', '\n', '\r']) {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            format!("name {name:?} cannot be stored in TSV"),
        ));
    }
    Ok(())
}

fn write_names<W: Write>(w: &mut W, section: &str, names: &Interner) -> std::io::Result<()> {
    writeln!(w, "{section}\t{}", names.len())?;
    for n in names.names() {
        check_name(n)?;
        writeln!(w, "{n}")?;
    }
    Ok(())
}

pub fn write_activity<W: Write>(table: &ActivityTable, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{ACTIVITY_MAGIC}")?;
    write_names(&mut w, "subreddits", table.subreddits())?;
    write_names(&mut w, "users", table.users())?;
    let rows = table.rows();
    writeln!(w, "counts\t{}", rows.len())?;
    for (u, s, c) in rows {
        writeln!(w, "{u}\t{s}\t{c}")?;
    }
    w.flush()
}

pub fn write_memberships<W: Write>(sets: &MembershipSets, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{MEMBERSHIP_MAGIC}")?;
    write_names(&mut w, "subreddits", sets.subreddits())?;
    write_names(&mut w, "users", sets.users())?;
    writeln!(w, "members\t{}", sets.num_memberships())?;
    for s in 0..sets.num_subreddits() as u32 {
        for u in sets.members(s) {
            writeln!(w, "{s}\t{u}")?;
        }
    }
    w.flush()
}

struct Lines<'a, R> {
    inner: std::io::Lines<R>,
    path: &'a Path,
    line: usize,
}

impl<R: BufRead> Lines<'_, R> {
    fn next(&mut self) -> Result<String> {
        self.line += 1;
        match self.inner.next() {
            Some(Ok(l)) => Ok(l),
            Some(Err(e)) => Err(Error::io(self.path, e)),
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::format(self.path, self.line, msg)
    }

    fn header(&mut self, section: &str) -> Result<usize> {
        let l = self.next()?;
        let (name, n) = l
            .split_once('\t')
            .ok_or_else(|| self.err(format!("expected `{section}<TAB>count`")))?;
        if name != section {
            return Err(self.err(format!("expected section {section}, found {name}")));
        }
        n.parse().map_err(|_| self.err(format!("bad count {n:?}")))
    }

    fn names(&mut self, section: &str) -> Result<Interner> {
        let n = self.header(section)?;
        let mut out = Interner::new();
        for _ in 0..n {
            let name = self.next()?;
            if out.get(&name).is_some() {
                return Err(self.err(format!("duplicate name {name:?}")));
            }
            out.intern(&name);
        }
        Ok(out)
    }

    fn ints<const N: usize>(&mut self) -> Result<[u64; N]> {
        let l = self.next()?;
        let mut out = [0u64; N];
        let mut fields = l.split('\t');
        for slot in out.iter_mut() {
            let f = fields.next().ok_or_else(|| self.err("too few fields"))?;
            *slot = f.parse().map_err(|_| self.err(format!("bad integer {f:?}")))?;
        }
        if fields.next().is_some() {
            return Err(self.err("too many fields"));
        }
        Ok(out)
    }

    fn finish(&mut self) -> Result<()> {
        match self.inner.next() {
            None => Ok(()),
            Some(Ok(l)) if l.is_empty() => self.finish(),
            Some(_) => Err(self.err("trailing data")),
        }
    }
}

fn open<'a, R: BufRead>(r: R, path: &'a Path, magic: &str) -> Result<Lines<'a, R>> {
    let mut lines = Lines {
        inner: r.lines(),
        path,
        line: 0,
    };
    let first = lines.next()?;
    if first != magic {
        return Err(lines.err(format!("expected header {magic:?}")));
    }
    Ok(lines)
}

/// `path` is only used in diagnostics.
pub fn read_activity<R: BufRead>(r: R, path: &Path) -> Result<ActivityTable> {
    let mut lines = open(r, path, ACTIVITY_MAGIC)?;
    let subreddits = lines.names("subreddits")?;
    let users = lines.names("users")?;
    let k = lines.header("counts")?;
    let mut counts = HashMap::with_capacity(k);
    for _ in 0..k {
        let [u, s, c] = lines.ints::<3>()?;
        if u as usize >= users.len() || s as usize >= subreddits.len() {
            return Err(lines.err("id out of range"));
        }
        if c == 0 {
            return Err(lines.err("zero count"));
        }
        if counts.insert((u as u32, s as u32), c).is_some() {
            return Err(lines.err("duplicate row"));
        }
    }
    lines.finish()?;
    Ok(ActivityTable::from_parts(users, subreddits, counts))
}

pub fn read_memberships<R: BufRead>(r: R, path: &Path) -> Result<MembershipSets> {
    let mut lines = open(r, path, MEMBERSHIP_MAGIC)?;
    let subreddits = lines.names("subreddits")?;
    let users = lines.names("users")?;
    let k = lines.header("members")?;
    let mut members = vec![Vec::new(); subreddits.len()];
    let mut prev: Option<(u64, u64)> = None;
    for _ in 0..k {
        let [s, u] = lines.ints::<2>()?;
        if u as usize >= users.len() || s as usize >= subreddits.len() {
            return Err(lines.err("id out of range"));
        }
        if prev.is_some_and(|p| p >= (s, u)) {
            return Err(lines.err("rows must be strictly ascending"));
        }
        prev = Some((s, u));
        members[s as usize].push(u as u32);
    }
    lines.finish()?;
    Ok(MembershipSets::from_parts(users, subreddits, members))
}
