//! Embedding file formats.
//!
//! Text: a `<count> <dim>` line, then `name v1 … v_dim` per subreddit.
//! Values use the shortest decimal form that parses back to the same
//! `f64`, so the text form round-trips exactly as well.
//!
//! Binary: `"CVEM"`, version u32, count u64, dim u64, crc32 u32 of the
//! payload, then per subreddit (name len u32, name bytes) and finally
//! `count × dim` little-endian f64 values.

use std::io::{BufRead, Read, Write};
use std::path::Path;

use super::EmbeddingMatrix;
use crate::checksum::crc32;
use crate::error::{Error, Result};

pub fn write_text<W: Write>(m: &EmbeddingMatrix, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{} {}", m.len(), m.dim())?;
    for (i, name) in m.names().iter().enumerate() {
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidInput,
                format!("name {name:?} cannot be written to the text format"),
            ));
        }
        w.write_all(name.as_bytes())?;
        for v in m.vector(i) {
            write!(w, " {v}")?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn read_text<R: BufRead>(r: R, path: &Path) -> Result<EmbeddingMatrix> {
    let mut lines = r.lines().enumerate();
    let mut next = || -> Result<Option<(usize, String)>> {
        match lines.next() {
            None => Ok(None),
            Some((k, Ok(l))) => Ok(Some((k + 1, l))),
            Some((_, Err(e))) => Err(Error::io(path, e)),
        }
    };
    let (_, header) = next()?.ok_or_else(|| Error::format(path, 1, "empty embedding file"))?;
    let mut it = header.split_whitespace();
    let parse = |s: Option<&str>| s.and_then(|s| s.parse::<usize>().ok());
    let (count, dim) = match (parse(it.next()), parse(it.next()), it.next()) {
        (Some(c), Some(d), None) => (c, d),
        _ => return Err(Error::format(path, 1, "expected `<count> <dim>` header")),
    };
    let mut names = Vec::with_capacity(count);
    let mut data = Vec::with_capacity(count * dim);
    for _ in 0..count {
        let (lineno, line) =
            next()?.ok_or_else(|| Error::format(path, names.len() + 2, "fewer vectors than header count"))?;
        let mut fields = line.split_whitespace();
        let name = fields
            .next()
            .ok_or_else(|| Error::format(path, lineno, "empty line"))?;
        names.push(name.to_owned());
        let before = data.len();
        for f in fields {
            let v: f64 = f
                .parse()
                .map_err(|_| Error::format(path, lineno, format!("bad value {f:?}")))?;
            data.push(v);
        }
        if data.len() - before != dim {
            return Err(Error::format(
                path,
                lineno,
                format!("expected {dim} values, found {}", data.len() - before),
            ));
        }
    }
    while let Some((lineno, l)) = next()? {
        if !l.trim().is_empty() {
            return Err(Error::format(path, lineno, "more vectors than header count"));
        }
    }
    EmbeddingMatrix::new(names, dim, data)
}

const MAGIC: &[u8; 4] = b"CVEM";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 8 + 4;

pub fn write_binary<W: Write>(m: &EmbeddingMatrix, mut w: W) -> std::io::Result<()> {
    let mut payload = Vec::with_capacity(m.len() * (16 + m.dim() * 8));
    for name in m.names() {
        payload.extend_from_slice(&(name.len() as u32).to_le_bytes());
        payload.extend_from_slice(name.as_bytes());
    }
    for v in m.data() {
        payload.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(m.len() as u64).to_le_bytes())?;
    w.write_all(&(m.dim() as u64).to_le_bytes())?;
    w.write_all(&crc32(&payload).to_le_bytes())?;
    w.write_all(&payload)?;
    w.flush()
}

/// Opens either format, telling them apart by the binary magic.
pub fn load_embeddings(path: &Path) -> Result<EmbeddingMatrix> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(MAGIC) {
        read_binary(bytes.as_slice(), path)
    } else {
        read_text(bytes.as_slice(), path)
    }
}

pub fn read_binary<R: Read>(mut r: R, path: &Path) -> Result<EmbeddingMatrix> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    let short = || Error::format(path, 0, "truncated embedding file");
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(Error::format(path, 0, "not a binary embedding file"));
    }
    let u32_at = |k: usize| u32::from_le_bytes(bytes[k..k + 4].try_into().unwrap());
    let u64_at = |k: usize| u64::from_le_bytes(bytes[k..k + 8].try_into().unwrap());
    if u32_at(4) != VERSION {
        return Err(Error::format(path, 0, "unsupported embedding file version"));
    }
    let count = u64_at(8) as usize;
    let dim = u64_at(16) as usize;
    let expected = u32_at(24);
    let payload = &bytes[HEADER_LEN..];
    let actual = crc32(payload);
    if expected != actual {
        return Err(Error::Checksum {
            path: path.to_path_buf(),
            expected,
            actual,
        });
    }
    let mut pos = 0usize;
    let mut names = Vec::with_capacity(count);
    for _ in 0..count {
        let len_bytes = payload.get(pos..pos + 4).ok_or_else(short)?;
        let len = u32::from_le_bytes(len_bytes.try_into().unwrap()) as usize;
        pos += 4;
        let raw = payload.get(pos..pos + len).ok_or_else(short)?;
        pos += len;
        names.push(
            std::str::from_utf8(raw)
                .map_err(|_| Error::format(path, 0, "name is not UTF-8"))?
                .to_owned(),
        );
    }
    let rest = &payload[pos..];
    if rest.len() != count * dim * 8 {
        return Err(short());
    }
    let data = rest
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    EmbeddingMatrix::new(names, dim, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_matrix() -> impl Strategy<Value = EmbeddingMatrix> {
        (1usize..6, 0usize..8).prop_flat_map(|(dim, n)| {
            prop::collection::vec(-1e3f64..1e3, n * dim).prop_map(move |data| {
                let names = (0..n).map(|i| format!("sub_{i}")).collect();
                EmbeddingMatrix::new(names, dim, data).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn text_and_binary_round_trip_exactly(m in arb_matrix()) {
            let mut text = Vec::new();
            write_text(&m, &mut text).unwrap();
            prop_assert_eq!(&read_text(text.as_slice(), Path::new("mem")).unwrap(), &m);
            let mut bin = Vec::new();
            write_binary(&m, &mut bin).unwrap();
            prop_assert_eq!(&read_binary(bin.as_slice(), Path::new("mem")).unwrap(), &m);
        }
    }

    #[test]
    fn text_layout() {
        let m = EmbeddingMatrix::new(vec!["a".into(), "b".into()], 2, vec![0.5, -1.0, 1e-7, 2.0]).unwrap();
        let mut buf = Vec::new();
        write_text(&m, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "2 2\na 0.5 -1\nb 0.0000001 2\n");
    }

    #[test]
    fn text_rejects_wrong_widths() {
        assert!(read_text(&b"1 2\na 0.5\n"[..], Path::new("mem")).is_err());
        assert!(read_text(&b"2 1\na 0.5\n"[..], Path::new("mem")).is_err());
        assert!(read_text(&b"1 1\na 0.5\nb 1\n"[..], Path::new("mem")).is_err());
    }

    #[test]
    fn binary_detects_corruption() {
        let m = EmbeddingMatrix::new(vec!["a".into()], 2, vec![0.5, -1.0]).unwrap();
        let mut buf = Vec::new();
        write_binary(&m, &mut buf).unwrap();
        let n = buf.len();
        buf[n - 1] ^= 1;
        assert!(matches!(
            read_binary(buf.as_slice(), Path::new("mem")),
            Err(Error::Checksum { .. })
        ));
    }
}
