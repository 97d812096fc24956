//! Binary persistence for encoded datasets.
//!
//! Little-endian layout (see `docs/FORMAT.md`):
//!
//! ```text
//! magic      4 bytes  "BKMD"
//! version    u16      = 1
//! reserved   u16      = 0
//! n          u64
//! m          u32
//! cards      m x u16
//! names      m x (u32 length, UTF-8 bytes)
//! tokens     for each attribute, cards[a] x (u32 length, UTF-8 bytes)
//! codes      n * m bytes, row-major
//! crc32      u32 over every preceding byte
//! ```

use std::path::{Path, PathBuf};

use crate::dataset::CategoricalDataset;
use crate::error::{Error, Result};
use crate::ingest::RecodeMap;

pub const MAGIC: &[u8; 4] = b"BKMD";
pub const FORMAT_VERSION: u16 = 1;

/// Serializes a dataset and its recode map.
pub fn encode(dataset: &CategoricalDataset, recode: &RecodeMap) -> Result<Vec<u8>> {
    recode.check(dataset)?;
    let mut out = Vec::with_capacity(32 + dataset.codes().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    out.extend_from_slice(&(dataset.n() as u64).to_le_bytes());
    out.extend_from_slice(&(dataset.m() as u32).to_le_bytes());
    for &c in dataset.cardinalities() {
        out.extend_from_slice(&(c as u16).to_le_bytes());
    }
    let put_str = |out: &mut Vec<u8>, s: &str| {
        out.extend_from_slice(&(s.len() as u32).to_le_bytes());
        out.extend_from_slice(s.as_bytes());
    };
    for name in dataset.attribute_names() {
        put_str(&mut out, name);
    }
    for tokens in &recode.attributes {
        for t in tokens {
            put_str(&mut out, t);
        }
    }
    out.extend_from_slice(dataset.codes());
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| {
                Error::Malformed(format!("unexpected end of data at byte {}", self.pos))
            })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|e| Error::Malformed(format!("invalid UTF-8: {e}")))
    }
}

/// Parses bytes written by [`encode`]. Magic and version are checked first,
/// then the checksum, so a truncated file fails with a checksum error.
pub fn decode(bytes: &[u8]) -> Result<(CategoricalDataset, RecodeMap)> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes.len() >= 6 {
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
    }
    if bytes.len() < 8 + 4 {
        let stored = 0;
        return Err(Error::ChecksumMismatch {
            stored,
            computed: crc32fast::hash(bytes),
        });
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(Error::ChecksumMismatch { stored, computed });
    }

    let mut cur = Cursor { buf: body, pos: 8 };
    let n =
        usize::try_from(cur.u64()?).map_err(|_| Error::Malformed("row count overflow".into()))?;
    let m = cur.u32()? as usize;
    let cards = (0..m)
        .map(|_| cur.u16().map(usize::from))
        .collect::<Result<Vec<_>>>()?;
    let names = (0..m).map(|_| cur.string()).collect::<Result<Vec<_>>>()?;
    let mut attributes = Vec::with_capacity(m);
    for &c in &cards {
        attributes.push((0..c).map(|_| cur.string()).collect::<Result<Vec<_>>>()?);
    }
    let cells = n
        .checked_mul(m)
        .ok_or_else(|| Error::Malformed("shape overflow".into()))?;
    let codes = cur.take(cells)?.to_vec();
    if cur.pos != body.len() {
        return Err(Error::Malformed(format!(
            "{} trailing bytes",
            body.len() - cur.pos
        )));
    }
    let dataset = CategoricalDataset::new(codes, cards, names)?;
    let recode = RecodeMap { attributes };
    recode.check(&dataset)?;
    Ok((dataset, recode))
}

/// Path of the human-readable recode-map sidecar for an encoded file.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".recode.json");
    PathBuf::from(s)
}

/// Writes the encoded dataset to `path` and a JSON recode map next to it.
pub fn save_encoded(dataset: &CategoricalDataset, recode: &RecodeMap, path: &Path) -> Result<()> {
    let bytes = encode(dataset, recode)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    let json = serde_json::to_vec_pretty(recode)?;
    std::fs::write(&side, json).map_err(|e| Error::io(side, e))?;
    Ok(())
}

/// Reads an encoded dataset. The sidecar is not consulted; the binary is self-contained.
pub fn load_encoded(path: &Path) -> Result<(CategoricalDataset, RecodeMap)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

/// True if the file starts with the encoded-dataset magic.
pub fn is_encoded(path: &Path) -> bool {
    use std::io::Read;
    let mut head = [0u8; 4];
    std::fs::File::open(path)
        .and_then(|mut f| f.read_exact(&mut head))
        .map(|_| &head == MAGIC)
        .unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> (CategoricalDataset, RecodeMap) {
        let ds = CategoricalDataset::new(
            vec![0, 1, 1, 0, 2, 0],
            vec![3, 2],
            vec!["color".into(), "size".into()],
        )
        .unwrap();
        let recode = RecodeMap {
            attributes: vec![
                vec!["red".into(), "green".into(), "".into()],
                vec!["small".into(), "large".into()],
            ],
        };
        (ds, recode)
    }

    #[test]
    fn round_trip() {
        let (ds, recode) = sample();
        let bytes = encode(&ds, &recode).unwrap();
        let (ds2, recode2) = decode(&bytes).unwrap();
        assert_eq!(ds, ds2);
        assert_eq!(recode, recode2);
        assert_eq!(encode(&ds2, &recode2).unwrap(), bytes);
    }

    #[test]
    fn truncation_is_a_checksum_error() {
        let (ds, recode) = sample();
        let bytes = encode(&ds, &recode).unwrap();
        for cut in [bytes.len() - 1, bytes.len() - 5, 20, 9] {
            assert!(
                matches!(decode(&bytes[..cut]), Err(Error::ChecksumMismatch { .. })),
                "cut at {cut}"
            );
        }
    }

    #[test]
    fn corruption_and_version() {
        let (ds, recode) = sample();
        let mut bytes = encode(&ds, &recode).unwrap();
        let last_code = bytes.len() - 5;
        bytes[last_code] ^= 1;
        assert!(matches!(
            decode(&bytes),
            Err(Error::ChecksumMismatch { .. })
        ));

        let mut bytes = encode(&ds, &recode).unwrap();
        bytes[4] = 9;
        assert!(matches!(
            decode(&bytes),
            Err(Error::UnsupportedVersion {
                found: 9,
                expected: 1
            })
        ));
        assert!(matches!(decode(b"PK\x03\x04rest"), Err(Error::BadMagic)));
    }

    #[test]
    fn rejects_mismatched_recode_map() {
        let (ds, _) = sample();
        let bad = RecodeMap {
            attributes: vec![vec!["a".into()], vec!["b".into(), "c".into()]],
        };
        assert!(encode(&ds, &bad).is_err());
    }

    #[test]
    fn file_round_trip_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.bkmd");
        let (ds, recode) = sample();
        save_encoded(&ds, &recode, &path).unwrap();
        assert!(is_encoded(&path));
        let side: RecodeMap =
            serde_json::from_slice(&std::fs::read(sidecar_path(&path)).unwrap()).unwrap();
        assert_eq!(side, recode);
        let (ds2, recode2) = load_encoded(&path).unwrap();
        assert_eq!((ds2, recode2), (ds, recode));
    }

    proptest! {
        #[test]
        fn random_datasets_reencode_identically(
            rows in prop::collection::vec(prop::collection::vec(0u8..6, 3), 1..40)
        ) {
            let ds = CategoricalDataset::from_rows(&rows, Some(vec![6, 6, 6])).unwrap();
            let recode = RecodeMap::numeric(ds.cardinalities());
            let bytes = encode(&ds, &recode).unwrap();
            let (ds2, recode2) = decode(&bytes).unwrap();
            prop_assert_eq!(encode(&ds2, &recode2).unwrap(), bytes);
        }
    }
}
