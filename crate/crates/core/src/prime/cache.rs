//! Disk cache for prime tables.
//!
//! Layout (little-endian throughout):
//!   magic "BVPC" | version u16 | limit u64 | count u64 | delta stream | crc32 u32
//!
//! The delta stream stores each prime as the gap from its predecessor
//! (predecessor 0 for the first prime): one byte holding gap/2 when the gap
//! is even and gap/2 <= 255, otherwise the escape byte 0x00 followed by the
//! absolute gap as a u32. The trailing CRC32 covers every preceding byte.

use super::PrimeStore;
use crate::error::{Error, Result};
use std::fs;
use std::io::Write;
use std::path::Path;

const MAGIC: &[u8; 4] = b"BVPC";
const VERSION: u16 = 1;
const HEADER_LEN: u64 = 4 + 2 + 8 + 8;

pub fn save_cache(store: &PrimeStore, path: &Path) -> Result<()> {
    let mut buf: Vec<u8> = Vec::with_capacity(store.len() + HEADER_LEN as usize + 4);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&store.limit().to_le_bytes());
    buf.extend_from_slice(&(store.len() as u64).to_le_bytes());
    let mut prev = 0u64;
    for &p in store.primes() {
        let gap = p - prev;
        if gap % 2 == 0 && gap / 2 <= 255 && gap > 0 {
            buf.push((gap / 2) as u8);
        } else {
            buf.push(0x00);
            buf.extend_from_slice(&(gap as u32).to_le_bytes());
        }
        prev = p;
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());

    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&buf).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn load_cache(path: &Path) -> Result<PrimeStore> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

/// Load a cache and insist it covers `limit` exactly.
pub fn load_cache_expecting(path: &Path, limit: u64) -> Result<PrimeStore> {
    let store = load_cache(path)?;
    if store.limit() != limit {
        return Err(Error::CacheMismatch {
            requested: limit,
            found: store.limit(),
        });
    }
    Ok(store)
}

fn decode(bytes: &[u8]) -> Result<PrimeStore> {
    let total = bytes.len() as u64;
    if total < HEADER_LEN + 4 {
        return Err(Error::Format {
            offset: total,
            what: format!("file truncated: {total} bytes, need at least {}", HEADER_LEN + 4),
        });
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::Format {
            offset: 0,
            what: "bad magic bytes".into(),
        });
    }
    let version = u16::from_le_bytes(bytes[4..6].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format {
            offset: 4,
            what: format!("unsupported format version {version}"),
        });
    }
    let crc_offset = bytes.len() - 4;
    let stored_crc = u32::from_le_bytes(bytes[crc_offset..].try_into().unwrap());
    let actual_crc = crc32fast::hash(&bytes[..crc_offset]);
    if stored_crc != actual_crc {
        return Err(Error::Format {
            offset: crc_offset as u64,
            what: format!("crc mismatch: stored {stored_crc:08x}, computed {actual_crc:08x}"),
        });
    }

    let limit = u64::from_le_bytes(bytes[6..14].try_into().unwrap());
    let count = u64::from_le_bytes(bytes[14..22].try_into().unwrap());
    let stream = &bytes[HEADER_LEN as usize..crc_offset];

    let mut primes = Vec::new();
    primes
        .try_reserve_exact(count as usize)
        .map_err(|_| Error::Resource(format!("prime table of {count} entries failed")))?;
    let mut prev = 0u64;
    let mut pos = 0usize;
    while pos < stream.len() {
        let gap = if stream[pos] != 0 {
            let g = 2 * stream[pos] as u64;
            pos += 1;
            g
        } else {
            if pos + 5 > stream.len() {
                return Err(Error::Format {
                    offset: HEADER_LEN + pos as u64,
                    what: "escape code truncated".into(),
                });
            }
            let g = u32::from_le_bytes(stream[pos + 1..pos + 5].try_into().unwrap()) as u64;
            pos += 5;
            g
        };
        if gap == 0 {
            return Err(Error::Format {
                offset: HEADER_LEN + pos as u64,
                what: "zero gap in delta stream".into(),
            });
        }
        prev += gap;
        primes.push(prev);
    }
    if primes.len() as u64 != count {
        return Err(Error::Format {
            offset: HEADER_LEN + pos as u64,
            what: format!("count mismatch: header says {count}, stream holds {}", primes.len()),
        });
    }
    if let Some(&last) = primes.last() {
        if last > limit {
            return Err(Error::Format {
                offset: HEADER_LEN + pos as u64,
                what: format!("largest prime {last} exceeds recorded limit {limit}"),
            });
        }
    }
    Ok(PrimeStore::from_parts(limit, primes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prime::build_prime_store;

    #[test]
    fn round_trip_identity() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("primes.bvpc");
        let store = build_prime_store(10_000, 4096).unwrap();
        save_cache(&store, &path).unwrap();
        let loaded = load_cache(&path).unwrap();
        assert_eq!(loaded, store);
    }

    #[test]
    fn truncated_file_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("primes.bvpc");
        let store = build_prime_store(10_000, 4096).unwrap();
        save_cache(&store, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 7]).unwrap();
        match load_cache(&path) {
            Err(Error::Format { .. }) => {}
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_magic_is_format_error_at_offset_zero() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("primes.bvpc");
        let store = build_prime_store(1_000, 4096).unwrap();
        save_cache(&store, &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes[0] = b'X';
        fs::write(&path, &bytes).unwrap();
        match load_cache(&path) {
            Err(Error::Format { offset: 0, .. }) => {}
            other => panic!("expected magic error, got {other:?}"),
        }
    }

    #[test]
    fn corrupt_payload_fails_crc() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("primes.bvpc");
        let store = build_prime_store(50_000, 4096).unwrap();
        save_cache(&store, &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0xff;
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_cache(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn limit_mismatch_is_version_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("primes.bvpc");
        let store = build_prime_store(10_000, 4096).unwrap();
        save_cache(&store, &path).unwrap();
        match load_cache_expecting(&path, 20_000) {
            Err(Error::CacheMismatch { requested, found }) => {
                assert_eq!((requested, found), (20_000, 10_000));
            }
            other => panic!("expected mismatch error, got {other:?}"),
        }
        assert!(load_cache_expecting(&path, 10_000).is_ok());
    }

    #[test]
    fn first_gap_is_odd_escape() {
        // gap 2→3 is odd and must round-trip through the escape code
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.bvpc");
        let store = build_prime_store(3, 64).unwrap();
        save_cache(&store, &path).unwrap();
        let loaded = load_cache(&path).unwrap();
        assert_eq!(loaded.primes(), &[2, 3]);
    }
}
