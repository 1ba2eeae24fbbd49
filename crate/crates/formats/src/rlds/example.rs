//! Decoder for serialized `tf.train.Example` protobuf messages.
//!
//! ```text
//! Example  { Features features = 1; }
//! Features { map<string, Feature> feature = 1; }
//! Feature  { oneof { BytesList bytes_list = 1; FloatList float_list = 2; Int64List int64_list = 3; } }
//! ```

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExampleError {
    #[error("malformed protobuf at byte {offset}: {message}")]
    Malformed { offset: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureList {
    Bytes(Vec<Vec<u8>>),
    Floats(Vec<f32>),
    Ints(Vec<i64>),
}

impl FeatureList {
    pub fn len(&self) -> usize {
        match self {
            FeatureList::Bytes(v) => v.len(),
            FeatureList::Floats(v) => v.len(),
            FeatureList::Ints(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Numeric values widened to f64; `None` for byte lists.
    pub fn to_f64(&self) -> Option<Vec<f64>> {
        match self {
            FeatureList::Bytes(_) => None,
            FeatureList::Floats(v) => Some(v.iter().map(|&x| x as f64).collect()),
            FeatureList::Ints(v) => Some(v.iter().map(|&x| x as f64).collect()),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            FeatureList::Bytes(_) => "bytes",
            FeatureList::Floats(_) => "float",
            FeatureList::Ints(_) => "int64",
        }
    }
}

pub type FeatureMap = BTreeMap<String, FeatureList>;

const VARINT: u8 = 0;
const FIXED64: u8 = 1;
const LEN: u8 = 2;
const FIXED32: u8 = 5;

struct Pb<'a> {
    buf: &'a [u8],
    pos: usize,
    /// Offset of `buf` within the whole payload, for error messages.
    base: usize,
}

type R<T> = Result<T, ExampleError>;

impl<'a> Pb<'a> {
    fn new(buf: &'a [u8], base: usize) -> Self {
        Self { buf, pos: 0, base }
    }

    fn err<T>(&self, message: impl Into<String>) -> R<T> {
        Err(ExampleError::Malformed {
            offset: self.base + self.pos,
            message: message.into(),
        })
    }

    fn done(&self) -> bool {
        self.pos >= self.buf.len()
    }

    fn varint(&mut self) -> R<u64> {
        let mut v = 0u64;
        for i in 0..10 {
            let Some(&b) = self.buf.get(self.pos) else {
                return self.err("varint runs past end");
            };
            self.pos += 1;
            if i == 9 && b > 1 {
                return self.err("varint overflows 64 bits");
            }
            v |= ((b & 0x7f) as u64) << (7 * i);
            if b & 0x80 == 0 {
                return Ok(v);
            }
        }
        self.err("varint longer than 10 bytes")
    }

    fn key(&mut self) -> R<(u64, u8)> {
        let k = self.varint()?;
        let field = k >> 3;
        if field == 0 {
            return self.err("field number 0");
        }
        Ok((field, (k & 7) as u8))
    }

    fn take(&mut self, n: usize) -> R<&'a [u8]> {
        if n > self.buf.len() - self.pos {
            return self.err(format!("field of {n} bytes runs past end"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    /// Length-delimited field body and its absolute offset.
    fn delimited(&mut self) -> R<(Pb<'a>, &'a [u8])> {
        let n = self.varint()?;
        let n = usize::try_from(n).or_else(|_| self.err("length does not fit in memory"))?;
        let base = self.base + self.pos;
        let s = self.take(n)?;
        Ok((Pb::new(s, base), s))
    }

    fn skip(&mut self, wire: u8) -> R<()> {
        match wire {
            VARINT => self.varint().map(|_| ()),
            FIXED64 => self.take(8).map(|_| ()),
            LEN => self.delimited().map(|_| ()),
            FIXED32 => self.take(4).map(|_| ()),
            other => self.err(format!("unsupported wire type {other}")),
        }
    }
}

pub fn decode_example(payload: &[u8]) -> Result<FeatureMap, ExampleError> {
    let mut map = FeatureMap::new();
    let mut ex = Pb::new(payload, 0);
    while !ex.done() {
        match ex.key()? {
            (1, LEN) => {
                let (mut features, _) = ex.delimited()?;
                while !features.done() {
                    match features.key()? {
                        (1, LEN) => {
                            let (entry, _) = features.delimited()?;
                            let (k, v) = map_entry(entry)?;
                            map.insert(k, v);
                        }
                        (_, w) => features.skip(w)?,
                    }
                }
            }
            (_, w) => ex.skip(w)?,
        }
    }
    Ok(map)
}

fn map_entry(mut e: Pb<'_>) -> R<(String, FeatureList)> {
    let mut key = String::new();
    // a map entry without a value holds the default Feature, which has no list
    let mut value = FeatureList::Bytes(Vec::new());
    while !e.done() {
        match e.key()? {
            (1, LEN) => {
                let (_, raw) = e.delimited()?;
                key = match std::str::from_utf8(raw) {
                    Ok(s) => s.to_string(),
                    Err(_) => return e.err("feature key is not UTF-8"),
                };
            }
            (2, LEN) => {
                let (f, _) = e.delimited()?;
                value = feature(f)?;
            }
            (_, w) => e.skip(w)?,
        }
    }
    Ok((key, value))
}

fn feature(mut f: Pb<'_>) -> R<FeatureList> {
    let mut out = FeatureList::Bytes(Vec::new());
    while !f.done() {
        match f.key()? {
            (1, LEN) => out = bytes_list(f.delimited()?.0)?,
            (2, LEN) => out = float_list(f.delimited()?.0)?,
            (3, LEN) => out = int64_list(f.delimited()?.0)?,
            (_, w) => f.skip(w)?,
        }
    }
    Ok(out)
}

fn bytes_list(mut l: Pb<'_>) -> R<FeatureList> {
    let mut v = Vec::new();
    while !l.done() {
        match l.key()? {
            (1, LEN) => v.push(l.delimited()?.1.to_vec()),
            (_, w) => l.skip(w)?,
        }
    }
    Ok(FeatureList::Bytes(v))
}

fn float_list(mut l: Pb<'_>) -> R<FeatureList> {
    let mut v = Vec::new();
    while !l.done() {
        match l.key()? {
            (1, LEN) => {
                let (p, raw) = l.delimited()?;
                if raw.len() % 4 != 0 {
                    return p.err("packed float list length is not a multiple of 4");
                }
                v.extend(raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())));
            }
            (1, FIXED32) => v.push(f32::from_le_bytes(l.take(4)?.try_into().unwrap())),
            (_, w) => l.skip(w)?,
        }
    }
    Ok(FeatureList::Floats(v))
}

fn int64_list(mut l: Pb<'_>) -> R<FeatureList> {
    let mut v = Vec::new();
    while !l.done() {
        match l.key()? {
            (1, LEN) => {
                let (mut p, _) = l.delimited()?;
                while !p.done() {
                    v.push(p.varint()? as i64);
                }
            }
            (1, VARINT) => v.push(l.varint()? as i64),
            (_, w) => l.skip(w)?,
        }
    }
    Ok(FeatureList::Ints(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_example() {
        assert!(decode_example(&[]).unwrap().is_empty());
        // Example with an empty Features message
        assert!(decode_example(&[0x0a, 0x00]).unwrap().is_empty());
    }

    #[test]
    fn garbage_is_malformed() {
        assert!(decode_example(&[0xff; 16]).is_err());
        assert!(decode_example(&[0x0a, 0x05, 0x0a]).is_err());
        assert!(decode_example(&[0x0b]).is_err());
    }

    #[test]
    fn unknown_fields_skipped() {
        // field 7 varint, field 8 fixed64, field 9 fixed32, then empty Features
        let p = [0x38, 0x96, 0x01, 0x41, 0, 0, 0, 0, 0, 0, 0, 0, 0x4d, 0, 0, 0, 0, 0x0a, 0x00];
        assert!(decode_example(&p).unwrap().is_empty());
    }

    #[test]
    fn negative_int_varint() {
        // int64_list { value: -1 } unpacked
        let mut list = vec![0x08];
        list.extend([0xff; 9]);
        list.push(0x01);
        let mut feat = vec![0x1a, list.len() as u8];
        feat.extend(&list);
        let mut entry = vec![0x0a, 1, b'k', 0x12, feat.len() as u8];
        entry.extend(&feat);
        let mut features = vec![0x0a, entry.len() as u8];
        features.extend(&entry);
        let mut ex = vec![0x0a, features.len() as u8];
        ex.extend(&features);
        assert_eq!(decode_example(&ex).unwrap()["k"], FeatureList::Ints(vec![-1]));
    }
}
