//! ROS1 bag v2.0 reader.
//!
//! The file is scanned sequentially. Chunks are decompressed in memory and
//! their connection and message records extracted; index and chunk-info
//! records are skipped since a full scan recovers everything they describe.

use std::collections::BTreeMap;
use std::io::{Read, Seek, SeekFrom};
use std::path::Path;

use super::{BagError, MessageLocator, RawMessage, RawTopicStream, Serialization};
use crate::detect::ROSBAG1_MAGIC;

const OP_MSG_DATA: u8 = 0x02;
const OP_CHUNK: u8 = 0x05;
const OP_CONNECTION: u8 = 0x07;

struct Record {
    pos: u64,
    fields: BTreeMap<String, Vec<u8>>,
    data: Vec<u8>,
    /// Position of `data` within the enclosing byte stream.
    data_pos: u64,
}

impl Record {
    fn field(&self, name: &str) -> Result<&[u8], BagError> {
        self.fields.get(name).map(|v| v.as_slice()).ok_or_else(|| BagError::Malformed {
            offset: self.pos,
            message: format!("record lacks field {name:?}"),
        })
    }

    fn u32_field(&self, name: &str) -> Result<u32, BagError> {
        let v = self.field(name)?;
        v.try_into().map(u32::from_le_bytes).map_err(|_| BagError::Malformed {
            offset: self.pos,
            message: format!("field {name:?} has {} bytes, expected 4", v.len()),
        })
    }

    fn time_field(&self, name: &str) -> Result<i64, BagError> {
        let v = self.field(name)?;
        if v.len() != 8 {
            return Err(BagError::Malformed {
                offset: self.pos,
                message: format!("field {name:?} has {} bytes, expected 8", v.len()),
            });
        }
        let sec = u32::from_le_bytes(v[..4].try_into().unwrap()) as i64;
        let nsec = u32::from_le_bytes(v[4..].try_into().unwrap()) as i64;
        Ok(sec * 1_000_000_000 + nsec)
    }

    fn op(&self) -> Result<u8, BagError> {
        match self.field("op")? {
            [op] => Ok(*op),
            other => Err(BagError::Malformed {
                offset: self.pos,
                message: format!("op field has {} bytes", other.len()),
            }),
        }
    }
}

fn read_exactly<R: Read>(r: &mut R, n: u64, pos: u64) -> Result<Vec<u8>, BagError> {
    let mut buf = Vec::new();
    // `take` grows the buffer as bytes arrive, so a corrupt length cannot
    // trigger a huge up-front allocation
    r.take(n).read_to_end(&mut buf).map_err(|e| BagError::Read(e.to_string()))?;
    if (buf.len() as u64) < n {
        return Err(BagError::Truncated { offset: pos });
    }
    Ok(buf)
}

fn parse_fields(bytes: &[u8], pos: u64) -> Result<BTreeMap<String, Vec<u8>>, BagError> {
    let malformed = |message: String| BagError::Malformed { offset: pos, message };
    let mut fields = BTreeMap::new();
    let mut rest = bytes;
    while !rest.is_empty() {
        if rest.len() < 4 {
            return Err(malformed("dangling bytes in record header".into()));
        }
        let n = u32::from_le_bytes(rest[..4].try_into().unwrap()) as usize;
        rest = &rest[4..];
        if n > rest.len() {
            return Err(malformed(format!("header field of {n} bytes overruns header")));
        }
        let (field, tail) = rest.split_at(n);
        rest = tail;
        let eq = field
            .iter()
            .position(|&b| b == b'=')
            .ok_or_else(|| malformed("header field without '='".into()))?;
        let name = String::from_utf8_lossy(&field[..eq]).into_owned();
        fields.insert(name, field[eq + 1..].to_vec());
    }
    Ok(fields)
}

/// Reads one record; `Ok(None)` at a clean end of stream.
fn next_record<R: Read>(r: &mut R, pos: &mut u64) -> Result<Option<Record>, BagError> {
    let start = *pos;
    let mut len = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut len[got..]).map_err(|e| BagError::Read(e.to_string()))? {
            0 if got == 0 => return Ok(None),
            0 => return Err(BagError::Truncated { offset: start }),
            n => got += n,
        }
    }
    let header_len = u32::from_le_bytes(len) as u64;
    let header = read_exactly(r, header_len, start)?;
    let data_len = u32::from_le_bytes(read_exactly(r, 4, start)?.try_into().unwrap()) as u64;
    let data_pos = start + 4 + header_len + 4;
    let data = read_exactly(r, data_len, start)?;
    *pos = data_pos + data_len;
    Ok(Some(Record {
        pos: start,
        fields: parse_fields(&header, start)?,
        data,
        data_pos,
    }))
}

fn decompress(rec: &Record) -> Result<Vec<u8>, BagError> {
    let compression = String::from_utf8_lossy(rec.field("compression")?).into_owned();
    let size = rec.u32_field("size")? as usize;
    let out = match compression.as_str() {
        "none" => rec.data.clone(),
        #[cfg(feature = "lz4")]
        "lz4" => {
            let mut out = Vec::new();
            lz4_flex::frame::FrameDecoder::new(rec.data.as_slice())
                .take(size as u64 + 1)
                .read_to_end(&mut out)
                .map_err(|e| BagError::Malformed {
                    offset: rec.pos,
                    message: format!("lz4 chunk: {e}"),
                })?;
            out
        }
        other => return Err(BagError::UnsupportedCompression(other.to_string())),
    };
    if out.len() != size {
        return Err(BagError::Malformed {
            offset: rec.pos,
            message: format!("chunk declares {size} bytes, holds {}", out.len()),
        });
    }
    Ok(out)
}

#[derive(Default)]
struct Builder {
    /// conn id -> (topic, type)
    connections: BTreeMap<u32, (String, String)>,
    messages: Vec<(u32, RawMessage)>,
}

impl Builder {
    fn connection(&mut self, rec: &Record) -> Result<(), BagError> {
        let id = rec.u32_field("conn")?;
        let topic = String::from_utf8_lossy(rec.field("topic")?).into_owned();
        let info = parse_fields(&rec.data, rec.data_pos)?;
        let ty = info
            .get("type")
            .map(|t| String::from_utf8_lossy(t).into_owned())
            .ok_or_else(|| BagError::Malformed {
                offset: rec.pos,
                message: format!("connection {id} has no type"),
            })?;
        self.connections.entry(id).or_insert((topic, ty));
        Ok(())
    }

    fn message(&mut self, rec: Record, chunk_pos: Option<u64>) -> Result<(), BagError> {
        let conn = rec.u32_field("conn")?;
        let receive_ns = rec.time_field("time")?;
        let locator = MessageLocator::Ros1 {
            chunk_pos,
            offset: rec.data_pos,
            len: rec.data.len() as u32,
        };
        self.messages.push((
            conn,
            RawMessage {
                receive_ns,
                payload: rec.data,
                locator,
            },
        ));
        Ok(())
    }

    fn finish(self) -> Result<Vec<RawTopicStream>, BagError> {
        let mut streams: BTreeMap<String, RawTopicStream> = BTreeMap::new();
        let mut by_conn = BTreeMap::new();
        for (id, (topic, ty)) in &self.connections {
            let s = streams.entry(topic.clone()).or_insert_with(|| RawTopicStream {
                topic: topic.clone(),
                type_name: ty.clone(),
                serialization: Serialization::Ros1,
                messages: Vec::new(),
            });
            if &s.type_name != ty {
                return Err(BagError::TypeConflict {
                    topic: topic.clone(),
                    first: s.type_name.clone(),
                    second: ty.clone(),
                });
            }
            by_conn.insert(*id, topic.clone());
        }
        for (conn, msg) in self.messages {
            let topic = by_conn.get(&conn).ok_or(BagError::UnknownConnection(conn))?;
            streams.get_mut(topic).unwrap().messages.push(msg);
        }
        let mut out: Vec<_> = streams.into_values().collect();
        for s in &mut out {
            s.messages.sort_by_key(|m| m.receive_ns);
        }
        Ok(out)
    }
}

/// Parses a bag from any byte stream.
pub fn parse_ros1_reader<R: Read>(mut r: R) -> Result<Vec<RawTopicStream>, BagError> {
    let mut magic = [0u8; 13];
    r.read_exact(&mut magic).map_err(|_| BagError::BadMagic)?;
    if magic != ROSBAG1_MAGIC {
        return Err(BagError::BadMagic);
    }
    let mut pos = magic.len() as u64;
    let mut b = Builder::default();
    while let Some(rec) = next_record(&mut r, &mut pos)? {
        match rec.op()? {
            OP_CONNECTION => b.connection(&rec)?,
            OP_MSG_DATA => b.message(rec, None)?,
            OP_CHUNK => {
                let inner = decompress(&rec)?;
                let mut cursor = inner.as_slice();
                let mut ipos = 0u64;
                while let Some(irec) = next_record(&mut cursor, &mut ipos)? {
                    match irec.op()? {
                        OP_CONNECTION => b.connection(&irec)?,
                        OP_MSG_DATA => b.message(irec, Some(rec.pos))?,
                        _ => {}
                    }
                }
            }
            // bag header, index data, chunk info and unknown ops
            _ => {}
        }
    }
    b.finish()
}

pub fn parse_ros1_bytes(bytes: &[u8]) -> Result<Vec<RawTopicStream>, BagError> {
    parse_ros1_reader(bytes)
}

pub fn parse_ros1_bag(path: &Path) -> Result<Vec<RawTopicStream>, BagError> {
    let f = std::fs::File::open(path).map_err(|e| BagError::Read(format!("{}: {e}", path.display())))?;
    parse_ros1_reader(std::io::BufReader::new(f))
}

/// Decompressed contents of the chunk record at `chunk_pos`.
pub fn read_chunk<R: Read + Seek>(r: &mut R, chunk_pos: u64) -> Result<Vec<u8>, BagError> {
    r.seek(SeekFrom::Start(chunk_pos)).map_err(|e| BagError::Read(e.to_string()))?;
    let mut pos = chunk_pos;
    let rec = next_record(r, &mut pos)?.ok_or(BagError::Truncated { offset: chunk_pos })?;
    if rec.op()? != OP_CHUNK {
        return Err(BagError::Malformed {
            offset: chunk_pos,
            message: "locator does not point at a chunk".into(),
        });
    }
    decompress(&rec)
}

/// Payload of a message outside any chunk.
pub fn read_plain<R: Read + Seek>(r: &mut R, offset: u64, len: u32) -> Result<Vec<u8>, BagError> {
    r.seek(SeekFrom::Start(offset)).map_err(|e| BagError::Read(e.to_string()))?;
    read_exactly(r, len as u64, offset)
}
