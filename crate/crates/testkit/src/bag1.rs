//! Minimal ROS1 bag v2.0 writer.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::msgs::{ros1, Msg};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Compression {
    None,
    Lz4,
    /// Writes a chunk tagged `bz2` with opaque contents.
    Bz2,
}

impl Compression {
    fn tag(self) -> &'static str {
        match self {
            Compression::None => "none",
            Compression::Lz4 => "lz4",
            Compression::Bz2 => "bz2",
        }
    }
}

pub struct BagWriter {
    connections: Vec<(String, String)>,
    messages: Vec<(u32, u64, Vec<u8>)>,
    compression: Compression,
    chunk_size: usize,
}

fn field(name: &str, value: &[u8]) -> Vec<u8> {
    let mut out = ((name.len() + 1 + value.len()) as u32).to_le_bytes().to_vec();
    out.extend_from_slice(name.as_bytes());
    out.push(b'=');
    out.extend_from_slice(value);
    out
}

fn record(fields: &[(&str, Vec<u8>)], data: &[u8]) -> Vec<u8> {
    let header: Vec<u8> = fields.iter().flat_map(|(n, v)| field(n, v)).collect();
    let mut out = (header.len() as u32).to_le_bytes().to_vec();
    out.extend_from_slice(&header);
    out.extend_from_slice(&(data.len() as u32).to_le_bytes());
    out.extend_from_slice(data);
    out
}

fn time(ns: u64) -> Vec<u8> {
    let mut v = ((ns / 1_000_000_000) as u32).to_le_bytes().to_vec();
    v.extend_from_slice(&((ns % 1_000_000_000) as u32).to_le_bytes());
    v
}

impl BagWriter {
    pub fn new(compression: Compression) -> Self {
        Self {
            connections: Vec::new(),
            messages: Vec::new(),
            compression,
            chunk_size: 64,
        }
    }

    pub fn chunk_size(mut self, n: usize) -> Self {
        self.chunk_size = n.max(1);
        self
    }

    pub fn connection(&mut self, topic: &str, type_name: &str) -> u32 {
        self.connections.push((topic.into(), type_name.into()));
        self.connections.len() as u32 - 1
    }

    pub fn message(&mut self, conn: u32, receive_ns: u64, payload: Vec<u8>) {
        self.messages.push((conn, receive_ns, payload));
    }

    pub fn msg(&mut self, conn: u32, receive_ns: u64, msg: &Msg) {
        self.message(conn, receive_ns, ros1::encode(msg));
    }

    fn connection_record(&self, id: u32) -> Vec<u8> {
        let (topic, ty) = &self.connections[id as usize];
        let data: Vec<u8> = [
            field("topic", topic.as_bytes()),
            field("type", ty.as_bytes()),
            field("md5sum", b"*"),
            field("message_definition", b""),
        ]
        .concat();
        record(
            &[("op", vec![0x07]), ("conn", id.to_le_bytes().to_vec()), ("topic", topic.as_bytes().to_vec())],
            &data,
        )
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut body = Vec::new();
        let base = 13 + 4096;
        let mut chunk_infos = Vec::new();

        for batch in self.messages.chunks(self.chunk_size) {
            let mut inner = Vec::new();
            let mut seen = BTreeMap::new();
            let mut index: BTreeMap<u32, Vec<(u64, u32)>> = BTreeMap::new();
            for (conn, ns, payload) in batch {
                if seen.insert(*conn, ()).is_none() {
                    inner.extend(self.connection_record(*conn));
                }
                index.entry(*conn).or_default().push((*ns, inner.len() as u32));
                inner.extend(record(
                    &[("op", vec![0x02]), ("conn", conn.to_le_bytes().to_vec()), ("time", time(*ns))],
                    payload,
                ));
            }
            let stored = match self.compression {
                Compression::None => inner.clone(),
                Compression::Lz4 => {
                    let mut enc = lz4_flex::frame::FrameEncoder::new(Vec::new());
                    enc.write_all(&inner).unwrap();
                    enc.finish().unwrap()
                }
                Compression::Bz2 => b"BZh91AY&SY-not-really".to_vec(),
            };
            let chunk_pos = (base + body.len()) as u64;
            body.extend(record(
                &[
                    ("op", vec![0x05]),
                    ("compression", self.compression.tag().as_bytes().to_vec()),
                    ("size", (inner.len() as u32).to_le_bytes().to_vec()),
                ],
                &stored,
            ));
            for (conn, entries) in &index {
                let data: Vec<u8> = entries.iter().flat_map(|(ns, off)| [time(*ns), off.to_le_bytes().to_vec()].concat()).collect();
                body.extend(record(
                    &[
                        ("op", vec![0x04]),
                        ("ver", 1u32.to_le_bytes().to_vec()),
                        ("conn", conn.to_le_bytes().to_vec()),
                        ("count", (entries.len() as u32).to_le_bytes().to_vec()),
                    ],
                    &data,
                ));
            }
            let start = batch.iter().map(|m| m.1).min().unwrap_or(0);
            let end = batch.iter().map(|m| m.1).max().unwrap_or(0);
            chunk_infos.push((chunk_pos, start, end, index.iter().map(|(c, e)| (*c, e.len() as u32)).collect::<Vec<_>>()));
        }

        let index_pos = (base + body.len()) as u64;
        for id in 0..self.connections.len() as u32 {
            body.extend(self.connection_record(id));
        }
        for (pos, start, end, counts) in &chunk_infos {
            let data: Vec<u8> = counts.iter().flat_map(|(c, n)| [c.to_le_bytes(), n.to_le_bytes()].concat()).collect();
            body.extend(record(
                &[
                    ("op", vec![0x06]),
                    ("ver", 1u32.to_le_bytes().to_vec()),
                    ("chunk_pos", pos.to_le_bytes().to_vec()),
                    ("start_time", time(*start)),
                    ("end_time", time(*end)),
                    ("count", (counts.len() as u32).to_le_bytes().to_vec()),
                ],
                &data,
            ));
        }

        let mut out = b"#ROSBAG V2.0\n".to_vec();
        let fields = [
            ("op", vec![0x03]),
            ("index_pos", index_pos.to_le_bytes().to_vec()),
            ("conn_count", (self.connections.len() as u32).to_le_bytes().to_vec()),
            ("chunk_count", (chunk_infos.len() as u32).to_le_bytes().to_vec()),
        ];
        let header_len: usize = fields.iter().map(|(n, v)| 4 + n.len() + 1 + v.len()).sum();
        let pad = 4096 - 4 - header_len - 4;
        out.extend(record(&fields, &vec![b' '; pad]));
        assert_eq!(out.len(), base);
        out.extend(body);
        out
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_bytes())
    }
}
