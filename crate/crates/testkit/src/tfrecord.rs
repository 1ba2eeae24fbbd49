//! TFRecord framing and `tf.train.Example` protobuf encoding.

use std::collections::BTreeMap;

/// Bitwise CRC-32C (Castagnoli, reflected polynomial 0x82F63B78).
pub fn crc32c(data: &[u8]) -> u32 {
    let mut crc = !0u32;
    for &byte in data {
        crc ^= byte as u32;
        for _ in 0..8 {
            crc = if crc & 1 != 0 { (crc >> 1) ^ 0x82F6_3B78 } else { crc >> 1 };
        }
    }
    !crc
}

pub fn masked_crc(data: &[u8]) -> u32 {
    let crc = crc32c(data);
    crc.rotate_right(15).wrapping_add(0xa282_ead8)
}

/// One framed record: length, length CRC, payload, payload CRC.
pub fn frame(payload: &[u8]) -> Vec<u8> {
    let len = (payload.len() as u64).to_le_bytes();
    let mut out = len.to_vec();
    out.extend_from_slice(&masked_crc(&len).to_le_bytes());
    out.extend_from_slice(payload);
    out.extend_from_slice(&masked_crc(payload).to_le_bytes());
    out
}

pub fn shard(payloads: &[Vec<u8>]) -> Vec<u8> {
    payloads.iter().flat_map(|p| frame(p)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Feature {
    Bytes(Vec<Vec<u8>>),
    Floats(Vec<f32>),
    Ints(Vec<i64>),
}

fn varint(out: &mut Vec<u8>, mut v: u64) {
    loop {
        let b = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(b);
            return;
        }
        out.push(b | 0x80);
    }
}

fn key(out: &mut Vec<u8>, field: u32, wire: u8) {
    varint(out, ((field as u64) << 3) | wire as u64);
}

fn len_delimited(out: &mut Vec<u8>, field: u32, body: &[u8]) {
    key(out, field, 2);
    varint(out, body.len() as u64);
    out.extend_from_slice(body);
}

/// Serializes an Example. `packed` selects packed or one-tag-per-element
/// encoding for numeric lists; readers must accept both.
pub fn encode_example(features: &BTreeMap<String, Feature>, packed: bool) -> Vec<u8> {
    let mut map = Vec::new();
    for (name, feature) in features {
        let mut list = Vec::new();
        match feature {
            Feature::Bytes(items) => items.iter().for_each(|b| len_delimited(&mut list, 1, b)),
            Feature::Floats(v) if packed => {
                let body: Vec<u8> = v.iter().flat_map(|x| x.to_le_bytes()).collect();
                len_delimited(&mut list, 1, &body);
            }
            Feature::Floats(v) => v.iter().for_each(|x| {
                key(&mut list, 1, 5);
                list.extend_from_slice(&x.to_le_bytes());
            }),
            Feature::Ints(v) if packed => {
                let mut body = Vec::new();
                v.iter().for_each(|&x| varint(&mut body, x as u64));
                len_delimited(&mut list, 1, &body);
            }
            Feature::Ints(v) => v.iter().for_each(|&x| {
                key(&mut list, 1, 0);
                varint(&mut list, x as u64);
            }),
        }
        let kind = match feature {
            Feature::Bytes(_) => 1,
            Feature::Floats(_) => 2,
            Feature::Ints(_) => 3,
        };
        let mut feat = Vec::new();
        len_delimited(&mut feat, kind, &list);
        let mut entry = Vec::new();
        len_delimited(&mut entry, 1, name.as_bytes());
        len_delimited(&mut entry, 2, &feat);
        len_delimited(&mut map, 1, &entry);
    }
    let mut example = Vec::new();
    len_delimited(&mut example, 1, &map);
    example
}
