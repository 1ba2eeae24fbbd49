//! TFRecord framing: `u64 length`, masked CRC of the length bytes, payload,
//! masked CRC of the payload. All little endian.

use std::io::{self, Read, Seek, SeekFrom};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrcKind {
    Length,
    Payload,
}

impl std::fmt::Display for CrcKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CrcKind::Length => "length",
            CrcKind::Payload => "payload",
        })
    }
}

#[derive(Debug, Error)]
pub enum TfRecordError {
    #[error("record {ordinal} at byte {offset}: {which} CRC mismatch")]
    Crc { ordinal: usize, offset: u64, which: CrcKind },
    #[error("record {ordinal} at byte {offset} is truncated")]
    Truncated { ordinal: usize, offset: u64 },
    #[error("shard is GZIP-compressed, which is not supported; decompress it first")]
    Gzip,
    #[error("read failed: {0}")]
    Io(#[from] io::Error),
}

pub fn masked_crc32c(data: &[u8]) -> u32 {
    crc32c::crc32c(data).rotate_right(15).wrapping_add(0xa282_ead8)
}

/// Fills `buf` as far as the stream allows and returns how many bytes arrived.
fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut got = 0;
    while got < buf.len() {
        match r.read(&mut buf[got..]) {
            Ok(0) => break,
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(got)
}

/// Reads and verifies a frame header. `Ok(None)` at a clean end of stream.
pub fn read_header<R: Read>(r: &mut R, ordinal: usize, offset: u64) -> Result<Option<u64>, TfRecordError> {
    let mut head = [0u8; 12];
    let got = read_full(r, &mut head)?;
    if got == 0 {
        return Ok(None);
    }
    // a gzip stream starts 1f 8b; a valid frame could too, so only call it
    // gzip when the header does not verify
    let gzip = ordinal == 0 && got >= 2 && head[..2] == [0x1f, 0x8b];
    if got < 12 {
        if gzip {
            return Err(TfRecordError::Gzip);
        }
        return Err(TfRecordError::Truncated { ordinal, offset });
    }
    let len_bytes: [u8; 8] = head[..8].try_into().unwrap();
    let crc = u32::from_le_bytes(head[8..].try_into().unwrap());
    if masked_crc32c(&len_bytes) != crc {
        if gzip {
            return Err(TfRecordError::Gzip);
        }
        return Err(TfRecordError::Crc {
            ordinal,
            offset,
            which: CrcKind::Length,
        });
    }
    Ok(Some(u64::from_le_bytes(len_bytes)))
}

/// Reads a payload of `len` bytes and its trailing CRC.
pub fn read_payload<R: Read>(r: &mut R, len: u64, ordinal: usize, offset: u64) -> Result<Vec<u8>, TfRecordError> {
    let mut payload = Vec::new();
    r.take(len).read_to_end(&mut payload)?;
    let mut crc = [0u8; 4];
    if (payload.len() as u64) < len || read_full(r, &mut crc)? < 4 {
        return Err(TfRecordError::Truncated { ordinal, offset });
    }
    if masked_crc32c(&payload) != u32::from_le_bytes(crc) {
        return Err(TfRecordError::Crc {
            ordinal,
            offset,
            which: CrcKind::Payload,
        });
    }
    Ok(payload)
}

/// Iterator over verified payloads. Stops after the first error.
pub struct TfRecordReader<R> {
    inner: R,
    ordinal: usize,
    offset: u64,
    done: bool,
}

impl<R: Read> TfRecordReader<R> {
    pub fn new(inner: R) -> Self {
        Self {
            inner,
            ordinal: 0,
            offset: 0,
            done: false,
        }
    }
}

impl<R: Read> Iterator for TfRecordReader<R> {
    type Item = Result<Vec<u8>, TfRecordError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let result = read_header(&mut self.inner, self.ordinal, self.offset).and_then(|len| match len {
            None => Ok(None),
            Some(len) => read_payload(&mut self.inner, len, self.ordinal, self.offset).map(Some),
        });
        match result {
            Ok(Some(p)) => {
                self.offset += 16 + p.len() as u64;
                self.ordinal += 1;
                Some(Ok(p))
            }
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

pub fn read_tfrecord_stream<R: Read>(r: R) -> TfRecordReader<R> {
    TfRecordReader::new(r)
}

/// `(offset, payload length)` of every frame, reading headers only.
pub fn scan_headers<R: Read + Seek>(r: &mut R) -> Result<Vec<(u64, u64)>, TfRecordError> {
    let mut out = Vec::new();
    let mut offset = 0u64;
    while let Some(len) = read_header(r, out.len(), offset)? {
        out.push((offset, len));
        offset = offset.saturating_add(16).saturating_add(len);
        r.seek(SeekFrom::Start(offset))?;
    }
    Ok(out)
}

/// Reads the frame at `offset`.
pub fn read_record_at<R: Read + Seek>(r: &mut R, offset: u64, ordinal: usize) -> Result<Vec<u8>, TfRecordError> {
    r.seek(SeekFrom::Start(offset))?;
    let len = read_header(r, ordinal, offset)?.ok_or(TfRecordError::Truncated { ordinal, offset })?;
    read_payload(r, len, ordinal, offset)
}
