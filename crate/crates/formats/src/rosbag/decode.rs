//! Decoders for the supported message types in ROS1 and CDR serialization.
//!
//! Every read is bounds-checked; malformed payloads produce an error, never a
//! panic or an oversized allocation.

use thiserror::Error;

use crate::frame::{sniff, Frame, FrameKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Serialization {
    Ros1,
    Cdr,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("unsupported message type {0:?}")]
    Unsupported(String),
    #[error("payload too short: need {need} bytes at offset {at}, payload has {len}")]
    Short { need: usize, at: usize, len: usize },
    #[error("unsupported CDR encapsulation {0:02x?}")]
    Encapsulation(Vec<u8>),
    #[error("malformed payload: {0}")]
    Malformed(String),
}

/// Part of a sample vector with its own meaning (joint position, velocity, effort).
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub suffix: &'static str,
    pub start: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedSample {
    /// Header stamp in nanoseconds, `None` when absent or zero.
    pub stamp_ns: Option<i64>,
    pub vector: Vec<f64>,
    pub dim_labels: Vec<String>,
    /// Non-empty only for types whose vector concatenates separate quantities.
    pub sections: Vec<Section>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedImage {
    pub stamp_ns: Option<i64>,
    pub frame: Frame,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decoded {
    Sample(DecodedSample),
    Image(DecodedImage),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageKind {
    JointState,
    Wrench,
    Pose,
    Twist,
    Float64Array,
    Float32Array,
    Image,
    CompressedImage,
}

impl MessageKind {
    /// Accepts both `pkg/Name` and `pkg/msg/Name`.
    pub fn from_type_name(type_name: &str) -> Option<Self> {
        let mut parts = type_name.split('/');
        let pkg = parts.next()?;
        let name = parts.next_back()?;
        Some(match (pkg, name) {
            ("sensor_msgs", "JointState") => MessageKind::JointState,
            ("geometry_msgs", "WrenchStamped") => MessageKind::Wrench,
            ("geometry_msgs", "PoseStamped") => MessageKind::Pose,
            ("geometry_msgs", "TwistStamped") => MessageKind::Twist,
            ("std_msgs", "Float64MultiArray") => MessageKind::Float64Array,
            ("std_msgs", "Float32MultiArray") => MessageKind::Float32Array,
            ("sensor_msgs", "Image") => MessageKind::Image,
            ("sensor_msgs", "CompressedImage") => MessageKind::CompressedImage,
            _ => return None,
        })
    }

    pub fn is_image(self) -> bool {
        matches!(self, MessageKind::Image | MessageKind::CompressedImage)
    }
}

struct Wire<'a> {
    buf: &'a [u8],
    pos: usize,
    origin: usize,
    cdr: bool,
}

type R<T> = Result<T, DecodeError>;

impl<'a> Wire<'a> {
    fn new(buf: &'a [u8], ser: Serialization) -> R<Self> {
        match ser {
            Serialization::Ros1 => Ok(Wire {
                buf,
                pos: 0,
                origin: 0,
                cdr: false,
            }),
            Serialization::Cdr => {
                if buf.len() < 4 {
                    return Err(DecodeError::Short {
                        need: 4,
                        at: 0,
                        len: buf.len(),
                    });
                }
                // CDR_LE; the options bytes carry nothing we need
                if buf[0] != 0x00 || buf[1] != 0x01 {
                    return Err(DecodeError::Encapsulation(buf[..4].to_vec()));
                }
                Ok(Wire {
                    buf,
                    pos: 4,
                    origin: 4,
                    cdr: true,
                })
            }
        }
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn take(&mut self, n: usize) -> R<&'a [u8]> {
        if n > self.remaining() {
            return Err(DecodeError::Short {
                need: n,
                at: self.pos,
                len: self.buf.len(),
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn align(&mut self, n: usize) -> R<()> {
        if self.cdr {
            let pad = (n - (self.pos - self.origin) % n) % n;
            self.take(pad)?;
        }
        Ok(())
    }

    fn u8(&mut self) -> R<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> R<u32> {
        self.align(4)?;
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn i32(&mut self) -> R<i32> {
        self.align(4)?;
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> R<f64> {
        self.align(8)?;
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> R<String> {
        let n = self.u32()? as usize;
        let raw = self.take(n)?;
        let raw = if self.cdr && n > 0 {
            match raw.split_last() {
                Some((0, body)) => body,
                _ => return Err(DecodeError::Malformed("CDR string is not NUL-terminated".into())),
            }
        } else {
            raw
        };
        String::from_utf8(raw.to_vec()).map_err(|_| DecodeError::Malformed("string is not UTF-8".into()))
    }

    /// Element count of a sequence whose elements occupy at least `min_size` bytes.
    fn count(&mut self, min_size: usize) -> R<usize> {
        let n = self.u32()? as usize;
        if n.saturating_mul(min_size) > self.remaining() {
            return Err(DecodeError::Short {
                need: n.saturating_mul(min_size),
                at: self.pos,
                len: self.buf.len(),
            });
        }
        Ok(n)
    }

    fn f64s(&mut self) -> R<Vec<f64>> {
        let n = self.count(8)?;
        if n > 0 {
            self.align(8)?;
        }
        (0..n).map(|_| self.f64()).collect()
    }

    fn f32s(&mut self) -> R<Vec<f64>> {
        let n = self.count(4)?;
        (0..n)
            .map(|_| {
                self.align(4)?;
                Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()) as f64)
            })
            .collect()
    }

    fn bytes(&mut self) -> R<&'a [u8]> {
        let n = self.u32()? as usize;
        self.take(n)
    }

    /// Returns the stamp in nanoseconds; zero stamps become `None`.
    fn header(&mut self) -> R<Option<i64>> {
        let (sec, nsec) = if self.cdr {
            let sec = self.i32()? as i64;
            (sec, self.u32()? as i64)
        } else {
            let _seq = self.u32()?;
            let sec = self.u32()? as i64;
            (sec, self.u32()? as i64)
        };
        let _frame_id = self.string()?;
        Ok((sec != 0 || nsec != 0).then_some(sec * 1_000_000_000 + nsec))
    }

    fn multiarray_layout(&mut self) -> R<()> {
        let n = self.count(12)?;
        for _ in 0..n {
            self.string()?;
            self.u32()?;
            self.u32()?;
        }
        self.u32()?;
        Ok(())
    }

    fn fixed(&mut self, n: usize) -> R<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}

fn labels(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn numbered(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

fn sample(stamp_ns: Option<i64>, vector: Vec<f64>, dim_labels: Vec<String>) -> Decoded {
    Decoded::Sample(DecodedSample {
        stamp_ns,
        vector,
        dim_labels,
        sections: Vec::new(),
    })
}

pub fn decode_message(payload: &[u8], type_name: &str, ser: Serialization) -> Result<Decoded, DecodeError> {
    let kind = MessageKind::from_type_name(type_name).ok_or_else(|| DecodeError::Unsupported(type_name.to_string()))?;
    let mut w = Wire::new(payload, ser)?;
    Ok(match kind {
        MessageKind::Wrench => {
            let stamp = w.header()?;
            sample(stamp, w.fixed(6)?, labels(&["fx", "fy", "fz", "tx", "ty", "tz"]))
        }
        MessageKind::Pose => {
            let stamp = w.header()?;
            sample(stamp, w.fixed(7)?, labels(&["x", "y", "z", "qx", "qy", "qz", "qw"]))
        }
        MessageKind::Twist => {
            let stamp = w.header()?;
            sample(stamp, w.fixed(6)?, labels(&["vx", "vy", "vz", "wx", "wy", "wz"]))
        }
        MessageKind::JointState => {
            let stamp = w.header()?;
            let n = w.count(4)?;
            let names = (0..n).map(|_| w.string()).collect::<R<Vec<_>>>()?;
            let mut vector = Vec::new();
            let mut dim_labels = Vec::new();
            let mut sections = Vec::new();
            for suffix in ["pos", "vel", "eff"] {
                let part = w.f64s()?;
                let start = vector.len();
                if part.len() == names.len() {
                    dim_labels.extend(names.iter().cloned());
                } else {
                    dim_labels.extend(numbered(part.len()));
                }
                sections.push(Section {
                    suffix,
                    start,
                    len: part.len(),
                });
                vector.extend(part);
            }
            Decoded::Sample(DecodedSample {
                stamp_ns: stamp,
                vector,
                dim_labels,
                sections,
            })
        }
        MessageKind::Float64Array => {
            w.multiarray_layout()?;
            let v = w.f64s()?;
            let n = v.len();
            sample(None, v, numbered(n))
        }
        MessageKind::Float32Array => {
            w.multiarray_layout()?;
            let v = w.f32s()?;
            let n = v.len();
            sample(None, v, numbered(n))
        }
        MessageKind::Image => {
            let stamp = w.header()?;
            let height = w.u32()?;
            let width = w.u32()?;
            let encoding = w.string()?;
            let _bigendian = w.u8()?;
            let step = w.u32()? as usize;
            let data = w.bytes()?;
            Decoded::Image(DecodedImage {
                stamp_ns: stamp,
                frame: raw_image(height, width, &encoding, step, data)?,
            })
        }
        MessageKind::CompressedImage => {
            let stamp = w.header()?;
            let format = w.string()?.to_ascii_lowercase();
            let data = w.bytes()?.to_vec();
            let kind = if format.contains("png") {
                FrameKind::Png
            } else if format.contains("jpeg") || format.contains("jpg") {
                FrameKind::Jpeg
            } else {
                sniff(&data).ok_or_else(|| DecodeError::Malformed(format!("unknown compressed image format {format:?}")))?
            };
            Decoded::Image(DecodedImage {
                stamp_ns: stamp,
                frame: Frame { kind, bytes: data },
            })
        }
    })
}

fn raw_image(height: u32, width: u32, encoding: &str, step: usize, data: &[u8]) -> R<Frame> {
    let (channels, swap) = match encoding {
        "rgb8" | "8UC3" => (3usize, false),
        "bgr8" => (3, true),
        "rgba8" | "8UC4" => (4, false),
        "bgra8" => (4, true),
        "mono8" | "8UC1" => (1, false),
        other => return Err(DecodeError::Malformed(format!("unsupported image encoding {other:?}"))),
    };
    let row = width as usize * channels;
    let rows = height as usize;
    if step < row || step.saturating_mul(rows) > data.len() {
        return Err(DecodeError::Malformed(format!(
            "image {width}x{height} {encoding} with step {step} needs {} bytes, has {}",
            step.saturating_mul(rows),
            data.len()
        )));
    }
    let mut pixels = Vec::with_capacity(row * rows);
    for r in 0..rows {
        pixels.extend_from_slice(&data[r * step..r * step + row]);
    }
    if swap {
        pixels.chunks_exact_mut(channels).for_each(|px| px.swap(0, 2));
    }
    Ok(Frame {
        kind: FrameKind::Raw {
            width,
            height,
            channels: channels as u8,
        },
        bytes: pixels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ros1_header(out: &mut Vec<u8>, sec: u32, nsec: u32) {
        out.extend_from_slice(&7u32.to_le_bytes());
        out.extend_from_slice(&sec.to_le_bytes());
        out.extend_from_slice(&nsec.to_le_bytes());
        out.extend_from_slice(&0u32.to_le_bytes());
    }

    #[test]
    fn identity_pose() {
        let mut p = Vec::new();
        ros1_header(&mut p, 1, 0);
        for v in [0.0f64, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0] {
            p.extend_from_slice(&v.to_le_bytes());
        }
        let Decoded::Sample(s) = decode_message(&p, "geometry_msgs/PoseStamped", Serialization::Ros1).unwrap() else {
            panic!()
        };
        assert_eq!(s.vector, vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(s.stamp_ns, Some(1_000_000_000));
    }

    #[test]
    fn empty_float_array() {
        // no dims, offset 0, no data
        let p = [0u8; 12];
        let Decoded::Sample(s) = decode_message(&p, "std_msgs/Float64MultiArray", Serialization::Ros1).unwrap() else {
            panic!()
        };
        assert!(s.vector.is_empty());
    }

    #[test]
    fn zero_stamp_is_absent() {
        let mut p = Vec::new();
        ros1_header(&mut p, 0, 0);
        p.extend_from_slice(&[0u8; 48]);
        let Decoded::Sample(s) = decode_message(&p, "geometry_msgs/TwistStamped", Serialization::Ros1).unwrap() else {
            panic!()
        };
        assert_eq!(s.stamp_ns, None);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            decode_message(&[], "nav_msgs/Odometry", Serialization::Ros1),
            Err(DecodeError::Unsupported(_))
        ));
        assert!(matches!(
            decode_message(&[0, 1, 0, 0, 1], "geometry_msgs/msg/WrenchStamped", Serialization::Cdr),
            Err(DecodeError::Short { .. })
        ));
        assert!(matches!(
            decode_message(&[0, 0, 0, 0, 0, 0, 0, 0], "geometry_msgs/msg/WrenchStamped", Serialization::Cdr),
            Err(DecodeError::Encapsulation(_))
        ));
        // huge declared sequence length must not allocate
        let mut p = Vec::new();
        ros1_header(&mut p, 1, 1);
        p.extend_from_slice(&u32::MAX.to_le_bytes());
        assert!(decode_message(&p, "sensor_msgs/JointState", Serialization::Ros1).is_err());
    }

    #[test]
    fn bgr_is_swapped_and_step_padding_dropped() {
        let f = raw_image(1, 2, "bgr8", 8, &[1, 2, 3, 4, 5, 6, 0, 0]).unwrap();
        assert_eq!(f.bytes, vec![3, 2, 1, 6, 5, 4]);
        assert!(raw_image(2, 2, "rgb8", 6, &[0; 11]).is_err());
        assert!(raw_image(1, 1, "16UC1", 2, &[0; 2]).is_err());
    }

    #[test]
    fn type_names() {
        assert_eq!(MessageKind::from_type_name("sensor_msgs/msg/JointState"), Some(MessageKind::JointState));
        assert_eq!(MessageKind::from_type_name("sensor_msgs/JointState"), Some(MessageKind::JointState));
        assert_eq!(MessageKind::from_type_name("JointState"), None);
        assert_eq!(MessageKind::from_type_name("other_msgs/JointState"), None);
    }
}
