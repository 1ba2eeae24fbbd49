//! Message values and two independent encoders: ROS1 serialization and
//! XCDR1 little-endian CDR with encapsulation header.

use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub seq: u32,
    pub sec: u32,
    pub nsec: u32,
    pub frame_id: String,
}

impl Header {
    pub fn at(sec: u32, nsec: u32) -> Self {
        Self {
            seq: 0,
            sec,
            nsec,
            frame_id: "base".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dim {
    pub label: String,
    pub size: u32,
    pub stride: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Msg {
    Wrench { header: Header, force: [f64; 3], torque: [f64; 3] },
    Pose { header: Header, position: [f64; 3], orientation: [f64; 4] },
    Twist { header: Header, linear: [f64; 3], angular: [f64; 3] },
    JointState { header: Header, name: Vec<String>, position: Vec<f64>, velocity: Vec<f64>, effort: Vec<f64> },
    Float64Array { dims: Vec<Dim>, data_offset: u32, data: Vec<f64> },
    Float32Array { dims: Vec<Dim>, data_offset: u32, data: Vec<f32> },
    Image { header: Header, height: u32, width: u32, encoding: String, is_bigendian: u8, step: u32, data: Vec<u8> },
    CompressedImage { header: Header, format: String, data: Vec<u8> },
}

impl Msg {
    pub fn type_name(&self, ros2: bool) -> String {
        let (pkg, name) = match self {
            Msg::Wrench { .. } => ("geometry_msgs", "WrenchStamped"),
            Msg::Pose { .. } => ("geometry_msgs", "PoseStamped"),
            Msg::Twist { .. } => ("geometry_msgs", "TwistStamped"),
            Msg::JointState { .. } => ("sensor_msgs", "JointState"),
            Msg::Float64Array { .. } => ("std_msgs", "Float64MultiArray"),
            Msg::Float32Array { .. } => ("std_msgs", "Float32MultiArray"),
            Msg::Image { .. } => ("sensor_msgs", "Image"),
            Msg::CompressedImage { .. } => ("sensor_msgs", "CompressedImage"),
        };
        if ros2 {
            format!("{pkg}/msg/{name}")
        } else {
            format!("{pkg}/{name}")
        }
    }

    /// Numeric vector the decoder is expected to produce, in decoder order.
    pub fn expected_vector(&self) -> Vec<f64> {
        match self {
            Msg::Wrench { force, torque, .. } => force.iter().chain(torque).copied().collect(),
            Msg::Pose { position, orientation, .. } => position.iter().chain(orientation).copied().collect(),
            Msg::Twist { linear, angular, .. } => linear.iter().chain(angular).copied().collect(),
            Msg::JointState { position, velocity, effort, .. } => position.iter().chain(velocity).chain(effort).copied().collect(),
            Msg::Float64Array { data, .. } => data.clone(),
            Msg::Float32Array { data, .. } => data.iter().map(|&x| x as f64).collect(),
            Msg::Image { .. } | Msg::CompressedImage { .. } => Vec::new(),
        }
    }

    pub fn header(&self) -> Option<&Header> {
        match self {
            Msg::Wrench { header, .. }
            | Msg::Pose { header, .. }
            | Msg::Twist { header, .. }
            | Msg::JointState { header, .. }
            | Msg::Image { header, .. }
            | Msg::CompressedImage { header, .. } => Some(header),
            _ => None,
        }
    }

    pub fn wrench(sec: u32, nsec: u32, force: [f64; 3], torque: [f64; 3]) -> Self {
        Msg::Wrench {
            header: Header::at(sec, nsec),
            force,
            torque,
        }
    }
}

/// Random message of the given kind (0..8, same order as the enum).
pub fn random_msg(rng: &mut impl Rng, kind: usize) -> Msg {
    let f = |rng: &mut dyn rand::RngCore| f64::from_bits(rng.next_u64() & !(0x7ff << 52) | (rng.next_u64() % 2047) << 52);
    let header = |rng: &mut dyn rand::RngCore| Header {
        seq: rng.next_u32(),
        sec: rng.next_u32() >> 1,
        nsec: rng.next_u32() % 1_000_000_000,
        frame_id: "f".repeat((rng.next_u32() % 7) as usize),
    };
    let n = rng.gen_range(0..6);
    let vecf = |rng: &mut dyn rand::RngCore, n: usize| (0..n).map(|_| f(rng)).collect::<Vec<f64>>();
    match kind {
        0 => Msg::Wrench {
            header: header(rng),
            force: [f(rng), f(rng), f(rng)],
            torque: [f(rng), f(rng), f(rng)],
        },
        1 => Msg::Pose {
            header: header(rng),
            position: [f(rng), f(rng), f(rng)],
            orientation: [f(rng), f(rng), f(rng), f(rng)],
        },
        2 => Msg::Twist {
            header: header(rng),
            linear: [f(rng), f(rng), f(rng)],
            angular: [f(rng), f(rng), f(rng)],
        },
        3 => {
            let has_vel = rng.gen_bool(0.5);
            Msg::JointState {
                header: header(rng),
                name: (0..n).map(|i| format!("joint_{i}")).collect(),
                position: vecf(rng, n),
                velocity: if has_vel { vecf(rng, n) } else { Vec::new() },
                effort: vecf(rng, n),
            }
        }
        4 => Msg::Float64Array {
            dims: (0..rng.gen_range(0..3))
                .map(|i| Dim {
                    label: format!("d{i}"),
                    size: rng.gen(),
                    stride: rng.gen(),
                })
                .collect(),
            data_offset: rng.gen_range(0..4),
            data: vecf(rng, n * 3),
        },
        5 => Msg::Float32Array {
            dims: vec![Dim {
                label: "x".into(),
                size: n as u32,
                stride: 1,
            }],
            data_offset: 0,
            data: (0..n).map(|_| f32::from_bits(rng.next_u32() & 0xbfff_ffff)).collect(),
        },
        6 => {
            let (h, w) = (rng.gen_range(1..5), rng.gen_range(1..5));
            Msg::Image {
                header: header(rng),
                height: h,
                width: w,
                encoding: "rgb8".into(),
                is_bigendian: 0,
                step: w * 3,
                data: (0..h * w * 3).map(|_| rng.gen()).collect(),
            }
        }
        _ => Msg::CompressedImage {
            header: header(rng),
            format: "jpeg".into(),
            data: (0..rng.gen_range(0..40)).map(|_| rng.gen()).collect(),
        },
    }
}

/// ROS1 wire encoding: little endian, u32 length prefixes, no alignment.
pub mod ros1 {
    use super::*;

    struct W(Vec<u8>);

    impl W {
        fn u8(&mut self, v: u8) {
            self.0.push(v);
        }
        fn u32(&mut self, v: u32) {
            self.0.extend_from_slice(&v.to_le_bytes());
        }
        fn f64(&mut self, v: f64) {
            self.0.extend_from_slice(&v.to_le_bytes());
        }
        fn f32(&mut self, v: f32) {
            self.0.extend_from_slice(&v.to_le_bytes());
        }
        fn string(&mut self, s: &str) {
            self.u32(s.len() as u32);
            self.0.extend_from_slice(s.as_bytes());
        }
        fn f64s(&mut self, v: &[f64]) {
            self.u32(v.len() as u32);
            v.iter().for_each(|&x| self.f64(x));
        }
        fn bytes(&mut self, v: &[u8]) {
            self.u32(v.len() as u32);
            self.0.extend_from_slice(v);
        }
        fn header(&mut self, h: &Header) {
            self.u32(h.seq);
            self.u32(h.sec);
            self.u32(h.nsec);
            self.string(&h.frame_id);
        }
        fn dims(&mut self, dims: &[Dim], offset: u32) {
            self.u32(dims.len() as u32);
            for d in dims {
                self.string(&d.label);
                self.u32(d.size);
                self.u32(d.stride);
            }
            self.u32(offset);
        }
    }

    pub fn encode(msg: &Msg) -> Vec<u8> {
        let mut w = W(Vec::new());
        match msg {
            Msg::Wrench { header, force, torque } => {
                w.header(header);
                force.iter().chain(torque).for_each(|&x| w.f64(x));
            }
            Msg::Pose { header, position, orientation } => {
                w.header(header);
                position.iter().chain(orientation).for_each(|&x| w.f64(x));
            }
            Msg::Twist { header, linear, angular } => {
                w.header(header);
                linear.iter().chain(angular).for_each(|&x| w.f64(x));
            }
            Msg::JointState { header, name, position, velocity, effort } => {
                w.header(header);
                w.u32(name.len() as u32);
                name.iter().for_each(|n| w.string(n));
                w.f64s(position);
                w.f64s(velocity);
                w.f64s(effort);
            }
            Msg::Float64Array { dims, data_offset, data } => {
                w.dims(dims, *data_offset);
                w.f64s(data);
            }
            Msg::Float32Array { dims, data_offset, data } => {
                w.dims(dims, *data_offset);
                w.u32(data.len() as u32);
                data.iter().for_each(|&x| w.f32(x));
            }
            Msg::Image { header, height, width, encoding, is_bigendian, step, data } => {
                w.header(header);
                w.u32(*height);
                w.u32(*width);
                w.string(encoding);
                w.u8(*is_bigendian);
                w.u32(*step);
                w.bytes(data);
            }
            Msg::CompressedImage { header, format, data } => {
                w.header(header);
                w.string(format);
                w.bytes(data);
            }
        }
        w.0
    }
}

/// CDR (XCDR1, little endian). Alignment is relative to the byte after the
/// 4-byte encapsulation header.
pub mod cdr {
    use super::*;

    struct W(Vec<u8>);

    impl W {
        fn new() -> Self {
            W(vec![0x00, 0x01, 0x00, 0x00])
        }
        fn pad(&mut self, n: usize) {
            while !(self.0.len() - 4).is_multiple_of(n) {
                self.0.push(0);
            }
        }
        fn u8(&mut self, v: u8) {
            self.0.push(v);
        }
        fn u32(&mut self, v: u32) {
            self.pad(4);
            self.0.extend_from_slice(&v.to_le_bytes());
        }
        fn i32(&mut self, v: i32) {
            self.pad(4);
            self.0.extend_from_slice(&v.to_le_bytes());
        }
        fn f64(&mut self, v: f64) {
            self.pad(8);
            self.0.extend_from_slice(&v.to_le_bytes());
        }
        fn f32(&mut self, v: f32) {
            self.pad(4);
            self.0.extend_from_slice(&v.to_le_bytes());
        }
        fn string(&mut self, s: &str) {
            self.u32(s.len() as u32 + 1);
            self.0.extend_from_slice(s.as_bytes());
            self.0.push(0);
        }
        fn f64s(&mut self, v: &[f64]) {
            self.u32(v.len() as u32);
            v.iter().for_each(|&x| self.f64(x));
        }
        fn bytes(&mut self, v: &[u8]) {
            self.u32(v.len() as u32);
            self.0.extend_from_slice(v);
        }
        fn header(&mut self, h: &Header) {
            self.i32(h.sec as i32);
            self.u32(h.nsec);
            self.string(&h.frame_id);
        }
        fn dims(&mut self, dims: &[Dim], offset: u32) {
            self.u32(dims.len() as u32);
            for d in dims {
                self.string(&d.label);
                self.u32(d.size);
                self.u32(d.stride);
            }
            self.u32(offset);
        }
    }

    pub fn encode(msg: &Msg) -> Vec<u8> {
        let mut w = W::new();
        match msg {
            Msg::Wrench { header, force, torque } => {
                w.header(header);
                force.iter().chain(torque).for_each(|&x| w.f64(x));
            }
            Msg::Pose { header, position, orientation } => {
                w.header(header);
                position.iter().chain(orientation).for_each(|&x| w.f64(x));
            }
            Msg::Twist { header, linear, angular } => {
                w.header(header);
                linear.iter().chain(angular).for_each(|&x| w.f64(x));
            }
            Msg::JointState { header, name, position, velocity, effort } => {
                w.header(header);
                w.u32(name.len() as u32);
                name.iter().for_each(|n| w.string(n));
                w.f64s(position);
                w.f64s(velocity);
                w.f64s(effort);
            }
            Msg::Float64Array { dims, data_offset, data } => {
                w.dims(dims, *data_offset);
                w.f64s(data);
            }
            Msg::Float32Array { dims, data_offset, data } => {
                w.dims(dims, *data_offset);
                w.u32(data.len() as u32);
                data.iter().for_each(|&x| w.f32(x));
            }
            Msg::Image { header, height, width, encoding, is_bigendian, step, data } => {
                w.header(header);
                w.u32(*height);
                w.u32(*width);
                w.string(encoding);
                w.u8(*is_bigendian);
                w.u32(*step);
                w.bytes(data);
            }
            Msg::CompressedImage { header, format, data } => {
                w.header(header);
                w.string(format);
                w.bytes(data);
            }
        }
        w.0
    }
}
