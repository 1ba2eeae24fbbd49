//! Whole-dataset fixtures. Each builder writes a dataset to disk and returns
//! the values it wrote so tests can compare what a reader produces.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::bag1::{BagWriter, Compression};
use crate::bag2::Bag2Writer;
use crate::h5::{self, FrameData, H5Camera, H5Channel};
use crate::images;
use crate::msgs::{Header, Msg};
use crate::tfrecord::{encode_example, shard, Feature};

/// Frames dataset: one subdirectory of PNG files per episode.
pub fn frames_dataset(root: &Path, episodes: &[(&str, usize)]) -> PathBuf {
    for (i, (name, n)) in episodes.iter().enumerate() {
        let dir = root.join(name);
        std::fs::create_dir_all(&dir).unwrap();
        for k in 0..*n {
            std::fs::write(dir.join(format!("frame_{k}.png")), images::png(8, 6, (i * 50 + k) as u8)).unwrap();
        }
    }
    root.to_path_buf()
}

pub struct RldsEpisode {
    pub shard: String,
    pub ordinal: usize,
    pub steps: usize,
    /// `steps × 7` row-major.
    pub state: Vec<f32>,
    pub instruction: String,
}

pub const RLDS_STATE_KEY: &str = "steps/observation/state";
pub const RLDS_IMAGE_KEY: &str = "steps/observation/image";
pub const RLDS_FIRST_KEY: &str = "steps/is_first";
pub const RLDS_TEXT_KEY: &str = "steps/language_instruction";

/// RLDS-style dataset: `dataset_info.json` plus TFDS-named shards, one
/// Example per episode with step features flattened across steps.
pub fn rlds_dataset(root: &Path, records_per_shard: &[usize], steps: usize) -> Vec<RldsEpisode> {
    std::fs::create_dir_all(root).unwrap();
    std::fs::write(root.join("dataset_info.json"), r#"{"name": "fixture", "version": "1.0.0"}"#).unwrap();
    let total = records_per_shard.len();
    let mut out = Vec::new();
    for (s, &count) in records_per_shard.iter().enumerate() {
        let name = format!("fixture-train.tfrecord-{s:05}-of-{total:05}");
        let mut payloads = Vec::new();
        for ordinal in 0..count {
            let seed = (s * 100 + ordinal) as f32;
            let state: Vec<f32> = (0..steps * 7).map(|i| seed + i as f32 * 0.125 - 3.0).collect();
            let instruction = format!("insert gear {s}-{ordinal}");
            let mut f = BTreeMap::new();
            f.insert(RLDS_STATE_KEY.to_string(), Feature::Floats(state.clone()));
            f.insert(RLDS_FIRST_KEY.to_string(), Feature::Ints((0..steps).map(|i| (i == 0) as i64).collect()));
            f.insert(
                RLDS_IMAGE_KEY.to_string(),
                Feature::Bytes((0..steps).map(|k| images::png(4, 4, k as u8)).collect()),
            );
            f.insert(
                RLDS_TEXT_KEY.to_string(),
                Feature::Bytes((0..steps).map(|_| instruction.clone().into_bytes()).collect()),
            );
            payloads.push(encode_example(&f, ordinal % 2 == 0));
            out.push(RldsEpisode {
                shard: name.clone(),
                ordinal,
                steps,
                state,
                instruction,
            });
        }
        std::fs::write(root.join(&name), shard(&payloads)).unwrap();
    }
    out
}

pub struct BagEpisode {
    pub wrench: Vec<[f64; 6]>,
    pub wrench_ns: Vec<u64>,
    pub joints: Vec<Vec<f64>>,
    pub image_count: usize,
}

/// ROS1 bag with a wrench topic (header stamps), a joint state topic with
/// zero header stamps (receive time wins) and a compressed image topic.
pub fn ros1_bag(path: &Path, start_ns: u64, compression: Compression) -> BagEpisode {
    let mut w = BagWriter::new(compression).chunk_size(7);
    let wrench = w.connection("/ft_sensor/wrench", "geometry_msgs/WrenchStamped");
    let joints = w.connection("/joint_states", "sensor_msgs/JointState");
    let cam = w.connection("/camera/image/compressed", "sensor_msgs/CompressedImage");
    let mut out = BagEpisode {
        wrench: Vec::new(),
        wrench_ns: Vec::new(),
        joints: Vec::new(),
        image_count: 0,
    };
    for k in 0..20u64 {
        let ns = start_ns + k * 10_000_000;
        let values = [k as f64, -(k as f64), 0.5 * k as f64, 1e-3, 2e-3, k as f64 / 7.0];
        let msg = Msg::wrench((ns / 1_000_000_000) as u32, (ns % 1_000_000_000) as u32, [values[0], values[1], values[2]], [values[3], values[4], values[5]]);
        // receive time lags the header stamp
        w.msg(wrench, ns + 3_000_000, &msg);
        out.wrench.push(values);
        out.wrench_ns.push(ns);
        if k % 2 == 0 {
            let position = vec![k as f64 * 0.1, 1.0 - k as f64 * 0.1];
            w.msg(
                joints,
                ns + 5_000_000,
                &Msg::JointState {
                    header: Header::at(0, 0),
                    name: vec!["shoulder".into(), "elbow".into()],
                    position: position.clone(),
                    velocity: Vec::new(),
                    effort: vec![0.25, 0.5],
                },
            );
            out.joints.push(position);
        }
        if k % 4 == 0 {
            w.msg(
                cam,
                ns,
                &Msg::CompressedImage {
                    header: Header::at((ns / 1_000_000_000) as u32, (ns % 1_000_000_000) as u32),
                    format: "png".into(),
                    data: images::png(4, 4, k as u8),
                },
            );
            out.image_count += 1;
        }
    }
    w.write(path).unwrap();
    out
}

/// ROS2 bag directory with a pose topic and a float array topic.
pub fn ros2_bag(dir: &Path, start_ns: i64) -> (Vec<[f64; 7]>, Vec<Vec<f64>>) {
    let mut w = Bag2Writer::create(dir).unwrap();
    let pose = w.topic("/ee_pose", "geometry_msgs/msg/PoseStamped", "cdr");
    let arr = w.topic("/gripper", "std_msgs/msg/Float64MultiArray", "cdr");
    let mut poses = Vec::new();
    let mut grips = Vec::new();
    for k in 0..15i64 {
        let ns = start_ns + k * 20_000_000;
        let p = [k as f64, 2.0 * k as f64, 0.3, 0.0, 0.0, (k as f64).sin(), 1.0];
        w.msg(
            pose,
            ns,
            &Msg::Pose {
                header: Header::at((ns / 1_000_000_000) as u32, (ns % 1_000_000_000) as u32),
                position: [p[0], p[1], p[2]],
                orientation: [p[3], p[4], p[5], p[6]],
            },
        );
        poses.push(p);
        if k % 3 == 0 {
            let g = vec![0.08 - k as f64 * 0.001];
            w.msg(
                arr,
                ns + 1_000_000,
                &Msg::Float64Array {
                    dims: Vec::new(),
                    data_offset: 0,
                    data: g.clone(),
                },
            );
            grips.push(g);
        }
    }
    (poses, grips)
}

pub struct H5Episode {
    pub wrench: Vec<f64>,
    pub wrench_ts: Vec<f64>,
    pub gripper: Vec<f64>,
    pub gripper_ts: Vec<f64>,
    pub frames: usize,
}

/// HDF5 episode with a 6-d wrench at 100 samples, a 1-d gripper width at 50
/// samples and a raw 3×4 RGB camera, each with its own timestamps.
pub fn h5_episode(path: &Path, t0: f64, description: Option<&str>) -> H5Episode {
    let wrench_ts: Vec<f64> = (0..100).map(|k| t0 + k as f64 * 0.01).collect();
    let wrench: Vec<f64> = (0..600).map(|i| (i as f64 * 0.37).sin() * 10.0).collect();
    let gripper_ts: Vec<f64> = (0..50).map(|k| t0 + 0.2 + k as f64 * 0.02).collect();
    let gripper: Vec<f64> = (0..50).map(|k| 0.08 - k as f64 * 1e-3).collect();
    let frames = 40;
    let cam_ts: Vec<f64> = (0..frames).map(|k| t0 + 0.05 + k as f64 / 30.0).collect();
    let data: Vec<u8> = (0..frames * 3 * 4 * 3).map(|i| (i * 7 % 251) as u8).collect();
    h5::write_episode(
        path,
        &[
            H5Channel {
                path: "robot_state/wrench".into(),
                ts_path: "timestamps/wrench".into(),
                timestamps: wrench_ts.clone(),
                dims: 6,
                values: wrench.clone(),
            },
            H5Channel {
                path: "robot_state/gripper_width".into(),
                ts_path: "timestamps/gripper_width".into(),
                timestamps: gripper_ts.clone(),
                dims: 1,
                values: gripper.clone(),
            },
        ],
        &[H5Camera {
            path: "video/hand".into(),
            ts_path: "timestamps/hand".into(),
            timestamps: cam_ts,
            frames: FrameData::Raw {
                height: 3,
                width: 4,
                channels: 3,
                data,
            },
        }],
        description,
    )
    .unwrap();
    H5Episode {
        wrench,
        wrench_ts,
        gripper,
        gripper_ts,
        frames,
    }
}
