//! HDF5 episode writer laid out like the per-sensor-timestamp datasets the
//! reader expects: value arrays plus matching timestamp arrays.

use std::path::Path;
use std::str::FromStr;

use hdf5::types::{VarLenArray, VarLenUnicode};
use ndarray::{Array1, Array2, Array4};

pub struct H5Channel {
    pub path: String,
    pub ts_path: String,
    pub timestamps: Vec<f64>,
    pub dims: usize,
    pub values: Vec<f64>,
}

pub enum FrameData {
    Raw { height: usize, width: usize, channels: usize, data: Vec<u8> },
    Encoded(Vec<Vec<u8>>),
}

pub struct H5Camera {
    pub path: String,
    pub ts_path: String,
    pub timestamps: Vec<f64>,
    pub frames: FrameData,
}

fn parent_group(file: &hdf5::File, path: &str) -> hdf5::Result<(hdf5::Group, String)> {
    let mut parts: Vec<&str> = path.trim_start_matches('/').split('/').collect();
    let leaf = parts.pop().unwrap().to_string();
    let mut group: hdf5::Group = file.as_group()?;
    for p in parts {
        group = if group.link_exists(p) { group.group(p)? } else { group.create_group(p)? };
    }
    Ok((group, leaf))
}

fn write_f64(file: &hdf5::File, path: &str, rows: usize, dims: usize, values: &[f64]) -> hdf5::Result<()> {
    let (g, leaf) = parent_group(file, path)?;
    if dims == 1 && rows == values.len() {
        let ds = g.new_dataset::<f64>().shape(rows).create(leaf.as_str())?;
        ds.write(&Array1::from(values.to_vec()))?;
    } else {
        let ds = g.new_dataset::<f64>().shape((rows, dims)).create(leaf.as_str())?;
        ds.write(&Array2::from_shape_vec((rows, dims), values.to_vec()).unwrap())?;
    }
    Ok(())
}

pub fn write_episode(path: &Path, channels: &[H5Channel], cameras: &[H5Camera], description: Option<&str>) -> hdf5::Result<()> {
    let file = hdf5::File::create(path)?;
    for ch in channels {
        write_f64(&file, &ch.path, ch.timestamps.len().max(ch.values.len() / ch.dims.max(1)), ch.dims, &ch.values)?;
        write_f64(&file, &ch.ts_path, ch.timestamps.len(), 1, &ch.timestamps)?;
    }
    for cam in cameras {
        let (g, leaf) = parent_group(&file, &cam.path)?;
        match &cam.frames {
            FrameData::Raw { height, width, channels, data } => {
                let n = data.len() / (height * width * channels);
                let ds = g.new_dataset::<u8>().shape((n, *height, *width, *channels)).create(leaf.as_str())?;
                ds.write(&Array4::from_shape_vec((n, *height, *width, *channels), data.clone()).unwrap())?;
            }
            FrameData::Encoded(frames) => {
                let arr: Vec<VarLenArray<u8>> = frames.iter().map(|f| VarLenArray::from_slice(f)).collect();
                let ds = g.new_dataset::<VarLenArray<u8>>().shape(arr.len()).create(leaf.as_str())?;
                ds.write(&Array1::from(arr))?;
            }
        }
        write_f64(&file, &cam.ts_path, cam.timestamps.len(), 1, &cam.timestamps)?;
    }
    if let Some(d) = description {
        let attr = file.new_attr::<VarLenUnicode>().create("description")?;
        attr.write_scalar(&VarLenUnicode::from_str(d).unwrap())?;
    }
    Ok(())
}
