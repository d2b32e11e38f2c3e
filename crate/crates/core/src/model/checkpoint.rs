//! Binary checkpoints for trained networks.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic   8  b"RNNCKPT\0"
//! version u32 = 1
//! dims    4 x u32   news_width, hidden_price, hidden_news, hidden_fusion
//! seed    u64
//! config  f64 learning_rate, f64 lr_decay, f64 l2_lambda,
//!         u8 l2_include_biases, u32 epochs,
//!         f64 grad_clip (0 = none), u32 bptt_truncation (0 = none)
//! count   u32 = 9
//! tensor  u16 name_len, name bytes, u32 rows, u32 cols, rows*cols f64
//! ```
//!
//! Tensors appear in a fixed order with bias vectors stored as n x 1
//! matrices. Values are written as f64 regardless of the in-memory scalar.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::linalg::Mat;
use crate::model::{RnnDims, RnnParams, TrainConfig};
use crate::scalar::Scalar;

const MAGIC: &[u8; 8] = b"RNNCKPT\0";
const VERSION: u32 = 1;
const TENSOR_NAMES: [&str; 9] = [
    "w_r", "b_hr", "w_f", "v_hf", "b_hf", "w_hr", "w_hf", "b_h", "w_h",
];

/// Parameters plus the exact configuration that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub dims: RnnDims,
    pub seed: u64,
    pub config: TrainConfig,
    pub params: RnnParams<f64>,
}

pub fn save_checkpoint<S: Scalar>(
    path: &Path,
    params: &RnnParams<S>,
    seed: u64,
    config: &TrainConfig,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    write_checkpoint(&mut w, params, seed, config).map_err(|e| Error::io(path.display().to_string(), e))?;
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut r = BufReader::new(file);
    read_checkpoint(&mut r, path)
}

fn write_checkpoint<S: Scalar, W: Write>(
    w: &mut W,
    params: &RnnParams<S>,
    seed: u64,
    config: &TrainConfig,
) -> std::io::Result<()> {
    let dims = params.dims();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for d in [
        dims.news_width,
        dims.hidden_price,
        dims.hidden_news,
        dims.hidden_fusion,
    ] {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    w.write_all(&seed.to_le_bytes())?;
    w.write_all(&config.learning_rate.to_le_bytes())?;
    w.write_all(&config.lr_decay.to_le_bytes())?;
    w.write_all(&config.l2_lambda.to_le_bytes())?;
    w.write_all(&[u8::from(config.l2_include_biases)])?;
    w.write_all(&(config.epochs as u32).to_le_bytes())?;
    w.write_all(&config.grad_clip.unwrap_or(0.0).to_le_bytes())?;
    w.write_all(&(config.bptt_truncation.unwrap_or(0) as u32).to_le_bytes())?;
    w.write_all(&(TENSOR_NAMES.len() as u32).to_le_bytes())?;

    let tensors: [(&str, usize, usize, Vec<f64>); 9] = [
        tensor_of("w_r", &params.w_r),
        vector_of("b_hr", &params.b_hr),
        tensor_of("w_f", &params.w_f),
        tensor_of("v_hf", &params.v_hf),
        vector_of("b_hf", &params.b_hf),
        tensor_of("w_hr", &params.w_hr),
        tensor_of("w_hf", &params.w_hf),
        vector_of("b_h", &params.b_h),
        tensor_of("w_h", &params.w_h),
    ];
    for (name, rows, cols, data) in tensors {
        w.write_all(&(name.len() as u16).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&(rows as u32).to_le_bytes())?;
        w.write_all(&(cols as u32).to_le_bytes())?;
        for v in data {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn tensor_of<'a, S: Scalar>(name: &'a str, m: &Mat<S>) -> (&'a str, usize, usize, Vec<f64>) {
    (
        name,
        m.rows(),
        m.cols(),
        m.data().iter().map(|v| v.to_f64_lossy()).collect(),
    )
}

fn vector_of<'a, S: Scalar>(name: &'a str, v: &[S]) -> (&'a str, usize, usize, Vec<f64>) {
    (name, v.len(), 1, v.iter().map(|x| x.to_f64_lossy()).collect())
}

fn read_checkpoint<R: Read>(r: &mut R, path: &Path) -> Result<Checkpoint> {
    let bad = |msg: String| Error::Checkpoint {
        path: path.display().to_string(),
        msg,
    };
    let mut magic = [0u8; 8];
    read_exact(r, &mut magic, path)?;
    if &magic != MAGIC {
        return Err(bad(format!("bad magic {magic:02x?}")));
    }
    let version = read_u32(r, path)?;
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let dims = RnnDims {
        news_width: read_u32(r, path)? as usize,
        hidden_price: read_u32(r, path)? as usize,
        hidden_news: read_u32(r, path)? as usize,
        hidden_fusion: read_u32(r, path)? as usize,
    };
    dims.validate()
        .map_err(|e| bad(format!("invalid dims: {e}")))?;
    let seed = read_u64(r, path)?;
    let learning_rate = read_f64(r, path)?;
    let lr_decay = read_f64(r, path)?;
    let l2_lambda = read_f64(r, path)?;
    let mut flag = [0u8; 1];
    read_exact(r, &mut flag, path)?;
    let epochs = read_u32(r, path)? as usize;
    let clip = read_f64(r, path)?;
    let grad_clip = if clip == 0.0 { None } else { Some(clip) };
    let bptt_truncation = match read_u32(r, path)? as usize {
        0 => None,
        t => Some(t),
    };
    let config = TrainConfig {
        learning_rate,
        lr_decay,
        l2_lambda,
        l2_include_biases: flag[0] != 0,
        epochs,
        seed,
        grad_clip,
        bptt_truncation,
    };

    let count = read_u32(r, path)?;
    if count as usize != TENSOR_NAMES.len() {
        return Err(bad(format!("expected 9 tensors, header says {count}")));
    }
    let mut params = RnnParams::<f64>::zeros(&dims);
    for expected in TENSOR_NAMES {
        let mut len_bytes = [0u8; 2];
        read_exact(r, &mut len_bytes, path)?;
        let name_len = u16::from_le_bytes(len_bytes) as usize;
        let mut name_bytes = vec![0u8; name_len];
        read_exact(r, &mut name_bytes, path)?;
        let name = String::from_utf8(name_bytes)
            .map_err(|_| bad("tensor name is not utf-8".to_string()))?;
        if name != expected {
            return Err(bad(format!("expected tensor {expected}, found {name}")));
        }
        let rows = read_u32(r, path)? as usize;
        let cols = read_u32(r, path)? as usize;
        let (want_rows, want_cols) = expected_shape(expected, &dims);
        if (rows, cols) != (want_rows, want_cols) {
            return Err(bad(format!(
                "tensor {name} has shape {rows}x{cols}, expected {want_rows}x{want_cols}"
            )));
        }
        let mut data = vec![0.0f64; rows * cols];
        for v in data.iter_mut() {
            *v = read_f64(r, path)?;
        }
        store_tensor(&mut params, expected, data);
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing).map_err(|e| Error::io(path.display().to_string(), e))? != 0 {
        return Err(bad("trailing bytes after final tensor".to_string()));
    }
    Ok(Checkpoint {
        dims,
        seed,
        config,
        params,
    })
}

fn expected_shape(name: &str, d: &RnnDims) -> (usize, usize) {
    match name {
        "w_r" => (d.hidden_price, 1),
        "b_hr" => (d.hidden_price, 1),
        "w_f" => (d.hidden_news, d.news_width),
        "v_hf" => (d.hidden_news, d.hidden_news),
        "b_hf" => (d.hidden_news, 1),
        "w_hr" => (d.hidden_fusion, d.hidden_price),
        "w_hf" => (d.hidden_fusion, d.hidden_news),
        "b_h" => (d.hidden_fusion, 1),
        "w_h" => (2, d.hidden_fusion),
        _ => unreachable!("tensor names are fixed"),
    }
}

fn store_tensor(params: &mut RnnParams<f64>, name: &str, data: Vec<f64>) {
    match name {
        "w_r" => params.w_r.data_mut().copy_from_slice(&data),
        "b_hr" => params.b_hr.copy_from_slice(&data),
        "w_f" => params.w_f.data_mut().copy_from_slice(&data),
        "v_hf" => params.v_hf.data_mut().copy_from_slice(&data),
        "b_hf" => params.b_hf.copy_from_slice(&data),
        "w_hr" => params.w_hr.data_mut().copy_from_slice(&data),
        "w_hf" => params.w_hf.data_mut().copy_from_slice(&data),
        "b_h" => params.b_h.copy_from_slice(&data),
        "w_h" => params.w_h.data_mut().copy_from_slice(&data),
        _ => unreachable!("tensor names are fixed"),
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], path: &Path) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Checkpoint {
                path: path.display().to_string(),
                msg: "file truncated".to_string(),
            }
        } else {
            Error::io(path.display().to_string(), e)
        }
    })
}

fn read_u32<R: Read>(r: &mut R, path: &Path) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, path)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R, path: &Path) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b, path)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R, path: &Path) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b, path)?;
    Ok(f64::from_le_bytes(b))
}
