//! Trajectory persistence.
//!
//! Two formats:
//!
//! - **`ATRJ` binary** (lossless, byte-stable): the format read back by
//!   [`read_trajectory`]. Layout, all little-endian:
//!
//!   ```text
//!   magic   4 bytes  "ATRJ"
//!   version u16      currently 1
//!   config:
//!     input_dim u32, hidden_width u32, output_dim u32, activation u8
//!       (0 = tanh, 1 = sigmoid, 2 = relu)
//!     dataset_index u64, n_points u64, init_seed u64
//!     alpha f64, beta1 f64, beta2 f64, epsilon f64
//!     precision u8 (0 = native64, 1 = native32, 2 = emulated),
//!       exponent_bits u8, mantissa_bits u8 (zero unless emulated)
//!     epochs u64, snapshot_stride u64
//!   diverged u8, diverged_at u64 (zero when not diverged)
//!   loss count u64, then count f64 values
//!   snapshot count u64, then per snapshot: epoch u64 and
//!     parameter_count f64 values
//!   ```
//!
//! - **CSV** (export): header `epoch,loss,p0,...,p{k-1}`, one row per
//!   recorded epoch, parameter cells filled only on snapshot rows. Floats are
//!   printed with Rust's shortest round-trip formatting, so parsing a cell
//!   back yields the identical bits.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::net::{Activation, NetworkShape, ParameterVector};
use crate::optim::AdamConfig;
use crate::precision::PrecisionMode;
use crate::trainer::{RunConfig, Snapshot, Trajectory};

const MAGIC: &[u8; 4] = b"ATRJ";
const VERSION: u16 = 1;

/// Writes a trajectory, choosing the format by extension: `.csv` exports
/// columnar text, anything else writes the `ATRJ` binary.
pub fn write_trajectory(traj: &Trajectory, path: &Path) -> Result<()> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        write_trajectory_csv(traj, path)
    } else {
        write_trajectory_binary(traj, path)
    }
}

/// Reads a trajectory from the `ATRJ` binary format.
pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let buf = fs::read(path)?;
    decode_trajectory(&buf)
}

pub fn write_trajectory_binary(traj: &Trajectory, path: &Path) -> Result<()> {
    let bytes = encode_trajectory(traj);
    fs::write(path, bytes)?;
    Ok(())
}

pub fn encode_trajectory(traj: &Trajectory) -> Vec<u8> {
    let cfg = &traj.config;
    let mut out = Vec::with_capacity(
        64 + 8 * traj.loss.len() + traj.snapshots.len() * (8 + 8 * cfg.shape.parameter_count()),
    );
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());

    out.extend_from_slice(&(cfg.shape.input_dim as u32).to_le_bytes());
    out.extend_from_slice(&(cfg.shape.hidden_width as u32).to_le_bytes());
    out.extend_from_slice(&(cfg.shape.output_dim as u32).to_le_bytes());
    out.push(match cfg.shape.activation {
        Activation::Tanh => 0,
        Activation::Sigmoid => 1,
        Activation::Relu => 2,
    });
    out.extend_from_slice(&cfg.dataset_index.to_le_bytes());
    out.extend_from_slice(&(cfg.n_points as u64).to_le_bytes());
    out.extend_from_slice(&cfg.init_seed.to_le_bytes());
    for x in [cfg.adam.alpha, cfg.adam.beta1, cfg.adam.beta2, cfg.adam.epsilon] {
        out.extend_from_slice(&x.to_le_bytes());
    }
    let (ptag, ebits, mbits) = match cfg.precision {
        PrecisionMode::Native64 => (0u8, 0u8, 0u8),
        PrecisionMode::Native32 => (1, 0, 0),
        PrecisionMode::Emulated { exponent_bits, mantissa_bits } => {
            (2, exponent_bits as u8, mantissa_bits as u8)
        }
    };
    out.extend_from_slice(&[ptag, ebits, mbits]);
    out.extend_from_slice(&(cfg.epochs as u64).to_le_bytes());
    out.extend_from_slice(&(cfg.snapshot_stride as u64).to_le_bytes());

    out.push(u8::from(traj.diverged_at.is_some()));
    out.extend_from_slice(&(traj.diverged_at.unwrap_or(0) as u64).to_le_bytes());

    out.extend_from_slice(&(traj.loss.len() as u64).to_le_bytes());
    for l in &traj.loss {
        out.extend_from_slice(&l.to_le_bytes());
    }
    out.extend_from_slice(&(traj.snapshots.len() as u64).to_le_bytes());
    for snap in &traj.snapshots {
        out.extend_from_slice(&(snap.epoch as u64).to_le_bytes());
        for p in snap.params.as_slice() {
            out.extend_from_slice(&p.to_le_bytes());
        }
    }
    out
}

/// Bounds-checked little-endian reader; any out-of-range read is a format
/// error rather than a panic.
struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Format(format!(
                "truncated trajectory file: needed {} bytes at offset {}, have {}",
                n,
                self.pos,
                self.buf.len() - self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode_trajectory(buf: &[u8]) -> Result<Trajectory> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Format("missing ATRJ magic bytes".into()));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }

    let input_dim = r.u32()? as usize;
    let hidden_width = r.u32()? as usize;
    let output_dim = r.u32()? as usize;
    let activation = match r.u8()? {
        0 => Activation::Tanh,
        1 => Activation::Sigmoid,
        2 => Activation::Relu,
        x => return Err(Error::Format(format!("unknown activation tag {x}"))),
    };
    let shape = NetworkShape { input_dim, hidden_width, output_dim, activation };
    let dataset_index = r.u64()?;
    let n_points = r.u64()? as usize;
    let init_seed = r.u64()?;
    let adam = AdamConfig {
        alpha: r.f64()?,
        beta1: r.f64()?,
        beta2: r.f64()?,
        epsilon: r.f64()?,
    };
    let precision = match (r.u8()?, r.u8()?, r.u8()?) {
        (0, _, _) => PrecisionMode::Native64,
        (1, _, _) => PrecisionMode::Native32,
        (2, e, m) => PrecisionMode::Emulated {
            exponent_bits: e as u32,
            mantissa_bits: m as u32,
        },
        (x, _, _) => return Err(Error::Format(format!("unknown precision tag {x}"))),
    };
    let epochs = r.u64()? as usize;
    let snapshot_stride = r.u64()? as usize;
    let config = RunConfig {
        shape,
        dataset_index,
        n_points,
        init_seed,
        adam,
        precision,
        epochs,
        snapshot_stride,
    };
    config.validate().map_err(|e| Error::Format(format!("bad embedded config: {e}")))?;

    let diverged = r.u8()? != 0;
    let diverged_epoch = r.u64()? as usize;
    let diverged_at = diverged.then_some(diverged_epoch);

    let n_loss = r.u64()? as usize;
    if n_loss > config.epochs || n_loss > (buf.len() - r.pos) / 8 {
        return Err(Error::Format(format!(
            "loss series of {n_loss} entries does not fit the file or the configured {} epochs",
            config.epochs
        )));
    }
    let mut loss = Vec::with_capacity(n_loss);
    for _ in 0..n_loss {
        loss.push(r.f64()?);
    }

    let param_count = shape.parameter_count();
    let n_snap = r.u64()? as usize;
    if n_snap > (buf.len() - r.pos) / (8 + 8 * param_count) {
        return Err(Error::Format(format!("snapshot count {n_snap} does not fit the file")));
    }
    let mut snapshots = Vec::with_capacity(n_snap);
    for _ in 0..n_snap {
        let epoch = r.u64()? as usize;
        let mut params = Vec::with_capacity(param_count);
        for _ in 0..param_count {
            params.push(r.f64()?);
        }
        snapshots.push(Snapshot { epoch, params: ParameterVector::from_vec(params) });
    }
    if r.pos != buf.len() {
        return Err(Error::Format(format!("{} trailing bytes", buf.len() - r.pos)));
    }
    Ok(Trajectory { config, loss, snapshots, diverged_at })
}

pub fn write_trajectory_csv(traj: &Trajectory, path: &Path) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    let k = traj.config.shape.parameter_count();
    let mut header = String::from("epoch,loss");
    for i in 0..k {
        header.push_str(&format!(",p{i}"));
    }
    writeln!(w, "{header}")?;

    let mut snaps = traj.snapshots.iter().peekable();
    for (epoch, loss) in traj.loss.iter().enumerate() {
        let mut row = format!("{epoch},{loss}");
        if snaps.peek().is_some_and(|s| s.epoch == epoch) {
            let snap = snaps.next().unwrap();
            for p in snap.params.as_slice() {
                row.push_str(&format!(",{p}"));
            }
        } else {
            row.push_str(&",".repeat(k));
        }
        writeln!(w, "{row}")?;
    }
    w.flush()?;
    Ok(())
}
