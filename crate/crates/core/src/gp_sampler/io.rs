//! Ensemble export.
//!
//! Binary layout, all integers and floats little-endian:
//!
//! | bytes | content |
//! |---|---|
//! | 8 | magic `UFBMENS\0` |
//! | 4 | format version (`u32`) |
//! | 8 | `n_paths` (`u64`) |
//! | 8 | `n_times` (`u64`) |
//! | 8 `n_times` | grid times (`f64`) |
//! | 8 `n_paths n_times` | values, one path after another (`f64`) |

use std::io::{Read, Write};

use super::{EnsembleMeta, Grid, PathEnsemble};
use crate::error::{Error, Result};

pub const BINARY_MAGIC: &[u8; 8] = b"UFBMENS\0";
pub const BINARY_VERSION: u32 = 1;

/// `path_id,t,value` rows.
pub fn write_csv<W: Write>(ens: &PathEnsemble, mut w: W) -> Result<()> {
    writeln!(w, "path_id,t,value")?;
    for (i, path) in ens.paths().enumerate() {
        for (t, v) in ens.grid.times().iter().zip(path) {
            writeln!(w, "{i},{t:.17e},{v:.17e}")?;
        }
    }
    Ok(())
}

pub fn write_binary<W: Write>(ens: &PathEnsemble, mut w: W) -> Result<()> {
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&BINARY_VERSION.to_le_bytes())?;
    w.write_all(&(ens.n_paths as u64).to_le_bytes())?;
    w.write_all(&(ens.n_times() as u64).to_le_bytes())?;
    for t in ens.grid.times().iter().chain(&ens.values) {
        w.write_all(&t.to_le_bytes())?;
    }
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

/// Reads an ensemble written by [`write_binary`]. Metadata is not part of
/// the binary format and comes back with the generator label `"binary"`.
pub fn read_binary<R: Read>(mut r: R) -> Result<PathEnsemble> {
    if &read_array::<8, _>(&mut r)? != BINARY_MAGIC {
        return Err(Error::Io("not an ensemble file (bad magic)".into()));
    }
    let version = u32::from_le_bytes(read_array(&mut r)?);
    if version != BINARY_VERSION {
        return Err(Error::Io(format!("unsupported ensemble format version {version}")));
    }
    let n_paths = u64::from_le_bytes(read_array(&mut r)?) as usize;
    let n_times = u64::from_le_bytes(read_array(&mut r)?) as usize;
    let mut f64s = |n: usize| -> Result<Vec<f64>> { (0..n).map(|_| Ok(f64::from_le_bytes(read_array(&mut r)?))).collect() };
    let times = f64s(n_times)?;
    let values = f64s(n_paths * n_times)?;
    let meta = EnsembleMeta { seed: 0, generator: "binary".into(), spec: None, config_digest: None, jitter: 0.0 };
    Ok(PathEnsemble { grid: Grid::new(times)?, n_paths, values, meta })
}
