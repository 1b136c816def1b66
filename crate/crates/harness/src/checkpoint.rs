//! Binary checkpoints for paired runs.
//!
//! Container layout, all little-endian:
//!
//! 1. magic line `DLLCKPT 1\n`;
//! 2. one JSON header line (grid shape, time, relaxation parameter, field
//!    manifests, grid/closure hash);
//! 3. raw f64 physical payloads in the exact order the header lists them —
//!    relaxed-system fields first, then the limit-system fields.
//!
//! Loading refuses anything whose magic, version, manifests, payload length,
//! or (when the caller supplies one) grid/closure hash disagree, so a resume
//! can never silently mix physically incompatible runs. Horizon and output
//! settings are deliberately not pinned: continuing a finished run under a
//! longer horizon is the point of resuming.

use crate::HarnessError;
use dll_core::{EmState, MhdState, ScalarField, TorusGrid, VectorField};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8] = b"DLLCKPT 1\n";
const VERSION: u32 = 1;
const EM_FIELDS: [&str; 11] = [
    "p", "u1", "u2", "u3", "S", "E1", "E2", "E3", "H1", "H2", "H3",
];
const MHD_FIELDS: [&str; 8] = ["p", "u1", "u2", "u3", "S", "H1", "H2", "H3"];

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointHeader {
    version: u32,
    kind: String,
    t: f64,
    epsilon: f64,
    n: usize,
    active_dims: usize,
    em_fields: Vec<String>,
    mhd_fields: Vec<String>,
    physics_hash: String,
}

/// The pair of states a resumed run needs: the relaxed state and the limit
/// state at the same instant, plus the relaxation parameter they were run at.
#[derive(Debug)]
pub struct PairCheckpoint {
    pub em: EmState,
    pub mhd: MhdState,
    pub epsilon: f64,
    pub physics_hash: String,
}

fn format_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Format(msg.into())
}

fn write_field(w: &mut impl Write, f: &ScalarField) -> std::io::Result<()> {
    for &v in f.phys() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn write_vector(w: &mut impl Write, v: &VectorField) -> std::io::Result<()> {
    for c in &v.c {
        write_field(w, c)?;
    }
    Ok(())
}

fn read_field(r: &mut impl Read, grid: TorusGrid) -> Result<ScalarField, HarnessError> {
    let mut buf = vec![0u8; grid.len() * 8];
    r.read_exact(&mut buf)
        .map_err(|_| format_err("checkpoint payload is truncated"))?;
    let phys: Vec<f64> = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunks_exact(8) yields 8 bytes")))
        .collect();
    Ok(ScalarField::from_phys(grid, phys))
}

fn read_vector(r: &mut impl Read, grid: TorusGrid) -> Result<VectorField, HarnessError> {
    let c0 = read_field(r, grid)?;
    let c1 = read_field(r, grid)?;
    let c2 = read_field(r, grid)?;
    Ok(VectorField::new([c0, c1, c2]))
}

/// Save both states of a paired run. The two must sit at the same instant.
pub fn save_pair(
    path: &Path,
    em: &EmState,
    mhd: &MhdState,
    epsilon: f64,
    physics_hash: &str,
) -> Result<(), HarnessError> {
    if (em.t - mhd.t).abs() > 1e-9 * (1.0 + em.t.abs()) {
        return Err(HarnessError::Config(format!(
            "checkpoint states disagree in time: {} vs {}",
            em.t, mhd.t
        )));
    }
    let grid = em.grid();
    let header = CheckpointHeader {
        version: VERSION,
        kind: "pair".to_string(),
        t: em.t,
        epsilon,
        n: grid.n(),
        active_dims: grid.active_dims(),
        em_fields: EM_FIELDS.iter().map(|s| s.to_string()).collect(),
        mhd_fields: MHD_FIELDS.iter().map(|s| s.to_string()).collect(),
        physics_hash: physics_hash.to_string(),
    };
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    let mut line = serde_json::to_string(&header)
        .map_err(|e| format_err(format!("header serialization failed: {e}")))?;
    line.push('\n');
    w.write_all(line.as_bytes())?;

    write_field(&mut w, &em.p)?;
    write_vector(&mut w, &em.u)?;
    write_field(&mut w, &em.s)?;
    write_vector(&mut w, &em.e)?;
    write_vector(&mut w, &em.h)?;
    write_field(&mut w, &mhd.p)?;
    write_vector(&mut w, &mhd.u)?;
    write_field(&mut w, &mhd.s)?;
    write_vector(&mut w, &mhd.h)?;
    w.flush()?;
    Ok(())
}

/// Load a paired checkpoint. When `expect_hash` is given, a mismatch against
/// the stored grid/closure hash is refused.
pub fn load_pair(path: &Path, expect_hash: Option<&str>) -> Result<PairCheckpoint, HarnessError> {
    let mut r = BufReader::new(File::open(path)?);

    let mut magic = [0u8; MAGIC.len()];
    r.read_exact(&mut magic)
        .map_err(|_| format_err("file too short to be a checkpoint"))?;
    if magic != *MAGIC {
        return Err(format_err("bad magic: not a checkpoint file"));
    }

    let mut header_bytes = Vec::new();
    loop {
        let mut b = [0u8; 1];
        r.read_exact(&mut b)
            .map_err(|_| format_err("checkpoint header is truncated"))?;
        if b[0] == b'\n' {
            break;
        }
        header_bytes.push(b[0]);
        if header_bytes.len() > 64 * 1024 {
            return Err(format_err("checkpoint header exceeds 64 KiB"));
        }
    }
    let header: CheckpointHeader = serde_json::from_slice(&header_bytes)
        .map_err(|e| format_err(format!("checkpoint header is not valid JSON: {e}")))?;

    if header.version != VERSION {
        return Err(format_err(format!(
            "unsupported checkpoint version {}",
            header.version
        )));
    }
    if header.kind != "pair" {
        return Err(format_err(format!(
            "unsupported checkpoint kind {:?}",
            header.kind
        )));
    }
    if header.em_fields != EM_FIELDS || header.mhd_fields != MHD_FIELDS {
        return Err(format_err("checkpoint field manifest does not match"));
    }
    if let Some(expect) = expect_hash {
        if header.physics_hash != expect {
            return Err(format_err(format!(
                "checkpoint was written under grid/closure configuration {} but the current one hashes to {expect}; refusing to resume",
                header.physics_hash
            )));
        }
    }
    let grid = TorusGrid::new(header.n, header.active_dims)
        .map_err(|e| format_err(format!("checkpoint grid is invalid: {e}")))?;

    let p = read_field(&mut r, grid)?;
    let u = read_vector(&mut r, grid)?;
    let s = read_field(&mut r, grid)?;
    let e = read_vector(&mut r, grid)?;
    let h = read_vector(&mut r, grid)?;
    let mp = read_field(&mut r, grid)?;
    let mu = read_vector(&mut r, grid)?;
    let ms = read_field(&mut r, grid)?;
    let mh = read_vector(&mut r, grid)?;

    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(format_err("checkpoint has trailing bytes after payload"));
    }

    Ok(PairCheckpoint {
        em: EmState {
            t: header.t,
            p,
            u,
            s,
            e,
            h,
        },
        mhd: MhdState {
            t: header.t,
            p: mp,
            u: mu,
            s: ms,
            h: mh,
        },
        epsilon: header.epsilon,
        physics_hash: header.physics_hash,
    })
}
