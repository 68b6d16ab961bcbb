//! File formats: versioned trace binaries, coding-function text, and CSV
//! exports.
//!
//! Trace binary layout (`TSNK1`, or `TSNL1` with an extra array):
//!
//! ```text
//! magic[5]  -- b"TSNK1" / b"TSNL1"
//! u64       -- number of grid points n
//! f64, f64  -- dt, dh
//! f64 * n   -- zeta, zhat, zbar, zmin   (little endian)
//! (f64 * n  -- lambda_hat, TSNL1 only)
//! u64       -- number of step bits (n - 1)
//! u64 * ceil(bits/64) -- push/pop bit stream
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use treesub_core::bits::BitVec;
use treesub_core::coded_tree::CodingFunction;
use treesub_core::embed::DyadicSkeleton;
use treesub_core::ltsnake::LtSnakeTrace;
use treesub_core::snake::SnakeTrace;

const MAGIC_SNAKE: &[u8; 5] = b"TSNK1";
const MAGIC_LT: &[u8; 5] = b"TSNL1";

fn write_f64s<W: Write>(w: &mut W, xs: &[f64]) -> Result<()> {
    for &x in xs {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut buf = [0u8; 8];
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        r.read_exact(&mut buf)?;
        out.push(f64::from_le_bytes(buf));
    }
    Ok(out)
}

fn write_bits<W: Write>(w: &mut W, bits: &BitVec) -> Result<()> {
    w.write_all(&(bits.len() as u64).to_le_bytes())?;
    for &word in bits.words() {
        w.write_all(&word.to_le_bytes())?;
    }
    Ok(())
}

fn read_bits<R: Read>(r: &mut R) -> Result<BitVec> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    let len = u64::from_le_bytes(buf) as usize;
    let words = (len + 63) / 64;
    let mut out = Vec::with_capacity(words);
    for _ in 0..words {
        r.read_exact(&mut buf)?;
        out.push(u64::from_le_bytes(buf));
    }
    Ok(BitVec::from_words(out, len))
}

pub fn write_trace(path: &Path, trace: &SnakeTrace) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("create {path:?}"))?);
    w.write_all(MAGIC_SNAKE)?;
    w.write_all(&(trace.len() as u64).to_le_bytes())?;
    w.write_all(&trace.dt.to_le_bytes())?;
    w.write_all(&trace.dh.to_le_bytes())?;
    write_f64s(&mut w, &trace.zeta)?;
    write_f64s(&mut w, &trace.zhat)?;
    write_f64s(&mut w, &trace.zbar)?;
    write_f64s(&mut w, &trace.zmin)?;
    write_bits(&mut w, &trace.steps)?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<SnakeTrace> {
    let mut r = BufReader::new(File::open(path).with_context(|| format!("open {path:?}"))?);
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC_SNAKE {
        bail!("bad magic {magic:?}, expected TSNK1");
    }
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    let n = u64::from_le_bytes(buf) as usize;
    r.read_exact(&mut buf)?;
    let dt = f64::from_le_bytes(buf);
    r.read_exact(&mut buf)?;
    let dh = f64::from_le_bytes(buf);
    let zeta = read_f64s(&mut r, n)?;
    let zhat = read_f64s(&mut r, n)?;
    let zbar = read_f64s(&mut r, n)?;
    let zmin = read_f64s(&mut r, n)?;
    let steps = read_bits(&mut r)?;
    if steps.len() + 1 != n {
        bail!("inconsistent trace: {} points, {} steps", n, steps.len());
    }
    Ok(SnakeTrace { dt, dh, zeta, zhat, zbar, zmin, steps })
}

pub fn write_lt_trace(path: &Path, trace: &LtSnakeTrace) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("create {path:?}"))?);
    w.write_all(MAGIC_LT)?;
    w.write_all(&(trace.len() as u64).to_le_bytes())?;
    w.write_all(&trace.dt.to_le_bytes())?;
    w.write_all(&trace.dh.to_le_bytes())?;
    write_f64s(&mut w, &trace.zeta)?;
    write_f64s(&mut w, &trace.xi_tip)?;
    write_f64s(&mut w, &trace.lambda_hat)?;
    write_bits(&mut w, &trace.steps)?;
    Ok(())
}

pub fn read_lt_trace(path: &Path) -> Result<LtSnakeTrace> {
    let mut r = BufReader::new(File::open(path).with_context(|| format!("open {path:?}"))?);
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC_LT {
        bail!("bad magic {magic:?}, expected TSNL1");
    }
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    let n = u64::from_le_bytes(buf) as usize;
    r.read_exact(&mut buf)?;
    let dt = f64::from_le_bytes(buf);
    r.read_exact(&mut buf)?;
    let dh = f64::from_le_bytes(buf);
    let zeta = read_f64s(&mut r, n)?;
    let xi_tip = read_f64s(&mut r, n)?;
    let lambda_hat = read_f64s(&mut r, n)?;
    let steps = read_bits(&mut r)?;
    Ok(LtSnakeTrace { dt, dh, zeta, xi_tip, lambda_hat, steps })
}

/// Text format: header `treesub-coding v1 n=<n> sigma=<sigma>`, then n+1
/// values, one per line, round-trip precision.
pub fn write_coding(path: &Path, coding: &CodingFunction) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("create {path:?}"))?);
    writeln!(w, "treesub-coding v1 n={} sigma={:.17e}", coding.grid_size(), coding.sigma())?;
    for &x in coding.values() {
        writeln!(w, "{:.17e}", x)?;
    }
    Ok(())
}

pub fn read_coding(path: &Path) -> Result<CodingFunction> {
    let r = BufReader::new(File::open(path).with_context(|| format!("open {path:?}"))?);
    let mut lines = r.lines();
    let header = lines.next().context("empty coding file")??;
    let mut n = None;
    let mut sigma = None;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("treesub-coding") || parts.next() != Some("v1") {
        bail!("bad coding header: {header}");
    }
    for p in parts {
        if let Some(v) = p.strip_prefix("n=") {
            n = Some(v.parse::<usize>()?);
        } else if let Some(v) = p.strip_prefix("sigma=") {
            sigma = Some(v.parse::<f64>()?);
        }
    }
    let n = n.context("missing n=")?;
    let sigma = sigma.context("missing sigma=")?;
    let mut h = Vec::with_capacity(n + 1);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        h.push(line.trim().parse::<f64>()?);
    }
    if h.len() != n + 1 {
        bail!("expected {} values, found {}", n + 1, h.len());
    }
    CodingFunction::new(sigma, h).map_err(|e| anyhow::anyhow!("{e}"))
}

/// Lossy CSV export of a trace for plotting.
pub fn write_trace_csv(path: &Path, trace: &SnakeTrace) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t,zeta,zhat,zbar,zmin")?;
    for s in 0..trace.len() {
        writeln!(
            w,
            "{},{},{},{},{}",
            s as f64 * trace.dt,
            trace.zeta[s],
            trace.zhat[s],
            trace.zbar[s],
            trace.zmin[s]
        )?;
    }
    Ok(())
}

/// Skeleton CSV: `k,crossing_time,height,parent_index` (parent -1 at roots).
pub fn write_skeleton_csv(path: &Path, sk: &DyadicSkeleton, dt: f64) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "k,crossing_time,height,parent_index")?;
    for (k, v) in sk.vertices.iter().enumerate() {
        let parent = v.parent.map(|p| p as i64).unwrap_or(-1);
        writeln!(w, "{},{},{},{}", k, v.time as f64 * dt, v.level, parent)?;
    }
    Ok(())
}

/// Walk/height CSV with the versioned header convention.
pub fn write_walk_csv(path: &Path, gamma: f64, sums: &[i64], heights: &[u32]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "treesub-walk v1 n={} gamma={}", sums.len() - 1, gamma)?;
    writeln!(w, "k,S,H")?;
    for k in 0..sums.len() {
        writeln!(w, "{},{},{}", k, sums[k], heights[k])?;
    }
    Ok(())
}

/// Offspring histogram as a single JSON object.
pub fn write_histogram_json(
    path: &Path,
    hist: &std::collections::BTreeMap<u32, u64>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let body: Vec<String> = hist.iter().map(|(k, v)| format!("\"{k}\":{v}")).collect();
    writeln!(w, "{{{}}}", body.join(","))?;
    Ok(())
}
