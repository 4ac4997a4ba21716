//! CSV and binary (`VFPD`) serialisation of densities.

use std::io::{Read, Write};

use super::{PhaseDensity, PhaseGrid};
use crate::error::{Error, Result};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"VFPD";
pub const SNAPSHOT_VERSION: u8 = 1;

/// Writes `q,p,value` rows, row-major in `q`, after a header line.
pub fn write_csv<W: Write>(rho: &PhaseDensity, mut out: W) -> Result<()> {
    let g = rho.grid();
    writeln!(out, "q,p,value")?;
    let p = g.p_nodes();
    for i in 0..g.n_q {
        let q = g.q(i);
        for (j, pj) in p.iter().enumerate() {
            writeln!(out, "{q},{pj},{}", rho.at(i, j))?;
        }
    }
    Ok(())
}

pub fn write_snapshot<W: Write>(rho: &PhaseDensity, mut out: W) -> Result<()> {
    let g = rho.grid();
    let mut buf = Vec::with_capacity(4 + 1 + 32 + 8 + 8 * g.len());
    buf.extend_from_slice(SNAPSHOT_MAGIC);
    buf.push(SNAPSHOT_VERSION);
    for b in [g.q_min, g.q_max, g.p_min, g.p_max] {
        buf.extend_from_slice(&b.to_le_bytes());
    }
    buf.extend_from_slice(&(g.n_q as u32).to_le_bytes());
    buf.extend_from_slice(&(g.n_p as u32).to_le_bytes());
    for v in rho.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

/// Reads a `VFPD` snapshot. Values are taken as stored (no renormalisation)
/// so that a write/read round trip is bit-exact.
pub fn read_snapshot<R: Read>(mut input: R) -> Result<PhaseDensity> {
    let mut header = [0u8; 5];
    input
        .read_exact(&mut header)
        .map_err(|e| Error::Snapshot(format!("truncated header: {e}")))?;
    if &header[..4] != SNAPSHOT_MAGIC {
        return Err(Error::Snapshot("bad magic, expected VFPD".into()));
    }
    if header[4] != SNAPSHOT_VERSION {
        return Err(Error::Snapshot(format!("unsupported version {}", header[4])));
    }
    let mut bounds = [0.0; 4];
    for b in &mut bounds {
        *b = read_f64(&mut input)?;
    }
    let n_q = read_u32(&mut input)? as usize;
    let n_p = read_u32(&mut input)? as usize;
    let grid = PhaseGrid::new(bounds[0], bounds[1], bounds[2], bounds[3], n_q, n_p)?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        values.push(read_f64(&mut input)?);
    }
    if let Some(k) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Snapshot(format!("invalid value at cell {k}")));
    }
    let rho = PhaseDensity::from_parts_unchecked(grid, values);
    let mass = rho.mass();
    if mass.is_nan() || mass <= 0.0 {
        return Err(Error::Snapshot("snapshot carries no mass".into()));
    }
    Ok(rho)
}

fn read_f64<R: Read>(input: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    input
        .read_exact(&mut b)
        .map_err(|e| Error::Snapshot(format!("truncated body: {e}")))?;
    Ok(f64::from_le_bytes(b))
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    input
        .read_exact(&mut b)
        .map_err(|e| Error::Snapshot(format!("truncated grid descriptor: {e}")))?;
    Ok(u32::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PhaseDensity {
        let g = PhaseGrid::new(-3.0, 3.0, -2.0, 2.0, 8, 10).unwrap();
        PhaseDensity::gaussian(g, 0.3, 1.0, -0.1, 0.5).unwrap()
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let rho = sample();
        let mut buf = Vec::new();
        write_snapshot(&rho, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"VFPD");
        assert_eq!(buf.len(), 5 + 32 + 8 + 8 * 80);
        let back = read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(back, rho);
    }

    #[test]
    fn bad_magic_and_truncation() {
        let rho = sample();
        let mut buf = Vec::new();
        write_snapshot(&rho, &mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_snapshot(bad.as_slice()), Err(Error::Snapshot(_))));
        buf.truncate(buf.len() - 3);
        assert!(matches!(read_snapshot(buf.as_slice()), Err(Error::Snapshot(_))));
    }

    #[test]
    fn csv_layout() {
        let rho = sample();
        let mut buf = Vec::new();
        write_csv(&rho, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "q,p,value");
        assert_eq!(lines.len(), 81);
        // second data row shares q with the first (row-major in q)
        let first: Vec<f64> = lines[1].split(',').map(|s| s.parse().unwrap()).collect();
        let second: Vec<f64> = lines[2].split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(first[0], second[0]);
        assert!(second[1] > first[1]);
        assert_eq!(first[2], rho.at(0, 0));
    }
}
