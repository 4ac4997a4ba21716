//! Statistics CSV and binary (`VFPE`) ensemble snapshots.

use std::io::{Read, Write};

use super::{ParticleEnsemble, ParticleStats};
use crate::error::{Error, Result};

pub const ENSEMBLE_MAGIC: &[u8; 4] = b"VFPE";
pub const ENSEMBLE_VERSION: u8 = 1;

pub const STATS_HEADER: &str = "t,M1_q,M2_q,M1_p,M2_p,kde_entropy";

/// Writes the statistics series; `kde_entropy` is left empty where it was
/// not computed.
pub fn write_stats_csv<W: Write>(series: &[ParticleStats], mut out: W) -> Result<()> {
    writeln!(out, "{STATS_HEADER}")?;
    for s in series {
        write!(out, "{},{},{},{},{},", s.t, s.m1_q, s.m2_q, s.m1_p, s.m2_p)?;
        match s.kde_entropy {
            Some(h) => writeln!(out, "{h}")?,
            None => writeln!(out)?,
        }
    }
    Ok(())
}

/// Magic, version byte, `u64` N, `f64` t, `u64` seed, then the `q` and `p`
/// arrays, all little-endian.
pub fn write_ensemble<W: Write>(ens: &ParticleEnsemble, mut out: W) -> Result<()> {
    let mut buf = Vec::with_capacity(4 + 1 + 24 + 16 * ens.len());
    buf.extend_from_slice(ENSEMBLE_MAGIC);
    buf.push(ENSEMBLE_VERSION);
    buf.extend_from_slice(&(ens.len() as u64).to_le_bytes());
    buf.extend_from_slice(&ens.t().to_le_bytes());
    buf.extend_from_slice(&ens.seed().to_le_bytes());
    for x in ens.q().iter().chain(ens.p()) {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_ensemble<R: Read>(mut input: R) -> Result<ParticleEnsemble> {
    let mut header = [0u8; 5];
    input
        .read_exact(&mut header)
        .map_err(|e| Error::Snapshot(format!("truncated header: {e}")))?;
    if &header[..4] != ENSEMBLE_MAGIC {
        return Err(Error::Snapshot("bad magic, expected VFPE".into()));
    }
    if header[4] != ENSEMBLE_VERSION {
        return Err(Error::Snapshot(format!("unsupported version {}", header[4])));
    }
    let n = u64::from_le_bytes(read8(&mut input)?) as usize;
    let t = f64::from_le_bytes(read8(&mut input)?);
    let seed = u64::from_le_bytes(read8(&mut input)?);
    let mut body = Vec::new();
    input.read_to_end(&mut body)?;
    if body.len() != 16 * n {
        return Err(Error::Snapshot(format!("expected {} bytes of coordinates, found {}", 16 * n, body.len())));
    }
    let values: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let (q, p) = values.split_at(n);
    ParticleEnsemble::new(q.to_vec(), p.to_vec(), t, seed)
}

fn read8<R: Read>(input: &mut R) -> Result<[u8; 8]> {
    let mut b = [0u8; 8];
    input
        .read_exact(&mut b)
        .map_err(|e| Error::Snapshot(format!("truncated header: {e}")))?;
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::particles::{init_ensemble, InitialLaw};

    #[test]
    fn snapshot_round_trip_is_exact() {
        let law = InitialLaw::Gaussian { mean_q: 0.3, var_q: 2.0, mean_p: 0.0, var_p: 0.5 };
        let ens = init_ensemble(&law, 257, 99).unwrap();
        let mut buf = Vec::new();
        write_ensemble(&ens, &mut buf).unwrap();
        assert_eq!(buf.len(), 5 + 24 + 16 * 257);
        let back = read_ensemble(buf.as_slice()).unwrap();
        assert_eq!(back, ens);
    }

    #[test]
    fn rejects_bad_snapshots() {
        let ens = ParticleEnsemble::new(vec![0.0, 1.0], vec![1.0, 0.0], 2.5, 4).unwrap();
        let mut buf = Vec::new();
        write_ensemble(&ens, &mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_ensemble(bad.as_slice()).is_err());
        assert!(read_ensemble(&buf[..buf.len() - 1]).is_err());
        let mut v2 = buf.clone();
        v2[4] = 2;
        assert!(read_ensemble(v2.as_slice()).is_err());
    }

    #[test]
    fn stats_csv_layout() {
        let mut s = ParticleStats { t: 0.5, m1_q: 1.0, m2_q: 2.0, m1_p: 0.0, m2_p: 1.0, kde_entropy: None };
        let mut out = Vec::new();
        write_stats_csv(&[s], &mut out).unwrap();
        s.kde_entropy = Some(2.75);
        write_stats_csv(&[s], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], STATS_HEADER);
        assert_eq!(lines[1], "0.5,1,2,0,1,");
        assert_eq!(lines[3], "0.5,1,2,0,1,2.75");
    }
}
