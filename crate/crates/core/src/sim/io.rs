//! Path dumps: CSV with columns `t,w,u,x`, and a little-endian binary format
//! with header `{n_points: u64, seed: u64, spec_id: u64}` followed by the
//! `t`, `w`, `u`, `x` columns as `f64`.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::sim::path::SamplePath;

pub fn write_path_csv<W: Write>(path: &SamplePath, mut out: W) -> Result<()> {
    writeln!(out, "t,w,u,x")?;
    for i in 0..path.x.len() {
        writeln!(out, "{},{},{},{}", path.times()[i], path.w[i], path.u[i], path.x[i])?;
    }
    Ok(())
}

pub fn write_path_binary<W: Write>(path: &SamplePath, spec_id: u64, mut out: W) -> Result<()> {
    let n = path.x.len() as u64;
    out.write_all(&n.to_le_bytes())?;
    out.write_all(&path.seed.to_le_bytes())?;
    out.write_all(&spec_id.to_le_bytes())?;
    for column in [path.times(), &path.w[..], &path.u[..], &path.x[..]] {
        for v in column {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Decoded binary dump.
#[derive(Debug, Clone, PartialEq)]
pub struct PathDump {
    pub seed: u64,
    pub spec_id: u64,
    pub t: Vec<f64>,
    pub w: Vec<f64>,
    pub u: Vec<f64>,
    pub x: Vec<f64>,
}

pub fn read_path_binary<R: Read>(mut input: R) -> Result<PathDump> {
    let mut word = [0u8; 8];
    let mut next = |input: &mut R| -> Result<[u8; 8]> {
        input.read_exact(&mut word)?;
        Ok(word)
    };
    let n = u64::from_le_bytes(next(&mut input)?) as usize;
    let seed = u64::from_le_bytes(next(&mut input)?);
    let spec_id = u64::from_le_bytes(next(&mut input)?);
    if n > (1 << 32) {
        return Err(Error::Parse(format!("implausible point count {n}")));
    }
    let mut columns = Vec::with_capacity(4);
    for _ in 0..4 {
        let mut col = Vec::with_capacity(n);
        for _ in 0..n {
            col.push(f64::from_le_bytes(next(&mut input)?));
        }
        columns.push(col);
    }
    let x = columns.pop().unwrap();
    let u = columns.pop().unwrap();
    let w = columns.pop().unwrap();
    let t = columns.pop().unwrap();
    Ok(PathDump {
        seed,
        spec_id,
        t,
        w,
        u,
        x,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::sim::{simulate_path, IntegrandSpec, TimeGrid};

    #[test]
    fn binary_round_trip_and_csv_shape() {
        let spec = IntegrandSpec::bounded_sine(1.0, 0.5).unwrap();
        let p = simulate_path(&spec, Arc::new(TimeGrid::uniform(32).unwrap()), 17).unwrap();
        let mut buf = Vec::new();
        write_path_binary(&p, spec.numeric_id(), &mut buf).unwrap();
        assert_eq!(buf.len(), 24 + 4 * 33 * 8);
        let back = read_path_binary(&buf[..]).unwrap();
        assert_eq!(back.seed, 17);
        assert_eq!(back.spec_id, 2);
        assert_eq!(back.x, p.x);
        assert_eq!(back.t, p.times());

        let mut csv = Vec::new();
        write_path_csv(&p, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 34);
        assert_eq!(text.lines().next().unwrap(), "t,w,u,x");
    }
}
