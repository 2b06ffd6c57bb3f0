//! Plain CSV writers with round-trip float formatting.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use num_complex::Complex64;

use corridor_dynamics::evolution::{DensityMatrix, Observables, WaveFunction};

/// 17 significant digits.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

/// Header line plus rows of floats.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| fmt(x)).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Time series with a leading `source` column (`engine` or `oracle`).
pub fn write_series(path: &Path, series: &[(&str, &[Observables])]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "source,t,norm,mean_x,mean_p,mean_x2,energy")?;
    for (source, rows) in series {
        for o in rows.iter() {
            writeln!(
                w,
                "{source},{},{},{},{},{},{}",
                fmt(o.t),
                fmt(o.norm),
                fmt(o.mean_x),
                fmt(o.mean_p),
                fmt(o.mean_x2),
                fmt(o.energy)
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_wavefunction(path: &Path, psi: &WaveFunction) -> Result<()> {
    let rows: Vec<Vec<f64>> =
        psi.amp.iter().enumerate().map(|(j, z)| vec![psi.grid.x(j), z.re, z.im]).collect();
    write_table(path, &["x", "re", "im"], &rows)
}

/// `n` rows of real parts followed by `n` rows of imaginary parts, no header.
pub fn write_density(path: &Path, rho: &DensityMatrix) -> Result<()> {
    let mut w = create(path)?;
    let n = rho.grid.n;
    for part in [|z: Complex64| z.re, |z: Complex64| z.im] {
        for i in 0..n {
            let cells: Vec<String> = (0..n).map(|j| fmt(part(rho.rho[(i, j)]))).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
    }
    w.flush()?;
    Ok(())
}
