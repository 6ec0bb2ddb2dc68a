use std::io::Write;

use serde::Serialize;

use super::{SpectralError, SpectralResult, SweepRow, TruncatedGenerator};

#[derive(Serialize)]
struct QsdRow<'a> {
    state: &'a str,
    qsd: f64,
    eta_fn: f64,
}

/// Columns `state, qsd, eta_fn`; states are written as `k` or `(x1,...,xr)`.
pub fn write_spectral_csv<W: Write>(gen: &TruncatedGenerator, res: &SpectralResult, out: W) -> Result<(), SpectralError> {
    let mut w = csv::Writer::from_writer(out);
    for ((x, &qsd), &eta_fn) in gen.states().iter().zip(&res.qsd).zip(&res.eta_fn) {
        let state = x.to_string();
        w.serialize(QsdRow { state: &state, qsd, eta_fn })?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `N, states, lambda0, lambda0_step, tv_step, probe, boundary_mass, left_residual`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), SpectralError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;
    use crate::spectral::{qsd_solve, truncate};

    #[test]
    fn csv_header_and_rows() {
        let g = truncate(&presets::two_state(), 2).unwrap();
        let r = qsd_solve(&g, 1e-12).unwrap();
        let mut buf = Vec::new();
        write_spectral_csv(&g, &r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "state,qsd,eta_fn");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1,0.38196"));
    }
}
