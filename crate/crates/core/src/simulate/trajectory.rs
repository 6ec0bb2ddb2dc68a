use std::io::Write;

use serde::Serialize;

use super::SimError;
use crate::model::State;

/// Jump record of one path, started at `records[0]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    /// `(time, state)` at the start and after every jump inside `E`.
    pub records: Vec<(f64, State)>,
    /// `τ_∂`, or `None` when the path was censored at `horizon`.
    pub absorption_time: Option<f64>,
    pub horizon: f64,
}

impl Trajectory {
    pub fn is_censored(&self) -> bool {
        self.absorption_time.is_none()
    }

    /// State occupied at time `t`, or `None` after absorption.
    pub fn state_at(&self, t: f64) -> Option<&State> {
        if self.absorption_time.is_some_and(|a| t >= a) {
            return None;
        }
        let i = self.records.partition_point(|(s, _)| *s <= t);
        self.records.get(i.saturating_sub(1)).map(|r| &r.1)
    }

    /// Columns `t, x1, ..., xr, event` with events `start`, `jump`,
    /// `absorbed` (coordinates 0) and `censored` (at the horizon).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SimError> {
        let dim = self.records.first().map_or(1, |r| r.1.dim());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((1..=dim).map(|i| format!("x{i}")));
        header.push("event".into());
        w.write_record(&header)?;
        let row = |t: f64, coords: Vec<String>, event: &str| {
            let mut r = vec![format!("{t:.17e}")];
            r.extend(coords);
            r.push(event.to_string());
            r
        };
        for (k, (t, x)) in self.records.iter().enumerate() {
            let coords = x.coords().iter().map(u32::to_string).collect();
            w.write_record(row(*t, coords, if k == 0 { "start" } else { "jump" }))?;
        }
        match (self.absorption_time, self.records.last()) {
            (Some(t), _) => w.write_record(row(t, vec!["0".into(); dim], "absorbed"))?,
            (None, Some((_, x))) => {
                let coords = x.coords().iter().map(u32::to_string).collect();
                w.write_record(row(self.horizon, coords, "censored"))?
            }
            (None, None) => {}
        }
        w.flush()?;
        Ok(())
    }
}
