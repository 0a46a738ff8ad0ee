//! Measurement traces on a fixed epoch grid.
//!
//! Input rows are `timestamp_s,sensor_id,value`. Readings are bucketed into
//! epochs anchored at the first timestamp, gaps are filled by carrying the
//! last observation forward, and leading gaps take the first observation.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::error::{check_len, Error, Result};
use crate::io::format::exact;
use crate::topology::SensorId;

/// `T` epochs of readings from `p` sensors; `samples[t][i]` is sensor `i` at epoch `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochTrace {
    ids: Vec<SensorId>,
    timestamps: Vec<f64>,
    samples: Vec<Vec<f64>>,
}

impl EpochTrace {
    pub fn new(ids: Vec<SensorId>, timestamps: Vec<f64>, samples: Vec<Vec<f64>>) -> Result<Self> {
        check_len(timestamps.len(), samples.len())?;
        if ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("sensor ids must be strictly increasing".into()));
        }
        if timestamps.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("epoch timestamps must be strictly increasing".into()));
        }
        for s in &samples {
            check_len(ids.len(), s.len())?;
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::Degenerate("trace holds a non-finite reading".into()));
            }
        }
        Ok(Self {
            ids,
            timestamps,
            samples,
        })
    }

    pub fn ids(&self) -> &[SensorId] {
        &self.ids
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn sensors(&self) -> usize {
        self.ids.len()
    }

    pub fn epochs(&self) -> usize {
        self.samples.len()
    }

    pub fn epoch(&self, t: usize) -> &[f64] {
        &self.samples[t]
    }

    /// Readings of sensor index `i` over time.
    pub fn series(&self, i: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s[i]).collect()
    }

    /// Keeps only the listed sensors, in the order given.
    pub fn select(&self, ids: &[SensorId]) -> Result<EpochTrace> {
        let cols: Vec<usize> = ids
            .iter()
            .map(|id| {
                self.ids
                    .binary_search(id)
                    .map_err(|_| Error::Config(format!("sensor {id} not in trace")))
            })
            .collect::<Result<_>>()?;
        let samples = self
            .samples
            .iter()
            .map(|s| cols.iter().map(|&c| s[c]).collect())
            .collect();
        EpochTrace::new(ids.to_vec(), self.timestamps.clone(), samples)
    }

    /// Writes every reading at full precision so that loading it back is exact.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["timestamp_s", "sensor_id", "value"])?;
        for (ts, s) in self.timestamps.iter().zip(&self.samples) {
            for (id, v) in self.ids.iter().zip(s) {
                w.write_record([exact(*ts), id.to_string(), exact(*v)])?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn export(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

/// Which reading represents a bucket holding several.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BucketStat {
    /// Reading with the latest timestamp (later row on ties).
    #[default]
    Last,
    Mean,
}

impl std::str::FromStr for BucketStat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "last" => Ok(BucketStat::Last),
            "mean" => Ok(BucketStat::Mean),
            _ => Err(Error::Config(format!("bucket_stat must be last or mean, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceOptions {
    pub bucket_stat: BucketStat,
    pub excluded: Vec<SensorId>,
    /// Sensors the caller expects; those without a single reading are reported.
    pub expected: Vec<SensorId>,
}

/// A loaded trace and the sensors dropped for having no readings.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedTrace {
    pub trace: EpochTrace,
    pub empty_sensors: Vec<SensorId>,
}

struct Reading {
    ts: f64,
    id: SensorId,
    value: f64,
}

fn parse_readings(text: &str, path: &Path) -> Result<Vec<Reading>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let expected = ["timestamp_s", "sensor_id", "value"];
    if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: format!("header must be {}", expected.join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let bad = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        if rec.len() != 3 {
            return Err(bad(format!("expected 3 fields, found {}", rec.len())));
        }
        let ts: f64 = rec[0].parse().map_err(|_| bad(format!("bad timestamp {:?}", &rec[0])))?;
        let id: u32 = rec[1].parse().map_err(|_| bad(format!("bad sensor id {:?}", &rec[1])))?;
        let value: f64 = rec[2].parse().map_err(|_| bad(format!("bad value {:?}", &rec[2])))?;
        if !ts.is_finite() || !value.is_finite() {
            return Err(bad("non-finite number".into()));
        }
        out.push(Reading {
            ts,
            id: SensorId(id),
            value,
        });
    }
    Ok(out)
}

/// Parses a trace held in memory; `path` is only used in error messages.
pub fn parse_trace(text: &str, path: &Path, epoch_seconds: f64, opts: &TraceOptions) -> Result<LoadedTrace> {
    if !(epoch_seconds > 0.0) {
        return Err(Error::Config(format!("epoch length must be positive, got {epoch_seconds}")));
    }
    let readings: Vec<Reading> = parse_readings(text, path)?
        .into_iter()
        .filter(|r| !opts.excluded.contains(&r.id))
        .collect();
    let t0 = readings
        .iter()
        .map(|r| r.ts)
        .min_by(f64::total_cmp)
        .ok_or_else(|| Error::Degenerate(format!("{}: no readings", path.display())))?;
    // tolerate rounding on timestamps already on the grid
    let bucket = |ts: f64| ((ts - t0) / epoch_seconds + 1e-9).floor() as usize;
    let epochs = readings.iter().map(|r| bucket(r.ts)).max().unwrap_or(0) + 1;

    // per sensor: bucket -> (latest ts, value) or (sum, count)
    let mut cells: BTreeMap<SensorId, BTreeMap<usize, (f64, f64, usize)>> = BTreeMap::new();
    for r in &readings {
        let e = cells.entry(r.id).or_default().entry(bucket(r.ts)).or_insert((f64::NEG_INFINITY, 0.0, 0));
        match opts.bucket_stat {
            BucketStat::Last => {
                if r.ts >= e.0 {
                    *e = (r.ts, r.value, 1);
                }
            }
            BucketStat::Mean => {
                e.1 += r.value;
                e.2 += 1;
            }
        }
    }

    let empty_sensors: Vec<SensorId> = opts
        .expected
        .iter()
        .copied()
        .filter(|id| !opts.excluded.contains(id) && !cells.contains_key(id))
        .collect();
    let mut ids = Vec::new();
    let mut columns = Vec::new();
    for (id, by_bucket) in cells {
        let observed: Vec<(usize, f64)> = by_bucket
            .into_iter()
            .map(|(b, (_, v, n))| match opts.bucket_stat {
                BucketStat::Last => (b, v),
                BucketStat::Mean => (b, v / n as f64),
            })
            .collect();
        let first = observed[0].1;
        let mut col = vec![first; epochs];
        let mut it = observed.iter().peekable();
        let mut last = first;
        for (t, slot) in col.iter_mut().enumerate() {
            while let Some(&&(b, v)) = it.peek() {
                if b > t {
                    break;
                }
                last = v;
                it.next();
            }
            *slot = last;
        }
        ids.push(id);
        columns.push(col);
    }
    for id in &empty_sensors {
        log::warn!("sensor {id} has no readings and is dropped");
    }
    let timestamps = (0..epochs).map(|k| t0 + k as f64 * epoch_seconds).collect();
    let samples = (0..epochs)
        .map(|t| columns.iter().map(|c| c[t]).collect())
        .collect();
    Ok(LoadedTrace {
        trace: EpochTrace::new(ids, timestamps, samples)?,
        empty_sensors,
    })
}

pub fn load_trace(path: &Path, epoch_seconds: f64, opts: &TraceOptions) -> Result<LoadedTrace> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trace(&text, path, epoch_seconds, opts)
}
