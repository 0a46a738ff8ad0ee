//! Sensor position files (`sensor_id,x,y`, meters).

use std::path::Path;

use crate::error::{Error, Result};
use crate::topology::{Sensor, SensorField, SensorId};

/// Layout of the Intel Berkeley lab deployment, all 54 motes.
pub const INTEL_POSITIONS_CSV: &str = include_str!("../../data/intel_positions.csv");

/// Mote next to the base station.
pub const INTEL_ROOT: SensorId = SensorId(16);

/// Motes that never reported a temperature.
pub const INTEL_EXCLUDED: [SensorId; 2] = [SensorId(5), SensorId(15)];

pub fn parse_positions(text: &str, origin: &Path) -> Result<Vec<Sensor>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            path: origin.to_path_buf(),
            line: 1,
            msg: format!("missing column {name}"),
        })
    };
    let (ci, cx, cy) = (col("sensor_id")?, col("x")?, col("y")?);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let bad = |msg: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            msg,
        };
        let field = |c: usize| rec.get(c).unwrap_or("");
        let id: u32 = field(ci)
            .parse()
            .map_err(|_| bad(format!("bad sensor id {:?}", field(ci))))?;
        let x: f64 = field(cx).parse().map_err(|_| bad(format!("bad x {:?}", field(cx))))?;
        let y: f64 = field(cy).parse().map_err(|_| bad(format!("bad y {:?}", field(cy))))?;
        out.push(Sensor {
            id: SensorId(id),
            x,
            y,
        });
    }
    Ok(out)
}

pub fn load_positions(path: &Path) -> Result<Vec<Sensor>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_positions(&text, path)
}

/// The 52 reporting Intel motes rooted at mote 16.
pub fn intel_field() -> SensorField {
    let sensors = parse_positions(INTEL_POSITIONS_CSV, Path::new("intel_positions.csv"))
        .expect("bundled layout parses");
    SensorField::new(sensors, INTEL_ROOT)
        .and_then(|f| f.without(&INTEL_EXCLUDED))
        .expect("bundled layout is valid")
}
