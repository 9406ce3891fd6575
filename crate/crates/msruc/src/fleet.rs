//! Generator fleet and net-load data ingestion.
//!
//! The fleet file is TOML with one `[[unit]]` table per unit type; a `count`
//! field expands replicated units into individually named generators. Load
//! data is CSV at a fixed sub-hourly resolution; days with gaps are dropped
//! and reported rather than silently patched.

use rand::{Rng as _, SeedableRng as _};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FleetError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("fleet file: {0}")]
    Toml(Box<toml::de::Error>),
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("csv parse error at line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("train fraction {0} must lie strictly between 0 and 1")]
    BadFraction(f64),
    #[error("need at least 2 days to split, got {0}")]
    TooFewDays(usize),
    #[error("scale must be positive, got {0}")]
    BadScale(f64),
}

impl From<toml::de::Error> for FleetError {
    fn from(e: toml::de::Error) -> Self {
        FleetError::Toml(Box::new(e))
    }
}

/// One dispatchable unit with its physical limits and the cost terms the
/// objective consumes. The ramp limit and the up-reserve price are distinct
/// fields even though conventional notation overloads them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub name: String,
    pub unit_type: String,
    /// Minimum stable output when committed, MW.
    pub p_min: f64,
    /// Maximum output, MW.
    pub p_max: f64,
    /// Maximum rate of output change, MW/h.
    pub ramp_limit: f64,
    /// Minimum hours online after a start.
    pub min_on: u32,
    /// Minimum hours offline after a stop.
    pub min_off: u32,
    /// Start-up cost, $ per event.
    pub cost_startup: f64,
    /// Shut-down cost, $ per event.
    pub cost_shutdown: f64,
    /// Cost of being committed, $/h.
    pub cost_commit: f64,
    /// Linear energy cost, $/MWh.
    pub cost_energy: f64,
    /// Up-spinning reserve price, $/MW per hour.
    pub price_res_up: f64,
    /// Down-spinning reserve price, $/MW per hour.
    pub price_res_down: f64,
    /// Payment for the option of being committed in an hour, $/h.
    pub price_commit_option: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fleet {
    pub generators: Vec<Generator>,
}

impl Fleet {
    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn total_capacity(&self) -> f64 {
        self.generators.iter().map(|g| g.p_max).sum()
    }
}

/// On-disk row; `count > 1` expands into `name-1 .. name-count`.
#[derive(Debug, Serialize, Deserialize)]
struct UnitRow {
    name: String,
    #[serde(rename = "type")]
    unit_type: String,
    #[serde(default = "one")]
    count: u32,
    p_min_mw: f64,
    p_max_mw: f64,
    ramp_mw_per_h: f64,
    min_on_h: u32,
    min_off_h: u32,
    cost_startup: f64,
    cost_shutdown: f64,
    cost_commit: f64,
    cost_energy: f64,
    price_res_up: f64,
    price_res_down: f64,
    price_commit_option: f64,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Serialize, Deserialize)]
struct FleetFile {
    #[serde(rename = "unit")]
    units: Vec<UnitRow>,
}

/// Parse and validate a fleet file.
pub fn load_fleet(path: &Path) -> Result<Fleet, FleetError> {
    let text = std::fs::read_to_string(path)?;
    parse_fleet(&text)
}

pub fn parse_fleet(text: &str) -> Result<Fleet, FleetError> {
    let file: FleetFile = toml::from_str(text)?;
    let mut generators = Vec::new();
    for (i, row) in file.units.iter().enumerate() {
        let at = |field: &str| format!("unit[{i}].{field}");
        let schema = |field: &str, message: &str| FleetError::Schema {
            path: at(field),
            message: message.to_string(),
        };
        if row.count == 0 {
            return Err(schema("count", "count must be at least 1"));
        }
        if !(row.p_min_mw >= 0.0 && row.p_min_mw <= row.p_max_mw) {
            return Err(schema("p_min_mw", "requires 0 <= p_min <= p_max"));
        }
        if row.ramp_mw_per_h <= 0.0 {
            return Err(schema("ramp_mw_per_h", "ramp limit must be positive"));
        }
        if row.min_on_h < 1 || row.min_off_h < 1 {
            return Err(schema("min_on_h", "minimum on/off times must be at least 1 hour"));
        }
        for (field, value) in [
            ("cost_startup", row.cost_startup),
            ("cost_shutdown", row.cost_shutdown),
            ("cost_commit", row.cost_commit),
            ("cost_energy", row.cost_energy),
            ("price_res_up", row.price_res_up),
            ("price_res_down", row.price_res_down),
            ("price_commit_option", row.price_commit_option),
        ] {
            if value < 0.0 {
                return Err(schema(field, "prices and costs must be non-negative"));
            }
        }
        for k in 1..=row.count {
            let name = if row.count == 1 {
                row.name.clone()
            } else {
                format!("{}-{}", row.name, k)
            };
            generators.push(Generator {
                name,
                unit_type: row.unit_type.clone(),
                p_min: row.p_min_mw,
                p_max: row.p_max_mw,
                ramp_limit: row.ramp_mw_per_h,
                min_on: row.min_on_h,
                min_off: row.min_off_h,
                cost_startup: row.cost_startup,
                cost_shutdown: row.cost_shutdown,
                cost_commit: row.cost_commit,
                cost_energy: row.cost_energy,
                price_res_up: row.price_res_up,
                price_res_down: row.price_res_down,
                price_commit_option: row.price_commit_option,
            });
        }
    }
    let mut seen = HashSet::new();
    for (i, g) in generators.iter().enumerate() {
        if !seen.insert(g.name.as_str()) {
            return Err(FleetError::Schema {
                path: format!("unit[{i}].name"),
                message: format!("duplicate generator name {:?}", g.name),
            });
        }
    }
    Ok(Fleet { generators })
}

/// Serialize a fleet back to the file schema, one row per generator.
pub fn fleet_to_toml(fleet: &Fleet) -> String {
    let units: Vec<UnitRow> = fleet
        .generators
        .iter()
        .map(|g| UnitRow {
            name: g.name.clone(),
            unit_type: g.unit_type.clone(),
            count: 1,
            p_min_mw: g.p_min,
            p_max_mw: g.p_max,
            ramp_mw_per_h: g.ramp_limit,
            min_on_h: g.min_on,
            min_off_h: g.min_off,
            cost_startup: g.cost_startup,
            cost_shutdown: g.cost_shutdown,
            cost_commit: g.cost_commit,
            cost_energy: g.cost_energy,
            price_res_up: g.price_res_up,
            price_res_down: g.price_res_down,
            price_commit_option: g.price_commit_option,
        })
        .collect();
    toml::to_string_pretty(&FleetFile { units }).expect("fleet serializes")
}

/// One day of net-load samples on a fixed minute grid covering the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDay {
    pub id: String,
    /// `(minute offset, MW)` with strictly increasing offsets from 0.
    pub samples: Vec<(u32, f64)>,
}

impl SampleDay {
    /// Bucket samples per hour with local abscissae in `[0,1)`, the shape
    /// the spline fitter takes.
    pub fn hour_samples(&self, hours: usize) -> Vec<Vec<(f64, f64)>> {
        let mut out = vec![Vec::new(); hours];
        for &(minute, mw) in &self.samples {
            let h = (minute / 60) as usize;
            if h < hours {
                out[h].push(((minute % 60) as f64 / 60.0, mw));
            }
        }
        out
    }

    /// Sample times in fractional hours.
    pub fn times_hours(&self) -> Vec<f64> {
        self.samples.iter().map(|&(m, _)| m as f64 / 60.0).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|&(_, v)| v).collect()
    }
}

/// Result of ingesting a load CSV: complete days plus the dropped ones with
/// the reason each was rejected.
#[derive(Debug)]
pub struct LoadIngest {
    pub days: Vec<SampleDay>,
    pub dropped: Vec<(String, String)>,
}

/// Read `day_id,minute,mw` rows, divide values by `scale`, and keep only
/// days that fully cover `hours` hours on a uniform minute grid.
pub fn load_sample_days(path: &Path, scale: f64, hours: usize) -> Result<LoadIngest, FleetError> {
    if scale <= 0.0 {
        return Err(FleetError::BadScale(scale));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(e, 1))?;

    let mut order: Vec<String> = Vec::new();
    let mut by_id: std::collections::HashMap<String, Vec<(u32, f64)>> =
        std::collections::HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            csv_error(e, line)
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() < 3 {
            return Err(FleetError::Csv { line, message: "expected day_id,minute,mw".into() });
        }
        let id = record[0].to_string();
        let minute: u32 = record[1].trim().parse().map_err(|e| FleetError::Csv {
            line,
            message: format!("bad minute {:?}: {e}", &record[1]),
        })?;
        let mw: f64 = record[2].trim().parse().map_err(|e| FleetError::Csv {
            line,
            message: format!("bad mw {:?}: {e}", &record[2]),
        })?;
        if !by_id.contains_key(&id) {
            order.push(id.clone());
        }
        by_id.entry(id).or_default().push((minute, mw / scale));
    }

    let mut days = Vec::new();
    let mut dropped = Vec::new();
    for id in order {
        let mut samples = by_id.remove(&id).unwrap();
        samples.sort_by_key(|&(m, _)| m);
        match check_grid(&samples, hours) {
            Ok(()) => days.push(SampleDay { id, samples }),
            Err(reason) => dropped.push((id, reason)),
        }
    }
    Ok(LoadIngest { days, dropped })
}

/// A day is usable when its offsets form a uniform grid `0, s, 2s, ...`
/// whose step divides the hour and which ends exactly one step short of the
/// horizon.
fn check_grid(samples: &[(u32, f64)], hours: usize) -> Result<(), String> {
    if samples.len() < 2 {
        return Err(format!("only {} samples", samples.len()));
    }
    if samples[0].0 != 0 {
        return Err(format!("first sample at minute {}, expected 0", samples[0].0));
    }
    let step = samples[1].0 - samples[0].0;
    if step == 0 || 60 % step != 0 {
        return Err(format!("step of {step} minutes does not divide the hour"));
    }
    for (i, &(m, _)) in samples.iter().enumerate() {
        if m != i as u32 * step {
            return Err(format!("gap before minute {m}"));
        }
    }
    let expected = hours as u32 * 60 / step;
    if samples.len() as u32 != expected {
        return Err(format!(
            "covers {} samples, expected {expected} for {hours} hours at {step}-minute steps",
            samples.len()
        ));
    }
    Ok(())
}

fn csv_error(e: csv::Error, line: u64) -> FleetError {
    FleetError::Csv { line, message: e.to_string() }
}

/// Seeded shuffle-then-split. The train share is rounded down but clamped so
/// both sides stay non-empty.
pub fn split_train_test(
    days: &[SampleDay],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<SampleDay>, Vec<SampleDay>), FleetError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(FleetError::BadFraction(train_fraction));
    }
    if days.len() < 2 {
        return Err(FleetError::TooFewDays(days.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shuffled: Vec<SampleDay> = days.to_vec();
    for i in (1..shuffled.len()).rev() {
        shuffled.swap(i, rng.gen_range(0..=i));
    }
    let n_train = ((train_fraction * days.len() as f64).floor() as usize)
        .clamp(1, days.len() - 1);
    let test = shuffled.split_off(n_train);
    Ok((shuffled, test))
}

/// Write days in the load CSV schema.
pub fn write_load_csv(days: &[SampleDay], path: &Path) -> Result<(), FleetError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(e, 0))?;
    w.write_record(["day_id", "minute", "mw"]).map_err(|e| csv_error(e, 0))?;
    for day in days {
        for &(minute, mw) in &day.samples {
            w.write_record([day.id.as_str(), &minute.to_string(), &mw.to_string()])
                .map_err(|e| csv_error(e, 0))?;
        }
    }
    w.flush()?;
    Ok(())
}
