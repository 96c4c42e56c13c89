//! File formats.
//!
//! CSV files start with one comment line
//! `# pushblock schema v1 seed=<value>:<stream> config=<json>` followed by a
//! header row. JSON documents wrap their payload as
//! `{schema_version, seed, config, data}`. Floats are written in shortest
//! round-trip form, so export followed by import reproduces values exactly.

use std::io::{BufRead, BufReader, Read, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::array::{ArrayError, ArrayState};
use crate::error::ProfileError;
use crate::growth::GrowthTrajectory;
use crate::lpp::{GeometricEnv, LppTable};
use crate::noise::ClockUsage;
use crate::particles::ParticleTrajectory;
use crate::profile::HeightProfile;
use crate::rng::Seed;
use crate::stats::EmpiricalDist;

pub const SCHEMA_VERSION: u32 = 1;
const MAGIC: &str = "# pushblock schema v";

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("bad header line: {0}")]
    Header(String),
    #[error("unsupported schema version {0}")]
    Schema(u32),
    #[error("inconsistent data: {0}")]
    Format(String),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Array(#[from] ArrayError),
}

pub type Result<T> = std::result::Result<T, IoError>;

/// Seed and configuration written at the top of every artifact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub schema_version: u32,
    pub seed: Option<Seed>,
    pub config: Value,
}

impl Header {
    pub fn new(seed: Option<Seed>, config: Value) -> Self {
        Self { schema_version: SCHEMA_VERSION, seed, config }
    }

    pub fn line(&self) -> String {
        let seed = self.seed.map_or_else(|| "none".to_string(), |s| format!("{}:{}", s.value, s.stream));
        format!("{MAGIC}{} seed={seed} config={}", self.schema_version, self.config)
    }

    pub fn parse(line: &str) -> Result<Self> {
        let bad = || IoError::Header(line.to_string());
        let rest = line.trim_end().strip_prefix(MAGIC).ok_or_else(bad)?;
        let (version, rest) = rest.split_once(" seed=").ok_or_else(bad)?;
        let (seed, config) = rest.split_once(" config=").ok_or_else(bad)?;
        let schema_version: u32 = version.parse().map_err(|_| bad())?;
        if schema_version != SCHEMA_VERSION {
            return Err(IoError::Schema(schema_version));
        }
        let seed = match seed {
            "none" => None,
            s => {
                let (v, st) = s.split_once(':').ok_or_else(bad)?;
                Some(Seed::with_stream(v.parse().map_err(|_| bad())?, st.parse().map_err(|_| bad())?))
            }
        };
        Ok(Self { schema_version, seed, config: serde_json::from_str(config)? })
    }
}

pub fn write_csv<W: Write, R: Serialize>(mut w: W, header: &Header, rows: impl IntoIterator<Item = R>) -> Result<()> {
    writeln!(w, "{}", header.line())?;
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<Rd: Read, R: DeserializeOwned>(r: Rd) -> Result<(Header, Vec<R>)> {
    let mut r = BufReader::new(r);
    let mut first = String::new();
    r.read_line(&mut first)?;
    let header = Header::parse(&first)?;
    let rows = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(r)
        .deserialize()
        .collect::<std::result::Result<Vec<R>, _>>()?;
    Ok((header, rows))
}

/// JSON envelope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Document<D> {
    pub schema_version: u32,
    pub seed: Option<Seed>,
    pub config: Value,
    pub data: D,
}

impl<D> Document<D> {
    pub fn new(header: Header, data: D) -> Self {
        Self { schema_version: header.schema_version, seed: header.seed, config: header.config, data }
    }

    pub fn header(&self) -> Header {
        Header { schema_version: self.schema_version, seed: self.seed, config: self.config.clone() }
    }
}

pub fn write_json<W: Write, D: Serialize>(mut w: W, doc: &Document<D>) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, doc)?;
    writeln!(w)?;
    Ok(())
}

pub fn read_json<Rd: Read, D: DeserializeOwned>(r: Rd) -> Result<Document<D>> {
    let doc: Document<D> = serde_json::from_reader(BufReader::new(r))?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(IoError::Schema(doc.schema_version));
    }
    Ok(doc)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvRow {
    pub i: usize,
    pub j: usize,
    pub g: u64,
    #[serde(rename = "G")]
    pub big_g: u64,
}

pub fn env_rows(env: &GeometricEnv, table: &LppTable) -> Vec<EnvRow> {
    env.staircase().cells().map(|(i, j)| EnvRow { i, j, g: env.get(i, j), big_g: table.get(i, j) }).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub i: usize,
    pub j: usize,
    pub x: u64,
}

pub fn state_rows(s: &ArrayState) -> Vec<CellRow> {
    s.staircase().cells().map(|(i, j)| CellRow { i, j, x: s.get(i, j) }).collect()
}

pub fn state_from_rows(rows: &[CellRow]) -> Result<ArrayState> {
    // n(2n+1) cells.
    let n = (1..).find(|n| n * (2 * n + 1) >= rows.len()).expect("unbounded");
    let state = ArrayState::new(n, rows.iter().map(|r| r.x).collect())?;
    let order_ok = state.staircase().cells().zip(rows).all(|((i, j), r)| (r.i, r.j) == (i, j));
    if !order_ok {
        return Err(IoError::Format("cells out of row-major order".into()));
    }
    Ok(state)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Inc,
    Dec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub t: usize,
    pub kind: PointKind,
    pub position: f64,
}

/// One profile per step, `{t, inc, dec}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileDoc {
    pub t: usize,
    pub inc: Vec<f64>,
    pub dec: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthDoc {
    pub steps: Vec<ProfileDoc>,
    pub usage: Vec<ClockUsage>,
}

impl From<&GrowthTrajectory<f64>> for GrowthDoc {
    fn from(traj: &GrowthTrajectory<f64>) -> Self {
        let steps = traj
            .profiles()
            .iter()
            .enumerate()
            .map(|(t, h)| ProfileDoc { t, inc: h.inc().to_vec(), dec: h.dec().to_vec() })
            .collect();
        Self { steps, usage: traj.usage().to_vec() }
    }
}

impl TryFrom<GrowthDoc> for GrowthTrajectory<f64> {
    type Error = IoError;

    fn try_from(doc: GrowthDoc) -> Result<Self> {
        let profiles = doc
            .steps
            .into_iter()
            .enumerate()
            .map(|(t, p)| {
                if p.t != t {
                    return Err(IoError::Format(format!("step {} found where {t} expected", p.t)));
                }
                Ok(HeightProfile::new(p.inc, p.dec)?)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GrowthTrajectory::from_profiles(profiles, doc.usage))
    }
}

pub fn profile_rows(traj: &GrowthTrajectory<f64>) -> Vec<ProfileRow> {
    let mut rows = Vec::new();
    for (t, h) in traj.profiles().iter().enumerate() {
        rows.extend(h.inc().iter().map(|&position| ProfileRow { t, kind: PointKind::Inc, position }));
        rows.extend(h.dec().iter().map(|&position| ProfileRow { t, kind: PointKind::Dec, position }));
    }
    rows
}

/// Profiles from the flattened form; `steps` restores trailing empty profiles.
pub fn profiles_from_rows(rows: &[ProfileRow], steps: usize) -> Result<Vec<HeightProfile<f64>>> {
    let last = rows.iter().map(|r| r.t).max().unwrap_or(0).max(steps);
    let mut parts = vec![(Vec::new(), Vec::new()); last + 1];
    for r in rows {
        match r.kind {
            PointKind::Inc => parts[r.t].0.push(r.position),
            PointKind::Dec => parts[r.t].1.push(r.position),
        }
    }
    parts.into_iter().map(|(inc, dec)| Ok(HeightProfile::new(inc, dec)?)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Y,
    Z,
}

/// Space-time particle paths: one row per particle and step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathRow {
    pub t: usize,
    pub id: u64,
    pub species: Species,
    pub position: f64,
}

pub fn path_rows(traj: &ParticleTrajectory<f64>) -> Vec<PathRow> {
    let mut rows = Vec::new();
    for (t, c) in traj.configs().iter().enumerate() {
        rows.extend(c.y().iter().zip(c.y_ids()).map(|(&position, &id)| PathRow { t, id, species: Species::Y, position }));
        rows.extend(c.z().iter().zip(c.z_ids()).map(|(&position, &id)| PathRow { t, id, species: Species::Z, position }));
    }
    rows
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NucleationRow {
    pub s: f64,
    pub x: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeightRow {
    pub x: f64,
    pub h: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub value: i64,
    pub count: u64,
}

pub fn histogram_rows(d: &EmpiricalDist) -> Vec<HistogramRow> {
    d.iter().map(|(value, count)| HistogramRow { value, count }).collect()
}

pub fn histogram_from_rows(rows: &[HistogramRow]) -> EmpiricalDist {
    let mut d = EmpiricalDist::new();
    for r in rows {
        d.add_count(r.value, r.count);
    }
    d
}
