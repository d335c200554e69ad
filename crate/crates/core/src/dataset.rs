// SPDX-License-Identifier: Apache-2.0

//! Labeled place-and-route attempts: ingestion, validation, feature
//! extraction and summary statistics.
//!
//! The canonical CSV layout carries the full candidate feature set; the
//! model itself only reads shape factor, routing layers and row utilization.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{parse_vertices, RectilinearPolygon};

/// Canonical CSV column order.
pub const COLUMNS: [&str; 15] = [
    "project_id",
    "design_id",
    "polygon",
    "shape_factor",
    "row_utilization_pct",
    "routing_layers",
    "n_instances",
    "n_sequential",
    "n_macros",
    "clock_mhz",
    "n_ports",
    "n_io_cells",
    "pin_density",
    "area_mm2",
    "label",
];

const REQUIRED: [&str; 4] = ["project_id", "design_id", "row_utilization_pct", "routing_layers"];

/// Utilization above this is accepted with a warning.
pub const UTILIZATION_WARN_PCT: f64 = 100.0;
/// Utilization above this is rejected.
pub const UTILIZATION_MAX_PCT: f64 = 200.0;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("row {row}, column {column}: {reason}")]
    Parse { row: usize, column: String, reason: String },
    #[error("row {row}, field {field}: {reason}")]
    Validation { row: usize, field: String, reason: String },
    #[error("row {row}: duplicate design id {project_id}/{design_id}")]
    DuplicateDesignId {
        row: usize,
        project_id: String,
        design_id: String,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl DatasetError {
    fn parse(row: usize, column: &str, reason: impl Into<String>) -> Self {
        Self::Parse {
            row,
            column: column.to_string(),
            reason: reason.into(),
        }
    }

    fn invalid(row: usize, field: &str, reason: impl Into<String>) -> Self {
        Self::Validation {
            row,
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

/// Class index 0 is `not_feasible`, 1 is `feasible`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    NotFeasible,
    Feasible,
}

impl Label {
    pub const fn index(self) -> usize {
        match self {
            Label::NotFeasible => 0,
            Label::Feasible => 1,
        }
    }

    pub const fn from_index(i: usize) -> Self {
        if i == 0 {
            Label::NotFeasible
        } else {
            Label::Feasible
        }
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            Label::NotFeasible => "not_feasible",
            Label::Feasible => "feasible",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "feasible" | "1" => Ok(Label::Feasible),
            "not_feasible" | "0" => Ok(Label::NotFeasible),
            other => Err(format!("unknown label {other:?} (expected feasible|not_feasible|1|0)")),
        }
    }
}

/// The three model inputs, in fixed index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Feature {
    ShapeFactor,
    RoutingLayers,
    RowUtilization,
}

impl Feature {
    pub const ALL: [Feature; 3] = [Feature::ShapeFactor, Feature::RoutingLayers, Feature::RowUtilization];

    pub const fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub const fn name(self) -> &'static str {
        match self {
            Feature::ShapeFactor => "sf",
            Feature::RoutingLayers => "routing_layers",
            Feature::RowUtilization => "row_utilization",
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown feature {s:?}"))
    }
}

impl Serialize for Feature {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Feature {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub shape_factor: f64,
    pub routing_layers: u32,
    pub row_utilization_pct: f64,
}

impl FeatureVector {
    pub fn new(shape_factor: f64, routing_layers: u32, row_utilization_pct: f64) -> Self {
        Self {
            shape_factor,
            routing_layers,
            row_utilization_pct,
        }
    }

    pub fn get(&self, feature: Feature) -> f64 {
        match feature {
            Feature::ShapeFactor => self.shape_factor,
            Feature::RoutingLayers => f64::from(self.routing_layers),
            Feature::RowUtilization => self.row_utilization_pct,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        Feature::ALL.map(|f| self.get(f))
    }
}

/// Candidate features the model does not consume; kept for reporting.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtendedFeatures {
    pub n_instances: Option<u64>,
    pub n_sequential: Option<u64>,
    pub n_macros: Option<u64>,
    pub clock_mhz: Option<f64>,
    pub n_ports: Option<u64>,
    pub n_io_cells: Option<u64>,
    pub pin_density: Option<f64>,
    pub area_mm2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignRecord {
    pub project_id: String,
    pub design_id: String,
    pub polygon: Option<RectilinearPolygon>,
    /// Stored value; ignored whenever `polygon` is present.
    pub shape_factor: Option<f64>,
    pub row_utilization_pct: f64,
    pub routing_layers: u32,
    pub extended: ExtendedFeatures,
    pub label: Option<Label>,
}

impl DesignRecord {
    pub fn shape_factor(&self) -> f64 {
        match (&self.polygon, self.shape_factor) {
            (Some(p), _) => p.shape_factor(),
            (None, Some(sf)) => sf,
            (None, None) => unreachable!("validated records carry geometry or a shape factor"),
        }
    }

    pub fn features(&self) -> FeatureVector {
        FeatureVector::new(self.shape_factor(), self.routing_layers, self.row_utilization_pct)
    }
}

pub fn extract_features(r: &DesignRecord) -> FeatureVector {
    r.features()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
    Json,
}

impl FromStr for DataFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(DataFormat::Csv),
            "json" => Ok(DataFormat::Json),
            other => Err(format!("unknown data format {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadWarning {
    pub row: usize,
    pub field: String,
    pub message: String,
}

impl fmt::Display for LoadWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "row {}, field {}: {}", self.row, self.field, self.message)
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadReport {
    pub records: Vec<DesignRecord>,
    pub warnings: Vec<LoadWarning>,
}

pub fn load_dataset<R: Read>(source: R, format: DataFormat) -> Result<Vec<DesignRecord>, DatasetError> {
    let report = load_dataset_report(source, format)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    Ok(report.records)
}

/// Like [`load_dataset`] but hands warnings back to the caller. CSV rows
/// are numbered by physical line (header = 1); JSON rows by 1-based array
/// position.
pub fn load_dataset_report<R: Read>(source: R, format: DataFormat) -> Result<LoadReport, DatasetError> {
    let rows = match format {
        DataFormat::Csv => csv_rows(source)?,
        DataFormat::Json => json_rows(source)?,
    };
    let mut report = LoadReport::default();
    let mut seen = HashSet::new();
    for (row, cells) in rows {
        let record = parse_row(row, &cells, &mut report.warnings)?;
        if !seen.insert((record.project_id.clone(), record.design_id.clone())) {
            return Err(DatasetError::DuplicateDesignId {
                row,
                project_id: record.project_id,
                design_id: record.design_id,
            });
        }
        report.records.push(record);
    }
    Ok(report)
}

type Cells = [Option<String>; 15];

fn column_index(name: &str) -> Option<usize> {
    COLUMNS.iter().position(|c| *c == name)
}

fn csv_rows<R: Read>(source: R) -> Result<Vec<(usize, Cells)>, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers().map_err(|e| csv_error(e, "header"))?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Ok(Vec::new());
    }
    let mut mapping = Vec::with_capacity(headers.len());
    for name in headers.iter() {
        let Some(idx) = column_index(name) else {
            return Err(DatasetError::parse(1, name, "unknown column"));
        };
        if mapping.contains(&idx) {
            return Err(DatasetError::parse(1, name, "repeated column"));
        }
        mapping.push(idx);
    }
    check_required_columns(&mapping)?;

    let mut rows = Vec::new();
    for result in reader.records() {
        let rec = result.map_err(|e| csv_error(e, "row"))?;
        let row = rec.position().map_or(0, |p| p.line() as usize);
        let mut cells: Cells = Default::default();
        for (field, &idx) in rec.iter().zip(&mapping) {
            if !field.is_empty() {
                cells[idx] = Some(field.to_string());
            }
        }
        rows.push((row, cells));
    }
    Ok(rows)
}

fn check_required_columns(mapping: &[usize]) -> Result<(), DatasetError> {
    for name in REQUIRED {
        if !mapping.contains(&column_index(name).unwrap()) {
            return Err(DatasetError::parse(1, name, "missing required column"));
        }
    }
    let has = |name| mapping.contains(&column_index(name).unwrap());
    if !has("polygon") && !has("shape_factor") {
        return Err(DatasetError::parse(
            1,
            "polygon",
            "need a polygon or shape_factor column",
        ));
    }
    Ok(())
}

fn csv_error(e: csv::Error, what: &str) -> DatasetError {
    let row = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => DatasetError::Io(io),
        kind => DatasetError::parse(row, what, format!("{kind:?}")),
    }
}

fn json_rows<R: Read>(source: R) -> Result<Vec<(usize, Cells)>, DatasetError> {
    let value: serde_json::Value =
        serde_json::from_reader(source).map_err(|e| DatasetError::parse(e.line(), "document", e.to_string()))?;
    let serde_json::Value::Array(items) = value else {
        return Err(DatasetError::parse(
            0,
            "document",
            "expected a top-level array of records",
        ));
    };
    let mut rows = Vec::with_capacity(items.len());
    let mut mapping_seen = Vec::new();
    for (i, item) in items.into_iter().enumerate() {
        let row = i + 1;
        let serde_json::Value::Object(map) = item else {
            return Err(DatasetError::parse(row, "record", "expected an object"));
        };
        let mut cells: Cells = Default::default();
        for (key, v) in map {
            let Some(idx) = column_index(&key) else {
                return Err(DatasetError::parse(row, &key, "unknown field"));
            };
            if !mapping_seen.contains(&idx) {
                mapping_seen.push(idx);
            }
            cells[idx] = match v {
                serde_json::Value::Null => None,
                serde_json::Value::String(s) if s.is_empty() => None,
                serde_json::Value::String(s) => Some(s),
                serde_json::Value::Number(n) => Some(n.to_string()),
                other => return Err(DatasetError::parse(row, &key, format!("unsupported value {other}"))),
            };
        }
        rows.push((row, cells));
    }
    Ok(rows)
}

fn cell<'a>(cells: &'a Cells, name: &str) -> Option<&'a str> {
    cells[column_index(name).unwrap()].as_deref()
}

fn parse_f64(row: usize, cells: &Cells, name: &str) -> Result<Option<f64>, DatasetError> {
    cell(cells, name)
        .map(|raw| match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(DatasetError::parse(row, name, format!("not a finite number: {raw:?}"))),
        })
        .transpose()
}

fn parse_count(row: usize, cells: &Cells, name: &str) -> Result<Option<u64>, DatasetError> {
    let Some(raw) = cell(cells, name) else { return Ok(None) };
    if let Ok(v) = raw.parse::<u64>() {
        return Ok(Some(v));
    }
    match raw.parse::<i64>() {
        Ok(_) => Err(DatasetError::invalid(row, name, "count must be >= 0")),
        Err(_) => Err(DatasetError::parse(row, name, format!("not an integer: {raw:?}"))),
    }
}

fn non_negative(row: usize, name: &str, v: Option<f64>) -> Result<Option<f64>, DatasetError> {
    match v {
        Some(x) if x < 0.0 => Err(DatasetError::invalid(row, name, "must be >= 0")),
        other => Ok(other),
    }
}

fn parse_row(row: usize, cells: &Cells, warnings: &mut Vec<LoadWarning>) -> Result<DesignRecord, DatasetError> {
    let text = |name: &str| -> Result<String, DatasetError> {
        cell(cells, name)
            .map(str::to_string)
            .ok_or_else(|| DatasetError::invalid(row, name, "required"))
    };
    let project_id = text("project_id")?;
    let design_id = text("design_id")?;

    let polygon = cell(cells, "polygon")
        .map(|raw| {
            let vertices = parse_vertices(raw).map_err(|e| DatasetError::parse(row, "polygon", e.to_string()))?;
            RectilinearPolygon::new(&vertices).map_err(|e| DatasetError::invalid(row, "polygon", e.to_string()))
        })
        .transpose()?;
    let shape_factor = parse_f64(row, cells, "shape_factor")?;
    if let Some(sf) = shape_factor {
        if sf <= 0.0 {
            return Err(DatasetError::invalid(row, "shape_factor", "must be > 0"));
        }
    }
    if polygon.is_none() && shape_factor.is_none() {
        return Err(DatasetError::invalid(
            row,
            "polygon",
            "record needs a polygon or a shape_factor",
        ));
    }

    let row_utilization_pct = parse_f64(row, cells, "row_utilization_pct")?
        .ok_or_else(|| DatasetError::invalid(row, "row_utilization_pct", "required"))?;
    if row_utilization_pct <= 0.0 {
        return Err(DatasetError::invalid(row, "row_utilization_pct", "must be > 0"));
    }
    if row_utilization_pct > UTILIZATION_MAX_PCT {
        return Err(DatasetError::invalid(
            row,
            "row_utilization_pct",
            format!("{row_utilization_pct} exceeds {UTILIZATION_MAX_PCT}%"),
        ));
    }
    if row_utilization_pct > UTILIZATION_WARN_PCT {
        warnings.push(LoadWarning {
            row,
            field: "row_utilization_pct".into(),
            message: format!("over-utilized: {row_utilization_pct}%"),
        });
    }

    let layers = parse_count(row, cells, "routing_layers")?
        .ok_or_else(|| DatasetError::invalid(row, "routing_layers", "required"))?;
    if layers < 1 {
        return Err(DatasetError::invalid(row, "routing_layers", "must be >= 1"));
    }
    let routing_layers =
        u32::try_from(layers).map_err(|_| DatasetError::invalid(row, "routing_layers", "out of range"))?;

    let extended = ExtendedFeatures {
        n_instances: parse_count(row, cells, "n_instances")?,
        n_sequential: parse_count(row, cells, "n_sequential")?,
        n_macros: parse_count(row, cells, "n_macros")?,
        clock_mhz: non_negative(row, "clock_mhz", parse_f64(row, cells, "clock_mhz")?)?,
        n_ports: parse_count(row, cells, "n_ports")?,
        n_io_cells: parse_count(row, cells, "n_io_cells")?,
        pin_density: non_negative(row, "pin_density", parse_f64(row, cells, "pin_density")?)?,
        area_mm2: non_negative(row, "area_mm2", parse_f64(row, cells, "area_mm2")?)?,
    };
    if let (Some(inst), Some(seq)) = (extended.n_instances, extended.n_sequential) {
        if seq > inst {
            return Err(DatasetError::invalid(row, "n_sequential", "exceeds n_instances"));
        }
    }

    let label = cell(cells, "label")
        .map(|raw| {
            raw.parse::<Label>()
                .map_err(|reason| DatasetError::parse(row, "label", reason))
        })
        .transpose()?;

    Ok(DesignRecord {
        project_id,
        design_id,
        polygon,
        shape_factor,
        row_utilization_pct,
        routing_layers,
        extended,
        label,
    })
}

fn canonical_cells(r: &DesignRecord) -> [String; 15] {
    let f = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    let c = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
    let e = &r.extended;
    [
        r.project_id.clone(),
        r.design_id.clone(),
        r.polygon.as_ref().map(|p| p.to_text()).unwrap_or_default(),
        f(r.shape_factor),
        f(Some(r.row_utilization_pct)),
        r.routing_layers.to_string(),
        c(e.n_instances),
        c(e.n_sequential),
        c(e.n_macros),
        f(e.clock_mhz),
        c(e.n_ports),
        c(e.n_io_cells),
        f(e.pin_density),
        f(e.area_mm2),
        r.label.map(|l| l.as_str().to_string()).unwrap_or_default(),
    ]
}

/// Writes records in canonical form: fixed column order, six decimals for
/// real-valued fields.
pub fn save_dataset<W: Write>(records: &[DesignRecord], mut sink: W, format: DataFormat) -> Result<(), DatasetError> {
    match format {
        DataFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(sink);
            w.write_record(COLUMNS).map_err(|e| csv_error(e, "write"))?;
            for r in records {
                w.write_record(canonical_cells(r)).map_err(|e| csv_error(e, "write"))?;
            }
            w.flush()?;
        }
        DataFormat::Json => {
            let rows: Vec<serde_json::Map<String, serde_json::Value>> = records.iter().map(json_record).collect();
            serde_json::to_writer_pretty(&mut sink, &rows).map_err(std::io::Error::from)?;
            sink.write_all(b"\n")?;
        }
    }
    Ok(())
}

fn json_record(r: &DesignRecord) -> serde_json::Map<String, serde_json::Value> {
    use serde_json::Value;
    let num = |v: Option<f64>| v.map_or(Value::Null, Value::from);
    let count = |v: Option<u64>| v.map_or(Value::Null, Value::from);
    let e = &r.extended;
    let values = [
        Value::from(r.project_id.clone()),
        Value::from(r.design_id.clone()),
        r.polygon.as_ref().map_or(Value::Null, |p| Value::from(p.to_text())),
        num(r.shape_factor),
        Value::from(r.row_utilization_pct),
        Value::from(r.routing_layers),
        count(e.n_instances),
        count(e.n_sequential),
        count(e.n_macros),
        num(e.clock_mhz),
        count(e.n_ports),
        count(e.n_io_cells),
        num(e.pin_density),
        num(e.area_mm2),
        r.label.map_or(Value::Null, |l| Value::from(l.as_str())),
    ];
    COLUMNS.iter().map(|c| c.to_string()).zip(values).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AreaBucket {
    pub lower_mm2: f64,
    /// `None` for the open-ended last bucket.
    pub upper_mm2: Option<f64>,
    pub count: usize,
    pub percent: f64,
}

impl AreaBucket {
    pub fn contains(&self, area: f64) -> bool {
        area >= self.lower_mm2 && self.upper_mm2.is_none_or(|u| area < u)
    }

    pub fn label(&self) -> String {
        match self.upper_mm2 {
            Some(u) => format!("{} ≤ A < {}", self.lower_mm2, u),
            None => format!("A ≥ {}", self.lower_mm2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AreaBucketStats {
    pub buckets: Vec<AreaBucket>,
    pub counted: usize,
    /// Design ids of records without `area_mm2`; excluded from the denominator.
    pub missing_area: Vec<String>,
}

pub const AREA_BUCKET_EDGES_MM2: [f64; 4] = [0.0, 0.5, 1.0, 4.0];

pub fn area_bucket_stats(records: &[DesignRecord]) -> AreaBucketStats {
    let mut buckets: Vec<AreaBucket> = AREA_BUCKET_EDGES_MM2
        .iter()
        .enumerate()
        .map(|(i, &lower)| AreaBucket {
            lower_mm2: lower,
            upper_mm2: AREA_BUCKET_EDGES_MM2.get(i + 1).copied(),
            count: 0,
            percent: 0.0,
        })
        .collect();
    let mut missing_area = Vec::new();
    let mut counted = 0;
    for r in records {
        match r.extended.area_mm2 {
            Some(a) => {
                if let Some(b) = buckets.iter_mut().find(|b| b.contains(a)) {
                    b.count += 1;
                    counted += 1;
                }
            }
            None => missing_area.push(r.design_id.clone()),
        }
    }
    if counted > 0 {
        for b in &mut buckets {
            b.percent = 100.0 * b.count as f64 / counted as f64;
        }
    }
    AreaBucketStats {
        buckets,
        counted,
        missing_area,
    }
}

impl fmt::Display for AreaBucketStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<18} {:>9}", "Area (A) [mm²]", "Designs")?;
        for b in &self.buckets {
            writeln!(f, "{:<18} {:>7.2} %", b.label(), b.percent)?;
        }
        write!(f, "{} records counted", self.counted)?;
        if !self.missing_area.is_empty() {
            write!(
                f,
                ", {} missing area: {}",
                self.missing_area.len(),
                self.missing_area.join(", ")
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProjectGroup {
    pub records: Vec<DesignRecord>,
}

impl ProjectGroup {
    /// A project can serve as a test fold only if it contains a failing run.
    pub fn is_foldable(&self) -> bool {
        self.records.iter().any(|r| r.label == Some(Label::NotFeasible))
    }
}

/// Groups records by project id, keeping input order inside each group.
pub fn split_by_project(records: &[DesignRecord]) -> BTreeMap<String, ProjectGroup> {
    let mut groups: BTreeMap<String, ProjectGroup> = BTreeMap::new();
    for r in records {
        groups.entry(r.project_id.clone()).or_default().records.push(r.clone());
    }
    groups
}
