//! Annotation files in, per-item ambiguity reports out.
//!
//! Raw records have the columns `item_id`, `annotator_id` (may be empty) and
//! `response`, either as CSV with a header row or as JSON lines with the same
//! keys. Pre-aggregated counts are read from CSV with an `item_id` column and
//! one column per label, can't-solve included.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frequentist::{plugin_estimate, CountVector};
use crate::measures::{CategorySchema, MeasureKind};
use crate::numerics::rng::{derive_seed, hash_str};
use crate::numerics::DirichletParams;
use crate::posterior_analytics::{expected_amb, expected_amb_modified, posterior_update};
use crate::posterior_sampling::{sample_transformed, summarize};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordFormat {
    Jsonl,
    Csv,
}

impl RecordFormat {
    /// `.jsonl`/`.ndjson`/`.json` read as JSON lines, anything else as CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("jsonl" | "ndjson" | "json") => RecordFormat::Jsonl,
            _ => RecordFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub item_id: String,
    #[serde(default)]
    pub annotator_id: Option<String>,
    pub response: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoadedDataset {
    pub items: BTreeMap<String, CountVector>,
    /// Records repeating an (item, annotator) pair already seen.
    pub duplicate_pairs: usize,
    /// Rows dropped for unknown labels when skipping is enabled.
    pub skipped_rows: Vec<(usize, String)>,
}

struct Aggregator<'a> {
    schema: &'a CategorySchema,
    skip_unknown: bool,
    seen: HashSet<(String, String)>,
    data: LoadedDataset,
    rows: usize,
}

impl<'a> Aggregator<'a> {
    fn new(schema: &'a CategorySchema, skip_unknown: bool) -> Self {
        Self { schema, skip_unknown, seen: HashSet::new(), data: LoadedDataset::default(), rows: 0 }
    }

    fn push(&mut self, row: usize, rec: AnnotationRecord) -> Result<()> {
        self.rows += 1;
        if rec.item_id.is_empty() {
            return Err(Error::MalformedRow { row, msg: "empty item_id".into() });
        }
        let Some(category) = self.schema.classify(&rec.response) else {
            if self.skip_unknown {
                self.data.skipped_rows.push((row, rec.response));
                return Ok(());
            }
            return Err(Error::UnknownLabel { row, label: rec.response });
        };
        if let Some(annotator) = rec.annotator_id.filter(|a| !a.is_empty()) {
            if !self.seen.insert((rec.item_id.clone(), annotator)) {
                self.data.duplicate_pairs += 1;
            }
        }
        let c = self.schema.num_categories();
        self.data.items.entry(rec.item_id).or_insert_with(|| CountVector::zeros(c)).increment(category);
        Ok(())
    }

    fn finish(self) -> Result<LoadedDataset> {
        if self.rows == 0 {
            return Err(Error::EmptyFile);
        }
        Ok(self.data)
    }
}

/// Reads raw annotation records and counts responses per item.
pub fn load_records(
    path: &Path,
    format: RecordFormat,
    schema: &CategorySchema,
    skip_unknown: bool,
) -> Result<LoadedDataset> {
    let file = File::open(path)?;
    match format {
        RecordFormat::Csv => read_records_csv(file, schema, skip_unknown),
        RecordFormat::Jsonl => read_records_jsonl(BufReader::new(file), schema, skip_unknown),
    }
}

pub fn read_records_csv<R: Read>(reader: R, schema: &CategorySchema, skip_unknown: bool) -> Result<LoadedDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    for needed in ["item_id", "response"] {
        if !headers.iter().any(|h| h == needed) {
            if headers.is_empty() {
                return Err(Error::EmptyFile);
            }
            return Err(Error::MalformedRow { row: 1, msg: format!("header lacks column {needed:?}") });
        }
    }
    let mut agg = Aggregator::new(schema, skip_unknown);
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec.position().map_or(i + 2, |p| p.line() as usize);
        let parsed: AnnotationRecord =
            rec.deserialize(Some(&headers)).map_err(|e| Error::MalformedRow { row, msg: e.to_string() })?;
        agg.push(row, parsed)?;
    }
    agg.finish()
}

pub fn read_records_jsonl<R: BufRead>(reader: R, schema: &CategorySchema, skip_unknown: bool) -> Result<LoadedDataset> {
    let mut agg = Aggregator::new(schema, skip_unknown);
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = i + 1;
        let parsed: AnnotationRecord =
            serde_json::from_str(&line).map_err(|e| Error::MalformedRow { row, msg: e.to_string() })?;
        agg.push(row, parsed)?;
    }
    agg.finish()
}

/// Reads per-item counts: an `item_id` column plus one column per label.
pub fn load_counts(path: &Path, schema: &CategorySchema) -> Result<BTreeMap<String, CountVector>> {
    read_counts_csv(File::open(path)?, schema)
}

pub fn read_counts_csv<R: Read>(reader: R, schema: &CategorySchema) -> Result<BTreeMap<String, CountVector>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() {
        return Err(Error::EmptyFile);
    }
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MalformedRow { row: 1, msg: format!("header lacks column {name:?}") })
    };
    let id_col = column("item_id")?;
    let label_cols = schema.labels().iter().map(|l| column(l)).collect::<Result<Vec<_>>>()?;
    let cs_col = column(schema.cs_label())?;
    let mut items = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec.position().map_or(i + 2, |p| p.line() as usize);
        let field = |col: usize| -> Result<u64> {
            let raw = rec.get(col).unwrap_or("");
            raw.parse().map_err(|_| Error::MalformedRow { row, msg: format!("invalid count {raw:?}") })
        };
        let id = rec.get(id_col).unwrap_or("").to_string();
        if id.is_empty() {
            return Err(Error::MalformedRow { row, msg: "empty item_id".into() });
        }
        let proper = label_cols.iter().map(|&c| field(c)).collect::<Result<Vec<_>>>()?;
        let counts = CountVector::new(proper, field(cs_col)?);
        if items.insert(id.clone(), counts).is_some() {
            return Err(Error::MalformedRow { row, msg: format!("item {id:?} listed twice") });
        }
    }
    if items.is_empty() {
        return Err(Error::EmptyFile);
    }
    Ok(items)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureScores {
    pub measure: MeasureKind,
    /// `None` for items without annotations.
    pub plugin: Option<f64>,
    pub posterior_mean: f64,
    pub posterior_sd: f64,
    pub credible_lo: f64,
    pub credible_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemReport {
    pub item_id: String,
    pub n_total: u64,
    pub counts: CountVector,
    /// No annotations: the summaries describe the prior.
    pub prior_only: bool,
    pub scores: Vec<MeasureScores>,
}

impl ItemReport {
    pub fn score(&self, measure: MeasureKind) -> Option<&MeasureScores> {
        self.scores.iter().find(|s| s.measure == measure)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreConfig {
    pub prior_beta: f64,
    pub measures: Vec<MeasureKind>,
    pub credible_mass: f64,
    pub mc_samples: usize,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self { prior_beta: 1.0, measures: vec![MeasureKind::New], credible_mass: 0.95, mc_samples: 10_000 }
    }
}

/// Seed for one (item, measure) pair; independent of the other items.
pub fn item_seed(seed: u64, item_id: &str, measure: MeasureKind) -> u64 {
    derive_seed(derive_seed(seed, hash_str(item_id)), measure as u64)
}

pub fn score_item(item_id: &str, counts: &CountVector, config: &ScoreConfig, seed: u64) -> Result<ItemReport> {
    let prior = DirichletParams::symmetric(counts.num_categories(), config.prior_beta)?;
    let post = posterior_update(&prior, counts)?;
    let n_total = counts.total();
    let mut scores = Vec::with_capacity(config.measures.len());
    for &measure in &config.measures {
        let draws = sample_transformed(&post, measure, config.mc_samples, item_seed(seed, item_id, measure))?;
        let summary = summarize(&draws, config.credible_mass)?;
        let posterior_mean = match measure {
            MeasureKind::New => expected_amb(&post),
            MeasureKind::Modified => expected_amb_modified(&post)?,
            MeasureKind::Old => summary.mean,
        };
        scores.push(MeasureScores {
            measure,
            plugin: if n_total == 0 { None } else { Some(plugin_estimate(counts, measure)?) },
            posterior_mean,
            posterior_sd: summary.sd,
            credible_lo: summary.credible_interval.lo,
            credible_hi: summary.credible_interval.hi,
        });
    }
    Ok(ItemReport { item_id: item_id.to_string(), n_total, counts: counts.clone(), prior_only: n_total == 0, scores })
}

/// One report per item, in `item_id` order.
pub fn score_items(
    items: &BTreeMap<String, CountVector>,
    config: &ScoreConfig,
    seed: u64,
) -> Result<Vec<ItemReport>> {
    if config.measures.is_empty() {
        return Err(Error::InvalidParameter("no measures requested".into()));
    }
    items.iter().map(|(id, counts)| score_item(id, counts, config, seed)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankKey {
    Plugin,
    PosteriorMean,
}

impl RankKey {
    fn value(self, s: &MeasureScores) -> Option<f64> {
        match self {
            RankKey::Plugin => s.plugin,
            RankKey::PosteriorMean => Some(s.posterior_mean),
        }
    }
}

/// Sorts by the chosen score, ties by `item_id`. Items without a value (the
/// plug-in of an unannotated item) sort last and never pass a threshold.
pub fn rank_and_filter(
    reports: &[ItemReport],
    key: RankKey,
    measure: MeasureKind,
    threshold: Option<f64>,
    descending: bool,
) -> Result<Vec<ItemReport>> {
    let mut keyed = Vec::with_capacity(reports.len());
    for r in reports {
        let s = r
            .score(measure)
            .ok_or_else(|| Error::MissingField(format!("{measure} scores for item {:?}", r.item_id)))?;
        keyed.push((key.value(s), r));
    }
    keyed.sort_by(|(a, ra), (b, rb)| {
        let by_value = match (a, b) {
            (Some(x), Some(y)) if descending => y.total_cmp(x),
            (Some(x), Some(y)) => x.total_cmp(y),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        };
        by_value.then_with(|| ra.item_id.cmp(&rb.item_id))
    });
    Ok(keyed
        .into_iter()
        .filter(|(v, _)| match (threshold, v) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(t), Some(x)) => {
                if descending {
                    *x >= t
                } else {
                    *x <= t
                }
            }
        })
        .map(|(_, r)| r.clone())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl ReportFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("json") => ReportFormat::Json,
            _ => ReportFormat::Csv,
        }
    }
}

/// Column order of CSV reports: one row per (item, measure).
pub const REPORT_COLUMNS: [&str; 11] = [
    "item_id",
    "n_total",
    "counts",
    "n_cs",
    "prior_only",
    "measure",
    "plugin",
    "posterior_mean",
    "posterior_sd",
    "credible_lo",
    "credible_hi",
];

fn join_counts(c: &[u64]) -> String {
    c.iter().map(u64::to_string).collect::<Vec<_>>().join(";")
}

/// Writes reports in the given order. Floats use the shortest decimal that
/// reads back to the same value.
pub fn write_reports<W: Write>(reports: &[ItemReport], mut out: W, format: ReportFormat) -> Result<()> {
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut out, reports)?;
            writeln!(out)?;
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(REPORT_COLUMNS)?;
            for r in reports {
                for s in &r.scores {
                    w.write_record([
                        r.item_id.clone(),
                        r.n_total.to_string(),
                        join_counts(r.counts.proper()),
                        r.counts.cs().to_string(),
                        r.prior_only.to_string(),
                        s.measure.to_string(),
                        s.plugin.map(|v| v.to_string()).unwrap_or_default(),
                        s.posterior_mean.to_string(),
                        s.posterior_sd.to_string(),
                        s.credible_lo.to_string(),
                        s.credible_hi.to_string(),
                    ])?;
                }
            }
            w.flush()?;
        }
    }
    Ok(())
}

pub fn export_reports(reports: &[ItemReport], path: &Path, format: ReportFormat) -> Result<()> {
    let file = File::create(path)?;
    let mut buf = std::io::BufWriter::new(file);
    write_reports(reports, &mut buf, format)?;
    buf.flush()?;
    Ok(())
}

/// Reads a CSV report back; rows of one item must be adjacent.
pub fn import_reports_csv(path: &Path) -> Result<Vec<ItemReport>> {
    read_reports_csv(File::open(path)?)
}

pub fn read_reports_csv<R: Read>(reader: R) -> Result<Vec<ItemReport>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(REPORT_COLUMNS) {
        return Err(Error::MalformedRow { row: 1, msg: "unexpected report header".into() });
    }
    let mut out: Vec<ItemReport> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let bad = |msg: &str| Error::MalformedRow { row, msg: msg.to_string() };
        let float = |idx: usize| -> Result<f64> { rec[idx].parse().map_err(|_| bad(REPORT_COLUMNS[idx])) };
        let proper = if rec[2].is_empty() {
            vec![]
        } else {
            rec[2].split(';').map(|x| x.parse().map_err(|_| bad("counts"))).collect::<Result<Vec<u64>>>()?
        };
        let counts = CountVector::new(proper, rec[3].parse().map_err(|_| bad("n_cs"))?);
        let scores = MeasureScores {
            measure: rec[5].parse()?,
            plugin: if rec[6].is_empty() { None } else { Some(float(6)?) },
            posterior_mean: float(7)?,
            posterior_sd: float(8)?,
            credible_lo: float(9)?,
            credible_hi: float(10)?,
        };
        match out.last_mut() {
            Some(last) if last.item_id == rec[0] => last.scores.push(scores),
            _ => out.push(ItemReport {
                item_id: rec[0].to_string(),
                n_total: rec[1].parse().map_err(|_| bad("n_total"))?,
                counts,
                prior_only: rec[4].parse().map_err(|_| bad("prior_only"))?,
                scores: vec![scores],
            }),
        }
    }
    Ok(out)
}
