//! Per-image and cross-image aggregation of scale estimates, and the
//! detections/report CSV formats.

use super::{mean_and_std, LaserDetection, ScaleEntry, ScaleError, ScaleEstimate, ScaleMethod};
use crate::geometry::Pixel;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

/// The estimate of one method on one image, with optional pose diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageScale {
    pub image_id: String,
    pub estimate: ScaleEstimate,
    pub rms_px: Option<f64>,
    pub inliers: Option<usize>,
}

impl ImageScale {
    pub fn new(image_id: impl Into<String>, estimate: ScaleEstimate) -> Self {
        Self {
            image_id: image_id.into(),
            estimate,
            rms_px: None,
            inliers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSummary {
    pub image_id: String,
    pub method: ScaleMethod,
    pub per_laser: Vec<ScaleEntry>,
    pub mean: f64,
    pub std: f64,
    pub rms_px: Option<f64>,
    pub inliers: Option<usize>,
}

/// Deviation of one laser's value from its image mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaserDeviation {
    pub image_id: String,
    pub method: ScaleMethod,
    pub key: String,
    pub deviation: f64,
}

/// Cross-image statistics of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: ScaleMethod,
    pub images: usize,
    /// Mean of the per-image means.
    pub mean: f64,
    /// Sample standard deviation of the per-image means.
    pub std: f64,
    /// Sample standard deviation of all per-laser values pooled across images.
    pub pooled_std: f64,
    /// Root mean square of the per-image standard deviations.
    pub within_image_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleReport {
    pub images: Vec<ImageSummary>,
    pub methods: Vec<MethodSummary>,
    pub deviations: Vec<LaserDeviation>,
}

impl ScaleReport {
    pub fn method(&self, method: ScaleMethod) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == method)
    }
}

pub fn aggregate_report(estimates: &[ImageScale]) -> Result<ScaleReport, ScaleError> {
    if estimates.is_empty() {
        return Err(ScaleError::EmptyInput);
    }
    let mut images = Vec::with_capacity(estimates.len());
    let mut deviations = Vec::new();
    let mut by_method: BTreeMap<ScaleMethod, Vec<&ImageScale>> = BTreeMap::new();
    for e in estimates {
        let est = &e.estimate;
        images.push(ImageSummary {
            image_id: e.image_id.clone(),
            method: est.method,
            per_laser: est.entries.clone(),
            mean: est.value,
            std: est.std,
            rms_px: e.rms_px,
            inliers: e.inliers,
        });
        for x in &est.entries {
            deviations.push(LaserDeviation {
                image_id: e.image_id.clone(),
                method: est.method,
                key: x.key.clone(),
                deviation: x.s - est.value,
            });
        }
        by_method.entry(est.method).or_default().push(e);
    }
    let methods = by_method
        .into_iter()
        .map(|(method, list)| {
            let means: Vec<f64> = list.iter().map(|e| e.estimate.value).collect();
            let pooled: Vec<f64> = list
                .iter()
                .flat_map(|e| e.estimate.entries.iter().map(|x| x.s))
                .collect();
            let (mean, std) = mean_and_std(&means);
            let (_, pooled_std) = mean_and_std(&pooled);
            let within = (list.iter().map(|e| e.estimate.std.powi(2)).sum::<f64>() / list.len() as f64).sqrt();
            MethodSummary {
                method,
                images: list.len(),
                mean,
                std,
                pooled_std,
                within_image_std: within,
            }
        })
        .collect();
    Ok(ScaleReport {
        images,
        methods,
        deviations,
    })
}

const REPORT_HEADER: [&str; 14] = [
    "row",
    "image_id",
    "method",
    "key",
    "s",
    "m",
    "m_hat",
    "mean",
    "std",
    "n",
    "rms_px",
    "inliers",
    "pooled_std",
    "within_image_std",
];

/// Writes the report in long form. Each row has a `row` kind:
/// `laser` (one value), `image` (per-image mean/std) or `summary`
/// (cross-image statistics). Optional `#` comment lines come first. Laser
/// values are written exactly so that a report can be re-aggregated.
pub fn write_report_csv<W: Write>(report: &ScaleReport, comments: &[String], out: W) -> Result<(), ScaleError> {
    let mut out = out;
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| ScaleError::Io(std::io::Error::other(e));
    w.write_record(REPORT_HEADER).map_err(io)?;
    let f9 = |x: f64| format!("{x:.9}");
    for img in &report.images {
        let method = img.method.name().to_string();
        for e in &img.per_laser {
            w.write_record([
                "laser".into(),
                img.image_id.clone(),
                method.clone(),
                e.key.clone(),
                e.s.to_string(),
                e.m.to_string(),
                e.m_hat.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ])
            .map_err(io)?;
        }
        w.write_record([
            "image".into(),
            img.image_id.clone(),
            method,
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            f9(img.mean),
            f9(img.std),
            img.per_laser.len().to_string(),
            img.rms_px.map(|v| format!("{v:.6}")).unwrap_or_default(),
            img.inliers.map(|n| n.to_string()).unwrap_or_default(),
            String::new(),
            String::new(),
        ])
        .map_err(io)?;
    }
    for m in &report.methods {
        w.write_record([
            "summary".into(),
            String::new(),
            m.method.name().into(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            f9(m.mean),
            f9(m.std),
            m.images.to_string(),
            String::new(),
            String::new(),
            f9(m.pooled_std),
            f9(m.within_image_std),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct ReportRow {
    row: String,
    image_id: String,
    method: String,
    key: String,
    s: Option<f64>,
    m: Option<f64>,
    m_hat: Option<f64>,
    rms_px: Option<f64>,
    inliers: Option<usize>,
}

/// Reads the per-laser and per-image rows of reports written by
/// [`write_report_csv`] back into estimates, in file order. Summary rows are
/// ignored; they follow from the rest.
pub fn read_report_csv(path: &Path) -> Result<Vec<ImageScale>, ScaleError> {
    let parse_err = |message: String| ScaleError::Parse {
        path: path.display().to_string(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_err(e.to_string()))?;
    let mut order: Vec<(String, ScaleMethod)> = Vec::new();
    let mut entries: BTreeMap<(String, ScaleMethod), Vec<ScaleEntry>> = BTreeMap::new();
    let mut diagnostics: BTreeMap<(String, ScaleMethod), (Option<f64>, Option<usize>)> = BTreeMap::new();
    for (i, row) in reader.deserialize::<ReportRow>().enumerate() {
        let row = row.map_err(|e| parse_err(format!("row {}: {e}", i + 1)))?;
        if row.row == "summary" {
            continue;
        }
        let method: ScaleMethod = row.method.parse().map_err(|e| parse_err(format!("row {}: {e}", i + 1)))?;
        let id = (row.image_id.clone(), method);
        if !entries.contains_key(&id) {
            order.push(id.clone());
            entries.insert(id.clone(), Vec::new());
        }
        match row.row.as_str() {
            "laser" => {
                let need = |x: Option<f64>, name: &str| x.ok_or_else(|| parse_err(format!("row {}: missing {name}", i + 1)));
                entries.get_mut(&id).expect("inserted above").push(ScaleEntry {
                    key: row.key,
                    s: need(row.s, "s")?,
                    m: need(row.m, "m")?,
                    m_hat: need(row.m_hat, "m_hat")?,
                });
            }
            "image" => {
                diagnostics.insert(id, (row.rms_px, row.inliers));
            }
            other => return Err(parse_err(format!("row {}: unknown row kind {other:?}", i + 1))),
        }
    }
    order
        .into_iter()
        .map(|id| {
            let list = entries.remove(&id).expect("every id has entries");
            let estimate = ScaleEstimate::from_entries(id.1, list, vec![])
                .map_err(|_| parse_err(format!("image {:?} has no laser rows for {}", id.0, id.1)))?;
            let (rms_px, inliers) = diagnostics.get(&id).copied().unwrap_or((None, None));
            Ok(ImageScale {
                image_id: id.0,
                estimate,
                rms_px,
                inliers,
            })
        })
        .collect()
}

#[derive(Deserialize)]
struct DetectionRow {
    image_id: String,
    beam_id: u32,
    u: f64,
    v: f64,
}

/// Reads `image_id,beam_id,u,v` rows, grouped by image.
pub fn read_detections(path: &Path) -> Result<BTreeMap<String, Vec<LaserDetection>>, ScaleError> {
    let parse_err = |message: String| ScaleError::Parse {
        path: path.display().to_string(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_err(e.to_string()))?;
    let mut out: BTreeMap<String, Vec<LaserDetection>> = BTreeMap::new();
    for (i, row) in reader.deserialize::<DetectionRow>().enumerate() {
        let row = row.map_err(|e| parse_err(format!("row {}: {e}", i + 1)))?;
        let pixel = Pixel::new(row.u, row.v);
        if !pixel.is_finite() {
            return Err(parse_err(format!("row {}: non-finite pixel", i + 1)));
        }
        out.entry(row.image_id)
            .or_default()
            .push(LaserDetection::new(row.beam_id, pixel));
    }
    Ok(out)
}
