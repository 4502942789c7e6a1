//! Deviation reports: per-item signed deviations with aggregate statistics,
//! their JSON schema and the flat CSV rendering.

use serde::{Deserialize, Serialize};

/// Tags for every measured identity, proof device and scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IdentityId {
    Thm1,
    Thm1Upper,
    Thm1LowerK,
    Thm1LowerC,
    Prop2,
    CorCkc,
    CorKkk,
    CorEmptyB,
    CorEmptyA,
    CorKcEqCc,
    CorFunc,
    LevinFp,
    GacsId,
    PrefixPair,
    Counterex,
    Prop3Fp,
    Prop3Sums,
    RemarkScan,
}

pub const ALL_IDENTITIES: &[IdentityId] = &[
    IdentityId::Thm1,
    IdentityId::Thm1Upper,
    IdentityId::Thm1LowerK,
    IdentityId::Thm1LowerC,
    IdentityId::Prop2,
    IdentityId::CorCkc,
    IdentityId::CorKkk,
    IdentityId::CorEmptyB,
    IdentityId::CorEmptyA,
    IdentityId::CorKcEqCc,
    IdentityId::CorFunc,
    IdentityId::LevinFp,
    IdentityId::GacsId,
    IdentityId::PrefixPair,
    IdentityId::Counterex,
    IdentityId::Prop3Fp,
    IdentityId::Prop3Sums,
    IdentityId::RemarkScan,
];

impl IdentityId {
    pub fn as_str(self) -> &'static str {
        match self {
            IdentityId::Thm1 => "THM1",
            IdentityId::Thm1Upper => "THM1_UPPER",
            IdentityId::Thm1LowerK => "THM1_LOWER_K",
            IdentityId::Thm1LowerC => "THM1_LOWER_C",
            IdentityId::Prop2 => "PROP2",
            IdentityId::CorCkc => "COR_CKC",
            IdentityId::CorKkk => "COR_KKK",
            IdentityId::CorEmptyB => "COR_EMPTY_B",
            IdentityId::CorEmptyA => "COR_EMPTY_A",
            IdentityId::CorKcEqCc => "COR_KC_EQ_CC",
            IdentityId::CorFunc => "COR_FUNC",
            IdentityId::LevinFp => "LEVIN_FP",
            IdentityId::GacsId => "GACS_ID",
            IdentityId::PrefixPair => "PREFIX_PAIR",
            IdentityId::Counterex => "COUNTEREX",
            IdentityId::Prop3Fp => "PROP3_FP",
            IdentityId::Prop3Sums => "PROP3_SUMS",
            IdentityId::RemarkScan => "REMARK_SCAN",
        }
    }

    pub fn from_str_tag(s: &str) -> Option<IdentityId> {
        ALL_IDENTITIES.iter().copied().find(|i| i.as_str() == s)
    }
}

/// Why an item carries no deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exclusion {
    Infinity,
    NotComputed,
}

impl Exclusion {
    pub fn as_str(self) -> &'static str {
        match self {
            Exclusion::Infinity => "Infinity",
            Exclusion::NotComputed => "NotComputed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scale {
    #[serde(rename = "L")]
    pub l: u32,
    #[serde(rename = "P")]
    pub p: u32,
    #[serde(rename = "T")]
    pub t: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub min: i64,
    pub max: i64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportItem {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deviation: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub excluded_reason: Option<String>,
}

/// Per-identity statistics of measured additive constants over an
/// exhaustive range of strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub identity_id: String,
    pub scale: Scale,
    pub machine_fingerprint: String,
    pub stats: Option<Stats>,
    pub coverage: f64,
    pub items: Vec<ReportItem>,
}

impl DeviationReport {
    /// Builds a report from per-item outcomes; stats cover included rows.
    pub fn from_items(
        identity: IdentityId,
        scale: Scale,
        machine_fingerprint: String,
        rows: Vec<(String, Result<i64, Exclusion>)>,
    ) -> Self {
        let items: Vec<ReportItem> = rows
            .into_iter()
            .map(|(id, outcome)| match outcome {
                Ok(dev) => ReportItem {
                    id,
                    deviation: Some(dev),
                    excluded_reason: None,
                },
                Err(reason) => ReportItem {
                    id,
                    deviation: None,
                    excluded_reason: Some(reason.as_str().to_string()),
                },
            })
            .collect();
        let included: Vec<i64> = items.iter().filter_map(|i| i.deviation).collect();
        let stats = if included.is_empty() {
            None
        } else {
            Some(Stats {
                min: *included.iter().min().unwrap(),
                max: *included.iter().max().unwrap(),
                mean: included.iter().sum::<i64>() as f64 / included.len() as f64,
            })
        };
        let coverage = if items.is_empty() {
            0.0
        } else {
            included.len() as f64 / items.len() as f64
        };
        DeviationReport {
            identity_id: identity.as_str().to_string(),
            scale,
            machine_fingerprint,
            stats,
            coverage,
            items,
        }
    }

    pub fn max_abs_deviation(&self) -> Option<i64> {
        self.items
            .iter()
            .filter_map(|i| i.deviation)
            .map(i64::abs)
            .max()
    }

    /// Recomputes stats and coverage from the item rows; used as the
    /// recount oracle in tests.
    pub fn recount(&self) -> (Option<Stats>, f64) {
        let included: Vec<i64> = self.items.iter().filter_map(|i| i.deviation).collect();
        let stats = if included.is_empty() {
            None
        } else {
            Some(Stats {
                min: *included.iter().min().unwrap(),
                max: *included.iter().max().unwrap(),
                mean: included.iter().sum::<i64>() as f64 / included.len() as f64,
            })
        };
        let coverage = if self.items.is_empty() {
            0.0
        } else {
            included.len() as f64 / self.items.len() as f64
        };
        (stats, coverage)
    }
}

const CSV_HEADER: &str =
    "identity_id,L,P,T,machine_fingerprint,min,max,mean,coverage,id,deviation,excluded_reason";

fn csv_quote(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Flattens reports to CSV, one row per item, with the same column names as
/// the JSON schema.
pub fn reports_to_csv(reports: &[DeviationReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        let (min, max, mean) = match &r.stats {
            Some(s) => (s.min.to_string(), s.max.to_string(), s.mean.to_string()),
            None => (String::new(), String::new(), String::new()),
        };
        for item in &r.items {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                csv_quote(&r.identity_id),
                r.scale.l,
                r.scale.p,
                r.scale.t,
                r.machine_fingerprint,
                min,
                max,
                mean,
                r.coverage,
                csv_quote(&item.id),
                item.deviation.map(|d| d.to_string()).unwrap_or_default(),
                item.excluded_reason.clone().unwrap_or_default(),
            ));
        }
    }
    out
}

/// A merged document: reports keyed by identity and scale, all from the
/// same machine fingerprint. Later inputs win on key collisions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MergedReports {
    pub machine_fingerprint: String,
    pub reports: std::collections::BTreeMap<String, DeviationReport>,
}

pub fn report_key(r: &DeviationReport) -> String {
    format!(
        "{}/L{}/P{}/T{}",
        r.identity_id, r.scale.l, r.scale.p, r.scale.t
    )
}

/// Merges report collections; fails with the offending fingerprints when
/// the inputs disagree about the machine.
pub fn merge_reports(batches: Vec<Vec<DeviationReport>>) -> Result<MergedReports, (String, String)> {
    let mut fingerprint: Option<String> = None;
    let mut map = std::collections::BTreeMap::new();
    for batch in batches {
        for r in batch {
            match &fingerprint {
                None => fingerprint = Some(r.machine_fingerprint.clone()),
                Some(f) if *f != r.machine_fingerprint => {
                    return Err((f.clone(), r.machine_fingerprint.clone()))
                }
                _ => {}
            }
            map.insert(report_key(&r), r);
        }
    }
    Ok(MergedReports {
        machine_fingerprint: fingerprint.unwrap_or_default(),
        reports: map,
    })
}
