//! CSV readers and writers for the six input tables. Files carry headers;
//! column order is free but names are fixed. Missing values use the `NA`
//! token. Readers attach the file path and 1-based line number to every
//! complaint and resolve external ids and calendar years to dense indices.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::accounts::{Group, GroupSizes, Scope, GROUPS, N_GROUPS};
use crate::error::{Error, Result};
use crate::geo::{CountryDef, GeoHierarchy, PeriodCalendar};
use crate::obs::{
    AbortionObservation, AbortionSource, AbortionValue, BirthsObservation, IntentionObservation,
    IntentionQuantity, IntentionValue, MarriedShareObservation, RecallWindow, ShareTreatment,
};

pub const MISSING: &str = "NA";

/// Relative sum tolerance for optional `all`-group totals in the group-size
/// table.
const TOTAL_TOLERANCE: f64 = 5e-3;

// ---------------------------------------------------------------------
// reading machinery

struct Sheet {
    path: PathBuf,
    cols: HashMap<String, usize>,
    rows: Vec<(u64, csv::StringRecord)>,
}

impl Sheet {
    fn open(path: &Path, required: &[&str], optional: &[&str]) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .flexible(false)
            .from_path(path)
            .map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                msg: e.to_string(),
            })?;
        let headers = rdr.headers().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: e.to_string(),
        })?;
        let mut cols = HashMap::new();
        for (i, h) in headers.iter().enumerate() {
            if cols.insert(h.to_string(), i).is_some() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: 1,
                    msg: format!("duplicate column {h:?}"),
                });
            }
        }
        for name in required {
            if !cols.contains_key(*name) {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: 1,
                    msg: format!("missing column {name:?}"),
                });
            }
        }
        for name in cols.keys() {
            if !required.contains(&name.as_str()) && !optional.contains(&name.as_str()) {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: 1,
                    msg: format!("unknown column {name:?}"),
                });
            }
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: e
                    .position()
                    .map_or(0, |p| p.line()),
                msg: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            rows.push((line, rec));
        }
        Ok(Sheet {
            path: path.to_path_buf(),
            cols,
            rows,
        })
    }

    fn bad(&self, line: u64, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            msg: msg.into(),
        }
    }

    fn cell<'r>(&self, line: u64, rec: &'r csv::StringRecord, col: &str) -> Result<&'r str> {
        let idx = *self
            .cols
            .get(col)
            .ok_or_else(|| self.bad(line, format!("column {col:?} absent")))?;
        rec.get(idx)
            .ok_or_else(|| self.bad(line, format!("row too short for column {col:?}")))
    }

    /// A cell that may carry the missing token.
    fn opt<'r>(&self, line: u64, rec: &'r csv::StringRecord, col: &str) -> Result<Option<&'r str>> {
        let s = self.cell(line, rec, col)?;
        Ok(if s == MISSING || s.is_empty() { None } else { Some(s) })
    }

    fn required<'r>(&self, line: u64, rec: &'r csv::StringRecord, col: &str) -> Result<&'r str> {
        self.opt(line, rec, col)?
            .ok_or_else(|| self.bad(line, format!("column {col:?} must carry a value")))
    }

    fn f64(&self, line: u64, rec: &csv::StringRecord, col: &str) -> Result<f64> {
        let s = self.required(line, rec, col)?;
        s.parse()
            .map_err(|_| self.bad(line, format!("column {col:?}: {s:?} is not a number")))
    }

    fn opt_f64(&self, line: u64, rec: &csv::StringRecord, col: &str) -> Result<Option<f64>> {
        match self.opt(line, rec, col)? {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|_| self.bad(line, format!("column {col:?}: {s:?} is not a number"))),
        }
    }

    fn u32(&self, line: u64, rec: &csv::StringRecord, col: &str) -> Result<u32> {
        let s = self.required(line, rec, col)?;
        s.parse()
            .map_err(|_| self.bad(line, format!("column {col:?}: {s:?} is not a whole number")))
    }

    fn i32(&self, line: u64, rec: &csv::StringRecord, col: &str) -> Result<i32> {
        let s = self.required(line, rec, col)?;
        s.parse()
            .map_err(|_| self.bad(line, format!("column {col:?}: {s:?} is not a year")))
    }

    fn bool(&self, line: u64, rec: &csv::StringRecord, col: &str) -> Result<bool> {
        match self.required(line, rec, col)? {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(self.bad(
                line,
                format!("column {col:?}: {other:?} is not true or false"),
            )),
        }
    }

    fn country(
        &self,
        line: u64,
        rec: &csv::StringRecord,
        geo: &GeoHierarchy,
    ) -> Result<usize> {
        let id = self.u32(line, rec, "country_id")?;
        geo.country_index(id)
            .map_err(|_| self.bad(line, format!("unknown country id {id}")))
    }

    fn year_offset(
        &self,
        line: u64,
        rec: &csv::StringRecord,
        cal: &PeriodCalendar,
        col: &str,
    ) -> Result<usize> {
        let y = self.i32(line, rec, col)?;
        cal.year_offset(y)
            .map_err(|_| self.bad(line, format!("year {y} outside the calendar")))
    }

    fn period(
        &self,
        line: u64,
        rec: &csv::StringRecord,
        cal: &PeriodCalendar,
    ) -> Result<usize> {
        let y = self.i32(line, rec, "period_start_year")?;
        let p = cal
            .period_of_year(y)
            .map_err(|_| self.bad(line, format!("year {y} outside the calendar")))?;
        if cal.period_start_year(p)? != y {
            return Err(self.bad(line, format!("year {y} is not a period start")));
        }
        Ok(p)
    }
}

// ---------------------------------------------------------------------
// hierarchy

pub fn read_hierarchy(path: &Path) -> Result<GeoHierarchy> {
    let sheet = Sheet::open(
        path,
        &["country_id", "country_name", "region_id", "super_region_id"],
        &[],
    )?;
    let mut rows = Vec::with_capacity(sheet.rows.len());
    for (line, rec) in &sheet.rows {
        rows.push(CountryDef {
            id: sheet.u32(*line, rec, "country_id")?,
            name: sheet.required(*line, rec, "country_name")?.to_string(),
            region_id: sheet.u32(*line, rec, "region_id")?,
            super_region_id: sheet.u32(*line, rec, "super_region_id")?,
        });
    }
    GeoHierarchy::new(rows)
}

pub fn write_hierarchy(path: &Path, geo: &GeoHierarchy) -> Result<()> {
    let mut out = String::from("country_id,country_name,region_id,super_region_id\n");
    for c in 0..geo.n_countries() {
        let r = geo.region_of_country(c);
        writeln!(
            out,
            "{},{},{},{}",
            geo.country_id(c),
            csv_field(geo.country_name(c)),
            geo.region_id(r),
            geo.super_region_id(geo.super_of_region(r)),
        )
        .expect("string write");
    }
    std::fs::write(path, out).map_err(Error::from)
}

// ---------------------------------------------------------------------
// group sizes

/// Reads the full (country, year, group) grid. Rows with the `all` label
/// are optional totals; when present they must match the group sum within
/// half a percent.
pub fn read_group_sizes(
    path: &Path,
    geo: &GeoHierarchy,
    cal: &PeriodCalendar,
) -> Result<GroupSizes> {
    let sheet = Sheet::open(path, &["country_id", "year", "group_label", "women_count"], &[])?;
    let n_c = geo.n_countries();
    let n_t = cal.n_years();
    let mut counts = vec![f64::NAN; n_c * n_t * N_GROUPS];
    let mut totals: Vec<Option<(u64, f64)>> = vec![None; n_c * n_t];

    for (line, rec) in &sheet.rows {
        let line = *line;
        let c = sheet.country(line, rec, geo)?;
        let t = sheet.year_offset(line, rec, cal, "year")?;
        let label = sheet.required(line, rec, "group_label")?;
        let count = sheet.f64(line, rec, "women_count")?;
        if label == "all" {
            if totals[c * n_t + t].replace((line, count)).is_some() {
                return Err(sheet.bad(line, "duplicate total row for this country-year"));
            }
            continue;
        }
        let g = Group::from_label(label).map_err(|e| sheet.bad(line, e.to_string()))?;
        let cell = &mut counts[(c * n_t + t) * N_GROUPS + g.index()];
        if !cell.is_nan() {
            return Err(sheet.bad(
                line,
                format!("duplicate row for this country-year and group {label:?}"),
            ));
        }
        *cell = count;
    }

    for c in 0..n_c {
        for t in 0..n_t {
            let mut sum = 0.0;
            for g in GROUPS {
                let v = counts[(c * n_t + t) * N_GROUPS + g.index()];
                if v.is_nan() {
                    return Err(Error::Structural(format!(
                        "group sizes missing for country {}, year {}, group {}",
                        geo.country_id(c),
                        cal.first_year() + t as i32,
                        g.label()
                    )));
                }
                sum += v;
            }
            if let Some((line, total)) = totals[c * n_t + t] {
                let scale = total.abs().max(1.0);
                if ((sum - total) / scale).abs() > TOTAL_TOLERANCE {
                    return Err(sheet.bad(
                        line,
                        format!(
                            "groups for country {} year {} sum to {sum}, stated total {total}",
                            geo.country_id(c),
                            cal.first_year() + t as i32
                        ),
                    ));
                }
            }
        }
    }
    GroupSizes::new(geo, cal, counts)
}

pub fn write_group_sizes(
    path: &Path,
    geo: &GeoHierarchy,
    cal: &PeriodCalendar,
    sizes: &GroupSizes,
) -> Result<()> {
    let mut out = String::from("country_id,year,group_label,women_count\n");
    for c in 0..geo.n_countries() {
        for t in 0..cal.n_years() {
            for g in GROUPS {
                writeln!(
                    out,
                    "{},{},{},{}",
                    geo.country_id(c),
                    cal.first_year() + t as i32,
                    g.label(),
                    sizes.w(c, t, g.index()),
                )
                .expect("string write");
            }
        }
    }
    std::fs::write(path, out).map_err(Error::from)
}

// ---------------------------------------------------------------------
// births

pub fn read_births(
    path: &Path,
    geo: &GeoHierarchy,
    cal: &PeriodCalendar,
) -> Result<Vec<BirthsObservation>> {
    let sheet = Sheet::open(
        path,
        &["country_id", "period_start_year", "births", "vr_quality"],
        &[],
    )?;
    let mut rows = Vec::with_capacity(sheet.rows.len());
    for (line, rec) in &sheet.rows {
        rows.push(BirthsObservation {
            country: sheet.country(*line, rec, geo)?,
            period: sheet.period(*line, rec, cal)?,
            births: sheet.f64(*line, rec, "births")?,
            vr_quality: sheet.bool(*line, rec, "vr_quality")?,
        });
    }
    Ok(rows)
}

pub fn write_births(
    path: &Path,
    geo: &GeoHierarchy,
    cal: &PeriodCalendar,
    rows: &[BirthsObservation],
) -> Result<()> {
    let mut out = String::from("country_id,period_start_year,births,vr_quality\n");
    for o in rows {
        writeln!(
            out,
            "{},{},{},{}",
            geo.country_id(o.country),
            cal.period_start_year(o.period)?,
            o.births,
            o.vr_quality,
        )
        .expect("string write");
    }
    std::fs::write(path, out).map_err(Error::from)
}

// ---------------------------------------------------------------------
// intention observations

pub fn read_intention(
    path: &Path,
    geo: &GeoHierarchy,
    cal: &PeriodCalendar,
) -> Result<Vec<IntentionObservation>> {
    let sheet = Sheet::open(
        path,
        &[
            "country_id",
            "year_start",
            "year_end",
            "scope",
            "quantity",
            "recall_years",
            "value",
            "value_min",
            "value_max",
            "sampling_variance",
            "representative",
            "treatment",
        ],
        &[],
    )?;
    let mut rows = Vec::with_capacity(sheet.rows.len());
    for (line, rec) in &sheet.rows {
        let line = *line;
        let country = sheet.country(line, rec, geo)?;
        let year_lo = sheet.year_offset(line, rec, cal, "year_start")?;
        let year_hi = sheet.year_offset(line, rec, cal, "year_end")?;
        if year_hi < year_lo {
            return Err(sheet.bad(line, "year_end earlier than year_start"));
        }
        let scope = Scope::from_label(sheet.required(line, rec, "scope")?)
            .map_err(|e| sheet.bad(line, e.to_string()))?;
        let quantity = IntentionQuantity::from_label(sheet.required(line, rec, "quantity")?)
            .map_err(|e| sheet.bad(line, e.to_string()))?;
        let recall = match sheet.opt(line, rec, "recall_years")? {
            None => RecallWindow::OneYear,
            Some(s) => {
                let d: u8 = s.parse().map_err(|_| {
                    sheet.bad(line, format!("recall_years {s:?} is not a whole number"))
                })?;
                RecallWindow::from_years(d).map_err(|e| sheet.bad(line, e.to_string()))?
            }
        };
        let value = sheet.opt_f64(line, rec, "value")?;
        let value_min = sheet.opt_f64(line, rec, "value_min")?;
        let value_max = sheet.opt_f64(line, rec, "value_max")?;
        let value = match sheet.required(line, rec, "treatment")? {
            "point" => {
                if value_min.is_some() || value_max.is_some() {
                    return Err(sheet.bad(line, "point treatment with range columns set"));
                }
                IntentionValue::Point(
                    value.ok_or_else(|| sheet.bad(line, "point treatment needs value"))?,
                )
            }
            "range" => {
                if value.is_some() {
                    return Err(sheet.bad(line, "range treatment with point value set"));
                }
                IntentionValue::Range {
                    min: value_min
                        .ok_or_else(|| sheet.bad(line, "range treatment needs value_min"))?,
                    max: value_max
                        .ok_or_else(|| sheet.bad(line, "range treatment needs value_max"))?,
                }
            }
            other => return Err(sheet.bad(line, format!("unknown treatment {other:?}"))),
        };
        rows.push(IntentionObservation {
            country,
            year_lo,
            year_hi,
            scope,
            quantity,
            recall,
            value,
            sampling_variance: sheet.f64(line, rec, "sampling_variance")?,
            representative: sheet.bool(line, rec, "representative")?,
        });
    }
    Ok(rows)
}

pub fn write_intention(
    path: &Path,
    geo: &GeoHierarchy,
    cal: &PeriodCalendar,
    rows: &[IntentionObservation],
) -> Result<()> {
    let mut out = String::from(
        "country_id,year_start,year_end,scope,quantity,recall_years,value,value_min,value_max,\
         sampling_variance,representative,treatment\n",
    );
    for o in rows {
        let (value, min, max) = match o.value {
            IntentionValue::Point(y) => (y.to_string(), MISSING.into(), MISSING.into()),
            IntentionValue::Range { min, max } => {
                (MISSING.into(), min.to_string(), max.to_string())
            }
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            geo.country_id(o.country),
            cal.first_year() + o.year_lo as i32,
            cal.first_year() + o.year_hi as i32,
            o.scope.label(),
            o.quantity.label(),
            o.recall.years(),
            value,
            min,
            max,
            o.sampling_variance,
            o.representative,
            o.value.treatment_label(),
        )
        .expect("string write");
    }
    std::fs::write(path, out).map_err(Error::from)
}

// ---------------------------------------------------------------------
// abortion observations

fn source_treatment(source: AbortionSource) -> &'static str {
    match source {
        AbortionSource::OfficialMinimum => "minimum",
        AbortionSource::Maximum => "maximum",
        AbortionSource::Range => "range",
        _ => "point",
    }
}

pub fn read_abortion(
    path: &Path,
    geo: &GeoHierarchy,
    cal: &PeriodCalendar,
) -> Result<Vec<AbortionObservation>> {
    let sheet = Sheet::open(
        path,
        &[
            "country_id",
            "period_start_year",
            "scope",
            "count",
            "count_min",
            "count_max",
            "source",
            "e_flag",
            "indirect_b",
            "treatment",
        ],
        &["spontaneous_adjusted"],
    )?;
    let mut rows = Vec::with_capacity(sheet.rows.len());
    for (line, rec) in &sheet.rows {
        let line = *line;
        let country = sheet.country(line, rec, geo)?;
        let period = sheet.period(line, rec, cal)?;
        let scope = Scope::from_label(sheet.required(line, rec, "scope")?)
            .map_err(|e| sheet.bad(line, e.to_string()))?;
        let source = AbortionSource::from_label(sheet.required(line, rec, "source")?)
            .map_err(|e| sheet.bad(line, e.to_string()))?;
        let treatment = sheet.required(line, rec, "treatment")?;
        if treatment != source_treatment(source) {
            return Err(sheet.bad(
                line,
                format!(
                    "source {:?} is treated as {:?}, row says {treatment:?}",
                    source.label(),
                    source_treatment(source)
                ),
            ));
        }
        let count = sheet.opt_f64(line, rec, "count")?;
        let count_min = sheet.opt_f64(line, rec, "count_min")?;
        let count_max = sheet.opt_f64(line, rec, "count_max")?;
        let count = if source == AbortionSource::Range {
            if count.is_some() {
                return Err(sheet.bad(line, "range source with point count set"));
            }
            AbortionValue::Range {
                min: count_min
                    .ok_or_else(|| sheet.bad(line, "range source needs count_min"))?,
                max: count_max
                    .ok_or_else(|| sheet.bad(line, "range source needs count_max"))?,
            }
        } else {
            if count_min.is_some() || count_max.is_some() {
                return Err(sheet.bad(line, "point-count source with range columns set"));
            }
            AbortionValue::Point(
                count.ok_or_else(|| sheet.bad(line, "this source needs count"))?,
            )
        };
        let e_flag = sheet.bool(line, rec, "e_flag")?;
        if e_flag && !source.study_based() {
            return Err(sheet.bad(
                line,
                format!("e_flag applies to study sources, not {:?}", source.label()),
            ));
        }
        let indirect_b = sheet.opt_f64(line, rec, "indirect_b")?;
        match (source, indirect_b) {
            (AbortionSource::Indirect, None) => {
                return Err(sheet.bad(line, "indirect source needs indirect_b"))
            }
            (AbortionSource::Indirect, Some(_)) => {}
            (_, Some(_)) => {
                return Err(sheet.bad(line, "indirect_b only applies to the indirect source"))
            }
            _ => {}
        }
        if sheet.cols.contains_key("spontaneous_adjusted") {
            // provenance marker from the minima preparation step; validated
            // but not modeled
            let adjusted = match sheet.opt(line, rec, "spontaneous_adjusted")? {
                None | Some("false") => false,
                Some("true") => true,
                Some(o) => {
                    return Err(sheet.bad(
                        line,
                        format!("spontaneous_adjusted: {o:?} is not true or false"),
                    ))
                }
            };
            if adjusted && source != AbortionSource::OfficialMinimum {
                return Err(sheet.bad(
                    line,
                    "spontaneous_adjusted marks prepared official minima only",
                ));
            }
        }
        rows.push(AbortionObservation {
            country,
            period,
            scope,
            count,
            source,
            nonrepresentative_study: e_flag,
            indirect_multiplier: indirect_b,
        });
    }
    Ok(rows)
}

pub fn write_abortion(
    path: &Path,
    geo: &GeoHierarchy,
    cal: &PeriodCalendar,
    rows: &[AbortionObservation],
) -> Result<()> {
    let mut out = String::from(
        "country_id,period_start_year,scope,count,count_min,count_max,source,e_flag,indirect_b,\
         treatment\n",
    );
    for o in rows {
        let (count, min, max) = match o.count {
            AbortionValue::Point(y) => (y.to_string(), MISSING.into(), MISSING.into()),
            AbortionValue::Range { min, max } => (MISSING.into(), min.to_string(), max.to_string()),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            geo.country_id(o.country),
            cal.period_start_year(o.period)?,
            o.scope.label(),
            count,
            min,
            max,
            o.source.label(),
            o.nonrepresentative_study,
            o.indirect_multiplier
                .map_or(MISSING.into(), |b| b.to_string()),
            source_treatment(o.source),
        )
        .expect("string write");
    }
    std::fs::write(path, out).map_err(Error::from)
}

// ---------------------------------------------------------------------
// married-share observations

pub fn read_married_share(
    path: &Path,
    geo: &GeoHierarchy,
    cal: &PeriodCalendar,
) -> Result<Vec<MarriedShareObservation>> {
    let sheet = Sheet::open(path, &["country_id", "year", "value", "treatment"], &[])?;
    let mut rows = Vec::with_capacity(sheet.rows.len());
    for (line, rec) in &sheet.rows {
        rows.push(MarriedShareObservation {
            country: sheet.country(*line, rec, geo)?,
            year: sheet.year_offset(*line, rec, cal, "year")?,
            value: sheet.f64(*line, rec, "value")?,
            treatment: ShareTreatment::from_label(sheet.required(*line, rec, "treatment")?)
                .map_err(|e| sheet.bad(*line, e.to_string()))?,
        });
    }
    Ok(rows)
}

pub fn write_married_share(
    path: &Path,
    geo: &GeoHierarchy,
    cal: &PeriodCalendar,
    rows: &[MarriedShareObservation],
) -> Result<()> {
    let mut out = String::from("country_id,year,value,treatment\n");
    for o in rows {
        writeln!(
            out,
            "{},{},{},{}",
            geo.country_id(o.country),
            cal.first_year() + o.year as i32,
            o.value,
            o.treatment.label(),
        )
        .expect("string write");
    }
    std::fs::write(path, out).map_err(Error::from)
}

/// Quote a text field when it holds CSV structure characters.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
