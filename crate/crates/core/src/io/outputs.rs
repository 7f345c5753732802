//! Output files: the run manifest, posterior draw tables, estimate tables
//! and sealed truth vectors. Every number is written in shortest
//! round-trip decimal form, so identical runs produce identical bytes and
//! loading recovers values exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::accounts::Indicator;
use crate::error::{Error, Result};
use crate::geo::{GeoHierarchy, PeriodCalendar};
use crate::mcmc::{ChainDraws, PosteriorDraws};
use crate::report::{EstimateRow, EstimateTable, GeoScope};

// ---------------------------------------------------------------------
// manifest

/// Reproducibility record for one run: sorted `key=value` lines holding the
/// command, package version, configuration, seed and input digests. No
/// timestamps, so reruns match byte for byte.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    entries: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str) -> Manifest {
        let mut m = Manifest::default();
        m.insert("command", command);
        m.insert("version", env!("CARGO_PKG_VERSION"));
        m
    }

    pub fn insert(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        debug_assert!(!key.contains(['=', '\n']), "manifest key {key:?}");
        debug_assert!(!value.contains('\n'), "manifest value for {key:?}");
        self.entries.insert(key.to_string(), value);
    }

    pub fn insert_file_digest(&mut self, key: &str, path: &Path) -> Result<()> {
        self.insert(key, sha256_file(path)?);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            writeln!(out, "{k}={v}").expect("string write");
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render()).map_err(Error::from)
    }

    pub fn load(path: &Path) -> Result<Manifest> {
        let text = std::fs::read_to_string(path)?;
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: i as u64 + 1,
                msg: format!("not a key=value line: {line:?}"),
            })?;
            entries.insert(k.to_string(), v.to_string());
        }
        Ok(Manifest { entries })
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(sha256_hex(&bytes))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        write!(out, "{b:02x}").expect("string write");
    }
    out
}

// ---------------------------------------------------------------------
// posterior draws

fn chain_file(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("draws_chain_{k}.csv"))
}

/// One wide CSV per chain: an iteration column then one column per
/// parameter, one row per retained draw.
pub fn write_draws(dir: &Path, draws: &PosteriorDraws) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let names = draws.names();
    let mut paths = Vec::new();
    for (k, chain) in draws.chains().iter().enumerate() {
        let mut out = String::from("iteration");
        for name in names {
            debug_assert!(!name.contains([',', '"', '\n']), "parameter name {name:?}");
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for d in 0..chain.n_draws {
            write!(out, "{d}").expect("string write");
            let row = &chain.values[d * names.len()..(d + 1) * names.len()];
            for v in row {
                write!(out, ",{v}").expect("string write");
            }
            out.push('\n');
        }
        let path = chain_file(dir, k);
        std::fs::write(&path, out)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Load the chain files written by [`write_draws`]. Sampler adaptation
/// metadata is not persisted; only the draws themselves come back.
pub fn load_draws(dir: &Path) -> Result<PosteriorDraws> {
    let mut chains = Vec::new();
    let mut names: Vec<String> = Vec::new();
    for k in 0.. {
        let path = chain_file(dir, k);
        if !path.exists() {
            break;
        }
        let mut rdr = csv::ReaderBuilder::new()
            .from_path(&path)
            .map_err(|e| Error::Parse {
                path: path.clone(),
                line: 0,
                msg: e.to_string(),
            })?;
        let headers = rdr.headers().map_err(|e| Error::Parse {
            path: path.clone(),
            line: 1,
            msg: e.to_string(),
        })?;
        let file_names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        if k == 0 {
            names = file_names;
        } else if names != file_names {
            return Err(Error::Structural(format!(
                "chain {k} draws carry different parameters than chain 0"
            )));
        }
        let mut values = Vec::new();
        let mut n_draws = 0;
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Parse {
                path: path.clone(),
                line: e.position().map_or(0, |p| p.line()),
                msg: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != names.len() + 1 {
                return Err(Error::Parse {
                    path: path.clone(),
                    line,
                    msg: format!("row has {} cells, expected {}", rec.len(), names.len() + 1),
                });
            }
            for cell in rec.iter().skip(1) {
                values.push(cell.parse().map_err(|_| Error::Parse {
                    path: path.clone(),
                    line,
                    msg: format!("{cell:?} is not a number"),
                })?);
            }
            n_draws += 1;
        }
        let dim = names.len();
        chains.push(ChainDraws {
            values,
            n_draws,
            acceptance: vec![f64::NAN; dim],
            step_sizes: vec![f64::NAN; dim],
            seconds: 0.0,
        });
    }
    if chains.is_empty() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("no draws_chain_*.csv under {}", dir.display()),
        )));
    }
    PosteriorDraws::new(names, chains)
}

// ---------------------------------------------------------------------
// estimate tables

const ESTIMATE_HEADER: &str = "level,id,period_start_year,indicator,unit,median,lower80,upper80";

pub fn write_estimates(
    path: &Path,
    table: &EstimateTable,
    geo: &GeoHierarchy,
    cal: &PeriodCalendar,
) -> Result<()> {
    let mut out = String::from(ESTIMATE_HEADER);
    out.push('\n');
    for row in &table.rows {
        let id = row
            .scope
            .external_id(geo)
            .map_or("NA".to_string(), |id| id.to_string());
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            row.scope.level(),
            id,
            cal.period_start_year(row.period)?,
            row.indicator.label(),
            row.indicator.unit(),
            row.median,
            row.lower,
            row.upper,
        )
        .expect("string write");
    }
    std::fs::write(path, out).map_err(Error::from)
}

pub fn load_estimates(
    path: &Path,
    geo: &GeoHierarchy,
    cal: &PeriodCalendar,
) -> Result<EstimateTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: e.to_string(),
        })?;
    let bad = |line: u64, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    {
        let headers = rdr.headers().map_err(|e| bad(1, e.to_string()))?;
        let expected: Vec<&str> = ESTIMATE_HEADER.split(',').collect();
        let got: Vec<&str> = headers.iter().collect();
        if got != expected {
            return Err(bad(1, format!("unexpected columns {got:?}")));
        }
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            bad(e.position().map_or(0, |p| p.line()), e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| rec.get(i).unwrap_or_default();
        let num = |i: usize| -> Result<f64> {
            field(i)
                .parse()
                .map_err(|_| bad(line, format!("{:?} is not a number", field(i))))
        };
        let scope = match field(0) {
            "world" => GeoScope::World,
            "super_region" => GeoScope::SuperRegion(
                geo.super_region_index(
                    field(1).parse().map_err(|_| bad(line, "bad id".into()))?,
                )
                .map_err(|e| bad(line, e.to_string()))?,
            ),
            "region" => GeoScope::Region(
                geo.region_index(field(1).parse().map_err(|_| bad(line, "bad id".into()))?)
                    .map_err(|e| bad(line, e.to_string()))?,
            ),
            "country" => GeoScope::Country(
                geo.country_index(field(1).parse().map_err(|_| bad(line, "bad id".into()))?)
                    .map_err(|e| bad(line, e.to_string()))?,
            ),
            other => return Err(bad(line, format!("unknown level {other:?}"))),
        };
        let year: i32 = field(2)
            .parse()
            .map_err(|_| bad(line, format!("{:?} is not a year", field(2))))?;
        let period = cal
            .period_of_year(year)
            .map_err(|e| bad(line, e.to_string()))?;
        let indicator =
            Indicator::from_label(field(3)).map_err(|e| bad(line, e.to_string()))?;
        if field(4) != indicator.unit() {
            return Err(bad(line, format!("unit {:?} does not match indicator", field(4))));
        }
        rows.push(EstimateRow {
            scope,
            period,
            indicator,
            median: num(5)?,
            lower: num(6)?,
            upper: num(7)?,
        });
    }
    Ok(EstimateTable { rows })
}

// ---------------------------------------------------------------------
// sealed truth

/// Write a parameter vector with its slot names, one `parameter,value` row
/// per slot.
pub fn write_truth(path: &Path, names: &[String], truth: &[f64]) -> Result<()> {
    if names.len() != truth.len() {
        return Err(Error::Structural(format!(
            "{} names for {} truth values",
            names.len(),
            truth.len()
        )));
    }
    let mut out = String::from("parameter,value\n");
    for (name, v) in names.iter().zip(truth) {
        writeln!(out, "{name},{v}").expect("string write");
    }
    std::fs::write(path, out).map_err(Error::from)
}

/// Load a truth file, checking the parameter names against the expected
/// slot order.
pub fn load_truth(path: &Path, names: &[String]) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: e.to_string(),
        })?;
    let mut values = Vec::with_capacity(names.len());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        if i >= names.len() {
            return Err(bad("more parameters than the model has".into()));
        }
        let name = rec.get(0).unwrap_or_default();
        if name != names[i] {
            return Err(bad(format!(
                "parameter {i} is {name:?}, expected {:?}",
                names[i]
            )));
        }
        let cell = rec.get(1).unwrap_or_default();
        values.push(
            cell.parse()
                .map_err(|_| bad(format!("{cell:?} is not a number")))?,
        );
    }
    if values.len() != names.len() {
        return Err(Error::Structural(format!(
            "truth file has {} parameters, model has {}",
            values.len(),
            names.len()
        )));
    }
    Ok(values)
}
