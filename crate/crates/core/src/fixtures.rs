//! Fixture tables: digitized model inputs and published reference values.
//!
//! Every fixture ships embedded in the library. Setting `TDOTAG_FIXTURES`
//! to a directory with the same layout (`diode_iv.csv`, ...,
//! `paper_data/table1.csv`, ...) makes every loader read from there instead.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Environment variable that overrides the fixture root directory.
pub const FIXTURES_ENV: &str = "TDOTAG_FIXTURES";

pub const DIODE_IV: &str = "diode_iv.csv";
pub const DIODE_POWER: &str = "diode_power.csv";
pub const PHOTODIODE_GRID: &str = "photodiode_grid.csv";
pub const TRANSDUCER_ANCHORS: &str = "transducer_anchors.csv";
pub const FLOORS: &str = "floors.csv";
pub const DURABILITY: &str = "durability.csv";
pub const CORRELATION_SERIES: &str = "correlation_series.csv";

macro_rules! embedded {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../fixtures/", $name)))),*]
    };
}

static EMBEDDED: &[(&str, &str)] = embedded![
    "diode_iv.csv",
    "diode_power.csv",
    "photodiode_grid.csv",
    "transducer_anchors.csv",
    "floors.csv",
    "durability.csv",
    "correlation_series.csv",
    "paper_data/table1.csv",
    "paper_data/table3.csv",
    "paper_data/table5.csv",
    "paper_data/table6.csv",
    "paper_data/overlap_day2.csv",
    "paper_data/fig5a.csv",
    "paper_data/fig6b.csv",
    "paper_data/fig7a.csv",
    "paper_data/fig7b.csv",
    "paper_data/fig8b.csv",
    "paper_data/fig9c.csv",
    "paper_data/fig10c.csv",
    "paper_data/fig11c.csv",
    "paper_data/fig12c.csv",
    "paper_data/fig13c.csv",
    "paper_data/fig16.csv",
    "paper_data/fig17.csv",
];

/// Directory named by `TDOTAG_FIXTURES`, if set.
pub fn override_root() -> Option<PathBuf> {
    std::env::var_os(FIXTURES_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

/// Raw text of a fixture, honoring the environment override.
pub fn read(name: &str) -> Result<String> {
    if let Some(root) = override_root() {
        let path = root.join(name);
        return std::fs::read_to_string(&path).map_err(|e| Error::Fixture {
            name: name.to_string(),
            reason: format!("{}: {e}", path.display()),
        });
    }
    EMBEDDED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| text.to_string())
        .ok_or_else(|| Error::Fixture {
            name: name.to_string(),
            reason: "no such embedded fixture".into(),
        })
}

/// Parse CSV text with a header row; lines starting with `#` are comments.
pub fn parse_csv<T: DeserializeOwned>(name: &str, text: &str) -> Result<Vec<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    reader
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| Error::Fixture {
            name: name.to_string(),
            reason: e.to_string(),
        })
}

/// Header line of a CSV fixture (comments skipped).
pub fn header(text: &str) -> Option<&str> {
    text.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with('#'))
}

pub fn load_csv<T: DeserializeOwned>(name: &str) -> Result<Vec<T>> {
    let text = read(name)?;
    parse_csv(name, &text)
}

/// One published cell: `row,column,value,tolerance`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PublishedCell {
    pub row: String,
    pub column: String,
    pub value: f64,
    pub tolerance: f64,
}

/// Published values for one reproduction target, keyed by `(row, column)`.
#[derive(Debug, Clone, Default)]
pub struct PublishedTable {
    pub name: String,
    pub cells: Vec<PublishedCell>,
    index: BTreeMap<(String, String), usize>,
}

impl PublishedTable {
    pub fn load(id: &str) -> Result<Self> {
        let name = format!("paper_data/{id}.csv");
        let cells: Vec<PublishedCell> = load_csv(&name)?;
        let index = cells
            .iter()
            .enumerate()
            .map(|(i, c)| ((c.row.clone(), c.column.clone()), i))
            .collect();
        Ok(Self { name, cells, index })
    }

    pub fn get(&self, row: &str, column: &str) -> Result<&PublishedCell> {
        self.index
            .get(&(row.to_string(), column.to_string()))
            .map(|&i| &self.cells[i])
            .ok_or_else(|| Error::Fixture {
                name: self.name.clone(),
                reason: format!("missing cell ({row}, {column})"),
            })
    }

    pub fn value(&self, row: &str, column: &str) -> Result<f64> {
        Ok(self.get(row, column)?.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_headers_match_the_documented_schema() {
        let expect = [
            (DIODE_IV, "voltage_v,current_a"),
            (DIODE_POWER, "voltage_v,power_w"),
            (PHOTODIODE_GRID, "count,lux,power_w"),
            (TRANSDUCER_ANCHORS, "kind,stimulus,freq_hz,sd_hz"),
        ];
        for (name, hdr) in expect {
            let text = EMBEDDED.iter().find(|(n, _)| *n == name).unwrap().1;
            assert_eq!(header(text), Some(hdr), "{name}");
        }
    }

    #[test]
    fn photodiode_grid_has_exactly_nine_anchors() {
        let text = EMBEDDED.iter().find(|(n, _)| *n == PHOTODIODE_GRID).unwrap().1;
        assert_eq!(text.lines().skip(1).filter(|l| !l.trim().is_empty()).count(), 9);
    }

    #[test]
    fn published_tables_parse() {
        for (name, text) in EMBEDDED.iter().filter(|(n, _)| n.starts_with("paper_data/fig")) {
            let cells: Vec<PublishedCell> = parse_csv(name, text).unwrap();
            assert!(!cells.is_empty(), "{name}");
        }
    }
}
