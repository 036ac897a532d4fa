use std::collections::{BTreeSet, HashSet};
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One labelled item; `values[j]` is feature `j` of the owning dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: String,
    pub size: u64,
    pub label: i64,
    pub values: Vec<f64>,
}

/// Labelled items with every feature evaluated, split into training and
/// test parts.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub items: Vec<Item>,
    test_ids: HashSet<String>,
    labels: Vec<i64>,
}

impl Dataset {
    pub fn new(feature_names: Vec<String>, items: Vec<Item>, test_ids: HashSet<String>) -> Result<Self> {
        for item in &items {
            if item.values.len() != feature_names.len() {
                return Err(Error::invalid(format!(
                    "item {} has {} values for {} features",
                    item.id,
                    item.values.len(),
                    feature_names.len()
                )));
            }
            if item.size == 0 {
                return Err(Error::invalid(format!("item {} has size 0", item.id)));
            }
        }
        let labels: BTreeSet<i64> = items.iter().map(|i| i.label).collect();
        Ok(Self {
            feature_names,
            items,
            test_ids,
            labels: labels.into_iter().collect(),
        })
    }

    /// Reads `id,size,label,<feature>...` CSV and an optional split file
    /// listing one test id per line.
    pub fn from_csv_paths(data: &Path, split: Option<&Path>) -> Result<Self> {
        let test_ids = match split {
            Some(p) => read_split(std::fs::File::open(p)?)?,
            None => HashSet::new(),
        };
        Self::from_csv_reader(std::fs::File::open(data)?, test_ids)
    }

    pub fn from_csv_reader<R: Read>(reader: R, test_ids: HashSet<String>) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        let cols: Vec<&str> = headers.iter().map(str::trim).collect();
        if cols.len() < 3 || cols[0] != "id" || cols[1] != "size" || cols[2] != "label" {
            return Err(Error::invalid("dataset header must start with id,size,label"));
        }
        let feature_names: Vec<String> = cols[3..].iter().map(|s| s.to_string()).collect();
        let mut items = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            let field = |i: usize| record.get(i).map(str::trim).unwrap_or("");
            let bad = |what: &str| Error::invalid(format!("row {}: bad {what}", line + 2));
            let values = (3..record.len())
                .map(|i| field(i).parse::<f64>().map_err(|_| bad(&headers[i])))
                .collect::<Result<Vec<_>>>()?;
            items.push(Item {
                id: field(0).to_string(),
                size: field(1).parse().map_err(|_| bad("size"))?,
                label: field(2).parse().map_err(|_| bad("label"))?,
                values,
            });
        }
        Self::new(feature_names, items, test_ids)
    }

    pub fn num_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Distinct labels, ascending.
    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn label_cardinality(&self) -> usize {
        self.labels.len()
    }

    pub fn is_test(&self, item: &Item) -> bool {
        self.test_ids.contains(&item.id)
    }

    pub fn train_items(&self) -> impl Iterator<Item = &Item> {
        self.items.iter().filter(|i| !self.is_test(i))
    }

    pub fn test_items(&self) -> impl Iterator<Item = &Item> {
        self.items.iter().filter(|i| self.is_test(i))
    }

    /// Median training-item size (lower median for even counts).
    pub fn median_train_size(&self) -> Option<u64> {
        let mut sizes: Vec<u64> = self.train_items().map(|i| i.size).collect();
        if sizes.is_empty() {
            return None;
        }
        sizes.sort_unstable();
        Some(sizes[(sizes.len() - 1) / 2])
    }
}

fn read_split<R: Read>(reader: R) -> Result<HashSet<String>> {
    let mut ids = HashSet::new();
    for line in BufReader::new(reader).lines() {
        let line = line?;
        let id = line.trim();
        if !id.is_empty() && id != "id" {
            ids.insert(id.to_string());
        }
    }
    Ok(ids)
}
