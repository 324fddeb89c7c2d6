//! Rating files, dense index spaces and holdout splits.
//!
//! Users and items are re-indexed densely in first-appearance order, so the
//! same file always yields the same dataset. Splits keep the parent's index
//! space and rating scale: `n`, `m`, `r_max` and `r_min` of a split are those
//! of the dataset it came from.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::sync::Arc;

use indexmap::IndexSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One raw rating record, keyed by external ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Interaction {
    pub user_id: String,
    pub item_id: String,
    pub rating: f64,
    pub timestamp: Option<i64>,
}

/// A rating expressed in dense indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rating {
    pub user: usize,
    pub item: usize,
    pub value: f64,
}

/// What a loader skipped or merged on the way in.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub lines_read: usize,
    pub malformed_lines: usize,
    pub duplicates_dropped: usize,
}

/// Immutable set of indexed interactions plus dimension and scale metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingsDataset {
    ratings: Vec<Rating>,
    users: Arc<IndexSet<String>>,
    items: Arc<IndexSet<String>>,
    r_max: f64,
    r_min: f64,
}

impl RatingsDataset {
    /// Builds a dataset from raw interactions. Duplicate `(user, item)` pairs
    /// keep the last occurrence; the number dropped is returned alongside.
    pub fn from_interactions<I>(interactions: I) -> Result<(Self, usize)>
    where
        I: IntoIterator<Item = Interaction>,
    {
        let mut users = IndexSet::new();
        let mut items = IndexSet::new();
        let mut ratings = Vec::new();
        for it in interactions {
            if !it.rating.is_finite() || it.rating <= 0.0 {
                return Err(Error::Config(format!(
                    "rating {} for ({}, {}) must be finite and > 0",
                    it.rating, it.user_id, it.item_id
                )));
            }
            let (user, _) = users.insert_full(it.user_id);
            let (item, _) = items.insert_full(it.item_id);
            ratings.push(Rating {
                user,
                item,
                value: it.rating,
            });
        }
        let (ratings, dropped) = keep_last(ratings);
        let ds = Self::assemble(ratings, users, items)?;
        Ok((ds, dropped))
    }

    /// Builds a dataset directly from dense indices. External ids are the
    /// decimal indices themselves, so `n` and `m` are exactly the given sizes.
    pub fn from_indexed(n: usize, m: usize, ratings: Vec<Rating>) -> Result<Self> {
        for r in &ratings {
            if r.user >= n || r.item >= m {
                return Err(Error::Config(format!(
                    "rating ({}, {}) outside {n}x{m} index space",
                    r.user, r.item
                )));
            }
            if !r.value.is_finite() || r.value <= 0.0 {
                return Err(Error::Config(format!(
                    "rating {} must be finite and > 0",
                    r.value
                )));
            }
        }
        let users = (0..n).map(|i| i.to_string()).collect();
        let items = (0..m).map(|j| j.to_string()).collect();
        Self::assemble(ratings, users, items)
    }

    fn assemble(
        ratings: Vec<Rating>,
        users: IndexSet<String>,
        items: IndexSet<String>,
    ) -> Result<Self> {
        if ratings.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let (r_min, r_max) = ratings
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r.value), hi.max(r.value))
            });
        Ok(Self {
            ratings,
            users: Arc::new(users),
            items: Arc::new(items),
            r_max,
            r_min,
        })
    }

    /// A dataset over the same index space and rating scale as `self`.
    fn derive(&self, ratings: Vec<Rating>) -> Self {
        Self {
            ratings,
            users: Arc::clone(&self.users),
            items: Arc::clone(&self.items),
            r_max: self.r_max,
            r_min: self.r_min,
        }
    }

    pub fn ratings(&self) -> &[Rating] {
        &self.ratings
    }

    pub fn len(&self) -> usize {
        self.ratings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.is_empty()
    }

    /// Number of distinct users in the index space.
    pub fn n(&self) -> usize {
        self.users.len()
    }

    /// Number of distinct items in the index space.
    pub fn m(&self) -> usize {
        self.items.len()
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn user_index(&self, id: &str) -> Option<usize> {
        self.users.get_index_of(id)
    }

    pub fn item_index(&self, id: &str) -> Option<usize> {
        self.items.get_index_of(id)
    }

    pub fn user_id(&self, index: usize) -> Option<&str> {
        self.users.get_index(index).map(String::as_str)
    }

    pub fn item_id(&self, index: usize) -> Option<&str> {
        self.items.get_index(index).map(String::as_str)
    }

    /// Items rated by each user, in interaction order.
    pub fn items_by_user(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n()];
        for r in &self.ratings {
            out[r.user].push(r.item);
        }
        out
    }

    /// Number of interactions per item.
    pub fn item_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.m()];
        for r in &self.ratings {
            counts[r.item] += 1;
        }
        counts
    }

    /// Seeded uniform holdout. Each interaction goes to the test side with
    /// probability `spec.test_fraction`, drawn in interaction order.
    pub fn split(&self, spec: &SplitSpec) -> Result<Split> {
        spec.validate()?;
        if self.ratings.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut train = Vec::new();
        let mut test = Vec::new();
        for r in &self.ratings {
            if rng.random::<f64>() < spec.test_fraction {
                test.push(*r);
            } else {
                train.push(*r);
            }
        }
        let mut dropped = 0;
        if spec.drop_unseen {
            let mut seen_user = vec![false; self.n()];
            let mut seen_item = vec![false; self.m()];
            for r in &train {
                seen_user[r.user] = true;
                seen_item[r.item] = true;
            }
            let before = test.len();
            test.retain(|r| seen_user[r.user] && seen_item[r.item]);
            dropped = before - test.len();
        }
        if train.is_empty() || test.is_empty() {
            return Err(Error::Split(format!(
                "test_fraction {} over {} interactions leaves train={} test={}",
                spec.test_fraction,
                self.ratings.len(),
                train.len(),
                test.len()
            )));
        }
        Ok(Split {
            train: self.derive(train),
            test: self.derive(test),
            dropped,
        })
    }
}

fn keep_last(ratings: Vec<Rating>) -> (Vec<Rating>, usize) {
    let mut last: HashMap<(usize, usize), usize> = HashMap::with_capacity(ratings.len());
    for (pos, r) in ratings.iter().enumerate() {
        last.insert((r.user, r.item), pos);
    }
    if last.len() == ratings.len() {
        return (ratings, 0);
    }
    let dropped = ratings.len() - last.len();
    let kept = ratings
        .into_iter()
        .enumerate()
        .filter(|(pos, r)| last[&(r.user, r.item)] == *pos)
        .map(|(_, r)| r)
        .collect();
    (kept, dropped)
}

/// Holdout parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
    /// Remove test rows whose user or item never occurs in train.
    pub drop_unseen: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            seed: 42,
            drop_unseen: true,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Split(format!(
                "test_fraction must lie strictly between 0 and 1, got {}",
                self.test_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: RatingsDataset,
    pub test: RatingsDataset,
    /// Test rows removed because their user or item is unseen in train.
    pub dropped: usize,
}

/// Loads a MovieLens `UserID::MovieID::Rating::Timestamp` file.
pub fn load_movielens(path: impl AsRef<Path>) -> Result<(RatingsDataset, LoadReport)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_movielens(BufReader::new(file))
}

/// Parses MovieLens `::`-delimited ratings from any reader.
///
/// Lines with the wrong number of fields are skipped and counted as
/// malformed; a rating that is not a positive number is a hard error.
pub fn read_movielens<R: BufRead>(mut reader: R) -> Result<(RatingsDataset, LoadReport)> {
    let mut report = LoadReport::default();
    let mut interactions = Vec::new();
    let mut buf = Vec::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line_no += 1;
        // The raw files are Latin-1 in places; ids and ratings are ASCII.
        let line = String::from_utf8_lossy(&buf);
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        report.lines_read += 1;
        let fields: Vec<&str> = line.split("::").collect();
        if fields.len() != 4 || fields[0].is_empty() || fields[1].is_empty() {
            report.malformed_lines += 1;
            continue;
        }
        let rating = parse_rating(fields[2], line_no)?;
        let timestamp = match fields[3].trim().parse::<i64>() {
            Ok(t) => Some(t),
            Err(_) => {
                report.malformed_lines += 1;
                continue;
            }
        };
        interactions.push(Interaction {
            user_id: fields[0].trim().to_owned(),
            item_id: fields[1].trim().to_owned(),
            rating,
            timestamp,
        });
    }
    let (dataset, dups) = RatingsDataset::from_interactions(interactions)?;
    report.duplicates_dropped = dups;
    Ok((dataset, report))
}

/// Column layout for delimited rating files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvOptions {
    pub user_col: usize,
    pub item_col: usize,
    pub rating_col: usize,
    pub delimiter: u8,
    pub has_header: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            user_col: 0,
            item_col: 1,
            rating_col: 2,
            delimiter: b',',
            has_header: false,
        }
    }
}

/// Loads a delimited rating file; columns other than user, item and rating
/// are ignored.
pub fn load_csv(
    path: impl AsRef<Path>,
    options: &CsvOptions,
) -> Result<(RatingsDataset, LoadReport)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, options)
}

pub fn read_csv<R: Read>(reader: R, options: &CsvOptions) -> Result<(RatingsDataset, LoadReport)> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(options.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut report = LoadReport::default();
    let mut interactions = Vec::new();
    let needed = options
        .user_col
        .max(options.item_col)
        .max(options.rating_col);
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        report.lines_read += 1;
        if record.len() <= needed {
            return Err(Error::Schema {
                line,
                message: format!(
                    "expected at least {} columns, found {}",
                    needed + 1,
                    record.len()
                ),
            });
        }
        let rating = parse_rating(&record[options.rating_col], line)?;
        interactions.push(Interaction {
            user_id: record[options.user_col].to_owned(),
            item_id: record[options.item_col].to_owned(),
            rating,
            timestamp: None,
        });
    }
    let (dataset, dups) = RatingsDataset::from_interactions(interactions)?;
    report.duplicates_dropped = dups;
    Ok((dataset, report))
}

fn parse_rating(field: &str, line: usize) -> Result<f64> {
    let value: f64 = field.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("rating {:?} is not a number", field.trim()),
    })?;
    if !value.is_finite() || value <= 0.0 {
        return Err(Error::Parse {
            line,
            message: format!("rating {value} must be finite and > 0"),
        });
    }
    Ok(value)
}
