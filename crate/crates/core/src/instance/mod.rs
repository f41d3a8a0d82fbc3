//! Set cover instances: the covering matrix, costs, and their file formats.

mod cost;
mod generate;
mod native;
mod orlib;

pub use cost::{Cost, ParseCostError, COST_SCALE};
pub use generate::{generate, CostModel, GeneratorConfig, InstanceType};
pub use native::{read_native, to_native_string, from_native_str, write_native, NATIVE_VERSION};
pub use orlib::{parse_orlib, read_orlib, write_orlib};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum InstanceError {
    #[error("row {row} is not covered by any column")]
    EmptyRow { row: usize },
    #[error("column {col} covers no rows")]
    EmptyColumn { col: usize },
    #[error("index {index} out of range (limit {limit}) in {context}")]
    IndexOutOfRange {
        index: usize,
        limit: usize,
        context: &'static str,
    },
    #[error("column {col} has negative cost {cost}")]
    NegativeCost { col: usize, cost: Cost },
    #[error("{what}: expected {expected}, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("token stream ended while reading {reading}")]
    TruncatedStream { reading: String },
    #[error("row {row} declares a non-positive column count {count}")]
    NonPositiveCount { row: usize, count: i64 },
    #[error("invalid token `{token}` while reading {reading}")]
    InvalidToken { token: String, reading: String },
    #[error("{0} unexpected trailing tokens")]
    TrailingData(usize),
    #[error("malformed instance file: {0}")]
    MalformedFile(String),
    #[error("unsupported format version `{found}` (expected `{expected}`)")]
    VersionMismatch {
        found: String,
        expected: &'static str,
    },
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("generator could not meet the configuration: {0}")]
    InfeasibleConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = InstanceError> = std::result::Result<T, E>;

/// A validated set cover instance.
///
/// `rows[i]` lists the columns covering element `i`; `cols[j]` lists the
/// elements covered by column `j`. Both are sorted, duplicate free and
/// exact transposes of each other.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScpInstance {
    name: String,
    rows: Vec<Vec<usize>>,
    cols: Vec<Vec<usize>>,
    costs: Vec<Cost>,
}

impl ScpInstance {
    /// Builds an instance from per-row column lists, canonicalizing order and
    /// duplicates.
    pub fn from_rows(
        name: impl Into<String>,
        m: usize,
        n: usize,
        row_lists: Vec<Vec<usize>>,
        costs: Vec<Cost>,
    ) -> Result<Self> {
        if row_lists.len() != m {
            return Err(InstanceError::LengthMismatch {
                what: "row lists",
                expected: m,
                found: row_lists.len(),
            });
        }
        if costs.len() != n {
            return Err(InstanceError::LengthMismatch {
                what: "costs",
                expected: n,
                found: costs.len(),
            });
        }
        let mut rows = row_lists;
        for row in rows.iter_mut() {
            if let Some(&bad) = row.iter().find(|&&j| j >= n) {
                return Err(InstanceError::IndexOutOfRange {
                    index: bad,
                    limit: n,
                    context: "row list",
                });
            }
            row.sort_unstable();
            row.dedup();
        }
        let mut cols = vec![Vec::new(); n];
        for (i, row) in rows.iter().enumerate() {
            for &j in row {
                cols[j].push(i);
            }
        }
        Self::checked(name.into(), rows, cols, costs)
    }

    /// Builds an instance from per-column row lists.
    pub fn from_columns(
        name: impl Into<String>,
        m: usize,
        col_lists: Vec<Vec<usize>>,
        costs: Vec<Cost>,
    ) -> Result<Self> {
        let n = col_lists.len();
        if costs.len() != n {
            return Err(InstanceError::LengthMismatch {
                what: "costs",
                expected: n,
                found: costs.len(),
            });
        }
        let mut cols = col_lists;
        for col in cols.iter_mut() {
            if let Some(&bad) = col.iter().find(|&&i| i >= m) {
                return Err(InstanceError::IndexOutOfRange {
                    index: bad,
                    limit: m,
                    context: "column list",
                });
            }
            col.sort_unstable();
            col.dedup();
        }
        let mut rows = vec![Vec::new(); m];
        for (j, col) in cols.iter().enumerate() {
            for &i in col {
                rows[i].push(j);
            }
        }
        Self::checked(name.into(), rows, cols, costs)
    }

    fn checked(
        name: String,
        rows: Vec<Vec<usize>>,
        cols: Vec<Vec<usize>>,
        costs: Vec<Cost>,
    ) -> Result<Self> {
        if let Some(row) = rows.iter().position(Vec::is_empty) {
            return Err(InstanceError::EmptyRow { row });
        }
        if let Some(col) = cols.iter().position(Vec::is_empty) {
            return Err(InstanceError::EmptyColumn { col });
        }
        if let Some(col) = costs.iter().position(|c| c.is_negative()) {
            return Err(InstanceError::NegativeCost {
                col,
                cost: costs[col],
            });
        }
        Ok(ScpInstance {
            name,
            rows,
            cols,
            costs,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Number of universe elements.
    pub fn m(&self) -> usize {
        self.rows.len()
    }

    /// Number of candidate sets.
    pub fn n(&self) -> usize {
        self.cols.len()
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn cols(&self) -> &[Vec<usize>] {
        &self.cols
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.rows[i]
    }

    pub fn col(&self, j: usize) -> &[usize] {
        &self.cols[j]
    }

    pub fn costs(&self) -> &[Cost] {
        &self.costs
    }

    pub fn cost(&self, j: usize) -> Cost {
        self.costs[j]
    }

    /// Number of non-zero entries of the covering matrix.
    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    /// Largest cost granularity `g` such that every selection cost is a
    /// multiple of `g` (in internal units). Zero when all costs are zero.
    pub fn cost_granularity(&self) -> i64 {
        fn gcd(a: i64, b: i64) -> i64 {
            if b == 0 {
                a
            } else {
                gcd(b, a % b)
            }
        }
        self.costs.iter().fold(0, |g, c| gcd(g, c.units()))
    }

    pub fn total_cost(&self, cols: impl IntoIterator<Item = usize>) -> Cost {
        cols.into_iter().map(|j| self.costs[j]).sum()
    }
}

/// Fraction of non-zero entries, `q / (m n)`.
pub fn density(inst: &ScpInstance) -> f64 {
    inst.nnz() as f64 / (inst.m() as f64 * inst.n() as f64)
}

/// A set of chosen column indices, kept sorted and duplicate free.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Selection(Vec<usize>);

impl Selection {
    pub fn new(cols: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = cols.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Selection(v)
    }

    pub fn all(n: usize) -> Self {
        Selection((0..n).collect())
    }

    pub fn from_mask(mask: &[bool]) -> Self {
        Selection(
            mask.iter()
                .enumerate()
                .filter_map(|(j, &b)| b.then_some(j))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn to_mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for &j in &self.0 {
            mask[j] = true;
        }
        mask
    }
}

impl FromIterator<usize> for Selection {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Selection::new(iter)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    pub feasible: bool,
    pub cost: Cost,
    pub uncovered: Vec<usize>,
}

/// Checks coverage and sums the cost of `selection`. The cost is reported
/// whether or not the selection is feasible.
pub fn evaluate(inst: &ScpInstance, selection: &Selection) -> Result<Evaluation> {
    let mut covered = vec![false; inst.m()];
    let mut cost = Cost::ZERO;
    for j in selection.iter() {
        if j >= inst.n() {
            return Err(InstanceError::IndexOutOfRange {
                index: j,
                limit: inst.n(),
                context: "selection",
            });
        }
        cost += inst.cost(j);
        for &i in inst.col(j) {
            covered[i] = true;
        }
    }
    let uncovered: Vec<usize> = (0..inst.m()).filter(|&i| !covered[i]).collect();
    Ok(Evaluation {
        feasible: uncovered.is_empty(),
        cost,
        uncovered,
    })
}
