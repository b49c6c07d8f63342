use serde::{Deserialize, Serialize};

/// A 2x2 table of observed counts: rows are conditions, columns are the
/// side the neutral agent chose (proponent, opponent).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable2x2 {
    pub row_labels: [String; 2],
    pub col_labels: [String; 2],
    pub observed: [[u64; 2]; 2],
}

impl ContingencyTable2x2 {
    pub fn new(observed: [[u64; 2]; 2]) -> Self {
        Self {
            row_labels: ["group A".into(), "group B".into()],
            col_labels: ["proponent".into(), "opponent".into()],
            observed,
        }
    }

    pub fn with_labels(mut self, rows: [&str; 2], cols: [&str; 2]) -> Self {
        self.row_labels = rows.map(String::from);
        self.col_labels = cols.map(String::from);
        self
    }

    pub fn row_totals(&self) -> [u64; 2] {
        [self.observed[0][0] + self.observed[0][1], self.observed[1][0] + self.observed[1][1]]
    }

    pub fn col_totals(&self) -> [u64; 2] {
        [self.observed[0][0] + self.observed[1][0], self.observed[0][1] + self.observed[1][1]]
    }

    pub fn total(&self) -> u64 {
        self.row_totals().iter().sum()
    }

    /// `E_ij = row_i * col_j / N`.
    pub fn expected(&self) -> [[f64; 2]; 2] {
        let rows = self.row_totals();
        let cols = self.col_totals();
        let n = self.total() as f64;
        let mut e = [[0.0; 2]; 2];
        for (i, row) in e.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = rows[i] as f64 * cols[j] as f64 / n;
            }
        }
        e
    }

    /// Share of the row's observations in the first (proponent) column.
    pub fn row_rate(&self, row: usize) -> f64 {
        let total = self.row_totals()[row];
        self.observed[row][0] as f64 / total as f64
    }
}
