use crate::error::{Error, Result};
use crate::treaties::{Treaty, TreatyFamily};

/// A Markov decision rule per stage, tabulated on the state grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTable {
    grid: Vec<f64>,
    rows: Vec<Vec<Treaty>>,
    stationary: bool,
}

impl PolicyTable {
    /// One row per stage `0..N`.
    pub fn new(grid: Vec<f64>, rows: Vec<Vec<Treaty>>) -> Result<Self> {
        Self::build(grid, rows, false)
    }

    /// A single row applied at every stage.
    pub fn stationary(grid: Vec<f64>, row: Vec<Treaty>) -> Result<Self> {
        Self::build(grid, vec![row], true)
    }

    /// The same treaty everywhere.
    pub fn constant(grid: Vec<f64>, stages: usize, treaty: Treaty) -> Self {
        let row = vec![treaty; grid.len()];
        Self {
            rows: vec![row; stages.max(1)],
            grid,
            stationary: false,
        }
    }

    fn build(grid: Vec<f64>, rows: Vec<Vec<Treaty>>, stationary: bool) -> Result<Self> {
        if rows.is_empty() || rows.iter().any(|r| r.len() != grid.len()) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, rows, stationary })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn is_stationary(&self) -> bool {
        self.stationary
    }

    /// Number of stored rows; 1 for a stationary table.
    pub fn stages(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, n: usize) -> &[Treaty] {
        if self.stationary {
            &self.rows[0]
        } else {
            &self.rows[n.min(self.rows.len() - 1)]
        }
    }

    /// Treaty at the nearest grid state at or below `x`, or `None` below the grid.
    pub fn lookup(&self, n: usize, x: f64) -> Option<&Treaty> {
        let j = self.grid.partition_point(|&t| t <= x).checked_sub(1)?;
        Some(&self.row(n)[j])
    }

    /// CSV with header `stage,x,family,params`; parameters are `;`-separated.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("stage,x,family,params\n");
        for (n, row) in self.rows.iter().enumerate() {
            for (x, f) in self.grid.iter().zip(row) {
                let params: Vec<String> = f.params().iter().map(|p| fmt_float(*p)).collect();
                out.push_str(&format!("{n},{},{},{}\n", fmt_float(*x), f.family(), params.join(";")));
            }
        }
        out
    }

    /// Parses the output of [`PolicyTable::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == "stage,x,family,params" => {}
            _ => return Err(Error::Parse("policy file must start with `stage,x,family,params`".into())),
        }
        let mut rows: Vec<Vec<Treaty>> = Vec::new();
        let mut grids: Vec<Vec<f64>> = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Parse(format!("policy line {}: {what}", i + 2));
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(bad("expected 4 columns"));
            }
            let n: usize = cols[0].parse().map_err(|_| bad("bad stage"))?;
            let x: f64 = cols[1].parse().map_err(|_| bad("bad state"))?;
            let family = TreatyFamily::parse(cols[2])?;
            let params = if cols[3].is_empty() {
                Vec::new()
            } else {
                cols[3]
                    .split(';')
                    .map(|p| p.parse::<f64>().map_err(|_| bad("bad parameter")))
                    .collect::<Result<Vec<_>>>()?
            };
            if n != rows.len() && n + 1 != rows.len() {
                return Err(bad("stages must be listed in order"));
            }
            if n == rows.len() {
                rows.push(Vec::new());
                grids.push(Vec::new());
            }
            rows[n].push(Treaty::from_params(family, &params)?);
            grids[n].push(x);
        }
        let grid = grids.first().cloned().ok_or_else(|| Error::Parse("empty policy file".into()))?;
        if grids.iter().any(|g| *g != grid) {
            return Err(Error::GridMismatch);
        }
        Self::new(grid, rows)
    }
}

/// Round-trip safe formatting with 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}
