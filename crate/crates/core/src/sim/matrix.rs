use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SimError;

/// Dense row-major matrix of finite doubles.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, SimError> {
        if data.len() != rows * cols {
            return Err(SimError::Format(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(SimError::Format(format!(
                "entry ({}, {}) is not finite",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Entries drawn uniformly from `[-1, 1)`.
    pub fn random(rows: usize, cols: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    /// Entry `(i, j)`, or zero outside the matrix.
    pub fn get_padded(&self, i: usize, j: usize) -> f64 {
        if i < self.rows && j < self.cols {
            self.get(i, j)
        } else {
            0.0
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
    }

    /// Plain triple loop, used as the reference product.
    pub fn multiply(&self, other: &Matrix) -> Result<Matrix, SimError> {
        if self.cols != other.rows {
            return Err(SimError::DimensionMismatch {
                a: (self.rows, self.cols),
                b: (other.rows, other.cols),
            });
        }
        let mut c = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for r in 0..self.cols {
                let a = self.get(i, r);
                for j in 0..other.cols {
                    c.data[i * other.cols + j] += a * other.get(r, j);
                }
            }
        }
        Ok(c)
    }

    /// `rows` and `cols` as little-endian u64, then the entries as
    /// little-endian f64 in row-major order.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<(), SimError> {
        out.write_all(&(self.rows as u64).to_le_bytes())?;
        out.write_all(&(self.cols as u64).to_le_bytes())?;
        for v in &self.data {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Matrix, SimError> {
        let mut word = [0u8; 8];
        input.read_exact(&mut word)?;
        let rows = u64::from_le_bytes(word) as usize;
        input.read_exact(&mut word)?;
        let cols = u64::from_le_bytes(word) as usize;
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| SimError::Format(format!("header {rows}x{cols} overflows")))?;
        let mut data = Vec::with_capacity(len.min(1 << 24));
        for _ in 0..len {
            input.read_exact(&mut word)?;
            data.push(f64::from_le_bytes(word));
        }
        Matrix::from_vec(rows, cols, data)
    }

    /// First line `rows cols`, then one whitespace-separated line per row.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.rows, self.cols);
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| format!("{:?}", self.get(i, j))).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Matrix, SimError> {
        let mut tokens = text.split_whitespace();
        let mut dim = |what: &str| -> Result<usize, SimError> {
            tokens
                .next()
                .ok_or_else(|| SimError::Format(format!("missing {what}")))?
                .parse()
                .map_err(|_| SimError::Format(format!("bad {what}")))
        };
        let rows = dim("row count")?;
        let cols = dim("column count")?;
        let data = tokens
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| SimError::Format(format!("bad entry `{t}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Matrix::from_vec(rows, cols, data)
    }
}
