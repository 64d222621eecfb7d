//! Mutual information of the discrete channel a receiver induces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ROW_TOLERANCE: f64 = 1e-10;

/// Row-stochastic matrix of `P(decide j | sent k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct ChannelMatrix {
    rows: Vec<Vec<f64>>,
}

impl TryFrom<Vec<Vec<f64>>> for ChannelMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        ChannelMatrix::new(rows)
    }
}

impl From<ChannelMatrix> for Vec<Vec<f64>> {
    fn from(c: ChannelMatrix) -> Self {
        c.rows
    }
}

impl ChannelMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let inputs = rows.len();
        if inputs == 0 {
            return Err(Error::MalformedChannel("no rows".into()));
        }
        let outputs = rows[0].len();
        if outputs == 0 {
            return Err(Error::MalformedChannel("no columns".into()));
        }
        for (k, row) in rows.iter().enumerate() {
            if row.len() != outputs {
                return Err(Error::MalformedChannel(format!(
                    "row {k} has {} entries, expected {outputs}",
                    row.len()
                )));
            }
            if row.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0 + ROW_TOLERANCE) {
                return Err(Error::MalformedChannel(format!("row {k} has entries outside [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::MalformedChannel(format!("row {k} sums to {sum}")));
            }
        }
        Ok(ChannelMatrix { rows })
    }

    pub fn identity(m: usize) -> Self {
        let rows = (0..m)
            .map(|k| (0..m).map(|j| if j == k { 1.0 } else { 0.0 }).collect())
            .collect();
        ChannelMatrix { rows }
    }

    pub fn inputs(&self) -> usize {
        self.rows.len()
    }

    pub fn outputs(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn get(&self, sent: usize, decided: usize) -> f64 {
        self.rows[sent][decided]
    }

    /// Output distribution `Σ_k p(k) P(j|k)`.
    pub fn output_distribution(&self, input: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.outputs()];
        for (p, row) in input.iter().zip(&self.rows) {
            for (o, q) in out.iter_mut().zip(row) {
                *o += p * q;
            }
        }
        out
    }
}

/// `I(X;Y)` in bits per channel use.
pub fn mutual_information(channel: &ChannelMatrix, input_dist: &[f64]) -> Result<f64> {
    if input_dist.len() != channel.inputs() {
        return Err(Error::MalformedChannel(format!(
            "input distribution has {} entries, channel has {} inputs",
            input_dist.len(),
            channel.inputs()
        )));
    }
    if input_dist.iter().any(|p| !p.is_finite() || *p < 0.0)
        || (input_dist.iter().sum::<f64>() - 1.0).abs() > ROW_TOLERANCE
    {
        return Err(Error::MalformedChannel("input distribution is not a probability vector".into()));
    }
    let output = channel.output_distribution(input_dist);
    let mut info = 0.0;
    for (p, row) in input_dist.iter().zip(channel.rows()) {
        if *p == 0.0 {
            continue;
        }
        for (q, o) in row.iter().zip(&output) {
            if *q > 0.0 {
                info += p * q * (q / o).log2();
            }
        }
    }
    // Round-off can leave a tiny negative value for useless channels.
    Ok(info.max(0.0))
}

/// Shannon entropy in bits, `0·log 0 = 0`.
pub fn entropy_bits(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}
