use std::io::Write;

use serde::Serialize;

use super::bounds::Variant;
use crate::error::{Error, Result};

/// One evaluated converse bound with its intermediate quantities.
#[derive(Debug, Clone, Serialize)]
pub struct ConverseReport {
    pub theorem: u8,
    pub variant: Variant,
    pub k: usize,
    pub m: usize,
    pub n: Option<usize>,
    pub d: Option<f64>,
    pub eps: Option<f64>,
    /// `R(m,d,A)` for the rate bound, the given rate for the distortion bound.
    pub rate: Option<f64>,
    pub v: Option<f64>,
    pub lambda_star: Option<f64>,
    pub q_inv: Option<f64>,
    pub gamma: Option<f64>,
    pub eps_k: Option<f64>,
    pub berry_esseen_b: Option<f64>,
    pub big_d: Option<f64>,
    pub d_prime: Option<f64>,
    pub script_v: Option<f64>,
    pub bound_value: f64,
    pub bound_without_o_term: f64,
    /// Distortion bound with the extra `+ D'` summand added.
    pub statement_extra_term: Option<f64>,
    pub label_bound: Option<u64>,
    pub flags: Vec<String>,
}

impl ConverseReport {
    pub(crate) fn new(theorem: u8, variant: Variant, k: usize, m: usize) -> Self {
        ConverseReport {
            theorem,
            variant,
            k,
            m,
            n: None,
            d: None,
            eps: None,
            rate: None,
            v: None,
            lambda_star: None,
            q_inv: None,
            gamma: None,
            eps_k: None,
            berry_esseen_b: None,
            big_d: None,
            d_prime: None,
            script_v: None,
            bound_value: 0.0,
            bound_without_o_term: 0.0,
            statement_extra_term: None,
            label_bound: None,
            flags: Vec::new(),
        }
    }

    pub const CSV_HEADER: [&'static str; 12] = [
        "theorem",
        "variant",
        "k",
        "m",
        "n",
        "d",
        "eps",
        "R_nats",
        "V",
        "lambda_star",
        "bound_value",
        "flags",
    ];

    fn record(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        vec![
            self.theorem.to_string(),
            self.variant.as_str().to_string(),
            self.k.to_string(),
            self.m.to_string(),
            self.n.map_or(String::new(), |n| n.to_string()),
            opt(self.d),
            opt(self.eps),
            opt(self.rate),
            opt(self.v),
            opt(self.lambda_star),
            self.bound_value.to_string(),
            self.flags.join(";"),
        ]
    }
}

pub fn write_converse_csv<W: Write>(reports: &[ConverseReport], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(ConverseReport::CSV_HEADER)?;
    for r in reports {
        w.write_record(r.record())?;
    }
    w.flush().map_err(|e| Error::Export(e.to_string()))?;
    Ok(())
}
