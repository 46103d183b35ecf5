use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{complete_from_y, predict_y, TrainedModel};
use crate::error::{Error, Result};
use crate::problems::{Family, Instance, Record};
use crate::refsolve::optimality_gap;

/// Allowed excess of a certified bound over the reference optimum, relative
/// to `1 + |L*|`.
pub const WEAK_DUALITY_TOL: f64 = 1e-7;

/// Source of the multipliers being evaluated.
#[derive(Debug, Clone, Copy)]
pub enum Predictor<'a> {
    Model(&'a TrainedModel),
    /// The cached optimal multipliers; gaps should vanish.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub index: usize,
    pub l_star: f64,
    pub l_hat: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub family: Family,
    pub m: usize,
    pub n: usize,
    pub method: String,
    pub avg_gap_pct: f64,
    pub std_gap_pct: f64,
    pub max_gap_pct: f64,
    pub opt_val_mean: f64,
    pub infer_seconds: f64,
    /// Indices whose bound exceeds the optimum beyond tolerance.
    pub weak_duality_violations: Vec<usize>,
    pub rows: Vec<EvalRow>,
}

pub const SUMMARY_HEADER: &str = "family,m,n,method,avg_gap_pct,std_gap_pct,max_gap_pct,opt_val_mean,infer_seconds";

impl EvalReport {
    pub fn summary_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            self.family,
            self.m,
            self.n,
            self.method,
            self.avg_gap_pct,
            self.std_gap_pct,
            self.max_gap_pct,
            self.opt_val_mean,
            self.infer_seconds
        )
    }

    pub fn summary_csv(&self) -> String {
        format!("{SUMMARY_HEADER}\n{}\n", self.summary_csv_row())
    }

    pub fn rows_csv(&self) -> String {
        let mut s = String::from("index,l_star,l_hat,gap\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{},{}\n", r.index, r.l_star, r.l_hat, r.gap));
        }
        s
    }

    pub fn passes_weak_duality(&self) -> bool {
        self.weak_duality_violations.is_empty()
    }
}

/// Gaps `(L* − L̂)/|L*|` of the predictor's certified bounds over `records`.
pub fn evaluate(predictor: Predictor<'_>, records: &[&Record]) -> Result<EvalReport> {
    let first = records
        .first()
        .ok_or_else(|| Error::validation("nothing to evaluate"))?;
    let family = first.instance.family();
    let (m, n) = first.instance.dims();
    let mut optima = Vec::with_capacity(records.len());
    for r in records {
        let oracle = r.oracle.as_ref().ok_or_else(|| {
            Error::validation(format!("record {} has no oracle value; run gen with oracles", r.index))
        })?;
        if r.instance.family() != family || r.instance.dims() != (m, n) {
            return Err(Error::validation(format!("record {} differs in family or size", r.index)));
        }
        optima.push(oracle);
    }
    let instances: Vec<&Instance> = records.iter().map(|r| &r.instance).collect();

    let start = Instant::now();
    let (method, ys) = match predictor {
        Predictor::Model(model) => (model.method.to_string(), predict_y(model, &instances)?),
        Predictor::Oracle => ("oracle".to_string(), optima.iter().map(|o| o.y_star.clone()).collect()),
    };
    let bounds: Vec<f64> = instances
        .iter()
        .zip(&ys)
        .map(|(inst, y)| complete_from_y(inst, y).map(|s| s.bound))
        .collect::<Result<_>>()?;
    let infer_seconds = start.elapsed().as_secs_f64();

    let mut rows = Vec::with_capacity(records.len());
    let mut violations = Vec::new();
    for ((r, o), &l_hat) in records.iter().zip(&optima).zip(&bounds) {
        let gap = optimality_gap(o.value, l_hat)?;
        if l_hat > o.value + WEAK_DUALITY_TOL * (1.0 + o.value.abs()) {
            violations.push(r.index);
        }
        rows.push(EvalRow {
            index: r.index,
            l_star: o.value,
            l_hat,
            gap,
        });
    }
    let k = rows.len() as f64;
    let avg = rows.iter().map(|r| r.gap).sum::<f64>() / k;
    let var = rows.iter().map(|r| (r.gap - avg).powi(2)).sum::<f64>() / k;
    let max = rows.iter().map(|r| r.gap).fold(f64::NEG_INFINITY, f64::max);
    Ok(EvalReport {
        family,
        m,
        n,
        method,
        avg_gap_pct: 100.0 * avg,
        std_gap_pct: 100.0 * var.sqrt(),
        max_gap_pct: 100.0 * max,
        opt_val_mean: optima.iter().map(|o| o.value).sum::<f64>() / k,
        infer_seconds,
        weak_duality_violations: violations,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{gen_knapsack, gen_prodplan, Split, SplitSizes};
    use crate::refsolve::attach_oracles;

    #[test]
    fn oracle_predictor_has_no_gap() {
        let mut ds = gen_prodplan(4, SplitSizes::new(2, 2, 6), 3, 1).unwrap();
        attach_oracles(&mut ds, 1).unwrap();
        let test: Vec<&Record> = ds.split(Split::Test).collect();
        let rep = evaluate(Predictor::Oracle, &test).unwrap();
        assert!(rep.avg_gap_pct.abs() < 1e-9);
        assert!(rep.passes_weak_duality());
        assert!(rep.summary_csv().starts_with(SUMMARY_HEADER));

        let mut ds = gen_knapsack(2, 8, SplitSizes::new(2, 2, 6), 3, 1).unwrap();
        attach_oracles(&mut ds, 1).unwrap();
        let test: Vec<&Record> = ds.split(Split::Test).collect();
        let rep = evaluate(Predictor::Oracle, &test).unwrap();
        assert!(rep.avg_gap_pct.abs() < 1e-9, "{}", rep.avg_gap_pct);
        assert!(rep.passes_weak_duality());
    }

    #[test]
    fn missing_oracle_rejected() {
        let ds = gen_prodplan(4, SplitSizes::new(2, 2, 2), 3, 1).unwrap();
        let test: Vec<&Record> = ds.split(Split::Test).collect();
        assert!(evaluate(Predictor::Oracle, &test).is_err());
    }
}
