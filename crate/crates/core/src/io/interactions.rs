use nalgebra::DMatrix;

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Append `prefix + target` columns holding `modifier * target`, computed on
/// the raw (uncentered) values. New columns are centered when the input
/// dataset has any centered column.
pub fn expand_interactions(data: &Dataset, modifier: &str, targets: &[String], prefix: &str) -> Result<Dataset> {
    let m = data
        .label_index(modifier)
        .ok_or_else(|| Error::InvalidArgument(format!("no column `{modifier}`")))?;
    let raw = |j: usize| -> Vec<f64> { data.column(j).iter().map(|v| v + data.offsets[j]).collect() };
    let mv = raw(m);
    if let Some(i) = mv.iter().position(|&v| (v - 0.0).abs() > 1e-9 && (v - 1.0).abs() > 1e-9) {
        return Err(Error::InvalidArgument(format!(
            "modifier `{modifier}` is not binary (row {} has {})",
            i + 1,
            mv[i]
        )));
    }
    let mv: Vec<f64> = mv.iter().map(|v| v.round()).collect();
    let n = data.n();
    let p = data.p();
    let mut labels = data.labels.clone();
    let mut values: Vec<f64> = data.x.as_slice().to_vec();
    let mut centered = data.centered.clone();
    let mut offsets = data.offsets.clone();
    let center = data.centered.iter().any(|&c| c);
    for t in targets {
        let j = data
            .label_index(t)
            .ok_or_else(|| Error::InvalidArgument(format!("no column `{t}`")))?;
        let mut col: Vec<f64> = raw(j).iter().zip(&mv).map(|(a, b)| a * b).collect();
        let mut mean = 0.0;
        if center {
            mean = col.iter().sum::<f64>() / n as f64;
            for v in col.iter_mut() {
                *v -= mean;
            }
        }
        values.extend(col);
        labels.push(format!("{prefix}{t}"));
        centered.push(center);
        offsets.push(mean);
    }
    let x = DMatrix::from_vec(n, p + targets.len(), values);
    let mut out = Dataset::new(data.y.clone(), x, labels)?;
    out.centered = centered;
    out.offsets = offsets;
    Ok(out)
}
