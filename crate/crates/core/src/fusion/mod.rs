//! Gaussian covariance-intersection fusion, its geometric verification, and
//! fault-tolerant stream fusion.

mod fault;
mod gaussian;
mod geometry;

use thiserror::Error;

pub use fault::{
    fault_schedule_sim, Configuration, ConfigurationCatalog, FaultCode, FaultSchedule,
    FaultSimReport, FaultStep, FusionTree, IntermediateOutput, StepOutput, StreamSet,
    WeightSlot, STREAM_NAMES,
};
pub use gaussian::{
    check_spd, ci_fuse, ci_unfuse, is_consistent, matrix_rows, random_estimator, random_spd,
    EllipseSpec, GaussianEstimator, SPD_TOL, SYMMETRY_TOL,
};
pub use geometry::{
    geometric_mean_density, j_functional, kl_gauss, perturb, verify_geodesic, GeodesicReport,
    GeodesicRow, CLOUD_SIZE, ENDPOINT_EPS, ENDPOINT_TOL, PERTURBATION_DELTAS,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FusionError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("estimator has dimension zero")]
    Empty,
    #[error("estimator has non-finite entries")]
    NonFinite,
    #[error("covariance is not symmetric (deviation {0:e})")]
    NotSymmetric(f64),
    #[error("covariance is not positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),
    #[error("recovered precision is not positive definite (smallest eigenvalue {0:e})")]
    RecoveredNotPositiveDefinite(f64),
    #[error("weight {0} outside (0,1)")]
    WeightOutOfRange(f64),
    #[error("ellipse level {0} must be positive")]
    InvalidLevel(f64),
    #[error("grid of {0} points is too small")]
    GridTooSmall(usize),
    #[error("invalid fault code {0:?}")]
    InvalidFaultCode(String),
    #[error("configuration catalog is empty")]
    EmptyCatalog,
    #[error("csv: {0}")]
    Csv(String),
}

/// One row of an estimator CSV: `t, stream, mean..., cov row-major...`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorRow {
    pub t: i64,
    pub stream: String,
    pub estimate: GaussianEstimator,
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
}

fn csv_err(line: u64, msg: impl std::fmt::Display) -> FusionError {
    FusionError::Csv(format!("line {line}: {msg}"))
}

/// Parses estimator rows; the dimension `d` is inferred from the row width
/// `2 + d + d^2`.
pub fn parse_estimator_csv(text: &str) -> Result<Vec<EstimatorRow>, FusionError> {
    let mut rows = Vec::new();
    for record in csv_reader(text).records() {
        let record = record.map_err(|e| FusionError::Csv(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let values = record.len().saturating_sub(2);
        let d = (1..=values).find(|d| d + d * d == values).ok_or_else(|| csv_err(line, format!("{} fields do not match 2 + d + d^2", record.len())))?;
        let t: i64 = record[0].parse().map_err(|_| csv_err(line, format!("bad time {:?}", &record[0])))?;
        let nums = record
            .iter()
            .skip(2)
            .map(|f| f.parse::<f64>().map_err(|_| csv_err(line, format!("bad number {f:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let estimate = GaussianEstimator::from_slices(&nums[..d], &nums[d..]).map_err(|e| csv_err(line, e))?;
        rows.push(EstimatorRow {
            t,
            stream: record[1].to_string(),
            estimate,
        });
    }
    Ok(rows)
}

/// Stream ids `x`, `y`, `z` or `0`, `1`, `2`.
pub fn stream_index(id: &str) -> Option<usize> {
    match id {
        "x" | "0" => Some(0),
        "y" | "1" => Some(1),
        "z" | "2" => Some(2),
        _ => None,
    }
}

pub fn parse_stream_csv(text: &str) -> Result<StreamSet, FusionError> {
    let mut set = StreamSet::default();
    for row in parse_estimator_csv(text)? {
        let idx = stream_index(&row.stream).ok_or_else(|| FusionError::Csv(format!("unknown stream {:?}", row.stream)))?;
        set.insert(row.t, idx, row.estimate);
    }
    Ok(set)
}

pub fn parse_fault_csv(text: &str) -> Result<FaultSchedule, FusionError> {
    let mut codes = Vec::new();
    for record in csv_reader(text).records() {
        let record = record.map_err(|e| FusionError::Csv(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(csv_err(line, "expected t,code"));
        }
        let t: i64 = record[0].parse().map_err(|_| csv_err(line, format!("bad time {:?}", &record[0])))?;
        codes.push((t, record[1].parse()?));
    }
    Ok(FaultSchedule::from_codes(codes))
}

/// Writes estimator rows in the format read by [`parse_estimator_csv`].
pub fn write_estimator_csv(rows: &[EstimatorRow]) -> String {
    let d = rows.first().map_or(1, |r| r.estimate.dim());
    let mut out = String::from("t,stream");
    for i in 0..d {
        out.push_str(&format!(",m{i}"));
    }
    for i in 0..d {
        for j in 0..d {
            out.push_str(&format!(",c{i}{j}"));
        }
    }
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{},{}", r.t, r.stream));
        for v in r.estimate.mean().iter() {
            out.push_str(&format!(",{v}"));
        }
        for row in matrix_rows(r.estimate.cov()) {
            for v in row {
                out.push_str(&format!(",{v}"));
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimator_csv_round_trip() {
        let rows = vec![
            EstimatorRow {
                t: 0,
                stream: "x".into(),
                estimate: GaussianEstimator::from_slices(&[1.0, -0.5], &[2.0, 0.3, 0.3, 1.0]).unwrap(),
            },
            EstimatorRow {
                t: 1,
                stream: "z".into(),
                estimate: GaussianEstimator::from_slices(&[0.25, 4.0], &[1.0, 0.0, 0.0, 0.5]).unwrap(),
            },
        ];
        assert_eq!(parse_estimator_csv(&write_estimator_csv(&rows)).unwrap(), rows);
        let set = parse_stream_csv(&write_estimator_csv(&rows)).unwrap();
        assert!(set.steps[&1][2].is_some() && set.steps[&1][0].is_none());
    }

    #[test]
    fn csv_errors_name_the_line() {
        let err = parse_estimator_csv("t,stream,m0,c00\n0,x,1.0\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(parse_stream_csv("t,stream,m0,c00\n0,w,1,1\n").is_err());
        assert!(matches!(parse_fault_csv("t,code\n0,XXX\n"), Err(FusionError::InvalidFaultCode(_))));
        assert_eq!(parse_fault_csv("t,code\n0,0X0\n3,000\n").unwrap().steps.len(), 2);
    }
}
