//! Fault-tolerant stream fusion by switching between the two sides of an R3
//! move.
//!
//! Three streams `x`, `y`, `z` arrive on edges 0, 1 and 2. Fault codes list
//! the edges from left to right as 2, 1, 0, so `0X0` marks `y` faulty and
//! `X00` marks `z`. The catalog holds equivalent configurations; each exposes
//! intermediate streams feeding the protected sub-network, and a
//! configuration protects it when at least one intermediate has no faulty
//! stream upstream.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::gaussian::{ci_fuse, GaussianEstimator};
use super::FusionError;

pub const STREAM_NAMES: [&str; 3] = ["x", "y", "z"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FaultCode {
    /// Indexed by stream: x, y, z.
    faulty: [bool; 3],
}

impl FaultCode {
    pub const VALID: [&'static str; 6] = ["000", "00X", "0X0", "X00", "X0X", "0XX"];

    pub fn is_faulty(&self, stream: usize) -> bool {
        self.faulty[stream]
    }

    pub fn faulty_count(&self) -> usize {
        self.faulty.iter().filter(|f| **f).count()
    }
}

impl FromStr for FaultCode {
    type Err = FusionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let code = s.trim();
        if !Self::VALID.contains(&code) {
            return Err(FusionError::InvalidFaultCode(code.to_string()));
        }
        let digits: Vec<bool> = code.chars().map(|c| c == 'X').collect();
        Ok(Self {
            faulty: [digits[2], digits[1], digits[0]],
        })
    }
}

impl fmt::Display for FaultCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for stream in [2, 1, 0] {
            f.write_str(if self.faulty[stream] { "X" } else { "0" })?;
        }
        Ok(())
    }
}

impl Serialize for FaultCode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Which of the two catalog weights a fusion node uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightSlot {
    S,
    T,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FusionTree {
    Stream(usize),
    Fuse {
        left: Box<FusionTree>,
        right: Box<FusionTree>,
        weight: WeightSlot,
    },
}

impl FusionTree {
    pub fn fuse(left: FusionTree, right: FusionTree, weight: WeightSlot) -> Self {
        FusionTree::Fuse {
            left: Box::new(left),
            right: Box::new(right),
            weight,
        }
    }

    pub fn upstream(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_streams(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_streams(&self, out: &mut Vec<usize>) {
        match self {
            FusionTree::Stream(i) => out.push(*i),
            FusionTree::Fuse { left, right, .. } => {
                left.collect_streams(out);
                right.collect_streams(out);
            }
        }
    }

    fn eval(&self, streams: &[Option<GaussianEstimator>; 3], s: f64, t: f64) -> Result<Option<GaussianEstimator>, FusionError> {
        match self {
            FusionTree::Stream(i) => Ok(streams[*i].clone()),
            FusionTree::Fuse { left, right, weight } => {
                let (Some(l), Some(r)) = (left.eval(streams, s, t)?, right.eval(streams, s, t)?) else {
                    return Ok(None);
                };
                let w = match weight {
                    WeightSlot::S => s,
                    WeightSlot::T => t,
                };
                ci_fuse(&l, &r, w).map(Some)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub name: String,
    /// Named intermediate streams feeding the protected sub-network.
    pub intermediates: Vec<(String, FusionTree)>,
    pub output: FusionTree,
}

impl Configuration {
    /// Fewest faulty upstream streams over the intermediates.
    pub fn faulty_upstream(&self, code: &FaultCode) -> usize {
        self.intermediates
            .iter()
            .map(|(_, tree)| tree.upstream().iter().filter(|&&i| code.is_faulty(i)).count())
            .min()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigurationCatalog {
    pub s: f64,
    pub t: f64,
    pub configurations: Vec<Configuration>,
}

impl ConfigurationCatalog {
    /// The two sides of the R3 move: `left` computes
    /// `(x ▷_t z) ▷_s (y ▷_t z)`, `right` computes `(x ▷_s y) ▷_t z`.
    pub fn r3(s: f64, t: f64) -> Result<Self, FusionError> {
        for w in [s, t] {
            if !(w > 0.0 && w < 1.0) {
                return Err(FusionError::WeightOutOfRange(w));
            }
        }
        use FusionTree::Stream;
        let xz = FusionTree::fuse(Stream(0), Stream(2), WeightSlot::T);
        let yz = FusionTree::fuse(Stream(1), Stream(2), WeightSlot::T);
        let xy = FusionTree::fuse(Stream(0), Stream(1), WeightSlot::S);
        let left = Configuration {
            name: "left".into(),
            intermediates: vec![("x*z".into(), xz.clone()), ("y*z".into(), yz.clone())],
            output: FusionTree::fuse(xz, yz, WeightSlot::S),
        };
        let right = Configuration {
            name: "right".into(),
            intermediates: vec![("x*y".into(), xy.clone())],
            output: FusionTree::fuse(xy, Stream(2), WeightSlot::T),
        };
        Ok(Self {
            s,
            t,
            configurations: vec![left, right],
        })
    }

    /// Index of the configuration with the fewest faulty upstream streams;
    /// ties keep `previous` when it is among the best, else the first.
    pub fn select(&self, code: &FaultCode, previous: Option<usize>) -> usize {
        let scores: Vec<usize> = self.configurations.iter().map(|c| c.faulty_upstream(code)).collect();
        let best = *scores.iter().min().expect("non-empty catalog");
        match previous {
            Some(p) if scores.get(p) == Some(&best) => p,
            _ => scores.iter().position(|&s| s == best).unwrap(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FaultStep {
    pub t: i64,
    pub code: FaultCode,
    pub configuration: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct FaultSchedule {
    pub steps: Vec<FaultStep>,
}

impl FaultSchedule {
    pub fn from_codes(codes: impl IntoIterator<Item = (i64, FaultCode)>) -> Self {
        Self {
            steps: codes
                .into_iter()
                .map(|(t, code)| FaultStep {
                    t,
                    code,
                    configuration: None,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IntermediateOutput {
    pub name: String,
    pub clean: bool,
    pub estimate: Option<GaussianEstimator>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StepOutput {
    pub t: i64,
    pub code: FaultCode,
    pub configuration: String,
    pub faulty_upstream: usize,
    /// The fused output; `None` when a stream is missing at this step.
    pub output: Option<GaussianEstimator>,
    pub output_clean: bool,
    pub intermediates: Vec<IntermediateOutput>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FaultSimReport {
    pub schedule: FaultSchedule,
    pub steps: Vec<StepOutput>,
}

/// Time-indexed estimates of the three streams.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StreamSet {
    pub steps: BTreeMap<i64, [Option<GaussianEstimator>; 3]>,
}

impl StreamSet {
    pub fn insert(&mut self, t: i64, stream: usize, e: GaussianEstimator) {
        self.steps.entry(t).or_insert_with(|| [None, None, None])[stream] = Some(e);
    }
}

pub fn fault_schedule_sim(
    streams: &StreamSet,
    faults: &FaultSchedule,
    catalog: &ConfigurationCatalog,
) -> Result<FaultSimReport, FusionError> {
    if catalog.configurations.is_empty() {
        return Err(FusionError::EmptyCatalog);
    }
    let missing: [Option<GaussianEstimator>; 3] = [None, None, None];
    let mut previous = None;
    let mut schedule = faults.clone();
    let mut outputs = Vec::with_capacity(faults.steps.len());
    for step in &mut schedule.steps {
        let chosen = catalog.select(&step.code, previous);
        previous = Some(chosen);
        let config = &catalog.configurations[chosen];
        step.configuration = Some(config.name.clone());
        let values = streams.steps.get(&step.t).unwrap_or(&missing);
        let intermediates = config
            .intermediates
            .iter()
            .map(|(name, tree)| {
                Ok(IntermediateOutput {
                    name: name.clone(),
                    clean: tree.upstream().iter().all(|&i| !step.code.is_faulty(i)),
                    estimate: tree.eval(values, catalog.s, catalog.t)?,
                })
            })
            .collect::<Result<Vec<_>, FusionError>>()?;
        outputs.push(StepOutput {
            t: step.t,
            code: step.code,
            configuration: config.name.clone(),
            faulty_upstream: config.faulty_upstream(&step.code),
            output: config.output.eval(values, catalog.s, catalog.t)?,
            output_clean: step.code.faulty_count() == 0,
            intermediates,
        });
    }
    Ok(FaultSimReport {
        schedule,
        steps: outputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fault_code_digits_read_edges_two_one_zero() {
        let y: FaultCode = "0X0".parse().unwrap();
        assert!(y.is_faulty(1) && !y.is_faulty(0) && !y.is_faulty(2));
        let z: FaultCode = "X00".parse().unwrap();
        assert!(z.is_faulty(2));
        let x: FaultCode = "00X".parse().unwrap();
        assert!(x.is_faulty(0));
        for code in FaultCode::VALID {
            assert_eq!(code.parse::<FaultCode>().unwrap().to_string(), code);
        }
        for bad in ["XXX", "XX0", "0", "abc", "00x"] {
            assert!(matches!(bad.parse::<FaultCode>(), Err(FusionError::InvalidFaultCode(_))));
        }
    }

    #[test]
    fn selection_per_code() {
        let cat = ConfigurationCatalog::r3(0.5, 0.5).unwrap();
        let pick = |c: &str| cat.configurations[cat.select(&c.parse().unwrap(), None)].name.clone();
        assert_eq!(pick("0X0"), "left");
        assert_eq!(pick("00X"), "left");
        assert_eq!(pick("X00"), "right");
        assert_eq!(pick("000"), "left");
        // clean ties keep the previous configuration
        assert_eq!(cat.select(&"000".parse().unwrap(), Some(1)), 1);
        // double faults contaminate every configuration
        for c in ["X0X", "0XX"] {
            let code = c.parse().unwrap();
            assert!(cat.configurations.iter().all(|k| k.faulty_upstream(&code) > 0));
        }
    }

    #[test]
    fn missing_stream_yields_no_output() {
        let cat = ConfigurationCatalog::r3(0.3, 0.6).unwrap();
        let mut streams = StreamSet::default();
        streams.insert(0, 0, GaussianEstimator::scalar(1.0, 1.0).unwrap());
        streams.insert(0, 2, GaussianEstimator::scalar(2.0, 1.0).unwrap());
        let faults = FaultSchedule::from_codes([(0, "0X0".parse().unwrap())]);
        let report = fault_schedule_sim(&streams, &faults, &cat).unwrap();
        let step = &report.steps[0];
        assert_eq!(step.configuration, "left");
        assert!(step.output.is_none());
        assert!(step.intermediates[0].clean && step.intermediates[0].estimate.is_some());
        assert!(step.intermediates[1].estimate.is_none());
    }
}
