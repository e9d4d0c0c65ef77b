//! Interaction detection from three time series by lagged least squares.
//!
//! Each series is regressed on the lags of the other two. The block of
//! coefficients `s_{A->B}` carrying A's lags into B's equation is compared
//! with `s_{B->A}` to orient every pair, and the node with two outgoing
//! edges is read as the agent.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Added to the norm sum in orientation confidences.
pub const ORIENT_EPS: f64 = 1e-12;
pub const DEFAULT_AMBIGUITY_THRESHOLD: f64 = 0.1;
/// Relative singular-value floor below which a design is rank deficient.
pub const RANK_TOL: f64 = 1e-10;
pub const DEFAULT_BURN_IN: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CausalError {
    #[error("expected 3 series, found {0}")]
    NotThree(usize),
    #[error("series {0:?} appears twice")]
    DuplicateName(String),
    #[error("series have unequal lengths ({0} vs {1})")]
    UnequalLengths(usize, usize),
    #[error("non-finite value in series {series:?} at row {row}")]
    NonFinite { series: String, row: usize },
    #[error("lag order must be at least 1")]
    ZeroLag,
    #[error("series length {length} is below 10 * p = {}", 10 * p)]
    TooShort { length: usize, p: usize },
    #[error("rank-deficient design for the {target:?} equation (constant or collinear series)")]
    RankDeficient { target: String },
    #[error("no agent structure: the oriented triangle is cyclic")]
    NoAgent,
    #[error("unstable coefficient spec: spectral radius {0:.6} >= 1")]
    Unstable(f64),
    #[error("invalid spec: {0}")]
    Spec(String),
    #[error("csv: {0}")]
    Csv(String),
}

/// Named real series of equal length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeriesPanel {
    pub names: Vec<String>,
    pub series: Vec<Vec<f64>>,
    /// Sample period, carried along but never used in fitting.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
}

impl TimeSeriesPanel {
    pub fn new(names: Vec<String>, series: Vec<Vec<f64>>) -> Result<Self, CausalError> {
        if names.len() != series.len() {
            return Err(CausalError::Spec(format!("{} names for {} series", names.len(), series.len())));
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(CausalError::DuplicateName(n.clone()));
            }
        }
        if let Some(first) = series.first() {
            for s in &series[1..] {
                if s.len() != first.len() {
                    return Err(CausalError::UnequalLengths(first.len(), s.len()));
                }
            }
        }
        for (name, s) in names.iter().zip(&series) {
            if let Some(row) = s.iter().position(|v| !v.is_finite()) {
                return Err(CausalError::NonFinite { series: name.clone(), row });
            }
        }
        Ok(Self { names, series, period: None })
    }

    pub fn len(&self) -> usize {
        self.series.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checks the shape needed by [`fit_triangle`] at lag order `p`.
    pub fn check_triangle(&self, p: usize) -> Result<(), CausalError> {
        if self.series.len() != 3 {
            return Err(CausalError::NotThree(self.series.len()));
        }
        if p == 0 {
            return Err(CausalError::ZeroLag);
        }
        if self.len() < 10 * p {
            return Err(CausalError::TooShort { length: self.len(), p });
        }
        Ok(())
    }

    /// Multiplies every value by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for s in &mut out.series {
            for v in s {
                *v *= factor;
            }
        }
        out
    }

    /// Reads a header row of names followed by one row per time step.
    pub fn from_csv(text: &str) -> Result<Self, CausalError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let names: Vec<String> = reader
            .headers()
            .map_err(|e| CausalError::Csv(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        if names.is_empty() || names.iter().all(String::is_empty) {
            return Err(CausalError::Csv("missing header row".into()));
        }
        let mut series = vec![Vec::new(); names.len()];
        for record in reader.records() {
            let record = record.map_err(|e| CausalError::Csv(e.to_string()))?;
            let line = record.position().map_or(0, |p| p.line());
            for (k, field) in record.iter().enumerate() {
                let v: f64 = field
                    .parse()
                    .map_err(|_| CausalError::Csv(format!("line {line}: {field:?} is not a number")))?;
                series[k].push(v);
            }
        }
        Self::new(names, series)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.names).expect("in-memory write");
        for t in 0..self.len() {
            w.write_record(self.series.iter().map(|s| format!("{}", s[t]))).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }
}

/// Coefficients on `from`'s lags 1..=p in `to`'s equation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientBlock {
    pub from: String,
    pub to: String,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
}

impl CoefficientBlock {
    pub fn norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FitOptions {
    /// Also regress each target on its own lags.
    pub own_lags: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriangleFit {
    pub p: usize,
    pub names: Vec<String>,
    /// Six blocks, grouped by target in panel order.
    pub blocks: Vec<CoefficientBlock>,
    /// Own-lag blocks when requested.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub own: Vec<CoefficientBlock>,
    pub residual_variance: BTreeMap<String, f64>,
    pub rows: usize,
}

impl TriangleFit {
    pub fn block(&self, from: &str, to: &str) -> Option<&CoefficientBlock> {
        self.blocks.iter().find(|b| b.from == from && b.to == to)
    }
}

struct Ols {
    beta: Vec<f64>,
    std_errors: Vec<f64>,
    residual_variance: f64,
}

/// Least squares with an implicit intercept (both sides demeaned).
fn ols(mut x: DMatrix<f64>, mut y: DVector<f64>) -> Option<Ols> {
    let (n, k) = x.shape();
    for mut col in x.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    let mean = y.mean();
    y.add_scalar_mut(-mean);
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= RANK_TOL * smax {
        return None;
    }
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let inv = svd.singular_values.map(|s| 1.0 / s);
    let beta = v_t.transpose() * DVector::from_iterator(k, (u.transpose() * &y).iter().zip(inv.iter()).map(|(a, b)| a * b));
    let resid = &y - &x * &beta;
    let dof = n.saturating_sub(k + 1).max(1);
    let residual_variance = resid.norm_squared() / dof as f64;
    let std_errors = (0..k)
        .map(|j| {
            let var: f64 = (0..k).map(|i| (v_t[(i, j)] * inv[i]).powi(2)).sum();
            (residual_variance * var).sqrt()
        })
        .collect();
    Some(Ols {
        beta: beta.iter().copied().collect(),
        std_errors,
        residual_variance,
    })
}

/// One target equation: coefficient blocks per source (foreign sources in
/// panel order, then the target itself when own lags are on).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquationFit {
    pub target: String,
    pub blocks: Vec<CoefficientBlock>,
    pub residual_variance: f64,
    pub rows: usize,
}

/// Regresses series `target` at `t` on the other two series at `t-1..=t-p`,
/// over the `T-p` rows with a full lag window.
pub fn fit_equation(panel: &TimeSeriesPanel, target: usize, p: usize, options: FitOptions) -> Result<EquationFit, CausalError> {
    panel.check_triangle(p)?;
    if target >= 3 {
        return Err(CausalError::Spec(format!("target index {target} outside 0..3")));
    }
    let rows = panel.len() - p;
    let mut sources: Vec<usize> = (0..3).filter(|&s| s != target).collect();
    if options.own_lags {
        sources.push(target);
    }
    let x = DMatrix::from_fn(rows, sources.len() * p, |r, c| {
        let (s, lag) = (sources[c / p], c % p + 1);
        panel.series[s][r + p - lag]
    });
    let y = DVector::from_fn(rows, |r, _| panel.series[target][r + p]);
    let fit = ols(x, y).ok_or_else(|| CausalError::RankDeficient {
        target: panel.names[target].clone(),
    })?;
    let blocks = sources
        .iter()
        .enumerate()
        .map(|(k, &s)| CoefficientBlock {
            from: panel.names[s].clone(),
            to: panel.names[target].clone(),
            coefficients: fit.beta[k * p..(k + 1) * p].to_vec(),
            std_errors: fit.std_errors[k * p..(k + 1) * p].to_vec(),
        })
        .collect();
    Ok(EquationFit {
        target: panel.names[target].clone(),
        blocks,
        residual_variance: fit.residual_variance,
        rows,
    })
}

/// Fits all three target equations. A rank-deficient design in any of them
/// is an error.
pub fn fit_triangle(panel: &TimeSeriesPanel, p: usize, options: FitOptions) -> Result<TriangleFit, CausalError> {
    let mut blocks = Vec::new();
    let mut own = Vec::new();
    let mut residual_variance = BTreeMap::new();
    let mut rows = 0;
    for target in 0..3 {
        let eq = fit_equation(panel, target, p, options)?;
        rows = eq.rows;
        residual_variance.insert(eq.target.clone(), eq.residual_variance);
        for b in eq.blocks {
            if b.from == b.to {
                own.push(b);
            } else {
                blocks.push(b);
            }
        }
    }
    Ok(TriangleFit {
        p,
        names: panel.names.clone(),
        blocks,
        own,
        residual_variance,
        rows,
    })
}

/// One pair of the triangle, pointed from the larger block norm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrientedEdge {
    pub from: String,
    pub to: String,
    pub forward_norm: f64,
    pub backward_norm: f64,
    pub confidence: f64,
    pub tie: bool,
}

/// Orients the three pairs; ties keep panel order with confidence 0.
pub fn orient(fit: &TriangleFit) -> Vec<OrientedEdge> {
    let mut edges = Vec::new();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let (a, b) = (&fit.names[i], &fit.names[j]);
        let ab = fit.block(a, b).map_or(0.0, CoefficientBlock::norm);
        let ba = fit.block(b, a).map_or(0.0, CoefficientBlock::norm);
        let confidence = (ab - ba).abs() / (ab + ba + ORIENT_EPS);
        let (from, to, fwd, bwd) = if ba > ab { (b, a, ba, ab) } else { (a, b, ab, ba) };
        edges.push(OrientedEdge {
            from: from.clone(),
            to: to.clone(),
            forward_norm: fwd,
            backward_norm: bwd,
            confidence,
            tie: ab == ba,
        });
    }
    edges
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectOptions {
    pub fit: FitOptions,
    /// Patient-edge confidence below this flags the order as ambiguous.
    pub ambiguity_threshold: f64,
}

impl Default for DetectOptions {
    fn default() -> Self {
        Self {
            fit: FitOptions::default(),
            ambiguity_threshold: DEFAULT_AMBIGUITY_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteractionHypothesis {
    pub agent: String,
    pub input: String,
    pub output: String,
    pub ambiguous_order: bool,
    pub edges: Vec<OrientedEdge>,
}

/// The agent is the node with two outgoing edges; the patients' mutual edge
/// runs from input to output.
pub fn detect_interaction(panel: &TimeSeriesPanel, p: usize, options: DetectOptions) -> Result<InteractionHypothesis, CausalError> {
    let fit = fit_triangle(panel, p, options.fit)?;
    let edges = orient(&fit);
    let agent = fit
        .names
        .iter()
        .find(|n| edges.iter().filter(|e| &e.from == *n).count() == 2)
        .ok_or(CausalError::NoAgent)?
        .clone();
    let mutual = edges
        .iter()
        .find(|e| e.from != agent && e.to != agent)
        .expect("a triangle has one edge avoiding each node");
    Ok(InteractionHypothesis {
        agent,
        input: mutual.from.clone(),
        output: mutual.to.clone(),
        ambiguous_order: mutual.confidence < options.ambiguity_threshold,
        edges,
    })
}

fn default_names() -> Vec<String> {
    ["X", "Y", "Z"].map(String::from).to_vec()
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

/// Generative lag system: each series is a sum of lagged coefficient blocks
/// applied to the others (and optionally itself) plus Gaussian noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    #[serde(default = "default_names")]
    pub names: Vec<String>,
    pub lags: usize,
    /// Blocks keyed `"A->B"`, each of length `lags`.
    #[serde(default)]
    pub coefficients: BTreeMap<String, Vec<f64>>,
    /// Per-series innovation standard deviations.
    pub noise: Vec<f64>,
    pub length: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
}

impl SynthSpec {
    /// Y drives X and Z, X drives Z weakly. Y's innovations have four times
    /// the standard deviation of the patients'.
    pub fn agent_model(length: usize) -> Self {
        Self {
            names: default_names(),
            lags: 2,
            coefficients: BTreeMap::from([
                ("Y->X".into(), vec![0.6, 0.2]),
                ("Y->Z".into(), vec![0.5, 0.2]),
                ("X->Z".into(), vec![0.2, 0.0]),
            ]),
            noise: vec![0.25, 1.0, 0.25],
            length,
            burn_in: DEFAULT_BURN_IN,
        }
    }

    /// X -> Y -> Z -> X with equal strengths.
    pub fn cyclic(length: usize) -> Self {
        Self {
            names: default_names(),
            lags: 2,
            coefficients: BTreeMap::from([
                ("X->Y".into(), vec![0.6, 0.0]),
                ("Y->Z".into(), vec![0.6, 0.0]),
                ("Z->X".into(), vec![0.6, 0.0]),
            ]),
            noise: vec![1.0, 1.0, 1.0],
            length,
            burn_in: DEFAULT_BURN_IN,
        }
    }

    /// `a[l][to][from]` for lags `l = 1..=p`.
    fn lag_matrices(&self) -> Result<Vec<DMatrix<f64>>, CausalError> {
        let n = self.names.len();
        let index = |name: &str| {
            self.names
                .iter()
                .position(|x| x == name)
                .ok_or_else(|| CausalError::Spec(format!("unknown series {name:?}")))
        };
        let mut a = vec![DMatrix::zeros(n, n); self.lags];
        for (key, block) in &self.coefficients {
            let (from, to) = key
                .split_once("->")
                .ok_or_else(|| CausalError::Spec(format!("block key {key:?} is not of the form A->B")))?;
            let (from, to) = (index(from.trim())?, index(to.trim())?);
            if block.len() != self.lags {
                return Err(CausalError::Spec(format!("block {key:?} has {} entries, expected {}", block.len(), self.lags)));
            }
            if let Some(c) = block.iter().find(|c| !c.is_finite()) {
                return Err(CausalError::Spec(format!("block {key:?} has non-finite entry {c}")));
            }
            for (l, &c) in block.iter().enumerate() {
                a[l][(to, from)] = c;
            }
        }
        Ok(a)
    }

    fn validate(&self) -> Result<(), CausalError> {
        if self.names.is_empty() {
            return Err(CausalError::Spec("no series".into()));
        }
        for (i, n) in self.names.iter().enumerate() {
            if self.names[..i].contains(n) {
                return Err(CausalError::DuplicateName(n.clone()));
            }
        }
        if self.lags == 0 {
            return Err(CausalError::ZeroLag);
        }
        if self.noise.len() != self.names.len() {
            return Err(CausalError::Spec(format!("{} noise scales for {} series", self.noise.len(), self.names.len())));
        }
        if let Some(s) = self.noise.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(CausalError::Spec(format!("noise scale {s} must be finite and non-negative")));
        }
        Ok(())
    }

    /// Largest eigenvalue modulus of the companion matrix.
    pub fn spectral_radius(&self) -> Result<f64, CausalError> {
        self.validate()?;
        let a = self.lag_matrices()?;
        let n = self.names.len();
        let p = self.lags;
        let mut companion = DMatrix::zeros(n * p, n * p);
        for (l, m) in a.iter().enumerate() {
            companion.view_mut((0, l * n), (n, n)).copy_from(m);
        }
        for r in n..n * p {
            companion[(r, r - n)] = 1.0;
        }
        Ok(companion.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max))
    }
}

/// Simulates `spec` from a zero start, discarding `burn_in` steps. Noise is
/// drawn from a ChaCha8 stream seeded with `seed`.
pub fn synth_panel(spec: &SynthSpec, seed: u64) -> Result<TimeSeriesPanel, CausalError> {
    let radius = spec.spectral_radius()?;
    if radius >= 1.0 {
        return Err(CausalError::Unstable(radius));
    }
    let a = spec.lag_matrices()?;
    let n = spec.names.len();
    let p = spec.lags;
    let total = spec.burn_in + spec.length;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut history: Vec<DVector<f64>> = vec![DVector::zeros(n); p];
    let mut series = vec![Vec::with_capacity(spec.length); n];
    for t in 0..total {
        let mut next = DVector::from_fn(n, |i, _| {
            let e: f64 = StandardNormal.sample(&mut rng);
            spec.noise[i] * e
        });
        for (l, m) in a.iter().enumerate() {
            next += m * &history[history.len() - 1 - l];
        }
        if t >= spec.burn_in {
            for (s, v) in series.iter_mut().zip(next.iter()) {
                s.push(*v);
            }
        }
        history.remove(0);
        history.push(next);
    }
    TimeSeriesPanel::new(spec.names.clone(), series)
}
