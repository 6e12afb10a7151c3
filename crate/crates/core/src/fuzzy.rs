//! Mamdani fuzzy stabilizer over seven linguistic labels.
//!
//! Inputs are the speed deviation and its time derivative, each scaled into
//! the normalized universe `[-1, 1]`. Rule firing uses `min`, aggregation uses
//! `max` over clipped consequents, and the crisp output is the centroid of the
//! aggregated set sampled on a uniform grid.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::FuzzyError;

pub const N_LABELS: usize = 7;
pub const DEFAULT_GRID_POINTS: usize = 201;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    NB,
    NM,
    NS,
    ZE,
    PS,
    PM,
    PB,
}

impl Label {
    pub const ALL: [Label; N_LABELS] = [
        Label::NB,
        Label::NM,
        Label::NS,
        Label::ZE,
        Label::PS,
        Label::PM,
        Label::PB,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Label {
        Self::ALL[i]
    }

    /// Mirror label (`NB <-> PB`, `ZE` fixed).
    pub fn neg(self) -> Label {
        Self::ALL[N_LABELS - 1 - self.index()]
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Label {
    type Err = FuzzyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|l| l.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| FuzzyError::UnknownLabel(s.to_string()))
    }
}

/// Triangle `(left, center, right)` on the normalized universe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct TriangularMf {
    pub left: f64,
    pub center: f64,
    pub right: f64,
}

impl From<[f64; 3]> for TriangularMf {
    fn from(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

impl From<TriangularMf> for [f64; 3] {
    fn from(m: TriangularMf) -> Self {
        [m.left, m.center, m.right]
    }
}

impl TriangularMf {
    pub fn new(left: f64, center: f64, right: f64) -> Self {
        Self { left, center, right }
    }

    pub fn grade(&self, x: f64) -> f64 {
        if x == self.center {
            1.0
        } else if x <= self.left || x >= self.right {
            0.0
        } else if x < self.center {
            (x - self.left) / (self.center - self.left)
        } else {
            (self.right - x) / (self.right - self.center)
        }
    }

    fn scaled(&self, s: f64) -> Self {
        Self::new(self.left * s, self.center * s, self.right * s)
    }
}

/// Seven triangles `NB..PB`; the outer two saturate at 1 beyond their centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FuzzyPartition {
    pub mfs: [TriangularMf; N_LABELS],
}

impl Default for FuzzyPartition {
    fn default() -> Self {
        Self::uniform(1.0)
    }
}

impl FuzzyPartition {
    /// Evenly spaced 50%-overlap partition with centers at `k·half_width/3`,
    /// `k = -3..=3`.
    pub fn uniform(half_width: f64) -> Self {
        let step = half_width / 3.0;
        let mut mfs = [TriangularMf::new(0.0, 0.0, 0.0); N_LABELS];
        for (i, mf) in mfs.iter_mut().enumerate() {
            let c = (i as f64 - 3.0) * step;
            *mf = TriangularMf::new(c - step, c, c + step);
        }
        Self { mfs }
    }

    /// Scale every breakpoint's distance from zero by `s` (> 0).
    pub fn scaled(&self, s: f64) -> Self {
        let mut mfs = self.mfs;
        for mf in &mut mfs {
            *mf = mf.scaled(s);
        }
        Self { mfs }
    }

    pub fn validate(&self) -> Result<(), FuzzyError> {
        let bad = |m: String| Err(FuzzyError::InvalidConfig(m));
        for (i, mf) in self.mfs.iter().enumerate() {
            if ![mf.left, mf.center, mf.right].iter().all(|v| v.is_finite()) {
                return bad(format!("label {} has non-finite breakpoints", Label::from_index(i)));
            }
            if !(mf.left < mf.center && mf.center < mf.right) {
                return bad(format!("label {} needs left < center < right", Label::from_index(i)));
            }
        }
        if self.mfs[3].center != 0.0 {
            return bad("ZE must be centered at 0".into());
        }
        for w in self.mfs.windows(2) {
            if w[0].center >= w[1].center {
                return bad("centers must be strictly increasing".into());
            }
            if w[0].right <= w[1].left {
                return bad("adjacent labels leave a gap in the universe".into());
            }
        }
        for i in 0..N_LABELS {
            let (a, b) = (&self.mfs[i], &self.mfs[N_LABELS - 1 - i]);
            let tol = 1e-12;
            if (a.center + b.center).abs() > tol
                || (a.left + b.right).abs() > tol
                || (a.right + b.left).abs() > tol
            {
                return bad("partition must be symmetric about 0".into());
            }
        }
        Ok(())
    }

    /// Grade of label `i` at `x`, honoring the outer shoulders.
    pub fn grade(&self, i: usize, x: f64) -> f64 {
        let mf = &self.mfs[i];
        if (i == 0 && x <= mf.center) || (i == N_LABELS - 1 && x >= mf.center) {
            1.0
        } else {
            mf.grade(x)
        }
    }
}

/// Membership grades of `x` (clamped to `[-1, 1]`) in every label.
pub fn fuzzify(p: &FuzzyPartition, x: f64) -> [f64; N_LABELS] {
    let x = x.clamp(-1.0, 1.0);
    std::array::from_fn(|i| p.grade(i, x))
}

/// 7×7 map `(label of e, label of de) -> output label`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RuleTable {
    pub grid: [[Label; N_LABELS]; N_LABELS],
}

impl Default for RuleTable {
    /// Sum-of-indices table: `out = clamp(i + j - 3)`.
    fn default() -> Self {
        let grid = std::array::from_fn(|i| {
            std::array::from_fn(|j| Label::from_index((i + j).saturating_sub(3).min(N_LABELS - 1)))
        });
        Self { grid }
    }
}

impl RuleTable {
    pub fn rule(&self, e: Label, de: Label) -> Label {
        self.grid[e.index()][de.index()]
    }

    pub fn validate(&self) -> Result<(), FuzzyError> {
        if self.rule(Label::ZE, Label::ZE) != Label::ZE {
            return Err(FuzzyError::InvalidConfig("rule (ZE, ZE) must be ZE".into()));
        }
        for e in Label::ALL {
            for de in Label::ALL {
                if self.rule(e.neg(), de.neg()) != self.rule(e, de).neg() {
                    return Err(FuzzyError::InvalidConfig(format!(
                        "rule table not antisymmetric at ({e}, {de})"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlcConfig {
    #[serde(default)]
    pub partition_e: FuzzyPartition,
    #[serde(default)]
    pub partition_de: FuzzyPartition,
    #[serde(default)]
    pub partition_u: FuzzyPartition,
    #[serde(default)]
    pub rules: RuleTable,
    /// Speed-deviation input gain (1/p.u.).
    pub ke: f64,
    /// Speed-deviation-rate input gain (s/p.u.).
    pub kde: f64,
    /// Output gain (p.u.).
    pub ku: f64,
    #[serde(default = "default_umin")]
    pub umin: f64,
    #[serde(default = "default_umax")]
    pub umax: f64,
    #[serde(default = "default_grid")]
    pub grid_points: usize,
}

fn default_umin() -> f64 {
    -0.1
}
fn default_umax() -> f64 {
    0.1
}
fn default_grid() -> usize {
    DEFAULT_GRID_POINTS
}

impl Default for FlcConfig {
    fn default() -> Self {
        Self {
            partition_e: FuzzyPartition::default(),
            partition_de: FuzzyPartition::default(),
            partition_u: FuzzyPartition::default(),
            rules: RuleTable::default(),
            ke: 600.0,
            kde: 120.0,
            ku: 0.01,
            umin: default_umin(),
            umax: default_umax(),
            grid_points: DEFAULT_GRID_POINTS,
        }
    }
}

impl FlcConfig {
    pub fn validate(&self) -> Result<(), FuzzyError> {
        self.partition_e.validate()?;
        self.partition_de.validate()?;
        self.partition_u.validate()?;
        self.rules.validate()?;
        for (name, v) in [("ke", self.ke), ("kde", self.kde)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(FuzzyError::InvalidConfig(format!("{name} must be > 0")));
            }
        }
        // ku = 0 is allowed and silences the stabilizer
        if !(self.ku.is_finite() && self.ku >= 0.0) {
            return Err(FuzzyError::InvalidConfig("ku must be >= 0".into()));
        }
        if !(self.umin <= self.umax) {
            return Err(FuzzyError::InvalidConfig("umin must not exceed umax".into()));
        }
        if self.grid_points < 2 {
            return Err(FuzzyError::InvalidConfig("grid_points must be >= 2".into()));
        }
        Ok(())
    }
}

/// Output fuzzy set sampled on a uniform grid over `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSet {
    pub xs: Vec<f64>,
    pub mu: Vec<f64>,
}

/// Uniform grid with exact mirror symmetry: `x_i = -x_{n-1-i}`.
pub fn universe_grid(n: usize) -> Vec<f64> {
    let den = (n - 1) as f64;
    (0..n).map(|i| (2.0 * i as f64 - den) / den).collect()
}

/// `Σ w·x·μ / Σ w·μ` over the samples, with half weight on the two end points.
pub fn defuzzify_centroid(set: &SampledSet) -> Result<f64, FuzzyError> {
    centroid(&set.xs, &set.mu)
}

/// Weight of grid point `i` of `n`: the two end points count half, so the
/// sums are trapezoid-rule integrals.
fn end_weight(i: usize, n: usize) -> f64 {
    if i == 0 || i + 1 == n {
        0.5
    } else {
        1.0
    }
}

fn centroid(xs: &[f64], mu: &[f64]) -> Result<f64, FuzzyError> {
    let (mut num, mut den) = (0.0, 0.0);
    for (i, (x, m)) in xs.iter().zip(mu).enumerate() {
        let w = end_weight(i, xs.len()) * m;
        num += x * w;
        den += w;
    }
    if den <= 0.0 {
        return Err(FuzzyError::EmptySet);
    }
    Ok(num / den)
}

/// Validated controller with the output memberships pre-sampled on the grid.
#[derive(Debug, Clone)]
pub struct FuzzyPss {
    cfg: FlcConfig,
    xs: Vec<f64>,
    /// `out_grades[k][i]` = grade of output label `k` at grid point `i`.
    out_grades: Vec<[f64; N_LABELS]>,
}

impl FuzzyPss {
    pub fn new(cfg: FlcConfig) -> Result<Self, FuzzyError> {
        cfg.validate()?;
        let xs = universe_grid(cfg.grid_points);
        let out_grades = xs.iter().map(|&x| fuzzify(&cfg.partition_u, x)).collect();
        Ok(Self { cfg, xs, out_grades })
    }

    pub fn config(&self) -> &FlcConfig {
        &self.cfg
    }

    /// Rule firing strength `min(μe_i, μde_j)` for all 49 rules.
    pub fn firing_strengths(&self, e: f64, de: f64) -> [[f64; N_LABELS]; N_LABELS] {
        let ge = fuzzify(&self.cfg.partition_e, e);
        let gde = fuzzify(&self.cfg.partition_de, de);
        std::array::from_fn(|i| std::array::from_fn(|j| ge[i].min(gde[j])))
    }

    /// Per-output-label clipping level (max over rules with that consequent).
    fn label_strengths(&self, e: f64, de: f64) -> [f64; N_LABELS] {
        let ge = fuzzify(&self.cfg.partition_e, e);
        let gde = fuzzify(&self.cfg.partition_de, de);
        let mut alpha = [0.0f64; N_LABELS];
        for (i, &a) in ge.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in gde.iter().enumerate() {
                if b == 0.0 {
                    continue;
                }
                let k = self.cfg.rules.grid[i][j].index();
                alpha[k] = alpha[k].max(a.min(b));
            }
        }
        alpha
    }

    /// Aggregated output set for already-normalized inputs.
    pub fn infer(&self, e: f64, de: f64) -> SampledSet {
        let alpha = self.label_strengths(e, de);
        let mu = self
            .out_grades
            .iter()
            .map(|g| aggregate(&alpha, g))
            .collect();
        SampledSet {
            xs: self.xs.clone(),
            mu,
        }
    }

    /// Crisp normalized output in `[-1, 1]`.
    pub fn crisp(&self, e: f64, de: f64) -> Result<f64, FuzzyError> {
        let alpha = self.label_strengths(e, de);
        // mirrored pairs are summed together so that negated inputs give an
        // exactly negated result
        let n = self.xs.len();
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..n / 2 {
            let w = end_weight(i, n);
            let lo = w * aggregate(&alpha, &self.out_grades[i]);
            let hi = w * aggregate(&alpha, &self.out_grades[n - 1 - i]);
            num += self.xs[i] * (lo - hi);
            den += lo + hi;
        }
        if n % 2 == 1 {
            den += aggregate(&alpha, &self.out_grades[n / 2]);
        }
        if den <= 0.0 {
            return Err(FuzzyError::EmptySet);
        }
        Ok(num / den)
    }

    /// Stabilizer voltage before clamping.
    pub fn raw_output(&self, dw: f64, ddw: f64) -> Result<f64, FuzzyError> {
        Ok(self.cfg.ku * self.crisp(self.cfg.ke * dw, self.cfg.kde * ddw)?)
    }

    pub fn clamp(&self, u: f64) -> f64 {
        u.clamp(self.cfg.umin, self.cfg.umax)
    }
}

#[inline]
fn aggregate(alpha: &[f64; N_LABELS], grades: &[f64; N_LABELS]) -> f64 {
    let mut m = 0.0f64;
    for k in 0..N_LABELS {
        if alpha[k] > 0.0 {
            m = m.max(alpha[k].min(grades[k]));
        }
    }
    m
}

/// `Ku · centroid(infer(Ke·dw, Kde·ddw))`, clamped to the output limits.
pub fn flc_output(pss: &FuzzyPss, dw: f64, ddw: f64) -> Result<f64, FuzzyError> {
    Ok(pss.clamp(pss.raw_output(dw, ddw)?))
}
