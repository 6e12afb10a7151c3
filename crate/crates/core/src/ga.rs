//! Binary-coded genetic algorithm.
//!
//! Each gene is an unsigned integer of `bits` bits (MSB first) mapped linearly
//! onto `[lower, upper]`. A generation is evaluate → record → terminate? →
//! elitism → select → crossover → mutate. Fitness is `C − objective`, where
//! the objective is minimized and `C` is the standard value.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::GaError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneSpec {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    #[serde(default = "default_bits")]
    pub bits: usize,
}

fn default_bits() -> usize {
    GeneSpec::DEFAULT_BITS
}

impl GeneSpec {
    pub const DEFAULT_BITS: usize = 6;

    pub fn new(name: &str, lower: f64, upper: f64) -> Self {
        Self {
            name: name.to_string(),
            lower,
            upper,
            bits: Self::DEFAULT_BITS,
        }
    }

    pub fn with_bits(mut self, bits: usize) -> Self {
        self.bits = bits;
        self
    }

    pub fn validate(&self) -> Result<(), GaError> {
        if !(self.lower.is_finite() && self.upper.is_finite() && self.lower < self.upper) {
            return Err(GaError::InvalidConfig(format!(
                "gene {} needs finite lower < upper",
                self.name
            )));
        }
        if self.bits == 0 || self.bits > 52 {
            return Err(GaError::InvalidConfig(format!(
                "gene {} needs 1..=52 bits",
                self.name
            )));
        }
        Ok(())
    }

    pub fn value(&self, v: u64) -> f64 {
        let max = ((1u64 << self.bits) - 1) as f64;
        if v as f64 == max {
            return self.upper;
        }
        self.lower + v as f64 / max * (self.upper - self.lower)
    }
}

pub fn total_bits(specs: &[GeneSpec]) -> usize {
    specs.iter().map(|s| s.bits).sum()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chromosome {
    pub bits: Vec<bool>,
}

impl Chromosome {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn zeros(len: usize) -> Self {
        Self::new(vec![false; len])
    }

    pub fn random<R: Rng>(len: usize, rng: &mut R) -> Self {
        Self::new((0..len).map(|_| rng.gen_bool(0.5)).collect())
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Encode a value vector as the nearest gene integers.
    pub fn encode(specs: &[GeneSpec], values: &[f64]) -> Self {
        let mut bits = Vec::with_capacity(total_bits(specs));
        for (s, &v) in specs.iter().zip(values) {
            let max = (1u64 << s.bits) - 1;
            let frac = ((v - s.lower) / (s.upper - s.lower)).clamp(0.0, 1.0);
            let int = (frac * max as f64).round() as u64;
            for b in (0..s.bits).rev() {
                bits.push(int >> b & 1 == 1);
            }
        }
        Self::new(bits)
    }
}

impl fmt::Display for Chromosome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            f.write_str(if *b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Chromosome {
    type Err = GaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(GaError::InvalidConfig(format!("bad bit `{c}`"))),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Chromosome::new)
    }
}

/// Map each gene's unsigned integer onto its bounds.
pub fn decode(c: &Chromosome, specs: &[GeneSpec]) -> Result<Vec<f64>, GaError> {
    let expected = total_bits(specs);
    if c.len() != expected {
        return Err(GaError::LengthMismatch {
            expected,
            actual: c.len(),
        });
    }
    let mut out = Vec::with_capacity(specs.len());
    let mut pos = 0;
    for s in specs {
        let v = c.bits[pos..pos + s.bits]
            .iter()
            .fold(0u64, |acc, &b| (acc << 1) | b as u64);
        out.push(s.value(v));
        pos += s.bits;
    }
    Ok(out)
}

/// Minimization objective over decoded parameters. Implementations must be
/// pure: equal inputs give equal outputs, with no hidden randomness.
pub trait FitnessFunction: Sync {
    fn objective(&self, params: &[f64]) -> f64;

    /// Default standard value `C` used when the GA config does not set one.
    fn standard_value(&self) -> f64 {
        0.0
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> FitnessFunction for F {
    fn objective(&self, params: &[f64]) -> f64 {
        self(params)
    }
}

/// `C − objective(decode(c))`.
pub fn evaluate<F: FitnessFunction + ?Sized>(
    c: &Chromosome,
    specs: &[GeneSpec],
    problem: &F,
    standard_value: f64,
) -> Result<f64, GaError> {
    Ok(standard_value - problem.objective(&decode(c, specs)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMethod {
    /// Fitness-proportional roulette after shifting the minimum to zero.
    Ratioing,
    /// Probability proportional to rank (worst = 1, ties share the mean rank).
    Ranking,
}

impl FromStr for SelectionMethod {
    type Err = GaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ratioing" | "roulette" => Ok(Self::Ratioing),
            "ranking" | "rank" => Ok(Self::Ranking),
            other => Err(GaError::InvalidConfig(format!("unknown selection `{other}`"))),
        }
    }
}

fn roulette_weights(fitness: &[f64], method: SelectionMethod) -> Result<Vec<f64>, GaError> {
    match method {
        SelectionMethod::Ratioing => {
            let min = fitness.iter().copied().fold(f64::INFINITY, f64::min);
            let w: Vec<f64> = fitness.iter().map(|f| f - min).collect();
            if w.iter().all(|v| *v <= 0.0) {
                Err(GaError::DegenerateFitness)
            } else {
                Ok(w)
            }
        }
        SelectionMethod::Ranking => {
            let n = fitness.len();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]));
            let mut ranks = vec![0.0; n];
            let mut i = 0;
            while i < n {
                let mut j = i;
                while j + 1 < n && fitness[order[j + 1]] == fitness[order[i]] {
                    j += 1;
                }
                let mean_rank = (i + j) as f64 / 2.0 + 1.0;
                for &k in &order[i..=j] {
                    ranks[k] = mean_rank;
                }
                i = j + 1;
            }
            Ok(ranks)
        }
    }
}

fn spin<R: Rng>(cumulative: &[f64], rng: &mut R) -> usize {
    let total = *cumulative.last().expect("non-empty population");
    let r = rng.gen::<f64>() * total;
    cumulative.partition_point(|&c| c <= r).min(cumulative.len() - 1)
}

/// Draw `fitness.len() / 2` parent pairs (at least one). Under ratioing with
/// all shifted fitnesses zero, selection falls back to uniform.
pub fn select<R: Rng>(fitness: &[f64], method: SelectionMethod, rng: &mut R) -> Vec<(usize, usize)> {
    assert!(!fitness.is_empty(), "selection needs a non-empty population");
    let weights = roulette_weights(fitness, method).unwrap_or_else(|_| vec![1.0; fitness.len()]);
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        acc += w;
        cumulative.push(acc);
    }
    let pairs = (fitness.len() / 2).max(1);
    (0..pairs)
        .map(|_| (spin(&cumulative, rng), spin(&cumulative, rng)))
        .collect()
}

/// Single-point crossover at `cut` (bits `[cut..]` swapped).
pub fn crossover_at(a: &Chromosome, b: &Chromosome, cut: usize) -> Result<(Chromosome, Chromosome), GaError> {
    if a.len() != b.len() {
        return Err(GaError::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let mut x = a.bits[..cut].to_vec();
    x.extend_from_slice(&b.bits[cut..]);
    let mut y = b.bits[..cut].to_vec();
    y.extend_from_slice(&a.bits[cut..]);
    Ok((Chromosome::new(x), Chromosome::new(y)))
}

/// With probability `pc`, single-point crossover at a uniform cut in
/// `[1, len − 1]`; otherwise copies of the parents.
pub fn crossover<R: Rng>(
    a: &Chromosome,
    b: &Chromosome,
    pc: f64,
    rng: &mut R,
) -> Result<(Chromosome, Chromosome), GaError> {
    if a.len() != b.len() {
        return Err(GaError::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.len() < 2 || !rng.gen_bool(pc) {
        return Ok((a.clone(), b.clone()));
    }
    let cut = rng.gen_range(1..a.len());
    crossover_at(a, b, cut)
}

/// Independent bit flips with probability `pm` each.
pub fn mutate<R: Rng>(c: &Chromosome, pm: f64, rng: &mut R) -> Chromosome {
    Chromosome::new(c.bits.iter().map(|&b| b ^ rng.gen_bool(pm)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaConfig {
    #[serde(default = "d_population")]
    pub population: usize,
    #[serde(default = "d_pc")]
    pub pc: f64,
    #[serde(default = "d_pm")]
    pub pm: f64,
    #[serde(default = "d_selection")]
    pub selection: SelectionMethod,
    #[serde(default = "d_elitism")]
    pub elitism: usize,
    #[serde(default = "d_generations")]
    pub generations: usize,
    /// Generations without best-fitness improvement before stopping.
    #[serde(default = "d_window")]
    pub window: usize,
    #[serde(default)]
    pub seed: u64,
    /// Standard value `C`; the problem's own default when absent.
    #[serde(default)]
    pub standard_value: Option<f64>,
    /// Stop once the best fitness reaches this value.
    #[serde(default)]
    pub target_fitness: Option<f64>,
    #[serde(default = "d_parallel")]
    pub parallel: bool,
}

fn d_population() -> usize {
    20
}
fn d_pc() -> f64 {
    0.8
}
fn d_pm() -> f64 {
    0.001
}
fn d_selection() -> SelectionMethod {
    SelectionMethod::Ranking
}
fn d_elitism() -> usize {
    1
}
fn d_generations() -> usize {
    50
}
fn d_window() -> usize {
    15
}
fn d_parallel() -> bool {
    true
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: d_population(),
            pc: d_pc(),
            pm: d_pm(),
            selection: d_selection(),
            elitism: d_elitism(),
            generations: d_generations(),
            window: d_window(),
            seed: 0,
            standard_value: None,
            target_fitness: None,
            parallel: d_parallel(),
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), GaError> {
        let bad = |m: &str| Err(GaError::InvalidConfig(m.to_string()));
        if self.population < 2 || self.population % 2 != 0 {
            return bad("population must be even and >= 2");
        }
        if !(0.0..=1.0).contains(&self.pc) || !(0.0..=1.0).contains(&self.pm) {
            return bad("pc and pm must lie in [0, 1]");
        }
        if self.elitism >= self.population {
            return bad("elitism must be smaller than the population");
        }
        if self.generations == 0 {
            return bad("generations must be >= 1");
        }
        if self.window == 0 {
            return bad("window must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    FixedGenerations,
    Converged,
    TargetMet,
    NoImprovement,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::FixedGenerations => "Fixed number of generation",
            Self::Converged => "All individuals converged to the same string",
            Self::TargetMet => "Minimum criteria satisfied",
            Self::NoImprovement => "No improvement in fitness over the convergence window",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best: Chromosome,
    pub best_params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaRun {
    pub records: Vec<GenerationRecord>,
    pub termination: Termination,
    pub standard_value: f64,
    pub gene_names: Vec<String>,
}

impl GaRun {
    pub fn best(&self) -> &GenerationRecord {
        self.records.last().expect("a run records at least one generation")
    }

    /// `generation,best_fitness,mean_fitness,<gene names...>`
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "generation,best_fitness,mean_fitness")?;
        for n in &self.gene_names {
            write!(w, ",{n}")?;
        }
        writeln!(w)?;
        for r in &self.records {
            write!(w, "{},{},{}", r.generation, r.best_fitness, r.mean_fitness)?;
            for p in &r.best_params {
                write!(w, ",{p}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

fn evaluate_population<F: FitnessFunction + ?Sized>(
    pop: &[Chromosome],
    specs: &[GeneSpec],
    problem: &F,
    c: f64,
    parallel: bool,
    cache: &mut HashMap<Chromosome, f64>,
) -> Result<Vec<f64>, GaError> {
    let mut fresh: Vec<&Chromosome> = Vec::new();
    for ch in pop {
        if !cache.contains_key(ch) && !fresh.contains(&ch) {
            fresh.push(ch);
        }
    }
    let scored: Vec<Result<f64, GaError>> = if parallel {
        fresh.par_iter().map(|ch| evaluate(ch, specs, problem, c)).collect()
    } else {
        fresh.iter().map(|ch| evaluate(ch, specs, problem, c)).collect()
    };
    for (ch, f) in fresh.into_iter().zip(scored) {
        cache.insert(ch.clone(), f?);
    }
    Ok(pop.iter().map(|ch| cache[ch]).collect())
}

/// Run the GA to termination. Fitness evaluations are memoized per
/// chromosome and may run in parallel without affecting the result.
pub fn run_ga<F: FitnessFunction + ?Sized>(
    cfg: &GaConfig,
    specs: &[GeneSpec],
    problem: &F,
) -> Result<GaRun, GaError> {
    cfg.validate()?;
    if specs.is_empty() {
        return Err(GaError::InvalidConfig("no genes to optimize".into()));
    }
    for s in specs {
        s.validate()?;
    }
    let len = total_bits(specs);
    let c = cfg.standard_value.unwrap_or_else(|| problem.standard_value());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut pop: Vec<Chromosome> = (0..cfg.population)
        .map(|_| Chromosome::random(len, &mut rng))
        .collect();
    let mut cache = HashMap::new();
    let mut records: Vec<GenerationRecord> = Vec::new();

    let termination = loop {
        let gen = records.len();
        let fit = evaluate_population(&pop, specs, problem, c, cfg.parallel, &mut cache)?;

        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&a, &b| fit[b].total_cmp(&fit[a]).then(a.cmp(&b)));
        let best = &pop[order[0]];
        records.push(GenerationRecord {
            generation: gen,
            best_fitness: fit[order[0]],
            mean_fitness: fit.iter().sum::<f64>() / fit.len() as f64,
            best: best.clone(),
            best_params: decode(best, specs)?,
        });

        if gen + 1 >= cfg.generations {
            break Termination::FixedGenerations;
        }
        if pop.iter().all(|ch| ch == &pop[0]) {
            break Termination::Converged;
        }
        if cfg.target_fitness.is_some_and(|t| fit[order[0]] >= t) {
            break Termination::TargetMet;
        }
        if gen >= cfg.window && records[gen].best_fitness <= records[gen - cfg.window].best_fitness {
            break Termination::NoImprovement;
        }

        let mut next: Vec<Chromosome> = order[..cfg.elitism].iter().map(|&i| pop[i].clone()).collect();
        'fill: loop {
            for (a, b) in select(&fit, cfg.selection, &mut rng) {
                let (x, y) = crossover(&pop[a], &pop[b], cfg.pc, &mut rng)?;
                for child in [x, y] {
                    if next.len() == cfg.population {
                        break 'fill;
                    }
                    next.push(mutate(&child, cfg.pm, &mut rng));
                }
            }
        }
        pop = next;
    };

    Ok(GaRun {
        records,
        termination,
        standard_value: c,
        gene_names: specs.iter().map(|s| s.name.clone()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> Chromosome {
        s.parse().unwrap()
    }

    #[test]
    fn decode_bounds_and_midpoint() {
        let specs = [GeneSpec::new("k", 0.1, 50.0)];
        assert_eq!(decode(&bits("000000"), &specs).unwrap(), vec![0.1]);
        assert_eq!(decode(&bits("111111"), &specs).unwrap(), vec![50.0]);
        let mid = decode(&bits("100000"), &specs).unwrap()[0];
        assert!((mid - (0.1 + 32.0 / 63.0 * 49.9)).abs() < 1e-12);
    }

    #[test]
    fn decode_length_mismatch() {
        let specs = [GeneSpec::new("a", 0.0, 1.0), GeneSpec::new("b", 0.0, 1.0)];
        assert_eq!(
            decode(&bits("101"), &specs),
            Err(GaError::LengthMismatch {
                expected: 12,
                actual: 3
            })
        );
    }

    #[test]
    fn encode_decode_grid_points() {
        let specs = [GeneSpec::new("a", -2.0, 3.0), GeneSpec::new("b", 1.0, 2.0).with_bits(4)];
        let c = Chromosome::encode(&specs, &[-2.0, 2.0]);
        assert_eq!(c.to_string(), "0000001111");
    }

    #[test]
    fn crossover_examples() {
        let (a, b) = (bits("111111"), bits("000000"));
        let (x, y) = crossover_at(&a, &b, 3).unwrap();
        assert_eq!((x.to_string(), y.to_string()), ("111000".into(), "000111".into()));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (x, y) = crossover(&a, &b, 0.0, &mut rng).unwrap();
        assert_eq!((x, y), (a.clone(), b.clone()));
        for _ in 0..50 {
            let (x, y) = crossover(&a, &a, 1.0, &mut rng).unwrap();
            assert_eq!((&x, &y), (&a, &a));
        }
        assert!(crossover(&a, &bits("01"), 1.0, &mut rng).is_err());
    }

    #[test]
    fn mutate_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = bits("1100101");
        assert_eq!(mutate(&c, 0.0, &mut rng), c);
        assert_eq!(mutate(&c, 1.0, &mut rng).to_string(), "0011010");
    }

    #[test]
    fn degenerate_roulette_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (a, b) in select(&[5.0, 0.0, 0.0, 0.0], SelectionMethod::Ratioing, &mut rng) {
            assert_eq!((a, b), (0, 0));
        }
        for (a, b) in select(&[3.0, 1.0], SelectionMethod::Ratioing, &mut rng) {
            assert_eq!((a, b), (0, 0));
        }
        assert_eq!(
            roulette_weights(&[2.0, 2.0], SelectionMethod::Ratioing),
            Err(GaError::DegenerateFitness)
        );
        let pairs = select(&[2.0; 6], SelectionMethod::Ratioing, &mut rng);
        assert_eq!(pairs.len(), 3);
    }

    #[test]
    fn ranking_shares_tied_ranks() {
        let w = roulette_weights(&[1.0, 5.0, 1.0, 3.0], SelectionMethod::Ranking).unwrap();
        assert_eq!(w, vec![1.5, 4.0, 1.5, 3.0]);
    }

    #[test]
    fn config_validation() {
        let mut c = GaConfig::default();
        c.validate().unwrap();
        c.population = 7;
        assert!(c.validate().is_err());
        c.population = 4;
        c.elitism = 4;
        assert!(c.validate().is_err());
        c.elitism = 1;
        c.pm = 1.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn single_generation_run() {
        let specs = [GeneSpec::new("x", -1.0, 1.0)];
        let cfg = GaConfig {
            generations: 1,
            ..GaConfig::default()
        };
        let run = run_ga(&cfg, &specs, &|p: &[f64]| p[0] * p[0]).unwrap();
        assert_eq!(run.records.len(), 1);
        assert_eq!(run.termination, Termination::FixedGenerations);
        assert_eq!(run.termination.to_string(), "Fixed number of generation");
    }

    #[test]
    fn no_variation_converges_to_initial_best() {
        let specs = [GeneSpec::new("x", -1.0, 1.0), GeneSpec::new("y", -1.0, 1.0)];
        let cfg = GaConfig {
            pc: 0.0,
            pm: 0.0,
            generations: 10_000,
            window: 10_000,
            seed: 11,
            ..GaConfig::default()
        };
        let f = |p: &[f64]| (p[0] - 0.3).powi(2) + (p[1] + 0.2).powi(2);
        let run = run_ga(&cfg, &specs, &f).unwrap();
        assert_eq!(run.termination, Termination::Converged);
        assert_eq!(run.records[0].best, run.best().best);
    }

    #[test]
    fn target_fitness_stops_early() {
        let specs = [GeneSpec::new("x", -1.0, 1.0)];
        let cfg = GaConfig {
            standard_value: Some(10.0),
            target_fitness: Some(-1e9),
            ..GaConfig::default()
        };
        let run = run_ga(&cfg, &specs, &|p: &[f64]| p[0].abs()).unwrap();
        assert_eq!(run.termination, Termination::TargetMet);
        assert_eq!(run.records.len(), 1);
    }

    #[test]
    fn csv_layout() {
        let specs = [GeneSpec::new("kstab", 0.1, 50.0), GeneSpec::new("t1", 0.01, 1.0)];
        let cfg = GaConfig {
            generations: 2,
            ..GaConfig::default()
        };
        let run = run_ga(&cfg, &specs, &|p: &[f64]| p[0] + p[1]).unwrap();
        let mut out = Vec::new();
        run.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("generation,best_fitness,mean_fitness,kstab,t1"));
        assert_eq!(lines.count(), 2);
    }
}
