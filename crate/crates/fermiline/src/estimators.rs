//! Monte Carlo estimators and exact verifiers for partition-function
//! identities and the free-spin magnetization bound.
//!
//! The partition function of N constrained lattice electrons is written as
//! an expectation over free jump-process bundles,
//! Z = R·E[1_adm·(−1)^π·F·W·exp(−∫(Ṽ − Σd))], where R counts canonical
//! initial configurations, π is the realized relabeling at the horizon, W
//! the Gaussian influence weight of any attached Bose field, Ṽ the
//! configuration potential, and Σd the total holding rate.  Two spin
//! factors F share this measure: the field form exp(βbΣσ₀) reads the
//! sampled spins, the loop form Π_γ cosh(βb·w(γ)) sums them analytically
//! over the loop decomposition.  Their agreement on one sample stream is a
//! direct numerical witness of the flip-symmetry argument behind the
//! random loop representation, and feeds the magnetization estimator
//! ⟨S³⟩ = ½·E[Σ_γ w(γ)tanh(βb·w(γ))] on the hard-core one-hole sector,
//! whose every term dominates the free-spin bound (N/2)tanh(βb).
//!
//! The exact verifiers extract the one-dimensional expansion
//! Z = Σ_k C_k·cosh(βb)^k from diagonalization data, test the spin-sector
//! resolution of the same coefficients, and tabulate magnetization margins
//! across model families.

use crate::configgraph::{cycle_type, permutation_sign, ConfigGraphError};
use crate::ed::{
    holstein_sector_spectra, hubbard_sector_spectra, radiation_sector_spectra, BasisKind,
    BosonCap, EdError, LangFirsov, ModelParams, PhononParams, PhotonParams, SectorSpectra,
};
use crate::influence::{free_boson_factor, influence_weight, BoseModeSet, InfluenceError};
use crate::lattice::Lattice;
use crate::loops::{loop_weight, trace_loops, LoopError};
use crate::worldline::{
    constancy_intervals, representative_count, sample_bundle, Bundle, BundleFlags,
    ConstraintClass, PathEnsembleConfig, WorldlineError,
};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Minimum number of batches for batch-means error bars; below this the
/// variance of the variance estimate is too large to quote 3σ intervals.
pub const MIN_BATCHES: u32 = 32;

/// Vandermonde condition-number guard for coefficient extraction.
pub const CONDITION_GUARD: f64 = 1e12;

/// Relative tolerance for deciding which sector-identity reading matches
/// the diagonalization data; comfortably above f64 accumulation error on
/// desk-scale spectra, far below any structural mismatch.
pub const SECTOR_MATCH_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("no accepted samples out of {proposed} proposals (acceptance rate 0)")]
    NoAcceptedSamples { proposed: u64 },
    #[error("batch count {0} below the minimum {MIN_BATCHES}")]
    TooFewBatches(u32),
    #[error("{samples} samples cannot fill {batches} batches")]
    EmptyBatches { samples: u64, batches: u32 },
    #[error("thread count must be ≥ 1")]
    NoThreads,
    #[error("{0} requires the hard-core constraint (u = ∞)")]
    NeedsHardCore(&'static str),
    #[error("one-hole sector needs N = |Λ| − 1 = {expected}, got {got}")]
    OneHoleFilling { expected: usize, got: usize },
    #[error("coefficient extraction is one-dimensional; lattice has dimension {0}")]
    NotOneDimensional(usize),
    #[error("field grid needs ≥ {needed} distinct positive finite values, got {got} usable")]
    BadGrid { needed: usize, got: usize },
    #[error("Vandermonde condition number {0:.3e} exceeds the guard {CONDITION_GUARD:.0e}")]
    IllConditioned(f64),
    #[error("linear solve failed: {0}")]
    SolveFailed(String),
    #[error("nonpositive magnetization margin {margin:.6} for {label} at β={beta}, b={b}")]
    MarginViolation { label: String, beta: f64, b: f64, margin: f64 },
    #[error(transparent)]
    Ed(#[from] EdError),
    #[error(transparent)]
    Worldline(#[from] WorldlineError),
    #[error(transparent)]
    Loops(#[from] LoopError),
    #[error(transparent)]
    Influence(#[from] InfluenceError),
    #[error(transparent)]
    Graph(#[from] ConfigGraphError),
}

/// Origin of a thermal number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "ed")]
    Ed,
    #[serde(rename = "mc-field")]
    McField,
    #[serde(rename = "mc-loop")]
    McLoop,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Ed => "ed",
            Method::McField => "mc-field",
            Method::McLoop => "mc-loop",
        })
    }
}

/// One thermal number with its provenance; exact values carry zero error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalResult {
    pub value: f64,
    pub std_err: f64,
    pub samples: u64,
    pub method: Method,
}

impl ThermalResult {
    pub fn exact(value: f64) -> Self {
        ThermalResult { value, std_err: 0.0, samples: 1, method: Method::Ed }
    }

    /// |self − other| in units of the combined standard error; infinite
    /// when both errors vanish and the values differ.
    pub fn sigma_distance(&self, other: &ThermalResult) -> f64 {
        let gap = (self.value - other.value).abs();
        let combined = self.std_err.hypot(other.std_err);
        if combined == 0.0 {
            if gap == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            gap / combined
        }
    }
}

/// Electron-diagonal potential used in the path action.
#[derive(Clone, Copy, Debug)]
pub enum EffectivePotential<'a> {
    /// The model's bare interactions (on-site U within the admissible
    /// class, optional off-site couplings).
    Bare,
    /// Polaron-frame effective couplings; pairs with a phonon mode set.
    Polaron(&'a LangFirsov),
}

/// Everything the sampling estimators need to weigh a bundle.
#[derive(Clone, Copy, Debug)]
pub struct McModel<'a> {
    pub lattice: &'a Lattice,
    pub params: &'a ModelParams,
    pub n_elec: usize,
    pub potential: EffectivePotential<'a>,
    /// Bose modes integrated into influence weights; None for the pure
    /// electron model.
    pub modes: Option<&'a BoseModeSet>,
}

impl<'a> McModel<'a> {
    /// A pure-Hubbard model with no Bose field.
    pub fn bare(lattice: &'a Lattice, params: &'a ModelParams, n_elec: usize) -> Self {
        McModel { lattice, params, n_elec, potential: EffectivePotential::Bare, modes: None }
    }

    /// Constraint class implied by the on-site coupling.
    pub fn constraint_class(&self) -> ConstraintClass {
        if self.params.u.is_infinite() {
            ConstraintClass::UInfinity
        } else {
            ConstraintClass::FiniteU
        }
    }

    /// R·Π_m(1 − e^{−βω_m})^{−weight}: canonical-representative count times
    /// the free Bose partition of any attached field.
    pub fn normalization(&self) -> Result<f64, EstimatorError> {
        let r = representative_count(self.lattice, self.n_elec, self.constraint_class());
        let free = match self.modes {
            Some(modes) => free_boson_factor(modes, self.params.beta)?,
            None => 1.0,
        };
        Ok(r * free)
    }

    /// Ṽ(X) on one constancy interval, mirroring the diagonal assembly of
    /// the diagonalization builders term by term.
    fn interval_potential(&self, sites: &[usize]) -> f64 {
        let mut occ = vec![0u8; self.lattice.n_sites()];
        for &s in sites {
            occ[s] += 1;
        }
        match self.potential {
            EffectivePotential::Bare => {
                let mut v = self.params.offsite_energy(&occ);
                if self.params.u.is_finite() {
                    let doubles = occ.iter().filter(|&&n| n == 2).count();
                    v += self.params.u * doubles as f64;
                }
                v
            }
            EffectivePotential::Polaron(lf) => {
                let mut v = 0.0;
                for (x, &nx) in occ.iter().enumerate() {
                    if nx == 0 {
                        continue;
                    }
                    v += lf.v_eff[x] * nx as f64;
                    if nx == 2 {
                        v += lf.u_eff[x][x];
                    }
                    for (y, &ny) in occ.iter().enumerate() {
                        if y != x && ny > 0 {
                            v += lf.u_eff[x][y] * nx as f64 * ny as f64;
                        }
                    }
                }
                v
            }
        }
    }
}

/// Weight factors of one accepted bundle, split so that every estimator
/// (field, loop, field-free cycle weights, magnetization) can be assembled
/// without retracing.
#[derive(Clone, Debug)]
pub struct SampleContribution {
    /// (−1)^π of the realized relabeling.
    pub sign: i8,
    /// Gaussian influence weight W, 1 without Bose modes.
    pub influence: f64,
    /// exp(−∫(Ṽ − Σd)).
    pub action_weight: f64,
    /// exp(βbΣσ₀): the sampled-spin field factor.
    pub field_factor: f64,
    /// Π_γ cosh(βb·w(γ)): the analytic loop factor.
    pub cosh_factor: f64,
    /// Cycle type of the realized permutation, descending.
    pub cycle_type: Vec<usize>,
    /// Winding numbers of the traced loops.
    pub windings: Vec<u32>,
}

impl SampleContribution {
    pub fn field_weight(&self) -> f64 {
        self.sign as f64 * self.influence * self.action_weight * self.field_factor
    }

    pub fn loop_form_weight(&self) -> f64 {
        self.sign as f64 * self.influence * self.action_weight * self.cosh_factor
    }

    /// Field-independent part shared by every cycle-type weight.
    pub fn base_weight(&self) -> f64 {
        self.sign as f64 * self.influence * self.action_weight
    }

    /// ½·Σ_γ w(γ)·tanh(βb·w(γ)), the per-sample magnetization reading.
    pub fn magnetization_term(&self, beta: f64, b: f64) -> f64 {
        0.5 * self
            .windings
            .iter()
            .map(|&w| w as f64 * (beta * b * w as f64).tanh())
            .sum::<f64>()
    }
}

/// Weighs one sampled bundle; Ok(None) when the bundle is rejected
/// (inadmissible for the constraint class, or not periodic up to
/// relabeling).
pub fn contribution(
    model: &McModel,
    bundle: &Bundle,
    flags: &BundleFlags,
) -> Result<Option<SampleContribution>, EstimatorError> {
    let admissible = match model.constraint_class() {
        ConstraintClass::FiniteU => flags.in_d,
        ConstraintClass::UInfinity => flags.in_d_infinity,
    };
    let Some(perm) = &flags.permutation else {
        return Ok(None);
    };
    if !admissible {
        return Ok(None);
    }
    let beta = model.params.beta;
    let mut action = 0.0;
    for (t0, t1, sites) in constancy_intervals(&bundle.paths, beta) {
        let v = model.interval_potential(&sites);
        let d: f64 = sites.iter().map(|&s| model.lattice.degree(s)).sum();
        action += (v - d) * (t1 - t0);
    }
    let influence = match model.modes {
        Some(modes) => influence_weight(bundle, modes, beta)?,
        None => 1.0,
    };
    let dec = trace_loops(bundle)?;
    let lw = loop_weight(&dec, beta, model.params.b);
    Ok(Some(SampleContribution {
        sign: permutation_sign(perm),
        influence,
        action_weight: (-action).exp(),
        field_factor: lw.field_weight,
        cosh_factor: lw.cosh_product,
        cycle_type: cycle_type(perm),
        windings: dec.winding_multiset(),
    }))
}

/// Sampling schedule of a Monte Carlo run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    pub batches: u32,
    pub threads: usize,
}

impl McConfig {
    pub fn validate(&self) -> Result<(), EstimatorError> {
        if self.batches < MIN_BATCHES {
            return Err(EstimatorError::TooFewBatches(self.batches));
        }
        if self.samples < self.batches as u64 {
            return Err(EstimatorError::EmptyBatches {
                samples: self.samples,
                batches: self.batches,
            });
        }
        if self.threads == 0 {
            return Err(EstimatorError::NoThreads);
        }
        Ok(())
    }
}

/// Per-batch accumulator; sums run in sample-index order, so batch contents
/// are independent of the thread schedule.
#[derive(Clone, Debug, Default)]
struct BatchAccum {
    n: u64,
    accepted: u64,
    negative_signs: u64,
    sum_field: f64,
    sum_loop: f64,
    sum_mag_num: f64,
    type_sums: BTreeMap<Vec<usize>, (f64, u64)>,
}

impl BatchAccum {
    fn absorb(&mut self, c: &SampleContribution, beta: f64, b: f64) {
        self.accepted += 1;
        if c.sign < 0 {
            self.negative_signs += 1;
        }
        self.sum_field += c.field_weight();
        let lw = c.loop_form_weight();
        self.sum_loop += lw;
        self.sum_mag_num += lw * c.magnetization_term(beta, b);
        let entry = self.type_sums.entry(c.cycle_type.clone()).or_insert((0.0, 0));
        entry.0 += c.base_weight();
        entry.1 += 1;
    }
}

/// Half-open sample-index range of batch `k` when `samples` are spread over
/// `batches` as evenly as possible, earlier batches taking the remainder.
fn batch_range(samples: u64, batches: u32, k: u32) -> (u64, u64) {
    let b = batches as u64;
    let per = samples / b;
    let rem = samples % b;
    let k = k as u64;
    let start = k * per + k.min(rem);
    (start, start + per + u64::from(k < rem))
}

fn run_batch(
    model: &McModel,
    pec: &PathEnsembleConfig,
    range: (u64, u64),
) -> Result<BatchAccum, EstimatorError> {
    let mut acc = BatchAccum::default();
    for index in range.0..range.1 {
        let (bundle, flags) = sample_bundle(model.lattice, model.n_elec, pec, index)?;
        acc.n += 1;
        if let Some(c) = contribution(model, &bundle, &flags)? {
            acc.absorb(&c, model.params.beta, model.params.b);
        }
    }
    Ok(acc)
}

/// Runs the full schedule; batch k always covers the same sample indices,
/// and results are merged in batch order, so the outputs are bit-identical
/// for every thread count.
fn run_ensemble(model: &McModel, cfg: &McConfig) -> Result<Vec<BatchAccum>, EstimatorError> {
    cfg.validate()?;
    model.params.validate(model.lattice.n_sites())?;
    let pec = PathEnsembleConfig {
        beta: model.params.beta,
        samples: cfg.samples,
        seed: cfg.seed,
        constraint: model.constraint_class(),
    };
    let b = cfg.batches;
    if cfg.threads <= 1 {
        return (0..b)
            .map(|k| run_batch(model, &pec, batch_range(cfg.samples, b, k)))
            .collect();
    }
    let workers = cfg.threads.min(b as usize);
    let mut slots: Vec<Option<Result<BatchAccum, EstimatorError>>> =
        (0..b).map(|_| None).collect();
    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(workers);
        for t in 0..workers {
            let pec = &pec;
            handles.push(scope.spawn(move || {
                let mut out = Vec::new();
                let mut k = t as u32;
                while k < b {
                    out.push((k, run_batch(model, pec, batch_range(cfg.samples, b, k))));
                    k += workers as u32;
                }
                out
            }));
        }
        for h in handles {
            for (k, res) in h.join().expect("estimator worker panicked") {
                slots[k as usize] = Some(res);
            }
        }
    });
    slots
        .into_iter()
        .map(|s| s.expect("every batch slot is filled"))
        .collect()
}

/// Mean of batch means and its standard error.
fn mean_and_err(means: &[f64]) -> (f64, f64) {
    let b = means.len() as f64;
    let mean = means.iter().sum::<f64>() / b;
    let var = means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (b * (b - 1.0));
    (mean, var.max(0.0).sqrt())
}

/// Covariance of two batch-mean estimators.
fn covariance_of_means(a: &[f64], bm: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = bm.iter().sum::<f64>() / n;
    a.iter().zip(bm).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n * (n - 1.0))
}

/// Both partition-function estimators from one sample stream.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct McPartition {
    pub field: ThermalResult,
    pub loop_form: ThermalResult,
    /// Batch-means estimate of field − loop with its standard error; the
    /// honest agreement gauge since both forms share every sample.
    pub diff_value: f64,
    pub diff_std_err: f64,
    pub accepted: u64,
    pub proposed: u64,
    /// Accepted samples whose relabeling sign was −1.
    pub negative_signs: u64,
    pub batches: u32,
}

impl McPartition {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.proposed as f64
    }

    /// Whether the two forms agree within n·σ of their difference.
    pub fn forms_agree(&self, n_sigma: f64) -> bool {
        if self.diff_std_err == 0.0 {
            self.diff_value == 0.0
        } else {
            self.diff_value.abs() <= n_sigma * self.diff_std_err
        }
    }
}

/// Estimates Z by the field form and the loop form on one sample stream.
pub fn mc_partition(model: &McModel, cfg: &McConfig) -> Result<McPartition, EstimatorError> {
    let batches = run_ensemble(model, cfg)?;
    let accepted: u64 = batches.iter().map(|a| a.accepted).sum();
    if accepted == 0 {
        return Err(EstimatorError::NoAcceptedSamples { proposed: cfg.samples });
    }
    let scale = model.normalization()?;
    let field_means: Vec<f64> = batches.iter().map(|a| a.sum_field / a.n as f64).collect();
    let loop_means: Vec<f64> = batches.iter().map(|a| a.sum_loop / a.n as f64).collect();
    let diff_means: Vec<f64> =
        batches.iter().map(|a| (a.sum_field - a.sum_loop) / a.n as f64).collect();
    let (fm, fs) = mean_and_err(&field_means);
    let (lm, ls) = mean_and_err(&loop_means);
    let (dm, ds) = mean_and_err(&diff_means);
    Ok(McPartition {
        field: ThermalResult {
            value: scale * fm,
            std_err: scale * fs,
            samples: cfg.samples,
            method: Method::McField,
        },
        loop_form: ThermalResult {
            value: scale * lm,
            std_err: scale * ls,
            samples: cfg.samples,
            method: Method::McLoop,
        },
        diff_value: scale * dm,
        diff_std_err: scale * ds,
        accepted,
        proposed: cfg.samples,
        negative_signs: batches.iter().map(|a| a.negative_signs).sum(),
        batches: cfg.batches,
    })
}

/// Magnetization estimate on the hard-core one-hole sector with its bound
/// margin.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MagnetizationReport {
    pub estimate: ThermalResult,
    /// (N/2)·tanh(βb), the free-spin magnetization.
    pub bound: f64,
    /// estimate − bound; nonnegative term by term since
    /// tanh(βbn) ≥ tanh(βb) for n ≥ 1.
    pub margin: f64,
    pub accepted: u64,
    pub proposed: u64,
}

/// Estimates ⟨S³⟩ = ½·E[Σ_γ w(γ)tanh(βb·w(γ))] under the loop measure.
///
/// Requires u = ∞ and N = |Λ| − 1; the ratio estimator weighs each
/// accepted sample by its loop-form weight, and the error combines batch
/// means of numerator and denominator through the delta method.
pub fn magnetization_u_infinity(
    model: &McModel,
    cfg: &McConfig,
) -> Result<MagnetizationReport, EstimatorError> {
    if model.constraint_class() != ConstraintClass::UInfinity {
        return Err(EstimatorError::NeedsHardCore("the magnetization estimator"));
    }
    let expected = model.lattice.n_sites() - 1;
    if model.n_elec != expected {
        return Err(EstimatorError::OneHoleFilling { expected, got: model.n_elec });
    }
    let batches = run_ensemble(model, cfg)?;
    let accepted: u64 = batches.iter().map(|a| a.accepted).sum();
    if accepted == 0 {
        return Err(EstimatorError::NoAcceptedSamples { proposed: cfg.samples });
    }
    let num: Vec<f64> = batches.iter().map(|a| a.sum_mag_num / a.n as f64).collect();
    let den: Vec<f64> = batches.iter().map(|a| a.sum_loop / a.n as f64).collect();
    let (nm, ns) = mean_and_err(&num);
    let (dm, ds) = mean_and_err(&den);
    let ratio = nm / dm;
    let cov = covariance_of_means(&num, &den);
    let var = (ns * ns + ratio * ratio * ds * ds - 2.0 * ratio * cov) / (dm * dm);
    let beta = model.params.beta;
    let b = model.params.b;
    let bound = 0.5 * model.n_elec as f64 * (beta * b).tanh();
    Ok(MagnetizationReport {
        estimate: ThermalResult {
            value: ratio,
            std_err: var.max(0.0).sqrt(),
            samples: cfg.samples,
            method: Method::McLoop,
        },
        bound,
        margin: ratio - bound,
        accepted,
        proposed: cfg.samples,
    })
}

/// One estimated cycle-type weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightEntry {
    pub value: f64,
    pub std_err: f64,
    /// Accepted samples realizing this cycle type.
    pub count: u64,
}

/// Field-independent cycle-type weights D_n of the hard-core loop
/// representation: Z(b) = Σ_n D_n·Π_i cosh(βb·nᵢ).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartitionWeights {
    beta: f64,
    scale: f64,
    entries: BTreeMap<Vec<usize>, WeightEntry>,
    /// Per-batch (sample count, per-type sums) kept for reconstruction
    /// error bars.
    batch_sums: Vec<(u64, BTreeMap<Vec<usize>, f64>)>,
    pub accepted: u64,
    pub proposed: u64,
}

impl PartitionWeights {
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn entries(&self) -> &BTreeMap<Vec<usize>, WeightEntry> {
        &self.entries
    }

    /// Cycle types realized by at least one accepted sample.
    pub fn support(&self) -> BTreeSet<Vec<usize>> {
        self.entries
            .iter()
            .filter(|(_, e)| e.count > 0)
            .map(|(n, _)| n.clone())
            .collect()
    }

    /// Ẑ(b) = Σ_n D̂_n·Πcosh(βbnᵢ) with a batch-means standard error; the
    /// cosh factors are applied analytically, so one weight table serves
    /// every field value.
    pub fn reconstruct(&self, b: f64) -> (f64, f64) {
        let means: Vec<f64> = self
            .batch_sums
            .iter()
            .map(|(n, sums)| {
                sums.iter()
                    .map(|(ctype, sum)| {
                        let cosh: f64 = ctype
                            .iter()
                            .map(|&ni| (self.beta * b * ni as f64).cosh())
                            .product();
                        sum * cosh
                    })
                    .sum::<f64>()
                    / *n as f64
            })
            .collect();
        let (m, s) = mean_and_err(&means);
        (self.scale * m, self.scale * s)
    }
}

/// Estimates the cycle-type weights D_n on the hard-core class.
pub fn partition_weights(
    model: &McModel,
    cfg: &McConfig,
) -> Result<PartitionWeights, EstimatorError> {
    if model.constraint_class() != ConstraintClass::UInfinity {
        return Err(EstimatorError::NeedsHardCore("cycle-type weight estimation"));
    }
    let batches = run_ensemble(model, cfg)?;
    let accepted: u64 = batches.iter().map(|a| a.accepted).sum();
    if accepted == 0 {
        return Err(EstimatorError::NoAcceptedSamples { proposed: cfg.samples });
    }
    let scale = model.normalization()?;
    let mut types: BTreeSet<Vec<usize>> = BTreeSet::new();
    for a in &batches {
        types.extend(a.type_sums.keys().cloned());
    }
    let mut entries = BTreeMap::new();
    for ctype in &types {
        let means: Vec<f64> = batches
            .iter()
            .map(|a| a.type_sums.get(ctype).map_or(0.0, |e| e.0) / a.n as f64)
            .collect();
        let (m, s) = mean_and_err(&means);
        let count = batches.iter().map(|a| a.type_sums.get(ctype).map_or(0, |e| e.1)).sum();
        entries.insert(
            ctype.clone(),
            WeightEntry { value: scale * m, std_err: scale * s, count },
        );
    }
    let batch_sums = batches
        .iter()
        .map(|a| {
            (a.n, a.type_sums.iter().map(|(k, (sum, _))| (k.clone(), *sum)).collect())
        })
        .collect();
    Ok(PartitionWeights {
        beta: model.params.beta,
        scale,
        entries,
        batch_sums,
        accepted,
        proposed: cfg.samples,
    })
}

fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut r = 1.0f64;
    for i in 0..k.min(n - k) {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

/// Chebyshev-style field grid: `count` nodes whose cosh(βb) values sit at
/// Chebyshev–Gauss positions in [1, cosh(βb_max)], controlling Vandermonde
/// conditioning while keeping every b strictly positive.
pub fn chebyshev_b_grid(beta: f64, b_max: f64, count: usize) -> Vec<f64> {
    let top = (beta * b_max).cosh();
    (0..count)
        .map(|j| {
            let theta = (2 * j + 1) as f64 * std::f64::consts::PI / (2 * count) as f64;
            let c = 1.0 + (top - 1.0) * 0.5 * (1.0 - theta.cos());
            c.acosh() / beta
        })
        .collect()
}

/// Extracted cosh-polynomial coefficients of the one-dimensional partition
/// function: Z(β, b) = Σ_{k=0}^N C_k·cosh(βb)^k.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoefficientFit {
    pub beta: f64,
    /// C_0 … C_N.
    pub coefficients: Vec<f64>,
    /// ‖V·C − Z‖∞ / ‖Z‖∞ over the fitting grid.
    pub residual: f64,
    /// Vandermonde condition number (2-norm).
    pub condition: f64,
    /// max |C_k| over parity-forbidden k (N − k odd); 0 when none exist.
    pub parity_violation: f64,
    pub grid: Vec<f64>,
}

impl CoefficientFit {
    /// Σ_k C_k·cosh(βb)^k.
    pub fn evaluate(&self, b: f64) -> f64 {
        let c = (self.beta * b).cosh();
        self.coefficients
            .iter()
            .enumerate()
            .map(|(k, &ck)| ck * c.powi(k as i32))
            .sum()
    }
}

/// Solves the Vandermonde system in cosh(βb_j) for the expansion
/// coefficients of a one-dimensional model, from diagonalization values of
/// Z on the supplied field grid.
pub fn one_d_coefficients(
    lattice: &Lattice,
    params: &ModelParams,
    n_elec: usize,
    b_grid: &[f64],
) -> Result<CoefficientFit, EstimatorError> {
    if lattice.dim() != 1 {
        return Err(EstimatorError::NotOneDimensional(lattice.dim()));
    }
    let needed = n_elec + 1;
    let usable: Vec<f64> = b_grid
        .iter()
        .copied()
        .filter(|b| b.is_finite() && *b > 0.0)
        .collect();
    let mut sorted = usable.clone();
    sorted.sort_by(f64::total_cmp);
    let distinct = sorted.windows(2).all(|w| w[0] < w[1]);
    if usable.len() != b_grid.len() || usable.len() < needed || !distinct {
        let got = if distinct { usable.len() } else { sorted.windows(2).filter(|w| w[0] < w[1]).count() + usize::from(!sorted.is_empty()) };
        return Err(EstimatorError::BadGrid { needed, got });
    }
    let kind = if params.u.is_infinite() { BasisKind::Gutzwiller } else { BasisKind::None };
    let spectra = hubbard_sector_spectra(lattice, params, n_elec, kind, None)?;
    let beta = params.beta;
    let m = b_grid.len();
    let v = DMatrix::from_fn(m, needed, |j, k| (beta * b_grid[j]).cosh().powi(k as i32));
    let z = DVector::from_fn(m, |j, _| spectra.z(beta, b_grid[j]));
    let svd = v.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= CONDITION_GUARD) {
        return Err(EstimatorError::IllConditioned(condition));
    }
    let coeffs = svd
        .solve(&z, 0.0)
        .map_err(|e| EstimatorError::SolveFailed(e.to_string()))?;
    let residual_abs = (&v * &coeffs - &z).amax();
    let z_scale = z.amax();
    let coefficients: Vec<f64> = coeffs.iter().copied().collect();
    let parity_violation = coefficients
        .iter()
        .enumerate()
        .filter(|(k, _)| (n_elec - k) % 2 == 1)
        .map(|(_, c)| c.abs())
        .fold(0.0, f64::max);
    Ok(CoefficientFit {
        beta,
        coefficients,
        residual: residual_abs / z_scale,
        condition,
        parity_violation,
        grid: b_grid.to_vec(),
    })
}

/// Which reading of the sector multiplicities matches the spectra.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SectorReading {
    /// Y^(k)(m) = 2^{−k}·binom(k, k/2 − m): the coefficient of z^{2m} in
    /// ((z + z⁻¹)/2)^k.
    Coefficient,
    /// Y^(k)(m) = binom(k, k/2 − m): the literal spin-pattern count.
    Dimension,
}

/// One spin sector's partition value against both candidate resolutions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SectorRow {
    pub twice_m: i32,
    pub sector_z: f64,
    pub coefficient_reading: f64,
    pub dimension_reading: f64,
}

/// Result of resolving Σ_k C_k·cosh^k into spin sectors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SectorIdentityReport {
    pub rows: Vec<SectorRow>,
    /// max sector mismatch of each reading, relative to the largest
    /// sector value.
    pub coefficient_residual: f64,
    pub dimension_residual: f64,
    /// The reading (if any) that matches within [`SECTOR_MATCH_TOL`].
    pub matched: Option<SectorReading>,
}

fn y_factor(k: usize, twice_m: i32) -> Option<f64> {
    let shifted = k as i64 - twice_m as i64;
    if shifted % 2 != 0 || shifted < 0 {
        return None;
    }
    let half = (shifted / 2) as usize;
    if half > k {
        return None;
    }
    Some(binom(k, half))
}

/// Tests the sector resolution Z_M(β; m) = Σ_k C_k·Y^(k)(m) under both
/// candidate Y readings and reports which matches the zero-field sector
/// traces; no silent choice is made.
pub fn sector_identity_check(
    spectra: &SectorSpectra,
    beta: f64,
    fit: &CoefficientFit,
) -> SectorIdentityReport {
    let mut rows = Vec::new();
    let mut max_z = 0.0f64;
    for sector in spectra.sectors() {
        let twice_m = sector.twice_m;
        let sector_z = spectra.sector_z(twice_m, beta).expect("sector enumerated above");
        let mut coeff = 0.0;
        let mut dim = 0.0;
        for (k, &ck) in fit.coefficients.iter().enumerate() {
            if let Some(y) = y_factor(k, twice_m) {
                coeff += ck * y * 0.5f64.powi(k as i32);
                dim += ck * y;
            }
        }
        max_z = max_z.max(sector_z.abs());
        rows.push(SectorRow {
            twice_m,
            sector_z,
            coefficient_reading: coeff,
            dimension_reading: dim,
        });
    }
    let rel = |reading: fn(&SectorRow) -> f64| {
        rows.iter()
            .map(|r| (reading(r) - r.sector_z).abs())
            .fold(0.0, f64::max)
            / max_z
    };
    let coefficient_residual = rel(|r| r.coefficient_reading);
    let dimension_residual = rel(|r| r.dimension_reading);
    let matched = if coefficient_residual < SECTOR_MATCH_TOL {
        Some(SectorReading::Coefficient)
    } else if dimension_residual < SECTOR_MATCH_TOL {
        Some(SectorReading::Dimension)
    } else {
        None
    };
    SectorIdentityReport { rows, coefficient_residual, dimension_residual, matched }
}

/// Bose-field attachment of a magnetization-bound instance.
#[derive(Clone, Copy, Debug)]
pub enum ModelFamily<'a> {
    Hubbard,
    Holstein { phonons: &'a PhononParams, cap: BosonCap },
    Radiation { photons: &'a PhotonParams },
}

impl ModelFamily<'_> {
    pub fn label(&self) -> &'static str {
        match self {
            ModelFamily::Hubbard => "hubbard",
            ModelFamily::Holstein { .. } => "holstein-hubbard",
            ModelFamily::Radiation { .. } => "radiation-hubbard",
        }
    }
}

/// One hard-core one-hole instance whose magnetization margin is checked.
#[derive(Clone, Copy, Debug)]
pub struct AlInstance<'a> {
    pub label: &'a str,
    pub lattice: &'a Lattice,
    pub params: &'a ModelParams,
    pub n_elec: usize,
    pub family: ModelFamily<'a>,
}

/// One (instance, β, b) margin row.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlRow {
    pub label: String,
    pub family: String,
    pub beta: f64,
    pub b: f64,
    pub s3: f64,
    pub bound: f64,
    pub margin: f64,
}

/// Margins table of the magnetization bound sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlReport {
    pub rows: Vec<AlRow>,
}

impl AlReport {
    pub fn min_margin(&self) -> f64 {
        self.rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min)
    }
}

/// Sweeps ⟨S³⟩ − (N/2)tanh(βb) over instances × β × b from sector spectra;
/// errors on the first nonpositive margin, since the bound is claimed
/// strict for every listed configuration.
pub fn aizenman_lieb_report(
    instances: &[AlInstance],
    beta_grid: &[f64],
    b_grid: &[f64],
) -> Result<AlReport, EstimatorError> {
    let grid_ok = |g: &[f64]| !g.is_empty() && g.iter().all(|&x| x.is_finite() && x > 0.0);
    if !grid_ok(beta_grid) || !grid_ok(b_grid) {
        let usable = beta_grid
            .iter()
            .chain(b_grid)
            .filter(|&&x| x.is_finite() && x > 0.0)
            .count();
        return Err(EstimatorError::BadGrid { needed: 2, got: usable });
    }
    let mut rows = Vec::new();
    for inst in instances {
        if !inst.params.u.is_infinite() {
            return Err(EstimatorError::NeedsHardCore("the magnetization bound"));
        }
        let expected = inst.lattice.n_sites() - 1;
        if inst.n_elec != expected {
            return Err(EstimatorError::OneHoleFilling { expected, got: inst.n_elec });
        }
        let spectra = match inst.family {
            ModelFamily::Hubbard => hubbard_sector_spectra(
                inst.lattice,
                inst.params,
                inst.n_elec,
                BasisKind::Gutzwiller,
                None,
            )?,
            ModelFamily::Holstein { phonons, cap } => holstein_sector_spectra(
                inst.lattice,
                inst.params,
                phonons,
                inst.n_elec,
                BasisKind::Gutzwiller,
                cap,
            )?,
            ModelFamily::Radiation { photons } => radiation_sector_spectra(
                inst.lattice,
                inst.params,
                photons,
                inst.n_elec,
                BasisKind::Gutzwiller,
            )?,
        };
        for &beta in beta_grid {
            for &b in b_grid {
                let s3 = spectra.s3(beta, b);
                let bound = 0.5 * inst.n_elec as f64 * (beta * b).tanh();
                let margin = s3 - bound;
                if !(margin > 0.0) {
                    return Err(EstimatorError::MarginViolation {
                        label: inst.label.to_string(),
                        beta,
                        b,
                        margin,
                    });
                }
                rows.push(AlRow {
                    label: inst.label.to_string(),
                    family: inst.family.label().to_string(),
                    beta,
                    b,
                    s3,
                    bound,
                    margin,
                });
            }
        }
    }
    Ok(AlReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configgraph::ConfigGraph;
    use crate::lattice::{Boundary, LatticeSpec, NeighborNorm};
    use approx::assert_relative_eq;

    fn chain(side: i64, boundary: Boundary) -> Lattice {
        Lattice::build(LatticeSpec {
            dim: 1,
            side,
            hopping: 1.0,
            norm: NeighborNorm::L1,
            boundary,
        })
        .unwrap()
    }

    fn params(u: f64, b: f64, beta: f64) -> ModelParams {
        ModelParams { u, u_offsite: None, b, beta, z: None }
    }

    fn mc_cfg(samples: u64, seed: u64) -> McConfig {
        McConfig { samples, seed, batches: 32, threads: 1 }
    }

    #[test]
    fn two_site_partition_pins_the_normalization() {
        // The smallest nontrivial instance decides the estimator prefactor:
        // R = C(4,2) canonical pairs, no relabeling possible, so any
        // misplaced N! would shift Ẑ by a factor 2, dozens of σ here.
        let lat = chain(2, Boundary::Open);
        let p = params(3.0, 0.4, 0.8);
        let model = McModel::bare(&lat, &p, 2);
        let spectra =
            hubbard_sector_spectra(&lat, &p, 2, BasisKind::None, None).unwrap();
        let exact = spectra.z(p.beta, p.b);
        let est = mc_partition(&model, &mc_cfg(40_000, 11)).unwrap();
        assert!(est.accepted > 1000, "acceptance collapsed: {}", est.accepted);
        let oracle = ThermalResult::exact(exact);
        assert!(
            est.field.sigma_distance(&oracle) < 3.0,
            "field form {} ± {} vs exact {}",
            est.field.value,
            est.field.std_err,
            exact
        );
        assert!(
            est.loop_form.sigma_distance(&oracle) < 3.0,
            "loop form {} ± {} vs exact {}",
            est.loop_form.value,
            est.loop_form.std_err,
            exact
        );
        assert!((est.field.value - exact).abs() < 0.05 * exact);
    }

    #[test]
    fn ring_estimator_forms_agree_with_each_other_and_the_oracle() {
        let lat = chain(4, Boundary::Periodic);
        let p = params(4.0, 0.3, 1.0);
        let model = McModel::bare(&lat, &p, 2);
        let spectra =
            hubbard_sector_spectra(&lat, &p, 2, BasisKind::None, None).unwrap();
        let exact = ThermalResult::exact(spectra.z(p.beta, p.b));
        let est = mc_partition(&model, &mc_cfg(60_000, 7)).unwrap();
        assert!(est.field.sigma_distance(&exact) < 3.0);
        assert!(est.loop_form.sigma_distance(&exact) < 3.0);
        assert!(est.forms_agree(3.0), "diff {} ± {}", est.diff_value, est.diff_std_err);
        // Equal-spin exchanges around the ring carry sign −1 and must
        // appear in a run of this size.
        assert!(est.negative_signs > 0);
    }

    #[test]
    fn one_hole_hardcore_run_is_signless_and_magnetized() {
        let lat = chain(4, Boundary::Periodic);
        let p = params(f64::INFINITY, 0.5, 1.0);
        let model = McModel::bare(&lat, &p, 3);
        let spectra =
            hubbard_sector_spectra(&lat, &p, 3, BasisKind::Gutzwiller, None).unwrap();
        let est = mc_partition(&model, &mc_cfg(120_000, 3)).unwrap();
        assert_eq!(est.negative_signs, 0, "one-hole relabelings are all even");
        let exact = ThermalResult::exact(spectra.z(p.beta, p.b));
        assert!(est.field.sigma_distance(&exact) < 3.0);
        assert!(est.loop_form.sigma_distance(&exact) < 3.0);

        let mag = magnetization_u_infinity(&model, &mc_cfg(120_000, 3)).unwrap();
        let s3 = ThermalResult::exact(spectra.s3(p.beta, p.b));
        assert!(
            mag.estimate.sigma_distance(&s3) < 3.0,
            "⟨S³⟩ {} ± {} vs exact {}",
            mag.estimate.value,
            mag.estimate.std_err,
            s3.value
        );
        assert!(mag.margin > 0.0);
        // Every sample's reading dominates the free-spin value, so the
        // estimate does too, regardless of noise.
        assert!(mag.estimate.value >= mag.bound);
    }

    #[test]
    fn single_electron_magnetization_is_exact() {
        let lat = chain(2, Boundary::Open);
        let p = params(f64::INFINITY, 0.7, 1.3);
        let model = McModel::bare(&lat, &p, 1);
        let mag = magnetization_u_infinity(&model, &mc_cfg(2_000, 5)).unwrap();
        // A single electron is one loop of winding 1 in every sample:
        // the ratio collapses to ½tanh(βb) with zero variance.
        assert_relative_eq!(mag.estimate.value, 0.5 * (p.beta * p.b).tanh(), epsilon = 1e-12);
        assert!(mag.estimate.std_err < 1e-12);
        assert_relative_eq!(mag.margin, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn estimator_preconditions_are_enforced() {
        let lat = chain(4, Boundary::Periodic);
        let finite = params(4.0, 0.3, 1.0);
        let model = McModel::bare(&lat, &finite, 3);
        assert!(matches!(
            magnetization_u_infinity(&model, &mc_cfg(64, 1)),
            Err(EstimatorError::NeedsHardCore(_))
        ));
        assert!(matches!(
            partition_weights(&model, &mc_cfg(64, 1)),
            Err(EstimatorError::NeedsHardCore(_))
        ));
        let hard = params(f64::INFINITY, 0.3, 1.0);
        let wrong_fill = McModel::bare(&lat, &hard, 2);
        assert!(matches!(
            magnetization_u_infinity(&wrong_fill, &mc_cfg(64, 1)),
            Err(EstimatorError::OneHoleFilling { expected: 3, got: 2 })
        ));
        let ok = McModel::bare(&lat, &hard, 3);
        assert!(matches!(
            mc_partition(&ok, &McConfig { samples: 64, seed: 1, batches: 8, threads: 1 }),
            Err(EstimatorError::TooFewBatches(8))
        ));
        assert!(matches!(
            mc_partition(&ok, &McConfig { samples: 16, seed: 1, batches: 32, threads: 1 }),
            Err(EstimatorError::EmptyBatches { samples: 16, batches: 32 })
        ));
        assert!(matches!(
            mc_partition(&ok, &McConfig { samples: 64, seed: 1, batches: 32, threads: 0 }),
            Err(EstimatorError::NoThreads)
        ));
    }

    #[test]
    fn hopeless_acceptance_fails_loudly() {
        // Full hard-core filling at a long horizon: any jump collides, and
        // e^{−2β} per path makes a jump-free bundle unobservable in 64
        // draws.
        let lat = chain(4, Boundary::Periodic);
        let p = params(f64::INFINITY, 0.1, 30.0);
        let model = McModel::bare(&lat, &p, 4);
        assert!(matches!(
            mc_partition(&model, &mc_cfg(64, 2)),
            Err(EstimatorError::NoAcceptedSamples { proposed: 64 })
        ));
    }

    #[test]
    fn outputs_are_identical_across_thread_counts() {
        let lat = chain(4, Boundary::Periodic);
        let p = params(4.0, 0.3, 1.0);
        let model = McModel::bare(&lat, &p, 2);
        let base = McConfig { samples: 8_000, seed: 9, batches: 32, threads: 1 };
        let one = mc_partition(&model, &base).unwrap();
        for threads in [2usize, 3, 8] {
            let multi =
                mc_partition(&model, &McConfig { threads, ..base }).unwrap();
            assert_eq!(one.field.value.to_bits(), multi.field.value.to_bits());
            assert_eq!(one.field.std_err.to_bits(), multi.field.std_err.to_bits());
            assert_eq!(one.loop_form.value.to_bits(), multi.loop_form.value.to_bits());
            assert_eq!(one.diff_value.to_bits(), multi.diff_value.to_bits());
            assert_eq!(one.accepted, multi.accepted);
        }
    }

    #[test]
    fn loop_form_grows_with_the_field() {
        // Per sample the loop weight is Πcosh(βbw)·(positive base) on the
        // hard-core class, so the estimate is increasing in b at fixed
        // seed.
        let lat = chain(4, Boundary::Periodic);
        let mut values = Vec::new();
        for b in [0.0, 0.2, 0.6, 1.0] {
            let p = params(f64::INFINITY, b, 1.0);
            let model = McModel::bare(&lat, &p, 3);
            values.push(mc_partition(&model, &mc_cfg(30_000, 4)).unwrap().loop_form.value);
        }
        assert!(values.windows(2).all(|w| w[0] < w[1]), "{values:?}");
    }

    #[test]
    fn cycle_type_weights_match_reachability_and_the_oracle() {
        let lat = chain(4, Boundary::Periodic);
        let p = params(f64::INFINITY, 0.4, 1.5);
        let model = McModel::bare(&lat, &p, 3);
        let weights = partition_weights(&model, &mc_cfg(300_000, 6)).unwrap();
        let graph = ConfigGraph::new(&lat, 3, ConstraintClass::UInfinity).unwrap();
        assert_eq!(
            weights.support(),
            graph.cycle_type_support().unwrap(),
            "estimated cycle types must be exactly the reachable ones"
        );
        for entry in weights.entries().values() {
            assert!(entry.value >= 0.0);
        }
        let spectra =
            hubbard_sector_spectra(&lat, &p, 3, BasisKind::Gutzwiller, None).unwrap();
        // One b-free weight table must reconstruct Z at any field value.
        for b in [0.2, 0.7] {
            let (value, err) = weights.reconstruct(b);
            let exact = spectra.z(p.beta, b);
            assert!(
                (value - exact).abs() < 3.0 * err,
                "Ẑ({b}) = {value} ± {err} vs {exact}"
            );
        }
    }

    #[test]
    fn coefficients_recover_the_free_electron_split() {
        // N = 1 on two open sites: Z = Z_spatial·2cosh(βb) with
        // Z_spatial = 2cosh(βt), so C₁ = 2·2cosh(β) and C₀ = 0.
        let lat = chain(2, Boundary::Open);
        let p = params(0.0, 0.0, 0.9);
        let grid = chebyshev_b_grid(p.beta, 1.2, 4);
        let fit = one_d_coefficients(&lat, &p, 1, &grid).unwrap();
        assert!(fit.residual < 1e-10);
        assert_relative_eq!(fit.coefficients[1], 2.0 * 2.0 * p.beta.cosh(), epsilon = 1e-8);
        assert!(fit.coefficients[0].abs() < 1e-8 * fit.coefficients[1].abs());
        assert_relative_eq!(fit.parity_violation, fit.coefficients[0].abs());
    }

    #[test]
    fn coefficient_fit_interpolates_and_respects_parity() {
        let lat = chain(4, Boundary::Periodic);
        let p = params(4.0, 0.0, 1.0);
        let grid = chebyshev_b_grid(p.beta, 1.5, 5);
        let fit = one_d_coefficients(&lat, &p, 2, &grid).unwrap();
        assert!(fit.residual < 1e-8, "residual {}", fit.residual);
        assert!(fit.condition < CONDITION_GUARD);
        let max_c = fit.coefficients.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        // N = 2: the odd coefficient C₁ is parity-forbidden.
        assert!(
            fit.parity_violation < 1e-8 * max_c,
            "C₁ = {} vs scale {}",
            fit.parity_violation,
            max_c
        );
        let spectra =
            hubbard_sector_spectra(&lat, &p, 2, BasisKind::None, None).unwrap();
        for held_out in [0.05, 0.45, 1.3] {
            let exact = spectra.z(p.beta, held_out);
            assert!(
                (fit.evaluate(held_out) - exact).abs() < 1e-8 * exact.abs(),
                "reconstruction at b = {held_out}"
            );
        }
    }

    #[test]
    fn coefficient_grid_guards_fire() {
        let lat = chain(4, Boundary::Open);
        let p = params(4.0, 0.0, 1.0);
        assert!(matches!(
            one_d_coefficients(&lat, &p, 2, &[0.3, 0.6]),
            Err(EstimatorError::BadGrid { needed: 3, .. })
        ));
        assert!(matches!(
            one_d_coefficients(&lat, &p, 2, &[0.3, 0.3, 0.6]),
            Err(EstimatorError::BadGrid { .. })
        ));
        assert!(matches!(
            one_d_coefficients(&lat, &p, 2, &[0.3, -0.1, 0.6]),
            Err(EstimatorError::BadGrid { .. })
        ));
        // Nearly coincident cosh values blow up the Vandermonde condition.
        let clustered = [0.5, 0.5 + 1e-10, 0.5 + 2e-10];
        assert!(matches!(
            one_d_coefficients(&lat, &p, 2, &clustered),
            Err(EstimatorError::IllConditioned(_))
        ));
        let square = Lattice::build(LatticeSpec {
            dim: 2,
            side: 2,
            hopping: 1.0,
            norm: NeighborNorm::L1,
            boundary: Boundary::Open,
        })
        .unwrap();
        assert!(matches!(
            one_d_coefficients(&square, &p, 2, &[0.2, 0.5, 0.9]),
            Err(EstimatorError::NotOneDimensional(2))
        ));
    }

    #[test]
    fn sector_identity_prefers_the_coefficient_reading() {
        let lat = chain(4, Boundary::Periodic);
        let p = params(4.0, 0.0, 1.0);
        let grid = chebyshev_b_grid(p.beta, 1.5, 5);
        let fit = one_d_coefficients(&lat, &p, 2, &grid).unwrap();
        let spectra =
            hubbard_sector_spectra(&lat, &p, 2, BasisKind::None, None).unwrap();
        let report = sector_identity_check(&spectra, p.beta, &fit);
        assert_eq!(report.matched, Some(SectorReading::Coefficient));
        assert!(report.coefficient_residual < SECTOR_MATCH_TOL);
        assert!(report.dimension_residual > 1e-3, "readings must be distinguishable");
        // b = 0 sector symmetry: m and −m carry equal traces.
        for row in &report.rows {
            let mirror = report
                .rows
                .iter()
                .find(|r| r.twice_m == -row.twice_m)
                .expect("mirrored sector present");
            assert_relative_eq!(row.sector_z, mirror.sector_z, epsilon = 1e-10);
        }
    }

    #[test]
    fn candidate_y_resums_to_the_cosh_expansion() {
        // Σ_m 2^{−k}·binom(k, k/2 − m)·e^{2βbm} = cosh(βb)^k: the
        // coefficient reading is algebraically consistent with the
        // one-dimensional expansion it resolves.
        for k in 0..6usize {
            for bb in [0.3f64, 1.1] {
                let mut total = 0.0;
                for twice_m in -(k as i32)..=(k as i32) {
                    if let Some(y) = y_factor(k, twice_m) {
                        total += y * 0.5f64.powi(k as i32) * (bb * twice_m as f64).exp();
                    }
                }
                assert_relative_eq!(total, (2.0 * bb).cosh().powi(k as i32), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn magnetization_margins_sweep_positive_across_families() {
        let ring = chain(4, Boundary::Periodic);
        let hard = params(f64::INFINITY, 0.0, 1.0);
        let phonons = PhononParams::diagonal(4, 1.0, 0.3, 4);
        let photons = PhotonParams {
            box_side: 4.0,
            cutoff: 1.0,
            zero_mode_mass: 1.0,
            n_max: 4,
            coupling: 0.4,
        };
        let instances = [
            AlInstance {
                label: "ring-4 pure",
                lattice: &ring,
                params: &hard,
                n_elec: 3,
                family: ModelFamily::Hubbard,
            },
            AlInstance {
                label: "ring-4 phonon",
                lattice: &ring,
                params: &hard,
                n_elec: 3,
                family: ModelFamily::Holstein { phonons: &phonons, cap: BosonCap::Total(4) },
            },
            AlInstance {
                label: "ring-4 photon",
                lattice: &ring,
                params: &hard,
                n_elec: 3,
                family: ModelFamily::Radiation { photons: &photons },
            },
        ];
        let report =
            aizenman_lieb_report(&instances, &[0.5, 1.0], &[0.1, 0.5]).unwrap();
        assert_eq!(report.rows.len(), 3 * 2 * 2);
        assert!(report.min_margin() > 0.0);

        // An open one-hole chain factorizes into free spins: margin exactly
        // zero, which the strict sweep must reject.
        let open = chain(4, Boundary::Open);
        let zero_margin = [AlInstance {
            label: "open-4 pure",
            lattice: &open,
            params: &hard,
            n_elec: 3,
            family: ModelFamily::Hubbard,
        }];
        assert!(matches!(
            aizenman_lieb_report(&zero_margin, &[1.0], &[0.5]),
            Err(EstimatorError::MarginViolation { .. })
        ));
        assert!(matches!(
            aizenman_lieb_report(&instances, &[1.0], &[0.5, -0.1]),
            Err(EstimatorError::BadGrid { .. })
        ));
    }
}
