//! Thermal influence functionals for electron paths coupled to harmonic
//! baths (dispersionless optical phonons, quantized radiation).
//!
//! Integrating a bath of independent oscillators out of the trace leaves,
//! for every fixed world-line bundle, a Gaussian damping factor
//!
//! `W = exp{−½ Q}`, `Q = Σ_m Σ_{i,j} K_{ω_m}(t_i, t_j) c_m(i) c_m(j)`,
//!
//! where i, j run over all jumps of the bundle (all electrons aggregated),
//! c_m(i) is the coupling of mode m to the directed edge traversed by jump
//! i, and K_ω is the β-periodic thermal covariance of one oscillator,
//!
//! `K_ω(s, t) = ½ (1 − e^{−βω})⁻¹ (e^{−(β−|t−s|)ω} + e^{−|t−s|ω})`.
//!
//! Couplings are stored in Segal normalization: mode m dresses jump i with
//! the operator e^{iΦ_m(c)}, Φ_m(c) = c (a_m + a_m†)/√2.  A radiation mode
//! enters exactly this way through its Peierls phase; a phonon displacement
//! e^{ζ(b†−b)} equals e^{iΦ(√2 ζ)}, so phonon couplings carry a factor √2
//! over the bare hop displacements ζ.  The ½ in the exponent is pinned by
//! the operator-trace oracles in the test module: truncated thermal traces
//! of the dressed evolution reproduce exp{−½Q} and reject exp{−¼Q}.

use crate::ed::{PhononParams, PhotonParams};
use crate::lattice::Lattice;
use crate::worldline::Bundle;
use std::collections::{BTreeMap, HashMap};
use std::f64::consts::{PI, SQRT_2};
use thiserror::Error;

/// Largest dyadic refinement level accepted by
/// [`discretization_convergence`]; 2²⁰ bins already push snapping errors to
/// the rounding floor.
pub const MAX_REFINEMENT_LEVEL: u32 = 20;

#[derive(Debug, Error)]
pub enum InfluenceError {
    #[error("inverse temperature must be positive and finite, got {0}")]
    InvalidHorizon(f64),
    #[error("mode frequency must be positive and finite, got {0}")]
    InvalidFrequency(f64),
    #[error("time {t} outside the imaginary-time interval [0, {beta}]")]
    TimeOutOfRange { t: f64, beta: f64 },
    #[error("bundle horizon {bundle} does not match the requested β = {requested}")]
    HorizonMismatch { bundle: f64, requested: f64 },
    #[error("line-integral couplings need a unique geometric step per site pair; this lattice has parallel bonds")]
    AmbiguousGeometry,
    #[error("radiation couplings are defined for lattice dimension ≤ 3, got {0}")]
    UnsupportedDimension(usize),
    #[error("refinement level {0} exceeds the maximum {MAX_REFINEMENT_LEVEL}")]
    LevelTooDeep(u32),
    #[error("invalid parameter: {0}")]
    Params(String),
}

/// β-periodic covariance of a single harmonic oscillator of frequency ω.
///
/// `K(s, t) = ½ (1 − e^{−βω})⁻¹ (e^{−(β−|t−s|)ω} + e^{−|t−s|ω})` on
/// [0, β]²; symmetric, strictly positive, equal at the two seam rows
/// s = 0 and s = β, maximal on the diagonal with K(s, s) = ½ coth(βω/2)
/// and minimal at |t−s| = β/2.
#[derive(Clone, Copy, Debug)]
pub struct InfluenceKernel {
    beta: f64,
    omega: f64,
    /// 1 − e^{−βω}, computed once via expm1 for small-βω accuracy.
    denom: f64,
}

impl InfluenceKernel {
    pub fn new(beta: f64, omega: f64) -> Result<Self, InfluenceError> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(InfluenceError::InvalidHorizon(beta));
        }
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(InfluenceError::InvalidFrequency(omega));
        }
        Ok(Self { beta, omega, denom: -(-beta * omega).exp_m1() })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Covariance at the (validated) time pair (s, t).
    pub fn eval(&self, s: f64, t: f64) -> Result<f64, InfluenceError> {
        for v in [s, t] {
            if !(0.0..=self.beta).contains(&v) {
                return Err(InfluenceError::TimeOutOfRange { t: v, beta: self.beta });
            }
        }
        Ok(self.eval_unchecked(s, t))
    }

    fn eval_unchecked(&self, s: f64, t: f64) -> f64 {
        let delta = (s - t).abs();
        0.5 * ((-(self.beta - delta) * self.omega).exp() + (-delta * self.omega).exp())
            / self.denom
    }
}

/// Convenience evaluation of the thermal covariance; see
/// [`InfluenceKernel`].
pub fn kernel(beta: f64, omega: f64, s: f64, t: f64) -> Result<f64, InfluenceError> {
    InfluenceKernel::new(beta, omega)?.eval(s, t)
}

/// Which physical bath a mode set was derived from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeProvenance {
    Phonon,
    Photon,
}

/// One harmonic bath mode: its frequency and its Segal-normalized coupling
/// to every directed lattice edge.
#[derive(Clone, Debug)]
pub struct BoseMode {
    /// Stable human-readable identifier (site index or momentum label).
    pub label: String,
    /// Oscillator frequency ω > 0.
    pub omega: f64,
    /// Multiplicity weight of this entry in free-oscillator counts.
    ///
    /// Radiation entries are enumerated per momentum lattice point; a ±k
    /// pair lists the same physical oscillator twice (its even and odd
    /// coefficient functions agree up to sign), so those entries carry
    /// weight ½.  All other entries are single oscillators with weight 1.
    pub oscillator_weight: f64,
    /// Directed-edge couplings, antisymmetric under direction reversal;
    /// absent edges couple with 0.
    couplings: BTreeMap<(usize, usize), f64>,
}

impl BoseMode {
    /// Coupling picked up by a jump from `from` to `to`.
    pub fn coupling(&self, from: usize, to: usize) -> f64 {
        *self.couplings.get(&(from, to)).unwrap_or(&0.0)
    }

    /// All stored directed-edge couplings in a fixed (sorted) order.
    pub fn couplings(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.couplings.iter().map(|(&e, &c)| (e, c))
    }

    /// Whether the mode couples to no bond (e.g. transverse photon modes
    /// on a one-dimensional lattice); silent modes still contribute to the
    /// free-boson factor.
    pub fn is_silent(&self) -> bool {
        self.couplings.values().all(|&c| c == 0.0)
    }
}

/// A finite family of bath modes attached to one lattice.
#[derive(Clone, Debug)]
pub struct BoseModeSet {
    pub provenance: ModeProvenance,
    pub modes: Vec<BoseMode>,
}

impl BoseModeSet {
    /// Total oscillator count, respecting multiplicity weights.
    pub fn oscillator_count(&self) -> f64 {
        self.modes.iter().map(|m| m.oscillator_weight).sum()
    }
}

/// Builds the phonon bath modes of a Holstein-type coupling: one mode per
/// lattice site z, all at frequency ω, coupling a hop x → y with
/// `c_z = √2 (g_xz − g_yz)/ω`.
///
/// The bare displacement transferred by the hop is ζ_xy(z) = (g_xz −
/// g_yz)/ω; the stored coupling is its Segal normalization √2 ζ, so that
/// the dressing operator reads e^{ζ(b†−b)} = e^{iΦ(√2 ζ)}.  A diagonal
/// coupling matrix g_xz = g δ_xz therefore yields exactly two nonzero
/// components per edge, ±√2 g/ω at the two endpoints.
pub fn phonon_modes(
    lattice: &Lattice,
    phonons: &PhononParams,
) -> Result<BoseModeSet, InfluenceError> {
    phonons
        .validate(lattice.n_sites())
        .map_err(|e| InfluenceError::Params(e.to_string()))?;
    let omega = phonons.omega;
    let mut modes = Vec::with_capacity(lattice.n_sites());
    for z in 0..lattice.n_sites() {
        let mut couplings = BTreeMap::new();
        for bond in lattice.bonds() {
            let zeta = (phonons.g[bond.u][z] - phonons.g[bond.v][z]) / omega;
            let c = SQRT_2 * zeta;
            // Parallel bonds share endpoints and therefore the same phonon
            // coupling; re-inserting the identical value is harmless.
            couplings.insert((bond.u, bond.v), c);
            couplings.insert((bond.v, bond.u), -c);
        }
        modes.push(BoseMode {
            label: format!("site-{z}"),
            omega,
            oscillator_weight: 1.0,
            couplings,
        });
    }
    Ok(BoseModeSet { provenance: ModeProvenance::Phonon, modes })
}

/// Polarization pair for a momentum grid point, embedded in ℝ³.
///
/// ε₁ = (k₂, −k₁, 0)/√(k₁²+k₂²), ε₂ = k̂ ∧ ε₁; the degenerate on-axis case
/// k₁ = k₂ = 0 (the zero mode included) uses ε_j = 1/√3 for every
/// component and both polarizations.
fn polarizations(k: [f64; 3], on_axis: bool) -> [[f64; 3]; 2] {
    if on_axis {
        let e = 3f64.sqrt().recip();
        return [[e; 3]; 2];
    }
    let planar = (k[0] * k[0] + k[1] * k[1]).sqrt();
    let e1 = [k[1] / planar, -k[0] / planar, 0.0];
    let norm = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
    let kh = [k[0] / norm, k[1] / norm, k[2] / norm];
    let e2 = [
        kh[1] * e1[2] - kh[2] * e1[1],
        kh[2] * e1[0] - kh[0] * e1[2],
        kh[0] * e1[1] - kh[1] * e1[0],
    ];
    [e1, e2]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn embed3(v: &[i64]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (slot, &c) in out.iter_mut().zip(v.iter()) {
        *slot = c as f64;
    }
    out
}

/// Cos- or sin-type coefficient family of a retained momentum.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Family {
    Cos,
    Sin,
}

/// Line-integral coupling of one real radiation mode to the unit step from
/// x to x + o: `ϱ/√ω · (ε·o) · ∫₀¹ trig(k·(x + s o)) ds` with the integral
/// in closed form.  `kdx` and `kdo` are the integer dot products n·x and
/// n·o of the momentum index n with the start coordinate and the step.
fn line_coupling(
    scale: f64,
    eps_dot_step: f64,
    step_angle: f64,
    kdx: i64,
    kdo: i64,
    family: Family,
) -> f64 {
    let phase_x = step_angle * kdx as f64;
    let integral = if kdo == 0 {
        // The phase is constant along the step; the integral degenerates to
        // the integrand itself (the k·(y−x) → 0 limit of the branch below).
        match family {
            Family::Cos => phase_x.cos(),
            Family::Sin => phase_x.sin(),
        }
    } else {
        let delta = step_angle * kdo as f64;
        let phase_y = step_angle * (kdx + kdo) as f64;
        match family {
            Family::Cos => (phase_y.sin() - phase_x.sin()) / delta,
            Family::Sin => (phase_x.cos() - phase_y.cos()) / delta,
        }
    };
    scale * eps_dot_step * integral
}

/// Builds the real radiation modes retained by the momentum cutoff.
///
/// Momenta k = (2π/L)n with n ∈ ℤ^d, |k| ≤ κ are kept (k = 0 always is);
/// each keeps two polarizations ε₁, ε₂ and splits into a cos and a sin
/// coefficient family, except that the identically null sin family at
/// k = 0 is dropped.  The zero mode oscillates at ω(0) = m₀, every other
/// mode at ω(k) = |k|.  The coupling of a mode to the unit step of a bond
/// is the line integral of its field along the step; every coupling obeys
/// |c| ≤ ϱ(k)/√ω(k), and reversing an edge negates it.
///
/// Entries are listed per momentum point, so a ±k pair names each of its
/// physical oscillators twice; the duplicated entries carry
/// `oscillator_weight` ½ and jointly reproduce the oscillator's full
/// quadratic form, keeping every stored coupling inside the bound above.
pub fn photon_modes(
    lattice: &Lattice,
    photons: &PhotonParams,
) -> Result<BoseModeSet, InfluenceError> {
    photons.validate().map_err(|e| InfluenceError::Params(e.to_string()))?;
    let dim = lattice.dim();
    if dim > 3 {
        return Err(InfluenceError::UnsupportedDimension(dim));
    }
    if lattice.has_parallel_bonds() {
        return Err(InfluenceError::AmbiguousGeometry);
    }
    let l = photons.box_side;
    let step_angle = 2.0 * PI / l;
    if lattice.spec().boundary == crate::lattice::Boundary::Periodic
        && photons.cutoff >= step_angle
        && photons.box_side != lattice.spec().side as f64
    {
        return Err(InfluenceError::Params(format!(
            "momentum box side {} incommensurate with periodic lattice side {}",
            photons.box_side,
            lattice.spec().side
        )));
    }
    let radius = photons.cutoff / step_angle;
    let bound = radius.floor() as i64;
    let radius_sq = radius * radius;
    let axis_range = |axis: usize| -> std::ops::RangeInclusive<i64> {
        if axis < dim {
            -bound..=bound
        } else {
            0..=0
        }
    };

    let mut modes = Vec::new();
    for n0 in axis_range(0) {
        for n1 in axis_range(1) {
            for n2 in axis_range(2) {
                let n = [n0, n1, n2];
                let nsq = n0 * n0 + n1 * n1 + n2 * n2;
                if nsq as f64 > radius_sq {
                    continue;
                }
                let is_zero = nsq == 0;
                let k = [
                    step_angle * n0 as f64,
                    step_angle * n1 as f64,
                    step_angle * n2 as f64,
                ];
                let omega = if is_zero {
                    photons.zero_mode_mass
                } else {
                    step_angle * (nsq as f64).sqrt()
                };
                let eps = polarizations(k, n0 == 0 && n1 == 0);
                let scale = photons.coupling / omega.sqrt();
                let weight = if is_zero { 1.0 } else { 0.5 };
                for (lam, eps_lam) in eps.iter().enumerate() {
                    for family in [Family::Cos, Family::Sin] {
                        if is_zero && family == Family::Sin {
                            continue;
                        }
                        let mut couplings = BTreeMap::new();
                        for bond in lattice.bonds() {
                            let x = lattice.coord(bond.u);
                            let o = embed3(&bond.offset);
                            let eps_dot_step = dot3(*eps_lam, o);
                            let kdx: i64 = n
                                .iter()
                                .zip(x.iter())
                                .map(|(&ni, &xi)| ni * xi)
                                .sum();
                            let kdo: i64 = n
                                .iter()
                                .zip(bond.offset.iter())
                                .map(|(&ni, &oi)| ni * oi)
                                .sum();
                            let c = line_coupling(
                                scale,
                                eps_dot_step,
                                step_angle,
                                kdx,
                                kdo,
                                family,
                            );
                            couplings.insert((bond.u, bond.v), c);
                            couplings.insert((bond.v, bond.u), -c);
                        }
                        let fam = match family {
                            Family::Cos => "cos",
                            Family::Sin => "sin",
                        };
                        modes.push(BoseMode {
                            label: format!(
                                "k=({n0},{n1},{n2}) pol={} {fam}",
                                lam + 1
                            ),
                            omega,
                            oscillator_weight: weight,
                            couplings,
                        });
                    }
                }
            }
        }
    }
    Ok(BoseModeSet { provenance: ModeProvenance::Photon, modes })
}

/// Quadratic form Q of a jump list under a mode set:
/// `Q = Σ_m Σ_{i,j} K_{ω_m}(t_i, t_j) c_m(i) c_m(j)` with the full double
/// sum over ordered jump pairs including the diagonal.
///
/// Jumps are given as (time, from, to); Q ≥ 0 up to rounding because every
/// per-mode Gram matrix is positive semidefinite.  Accumulation order is
/// mode-major with a fixed inner pair order, so results are reproducible;
/// kernel matrices are shared across modes of equal frequency.
pub fn quadratic_form(
    jumps: &[(f64, usize, usize)],
    modes: &BoseModeSet,
    beta: f64,
) -> Result<f64, InfluenceError> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(InfluenceError::InvalidHorizon(beta));
    }
    for &(t, _, _) in jumps {
        if !(0.0..=beta).contains(&t) {
            return Err(InfluenceError::TimeOutOfRange { t, beta });
        }
    }
    let n = jumps.len();
    let mut kernels: HashMap<u64, Vec<f64>> = HashMap::new();
    let mut q = 0.0;
    let mut coup = vec![0.0; n];
    for mode in &modes.modes {
        for (slot, &(_, from, to)) in coup.iter_mut().zip(jumps.iter()) {
            *slot = mode.coupling(from, to);
        }
        if coup.iter().all(|&c| c == 0.0) {
            continue;
        }
        let kern = kernels.entry(mode.omega.to_bits()).or_insert_with(|| {
            let k = InfluenceKernel::new(beta, mode.omega)
                .expect("mode frequencies are validated at construction");
            let mut m = vec![0.0; n * n];
            for a in 0..n {
                for b in 0..=a {
                    let v = k.eval_unchecked(jumps[a].0, jumps[b].0);
                    m[a * n + b] = v;
                    m[b * n + a] = v;
                }
            }
            m
        });
        let mut partial = 0.0;
        for a in 0..n {
            for b in 0..n {
                partial += kern[a * n + b] * coup[a] * coup[b];
            }
        }
        q += partial;
    }
    Ok(q)
}

fn bundle_jumps(bundle: &Bundle) -> Vec<(f64, usize, usize)> {
    bundle
        .paths
        .iter()
        .flat_map(|p| p.jumps.iter().map(|j| (j.time, j.from, j.to)))
        .collect()
}

/// Influence weight of a bundle under a mode set: `W = exp{−½ Q} ∈ (0, 1]`.
///
/// A bundle with no jumps, or a mode set with all-zero couplings, weighs
/// exactly 1.  Tiny negative rounding residues of Q are clamped so the
/// weight never exceeds 1.
pub fn influence_weight(
    bundle: &Bundle,
    modes: &BoseModeSet,
    beta: f64,
) -> Result<f64, InfluenceError> {
    if bundle.beta != beta {
        return Err(InfluenceError::HorizonMismatch { bundle: bundle.beta, requested: beta });
    }
    let q = quadratic_form(&bundle_jumps(bundle), modes, beta)?;
    Ok((-0.5 * q.max(0.0)).exp())
}

/// Free-oscillator normalization `Π_m (1 − e^{−βω_m})^{−w_m}` of a mode
/// set, with w the oscillator multiplicity weights.
pub fn free_boson_factor(modes: &BoseModeSet, beta: f64) -> Result<f64, InfluenceError> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(InfluenceError::InvalidHorizon(beta));
    }
    let mut log_sum = 0.0;
    for mode in &modes.modes {
        if !(mode.omega > 0.0) || !mode.omega.is_finite() {
            return Err(InfluenceError::InvalidFrequency(mode.omega));
        }
        log_sum += mode.oscillator_weight * (-(-beta * mode.omega).exp_m1()).ln();
    }
    Ok((-log_sum).exp())
}

/// Dyadic time-snapping study of the quadratic form.
///
/// Level ℓ snaps every jump time onto the right edge of its bin in the
/// uniform partition of [0, β] into 2^ℓ cells, t ↦ β⌈t 2^ℓ/β⌉/2^ℓ, and
/// re-evaluates Q with couplings unchanged.  `levels[ℓ]` then converges to
/// `exact` as ℓ grows, halving its error per level in trend; times already
/// on bin edges are reproduced unchanged.
#[derive(Clone, Debug)]
pub struct DiscretizationReport {
    /// Q of the unsnapped jump times.
    pub exact: f64,
    /// Q after snapping at levels 0..=n.
    pub levels: Vec<f64>,
}

impl DiscretizationReport {
    /// |levels[ℓ] − exact| per level.
    pub fn errors(&self) -> Vec<f64> {
        self.levels.iter().map(|q| (q - self.exact).abs()).collect()
    }
}

/// Evaluates Q on dyadically snapped jump times at levels 0..=n; see
/// [`DiscretizationReport`].
pub fn discretization_convergence(
    bundle: &Bundle,
    modes: &BoseModeSet,
    beta: f64,
    n: u32,
) -> Result<DiscretizationReport, InfluenceError> {
    if bundle.beta != beta {
        return Err(InfluenceError::HorizonMismatch { bundle: bundle.beta, requested: beta });
    }
    if n > MAX_REFINEMENT_LEVEL {
        return Err(InfluenceError::LevelTooDeep(n));
    }
    let jumps = bundle_jumps(bundle);
    let exact = quadratic_form(&jumps, modes, beta)?;
    let mut levels = Vec::with_capacity(n as usize + 1);
    for level in 0..=n {
        let cells = (1u64 << level) as f64;
        let snapped: Vec<(f64, usize, usize)> = jumps
            .iter()
            .map(|&(t, from, to)| (beta * (t / beta * cells).ceil() / cells, from, to))
            .collect();
        levels.push(quadratic_form(&snapped, modes, beta)?);
    }
    Ok(DiscretizationReport { exact, levels })
}
