//! Continuous-time world-line sampling.
//!
//! Each electron moves as an independent jump process on the lattice: the
//! holding time at site y is exponential with rate d(y) = Σ_x t_xy (drawn
//! as a parameter-1 exponential divided by d(y)), and the next site is
//! chosen with probability t_xy/d(y).  Spins never change along a path.
//! Bundles of N such paths are classified by the hard-core events
//! (no equal-spin coincidence; no site sharing at all) and by whether the
//! terminal configuration is a permutation of the initial one.
//!
//! On top of the sampler sit the path functionals the trace formulas need:
//! Coulomb overlap integrals, the degree compensation ∫ Σ_j d(X_s) ds,
//! stochastic line integrals of a bond potential, and a single-particle
//! Feynman-Kac checker against the dense matrix exponential.

use crate::ed::{EdError, EdgePhases, ModelParams};
use crate::lattice::Lattice;
use crate::rng::Substreams;
use crate::Spin;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One electron's location and spin at a fixed time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Point {
    pub site: usize,
    pub spin: Spin,
}

impl Point {
    /// Site-major, spin-minor linear index; the canonical order of points.
    pub fn index(self) -> usize {
        2 * self.site + usize::from(self.spin == Spin::Down)
    }

    pub fn from_index(idx: usize) -> Self {
        Point { site: idx / 2, spin: if idx % 2 == 0 { Spin::Up } else { Spin::Down } }
    }
}

/// A single hop of one electron.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    /// Jump instant in (0, β).
    pub time: f64,
    pub from: usize,
    pub to: usize,
}

/// Right-continuous piecewise-constant trajectory of one electron.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldlinePath {
    pub start: Point,
    pub beta: f64,
    /// Strictly increasing jump times; consecutive sites are neighbors.
    pub jumps: Vec<Jump>,
}

impl WorldlinePath {
    /// Site occupied at time t (right-continuous: the post-jump site at a
    /// jump instant).
    pub fn site_at(&self, t: f64) -> usize {
        match self.jumps.partition_point(|j| j.time <= t) {
            0 => self.start.site,
            k => self.jumps[k - 1].to,
        }
    }

    pub fn final_site(&self) -> usize {
        self.jumps.last().map_or(self.start.site, |j| j.to)
    }

    pub fn final_point(&self) -> Point {
        Point { site: self.final_site(), spin: self.start.spin }
    }

    /// Number of jumps up to and including time t.
    pub fn jumps_by(&self, t: f64) -> usize {
        self.jumps.partition_point(|j| j.time <= t)
    }
}

/// Constraint class of the sampled initial configurations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintClass {
    /// Distinct (site, spin) points; double occupation by opposite spins
    /// allowed.
    FiniteU,
    /// Distinct sites regardless of spin (hard core).
    UInfinity,
}

/// Ensemble parameters for bundle sampling.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PathEnsembleConfig {
    pub beta: f64,
    pub samples: u64,
    pub seed: u64,
    pub constraint: ConstraintClass,
}

impl PathEnsembleConfig {
    pub fn validate(&self) -> Result<(), WorldlineError> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(WorldlineError::BadConfig(format!("beta must be > 0, got {}", self.beta)));
        }
        if self.samples == 0 {
            return Err(WorldlineError::BadConfig("sample count must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// N world lines over a common horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub beta: f64,
    pub paths: Vec<WorldlinePath>,
}

impl Bundle {
    pub fn new(paths: Vec<WorldlinePath>) -> Result<Self, WorldlineError> {
        let beta = paths.first().map_or(0.0, |p| p.beta);
        for p in &paths {
            if p.beta != beta {
                return Err(WorldlineError::MismatchedHorizons(beta, p.beta));
            }
        }
        Ok(Bundle { beta, paths })
    }

    pub fn n_electrons(&self) -> usize {
        self.paths.len()
    }

    pub fn initial_points(&self) -> Vec<Point> {
        self.paths.iter().map(|p| p.start).collect()
    }
}

/// Event classification of one bundle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleFlags {
    /// No two equal-spin electrons ever share a site.
    pub in_d: bool,
    /// No two electrons ever share a site, regardless of spin.
    pub in_d_infinity: bool,
    /// τ with X_β^(j) = X₀^(τ(j)) when the terminal configuration is a
    /// relabeling of the initial one; None otherwise.
    pub permutation: Option<Vec<usize>>,
}

#[derive(Debug, Error)]
pub enum WorldlineError {
    #[error("paths have different horizons: {0} vs {1}")]
    MismatchedHorizons(f64, f64),
    #[error("integration window [{s}, {t}] outside [0, {beta}]")]
    BadWindow { s: f64, t: f64, beta: f64 },
    #[error("{n} electrons exceed the capacity {cap} of the constraint class on this lattice")]
    TooManyElectrons { n: usize, cap: usize },
    #[error("invalid ensemble parameter: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Phase(#[from] EdError),
}

/// Number of canonical representatives of the constraint class: the
/// normalization R in Z ≈ (R/N!)·E[indicator·weight].
pub fn representative_count(lattice: &Lattice, n_elec: usize, class: ConstraintClass) -> f64 {
    fn binom(n: usize, k: usize) -> f64 {
        if k > n {
            return 0.0;
        }
        let mut r = 1.0f64;
        for i in 0..k {
            r = r * (n - i) as f64 / (i + 1) as f64;
        }
        r
    }
    let l = lattice.n_sites();
    match class {
        ConstraintClass::FiniteU => binom(2 * l, n_elec),
        ConstraintClass::UInfinity => binom(l, n_elec) * (n_elec as f64).exp2(),
    }
}

/// Draws a uniformly random canonical representative: a sorted list of
/// distinct points (finite U) or of distinct sites with independently
/// drawn spins (hard core).
pub fn sample_initial(
    lattice: &Lattice,
    n_elec: usize,
    class: ConstraintClass,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Point>, WorldlineError> {
    let l = lattice.n_sites();
    let cap = match class {
        ConstraintClass::FiniteU => 2 * l,
        ConstraintClass::UInfinity => l,
    };
    if n_elec == 0 || n_elec > cap {
        return Err(WorldlineError::TooManyElectrons { n: n_elec, cap });
    }
    match class {
        ConstraintClass::FiniteU => {
            let mut pool: Vec<usize> = (0..2 * l).collect();
            for i in 0..n_elec {
                let j = i + rng.random_range(0..pool.len() - i);
                pool.swap(i, j);
            }
            let mut chosen: Vec<usize> = pool[..n_elec].to_vec();
            chosen.sort_unstable();
            Ok(chosen.into_iter().map(Point::from_index).collect())
        }
        ConstraintClass::UInfinity => {
            let mut pool: Vec<usize> = (0..l).collect();
            for i in 0..n_elec {
                let j = i + rng.random_range(0..pool.len() - i);
                pool.swap(i, j);
            }
            let mut sites: Vec<usize> = pool[..n_elec].to_vec();
            sites.sort_unstable();
            Ok(sites
                .into_iter()
                .map(|site| {
                    let spin = if rng.random::<bool>() { Spin::Up } else { Spin::Down };
                    Point { site, spin }
                })
                .collect())
        }
    }
}

/// Samples one free path: exponential holding times with rate d(y), jump
/// law t_xy/d(y), truncated at the horizon.
pub fn sample_free_path(
    lattice: &Lattice,
    start: Point,
    beta: f64,
    rng: &mut ChaCha8Rng,
) -> WorldlinePath {
    let mut jumps = Vec::new();
    let mut site = start.site;
    let mut t = 0.0;
    loop {
        let rate = lattice.degree(site);
        let unit: f64 = rng.sample(Exp1);
        t += unit / rate;
        if t >= beta {
            break;
        }
        // Next site with probability t_xy/d(y); neighbors are listed in a
        // fixed order, so the scan is deterministic given the draw.
        let mut u = rng.random::<f64>() * rate;
        let neighbors = lattice.neighbors(site);
        let mut next = neighbors[neighbors.len() - 1].0;
        for &(y, t_xy) in neighbors {
            if u < t_xy {
                next = y;
                break;
            }
            u -= t_xy;
        }
        jumps.push(Jump { time: t, from: site, to: next });
        site = next;
    }
    WorldlinePath { start, beta, jumps }
}

/// Draws bundle `index` of the ensemble: substream lane 0 supplies the
/// initial configuration, lane 1+j electron j's path, so any subset of
/// indices can be drawn in any order (or in parallel) with identical
/// results.
pub fn sample_bundle(
    lattice: &Lattice,
    n_elec: usize,
    cfg: &PathEnsembleConfig,
    index: u64,
) -> Result<(Bundle, BundleFlags), WorldlineError> {
    cfg.validate()?;
    let streams = Substreams::new(cfg.seed, n_elec as u64 + 1);
    let mut rng = streams.stream(index, 0);
    let initial = sample_initial(lattice, n_elec, cfg.constraint, &mut rng)?;
    let paths: Vec<WorldlinePath> = initial
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            let mut path_rng = streams.stream(index, j as u64 + 1);
            sample_free_path(lattice, p, cfg.beta, &mut path_rng)
        })
        .collect();
    let bundle = Bundle::new(paths)?;
    let flags = classify(&bundle);
    Ok((bundle, flags))
}

/// Maximal intervals on which every electron sits still, with the site
/// vector on each.  Zero-length intervals from coinciding jump times are
/// dropped; right-continuity makes the post-jump configuration the one
/// that holds on the following interval.
pub(crate) fn constancy_intervals(paths: &[WorldlinePath], beta: f64) -> Vec<(f64, f64, Vec<usize>)> {
    let mut times: Vec<f64> = vec![0.0, beta];
    for p in paths {
        times.extend(p.jumps.iter().map(|j| j.time));
    }
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut out = Vec::with_capacity(times.len());
    for w in times.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        if t1 > t0 {
            out.push((t0, t1, paths.iter().map(|p| p.site_at(t0)).collect()));
        }
    }
    out
}

/// Computes the event flags and realized permutation of a bundle.
pub fn classify(bundle: &Bundle) -> BundleFlags {
    let mut in_d = true;
    let mut in_d_infinity = true;
    for (_, _, sites) in constancy_intervals(&bundle.paths, bundle.beta) {
        for i in 0..sites.len() {
            for j in i + 1..sites.len() {
                if sites[i] == sites[j] {
                    in_d_infinity = false;
                    if bundle.paths[i].start.spin == bundle.paths[j].start.spin {
                        in_d = false;
                    }
                }
            }
        }
        if !in_d {
            break;
        }
    }
    let initial = bundle.initial_points();
    let mut permutation = Some(vec![0usize; bundle.paths.len()]);
    let mut used = vec![false; bundle.paths.len()];
    'outer: for (j, p) in bundle.paths.iter().enumerate() {
        let end = p.final_point();
        for (i, &q) in initial.iter().enumerate() {
            if q == end && !used[i] {
                used[i] = true;
                if let Some(perm) = permutation.as_mut() {
                    perm[j] = i;
                }
                continue 'outer;
            }
        }
        permutation = None;
        break;
    }
    BundleFlags { in_d, in_d_infinity, permutation }
}

/// The two time integrals of the interaction functional.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoulombParts {
    /// ∫₀^β Ṽ(X_s) ds: U·(doubly occupied time) plus the literal ordered
    /// double sum of off-site couplings.
    pub interaction: f64,
    /// ∫₀^β Σ_j d(X_s^(j)) ds, the jump-rate compensation.
    pub compensation: f64,
}

/// Evaluates both integrals exactly from the piecewise-constant overlap
/// structure of the bundle.
pub fn coulomb_integral(
    lattice: &Lattice,
    paths: &[WorldlinePath],
    params: &ModelParams,
) -> Result<CoulombParts, WorldlineError> {
    let beta = paths.first().map_or(0.0, |p| p.beta);
    for p in paths {
        if p.beta != beta {
            return Err(WorldlineError::MismatchedHorizons(beta, p.beta));
        }
    }
    let n_sites = lattice.n_sites();
    let mut interaction = 0.0;
    let mut compensation = 0.0;
    let mut up = vec![0u32; n_sites];
    let mut down = vec![0u32; n_sites];
    for (t0, t1, sites) in constancy_intervals(paths, beta) {
        let len = t1 - t0;
        up.fill(0);
        down.fill(0);
        for (p, &site) in paths.iter().zip(&sites) {
            match p.start.spin {
                Spin::Up => up[site] += 1,
                Spin::Down => down[site] += 1,
            }
            compensation += lattice.degree(site) * len;
        }
        let mut v = 0.0;
        if params.u.is_finite() && params.u != 0.0 {
            let pairs: f64 = (0..n_sites).map(|x| (up[x] * down[x]) as f64).sum();
            v += params.u * pairs;
        }
        if params.u_offsite.is_some() {
            let occ: Vec<u8> = (0..n_sites).map(|x| (up[x] + down[x]) as u8).collect();
            v += params.offsite_energy(&occ);
        }
        interaction += v * len;
    }
    Ok(CoulombParts { interaction, compensation })
}

/// Line integral of an antisymmetric bond potential along one path over
/// (s, t]: the sum of α(from, to) over jumps in the window.
pub fn stochastic_phase(
    path: &WorldlinePath,
    phases: &EdgePhases,
    s: f64,
    t: f64,
) -> Result<f64, WorldlineError> {
    if !(0.0 <= s && s <= t && t <= path.beta) {
        return Err(WorldlineError::BadWindow { s, t, beta: path.beta });
    }
    let mut total = 0.0;
    for j in &path.jumps {
        if j.time > s && j.time <= t {
            total += phases.phase(j.from, j.to)?;
        }
    }
    Ok(total)
}

/// Monte Carlo estimate of a propagator matrix element.
#[derive(Clone, Copy, Debug)]
pub struct FkEstimate {
    pub value: Complex64,
    /// Combined standard error √((Var Re + Var Im)/n).
    pub se: f64,
    pub samples: u64,
}

/// Estimates ⟨δ_X, e^{−β h} δ_Y⟩ for the single-particle Hamiltonian
/// h = hopping (with optional bond phases) + site potential v, by averaging
/// `exp{∫(d − v)ds} · e^{iΣα} · 1[X_β = y]` over free paths started at x.
/// Opposite spins give exactly zero by spin conservation.
pub fn fk_check_single(
    lattice: &Lattice,
    v: &[f64],
    phases: Option<&EdgePhases>,
    beta: f64,
    x: Point,
    y: Point,
    n_samples: u64,
    seed: u64,
) -> Result<FkEstimate, WorldlineError> {
    if v.len() != lattice.n_sites() {
        return Err(WorldlineError::BadConfig(format!(
            "potential has {} entries for {} sites",
            v.len(),
            lattice.n_sites()
        )));
    }
    if n_samples == 0 {
        return Err(WorldlineError::BadConfig("sample count must be ≥ 1".into()));
    }
    if x.spin != y.spin {
        return Ok(FkEstimate { value: Complex64::ZERO, se: 0.0, samples: n_samples });
    }
    let streams = Substreams::new(seed, 1);
    let mut sum = Complex64::ZERO;
    let mut sum_re2 = 0.0;
    let mut sum_im2 = 0.0;
    for i in 0..n_samples {
        let mut rng = streams.stream(i, 0);
        let path = sample_free_path(lattice, x, beta, &mut rng);
        let w = if path.final_site() == y.site {
            let mut action = 0.0;
            let mut prev = 0.0;
            let mut site = x.site;
            for j in &path.jumps {
                action += (lattice.degree(site) - v[site]) * (j.time - prev);
                prev = j.time;
                site = j.to;
            }
            action += (lattice.degree(site) - v[site]) * (beta - prev);
            let angle = match phases {
                Some(p) => stochastic_phase(&path, p, 0.0, beta)?,
                None => 0.0,
            };
            Complex64::new(0.0, angle).exp() * action.exp()
        } else {
            Complex64::ZERO
        };
        sum += w;
        sum_re2 += w.re * w.re;
        sum_im2 += w.im * w.im;
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var_re = (sum_re2 / n - mean.re * mean.re).max(0.0);
    let var_im = (sum_im2 / n - mean.im * mean.im).max(0.0);
    Ok(FkEstimate { value: mean, se: ((var_re + var_im) / n).sqrt(), samples: n_samples })
}

/// Kolmogorov-Smirnov statistic of samples against a continuous CDF.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// χ² goodness-of-fit report for observed counts against Poisson(λ).
#[derive(Clone, Debug)]
pub struct PoissonChiSquare {
    pub statistic: f64,
    pub dof: usize,
    /// 1% critical value of the χ²(dof) distribution.
    pub critical_1pct: f64,
}

/// Tests a jump-count histogram (index = count, value = occurrences)
/// against Poisson(λ).  Bins with expected count below 5 are pooled into
/// their neighbor toward the mode, the standard validity rule.
pub fn poisson_chi_square(histogram: &[u64], lambda: f64) -> PoissonChiSquare {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let n: u64 = histogram.iter().sum();
    let total = n as f64;
    // Poisson pmf over 0..=max, with everything above the histogram range
    // folded into the final bin.
    let k_max = histogram.len();
    let mut expected: Vec<f64> = Vec::with_capacity(k_max + 1);
    let mut pmf = (-lambda).exp();
    let mut cum = 0.0;
    for k in 0..k_max {
        expected.push(total * pmf);
        cum += pmf;
        pmf *= lambda / (k + 1) as f64;
    }
    expected.push(total * (1.0 - cum));
    let mut observed: Vec<f64> = histogram.iter().map(|&c| c as f64).collect();
    observed.push(0.0);
    // Pool low-expectation bins from the right, then from the left.
    while expected.len() > 2 && *expected.last().unwrap() < 5.0 {
        let e = expected.pop().unwrap();
        let o = observed.pop().unwrap();
        *expected.last_mut().unwrap() += e;
        *observed.last_mut().unwrap() += o;
    }
    while expected.len() > 2 && expected[0] < 5.0 {
        expected[1] += expected.remove(0);
        observed[1] += observed.remove(0);
    }
    let statistic: f64 = expected
        .iter()
        .zip(&observed)
        .map(|(&e, &o)| if e > 0.0 { (o - e) * (o - e) / e } else { 0.0 })
        .sum();
    let dof = expected.len().saturating_sub(1).max(1);
    let critical_1pct = ChiSquared::new(dof as f64).unwrap().inverse_cdf(0.99);
    PoissonChiSquare { statistic, dof, critical_1pct }
}
