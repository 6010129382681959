//! Loop decomposition of world-line bundles.
//!
//! A bundle whose terminal configuration is a permutation of its initial
//! one decomposes into closed loops on Λ × [0,β] with periodic time.  World
//! lines are cut wherever the co-location partner of an electron changes
//! and at the time seam; the resulting strands are glued by three kinds of
//! links:
//!
//! * encounter links: when two opposite-spin electrons begin or end a
//!   co-location interval, their strand ends on the same side of the
//!   boundary pair up, reversing the temporal orientation;
//! * continuation links: an electron abandoned by its partner jumping
//!   straight into another encounter keeps its own line;
//! * seam links: an electron's β-end joins the 0-end of the electron whose
//!   initial point it landed on, preserving orientation.
//!
//! Orientation reverses exactly when spin reverses, which makes the
//! cross-section identity Σ σ = ε·w hold per loop at every regular time:
//! the winding number w counts net seam crossings and the parity ε is the
//! spin of the upward strands times the sign of the net crossing count.
//! Spin flips along a loop (the maps g_j) rearrange the spin labels and
//! regroup the strands into new constant-spin world lines, leaving the
//! geometric picture untouched.

use crate::worldline::{constancy_intervals, Bundle, Jump, Point, WorldlinePath};
use crate::Spin;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One constant-spin piece of a loop on a single site.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopSegment {
    pub electron: usize,
    pub site: usize,
    pub t_lo: f64,
    pub t_hi: f64,
    /// +1 when traversed upward in time, −1 downward.
    pub orientation: i8,
}

/// A closed trajectory on Λ × [0,β] with periodic time.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Loop {
    /// Traversal-ordered pieces; consecutive pieces share an endpoint.
    pub segments: Vec<LoopSegment>,
    /// |net oriented wrap count| of the time coordinate.
    pub winding: u32,
    /// Net oriented wrap count before taking the absolute value.
    pub signed_winding: i64,
    /// ε with Σ(spins crossing any regular t on this loop) = ε·w; +1 for
    /// w = 0 loops.
    pub parity: i8,
    /// Electrons whose t = 0 position lies on this loop.
    pub electrons_at_zero: Vec<usize>,
    /// Strand ids traversed, with orientation.
    #[serde(skip)]
    strands: Vec<(usize, i8)>,
}

/// Maximal piece of one electron's world line with a constant co-location
/// partner, delimited by partner changes and the time seam.
#[derive(Clone, Copy, Debug)]
struct Strand {
    electron: usize,
    t_lo: f64,
    t_hi: f64,
    partner: Option<usize>,
}

/// Full decomposition of a bundle into loops.
#[derive(Clone, Debug)]
pub struct LoopDecomposition {
    beta: f64,
    strands: Vec<Strand>,
    /// Strand ids of each electron in time order.
    by_electron: Vec<Vec<usize>>,
    pub loops: Vec<Loop>,
    /// τ with X_β^(j) = X₀^(τ(j)).
    pub permutation: Vec<usize>,
    /// Σ_j σ(X₀^(j)), recorded directly from the initial configuration.
    pub spin_sum_at_zero: i64,
}

#[derive(Debug, Error)]
pub enum LoopError {
    #[error("terminal configuration is not a permutation of the initial one")]
    OpenTrajectory,
    #[error("electrons {0} and {1} share a site with equal spins (bundle outside D)")]
    ForbiddenEncounter(usize, usize),
    #[error("more than two electrons share a site (bundle outside D)")]
    Overcrowded,
    #[error("spin flip could not reassemble constant-spin world lines at t = {0}")]
    Reassembly(f64),
}

impl LoopDecomposition {
    pub fn n_loops(&self) -> usize {
        self.loops.len()
    }

    /// Cycle lengths of the realized permutation, longest first.
    pub fn cycle_type(&self) -> Vec<usize> {
        let mut seen = vec![false; self.permutation.len()];
        let mut lengths = Vec::new();
        for start in 0..self.permutation.len() {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut j = start;
            while !seen[j] {
                seen[j] = true;
                len += 1;
                j = self.permutation[j];
            }
            lengths.push(len);
        }
        lengths.sort_unstable_by(|a, b| b.cmp(a));
        lengths
    }

    /// Loop windings as a multiset, largest first.
    pub fn winding_multiset(&self) -> Vec<u32> {
        let mut w: Vec<u32> = self.loops.iter().map(|g| g.winding).collect();
        w.sort_unstable_by(|a, b| b.cmp(a));
        w
    }

    /// Index of the loop holding electron j's t = 0 position.
    pub fn loop_of_electron(&self, j: usize) -> usize {
        self.loops
            .iter()
            .position(|g| g.electrons_at_zero.contains(&j))
            .expect("every electron's initial strand lies on some loop")
    }

    /// Every strand appears in exactly one loop, exactly once.
    pub fn coverage_is_exact(&self) -> bool {
        let mut count = vec![0usize; self.strands.len()];
        for g in &self.loops {
            for &(s, _) in &g.strands {
                count[s] += 1;
            }
        }
        count.iter().all(|&c| c == 1)
    }

    /// Checks Σ σ = ε·w per loop at the midpoint of every constancy
    /// interval of the bundle (all regular times, up to interval choice).
    pub fn cross_sections_hold(&self, bundle: &Bundle) -> bool {
        let spins: Vec<i64> =
            bundle.paths.iter().map(|p| p.start.spin.sign() as i64).collect();
        for (t0, t1, _) in constancy_intervals(&bundle.paths, bundle.beta) {
            let t = 0.5 * (t0 + t1);
            for g in &self.loops {
                let mut sum = 0i64;
                for &(s, _) in &g.strands {
                    let st = &self.strands[s];
                    if st.t_lo <= t && t < st.t_hi {
                        sum += spins[st.electron];
                    }
                }
                if sum != g.parity as i64 * g.winding as i64 {
                    return false;
                }
            }
        }
        true
    }
}

/// Both weight readings of a decomposition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoopWeight {
    /// Π_γ cosh(βb·w(γ)), the loop form.
    pub cosh_product: f64,
    /// exp(βb·Σ_j σ(X₀^(j))), the unflipped field form.
    pub field_weight: f64,
}

/// Evaluates the loop weight and the direct field weight of a bundle's
/// decomposition.
pub fn loop_weight(dec: &LoopDecomposition, beta: f64, b: f64) -> LoopWeight {
    debug_assert_eq!(beta, dec.beta, "horizon must match the traced bundle");
    let cosh_product =
        dec.loops.iter().map(|g| (beta * b * g.winding as f64).cosh()).product();
    let field_weight = (beta * b * dec.spin_sum_at_zero as f64).exp();
    LoopWeight { cosh_product, field_weight }
}

/// Partner of each electron on each constancy interval, or an error when
/// the bundle leaves the admissible event D.
fn interval_partners(
    bundle: &Bundle,
    intervals: &[(f64, f64, Vec<usize>)],
) -> Result<Vec<Vec<Option<usize>>>, LoopError> {
    let n = bundle.n_electrons();
    let mut out = Vec::with_capacity(intervals.len());
    for (_, _, sites) in intervals {
        let mut partners: Vec<Option<usize>> = vec![None; n];
        for i in 0..n {
            for j in i + 1..n {
                if sites[i] == sites[j] {
                    if bundle.paths[i].start.spin == bundle.paths[j].start.spin {
                        return Err(LoopError::ForbiddenEncounter(i, j));
                    }
                    if partners[i].is_some() || partners[j].is_some() {
                        return Err(LoopError::Overcrowded);
                    }
                    partners[i] = Some(j);
                    partners[j] = Some(i);
                }
            }
        }
        out.push(partners);
    }
    Ok(out)
}

/// Cuts the world lines into strands and records each strand's partner.
fn build_strands(
    bundle: &Bundle,
    intervals: &[(f64, f64, Vec<usize>)],
    partners: &[Vec<Option<usize>>],
) -> (Vec<Strand>, Vec<Vec<usize>>) {
    let n = bundle.n_electrons();
    let mut strands = Vec::new();
    let mut by_electron = vec![Vec::new(); n];
    for e in 0..n {
        let mut lo = 0.0f64;
        let mut partner = partners[0][e];
        for k in 1..intervals.len() {
            if partners[k][e] != partner {
                let cut = intervals[k].0;
                by_electron[e].push(strands.len());
                strands.push(Strand { electron: e, t_lo: lo, t_hi: cut, partner });
                lo = cut;
                partner = partners[k][e];
            }
        }
        by_electron[e].push(strands.len());
        strands.push(Strand { electron: e, t_lo: lo, t_hi: bundle.beta, partner });
    }
    (strands, by_electron)
}

/// End index convention: even = bottom of strand, odd = top.
fn bottom(s: usize) -> usize {
    2 * s
}
fn top(s: usize) -> usize {
    2 * s + 1
}

/// Builds the perfect matching on strand ends together with the seam
/// marks, per the link rules in the module doc.
fn build_matching(
    strands: &[Strand],
    by_electron: &[Vec<usize>],
    tau: &[usize],
) -> (Vec<usize>, Vec<bool>) {
    let mut matched = vec![usize::MAX; 2 * strands.len()];
    let mut seam = vec![false; 2 * strands.len()];
    let link = |a: usize, b: usize, matched: &mut Vec<usize>| {
        debug_assert_eq!(matched[a], usize::MAX);
        debug_assert_eq!(matched[b], usize::MAX);
        matched[a] = b;
        matched[b] = a;
    };
    // Seam: final strand of e meets initial strand of τ(e), except inside
    // an encounter that straddles the seam.  There the seam acts as an
    // encounter boundary: same-side ends of the co-located pair turn into
    // each other without crossing, which keeps the pair on one loop (the
    // statically doubly-occupied site becomes a single loop of winding 0).
    for (e, ids) in by_electron.iter().enumerate() {
        let final_s = *ids.last().unwrap();
        match strands[final_s].partner {
            Some(p) => {
                if e < p {
                    let partner_final = *by_electron[p].last().unwrap();
                    link(top(final_s), top(partner_final), &mut matched);
                }
            }
            None => {
                // e's terminal site is singly occupied, hence so is τ(e)'s
                // initial site; the plain periodic link applies.
                let initial_of_target = by_electron[tau[e]][0];
                link(top(final_s), bottom(initial_of_target), &mut matched);
                seam[top(final_s)] = true;
                seam[bottom(initial_of_target)] = true;
            }
        }
    }
    for (e, ids) in by_electron.iter().enumerate() {
        let initial_s = ids[0];
        if let Some(q) = strands[initial_s].partner {
            if e < q {
                link(bottom(initial_s), bottom(by_electron[q][0]), &mut matched);
            }
        }
    }
    // Encounter boundaries: for each electron's interior cut, examine the
    // partner below and above the cut.
    let strand_ending_at = |e: usize, c: f64| -> usize {
        *by_electron[e]
            .iter()
            .find(|&&s| strands[s].t_hi == c)
            .expect("partner's strand boundary must align")
    };
    let strand_starting_at = |e: usize, c: f64| -> usize {
        *by_electron[e]
            .iter()
            .find(|&&s| strands[s].t_lo == c)
            .expect("partner's strand boundary must align")
    };
    for ids in by_electron {
        for w in ids.windows(2) {
            let (below, above) = (w[0], w[1]);
            let c = strands[below].t_hi;
            match (strands[below].partner, strands[above].partner) {
                // A new encounter begins for e at c: pair with the new
                // partner on both sides of the boundary.  Processing once
                // per unordered pair keeps the links consistent.
                (_, Some(f)) => {
                    if matched[top(below)] == usize::MAX {
                        link(top(below), top(strand_ending_at(f, c)), &mut matched);
                    }
                    if matched[bottom(above)] == usize::MAX {
                        link(bottom(above), bottom(strand_starting_at(f, c)), &mut matched);
                    }
                }
                // e's encounter with g ends at c and e is alone above.
                (Some(g), None) => {
                    let g_above = strand_starting_at(g, c);
                    if strands[g_above].partner.is_none() {
                        // Clean separation: same-side ends pair across the
                        // two participants.
                        if matched[top(below)] == usize::MAX {
                            link(top(below), top(strand_ending_at(g, c)), &mut matched);
                        }
                        if matched[bottom(above)] == usize::MAX {
                            link(bottom(above), bottom(g_above), &mut matched);
                        }
                    } else {
                        // The partner jumped straight into another
                        // encounter: e continues along its own line.
                        link(top(below), bottom(above), &mut matched);
                    }
                }
                (None, None) => unreachable!("cut without a partner change"),
            }
        }
    }
    debug_assert!(matched.iter().all(|&m| m != usize::MAX));
    (matched, seam)
}

/// Site pieces of electron `e` over [t_lo, t_hi), in time order.
fn site_pieces(path: &WorldlinePath, t_lo: f64, t_hi: f64) -> Vec<(usize, f64, f64)> {
    let mut pieces = Vec::new();
    let mut site = path.site_at(t_lo);
    let mut lo = t_lo;
    for j in &path.jumps {
        if j.time <= t_lo {
            continue;
        }
        if j.time >= t_hi {
            break;
        }
        pieces.push((site, lo, j.time));
        site = j.to;
        lo = j.time;
    }
    pieces.push((site, lo, t_hi));
    pieces
}

/// Decomposes a bundle into loops.  The bundle must lie in D (no
/// equal-spin co-location) and close up to a permutation.
pub fn trace_loops(bundle: &Bundle) -> Result<LoopDecomposition, LoopError> {
    let flags = crate::worldline::classify(bundle);
    let tau = flags.permutation.ok_or(LoopError::OpenTrajectory)?;
    let intervals = constancy_intervals(&bundle.paths, bundle.beta);
    let partners = interval_partners(bundle, &intervals)?;
    let (strands, by_electron) = build_strands(bundle, &intervals, &partners);
    let (matched, seam) = build_matching(&strands, &by_electron, &tau);

    let mut visited = vec![false; strands.len()];
    let mut loops = Vec::new();
    for start in 0..strands.len() {
        if visited[start] {
            continue;
        }
        let first_entry = bottom(start);
        let mut entry = first_entry;
        let mut traversal: Vec<(usize, i8)> = Vec::new();
        let mut signed_winding = 0i64;
        loop {
            let s = entry / 2;
            let dir: i8 = if entry % 2 == 0 { 1 } else { -1 };
            visited[s] = true;
            traversal.push((s, dir));
            let exit = if dir == 1 { top(s) } else { bottom(s) };
            if seam[exit] {
                signed_winding += dir as i64;
            }
            entry = matched[exit];
            if entry == first_entry {
                break;
            }
        }
        // Upward strands all carry one spin, downward strands the other.
        let spin_up_sign = {
            let &(s, dir) = traversal
                .iter()
                .find(|&&(_, d)| d == 1)
                .expect("the starting strand is traversed upward");
            debug_assert_eq!(dir, 1);
            bundle.paths[strands[s].electron].start.spin.sign()
        };
        debug_assert!(traversal.iter().all(|&(s, d)| {
            bundle.paths[strands[s].electron].start.spin.sign() == d * spin_up_sign
        }));
        let parity = if signed_winding == 0 {
            1
        } else {
            spin_up_sign * (signed_winding.signum() as i8)
        };
        let electrons_at_zero: Vec<usize> = traversal
            .iter()
            .filter(|&&(s, _)| strands[s].t_lo == 0.0)
            .map(|&(s, _)| strands[s].electron)
            .collect();
        let mut segments = Vec::new();
        for &(s, dir) in &traversal {
            let st = &strands[s];
            let mut pieces = site_pieces(&bundle.paths[st.electron], st.t_lo, st.t_hi);
            if dir == -1 {
                pieces.reverse();
            }
            segments.extend(pieces.into_iter().map(|(site, lo, hi)| LoopSegment {
                electron: st.electron,
                site,
                t_lo: lo,
                t_hi: hi,
                orientation: dir,
            }));
        }
        loops.push(Loop {
            segments,
            winding: signed_winding.unsigned_abs() as u32,
            signed_winding,
            parity,
            electrons_at_zero,
            strands: traversal,
        });
    }
    let spin_sum_at_zero =
        bundle.paths.iter().map(|p| p.start.spin.sign() as i64).sum();
    Ok(LoopDecomposition {
        beta: bundle.beta,
        strands,
        by_electron,
        loops,
        permutation: tau,
        spin_sum_at_zero,
    })
}

/// Returns g_j applied to the bundle: spins flip along the loop through
/// electron j's t = 0 position and the strands regroup into constant-spin
/// world lines over the same geometric picture.
pub fn spin_flip(bundle: &Bundle, j: usize) -> Result<Bundle, LoopError> {
    let dec = trace_loops(bundle)?;
    let target = dec.loop_of_electron(j);
    flip_loops(bundle, &dec, &[target])
}

/// Applies the simultaneous spin flip of several loops (distinct indices
/// into `dec.loops`); `spin_flip` is the single-loop case.
pub fn flip_loops(
    bundle: &Bundle,
    dec: &LoopDecomposition,
    loop_indices: &[usize],
) -> Result<Bundle, LoopError> {
    let mut flipped = vec![false; dec.strands.len()];
    for &li in loop_indices {
        for &(s, _) in &dec.loops[li].strands {
            flipped[s] = true;
        }
    }
    let spin_of = |s: usize| -> Spin {
        let base = bundle.paths[dec.strands[s].electron].start.spin;
        if flipped[s] {
            base.flipped()
        } else {
            base
        }
    };

    // Glue strands back across every interior cut: each strand ending at c
    // continues as exactly one strand starting at c with the same (flipped)
    // spin, reachable either in place or through one of the original jumps
    // at c, every jump being used exactly once.
    let mut cut_times: Vec<f64> = dec
        .strands
        .iter()
        .filter(|s| s.t_hi < bundle.beta)
        .map(|s| s.t_hi)
        .collect();
    cut_times.sort_by(f64::total_cmp);
    cut_times.dedup();

    let site_below = |s: usize| -> usize {
        let st = &dec.strands[s];
        let path = &bundle.paths[st.electron];
        match path.jumps.partition_point(|j| j.time < st.t_hi) {
            0 => path.start.site,
            k => path.jumps[k - 1].to,
        }
    };
    let site_above =
        |s: usize| -> usize { bundle.paths[dec.strands[s].electron].site_at(dec.strands[s].t_lo) };

    // successor[strand] = (next strand, glue jump if the composite moves).
    let mut successor: Vec<Option<(usize, Option<Jump>)>> = vec![None; dec.strands.len()];
    for &c in &cut_times {
        let belows: Vec<usize> =
            (0..dec.strands.len()).filter(|&s| dec.strands[s].t_hi == c).collect();
        let aboves: Vec<usize> =
            (0..dec.strands.len()).filter(|&s| dec.strands[s].t_lo == c).collect();
        // Only jumps of electrons cut at c are glue jumps; a coincident
        // jump of an uncut electron stays interior to its strand.
        let mut cut_electrons: Vec<usize> =
            belows.iter().map(|&s| dec.strands[s].electron).collect();
        cut_electrons.sort_unstable();
        cut_electrons.dedup();
        let jumps_at_c: Vec<(usize, usize)> = cut_electrons
            .iter()
            .flat_map(|&e| {
                bundle.paths[e].jumps.iter().filter(|jp| jp.time == c).map(|jp| (jp.from, jp.to))
            })
            .collect();
        let assignment = assign_at_cut(&belows, &aboves, &jumps_at_c, &spin_of, &site_below, &site_above)
            .ok_or(LoopError::Reassembly(c))?;
        for (bi, (ai, jump)) in assignment {
            successor[bi] = Some((
                ai,
                jump.map(|(from, to)| Jump { time: c, from, to }),
            ));
        }
    }

    // Compose the new world lines, keeping each label anchored at its t = 0
    // strand.
    let mut new_paths = Vec::with_capacity(bundle.n_electrons());
    for e in 0..bundle.n_electrons() {
        let first = dec.by_electron[e][0];
        let start = Point { site: bundle.paths[e].start.site, spin: spin_of(first) };
        let mut jumps = Vec::new();
        let mut s = first;
        loop {
            let st = &dec.strands[s];
            let path = &bundle.paths[st.electron];
            for jp in &path.jumps {
                if jp.time > st.t_lo && jp.time < st.t_hi {
                    jumps.push(*jp);
                }
            }
            if st.t_hi >= bundle.beta {
                break;
            }
            let (next, glue) = successor[s].expect("interior cuts are fully assigned");
            if let Some(jp) = glue {
                jumps.push(jp);
            }
            s = next;
        }
        new_paths.push(WorldlinePath { start, beta: bundle.beta, jumps });
    }
    Ok(Bundle::new(new_paths).expect("horizons are preserved"))
}

/// Finds the unique spin- and geometry-consistent pairing of strands
/// ending at a cut with strands starting there.  Returns pairs
/// (below, (above, moved-via-jump)).
#[allow(clippy::too_many_arguments)]
fn assign_at_cut(
    belows: &[usize],
    aboves: &[usize],
    jumps: &[(usize, usize)],
    spin_of: &dyn Fn(usize) -> Spin,
    site_below: &dyn Fn(usize) -> usize,
    site_above: &dyn Fn(usize) -> usize,
) -> Option<Vec<(usize, (usize, Option<(usize, usize)>))>> {
    fn search(
        k: usize,
        belows: &[usize],
        aboves: &[usize],
        taken: &mut Vec<bool>,
        jump_used: &mut Vec<bool>,
        jumps: &[(usize, usize)],
        spin_of: &dyn Fn(usize) -> Spin,
        site_below: &dyn Fn(usize) -> usize,
        site_above: &dyn Fn(usize) -> usize,
        out: &mut Vec<(usize, (usize, Option<(usize, usize)>))>,
    ) -> bool {
        if k == belows.len() {
            return jump_used.iter().all(|&u| u);
        }
        let b = belows[k];
        for (ai, &a) in aboves.iter().enumerate() {
            if taken[ai] || spin_of(b) != spin_of(a) {
                continue;
            }
            let (sb, sa) = (site_below(b), site_above(a));
            if sb == sa {
                taken[ai] = true;
                out.push((b, (a, None)));
                if search(k + 1, belows, aboves, taken, jump_used, jumps, spin_of, site_below, site_above, out) {
                    return true;
                }
                out.pop();
                taken[ai] = false;
            } else {
                for (ji, &(from, to)) in jumps.iter().enumerate() {
                    if !jump_used[ji] && from == sb && to == sa {
                        taken[ai] = true;
                        jump_used[ji] = true;
                        out.push((b, (a, Some((from, to)))));
                        if search(k + 1, belows, aboves, taken, jump_used, jumps, spin_of, site_below, site_above, out)
                        {
                            return true;
                        }
                        out.pop();
                        jump_used[ji] = false;
                        taken[ai] = false;
                        break;
                    }
                }
            }
        }
        false
    }
    let mut taken = vec![false; aboves.len()];
    let mut jump_used = vec![false; jumps.len()];
    let mut out = Vec::with_capacity(belows.len());
    if search(0, belows, aboves, &mut taken, &mut jump_used, jumps, spin_of, site_below, site_above, &mut out) {
        Some(out)
    } else {
        None
    }
}
