//! Occupation-number bases for electrons and truncated Bose modes.
//!
//! Electron basis states are bitmasks over spin-orbitals in site-major,
//! spin-minor order: orbital `2x` is (site x, ↑) and orbital `2x+1` is
//! (site x, ↓).  States are listed in increasing bitmask order; fermionic
//! signs everywhere in the crate refer to creation operators applied in
//! decreasing orbital order onto the vacuum, i.e. the usual
//! `(−1)^{#occupied below}` convention on these masks.

use super::EdError;
use std::collections::HashMap;

/// Constraint tag of an electron basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    /// All N-electron states.
    #[default]
    None,
    /// Hard-core: no site carries both spins.
    Gutzwiller,
    /// Unconstrained basis of a noninteracting reference; identical state
    /// list to `None`, kept as a distinct tag for bookkeeping.
    Free,
}

impl BasisKind {
    fn admits(self, state: u64, n_sites: usize) -> bool {
        match self {
            BasisKind::None | BasisKind::Free => true,
            BasisKind::Gutzwiller => doubly_occupied_mask(state, n_sites) == 0,
        }
    }
}

/// Spin-orbital index of (site, spin).
pub fn orbital(site: usize, down: bool) -> u32 {
    (2 * site + usize::from(down)) as u32
}

/// Bitmask of sites occupied by both spins.
fn doubly_occupied_mask(state: u64, n_sites: usize) -> u64 {
    let mut m = 0u64;
    for s in 0..n_sites {
        if state & (1 << orbital(s, false)) != 0 && state & (1 << orbital(s, true)) != 0 {
            m |= 1 << s;
        }
    }
    m
}

/// N-electron basis on a fixed site count, optionally constrained.
#[derive(Clone, Debug)]
pub struct FermionBasis {
    n_sites: usize,
    n_elec: usize,
    kind: BasisKind,
    /// Sorted ascending; index in this list is the matrix row/column.
    states: Vec<u64>,
}

impl FermionBasis {
    pub fn build(n_sites: usize, n_elec: usize, kind: BasisKind) -> Result<Self, EdError> {
        let max = 2 * n_sites;
        if n_elec < 1 || n_elec > max {
            return Err(EdError::BadElectronCount { n: n_elec, max });
        }
        assert!(n_sites <= 30, "site count too large for u64 masks");
        let mut states = Vec::new();
        let mut c: u64 = (1 << n_elec) - 1;
        let limit: u64 = 1 << max;
        while c < limit {
            if kind.admits(c, n_sites) {
                states.push(c);
            }
            // Gosper's hack: next bitmask with the same popcount.
            let lowest = c & c.wrapping_neg();
            let ripple = c + lowest;
            c = ripple | (((c ^ ripple) >> 2) / lowest);
        }
        if states.is_empty() {
            return Err(EdError::EmptyBasis { n: n_elec, sites: n_sites });
        }
        Ok(Self { n_sites, n_elec, kind, states })
    }

    /// Basis restricted to fixed spin counts (n_up, n_down).
    pub fn sector(
        n_sites: usize,
        n_up: usize,
        n_down: usize,
        kind: BasisKind,
    ) -> Result<Self, EdError> {
        let n_elec = n_up + n_down;
        let max = 2 * n_sites;
        if n_elec < 1 || n_elec > max || n_up > n_sites || n_down > n_sites {
            return Err(EdError::BadElectronCount { n: n_elec, max });
        }
        let mut states = Vec::new();
        for up in site_masks(n_sites, n_up) {
            for down in site_masks(n_sites, n_down) {
                if kind == BasisKind::Gutzwiller && up & down != 0 {
                    continue;
                }
                states.push(interleave(up, down, n_sites));
            }
        }
        if states.is_empty() {
            return Err(EdError::EmptyBasis { n: n_elec, sites: n_sites });
        }
        states.sort_unstable();
        Ok(Self { n_sites, n_elec, kind, states })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_elec(&self) -> usize {
        self.n_elec
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn state(&self, idx: usize) -> u64 {
        self.states[idx]
    }

    pub fn index_of(&self, state: u64) -> Option<usize> {
        self.states.binary_search(&state).ok()
    }

    /// Per-site occupation numbers (0, 1, 2) of a basis state.
    pub fn occupations(&self, state: u64) -> Vec<u8> {
        (0..self.n_sites)
            .map(|s| {
                u8::from(state & (1 << orbital(s, false)) != 0)
                    + u8::from(state & (1 << orbital(s, true)) != 0)
            })
            .collect()
    }

    /// Number of doubly occupied sites.
    pub fn double_occupancy(&self, state: u64) -> u32 {
        doubly_occupied_mask(state, self.n_sites).count_ones()
    }

    /// (n_up, n_down) of a basis state.
    pub fn spin_counts(&self, state: u64) -> (u32, u32) {
        let mut up = 0;
        let mut down = 0;
        for s in 0..self.n_sites {
            up += u32::from(state & (1 << orbital(s, false)) != 0);
            down += u32::from(state & (1 << orbital(s, true)) != 0);
        }
        (up, down)
    }
}

/// All masks over `n_sites` bits with `k` bits set, ascending.
fn site_masks(n_sites: usize, k: usize) -> Vec<u64> {
    if k == 0 {
        return vec![0];
    }
    if k > n_sites {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut c: u64 = (1 << k) - 1;
    let limit: u64 = 1 << n_sites;
    while c < limit {
        out.push(c);
        let lowest = c & c.wrapping_neg();
        let ripple = c + lowest;
        c = ripple | (((c ^ ripple) >> 2) / lowest);
    }
    out
}

fn interleave(up: u64, down: u64, n_sites: usize) -> u64 {
    let mut state = 0u64;
    for s in 0..n_sites {
        if up & (1 << s) != 0 {
            state |= 1 << orbital(s, false);
        }
        if down & (1 << s) != 0 {
            state |= 1 << orbital(s, true);
        }
    }
    state
}

/// `c_o |state⟩`: cleared mask and fermionic sign, or None if unoccupied.
pub(crate) fn annihilate(state: u64, o: u32) -> Option<(u64, f64)> {
    if state & (1 << o) == 0 {
        return None;
    }
    let sign = if (state & ((1u64 << o) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
    Some((state & !(1 << o), sign))
}

/// `c†_o |state⟩`: set mask and fermionic sign, or None if occupied.
pub(crate) fn create(state: u64, o: u32) -> Option<(u64, f64)> {
    if state & (1 << o) != 0 {
        return None;
    }
    let sign = if (state & ((1u64 << o) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
    Some((state | (1 << o), sign))
}

/// Occupation truncation of a Bose basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum BosonCap {
    /// Every mode individually capped at n_max.
    PerMode(u8),
    /// Total quanta Σ_m n_m capped; keeps multi-site phonon bases inside the
    /// dense limit while still reaching per-mode occupations up to the cap.
    Total(u8),
}

/// Truncated occupation basis for a set of Bose modes, lexicographic order.
#[derive(Clone, Debug)]
pub struct BosonBasis {
    n_modes: usize,
    cap: BosonCap,
    states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
}

impl BosonBasis {
    pub fn build(n_modes: usize, cap: BosonCap) -> Self {
        let mut states = Vec::new();
        let mut cur = vec![0u8; n_modes.max(1)];
        if n_modes == 0 {
            states.push(Vec::new());
        } else {
            'outer: loop {
                states.push(cur.clone());
                // Odometer increment respecting the cap.
                let mut axis = n_modes;
                loop {
                    if axis == 0 {
                        break 'outer;
                    }
                    axis -= 1;
                    cur[axis] += 1;
                    let ok = match cap {
                        BosonCap::PerMode(n) => cur[axis] <= n,
                        BosonCap::Total(n) => cur.iter().map(|&q| q as u32).sum::<u32>() <= n as u32,
                    };
                    if ok {
                        break;
                    }
                    cur[axis] = 0;
                }
            }
        }
        let index = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        Self { n_modes, cap, states, index }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn cap(&self) -> BosonCap {
        self.cap
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn occ(&self, idx: usize) -> &[u8] {
        &self.states[idx]
    }

    pub fn total_quanta(&self, idx: usize) -> u32 {
        self.states[idx].iter().map(|&q| q as u32).sum()
    }

    /// `b†_m`: target index and amplitude √(n+1), None when capped out.
    pub fn raise(&self, idx: usize, mode: usize) -> Option<(usize, f64)> {
        let mut s = self.states[idx].clone();
        s[mode] += 1;
        let amp = (s[mode] as f64).sqrt();
        self.index.get(&s).map(|&i| (i, amp))
    }

    /// `b_m`: target index and amplitude √n, None on vacuum occupation.
    pub fn lower(&self, idx: usize, mode: usize) -> Option<(usize, f64)> {
        let mut s = self.states[idx].clone();
        if s[mode] == 0 {
            return None;
        }
        let amp = (s[mode] as f64).sqrt();
        s[mode] -= 1;
        self.index.get(&s).map(|&i| (i, amp))
    }

    /// Maximum single-mode occupation present in the basis.
    pub fn max_occupation(&self) -> u8 {
        self.states.iter().flat_map(|s| s.iter().copied()).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom(n: usize, k: usize) -> usize {
        if k > n {
            return 0;
        }
        let mut r = 1usize;
        for i in 0..k {
            r = r * (n - i) / (i + 1);
        }
        r
    }

    #[test]
    fn full_basis_counts_match_binomial() {
        for (sites, n) in [(2usize, 2usize), (4, 3), (4, 5), (3, 6)] {
            let b = FermionBasis::build(sites, n, BasisKind::None).unwrap();
            assert_eq!(b.dim(), binom(2 * sites, n), "sites={sites} n={n}");
            for w in b.states().windows(2) {
                assert!(w[0] < w[1]);
            }
        }
    }

    #[test]
    fn gutzwiller_basis_counts_by_brute_force() {
        for (sites, n) in [(2usize, 2usize), (4, 3), (4, 4), (3, 3)] {
            let b = FermionBasis::build(sites, n, BasisKind::Gutzwiller).unwrap();
            // Brute force: enumerate all masks, count admissible ones.
            let mut count = 0;
            for m in 0u64..(1 << (2 * sites)) {
                if m.count_ones() as usize == n
                    && (0..sites).all(|s| m & (3 << (2 * s)) != 3 << (2 * s))
                {
                    count += 1;
                }
            }
            assert_eq!(b.dim(), count, "sites={sites} n={n}");
            assert_eq!(b.dim(), binom(sites, n) << n, "hard-core count formula");
        }
    }

    #[test]
    fn gutzwiller_overfilled_is_empty() {
        match FermionBasis::build(3, 4, BasisKind::Gutzwiller) {
            Err(EdError::EmptyBasis { n: 4, sites: 3 }) => {}
            other => panic!("expected EmptyBasis, got {other:?}"),
        }
    }

    #[test]
    fn sector_bases_partition_the_full_basis() {
        let sites = 4;
        let n = 3;
        for kind in [BasisKind::None, BasisKind::Gutzwiller] {
            let full = FermionBasis::build(sites, n, kind).unwrap();
            let mut all: Vec<u64> = Vec::new();
            for n_up in 0..=n {
                let n_down = n - n_up;
                if n_up > sites || n_down > sites {
                    continue;
                }
                if let Ok(sec) = FermionBasis::sector(sites, n_up, n_down, kind) {
                    for &s in sec.states() {
                        let (u, d) = sec.spin_counts(s);
                        assert_eq!((u as usize, d as usize), (n_up, n_down));
                    }
                    all.extend_from_slice(sec.states());
                }
            }
            all.sort_unstable();
            assert_eq!(all, full.states());
        }
    }

    #[test]
    fn fermionic_signs_anticommute() {
        // c†_a c†_b = −c†_b c†_a on the vacuum, orbitals 1 and 3.
        let (s1, g1) = create(0, 1).unwrap();
        let (s1, g2) = create(s1, 3).unwrap();
        let (s2, h1) = create(0, 3).unwrap();
        let (s2, h2) = create(s2, 1).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(g1 * g2, -(h1 * h2));
        // c_o c†_o = 1 − n_o on empty orbital.
        let (s, a) = create(0b0100, 0).unwrap();
        let (s, b) = annihilate(s, 0).unwrap();
        assert_eq!(s, 0b0100);
        assert_eq!(a * b, 1.0);
    }

    #[test]
    fn occupations_and_double_occupancy() {
        let b = FermionBasis::build(2, 3, BasisKind::None).unwrap();
        // State with site 0 doubly occupied and site 1 spin-up.
        let state = 0b0111u64;
        assert_eq!(b.occupations(state), vec![2, 1]);
        assert_eq!(b.double_occupancy(state), 1);
        assert_eq!(b.spin_counts(state), (2, 1));
    }

    #[test]
    fn per_mode_boson_basis() {
        let b = BosonBasis::build(2, BosonCap::PerMode(2));
        assert_eq!(b.dim(), 9);
        assert_eq!(b.max_occupation(), 2);
        let idx = b.index.get(&vec![1u8, 2]).copied().unwrap();
        assert_eq!(b.raise(idx, 1), None);
        let (j, amp) = b.raise(idx, 0).unwrap();
        assert_eq!(b.occ(j), &[2, 2]);
        assert!((amp - 2f64.sqrt()).abs() < 1e-15);
        let (k, amp) = b.lower(idx, 1).unwrap();
        assert_eq!(b.occ(k), &[1, 1]);
        assert!((amp - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn total_cap_boson_basis() {
        let b = BosonBasis::build(3, BosonCap::Total(4));
        // Stars and bars: C(4+3, 3) states with Σn ≤ 4.
        assert_eq!(b.dim(), 35);
        assert_eq!(b.max_occupation(), 4);
        for i in 0..b.dim() {
            assert!(b.total_quanta(i) <= 4);
        }
        let top = b.index.get(&vec![4u8, 0, 0]).copied().unwrap();
        assert_eq!(b.raise(top, 1), None);
    }

    #[test]
    fn zero_mode_boson_basis_is_scalar() {
        let b = BosonBasis::build(0, BosonCap::PerMode(5));
        assert_eq!(b.dim(), 1);
    }
}
