//! Single-excitation collective basis: one atom in the `F = 0` excited
//! state, every other atom in a ground Zeeman sublevel.

use std::collections::HashMap;

use thiserror::Error;

use crate::atomic::SUBLEVELS;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BasisError {
    #[error("full basis dimension {dim} exceeds the configured cap {cap}")]
    DimensionOverflow { dim: u128, cap: usize },
}

/// Basis truncation: the full product space of spectator sublevels, or at
/// most `s` spectator atoms away from the initial `M0 = +1` orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Truncation {
    Full,
    MaxSpinFlips(usize),
}

/// One collective state: atom `excited` carries the excitation, the other
/// `N - 1` atoms hold the ground sublevels `spectators` (in atom order,
/// skipping the excited one).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BasisState {
    pub excited: usize,
    pub spectators: Vec<i8>,
}

impl BasisState {
    /// Ground sublevel of atom `j` (must differ from the excited atom).
    pub fn spectator(&self, j: usize) -> i8 {
        debug_assert!(j != self.excited);
        if j < self.excited {
            self.spectators[j]
        } else {
            self.spectators[j - 1]
        }
    }
}

/// Enumerated basis with a bijective index map, in deterministic order:
/// excited index major, spectator configuration lexicographic over the
/// sublevels `(-1, 0, +1)`.
#[derive(Debug, Clone)]
pub struct ExcitationBasis {
    pub n_atoms: usize,
    pub truncation: Truncation,
    states: Vec<BasisState>,
    index: HashMap<BasisState, usize>,
}

/// Default cap on the full-basis dimension.
pub const DEFAULT_DIMENSION_CAP: usize = 100_000;

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Basis dimension without enumerating: `n 3^(n-1)` for the full basis,
/// `n sum_f C(n-1, f) 2^f` for at most `s` spectator flips.
pub fn basis_dimension(n: usize, truncation: Truncation) -> u128 {
    let sc = n.saturating_sub(1) as u128;
    match truncation {
        Truncation::Full => (n as u128).saturating_mul(3u128.saturating_pow(sc as u32)),
        Truncation::MaxSpinFlips(s) => {
            let mut per_excited: u128 = 0;
            for f in 0..=(s as u128).min(sc) {
                per_excited = per_excited
                    .saturating_add(binomial(sc, f).saturating_mul(1u128 << f.min(126)));
            }
            (n as u128).saturating_mul(per_excited)
        }
    }
}

/// Spectator configurations with at most `max_flips` atoms away from `+1`,
/// generated in lexicographic order over the sublevels `(-1, 0, +1)`.
fn spectator_configs(count: usize, max_flips: usize) -> Vec<Vec<i8>> {
    fn rec(
        pos: usize,
        count: usize,
        flips_left: usize,
        current: &mut Vec<i8>,
        out: &mut Vec<Vec<i8>>,
    ) {
        if pos == count {
            out.push(current.clone());
            return;
        }
        // remaining positions can always be filled with +1, so any prefix
        // within budget extends to at least one configuration
        for &m in &SUBLEVELS {
            let flip = usize::from(m != 1);
            if flip > flips_left {
                continue;
            }
            current.push(m);
            rec(pos + 1, count, flips_left - flip, current, out);
            current.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, count, max_flips, &mut Vec::new(), &mut out);
    out
}

/// Enumerate the basis for `n` atoms under `truncation`, failing when the
/// resulting dimension exceeds `cap`.
pub fn enumerate_basis_with_cap(
    n: usize,
    truncation: Truncation,
    cap: usize,
) -> Result<ExcitationBasis, BasisError> {
    let dim = basis_dimension(n, truncation);
    if dim > cap as u128 {
        return Err(BasisError::DimensionOverflow { dim, cap });
    }
    let max_flips = match truncation {
        Truncation::Full => n.saturating_sub(1),
        Truncation::MaxSpinFlips(s) => s.min(n.saturating_sub(1)),
    };
    let configs = spectator_configs(n.saturating_sub(1), max_flips);
    let mut states = Vec::with_capacity(n * configs.len());
    for excited in 0..n {
        for config in &configs {
            states.push(BasisState {
                excited,
                spectators: config.clone(),
            });
        }
    }
    let index = states
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    Ok(ExcitationBasis {
        n_atoms: n,
        truncation,
        states,
        index,
    })
}

/// Enumerate with the default dimension cap.
pub fn enumerate_basis(n: usize, truncation: Truncation) -> Result<ExcitationBasis, BasisError> {
    enumerate_basis_with_cap(n, truncation, DEFAULT_DIMENSION_CAP)
}

impl ExcitationBasis {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &BasisState {
        &self.states[i]
    }

    pub fn position(&self, state: &BasisState) -> Option<usize> {
        self.index.get(state).copied()
    }

    /// Index of the state with atom `excited` carrying the excitation and
    /// every other atom `j` in `config[j]` (the excited atom's own entry is
    /// ignored). `None` when the spectator configuration is truncated away.
    pub fn position_for(&self, excited: usize, config: &[i8]) -> Option<usize> {
        let spectators: Vec<i8> = config
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != excited)
            .map(|(_, &m)| m)
            .collect();
        self.position(&BasisState { excited, spectators })
    }
}
