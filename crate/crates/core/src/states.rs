//! Spin-1 chain states and their site moments `⟨ρ_j⟩`, `⟨ρ_j ρ_r⟩`.
//!
//! [`correlation_matrix`] gives the closed forms used by the imaging code.
//! [`oracle_correlation_matrix`] rebuilds the same numbers from an explicit
//! state vector over the `(2F+1)^M` basis and exists to cross-check them.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest chain the state-vector oracle accepts.
pub const ORACLE_MAX_SITES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateKind {
    Product,
    Unpolarized,
    Dimer,
    Trimer,
}

impl StateKind {
    pub fn name(&self) -> &'static str {
        match self {
            StateKind::Product => "product",
            StateKind::Unpolarized => "unpolarized",
            StateKind::Dimer => "dimer",
            StateKind::Trimer => "trimer",
        }
    }

    /// Number of sites in one singlet block, if the state has blocks.
    pub fn block_len(&self) -> Option<usize> {
        match self {
            StateKind::Dimer => Some(2),
            StateKind::Trimer => Some(3),
            _ => None,
        }
    }
}

/// Declarative description of a chain state with one atom per site.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinStateSpec {
    kind: StateKind,
    site_count: usize,
    spin: u32,
    m: Vec<i32>,
}

impl SpinStateSpec {
    /// Product of `|m_j⟩` basis states for spin `F = 1`.
    pub fn product(m: Vec<i32>) -> Result<Self> {
        Self::product_with_spin(m, 1)
    }

    pub fn product_with_spin(m: Vec<i32>, spin: u32) -> Result<Self> {
        if m.is_empty() {
            return Err(Error::invalid(
                "spin state",
                "product state needs at least one site",
            ));
        }
        if spin == 0 {
            return Err(Error::invalid("spin state", "spin F must be at least 1"));
        }
        let f = spin as i32;
        if let Some(bad) = m.iter().find(|&&v| v < -f || v > f) {
            return Err(Error::invalid(
                "spin state",
                format!("m = {bad} outside -{f}..={f}"),
            ));
        }
        Ok(Self {
            kind: StateKind::Product,
            site_count: m.len(),
            spin,
            m,
        })
    }

    pub fn unpolarized(site_count: usize) -> Result<Self> {
        Self::blocked(StateKind::Unpolarized, site_count)
    }

    pub fn dimer(site_count: usize) -> Result<Self> {
        Self::blocked(StateKind::Dimer, site_count)
    }

    pub fn trimer(site_count: usize) -> Result<Self> {
        Self::blocked(StateKind::Trimer, site_count)
    }

    /// Builds any non-product kind.
    pub fn blocked(kind: StateKind, site_count: usize) -> Result<Self> {
        if kind == StateKind::Product {
            return Err(Error::invalid(
                "spin state",
                "product states need explicit m values",
            ));
        }
        if site_count == 0 {
            return Err(Error::invalid("spin state", "site count must be positive"));
        }
        if let Some(block) = kind.block_len() {
            if !site_count.is_multiple_of(block) {
                return Err(Error::invalid(
                    "spin state",
                    format!(
                        "{} state needs a site count divisible by {block}, got {site_count}",
                        kind.name()
                    ),
                ));
            }
        }
        Ok(Self {
            kind,
            site_count,
            spin: 1,
            m: Vec::new(),
        })
    }

    pub fn kind(&self) -> StateKind {
        self.kind
    }

    pub fn site_count(&self) -> usize {
        self.site_count
    }

    pub fn spin(&self) -> u32 {
        self.spin
    }

    /// Per-site `m` values; empty unless the state is a product.
    pub fn m_values(&self) -> &[i32] {
        &self.m
    }
}

/// All atoms in `m = 1` except an `m = 0` defect at the 1-based `defect_site`.
pub fn defect_lattice_spec(site_count: usize, defect_site: usize) -> Result<SpinStateSpec> {
    if defect_site == 0 || defect_site > site_count {
        return Err(Error::invalid(
            "spin state",
            format!("defect site {defect_site} outside 1..={site_count}"),
        ));
    }
    let m = (1..=site_count)
        .map(|j| if j == defect_site { 0 } else { 1 })
        .collect();
    SpinStateSpec::product(m)
}

/// First and second site moments of a chain state.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    means: Vec<f64>,
    moments: Vec<f64>,
}

const MOMENT_TOLERANCE: f64 = 1e-12;

impl CorrelationMatrix {
    /// Validates symmetry and variance nonnegativity.
    pub fn new(means: Vec<f64>, moments: Vec<f64>) -> Result<Self> {
        let n = means.len();
        if moments.len() != n * n {
            return Err(Error::invalid(
                "correlation matrix",
                format!("expected {} second moments, got {}", n * n, moments.len()),
            ));
        }
        let out = Self { means, moments };
        for j in 0..n {
            let d = out.moment(j, j);
            if d < 0.0 || d < out.means[j] * out.means[j] - MOMENT_TOLERANCE {
                return Err(Error::invalid(
                    "correlation matrix",
                    format!("site {} has negative variance", j + 1),
                ));
            }
            for r in 0..j {
                if (out.moment(j, r) - out.moment(r, j)).abs() > MOMENT_TOLERANCE {
                    return Err(Error::invalid(
                        "correlation matrix",
                        format!("entry ({}, {}) breaks symmetry", j + 1, r + 1),
                    ));
                }
            }
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    /// `⟨ρ_j ρ_r⟩` with 0-based indices.
    pub fn moment(&self, j: usize, r: usize) -> f64 {
        self.moments[j * self.dim() + r]
    }

    /// Nonzero second moments as `(j, r, value)`, both orderings included.
    pub fn nonzero_entries(&self) -> Vec<(usize, usize, f64)> {
        let n = self.dim();
        let mut out = Vec::new();
        for j in 0..n {
            for r in 0..n {
                let v = self.moment(j, r);
                if v != 0.0 {
                    out.push((j, r, v));
                }
            }
        }
        out
    }

    /// `Σ_{j,r} ⟨ρ_j ρ_r⟩ a_j a_r`.
    pub fn quadratic_form(&self, amplitudes: &[f64]) -> f64 {
        let n = self.dim();
        let mut total = 0.0;
        for (j, aj) in amplitudes.iter().enumerate().take(n) {
            let row: f64 = self.moments[j * n..(j + 1) * n]
                .iter()
                .zip(amplitudes)
                .map(|(q, ar)| q * ar)
                .sum();
            total += aj * row;
        }
        total
    }

    /// `⟨(ρ_j + ρ_r)²⟩` for 0-based `j`, `r`.
    pub fn pair_sum_square(&self, j: usize, r: usize) -> f64 {
        self.moment(j, j) + self.moment(r, r) + 2.0 * self.moment(j, r)
    }
}

/// Closed-form moments of `spec`.
pub fn correlation_matrix(spec: &SpinStateSpec) -> CorrelationMatrix {
    let n = spec.site_count;
    let mut means = vec![0.0; n];
    let mut moments = vec![0.0; n * n];
    match spec.kind {
        StateKind::Product => {
            for (j, &mj) in spec.m.iter().enumerate() {
                means[j] = mj as f64;
                for (r, &mr) in spec.m.iter().enumerate() {
                    moments[j * n + r] = (mj * mr) as f64;
                }
            }
        }
        StateKind::Unpolarized | StateKind::Dimer | StateKind::Trimer => {
            let block = spec.kind.block_len().unwrap_or(1);
            // inside a singlet block the off-diagonal moments share the
            // variance equally so the block total has zero variance
            let off = if block > 1 {
                -(2.0 / 3.0) / (block as f64 - 1.0)
            } else {
                0.0
            };
            for j in 0..n {
                for r in 0..n {
                    moments[j * n + r] = if j == r {
                        2.0 / 3.0
                    } else if j / block == r / block {
                        off
                    } else {
                        0.0
                    };
                }
            }
        }
    }
    CorrelationMatrix { means, moments }
}

/// Moments computed by explicit expectation values over the full state
/// vector.
pub fn oracle_correlation_matrix(spec: &SpinStateSpec) -> Result<CorrelationMatrix> {
    let n = spec.site_count;
    if n > ORACLE_MAX_SITES {
        return Err(Error::OracleTooLarge {
            sites: n,
            limit: ORACLE_MAX_SITES,
        });
    }
    let levels = 2 * spec.spin as usize + 1;
    let amplitudes = match spec.kind {
        StateKind::Unpolarized => {
            return Err(Error::Unsupported(
                "the unpolarized state is defined by its moments only and has no state vector"
                    .into(),
            ))
        }
        StateKind::Product => {
            let mut psi = vec![0.0; levels.pow(n as u32)];
            let f = spec.spin as i32;
            let idx = spec
                .m
                .iter()
                .rev()
                .fold(0usize, |acc, &m| acc * levels + (f - m) as usize);
            psi[idx] = 1.0;
            psi
        }
        StateKind::Dimer => kron_blocks(&singlet_pair(), 9, n / 2),
        StateKind::Trimer => kron_blocks(&singlet_triple(), 27, n / 3),
    };
    let f = spec.spin as i32;
    let mut means = vec![0.0; n];
    let mut moments = vec![0.0; n * n];
    let mut m = vec![0.0; n];
    for (idx, amp) in amplitudes.iter().enumerate() {
        let p = amp * amp;
        if p == 0.0 {
            continue;
        }
        let mut rest = idx;
        for slot in m.iter_mut() {
            *slot = (f - (rest % levels) as i32) as f64;
            rest /= levels;
        }
        for j in 0..n {
            means[j] += p * m[j];
            for r in 0..n {
                moments[j * n + r] += p * m[j] * m[r];
            }
        }
    }
    CorrelationMatrix::new(means, moments)
}

/// Basis digit for spin-1 level `m`: `+1 → 0`, `0 → 1`, `-1 → 2`.
fn digit(m: i32) -> usize {
    (1 - m) as usize
}

/// Two-site singlet over sites `(2j-1, 2j)`, indexed `d₁ + 3·d₂`.
fn singlet_pair() -> Vec<f64> {
    let c = 1.0 / 3f64.sqrt();
    let mut v = vec![0.0; 9];
    for (m1, m2, s) in [(-1, 1, c), (1, -1, c), (0, 0, -c)] {
        v[digit(m1) + 3 * digit(m2)] = s;
    }
    v
}

/// Three-site singlet, the antisymmetrised `|+0-⟩` combination.
fn singlet_triple() -> Vec<f64> {
    let c = 1.0 / (SQRT_2 * 3f64.sqrt());
    let terms = [
        ((1, 0, -1), c),
        ((-1, 1, 0), c),
        ((0, -1, 1), c),
        ((1, -1, 0), -c),
        ((0, 1, -1), -c),
        ((-1, 0, 1), -c),
    ];
    let mut v = vec![0.0; 27];
    for ((m1, m2, m3), s) in terms {
        v[digit(m1) + 3 * digit(m2) + 9 * digit(m3)] = s;
    }
    v
}

/// Tensor product of `count` copies of `block`, earlier sites in the
/// low-order digits.
fn kron_blocks(block: &[f64], block_dim: usize, count: usize) -> Vec<f64> {
    let mut psi = vec![1.0];
    for _ in 0..count {
        let mut next = vec![0.0; psi.len() * block_dim];
        for (b, &bv) in block.iter().enumerate() {
            if bv == 0.0 {
                continue;
            }
            for (i, &pv) in psi.iter().enumerate() {
                next[i + psi.len() * b] = pv * bv;
            }
        }
        psi = next;
    }
    psi
}
