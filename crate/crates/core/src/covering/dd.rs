//! Mixed-integer connectivity system based on diagonal dominance of the
//! shifted Laplacian, and an exhaustive checker for tiny instances.

use serde::Serialize;

use crate::error::CoveringError;
use crate::graphs::{connected_components, CellGraph};

/// Largest open-cell count accepted by [`check_dd_exhaustive`].
pub const DD_ENUMERATION_CAP: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum DdVar {
    /// Sensors at a cell.
    C(usize),
    /// Cell holds at least one sensor.
    Q(usize),
    /// Link between two cells, `i < j`.
    A(usize, usize),
    /// Degree of a cell in the deployed network.
    D(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LinearConstraint {
    pub label: &'static str,
    pub terms: Vec<(DdVar, i64)>,
    pub sense: Sense,
    pub rhs: i64,
}

impl LinearConstraint {
    pub fn holds(&self, value: &impl Fn(DdVar) -> i64) -> bool {
        let lhs: i64 = self.terms.iter().map(|&(v, c)| c * value(v)).sum();
        match self.sense {
            Sense::Le => lhs <= self.rhs,
            Sense::Ge => lhs >= self.rhs,
            Sense::Eq => lhs == self.rhs,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DdSystem {
    pub n: usize,
    pub k: u32,
    /// Connectivity edges, `i < j`.
    pub edges: Vec<(usize, usize)>,
    /// Big-M linking `C` and `q`.
    pub big_m: i64,
    /// Big-M relaxing the dominance row of empty cells.
    pub big_n: i64,
    pub constraints: Vec<LinearConstraint>,
}

impl DdSystem {
    pub fn is_satisfied(&self, value: impl Fn(DdVar) -> i64) -> bool {
        self.constraints.iter().all(|c| c.holds(&value))
    }
}

/// Emit the system over the open cells of `gv` (coverage) and `gc`
/// (links): coverage rows, `q`/`C` linking, link definitions on and off
/// `E_c`, degree identities, the dominance rows `2 d_i + 1 >= sum q`
/// relaxed by `N (1 - q_i)`, and the sensor budget.
pub fn dd_connectivity_encoding(gv: &CellGraph, gc: &CellGraph, k: u32, budget: u32) -> DdSystem {
    let n = gc.len();
    assert_eq!(gv.len(), n, "graphs must share their vertex set");
    let big_m = n as i64 + 1;
    let big_n = 2 * n as i64;
    let mut cs = Vec::new();
    let c = |label, terms, sense, rhs| LinearConstraint {
        label,
        terms,
        sense,
        rhs,
    };
    for i in 0..n {
        let terms = gv.cover_set(i).into_iter().map(|j| (DdVar::C(j), 1)).collect();
        cs.push(c("coverage", terms, Sense::Ge, k as i64));
    }
    for i in 0..n {
        cs.push(c("q_lower", vec![(DdVar::Q(i), 1), (DdVar::C(i), -1)], Sense::Le, 0));
        cs.push(c(
            "q_upper",
            vec![(DdVar::C(i), 1), (DdVar::Q(i), -big_m)],
            Sense::Le,
            0,
        ));
    }
    let edges: Vec<(usize, usize)> = gc.edges().collect();
    for i in 0..n {
        for j in i + 1..n {
            let a = DdVar::A(i, j);
            if gc.has_edge(i, j) {
                // q_i + q_j >= 2 a_ij and q_i + q_j <= 1 + a_ij.
                cs.push(c(
                    "link_lower",
                    vec![(DdVar::Q(i), 1), (DdVar::Q(j), 1), (a, -2)],
                    Sense::Ge,
                    0,
                ));
                cs.push(c(
                    "link_upper",
                    vec![(DdVar::Q(i), 1), (DdVar::Q(j), 1), (a, -1)],
                    Sense::Le,
                    1,
                ));
            } else {
                cs.push(c("no_link", vec![(a, 1)], Sense::Eq, 0));
            }
        }
    }
    let pair = |i: usize, j: usize| if i < j { DdVar::A(i, j) } else { DdVar::A(j, i) };
    for i in 0..n {
        let mut terms = vec![(DdVar::D(i), 1)];
        terms.extend((0..n).filter(|&j| j != i).map(|j| (pair(i, j), -1)));
        cs.push(c("degree", terms, Sense::Eq, 0));
    }
    for i in 0..n {
        // 2 d_i + 1 - sum_j q_j + N (1 - q_i) >= 0.
        let mut terms = vec![(DdVar::D(i), 2)];
        for j in 0..n {
            let coef = if j == i { -1 - big_n } else { -1 };
            terms.push((DdVar::Q(j), coef));
        }
        cs.push(c("dominance", terms, Sense::Ge, -1 - big_n));
    }
    cs.push(c(
        "budget",
        (0..n).map(|i| (DdVar::C(i), 1)).collect(),
        Sense::Le,
        budget as i64,
    ));
    DdSystem {
        n,
        k,
        edges,
        big_m,
        big_n,
        constraints: cs,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DdCheck {
    pub deployments: usize,
    pub feasible: usize,
    /// Feasible deployments whose network is disconnected (must be empty).
    pub disconnected_feasible: Vec<Vec<usize>>,
    /// Connected deployments the system rejects although some sensor counts
    /// meet coverage and budget.
    pub rejected_connected: Vec<Vec<usize>>,
}

impl DdCheck {
    pub fn sound(&self) -> bool {
        self.disconnected_feasible.is_empty()
    }
}

/// Enumerate every deployment `q`. Links and degrees are determined by `q`
/// through the link rows, and a cell never needs more than `min(k, M)`
/// sensors, so trying `C_i` in `1..=max(1, min(k, M))` on deployed cells is
/// exhaustive. Each candidate is checked against the emitted rows.
pub fn check_dd_exhaustive(sys: &DdSystem, gc: &CellGraph) -> Result<DdCheck, CoveringError> {
    let n = sys.n;
    if n > DD_ENUMERATION_CAP {
        return Err(CoveringError::TooLargeForEnumeration(n, DD_ENUMERATION_CAP));
    }
    let cmax = (sys.k as i64).min(sys.big_m).max(1);
    let mut out = DdCheck::default();
    for mask in 0u32..(1 << n) {
        out.deployments += 1;
        let q: Vec<i64> = (0..n).map(|i| ((mask >> i) & 1) as i64).collect();
        let deployed: Vec<usize> = (0..n).filter(|&i| q[i] == 1).collect();
        let a = |i: usize, j: usize| (gc.has_edge(i, j) && q[i] == 1 && q[j] == 1) as i64;
        let d: Vec<i64> = (0..n)
            .map(|i| (0..n).filter(|&j| j != i).map(|j| a(i, j)).sum())
            .collect();

        // Rows without C: decided by q alone.
        let mut counts = vec![0i64; n];
        let (qr, dr) = (&q, &d);
        let structural = |counts: &[i64]| {
            let counts = counts.to_vec();
            move |v: DdVar| match v {
                DdVar::C(i) => counts[i],
                DdVar::Q(i) => qr[i],
                DdVar::A(i, j) => a(i, j),
                DdVar::D(i) => dr[i],
            }
        };
        let dominance_ok = sys
            .constraints
            .iter()
            .filter(|c| c.label == "dominance")
            .all(|c| c.holds(&structural(&counts)));

        // Search C over the deployed cells; the rest stay at zero.
        let mut any_counts = false;
        let mut feasible = false;
        for &i in &deployed {
            counts[i] = 1;
        }
        loop {
            let val = structural(&counts);
            let others_ok = sys
                .constraints
                .iter()
                .filter(|c| c.label != "dominance")
                .all(|c| c.holds(&val));
            if others_ok {
                any_counts = true;
                if dominance_ok {
                    feasible = true;
                }
                break;
            }
            // Odometer step over the deployed cells.
            let mut pos = 0;
            while pos < deployed.len() && counts[deployed[pos]] == cmax {
                counts[deployed[pos]] = 1;
                pos += 1;
            }
            if pos == deployed.len() {
                break;
            }
            counts[deployed[pos]] += 1;
        }

        let mut active = vec![false; n];
        for &i in &deployed {
            active[i] = true;
        }
        let connected = connected_components(gc, &active).count <= 1;
        if feasible {
            out.feasible += 1;
            if !connected {
                out.disconnected_feasible.push(deployed);
            }
        } else if any_counts && connected {
            out.rejected_connected.push(deployed);
        }
    }
    Ok(out)
}
