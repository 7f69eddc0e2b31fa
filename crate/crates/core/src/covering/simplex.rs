//! Dense-tableau primal simplex for packing LPs:
//! maximize `c.y` subject to `A y <= b`, `y >= 0`, with `b >= 0` so the slack
//! basis is an immediate feasible start. Covering LP bounds are obtained by
//! solving their dual packing program; the covering solution is read off the
//! final reduced costs of the slacks.
//!
//! The right-hand side is shrunk by a tiny deterministic amount while
//! pivoting, which breaks the heavy degeneracy of covering duals, and the
//! tableau is rebuilt from the original data every few hundred pivots so
//! rounding errors cannot accumulate. The final basis is re-evaluated
//! against the exact right-hand side.

use std::time::Instant;

const TOL: f64 = 1e-9;
/// Smallest pivot element accepted by the ratio test.
const PIVOT_TOL: f64 = 1e-9;
/// Consecutive degenerate pivots after which pricing switches from Dantzig
/// to Bland's rule, which cannot cycle.
const DEGENERATE_LIMIT: usize = 50;
/// Pivots between tableau rebuilds.
const REINVERT_EVERY: usize = 400;
/// Relative shrink of the right-hand side.
const PERTURBATION: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal {
        value: f64,
        /// Optimal `y`.
        primal: Vec<f64>,
        /// Shadow price per row of `A`, i.e. an optimal solution of the dual
        /// covering program `min b.x, A^T x >= c, x >= 0`.
        dual: Vec<f64>,
    },
    Unbounded,
    /// The deadline passed first.
    Interrupted,
}

/// Solve `max c.y, A y <= b, y >= 0`. `a` is row-major with `b.len()` rows
/// of `c.len()` entries. Panics if some `b` is negative.
pub fn solve_packing(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> LpOutcome {
    solve_packing_until(a, b, c, None)
}

/// [`solve_packing`] that gives up once `deadline` has passed.
pub fn solve_packing_until(a: &[Vec<f64>], b: &[f64], c: &[f64], deadline: Option<Instant>) -> LpOutcome {
    assert!(b.iter().all(|&v| v >= 0.0), "right-hand side must be nonnegative");
    assert_eq!(a.len(), b.len());
    let shrunk: Vec<f64> = b
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            // Golden-ratio sequence: distinct, deterministic shrink factors.
            let f = (i as f64 * 0.618_033_988_749_895).fract();
            v * (1.0 - PERTURBATION * (1.0 + f))
        })
        .collect();
    let mut tab = Tableau::new(a, c, &shrunk);
    loop {
        match tab.run(&shrunk, deadline) {
            Run::Optimal => {}
            Run::Unbounded => return LpOutcome::Unbounded,
            Run::Interrupted => return LpOutcome::Interrupted,
        }
        // Confirm optimality on a freshly rebuilt tableau.
        if tab.reinvert(&shrunk) && tab.entering(false).is_none() {
            break;
        }
    }
    // Same basis against the exact right-hand side; keep the shrunk
    // solution (still feasible, near optimal) if that is infeasible.
    let mut exact = tab.clone();
    if exact.reinvert(b) && exact.rhs_min() >= -TOL {
        exact.outcome()
    } else {
        tab.outcome()
    }
}

enum Run {
    Optimal,
    Unbounded,
    Interrupted,
}

#[derive(Clone)]
struct Tableau<'a> {
    a: &'a [Vec<f64>],
    c: &'a [f64],
    m: usize,
    n: usize,
    width: usize,
    /// `m` constraint rows then the objective row; last column is the
    /// right-hand side.
    t: Vec<f64>,
    basis: Vec<usize>,
}

impl<'a> Tableau<'a> {
    fn new(a: &'a [Vec<f64>], c: &'a [f64], rhs: &[f64]) -> Self {
        let m = rhs.len();
        let n = c.len();
        let width = n + m + 1;
        let mut t = vec![0.0; (m + 1) * width];
        for i in 0..m {
            let row = &mut t[i * width..(i + 1) * width];
            row[..n].copy_from_slice(&a[i]);
            row[n + i] = 1.0;
            row[width - 1] = rhs[i];
        }
        for j in 0..n {
            t[m * width + j] = -c[j];
        }
        Tableau {
            a,
            c,
            m,
            n,
            width,
            t,
            basis: (n..n + m).collect(),
        }
    }

    fn obj(&self) -> &[f64] {
        &self.t[self.m * self.width..]
    }

    fn rhs_min(&self) -> f64 {
        (0..self.m)
            .map(|i| self.t[i * self.width + self.width - 1])
            .fold(0.0, f64::min)
    }

    fn entering(&self, bland: bool) -> Option<usize> {
        let obj = &self.obj()[..self.n + self.m];
        if bland {
            return obj.iter().position(|&r| r < -TOL);
        }
        let mut best = None;
        let mut most = -TOL;
        for (j, &r) in obj.iter().enumerate() {
            if r < most {
                most = r;
                best = Some(j);
            }
        }
        best
    }

    /// Leaving row for entering column `e`. Bland: minimum ratio, ties to
    /// the smallest basic index. Otherwise the largest pivot element among
    /// rows whose ratio is within tolerance of the minimum.
    fn leaving(&self, e: usize, bland: bool) -> Option<(usize, f64)> {
        let w = self.width;
        let mut min_ratio = f64::INFINITY;
        for i in 0..self.m {
            let coef = self.t[i * w + e];
            if coef > PIVOT_TOL {
                min_ratio = min_ratio.min((self.t[i * w + w - 1].max(0.0) + TOL) / coef);
            }
        }
        if min_ratio == f64::INFINITY {
            return None;
        }
        let mut leave: Option<(usize, f64, f64)> = None;
        for i in 0..self.m {
            let coef = self.t[i * w + e];
            if coef <= PIVOT_TOL {
                continue;
            }
            let ratio = self.t[i * w + w - 1].max(0.0) / coef;
            if ratio > min_ratio {
                continue;
            }
            let better = match leave {
                None => true,
                Some((li, lr, lc)) => {
                    if bland {
                        ratio < lr - TOL || (ratio <= lr + TOL && self.basis[i] < self.basis[li])
                    } else {
                        coef > lc
                    }
                }
            };
            if better {
                leave = Some((i, ratio, coef));
            }
        }
        leave.map(|(i, r, _)| (i, r))
    }

    fn run(&mut self, rhs: &[f64], deadline: Option<Instant>) -> Run {
        let mut degenerate = 0usize;
        let mut pivots = 0usize;
        loop {
            let bland = degenerate >= DEGENERATE_LIMIT;
            let Some(e) = self.entering(bland) else {
                return Run::Optimal;
            };
            let Some((r, ratio)) = self.leaving(e, bland) else {
                return Run::Unbounded;
            };
            let gain = -self.obj()[e] * ratio;
            if gain <= TOL {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, e);
            pivots += 1;
            if pivots.is_multiple_of(32) && deadline.is_some_and(|d| Instant::now() >= d) {
                return Run::Interrupted;
            }
            if pivots.is_multiple_of(REINVERT_EVERY) {
                self.reinvert(rhs);
            }
        }
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let w = self.width;
        let p = self.t[r * w + e];
        for v in &mut self.t[r * w..(r + 1) * w] {
            *v /= p;
        }
        let nz: Vec<(usize, f64)> = self.t[r * w..(r + 1) * w]
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > 1e-14)
            .map(|(j, &v)| (j, v))
            .collect();
        for i in 0..=self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + e];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * w..(i + 1) * w];
            for &(j, pv) in &nz {
                row[j] -= f * pv;
            }
            row[e] = 0.0;
        }
        self.basis[r] = e;
    }

    /// Rebuild the tableau for the current basis and right-hand side `rhs`
    /// by inverting the basis matrix. Returns false if it is singular (the
    /// tableau is left unchanged).
    fn reinvert(&mut self, rhs: &[f64]) -> bool {
        let (m, n, w) = (self.m, self.n, self.width);
        let col = |j: usize, k: usize| if j < n { self.a[k][j] } else { (j - n == k) as u8 as f64 };
        // Gauss-Jordan on [B | I].
        let mut g = vec![0.0; m * 2 * m];
        for k in 0..m {
            for (i, &bv) in self.basis.iter().enumerate() {
                g[k * 2 * m + i] = col(bv, k);
            }
            g[k * 2 * m + m + k] = 1.0;
        }
        for p in 0..m {
            let piv = (p..m)
                .max_by(|&x, &y| g[x * 2 * m + p].abs().total_cmp(&g[y * 2 * m + p].abs()))
                .expect("nonempty range");
            if g[piv * 2 * m + p].abs() < 1e-12 {
                return false;
            }
            if piv != p {
                for j in 0..2 * m {
                    g.swap(piv * 2 * m + j, p * 2 * m + j);
                }
            }
            let d = g[p * 2 * m + p];
            for j in 0..2 * m {
                g[p * 2 * m + j] /= d;
            }
            let prow: Vec<(usize, f64)> = (0..2 * m)
                .map(|j| (j, g[p * 2 * m + j]))
                .filter(|&(_, v)| v != 0.0)
                .collect();
            for i in 0..m {
                if i == p {
                    continue;
                }
                let f = g[i * 2 * m + p];
                if f != 0.0 {
                    for &(j, v) in &prow {
                        g[i * 2 * m + j] -= f * v;
                    }
                }
            }
        }
        let binv = |i: usize, k: usize| g[i * 2 * m + m + k];
        let mut t = vec![0.0; (m + 1) * w];
        for i in 0..m {
            let row = &mut t[i * w..(i + 1) * w];
            for k in 0..m {
                let bik = binv(i, k);
                if bik == 0.0 {
                    continue;
                }
                for (j, &akj) in self.a[k].iter().enumerate() {
                    row[j] += bik * akj;
                }
                row[n + k] = bik;
                row[w - 1] += bik * rhs[k];
            }
        }
        for j in 0..n {
            t[m * w + j] = -self.c[j];
        }
        for (i, &bv) in self.basis.iter().enumerate() {
            let cb = if bv < n { self.c[bv] } else { 0.0 };
            if cb == 0.0 {
                continue;
            }
            for j in 0..w {
                t[m * w + j] += cb * t[i * w + j];
            }
        }
        for (i, &bv) in self.basis.iter().enumerate() {
            for r in 0..=m {
                if r != i {
                    t[r * w + bv] = 0.0;
                }
            }
            t[i * w + bv] = 1.0;
        }
        self.t = t;
        true
    }

    fn outcome(&self) -> LpOutcome {
        let (m, n, w) = (self.m, self.n, self.width);
        let mut primal = vec![0.0; n];
        for (i, &bv) in self.basis.iter().enumerate() {
            if bv < n {
                primal[bv] = self.t[i * w + w - 1].max(0.0);
            }
        }
        let obj = self.obj();
        let dual = (0..m).map(|i| obj[n + i].max(0.0)).collect();
        LpOutcome::Optimal {
            value: primal.iter().zip(self.c).map(|(y, c)| y * c).sum(),
            primal,
            dual,
        }
    }
}
