use super::{ClauseSink, Lit};

/// Require at least `k` of `lits` to be true.
///
/// Sequential counter: `r[i][j]` may only be true when at least `j` of the
/// first `i + 1` literals are true, and `r[n-1][k]` is asserted. Every
/// assignment of `lits` with `k` or more true literals extends to a model
/// and no other assignment does. Uses `n * k` auxiliary variables.
///
/// `k > lits.len()` adds the empty clause.
pub fn add_at_least<S: ClauseSink>(sink: &mut S, lits: &[Lit], k: usize) {
    let n = lits.len();
    if k == 0 {
        return;
    }
    if k > n {
        sink.add_clause(&[]);
        return;
    }
    if k == n {
        for &l in lits {
            sink.add_clause(&[l]);
        }
        return;
    }
    if k == 1 {
        sink.add_clause(lits);
        return;
    }
    // r[i][j-1] <=> "at least j among lits[0..=i]" (upward implication only).
    let mut prev: Vec<Option<Lit>> = Vec::new();
    for (i, &x) in lits.iter().enumerate() {
        let mut row: Vec<Option<Lit>> = Vec::with_capacity(k);
        for j in 1..=k {
            if j > i + 1 {
                row.push(None);
                continue;
            }
            // Only counts that can still reach k are useful.
            if j + (n - 1 - i) < k {
                row.push(None);
                continue;
            }
            let r = sink.new_var().pos();
            // r -> prev[j] | x
            // r -> prev[j] | prev[j-1]   (prev[0] is constant true)
            let carry = prev.get(j - 1).copied().flatten();
            let below = if j >= 2 {
                prev.get(j - 2).copied().flatten()
            } else {
                None
            };
            let mut c1 = vec![!r, x];
            if let Some(p) = carry {
                c1.push(p);
            }
            sink.add_clause(&c1);
            if j >= 2 {
                let mut c2 = vec![!r];
                c2.extend(carry);
                c2.extend(below);
                sink.add_clause(&c2);
            }
            row.push(Some(r));
        }
        prev = row;
    }
    let goal = prev[k - 1].expect("final counter exists");
    sink.add_clause(&[goal]);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sat::{Formula, Var};

    /// Count assignments of the first `n` variables that extend to a model.
    fn projected_models(n: usize, k: usize) -> usize {
        let mut f = Formula::default();
        let xs: Vec<Lit> = (0..n).map(|_| f.new_var().pos()).collect();
        add_at_least(&mut f, &xs, k);
        (0..1u32 << n)
            .filter(|bits| {
                let mut s = f.to_solver();
                for (i, &x) in xs.iter().enumerate() {
                    s.add_clause(&[if bits >> i & 1 == 1 { x } else { !x }]);
                }
                s.solve().is_sat()
            })
            .count()
    }

    fn binomial_tail(n: usize, k: usize) -> usize {
        let c = |n: usize, r: usize| -> usize { (0..r).fold(1, |acc, i| acc * (n - i) / (i + 1)) };
        (k..=n).map(|j| c(n, j)).sum()
    }

    #[test]
    fn four_choose_at_least_two() {
        assert_eq!(projected_models(4, 2), 11);
    }

    #[test]
    fn matches_binomial_sums() {
        for n in 0..=6 {
            for k in 0..=n + 1 {
                let expected = if k > n { 0 } else { binomial_tail(n, k) };
                assert_eq!(projected_models(n, k), expected, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn trivial_cases() {
        let mut f = Formula::default();
        let xs: Vec<Lit> = (0..3).map(|_| f.new_var().pos()).collect();
        add_at_least(&mut f, &xs, 0);
        assert!(f.clauses.is_empty());
        add_at_least(&mut f, &xs, 3);
        assert_eq!(f.clauses.len(), 3);
        let mut g = Formula::default();
        add_at_least(&mut g, &[Var(0).pos()], 2);
        assert!(g.to_solver().solve().is_unsat());
    }
}
