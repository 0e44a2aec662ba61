//! Dense two-phase simplex over exact rationals, Bland's rule throughout.

use num_traits::{One, Signed, Zero};

use crate::rational::Rational;

/// `max c·x  s.t.  A x = b,  x ≥ 0`.
#[derive(Debug, Clone)]
pub struct StandardLp {
    pub a: Vec<Vec<Rational>>,
    pub b: Vec<Rational>,
    pub c: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<Rational>, objective: Rational },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, col: usize, cost: &mut [Rational]) {
        let p = self.rows[r][col].clone();
        if !p.is_one() {
            for v in self.rows[r].iter_mut() {
                if !v.is_zero() {
                    *v /= &p;
                }
            }
            self.rhs[r] /= &p;
        }
        let prow = self.rows[r].clone();
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][col].is_zero() {
                continue;
            }
            let f = self.rows[i][col].clone();
            for (v, pv) in self.rows[i].iter_mut().zip(&prow) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
            self.rhs[i] -= &f * &prhs;
        }
        if !cost[col].is_zero() {
            let f = cost[col].clone();
            for (v, pv) in cost.iter_mut().zip(&prow) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        self.basis[r] = col;
    }

    /// Maximize with reduced costs `cost` (entering when positive). Returns
    /// false if unbounded.
    fn optimize(&mut self, cost: &mut [Rational], ncols: usize) -> bool {
        loop {
            let Some(col) = (0..ncols).find(|&j| cost[j].is_positive()) else {
                return true;
            };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][col];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                let better = match &best {
                    None => true,
                    Some((bi, br)) => {
                        ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi])
                    }
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                None => return false,
                Some((r, _)) => self.pivot(r, col, cost),
            }
        }
    }
}

pub fn solve(lp: &StandardLp) -> LpOutcome {
    let m = lp.a.len();
    let n = lp.c.len();
    debug_assert!(lp.a.iter().all(|r| r.len() == n));
    debug_assert_eq!(lp.b.len(), m);

    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for (i, (row, bi)) in lp.a.iter().zip(&lp.b).enumerate() {
        let neg = bi.is_negative();
        let mut r: Vec<Rational> = row.iter().map(|v| if neg { -v } else { v.clone() }).collect();
        r.extend((0..m).map(|j| if j == i { Rational::one() } else { Rational::zero() }));
        rows.push(r);
        rhs.push(if neg { -bi } else { bi.clone() });
    }
    let mut t = Tableau { rows, rhs, basis: (n..n + m).collect() };

    // Phase 1: maximize -(sum of artificials).
    let mut cost = vec![Rational::zero(); n + m];
    for r in &t.rows {
        for (cj, v) in cost.iter_mut().zip(r.iter()).take(n) {
            *cj += v;
        }
    }
    t.optimize(&mut cost, n + m);
    if t.rhs.iter().zip(&t.basis).any(|(v, &bv)| bv >= n && !v.is_zero()) {
        return LpOutcome::Infeasible;
    }

    // Drive zero-valued artificials out of the basis; drop rows that are
    // redundant.
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] < n {
            i += 1;
            continue;
        }
        match (0..n).find(|&j| !t.rows[i][j].is_zero()) {
            Some(j) => {
                t.pivot(i, j, &mut cost);
                i += 1;
            }
            None => {
                t.rows.remove(i);
                t.rhs.remove(i);
                t.basis.remove(i);
            }
        }
    }
    for r in t.rows.iter_mut() {
        r.truncate(n);
    }

    // Phase 2.
    let mut cost: Vec<Rational> = lp.c.clone();
    for (r, &bv) in t.rows.iter().zip(&t.basis) {
        let cb = &lp.c[bv];
        if cb.is_zero() {
            continue;
        }
        for (cj, v) in cost.iter_mut().zip(r) {
            if !v.is_zero() {
                *cj -= cb * v;
            }
        }
    }
    if !t.optimize(&mut cost, n) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![Rational::zero(); n];
    for (v, &bv) in t.rhs.iter().zip(&t.basis) {
        x[bv] = v.clone();
    }
    let objective = x.iter().zip(&lp.c).fold(Rational::zero(), |acc, (xi, ci)| acc + xi * ci);
    LpOutcome::Optimal { x, objective }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn r(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn textbook_problem() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 (slacks s1..s3)
        let lp = StandardLp {
            a: vec![r(&[1, 0, 1, 0, 0]), r(&[0, 2, 0, 1, 0]), r(&[3, 2, 0, 0, 1])],
            b: r(&[4, 12, 18]),
            c: r(&[3, 5, 0, 0, 0]),
        };
        match solve(&lp) {
            LpOutcome::Optimal { x, objective } => {
                assert_eq!(objective, int(36));
                assert_eq!(x[0], int(2));
                assert_eq!(x[1], int(6));
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn fractional_optimum() {
        // max x + y, 2x + y + s1 = 1, x + 2y + s2 = 1
        let lp = StandardLp {
            a: vec![r(&[2, 1, 1, 0]), r(&[1, 2, 0, 1])],
            b: r(&[1, 1]),
            c: r(&[1, 1, 0, 0]),
        };
        match solve(&lp) {
            LpOutcome::Optimal { objective, .. } => assert_eq!(objective, ratio(2, 3)),
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn infeasible_and_unbounded() {
        let inf = StandardLp { a: vec![r(&[1, 1]), r(&[1, 1])], b: r(&[1, 2]), c: r(&[1, 0]) };
        assert_eq!(solve(&inf), LpOutcome::Infeasible);
        let unb = StandardLp { a: vec![r(&[1, -1])], b: r(&[0]), c: r(&[1, 0]) };
        assert_eq!(solve(&unb), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_and_negative_rows() {
        // x + y = 1 stated three times, once negated.
        let lp = StandardLp {
            a: vec![r(&[1, 1]), r(&[2, 2]), r(&[-1, -1])],
            b: r(&[1, 2, -1]),
            c: r(&[1, 2]),
        };
        match solve(&lp) {
            LpOutcome::Optimal { x, objective } => {
                assert_eq!(objective, int(2));
                assert_eq!(x, r(&[0, 1]));
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example, which cycles under the largest-coefficient rule.
        let lp = StandardLp {
            a: vec![
                vec![ratio(1, 4), int(-60), ratio(-1, 25), int(9), int(1), int(0), int(0)],
                vec![ratio(1, 2), int(-90), ratio(-1, 50), int(3), int(0), int(1), int(0)],
                vec![int(0), int(0), int(1), int(0), int(0), int(0), int(1)],
            ],
            b: r(&[0, 0, 1]),
            c: vec![ratio(3, 4), int(-150), ratio(1, 50), int(-6), int(0), int(0), int(0)],
        };
        match solve(&lp) {
            LpOutcome::Optimal { objective, .. } => assert_eq!(objective, ratio(1, 20)),
            o => panic!("{o:?}"),
        }
    }
}
