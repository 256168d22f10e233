//! Minimum-cost perfect matching for small square cost matrices.

use crate::scalar::Real;

/// Best and runner-up assignments of rows to columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment<T> {
    /// `columns[row]`
    pub columns: Vec<usize>,
    pub cost: T,
    /// cost of the cheapest assignment different from `columns`; `None` for 1x1
    pub runner_up: Option<T>,
    pub runner_up_columns: Option<Vec<usize>>,
}

/// Hungarian algorithm (shortest augmenting path, O(n³)) on `cost[row][col]`.
pub fn hungarian<T: Real>(cost: &[Vec<T>]) -> (Vec<usize>, T) {
    let n = cost.len();
    if n == 0 {
        return (Vec::new(), T::zero());
    }
    let inf = T::infinity();
    // 1-based potentials, classic formulation
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut columns = vec![0usize; n];
    for j in 1..=n {
        if p[j] != 0 {
            columns[p[j] - 1] = j - 1;
        }
    }
    let total = columns.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    (columns, total)
}

/// Optimal assignment plus the runner-up cost. The runner-up is the best
/// assignment that differs from the optimum in at least one row, found by
/// forbidding each optimal edge in turn.
pub fn assign_with_runner_up<T: Real>(cost: &[Vec<T>]) -> Assignment<T> {
    let n = cost.len();
    let (columns, best) = hungarian(cost);
    let (runner_up, runner_up_columns) = if n < 2 {
        (None, None)
    } else {
        let big = cost
            .iter()
            .flatten()
            .fold(T::zero(), |a, c| a.max(c.abs()))
            .max(T::one())
            * T::lit(1e6);
        let mut second: Option<(T, Vec<usize>)> = None;
        for r in 0..n {
            let mut c2: Vec<Vec<T>> = cost.to_vec();
            c2[r][columns[r]] = big;
            let (cols, alt) = hungarian(&c2);
            if alt < big && second.as_ref().is_none_or(|s| alt < s.0) {
                second = Some((alt, cols));
            }
        }
        match second {
            Some((c, cols)) => (Some(c), Some(cols)),
            None => (None, None),
        }
    };
    Assignment {
        columns,
        cost: best,
        runner_up,
        runner_up_columns,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(cost: &[Vec<f64>]) -> (f64, f64) {
        fn perms(k: usize, cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for j in 0..k {
                if !used[j] {
                    used[j] = true;
                    cur.push(j);
                    perms(k, cur, used, out);
                    cur.pop();
                    used[j] = false;
                }
            }
        }
        let n = cost.len();
        let mut all = Vec::new();
        perms(n, &mut Vec::new(), &mut vec![false; n], &mut all);
        let mut costs: Vec<f64> = all.iter().map(|p| p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum()).collect();
        costs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        (costs[0], costs[1])
    }

    #[test]
    fn matches_brute_force() {
        let cost = vec![
            vec![4.0, 1.0, 3.0, 2.5],
            vec![2.0, 0.0, 5.0, 1.5],
            vec![3.0, 2.0, 2.0, 0.7],
            vec![1.0, 3.3, 0.2, 4.0],
        ];
        let a = assign_with_runner_up(&cost);
        let (b1, b2) = brute(&cost);
        assert!((a.cost - b1).abs() < 1e-12);
        assert!((a.runner_up.unwrap() - b2).abs() < 1e-12);
    }

    #[test]
    fn crossing_branches_pair_by_value() {
        // branches sorted ascending on both sides but crossing in between
        let left = [1.0f64, 2.0];
        let right = [2.01f64, 0.99];
        let cost: Vec<Vec<f64>> = left.iter().map(|l| right.iter().map(|r| (l - r).abs()).collect()).collect();
        let a = assign_with_runner_up(&cost);
        assert_eq!(a.columns, vec![1, 0]);
        assert!(a.runner_up.unwrap() / a.cost > 2.0);
    }
}
