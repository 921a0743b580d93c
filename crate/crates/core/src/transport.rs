//! Balanced transportation problems solved by the transportation simplex
//! method (north-west corner start, MODI pricing).

use std::collections::VecDeque;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("problem has no suppliers or no consumers")]
    Empty,
    #[error("masses must be positive and finite")]
    InvalidMass,
    #[error("cost matrix must be {0} entries of finite values")]
    InvalidCosts(usize),
    #[error("total supply {supply} differs from total demand {demand}")]
    Unbalanced { supply: f64, demand: f64 },
    #[error("no optimum after {0} pivots")]
    NotConverged(usize),
}

/// Relative tolerance on supply/demand balance.
const BALANCE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct TransportProblem {
    supplies: Vec<f64>,
    demands: Vec<f64>,
    /// Row-major `supplies.len() x demands.len()` unit costs.
    costs: Vec<f64>,
}

impl TransportProblem {
    pub fn new(supplies: Vec<f64>, demands: Vec<f64>, costs: Vec<f64>) -> Result<Self, TransportError> {
        if supplies.is_empty() || demands.is_empty() {
            return Err(TransportError::Empty);
        }
        if supplies
            .iter()
            .chain(&demands)
            .any(|&m| !(m.is_finite() && m > 0.0))
        {
            return Err(TransportError::InvalidMass);
        }
        let n = supplies.len() * demands.len();
        if costs.len() != n || costs.iter().any(|c| !c.is_finite()) {
            return Err(TransportError::InvalidCosts(n));
        }
        let supply: f64 = supplies.iter().sum();
        let demand: f64 = demands.iter().sum();
        if (supply - demand).abs() > BALANCE_TOLERANCE * supply.max(demand) {
            return Err(TransportError::Unbalanced { supply, demand });
        }
        Ok(Self {
            supplies,
            demands,
            costs,
        })
    }

    /// Point masses `(row, col, mass)` with Euclidean ground distance.
    pub fn from_points(
        suppliers: &[(f64, f64, f64)],
        consumers: &[(f64, f64, f64)],
    ) -> Result<Self, TransportError> {
        let costs = suppliers
            .iter()
            .flat_map(|&(r0, c0, _)| consumers.iter().map(move |&(r1, c1, _)| (r0 - r1).hypot(c0 - c1)))
            .collect();
        Self::new(
            suppliers.iter().map(|p| p.2).collect(),
            consumers.iter().map(|p| p.2).collect(),
            costs,
        )
    }

    pub fn supplies(&self) -> &[f64] {
        &self.supplies
    }

    pub fn demands(&self) -> &[f64] {
        &self.demands
    }

    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.costs[i * self.demands.len() + j]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportSolution {
    /// Basic cells `(supplier, consumer, flow)`; zero-flow basic cells included.
    pub flows: Vec<(usize, usize, f64)>,
    pub cost: f64,
    pub pivots: usize,
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    i: usize,
    j: usize,
    flow: f64,
}

/// Pivot budget used when the caller does not supply one.
pub fn default_pivot_limit(m: usize, n: usize) -> usize {
    100 * (m + n) + 10_000
}

pub fn solve(p: &TransportProblem) -> Result<TransportSolution, TransportError> {
    solve_with_limit(p, default_pivot_limit(p.supplies.len(), p.demands.len()))
}

pub fn solve_with_limit(p: &TransportProblem, max_pivots: usize) -> Result<TransportSolution, TransportError> {
    let (m, n) = (p.supplies.len(), p.demands.len());
    let mut basis = northwest_corner(p);
    let mut is_basic = vec![false; m * n];
    for c in &basis {
        is_basic[c.i * n + c.j] = true;
    }
    let cost_scale = p.costs.iter().fold(1.0f64, |a, c| a.max(c.abs()));
    let eps = 1e-12 * cost_scale;

    let mut u = vec![0.0; m];
    let mut v = vec![0.0; n];
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); m + n];
    let mut degenerate_run = 0usize;
    let mut pivots = 0usize;

    loop {
        for list in adjacency.iter_mut() {
            list.clear();
        }
        for (k, c) in basis.iter().enumerate() {
            adjacency[c.i].push(k);
            adjacency[m + c.j].push(k);
        }
        potentials(p, &basis, &adjacency, &mut u, &mut v);

        // Dantzig pricing, falling back to Bland's rule after a run of
        // degenerate pivots so the method cannot cycle.
        let bland = degenerate_run > m + n;
        let mut entering: Option<(usize, usize, f64)> = None;
        'scan: for i in 0..m {
            for j in 0..n {
                if is_basic[i * n + j] {
                    continue;
                }
                let rc = p.costs[i * n + j] - u[i] - v[j];
                if rc < -eps && entering.is_none_or(|(_, _, best)| rc < best) {
                    entering = Some((i, j, rc));
                    if bland {
                        break 'scan;
                    }
                }
            }
        }
        let Some((ei, ej, _)) = entering else { break };
        if pivots >= max_pivots {
            return Err(TransportError::NotConverged(pivots));
        }
        pivots += 1;

        let path = tree_path(&basis, &adjacency, m, ei, m + ej);
        // Path runs from column ej back to row ei; its edges alternate -, +, -, ...
        let mut theta = f64::INFINITY;
        let mut leaving = usize::MAX;
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 == 0 {
                let f = basis[k].flow;
                let better = f < theta
                    || (f == theta && {
                        let (a, b) = (&basis[k], &basis[leaving]);
                        (a.i, a.j) < (b.i, b.j)
                    });
                if better {
                    theta = f;
                    leaving = k;
                }
            }
        }
        for (pos, &k) in path.iter().enumerate() {
            let c = &mut basis[k];
            if pos % 2 == 0 {
                c.flow = (c.flow - theta).max(0.0);
            } else {
                c.flow += theta;
            }
        }
        degenerate_run = if theta == 0.0 { degenerate_run + 1 } else { 0 };
        let old = basis[leaving];
        is_basic[old.i * n + old.j] = false;
        is_basic[ei * n + ej] = true;
        basis[leaving] = Cell {
            i: ei,
            j: ej,
            flow: theta,
        };
    }

    let cost = basis.iter().map(|c| c.flow * p.cost(c.i, c.j)).sum();
    Ok(TransportSolution {
        flows: basis.iter().map(|c| (c.i, c.j, c.flow)).collect(),
        cost,
        pivots,
    })
}

/// Staircase start with exactly `m + n - 1` basic cells.
fn northwest_corner(p: &TransportProblem) -> Vec<Cell> {
    let (m, n) = (p.supplies.len(), p.demands.len());
    let mut supply = p.supplies.clone();
    let mut demand = p.demands.clone();
    let mut cells = Vec::with_capacity(m + n - 1);
    let (mut i, mut j) = (0, 0);
    loop {
        let q = supply[i].min(demand[j]).max(0.0);
        cells.push(Cell { i, j, flow: q });
        supply[i] -= q;
        demand[j] -= q;
        if i == m - 1 && j == n - 1 {
            break;
        }
        if j == n - 1 || (i < m - 1 && supply[i] <= demand[j]) {
            i += 1;
        } else {
            j += 1;
        }
    }
    debug_assert_eq!(cells.len(), m + n - 1);
    cells
}

/// Solves `u[i] + v[j] = c[i][j]` over the basis tree with `u[0] = 0`.
fn potentials(p: &TransportProblem, basis: &[Cell], adjacency: &[Vec<usize>], u: &mut [f64], v: &mut [f64]) {
    let m = u.len();
    let mut seen = vec![false; adjacency.len()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    u[0] = 0.0;
    while let Some(node) = queue.pop_front() {
        for &k in &adjacency[node] {
            let c = basis[k];
            let (other, value) = if node < m {
                (m + c.j, p.cost(c.i, c.j) - u[c.i])
            } else {
                (c.i, p.cost(c.i, c.j) - v[c.j])
            };
            if !seen[other] {
                seen[other] = true;
                if other < m {
                    u[other] = value;
                } else {
                    v[other - m] = value;
                }
                queue.push_back(other);
            }
        }
    }
}

/// Basis cells on the tree path from node `to` back to node `from`.
fn tree_path(basis: &[Cell], adjacency: &[Vec<usize>], m: usize, from: usize, to: usize) -> Vec<usize> {
    let mut via = vec![usize::MAX; adjacency.len()];
    let mut seen = vec![false; adjacency.len()];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(node) = queue.pop_front() {
        if node == to {
            break;
        }
        for &k in &adjacency[node] {
            let c = basis[k];
            let other = if node < m { m + c.j } else { c.i };
            if !seen[other] {
                seen[other] = true;
                via[other] = k;
                queue.push_back(other);
            }
        }
    }
    let mut path = Vec::new();
    let mut node = to;
    while node != from {
        let k = via[node];
        path.push(k);
        let c = basis[k];
        node = if node < m { m + c.j } else { c.i };
    }
    path
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_pair_costs_the_distance() {
        let p = TransportProblem::from_points(&[(0.0, 0.0, 1.0)], &[(3.0, 4.0, 1.0)]).unwrap();
        let s = solve(&p).unwrap();
        assert_eq!(s.cost, 5.0);
    }

    #[test]
    fn classic_textbook_instance() {
        // Optimum 330, cross-checked with an external LP solver.
        let p = TransportProblem::new(
            vec![20.0, 30.0, 25.0],
            vec![10.0, 25.0, 40.0],
            vec![2.0, 3.0, 1.0, 5.0, 4.0, 8.0, 5.0, 6.0, 8.0],
        )
        .unwrap();
        let s = solve(&p).unwrap();
        assert!((s.cost - 330.0).abs() < 1e-9, "cost {}", s.cost);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(TransportProblem::new(vec![], vec![1.0], vec![]), Err(TransportError::Empty));
        assert_eq!(
            TransportProblem::new(vec![1.0], vec![0.0], vec![1.0]),
            Err(TransportError::InvalidMass)
        );
        assert!(matches!(
            TransportProblem::new(vec![1.0], vec![2.0], vec![1.0]),
            Err(TransportError::Unbalanced { .. })
        ));
    }

    #[test]
    fn pivot_limit_reports_non_convergence() {
        // NW corner is suboptimal here, so at least one pivot is needed.
        let p = TransportProblem::new(vec![1.0, 1.0], vec![1.0, 1.0], vec![5.0, 0.0, 0.0, 5.0]).unwrap();
        assert_eq!(solve_with_limit(&p, 0), Err(TransportError::NotConverged(0)));
        assert_eq!(solve(&p).unwrap().cost, 0.0);
    }
}
