//! Exact balanced transportation problem.
//!
//! Successive shortest paths with Johnson potentials on the bipartite residual
//! graph. Supplies and demands are integers, so every augmentation moves an
//! integral amount and the flow is exact; only the costs are floating point.

use super::BaselineError;

#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    /// Total cost `sum f_ij * c_ij`.
    pub cost: f64,
    /// Row-major `supply.len() x demand.len()` flows.
    pub flows: Vec<i64>,
}

/// Solve `min sum c_ij f_ij` subject to row sums `supply`, column sums
/// `demand`, `f >= 0`. `cost` is row-major and must be non-negative.
pub fn solve(supply: &[i64], demand: &[i64], cost: &[f64]) -> Result<TransportPlan, BaselineError> {
    let (m, n) = (supply.len(), demand.len());
    if m == 0 || n == 0 {
        return Err(BaselineError::SolverFailure("empty side".into()));
    }
    if cost.len() != m * n {
        return Err(BaselineError::SolverFailure("cost matrix has wrong shape".into()));
    }
    if supply.iter().chain(demand).any(|&x| x < 0) {
        return Err(BaselineError::SolverFailure("negative mass".into()));
    }
    if supply.iter().sum::<i64>() != demand.iter().sum::<i64>() {
        return Err(BaselineError::SolverFailure("unbalanced problem".into()));
    }
    if cost.iter().any(|c| !c.is_finite() || *c < 0.0) {
        return Err(BaselineError::SolverFailure("costs must be finite and non-negative".into()));
    }

    let mut rem_supply = supply.to_vec();
    let mut rem_demand = demand.to_vec();
    let mut flows = vec![0i64; m * n];
    // Nodes: rows 0..m, columns m..m+n. Potentials start at zero, valid
    // because every forward arc cost is non-negative and no reverse arcs exist.
    let mut potential = vec![0.0f64; m + n];
    let mut dist = vec![0.0f64; m + n];
    let mut prev = vec![usize::MAX; m + n];
    let mut done = vec![false; m + n];

    let max_iterations = 4 * (m + n) * (m + n) + 16;
    for _ in 0..max_iterations {
        if rem_supply.iter().all(|&s| s == 0) {
            let cost = flows
                .iter()
                .zip(cost)
                .filter(|(f, _)| **f > 0)
                .map(|(&f, &c)| f as f64 * c)
                .sum();
            return Ok(TransportPlan { cost, flows });
        }

        // Dijkstra on reduced costs from every row that still has supply.
        for v in 0..m + n {
            dist[v] = f64::INFINITY;
            prev[v] = usize::MAX;
            done[v] = false;
        }
        for i in 0..m {
            if rem_supply[i] > 0 {
                dist[i] = 0.0;
            }
        }
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for v in 0..m + n {
                if !done[v] && dist[v] < best {
                    best = dist[v];
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u < m {
                for j in 0..n {
                    let v = m + j;
                    if done[v] {
                        continue;
                    }
                    let reduced = (cost[u * n + j] + potential[u] - potential[v]).max(0.0);
                    if dist[u] + reduced < dist[v] {
                        dist[v] = dist[u] + reduced;
                        prev[v] = u;
                    }
                }
            } else {
                let j = u - m;
                for i in 0..m {
                    if done[i] || flows[i * n + j] == 0 {
                        continue;
                    }
                    let reduced = (-cost[i * n + j] + potential[u] - potential[i]).max(0.0);
                    if dist[u] + reduced < dist[i] {
                        dist[i] = dist[u] + reduced;
                        prev[i] = u;
                    }
                }
            }
        }

        // Closest column with unmet demand; ties go to the lowest index.
        let mut sink = usize::MAX;
        let mut best = f64::INFINITY;
        for j in 0..n {
            if rem_demand[j] > 0 && dist[m + j] < best {
                best = dist[m + j];
                sink = m + j;
            }
        }
        if sink == usize::MAX {
            return Err(BaselineError::SolverFailure("no augmenting path".into()));
        }
        let reach = dist.iter().filter(|d| d.is_finite()).fold(0.0f64, |a, &d| a.max(d));
        for v in 0..m + n {
            potential[v] += if dist[v].is_finite() { dist[v] } else { reach };
        }

        // Bottleneck along the path back to a source row.
        let mut amount = rem_demand[sink - m];
        let mut v = sink;
        while prev[v] != usize::MAX {
            let u = prev[v];
            if u >= m {
                // reverse arc column u -> row v
                amount = amount.min(flows[v * n + (u - m)]);
            }
            v = u;
        }
        let source = v;
        amount = amount.min(rem_supply[source]);
        if amount <= 0 {
            return Err(BaselineError::SolverFailure("zero-capacity augmenting path".into()));
        }

        let mut v = sink;
        while prev[v] != usize::MAX {
            let u = prev[v];
            if u < m {
                flows[u * n + (v - m)] += amount;
            } else {
                flows[v * n + (u - m)] -= amount;
            }
            v = u;
        }
        rem_supply[source] -= amount;
        rem_demand[sink - m] -= amount;
    }
    Err(BaselineError::SolverFailure("iteration limit reached".into()))
}
