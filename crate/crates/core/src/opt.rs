//! Euclidean projections used by the projected-gradient solvers.

/// Projection onto `{x >= 0, sum x = total}` by the sorting method.
pub fn project_simplex_scaled(v: &[f64], total: f64) -> Vec<f64> {
    assert!(total >= 0.0);
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumsum += ui;
        let candidate = (cumsum - total) / (i + 1) as f64;
        if ui - candidate > 0.0 {
            tau = candidate;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// Weighted budget of a row-stochastic family: `sum_t w_t sum_k rows[t][k] c_k`.
pub fn family_cost(rows: &[Vec<f64>], weights: &[f64], costs: &[f64]) -> f64 {
    rows.iter()
        .zip(weights.iter())
        .map(|(row, &w)| w * row.iter().zip(costs.iter()).map(|(&p, &c)| p * c).sum::<f64>())
        .sum()
}

/// Projection onto `{rows[t] in simplex for all t}` intersected with the
/// budget halfspace `sum_t w_t (rows[t] . costs) <= budget`.
///
/// The KKT multiplier form is `rows[t] = proj_simplex(z[t] - mu w_t costs)`
/// with `mu >= 0`; the budget is nonincreasing in `mu`, so `mu` is found by
/// bisection. Since `min costs = 0` the constraint set is never empty.
pub fn project_rows_budget(
    z: &[Vec<f64>],
    weights: &[f64],
    costs: &[f64],
    budget: f64,
) -> Vec<Vec<f64>> {
    let project = |mu: f64| -> Vec<Vec<f64>> {
        z.iter()
            .zip(weights.iter())
            .map(|(row, &w)| {
                let shifted: Vec<f64> = row
                    .iter()
                    .zip(costs.iter())
                    .map(|(&v, &c)| v - mu * w * c)
                    .collect();
                project_simplex_scaled(&shifted, 1.0)
            })
            .collect()
    };
    let at_zero = project(0.0);
    if family_cost(&at_zero, weights, costs) <= budget + 1e-14 * (1.0 + budget) {
        return at_zero;
    }
    let mut hi = 1.0;
    while family_cost(&project(hi), weights, costs) > budget {
        hi *= 2.0;
        if hi > 1e18 {
            break;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if family_cost(&project(mid), weights, costs) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * (1.0 + hi) {
            break;
        }
    }
    project(hi)
}

/// Projection onto `{x >= 0, sum_t w_t x_t <= budget}` (weights positive).
pub fn project_orthant_budget(z: &[f64], weights: &[f64], budget: f64) -> Vec<f64> {
    let clip = |mu: f64| -> Vec<f64> {
        z.iter()
            .zip(weights.iter())
            .map(|(&v, &w)| (v - mu * w).max(0.0))
            .collect()
    };
    let spend = |x: &[f64]| -> f64 { x.iter().zip(weights.iter()).map(|(&v, &w)| v * w).sum() };
    let at_zero = clip(0.0);
    if spend(&at_zero) <= budget + 1e-14 * (1.0 + budget) {
        return at_zero;
    }
    let mut hi = 1.0;
    while spend(&clip(hi)) > budget {
        hi *= 2.0;
        if hi > 1e18 {
            break;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if spend(&clip(mid)) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * (1.0 + hi) {
            break;
        }
    }
    clip(hi)
}

/// Projection onto the halfspace `{x : a.x <= b}` (or `>=` when `lower`).
pub fn project_halfspace(x: &[f64], a: &[f64], b: f64, lower: bool) -> Vec<f64> {
    let dot: f64 = x.iter().zip(a.iter()).map(|(&xi, &ai)| xi * ai).sum();
    let norm2: f64 = a.iter().map(|&ai| ai * ai).sum();
    if norm2 == 0.0 {
        return x.to_vec();
    }
    let violation = if lower { (b - dot).max(0.0) } else { -(dot - b).max(0.0) };
    if violation == 0.0 {
        return x.to_vec();
    }
    x.iter()
        .zip(a.iter())
        .map(|(&xi, &ai)| xi + violation * ai / norm2)
        .collect()
}

/// Projection operator onto one convex set, as used by [`dykstra`].
pub type Projection<'a> = &'a dyn Fn(&[f64]) -> Vec<f64>;

/// Dykstra's alternating projection onto an intersection of convex sets.
/// Converges to the Euclidean projection when the intersection is nonempty.
pub fn dykstra(z: &[f64], projections: &[Projection], iterations: usize) -> Vec<f64> {
    let mut x = z.to_vec();
    let mut increments = vec![vec![0.0; z.len()]; projections.len()];
    for _ in 0..iterations {
        let mut moved = 0.0f64;
        for (proj, inc) in projections.iter().zip(increments.iter_mut()) {
            let y: Vec<f64> = x.iter().zip(inc.iter()).map(|(&xi, &pi)| xi + pi).collect();
            let px = proj(&y);
            for k in 0..x.len() {
                let new_inc = y[k] - px[k];
                moved = moved.max((px[k] - x[k]).abs());
                inc[k] = new_inc;
            }
            x = px;
        }
        if moved < 1e-14 {
            break;
        }
    }
    x
}
