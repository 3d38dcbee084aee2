//! Hungarian algorithm with potentials, O(n^2 m).

/// Maximum-weight one-to-one assignment on a dense `rows x cols` weight
/// matrix. Returns, for each row, the matched column (`None` when there are
/// more rows than columns and the row is left out).
pub fn max_weight_assignment(weights: &[Vec<f64>]) -> Vec<Option<usize>> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return vec![None; rows];
    }
    // the solver wants rows <= cols; transpose otherwise
    if rows > cols {
        let t: Vec<Vec<f64>> = (0..cols).map(|c| (0..rows).map(|r| weights[r][c]).collect()).collect();
        let mut out = vec![None; rows];
        for (c, r) in min_cost(&t, true).into_iter().enumerate() {
            out[r] = Some(c);
        }
        return out;
    }
    min_cost(weights, true).into_iter().map(Some).collect()
}

/// Assigns every row (n <= m) to a distinct column minimising total cost
/// (or maximising, when `negate`).
fn min_cost(a: &[Vec<f64>], negate: bool) -> Vec<usize> {
    let n = a.len();
    let m = a[0].len();
    let cost = |i: usize, j: usize| if negate { -a[i][j] } else { a[i][j] };
    // 1-based arrays; p[j] = row matched to column j
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
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
    let mut row_to_col = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}
