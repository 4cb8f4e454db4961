//! Ridge regression by closed-form normal equations with an unpenalized
//! intercept. Solved in the primal (p x p) or dual (n x n) form, whichever
//! is smaller.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::tfidf::SparseVec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub penalty: f64,
}

impl RidgeModel {
    pub fn predict(&self, x: &SparseVec) -> f64 {
        self.intercept + x.dot_dense(&self.weights)
    }
}

/// Solve (Xc'Xc + penalty*I) w = Xc'yc on centered data; intercept is
/// ybar - w.xbar. Deterministic; penalty 0 on a singular system is a
/// numeric error.
pub fn fit_ridge(x: &[SparseVec], y: &[f64], dims: usize, penalty: f64) -> Result<RidgeModel> {
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::Domain(format!(
            "ridge fit needs matching nonempty X ({}) and y ({})",
            x.len(),
            y.len()
        )));
    }
    if penalty < 0.0 {
        return Err(Error::Domain("ridge penalty must be nonnegative".into()));
    }
    let n = x.len();
    let mean_y = y.iter().sum::<f64>() / n as f64;
    let mut mean_x = vec![0.0; dims];
    for row in x {
        for (&i, &v) in row.indices.iter().zip(&row.values) {
            mean_x[i as usize] += v;
        }
    }
    for m in &mut mean_x {
        *m /= n as f64;
    }

    // centered rows, dense
    let centered: Vec<Vec<f64>> = x
        .iter()
        .map(|row| {
            let mut dense = mean_x.iter().map(|m| -m).collect::<Vec<f64>>();
            for (&i, &v) in row.indices.iter().zip(&row.values) {
                dense[i as usize] += v;
            }
            dense
        })
        .collect();
    let yc: Vec<f64> = y.iter().map(|v| v - mean_y).collect();

    #[allow(clippy::needless_range_loop)]
    let weights = if dims <= n {
        // primal: A = Xc'Xc + penalty*I (p x p), b = Xc'yc
        let mut a = vec![vec![0.0; dims]; dims];
        let mut b = vec![0.0; dims];
        for (row, &target) in centered.iter().zip(&yc) {
            for i in 0..dims {
                if row[i] == 0.0 {
                    continue;
                }
                b[i] += row[i] * target;
                for j in i..dims {
                    a[i][j] += row[i] * row[j];
                }
            }
        }
        for i in 0..dims {
            for j in 0..i {
                a[i][j] = a[j][i];
            }
            a[i][i] += penalty;
        }
        solve(a, b)?
    } else {
        // dual: alpha = (XcXc' + penalty*I)^-1 yc, w = Xc' alpha
        let mut k = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let dot: f64 = centered[i]
                    .iter()
                    .zip(&centered[j])
                    .map(|(a, b)| a * b)
                    .sum();
                k[i][j] = dot;
                k[j][i] = dot;
            }
            k[i][i] += penalty;
        }
        let alpha = solve(k, yc.clone())?;
        let mut w = vec![0.0; dims];
        for (row, &a) in centered.iter().zip(&alpha) {
            for (wi, &ri) in w.iter_mut().zip(row) {
                *wi += a * ri;
            }
        }
        w
    };

    let intercept = mean_y - weights.iter().zip(&mean_x).map(|(w, m)| w * m).sum::<f64>();
    Ok(RidgeModel {
        weights,
        intercept,
        penalty,
    })
}

/// Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("nonempty range");
        if a[pivot_row][col].abs() < 1e-12 {
            return Err(Error::Numeric(
                "singular normal-equations system; use a positive penalty".into(),
            ));
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut sum = b[col];
        for k in col + 1..n {
            sum -= a[col][k] * x[k];
        }
        x[col] = sum / a[col][col];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(values: &[f64]) -> SparseVec {
        SparseVec {
            indices: (0..values.len() as u32).collect(),
            values: values.to_vec(),
        }
    }

    #[test]
    fn constant_target_gives_zero_weights() {
        let x: Vec<SparseVec> = (0..5).map(|i| dense(&[i as f64, (i * i) as f64])).collect();
        let y = vec![2.5; 5];
        let model = fit_ridge(&x, &y, 2, 1.0).unwrap();
        assert!(model.weights.iter().all(|w| w.abs() < 1e-9));
        assert!((model.intercept - 2.5).abs() < 1e-9);
    }

    #[test]
    fn near_zero_penalty_recovers_ols_slope() {
        // y = 3x + 1 exactly; OLS slope from the direct formula
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let x: Vec<SparseVec> = xs.iter().map(|&v| dense(&[v])).collect();
        let y: Vec<f64> = xs.iter().map(|&v| 3.0 * v + 1.0).collect();
        let model = fit_ridge(&x, &y, 1, 1e-9).unwrap();
        let mean_x = xs.iter().sum::<f64>() / 5.0;
        let mean_y = y.iter().sum::<f64>() / 5.0;
        let sxx: f64 = xs.iter().map(|v| (v - mean_x) * (v - mean_x)).sum();
        let sxy: f64 = xs
            .iter()
            .zip(&y)
            .map(|(v, w)| (v - mean_x) * (w - mean_y))
            .sum();
        let ols_slope = sxy / sxx;
        assert!((model.weights[0] - ols_slope).abs() < 1e-6);
        assert!((model.intercept - 1.0).abs() < 1e-6);
    }

    #[test]
    fn huge_penalty_shrinks_weights_to_zero() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let x: Vec<SparseVec> = xs.iter().map(|&v| dense(&[v])).collect();
        let y: Vec<f64> = xs.iter().map(|&v| 2.0 * v).collect();
        let model = fit_ridge(&x, &y, 1, 1e9).unwrap();
        assert!(model.weights[0].abs() < 1e-3);
    }

    #[test]
    fn primal_and_dual_agree() {
        // p > n triggers the dual path; compare against primal on the same data
        let rows = vec![
            dense(&[1.0, 0.0, 2.0, 0.0, 1.0, 0.5]),
            dense(&[0.0, 1.0, 0.0, 2.0, 0.0, 1.5]),
            dense(&[1.0, 1.0, 1.0, 1.0, 1.0, 1.0]),
        ];
        let y = vec![1.0, -1.0, 0.5];
        let dual = fit_ridge(&rows, &y, 6, 0.7).unwrap();

        // pad with duplicate rows so n >= p and the primal path runs
        let mut rows_p = rows.clone();
        let mut y_p = y.clone();
        for k in 0..3 {
            rows_p.push(rows[k].clone());
            y_p.push(y[k]);
        }
        let primal = fit_ridge(&rows_p, &y_p, 6, 1.4).unwrap();
        // duplicating every row doubles Xc'Xc and Xc'yc, so penalty 2*0.7
        // gives the same solution as the dual fit above
        for (a, b) in dual.weights.iter().zip(&primal.weights) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        assert!((dual.intercept - primal.intercept).abs() < 1e-8);
    }

    #[test]
    fn zero_penalty_on_singular_system_errors() {
        // duplicated feature makes X'X singular
        let x = vec![dense(&[1.0, 1.0]), dense(&[2.0, 2.0]), dense(&[3.0, 3.0])];
        let y = vec![1.0, 2.0, 3.0];
        assert!(matches!(fit_ridge(&x, &y, 2, 0.0), Err(Error::Numeric(_))));
        assert!(fit_ridge(&x, &y, 2, 0.1).is_ok());
    }
}
