//! Independent reference implementations used by the integration suites.
//! Everything here is written from the defining formulas with plain loops
//! over `Vec`s, sharing no code with the library.

#![allow(dead_code)]

/// ARI by enumerating all `n(n-1)/2` sample pairs.
pub fn ari_pairs(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let (mut both, mut same_a, mut same_b) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..n {
        for j in i + 1..n {
            let sa = a[i] == a[j];
            let sb = b[i] == b[j];
            same_a += f64::from(u8::from(sa));
            same_b += f64::from(u8::from(sb));
            both += f64::from(u8::from(sa && sb));
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    let expected = same_a * same_b / pairs;
    let max = (same_a + same_b) / 2.0;
    if max == expected {
        return if both == same_a && both == same_b { 1.0 } else { 0.0 };
    }
    (both - expected) / (max - expected)
}

pub type Mat = Vec<Vec<f64>>;

pub fn zeros(n: usize, m: usize) -> Mat {
    vec![vec![0.0; m]; n]
}

pub fn identity(n: usize) -> Mat {
    let mut a = zeros(n, n);
    (0..n).for_each(|i| a[i][i] = 1.0);
    a
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut c = zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            c[i][j] = (0..k).map(|l| a[i][l] * b[l][j]).sum();
        }
    }
    c
}

pub fn add_scaled(a: &Mat, b: &Mat, s: f64) -> Mat {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + s * y).collect())
        .collect()
}

/// `K (2I + 2 gamma M + gamma^2 M^2 - 2 eta C + eta^2 C^2) K` by dense products.
pub fn dense_u(k: &Mat, m: &Mat, c: &Mat, gamma: f64, eta: f64) -> Mat {
    let n = k.len();
    let mut inner = add_scaled(&zeros(n, n), &identity(n), 2.0);
    inner = add_scaled(&inner, m, 2.0 * gamma);
    inner = add_scaled(&inner, &matmul(m, m), gamma * gamma);
    inner = add_scaled(&inner, c, -2.0 * eta);
    inner = add_scaled(&inner, &matmul(c, c), eta * eta);
    matmul(&matmul(k, &inner), k)
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// eigenvalues in descending order and the matching eigenvectors as columns.
pub fn jacobi_eigen(a: &Mat) -> (Vec<f64>, Mat) {
    let n = a.len();
    let mut a = a.clone();
    let mut v = identity(n);
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y][y].total_cmp(&a[x][x]));
    let values = order.iter().map(|&k| a[k][k]).collect();
    let vectors = (0..n).map(|i| order.iter().map(|&k| v[i][k]).collect()).collect();
    (values, vectors)
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &Mat, b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut m: Mat = a.iter().zip(b).map(|(row, &r)| row.iter().copied().chain([r]).collect()).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs())).unwrap();
        m.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for c in col..=n {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (m[r][n] - s) / m[r][r];
    }
    x
}

fn gauss_kernel(a: &[f64], b: &[f64], kappa: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-d2 / (2.0 * kappa * kappa)).exp()
}

/// Per-class ratio fit written out term by term: returns `(H, h, w)`.
pub fn lsmi_class_fit(x: &[Vec<f64>], y: &[usize], label: usize, centers: &[Vec<f64>], kappa: f64, delta: f64) -> (Mat, Vec<f64>, Vec<f64>) {
    let n = x.len() as f64;
    let n_y = y.iter().filter(|&&l| l == label).count() as f64;
    let m = centers.len();
    let mut h = zeros(m, m);
    let mut hv = vec![0.0; m];
    for l in 0..m {
        for lp in 0..m {
            let mut s = 0.0;
            for xi in x {
                s += gauss_kernel(xi, &centers[l], kappa) * gauss_kernel(xi, &centers[lp], kappa);
            }
            h[l][lp] = n_y / (n * n) * s;
        }
        for (xi, &yi) in x.iter().zip(y) {
            if yi == label {
                hv[l] += gauss_kernel(xi, &centers[l], kappa) / n;
            }
        }
    }
    let reg = add_scaled(&h, &identity(m), delta);
    let w = gauss_solve(&reg, &hv);
    (h, hv, w)
}

/// A fitted ratio: per label, centers and weights.
pub struct RatioOracle {
    pub kappa: f64,
    pub classes: Vec<(usize, Vec<Vec<f64>>, Vec<f64>)>,
}

impl RatioOracle {
    /// Fits every class present in `y`, using all of its samples as centers.
    pub fn fit(x: &[Vec<f64>], y: &[usize], kappa: f64, delta: f64) -> Self {
        let mut labels: Vec<usize> = y.to_vec();
        labels.sort_unstable();
        labels.dedup();
        let classes = labels
            .into_iter()
            .map(|label| {
                let centers: Vec<Vec<f64>> = x.iter().zip(y).filter(|(_, &l)| l == label).map(|(p, _)| p.clone()).collect();
                let (_, _, w) = lsmi_class_fit(x, y, label, &centers, kappa, delta);
                (label, centers, w)
            })
            .collect();
        Self { kappa, classes }
    }

    pub fn ratio(&self, x: &[f64], label: usize) -> f64 {
        let (_, centers, w) = self.classes.iter().find(|c| c.0 == label).expect("fitted class");
        centers.iter().zip(w).map(|(c, wl)| wl * gauss_kernel(x, c, self.kappa)).sum()
    }

    /// `-(1/2n^2) sum_i sum_j r(x_i, y_j)^2 + (1/n) sum_i r(x_i, y_i) - 1/2`.
    pub fn lsmi(&self, x: &[Vec<f64>], y: &[usize]) -> f64 {
        let n = x.len() as f64;
        let mut sq = 0.0;
        for xi in x {
            for &yj in y {
                sq += self.ratio(xi, yj).powi(2);
            }
        }
        let paired: f64 = x.iter().zip(y).map(|(xi, &yi)| self.ratio(xi, yi)).sum();
        -sq / (2.0 * n * n) + paired / n - 0.5
    }
}

/// Held-out score of fold `m`:
/// `(1/2|Z|^2) sum_{x in Z} sum_{y in Z} r(x,y)^2 - (1/|Z|) sum_{(x,y) in Z} r(x,y)`,
/// with the ratio fitted on the other folds.
pub fn cv_fold(x: &[Vec<f64>], y: &[usize], fold_of: &[usize], m: usize, kappa: f64, delta: f64) -> f64 {
    let train: Vec<usize> = (0..x.len()).filter(|&i| fold_of[i] != m).collect();
    let held: Vec<usize> = (0..x.len()).filter(|&i| fold_of[i] == m).collect();
    let tx: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
    let ty: Vec<usize> = train.iter().map(|&i| y[i]).collect();
    let model = RatioOracle::fit(&tx, &ty, kappa, delta);
    let z = held.len() as f64;
    let mut sq = 0.0;
    for &i in &held {
        for &j in &held {
            sq += model.ratio(&x[i], y[j]).powi(2);
        }
    }
    let paired: f64 = held.iter().map(|&i| model.ratio(&x[i], y[i])).sum();
    sq / (2.0 * z * z) - paired / z
}
