//! Descriptive statistics shared by the simulator diagnostics and the
//! Monte Carlo harness.

use ndarray::ArrayView2;

use crate::Scalar;

pub fn mean<S: Scalar>(xs: &[S]) -> S {
    if xs.is_empty() {
        return S::zero();
    }
    xs.iter().cloned().sum::<S>() / S::of(xs.len() as f64)
}

/// Sample standard deviation (n - 1 in the denominator).
pub fn sample_sd<S: Scalar>(xs: &[S]) -> S {
    if xs.len() < 2 {
        return S::zero();
    }
    let m = mean(xs);
    let ss = xs.iter().map(|&x| (x - m) * (x - m)).sum::<S>();
    (ss / S::of((xs.len() - 1) as f64)).sqrt()
}

pub fn median<S: Scalar>(xs: &[S]) -> S {
    if xs.is_empty() {
        return S::zero();
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / S::of(2.0)
    }
}

fn euclidean<S: Scalar>(a: ndarray::ArrayView1<S>, b: ndarray::ArrayView1<S>) -> S {
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<S>()
        .sqrt()
}

/// Mean silhouette coefficient of the labelled points. Singleton clusters
/// contribute zero; a single occupied cluster gives zero overall.
pub fn silhouette<S: Scalar>(points: &ArrayView2<S>, labels: &[usize]) -> S {
    let n = points.nrows();
    assert_eq!(n, labels.len(), "one label per point");
    let k = labels.iter().max().map_or(0, |&m| m + 1);
    let counts = {
        let mut c = vec![0usize; k];
        for &l in labels {
            c[l] += 1;
        }
        c
    };
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return S::zero();
    }
    let mut total = S::zero();
    for i in 0..n {
        let li = labels[i];
        if counts[li] <= 1 {
            continue; // contributes 0
        }
        let mut sums = vec![S::zero(); k];
        for j in 0..n {
            if j == i {
                continue;
            }
            sums[labels[j]] += euclidean(points.row(i), points.row(j));
        }
        let a = sums[li] / S::of((counts[li] - 1) as f64);
        let mut b = S::infinity();
        for (l, &c) in counts.iter().enumerate() {
            if l != li && c > 0 {
                b = b.min(sums[l] / S::of(c as f64));
            }
        }
        let denom = a.max(b);
        if denom > S::zero() {
            total += (b - a) / denom;
        }
    }
    total / S::of(n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn basic_descriptives() {
        assert_eq!(mean::<f64>(&[1.0, 2.0, 3.0]), 2.0);
        assert_eq!(median::<f64>(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median::<f64>(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!((sample_sd::<f64>(&[1.0, 2.0, 3.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn silhouette_separated_clusters_near_one() {
        let pts = array![
            [0.0, 0.0],
            [0.1, 0.0],
            [0.0, 0.1],
            [5.0, 5.0],
            [5.1, 5.0],
            [5.0, 5.1]
        ];
        let s = silhouette(&pts.view(), &[0, 0, 0, 1, 1, 1]);
        assert!(s > 0.9, "got {s}");
    }

    #[test]
    fn silhouette_single_cluster_is_zero() {
        let pts = array![[0.0, 0.0], [1.0, 1.0]];
        assert_eq!(silhouette(&pts.view(), &[0, 0]), 0.0);
    }
}
