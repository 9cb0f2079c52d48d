//! Two-sample Kolmogorov-Smirnov distance.

/// `sup_x |F_a(x) - F_b(x)|` by a merge scan over both sorted samples.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    assert!(
        !a.is_empty() && !b.is_empty(),
        "ks_distance needs two nonempty samples"
    );
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable_by(f64::total_cmp);
    b.sort_unstable_by(f64::total_cmp);
    ks_distance_sorted(&a, &b)
}

/// As [`ks_distance`] for samples already sorted ascending.
pub fn ks_distance_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        // step past every copy of the smaller value in both samples at once
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic two-sample critical value `sqrt(-ln(level/2)/2) sqrt((n+m)/(nm))`.
pub fn ks_critical_value(n: usize, m: usize, level: f64) -> f64 {
    let c = (-(level / 2.0).ln() / 2.0).sqrt();
    let (n, m) = (n as f64, m as f64);
    c * ((n + m) / (n * m)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedNode;
    use rand::Rng;

    #[test]
    fn examples() {
        assert_eq!(ks_distance(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0]), 0.0);
        assert_eq!(ks_distance(&[0.0], &[1.0]), 1.0);
        assert_eq!(ks_distance(&[1.0, 1.0, 2.0], &[1.0, 2.0, 2.0]), 1.0 / 3.0);
        assert!((ks_critical_value(100, 100, 0.05) - 1.358 * 0.02f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn null_distribution() {
        let bound = 1.36 * (2.0f64 / 1e5).sqrt() * 1.5;
        let mut ok = 0;
        for s in 0..100 {
            let mut rng = SeedNode::root(s).rng();
            let v: Vec<f64> = (0..200_000).map(|_| rng.gen::<f64>()).collect();
            if ks_distance(&v[..100_000], &v[100_000..]) < bound {
                ok += 1;
            }
        }
        assert!(ok >= 99, "{ok}");
    }
}
