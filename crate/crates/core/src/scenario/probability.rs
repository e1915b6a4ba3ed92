//! Detection and evasion probabilities.

/// Detection probability of a sensor at distance `d` with range `radius`.
pub fn detection_probability(d: f64, radius: f64) -> f64 {
    1.0 / (1.0 + (d * d) / (radius * radius))
}

/// Probability that strictly fewer than `omega` of the independent detections
/// with probabilities `p` occur.
///
/// Poisson-binomial recurrence truncated at `omega` counts, so the cost is
/// `O(len(p) * omega)`.
pub fn evasion_probability(p: &[f64], omega: u32) -> f64 {
    let omega = omega as usize;
    if omega == 0 {
        return 0.0;
    }
    if p.len() < omega {
        return 1.0;
    }
    // dist[k] = P(exactly k detections so far), for k < omega.
    let mut dist = vec![0.0; omega];
    dist[0] = 1.0;
    for &pi in p {
        let qi = 1.0 - pi;
        for k in (1..omega).rev() {
            dist[k] = dist[k] * qi + dist[k - 1] * pi;
        }
        dist[0] *= qi;
    }
    dist.iter().sum::<f64>().clamp(0.0, 1.0)
}

/// Closed form for `omega = 2`: nothing detected, or exactly one sensor fires.
pub fn evasion_probability_two(p: &[f64]) -> f64 {
    let none: f64 = p.iter().map(|pi| 1.0 - pi).product();
    let one: f64 = (0..p.len())
        .map(|s| {
            p[s] * p
                .iter()
                .enumerate()
                .filter(|&(r, _)| r != s)
                .map(|(_, pr)| 1.0 - pr)
                .product::<f64>()
        })
        .sum();
    none + one
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn by_subsets(p: &[f64], omega: u32) -> f64 {
        let s = p.len();
        let mut total = 0.0;
        for mask in 0u32..(1 << s) {
            if mask.count_ones() >= omega {
                continue;
            }
            let mut pr = 1.0;
            for (i, &pi) in p.iter().enumerate() {
                pr *= if mask & (1 << i) != 0 { pi } else { 1.0 - pi };
            }
            total += pr;
        }
        total
    }

    #[test]
    fn small_cases() {
        assert_eq!(evasion_probability(&[0.5], 2), 1.0);
        assert!((evasion_probability(&[0.5, 0.5], 2) - 0.75).abs() < 1e-15);
        assert_eq!(detection_probability(2.4, 2.4), 0.5);
        assert_eq!(evasion_probability(&[], 1), 1.0);
        assert!((evasion_probability(&[0.3], 1) - 0.7).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn matches_subset_enumeration(p in prop::collection::vec(0.0f64..=1.0, 0..=10), omega in 1u32..=11) {
            let a = evasion_probability(&p, omega);
            let b = by_subsets(&p, omega);
            prop_assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }

        #[test]
        fn matches_two_sensor_formula(p in prop::collection::vec(0.0f64..=1.0, 0..=12)) {
            prop_assert!((evasion_probability(&p, 2) - evasion_probability_two(&p)).abs() < 1e-12);
        }

        #[test]
        fn extra_sensor_never_helps(p in prop::collection::vec(0.0f64..=1.0, 0..=8), extra in 0.0f64..=1.0, omega in 1u32..=4) {
            let before = evasion_probability(&p, omega);
            let mut q = p.clone();
            q.push(extra);
            prop_assert!(evasion_probability(&q, omega) <= before + 1e-12);
        }
    }
}
