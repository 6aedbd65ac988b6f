//! Correctly rounded summation.
//!
//! The per-CUT clutter estimators sum with [`fsum`], so a window's estimate
//! does not depend on the order its cells are visited in. Most sums are
//! settled by a compensated pass whose error is bounded; the rest go through
//! Shewchuk's non-overlapping partials with a half-even correction.

/// Correctly rounded sum of `xs`.
pub fn fsum(xs: &[f64]) -> f64 {
    fsum_iter(xs.iter().copied())
}

pub fn fsum_iter<I>(xs: I) -> f64
where
    I: IntoIterator<Item = f64>,
    I::IntoIter: Clone,
{
    let xs = xs.into_iter();
    match compensated(xs.clone()) {
        Some(sum) => sum,
        None => partials_sum(xs),
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Cascaded TwoSum over four interleaved lanes. Returns the rounded sum only
/// when the exact sum lies provably inside the rounding interval of the
/// result.
fn compensated(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut s, mut e, mut abs_err) = ([0.0f64; 4], 0.0f64, 0.0f64);
    let mut lane_err = [0.0f64; 4];
    let mut n = 0usize;
    for x in xs {
        let k = n & 3;
        let (t, q) = two_sum(s[k], x);
        s[k] = t;
        lane_err[k] += q;
        abs_err += q.abs();
        n += 1;
    }
    let mut total = s[0];
    for (k, &lane) in s.iter().enumerate().skip(1) {
        let (t, q) = two_sum(total, lane);
        total = t;
        e += q + lane_err[k];
        abs_err += q.abs();
    }
    e += lane_err[0];
    let s = total;
    let n = n + 3;
    // Each q is exact; only their float sum `e` is rounded, by at most
    // (n - 1) u sum|q| to first order. The factor 4 and the subnormal term
    // absorb higher-order terms and the rounding of `abs_err` itself.
    let bound = 4.0 * n as f64 * f64::EPSILON * abs_err + n as f64 * f64::from_bits(1);
    let (r, r_err) = two_sum(s, e);
    if !(r.is_finite() && bound.is_finite()) {
        return None;
    }
    // Half the spacing to the neighbouring float on either side: half an
    // ulp, or a quarter below an exact power of two.
    let bits = r.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    if exp <= 54 {
        return None;
    }
    let power_of_two = bits & ((1 << 52) - 1) == 0;
    let margin = f64::from_bits(((exp - 53 - power_of_two as i64) as u64) << 52);
    (r_err.abs() + bound < margin).then_some(r)
}

fn partials_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let mut partials: Vec<f64> = Vec::with_capacity(8);
    for mut x in xs {
        let mut i = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        partials.truncate(i);
        partials.push(x);
    }

    let mut n = partials.len();
    if n == 0 {
        return 0.0;
    }
    n -= 1;
    let mut hi = partials[n];
    let mut lo = 0.0;
    while n > 0 {
        let x = hi;
        n -= 1;
        let y = partials[n];
        hi = x + y;
        let yr = hi - x;
        lo = y - yr;
        if lo != 0.0 {
            break;
        }
    }
    // Round half-even across the remaining partials.
    if n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0)) {
        let y = lo * 2.0;
        let x = hi + y;
        let yr = x - hi;
        if y == yr {
            hi = x;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fsum_recovers_cancelled_terms() {
        assert_eq!(fsum(&[1e16, 1.0, 1.0]), 1e16 + 2.0);
        assert_eq!(fsum(&[1e100, 1.0, -1e100, 1e-100]), 1.0);
        assert_eq!(fsum(&[0.1; 10]), 1.0);
        assert_eq!(fsum(&[]), 0.0);
    }

    #[test]
    fn rounds_half_even() {
        // 2^53 + 1 is a tie between 2^53 and 2^53 + 2.
        assert_eq!(fsum(&[9007199254740992.0, 1.0]), 9007199254740992.0);
        // A sticky bit below the tie rounds up.
        assert_eq!(fsum(&[9007199254740992.0, 1.0, 1e-300]), 9007199254740994.0);
    }

    #[test]
    fn just_past_a_tie() {
        let (half_ulp, tiny) = (2f64.powi(-53), 2f64.powi(-80));
        assert_eq!(fsum(&[1.0, half_ulp + tiny]), 1.0 + 2.0 * half_ulp);
        assert_eq!(fsum(&[1.0, half_ulp - tiny]), 1.0);
        // Below a power of two the spacing halves.
        assert_eq!(fsum(&[1.0, -half_ulp / 2.0 + tiny]), 1.0);
        assert_eq!(fsum(&[1.0, -half_ulp / 2.0 - tiny]), 1.0 - half_ulp);
    }

    #[test]
    fn subnormal_inputs() {
        let tiny = f64::from_bits(1);
        assert_eq!(fsum(&[tiny, tiny]), 2.0 * tiny);
    }

    fn magnitudes() -> impl Strategy<Value = f64> {
        prop_oneof![
            0.0..1.0f64,
            (0.0..1.0f64, -40i32..40).prop_map(|(m, e)| m * 10f64.powi(e)),
            (0u8..=255).prop_map(|l| 10f64.powf(l as f64 / 20.0).powi(2)),
        ]
    }

    proptest! {
        #[test]
        fn order_independent(mut xs in proptest::collection::vec(magnitudes(), 1..60), seed in any::<u64>()) {
            let before = fsum(&xs);
            let k = (seed as usize) % xs.len();
            xs.rotate_left(k);
            xs.reverse();
            prop_assert_eq!(fsum(&xs), before);
        }

        #[test]
        fn fast_path_matches_partials(xs in proptest::collection::vec(magnitudes().prop_flat_map(|m| prop_oneof![Just(m), Just(-m)]), 0..120)) {
            prop_assert_eq!(fsum(&xs).to_bits(), partials_sum(xs.iter().copied()).to_bits());
        }

        // Sums built around rounding ties exercise the bound check.
        #[test]
        fn compensated_agrees_with_partials(
            big in (-60i32..60).prop_map(|e| 2f64.powi(e)),
            parts in proptest::collection::vec((-3i32..3, 40i32..60, 0usize..3), 1..40),
        ) {
            let mut xs = vec![big];
            for (k, shift, copies) in parts {
                for _ in 0..=copies {
                    xs.push(k as f64 * big * 2f64.powi(-shift));
                }
            }
            let partial = partials_sum(xs.iter().copied());
            prop_assert_eq!(fsum(&xs).to_bits(), partial.to_bits());
            if let Some(fast) = compensated(xs.iter().copied()) {
                prop_assert_eq!(fast.to_bits(), partial.to_bits());
            }
        }

        // Integers below 2^53 sum exactly in i128, giving an independent oracle.
        #[test]
        fn matches_integer_sum(xs in proptest::collection::vec(0u64..(1 << 52), 0..100)) {
            let exact: i128 = xs.iter().map(|&x| x as i128).sum();
            let floats: Vec<f64> = xs.iter().map(|&x| x as f64).collect();
            prop_assert_eq!(fsum(&floats), exact as f64);
        }
    }
}
