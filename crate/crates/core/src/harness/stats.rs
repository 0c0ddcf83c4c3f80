//! Small statistics helpers used to aggregate trials and judge orderings.

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation with divisor `n - 1`; 0 for fewer than two values.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// `sd / sqrt(n)`.
pub fn std_error(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    sample_sd(xs) / (xs.len() as f64).sqrt()
}

/// One-sided sign test: probability of at least `wins` successes out of
/// `trials` fair coin flips.
pub fn sign_test_p_value(wins: usize, trials: usize) -> f64 {
    if wins == 0 {
        return 1.0;
    }
    // sum_{k >= wins} C(trials, k) / 2^trials, in log space.
    let ln_half = -std::f64::consts::LN_2 * trials as f64;
    let mut ln_choose = 0.0; // ln C(trials, 0)
    let mut terms = Vec::new();
    for k in 0..=trials {
        if k > 0 {
            ln_choose += ((trials - k + 1) as f64).ln() - (k as f64).ln();
        }
        if k >= wins {
            terms.push(ln_choose + ln_half);
        }
    }
    crate::numeric::log_sum_exp(&terms).exp().min(1.0)
}

/// Outcome of a paired comparison where smaller is better.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedComparison {
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
    /// One-sided sign-test p-value for "first is smaller", ties dropped.
    pub p_value: f64,
}

pub fn paired_smaller(first: &[f64], second: &[f64]) -> PairedComparison {
    assert_eq!(first.len(), second.len(), "paired samples must align");
    let wins = first.iter().zip(second).filter(|(a, b)| a < b).count();
    let losses = first.iter().zip(second).filter(|(a, b)| a > b).count();
    let ties = first.len() - wins - losses;
    PairedComparison {
        wins,
        losses,
        ties,
        p_value: sign_test_p_value(wins, wins + losses),
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mx, my) = (mean(&lx), mean(&ly));
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Median of a non-empty slice.
pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}
