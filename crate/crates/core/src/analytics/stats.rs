//! Scalar statistics kernels, generic over the float type.

use statrs::function::beta::beta_reg;
use statrs::function::erf::erfc;

use crate::error::{GeaError, Result};
use crate::num::Real;

pub fn mean<T: Real>(xs: &[T]) -> Option<T> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().copied().sum::<T>() / T::from_count(xs.len()))
    }
}

/// Sample standard deviation (n - 1); `None` below two values.
pub fn sample_sd<T: Real>(xs: &[T]) -> Option<T> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs)?;
    let ss: T = xs.iter().map(|&x| (x - m) * (x - m)).sum();
    Some((ss / T::from_count(xs.len() - 1)).sqrt())
}

/// Sample Pearson correlation. `Ok(None)` when either side has zero
/// variance; fewer than two pairs is an error.
pub fn pearson<T: Real>(xs: &[T], ys: &[T]) -> Result<Option<T>> {
    if xs.len() != ys.len() {
        return Err(GeaError::validation("pairs", "x and y lengths differ"));
    }
    if xs.len() < 2 {
        return Err(GeaError::InsufficientData(format!(
            "pearson needs at least 2 pairs, got {}",
            xs.len()
        )));
    }
    // exact test first: a constant column can leave rounding residue in the sums
    let constant = |v: &[T]| v.iter().all(|&a| a == v[0]);
    if constant(xs) || constant(ys) {
        return Ok(None);
    }
    let mx = mean(xs).expect("nonempty");
    let my = mean(ys).expect("nonempty");
    let (mut sxx, mut syy, mut sxy) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
        sxy = sxy + dx * dy;
    }
    if sxx == T::zero() || syy == T::zero() {
        return Ok(None);
    }
    let r = sxy / (sxx * syy).sqrt();
    Ok(Some(r.max(-T::one()).min(T::one())))
}

/// Mean of `y - x`.
pub fn signed_bias<T: Real>(xs: &[T], ys: &[T]) -> Result<T> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(GeaError::InsufficientData("signed bias needs at least one pair".into()));
    }
    let total: T = xs.iter().zip(ys).map(|(&x, &y)| y - x).sum();
    Ok(total / T::from_count(xs.len()))
}

/// Two-sided p-value for H0: rho = 0 via `t = r sqrt((n-2)/(1-r^2))` with
/// `n - 2` degrees of freedom. `None` when `n < 3`.
pub fn correlation_p_value<T: Real>(r: T, n: usize) -> Option<T> {
    if n < 3 {
        return None;
    }
    let r = r.as_f64();
    let df = (n - 2) as f64;
    let one_minus = 1.0 - r * r;
    if one_minus <= 0.0 {
        return Some(T::zero());
    }
    let t2 = r * r * df / one_minus;
    let p = beta_reg(df / 2.0, 0.5, df / (df + t2));
    Some(T::lit(p.clamp(0.0, 1.0)))
}

/// Linear-interpolation quantile (type 7) of sorted data.
pub fn quantile_sorted<T: Real>(sorted: &[T], q: T) -> Option<T> {
    if sorted.is_empty() {
        return None;
    }
    let h = T::from_count(sorted.len() - 1) * q.max(T::zero()).min(T::one());
    let lo = h.floor();
    let i = lo.to_usize().expect("index");
    let j = (i + 1).min(sorted.len() - 1);
    Some(sorted[i] + (h - lo) * (sorted[j] - sorted[i]))
}

/// Benjamini-Hochberg step-up: rejects every hypothesis whose p-value is at
/// most the largest `p_(k)` with `p_(k) <= k alpha / m`.
pub fn benjamini_hochberg<T: Real>(p: &[T], alpha: T) -> Vec<bool> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].partial_cmp(&p[b]).expect("p-values are not NaN").then(a.cmp(&b)));
    let mut cutoff = None;
    for (rank, &i) in order.iter().enumerate() {
        if p[i] <= T::from_count(rank + 1) * alpha / T::from_count(m) {
            cutoff = Some(p[i]);
        }
    }
    match cutoff {
        Some(c) => p.iter().map(|&x| x <= c).collect(),
        None => vec![false; m],
    }
}

/// Fisher z test for the difference of two independent correlations.
/// Returns `(z, two-sided p)`.
pub fn fisher_z<T: Real>(r1: T, n1: usize, r2: T, n2: usize) -> Result<(T, T)> {
    for (r, n) in [(r1, n1), (r2, n2)] {
        if r.is_nan() || r.abs() >= T::one() {
            return Err(GeaError::Domain(format!("fisher z needs |r| < 1, got {r}")));
        }
        if n < 4 {
            return Err(GeaError::Domain(format!("fisher z needs n >= 4, got {n}")));
        }
    }
    let se = (T::one() / T::from_count(n1 - 3) + T::one() / T::from_count(n2 - 3)).sqrt();
    let z = (r1.atanh() - r2.atanh()) / se;
    let p = erfc(z.abs().as_f64() / std::f64::consts::SQRT_2);
    Ok((z, T::lit(p)))
}
