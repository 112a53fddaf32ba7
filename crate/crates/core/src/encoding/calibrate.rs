use super::{solve_golgi, BasisLayout, EncodingError, GolgiParams};

const BISECTION_STEPS: usize = 60;

/// Mean and max granule active fraction over `samples`, with the lower
/// Golgi tree receiving `r_sum`.
pub fn mean_active_fraction(
    layout: &BasisLayout,
    params: &GolgiParams,
    samples: &[Vec<f64>],
    r_sum: f64,
) -> Result<(f64, f64), EncodingError> {
    let p = layout.cell_count() as f64;
    let mut total = 0.0;
    let mut max = 0.0f64;
    for q in samples {
        let mossy = layout.encode(q)?;
        let frac = solve_golgi(params, &mossy, r_sum)?.y.active() as f64 / p;
        total += frac;
        max = max.max(frac);
    }
    Ok((total / samples.len().max(1) as f64, max))
}

/// Tunes a uniform granule threshold `σ` so the mean active fraction over
/// `samples` lands near `params.sparsity_target`.
///
/// Activity is non-increasing in `σ`, so this bisects on `σ` between zero and
/// the largest drive seen. Fails when the closest reachable fraction is
/// outside `[0.5, 2] × target`.
pub fn calibrate_sparsity(
    layout: &BasisLayout,
    params: &GolgiParams,
    samples: &[Vec<f64>],
) -> Result<GolgiParams, EncodingError> {
    if samples.is_empty() {
        return Err(EncodingError::Params("calibration needs at least one sample state".into()));
    }
    params.validate(layout.cell_count())?;
    let target = params.sparsity_target;
    let drives = samples.iter().map(|q| layout.encode(q)).collect::<Result<Vec<_>, _>>()?;
    let p = layout.cell_count() as f64;
    let fraction = |sigma: f64| -> Result<f64, EncodingError> {
        let mut c = params.clone();
        c.sigma = vec![sigma];
        let mut total = 0.0;
        for mossy in &drives {
            total += solve_golgi(&c, mossy, 0.0)?.y.active() as f64 / p;
        }
        Ok(total / drives.len() as f64)
    };

    let top = drives
        .iter()
        .flat_map(|d| d.values().iter().copied())
        .fold(0.0f64, f64::max);
    let (mut lo, mut hi) = (0.0, top);
    let (mut f_lo, mut f_hi) = (fraction(lo)?, fraction(hi)?);
    if f_lo > target {
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            let f = fraction(mid)?;
            if f > target {
                lo = mid;
                f_lo = f;
            } else {
                hi = mid;
                f_hi = f;
            }
        }
    } else {
        hi = lo;
        f_hi = f_lo;
    }
    let (sigma, achieved) = if (f_lo - target).abs() <= (f_hi - target).abs() {
        (lo, f_lo)
    } else {
        (hi, f_hi)
    };
    if !(achieved >= 0.5 * target && achieved <= 2.0 * target) {
        return Err(EncodingError::Calibration { achieved, target });
    }
    let mut out = params.clone();
    out.sigma = vec![sigma];
    Ok(out)
}
