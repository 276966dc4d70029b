use num_rational::Ratio;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("computational intensity undefined: X - reuse + min_io = {denominator} must be positive")]
pub struct IntensityDomainError {
    pub denominator: i64,
}

/// `vol / (X - reuse + min_io)`: computations per word of I/O of a
/// subcomputation with `vol` vertices, dominator bound `X`, reuse set size
/// `reuse` and store set size `min_io`.
pub fn computational_intensity(vol: u64, x: u64, reuse: u64, min_io: u64) -> Result<Ratio<i64>, IntensityDomainError> {
    let denominator = x as i64 - reuse as i64 + min_io as i64;
    if denominator <= 0 {
        return Err(IntensityDomainError { denominator });
    }
    Ok(Ratio::new(vol as i64, denominator))
}

/// `ceil(total / rho)`, the I/O lower bound implied by a maximal intensity.
pub fn io_lower_bound(total: u64, rho: Ratio<i64>) -> u64 {
    assert!(*rho.numer() > 0, "intensity must be positive");
    // total / (p/q) = total * q / p
    let num = total as i128 * *rho.denom() as i128;
    let den = *rho.numer() as i128;
    ((num + den - 1) / den) as u64
}

/// `2mnk / sqrt(S) + mn`: the minimal number of loads and stores of any
/// sequential schedule with `S` words of fast memory.
pub fn sequential_lower_bound(m: usize, n: usize, k: usize, s: usize) -> f64 {
    let (m, n, k) = (m as f64, n as f64, k as f64);
    2.0 * m * n * k / (s as f64).sqrt() + m * n
}
