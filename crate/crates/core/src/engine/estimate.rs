use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{name} must be at least 1 (got {value})")]
pub struct DomainError {
    pub name: &'static str,
    pub value: i64,
}

/// Minutes a person loses to manual round trips: each chunk of pictures sent
/// to each platform costs `latency_points` waits of `minutes_per_point`.
pub fn estimate_manual_overhead(
    n_images: i64,
    n_platforms: i64,
    chunk_size: i64,
    latency_points: i64,
    minutes_per_point: i64,
) -> Result<i64, DomainError> {
    for (name, value) in [
        ("n_images", n_images),
        ("n_platforms", n_platforms),
        ("chunk_size", chunk_size),
        ("latency_points", latency_points),
        ("minutes_per_point", minutes_per_point),
    ] {
        if value < 1 {
            return Err(DomainError { name, value });
        }
    }
    let chunks = (n_images + chunk_size - 1) / chunk_size;
    Ok(chunks * n_platforms * latency_points * minutes_per_point)
}
