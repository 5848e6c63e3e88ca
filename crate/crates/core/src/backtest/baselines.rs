//! Comparison day-sets: equally spaced and seeded random samples.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BaselineError {
    #[error("cannot pick {n} days out of {days}")]
    TooMany { n: usize, days: usize },
    #[error("at least one trial is required")]
    NoTrials,
}

/// 1-based day indices `floor(D/n)*k + delta` for `k = 1..=n`, keeping those `<= D`.
///
/// `delta` is zero except when the step is exactly seven days and every undelayed index is a
/// weekend day; then it is `floor(D / (2n))`, which can push the last indices past `D`.
pub fn equally_distributed_days<F>(
    days: usize,
    n: usize,
    weekend_of: F,
) -> Result<Vec<usize>, BaselineError>
where
    F: Fn(usize) -> bool,
{
    if n > days {
        return Err(BaselineError::TooMany { n, days });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let step = days / n;
    let all_weekend = (1..=n).all(|k| weekend_of(step * k));
    let delta = if step == 7 && all_weekend {
        days / (2 * n)
    } else {
        0
    };
    Ok((1..=n)
        .map(|k| step * k + delta)
        .take_while(|&i| i <= days)
        .collect())
}

/// `trials` independent samples of `n` distinct 1-based indices from `1..=days`, each sorted.
///
/// Trial `t` draws from a ChaCha8 generator seeded with `seed` on stream `t`, so every trial
/// is reproducible on its own and independent of evaluation order.
pub fn random_days(
    days: usize,
    n: usize,
    seed: u64,
    trials: u32,
) -> Result<Vec<Vec<usize>>, BaselineError> {
    if n > days {
        return Err(BaselineError::TooMany { n, days });
    }
    if trials == 0 {
        return Err(BaselineError::NoTrials);
    }
    Ok((0..trials)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, days, n)
                .into_iter()
                .map(|i| i + 1)
                .collect();
            picked.sort_unstable();
            picked
        })
        .collect())
}
