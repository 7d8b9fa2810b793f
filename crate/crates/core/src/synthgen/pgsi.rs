/// Highest attainable PGSI score (nine items scored 0-3).
pub const PGSI_MAX: u8 = 27;

/// Half-width, in score points, of the uniform noise added to the latent
/// score before rounding.
pub const PGSI_NOISE_SPREAD: f64 = 3.0;

/// Maps latent risk to a PGSI score.
///
/// `noise_draw` is a uniform draw on `[-1, 1]`; `0.0` means no noise. The
/// noiseless score is `27 * latent^2`, so most of the latent range maps to
/// low scores and only the upper tail reaches the at-risk band. For every
/// fixed noise value the result is non-decreasing in `latent`, hence so is
/// its expectation.
pub fn pgsi_from_latent(latent: f64, noise_draw: f64) -> u8 {
    let latent = latent.clamp(0.0, 1.0);
    let raw = f64::from(PGSI_MAX) * latent * latent + PGSI_NOISE_SPREAD * noise_draw.clamp(-1.0, 1.0);
    raw.round().clamp(0.0, f64::from(PGSI_MAX)) as u8
}

/// Inverse-CDF draw from Beta(1, shape) given a uniform `u` in `[0, 1)`.
pub fn latent_from_uniform(u: f64, shape: f64) -> f64 {
    1.0 - (1.0 - u.clamp(0.0, 1.0)).powf(1.0 / shape)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noiseless_endpoints() {
        assert_eq!(pgsi_from_latent(0.0, 0.0), 0);
        assert_eq!(pgsi_from_latent(1.0, 0.0), 27);
    }

    #[test]
    fn noise_never_leaves_the_scale() {
        assert_eq!(pgsi_from_latent(0.0, -1.0), 0);
        assert_eq!(pgsi_from_latent(1.0, 1.0), 27);
    }

    #[test]
    fn monotone_for_each_noise_value() {
        for noise in [-1.0, -0.4, 0.0, 0.33, 1.0] {
            let mut last = 0;
            for step in 0..=1000 {
                let score = pgsi_from_latent(f64::from(step) / 1000.0, noise);
                assert!(score >= last);
                last = score;
            }
        }
    }

    #[test]
    fn monte_carlo_mean_separates_latent_levels() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut mean = |latent: f64| {
            let total: u32 = (0..10_000)
                .map(|_| u32::from(pgsi_from_latent(latent, rng.random_range(-1.0..=1.0))))
                .sum();
            f64::from(total) / 10_000.0
        };
        let high = mean(0.8);
        let low = mean(0.2);
        assert!(high - low >= 3.0, "high={high} low={low}");
    }

    #[test]
    fn beta_draw_has_expected_mean() {
        // Beta(1, 4) has mean 1/5.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let total: f64 = (0..n).map(|_| latent_from_uniform(rng.random(), 4.0)).sum();
        assert!((total / f64::from(n) - 0.2).abs() < 0.005);
    }
}
