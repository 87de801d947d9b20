use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid reward family: {0}")]
pub struct FamilyError(pub String);

/// Affine reward family `r -> a r + b` with `a` and `b` drawn uniformly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardFamily {
    pub scale: (f64, f64),
    pub offset: (f64, f64),
    /// The true reward is kept when the uniform draw is at least this value.
    pub threshold: f64,
    /// Share of the episodes, at the end of training, run on the true reward.
    pub fine_tune_fraction: f64,
}

impl Default for RewardFamily {
    fn default() -> Self {
        Self { scale: (0.5, 2.0), offset: (-2.0, 2.0), threshold: 0.5, fine_tune_fraction: 0.2 }
    }
}

impl RewardFamily {
    pub fn validate(&self) -> Result<(), FamilyError> {
        let finite = [self.scale.0, self.scale.1, self.offset.0, self.offset.1].iter().all(|v| v.is_finite());
        if !finite || self.scale.0 > self.scale.1 || self.offset.0 > self.offset.1 {
            return Err(FamilyError(format!("ranges {:?} / {:?}", self.scale, self.offset)));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(FamilyError(format!("threshold {}", self.threshold)));
        }
        if !(0.0..=1.0).contains(&self.fine_tune_fraction) {
            return Err(FamilyError(format!("fine-tune fraction {}", self.fine_tune_fraction)));
        }
        Ok(())
    }

    fn draw<R: Rng + ?Sized>(range: (f64, f64), rng: &mut R) -> f64 {
        if range.0 == range.1 {
            range.0
        } else {
            rng.random_range(range.0..=range.1)
        }
    }

    /// Draws the mapping used for one training unit.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Perturbation {
        let u: f64 = rng.random();
        self.sample_with(u, rng)
    }

    /// As [`RewardFamily::sample`] with the branch draw `u` supplied.
    pub fn sample_with<R: Rng + ?Sized>(&self, u: f64, rng: &mut R) -> Perturbation {
        if u >= self.threshold {
            Perturbation::Identity
        } else {
            Perturbation::Affine { a: Self::draw(self.scale, rng), b: Self::draw(self.offset, rng) }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Perturbation {
    Identity,
    Affine { a: f64, b: f64 },
}

impl Perturbation {
    pub fn apply(self, r: f64) -> f64 {
        match self {
            Self::Identity => r,
            Self::Affine { a, b } => a * r + b,
        }
    }

    pub fn is_identity(self) -> bool {
        self == Self::Identity
    }
}

/// Keeps `r` when a uniform draw is at least the threshold, otherwise maps it
/// through a freshly sampled member of the family.
pub fn randomize_reward<R: Rng + ?Sized>(r: f64, family: &RewardFamily, rng: &mut R) -> f64 {
    family.sample(rng).apply(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn forced_high_draw_keeps_reward() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let fam = RewardFamily::default();
        assert_eq!(fam.sample_with(0.7, &mut rng).apply(-3.25), -3.25);
        assert_eq!(fam.sample_with(0.5, &mut rng), Perturbation::Identity);
        assert!(!fam.sample_with(0.49, &mut rng).is_identity());
    }

    #[test]
    fn identity_family() {
        let fam = RewardFamily { scale: (1.0, 1.0), offset: (0.0, 0.0), ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for i in 0..100 {
            let r = i as f64 * 0.37 - 10.0;
            assert_eq!(randomize_reward(r, &fam, &mut rng), r);
        }
    }

    #[test]
    fn invalid_families() {
        assert!(RewardFamily { scale: (2.0, 1.0), ..Default::default() }.validate().is_err());
        assert!(RewardFamily { threshold: 1.5, ..Default::default() }.validate().is_err());
        assert!(RewardFamily::default().validate().is_ok());
    }
}
