use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::canonical::text_enum;

use super::TaskError;

text_enum!(
    SplitMethod {
        PlayerHash => "PLAYER_HASH",
    }
);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub method: SplitMethod,
    /// Share of players assigned to training, strictly between 0 and 1.
    pub train_fraction: f64,
    pub salt: String,
}

impl SplitSpec {
    pub fn player_hash(train_fraction: f64, salt: &str) -> Self {
        Self {
            method: SplitMethod::PlayerHash,
            train_fraction,
            salt: salt.to_string(),
        }
    }

    pub fn validate(&self) -> Result<(), TaskError> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(TaskError::InvalidSpec(format!(
                "train_fraction must be strictly between 0 and 1, got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }

    /// Whether `player_id` lands in the training set. Depends only on the
    /// id and the salt.
    pub fn is_train(&self, player_id: &str) -> bool {
        let mut hasher = Sha256::new();
        hasher.update(self.salt.as_bytes());
        hasher.update([0u8]);
        hasher.update(player_id.as_bytes());
        let digest = hasher.finalize();
        let mut head = [0u8; 8];
        head.copy_from_slice(&digest[..8]);
        // 53 high bits give an exactly representable uniform in [0, 1).
        let u = (u64::from_be_bytes(head) >> 11) as f64 / (1u64 << 53) as f64;
        u < self.train_fraction
    }
}

/// Splits ids into sorted `(train, test)` lists.
pub fn split_players<'a, I>(player_ids: I, spec: &SplitSpec) -> (Vec<String>, Vec<String>)
where
    I: IntoIterator<Item = &'a str>,
{
    let (mut train, mut test): (Vec<String>, Vec<String>) = player_ids
        .into_iter()
        .map(str::to_string)
        .partition(|id| spec.is_train(id));
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}
