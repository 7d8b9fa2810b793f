use serde::{Deserialize, Serialize};

/// Evidence declared alongside a submission. Recorded, not executed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Evidence {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code_url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub publication_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub container_digest: Option<String>,
}

impl Evidence {
    /// Blank strings count as absent.
    pub fn normalized(self) -> Self {
        let keep = |v: Option<String>| v.map(|s| s.trim().to_string()).filter(|s| !s.is_empty());
        Self {
            code_url: keep(self.code_url),
            publication_ref: keep(self.publication_ref),
            container_digest: keep(self.container_digest),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Badge {
    Bronze,
    Silver,
    Gold,
}

/// GOLD needs both code and a publication; otherwise a container digest
/// earns SILVER; anything else is BRONZE.
pub fn assign_badge(evidence: &Evidence) -> Badge {
    let evidence = evidence.clone().normalized();
    if evidence.code_url.is_some() && evidence.publication_ref.is_some() {
        Badge::Gold
    } else if evidence.container_digest.is_some() {
        Badge::Silver
    } else {
        Badge::Bronze
    }
}
