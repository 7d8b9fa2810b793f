//! Built-in generator configs.

use super::{SynthError, SyntheticConfig};

pub const PRESET_NAMES: [&str; 4] = ["universal", "lottery", "highly_engaged", "early_risk"];

fn preset_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "universal" => include_str!("../../../../presets/universal.json"),
        "lottery" => include_str!("../../../../presets/lottery.json"),
        "highly_engaged" => include_str!("../../../../presets/highly_engaged.json"),
        "early_risk" => include_str!("../../../../presets/early_risk.json"),
        _ => return None,
    })
}

/// Loads a preset by name; `-` and `_` are interchangeable.
pub fn preset(name: &str) -> Result<SyntheticConfig, SynthError> {
    let normalized = name.trim().to_ascii_lowercase().replace('-', "_");
    let text = preset_text(&normalized).ok_or_else(|| SynthError::UnknownPreset(name.to_string()))?;
    SyntheticConfig::from_json(text)
}
