//! Configurations shipped with the crate. The same files live in `presets/`.

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};

const PRESETS: [(&str, &str); 6] = [
    ("quartic-1d", include_str!("../presets/quartic-1d.toml")),
    ("harmonic-1d", include_str!("../presets/harmonic-1d.toml")),
    ("free-soliton-1d", include_str!("../presets/free-soliton-1d.toml")),
    ("ground-state-2d", include_str!("../presets/ground-state-2d.toml")),
    ("broken-w", include_str!("../presets/broken-w.toml")),
    ("oversized-w0", include_str!("../presets/oversized-w0.toml")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn text(name: &str) -> Result<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| Error::Config(format!("unknown preset {name:?}")))
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    ExperimentConfig::from_toml(text(name)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_parses_and_round_trips() {
        for name in names() {
            let c = preset(name).unwrap();
            assert_eq!(ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap(), c, "{name}");
        }
        assert!(preset("nope").is_err());
    }
}
