#![allow(dead_code)]

use riskbench_core::registry::{DatasetRef, Registry};
use riskbench_core::synthgen::{generate, preset, GeneratedDataset, SyntheticConfig};
use riskbench_core::tasks::{materialize_registered, template, TaskBundle};

pub fn small(name: &str, n_players: u32) -> SyntheticConfig {
    let mut config = preset(name).unwrap();
    config.n_players = n_players;
    config
}

pub fn register(registry: &Registry, dataset: &GeneratedDataset) -> DatasetRef {
    let dir = tempfile::tempdir().unwrap();
    dataset.write_to_dir(dir.path()).unwrap();
    registry.register_dir(dir.path()).unwrap()
}

/// A registry holding one generated dataset.
pub fn registry_with(config: &SyntheticConfig) -> (tempfile::TempDir, Registry, DatasetRef, GeneratedDataset) {
    let home = tempfile::tempdir().unwrap();
    let registry = Registry::open(home.path()).unwrap();
    let dataset = generate(config).unwrap();
    let dataset_ref = register(&registry, &dataset);
    (home, registry, dataset_ref, dataset)
}

/// Registers a small dataset and materializes one built-in task on it.
pub fn task(preset_name: &str, n_players: u32, task_id: &str) -> (tempfile::TempDir, Registry, TaskBundle) {
    let (home, registry, dataset_ref, _) = registry_with(&small(preset_name, n_players));
    let card = registry.index().unwrap().entry(&dataset_ref).unwrap().card.clone();
    let spec = template(task_id).unwrap().spec_for(&dataset_ref, &card);
    let (bundle, _) = materialize_registered(&registry, &spec, false).unwrap();
    (home, registry, bundle)
}
