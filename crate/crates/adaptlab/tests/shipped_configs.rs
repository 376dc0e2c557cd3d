//! The shipped config files must stay in lockstep with the built-in
//! presets; drift would make `simulate configs/fig3a.toml` diverge from
//! `simulate fig3a`.

use std::path::PathBuf;

use adaptlab::harness::{preset, preset_names, ScenarioConfig};

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn shipped_scenario_configs_match_builtins() {
    for name in preset_names() {
        let path = configs_dir().join(format!("{}.toml", name));
        let shipped = ScenarioConfig::load(&path)
            .unwrap_or_else(|e| panic!("loading {}: {}", path.display(), e));
        let builtin = preset(name).unwrap();
        assert_eq!(shipped, builtin, "{} drifted from the built-in preset", name);
    }
}

#[test]
fn shipped_compare_suite_matches_builtin() {
    let path = configs_dir().join("compare5.toml");
    let shipped = adaptlab::harness::CompareConfig::load(&path)
        .unwrap_or_else(|e| panic!("loading {}: {}", path.display(), e));
    assert_eq!(shipped, adaptlab::harness::compare5());
}
