//! Bundled run configurations.
//!
//! `<table>_exp<N>` files carry the hyperparameters of each tuned
//! experiment column at full scale (150k steps). The `dc_motor_desk_*` pair
//! is a reduced-cost comparison sized for a desktop CPU.

use super::config::RunConfig;
use crate::error::{Error, Result};

pub const PRESETS: &[(&str, &str)] = &[
    (
        "bidirectional_pcl_exp1",
        include_str!("../../presets/bidirectional_pcl_exp1.toml"),
    ),
    (
        "bidirectional_pcl_exp2",
        include_str!("../../presets/bidirectional_pcl_exp2.toml"),
    ),
    (
        "bidirectional_pcl_exp3",
        include_str!("../../presets/bidirectional_pcl_exp3.toml"),
    ),
    (
        "bidirectional_uniform_exp1",
        include_str!("../../presets/bidirectional_uniform_exp1.toml"),
    ),
    (
        "bidirectional_uniform_exp2",
        include_str!("../../presets/bidirectional_uniform_exp2.toml"),
    ),
    (
        "bidirectional_uniform_exp3",
        include_str!("../../presets/bidirectional_uniform_exp3.toml"),
    ),
    (
        "dc_motor_desk_pcl",
        include_str!("../../presets/dc_motor_desk_pcl.toml"),
    ),
    (
        "dc_motor_desk_uniform",
        include_str!("../../presets/dc_motor_desk_uniform.toml"),
    ),
    (
        "dc_motor_pcl_exp1",
        include_str!("../../presets/dc_motor_pcl_exp1.toml"),
    ),
    (
        "dc_motor_pcl_exp2",
        include_str!("../../presets/dc_motor_pcl_exp2.toml"),
    ),
    (
        "dc_motor_pcl_exp3",
        include_str!("../../presets/dc_motor_pcl_exp3.toml"),
    ),
    (
        "dc_motor_uniform_exp1",
        include_str!("../../presets/dc_motor_uniform_exp1.toml"),
    ),
    (
        "dc_motor_uniform_exp2",
        include_str!("../../presets/dc_motor_uniform_exp2.toml"),
    ),
    (
        "dc_motor_uniform_exp3",
        include_str!("../../presets/dc_motor_uniform_exp3.toml"),
    ),
    (
        "square21_pcl_adaptive_exp1",
        include_str!("../../presets/square21_pcl_adaptive_exp1.toml"),
    ),
    (
        "square21_pcl_adaptive_exp2",
        include_str!("../../presets/square21_pcl_adaptive_exp2.toml"),
    ),
    (
        "square21_pcl_adaptive_exp3",
        include_str!("../../presets/square21_pcl_adaptive_exp3.toml"),
    ),
    (
        "square21_pcl_adaptive_multiweighted_exp1",
        include_str!("../../presets/square21_pcl_adaptive_multiweighted_exp1.toml"),
    ),
    (
        "square21_pcl_adaptive_multiweighted_exp2",
        include_str!("../../presets/square21_pcl_adaptive_multiweighted_exp2.toml"),
    ),
    (
        "square21_pcl_adaptive_multiweighted_exp3",
        include_str!("../../presets/square21_pcl_adaptive_multiweighted_exp3.toml"),
    ),
    (
        "square21_pcl_adaptive_weighted_exp1",
        include_str!("../../presets/square21_pcl_adaptive_weighted_exp1.toml"),
    ),
    (
        "square21_pcl_adaptive_weighted_exp2",
        include_str!("../../presets/square21_pcl_adaptive_weighted_exp2.toml"),
    ),
    (
        "square21_pcl_adaptive_weighted_exp3",
        include_str!("../../presets/square21_pcl_adaptive_weighted_exp3.toml"),
    ),
    (
        "square21_pcl_exp1",
        include_str!("../../presets/square21_pcl_exp1.toml"),
    ),
    (
        "square21_pcl_exp2",
        include_str!("../../presets/square21_pcl_exp2.toml"),
    ),
    (
        "square21_pcl_exp3",
        include_str!("../../presets/square21_pcl_exp3.toml"),
    ),
    (
        "square21_pcl_multiweighted_exp1",
        include_str!("../../presets/square21_pcl_multiweighted_exp1.toml"),
    ),
    (
        "square21_pcl_multiweighted_exp2",
        include_str!("../../presets/square21_pcl_multiweighted_exp2.toml"),
    ),
    (
        "square21_pcl_multiweighted_exp3",
        include_str!("../../presets/square21_pcl_multiweighted_exp3.toml"),
    ),
    (
        "square21_pcl_weighted_exp1",
        include_str!("../../presets/square21_pcl_weighted_exp1.toml"),
    ),
    (
        "square21_pcl_weighted_exp2",
        include_str!("../../presets/square21_pcl_weighted_exp2.toml"),
    ),
    (
        "square21_pcl_weighted_exp3",
        include_str!("../../presets/square21_pcl_weighted_exp3.toml"),
    ),
    (
        "square21_uniform_exp1",
        include_str!("../../presets/square21_uniform_exp1.toml"),
    ),
    (
        "square21_uniform_exp2",
        include_str!("../../presets/square21_uniform_exp2.toml"),
    ),
    (
        "square21_uniform_exp3",
        include_str!("../../presets/square21_uniform_exp3.toml"),
    ),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn load_preset(name: &str) -> Result<RunConfig> {
    let text =
        preset_text(name).ok_or_else(|| Error::Config(format!("unknown preset `{name}`")))?;
    RunConfig::from_toml_str(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::AgentConfig;
    use crate::curriculum::Sampler;

    #[test]
    fn table_presets_sit_inside_the_search_bounds() {
        let mut count = 0;
        for name in preset_names().filter(|n| n.contains("_exp")) {
            let cfg = load_preset(name).unwrap();
            cfg.validate_strict()
                .unwrap_or_else(|e| panic!("{name}: {e}"));
            count += 1;
        }
        assert_eq!(count, 33);
    }

    #[test]
    fn dc_motor_pcl_first_column_is_verbatim() {
        let cfg = load_preset("dc_motor_pcl_exp1").unwrap();
        let mdn = cfg.mdn.as_ref().unwrap();
        assert_eq!(
            (mdn.components, mdn.batch_size, mdn.train_frequency),
            (12, 212, 2)
        );
        assert_eq!(mdn.hidden_layers, vec![720, 1008, 244, 315]);
        assert_eq!(
            (mdn.lambda_nll, mdn.lambda_l2, mdn.lambda_kl),
            (1.49, 0.195, 1.89)
        );
        assert_eq!(mdn.learning_rate, 0.269);
        assert_eq!(
            (cfg.curriculum.q_lower, cfg.curriculum.q_upper),
            (0.216, 0.997)
        );
        assert_eq!(cfg.curriculum.num_samples, 970);
        let AgentConfig::Sac(sac) = &cfg.agent else {
            panic!()
        };
        assert_eq!(
            (sac.batch_size, sac.train_frequency, sac.learning_rate),
            (999, 14, 0.000994)
        );
        assert_eq!(sac.hidden_layers, vec![114, 694, 469, 312]);
        assert_eq!(cfg.max_steps, 150_000);
    }

    #[test]
    fn uniform_presets_have_no_model() {
        for name in preset_names().filter(|n| n.contains("uniform")) {
            let cfg = load_preset(name).unwrap();
            assert!(cfg.mdn.is_none(), "{name}");
            assert_ne!(cfg.curriculum.sampler, Sampler::PclModel);
        }
    }

    #[test]
    fn desk_presets_validate() {
        for name in ["dc_motor_desk_pcl", "dc_motor_desk_uniform"] {
            load_preset(name).unwrap().validate().unwrap();
        }
    }
}
