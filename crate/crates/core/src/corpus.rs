//! Bundled descriptions used by the experiments, tests and benches.

pub const BASE_SIGNALS: &str = include_str!("../models/NewtonBaseSignals.nt");
/// The pendulum description without noise annotations.
pub const PENDULUM_PLAIN: &str = include_str!("../models/pendulum_plain.nt");
pub const PENDULUM: &str = include_str!("../models/pendulum.nt");
pub const PENDULUM_DAMPED: &str = include_str!("../models/pendulum_damped.nt");
pub const TURTLEBOT: &str = include_str!("../models/turtlebot.nt");
pub const CONSTANT_VELOCITY: &str = include_str!("../models/constant_velocity.nt");

/// A bundled system: source text plus its process and measurement invariants.
#[derive(Debug, Clone, Copy)]
pub struct CorpusModel {
    pub name: &'static str,
    pub source: &'static str,
    pub process: &'static [&'static str],
    pub measure: &'static str,
}

pub const MODELS: &[CorpusModel] = &[
    CorpusModel { name: "pendulum", source: PENDULUM, process: &["pendulum_process"], measure: "pendulum_measure" },
    CorpusModel {
        name: "pendulum_damped",
        source: PENDULUM_DAMPED,
        process: &["pendulum_process"],
        measure: "pendulum_measure",
    },
    CorpusModel {
        name: "turtlebot",
        source: TURTLEBOT,
        process: &["turtlebot_straight", "turtlebot_rotate"],
        measure: "turtlebot_measure",
    },
    CorpusModel { name: "constant_velocity", source: CONSTANT_VELOCITY, process: &["cv_process"], measure: "cv_measure" },
];

pub fn model(name: &str) -> Option<&'static CorpusModel> {
    MODELS.iter().find(|m| m.name == name)
}
