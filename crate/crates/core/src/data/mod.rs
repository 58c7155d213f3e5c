//! Procedural dataset generation and persistence.

pub mod dataset;
pub mod scenario;
pub mod textio;

pub use dataset::{
    decode_dataset, encode_dataset, read_dataset, write_dataset, DatasetFile, DatasetHeader,
    NormalizationStats, DATASET_VERSION, STD_FLOOR,
};
pub use scenario::{
    generate_motion, generate_motion_with_goal, labels, GoalInfo, ScenarioKind, ScenarioSpec, FPS,
};

use crate::motion::{MotionSequence, Skeleton};
use crate::Result;
use rayon::prelude::*;

/// Mix of the default desk-scale dataset: mostly turning walks plus the
/// three goal scenarios.
#[derive(Debug, Clone, Copy)]
pub struct DatasetMix {
    pub walk_turn: usize,
    pub reach: usize,
    pub climb: usize,
    pub sit: usize,
}

impl Default for DatasetMix {
    fn default() -> Self {
        DatasetMix {
            walk_turn: 2000,
            reach: 300,
            climb: 300,
            sit: 300,
        }
    }
}

impl DatasetMix {
    pub fn total(&self) -> usize {
        self.walk_turn + self.reach + self.climb + self.sit
    }

    /// Scenario of the i-th record; walks first, then reach/climb/sit.
    pub fn kind_of(&self, i: usize) -> ScenarioKind {
        if i < self.walk_turn {
            ScenarioKind::WalkTurn
        } else if i < self.walk_turn + self.reach {
            ScenarioKind::Reach
        } else if i < self.walk_turn + self.reach + self.climb {
            ScenarioKind::Climb
        } else {
            ScenarioKind::Sit
        }
    }
}

/// Generate a labeled dataset. Record i uses seed `base_seed + i`, so any
/// mix size is reproducible and disjoint seed bases give held-out data.
/// Generation fans out across records; results stay in record-index order.
pub fn generate_dataset(
    skeleton: &Skeleton<f64>,
    mix: &DatasetMix,
    n_frames: usize,
    base_seed: u64,
) -> Result<Vec<MotionSequence<f64>>> {
    (0..mix.total())
        .into_par_iter()
        .map(|i| {
            let mut spec = ScenarioSpec::new(mix.kind_of(i), base_seed + i as u64);
            spec.n_frames = n_frames;
            generate_motion(skeleton, &spec)
        })
        .collect()
}
