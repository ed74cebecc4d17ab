//! Recurrent TD3 training: replay of main-agent transitions, curriculum
//! over the vehicle count, periodic evaluation and resumable checkpoints.

mod curriculum;
mod episode;
mod replay;
mod run;
mod td3;

pub use curriculum::CurriculumSchedule;
pub use episode::{episode_loop, exploration_action, observe_all, policy_actions, EpisodeConfig, EpisodeRunner, EpisodeStats, HistoryTracker};
pub use replay::{ReplayBuffer, TransitionRecord};
pub use run::{
    evaluate_policy, load_policy, milestone_file, run_episode, run_training, save_policy, CurvePoint, TrainerState, TrainingConfig, TrainingCurve,
    TrainingEvent, TrainingSummary, CURVE_FILE, FINAL_POLICY_FILE, RESUME_FILE,
};
pub use td3::{td3_targets, td3_update, Td3Agent, Td3Config, UpdateStats};
