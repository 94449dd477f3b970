pub mod hyperparams;
pub mod kfold;
pub mod train;

pub use hyperparams::Hyperparams;
pub use kfold::{kfold_split, FoldPlan};
pub use train::{
    early_stop_index, run_cv, select_best_model, train_fold, FoldReport, PatienceTracker,
    RecordingData, StopReason, TrainReport,
};
