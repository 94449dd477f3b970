pub mod checkpoint;
pub mod csvio;
pub mod features;
pub mod resample;
pub mod wav;

pub use checkpoint::{
    load_checkpoint, load_checkpoint_full, save_checkpoint, save_checkpoint_with_meta, Checkpoint,
    CheckpointMeta,
};
pub use csvio::{read_annotations, read_labels, write_annotations, write_labels};
pub use features::{read_features, write_features};
pub use resample::resample;
pub use wav::{read_wav, write_wav};
