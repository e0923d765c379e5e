//! Two-layer perceptron scorer over bag-of-words input with a null output.

mod file;
mod model;
mod train;

pub use file::{load_model, read_model, save_model, write_model, FORMAT_VERSION, MAGIC};
pub use model::{Params, ScorerModel, TrainingExample};
pub use train::{fine_tune, train, TrainConfig, TrainReport, Trained};
