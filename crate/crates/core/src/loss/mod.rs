//! Lifting losses: the metric corner loss with analytic gradients, the
//! separate-term baselines, and the controlled optimization experiment.

mod corner;
mod optim;
mod separate;

pub use corner::{corner_loss, corner_loss_grad, GradMagnitudes, LossBreakdown};
pub use optim::{optimize_instance, CornerStepRule, OptimConfig, OptimRecord, OptimTrace};
pub use separate::{
    kendall_log_var_grad, quaternion_distance, separate_term_grad, separate_term_loss, SeparateTermLoss,
    WeightingScheme,
};
