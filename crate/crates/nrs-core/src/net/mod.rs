//! Network building blocks: permutation plans, expansion, grouped
//! convolution, batch norm, FC layers, losses, and the assembled models.

pub mod batchnorm;
pub mod conv;
pub mod expansion;
pub mod fc;
pub mod loss;
pub mod network;
pub mod plan;

pub use batchnorm::BatchNormLayer;
pub use conv::GroupConvLayer;
pub use expansion::{expand, expand_backward, expansion_map, ExpandedTensor};
pub use fc::{sparse_fc_from_plan, ExpansionFc, ExpansionMode, FcLayer};
pub use loss::{mse_loss, softmax, softmax_cross_entropy};
pub use network::{
    default_hidden, predict_classes, Arch, MlpNetwork, Model, Network, NetworkSpec, NrsNetwork,
    ParamSlot, Task,
};
pub use plan::{build_permutation_plan, PermutationPlan};
