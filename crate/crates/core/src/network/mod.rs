//! Bias-free dense networks: parameters, loss, gradients, Hessians and the
//! permutation action on hidden units.

mod activation;
mod dataset;
mod model_io;
mod multilayer;
mod objective;
mod permutation;
mod point;

pub use activation::Activation;
pub use dataset::Dataset;
pub use model_io::ModelFile;
pub use multilayer::{MultiLayerObjective, MultiLayerPoint};
pub use objective::{gradient_fd, hessian, toy_sym_loss, LeastSquares, Objective, QuadraticLoss, ToySymmetricLoss, HESSIAN_MAX_PARAMS};
pub use permutation::Permutation;
pub use point::{sup_dist, sup_norm, Neuron, TwoLayerObjective, TwoLayerPoint};
pub(crate) use point::single_linkage;
