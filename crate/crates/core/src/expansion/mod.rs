//! Expansion manifolds: constructing wider points with the same network
//! function, symmetry-induced critical points, connecting paths and the
//! classification of trained neurons.

mod classify;
mod multilayer;
mod path;
mod spec;

pub use classify::{
    classify_neurons, enumerate_subspace_labels, replicant_region, CopyGroup, NeuronClassification, NeuronLabel,
    SlotSymbol, ZeroTypeGroup, LABEL_ENUMERATION_MAX_WIDTH,
};
pub(crate) use classify::replicant_region_of_units;
pub use multilayer::{multilayer_expand, sample_multilayer_expansion};
pub use path::{build_path, transposition_decomposition, PiecewisePath, Segment};
pub use spec::{expand_critical, expand_point, sample_expansion, CriticalSplit, ExpansionSpec};
