//! Tree decompositions, separation forests, factorizations, and the dealternation
//! and conflict-coloring constructions that turn a decomposition into a compact
//! forest encoding.

pub mod conflict;
pub mod corpus;
pub mod dealternation;
pub mod decomposition;
pub mod factorization;
pub mod forest;
pub mod graph;
pub mod io;
pub mod oracle;
pub mod sepforest;
pub mod words;

pub use decomposition::{TreeDecomposition, Violation};
pub use factorization::{Factor, FactorKind, Factorization};
pub use forest::{Node, RootedForest};
pub use graph::{Graph, Vertex};
pub use sepforest::SeparationForest;
pub use words::{ColoredWord, Letter};
