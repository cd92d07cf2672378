//! Monadic second-order transductions and their normal form.

pub mod equivalence;
pub mod eval;
pub mod formula;
pub mod normalize;
pub mod pipeline;
pub mod random;
pub mod rule_cases;
pub mod structure;
pub mod surgery;

pub use equivalence::{check_equivalence, check_on_all, compare_on, Counterexample, EquivalenceError, EquivalenceReport, Side};
pub use eval::{holds, satisfies, EvalError, Limits};
pub use formula::{Formula, FormulaError, FormulaParseError};
pub use normalize::{is_normal_form, normalize, NormalizeError, Normalized, Rule};
pub use pipeline::{InterpretDef, OutputSet, ParseError, Pipeline, PipelineError, Step, StepKind};
pub use random::{random_formula, random_pipeline, PipelineShape};
pub use structure::{CanonicalForm, Structure, StructureError, Vocabulary};
pub use surgery::{CopyNames, NameSupply, SurgeryError};
