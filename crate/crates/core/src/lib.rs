//! Autotuning of loop-transformation pragmas with surrogate-model search.
//!
//! A problem couples a [`templater::CodeMold`] with a [`space::ParamSpace`].
//! [`optimizer::tune`] proposes configurations, an [`evaluator::Evaluator`]
//! measures them and every result lands in a [`perfdb::PerfDb`].

pub mod cli;
pub mod corpus;
pub mod evaluator;
pub mod optimizer;
pub mod par;
pub mod perfdb;
pub mod problem;
pub mod space;
pub mod surrogate;
pub mod templater;
