//! Structured standard operating procedures.
//!
//! Natural-language procedures are turned into dependency DAGs of subtasks
//! ([`sop`]), checked by deterministic validators ([`validators`]) and by a
//! meta-planning traversability test ([`pddl`], [`planner`]), judged by an
//! LLM ([`llm`]) and evaluated in batches ([`harness`]).

pub mod sop;
pub mod validators;
pub mod pddl;
pub mod planner;
pub mod mutation;
pub mod exec;
pub mod llm;
pub mod harness;
