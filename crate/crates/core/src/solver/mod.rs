//! GMRES with a swappable SpMV executor and the predict-while-solve runtime.

mod gmres;
mod mailbox;
mod report;
mod runtime;

pub use gmres::{
    gmres_solve, GmresOutcome, GmresParams, SolveError, SpmvExecutor, StaticExecutor, Swap,
    TimelineEntry,
};
pub use mailbox::{ConfigMailbox, DelayGate, DelayInjection, Update};
pub use report::{
    AdvisorOutcome, AdvisorStats, DecisionRecord, PhaseTiming, ReportError, SolveMode,
    SolveReport,
};
pub use runtime::{
    async_solve, default_solve, fixed_solve, sequential_predict_solve, solve_with_mode,
    SolveOptions,
};
