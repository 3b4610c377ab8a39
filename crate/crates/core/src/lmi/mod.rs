//! Inertia-checked LMI synthesis of dominant state-feedback gains.

pub mod certificate;
pub mod problem;
pub mod solver;
pub mod synthesis;

pub use certificate::{Certificate, CertificateCheck, CERTIFICATE_VERSION};
pub use problem::{block, block2, BlockId, BlockKind, Constraint, LmiProblem, Values};
pub use solver::{solve, Solution, SolverOptions};
pub use synthesis::{
    bisect_floor, dc_gain, default_epsilon, design_2dominant, design_passive, design_precompensator,
    design_robust, feasibility, verify_p_gain, verify_passivity, Design, DesignKind, DesignOptions,
    DesignProblem, Evaluation, Precompensator, StorageCertificate, VerifyOptions,
};
