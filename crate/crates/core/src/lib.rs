//! Embedded Trefftz discontinuous Galerkin methods on triangulations of the
//! unit square.
//!
//! A standard broken polynomial DG space is built per element from an
//! orthonormal basis. Local strong-form operators `A_K` are assembled for
//! advection-reaction, diffusion-advection-reaction, a box-restricted
//! variant and a quasi-Trefftz point-derivative variant. Their SVD kernels
//! define the Trefftz subspace on which the global DG problem is solved.
//!
//! ```no_run
//! use etdg::prelude::*;
//!
//! let case = BuiltinCase::ArExample.coefficients();
//! let space = DgSpace::new(build_structured_mesh(8)?, 3)?;
//! let sys = assemble_global_system(FormKind::ArUpwind, &space, &case, 0.0)?;
//! let (_, emb) = build_embedding(
//!     &space,
//!     OperatorKind::AdvectionReaction,
//!     &case,
//!     &LocalSettings::default(),
//!     RankRule::default(),
//! )?;
//! let u = solve_embedded_trefftz(&sys, &emb)?;
//! let err = compute_errors(&space, &u, &case, ErrorNorm::Advection)?;
//! println!("{:e}", err.l2_error);
//! # Ok::<(), etdg::Error>(())
//! ```

pub mod analysis;
pub mod basis;
pub mod coefficients;
pub mod dg_forms;
pub mod embedding;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod local_ops;
pub mod mesh;
pub mod poly;
pub mod quadrature;
pub mod solver;
pub mod space;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::analysis::{compute_errors, estimate_eoc, run_diagnostics, ErrorNorm, ErrorReport};
    pub use crate::basis::{eval_basis, l2_project, ElementBasis};
    pub use crate::coefficients::{builtin_case, BuiltinCase, PdeCoefficients, ScalarField};
    pub use crate::dg_forms::{assemble_global_system, default_sigma, DgSystem, FormKind};
    pub use crate::embedding::{assemble_global_embedding, build_embedding, compute_embedding, GlobalEmbedding, RankRule};
    pub use crate::error::{Error, Result};
    pub use crate::experiment::{run_experiment, ExperimentConfig, ExperimentMethod};
    pub use crate::local_ops::{assemble_local_operator, LocalOperator, LocalSettings, OperatorKind};
    pub use crate::mesh::{build_structured_mesh, Mesh2D};
    pub use crate::quadrature::{quadrature_rule, Domain};
    pub use crate::solver::{
        solve_block_coupled, solve_embedded_trefftz, solve_standard_dg, ComplementRule, DiscreteSolution, Method,
    };
    pub use crate::space::DgSpace;
}
