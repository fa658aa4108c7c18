//! Algebra and dynamics of open quantum networks in the `(S, L, H)`
//! parameterization.
//!
//! The crate covers, at desk scale (dense matrices, total dimension up to a
//! few hundred):
//!
//! * a Hilbert-space factor registry with tensor embeddings ([`hilbert`],
//!   [`operator`], [`op_matrix`]),
//! * the concatenation and series products, channel plumbing, and the
//!   exchange of cascaded components ([`slh`]),
//! * the Itô-coefficient view of the same algebra ([`ito`]),
//! * reduction of component networks to a single triple ([`network`]),
//! * Holevo-generator conversion and direct measurement feedback
//!   ([`holevo`]),
//! * master-equation, Heisenberg, output-field and quantum-filtering
//!   dynamics ([`dynamics`]),
//! * classical linear-system products and the grid embedding of a classical
//!   SDE as a commutative subsystem ([`classical`]).
//!
//! All values are immutable after construction and safe to share across
//! threads; the only mutable object is the append-only [`hilbert::SpaceRegistry`].

pub mod classical;
pub mod components;
pub mod dynamics;
pub mod hilbert;
pub mod holevo;
pub mod ito;
pub mod network;
pub mod op_matrix;
pub mod operator;
pub mod slh;

pub use hilbert::{FactorKind, HilbertError, Signature, SpaceFactor, SpaceRegistry};
pub use ito::{coefficients_to_slh, ito_coefficients, ito_compose, ItoCoefficients};
pub use op_matrix::{OperatorMatrix, OperatorVector};
pub use operator::Operator;
pub use slh::{SlhError, SlhTriple, DEFAULT_TOL};

pub use num_complex::Complex64;

#[cfg(test)]
mod thread_safety {
    use super::*;

    fn assert_send_sync<T: Send + Sync>() {}

    #[test]
    fn values_are_shareable_across_threads() {
        assert_send_sync::<SpaceFactor>();
        assert_send_sync::<Signature>();
        assert_send_sync::<Operator>();
        assert_send_sync::<OperatorMatrix>();
        assert_send_sync::<SlhTriple>();
        assert_send_sync::<ItoCoefficients>();
        assert_send_sync::<dynamics::DensityOperator>();
        assert_send_sync::<dynamics::Trajectory>();
        assert_send_sync::<network::ReducedNetwork>();
        assert_send_sync::<classical::ClassicalLinearSystem>();
    }
}
