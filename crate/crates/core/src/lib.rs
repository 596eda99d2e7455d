//! Maximum-entropy inference on classical and quantum event lattices under
//! symmetry constraints.

pub mod coherent;
pub mod entropy;
pub mod error;
pub mod event;
pub mod maxent;
pub mod numerics;
pub mod observable;
pub mod polytope;
pub mod random;
pub mod schema;
pub mod symmetry;

pub use entropy::{entropy, measurement_entropy, shannon, von_neumann, EntropyKind, Measurement};
pub use error::{Error, Infeasibility, Result};
pub use event::{prob, Event, EventSpace, SpaceKind, State};
pub use numerics::{CMatrix, CVector, HermitianMatrix, C64};
pub use observable::Observable;
pub use symmetry::{GroupElement, GroupSpec, PreparedGroup};
