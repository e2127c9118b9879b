//! Linear programming: a generic revised simplex and a transportation
//! network simplex.

mod scalar;
mod simplex;
mod transport;

pub use scalar::{ratio, Scalar};
pub use simplex::{LpSolution, SimplexOptions, SparseLp};
pub use transport::{solve_transport, TransportSolution};
