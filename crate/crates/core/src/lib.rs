pub mod algebra;
pub mod error;
pub mod gates;
pub mod lattice;
pub mod linalg;
pub mod scalar;
pub mod stator;
pub mod compiler;
pub mod oracle;
pub mod optical;
pub mod config;
pub mod harness;
pub mod verify;

pub type Complex = scalar::C<f64>;
pub type Mat = linalg::Matrix<f64>;
pub type State = lattice::StateVector<f64>;
pub type Sparse = algebra::SparseOp<f64>;
pub type Propagator = oracle::ExactPropagator<f64>;
