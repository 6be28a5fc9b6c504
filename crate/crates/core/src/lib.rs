//! Exact computation of differential breaks and Swan conductors for
//! p-adic differential modules over Laurent rings, together with the
//! polyhedral and surface-variation checks built on them.

pub mod error;
pub mod frac;
pub mod germ;
pub mod laurent;
pub mod linalg;
pub mod nabla;
pub mod newton;
pub mod padic;
pub mod piecewise;
pub mod polyhedral;
pub mod rational;
pub mod surface;
pub mod variation;

pub use error::{Error, Result};
pub use frac::Frac;
pub use germ::{Germ, HullValue};
pub use laurent::{mono, Exponent, LaurentElement, WeightVector};
pub use padic::{PadicScalar, Valuation};
pub use piecewise::{AffinePiece, PiecewiseAffine};
pub use rational::{fmt_q, parse_q, q, qi, Q};
pub use nabla::{
    cyclic_vector, rank1_oracle_break, scale_multiset, spectral_estimate, Block, FracMatrix, NablaModule,
    PreparedModule, ScaleMultiset, Structure,
};
pub use newton::{scales_from_polygon, NewtonPolygon, ScaleReading, TwistedPolyProfile};
pub use polyhedral::{
    breakpoint_loci, check_convex, check_integral_polyhedral, fit_polyhedral, simplex_grid, AffineFunctional, Locus,
    PolyhedralFunction, Samples, Verdict,
};
pub use variation::{break_multiset, sweep_simplex, BreakData, BreakSurface, Excluded, Normalization, SurfaceFit};
pub use surface::{
    ell_invariant, hidden_turning_scan, monotonicity_check, parse_component, point_breaks, point_breaks_with,
    special_points, subharmonicity_check, swan_divisor_check, Ambient, GenericReport, HiddenScanReport,
    MonotonicityEntry, PointReport, PointSpec, Reparam, ResiduePoly, SubharmonicityReport, SurfaceModel,
    SwanDivisorReport,
};
