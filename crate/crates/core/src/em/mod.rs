//! Finite-dipole fields, element rotations, array superposition and the
//! per-chain coupling to a point in space.

pub mod array;
pub mod coupling;
pub mod dipole;
pub mod geometry;

pub use array::{array_field, element_field, feed_current, ArrayLayout, DipoleElement, GridShape, GridSpec, Polarization};
pub use coupling::{
    check_orientation, coupling_table, coupling_vector, coupling_vector_with_current, element_couplings,
    element_couplings_with_current, CouplingVector,
};
pub use dipole::{dipole_field_cyl, wavenumber};
pub use geometry::{FieldVector, Frame, Point3, Rotation};
