//! Meshes, coefficient fields, and Galerkin assembly.

pub mod assemble;
pub mod fields;
pub mod mesh;

pub use assemble::{
    assemble_beam_hermite, assemble_heat_1d_neumann, assemble_parabolic_2d, hermite_eval,
    hermite_interpolate, hermite_load, hermite_shape, hermite_shape_d2, output_rows_1d,
    output_rows_2d, p1_load_1d, p1_load_fn_1d, restrict, restrict_cols, restrict_vec, Fem1d,
    Fem2d, FemBeam,
};
pub use fields::{BoundaryProfile, ScalarField, TrigAxis, TrigKind, TrigTerm, VectorField2};
pub use mesh::{
    boundary_trace, build_interval_mesh, build_rect_mesh, load_mesh_file, parse_mesh,
    BoundaryEdge, BoundaryTrace, DofMap, IntervalMesh, SideTags, TriMesh,
};
