//! Ambient projective geometry, intrinsic distances and curves.

pub mod ambient;
pub mod curves;
pub mod intrinsic;

pub use ambient::{ambient_geodesic, ambient_geometry, AmbientChartPoint, AmbientGeometry};
pub use curves::{
    curve_frame, curve_t, curve_t_unnormalized, reconstruct_curve, self_intersection, ChartCurve,
    CurveFrame, ReconstructedCurve, SelfIntersection,
};
pub use intrinsic::{delta_l2_check, intrinsic_distance, DeltaL2};
