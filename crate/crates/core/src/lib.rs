//! Desk-scale urban building energy simulation pipeline.
//!
//! The crate reconstructs city geometry from GIS inputs (GeoJSON footprints,
//! ESRI ASCII elevation, CSV weather), meshes buildings at LOD-0/LOD-1,
//! computes solar shading masks and inter-surface view factors by Monte Carlo
//! ray tracing, runs a lumped-parameter (RC) thermal model per building, and
//! benchmarks the staged pipeline with pre-/sim-/post-processing breakdowns.
//!
//! Modules follow the pipeline order:
//!
//! * [`geo`] — input parsing and the local tangent-plane projection
//! * [`polygon`] — 2D polygon repair and boolean union
//! * [`mesh`] — building/terrain/vegetation meshing and scene assembly
//! * [`solar`] — sun position, sky discretization, plane-of-array irradiance
//! * [`radiation`] — BVH ray tracing, shading masks, view factors
//! * [`thermal`] — RC zone model, district simulation, 2D radiosity benchmark
//! * [`partition`] — load-balanced assignment of buildings to workers
//! * [`pipeline`] — orchestration, stage timing, scaling benchmarks, reports

pub mod geo;
pub mod mesh;
pub mod partition;
pub mod pipeline;
pub mod polygon;
pub mod radiation;
pub mod solar;
pub mod thermal;
