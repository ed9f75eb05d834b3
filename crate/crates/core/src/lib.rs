//! Factorized radiance fields baked into sparse voxel caches.
//!
//! A radiance field is split into a position function, which yields density
//! and a set of `D` RGB components, and a direction function, which yields `D`
//! weights. Color is the inner product of the two. Because the two halves
//! depend on disjoint inputs they can be tabulated separately: a sparse
//! `k³` position cache plus a small direction cache replace network
//! evaluation at render time.
//!
//! The crate is organized by pipeline stage:
//!
//! - [`field`]: encodings, MLP and analytic fields, the inner-product combine.
//! - [`factorizer`]: alternating least squares fit of the rank-`D`
//!   factorization against a reference function, with a dense SVD oracle.
//! - [`cache`]: baking, lookups, the cache container format and the memory
//!   estimator.
//! - [`mesher`]: density volume to collision mesh via marching cubes, and a
//!   BVH for first-hit queries.
//! - [`renderer`]: cameras, ray marching with transmittance accumulation,
//!   framebuffers, PSNR and benchmarking.
//! - [`scene_io`]: `transforms.json` datasets, engine config, analytic scene
//!   catalog.
//! - [`service`]: the websocket frame-streaming render service.
//! - [`cli`]: the `radiance-cache` command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cache;
pub mod cli;
mod container;
pub mod error;
pub mod factorizer;
pub mod field;
pub mod geometry;
pub mod mesher;
pub mod renderer;
pub mod scene_io;
pub mod service;

pub use error::{Error, Result};
pub use geometry::Aabb;
