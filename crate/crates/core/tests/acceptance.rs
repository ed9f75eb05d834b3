//! Acceptance suite: one PASS/FAIL line per criterion, with the measured
//! values and the runtime against its budget. Exits non-zero if any line
//! fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use glam::DVec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use radiance_cache::cache::{bake, estimate_sizes, BakeConfig, PositionCache, SizeInputs};
use radiance_cache::factorizer::{
    fit_als, fit_svd_oracle, numerical_rank, sample_reference, singular_values, SampleGrid,
};
use radiance_cache::field::{AnalyticScene, FactorizedField, MlpArchitecture, MlpWeights, Position, SupportShape};
use radiance_cache::geometry::{Aabb, Direction, Ray};
use radiance_cache::mesher::{collision_mesh, marching_cubes, Bvh, DensityVolume};
use radiance_cache::renderer::{
    integrate_ray, orbit_to_matrix, psnr, render, render_with_workers, CachedSource, Camera, Clip, FieldSource,
    FrameBuffer, OrbitState, RenderConfig,
};
use radiance_cache::scene_io::{analytic_catalog, catalog_entry};

const MESH_THRESHOLD: f64 = 1e-6;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn criterion(index: usize, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let pass = out.pass && elapsed < budget;
    println!(
        "{} [{index:>2}] {name}: {} ({:.3} s, budget {} s)",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    pass
}

fn camera(res: u32) -> Camera {
    let state = OrbitState {
        target: [0.0; 3],
        azimuth: 0.5,
        elevation: 0.35,
        distance: 3.0,
        fov: 0.8,
    };
    Camera::new(orbit_to_matrix(&state), state.fov, res, res, 0.0, 100.0).unwrap()
}

fn bake_with_bvh(
    field: &FactorizedField,
    aabb: &Aabb,
    k: usize,
) -> (PositionCache, radiance_cache::cache::DirectionCache, Option<Bvh>) {
    let (pos, dir) = bake(
        field,
        aabb,
        &BakeConfig {
            k,
            ..BakeConfig::default()
        },
    )
    .unwrap();
    let mesh = collision_mesh(&pos, MESH_THRESHOLD).unwrap();
    let bvh = (!mesh.is_empty()).then(|| Bvh::build(&mesh).unwrap());
    (pos, dir, bvh)
}

fn cache_sizes() -> Outcome {
    let inputs = SizeInputs::half_precision(1024, 1024, 8, 1.0);
    let start = Instant::now();
    let r = estimate_sizes(&inputs).unwrap();
    let took = start.elapsed();
    let pass = r.m_nerf_bytes == 5_629_499_534_213_120
        && r.m_fastnerf_bytes == 53_687_091_200 + 16_777_216
        && took < Duration::from_millis(1);
    outcome(
        pass,
        format!(
            "M_NeRF = {}, M_FastNeRF = {} bytes, computed in {:.1} µs",
            r.m_nerf_bytes,
            r.m_fastnerf_bytes,
            took.as_secs_f64() * 1e6
        ),
    )
}

/// `Σ_r 0.6^r a_r b_rᵀ + noise` on a random `3P × Q` lattice.
fn random_grid(rng: &mut ChaCha8Rng, p: usize, q: usize, rank: usize, noise: f64) -> SampleGrid {
    let rows = 3 * p;
    let mut m = vec![0.0; rows * q];
    for r in 0..rank {
        let scale = 0.6f64.powi(r as i32);
        let a: Vec<f64> = (0..rows).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..q).map(|_| rng.random_range(-1.0..1.0)).collect();
        for i in 0..rows {
            for j in 0..q {
                m[i * q + j] += scale * a[i] * b[j];
            }
        }
    }
    for v in &mut m {
        *v += noise * rng.random_range(-1.0..1.0);
    }
    SampleGrid::from_matrix(rows, q, &m).unwrap()
}

fn factorization_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_gap, mut worst_rel) = (f64::NEG_INFINITY, 0.0f64);
    let mut ok = true;
    for i in 0..20 {
        let p = rng.random_range(16..=512);
        let q = rng.random_range(8..=128);
        let d = rng.random_range(1..=6);
        let grid = random_grid(&mut rng, p, q, d + 3, 1e-3);
        let als = fit_als(&grid, d, 300, i).unwrap();
        let svd = fit_svd_oracle(&grid, d).unwrap();
        let sv = singular_values(&grid).unwrap();
        let discarded: f64 = sv[d.min(sv.len())..].iter().map(|s| s * s).sum();
        let rel = (svd.residual * svd.residual - discarded).abs() / discarded.max(f64::MIN_POSITIVE);
        let gap = als.residual - svd.residual;
        worst_gap = worst_gap.max(gap);
        worst_rel = worst_rel.max(rel);
        ok &= gap <= 1e-4 && rel <= 1e-8;
    }
    outcome(
        ok,
        format!(
            "max(als − svd) = {worst_gap:.3e} (≤ 1e-4), max rel |svd² − Σ discarded σ²| = {worst_rel:.3e} (≤ 1e-8)"
        ),
    )
}

fn rank_recovery() -> Outcome {
    let entry = catalog_entry("spec-sphere").unwrap();
    let field = FactorizedField::Analytic(entry.scene);
    let grid = sample_reference(&field, &entry.aabb, [8, 8, 8], 64).unwrap();
    let rank = numerical_rank(&singular_values(&grid).unwrap(), 1e-9);
    let r2 = fit_als(&grid, 2, 100, 0).unwrap().residual;
    let r1 = fit_als(&grid, 1, 100, 0).unwrap().residual;
    outcome(
        rank <= 2 && r2 < 1e-6 && r1 > r2,
        format!("numerical rank {rank}, residual D=2 {r2:.3e}, D=1 {r1:.3e}"),
    )
}

fn beer_lambert() -> Outcome {
    let (sigma, half) = (2.0, 0.25);
    let field = FactorizedField::Analytic(AnalyticScene::Slab {
        min: [-1.0, -1.0, -half],
        max: [1.0, 1.0, half],
        density: sigma,
        color: [0.5; 3],
    });
    let src = FieldSource::new(&field, Clip::Unbounded, None).unwrap();
    let ray = Ray::new(DVec3::new(0.0, 0.0, 2.0), Direction::new(-DVec3::Z).unwrap(), 0.0, 4.0).unwrap();
    let exact = 1.0 - (-sigma * 2.0 * half).exp();
    let errors: Vec<f64> = (0..5)
        .map(|j| {
            let cfg = RenderConfig {
                step: Some(0.0625 / (1 << j) as f64),
                termination: 0.0,
                ..RenderConfig::default()
            };
            (integrate_ray(&ray, &src, None, &cfg).unwrap().alpha() - exact).abs()
        })
        .collect();
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let min = orders.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(min >= 0.9, format!("observed orders {orders:.3?} (min {min:.3} ≥ 0.9)"))
}

fn fidelity_trend() -> Outcome {
    let entry = catalog_entry("spec-sphere").unwrap();
    let field = FactorizedField::Analytic(entry.scene);
    let cam = camera(128);
    let cfg = RenderConfig::default();
    let direct_src = FieldSource::new(&field, Clip::Box(entry.aabb), Some(entry.aabb.extent().x / 1024.0)).unwrap();
    let reference = render(&cam, &direct_src, None, &cfg).unwrap();
    let mut values = Vec::new();
    for k in [64, 128, 256] {
        let (pos, dir, bvh) = bake_with_bvh(&field, &entry.aabb, k);
        let src = CachedSource::new(&pos, &dir).unwrap();
        let img = render(&cam, &src, bvh.as_ref(), &cfg).unwrap();
        values.push(psnr(&img, &reference).unwrap());
    }
    let increasing = values.windows(2).all(|w| w[1] > w[0]);
    outcome(increasing, format!("PSNR at k = 64, 128, 256: {values:.3?} dB"))
}

fn oracle_equivalence() -> Outcome {
    let entry = catalog_entry("two-blobs").unwrap();
    let field = FactorizedField::Analytic(entry.scene);
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    let (pos, _, bvh) = bake_with_bvh(&field, &entry.aabb, 64);
    let bvh = bvh.unwrap();
    let mut bvh_mismatch = 0;
    let mut hits = 0;
    for i in 0..1000 {
        let o = if i % 4 == 0 {
            DVec3::new(
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
            )
        } else {
            DVec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
            .normalize()
                * 3.0
        };
        let target = DVec3::new(
            rng.random_range(-0.8..0.8),
            rng.random_range(-0.8..0.8),
            rng.random_range(-0.8..0.8),
        );
        let d = (target - o).normalize();
        let fast = bvh.first_hit_raw(o, d, 0.0, f64::INFINITY);
        let slow = bvh.brute_force_hit(o, d, 0.0, f64::INFINITY);
        hits += fast.is_some() as usize;
        let same = match (fast, slow) {
            (None, None) => true,
            (Some(a), Some(b)) => a.triangle == b.triangle && (a.t - b.t).abs() <= 1e-9,
            _ => false,
        };
        bvh_mismatch += !same as usize;
    }

    let (small, _, _) = bake_with_bvh(&field, &entry.aabb, 16);
    let dims = small.dims();
    let centers: Vec<([usize; 3], DVec3)> = (0..dims[2])
        .flat_map(|z| (0..dims[1]).flat_map(move |y| (0..dims[0]).map(move |x| [x, y, z])))
        .map(|c| (c, small.voxel_center(c)))
        .collect();
    let mut lookup_mismatch = 0;
    for _ in 0..100_000 {
        let p = DVec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let mut best = (f64::INFINITY, [0; 3]);
        for (c, center) in &centers {
            let d = center.distance_squared(p);
            if d < best.0 {
                best = (d, *c);
            }
        }
        let expected = match small.row_at(best.1) {
            Some(row) => {
                radiance_cache::field::DeepRadianceMap::from_row(&row.iter().map(|v| *v as f64).collect::<Vec<_>>())
            }
            None => radiance_cache::field::DeepRadianceMap::empty(small.components()),
        };
        lookup_mismatch += (small.lookup_pos(Position(p)) != expected) as usize;
    }
    outcome(
        bvh_mismatch == 0 && lookup_mismatch == 0 && bvh.audit(),
        format!(
            "BVH vs brute force: {bvh_mismatch}/1000 mismatches ({hits} hits, {} triangles, k = {}); lookup_pos vs scan: {lookup_mismatch}/100000 mismatches",
            bvh.triangle_count(),
            pos.k()
        ),
    )
}

fn marching_cubes_accuracy() -> Outcome {
    let aabb = Aabb::cube(1.0);
    let r = 0.6;
    let sphere = DensityVolume::from_fn(&aabb, [64; 3], |p| r - p.length()).unwrap();
    let mesh = marching_cubes(&sphere, 0.0);
    let diag = 3f64.sqrt() * 2.0 / 64.0;
    let sphere_err = mesh.vertices.iter().map(|v| (v.length() - r).abs()).fold(0.0, f64::max);

    let n = DVec3::new(0.3, -0.5, 0.8);
    let plane = DensityVolume::from_fn(&aabb, [64; 3], |p| n.dot(p) + 0.1).unwrap();
    let pmesh = marching_cubes(&plane, 0.0);
    let plane_err = pmesh
        .vertices
        .iter()
        .map(|v| (n.dot(*v) + 0.1).abs())
        .fold(0.0, f64::max);
    outcome(
        !mesh.is_empty() && !pmesh.is_empty() && sphere_err <= diag && plane_err <= 1e-6,
        format!("sphere max radial error {sphere_err:.4} (≤ {diag:.4}), plane max residual {plane_err:.2e} (≤ 1e-6)"),
    )
}

fn early_termination() -> Outcome {
    let cam = camera(128);
    let mut worst = 0.0f32;
    let mut detail = Vec::new();
    for entry in analytic_catalog() {
        let field = FactorizedField::Analytic(entry.scene.clone());
        let (pos, dir, bvh) = bake_with_bvh(&field, &entry.aabb, 128);
        let src = CachedSource::new(&pos, &dir).unwrap();
        let early = render(&cam, &src, bvh.as_ref(), &RenderConfig::default()).unwrap();
        let full = render(
            &cam,
            &src,
            bvh.as_ref(),
            &RenderConfig {
                termination: 0.0,
                ..RenderConfig::default()
            },
        )
        .unwrap();
        let dev = max_deviation(&early, &full);
        worst = worst.max(dev);
        detail.push(format!("{} {dev:.2e}", entry.id));
    }
    outcome(
        worst <= 0.002,
        format!("max deviation {worst:.2e} (≤ 0.002): {}", detail.join(", ")),
    )
}

fn max_deviation(a: &FrameBuffer, b: &FrameBuffer) -> f32 {
    a.pixels()
        .iter()
        .zip(b.pixels())
        .flat_map(|(p, q)| (0..3).map(move |c| (p[c] - q[c]).abs()))
        .fold(0.0, f32::max)
}

fn determinism() -> Outcome {
    let entry = catalog_entry("two-blobs").unwrap();
    let field = FactorizedField::Analytic(entry.scene);
    let (pos, dir, bvh) = bake_with_bvh(&field, &entry.aabb, 128);
    let src = CachedSource::new(&pos, &dir).unwrap();
    let cam = camera(128);
    let max = std::thread::available_parallelism().map_or(1, |n| n.get());
    let counts = [1, 2, max];
    let frames: Vec<FrameBuffer> = counts
        .iter()
        .map(|&n| render_with_workers(&cam, &src, bvh.as_ref(), &RenderConfig::default(), n).unwrap())
        .collect();
    let bytes: Vec<Vec<u8>> = frames.iter().map(FrameBuffer::to_rgba8).collect();
    let same = bytes.windows(2).all(|w| w[0] == w[1]) && frames.windows(2).all(|w| w[0] == w[1]);
    outcome(same, format!("worker counts {counts:?}: outputs identical = {same}"))
}

fn speedup() -> Outcome {
    let arch = MlpArchitecture::default();
    let weights = MlpWeights::synthetic(
        &arch,
        SupportShape::Octahedron {
            radius: 0.35,
            density_scale: 400.0,
        },
        11,
    )
    .unwrap();
    let field = FactorizedField::Mlp(weights);
    let aabb = Aabb::cube(1.0);
    let bake_start = Instant::now();
    let (pos, dir, bvh) = bake_with_bvh(&field, &aabb, 256);
    let bake_s = bake_start.elapsed().as_secs_f64();
    let cached = CachedSource::new(&pos, &dir).unwrap();
    let direct = FieldSource::new(&field, Clip::Box(*pos.occupied_bounds()), Some(pos.voxel_size())).unwrap();
    let report =
        radiance_cache::renderer::bench(&camera(256), &cached, None, None, &RenderConfig::default(), &[256], 3)
            .unwrap();
    let cached_ms = report.entries[0].cached_median_ms;
    let start = Instant::now();
    let img = render(&camera(256), &direct, bvh.as_ref(), &RenderConfig::default()).unwrap();
    let direct_ms = start.elapsed().as_secs_f64() * 1e3;
    let covered = img.pixels().iter().filter(|p| p[3] > 0.5).count();
    let ratio = direct_ms / cached_ms;
    outcome(
        ratio >= 10.0 && covered > 0,
        format!(
            "{} layers × {} MLP, k = 256, 256²: cached {cached_ms:.1} ms, direct {direct_ms:.1} ms, speedup {ratio:.1}× (≥ 10); bake {bake_s:.1} s, {covered} opaque pixels, {:.2}% occupied",
            arch.position_layers,
            arch.position_width,
            100.0 * pos.sparsity()
        ),
    )
}

fn main() -> ExitCode {
    let results = [
        criterion(1, "cache-size formulas", Duration::from_millis(1000), cache_sizes),
        criterion(
            2,
            "factorization optimality",
            Duration::from_secs(30),
            factorization_optimality,
        ),
        criterion(3, "rank recovery", Duration::from_secs(10), rank_recovery),
        criterion(4, "Beer–Lambert convergence", Duration::from_secs(5), beer_lambert),
        criterion(5, "cache fidelity trend", Duration::from_secs(120), fidelity_trend),
        criterion(6, "oracle equivalence", Duration::from_secs(10), oracle_equivalence),
        criterion(
            7,
            "marching cubes accuracy",
            Duration::from_secs(5),
            marching_cubes_accuracy,
        ),
        criterion(8, "early-termination bound", Duration::from_secs(60), early_termination),
        criterion(
            9,
            "determinism across worker counts",
            Duration::from_secs(60),
            determinism,
        ),
        criterion(10, "desk-scale speedup", Duration::from_secs(120), speedup),
    ];
    let passed = results.iter().filter(|r| **r).count();
    println!("acceptance: {passed}/{} passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
