//! `radiance-cache` command-line front end.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on runtime errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::cache::{
    bake, estimate_sizes, load_cache, save_cache, BakeConfig, DirMode, DirectionCache, PositionCache, SizeInputs,
};
use crate::error::{Error, Result};
use crate::factorizer::{fit_als, fit_svd_oracle, sample_reference, tables_to_field, TableField};
use crate::field::FactorizedField;
use crate::geometry::Aabb;
use crate::mesher::{collision_mesh, write_obj, write_stl, Bvh};
use crate::renderer::{
    bench, orbit_to_matrix, psnr, render, CachedSource, Camera, Clip, FieldSource, FrameBuffer, OrbitState,
};
use crate::scene_io::{DatasetManifest, EngineConfig, SceneSource};
use crate::service::{serve, ServiceState};

#[derive(Debug, Parser)]
#[command(
    name = "radiance-cache",
    version,
    about = "Bake, mesh, render and serve factorized radiance fields"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit rank-D factor tables to a reference field with alternating least squares.
    Fit(FitArgs),
    /// Tabulate a field into position and direction caches.
    Bake(BakeArgs),
    /// Extract the collision mesh of a baked cache.
    Mesh(MeshArgs),
    /// Render one image from a cache or directly from a field.
    Render(RenderArgs),
    /// Time cached rendering against direct field evaluation.
    Bench(BenchArgs),
    /// Evaluate the cache memory formulas.
    Estimate(EstimateArgs),
    /// Stream rendered frames to websocket clients.
    Serve(ServeArgs),
}

/// Scene source; at most one may be given.
#[derive(Debug, Args, Clone, Default)]
#[group(multiple = false)]
pub struct SourceArgs {
    /// Engine config file (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Analytic catalog scene id.
    #[arg(long)]
    pub scene: Option<String>,
    /// MLP weights file.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Factor tables written by `fit`.
    #[arg(long)]
    pub tables: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Components D.
    #[arg(long)]
    pub components: Option<usize>,
    /// Sample positions per axis.
    #[arg(long, default_value_t = 8)]
    pub grid: usize,
    /// Sample directions.
    #[arg(long, default_value_t = 64)]
    pub directions: usize,
    #[arg(long, default_value_t = 50)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also report the truncated-SVD residual.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BakeArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub l: Option<usize>,
    /// `cube` or `equirect`.
    #[arg(long)]
    pub dir_mode: Option<DirMode>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MeshArgs {
    #[arg(long)]
    pub cache: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    pub threshold: f64,
    /// `.obj` or `.stl`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct ViewArgs {
    #[arg(long, default_value_t = 256)]
    pub width: u32,
    #[arg(long, default_value_t = 256)]
    pub height: u32,
    /// Horizontal field of view, radians.
    #[arg(long, default_value_t = 0.8)]
    pub fov: f64,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub azimuth: f64,
    #[arg(long, default_value_t = 0.35, allow_hyphen_values = true)]
    pub elevation: f64,
    #[arg(long, default_value_t = 3.0)]
    pub distance: f64,
    /// Take the pose from a `transforms.json` frame instead of the orbit.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub frame: usize,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Baked cache file.
    #[arg(long, conflicts_with_all = ["config", "scene", "weights", "tables"])]
    pub cache: Option<PathBuf>,
    #[command(flatten)]
    pub view: ViewArgs,
    /// Evaluate the field at every sample instead of baking.
    #[arg(long)]
    pub direct: bool,
    /// Grid resolution when baking on the fly.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub termination: Option<f64>,
    /// Black instead of white background.
    #[arg(long)]
    pub black: bool,
    /// Skip collision-mesh acceleration.
    #[arg(long)]
    pub no_mesh: bool,
    /// `.png` or `.pfm`.
    #[arg(long)]
    pub out: PathBuf,
    /// Report PSNR against this PNG or PFM.
    #[arg(long)]
    pub compare: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [64u32, 128])]
    pub resolutions: Vec<u32>,
    #[arg(long, default_value_t = 3)]
    pub repetitions: usize,
    /// Time only the cached renderer.
    #[arg(long)]
    pub cached_only: bool,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub k: u64,
    #[arg(long)]
    pub l: u64,
    #[arg(long)]
    pub d: u64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 16)]
    pub s_sigma: u64,
    #[arg(long, default_value_t = 24)]
    pub s_rgb: u64,
    #[arg(long, default_value_t = 48)]
    pub s_uvw: u64,
    #[arg(long, default_value_t = 16)]
    pub s_beta: u64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, conflicts_with_all = ["config", "scene", "weights", "tables"])]
    pub cache: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub host: Option<String>,
    #[arg(long)]
    pub port: Option<u16>,
    /// Static viewer files served at `/`.
    #[arg(long)]
    pub assets: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

/// Parses `args` (including the program name), runs the command and returns
/// the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\n{}", usage());
            1
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn usage() -> String {
    use clap::CommandFactory;
    Cli::command().render_usage().to_string()
}

fn dispatch(cmd: Command) -> CliResult {
    match cmd {
        Command::Fit(a) => cmd_fit(a),
        Command::Bake(a) => cmd_bake(a),
        Command::Mesh(a) => cmd_mesh(a),
        Command::Render(a) => cmd_render(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Serve(a) => cmd_serve(a),
    }
}

/// A field plus the settings that came with it.
struct Resolved {
    field: FactorizedField,
    aabb: Aabb,
    config: EngineConfig,
}

/// A config naming a cache file, or `None` for field sources.
fn cache_path(cfg: &EngineConfig) -> Option<PathBuf> {
    match &cfg.scene {
        SceneSource::Cache { path } => Some(path.clone()),
        _ => None,
    }
}

fn load_config(src: &SourceArgs) -> CliResult<Option<EngineConfig>> {
    if let Some(path) = &src.config {
        return Ok(Some(EngineConfig::load(path).map_err(at(path))?));
    }
    let scene = if let Some(id) = &src.scene {
        SceneSource::Analytic {
            id: id.clone(),
            params: Default::default(),
        }
    } else if let Some(path) = &src.weights {
        SceneSource::Weights { path: path.clone() }
    } else if src.tables.is_some() {
        // Tables are handled by `resolve_field`; any source kind will do.
        SceneSource::Analytic {
            id: "empty".into(),
            params: Default::default(),
        }
    } else {
        return Ok(None);
    };
    let cfg = EngineConfig::new(scene);
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(Some(cfg))
}

fn resolve_field(src: &SourceArgs, cfg: EngineConfig) -> CliResult<Resolved> {
    if let Some(path) = &src.tables {
        let tables = TableField::load(path).map_err(at(path))?;
        let aabb = *tables.aabb();
        return Ok(Resolved {
            field: FactorizedField::Tables(tables),
            aabb,
            config: cfg,
        });
    }
    match cfg.load_field()? {
        Some(field) => Ok(Resolved {
            field,
            aabb: cfg.scene_aabb(),
            config: cfg,
        }),
        None => Err(Failure::Usage("this command needs a field source, not a cache".into())),
    }
}

fn require_source(src: &SourceArgs, what: &str) -> CliResult<EngineConfig> {
    load_config(src)?.ok_or_else(|| {
        Failure::Usage(format!(
            "`{what}` needs a scene source: --config, --scene, --weights or --tables"
        ))
    })
}

fn bake_config(
    base: &BakeConfig,
    k: Option<usize>,
    l: Option<usize>,
    mode: Option<DirMode>,
    threshold: Option<f64>,
) -> BakeConfig {
    BakeConfig {
        k: k.unwrap_or(base.k),
        l: l.unwrap_or(base.l),
        dir_mode: mode.unwrap_or(base.dir_mode),
        density_threshold: threshold.unwrap_or(base.density_threshold),
        cull: base.cull,
    }
}

fn cmd_fit(a: FitArgs) -> CliResult {
    let cfg = require_source(&a.source, "fit")?;
    let d = a.components.unwrap_or(cfg.components);
    let r = resolve_field(&a.source, cfg)?;
    let grid = sample_reference(&r.field, &r.aabb, [a.grid; 3], a.directions)?;
    let tables = fit_als(&grid, d, a.iterations, a.seed)?;
    println!(
        "als residual {:.6e} after {} iterations (D = {d})",
        tables.residual,
        tables.history.len()
    );
    if a.oracle {
        let oracle = fit_svd_oracle(&grid, d)?;
        println!("svd residual {:.6e}", oracle.residual);
    }
    let FactorizedField::Tables(t) = tables_to_field(tables, &grid)? else {
        unreachable!("tables_to_field builds a table field")
    };
    t.save(&a.out)?;
    println!("wrote {}", a.out.display());
    Ok(())
}

fn cmd_bake(a: BakeArgs) -> CliResult {
    let cfg = require_source(&a.source, "bake")?;
    let bcfg = bake_config(&cfg.bake, a.k, a.l, a.dir_mode, a.threshold);
    let r = resolve_field(&a.source, cfg)?;
    let (pos, dir) = bake(&r.field, &r.aabb, &bcfg)?;
    save_cache(&pos, &dir, &a.out)?;
    println!(
        "baked k = {} ({:?} voxels, {} occupied, sparsity {:.4}) and {} direction bins into {}",
        pos.k(),
        pos.dims(),
        pos.occupied_count(),
        pos.sparsity(),
        DirectionCache::bins(dir.mode(), dir.resolution()),
        a.out.display()
    );
    Ok(())
}

/// Adds the offending path to I/O errors.
fn at(path: &Path) -> impl FnOnce(Error) -> Error + '_ {
    move |e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        other => other,
    }
}

fn write_mesh(mesh: &crate::mesher::CollisionMesh, out: &Path) -> CliResult {
    let file = std::io::BufWriter::new(std::fs::File::create(out).map_err(Error::from)?);
    match out.extension().and_then(|e| e.to_str()) {
        Some("stl") => write_stl(mesh, file)?,
        Some("obj") => write_obj(mesh, file)?,
        _ => return Err(Failure::Usage("mesh output must end in .obj or .stl".into())),
    }
    Ok(())
}

fn cmd_mesh(a: MeshArgs) -> CliResult {
    let (pos, _) = load_cache(&a.cache).map_err(at(&a.cache))?;
    let mesh = collision_mesh(&pos, a.threshold)?;
    write_mesh(&mesh, &a.out)?;
    println!(
        "{} vertices, {} triangles -> {}",
        mesh.vertices.len(),
        mesh.triangles.len(),
        a.out.display()
    );
    Ok(())
}

fn camera_for(v: &ViewArgs) -> CliResult<Camera> {
    if let Some(path) = &v.manifest {
        let m = DatasetManifest::load(path).map_err(at(path))?;
        return Ok(m.camera(v.frame, 0.0, 1e3)?);
    }
    let state = OrbitState {
        target: [0.0; 3],
        azimuth: v.azimuth,
        elevation: v.elevation,
        distance: v.distance,
        fov: v.fov,
    };
    Camera::new(orbit_to_matrix(&state), v.fov, v.width, v.height, 0.0, 1e3).map_err(|e| Failure::Usage(e.to_string()))
}

fn write_image(fb: &FrameBuffer, out: &Path) -> CliResult {
    match out.extension().and_then(|e| e.to_str()) {
        Some("png") => fb.write_png(out)?,
        Some("pfm") => fb.write_pfm(out)?,
        _ => return Err(Failure::Usage("image output must end in .png or .pfm".into())),
    }
    Ok(())
}

fn read_image(path: &Path) -> Result<FrameBuffer> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("pfm") => FrameBuffer::read_pfm(path),
        _ => FrameBuffer::read_png(path),
    }
}

/// Caches from a file or baked from the field, plus the mesh BVH.
fn caches(
    cache: Option<&Path>,
    src: &SourceArgs,
    cfg: Option<EngineConfig>,
    k: Option<usize>,
    mesh: bool,
) -> CliResult<(PositionCache, DirectionCache, Option<Bvh>, EngineConfig)> {
    let from_config = cfg.as_ref().and_then(cache_path);
    let (pos, dir, cfg) = match (cache.map(Path::to_path_buf).or(from_config), cfg) {
        (Some(path), cfg) => {
            let (pos, dir) = load_cache(&path).map_err(at(&path))?;
            let cfg = cfg.unwrap_or_else(|| EngineConfig::new(SceneSource::Cache { path }));
            (pos, dir, cfg)
        }
        (None, Some(cfg)) => {
            let bcfg = bake_config(&cfg.bake, k, None, None, None);
            let r = resolve_field(src, cfg)?;
            let (pos, dir) = bake(&r.field, &r.aabb, &bcfg)?;
            (pos, dir, r.config)
        }
        (None, None) => return Err(Failure::Usage("needs --cache or a scene source".into())),
    };
    let bvh = if mesh {
        build_bvh(&pos, cfg.mesh.threshold)?
    } else {
        None
    };
    Ok((pos, dir, bvh, cfg))
}

fn build_bvh(pos: &PositionCache, threshold: f64) -> Result<Option<Bvh>> {
    let mesh = collision_mesh(pos, threshold)?;
    if mesh.is_empty() {
        Ok(None)
    } else {
        Bvh::build(&mesh).map(Some)
    }
}

fn cmd_render(a: RenderArgs) -> CliResult {
    let cfg = load_config(&a.source)?;
    if a.cache.is_none() && cfg.is_none() {
        return Err(Failure::Usage(
            "`render` needs a scene source: --cache, --config, --scene, --weights or --tables".into(),
        ));
    }
    let camera = camera_for(&a.view)?;
    let mut rcfg = cfg.as_ref().map(|c| c.render.clone()).unwrap_or_default();
    rcfg.step = a.step.or(rcfg.step);
    rcfg.termination = a.termination.unwrap_or(rcfg.termination);
    if a.black {
        rcfg.background = [0.0; 3];
    }
    rcfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let start = std::time::Instant::now();
    let fb = if a.direct {
        let cfg = cfg
            .filter(|c| cache_path(c).is_none())
            .ok_or_else(|| Failure::Usage("--direct needs a field source".into()))?;
        let k = a.k.unwrap_or(cfg.bake.k);
        let r = resolve_field(&a.source, cfg)?;
        let step = r.aabb.extent().max_element() / k as f64;
        let src = FieldSource::new(&r.field, Clip::Box(r.aabb), Some(step))?;
        render(&camera, &src, None, &rcfg)?
    } else {
        let (pos, dir, bvh, _) = caches(a.cache.as_deref(), &a.source, cfg, a.k, !a.no_mesh)?;
        let src = CachedSource::new(&pos, &dir)?;
        render(&camera, &src, bvh.as_ref(), &rcfg)?
    };
    let ms = start.elapsed().as_secs_f64() * 1e3;
    write_image(&fb, &a.out)?;
    println!(
        "rendered {}x{} in {ms:.1} ms -> {}",
        fb.width(),
        fb.height(),
        a.out.display()
    );
    if let Some(other) = &a.compare {
        let reference = read_image(other).map_err(at(other))?;
        println!("psnr {:.4} dB", psnr(&fb, &reference)?);
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> CliResult {
    let cfg = require_source(&a.source, "bench")?;
    let (pos, dir, bvh, cfg) = caches(None, &a.source, Some(cfg), a.k, true)?;
    let cached = CachedSource::new(&pos, &dir)?;
    let field = if a.cached_only {
        None
    } else {
        Some(resolve_field(&a.source, cfg.clone())?)
    };
    let direct = match &field {
        Some(r) => Some(FieldSource::new(&r.field, Clip::Box(r.aabb), None)?),
        None => None,
    };
    let state = OrbitState {
        target: [0.0; 3],
        azimuth: 0.5,
        elevation: 0.35,
        distance: 3.0,
        fov: 0.8,
    };
    let camera = Camera::new(orbit_to_matrix(&state), state.fov, 64, 64, 0.0, 1e3)?;
    let report = bench(
        &camera,
        &cached,
        direct.as_ref(),
        bvh.as_ref(),
        &cfg.render,
        &a.resolutions,
        a.repetitions,
    )?;
    if a.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report).map_err(|e| Error::parse(e.to_string()))?
        );
    } else {
        for e in &report.entries {
            print!("{0}x{0}: cached {1:.2} ms", e.resolution, e.cached_median_ms);
            if let (Some(d), Some(s)) = (e.direct_median_ms, e.speedup) {
                print!(", direct {d:.2} ms, speedup {s:.1}x");
            }
            println!();
        }
    }
    Ok(())
}

fn cmd_estimate(a: EstimateArgs) -> CliResult {
    let inputs = SizeInputs {
        k: a.k,
        l: a.l,
        d: a.d,
        alpha: a.alpha,
        s_sigma: a.s_sigma,
        s_rgb: a.s_rgb,
        s_uvw: a.s_uvw,
        s_beta: a.s_beta,
    };
    let report = estimate_sizes(&inputs).map_err(|e| Failure::Usage(e.to_string()))?;
    let mut out = std::io::stdout().lock();
    if a.json {
        writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(&report).map_err(|e| Error::parse(e.to_string()))?
        )
        .map_err(Error::from)?;
    } else {
        writeln!(out, "M_NeRF      {:>24} bytes", report.m_nerf_bytes).map_err(Error::from)?;
        writeln!(
            out,
            "M_FastNeRF  {:>24} bytes ({} position + {} direction)",
            report.m_fastnerf_bytes, report.fastnerf_position_bytes, report.fastnerf_direction_bytes
        )
        .map_err(Error::from)?;
    }
    Ok(())
}

fn cmd_serve(a: ServeArgs) -> CliResult {
    let cfg = load_config(&a.source)?;
    if a.cache.is_none() && cfg.is_none() {
        return Err(Failure::Usage("`serve` needs a scene source".into()));
    }
    let (pos, dir, bvh, cfg) = caches(a.cache.as_deref(), &a.source, cfg, a.k, true)?;
    let svc = &cfg.service;
    let host = a.host.unwrap_or_else(|| svc.host.clone());
    let port = a.port.unwrap_or(svc.port);
    let assets = a.assets.or_else(|| svc.assets.clone());
    let state = Arc::new(ServiceState::new(
        pos,
        dir,
        bvh,
        cfg.render.clone(),
        a.workers.or(svc.workers),
    )?);
    let rt = tokio::runtime::Runtime::new().map_err(Error::from)?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind((host.as_str(), port)).await?;
        println!("serving on ws://{}/ws", listener.local_addr()?);
        serve(listener, state, assets).await
    })
    .map_err(Error::from)?;
    Ok(())
}
