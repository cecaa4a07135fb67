use clap::{Args, Parser, Subcommand, ValueEnum};
use isoprofile::cones::min_solid_angle_vertex;
use isoprofile::converge::{ExperimentSpec, TOLERANCE_NAMES};
use isoprofile::density::{density_audit, DensityOptions, GridTol};
use isoprofile::io::{
    fmt12, parse_body, parse_region, read_profile_csv, round12, to_json_12, write_profile_csv, RegionFile,
};
use isoprofile::profile::bounds::{profile_curve, CurveOptions, Method, UpperBoundOptions};
use isoprofile::profile::grid::Stencil;
use isoprofile::profile::oracle::{OracleProblem, OracleStrategy};
use isoprofile::profile::{
    concavity_audit, curvature_audit, scaling_audit, strict_subadditivity_probe, ProfileCurve, Provenance,
};
use isoprofile::transport::build_map;
use isoprofile::{par, ConvexBody};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

const EXIT_ERROR: u8 = 1;
const EXIT_FAIL: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(
    name = "isoprofile",
    version,
    about = "Isoperimetric profiles of convex bodies: bounds, a grid oracle, and audits of their structural properties",
    after_help = "Exit status: 0 success, 1 error, 2 an audit ran and failed, 64 usage error."
)]
struct Cli {
    #[command(flatten)]
    run: RunArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Seed for every random choice; falls back to ISOPROFILE_SEED, then 0.
    #[arg(long, env = "ISOPROFILE_SEED", global = true)]
    seed: Option<u64>,
    /// Worker threads; 1 runs the sequential code path.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Write the result here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Tolerance as NAME=VALUE, or a bare VALUE for the subcommand's main one.
    #[arg(long = "tol", global = true, value_name = "NAME=VALUE")]
    tol: Vec<String>,
    /// Output format; each subcommand has its own default.
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Reads a body file and reports dimension, volume, inradius, circumradius and Chebyshev center.
    Body { body: PathBuf },
    /// Samples the profile I(v): candidate upper bounds (balls, chords, slabs), the ball-transfer
    /// lower bound, and the grid oracle. Writes CSV rows (v, method, value, uncertainty, witness).
    Profile(ProfileArgs),
    /// Audits a profile CSV: concavity of I^{(n+1)/n} with symmetry and monotonicity, the scaling
    /// law of dilated bodies, strict subadditivity, or the slope-versus-curvature relation.
    Audit(AuditArgs),
    /// Solid angle of the tangent cone at every vertex, marking the smallest.
    ConeAngles { body: PathBuf },
    /// Builds the radial map between two bodies and compares its sampled dilatations with the
    /// closed-form bound.
    MapLip(MapLipArgs),
    /// Checks a region against the density dichotomy (balls where it is sparse lose it entirely at
    /// half radius), the lower density bound, and connectedness of the region and its complement.
    DensityAudit(DensityArgs),
    /// Runs an experiment file over a body sequence: profile, dilatation, minimizer convergence,
    /// small volumes, or solid-angle semicontinuity.
    Converge { experiment: PathBuf },
    /// Compares small-volume profile values with the profile of the sharpest tangent cone and
    /// checks that oracle minimizers sit at a vertex of least solid angle.
    SmallVolume(SmallVolumeArgs),
    /// Minimum-perimeter grid region of a given volume, by annealing or exhaustive search.
    Oracle(OracleArgs),
}

#[derive(Args, Debug)]
struct ProfileArgs {
    body: PathBuf,
    /// Volumes as START:STOP:STEP or a comma list.
    #[arg(long)]
    v_grid: String,
    /// Read the volumes as fractions of the body's volume.
    #[arg(long)]
    relative: bool,
    /// Comma list from upper, lower, oracle.
    #[arg(long, default_value = "upper")]
    methods: String,
    /// Grid cells across the longest side of the bounding box.
    #[arg(long, default_value_t = 64)]
    resolution: usize,
    #[arg(long)]
    body_id: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum AuditKind {
    Concavity,
    Scaling,
    Subadd,
    Curvature,
}

#[derive(Args, Debug)]
struct AuditArgs {
    kind: AuditKind,
    profile: PathBuf,
    /// Which samples to audit (analytic, upper, lower, oracle); defaults to the first present.
    #[arg(long)]
    method: Option<String>,
    /// Body file, needed by scaling and curvature.
    #[arg(long)]
    body: Option<PathBuf>,
    /// Dilation factor for the scaling audit.
    #[arg(long, default_value_t = 2.0)]
    lambda: f64,
    /// Volume at which to compare slope and curvature.
    #[arg(long)]
    v: Option<f64>,
    /// Volume pairs A+B, comma separated; defaults to every sampled pair that fits.
    #[arg(long)]
    pairs: Option<String>,
}

#[derive(Args, Debug)]
struct MapLipArgs {
    source: PathBuf,
    target: PathBuf,
    #[arg(long, default_value_t = 20_000)]
    pairs: usize,
}

#[derive(Args, Debug)]
struct DensityArgs {
    body: PathBuf,
    region: PathBuf,
    #[arg(long, default_value_t = 512)]
    probes: usize,
    /// Use this threshold instead of the one computed from the region's volume.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Profile value at the region's volume used for the threshold.
    #[arg(long)]
    profile_value: Option<f64>,
    #[arg(long)]
    body_id: Option<String>,
    #[arg(long)]
    region_id: Option<String>,
}

#[derive(Args, Debug)]
struct SmallVolumeArgs {
    body: PathBuf,
    /// Comma list of volumes, largest first.
    #[arg(long, default_value = "0.05,0.02,0.01")]
    v_list: String,
    /// Read the volumes as fractions of the body's volume.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    relative: bool,
    #[arg(long, default_value_t = 96)]
    resolution: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Strategy {
    Anneal,
    Exhaustive,
}

#[derive(Args, Debug)]
struct OracleArgs {
    body: PathBuf,
    #[arg(long)]
    v: f64,
    #[arg(long)]
    relative: bool,
    #[arg(long, default_value_t = 64)]
    resolution: usize,
    #[arg(long, value_enum, default_value_t = Strategy::Anneal)]
    strategy: Strategy,
    /// Also write the region as a bare region file, for density-audit.
    #[arg(long)]
    region_out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Run(String),
}

impl From<isoprofile::Error> for Failure {
    fn from(e: isoprofile::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

type Out<T> = std::result::Result<T, Failure>;

enum Data {
    Csv(String),
    Json(Value),
}

struct Outcome {
    data: Data,
    /// `Some(false)` when an audit ran and failed.
    pass: Option<bool>,
    /// Seed actually used, when it came from an input file.
    seed: Option<u64>,
}

struct Ctx {
    seed: u64,
    tol: Vec<String>,
    format: Option<Format>,
}

impl Ctx {
    /// Parses `--tol` flags against the names a subcommand knows; a bare
    /// number sets the first name.
    fn tolerances(&self, known: &[&str]) -> Out<BTreeMap<String, f64>> {
        let mut out = BTreeMap::new();
        for raw in &self.tol {
            let (name, value) = match raw.split_once('=') {
                Some((n, v)) => (n.trim().to_string(), v),
                None => match known.first() {
                    Some(n) => (n.to_string(), raw.as_str()),
                    None => return Err(Failure::Usage("this subcommand takes no tolerances".into())),
                },
            };
            if !known.contains(&name.as_str()) {
                return Err(Failure::Usage(format!(
                    "unknown tolerance `{name}` (known: {})",
                    if known.is_empty() {
                        "none".to_string()
                    } else {
                        known.join(", ")
                    }
                )));
            }
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| Failure::Usage(format!("tolerance `{name}`: `{value}` is not a number")))?;
            out.insert(name, v);
        }
        Ok(out)
    }

    fn format(&self, default: Format, allowed: &[Format]) -> Out<Format> {
        let f = self.format.unwrap_or(default);
        if allowed.contains(&f) {
            Ok(f)
        } else {
            Err(Failure::Usage(
                format!("--format {f:?} is not available here").to_lowercase(),
            ))
        }
    }
}

fn read(path: &Path) -> Out<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::Run(format!("{}: {e}", path.display())))
}

fn load_body(path: &Path) -> Out<ConvexBody> {
    Ok(parse_body(&read(path)?)?)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map_or("body".into(), |s| s.to_string_lossy().into_owned())
}

fn json12<T: serde::Serialize>(v: &T) -> Out<Value> {
    Ok(to_json_12(v)?)
}

fn parse_f64(s: &str) -> Out<f64> {
    s.trim()
        .parse()
        .map_err(|_| Failure::Usage(format!("`{s}` is not a number")))
}

/// `START:STOP:STEP` (inclusive, snapped to 12 digits) or `a,b,c`.
fn parse_grid(s: &str) -> Out<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.len() {
        1 => s.split(',').map(parse_f64).collect(),
        3 => {
            let (a, b, step) = (parse_f64(parts[0])?, parse_f64(parts[1])?, parse_f64(parts[2])?);
            if !(step > 0.0) || b < a {
                return Err(Failure::Usage(format!("bad grid `{s}`")));
            }
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| round12(a + i as f64 * step)).collect())
        }
        _ => Err(Failure::Usage(format!(
            "bad grid `{s}`; use START:STOP:STEP or a comma list"
        ))),
    }
}

fn csv_row(values: &[f64]) -> String {
    values.iter().map(|&x| fmt12(x)).collect::<Vec<_>>().join(",")
}

fn body_cmd(ctx: &Ctx, path: &Path) -> Out<Outcome> {
    ctx.tolerances(&[])?;
    ctx.format(Format::Json, &[Format::Json])?;
    let b = load_body(path)?;
    let data = json!({
        "dim": b.dim(),
        "kind": format!("{:?}", b.kind()).to_lowercase(),
        "volume": b.exact_volume()?,
        "inradius": b.inradius(),
        "circumradius": b.circumradius(),
        "chebyshev_center": b.chebyshev_center(),
        "vertices": b.vertices().len(),
    });
    Ok(Outcome {
        data: Data::Json(json12(&data)?),
        pass: None,
        seed: None,
    })
}

fn profile_cmd(ctx: &Ctx, a: &ProfileArgs) -> Out<Outcome> {
    ctx.tolerances(&[])?;
    let format = ctx.format(Format::Csv, &[Format::Csv, Format::Json])?;
    let body = load_body(&a.body)?;
    let total = body.exact_volume()?;
    let mut grid = parse_grid(&a.v_grid)?;
    if a.relative {
        grid.iter_mut().for_each(|v| *v *= total);
    }
    let methods = a
        .methods
        .split(',')
        .map(|m| Method::parse(m.trim()).ok_or_else(|| Failure::Usage(format!("unknown method `{m}`"))))
        .collect::<Out<Vec<_>>>()?;
    let opts = CurveOptions {
        resolution: a.resolution,
        seed: ctx.seed,
        ..CurveOptions::default()
    };
    let id = a.body_id.clone().unwrap_or_else(|| stem(&a.body));
    let curve = profile_curve(&body, &id, &grid, &methods, &opts)?;
    let data = match format {
        Format::Csv => Data::Csv(write_profile_csv(&curve, &[])),
        Format::Json => Data::Json(json12(&curve)?),
    };
    Ok(Outcome {
        data,
        pass: None,
        seed: None,
    })
}

fn pick_provenance(curve: &ProfileCurve, wanted: Option<&str>) -> Out<Provenance> {
    if let Some(name) = wanted {
        return Provenance::parse(name).ok_or_else(|| Failure::Usage(format!("unknown method `{name}`")));
    }
    [
        Provenance::UpperBound,
        Provenance::Analytic,
        Provenance::Oracle,
        Provenance::LowerBound,
    ]
    .into_iter()
    .find(|p| curve.samples.iter().any(|s| s.provenance == *p))
    .ok_or_else(|| Failure::Run("profile has no samples".into()))
}

fn parse_pairs(s: &str) -> Out<Vec<(f64, f64)>> {
    s.split(',')
        .map(|p| {
            let (a, b) = p
                .split_once('+')
                .ok_or_else(|| Failure::Usage(format!("pair `{p}` must look like A+B")))?;
            Ok((parse_f64(a)?, parse_f64(b)?))
        })
        .collect()
}

fn audit_cmd(ctx: &Ctx, a: &AuditArgs) -> Out<Outcome> {
    ctx.format(Format::Json, &[Format::Json])?;
    let curve = read_profile_csv(&read(&a.profile)?)?;
    let prov = pick_provenance(&curve, a.method.as_deref())?;
    let body = || -> Out<ConvexBody> {
        let path = a
            .body
            .as_ref()
            .ok_or_else(|| Failure::Usage("this audit needs --body".into()))?;
        load_body(path)
    };
    let (report, pass) = match a.kind {
        AuditKind::Concavity => {
            let t = ctx.tolerances(&["concavity"])?;
            let r = concavity_audit(&curve, prov, t.get("concavity").copied().unwrap_or(1e-9))?;
            (json12(&r)?, r.pass)
        }
        AuditKind::Scaling => {
            let t = ctx.tolerances(&["scaling"])?;
            let mut vs: Vec<f64> = curve.series(prov).iter().map(|s| s.0).collect();
            vs.dedup();
            let r = scaling_audit(
                &body()?,
                a.lambda,
                &vs,
                t.get("scaling").copied().unwrap_or(1e-9),
                &UpperBoundOptions::default(),
            )?;
            (json12(&r)?, r.pass)
        }
        AuditKind::Subadd => {
            ctx.tolerances(&[])?;
            let pairs = match &a.pairs {
                Some(p) => parse_pairs(p)?,
                None => {
                    let vs: Vec<f64> = curve.series(prov).iter().map(|s| s.0).collect();
                    let top = vs.last().copied().unwrap_or(0.0);
                    let mut out = Vec::new();
                    for (i, &x) in vs.iter().enumerate() {
                        for &y in &vs[i..] {
                            if x + y <= top {
                                out.push((x, y));
                            }
                        }
                    }
                    out
                }
            };
            let r = strict_subadditivity_probe(&curve, prov, &pairs)?;
            (json12(&r)?, r.pass)
        }
        AuditKind::Curvature => {
            let t = ctx.tolerances(&["curvature"])?;
            let v =
                a.v.ok_or_else(|| Failure::Usage("the curvature audit needs --v".into()))?;
            let tol = t.get("curvature").copied().unwrap_or(1e-3);
            let r = curvature_audit(&curve, &body()?, v, &UpperBoundOptions::default())?;
            let pass = r.mismatch <= tol && r.bound_holds;
            let mut j = json12(&r)?;
            j["tol"] = json!(tol);
            j["pass"] = json!(pass);
            (j, pass)
        }
    };
    Ok(Outcome {
        data: Data::Json(report),
        pass: Some(pass),
        seed: None,
    })
}

fn cone_angles_cmd(ctx: &Ctx, path: &Path) -> Out<Outcome> {
    ctx.tolerances(&[])?;
    let format = ctx.format(Format::Csv, &[Format::Csv, Format::Json])?;
    let body = load_body(path)?;
    let m = min_solid_angle_vertex(&body)?;
    let data = match format {
        Format::Json => Data::Json(json12(&m)?),
        Format::Csv => {
            let coords: Vec<String> = (0..body.dim()).map(|i| format!("x{i}")).collect();
            let mut s = format!("vertex_index,{},alpha,is_min\n", coords.join(","));
            for a in &m.angles {
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    a.index,
                    csv_row(&a.vertex),
                    fmt12(a.alpha),
                    m.is_min(a.index)
                ));
            }
            Data::Csv(s)
        }
    };
    Ok(Outcome {
        data,
        pass: None,
        seed: None,
    })
}

fn map_lip_cmd(ctx: &Ctx, a: &MapLipArgs) -> Out<Outcome> {
    ctx.tolerances(&[])?;
    ctx.format(Format::Json, &[Format::Json])?;
    let map = build_map(&load_body(&a.source)?, &load_body(&a.target)?)?;
    let d = map.diagnostics(a.pairs, ctx.seed)?;
    Ok(Outcome {
        data: Data::Json(json12(&d)?),
        pass: None,
        seed: None,
    })
}

fn density_cmd(ctx: &Ctx, a: &DensityArgs) -> Out<Outcome> {
    let t = ctx.tolerances(&["grid"])?;
    ctx.format(Format::Json, &[Format::Json])?;
    let body = load_body(&a.body)?;
    let region = parse_region(&read(&a.region)?, &body)?;
    let opts = DensityOptions {
        probes: a.probes,
        seed: ctx.seed,
        grid_tol: t
            .get("grid")
            .map_or(GridTol::ExcludeBoundaryLayer, |&g| GridTol::Absolute(g)),
        profile_value: a.profile_value,
        epsilon: a.epsilon,
    };
    let report = density_audit(
        &region,
        &body,
        &a.body_id.clone().unwrap_or_else(|| stem(&a.body)),
        &a.region_id.clone().unwrap_or_else(|| stem(&a.region)),
        &opts,
    )?;
    let pass = report.ok();
    let mut j = json12(&report)?;
    j["ok"] = json!(pass);
    Ok(Outcome {
        data: Data::Json(j),
        pass: Some(pass),
        seed: None,
    })
}

fn table_csv(columns: &[String], rows: &[Vec<f64>], verdict: &Value) -> String {
    let mut s = columns.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&csv_row(r));
        s.push('\n');
    }
    s.push_str(&format!("# verdict: {verdict}\n"));
    s
}

fn converge_cmd(ctx: &Ctx, path: &Path, seed_given: bool) -> Out<Outcome> {
    let format = ctx.format(Format::Csv, &[Format::Csv, Format::Json])?;
    let mut spec: ExperimentSpec =
        serde_json::from_str(&read(path)?).map_err(|e| Failure::Run(format!("{}: {e}", path.display())))?;
    spec.tolerances.extend(ctx.tolerances(&TOLERANCE_NAMES)?);
    if seed_given {
        spec.seed = ctx.seed;
    }
    spec.validate()?;
    let r = spec.run()?;
    let data = match format {
        Format::Json => Data::Json(json12(&r)?),
        Format::Csv => Data::Csv(table_csv(
            &r.columns,
            &r.rows,
            &json!({"name": r.name, "experiment": r.experiment, "seed": spec.seed, "pass": r.pass}),
        )),
    };
    Ok(Outcome {
        data,
        pass: Some(r.pass),
        seed: Some(spec.seed),
    })
}

fn small_volume_cmd(ctx: &Ctx, a: &SmallVolumeArgs) -> Out<Outcome> {
    let format = ctx.format(Format::Csv, &[Format::Csv, Format::Json])?;
    let t = ctx.tolerances(&["ratio_low", "ratio_high"])?;
    let body = load_body(&a.body)?;
    let total = body.exact_volume()?;
    let mut vs: Vec<f64> = a.v_list.split(',').map(parse_f64).collect::<Out<_>>()?;
    if a.relative {
        vs.iter_mut().for_each(|v| *v *= total);
    }
    let band = (
        t.get("ratio_low").copied().unwrap_or(0.95),
        t.get("ratio_high").copied().unwrap_or(1.10),
    );
    let r = isoprofile::converge::small_volume_experiment(&body, &vs, a.resolution, ctx.seed, band)?;
    let data = match format {
        Format::Json => Data::Json(json12(&r)?),
        Format::Csv => {
            let columns: Vec<String> = [
                "v",
                "cone_profile",
                "upper_ratio",
                "oracle_ratio",
                "oracle_ratio_uncertainty",
                "nearest_vertex",
                "vertex_alpha",
                "at_min_vertex",
                "rescaled_hausdorff",
                "rescaled_tolerance",
            ]
            .map(String::from)
            .to_vec();
            let rows: Vec<Vec<f64>> = r
                .rows
                .iter()
                .map(|x| {
                    vec![
                        x.v,
                        x.cone_profile,
                        x.upper_ratio,
                        x.oracle_ratio,
                        x.oracle_ratio_uncertainty,
                        x.nearest_vertex as f64,
                        x.vertex_alpha,
                        if x.at_min_vertex { 1.0 } else { 0.0 },
                        x.rescaled_hausdorff,
                        x.rescaled_tolerance,
                    ]
                })
                .collect();
            Data::Csv(table_csv(
                &columns,
                &rows,
                &json!({"alpha_min": round12(r.alpha_min), "min_vertex": r.min_vertex, "pass": r.pass}),
            ))
        }
    };
    Ok(Outcome {
        data,
        pass: Some(r.pass),
        seed: None,
    })
}

fn oracle_cmd(ctx: &Ctx, a: &OracleArgs) -> Out<Outcome> {
    ctx.tolerances(&[])?;
    ctx.format(Format::Json, &[Format::Json])?;
    let body = load_body(&a.body)?;
    let v = if a.relative { a.v * body.exact_volume()? } else { a.v };
    let problem = OracleProblem::for_body(&body, a.resolution, Stencil::default_for(body.dim()))?;
    let strategy = match a.strategy {
        Strategy::Anneal => OracleStrategy::anneal(ctx.seed),
        Strategy::Exhaustive => OracleStrategy::Exhaustive,
    };
    let res = problem.solve_volume(v, strategy)?;
    let file = RegionFile::from_region(&res.region);
    if let Some(p) = &a.region_out {
        let text = serde_json::to_string(&file).map_err(|e| Failure::Run(e.to_string()))?;
        std::fs::write(p, text + "\n").map_err(|e| Failure::Run(format!("{}: {e}", p.display())))?;
    }
    let data = json!({
        "v": v,
        "target_cells": res.target_cells,
        "region_volume": res.region.volume(),
        "perimeter": res.perimeter,
        "h": problem.grid.h,
        "restart_perimeters": res.restart_perimeters,
        "region": file,
    });
    Ok(Outcome {
        data: Data::Json(json12(&data)?),
        pass: None,
        seed: None,
    })
}

fn dispatch(ctx: &Ctx, cmd: &Command, seed_given: bool) -> Out<Outcome> {
    match cmd {
        Command::Body { body } => body_cmd(ctx, body),
        Command::Profile(a) => profile_cmd(ctx, a),
        Command::Audit(a) => audit_cmd(ctx, a),
        Command::ConeAngles { body } => cone_angles_cmd(ctx, body),
        Command::MapLip(a) => map_lip_cmd(ctx, a),
        Command::DensityAudit(a) => density_cmd(ctx, a),
        Command::Converge { experiment } => converge_cmd(ctx, experiment, seed_given),
        Command::SmallVolume(a) => small_volume_cmd(ctx, a),
        Command::Oracle(a) => oracle_cmd(ctx, a),
    }
}

fn render(out: &Outcome, seed: u64, workers: usize, wall: f64) -> String {
    let version = concat!("isoprofile ", env!("CARGO_PKG_VERSION"));
    match &out.data {
        Data::Csv(body) => {
            format!("# tool: {version}\n# seed: {seed}\n# workers: {workers}\n# wall_time_s: {wall:.3}\n{body}")
        }
        Data::Json(data) => {
            let doc = json!({
                "metadata": {"tool": version, "seed": seed, "workers": workers, "wall_time_s": (wall * 1e3).round() / 1e3},
                "data": data,
            });
            serde_json::to_string_pretty(&doc).expect("json") + "\n"
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let seed_given = cli.run.seed.is_some();
    let ctx = Ctx {
        seed: cli.run.seed.unwrap_or(0),
        tol: cli.run.tol.clone(),
        format: cli.run.format,
    };
    let workers = cli
        .run
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        eprintln!("error: --workers must be at least 1");
        return ExitCode::from(EXIT_USAGE);
    }
    let start = Instant::now();
    let (result, used) = par::with_workers(workers, || (dispatch(&ctx, &cli.command, seed_given), par::workers()));
    let out = match result {
        Ok(o) => o,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            return ExitCode::from(EXIT_USAGE);
        }
        Err(Failure::Run(m)) => {
            eprintln!("error: {m}");
            return ExitCode::from(EXIT_ERROR);
        }
    };
    let text = render(&out, out.seed.unwrap_or(ctx.seed), used, start.elapsed().as_secs_f64());
    match &cli.run.output {
        Some(p) => {
            if let Err(e) = std::fs::write(p, &text) {
                eprintln!("error: {}: {e}", p.display());
                return ExitCode::from(EXIT_ERROR);
            }
        }
        None => print!("{text}"),
    }
    match out.pass {
        Some(false) => {
            eprintln!("audit failed");
            ExitCode::from(EXIT_FAIL)
        }
        _ => ExitCode::SUCCESS,
    }
}
