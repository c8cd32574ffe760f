mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use filmlab::deform::{deform_chain, DeformConfig};
use filmlab::dipoly::{make_dipole, Chain, Dipolyhedron};
use filmlab::flatnorm::{energy_flat_norm, flat_norm, verify_energy, verify_flat, Method, SolverConfig, Status};
use filmlab::grid::{GridCell, GridChain, GridSpec};
use filmlab::io::{
    chain_to_json, dipoly_to_json, grid_to_json, measure_to_json, parse_document, to_obj, to_off, to_pretty,
    with_schema, Document,
};
use filmlab::natural::natural_norm_upper;
use filmlab::plateau::{clamp_improvement, diagnostics, initial_cone_solution, minimize_weight, PlateauConfig, PlateauProblem, SearchMethod};
use filmlab::rational::{floor_int, parse_rational, Point, Rational};
use filmlab::simplicial::{geometric_mass, EqualityMode, SimplicialChain};
use filmlab::spanning::{default_directions, spanning_check, ProjectionDir};
use filmlab::FilmError;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "filmlab", version, about = "Mod-2 films, flat norms and discrete Plateau problems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Exit with status 3 when a solver only reached an upper bound.
    #[arg(long, global = true)]
    require_exact: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Exhaustive,
    Bnb,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Exhaustive => Method::Exhaustive,
            MethodArg::Bnb => Method::BranchAndBound,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PlateauMethodArg {
    Exhaustive,
    Bnb,
    Local,
}

#[derive(Clone, Copy, ValueEnum)]
enum DirsArg {
    /// The three coordinate axes.
    Axes,
    /// The axes plus ten fixed oblique directions.
    Default,
}

fn directions(d: DirsArg) -> Vec<ProjectionDir> {
    match d {
        DirsArg::Axes => (0..3).map(ProjectionDir::axis).collect(),
        DirsArg::Default => default_directions(),
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Mass of a chain, or energy of a dipolyhedron.
    Mass { input: PathBuf },
    /// Boundary of a chain or dipolyhedron.
    Boundary { input: PathBuf },
    /// Flat norm of a grid chain.
    Flatnorm {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "bnb")]
        method: MethodArg,
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
    },
    /// Energy flat norm of a grid dipolyhedron.
    Eflat {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "bnb")]
        method: MethodArg,
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
    },
    /// Cone over a chain or dipolyhedron.
    Cone {
        input: PathBuf,
        /// Apex as "x,y,z" with rational coordinates.
        #[arg(long, default_value = "0,0,0")]
        apex: String,
    },
    /// Clamp into the cube of the given half side.
    Clamp {
        input: PathBuf,
        #[arg(long)]
        radius: String,
    },
    /// Push forward along an affine or vertex-table map.
    Pushforward {
        input: PathBuf,
        #[arg(long)]
        map: PathBuf,
    },
    /// Deform a simplicial chain onto the grid of spacing `eps`.
    Deform {
        input: PathBuf,
        #[arg(long)]
        eps: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        centers: usize,
        /// Center clearance as a fraction of eps.
        #[arg(long, default_value = "1/8")]
        tau: String,
        #[arg(long, default_value_t = 100.0)]
        cmax: f64,
        /// Directory for OFF/OBJ dumps of each stage.
        #[arg(long)]
        mesh_dir: Option<PathBuf>,
    },
    /// Check whether a 2-dipolyhedron spans a curve.
    SpanCheck {
        input: PathBuf,
        #[arg(long)]
        curve: PathBuf,
        #[arg(long, value_enum, default_value = "default")]
        dirs: DirsArg,
    },
    /// Solve the discrete Plateau problem for a grid curve.
    Plateau {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long)]
        lambda: Option<String>,
        /// Grid spacing; must divide the curve's spacing.
        #[arg(long)]
        eps: Option<String>,
        #[arg(long, value_enum, default_value = "bnb")]
        method: PlateauMethodArg,
        #[arg(long, value_enum, default_value = "default")]
        dirs: DirsArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        mesh_dir: Option<PathBuf>,
    },
    /// Restrict to a box and report the restricted measures.
    Restrict {
        input: PathBuf,
        #[arg(long)]
        region: PathBuf,
    },
    /// Upper estimate of the natural norm of a grid chain.
    NaturalNorm {
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        r: usize,
        #[arg(long, default_value_t = 1)]
        radius: u32,
    },
    /// Loop decomposition and components of a 2-dipolyhedron.
    Diagnostics { input: PathBuf },
}

fn read_doc(path: &Path) -> anyhow::Result<Document> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_document(&text)?)
}

fn read_chain(path: &Path) -> anyhow::Result<Chain> {
    match read_doc(path)? {
        Document::Chain(c) => Ok(c),
        _ => Err(FilmError::Precondition(format!("{} is not a chain", path.display())).into()),
    }
}

fn read_dipoly(path: &Path) -> anyhow::Result<Dipolyhedron> {
    match read_doc(path)? {
        Document::Chain(c) => Ok(make_dipole(c)),
        Document::Dipoly(d) => Ok(d),
        _ => Err(FilmError::Precondition(format!("{} is not a chain or dipolyhedron", path.display())).into()),
    }
}

fn grid_chain(c: Chain) -> anyhow::Result<GridChain> {
    match c {
        Chain::Grid(g) => Ok(g),
        Chain::Simplicial(_) => Err(FilmError::Precondition("this command needs a grid chain".into()).into()),
    }
}

fn rational_arg(s: &str, name: &str) -> anyhow::Result<Rational> {
    parse_rational(s).map_err(|e| FilmError::Precondition(format!("--{name}: {e}")).into())
}

fn parse_point(s: &str) -> anyhow::Result<Point> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        bail!(FilmError::Precondition(format!("expected x,y,z, got {s:?}")));
    }
    Ok([rational_arg(parts[0], "apex")?, rational_arg(parts[1], "apex")?, rational_arg(parts[2], "apex")?])
}

/// Smallest grid of spacing `eps` aligned to the lattice `eps·Z³` that
/// contains every vertex of the chain.
fn covering_grid(chain: &SimplicialChain, eps: &Rational) -> anyhow::Result<GridSpec> {
    let verts = chain.vertices();
    if verts.is_empty() {
        return Ok(GridSpec::new(eps.clone(), filmlab::rational::zero_point(), [1, 1, 1])?);
    }
    let mut origin = filmlab::rational::zero_point();
    let mut dims = [1u32; 3];
    for i in 0..3 {
        let lo = verts.iter().map(|v| &v[i]).min().expect("nonempty");
        let hi = verts.iter().map(|v| &v[i]).max().expect("nonempty");
        let a = floor_int(&(lo / eps));
        let b = -floor_int(&(-(hi / eps)));
        origin[i] = Rational::from_integer(a.clone()) * eps;
        let n: i64 = (b - a).try_into().unwrap_or(i64::MAX);
        dims[i] = u32::try_from(n.max(1)).context("grid too large")?;
    }
    Ok(GridSpec::new(eps.clone(), origin, dims)?)
}

/// The same curve on the grid refined to spacing `eps`.
fn refine_curve(gamma: &GridChain, eps: &Rational) -> anyhow::Result<GridChain> {
    let g = gamma.grid();
    let ratio = &g.epsilon / eps;
    if !ratio.is_integer() || ratio < Rational::from_integer(1.into()) {
        bail!(FilmError::Precondition(format!("--eps {} must divide the curve spacing {}", eps, g.epsilon)));
    }
    let f: u32 = ratio.to_integer().try_into().context("refinement factor too large")?;
    let fine = g.refined(f);
    let mut cells = Vec::new();
    for e in gamma.cells() {
        let axis = e.axes.iter().next().expect("edge");
        for j in 0..f as i64 {
            let mut base = e.base.map(|x| x * f as i64);
            base[axis] += j;
            cells.push(GridCell::new(base, e.axes));
        }
    }
    Ok(GridChain::new(fine, 1, cells)?)
}

fn dump(dir: &Path, name: &str, c: &Chain) -> anyhow::Result<()> {
    fs::create_dir_all(dir)?;
    match c.k() {
        2 => fs::write(dir.join(format!("{name}.off")), to_off(c)?)?,
        1 => fs::write(dir.join(format!("{name}.obj")), to_obj(&[(name, c)])?)?,
        _ => {}
    }
    Ok(())
}

struct Outcome {
    report: Value,
    status: Status,
}

fn done(report: Value) -> anyhow::Result<Outcome> {
    Ok(Outcome { report, status: Status::Exact })
}

fn run(cmd: Cmd) -> anyhow::Result<Outcome> {
    match cmd {
        Cmd::Mass { input } => match read_doc(&input)? {
            Document::Chain(c) => {
                let exact = match &c {
                    Chain::Grid(g) => measure_to_json(&filmlab::measure::Measure::rational(g.mass())),
                    Chain::Simplicial(s) => match geometric_mass(s) {
                        Ok(m) => measure_to_json(&m),
                        Err(_) => Value::Null,
                    },
                };
                done(json!({ "kind": "mass", "k": c.k(), "mass": exact, "presented_mass": measure_to_json(&c.mass()) }))
            }
            Document::Dipoly(a) => done(json!({ "kind": "energy", "k": a.k(), "energy": report::energy(&a.energy()) })),
            _ => bail!(FilmError::Precondition("mass needs a chain or dipolyhedron".into())),
        },
        Cmd::Boundary { input } => match read_doc(&input)? {
            Document::Chain(c) => done(chain_to_json(&c.boundary()?)),
            Document::Dipoly(a) => done(dipoly_to_json(&a.boundary()?)),
            _ => bail!(FilmError::Precondition("boundary needs a chain or dipolyhedron".into())),
        },
        Cmd::Flatnorm { input, method, budget } => {
            let p = grid_chain(read_chain(&input)?)?;
            let cfg = SolverConfig { node_budget: budget, ..SolverConfig::default() };
            let cert = flat_norm(&p, method.into(), &cfg)?;
            let ok = verify_flat(&cert, &p);
            Ok(Outcome { status: cert.status, report: json!({ "kind": "flatnorm", "result": report::flat(&cert, ok) }) })
        }
        Cmd::Eflat { input, method, budget } => {
            let a = read_dipoly(&input)?;
            let cfg = SolverConfig { node_budget: budget, ..SolverConfig::default() };
            let cert = energy_flat_norm(&a, method.into(), &cfg)?;
            let ok = verify_energy(&cert, &a);
            Ok(Outcome {
                status: cert.status,
                report: json!({ "kind": "eflat", "result": report::energy_flat(&cert, ok) }),
            })
        }
        Cmd::Cone { input, apex } => {
            let a = read_dipoly(&input)?;
            let p = parse_point(&apex)?;
            let cone = a.cone(&p);
            let identity = a.cone_identity_holds(&p, EqualityMode::Exact)?;
            done(json!({
                "kind": "cone",
                "cone": dipoly_to_json(&cone),
                "energy": report::energy(&cone.energy()),
                "identity_holds": identity,
            }))
        }
        Cmd::Clamp { input, radius } => {
            let a = read_dipoly(&input)?;
            let r = rational_arg(&radius, "radius")?;
            let c = a.clamp(&r)?;
            done(json!({
                "kind": "clamp",
                "radius": r.to_string(),
                "result": dipoly_to_json(&c),
                "energy_before": report::energy(&a.energy()),
                "energy_after": report::energy(&c.energy()),
            }))
        }
        Cmd::Pushforward { input, map } => {
            let a = read_dipoly(&input)?;
            let f = match read_doc(&map)? {
                Document::Map(f) => f,
                _ => bail!(FilmError::Precondition(format!("{} is not a map", map.display()))),
            };
            let b = a.pushforward(&f)?;
            done(json!({
                "kind": "pushforward",
                "lip": f.lip().to_string(),
                "result": dipoly_to_json(&b),
                "energy_before": report::energy(&a.energy()),
                "energy_after": report::energy(&b.energy()),
            }))
        }
        Cmd::Deform { input, eps, seed, centers, tau, cmax, mesh_dir } => {
            let a = read_chain(&input)?.to_simplicial();
            let eps = rational_arg(&eps, "eps")?;
            let grid = covering_grid(&a, &eps)?;
            let cfg = DeformConfig { candidate_centers: centers, clearance: rational_arg(&tau, "tau")?, seed, c_max: cmax };
            let d = deform_chain(&a, &grid, &cfg)?;
            if let Some(dir) = &mesh_dir {
                dump(dir, "a", &Chain::Simplicial(a.clone()))?;
                dump(dir, "p", &Chain::Grid(d.p.clone()))?;
                dump(dir, "q", &Chain::Simplicial(d.q.clone()))?;
                dump(dir, "r", &Chain::Simplicial(d.r.clone()))?;
            }
            let bounded = d.constants.max() <= cmax;
            done(json!({
                "kind": "deform",
                "grid": grid_to_json(&grid),
                "result": report::deformation(&d),
                "constants_within_cmax": bounded,
            }))
        }
        Cmd::SpanCheck { input, curve, dirs } => {
            let a = read_dipoly(&input)?;
            let gamma = read_chain(&curve)?.to_simplicial();
            let r = spanning_check(&a, &gamma, &directions(dirs))?;
            done(json!({ "kind": "span-check", "result": report::spanning(&r) }))
        }
        Cmd::Plateau { curve, lambda, eps, method, dirs, seed, mesh_dir } => {
            let mut gamma = grid_chain(read_chain(&curve)?)?;
            if let Some(e) = eps {
                gamma = refine_curve(&gamma, &rational_arg(&e, "eps")?)?;
            }
            let lambda = lambda.map(|l| rational_arg(&l, "lambda")).transpose()?;
            let problem = PlateauProblem::new(gamma, lambda, directions(dirs))?;
            let method = match method {
                PlateauMethodArg::Exhaustive => SearchMethod::Exhaustive,
                PlateauMethodArg::Bnb => SearchMethod::Bnb,
                PlateauMethodArg::Local => SearchMethod::Local,
            };
            let cfg = PlateauConfig { method, seed, ..PlateauConfig::default() };
            let start = initial_cone_solution(&problem, &cfg.deform)?;
            let sol = minimize_weight(&problem, &cfg)?;
            let clamp = clamp_improvement(&sol.a, &problem)?;
            if let Some(dir) = &mesh_dir {
                fs::create_dir_all(dir)?;
                fs::write(dir.join("b.off"), to_off(sol.a.b())?)?;
                let g = Chain::Grid(problem.gamma().clone());
                fs::write(dir.join("curves.obj"), to_obj(&[("c", sol.a.c()), ("gamma", &g)])?)?;
            }
            Ok(Outcome {
                status: sol.status,
                report: json!({
                    "kind": "plateau",
                    "lambda": problem.lambda().to_string(),
                    "lambda_prime": problem.lambda_prime().to_string(),
                    "cone_start": report::cone_start(&start),
                    "solution": report::plateau(&sol),
                    "clamp": report::clamp(&clamp),
                }),
            })
        }
        Cmd::Restrict { input, region } => {
            let a = read_dipoly(&input)?;
            let x = match read_doc(&region)? {
                Document::Region(x) => x,
                _ => bail!(FilmError::Precondition(format!("{} is not a box", region.display()))),
            };
            let (r, m) = a.restrict(&x)?;
            done(json!({ "kind": "restrict", "result": dipoly_to_json(&r), "measures": report::measures(&m) }))
        }
        Cmd::NaturalNorm { input, r, radius } => {
            let p = grid_chain(read_chain(&input)?)?;
            let d = natural_norm_upper(&p, r, radius)?;
            let ok = d.verify(&p);
            done(json!({ "kind": "natural-norm", "result": report::natural(&d, ok) }))
        }
        Cmd::Diagnostics { input } => {
            let a = read_dipoly(&input)?;
            done(json!({ "kind": "diagnostics", "result": report::diagnostics(&diagnostics(&a)?) }))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<FilmError>() {
        Some(
            FilmError::Precondition(_)
            | FilmError::Dimension(_)
            | FilmError::Alignment(_)
            | FilmError::Schema { .. }
            | FilmError::Parse(_),
        ) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(cli.cmd).and_then(|o| {
        let text = to_pretty(&with_schema(o.report));
        match &cli.out {
            Some(p) => fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?,
            None => print!("{text}"),
        }
        Ok(o.status)
    });
    match result {
        Ok(Status::UpperBound) if cli.require_exact => {
            eprintln!("filmlab: solver stopped at an upper bound");
            ExitCode::from(3)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("filmlab: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
