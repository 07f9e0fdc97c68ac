//! Command-line front end. One command per process; every report embeds
//! the resolved configuration, and identical configuration plus seed gives
//! byte-identical output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::config::{self, FileConfig, Resolved};
use crate::parameters::ParameterSystem;
use crate::plancherel::Plancherel;
use crate::root_system::{Coweight, RootSystem};
use crate::spherical::{Scaling, Spherical, TorusCharacter};
use crate::walk::{Walk, WalkSpec};
use crate::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "buildingwalk",
    version,
    about = "Spherical functions, Plancherel quadrature, and isotropic random walks on affine building vertex lattices"
)]
struct Cli {
    /// Flat key-value config file; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Root system family: A, B, C, D, G, BC.
    #[arg(long, global = true)]
    family: Option<String>,

    #[arg(long, global = true)]
    rank: Option<usize>,

    /// Parameters, one per diagram node (comma separated); a single value
    /// is broadcast to every node.
    #[arg(long, global = true)]
    q: Option<String>,

    /// One-step law term(s) `coweight[:weight]`, `;`-separated; repeatable.
    /// Coweights are coordinates `c1,...,cn` or `λJ`/`lJ` shorthand.
    #[arg(long = "walk", global = true)]
    walk: Vec<String>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for simulation (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output format: json or csv (each command has a natural default).
    #[arg(long, global = true)]
    format: Option<String>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Summarize the root system and parameter data.
    Describe,
    /// Evaluate P_λ at a character, or at the identity when --u is absent.
    Spherical {
        #[arg(long)]
        lambda: String,
        /// Per-axis values: n reals or 2n numbers read as re,im pairs.
        #[arg(long)]
        u: Option<String>,
    },
    /// Dump the coefficient table of P_λ in all three scalings.
    Coeffs {
        #[arg(long)]
        lambda: String,
    },
    /// Orthogonality table of the Plancherel measure, or a k-step
    /// cross-check against the radial DP when --k is given.
    Plancherel {
        /// Largest coweight coordinate in the orthogonality table.
        #[arg(long)]
        max_coord: Option<i64>,
        #[arg(long)]
        k: Option<u32>,
    },
    /// Exact versus asymptotic return probabilities for k = 1..kmax.
    Llt {
        #[arg(long)]
        kmax: Option<usize>,
        /// Target vertex type; defaults to the origin.
        #[arg(long)]
        lambda: Option<String>,
    },
    /// Walk moments: drift, covariance, and local-limit constants.
    Drift,
    /// Simulate the radial chain and test the normalized law against the
    /// predicted Gaussian.
    Clt {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        trajectories: Option<usize>,
    },
    /// Sample endpoints of the radial chain or of the lattice walk.
    Simulate {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        trajectories: Option<usize>,
        /// `radial` or `lattice`.
        #[arg(long)]
        mode: Option<String>,
    },
}

#[derive(Clone, Copy, PartialEq)]
enum Format {
    Json,
    Csv,
}

struct Ctx {
    rs: Arc<RootSystem>,
    ps: Arc<ParameterSystem>,
    sp: Arc<Spherical>,
    walk_terms: Vec<(Coweight, f64)>,
    seed: u64,
    format: Option<Format>,
    resolved: Resolved,
}

impl Ctx {
    fn walk(&self) -> Result<Walk> {
        if self.walk_terms.is_empty() {
            return Err(Error::Config(
                "this command needs a one-step law: pass --walk or walk.term lines".into(),
            ));
        }
        let mut map: BTreeMap<Coweight, f64> = BTreeMap::new();
        for (c, w) in &self.walk_terms {
            *map.entry(c.clone()).or_insert(0.0) += *w;
        }
        let spec = WalkSpec::new(&self.rs, map)?;
        Ok(Walk::new(Arc::clone(&self.sp), spec))
    }

    fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<String> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let threads = cli.threads.or_else(|| parse_from_file(&file, "threads"));
    let ctx = build_ctx(&cli, &file)?;
    match threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            pool.install(|| dispatch(&cli.cmd, &file, ctx))
        }
        None => dispatch(&cli.cmd, &file, ctx),
    }
}

fn parse_from_file<T: std::str::FromStr>(file: &FileConfig, key: &str) -> Option<T> {
    file.get(key).and_then(|v| v.parse().ok())
}

fn required_from_file<T: std::str::FromStr>(file: &FileConfig, key: &str) -> Result<T> {
    let raw = file
        .get(key)
        .ok_or_else(|| Error::Config(format!("missing `{key}` (flag or config file)")))?;
    raw.parse()
        .map_err(|_| Error::Config(format!("bad value `{raw}` for `{key}`")))
}

fn build_ctx(cli: &Cli, file: &FileConfig) -> Result<Ctx> {
    let family_str = match &cli.family {
        Some(f) => f.clone(),
        None => required_from_file(file, "family")?,
    };
    let family = config::parse_family(&family_str)?;
    let rank = match cli.rank {
        Some(r) => r,
        None => required_from_file(file, "rank")?,
    };
    let q_str: String = match &cli.q {
        Some(q) => q.clone(),
        None => required_from_file(file, "q")?,
    };
    let q_given: Vec<f64> = q_str
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad q value `{p}`")))
        })
        .collect::<Result<_>>()?;
    let rs = Arc::new(RootSystem::new(family, rank)?);
    let q = config::q_values(&rs, &q_given);
    let ps = Arc::new(ParameterSystem::new(Arc::clone(&rs), q.clone())?);
    let sp = Arc::new(Spherical::new(Arc::clone(&ps)));

    // CLI walk flags replace the file's terms entirely when present.
    let mut walk_terms = Vec::new();
    let term_strings: Vec<String> = if cli.walk.is_empty() {
        file.get_all("walk.term")
            .into_iter()
            .map(str::to_string)
            .collect()
    } else {
        cli.walk.clone()
    };
    for s in &term_strings {
        walk_terms.extend(config::parse_walk_terms(rank, s)?);
    }
    let seed = cli
        .seed
        .or_else(|| parse_from_file(file, "seed"))
        .unwrap_or(1);
    let format = match cli
        .format
        .clone()
        .or_else(|| parse_from_file(file, "format"))
        .as_deref()
    {
        None => None,
        Some("json") => Some(Format::Json),
        Some("csv") => Some(Format::Csv),
        Some(other) => {
            return Err(Error::Config(format!(
                "unknown format `{other}` (expected json or csv)"
            )))
        }
    };

    let mut resolved = Resolved::new();
    resolved.push("family", family);
    resolved.push("rank", rank);
    resolved.push_list("q", &q);
    for (c, w) in &walk_terms {
        resolved.push("walk.term", format!("{}:{w}", join_coords(c)));
    }
    resolved.push("seed", seed);
    Ok(Ctx {
        rs,
        ps,
        sp,
        walk_terms,
        seed,
        format,
        resolved,
    })
}

fn join_coords(c: &[i64]) -> String {
    c.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// f64 into JSON without the panic on non-finite values.
fn fnum(x: f64) -> Value {
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .unwrap_or_else(|| Value::String(x.to_string()))
}

fn fvec(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| fnum(x)).collect())
}

fn fmat(m: &[Vec<f64>]) -> Value {
    Value::Array(m.iter().map(|r| fvec(r)).collect())
}

fn ivec(v: &[i64]) -> Value {
    Value::Array(v.iter().map(|&x| json!(x)).collect())
}

fn render_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON serialization");
    s.push('\n');
    s
}

fn report(config: &Resolved, fields: Vec<(&str, Value)>) -> Value {
    let mut map = Map::new();
    map.insert("config".into(), config.json());
    for (k, v) in fields {
        map.insert(k.into(), v);
    }
    Value::Object(map)
}

fn dispatch(cmd: &Cmd, file: &FileConfig, mut ctx: Ctx) -> Result<String> {
    match cmd {
        Cmd::Describe => {
            ctx.resolved.push("command", "describe");
            describe(&ctx)
        }
        Cmd::Spherical { lambda, u } => {
            ctx.resolved.push("command", "spherical");
            spherical_cmd(&mut ctx, lambda, u.as_deref())
        }
        Cmd::Coeffs { lambda } => {
            ctx.resolved.push("command", "coeffs");
            coeffs_cmd(&mut ctx, lambda)
        }
        Cmd::Plancherel { max_coord, k } => {
            ctx.resolved.push("command", "plancherel");
            let mc = max_coord
                .or_else(|| parse_from_file(file, "max_coord"))
                .unwrap_or(2);
            let k = k.or_else(|| parse_from_file(file, "k"));
            plancherel_cmd(&mut ctx, mc, k)
        }
        Cmd::Llt { kmax, lambda } => {
            ctx.resolved.push("command", "llt");
            let kmax = kmax
                .or_else(|| parse_from_file(file, "kmax"))
                .unwrap_or(200);
            llt_cmd(&mut ctx, kmax, lambda.as_deref())
        }
        Cmd::Drift => {
            ctx.resolved.push("command", "drift");
            drift_cmd(&mut ctx)
        }
        Cmd::Clt { k, trajectories } => {
            ctx.resolved.push("command", "clt");
            let k = k.or_else(|| parse_from_file(file, "k")).unwrap_or(2000);
            let traj = trajectories
                .or_else(|| parse_from_file(file, "trajectories"))
                .unwrap_or(100_000);
            clt_cmd(&mut ctx, k, traj)
        }
        Cmd::Simulate {
            k,
            trajectories,
            mode,
        } => {
            ctx.resolved.push("command", "simulate");
            let k = k.or_else(|| parse_from_file(file, "k")).unwrap_or(100);
            let traj = trajectories
                .or_else(|| parse_from_file(file, "trajectories"))
                .unwrap_or(1000);
            let mode = mode
                .clone()
                .or_else(|| parse_from_file(file, "mode"))
                .unwrap_or_else(|| "radial".into());
            simulate_cmd(&mut ctx, k, traj, &mode)
        }
    }
}

fn describe(ctx: &Ctx) -> Result<String> {
    let rs = &ctx.rs;
    let ps = &ctx.ps;
    let taus: Vec<f64> = rs.r2_plus_indices().iter().map(|&i| ps.tau(i)).collect();
    let v = report(
        &ctx.resolved,
        vec![
            ("family", json!(rs.family().to_string())),
            ("rank", json!(rs.rank())),
            ("positive_roots", json!(rs.r2_plus_indices().len())),
            ("weyl_order", json!(rs.weyl()?.order())),
            ("quotient_order", json!(rs.quotient_characters().len())),
            ("q", fvec(ps.q_nodes())),
            ("tau_positive_roots", fvec(&taus)),
            ("poincare_w0_inv", fnum(ps.poincare_w0_inv()?)),
            ("r_weights", fvec(ps.r_weights())),
            ("exceptional", json!(ps.exceptional())),
        ],
    );
    Ok(render_json(&v))
}

fn spherical_cmd(ctx: &mut Ctx, lambda: &str, u: Option<&str>) -> Result<String> {
    let la = config::parse_coweight(ctx.rs.rank(), lambda)?;
    ctx.resolved.push("lambda", join_coords(&la));
    let co = ctx.sp.coefficients(&la)?;
    let mut fields = vec![
        ("lambda", ivec(&la)),
        ("p_at_one", fnum(co.p1)),
        ("n_lambda", fnum(ctx.ps.n_lambda(&la)?)),
    ];
    if let Some(us) = u {
        ctx.resolved.push("u", us);
        let (xi, theta) = config::parse_character(ctx.rs.rank(), us)?;
        let u = TorusCharacter { xi, theta };
        let val = co.eval(&u);
        fields.push(("value_re", fnum(val.re)));
        fields.push(("value_im", fnum(val.im)));
    }
    let v = report(&ctx.resolved, fields);
    Ok(render_json(&v))
}

fn coeffs_cmd(ctx: &mut Ctx, lambda: &str) -> Result<String> {
    let la = config::parse_coweight(ctx.rs.rank(), lambda)?;
    ctx.resolved.push("lambda", join_coords(&la));
    let co = ctx.sp.coefficients(&la)?;
    match ctx.format_or(Format::Json) {
        Format::Json => {
            let rows: Vec<Value> = co
                .support()
                .iter()
                .enumerate()
                .map(|(i, mu)| {
                    json!({
                        "mu": ivec(mu),
                        "raw": fnum(co.values(Scaling::Raw)[i]),
                        "r_scaled": fnum(co.values(Scaling::RScaled)[i]),
                        "r_inv_scaled": fnum(co.values(Scaling::RInvScaled)[i]),
                    })
                })
                .collect();
            let v = report(
                &ctx.resolved,
                vec![
                    ("lambda", ivec(&la)),
                    ("p_at_one", fnum(co.p1)),
                    ("n_lambda", fnum(ctx.ps.n_lambda(&la)?)),
                    ("coefficients", Value::Array(rows)),
                ],
            );
            Ok(render_json(&v))
        }
        Format::Csv => {
            let mut out = ctx.resolved.csv_comments();
            out.push_str("mu,raw,r_scaled,r_inv_scaled\n");
            for (i, mu) in co.support().iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    join_coords_space(mu),
                    co.values(Scaling::Raw)[i],
                    co.values(Scaling::RScaled)[i],
                    co.values(Scaling::RInvScaled)[i],
                );
            }
            Ok(out)
        }
    }
}

fn join_coords_space(c: &[i64]) -> String {
    c.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Dominant coweights with all coordinates in 0..=m, lexicographic.
fn dominant_box(rs: &RootSystem, m: i64) -> Vec<Coweight> {
    let n = rs.rank();
    let mut out = Vec::new();
    let mut cur = vec![0i64; n];
    'outer: loop {
        out.push(cur.clone());
        let mut d = n;
        loop {
            if d == 0 {
                break 'outer;
            }
            d -= 1;
            cur[d] += 1;
            if cur[d] <= m {
                break;
            }
            cur[d] = 0;
        }
    }
    out.sort();
    out
}

fn plancherel_cmd(ctx: &mut Ctx, max_coord: i64, k: Option<u32>) -> Result<String> {
    let pl = Plancherel::new(Arc::clone(&ctx.sp));
    if let Some(k) = k {
        // Cross-check the quadrature against the exact DP.
        ctx.resolved.push("k", k);
        let walk = ctx.walk()?;
        let dist = walk.radial_distribution(k as usize)?;
        let targets: Vec<Coweight> = dist.keys().cloned().collect();
        let step = walk.spec().terms().clone();
        let quad = pl.kstep_distribution(&step, k, &targets)?;
        let mut rows = Vec::new();
        let mut max_vertex_diff = 0.0f64;
        let mut max_sphere_diff = 0.0f64;
        for (t, qv) in targets.iter().zip(quad) {
            let n_l = ctx.ps.n_lambda(t)?;
            let sphere = qv * n_l;
            let dp = dist[t];
            max_vertex_diff = max_vertex_diff.max((qv - dp / n_l).abs());
            // Sphere masses with huge N_λ amplify float noise; compare
            // them only while the product stays resolvable.
            if n_l <= 1e12 {
                max_sphere_diff = max_sphere_diff.max((sphere - dp).abs());
            }
            rows.push(json!({
                "target": ivec(t),
                "dp": fnum(dp),
                "quadrature": fnum(sphere),
            }));
        }
        let v = report(
            &ctx.resolved,
            vec![
                ("k", json!(k)),
                ("rows", Value::Array(rows)),
                ("max_vertex_difference", fnum(max_vertex_diff)),
                ("max_sphere_difference", fnum(max_sphere_diff)),
            ],
        );
        return Ok(render_json(&v));
    }
    ctx.resolved.push("max_coord", max_coord);
    let lams = dominant_box(&ctx.rs, max_coord);
    let mut rows = Vec::new();
    let mut max_err = 0.0f64;
    for (i, la) in lams.iter().enumerate() {
        for mu in &lams[i..] {
            let got = pl.inner_product(la, mu)?;
            let expected = if la == mu {
                1.0 / ctx.ps.n_lambda(la)?
            } else {
                0.0
            };
            max_err = max_err.max((got - expected).abs());
            rows.push(json!({
                "lambda": ivec(la),
                "mu": ivec(mu),
                "value": fnum(got),
                "expected": fnum(expected),
            }));
        }
    }
    let v = report(
        &ctx.resolved,
        vec![
            ("rows", Value::Array(rows)),
            ("max_abs_error", fnum(max_err)),
        ],
    );
    Ok(render_json(&v))
}

fn llt_cmd(ctx: &mut Ctx, kmax: usize, lambda: Option<&str>) -> Result<String> {
    let walk = ctx.walk()?;
    let target = match lambda {
        Some(s) => config::parse_coweight(ctx.rs.rank(), s)?,
        None => vec![0i64; ctx.rs.rank()],
    };
    ctx.resolved.push("kmax", kmax);
    ctx.resolved.push("lambda", join_coords(&target));
    let n_target = ctx.ps.n_lambda(&target)?;
    let evolution = walk.radial_evolution(kmax)?;
    let mut rows: Vec<(usize, f64, f64)> = Vec::new();
    for (k, dist) in evolution.iter().enumerate().skip(1) {
        let exact = dist.get(&target).copied().unwrap_or(0.0) / n_target;
        let asym = walk.llt_asymptote(k as u64, &target)?;
        rows.push((k, exact, asym));
    }
    match ctx.format_or(Format::Csv) {
        Format::Csv => {
            let mut out = ctx.resolved.csv_comments();
            out.push_str("k,exact,asymptote,ratio\n");
            for (k, exact, asym) in rows {
                if asym != 0.0 {
                    let _ = writeln!(out, "{k},{exact},{asym},{}", exact / asym);
                } else {
                    let _ = writeln!(out, "{k},{exact},{asym},");
                }
            }
            Ok(out)
        }
        Format::Json => {
            let rows: Vec<Value> = rows
                .into_iter()
                .map(|(k, exact, asym)| {
                    let mut m = Map::new();
                    m.insert("k".into(), json!(k));
                    m.insert("exact".into(), fnum(exact));
                    m.insert("asymptote".into(), fnum(asym));
                    if asym != 0.0 {
                        m.insert("ratio".into(), fnum(exact / asym));
                    }
                    Value::Object(m)
                })
                .collect();
            let v = report(&ctx.resolved, vec![("rows", Value::Array(rows))]);
            Ok(render_json(&v))
        }
    }
}

fn drift_cmd(ctx: &mut Ctx) -> Result<String> {
    let walk = ctx.walk()?;
    let m = walk.moments()?;
    let lc = walk.llt_constants()?;
    let info = walk.period_info()?;
    let v = report(
        &ctx.resolved,
        vec![
            ("drift", fvec(&m.drift)),
            ("drift_reflected", fvec(&m.drift_reflected)),
            ("second_moment", fmat(&m.second_moment)),
            ("clt_covariance", fmat(&m.clt_covariance)),
            ("horocycle_mean", fvec(&m.horocycle_mean)),
            ("horocycle_cov", fmat(&m.horocycle_cov)),
            ("b_matrix", fmat(&m.b_matrix)),
            ("b_scalar", fnum(m.b_scalar)),
            ("b_residual", fnum(m.b_residual)),
            ("spectral_radius", fnum(m.spectral_radius)),
            ("k1", fnum(lc.k1)),
            ("k2", fnum(lc.k2)),
            ("k3", fnum(lc.k3)),
            ("k_product", fnum(lc.product)),
            ("exponent", fnum(lc.exponent)),
            ("j_quadrature", fnum(lc.j_quadrature)),
            (
                "j_closed_form",
                lc.j_closed_form.map(fnum).unwrap_or(Value::Null),
            ),
            ("residual_characters", json!(info.members.len())),
            ("period", json!(info.period)),
            ("irreducible_aperiodic", json!(info.irreducible_aperiodic)),
        ],
    );
    Ok(render_json(&v))
}

fn clt_cmd(ctx: &mut Ctx, k: usize, trajectories: usize) -> Result<String> {
    ctx.resolved.push("k", k);
    ctx.resolved.push("trajectories", trajectories);
    let walk = ctx.walk()?;
    let rep = walk.roe_clt_report(k, trajectories, ctx.seed)?;
    let v = report(
        &ctx.resolved,
        vec![
            ("steps", json!(rep.steps)),
            ("trajectories", json!(rep.trajectories)),
            ("drift", fvec(&rep.drift)),
            ("predicted_cov", fmat(&rep.predicted_cov)),
            ("predicted_corr", fmat(&rep.predicted_corr)),
            ("empirical_mean", fvec(&rep.empirical_mean)),
            ("empirical_cov", fmat(&rep.empirical_cov)),
            ("empirical_corr", fmat(&rep.empirical_corr)),
            ("max_mean_abs", fnum(rep.max_mean_abs)),
            ("max_var_rel_err", fnum(rep.max_var_rel_err)),
            ("max_corr_err", fnum(rep.max_corr_err)),
        ],
    );
    Ok(render_json(&v))
}

fn simulate_cmd(ctx: &mut Ctx, k: usize, trajectories: usize, mode: &str) -> Result<String> {
    ctx.resolved.push("k", k);
    ctx.resolved.push("trajectories", trajectories);
    ctx.resolved.push("mode", mode);
    let walk = ctx.walk()?;
    let ends = match mode {
        "radial" => walk.simulate_radial(k, trajectories, ctx.seed)?,
        "lattice" => walk.simulate_lattice(k, trajectories, ctx.seed)?,
        other => {
            return Err(Error::Config(format!(
                "unknown simulate mode `{other}` (expected radial or lattice)"
            )))
        }
    };
    let n = ctx.rs.rank();
    let mut mean = vec![0.0f64; n];
    for e in &ends {
        for j in 0..n {
            mean[j] += e[j] as f64;
        }
    }
    for v in mean.iter_mut() {
        *v /= ends.len() as f64;
    }
    match ctx.format_or(Format::Csv) {
        Format::Csv => {
            let mut out = ctx.resolved.csv_comments();
            let _ = writeln!(
                out,
                "# empirical_mean = {}",
                mean.iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            );
            let header: Vec<String> = (1..=n).map(|j| format!("c{j}")).collect();
            let _ = writeln!(out, "traj,{}", header.join(","));
            for (i, e) in ends.iter().enumerate() {
                let _ = writeln!(out, "{i},{}", join_coords(e));
            }
            Ok(out)
        }
        Format::Json => {
            let rows: Vec<Value> = ends.iter().map(|e| ivec(e)).collect();
            let v = report(
                &ctx.resolved,
                vec![
                    ("empirical_mean", fvec(&mean)),
                    ("endpoints", Value::Array(rows)),
                ],
            );
            Ok(render_json(&v))
        }
    }
}
