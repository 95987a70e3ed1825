mod config;

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ietpwi::breaking::{breaking_sequence, theta_sequence, BreakingSequence, ThetaSeq};
use ietpwi::curve::{svg_polylines, SvgOptions};
use ietpwi::presets::{self, SelfSimilar};
use ietpwi::pwi::adapted_pwi;
use ietpwi::rauzy::{rauzy_class, rauzy_iterate, zorich_iterate};
use ietpwi::spectral::{
    genus, lyapunov_spectrum, refine_exact, sample_theta, stable_subspace, SampleOptions, ThetaSample,
};
use ietpwi::verify::{injectivity, run_suite, SuiteOptions};
use ietpwi::{IntMatrix, Permutation, TorusPoint, Trace64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde_json::{json, Value};

use config::RunConfig;

const DEFAULT_TRACE_LEVELS: usize = 1200;

#[derive(Parser)]
#[command(
    name = "ietpwi",
    version,
    about = "Interval exchanges, Rauzy induction and invariant curves of planar piecewise isometries"
)]
struct Cli {
    /// JSON file with defaults for any option; flags override it.
    #[arg(long, global = true)]
    config: Option<std::path::PathBuf>,
    /// Print machine-readable results only.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Rauzy induction trace as JSON lines.
    Induct(RunConfig),
    /// Zorich acceleration: block lengths, types and cocycle.
    Zorich(RunConfig),
    /// Rauzy class of the permutation as a DOT graph.
    RauzyGraph(RunConfig),
    /// Lyapunov exponents of the Zorich cocycle restricted to H.
    Lyapunov(RunConfig),
    /// Draw a rotation vector from the contracting subspace.
    SampleTheta(RunConfig),
    /// Build the breaking sequence and export curves as SVG and CSV.
    Curve(RunConfig),
    /// Orbit of a curve point under the adapted PWI.
    Pwi(RunConfig),
    /// Run every check; exit status 0 iff all pass.
    Verify(RunConfig),
}

type Res<T> = Result<T, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

struct Ctx {
    cfg: RunConfig,
    json: bool,
}

impl Ctx {
    fn emit(&self, text: &str) -> Res<()> {
        match &self.cfg.out {
            Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
            None => {
                let mut o = std::io::stdout().lock();
                o.write_all(text.as_bytes()).map_err(err)
            }
        }
    }

    fn emit_json(&self, v: &Value) -> Res<()> {
        self.emit(&(serde_json::to_string_pretty(v).map_err(err)? + "\n"))
    }

    /// Human-readable notes; silenced by `--json` and kept off stdout when
    /// stdout carries the result.
    fn note(&self, msg: &str) {
        if !self.json {
            eprintln!("{msg}");
        }
    }
}

enum Source {
    Lengths(Permutation, Vec<f64>),
    Periodic(SelfSimilar),
}

impl Source {
    fn resolve(cfg: &RunConfig) -> Res<Source> {
        if let Some(name) = &cfg.preset {
            let ss = match name.as_str() {
                "symmetric4" => presets::symmetric4(),
                "golden" => SelfSimilar::new("2 1".parse().map_err(err)?, "10").map_err(err)?,
                other => return Err(format!("unknown preset {other:?} (symmetric4, golden)")),
            };
            return Ok(Source::Periodic(ss));
        }
        let perm: Permutation = cfg.perm.as_deref().ok_or("give --perm or --preset")?.parse().map_err(err)?;
        let lambda = match (&cfg.lambda, cfg.random_lambda.unwrap_or(false)) {
            (Some(l), _) => l.clone(),
            (None, true) => {
                let mut r = ChaCha8Rng::seed_from_u64(cfg.seed());
                let e: Vec<f64> = (0..perm.d()).map(|_| r.sample::<f64, _>(Exp1)).collect();
                let s: f64 = e.iter().sum();
                e.into_iter().map(|x| x / s).collect()
            }
            (None, false) => return Err("give --lambda, --random-lambda or --preset".into()),
        };
        if lambda.len() != perm.d() {
            return Err(format!("{} lengths for {} letters", lambda.len(), perm.d()));
        }
        Ok(Source::Lengths(perm, lambda))
    }

    fn perm(&self) -> &Permutation {
        match self {
            Source::Lengths(p, _) => p,
            Source::Periodic(ss) => &ss.perm,
        }
    }

    fn lambda(&self) -> &[f64] {
        match self {
            Source::Lengths(_, l) => l,
            Source::Periodic(ss) => &ss.lambda,
        }
    }

    /// Self-inducing inputs are followed exactly; others by plain induction,
    /// which stops early on a tie.
    fn trace(&self, n: usize) -> Res<Trace64> {
        match self {
            Source::Lengths(p, l) => rauzy_iterate(l, p, n).map_err(err),
            Source::Periodic(ss) => ss.trace(n).map_err(err),
        }
    }
}

fn cmd_induct(ctx: &Ctx) -> Res<bool> {
    let src = Source::resolve(&ctx.cfg)?;
    let steps = ctx.cfg.steps.unwrap_or(10);
    let tr = src.trace(steps)?;
    let d = tr.d();
    let mut b = IntMatrix::identity(d);
    let mut out = String::new();
    let line = |n: usize, step: Option<&ietpwi::rauzy::InductionStep>, b: &IntMatrix| {
        json!({
            "n": n,
            "type": step.map(|s| s.eps),
            "winner": step.map(|s| ietpwi::perm::symbol_name(s.winner)),
            "loser": step.map(|s| ietpwi::perm::symbol_name(s.loser)),
            "lambda": tr.lambda(n),
            "perm": tr.perm(n),
            "cocycle": b.to_json(),
        })
        .to_string()
    };
    out.push_str(&line(0, None, &b));
    out.push('\n');
    for (n, s) in tr.steps.iter().enumerate() {
        b.add_row(s.loser, s.winner);
        out.push_str(&line(n + 1, Some(s), &b));
        out.push('\n');
    }
    ctx.emit(&out)?;
    match &tr.stopped {
        Some(e) => Err(e.to_string()),
        None => {
            ctx.note(&format!("{} steps, word {}", tr.len(), tr.type_word()));
            Ok(true)
        }
    }
}

fn cmd_zorich(ctx: &Ctx) -> Res<bool> {
    let src = Source::resolve(&ctx.cfg)?;
    let m = ctx.cfg.steps.unwrap_or(10);
    let z = zorich_iterate(src.lambda(), src.perm(), m).map_err(err)?;
    let v = json!({
        "zorich_steps": z.blocks.len(),
        "rauzy_steps": z.partial_sum(z.blocks.len()),
        "acceleration_times": z.acceleration_times(),
        "types": z.blocks.iter().map(|b| b.eps).collect::<Vec<_>>(),
        "cocycle": z.cocycle(z.blocks.len()).to_json(),
        "stopped": z.rauzy.stopped.as_ref().map(|e| e.to_string()),
    });
    ctx.emit_json(&v)?;
    Ok(true)
}

fn cmd_rauzy_graph(ctx: &Ctx) -> Res<bool> {
    let perm: Permutation = match &ctx.cfg.preset {
        Some(_) => Source::resolve(&ctx.cfg)?.perm().clone(),
        None => ctx.cfg.perm.as_deref().ok_or("give --perm")?.parse().map_err(err)?,
    };
    let g = rauzy_class(&perm).map_err(err)?;
    ctx.emit(&g.to_dot())?;
    ctx.note(&format!("{} vertices, genus {}", g.len(), genus(&perm).map_err(err)?));
    Ok(true)
}

fn cmd_lyapunov(ctx: &Ctx) -> Res<bool> {
    let src = Source::resolve(&ctx.cfg)?;
    let m = ctx.cfg.steps.unwrap_or(100_000);
    let est = lyapunov_spectrum(src.lambda(), src.perm(), m).map_err(err)?;
    let mut v = serde_json::to_value(&est).map_err(err)?;
    v["symmetry_defect"] = json!(est.symmetry_defect());
    v["gap_significance"] = json!(est.gap_significance());
    ctx.emit_json(&v)?;
    Ok(true)
}

/// Trace deep enough for frames and rotation vectors.
fn deep_trace(ctx: &Ctx, src: &Source) -> Res<Trace64> {
    let tr = src.trace(ctx.cfg.trace_levels.unwrap_or(DEFAULT_TRACE_LEVELS))?;
    if let Some(e) = &tr.stopped {
        ctx.note(&format!("induction stopped after {} steps: {e}", tr.len()));
    }
    Ok(tr)
}

fn sample(ctx: &Ctx, src: &Source, tr: &Trace64, delta: f64) -> Res<ThetaSample> {
    let g = genus(src.perm()).map_err(err)?;
    let mut frame = stable_subspace(tr, g).map_err(err)?;
    frame.exact = Some(refine_exact(tr, g).map_err(err)?);
    sample_theta(&frame, tr, delta, ctx.cfg.seed(), &SampleOptions::default()).map_err(err)
}

fn cmd_sample_theta(ctx: &Ctx) -> Res<bool> {
    let src = Source::resolve(&ctx.cfg)?;
    let tr = deep_trace(ctx, &src)?;
    let s = sample(ctx, &src, &tr, ctx.cfg.delta.unwrap_or(0.5))?;
    ctx.emit_json(&serde_json::to_value(&s).map_err(err)?)?;
    Ok(true)
}

struct Built {
    trace: Trace64,
    thetas: ThetaSeq,
    bs: BreakingSequence<f64>,
    delta: Option<f64>,
    kind: &'static str,
}

/// Breaking sequence to `levels` for an explicit, random or sampled
/// rotation vector. Sampling halves delta from 0.5 until the last curve is
/// injective unless delta is given.
fn build(ctx: &Ctx, levels: usize) -> Res<Built> {
    let cfg = &ctx.cfg;
    let src = Source::resolve(cfg)?;
    let trace = deep_trace(ctx, &src)?;
    let n_theta = trace.len();
    let point = |p: &TorusPoint| theta_sequence(&trace, p, n_theta);
    let finish = |thetas: ThetaSeq, delta, kind| -> Res<Built> {
        let bs = breaking_sequence(&trace, &thetas, levels).map_err(err)?;
        Ok(Built { trace: trace.clone(), thetas, bs, delta, kind })
    };
    if let Some(t) = &cfg.theta {
        if t.len() != trace.d() {
            return Err(format!("{} angles for {} letters", t.len(), trace.d()));
        }
        return finish(point(&TorusPoint::from_radians(t)), None, "given");
    }
    if cfg.random_theta.unwrap_or(false) {
        let mut r = ChaCha8Rng::seed_from_u64(cfg.seed());
        let t: Vec<f64> = (0..trace.d()).map(|_| r.random_range(0.0..std::f64::consts::TAU)).collect();
        return finish(point(&TorusPoint::from_radians(&t)), None, "random");
    }
    let mut delta = cfg.delta.unwrap_or(0.5);
    loop {
        let s = sample(ctx, &src, &trace, delta)?;
        let thetas = point(&s.point);
        let bs = breaking_sequence(&trace, &thetas, levels).map_err(err)?;
        if cfg.delta.is_some() || injectivity(bs.curve(levels)).0 {
            return Ok(Built { trace: trace.clone(), thetas, bs, delta: Some(delta), kind: "sampled" });
        }
        ctx.note(&format!("delta {delta}: curve not injective, halving"));
        delta /= 2.0;
        if delta < 1e-6 {
            return Err("no injective curve down to delta 1e-6".into());
        }
    }
}

const PALETTE: [&str; 6] = ["#1f4e79", "#c55a11", "#548235", "#7030a0", "#bf9000", "#2e75b6"];

fn cmd_curve(ctx: &Ctx) -> Res<bool> {
    let n = ctx.cfg.levels.unwrap_or(25);
    let b = build(ctx, n)?;
    let mut shown: Vec<usize> = ctx.cfg.show_levels.clone().unwrap_or_default();
    shown.retain(|&k| k < n);
    shown.push(n);
    let curves: Vec<_> = shown.iter().enumerate().map(|(i, &k)| (b.bs.curve(k), PALETTE[i % PALETTE.len()])).collect();
    if let Some(p) = &ctx.cfg.svg {
        write_file(p, &svg_polylines(&curves, &SvgOptions::default()))?;
    }
    if let Some(p) = &ctx.cfg.csv {
        let mut s = String::from("level,x,re,im\n");
        for &k in &shown {
            for line in b.bs.curve(k).to_csv().lines().skip(1) {
                s.push_str(&format!("{k},{line}\n"));
            }
        }
        write_file(p, &s)?;
    }
    let last = b.bs.curve(n);
    let v = json!({
        "levels": n,
        "segments": last.segments(),
        "injective": injectivity(last).0,
        "theta": b.thetas.entries[0],
        "theta_kind": b.kind,
        "delta": b.delta,
        "svg": ctx.cfg.svg,
        "csv": ctx.cfg.csv,
    });
    if ctx.json || ctx.cfg.out.is_some() {
        ctx.emit_json(&v)?;
    } else {
        println!("level {n}: {} segments, injective {}", last.segments(), v["injective"]);
        println!("theta = {:?}", b.thetas.entries[0]);
    }
    Ok(true)
}

fn write_file(p: &Path, text: &str) -> Res<()> {
    std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display()))
}

fn cmd_pwi(ctx: &Ctx) -> Res<bool> {
    let n = ctx.cfg.levels.unwrap_or(50);
    let b = build(ctx, n)?;
    let f = b.trace.iet(0);
    let gamma = b.bs.curve(n);
    let mut pwi = adapted_pwi(gamma, &f, &b.thetas.entries[0]).map_err(err)?;
    pwi.tol = ctx.cfg.atom_tol.unwrap_or(1e-6) * f.total();
    let x0 = ctx.cfg.x0.unwrap_or(0.25 * f.total());
    let orbit = pwi.iterate(gamma.eval(x0), ctx.cfg.iterations.unwrap_or(100)).map_err(err)?;
    if let Some(p) = &ctx.cfg.csv {
        write_file(p, &orbit.to_csv())?;
    }
    let mut x = x0;
    let mut iet_itinerary = String::new();
    for _ in 0..orbit.atoms.len() {
        iet_itinerary.push_str(&ietpwi::perm::symbol_name(f.symbol_at(&x).map_err(err)?));
        x = f.apply(&x).map_err(err)?;
    }
    if ctx.json {
        let mut v = pwi.to_json();
        v["itinerary"] = json!(orbit.itinerary());
        v["iet_itinerary"] = json!(iet_itinerary);
        ctx.emit_json(&v)?;
    } else if ctx.cfg.csv.is_none() {
        ctx.emit(&orbit.to_csv())?;
    } else {
        println!("itinerary {}", orbit.itinerary());
        println!("matches IET itinerary: {}", orbit.itinerary() == iet_itinerary);
    }
    Ok(true)
}

fn cmd_verify(ctx: &Ctx) -> Res<bool> {
    let cfg = &ctx.cfg;
    let n = cfg.levels.unwrap_or(25);
    let b = build(ctx, n)?;
    let defaults = SuiteOptions::default();
    let opts = SuiteOptions {
        qe_levels: cfg.qe_levels.unwrap_or(defaults.qe_levels),
        qe_samples: cfg.qe_samples.unwrap_or(defaults.qe_samples),
        embed_samples: cfg.embed_samples.unwrap_or(defaults.embed_samples),
        seed: cfg.seed(),
        nontrivial: cfg.nontrivial.unwrap_or(false),
        cut_depth: cfg.cut_depth.unwrap_or(defaults.cut_depth),
        tol_nontrivial: cfg.tol_nontrivial.unwrap_or(defaults.tol_nontrivial),
    };
    let rep = run_suite(&b.bs, &opts).map_err(err)?;
    let pass = rep.all_pass();
    if ctx.json || cfg.out.is_some() {
        let checks: Value = serde_json::from_str(&rep.to_json()).map_err(err)?;
        ctx.emit_json(&json!({
            "all_pass": pass,
            "levels": n,
            "theta": b.thetas.entries[0],
            "theta_kind": b.kind,
            "delta": b.delta,
            "checks": checks,
        }))?;
    }
    if !ctx.json {
        for c in rep.failures().take(20) {
            eprintln!("FAIL {} defect {:.3e} > tol {:.3e} (n {:?}, m {:?})", c.check, c.defect, c.tol, c.n, c.m);
        }
        let summary = format!("{} checks, {} failed, theta {}", rep.checks.len(), rep.failures().count(), b.kind);
        if cfg.out.is_some() {
            eprintln!("{summary}");
        } else {
            println!("{summary}");
        }
    }
    Ok(pass)
}

fn run(cli: Cli) -> Res<bool> {
    let (cmd, flags) = match cli.cmd {
        Cmd::Induct(c) => ("induct", c),
        Cmd::Zorich(c) => ("zorich", c),
        Cmd::RauzyGraph(c) => ("rauzy-graph", c),
        Cmd::Lyapunov(c) => ("lyapunov", c),
        Cmd::SampleTheta(c) => ("sample-theta", c),
        Cmd::Curve(c) => ("curve", c),
        Cmd::Pwi(c) => ("pwi", c),
        Cmd::Verify(c) => ("verify", c),
    };
    let base = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let ctx = Ctx { cfg: base.overridden_by(flags), json: cli.json };
    match cmd {
        "induct" => cmd_induct(&ctx),
        "zorich" => cmd_zorich(&ctx),
        "rauzy-graph" => cmd_rauzy_graph(&ctx),
        "lyapunov" => cmd_lyapunov(&ctx),
        "sample-theta" => cmd_sample_theta(&ctx),
        "curve" => cmd_curve(&ctx),
        "pwi" => cmd_pwi(&ctx),
        _ => cmd_verify(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("IETPWI_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
