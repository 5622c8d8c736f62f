//! One function per subcommand. Each resolves its options against the
//! config file, calls into the library and renders an artifact.

use std::io::Write;

use clap::Args;
use heisenspec::conventions::{adjudicate, ConventionsLedger, PrefactorStatus};
use heisenspec::levi::{condition_x, condition_xpq, condition_y, GeometryParams};
use heisenspec::mehler::{heat_kernel_fs, HeatQuery};
use heisenspec::nil::{run_nilcheck, NilcheckConfig};
use heisenspec::plancherel::{heat_value_at_origin, ModelOperatorSpec};
use heisenspec::special::factorial;
use heisenspec::weyl::{alpha_record, beta_record, gamma_record, gover_graham_constant, nu, sublaplacian_weyl, ParamValue, VolumeConvention, WeylRecord};
use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::config::positive;
use crate::output::{emit_record, emit_rows, record, Format};
use crate::{emit_table, CliError, Command, Context, Floats, Outcome, Sizes, TableRow};

type CmdResult = Result<Outcome, CliError>;

fn ok(bytes: Vec<u8>) -> CmdResult {
    Ok(Outcome { bytes, error: None })
}

fn object(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => Map::new(),
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Output(e.to_string()))
}

/// Fails when an estimated relative error exceeds the requested tolerance.
fn check_tolerance(rel_err: f64, rel_tol: f64, what: &str) -> Result<(), CliError> {
    if rel_err <= rel_tol {
        Ok(())
    } else {
        Err(CliError::Tolerance(format!(
            "{what}: estimated relative error {rel_err:.3e} exceeds rel_tol {rel_tol:.3e}"
        )))
    }
}

pub fn dispatch(cmd: &Command, ctx: &Context, stderr: &mut dyn Write) -> CmdResult {
    match cmd {
        Command::Conditions(a) => conditions(a, ctx),
        Command::Mehler(a) => mehler(a, ctx),
        Command::Nu(a) => nu_cmd(a, ctx),
        Command::WeylTable(a) => weyl_table(a, ctx),
        Command::GgConstant(a) => gg_constant(a, ctx),
        Command::Nilcheck(a) => nilcheck(a, ctx, stderr),
        Command::Conventions => conventions(ctx),
    }
}

#[derive(Debug, Args)]
pub struct ConditionsArgs {
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of negative Levi eigenvalues.
    #[arg(long)]
    pub kappa: Option<usize>,
    /// Rank of the Levi form (defaults to n).
    #[arg(long)]
    pub r: Option<usize>,
    /// Rank of the horizontal bundle (defaults to 2n).
    #[arg(long)]
    pub d: Option<usize>,
    /// Form degree for Y(q), and with --p for X(p,q).
    #[arg(long)]
    pub q: Option<usize>,
    /// Form degree for X(k).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
}

fn conditions(a: &ConditionsArgs, ctx: &Context) -> CmdResult {
    let f = &ctx.file;
    let n = f.require(a.n, "n")?;
    let kappa = f.resolve_or(a.kappa, "kappa", 0)?;
    let r = f.resolve_or(a.r, "r", n)?;
    let d = f.resolve_or(a.d, "d", 2 * n)?;
    let q = f.resolve(a.q, "q")?;
    let k = f.resolve(a.k, "k")?;
    let p = f.resolve(a.p, "p")?;
    if q.is_none() && k.is_none() {
        return Err(CliError::Config("give --q for Y(q) or X(p,q), or --k for X(k)".into()));
    }
    let g = GeometryParams::with_fiber(n, kappa, r, d)?;
    let mut fields = Map::new();
    for (key, v) in [("n", n), ("kappa", kappa), ("r", r), ("d", d)] {
        fields.insert(key.into(), v.into());
    }
    let mut failing = Vec::new();
    if let Some(q) = q {
        let holds = condition_y(&g, q)?;
        let band = g.y_bands().into_iter().find(|&(lo, hi)| (lo..=hi).contains(&q));
        fields.insert("q".into(), q.into());
        fields.insert("Y".into(), holds.into());
        fields.insert("witness_band".into(), band.map_or(Value::Null, |(lo, hi)| format!("[{lo},{hi}]").into()));
        if !holds {
            failing.push(format!("Y({q})"));
        }
        if let Some(p) = p {
            let holds = condition_xpq(&g, p, q)?;
            fields.insert("p".into(), p.into());
            fields.insert("X_pq".into(), holds.into());
            if !holds {
                failing.push(format!("X({p},{q})"));
            }
        }
    } else if p.is_some() {
        return Err(CliError::Config("--p needs --q".into()));
    }
    if let Some(k) = k {
        let holds = condition_x(d, r, k)?;
        fields.insert("k".into(), k.into());
        fields.insert("X".into(), holds.into());
        if !holds {
            failing.push(format!("X({k})"));
        }
    }
    let hash = ctx.ledger()?.hash();
    let bytes = emit_record(&record("conditions", &hash, fields), ctx.format)?;
    let error = (!failing.is_empty()).then(|| CliError::ConditionFails(format!("condition {} fails", failing.join(", "))));
    Ok(Outcome { bytes, error })
}

#[derive(Debug, Args)]
pub struct MehlerArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    /// Imaginary part of mu.
    #[arg(long, allow_hyphen_values = true)]
    pub mu_im: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<f64>,
    /// Comma-separated x' of length 2n (defaults to 0).
    #[arg(long, allow_hyphen_values = true)]
    pub xprime: Option<Floats>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
}

fn mehler(a: &MehlerArgs, ctx: &Context) -> CmdResult {
    let f = &ctx.file;
    let n = f.require(a.n, "n")?;
    let mu = Complex64::new(f.resolve_or(a.mu, "mu", 0.0)?, f.resolve_or(a.mu_im, "mu_im", 0.0)?);
    let x0 = f.resolve_or(a.x0, "x0", 0.0)?;
    let xprime = f.resolve(a.xprime.clone(), "xprime")?.map_or_else(|| vec![0.0; 2 * n], |l| l.0);
    let t = f.resolve_or(a.t, "t", 1.0)?;
    let rel_tol = positive(f.resolve_or(a.rel_tol, "rel_tol", 1e-8)?, "rel_tol")?;
    let v = heat_kernel_fs(&HeatQuery::new(n, mu, x0, xprime.clone(), t)?)?;
    let rel = v.error / v.value.norm().max(f64::MIN_POSITIVE);
    check_tolerance(rel, rel_tol, "heat kernel")?;
    let fields = object(json!({
        "n": n, "mu": mu.re, "mu_im": mu.im, "x0": x0, "xprime": xprime, "t": t,
        "k": v.value.re, "k_im": v.value.im, "error": v.error, "panels": v.panels,
    }));
    ok(emit_record(&record("mehler", &ctx.ledger()?.hash(), fields), ctx.format)?)
}

#[derive(Debug, Args)]
pub struct NuArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    /// Also evaluate through the heat kernel and the Plancherel sum.
    #[arg(long)]
    pub routes: Option<bool>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
}

fn nu_cmd(a: &NuArgs, ctx: &Context) -> CmdResult {
    let f = &ctx.file;
    let n = f.require(a.n, "n")?;
    let mu = f.resolve_or(a.mu, "mu", 0.0)?;
    let rel_tol = positive(f.resolve_or(a.rel_tol, "rel_tol", 1e-10)?, "rel_tol")?;
    let v = nu(n, mu)?;
    check_tolerance(v.rel_err, rel_tol, "nu")?;
    let mut fields = object(json!({ "n": n, "mu": mu, "nu": v.value, "rel_err": v.rel_err }));
    if f.resolve_or(a.routes, "routes", false)? {
        let fact = factorial(n as u32 + 1);
        let mehler = heat_kernel_fs(&HeatQuery::origin(n, Complex64::new(mu, 0.0), 1.0)?)?;
        let planch = heat_value_at_origin(&ModelOperatorSpec::real(n, &[mu])?, 1.0)?;
        fields.insert("nu_mehler".into(), (mehler.value.re / fact).into());
        fields.insert("nu_plancherel".into(), (planch.value.re / fact).into());
    }
    ok(emit_record(&record("nu", &ctx.ledger()?.hash(), fields), ctx.format)?)
}

#[derive(Debug, Args)]
pub struct WeylTableArgs {
    /// alpha, beta, gamma, sublaplacian or gover-graham.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub kappa: Option<usize>,
    /// Values of mu for the sublaplacian family.
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<Floats>,
    #[arg(long)]
    pub rank_e: Option<usize>,
    #[arg(long)]
    pub volume: Option<f64>,
    /// pseudohermitian, contact or haar (sublaplacian family).
    #[arg(long)]
    pub volume_convention: Option<String>,
    /// Largest k for the gover-graham family.
    #[arg(long)]
    pub kmax: Option<usize>,
}

fn row(result: heisenspec::Result<WeylRecord>, family: &str, params: Vec<(String, ParamValue)>) -> Result<TableRow, CliError> {
    match result {
        Ok(r) => Ok(TableRow::Included(r)),
        Err(e) if e.is_precondition() => Ok(TableRow::Excluded {
            family: family.to_string(),
            params,
            reason: e.to_string(),
        }),
        Err(e) => Err(e.into()),
    }
}

fn int(name: &str, v: usize) -> (String, ParamValue) {
    (name.to_string(), ParamValue::Int(v as i64))
}

fn weyl_table(a: &WeylTableArgs, ctx: &Context) -> CmdResult {
    let f = &ctx.file;
    let family = f.require(a.family.clone(), "family")?;
    let n = f.require(a.n, "n")?;
    let ledger = ctx.ledger()?;
    let prefactor = ledger.prefactor.effective();
    let mut rows = Vec::new();
    match family.as_str() {
        "alpha" | "beta" => {
            let kappa = f.resolve_or(a.kappa, "kappa", 0)?;
            for p in 0..=n {
                for q in 0..=n {
                    let params = vec![int("n", n), int("kappa", kappa), int("p", p), int("q", q)];
                    let r = if family == "alpha" {
                        alpha_record(n, kappa, p, q, prefactor)
                    } else {
                        beta_record(n, kappa, p, q, prefactor)
                    };
                    rows.push(row(r, &family, params)?);
                }
            }
        }
        "gamma" => {
            for k in 0..=2 * n {
                rows.push(row(gamma_record(n, k, prefactor), "gamma", vec![int("n", n), int("k", k)])?);
            }
        }
        "sublaplacian" => {
            let mus = f.resolve(a.mu.clone(), "mu")?.map_or_else(|| vec![0.0], |l| l.0);
            let rank_e = f.resolve_or(a.rank_e, "rank_e", 1)?;
            let volume = f.resolve_or(a.volume, "volume", 1.0)?;
            let convention: VolumeConvention = f
                .resolve_or(a.volume_convention.clone(), "volume_convention", "pseudohermitian".to_string())?
                .parse()?;
            for mu in mus {
                let params = vec![
                    int("n", n),
                    ("mu".into(), ParamValue::Real(mu)),
                    int("rank_e", rank_e),
                    ("volume".into(), ParamValue::Real(volume)),
                ];
                let r = sublaplacian_weyl(n, mu, rank_e, volume, convention).map(|w| {
                    let mut rec = w.record;
                    if let Some(c) = w.candidates.iter().find(|c| c.prefactor == Some(prefactor)) {
                        rec.constant = c.constant;
                        rec.provenance.retain(|p| !p.starts_with("prefactor"));
                        rec.provenance.push(format!("prefactor {}", prefactor.label()));
                    }
                    rec
                });
                rows.push(row(r, "sublaplacian", params)?);
            }
        }
        "gover-graham" => {
            let kmax = f.resolve_or(a.kmax, "kmax", n + 2)?;
            for k in 1..=kmax {
                let r = gover_graham_constant(n, k).map(|g| {
                    let mut rec = g.record;
                    rec.constant = prefactor.from_lemma(rec.constant * 4f64.powi(n as i32), n);
                    rec.provenance.retain(|p| !p.starts_with("prefactor"));
                    rec.provenance.push(format!("prefactor {}", prefactor.label()));
                    rec
                });
                rows.push(row(r, "gover_graham", vec![int("n", n), int("k", k)])?);
            }
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown family '{other}' (expected alpha, beta, gamma, sublaplacian or gover-graham)"
            )))
        }
    }
    ok(emit_table(&rows, ctx.format, &ledger.hash())?)
}

#[derive(Debug, Args)]
pub struct GgArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
}

fn gg_constant(a: &GgArgs, ctx: &Context) -> CmdResult {
    let f = &ctx.file;
    let n = f.require(a.n, "n")?;
    let k = f.require(a.k, "k")?;
    let g = gover_graham_constant(n, k)?;
    let fields = object(json!({
        "n": n, "k": k,
        "constant": g.record.constant,
        "exponent": g.record.exponent,
        "factors": g.factors,
        "heat_value": g.heat_value,
        "heat_error": g.heat_error,
        "alt_gamma": g.alt_gamma,
        "printed": g.printed,
        "volume_convention": g.record.volume_convention.to_string(),
        "provenance": g.record.provenance,
    }));
    ok(emit_record(&record("gg-constant", &ctx.ledger()?.hash(), fields), ctx.format)?)
}

#[derive(Debug, Args)]
pub struct NilcheckArgs {
    /// Grid sizes per axis, e.g. 24,32,48.
    #[arg(long)]
    pub grids: Option<Sizes>,
    /// Use -(X1^2+X2^2)/2 (true) or -(X1^2+X2^2) (false).
    #[arg(long)]
    pub half_factor: Option<bool>,
    #[arg(long)]
    pub window_lo: Option<f64>,
    #[arg(long)]
    pub window_hi: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Residual tolerance of the eigensolver.
    #[arg(long)]
    pub eig_tol: Option<f64>,
    /// Leave the ledger file untouched.
    #[arg(long)]
    pub dry_run: Option<bool>,
}

fn nilcheck(a: &NilcheckArgs, ctx: &Context, stderr: &mut dyn Write) -> CmdResult {
    let f = &ctx.file;
    let mut cfg = NilcheckConfig::default();
    if let Some(g) = f.resolve(a.grids.clone(), "grids")? {
        cfg.grids = g.0;
    }
    cfg.half_factor = f.resolve_or(a.half_factor, "half_factor", cfg.half_factor)?;
    cfg.seed = f.resolve_or(a.seed, "seed", cfg.seed)?;
    cfg.solver.tol = positive(f.resolve_or(a.eig_tol, "eig_tol", cfg.solver.tol)?, "eig_tol")?;
    match (f.resolve(a.window_lo, "window_lo")?, f.resolve(a.window_hi, "window_hi")?) {
        (Some(lo), Some(hi)) => cfg.window = Some((lo, hi)),
        (None, None) => {}
        _ => return Err(CliError::Config("give both --window-lo and --window-hi".into())),
    }
    let dry_run = f.resolve_or(a.dry_run, "dry_run", false)?;
    let report = run_nilcheck(&cfg)?;
    let status = adjudicate(&report)?;
    let mut ledger = ctx.ledger()?;
    ledger.prefactor = status.clone();
    if !dry_run {
        std::fs::write(&ctx.ledger_path, ledger.to_json()?)?;
        let _ = writeln!(stderr, "ledger written to {}", ctx.ledger_path.display());
    }
    let hash = ledger.hash();
    let verdict = match &status {
        PrefactorStatus::Adjudicated { chosen, .. } => format!("adjudicated: {}", chosen.label()),
        PrefactorStatus::Inconclusive { .. } => "inconclusive".into(),
        PrefactorStatus::Unadjudicated => "unadjudicated".into(),
    };
    match ctx.format {
        Format::Json => {
            let fields = object(json!({
                "verdict": verdict,
                "prefactor": to_value(&status)?,
                "report": to_value(&report)?,
                "ledger_path": ctx.ledger_path.display().to_string(),
                "ledger_written": !dry_run,
            }));
            ok(emit_record(&record("nilcheck", &hash, fields), Format::Json)?)
        }
        Format::Csv => {
            let header: Vec<String> = ["n", "eigenvalues", "cutoff", "smallest", "worst_residual", "fit_constant", "fit_exponent", "extrapolated", "verdict"]
                .map(String::from)
                .to_vec();
            let rows: Vec<Vec<Value>> = report
                .grids
                .iter()
                .map(|g| {
                    vec![
                        g.n.into(),
                        g.eigenvalue_count.into(),
                        g.cutoff.into(),
                        g.smallest_eigenvalue.into(),
                        g.worst_residual.into(),
                        g.fit.constant.into(),
                        g.fit.exponent.into(),
                        report.half_operator_constant.into(),
                        verdict.clone().into(),
                    ]
                })
                .collect();
            ok(emit_rows("nilcheck", &hash, &header, &rows, Format::Csv)?)
        }
    }
}

fn conventions(ctx: &Context) -> CmdResult {
    let ledger: ConventionsLedger = ctx.ledger()?;
    let hash = ledger.hash();
    match ctx.format {
        Format::Json => {
            let mut fields = Map::new();
            fields.insert("ledger".into(), to_value(&ledger)?);
            fields.insert("source".into(), ledger_source(ctx).into());
            ok(emit_record(&record("conventions", &hash, fields), Format::Json)?)
        }
        Format::Csv => {
            let flat = object(to_value(&ledger)?);
            let rows: Vec<Vec<Value>> = flat
                .into_iter()
                .map(|(k, v)| vec![Value::from(k), v])
                .collect();
            ok(emit_rows("conventions", &hash, &["key".into(), "value".into()], &rows, Format::Csv)?)
        }
    }
}

fn ledger_source(ctx: &Context) -> String {
    if ctx.ledger_path.exists() {
        ctx.ledger_path.display().to_string()
    } else {
        "built-in".into()
    }
}
