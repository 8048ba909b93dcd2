use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use caseparam::io::{load_csv, IngestError, LabelMode};
use caseparam::manifest::RunManifest;
use caseparam::report::{num, write_json, write_study, write_table};
use caseparam::simulate::{
    regression::delta_histogram,
    run_classification_study, run_quantile_study, run_regression_study, ClassMethod, ClassificationScenario,
    Contamination, ErrorDist, MetricKind, RegressionMethod, RegressionScenario, Separation, Sparsity,
};
use caseparam::asymptotics::{equivalence_curve, Dgp};
use caseparam_core::selection::{cp_score, cv_repeat, fold_assignment, gcv_score};
use caseparam_core::solvers::{
    fit_lasso, fit_least_squares, fit_logistic, fit_quantile, fit_svm, lambda_max, log_grid, SolverConfig, SvmVariant,
};
use caseparam_core::tuning::{
    c_q, lambda_from_bending_logistic, lambda_from_bending_svm, lambda_gamma_quantile, lambda_gamma_regression,
    robust_scale, TuningRule, DEFAULT_ALPHA, DEFAULT_REGRESSION_K,
};
use caseparam_core::{
    alternate_fit, equivalent_effective_fit, AlternationConfig, BetaPenalty, Dataset, Error, FitResult, GammaNorm,
    LossSpec, PenaltyConfig, Quantile,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "caseparam", version, about = "Penalized case-specific parameters for regression and classification")]
struct Cli {
    /// Worker threads for simulations and cross-validation.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one model and report coefficients, case parameters and the
    /// objective trace.
    Fit(FitArgs),
    /// Lasso or robust lasso path with C_p and GCV scores.
    Path(PathArgs),
    /// Repeated k-fold CV of two fitters with paired scores.
    Cv(CvArgs),
    /// Tuning constants implied by a rule on one dataset.
    Tune(FitArgs),
    /// Simulation studies.
    Simulate(SimArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum LossArg {
    Squared,
    Absdev,
    Check,
    Logistic,
    Exponential,
    Hinge,
    SquaredHinge,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum GammaNormArg {
    None,
    L1,
    L2,
    AsymL2,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum RuleArg {
    None,
    Regression,
    Quantile,
    Svm,
    Logistic,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum LabelsArg {
    None,
    #[value(name = "01")]
    ZeroOne,
    Pm1,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum BetaArg {
    None,
    L1,
    L2,
}

#[derive(Args, Clone)]
struct DataArgs {
    /// Input CSV with a header row.
    input: PathBuf,
    #[arg(long, default_value = "y")]
    response: String,
    #[arg(long, value_enum, default_value = "none")]
    labels: LabelsArg,
    #[arg(long)]
    no_intercept: bool,
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long, value_enum, default_value = "squared")]
    loss: LossArg,
    /// Quantile level for the check loss.
    #[arg(long, default_value_t = 0.5)]
    q: f64,
    #[arg(long, value_enum, default_value = "none")]
    gamma_norm: GammaNormArg,
    /// Case penalty; overrides --rule.
    #[arg(long)]
    lambda_gamma: Option<f64>,
    #[arg(long, value_enum, default_value = "none")]
    rule: RuleArg,
    /// Bending constant of the regression, SVM or logistic rule.
    #[arg(long, allow_negative_numbers = true)]
    bend_k: Option<f64>,
    /// Exponent of the quantile rule.
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "none")]
    beta_penalty: BetaArg,
    #[arg(long, default_value_t = 0.0)]
    lambda_beta: f64,
    #[arg(long, default_value_t = 100)]
    max_outer_iters: usize,
    /// Minimize the effective loss directly instead of alternating.
    #[arg(long)]
    direct: bool,
}

#[derive(Args, Clone)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct PathArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Robust lasso with bending constant k (λ_γ = k·σ̂); plain lasso if absent.
    #[arg(long)]
    bend_k: Option<f64>,
    #[arg(long, default_value_t = 60)]
    grid: usize,
    #[arg(long, default_value_t = 1e-3)]
    ratio: f64,
}

#[derive(Args)]
struct CvArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Case penalty of arm A: "plain", "rule" or a number.
    #[arg(long, default_value = "plain")]
    arm_a: String,
    /// Case penalty of arm B: "plain", "rule" or a number.
    #[arg(long, default_value = "rule")]
    arm_b: String,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum TableArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    Qr,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum StudyArg {
    Theorem1,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, value_enum, conflicts_with = "study", required_unless_present = "study")]
    table: Option<TableArg>,
    #[arg(long, value_enum)]
    study: Option<StudyArg>,
    #[arg(long, default_value_t = 100)]
    replicates: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Bending constant of the robust lasso (table 1).
    #[arg(long, default_value_t = DEFAULT_REGRESSION_K)]
    bend_k: f64,
    /// Exponent of λ_γ (table qr: quantile rule; theorem1: λ_γ = c·n^α).
    #[arg(long)]
    alpha: Option<f64>,
    /// Quantile levels (table qr, theorem1).
    #[arg(long, value_delimiter = ',')]
    q: Option<Vec<f64>>,
    /// Sample sizes (table qr, theorem1).
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Error law for table qr: normal, t<df> or skewed.
    #[arg(long, default_value = "normal")]
    errors: String,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        Self { code: 3, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self { code: 3, message: e.to_string() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) => 2,
            Error::InvalidData(_) | Error::DegenerateScale => 3,
            _ => 4,
        };
        Self { code, message: e.to_string() }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        // a second initialization only happens in tests; ignore it
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    if let Err(e) = fs::create_dir_all(&cli.out_dir) {
        eprintln!("error: cannot create {}: {e}", cli.out_dir.display());
        return ExitCode::from(3);
    }
    let out = cli.out_dir.as_path();
    let result = match &cli.command {
        Command::Fit(a) => cmd_fit(a, out),
        Command::Path(a) => cmd_path(a, out),
        Command::Cv(a) => cmd_cv(a, out),
        Command::Tune(a) => cmd_tune(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load(a: &DataArgs) -> Result<Dataset, Failure> {
    let labels = match a.labels {
        LabelsArg::None => LabelMode::Continuous,
        LabelsArg::ZeroOne => LabelMode::ZeroOne,
        LabelsArg::Pm1 => LabelMode::PlusMinusOne,
    };
    Ok(load_csv(&a.input, &a.response, labels, !a.no_intercept)?.data)
}

fn loss_spec(m: &ModelArgs) -> Result<LossSpec, Failure> {
    Ok(match m.loss {
        LossArg::Squared => LossSpec::SquaredError,
        LossArg::Absdev => LossSpec::AbsoluteDeviation,
        LossArg::Check => LossSpec::Check(Quantile::new(m.q)?),
        LossArg::Logistic => LossSpec::LogisticDeviance,
        LossArg::Exponential => LossSpec::Exponential,
        LossArg::Hinge => LossSpec::Hinge,
        LossArg::SquaredHinge => LossSpec::SquaredHinge,
    })
}

fn beta_penalty(m: &ModelArgs) -> BetaPenalty {
    match m.beta_penalty {
        BetaArg::None => BetaPenalty::None,
        BetaArg::L1 => BetaPenalty::L1,
        BetaArg::L2 => BetaPenalty::L2,
    }
}

/// Baseline fit without case parameters.
fn plain_fit(data: &Dataset, loss: LossSpec, m: &ModelArgs) -> Result<FitResult, Failure> {
    let lb = m.lambda_beta;
    let fit = match (loss, beta_penalty(m)) {
        (LossSpec::SquaredError, BetaPenalty::L1) => fit_lasso(data, lb, None, &SolverConfig::default())?,
        (LossSpec::SquaredError, BetaPenalty::L2) => fit_least_squares(data, lb)?,
        (LossSpec::SquaredError, BetaPenalty::None) => fit_least_squares(data, 0.0)?,
        (_, BetaPenalty::L1) => return Err(Failure::config("an l1 coefficient penalty needs the squared loss")),
        (LossSpec::Check(q), BetaPenalty::None) => fit_quantile(data, q, None)?,
        (LossSpec::AbsoluteDeviation, BetaPenalty::None) => fit_quantile(data, Quantile::new(0.5)?, None)?,
        (LossSpec::LogisticDeviance, BetaPenalty::None) => fit_logistic(data, None)?,
        (LossSpec::LogisticDeviance, BetaPenalty::L2) => {
            caseparam_core::solvers::fit_logistic_with(data, None, lb, &SolverConfig::default())?
        }
        (LossSpec::Hinge, pen) => fit_svm(data, SvmVariant::Hinge, if pen == BetaPenalty::L2 { lb } else { 0.0 })?,
        (LossSpec::SquaredHinge, pen) => {
            fit_svm(data, SvmVariant::SquaredHinge, if pen == BetaPenalty::L2 { lb } else { 0.0 })?
        }
        (LossSpec::Exponential, _) => {
            return Err(Failure::config("the exponential loss is only available with a case penalty"))
        }
        (_, BetaPenalty::L2) => return Err(Failure::config("this loss takes no coefficient penalty")),
    };
    Ok(fit)
}

fn residuals(data: &Dataset, fit: &FitResult) -> Vec<f64> {
    (data.y() - fit.predict(data.x())).iter().copied().collect()
}

/// `λ_γ` from the flags, recording how it was obtained.
fn resolve_lambda_gamma(
    data: &Dataset,
    loss: LossSpec,
    m: &ModelArgs,
    manifest: &mut RunManifest,
) -> Result<Option<f64>, Failure> {
    if m.gamma_norm == GammaNormArg::None {
        return Ok(None);
    }
    if let Some(l) = m.lambda_gamma {
        return Ok(Some(l));
    }
    let lam = match m.rule {
        RuleArg::None => return Err(Failure::config("a case penalty needs --lambda-gamma or --rule")),
        RuleArg::Regression => {
            let k = m.bend_k.unwrap_or(DEFAULT_REGRESSION_K);
            let rule = TuningRule::RegressionBend { k };
            rule.validate()?;
            if rule.outside_recommended_band() {
                eprintln!("warning: bending constant {k} is outside the usual range [1, 2]");
            }
            let sigma = robust_scale(&residuals(data, &plain_fit(data, loss, m)?))?;
            manifest.derive("sigma_hat", num(sigma));
            lambda_gamma_regression(k, sigma)
        }
        RuleArg::Quantile => {
            let q = loss.quantile().map_or(0.5, Quantile::get);
            TuningRule::QuantileRule { alpha: m.alpha, c_scale: caseparam_core::tuning::DEFAULT_C_SCALE }.validate()?;
            let sigma = robust_scale(&residuals(data, &plain_fit(data, loss, m)?))?;
            manifest.derive("sigma_hat", num(sigma));
            manifest.derive("c_q", num(c_q(q)));
            lambda_gamma_quantile(q, data.n(), sigma, m.alpha)
        }
        RuleArg::Svm => lambda_from_bending_svm(m.bend_k.unwrap_or(-0.5))?,
        RuleArg::Logistic => lambda_from_bending_logistic(m.bend_k.unwrap_or(-0.5)),
    };
    Ok(Some(lam))
}

fn gamma_norm(arg: GammaNormArg) -> Option<GammaNorm> {
    match arg {
        GammaNormArg::None => None,
        GammaNormArg::L1 => Some(GammaNorm::L1),
        GammaNormArg::L2 => Some(GammaNorm::L2),
        GammaNormArg::AsymL2 => Some(GammaNorm::AsymmetricL2),
    }
}

fn modified_fit(data: &Dataset, loss: LossSpec, m: &ModelArgs, lam: f64) -> Result<FitResult, Failure> {
    modified_fit_core(data, loss, m, lam).map_err(Failure::from)
}

fn modified_fit_core(data: &Dataset, loss: LossSpec, m: &ModelArgs, lam: f64) -> caseparam_core::Result<FitResult> {
    let norm = gamma_norm(m.gamma_norm).expect("checked by caller");
    let penalty = PenaltyConfig::new(lam, norm).with_beta(m.lambda_beta, beta_penalty(m));
    let effective = penalty.effective(loss)?;
    if m.direct {
        return equivalent_effective_fit(data, &effective, m.lambda_beta, beta_penalty(m));
    }
    let mut cfg = AlternationConfig::new(penalty);
    cfg.max_outer_iters = m.max_outer_iters;
    alternate_fit(data, loss, &cfg)
}

fn flag_map(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| ((*k).to_owned(), v.clone())).collect()
}

fn model_flags(d: &DataArgs, m: &ModelArgs) -> Vec<(&'static str, String)> {
    vec![
        ("input", d.input.display().to_string()),
        ("response", d.response.clone()),
        ("labels", value_name(d.labels)),
        ("intercept", (!d.no_intercept).to_string()),
        ("loss", value_name(m.loss)),
        ("q", num(m.q)),
        ("gamma_norm", value_name(m.gamma_norm)),
        ("lambda_gamma", m.lambda_gamma.map(num).unwrap_or_default()),
        ("rule", value_name(m.rule)),
        ("bend_k", m.bend_k.map(num).unwrap_or_default()),
        ("alpha", num(m.alpha)),
        ("beta_penalty", value_name(m.beta_penalty)),
        ("lambda_beta", num(m.lambda_beta)),
        ("direct", m.direct.to_string()),
    ]
}

fn value_name<T: ValueEnum>(v: T) -> String {
    v.to_possible_value().map(|p| p.get_name().to_owned()).unwrap_or_default()
}

fn write_trace(out: &Path, trace: &[f64]) -> std::io::Result<()> {
    let rows: Vec<Vec<String>> = trace.iter().enumerate().map(|(i, v)| vec![i.to_string(), num(*v)]).collect();
    write_table(&out.join("trace.csv"), &["iteration", "objective"], &rows)
}

fn cmd_fit(a: &FitArgs, out: &Path) -> CmdResult {
    let data = load(&a.data)?;
    let loss = loss_spec(&a.model)?;
    let mut manifest = RunManifest::new("fit", flag_map(&model_flags(&a.data, &a.model)), None).with_input(&a.data.input)?;
    let lam = resolve_lambda_gamma(&data, loss, &a.model, &mut manifest)?;
    let fit = match lam {
        None => plain_fit(&data, loss, &a.model),
        Some(l) => {
            manifest.derive("lambda_gamma", num(l));
            match modified_fit_core(&data, loss, &a.model, l) {
                Err(Error::NonConvergence { iterations, trace }) => {
                    write_trace(out, &trace)?;
                    manifest.derive("iterations", iterations);
                    manifest.derive("converged", false);
                    Err(Failure { code: 4, message: format!("no convergence after {iterations} outer iterations") })
                }
                other => other.map_err(Failure::from),
            }
        }
    };
    let fit = match fit {
        Ok(f) => f,
        Err(f) => {
            manifest.write(out)?;
            return Err(f);
        }
    };
    let intercept_names = if data.intercept() { vec!["(intercept)".to_string()] } else { vec![] };
    let names: Vec<String> =
        intercept_names.into_iter().chain((0..data.p()).map(|j| format!("x{}", j + 1))).collect();
    let covariates = caseparam::io::load_csv(&a.data.input, &a.data.response, LabelMode::Continuous, false)
        .map(|t| t.covariates)
        .unwrap_or_default();
    let (raw_beta, raw_b0) = match data.standardization() {
        Some(st) => st.back_transform(&fit.beta, fit.intercept),
        None => (fit.beta.clone(), fit.intercept),
    };
    let mut rows = Vec::new();
    if data.intercept() {
        rows.push(vec!["(intercept)".into(), num(fit.intercept), num(raw_b0)]);
    }
    for j in 0..data.p() {
        let name = covariates.get(j).cloned().unwrap_or_else(|| names[j + usize::from(data.intercept())].clone());
        rows.push(vec![name, num(fit.beta[j]), num(raw_beta[j])]);
    }
    write_table(&out.join("coefficients.csv"), &["term", "standardized", "raw"], &rows)?;
    if let Some(g) = &fit.gamma {
        let rows: Vec<Vec<String>> = g
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| vec![(i + 1).to_string(), num(*v), u8::from(*v != 0.0).to_string()])
            .collect();
        write_table(&out.join("cases.csv"), &["case", "gamma", "adjusted"], &rows)?;
        manifest.derive("adjusted_cases", g.adjusted_count());
    }
    write_trace(out, &fit.objective_trace)?;
    manifest.derive("iterations", fit.iterations);
    manifest.derive("converged", fit.converged);
    manifest.write(out)?;
    if !fit.converged {
        return Err(Failure { code: 4, message: format!("no convergence after {} iterations", fit.iterations) });
    }
    Ok(())
}

fn cmd_tune(a: &FitArgs, out: &Path) -> CmdResult {
    let data = load(&a.data)?;
    let loss = loss_spec(&a.model)?;
    let mut manifest = RunManifest::new("tune", flag_map(&model_flags(&a.data, &a.model)), None).with_input(&a.data.input)?;
    if a.model.gamma_norm == GammaNormArg::None {
        return Err(Failure::config("tune needs --gamma-norm"));
    }
    let lam = resolve_lambda_gamma(&data, loss, &a.model, &mut manifest)?.expect("case penalty requested");
    manifest.derive("lambda_gamma", num(lam));
    if let LossSpec::Check(q) = loss {
        let (lo, hi) = caseparam_core::tuning::adjustment_interval(q.get(), lam);
        manifest.derive("band_low", num(lo));
        manifest.derive("band_high", num(hi));
    }
    println!("lambda_gamma = {}", num(lam));
    for (k, v) in &manifest.derived {
        if k != "lambda_gamma" {
            println!("{k} = {v}");
        }
    }
    manifest.write(out)?;
    Ok(())
}

fn cmd_path(a: &PathArgs, out: &Path) -> CmdResult {
    let data = load(&a.data)?;
    if a.grid < 2 {
        return Err(Failure::config("--grid must be at least 2"));
    }
    let mut flags = vec![
        ("input", a.data.input.display().to_string()),
        ("response", a.data.response.clone()),
        ("grid", a.grid.to_string()),
        ("ratio", num(a.ratio)),
    ];
    if let Some(k) = a.bend_k {
        flags.push(("bend_k", num(k)));
    }
    let mut manifest = RunManifest::new("path", flag_map(&flags), None).with_input(&a.data.input)?;
    let (n, p) = (data.n(), data.p());
    let ols = fit_least_squares(&data, 0.0)?;
    let resid = residuals(&data, &ols);
    let rss_full: f64 = resid.iter().map(|r| r * r).sum();
    let (sigma2, spec) = match a.bend_k {
        Some(k) => {
            let s = robust_scale(&resid)?;
            manifest.derive("sigma_hat", num(s));
            manifest.derive("lambda_gamma", num(k * s));
            (s * s, Some(caseparam_core::EffectiveLossSpec::new(LossSpec::SquaredError, k * s, GammaNorm::L1)?))
        }
        None => {
            if n <= p + 1 {
                return Err(Failure::config("C_p needs more cases than coefficients"));
            }
            (rss_full / (n - p - 1) as f64, None)
        }
    };
    let mut rows = Vec::new();
    let mut header: Vec<String> = ["lambda", "df", "rss", "cp", "gcv", "intercept"].iter().map(|s| s.to_string()).collect();
    header.extend((1..=p).map(|j| format!("beta{j}")));
    let mut warm = None;
    for lam in log_grid(lambda_max(&data), a.ratio, a.grid) {
        let (fit, rss) = match &spec {
            Some(spec) => {
                let fit = equivalent_effective_fit(&data, spec, lam, BetaPenalty::L1)?;
                let g = fit.gamma.clone().expect("effective fits report case parameters");
                let f = fit.predict(data.x());
                let rss: f64 = (0..n).map(|i| (data.y()[i] - g.values[i] - f[i]).powi(2)).sum();
                (fit, rss)
            }
            None => {
                let fit = fit_lasso(&data, lam, warm.as_ref(), &SolverConfig::default())?;
                warm = Some(fit.beta.clone());
                let rss = (data.y() - fit.predict(data.x())).norm_squared();
                (fit, rss)
            }
        };
        let df = fit.df();
        let gcv = gcv_score(rss, df + usize::from(data.intercept()), n).map(num).unwrap_or_default();
        let mut row = vec![num(lam), df.to_string(), num(rss), num(cp_score(rss, df, sigma2, n)), gcv, num(fit.intercept)];
        row.extend(fit.beta.iter().map(|b| num(*b)));
        rows.push(row);
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_table(&out.join("path.csv"), &header_refs, &rows)?;
    manifest.derive("sigma2", num(sigma2));
    manifest.write(out)?;
    Ok(())
}

#[derive(Clone, Copy)]
enum Arm {
    Plain,
    Rule,
    Fixed(f64),
}

fn parse_arm(s: &str) -> Result<Arm, Failure> {
    match s {
        "plain" => Ok(Arm::Plain),
        "rule" => Ok(Arm::Rule),
        _ => s
            .parse::<f64>()
            .ok()
            .filter(|v| *v > 0.0)
            .map(Arm::Fixed)
            .ok_or_else(|| Failure::config(format!("arm {s:?} is not plain, rule or a positive number"))),
    }
}

fn cmd_cv(a: &CvArgs, out: &Path) -> CmdResult {
    let data = load(&a.data)?;
    let loss = loss_spec(&a.model)?;
    let arms = [parse_arm(&a.arm_a)?, parse_arm(&a.arm_b)?];
    if a.repeats == 0 {
        return Err(Failure::config("--repeats must be at least 1"));
    }
    let mut flags = model_flags(&a.data, &a.model);
    flags.extend([
        ("arm_a", a.arm_a.clone()),
        ("arm_b", a.arm_b.clone()),
        ("folds", a.folds.to_string()),
        ("repeats", a.repeats.to_string()),
    ]);
    let manifest = RunManifest::new("cv", flag_map(&flags), Some(a.seed)).with_input(&a.data.input)?;
    let fit_arm = |arm: Arm, d: &Dataset| -> caseparam_core::Result<FitResult> {
        let mut m = a.model.clone();
        let mut sink = RunManifest::new("cv-arm", BTreeMap::new(), None);
        match arm {
            Arm::Plain => {
                m.gamma_norm = GammaNormArg::None;
            }
            Arm::Rule => {
                if m.gamma_norm == GammaNormArg::None {
                    return Err(Error::Config("a rule arm needs --gamma-norm".into()));
                }
                m.lambda_gamma = None;
            }
            Arm::Fixed(l) => m.lambda_gamma = Some(l),
        }
        let lam = resolve_lambda_gamma(d, loss, &m, &mut sink).map_err(|f| Error::Config(f.message))?;
        let res = match lam {
            None => plain_fit(d, loss, &m),
            Some(l) => modified_fit(d, loss, &m, l),
        };
        res.map_err(|f| Error::Config(f.message))
    };
    use rayon::prelude::*;
    let per_repeat: Vec<caseparam_core::Result<[f64; 2]>> = (0..a.repeats)
        .into_par_iter()
        .map(|r| {
            let labels = fold_assignment(&data, a.folds, r as u64, a.seed)?;
            let mut s = [0.0; 2];
            for (slot, arm) in arms.iter().enumerate() {
                let fitter = |d: &Dataset| fit_arm(*arm, d);
                s[slot] = cv_repeat(&data, &fitter, &loss, &labels, a.folds)?.iter().sum();
            }
            Ok(s)
        })
        .collect();
    let mut rows = Vec::new();
    let mut scores = [Vec::new(), Vec::new()];
    for (r, s) in per_repeat.into_iter().enumerate() {
        let s = s?;
        rows.push(vec![r.to_string(), num(s[0]), num(s[1]), num(s[1] - s[0])]);
        scores[0].push(s[0]);
        scores[1].push(s[1]);
    }
    write_table(&out.join("cv_pairs.csv"), &["repeat", "score_a", "score_b", "b_minus_a"], &rows)?;
    let (ma, sa) = caseparam_core::selection::mean_sd(&scores[0]);
    let (mb, sb) = caseparam_core::selection::mean_sd(&scores[1]);
    let b_wins = scores[0].iter().zip(&scores[1]).filter(|(x, y)| y < x).count();
    write_json(
        &out.join("cv_summary.json"),
        &serde_json::json!({
            "folds": a.folds, "repeats": a.repeats, "seed": a.seed,
            "mean_a": ma, "sd_a": sa, "mean_b": mb, "sd_b": sb, "repeats_b_lower": b_wins,
        }),
    )?;
    manifest.write(out)?;
    Ok(())
}

fn parse_errors(s: &str) -> Result<ErrorDist, Failure> {
    match s {
        "normal" => Ok(ErrorDist::Normal),
        "skewed" => Ok(ErrorDist::Skewed),
        _ => s
            .strip_prefix('t')
            .and_then(|df| df.parse::<f64>().ok())
            .filter(|df| *df > 0.0)
            .map(ErrorDist::T)
            .ok_or_else(|| Failure::config(format!("unknown error law {s:?}; use normal, t<df> or skewed"))),
    }
}

fn cmd_simulate(a: &SimArgs, out: &Path) -> CmdResult {
    if a.replicates == 0 {
        return Err(Failure::config("--replicates must be at least 1"));
    }
    let mut flags = vec![
        ("replicates", a.replicates.to_string()),
        ("bend_k", num(a.bend_k)),
        ("errors", a.errors.clone()),
    ];
    if let Some(t) = a.table {
        flags.push(("table", value_name(t)));
    }
    if let Some(s) = a.study {
        flags.push(("study", value_name(s)));
    }
    if let Some(al) = a.alpha {
        flags.push(("alpha", num(al)));
    }
    if let Some(q) = &a.q {
        flags.push(("q", q.iter().map(|v| num(*v)).collect::<Vec<_>>().join(",")));
    }
    if let Some(n) = &a.n {
        flags.push(("n", n.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")));
    }
    let manifest = RunManifest::new("simulate", flag_map(&flags), Some(a.seed));
    match (a.table, a.study) {
        (Some(TableArg::One), _) => simulate_table1(a, out)?,
        (Some(TableArg::Two), _) => simulate_table2(a, out)?,
        (Some(TableArg::Qr), _) => {
            let q = a.q.clone().unwrap_or_else(|| vec![0.1, 0.25, 0.5, 0.75, 0.9]);
            let n = a.n.clone().unwrap_or_else(|| vec![100, 1000]);
            let dist = parse_errors(&a.errors)?;
            for &level in &q {
                Quantile::new(level)?;
            }
            let report = run_quantile_study(&q, &n, dist, a.alpha.unwrap_or(DEFAULT_ALPHA), a.replicates, a.seed);
            write_study(out, &format!("quantile_{}", dist.name()), &report)?;
        }
        (None, Some(StudyArg::Theorem1)) => {
            let q = a.q.clone().unwrap_or_else(|| vec![0.25]);
            let n = a.n.clone().unwrap_or_else(|| vec![100, 1000, 10000]);
            let alphas = a.alpha.map_or_else(|| vec![0.4, 0.0], |al| vec![al]);
            let mut rows = Vec::new();
            for &level in &q {
                Quantile::new(level)?;
                for &alpha in &alphas {
                    let dgp = Dgp { errors: ErrorDist::Normal, covariate: true };
                    let curve = equivalence_curve(level, alpha, c_q(level), &n, a.replicates, dgp, a.seed);
                    for (i, &size) in curve.n_grid.iter().enumerate() {
                        rows.push(vec![
                            num(level),
                            num(alpha),
                            size.to_string(),
                            curve.distances[i].len().to_string(),
                            num(curve.median_distance[i]),
                            num(curve.scaled_distance[i]),
                        ]);
                    }
                }
            }
            write_table(
                &out.join(format!("theorem1_seed{}.csv", a.seed)),
                &["q", "alpha", "n", "replicates_used", "median_distance", "scaled_distance"],
                &rows,
            )?;
        }
        (None, None) => return Err(Failure::config("simulate needs --table or --study")),
    }
    manifest.write(out)?;
    Ok(())
}

fn simulate_table1(a: &SimArgs, out: &Path) -> CmdResult {
    let methods = [RegressionMethod::LassoCp, RegressionMethod::RobustLassoCp { k: a.bend_k }];
    let mut hist_rows = Vec::new();
    for s in Sparsity::ALL {
        let report = run_regression_study(&RegressionScenario::new(s), &methods, a.replicates, a.seed);
        write_study(out, &format!("table1_{}", s.name()), &report)?;
        for c in [Contamination::Epsilon, Contamination::X] {
            for m in &methods {
                let h = delta_histogram(&report.values(c.name(), &m.name(), MetricKind::ModelSizeDelta));
                let mut row = vec![c.name().to_string(), s.name().to_string(), m.name()];
                row.extend(h.iter().map(|v| v.to_string()));
                hist_rows.push(row);
            }
        }
    }
    write_table(
        &out.join(format!("table1_histogram_seed{}.csv", a.seed)),
        &["contamination", "scenario", "method", "le_-3", "-2", "-1", "0", "1", "2", "ge_3"],
        &hist_rows,
    )?;
    Ok(())
}

fn simulate_table2(a: &SimArgs, out: &Path) -> CmdResult {
    let methods = ClassMethod::table();
    let mut rows = Vec::new();
    for flip in [0.0, 0.05, 0.10] {
        for sep in Separation::ALL {
            let sc = ClassificationScenario::new(sep, flip);
            let report = run_classification_study(&sc, &methods, a.replicates, a.seed);
            write_study(out, &format!("table2_{}", sc.name()), &report)?;
            let mut row = vec![sc.name()];
            row.extend(methods.iter().map(|m| num(report.mean(&sc.name(), &m.name(), MetricKind::AnalyticErrorRate))));
            rows.push(row);
        }
    }
    let names: Vec<String> = methods.iter().map(|m| m.name()).collect();
    let mut header = vec!["scenario"];
    header.extend(names.iter().map(String::as_str));
    write_table(&out.join(format!("table2_means_seed{}.csv", a.seed)), &header, &rows)?;
    Ok(())
}
