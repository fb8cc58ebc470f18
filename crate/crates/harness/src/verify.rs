//! Named invariant checks behind the `verify` subcommand.
//!
//! Each check replays one documented invariant of a library module on a
//! small canonical configuration, measures the worst violation it observed,
//! and compares against the module's own tolerance. `--poison` corrupts one
//! check on purpose so the failure path stays exercised.

use noisy_stm_core::linalg::DenseMatrix;
use noisy_stm_core::oracles::{
    central_fd_gradient, gaussian_smoothed_gradient, sphere_smoothed_gradient, AbsoluteMode,
    NoiseModel, OracleKind, RelativeMode,
};
use noisy_stm_core::problem::inexactness_constants;
use noisy_stm_core::problems::{
    diagonal_quadratic, least_squares, nesterov_degenerate, nesterov_strongly_convex,
};
use noisy_stm_core::sequences::{
    budget_regularized, budget_strongly_convex, growth_factor, n_max, next_alpha,
    partial_sum_bound, recurrence_residual, stm2_alpha_threshold, weight_sequence,
};
use noisy_stm_core::solvers::{
    gd_run, stm2_certificate, stm2_run, stm_certificate, stm_run, theoretical_bounds,
};
use noisy_stm_core::{
    Algorithm, Error, FeasibleSet, GradientOracle, RngStream, SmoothProblem, SolverConfig,
    StoppingConfig, StoppingVariant, TauMode, Vector,
};

use crate::{HarnessError, Result};

/// Every check belongs to the library module whose contract it replays.
pub const SCOPES: &[&str] = &["core", "sequences", "oracles", "geometry", "solvers", "problems"];

/// Outcome of one named check. `worst` is the check's violation measure
/// (its meaning is stated in `detail`); the check passes iff it does not
/// exceed the stated tolerance.
#[derive(Clone, Debug)]
pub struct InvariantResult {
    pub name: &'static str,
    pub scope: &'static str,
    pub ok: bool,
    pub worst: f64,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub results: Vec<InvariantResult>,
}

impl VerifyReport {
    pub fn all_ok(&self) -> bool {
        self.results.iter().all(|r| r.ok)
    }

    pub fn first_failure(&self) -> Option<&InvariantResult> {
        self.results.iter().find(|r| !r.ok)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for r in &self.results {
            out.push_str(&format!(
                "{}  {:<26} [{:<9}] worst {:>10.3e}  {}\n",
                if r.ok { "PASS" } else { "FAIL" },
                r.name,
                r.scope,
                r.worst,
                r.detail
            ));
        }
        let failed = self.results.iter().filter(|r| !r.ok).count();
        if failed == 0 {
            out.push_str(&format!("all {} invariants hold\n", self.results.len()));
        } else {
            let first = self.first_failure().expect("failed > 0");
            out.push_str(&format!(
                "{failed} of {} invariants failed; first: {} ({})\n",
                self.results.len(),
                first.name,
                first.detail
            ));
        }
        out
    }
}

fn check(name: &'static str, scope: &'static str, worst: f64, tol: f64, detail: String) -> InvariantResult {
    InvariantResult { name, scope, ok: worst.is_finite() && worst <= tol, worst, detail }
}

/// Runs the invariant suites, restricted to one module when `scope` is set.
/// `poison` deliberately corrupts the named fault mode (only `recurrence`
/// exists) to prove the checks can fail.
pub fn run_verification(scope: Option<&str>, poison: Option<&str>, seed: u64) -> Result<VerifyReport> {
    if let Some(s) = scope {
        if !SCOPES.contains(&s) {
            return Err(HarnessError::Core(Error::config(format!(
                "unknown scope `{s}`; expected one of {}",
                SCOPES.join(", ")
            ))));
        }
    }
    let poisoned = match poison {
        None => false,
        Some("recurrence") => true,
        Some(other) => {
            return Err(HarnessError::Core(Error::config(format!(
                "unknown poison mode `{other}`; only `recurrence` exists"
            ))));
        }
    };

    let wants = |s: &str| scope.is_none_or(|only| only == s);
    let mut results = Vec::new();

    if wants("core") {
        results.push(smoothness_bracket(seed)?);
        results.push(inexact_model_claims(seed)?);
    }
    if wants("sequences") {
        results.push(alpha_recurrence(seed, poisoned)?);
        results.push(sequence_growth()?);
        results.push(partial_sum_ratio()?);
        results.push(budget_monotonicity()?);
    }
    if wants("oracles") {
        results.push(absolute_noise_norm(seed)?);
        results.push(relative_noise_bound(seed)?);
        results.push(central_fd_exactness(seed)?);
        results.push(estimator_mean(seed)?);
        results.push(oracle_determinism(seed)?);
    }
    if wants("geometry") {
        results.push(projection_idempotent(seed)?);
        results.push(projection_nonexpansive(seed)?);
    }
    if wants("solvers") {
        results.push(stm_certificate_check(seed, TauMode::Tau1)?);
        results.push(stm_certificate_check(seed, TauMode::Tau2)?);
        results.push(stm2_certificate_check(seed)?);
        results.push(noiseless_rate_bound()?);
        results.push(trajectory_radius()?);
        results.push(stopping_rule_bound()?);
        results.push(gd_noise_floor()?);
        results.push(trace_determinism(seed)?);
    }
    if wants("problems") {
        results.push(optimum_stationarity()?);
        results.push(constant_consistency(seed)?);
    }

    Ok(VerifyReport { results })
}

fn box_point(rng: &mut RngStream, dim: usize, bound: f64) -> Vector {
    Vector::from_fn(dim, |_| rng.uniform(-bound, bound))
}

fn shipped_problems() -> Result<Vec<SmoothProblem>> {
    let a = DenseMatrix::new(3, 2, vec![1.0, 0.5, 0.0, 2.0, -1.0, 1.0])?;
    let b = Vector::new(vec![1.0, -1.0, 0.5])?;
    Ok(vec![
        nesterov_degenerate(12, 6, 2.0)?,
        nesterov_strongly_convex(8, 0.4, 9.0)?,
        diagonal_quadratic(&[0.2, 0.5, 2.0])?,
        least_squares(a, b)?,
    ])
}

// -- core ------------------------------------------------------------------

/// f(y) bracketed by the (μ/2)- and (L_f/2)-quadratic models around x.
fn smoothness_bracket(seed: u64) -> Result<InvariantResult> {
    let mut rng = RngStream::derived(seed, 100, 0);
    let mut worst = f64::NEG_INFINITY;
    let mut pairs = 0;
    for problem in shipped_problems()? {
        for _ in 0..40 {
            let x = box_point(&mut rng, problem.dim(), 2.0);
            let y = box_point(&mut rng, problem.dim(), 2.0);
            let (fx, gx) = problem.evaluate(&x)?;
            let fy = problem.value(&y)?;
            let d = y.sub(&x);
            let linear = fx + gx.dot(&d);
            let upper = linear + 0.5 * problem.l_f() * d.norm_sq();
            let lower = linear + 0.5 * problem.mu() * d.norm_sq();
            let scale = fy.abs().max(upper.abs()).max(1.0);
            worst = worst.max((fy - upper) / scale).max((lower - fy) / scale);
            pairs += 1;
        }
    }
    Ok(check(
        "smoothness-bracket",
        "core",
        worst,
        1e-9,
        format!("{pairs} sampled pairs across 4 problems, relative slack 1e-9"),
    ))
}

/// The three inexact-model claims for any g̃ with ‖g̃ − ∇f‖ ≤ δ: doubled-L
/// upper model + δ₂, μ/2 lower model − δ₁‖y−x‖, μ/4 lower model − δ₃.
fn inexact_model_claims(seed: u64) -> Result<InvariantResult> {
    let problem = diagonal_quadratic(&[0.5, 1.0, 2.0])?;
    let delta = 0.1;
    let constants = inexactness_constants(delta, problem.l_f(), problem.mu())?;
    let delta3 = constants.delta3.expect("mu > 0");
    let mut rng = RngStream::derived(seed, 101, 0);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..200 {
        let x = box_point(&mut rng, 3, 2.0);
        let y = box_point(&mut rng, 3, 2.0);
        let (fx, gx) = problem.evaluate(&x)?;
        let fy = problem.value(&y)?;
        let mut noisy = gx.clone();
        let magnitude = rng.uniform(0.0, delta);
        noisy.add_scaled(magnitude, &rng.unit_sphere(3));
        let d = y.sub(&x);
        let linear = fx + noisy.dot(&d);
        let upper = linear + problem.l_f() * d.norm_sq() + constants.delta2;
        let lower1 = linear + 0.5 * problem.mu() * d.norm_sq() - constants.delta1 * d.norm();
        let lower3 = linear + 0.25 * problem.mu() * d.norm_sq() - delta3;
        let scale = fy.abs().max(upper.abs()).max(1.0);
        worst = worst
            .max((fy - upper) / scale)
            .max((lower1 - fy) / scale)
            .max((lower3 - fy) / scale);
    }
    Ok(check(
        "inexact-model-claims",
        "core",
        worst,
        1e-9,
        format!("200 sampled (x, y, noisy-grad) triples at delta = {delta}"),
    ))
}

// -- sequences -------------------------------------------------------------

fn alpha_recurrence(seed: u64, poisoned: bool) -> Result<InvariantResult> {
    let mut rng = RngStream::derived(seed, 102, 0);
    let mut worst = 0.0f64;
    let triples = 100_000;
    for _ in 0..triples {
        let l = rng.uniform(1e-3, 1e3);
        let mu_tau = if rng.uniform(0.0, 1.0) < 0.3 { 0.0 } else { rng.uniform(0.0, 0.5) * l };
        let a_prev = rng.uniform(0.0, 1e3);
        let mut alpha = next_alpha(l, mu_tau, a_prev)?;
        if poisoned {
            alpha *= 1.0 + 1e-6;
        }
        worst = worst.max(recurrence_residual(l, mu_tau, a_prev, alpha) / (l * alpha * alpha));
    }
    let tag = if poisoned { ", poisoned" } else { "" };
    Ok(check(
        "alpha-recurrence-residual",
        "sequences",
        worst,
        1e-10,
        format!("{triples} sampled (L, mu_tau, A) triples, relative residual 1e-10{tag}"),
    ))
}

fn sequence_growth() -> Result<InvariantResult> {
    let mut worst = f64::NEG_INFINITY;
    for mu_tau in [0.0, 0.5] {
        let l = 2.0;
        let weights = weight_sequence(l, mu_tau, 400)?;
        let factor = growth_factor(l, mu_tau)?;
        for (k, window) in weights.windows(2).enumerate() {
            let (a_prev, a) = (window[0].1, window[1].1);
            let floor = if factor.degenerate {
                let kk = (k + 2) as f64; // A-index of the second entry is k+1
                kk * kk / (4.0 * l)
            } else {
                factor.lambda * a_prev
            };
            worst = worst.max((floor - a) / floor);
        }
    }
    Ok(check(
        "sequence-growth",
        "sequences",
        worst,
        1e-9,
        "400-step sequences, both growth claims (quadratic and geometric)".into(),
    ))
}

fn partial_sum_ratio() -> Result<InvariantResult> {
    let mut worst = f64::NEG_INFINITY;
    for mu_tau in [0.0, 0.5] {
        let l = 2.0;
        let weights = weight_sequence(l, mu_tau, 400)?;
        let mut sum = 0.0;
        for (k, (_, a)) in weights.iter().enumerate() {
            sum += a;
            let bound = partial_sum_bound(l, mu_tau, k)?;
            worst = worst.max((sum / a - bound) / bound);
        }
    }
    Ok(check(
        "partial-sum-ratio",
        "sequences",
        worst,
        1e-9,
        "(1/A_k) sum A_j against its closed-form bound, 400 steps, both regimes".into(),
    ))
}

/// Tightening ε never loosens any budget output.
fn budget_monotonicity() -> Result<InvariantResult> {
    let grid = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
    let mut violations = 0u32;
    for pair in grid.windows(2) {
        let (coarse, fine) = (pair[0], pair[1]);
        if n_max(2.0, 1.0, fine)? < n_max(2.0, 1.0, coarse)? {
            violations += 1;
        }
        let (bc, bf) = (budget_strongly_convex(2.0, 0.5, 1.0, coarse)?, budget_strongly_convex(2.0, 0.5, 1.0, fine)?);
        if bf.delta_max > bc.delta_max || bf.iterations < bc.iterations {
            violations += 1;
        }
        let (rc, rf) = (budget_regularized(2.0, 1.0, coarse)?, budget_regularized(2.0, 1.0, fine)?);
        if rf.delta_max > rc.delta_max || rf.iterations < rc.iterations || rf.mu > rc.mu {
            violations += 1;
        }
    }
    Ok(check(
        "budget-monotonicity",
        "sequences",
        f64::from(violations),
        0.0,
        "n_max and both budget calculators over a 5-point epsilon grid".into(),
    ))
}

// -- oracles ---------------------------------------------------------------

/// Reported noise_norm equals the realized deviation and respects δ.
fn absolute_noise_norm(seed: u64) -> Result<InvariantResult> {
    let delta = 0.05;
    let mut rng = RngStream::derived(seed, 103, 0);
    let mut worst = f64::NEG_INFINITY;
    let bias = {
        let mut v = Vector::zeros(4);
        v[2] = -0.8 * delta;
        v
    };
    let models = [
        NoiseModel::Absolute { delta, mode: AbsoluteMode::SphereUniform },
        NoiseModel::Absolute { delta, mode: AbsoluteMode::FixedBias(bias) },
    ];
    for model in &models {
        for _ in 0..50 {
            let grad = rng.normal_vector(4);
            let (noisy, reported) = model.perturb(&grad, &mut rng);
            let realized = noisy.dist(&grad);
            worst = worst
                .max((reported - realized).abs() / delta)
                .max((realized - delta) / delta);
        }
    }
    Ok(check(
        "absolute-noise-norm",
        "oracles",
        worst,
        1e-12,
        format!("sphere and fixed-bias modes, 50 draws each at delta = {delta}"),
    ))
}

/// Relative noise stays within α‖∇f‖ and vanishes at stationary points.
fn relative_noise_bound(seed: u64) -> Result<InvariantResult> {
    let alpha = 0.4;
    let mut rng = RngStream::derived(seed, 104, 0);
    let mut worst = f64::NEG_INFINITY;
    for mode in [RelativeMode::SphereUniform, RelativeMode::Shrink] {
        let model = NoiseModel::Relative { alpha, mode };
        for _ in 0..50 {
            let grad = rng.normal_vector(4);
            let cap = alpha * grad.norm();
            let (noisy, reported) = model.perturb(&grad, &mut rng);
            let scale = cap.max(1.0);
            worst = worst
                .max((noisy.dist(&grad) - cap) / scale)
                .max((reported - cap) / scale);
        }
        // at a stationary point the perturbation must vanish identically
        let (noisy, reported) = model.perturb(&Vector::zeros(4), &mut rng);
        worst = worst.max(noisy.norm()).max(reported);
    }
    Ok(check(
        "relative-noise-bound",
        "oracles",
        worst,
        1e-12,
        format!("sphere and shrink modes at alpha = {alpha}, incl. zero-gradient point"),
    ))
}

fn central_fd_exactness(seed: u64) -> Result<InvariantResult> {
    let mut rng = RngStream::derived(seed, 105, 0);
    let mut worst = f64::NEG_INFINITY;
    for problem in [diagonal_quadratic(&[0.3, 0.9, 1.7])?, nesterov_strongly_convex(5, 0.4, 6.0)?] {
        for _ in 0..20 {
            let x = box_point(&mut rng, problem.dim(), 2.0);
            let exact = problem.gradient(&x)?;
            let (fd, _) = central_fd_gradient(|v| problem.value(v).expect("finite"), &x, 0.5)?;
            worst = worst.max(fd.dist(&exact) / exact.norm().max(1.0));
        }
    }
    Ok(check(
        "central-fd-exactness",
        "oracles",
        worst,
        1e-8,
        "central differences on two quadratics, h = 0.5, 20 points each".into(),
    ))
}

/// Monte-Carlo smoothing estimators are unbiased on affine functions:
/// componentwise |mean − ∇f| ≤ 5·sd/√M.
fn estimator_mean(seed: u64) -> Result<InvariantResult> {
    let dim = 5;
    let slope = Vector::new(vec![1.0, -2.0, 0.5, 3.0, -0.25])?;
    let f = {
        let slope = slope.clone();
        move |v: &Vector| slope.dot(v) + 0.7
    };
    let x = Vector::from_fn(dim, |i| 0.3 * i as f64 - 0.5);
    let m = 10_000;
    let mut worst = f64::NEG_INFINITY;
    for gaussian in [false, true] {
        let mut rng = RngStream::derived(seed, 106, u64::from(gaussian));
        let mut sum = vec![0.0; dim];
        let mut sum_sq = vec![0.0; dim];
        for _ in 0..m {
            let (est, _) = if gaussian {
                gaussian_smoothed_gradient(&f, &x, 0.1, 1, &mut rng)?
            } else {
                sphere_smoothed_gradient(&f, &x, 0.1, 1, &mut rng)?
            };
            for i in 0..dim {
                sum[i] += est[i];
                sum_sq[i] += est[i] * est[i];
            }
        }
        let mf = m as f64;
        for i in 0..dim {
            let mean = sum[i] / mf;
            let var = (sum_sq[i] / mf - mean * mean).max(0.0);
            let band = 5.0 * var.sqrt() / mf.sqrt();
            // ratio to the 5-sigma band; anything above 1 is a failure
            worst = worst.max((mean - slope[i]).abs() / band);
        }
    }
    Ok(check(
        "estimator-mean",
        "oracles",
        worst,
        1.0,
        format!("sphere and gaussian smoothing, {m} single-sample estimates, 5-sigma band"),
    ))
}

fn oracle_determinism(seed: u64) -> Result<InvariantResult> {
    let problem = diagonal_quadratic(&[0.3, 1.0, 2.0])?;
    let kind = OracleKind::SphereSmoothed { h: 1e-2, samples: 8 };
    let mut mismatches = 0u32;
    let outputs: Vec<Vec<_>> = (0..2)
        .map(|_| {
            let mut oracle = GradientOracle::new(kind.clone(), seed ^ 0xF00D);
            let mut rng = RngStream::derived(seed, 107, 0);
            (0..20)
                .map(|_| {
                    let x = box_point(&mut rng, 3, 2.0);
                    oracle.call(&problem, &x).expect("oracle call")
                })
                .collect()
        })
        .collect();
    for (a, b) in outputs[0].iter().zip(&outputs[1]) {
        if a != b {
            mismatches += 1;
        }
    }
    Ok(check(
        "oracle-determinism",
        "oracles",
        f64::from(mismatches),
        0.0,
        "two replays of 20 sphere-smoothed calls with one seed, bitwise".into(),
    ))
}

// -- geometry --------------------------------------------------------------

fn sample_sets(rng: &mut RngStream) -> Result<Vec<FeasibleSet>> {
    let lower = box_point(rng, 4, 1.0);
    let upper = Vector::from_fn(4, |i| lower[i] + rng.uniform(0.1, 2.0));
    Ok(vec![
        FeasibleSet::Box { lower, upper },
        FeasibleSet::Ball { center: box_point(rng, 4, 1.0), radius: rng.uniform(0.2, 3.0) },
    ])
}

fn projection_idempotent(seed: u64) -> Result<InvariantResult> {
    let mut rng = RngStream::derived(seed, 108, 0);
    let mut worst = f64::NEG_INFINITY;
    for set in sample_sets(&mut rng)? {
        for _ in 0..100 {
            let x = box_point(&mut rng, 4, 5.0);
            let p = set.project(&x);
            let pp = set.project(&p);
            let tol = match set {
                // box projection is a pure clamp and must be bitwise stable
                FeasibleSet::Box { .. } if pp != p => f64::INFINITY,
                _ => pp.dist(&p) / p.norm().max(1.0),
            };
            worst = worst.max(tol);
        }
    }
    Ok(check(
        "projection-idempotent",
        "geometry",
        worst,
        1e-12,
        "box (bitwise) and ball (1e-12 relative), 100 points each".into(),
    ))
}

fn projection_nonexpansive(seed: u64) -> Result<InvariantResult> {
    let mut rng = RngStream::derived(seed, 109, 0);
    let mut worst = f64::NEG_INFINITY;
    for set in sample_sets(&mut rng)? {
        for _ in 0..100 {
            let x = box_point(&mut rng, 4, 5.0);
            let y = box_point(&mut rng, 4, 5.0);
            let d = x.dist(&y);
            let dp = set.project(&x).dist(&set.project(&y));
            worst = worst.max((dp - d) / d.max(1e-12));
        }
    }
    Ok(check(
        "projection-nonexpansive",
        "geometry",
        worst,
        1e-12,
        "box and ball sets, 100 sampled pairs each".into(),
    ))
}

// -- solvers ---------------------------------------------------------------

fn stm_certificate_check(seed: u64, tau: TauMode) -> Result<InvariantResult> {
    let problem = diagonal_quadratic(&[0.5, 1.0, 2.0])?;
    let delta = 0.05;
    let mut config = SolverConfig::for_problem(&problem, Algorithm::Stm, tau, 150, seed);
    config.x_start = Vector::from_fn(3, |_| 1.0);
    let mut oracle = GradientOracle::new(
        OracleKind::Analytic(NoiseModel::Absolute { delta, mode: AbsoluteMode::SphereUniform }),
        seed ^ 0xA5A5,
    );
    let trace = stm_run(&problem, &mut oracle, &config)?;
    let constants = inexactness_constants(delta, problem.l_f(), problem.mu())?;
    let report = stm_certificate(&trace, constants.delta1, constants.delta2, constants.delta3)?;
    let (name, detail) = match tau {
        TauMode::Tau1 => ("stm-certificate-tau1", "150 noisy steps, per-iteration Lemma inequality"),
        TauMode::Tau2 => ("stm-certificate-tau2", "150 noisy steps, delta3 form of the Lemma"),
    };
    Ok(check(name, "solvers", report.worst_slack, 1e-8, detail.into()))
}

fn stm2_certificate_check(seed: u64) -> Result<InvariantResult> {
    let problem = diagonal_quadratic(&[0.25, 1.0, 2.0])?;
    let mut config = SolverConfig::for_problem(&problem, Algorithm::Stm2, TauMode::Tau2, 200, seed);
    config.x_start = Vector::from_fn(3, |_| 1.0);
    let alpha = 0.9 * stm2_alpha_threshold(config.l, config.mu)?;
    let mut oracle = GradientOracle::new(
        OracleKind::Analytic(NoiseModel::Relative { alpha, mode: RelativeMode::SphereUniform }),
        seed ^ 0x5A5A,
    );
    let trace = stm2_run(&problem, &mut oracle, &config)?;
    let r = config.x_start.dist(problem.x_star().expect("known optimum"));
    let f0_gap = problem.value(&config.x_start)? - problem.f_star().expect("known optimum");
    let report = stm2_certificate(&trace, config.l, config.mu, r, alpha, f0_gap)?;
    let theorem = report.theorem.as_ref().expect("alpha below threshold");
    let failed = report.claim.iter().chain(theorem).filter(|ok| !**ok).count();
    Ok(check(
        "stm2-certificate",
        "solvers",
        failed as f64,
        0.0,
        "200 relative-noise steps, Claim and Theorem rows".into(),
    ))
}

fn noiseless_rate_bound() -> Result<InvariantResult> {
    let mut worst = f64::NEG_INFINITY;

    let degenerate = nesterov_degenerate(30, 15, 2.0)?;
    let config = SolverConfig::for_problem(&degenerate, Algorithm::Stm, TauMode::Tau1, 400, 0);
    let r = degenerate.radius_from(&config.x_start).expect("known optimum");
    let trace = stm_run(&degenerate, &mut GradientOracle::exact(0), &config)?;
    let gaps = trace.gaps().expect("known optimum");
    let curve = theoretical_bounds(config.l, 0.0, r, 0.0, 0.0, None, r, 400)?;
    for (gap, bound) in gaps.iter().zip(&curve.mu0).skip(1) {
        worst = worst.max((gap - bound) / bound);
    }

    let convex = nesterov_strongly_convex(10, 0.5, 8.0)?;
    let config = SolverConfig::for_problem(&convex, Algorithm::Stm, TauMode::Tau1, 150, 0);
    let r = convex.radius_from(&config.x_start).expect("known optimum");
    let trace = stm_run(&convex, &mut GradientOracle::exact(0), &config)?;
    let gaps = trace.gaps().expect("known optimum");
    let curve = theoretical_bounds(config.l, config.mu, r, 0.0, 0.0, None, r, 150)?;
    let tau1 = curve.tau1.expect("mu > 0");
    for (gap, bound) in gaps.iter().zip(&tau1) {
        worst = worst.max((gap - bound) / bound);
    }

    Ok(check(
        "noiseless-rate-bound",
        "solvers",
        worst,
        0.0,
        "recorded gaps below the mu=0 and tau=1 curves, 400/150 exact steps".into(),
    ))
}

fn trajectory_radius() -> Result<InvariantResult> {
    let problem = nesterov_degenerate(40, 20, 2.0)?;
    let config = SolverConfig::for_problem(&problem, Algorithm::Stm, TauMode::Tau1, 300, 0);
    let r = problem.radius_from(&config.x_start).expect("known optimum");
    let trace = stm_run(&problem, &mut GradientOracle::exact(0), &config)?;
    let max_r = trace.r_tilde.last().copied().unwrap_or(0.0);
    Ok(check(
        "trajectory-radius",
        "solvers",
        (max_r - r) / r,
        1e-8,
        "all exact-run iterates within R of the optimum, 300 steps".into(),
    ))
}

fn stopping_rule_bound() -> Result<InvariantResult> {
    let problem = diagonal_quadratic(&[1.0])?;
    let mut config = SolverConfig::for_problem(&problem, Algorithm::Stm, TauMode::Tau1, 200, 0);
    config.mu = 0.0; // exercise the degenerate worst case behind N_max
    config.x_start = Vector::new(vec![1.0])?;
    config.stopping = Some(StoppingConfig {
        variant: StoppingVariant::Theorem,
        epsilon: 1e-3,
        radius: 1.0,
        delta1: 0.0,
        delta2: 0.0,
        f_star: 0.0,
    });
    let budget = n_max(config.l, 1.0, 1e-3)?;
    let trace = stm_run(&problem, &mut GradientOracle::exact(0), &config)?;
    let fired_at = trace.stopped_at;
    let radius_worst = trace.r_tilde.last().copied().unwrap_or(0.0) - 1.0;
    let worst = match fired_at {
        Some(n) if (n as u64) <= budget => radius_worst,
        _ => f64::INFINITY,
    };
    Ok(check(
        "stopping-rule-bound",
        "solvers",
        worst,
        1e-8,
        format!("fired at {fired_at:?} within N_max = {budget}, pre-firing iterates inside R"),
    ))
}

fn gd_noise_floor() -> Result<InvariantResult> {
    let problem = diagonal_quadratic(&[0.1, 1.0])?;
    let mut config = SolverConfig::for_problem(&problem, Algorithm::Gd, TauMode::Tau1, 1000, 0);
    config.x_start = Vector::new(vec![1.0, 1.0])?;
    config.gd_step = Some(1.0);
    let bias = Vector::new(vec![-0.01, 0.0])?;
    let mut oracle = GradientOracle::new(
        OracleKind::Analytic(NoiseModel::Absolute { delta: 0.01, mode: AbsoluteMode::FixedBias(bias) }),
        0,
    );
    let trace = gd_run(&problem, &mut oracle, &config)?;
    let gaps = trace.gaps().expect("known optimum");
    // biased fixed point x¹ = delta/mu = 0.1 reached to 1% by k = 200
    let d200 = trace.records[200].dist_to_opt.expect("known optimum");
    let floor = gaps[500..].iter().copied().fold(f64::INFINITY, f64::min);
    let worst = ((d200 - 0.1).abs() - 1e-3).max(4.75e-4 - floor).max(0.0);
    Ok(check(
        "gd-noise-floor",
        "solvers",
        worst,
        0.0,
        format!("dist at 200 = {d200:.6}, min gap after 500 = {floor:.6e} >= 4.75e-4"),
    ))
}

fn trace_determinism(seed: u64) -> Result<InvariantResult> {
    let problem = nesterov_strongly_convex(8, 0.4, 9.0)?;
    let mut config = SolverConfig::for_problem(&problem, Algorithm::Stm, TauMode::Tau1, 80, seed);
    config.x_start = Vector::from_fn(8, |i| if i % 2 == 0 { 1.0 } else { -0.5 });
    let run = || -> Result<_> {
        let mut oracle = GradientOracle::new(
            OracleKind::Analytic(NoiseModel::Absolute { delta: 0.02, mode: AbsoluteMode::SphereUniform }),
            seed ^ 0xBEEF,
        );
        Ok(stm_run(&problem, &mut oracle, &config)?)
    };
    let mismatch = u32::from(run()? != run()?);
    Ok(check(
        "trace-determinism",
        "solvers",
        f64::from(mismatch),
        0.0,
        "two noisy 80-step runs with one seed compare bitwise equal".into(),
    ))
}

// -- problems --------------------------------------------------------------

fn optimum_stationarity() -> Result<InvariantResult> {
    let mut worst = f64::NEG_INFINITY;
    let mut rng = RngStream::derived(0, 110, 0);
    for problem in shipped_problems()? {
        let x_star = problem.x_star().expect("shipped problems carry optima").clone();
        let f_star = problem.f_star().expect("shipped problems carry optima");
        let grad_norm = problem.gradient(&x_star)?.norm();
        let scale = (problem.l_f() * x_star.norm()).max(1.0);
        worst = worst.max(grad_norm / (1e-8 * scale) - 1.0);
        // minimality along sampled rays, with room for rounding at f*
        for _ in 0..30 {
            let t = rng.uniform(-1.0, 1.0);
            let mut probe = x_star.clone();
            probe.add_scaled(t, &rng.unit_sphere(problem.dim()));
            let f = problem.value(&probe)?;
            worst = worst.max((f_star - f) / f_star.abs().max(1.0) - 1e-12);
        }
    }
    Ok(check(
        "optimum-stationarity",
        "problems",
        worst,
        0.0,
        "gradient vanishes at x*; sampled ray values stay above f*".into(),
    ))
}

fn constant_consistency(seed: u64) -> Result<InvariantResult> {
    let mut rng = RngStream::derived(seed, 111, 0);
    let mut worst = f64::NEG_INFINITY;
    for problem in shipped_problems()? {
        for _ in 0..50 {
            let x = rng.normal_vector(problem.dim());
            let y = rng.normal_vector(problem.dim());
            let d = x.dist(&y);
            if d <= 1e-12 {
                continue;
            }
            let gx = problem.gradient(&x)?;
            let gy = problem.gradient(&y)?;
            let lipschitz = gx.dist(&gy) / d;
            worst = worst.max(lipschitz / problem.l_f() - 1.0);
            let monotone = gx.sub(&gy).dot(&x.sub(&y)) / (d * d);
            worst = worst.max((problem.mu() - monotone) / problem.l_f());
        }
    }
    Ok(check(
        "constant-consistency",
        "problems",
        worst,
        1e-6,
        "sampled Lipschitz/monotonicity ratios against reported L_f and mu".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_scope_all_pass() {
        let report = run_verification(None, None, 0).unwrap();
        assert!(report.all_ok(), "failures:\n{}", report.render());
        assert_eq!(report.results.len(), 23);
        // one entry per scope at least
        for scope in SCOPES {
            assert!(report.results.iter().any(|r| r.scope == *scope), "missing {scope}");
        }
    }

    #[test]
    fn sequences_scope_filters() {
        let report = run_verification(Some("sequences"), None, 0).unwrap();
        assert!(report.all_ok());
        assert!(report.results.iter().all(|r| r.scope == "sequences"));
        assert_eq!(report.results.len(), 4);
    }

    #[test]
    fn poison_breaks_only_the_recurrence_check() {
        let report = run_verification(Some("sequences"), Some("recurrence"), 0).unwrap();
        assert!(!report.all_ok());
        let failure = report.first_failure().unwrap();
        assert_eq!(failure.name, "alpha-recurrence-residual");
        assert!(report.results.iter().filter(|r| !r.ok).count() == 1);
        assert!(report.render().contains("FAIL  alpha-recurrence-residual"));
    }

    #[test]
    fn unknown_scope_and_poison_are_config_errors() {
        assert!(matches!(
            run_verification(Some("solver"), None, 0),
            Err(HarnessError::Core(Error::Config(_)))
        ));
        assert!(matches!(
            run_verification(None, Some("gravity"), 0),
            Err(HarnessError::Core(Error::Config(_)))
        ));
    }

    #[test]
    fn report_renders_one_line_per_check_plus_summary() {
        let report = run_verification(Some("geometry"), None, 0).unwrap();
        let rendered = report.render();
        assert_eq!(rendered.lines().count(), report.results.len() + 1);
        assert!(rendered.contains("all 2 invariants hold"));
    }
}
