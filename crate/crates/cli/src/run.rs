//! Command dispatch. Each command turns a validated config into a JSON
//! payload plus a status.

use ctrfn_core::canonical::{self, CanonicalDecomposition, CanonicalError, Variant};
use ctrfn_core::charfn::{self, Degree, MatrixPolynomial};
use ctrfn_core::coincide::{self, Outcome};
use ctrfn_core::models::{self, ModelError};
use ctrfn_core::numlin::{self, c64, random, MatrixJson, Tolerance, C64};
use ctrfn_core::windowed::{FiberIndex, WindowedShiftOperator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{CoincideMethod, Command, DecomposeVariant, ModelSpec, RunConfig};
use crate::report::Status;
use crate::{sweep, RunError};

/// What a command produced, before it is wrapped into a report.
#[derive(Debug, Clone)]
pub struct CommandOutcome {
    pub results: Value,
    pub status: Status,
    pub certificates: Vec<Value>,
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

impl CommandOutcome {
    pub fn ok(results: Value) -> Self {
        Self {
            results,
            status: Status::Ok,
            certificates: Vec::new(),
            warnings: Vec::new(),
            error: None,
        }
    }

    fn warn(&mut self, status: Status, text: impl Into<String>) {
        self.status = self.status.join(status);
        self.warnings.push(text.into());
    }
}

pub fn run(command: Command, cfg: &RunConfig, tol: &Tolerance, seed: u64) -> Result<CommandOutcome, RunError> {
    if command == Command::Sweep {
        let grid = cfg.grid.as_ref().expect("validated");
        return sweep::sweep(grid, cfg, tol);
    }
    let spec = cfg.model.as_ref().expect("validated");
    let built = spec.build(tol)?;
    let mut out = match command {
        Command::Build => build(&built.op, built.params.clone(), tol)?,
        Command::Charfn => charfn_cmd(&built.op, cfg, tol)?,
        Command::Decompose => decompose(&built.op, cfg, tol)?,
        Command::Coincide => coincide_cmd(&built.op, cfg, tol, seed)?,
        Command::Classify => classify(&built.op, cfg, tol)?,
        Command::Verify => verify(&built.op, cfg, tol, seed)?,
        Command::Sweep => unreachable!(),
    };
    for w in built.warnings {
        out.warnings.insert(0, w);
    }
    Ok(out)
}

pub(crate) fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

/// Coefficients as `[re, im]` pairs when the polynomial is scalar.
pub(crate) fn scalar_coeffs(p: &MatrixPolynomial) -> Option<Vec<[f64; 2]>> {
    (p.dom() == 1 && p.cod() == 1).then(|| p.coeffs().iter().map(|c| pair(c[(0, 0)])).collect())
}

fn build(op: &WindowedShiftOperator, params: Value, tol: &Tolerance) -> Result<CommandOutcome, RunError> {
    let d = charfn::defect_data(op, tol)?;
    let side = |s: &charfn::DefectSide| json!({"dim": s.dim(), "support": [s.support().0, s.support().1], "spectrum": s.spectrum});
    let (lo, hi) = op.window();
    Ok(CommandOutcome::ok(json!({
        "params": params,
        "operator": op.to_json(),
        "window": [lo, hi],
        "defect": {"dt": side(&d.dt), "dt_star": side(&d.dt_star)},
    })))
}

fn charfn_cmd(op: &WindowedShiftOperator, cfg: &RunConfig, tol: &Tolerance) -> Result<CommandOutcome, RunError> {
    let degree = charfn::poly_degree(op, cfg.budget, tol)?;
    let theta = charfn::theta_coeffs(op, cfg.budget, tol)?;
    let mut values = Vec::with_capacity(cfg.points.len());
    for z in &cfg.points {
        let z = z.value();
        let m = charfn::theta_at(op, z, cfg.budget, tol)?;
        values.push(json!({"z": pair(z), "theta": MatrixJson::from(&m)}));
    }
    let mut out = CommandOutcome::ok(Value::Null);
    let purity = match models::is_purely_contractive(&theta, cfg.purity_grid, tol) {
        Ok(cert) => serde_json::to_value(cert).expect("serializes"),
        Err(ModelError::Inconclusive { boundary_max, slack }) => {
            out.warn(
                Status::Inconclusive,
                "purity undecided on the boundary grid; raise purity_grid",
            );
            json!({"inconclusive": {"boundary_max": boundary_max, "slack": slack, "grid": cfg.purity_grid}})
        }
        Err(e) => return Err(e.into()),
    };
    if let Degree::AtLeast(n) = degree {
        out.warn(
            Status::Inconclusive,
            format!("degree not reached within budget {n}; the series was truncated"),
        );
    }
    out.results = json!({
        "degree": degree,
        "dims": {"dt": theta.dom(), "dt_star": theta.cod()},
        "theta": theta.to_json(),
        "coeffs": scalar_coeffs(&theta),
        "values": values,
        "purity": purity,
        "budget": cfg.budget,
    });
    Ok(out)
}

/// Truncation and convergence failures are inconclusive; anything else is an error.
fn canonical_failure(e: CanonicalError) -> Result<CommandOutcome, RunError> {
    match e {
        CanonicalError::NotStabilized { .. }
        | CanonicalError::DegreeUndetected { .. }
        | CanonicalError::NotNilpotent { .. } => {
            let mut out = CommandOutcome::ok(json!({"reason": e.to_string()}));
            out.warn(Status::Inconclusive, e.to_string());
            Ok(out)
        }
        other => Err(other.into()),
    }
}

fn decomposition_json(d: &CanonicalDecomposition, tol: &Tolerance) -> Value {
    let mut v = serde_json::to_value(d.report()).expect("serializes");
    v["valid"] = json!(d.is_valid(tol));
    v
}

fn record(out: &mut CommandOutcome, d: &CanonicalDecomposition, tol: &Tolerance) {
    out.certificates
        .push(json!({"variant": d.variant, "exactness": d.exactness}));
    if !d.is_valid(tol) {
        out.warn(
            Status::Inconclusive,
            format!(
                "{:?} splitting fails its checks at eq_tol {:.1e}",
                d.variant, tol.eq_tol
            ),
        );
    }
}

fn decompose(op: &WindowedShiftOperator, cfg: &RunConfig, tol: &Tolerance) -> Result<CommandOutcome, RunError> {
    let single = |r: Result<CanonicalDecomposition, CanonicalError>| -> Result<CommandOutcome, RunError> {
        let d = match r {
            Ok(d) => d,
            Err(e) => return canonical_failure(e),
        };
        let mut out = CommandOutcome::ok(json!({"decomposition": decomposition_json(&d, tol)}));
        record(&mut out, &d, tol);
        Ok(out)
    };
    match cfg.variant {
        DecomposeVariant::Canonical => single(canonical::canonical_decomposition(
            op,
            Variant::Canonical,
            cfg.radius,
            tol,
        )),
        DecomposeVariant::StarCanonical => single(canonical::canonical_decomposition(
            op,
            Variant::StarCanonical,
            cfg.radius,
            tol,
        )),
        DecomposeVariant::User => {
            let [lo, hi] = cfg.h0.expect("validated");
            single(canonical::coordinate_splitting(op, (lo, hi), cfg.radius, tol))
        }
        DecomposeVariant::Minimal => {
            let mins = match canonical::minimal_nilpotents(op, cfg.radius, tol) {
                Ok(m) => m,
                Err(e) => return canonical_failure(e),
            };
            let (n0, ns0) = (mins.n0(), mins.nstar0());
            let k = n0.nrows().max(ns0.nrows()).max(1);
            let (r0, rs) = (numlin::rank_sequence(n0, k, tol), numlin::rank_sequence(ns0, k, tol));
            let intertwiner = canonical::jordan_unitary_intertwiner(n0, ns0, tol)?
                .map(|al| json!({"residual": al.residual, "unitarity_defect": al.unitarity_defect, "unitary": MatrixJson::from(&al.unitary)}));
            let mut out = CommandOutcome::ok(json!({
                "canonical": decomposition_json(&mins.canonical, tol),
                "star_canonical": decomposition_json(&mins.star, tol),
                "minimal": decomposition_json(&mins.minimal, tol),
                "star_minimal": decomposition_json(&mins.star_minimal, tol),
                "rank_sequences": {"n0": r0, "nstar0": rs},
                "intertwiner": intertwiner,
            }));
            for d in [&mins.canonical, &mins.star] {
                record(&mut out, d, tol);
            }
            if r0 != rs {
                out.warn(Status::Inconclusive, "minimal nilpotents have different rank sequences");
            }
            Ok(out)
        }
    }
}

fn coincide_cmd(
    op: &WindowedShiftOperator,
    cfg: &RunConfig,
    tol: &Tolerance,
    seed: u64,
) -> Result<CommandOutcome, RunError> {
    let p = charfn::theta_coeffs(op, cfg.budget, tol)?;
    let q = match (&cfg.other, &cfg.target) {
        (Some(spec), None) => {
            let other: ModelSpec = spec.clone();
            charfn::theta_coeffs(&other.build(tol)?.op, cfg.budget, tol)?
        }
        (None, Some(t)) => t.value()?,
        _ => unreachable!("validated"),
    };
    let scalar = |m: &MatrixPolynomial| m.dom() == 1 && m.cod() == 1;
    let monomial = |m: &MatrixPolynomial| m.support(tol.rank_tol).len() == 1;
    let method = match cfg.method {
        CoincideMethod::Auto if scalar(&p) && scalar(&q) => CoincideMethod::Scalar,
        CoincideMethod::Auto if monomial(&p) && monomial(&q) => CoincideMethod::Monomial,
        CoincideMethod::Auto => CoincideMethod::General,
        m => m,
    };
    let outcome = match method {
        CoincideMethod::Scalar => coincide::coincide_scalar(&p, &q, tol)?,
        CoincideMethod::Monomial => coincide::coincide_monomial(&p, &q, tol)?,
        _ => coincide::coincide_general(&p, &q, cfg.restarts, seed, tol),
    };
    let mut out = CommandOutcome::ok(json!({
        "method": method,
        "outcome": outcome.to_json(),
        "p": p.to_json(),
        "q": q.to_json(),
    }));
    if let Outcome::NoCertificate { best_residual } = outcome {
        out.warn(
            Status::Inconclusive,
            format!(
                "no certificate after {} restarts (best residual {best_residual:.3e})",
                cfg.restarts
            ),
        );
    }
    Ok(out)
}

fn classify(op: &WindowedShiftOperator, cfg: &RunConfig, tol: &Tolerance) -> Result<CommandOutcome, RunError> {
    match canonical::classify_degenerate(op, cfg.radius, tol) {
        Ok(c) => Ok(CommandOutcome::ok(serde_json::to_value(c).expect("serializes"))),
        Err(e) => canonical_failure(e),
    }
}

struct Check {
    name: &'static str,
    pass: Option<bool>,
    value: Value,
    tolerance: Option<f64>,
}

impl Check {
    fn measured(name: &'static str, value: f64, tolerance: f64) -> Self {
        Self {
            name,
            pass: Some(value <= tolerance),
            value: json!(value),
            tolerance: Some(tolerance),
        }
    }

    fn undecided(name: &'static str, why: String) -> Self {
        Self {
            name,
            pass: None,
            value: json!(why),
            tolerance: None,
        }
    }

    fn json(&self) -> Value {
        json!({"name": self.name, "pass": self.pass, "value": self.value, "tolerance": self.tolerance})
    }
}

fn random_vector(index: &FiberIndex, rng: &mut ChaCha8Rng) -> ctrfn_core::WindowVector {
    let g = random::gaussian(index.dim(), 1, rng);
    index.unflatten(&g.column(0).into_owned())
}

/// Self-consistency checks on one model; any failed check makes the run an error.
fn verify(op: &WindowedShiftOperator, cfg: &RunConfig, tol: &Tolerance, seed: u64) -> Result<CommandOutcome, RunError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let mut out = CommandOutcome::ok(Value::Null);

    match charfn::defect_data(op, tol) {
        Ok(_) => checks.push(Check {
            name: "contraction",
            pass: Some(true),
            value: json!("defect grams are positive semidefinite"),
            tolerance: Some(tol.eq_tol),
        }),
        Err(e) => checks.push(Check {
            name: "contraction",
            pass: Some(false),
            value: json!(e.to_string()),
            tolerance: Some(tol.eq_tol),
        }),
    }

    let (lo, hi) = op.window();
    let reach = op.reach();
    let index = FiberIndex::new(op, lo - reach - 2, hi + reach + 2);
    let mut duality: f64 = 0.0;
    for _ in 0..cfg.samples {
        let (x, y) = (random_vector(&index, &mut rng), random_vector(&index, &mut rng));
        let gap = (op.apply(&x).inner(&y) - x.inner(&op.adjoint_apply(&y))).norm();
        duality = duality.max(gap / (x.norm() * y.norm()).max(f64::MIN_POSITIVE));
    }
    checks.push(Check::measured("adjoint_duality", duality, tol.eq_tol));

    let degree = charfn::poly_degree(op, cfg.budget, tol)?;
    match degree {
        Degree::Exact(_) => {
            let theta = charfn::theta_coeffs(op, cfg.budget, tol)?;
            let mut gap: f64 = 0.0;
            for _ in 0..cfg.samples {
                let r = 0.95 * rng.random::<f64>().sqrt();
                let t = 2.0 * std::f64::consts::PI * rng.random::<f64>();
                let z = c64(r * t.cos(), r * t.sin());
                let direct = charfn::theta_at(op, z, cfg.budget, tol)?;
                gap = gap.max(numlin::op_norm(&(direct - theta.eval(z))));
            }
            checks.push(Check::measured("theta_series", gap, tol.eq_tol));
        }
        Degree::AtLeast(n) => checks.push(Check::undecided(
            "theta_series",
            format!("degree not reached within budget {n}"),
        )),
    }

    match canonical::minimal_nilpotents(op, cfg.radius, tol) {
        Ok(mins) => {
            let worst = [&mins.canonical, &mins.star]
                .iter()
                .map(|d| {
                    let c = &d.checks;
                    c.orthogonality
                        .max(c.triangularity)
                        .max(c.isometry)
                        .max(c.coisometry)
                        .max(c.nilpotency)
                })
                .fold(0.0, f64::max);
            checks.push(Check::measured("extremal_splittings", worst, tol.eq_tol));
            for d in [&mins.canonical, &mins.star] {
                out.certificates
                    .push(json!({"variant": d.variant, "exactness": d.exactness}));
            }
            let same = (mins.canonical.mult_s, mins.canonical.mult_c) == (mins.star.mult_s, mins.star.mult_c);
            checks.push(Check {
                name: "multiplicities",
                pass: Some(same),
                value: json!({
                    "canonical": [mins.canonical.mult_s, mins.canonical.mult_c],
                    "star_canonical": [mins.star.mult_s, mins.star.mult_c],
                }),
                tolerance: None,
            });
            let (n0, ns0) = (mins.n0(), mins.nstar0());
            let k = n0.nrows().max(ns0.nrows()).max(1);
            let (r0, rs) = (numlin::rank_sequence(n0, k, tol), numlin::rank_sequence(ns0, k, tol));
            checks.push(Check {
                name: "minimal_nilpotents",
                pass: Some(r0 == rs),
                value: json!({"n0": r0, "nstar0": rs}),
                tolerance: Some(tol.rank_tol),
            });
        }
        Err(e @ (CanonicalError::NotStabilized { .. } | CanonicalError::DegreeUndetected { .. })) => {
            checks.push(Check::undecided("extremal_splittings", e.to_string()));
        }
        Err(e) => return Err(e.into()),
    }

    let unitary = match canonical::unitary_part_dim(op, cfg.steps, cfg.radius, tol) {
        Ok(n) => json!(n),
        Err(e) => json!(e.to_string()),
    };

    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| c.pass == Some(false))
        .map(|c| c.name)
        .collect();
    if !failed.is_empty() {
        out.status = Status::Error;
        out.error = Some(format!("failed checks: {}", failed.join(", ")));
    } else if checks.iter().any(|c| c.pass.is_none()) {
        out.warn(Status::Inconclusive, "some checks could not be decided");
    }
    out.results = json!({
        "checks": checks.iter().map(Check::json).collect::<Vec<_>>(),
        "degree": degree,
        "unitary_part_dim": unitary,
        "samples": cfg.samples,
    });
    Ok(out)
}
