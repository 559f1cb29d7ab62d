use std::io::Write;

use serde_json::json;
use sigmaflow::curvature::{curvature_at, GeometryError};
use sigmaflow::expr::parse;
use sigmaflow::flow::{self, FlowError, FlowState, StepControl};
use sigmaflow::hodge::{self, HodgeError, TorusField};
use sigmaflow::models::{builtin, ModelError};
use sigmaflow::sigma::{sigma_profile_unchecked, SigmaError};
use sigmaflow::soliton::{self, SolitonError, SolitonField};

use crate::spec::{decode, MetricSpecFile, SpecError};
use crate::{CurvatureArgs, Failure, FlowArgs, HodgeArgs, Source, VerifyArgs};
use crate::{EXIT_FLOW_ABORT, EXIT_OK, EXIT_VERIFY_FAILED};

fn geometry_failure(e: GeometryError) -> Failure {
    match e {
        GeometryError::OutsideDomain { .. }
        | GeometryError::PointDimension { .. }
        | GeometryError::Asymmetric { .. }
        | GeometryError::Dimension(_)
        | GeometryError::Domain(_)
        | GeometryError::VariableOutOfRange { .. } => Failure::input(e.to_string()),
        _ => Failure::geometry(e.to_string()),
    }
}

fn sigma_failure(e: SigmaError) -> Failure {
    match e {
        SigmaError::Geometry(g) => geometry_failure(g),
        SigmaError::Dimension(_) | SigmaError::IndexOutOfRange { .. } => {
            Failure::input(e.to_string())
        }
        _ => Failure::geometry(e.to_string()),
    }
}

fn model_failure(e: ModelError) -> Failure {
    match e {
        ModelError::Geometry(g) => geometry_failure(g),
        ModelError::Sigma(s) => sigma_failure(s),
        ModelError::NonPositiveWarping { .. } => Failure::geometry(e.to_string()),
        _ => Failure::input(e.to_string()),
    }
}

fn spec_failure(e: SpecError) -> Failure {
    match e {
        SpecError::Geometry(g) => geometry_failure(g),
        other => Failure::input(other.to_string()),
    }
}

fn soliton_failure(e: SolitonError) -> Failure {
    match e {
        SolitonError::Geometry(g) => geometry_failure(g),
        SolitonError::Sigma(s) => sigma_failure(s),
        SolitonError::NoSolitonData(_)
        | SolitonError::FieldDimension { .. }
        | SolitonError::NoProbes => Failure::input(e.to_string()),
        _ => Failure::geometry(e.to_string()),
    }
}

fn load(source: &Source) -> Result<(String, MetricSpecFile), Failure> {
    match (&source.spec, &source.builtin) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
            let spec = decode(&text).map_err(|e| match e {
                SpecError::Json { .. } => Failure::input(format!("{}: {e}", path.display())),
                other => spec_failure(other),
            })?;
            Ok((path.display().to_string(), spec))
        }
        (None, Some(name)) => {
            let model = builtin(name).map_err(model_failure)?;
            Ok((model.name.clone(), MetricSpecFile::from_model(&model)))
        }
        (None, None) => Err(Failure::input("one of --spec or --builtin is required")),
    }
}

fn parse_point(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|c| {
            c.trim().parse::<f64>().map_err(|_| {
                Failure::input(format!("invalid coordinate '{}' in --point", c.trim()))
            })
        })
        .collect()
}

fn io_failure(e: std::io::Error) -> Failure {
    Failure::input(format!("write failed: {e}"))
}

fn rows(t: &sigmaflow::tensor::TensorValue) -> Vec<Vec<f64>> {
    let n = t.dim();
    t.components().chunks(n).map(<[f64]>::to_vec).collect()
}

pub fn curvature(
    a: &CurvatureArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Failure> {
    let (name, spec) = load(&a.source)?;
    let chart = &spec.chart;
    let point = match &a.point {
        Some(p) => parse_point(p)?,
        None => chart
            .domain()
            .intervals()
            .iter()
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect(),
    };
    if point.len() != chart.dim() {
        return Err(Failure::input(format!(
            "--point has {} coordinates, chart has dimension {}",
            point.len(),
            chart.dim()
        )));
    }
    let point = chart.domain().normalize(&point).map_err(geometry_failure)?;
    let pack = curvature_at(chart, &point).map_err(geometry_failure)?;
    let n = pack.dim();
    let profile = if n >= 3 {
        Some(sigma_profile_unchecked(&pack, spec.k, spec.l).map_err(sigma_failure)?)
    } else {
        None
    };
    let einstein = pack.traceless_ricci_sup();
    let weyl = pack.weyl.as_ref().map(|w| w.sup_norm());
    let cotton = pack.cotton.as_ref().map(|c| c.sup_norm());

    if a.json {
        let doc = json!({
            "model": name,
            "dim": n,
            "point": point,
            "metric": rows(&pack.metric),
            "ricci": rows(&pack.ricci),
            "scalar_curvature": pack.scalar,
            "ricci_minus_metric_sup": einstein,
            "schouten": pack.schouten.as_ref().map(rows),
            "weyl_sup": weyl,
            "cotton_sup": cotton,
            "schouten_eigenvalues": profile.as_ref().map(|p| p.eigenvalues.clone()),
            "sigma": profile.as_ref().map(|p| p.sigma.clone()),
            "k": spec.k,
            "l": spec.l,
            "cone": profile.as_ref().map(|p| p.cone),
            "log_quotient": profile.as_ref().and_then(|p| p.log_quotient),
        });
        writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(&doc).expect("serializable")
        )
        .map_err(io_failure)?;
    } else {
        let coords: Vec<String> = point.iter().map(|v| format!("{v}")).collect();
        let mut w = || -> std::io::Result<()> {
            writeln!(out, "model: {name}")?;
            writeln!(out, "point: {}", coords.join(", "))?;
            writeln!(out, "dimension: {n}")?;
            writeln!(out, "R = {:.6}", pack.scalar)?;
            writeln!(out, "|Ric - (R/n) g|_sup = {einstein:.3e}")?;
            if let Some(w) = weyl {
                writeln!(out, "|W|_sup = {w:.3e}")?;
            }
            if let Some(c) = cotton {
                writeln!(out, "|C|_sup = {c:.3e}")?;
            }
            if let Some(p) = &profile {
                let eig: Vec<String> = p.eigenvalues.iter().map(|v| format!("{v:.6}")).collect();
                writeln!(out, "schouten eigenvalues: {}", eig.join(", "))?;
                for (j, s) in p.sigma.iter().enumerate().skip(1) {
                    writeln!(out, "sigma_{j} = {s:.6}")?;
                }
                writeln!(out, "(k, l) = ({}, {})", p.k, p.l)?;
                writeln!(out, "cone: {}", p.cone)?;
                if let Some(q) = p.log_quotient {
                    writeln!(out, "log(sigma_k/sigma_l) = {q:.6}")?;
                }
            }
            Ok(())
        };
        w().map_err(io_failure)?;
    }
    if let Some(p) = &profile {
        if !p.cone && spec.k != spec.l {
            writeln!(
                err,
                "error: cone condition fails: sigma_{} = {}, sigma_{} = {}",
                p.k,
                p.sigma(p.k),
                p.l,
                p.sigma(p.l)
            )
            .map_err(io_failure)?;
            return Ok(crate::EXIT_GEOMETRY);
        }
    }
    Ok(EXIT_OK)
}

pub fn verify(a: &VerifyArgs, out: &mut dyn Write, _err: &mut dyn Write) -> Result<i32, Failure> {
    if a.probes == 0 {
        return Err(Failure::input("--probes must be at least 1"));
    }
    if !(a.tolerance > 0.0 && a.tolerance.is_finite()) {
        return Err(Failure::input("--tolerance must be positive"));
    }
    let (name, mut spec) = load(&a.source)?;
    if let Some(l) = &a.lambda {
        spec.lambda = Some(parse(l).map_err(|e| Failure::input(format!("--lambda: {e}")))?);
    }
    let sol = spec.soliton(&name).map_err(soliton_failure)?;
    let probes = soliton::probe_points(sol.chart.domain(), a.probes, a.seed);
    let report = soliton::soliton_residual(&sol, &probes, a.tolerance).map_err(soliton_failure)?;
    let lemma = if a.lemma && matches!(sol.field, SolitonField::Gradient(_)) {
        Some(soliton::lemma_structural_check(&sol, &probes).map_err(soliton_failure)?)
    } else {
        None
    };
    let pass = report.passes();
    let c = report.classification;
    if a.json {
        let doc = json!({
            "model": name,
            "k": sol.k,
            "l": sol.l,
            "probes": report.probes,
            "seed": a.seed,
            "tolerance": report.tolerance,
            "residual_sup": report.residual.sup,
            "residual_mean": report.residual.mean,
            "lie_sup": report.lie.sup,
            "lie_mean": report.lie.mean,
            "psi_sup": report.psi.sup,
            "psi_mean": report.psi.mean,
            "trivial": report.trivial,
            "classification": c.kind.to_string(),
            "lambda_min": c.lambda_min,
            "lambda_max": c.lambda_max,
            "lemma": lemma.map(|r| json!({"a": r.a, "b": r.b, "c": r.c})),
            "pass": pass,
        });
        writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(&doc).expect("serializable")
        )
        .map_err(io_failure)?;
    } else {
        let mut w = || -> std::io::Result<()> {
            writeln!(out, "model: {name}")?;
            writeln!(out, "(k, l) = ({}, {})", sol.k, sol.l)?;
            writeln!(out, "probes: {} (seed {:#x})", report.probes, a.seed)?;
            writeln!(
                out,
                "residual: sup {:.3e}, mean {:.3e}",
                report.residual.sup, report.residual.mean
            )?;
            writeln!(
                out,
                "|L_X g|: sup {:.3e}, mean {:.3e}",
                report.lie.sup, report.lie.mean
            )?;
            writeln!(
                out,
                "|psi|: sup {:.3e}, mean {:.3e}",
                report.psi.sup, report.psi.mean
            )?;
            writeln!(out, "trivial: {}", report.trivial)?;
            writeln!(
                out,
                "classification: {} (lambda in [{:.6}, {:.6}])",
                c.kind, c.lambda_min, c.lambda_max
            )?;
            if let Some(r) = lemma {
                writeln!(
                    out,
                    "lemma residuals: (a) {:.3e}, (b) {:.3e}, (c) {:.3e}",
                    r.a, r.b, r.c
                )?;
            } else if a.lemma {
                writeln!(out, "lemma residuals: not applicable to a vector field")?;
            }
            writeln!(out, "tolerance: {:e}", report.tolerance)?;
            writeln!(out, "result: {}", if pass { "PASS" } else { "FAIL" })
        };
        w().map_err(io_failure)?;
    }
    Ok(if pass { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

fn flow_input_failure(e: FlowError) -> Failure {
    Failure::input(e.to_string())
}

/// CSV with a mandatory header and 17 significant digits.
pub fn flow_csv(records: &[flow::FlowRecord]) -> String {
    let mut s = String::from("t,E_l,log_r_kl,sup_dev,volume\n");
    for r in records {
        s.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.t, r.e_l, r.log_r, r.sup_dev, r.volume
        ));
    }
    s
}

pub fn flow(a: &FlowArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    if !(a.t_end > 0.0 && a.t_end.is_finite()) {
        return Err(Failure::input("--t-end must be positive"));
    }
    let cadence = a.cadence.unwrap_or(a.t_end / 20.0);
    if !(cadence > 0.0 && cadence.is_finite()) {
        return Err(Failure::input("--cadence must be positive"));
    }
    let control = match a.dt {
        Some(dt) if !(dt > 0.0 && dt.is_finite()) => {
            return Err(Failure::input("--dt must be positive"))
        }
        Some(dt) => StepControl::Fixed(dt),
        None if !(a.dt_factor > 0.0 && a.dt_factor.is_finite()) => {
            return Err(Failure::input("--dt-factor must be positive"))
        }
        None => StepControl::Adaptive {
            factor: a.dt_factor,
        },
    };
    let u0 = parse(&a.u0).map_err(|e| Failure::input(format!("--u0: {e}")))?;
    if u0.max_var().is_some_and(|v| v > 0) {
        return Err(Failure::input("--u0 may only use x1 (= θ)"));
    }
    let initial = FlowState::from_expr(a.n, a.k, a.l, a.grid, &u0).map_err(flow_input_failure)?;
    if a.l > 0 && 2 * a.l == a.n {
        writeln!(err, "warning: E_{{n/2}} diagnostic omitted").map_err(io_failure)?;
    }
    let result = flow::run(initial, a.t_end, cadence, control);
    let csv = flow_csv(&result.records);
    match &a.csv {
        Some(path) => std::fs::write(path, &csv)
            .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))?,
        None => out.write_all(csv.as_bytes()).map_err(io_failure)?,
    }
    if let Some(path) = &a.state {
        let s = &result.state;
        let doc = json!({"n": s.n, "k": s.k, "l": s.l, "t": s.t, "grid": s.grid(), "u": s.u});
        std::fs::write(
            path,
            serde_json::to_string_pretty(&doc).expect("serializable") + "\n",
        )
        .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))?;
    }
    if let Some(e) = result.abort {
        let last = match result.records.last() {
            Some(r) => format!("last good t = {:.16e}", result.state.t.max(r.t)),
            None => "no valid state".to_string(),
        };
        writeln!(
            err,
            "error: flow aborted after {} steps: {e}; {last}",
            result.steps
        )
        .map_err(io_failure)?;
        return Ok(EXIT_FLOW_ABORT);
    }
    Ok(EXIT_OK)
}

fn hodge_failure(e: HodgeError) -> Failure {
    match e {
        HodgeError::NonFinite { .. } => Failure::geometry(e.to_string()),
        _ => Failure::input(e.to_string()),
    }
}

pub fn hodge(a: &HodgeArgs, out: &mut dyn Write, _err: &mut dyn Write) -> Result<i32, Failure> {
    let exprs = a
        .field
        .split(',')
        .enumerate()
        .map(|(i, s)| {
            parse(s.trim()).map_err(|e| Failure::input(format!("--field component {}: {e}", i + 1)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let x = TorusField::from_exprs(a.n, a.grid, &exprs).map_err(hodge_failure)?;
    let d = hodge::hodge_decompose(&x);
    let c = hodge::checks(&x, &d);
    let h_sup = d.h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if a.json {
        let doc = json!({
            "dim": a.n,
            "grid": a.grid,
            "X_sup": x.sup_norm(),
            "grad_sup": d.gradient.sup_norm(),
            "Y_sup": d.y.sup_norm(),
            "h_sup": h_sup,
            "reconstruction": c.reconstruction,
            "divergence": c.divergence,
            "orthogonality": c.orthogonality,
            "idempotence": c.idempotence,
        });
        writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(&doc).expect("serializable")
        )
        .map_err(io_failure)?;
    } else {
        let mut w = || -> std::io::Result<()> {
            writeln!(out, "torus: dimension {}, grid {}", a.n, a.grid)?;
            writeln!(out, "X_sup = {:.6e}", x.sup_norm())?;
            writeln!(out, "grad_sup = {:.6e}", d.gradient.sup_norm())?;
            writeln!(out, "Y_sup = {:.6e}", d.y.sup_norm())?;
            writeln!(out, "h_sup = {h_sup:.6e}")?;
            writeln!(out, "reconstruction = {:.3e}", c.reconstruction)?;
            writeln!(out, "divergence = {:.3e}", c.divergence)?;
            writeln!(out, "orthogonality = {:.3e}", c.orthogonality)?;
            writeln!(out, "idempotence = {:.3e}", c.idempotence)
        };
        w().map_err(io_failure)?;
    }
    Ok(EXIT_OK)
}
