//! Command implementations.

use std::f64::consts::PI;
use std::path::Path;

use bargmann_core::band::{self, BzGrid};
use bargmann_core::connection::{self, LoopSample};
use bargmann_core::extrinsic::curves::{self, ChartCurve};
use bargmann_core::invariants::InvariantSet;
use bargmann_core::linalg::CMat;
use bargmann_core::local_geom;
use bargmann_core::models::{self, veronese, Model, ModelFamily};
use bargmann_core::{tomography, Complex64, StateFamily};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::args::{BandCommand, Command, CurveAction, RunConfig, Which};
use crate::error::CliError;
use crate::formats;
use crate::output::{self, Cell, Table};

/// Step of the curve reconstruction integrator.
const ODE_STEP: f64 = 1e-4;

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Invariants {
            common,
            points,
            inline,
        } => {
            let cfg = RunConfig::resolve(
                "invariants",
                &common,
                json!({ "points": points, "inline": inline }),
            )?;
            dry_or(&cfg, common.dry_run, || {
                invariants(
                    &cfg,
                    points.as_deref(),
                    inline.into_iter().map(|c| c.0).collect(),
                )
            })
        }
        Command::Geometry {
            common,
            which,
            range,
        } => {
            let cfg = RunConfig::resolve(
                "geometry",
                &common,
                json!({ "which": which, "range": range }),
            )?;
            dry_or(&cfg, common.dry_run, || {
                geometry(&cfg, which, range.as_deref())
            })
        }
        Command::Berry {
            common,
            center,
            radius,
            samples,
            references,
        } => {
            let opts = json!({ "center": center, "radius": radius, "samples": samples, "references": references });
            let cfg = RunConfig::resolve("berry", &common, opts)?;
            dry_or(&cfg, common.dry_run, || {
                let refs = references.into_iter().map(|c| c.0).collect();
                berry(&cfg, &center.0, radius, samples, refs)
            })
        }
        Command::Tomography {
            common,
            input,
            anchor,
            random,
            dim,
        } => {
            let opts = json!({ "input": input, "anchor": anchor, "random": random, "dim": dim });
            let cfg = RunConfig::resolve("tomography", &common, opts)?;
            dry_or(&cfg, common.dry_run, || {
                tomography_cmd(&cfg, input.as_deref(), anchor, random, dim)
            })
        }
        Command::Band { command } => match command {
            BandCommand::Polarization { common, input } => {
                let cfg =
                    RunConfig::resolve("band polarization", &common, json!({ "input": input }))?;
                dry_or(&cfg, common.dry_run, || {
                    polarization(&cfg, input.as_deref())
                })
            }
            BandCommand::Cumulants {
                common,
                order,
                qstep,
            } => {
                let cfg = RunConfig::resolve(
                    "band cumulants",
                    &common,
                    json!({ "order": order, "qstep": qstep }),
                )?;
                dry_or(&cfg, common.dry_run, || cumulants(&cfg, order, qstep))
            }
            BandCommand::Conductivity { common, q } => {
                let cfg = RunConfig::resolve("band conductivity", &common, json!({ "q": q }))?;
                dry_or(&cfg, common.dry_run, || conductivity(&cfg, &q.0))
            }
            BandCommand::Export { common, payload } => {
                let cfg =
                    RunConfig::resolve("band export", &common, json!({ "payload": payload }))?;
                dry_or(&cfg, common.dry_run, || export(&cfg, payload.into()))
            }
        },
        Command::Curve {
            common,
            curve,
            action,
            samples,
        } => {
            let opts = json!({ "curve": curve, "action": action, "samples": samples });
            let cfg = RunConfig::resolve("curve", &common, opts)?;
            dry_or(&cfg, common.dry_run, || {
                curve_cmd(&cfg, &curve, action, samples)
            })
        }
    }
}

fn dry_or<F: FnOnce() -> Result<(), CliError>>(
    cfg: &RunConfig,
    dry_run: bool,
    f: F,
) -> Result<(), CliError> {
    if dry_run {
        println!(
            "{}",
            serde_json::to_string_pretty(cfg).map_err(|e| CliError::Internal(e.to_string()))?
        );
        return Ok(());
    }
    f()
}

fn out(cfg: &RunConfig) -> Option<&Path> {
    cfg.out.as_deref()
}

fn build(cfg: &RunConfig) -> Result<ModelFamily, CliError> {
    Ok(cfg.model()?.build()?)
}

fn state_family(cfg: &RunConfig) -> Result<StateFamily, CliError> {
    match build(cfg)? {
        ModelFamily::States(f) => Ok(f),
        ModelFamily::Kernel(_) => Err(CliError::Input(format!(
            "model {} has no state vectors",
            cfg.model.as_deref().unwrap_or("")
        ))),
    }
}

fn check_dim(point: &[f64], dim: usize) -> Result<(), CliError> {
    if point.len() != dim || point.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Input(format!(
            "point {point:?} needs {dim} finite coordinates"
        )));
    }
    Ok(())
}

fn invariants(cfg: &RunConfig, file: Option<&Path>, inline: Vec<Vec<f64>>) -> Result<(), CliError> {
    let model = build(cfg)?;
    let family = model.as_family();
    let points = match file {
        Some(path) => formats::read_points(path)?,
        None => inline,
    };
    if points.is_empty() {
        return Err(CliError::Input(
            "no points given; use --points or --point".into(),
        ));
    }
    for p in &points {
        check_dim(p, family.param_dim())?;
    }
    let labels = (0..points.len()).map(|i| format!("p{i}")).collect();
    let set = InvariantSet::from_family(family, &points, labels)?;
    output::emit(out(cfg), &formats::invariants_to_json(&set))?;
    let n = set.len();
    let (mut lo, mut hi, mut phase) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for i in 0..n {
        for j in (i + 1)..n {
            lo = lo.min(set.p2(i, j));
            hi = hi.max(set.p2(i, j));
        }
    }
    for r in set.records() {
        if r.value.norm() > cfg.tol.orthogonal {
            phase = phase.max(r.value.arg().abs());
        }
    }
    let pairs = n > 1;
    output::report(
        out(cfg),
        &json!({ "points": n, "min_p2": pairs.then_some(lo), "max_p2": pairs.then_some(hi), "max_abs_phase": phase }),
    );
    Ok(())
}

/// Parameter coordinates of every grid node, last axis fastest.
fn grid_nodes(cfg: &RunConfig, range: Option<&str>) -> Result<Vec<Vec<f64>>, CliError> {
    let model = cfg.model()?;
    let sizes = cfg.grid()?;
    let desc = model.descriptor();
    if sizes.len() != desc.param_dim {
        return Err(CliError::Input(format!(
            "grid has {} axes, model has {}",
            sizes.len(),
            desc.param_dim
        )));
    }
    let axes: Vec<Vec<f64>> = match (range, &desc.periods) {
        (None, Some(periods)) => sizes
            .iter()
            .zip(periods)
            .map(|(&n, &p)| (0..n).map(|i| i as f64 * p / n as f64).collect())
            .collect(),
        _ => {
            let boxes = match range {
                Some(r) => parse_range(r)?,
                None => default_box(model),
            };
            if boxes.len() != sizes.len() {
                return Err(CliError::Input(format!(
                    "range has {} axes, grid has {}",
                    boxes.len(),
                    sizes.len()
                )));
            }
            // Cell midpoints keep clear of chart poles on the box edges.
            sizes
                .iter()
                .zip(&boxes)
                .map(|(&n, &(lo, hi))| {
                    (0..n)
                        .map(|i| lo + (i as f64 + 0.5) * (hi - lo) / n as f64)
                        .collect()
                })
                .collect()
        }
    };
    let mut nodes = vec![vec![]];
    for axis in &axes {
        nodes = nodes
            .into_iter()
            .flat_map(|prefix: Vec<f64>| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    Ok(nodes)
}

fn parse_range(s: &str) -> Result<Vec<(f64, f64)>, CliError> {
    s.split(',')
        .map(|part| {
            let (lo, hi) = part
                .split_once(':')
                .ok_or_else(|| CliError::Input(format!("bad range {part:?}")))?;
            let lo: f64 = lo
                .trim()
                .parse()
                .map_err(|_| CliError::Input(format!("bad range {part:?}")))?;
            let hi: f64 = hi
                .trim()
                .parse()
                .map_err(|_| CliError::Input(format!("bad range {part:?}")))?;
            if hi.is_nan() || lo.is_nan() || hi <= lo {
                return Err(CliError::Input(format!("empty range {part:?}")));
            }
            Ok((lo, hi))
        })
        .collect()
}

fn default_box(model: &Model) -> Vec<(f64, f64)> {
    match model {
        Model::SpinHalfAngles | Model::SpinOne => vec![(0.0, PI), (0.0, 2.0 * PI)],
        Model::Lll { .. } => vec![(-3.0, 3.0), (-3.0, 3.0)],
        _ => vec![(-2.0, 2.0), (-2.0, 2.0)],
    }
}

fn index_names(prefix: &str, dim: usize, rank: usize) -> Vec<String> {
    (0..dim.pow(rank as u32))
        .map(|flat| {
            let mut idx = vec![0; rank];
            let mut f = flat;
            for slot in idx.iter_mut().rev() {
                *slot = f % dim;
                f /= dim;
            }
            format!(
                "{prefix}_{}",
                idx.iter().map(|i| i.to_string()).collect::<String>()
            )
        })
        .collect()
}

fn geometry(cfg: &RunConfig, which: Which, range: Option<&str>) -> Result<(), CliError> {
    let model = build(cfg)?;
    let nodes = grid_nodes(cfg, range)?;
    let d = model.as_family().param_dim();
    let want_g = matches!(which, Which::G | Which::All);
    let want_w = matches!(which, Which::Omega | Which::All);
    let want_t = matches!(which, Which::T | Which::All);
    if want_t && model.states().is_none() {
        return Err(CliError::Input("T needs a model with state vectors".into()));
    }
    let mut columns: Vec<String> = (0..d).map(|a| format!("k{a}")).collect();
    if want_g {
        columns.extend(index_names("g", d, 2));
    }
    if want_w {
        columns.extend(index_names("omega", d, 2));
    }
    if want_t {
        columns.extend(index_names("T", d, 3));
    }
    let h = cfg.h;
    let rows: Vec<Result<Vec<f64>, CliError>> = nodes
        .par_iter()
        .map(|k| {
            let mut row = k.clone();
            let qgt = match &model {
                ModelFamily::States(f) => local_geom::qgt(f, k, h),
                ModelFamily::Kernel(f) => local_geom::kernel_qgt(f, k, h),
            };
            // Row-major in the first index, matching the column names.
            if want_g {
                row.extend(qgt.g.transpose().iter());
            }
            if want_w {
                row.extend(qgt.omega.transpose().iter());
            }
            if want_t {
                let f = model.states().expect("checked above");
                row.extend_from_slice(local_geom::t_tensor(f, k, h)?.as_slice());
            }
            Ok(row)
        })
        .collect();
    let mut table = Table::new(columns);
    for row in rows {
        table.push(row?.into_iter().map(Cell::from).collect());
    }
    output::emit(out(cfg), &table.render(cfg.format))
}

fn fmt_point(p: &[f64]) -> String {
    p.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn berry(
    cfg: &RunConfig,
    center: &[f64],
    radius: f64,
    samples: usize,
    refs: Vec<Vec<f64>>,
) -> Result<(), CliError> {
    let model = build(cfg)?;
    let family = model.as_family();
    let d = family.param_dim();
    if d != 2 {
        return Err(CliError::Input(
            "circular loops need a two-parameter model".into(),
        ));
    }
    check_dim(center, 2)?;
    if radius.is_nan() || radius <= 0.0 || samples < 3 {
        return Err(CliError::Input(
            "loop needs a positive radius and at least 3 samples".into(),
        ));
    }
    let (cx, cy) = (center[0], center[1]);
    let circle = move |s: f64| {
        vec![
            cx + radius * (2.0 * PI * s).cos(),
            cy + radius * (2.0 * PI * s).sin(),
        ]
    };
    let lp = LoopSample::from_curve(circle, samples)?;
    let refs = if refs.is_empty() {
        vec![center.to_vec()]
    } else {
        refs
    };
    let mut table = Table::new(["method", "reference", "phase"]);
    table.push(vec![
        "overlap".into(),
        "".into(),
        connection::berry_phase_overlap(family, &lp)?.into(),
    ]);
    for r in &refs {
        check_dim(r, 2)?;
        let tri = connection::berry_phase_triangles(family, &lp, r)?;
        let conn = connection::berry_phase_connection(family, circle, r, samples)?;
        table.push(vec!["triangles".into(), fmt_point(r).into(), tri.into()]);
        table.push(vec!["connection".into(), fmt_point(r).into(), conn.into()]);
    }
    output::emit(out(cfg), &table.render(cfg.format))
}

/// Round-trip contract of the reconstruction.
const TOMOGRAPHY_P2: f64 = 1e-9;
const TOMOGRAPHY_PHASE: f64 = 1e-8;

fn tomography_cmd(
    cfg: &RunConfig,
    input: Option<&Path>,
    anchor: usize,
    random: Option<usize>,
    dim: usize,
) -> Result<(), CliError> {
    let set = match (input, random) {
        (Some(path), None) => formats::read_invariants(path)?,
        (None, Some(count)) => {
            if count == 0 || dim == 0 {
                return Err(CliError::Input(
                    "--random and --dim must be positive".into(),
                ));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let states = tomography::random_states(&mut rng, count, dim + 1);
            InvariantSet::from_states(&states, (0..count).map(|i| format!("s{i}")).collect())?
        }
        _ => {
            return Err(CliError::Input(
                "give exactly one of --input and --random".into(),
            ))
        }
    };
    if anchor >= set.len() {
        return Err(CliError::Input(format!(
            "anchor {anchor} out of range for {} points",
            set.len()
        )));
    }
    let rec = tomography::reconstruct(&set, anchor, cfg.tol.rank)?;
    let (dp2, dphi) = tomography::verify_reconstruction(&set, &rec)?;
    output::emit(out(cfg), &formats::states_to_json(&rec.states))?;
    output::report(
        out(cfg),
        &json!({ "points": set.len(), "rank": rec.rank, "max_dp2": dp2, "max_dphi": dphi }),
    );
    if dp2 > TOMOGRAPHY_P2 || dphi > TOMOGRAPHY_PHASE {
        return Err(CliError::Contract(format!(
            "reconstruction residuals {dp2:e} (P2), {dphi:e} (phase)"
        )));
    }
    Ok(())
}

fn sampled_grid(cfg: &RunConfig) -> Result<(StateFamily, BzGrid), CliError> {
    let family = state_family(cfg)?;
    let grid = BzGrid::sample(&family, cfg.grid()?)?;
    Ok((family, grid))
}

fn polarization(cfg: &RunConfig, input: Option<&Path>) -> Result<(), CliError> {
    let grid = match input {
        Some(path) => formats::load_bloch_grid(path)?,
        None => sampled_grid(cfg)?.1,
    };
    let p = band::average_polarization(&grid)?;
    let mut table = Table::new(["axis", "polarization", "quantum"]);
    for (a, v) in p.values.iter().enumerate() {
        table.push(vec![a.into(), (*v).into(), p.quantum.into()]);
    }
    output::emit(out(cfg), &table.render(cfg.format))
}

fn cumulants(cfg: &RunConfig, order: Option<usize>, qstep: f64) -> Result<(), CliError> {
    let (family, grid) = sampled_grid(cfg)?;
    let orders = match order {
        Some(n) => vec![n],
        None => vec![1, 2, 3],
    };
    let mut table = Table::new(["order", "index", "generating_function", "zone_integral"]);
    let mut worst_symmetry = 0.0f64;
    for n in orders {
        let rep = band::cumulant(&grid, &family, n, qstep)?;
        worst_symmetry = worst_symmetry.max(rep.symmetry_residual());
        for (flat, name) in index_names("", grid.dim(), n).iter().enumerate() {
            let idx = name.trim_start_matches('_').to_string();
            table.push(vec![
                n.into(),
                idx.into(),
                rep.generating[flat].into(),
                rep.integral[flat].into(),
            ]);
        }
    }
    output::emit(out(cfg), &table.render(cfg.format))?;
    output::report(out(cfg), &json!({ "symmetry_residual": worst_symmetry }));
    Ok(())
}

type Hamiltonian<'a> = Box<dyn Fn(&[f64]) -> CMat + 'a>;

fn flat_hamiltonian<'a>(
    model: &Model,
    family: &'a StateFamily,
) -> Result<Hamiltonian<'a>, CliError> {
    match *model {
        Model::Veronese { n, m } => Ok(Box::new(move |k: &[f64]| {
            veronese::hamiltonian(n, m, [k[0], k[1]])
        })),
        // Spectrally flattened two-band Hamiltonian.
        Model::Qwz { .. } => Ok(Box::new(move |k: &[f64]| {
            CMat::identity(2, 2) - family.projector_at(k)
        })),
        _ => Err(CliError::Input(
            "conductivity needs a flat-band model: veronese or qwz".into(),
        )),
    }
}

fn conductivity(cfg: &RunConfig, qs: &[f64]) -> Result<(), CliError> {
    let (family, grid) = sampled_grid(cfg)?;
    let ham = flat_hamiltonian(cfg.model()?, &family)?;
    let d = grid.dim();
    let mut columns = vec!["q".to_string()];
    for a in 0..d {
        for b in 0..d {
            columns.push(format!("sigma_{a}{b}_re"));
            columns.push(format!("sigma_{a}{b}_im"));
        }
    }
    columns.extend(["axis_form_01".to_string(), "tensor_form_01".to_string()]);
    let mut table = Table::new(columns);
    let (mut axis_res, mut tensor_res) = (Vec::new(), Vec::new());
    for &q in qs {
        let mut qv = vec![0.0; d];
        qv[0] = q;
        let sigma = band::conductivity_q(&grid, &family, &ham, &qv)?;
        let exp = band::sigma_expansion(&grid, &family, &qv);
        let axis = exp.axis_form.unwrap_or(f64::NAN);
        let mut row = vec![Cell::from(q)];
        for a in 0..d {
            for b in 0..d {
                row.push(sigma[(a, b)].re.into());
                row.push(sigma[(a, b)].im.into());
            }
        }
        row.push(axis.into());
        row.push(exp.tensor_form[(0, 1)].into());
        table.push(row);
        axis_res.push((sigma[(0, 1)].re - axis).abs());
        tensor_res.push((sigma[(0, 1)].re - exp.tensor_form[(0, 1)]).abs());
    }
    output::emit(out(cfg), &table.render(cfg.format))?;
    let slope = |r: &[f64]| (qs.len() >= 2).then(|| local_geom::loglog_slope(qs, r));
    output::report(
        out(cfg),
        &json!({
            "axis_form_residuals": axis_res,
            "axis_form_slope": slope(&axis_res),
            "tensor_form_residuals": tensor_res,
            "tensor_form_slope": slope(&tensor_res),
        }),
    );
    Ok(())
}

fn export(cfg: &RunConfig, payload: formats::Payload) -> Result<(), CliError> {
    let path = out(cfg).ok_or_else(|| CliError::Input("band export needs --out".into()))?;
    let (_, grid) = sampled_grid(cfg)?;
    formats::write(path, &formats::grid_to_bytes(&grid, payload))?;
    Ok(())
}

fn parse_curve(spec: &str) -> Result<ChartCurve, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| CliError::Input(format!("bad number {s:?} in curve {spec:?}")))
    };
    match parts.as_slice() {
        ["figure8"] => Ok(models::figure8()),
        ["circle", r] => {
            let r = num(r)?;
            if r.is_nan() || r <= 0.0 {
                return Err(CliError::Input("circle radius must be positive".into()));
            }
            Ok(ChartCurve::new(move |t| Complex64::from_polar(r, t))
                .with_jet(move |t| {
                    let z = Complex64::from_polar(r, t);
                    let i = Complex64::new(0.0, 1.0);
                    [z, i * z, -z]
                })
                .with_period(2.0 * PI))
        }
        ["winding", n, s] => {
            let n = num(n)?;
            if n.fract() != 0.0 {
                return Err(CliError::Input("winding number must be an integer".into()));
            }
            Ok(veronese::tan_winding(n as i64, num(s)?))
        }
        _ => Err(CliError::Input(format!(
            "unknown curve {spec:?}; use figure8, circle:R or winding:N:S"
        ))),
    }
}

/// Reconstruction contract on sampled invariants.
const ROUNDTRIP_TOL: f64 = 1e-4;

fn curve_cmd(
    cfg: &RunConfig,
    spec: &str,
    action: CurveAction,
    samples: usize,
) -> Result<(), CliError> {
    let curve = parse_curve(spec)?;
    if samples < 3 {
        return Err(CliError::Input("need at least 3 samples".into()));
    }
    let period = curve.period().unwrap_or(2.0 * PI);
    match action {
        CurveAction::Profile => {
            let mut table = Table::new(["t", "speed", "T"]);
            for i in 0..samples {
                let t = i as f64 * period / samples as f64;
                let [f, fp, _] = curve.jet(t);
                table.push(vec![
                    t.into(),
                    curves::speed(f, fp).into(),
                    curves::curve_t(&curve, t)?.into(),
                ]);
            }
            output::emit(out(cfg), &table.render(cfg.format))
        }
        CurveAction::Intersection => {
            let si = curves::self_intersection(&curve, samples)?;
            let mut table = Table::new(["raw", "normalized", "turning"]);
            table.push(vec![si.raw.into(), si.normalized.into(), si.turning.into()]);
            output::emit(out(cfg), &table.render(cfg.format))
        }
        CurveAction::Reconstruct => {
            let rt = curves::invariant_roundtrip(&curve, samples.min(16), ODE_STEP)?;
            let mut table = Table::new(["length", "two_point", "three_point", "t_value"]);
            table.push(vec![
                rt.length.into(),
                rt.two_point.into(),
                rt.three_point.into(),
                rt.t_value.into(),
            ]);
            output::emit(out(cfg), &table.render(cfg.format))?;
            if rt.two_point > ROUNDTRIP_TOL || rt.three_point > ROUNDTRIP_TOL {
                return Err(CliError::Contract(format!(
                    "reconstructed invariants differ by {:e}",
                    rt.two_point.max(rt.three_point)
                )));
            }
            Ok(())
        }
    }
}
