//! Subcommand implementations. Point reports go to stdout (JSON or CSV);
//! `map` writes its artifact files and prints a JSON summary.

use crate::config::{QueryPoint, RunConfig};
use crate::CliError;
use eikonal::characteristics::{
    termination_times, termination_times_bisect, TerminationRecord,
};
use eikonal::classify::{classify_point, ClassifyOptions, PointClass};
use eikonal::conjugate::{blowup_probe, direction_jacobian, BlowupReport};
use eikonal::field::FieldRef;
use eikonal::hopflax::{minimizer_set, reachable_gradients, Cardinality, SpaceTimePoint};
use eikonal::sigmap::{self, label_components, scan_grid, smoothness_probe, GridSpec};
use serde::Serialize;
use std::io::Write;

fn classify_options(config: &RunConfig) -> ClassifyOptions {
    let mut termination_budget = config.termination_budget.clone();
    termination_budget.seed = config.seed;
    ClassifyOptions {
        tol: config.tolerances.clone(),
        ball_budget: config.budget.clone(),
        termination_budget,
        cell: None,
    }
}

#[derive(Serialize)]
struct EvalReport {
    schema_version: &'static str,
    field: String,
    x: Vec<f64>,
    t: f64,
    u: f64,
    label: String,
    #[serde(rename = "Du", skip_serializing_if = "Option::is_none")]
    du: Option<Vec<f64>>,
    cardinality: Cardinality,
    minimizers: Vec<Vec<f64>>,
    reachable_gradients: Vec<Vec<f64>>,
    diagnostics: eikonal::classify::Diagnostics,
}

pub fn cmd_eval(config: &RunConfig, field: &FieldRef) -> Result<String, CliError> {
    let eval = config
        .eval
        .as_ref()
        .ok_or_else(|| CliError::config("missing [eval] section"))?;
    let p = SpaceTimePoint::new(eval.x.clone(), eval.t).map_err(CliError::numerical)?;
    let opts = classify_options(config);
    let class = classify_point(field.as_ref(), &p, &opts).map_err(CliError::numerical)?;
    let set = minimizer_set(field.as_ref(), &p, &config.tolerances, &config.budget)
        .map_err(CliError::numerical)?;
    let reach = reachable_gradients(field.as_ref(), &p, &config.tolerances, &config.budget)
        .map_err(CliError::numerical)?;
    let du = class
        .gradient
        .as_ref()
        .map(|g| g.spatial.iter().copied().chain([g.time]).collect());
    let report = EvalReport {
        schema_version: eikonal::SCHEMA_VERSION,
        field: config.field.name.clone(),
        x: eval.x.clone(),
        t: eval.t,
        u: set.value,
        label: class.label.as_str().to_string(),
        du,
        cardinality: set.cardinality,
        minimizers: set.points.clone(),
        reachable_gradients: reach
            .gradients
            .iter()
            .map(|g| g.spatial.iter().copied().chain([g.time]).collect())
            .collect(),
        diagnostics: class.diagnostics,
    };
    serde_json::to_string_pretty(&report).map_err(|e| CliError::config(format!("encode: {e}")))
}

fn csv_opt(v: &Option<Vec<f64>>, dim: usize) -> String {
    match v {
        Some(x) => x
            .iter()
            .map(|c| format!("{c:.12e}"))
            .collect::<Vec<_>>()
            .join(","),
        None => vec![""; dim].join(","),
    }
}

pub fn cmd_terminate(config: &RunConfig, field: &FieldRef) -> Result<String, CliError> {
    let term = config
        .terminate
        .as_ref()
        .ok_or_else(|| CliError::config("missing [terminate] section"))?;
    let dim = field.dim();
    let mut points: Vec<Vec<f64>> = Vec::new();
    match (&term.sweep_lo, &term.sweep_hi, &term.sweep_res) {
        (Some(lo), Some(hi), Some(res)) => {
            if lo.len() != dim || hi.len() != dim || res.len() != dim {
                return Err(CliError::config("sweep dimensions do not match the field"));
            }
            let mut idx = vec![0usize; dim];
            loop {
                points.push(
                    (0..dim)
                        .map(|a| {
                            lo[a] + (hi[a] - lo[a]) * idx[a] as f64 / (res[a].max(2) - 1) as f64
                        })
                        .collect(),
                );
                let mut a = 0;
                loop {
                    idx[a] += 1;
                    if idx[a] < res[a].max(2) {
                        break;
                    }
                    idx[a] = 0;
                    a += 1;
                    if a == dim {
                        break;
                    }
                }
                if a == dim {
                    break;
                }
            }
        }
        (None, None, None) => {
            let y0 = term
                .y0
                .clone()
                .ok_or_else(|| CliError::config("terminate needs y0 or a sweep"))?;
            points.push(y0);
        }
        _ => {
            return Err(CliError::config(
                "sweep needs all of sweep_lo, sweep_hi, sweep_res",
            ))
        }
    }

    let mut termination_budget = config.termination_budget.clone();
    termination_budget.seed = config.seed;
    let mut out = String::new();
    out.push_str(&format!("# schema: {}\n", eikonal::SCHEMA_VERSION));
    let coords = |prefix: &str| {
        (0..dim)
            .map(|a| format!("{prefix}{a}"))
            .collect::<Vec<_>>()
            .join(",")
    };
    out.push_str(&format!(
        "{},status,t_bar,t_bar_capped,t_s,t_s_capped,{},{},truncated",
        coords("y"),
        coords("x_bar_"),
        coords("x_s_"),
    ));
    if term.bisect_check {
        out.push_str(",bisect_t_bar,bisect_t_s,method_gap_t_bar,method_gap_t_s");
    }
    out.push('\n');

    for y0 in &points {
        let ys = y0
            .iter()
            .map(|c| format!("{c:.12e}"))
            .collect::<Vec<_>>()
            .join(",");
        let rec = match termination_times(
            field.as_ref(),
            y0,
            term.t_max,
            &config.tolerances,
            &termination_budget,
        ) {
            Ok(rec) => rec,
            Err(eikonal::EikonalError::DegenerateGradient { .. }) => {
                out.push_str(&format!(
                    "{ys},degenerate,,,,,{},{},\n",
                    csv_opt(&None, dim),
                    csv_opt(&None, dim)
                ));
                continue;
            }
            Err(e) => return Err(CliError::numerical(e)),
        };
        let row = format_record(&ys, &rec, dim);
        out.push_str(&row);
        if term.bisect_check {
            let bis = termination_times_bisect(
                field.as_ref(),
                y0,
                term.t_max,
                &config.tolerances,
                &config.budget,
            )
            .map_err(CliError::numerical)?;
            let gap = |a: f64, ac: bool, b: f64, bc: bool| {
                if ac || bc {
                    String::new()
                } else {
                    format!("{:.6e}", (a - b).abs())
                }
            };
            out.push_str(&format!(
                ",{:.12e},{:.12e},{},{}",
                bis.t_bar,
                bis.t_s,
                gap(rec.t_bar, rec.t_bar_capped, bis.t_bar, bis.t_bar_capped),
                gap(rec.t_s, rec.t_s_capped, bis.t_s, bis.t_s_capped),
            ));
        }
        out.push('\n');
    }
    Ok(out)
}

fn format_record(ys: &str, rec: &TerminationRecord, dim: usize) -> String {
    format!(
        "{ys},ok,{:.12e},{},{:.12e},{},{},{},{}",
        rec.t_bar,
        rec.t_bar_capped,
        rec.t_s,
        rec.t_s_capped,
        csv_opt(&rec.x_bar, dim),
        csv_opt(&rec.x_s, dim),
        rec.search_truncated,
    )
}

#[derive(Serialize)]
struct SpectrumReport {
    schema_version: &'static str,
    field: String,
    spectrum: eikonal::conjugate::CharSpectrum,
    det_samples: Vec<DetSample>,
    #[serde(skip_serializing_if = "Option::is_none")]
    blowup: Option<BlowupReport>,
}

#[derive(Serialize)]
struct DetSample {
    t: f64,
    det: f64,
}

pub fn cmd_spectrum(config: &RunConfig, field: &FieldRef) -> Result<String, CliError> {
    let sc = config
        .spectrum
        .as_ref()
        .ok_or_else(|| CliError::config("missing [spectrum] section"))?;
    let spectrum = direction_jacobian(field.as_ref(), &sc.y0, &config.tolerances)
        .map_err(CliError::numerical)?;
    let det_samples = sc
        .det_times
        .iter()
        .map(|&t| DetSample {
            t,
            det: spectrum.xy(t).determinant(),
        })
        .collect();
    let mut termination_budget = config.termination_budget.clone();
    termination_budget.seed = config.seed;
    let blowup = if sc.blowup {
        Some(
            blowup_probe(
                field.as_ref(),
                &sc.y0,
                sc.t_max,
                &config.tolerances,
                &termination_budget,
            )
            .map_err(CliError::numerical)?,
        )
    } else {
        None
    };
    let report = SpectrumReport {
        schema_version: eikonal::SCHEMA_VERSION,
        field: config.field.name.clone(),
        spectrum,
        det_samples,
        blowup,
    };
    serde_json::to_string_pretty(&report).map_err(|e| CliError::config(format!("encode: {e}")))
}

#[derive(Serialize)]
struct ClassifyReport {
    schema_version: &'static str,
    field: String,
    points: Vec<ClassifiedPoint>,
}

#[derive(Serialize)]
struct ClassifiedPoint {
    x: Vec<f64>,
    t: f64,
    #[serde(flatten)]
    class: PointClass,
}

pub fn cmd_classify(config: &RunConfig, field: &FieldRef) -> Result<String, CliError> {
    let cc = config
        .classify
        .as_ref()
        .ok_or_else(|| CliError::config("missing [classify] section"))?;
    let opts = classify_options(config);
    let mut points = Vec::new();
    for QueryPoint { x, t } in &cc.points {
        let p = SpaceTimePoint::new(x.clone(), *t).map_err(CliError::numerical)?;
        let class = classify_point(field.as_ref(), &p, &opts).map_err(CliError::numerical)?;
        points.push(ClassifiedPoint {
            x: x.clone(),
            t: *t,
            class,
        });
    }
    let report = ClassifyReport {
        schema_version: eikonal::SCHEMA_VERSION,
        field: config.field.name.clone(),
        points,
    };
    serde_json::to_string_pretty(&report).map_err(|e| CliError::config(format!("encode: {e}")))
}

#[derive(Serialize)]
struct MapSummary {
    schema_version: &'static str,
    field: String,
    components: usize,
    nodes_csv: String,
    report_json: String,
    pgm_slices: Vec<String>,
    defect_csvs: Vec<String>,
    node_errors: usize,
}

pub fn cmd_map(config: &RunConfig, field: &FieldRef) -> Result<String, CliError> {
    let mc = config
        .map
        .as_ref()
        .ok_or_else(|| CliError::config("missing [map] section"))?;
    let spec = GridSpec {
        lo: mc.lo.clone(),
        hi: mc.hi.clone(),
        t_min: mc.t_min,
        t_max: mc.t_max,
        space_res: mc.space_res.clone(),
        t_res: mc.t_res,
    };
    spec.validate().map_err(CliError::numerical)?;
    std::fs::create_dir_all(&mc.out_dir)
        .map_err(|e| CliError::config(format!("out_dir: {e}")))?;

    let grid = scan_grid(field.as_ref(), &spec, &config.tolerances).map_err(CliError::numerical)?;
    let report = label_components(&grid, &mc.strata, mc.adjacency);

    let nodes_path = mc.out_dir.join(format!("{}_nodes.csv", mc.prefix));
    let mut buf = Vec::new();
    sigmap::output::write_nodes_csv(&grid, &mut buf)
        .map_err(|e| CliError::config(format!("nodes csv: {e}")))?;
    std::fs::write(&nodes_path, &buf).map_err(|e| CliError::config(format!("write: {e}")))?;

    let report_path = mc.out_dir.join(format!("{}_components.json", mc.prefix));
    let json = sigmap::output::component_report_json(&report).map_err(CliError::numerical)?;
    std::fs::write(&report_path, json.as_bytes())
        .map_err(|e| CliError::config(format!("write: {e}")))?;

    let pgm_paths = sigmap::output::write_pgm_slices(&grid, &mc.out_dir, &mc.prefix)
        .map_err(CliError::numerical)?;

    let mut defect_csvs = Vec::new();
    for &order in &mc.probe_orders {
        let probe = smoothness_probe(&grid, order, mc.probe_threshold_fraction);
        let path = mc
            .out_dir
            .join(format!("{}_defects_order{order}.csv", mc.prefix));
        let mut w = Vec::new();
        writeln!(w, "# schema: {}", eikonal::SCHEMA_VERSION).ok();
        writeln!(w, "# order {order}, threshold {:.6e}", probe.threshold).ok();
        for a in 0..spec.spatial_dim() {
            write!(w, "x{a},").ok();
        }
        writeln!(w, "t,defect,flagged").ok();
        for i in 0..spec.node_count() {
            let (x, t) = spec.node_point(i);
            for c in &x {
                write!(w, "{c:.12e},").ok();
            }
            writeln!(w, "{t:.12e},{:.12e},{}", probe.defects[i], probe.flagged[i]).ok();
        }
        std::fs::write(&path, &w).map_err(|e| CliError::config(format!("write: {e}")))?;
        defect_csvs.push(path.display().to_string());
    }

    let summary = MapSummary {
        schema_version: eikonal::SCHEMA_VERSION,
        field: config.field.name.clone(),
        components: report.component_count,
        nodes_csv: nodes_path.display().to_string(),
        report_json: report_path.display().to_string(),
        pgm_slices: pgm_paths.iter().map(|p| p.display().to_string()).collect(),
        defect_csvs,
        node_errors: grid.errors.len(),
    };
    serde_json::to_string_pretty(&summary).map_err(|e| CliError::config(format!("encode: {e}")))
}
