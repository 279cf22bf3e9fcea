use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use adaspline::datasets::{
    default_voids, generate_annulus_cloud, generate_polysinc_cloud, polysinc, read_csv,
    resample_grid, write_csv, AnnulusConfig, SynthConfig, VoidSpec,
};
use adaspline::metrics::{
    lambda_field, pointwise_errors, write_lambda_csv, Reference, RegionOfInterest, DEFAULT_GRID,
};
use adaspline::{
    assemble_system, ConditionEstimate, ConditionMode, FitConfig, KnotVector, SolveOptions,
    SolverMethod, SplineModel,
};

use crate::model_file;
use crate::{CliError, Condition, EvalArgs, FitArgs, Kind, ReportArgs, Solver, SynthArgs};

pub fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let cloud = match args.kind {
        Kind::Polysinc => {
            if args.hole_radius.is_some() {
                return Err(CliError::Usage(
                    "--hole-radius applies to --kind annulus only".into(),
                ));
            }
            let mut voids = match args.default_voids {
                Some(s) => default_voids(s)?,
                None => Vec::new(),
            };
            for &[cx, cy, r, s] in &args.voids {
                voids.push(VoidSpec::new(vec![cx, cy], r, s)?);
            }
            generate_polysinc_cloud(
                &SynthConfig::polysinc(args.count, args.seed).with_voids(voids),
            )?
        }
        Kind::Annulus => {
            if !args.voids.is_empty() || args.default_voids.is_some() {
                return Err(CliError::Usage(
                    "voids apply to --kind polysinc only".into(),
                ));
            }
            let mut cfg = AnnulusConfig::new(args.count, args.seed);
            if let Some(r) = args.hole_radius {
                cfg.hole_radius = r;
            }
            generate_annulus_cloud(&cfg)?
        }
    };
    write_csv(&cloud, &args.out)?;
    println!("wrote {} points to {}", cloud.len(), args.out.display());
    Ok(())
}

fn fmt_condition(c: &Option<ConditionEstimate>) -> String {
    c.as_ref()
        .map_or_else(|| "n/a".into(), |c| format!("{:?}", c.value))
}

fn write_key_values(rows: &[(String, String)], out: Option<&Path>) -> Result<(), CliError> {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(BufWriter::new(sink));
    let io_err = |e: csv::Error| CliError::Io(e.into());
    w.write_record(["key", "value"]).map_err(io_err)?;
    for (k, v) in rows {
        w.write_record([k, v]).map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn fit(args: &FitArgs) -> Result<(), CliError> {
    let cloud = read_csv(&args.input)?;
    let config = FitConfig::new(
        args.degree,
        args.ctrl.clone(),
        args.threshold,
        args.orders.clone(),
    );
    let mut opts = SolveOptions::default().with_method(match args.solver {
        Solver::Auto => SolverMethod::Auto,
        Solver::Direct => SolverMethod::Direct,
        Solver::Cg => SolverMethod::ConjugateGradient,
    });
    opts.condition = match args.condition {
        Condition::Estimate => Some(ConditionMode::Estimate),
        Condition::Exact => Some(ConditionMode::Exact),
        Condition::None => None,
    };
    let fit = adaspline::fit(&cloud, &config, &opts)?;
    model_file::save(&fit.model, &args.out)?;

    let r = &fit.report;
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    let mut rows: Vec<(String, String)> = vec![
        ("points".into(), cloud.len().to_string()),
        ("controls".into(), fit.system.n_ctrl().to_string()),
        ("threshold".into(), format!("{:?}", args.threshold)),
        ("method".into(), format!("{:?}", r.method)),
        ("regularized".into(), r.regularized_count.to_string()),
        ("max_lambda".into(), format!("{:?}", r.max_lambda)),
        (
            "condition_stacked".into(),
            fmt_condition(&r.condition_stacked),
        ),
        (
            "condition_collocation".into(),
            fmt_condition(&r.condition_collocation),
        ),
        ("rank_deficient".into(), r.rank_deficient.to_string()),
        ("not_converged".into(), r.not_converged.to_string()),
    ];
    for c in 0..r.residual_norms.len() {
        let k = c + 1;
        rows.push((
            format!("residual_{k}"),
            format!("{:?}", r.residual_norms[c]),
        ));
        rows.push((
            format!("data_residual_{k}"),
            format!("{:?}", r.data_residual_norms[c]),
        ));
        rows.push((format!("iterations_{k}"), r.iterations[c].to_string()));
    }
    rows.extend(
        r.warnings
            .iter()
            .map(|w| ("warning".to_string(), w.clone())),
    );
    if let Some(path) = &args.report {
        write_key_values(&rows, Some(path))?;
    }
    if let Some(path) = &args.lambda_out {
        let field = lambda_field(&fit.system, &fit.system.knots)?;
        write_lambda_csv(&field, File::create(path)?)?;
    }
    println!(
        "fitted {} control points to {} points: {} regularized, data residual {}, condition {}",
        fit.system.n_ctrl(),
        cloud.len(),
        r.regularized_count,
        r.data_residual_norms
            .iter()
            .map(|v| format!("{v:.3e}"))
            .collect::<Vec<_>>()
            .join("/"),
        fmt_condition(&r.condition_stacked)
    );
    Ok(())
}

fn read_points(path: &Path, dim: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let mut rdr = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let parse_err =
        |line: u64, message: String| CliError::Core(adaspline::Error::Parse { line, message });
    let header = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let expected: Vec<String> = (1..=dim).map(|k| format!("x{k}")).collect();
    if header.len() < dim
        || header
            .iter()
            .take(dim)
            .ne(expected.iter().map(String::as_str))
    {
        return Err(parse_err(
            1,
            format!(
                "header must start with {} for a {dim}-dimensional model",
                expected.join(",")
            ),
        ));
    }
    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec =
            rec.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let x = (0..dim)
            .map(|k| {
                rec.get(k)
                    .and_then(|f| f.trim().parse::<f64>().ok())
                    .ok_or_else(|| {
                        parse_err(
                            line,
                            format!("column x{} is missing or not a number", k + 1),
                        )
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        points.push(x);
    }
    Ok(points)
}

fn write_evaluations(model: &SplineModel, points: &[Vec<f64>], out: &Path) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(out)?);
    let header: Vec<String> = (1..=model.dim())
        .map(|k| format!("x{k}"))
        .chain((1..=model.value_dim()).map(|k| format!("v{k}")))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for x in points {
        let v = model.eval_physical(x)?;
        let row: Vec<String> = x.iter().chain(&v).map(|f| format!("{f:?}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn eval(args: &EvalArgs) -> Result<(), CliError> {
    let model = model_file::load(&args.model)?;
    if let Some(shape) = &args.grid {
        let grid = resample_grid(&model, shape)?;
        write_csv(&grid, &args.out)?;
        println!(
            "wrote {} grid samples to {}",
            grid.len(),
            args.out.display()
        );
    } else if let Some(path) = &args.points {
        let points = read_points(path, model.dim())?;
        write_evaluations(&model, &points, &args.out)?;
        println!(
            "wrote {} evaluations to {}",
            points.len(),
            args.out.display()
        );
    }
    Ok(())
}

pub fn report(args: &ReportArgs) -> Result<(), CliError> {
    let model = model_file::load(&args.model)?;
    let d = model.dim();
    let roi = match &args.roi {
        None => None,
        Some(r) if r.len() == 2 * d => Some(RegionOfInterest::new(
            r.iter().step_by(2).copied().collect(),
            r.iter().skip(1).step_by(2).copied().collect(),
        )?),
        Some(r) => {
            return Err(CliError::Usage(format!(
                "--roi needs {} numbers (min,max per dimension), got {}",
                2 * d,
                r.len()
            )))
        }
    };
    let grid = args.grid.clone().unwrap_or_else(|| vec![DEFAULT_GRID; d]);

    let summary = if args.reference == "polysinc" {
        if d != 2 || model.value_dim() != 1 {
            return Err(CliError::Usage(
                "the polysinc reference needs a 2D model with one value".into(),
            ));
        }
        let f = |x: &[f64]| vec![polysinc(x[0], x[1])];
        pointwise_errors(&model, Reference::Analytic(&f), roi.as_ref(), &grid)?
    } else {
        let cloud = read_csv(&args.reference)?;
        pointwise_errors(&model, Reference::Cloud(&cloud), roi.as_ref(), &grid)?
    };

    let rows = vec![
        ("max_error".to_string(), format!("{:?}", summary.max)),
        ("l2_error".to_string(), format!("{:?}", summary.l2)),
        ("samples".to_string(), summary.samples.to_string()),
    ];
    write_key_values(&rows, args.out.as_deref())?;

    if let (Some(out), Some(input), Some(threshold)) =
        (&args.lambda_out, &args.input, args.threshold)
    {
        let cloud = read_csv(input)?;
        let shape = model.knots().iter().map(KnotVector::len).collect();
        let config = FitConfig::new(model.degree(), shape, threshold, args.orders.clone());
        let system = assemble_system(&cloud, &config)?;
        let field = lambda_field(&system, &system.knots)?;
        write_lambda_csv(&field, File::create(out)?)?;
    }
    Ok(())
}
