use std::path::PathBuf;

use kda_core::dataprep::{load_spambase, prepare_spam};
use kda_core::multiindex::enumerate;
use kda_core::population::{
    fit_gaussian_truncated_with_ridge, fit_homogeneous_with_ridge, fit_inhomogeneous_with_ridge,
    lambda_curve_with_ridge,
};
use kda_core::rff::{fit_population, lambda_d_curve, sample_features};
use kda_core::sample::{self, choose_threshold, classify_with, fit_moment_space, threshold_from_scores, LabeledSample};
use kda_core::scoring::grid_eval;
use kda_core::{DegreeSpec, Discriminant, DiscriminantModel, GridSpec, KernelSpec, TwoClassProblem};
use nalgebra::DMatrix;
use serde_json::json;

use crate::args::IntList;
use crate::error::CliError;
use crate::model::{read_points, AnyModel, ModelFile};
use crate::output::{grid_table, Cell, Sink, Table};
use crate::{Cli, Command, FitArgs, GridArgs, Method, RffArgs, ScenarioArgs, ScoreArgs, SpamArgs};

pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let mut sink = Sink::new(&cli.out_dir, cli.format, cli.config()?)?;
    match &cli.command {
        Command::Scenario(a) => scenario(cli, a, &mut sink)?,
        Command::Rff(a) => rff(cli, a, &mut sink)?,
        Command::Spam(a) => spam(cli, a, &mut sink)?,
        Command::Fit(a) => fit(cli, a, &mut sink)?,
        Command::Grid(a) => grid(a, &mut sink)?,
        Command::Score(a) => score(a, &mut sink)?,
    }
    Ok(sink.written().to_vec())
}

fn degrees(list: &IntList) -> Result<Vec<u32>, CliError> {
    list.0
        .iter()
        .map(|&d| u32::try_from(d).map_err(|_| CliError::Usage(format!("degree {d} too large"))))
        .collect()
}

/// Terms as rows, models as columns, with a closing `lambda` row.
fn coefficient_table(models: &[(String, DiscriminantModel)], dim: usize) -> Table {
    let max_degree = models.iter().map(|(_, m)| m.basis.max_degree()).max().unwrap_or(0);
    let mut columns = vec!["term".to_string()];
    columns.extend(models.iter().map(|(label, _)| label.clone()));
    let mut t = Table::with_columns(columns);
    for j in enumerate(dim, DegreeSpec::Range(max_degree)).iter() {
        let mut row: Vec<Cell> = vec![j.term_name().into()];
        row.extend(models.iter().map(|(_, m)| Cell::from(m.basis.position(j).map(|k| m.nu[k]))));
        t.push(row);
    }
    let mut lambda: Vec<Cell> = vec!["lambda".into()];
    lambda.extend(models.iter().map(|(_, m)| Cell::from(m.lambda)));
    t.push(lambda);
    let degenerate: Vec<&str> = models.iter().filter(|(_, m)| m.degenerate).map(|(l, _)| l.as_str()).collect();
    t.meta(json!({ "degenerate": degenerate }))
}

fn scenario(cli: &Cli, a: &ScenarioArgs, sink: &mut Sink) -> Result<(), CliError> {
    let problem = TwoClassProblem::scenario(a.id)?;
    let ridge = cli.ridge.unwrap_or(0.0);
    let stem = format!("scenario{}", a.id);

    let mut models = Vec::new();
    for d in degrees(&a.poly_homo)? {
        models.push((format!("homo{d}"), fit_homogeneous_with_ridge(&problem, d, ridge)?));
    }
    for d in degrees(&a.poly_inhomo)? {
        models.push((format!("inhomo{d}"), fit_inhomogeneous_with_ridge(&problem, d, ridge)?));
    }
    for n in degrees(&a.gauss_n)? {
        models.push((format!("gauss_n{n}"), fit_gaussian_truncated_with_ridge(&problem, a.omega, n, ridge)?));
    }
    if !models.is_empty() {
        sink.table(&format!("{stem}_coefficients"), &coefficient_table(&models, problem.dim()))?;
    }

    if a.lambda_curve > 0 {
        let n_max = u32::try_from(a.lambda_curve).map_err(|_| CliError::Usage("lambda curve too long".into()))?;
        let mut t = Table::new(&["degree", "lambda"]);
        for (n, lambda) in lambda_curve_with_ridge(&problem, n_max, ridge)? {
            t.push(vec![(n as usize).into(), lambda.into()]);
        }
        sink.table(&format!("{stem}_lambda_curve"), &t)?;
    }

    for (label, m) in &models {
        let g = grid_eval(m, &a.grid.0)?;
        let t = grid_table(&g).meta(json!({ "model": label, "lambda": m.lambda, "degenerate": m.degenerate }));
        sink.table(&format!("{stem}_grid_{label}"), &t)?;
    }

    if let Some(n) = a.sample_n {
        let draw = LabeledSample::draw(&problem, n, n, cli.seed)?;
        let mut pts = Table::new(&["x1", "x2", "label"]);
        for (i, label) in draw.labels().iter().enumerate() {
            pts.push(vec![draw.points()[(i, 0)].into(), draw.points()[(i, 1)].into(), (u8::from(*label) as usize).into()]);
        }
        sink.table(&format!("{stem}_sample_points"), &pts)?;
        for kernel in &a.sample_kernels.0 {
            let mut m = sample::fit(&draw, kernel, cli.ridge)?;
            choose_threshold(&mut m, &draw)?;
            let rule = m.threshold.expect("threshold just set");
            let g = grid_eval(&m, &a.grid.0)?;
            let mut t = Table::new(&["x", "y", "score", "class"]);
            for (x, y, s) in g.triples() {
                t.push(vec![x.into(), y.into(), s.into(), (u8::from(rule.predict(s)) as usize).into()]);
            }
            let t = t.meta(json!({
                "kernel": kernel.to_string(),
                "lambda": m.lambda,
                "ridge": m.ridge,
                "threshold": rule,
            }));
            sink.table(&format!("{stem}_sample_grid_{}", kernel.label()), &t)?;
        }
    }
    Ok(())
}

fn rff(cli: &Cli, a: &RffArgs, sink: &mut Sink) -> Result<(), CliError> {
    let problem = TwoClassProblem::scenario(a.id)?;
    let stem = format!("scenario{}_rff", a.id);
    let variant = a.variant.0;
    if !a.d.0.is_empty() {
        let mut t = Table::new(&["features", "lambda"]);
        for (d, lambda) in lambda_d_curve(&problem, a.omega, variant, cli.seed, &a.d.0, cli.ridge)? {
            t.push(vec![d.into(), lambda.into()]);
        }
        sink.table(&format!("{stem}_lambda_curve"), &t)?;
    }
    if let Some(&d_max) = a.grid_d.0.iter().max() {
        let all = sample_features(problem.dim(), d_max, a.omega, variant, cli.seed)?;
        for &d in &a.grid_d.0 {
            let m = fit_population(&problem, &all.truncated(d)?, cli.ridge)?;
            let g = grid_eval(&m, &a.grid.0)?;
            let t = grid_table(&g).meta(json!({ "features": d, "lambda": m.lambda, "degenerate": m.degenerate }));
            sink.table(&format!("{stem}_grid_d{d}"), &t)?;
        }
    }
    Ok(())
}

fn padded_grid(points: &DMatrix<f64>, n: usize) -> GridSpec {
    let range = |c: usize| {
        let col = points.column(c);
        let (lo, hi) = (col.min(), col.max());
        let pad = 0.05 * (hi - lo).max(1e-9);
        (lo - pad, hi + pad)
    };
    let (x_min, x_max) = range(0);
    let (y_min, y_max) = range(1);
    GridSpec { x_min, x_max, y_min, y_max, nx: n, ny: n }
}

fn spam(cli: &Cli, a: &SpamArgs, sink: &mut Sink) -> Result<(), CliError> {
    let table = load_spambase(&a.data).map_err(|e| match e {
        kda_core::KdaError::Io(source) => CliError::Read { path: a.data.display().to_string(), source },
        other => other.into(),
    })?;
    let prep = prepare_spam(&table, a.transform_policy.0, a.components, a.train_frac, cli.seed)?;
    let ridge = cli.ridge.unwrap_or(0.0);
    let summary = json!({
        "rows": table.len(),
        "spam_fraction": table.spam_fraction(),
        "explained_variance": prep.pca.explained,
        "total_explained": prep.pca.total_explained(),
        "dropped_columns": prep.transforms.dropped,
        "train": prep.train.len(),
        "test": prep.test.len(),
    });
    sink.json("spam_preprocessing", json!({ "summary": summary, "transforms": prep.transforms, "pca": prep.pca }))?;

    let mut scores = Table::with_columns(
        (1..=a.components).map(|k| format!("pc{k}")).chain(["label".to_string(), "split".to_string()]).collect(),
    );
    for (part, s) in [("train", &prep.train), ("test", &prep.test)] {
        for (i, label) in s.labels().iter().enumerate() {
            let mut row: Vec<Cell> = s.points().row(i).iter().map(|&v| v.into()).collect();
            // Spam is written as 1, regular mail as 0, matching the input file.
            row.push(usize::from(*label == sample::ClassLabel::One).into());
            row.push(part.into());
            scores.push(row);
        }
    }
    sink.table("spam_scores", &scores)?;

    let train_rows = prep.train.rows();
    let test_rows = prep.test.rows();
    let mut results = Table::new(&[
        "degree",
        "ratio",
        "training_error",
        "misclassified_spam",
        "misclassified_regular",
        "overall",
    ]);
    let mut models = Vec::new();
    let grid = match a.grid {
        Some(g) => g.0,
        None => padded_grid(prep.train.points(), a.grid_n),
    };
    for d in degrees(&a.degrees)? {
        let kernel = KernelSpec::InhomoPoly { degree: d };
        let m = fit_moment_space(&prep.train, &kernel, ridge)?;
        let rule = threshold_from_scores(&m.score_many(&train_rows)?, prep.train.labels())?;
        let test = classify_with(&m, &rule, &test_rows, Some(prep.test.labels()))?;
        let c = test.confusion.expect("labels supplied");
        results.push(vec![
            (d as usize).into(),
            m.lambda.into(),
            rule.training_error.into(),
            c.error1().into(),
            c.error2().into(),
            c.overall().into(),
        ]);
        if a.components == 2 {
            let g = grid_eval(&m, &grid)?;
            let mut t = Table::new(&["x", "y", "score", "margin"]);
            for (x, y, s) in g.triples() {
                t.push(vec![x.into(), y.into(), s.into(), (rule.orientation * s - rule.threshold).into()]);
            }
            sink.table(&format!("spam_boundary_d{d}"), &t.meta(json!({ "degree": d, "threshold": rule })))?;
        }
        models.push((format!("degree{d}"), m));
    }
    sink.table("spam_errors", &results.meta(summary))?;
    if !models.is_empty() {
        sink.table("spam_coefficients", &coefficient_table(&models, a.components))?;
    }
    Ok(())
}

fn fit(cli: &Cli, a: &FitArgs, sink: &mut Sink) -> Result<(), CliError> {
    let (model, threshold) = match a.method {
        Method::Population => {
            let problem = TwoClassProblem::scenario(a.scenario)?;
            let ridge = cli.ridge.unwrap_or(0.0);
            let m = match a.kernel {
                KernelSpec::HomoPoly { degree } => fit_homogeneous_with_ridge(&problem, degree, ridge)?,
                KernelSpec::InhomoPoly { degree } => fit_inhomogeneous_with_ridge(&problem, degree, ridge)?,
                KernelSpec::Gaussian { bandwidth } => {
                    fit_gaussian_truncated_with_ridge(&problem, bandwidth, a.truncation, ridge)?
                }
            };
            (AnyModel::Population(m), None)
        }
        Method::Sample => {
            let data = match &a.data {
                Some(path) => {
                    let file = read_points(path)?;
                    let labels = file.labels.ok_or_else(|| CliError::Usage("sample data needs a label column".into()))?;
                    let p = file.points.first().map_or(0, Vec::len);
                    let flat: Vec<f64> = file.points.iter().flatten().copied().collect();
                    if flat.len() != p * labels.len() {
                        return Err(CliError::Usage("rows have different lengths".into()));
                    }
                    LabeledSample::new(DMatrix::from_row_slice(labels.len(), p, &flat), labels)?
                }
                None => {
                    let problem = TwoClassProblem::scenario(a.scenario)?;
                    LabeledSample::draw(&problem, a.sample_n, a.sample_n, cli.seed)?
                }
            };
            let mut m = sample::fit(&data, &a.kernel, cli.ridge)?;
            choose_threshold(&mut m, &data)?;
            let rule = m.threshold;
            (AnyModel::Sample(m), rule)
        }
        Method::Rff => {
            let KernelSpec::Gaussian { bandwidth } = a.kernel else {
                return Err(CliError::Usage("random features need a gauss:<bandwidth> kernel".into()));
            };
            let problem = TwoClassProblem::scenario(a.scenario)?;
            let f = sample_features(problem.dim(), a.features, bandwidth, a.variant.0, cli.seed)?;
            (AnyModel::Rff(fit_population(&problem, &f, cli.ridge)?), None)
        }
    };
    let mut fields = json!({ "model": model });
    if let Some(rule) = threshold {
        fields["threshold"] = json!(rule);
    }
    sink.json(&a.name, fields)?;
    Ok(())
}

fn grid(a: &GridArgs, sink: &mut Sink) -> Result<(), CliError> {
    let file = ModelFile::load(&a.model)?;
    let g = grid_eval(&file.model, &a.grid.0)?;
    let t = match file.threshold() {
        None => grid_table(&g),
        Some(rule) => {
            let mut t = Table::new(&["x", "y", "score", "class"]);
            for (x, y, s) in g.triples() {
                t.push(vec![x.into(), y.into(), s.into(), (u8::from(rule.predict(s)) as usize).into()]);
            }
            t
        }
    };
    sink.table(&a.name, &t.meta(json!({ "lambda": file.model.lambda(), "source": a.model })))?;
    Ok(())
}

fn score(a: &ScoreArgs, sink: &mut Sink) -> Result<(), CliError> {
    let file = ModelFile::load(&a.model)?;
    let pts = read_points(&a.points)?;
    let truth = pts.labels.as_deref();
    let mut columns = vec!["score"];
    let mut meta = json!({ "lambda": file.model.lambda(), "source": a.model });
    let t = match file.threshold() {
        None => {
            let scores = file.model.score_many(&pts.points)?;
            let mut t = Table::new(&columns);
            for s in scores {
                t.push(vec![s.into()]);
            }
            t
        }
        Some(rule) => {
            let c = classify_with(&file.model, &rule, &pts.points, truth)?;
            columns.push("predicted");
            if truth.is_some() {
                columns.push("label");
            }
            let mut t = Table::new(&columns);
            for (i, (&s, &p)) in c.scores.iter().zip(&c.predicted).enumerate() {
                let mut row = vec![s.into(), (u8::from(p) as usize).into()];
                if let Some(labels) = truth {
                    row.push((u8::from(labels[i]) as usize).into());
                }
                t.push(row);
            }
            if let Some(conf) = c.confusion {
                meta["confusion"] = json!(conf);
                meta["error_rate"] = json!(conf.overall());
            }
            t
        }
    };
    sink.table(&a.name, &t.meta(meta))?;
    Ok(())
}
