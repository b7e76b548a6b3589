use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use pagerank_sparse::problem::ProblemSpec;
use pagerank_sparse::report::ProblemSummary;
use pagerank_sparse::solver::{fw, gk, nl1, FwConfig, GkConfig, Nl1Config, UpdateOrder};
use pagerank_sparse::sparse::{pagerank_operator, sparsity_stats};
use pagerank_sparse::{BenchRow, DualSparseMatrix, Method, SolveOutcome, SolveReport, TraceRow};
use rayon::prelude::*;

use crate::input::{operator_from_file, operator_from_spec, spec_from_args};
use crate::{BenchArgs, PlotdataArgs, ProblemArgs, SolveArgs, Suite};

/// Solver settings shared by `solve` and `bench`.
#[derive(Debug, Clone, Copy)]
struct Settings {
    eps: f64,
    gamma: f64,
    step_denominator: f64,
    sigma: f64,
    seed: u64,
    horizon: Option<u64>,
    order: UpdateOrder,
    max_iters: Option<u64>,
    start_vertex: usize,
    check_stride: Option<u64>,
}

fn run(method: Method, a: &DualSparseMatrix, s: &Settings) -> Result<SolveOutcome> {
    let out = match method {
        Method::Nl1 => {
            let defaults = Nl1Config::default();
            nl1::solve(
                a,
                &Nl1Config {
                    epsilon: s.eps,
                    gamma: s.gamma,
                    step_denominator: s.step_denominator,
                    max_iters: s.max_iters.unwrap_or(defaults.max_iters),
                    start_vertex: s.start_vertex,
                    check_stride: s.check_stride,
                    ..defaults
                },
            )?
        }
        Method::Fw => fw::solve(
            a,
            &FwConfig {
                epsilon: s.eps,
                max_iters: s.max_iters,
                start_vertex: s.start_vertex,
                check_stride: s.check_stride,
                ..FwConfig::default()
            },
        )?,
        Method::Gk => gk::solve(
            a,
            &GkConfig {
                epsilon: s.eps,
                sigma: s.sigma,
                seed: s.seed,
                override_n: s.horizon,
                rounds: s.max_iters,
                update_order: s.order,
                ..GkConfig::default()
            },
        )?,
    };
    Ok(out)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn generate(problem: &ProblemArgs, out: &Path, out_operator: Option<&Path>) -> Result<bool> {
    let spec = spec_from_args(problem)?;
    let p = spec.build()?;
    p.save(out)
        .with_context(|| format!("writing {}", out.display()))?;
    let a = pagerank_operator(&p)?;
    if let Some(path) = out_operator {
        a.save(path)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    println!("matrix\tn\trow_min\trow_max\tcol_min\tcol_max\tavg");
    for (name, m) in [("P", &p), ("A", &a)] {
        let st = sparsity_stats(m);
        println!(
            "{name}\t{}\t{}\t{}\t{}\t{}\t{:.2}",
            m.n_rows(),
            st.row_nnz_min,
            st.row_nnz_max,
            st.col_nnz_min,
            st.col_nnz_max,
            st.row_nnz_avg
        );
    }
    Ok(true)
}

pub fn write_trace(path: &Path, trace: &[TraceRow]) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for row in trace {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// `trace.csv` → `trace.gamma-0.5.csv`.
fn sweep_trace_path(base: &Path, gamma: f64) -> PathBuf {
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}.gamma-{gamma}.{}", ext.to_string_lossy()),
        None => format!("{stem}.gamma-{gamma}"),
    };
    base.with_file_name(name)
}

pub fn solve(args: &SolveArgs) -> Result<bool> {
    let method = Method::from(args.method);
    if args.gamma_sweep.is_some() && method != Method::Nl1 {
        bail!("--gamma-sweep only applies to --method nl1");
    }
    let (a, summary) = match &args.matrix {
        Some(path) => {
            let a = operator_from_file(path, args.matrix_kind)?;
            let mut summary = ProblemSummary::of_operator(&a);
            summary.label = path.display().to_string();
            (a, summary)
        }
        None => {
            let spec = spec_from_args(&args.problem)?;
            let a = operator_from_spec(&spec)?;
            let summary = ProblemSummary::of_operator(&a).with_spec(&spec);
            (a, summary)
        }
    };
    let base = Settings {
        eps: args.eps,
        gamma: args.gamma,
        step_denominator: args.step_denominator,
        sigma: args.sigma,
        seed: args.problem.seed,
        horizon: args.horizon,
        order: if args.alternating {
            UpdateOrder::Alternating
        } else {
            UpdateOrder::Simultaneous
        },
        max_iters: args.max_iters,
        start_vertex: args.start_vertex,
        check_stride: (args.check_stride > 0).then_some(args.check_stride),
    };

    let gammas = args.gamma_sweep.clone().unwrap_or_else(|| vec![args.gamma]);
    let mut reports = Vec::with_capacity(gammas.len());
    for &gamma in &gammas {
        let mut out = run(method, &a, &Settings { gamma, ..base })?;
        out.report.problem = summary.clone();
        if let Some(path) = &args.trace {
            let path = match args.gamma_sweep {
                Some(_) => sweep_trace_path(path, gamma),
                None => path.clone(),
            };
            write_trace(&path, &out.report.trace)?;
        }
        if !out.report.success {
            eprintln!(
                "{method}: stopped after {} iterations without reaching eps = {:e}",
                out.report.iterations, args.eps
            );
        }
        reports.push(out.report);
    }

    let mut w = output(args.out.as_deref())?;
    if args.gamma_sweep.is_some() {
        serde_json::to_writer_pretty(&mut w, &reports)?;
    } else {
        serde_json::to_writer_pretty(&mut w, &reports[0])?;
    }
    writeln!(w)?;
    w.flush()?;
    Ok(reports.iter().any(|r| r.success))
}

fn bench_specs(args: &BenchArgs) -> Result<Vec<ProblemSpec>> {
    let mut suites = args.suite.clone();
    suites.sort();
    suites.dedup();
    let mut specs = Vec::new();
    for suite in suites {
        match suite {
            Suite::Diag => {
                for &n in &args.n {
                    for &n_d in args.nd.iter().filter(|&&d| d <= n) {
                        specs.push(ProblemSpec::Diagonal {
                            n,
                            n_d,
                            seed: args.seed,
                            random_weights: false,
                        });
                    }
                }
            }
            Suite::Random => {
                for &n in &args.n {
                    for &s in args.s.iter().filter(|&&s| s <= n) {
                        specs.push(ProblemSpec::RandomDs {
                            n,
                            s,
                            seed: args.seed,
                        });
                    }
                }
            }
            Suite::Web => {
                if args.source.is_empty() {
                    bail!("the web suite needs at least one --source edge list");
                }
                for path in &args.source {
                    specs.push(ProblemSpec::Webgraph {
                        source_path: path.clone(),
                    });
                }
            }
        }
    }
    for spec in &specs {
        spec.validate()?;
    }
    Ok(specs)
}

/// Worker count from `SOLVER_THREADS`; unset or 0 leaves the choice to rayon.
fn solver_threads() -> Result<usize> {
    match std::env::var("SOLVER_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .with_context(|| format!("SOLVER_THREADS={v:?} is not a thread count")),
        Err(_) => Ok(0),
    }
}

pub fn bench(args: &BenchArgs) -> Result<bool> {
    let specs = bench_specs(args)?;
    if specs.is_empty() {
        bail!("the selected suites contain no problems");
    }
    let mut methods: Vec<Method> = args.method.iter().map(|&m| m.into()).collect();
    methods.sort();
    methods.dedup();
    let settings = Settings {
        eps: args.eps,
        gamma: args.gamma,
        step_denominator: Nl1Config::default().step_denominator,
        sigma: args.sigma,
        seed: args.seed,
        horizon: None,
        order: UpdateOrder::Simultaneous,
        max_iters: args.max_iters,
        start_vertex: 0,
        check_stride: args.check_stride.filter(|&s| s > 0),
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(solver_threads()?)
        .build()?;
    let results: Vec<Result<Vec<(BenchRow, bool)>>> = pool.install(|| {
        specs
            .par_iter()
            .map(|spec| {
                let a = operator_from_spec(spec)?;
                methods
                    .iter()
                    .map(|&m| {
                        let out =
                            run(m, &a, &settings).with_context(|| format!("{m} on {spec}"))?;
                        let row = BenchRow::from_report(&out.report, spec.family(), spec.param());
                        Ok((row, out.report.success))
                    })
                    .collect()
            })
            .collect()
    });

    let mut rows = Vec::new();
    let mut all_ok = true;
    for r in results {
        for (row, ok) in r? {
            if !ok {
                eprintln!(
                    "{} on {} n={} param={:?} did not converge",
                    row.method, row.family, row.n, row.param
                );
            }
            all_ok &= ok;
            rows.push(row);
        }
    }
    rows.sort_by(|a, b| {
        (&a.family, a.n, a.param, a.method).cmp(&(&b.family, b.n, b.param, b.method))
    });

    let mut w = csv::Writer::from_writer(output(args.out.as_deref())?);
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(all_ok)
}

pub fn plotdata(args: &PlotdataArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.report)
        .with_context(|| format!("reading {}", args.report.display()))?;
    let report: SolveReport = serde_json::from_str(&text)
        .with_context(|| format!("{} is not a single solve report", args.report.display()))?;
    if report.trace.is_empty() {
        bail!("{} has an empty trace", args.report.display());
    }
    let with_suffix = |suffix: &str| {
        let mut s = args.out.clone().into_os_string();
        s.push(suffix);
        PathBuf::from(s)
    };
    let mut by_iter = output(Some(&with_suffix(".iter.dat")))?;
    let mut by_time = output(Some(&with_suffix(".time.dat")))?;
    for row in &report.trace {
        writeln!(by_iter, "{} {:e}", row.iter, row.f_value)?;
        writeln!(
            by_time,
            "{:e} {:e}",
            row.elapsed_ns as f64 * 1e-9,
            row.f_value
        )?;
    }
    by_iter.flush()?;
    by_time.flush()?;
    Ok(())
}
