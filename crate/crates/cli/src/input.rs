use std::path::Path;

use anyhow::{bail, Context, Result};
use pagerank_sparse::problem::ProblemSpec;
use pagerank_sparse::sparse::{check_operator, check_row_stochastic, pagerank_operator};
use pagerank_sparse::DualSparseMatrix;

use crate::{Family, MatrixKind, ProblemArgs};

pub fn spec_from_args(p: &ProblemArgs) -> Result<ProblemSpec> {
    let Some(family) = p.family else {
        bail!("give either --matrix or --family");
    };
    let spec = match family {
        Family::Diagonal => ProblemSpec::Diagonal {
            n: p.n.context("--n is required")?,
            n_d: p.nd.context("--nd is required for the diagonal family")?,
            seed: p.seed,
            random_weights: p.random_weights,
        },
        Family::Random => ProblemSpec::RandomDs {
            n: p.n.context("--n is required")?,
            s: p.s.context("--s is required for the random family")?,
            seed: p.seed,
        },
        Family::Webgraph => ProblemSpec::Webgraph {
            source_path: p
                .source
                .clone()
                .context("--source is required for the webgraph family")?,
        },
    };
    spec.validate()?;
    Ok(spec)
}

/// Builds `A = Pᵀ − I` for a generated problem; `P` is dropped as soon as
/// `A` exists.
pub fn operator_from_spec(spec: &ProblemSpec) -> Result<DualSparseMatrix> {
    let p = spec.build().with_context(|| format!("building {spec}"))?;
    Ok(pagerank_operator(&p)?)
}

pub fn operator_from_file(path: &Path, kind: MatrixKind) -> Result<DualSparseMatrix> {
    let m = DualSparseMatrix::load(path).with_context(|| format!("reading {}", path.display()))?;
    let as_p = |m: DualSparseMatrix| -> Result<DualSparseMatrix> {
        check_row_stochastic(&m)?;
        Ok(pagerank_operator(&m)?)
    };
    match kind {
        MatrixKind::P => as_p(m),
        MatrixKind::A => {
            check_operator(&m)?;
            Ok(m)
        }
        MatrixKind::Auto => {
            // the two shapes are disjoint: a nonnegative matrix passes the
            // operator check only if it is all zeros, which is not stochastic
            if check_row_stochastic(&m).is_ok() {
                as_p(m)
            } else if check_operator(&m).is_ok() {
                Ok(m)
            } else {
                bail!(
                    "{} is neither row-stochastic nor of the form Pᵀ − I",
                    path.display()
                )
            }
        }
    }
}
