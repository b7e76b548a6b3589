//! Benchmark matrix families: banded ("diagonal"), random doubly sparse, and
//! random walks on web graphs. Every generator returns the row-stochastic
//! `P`; use [`crate::sparse::pagerank_operator`] to get `A = Pᵀ − I`.

mod snap;

pub use snap::{load_snap_edgelist, parse_snap_edgelist, webgraph_to_p, EdgeList};

use std::fmt;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{CsrMatrix, DualSparseMatrix};

/// A reproducible description of one test matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ProblemSpec {
    Diagonal {
        n: usize,
        n_d: usize,
        seed: u64,
        #[serde(default)]
        random_weights: bool,
    },
    RandomDs {
        n: usize,
        s: usize,
        seed: u64,
    },
    Webgraph {
        source_path: PathBuf,
    },
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ProblemSpec::Diagonal { n, n_d, .. } => check_diagonal(n, n_d),
            ProblemSpec::RandomDs { n, s, .. } => check_random(n, s),
            ProblemSpec::Webgraph { .. } => Ok(()),
        }
    }

    /// Builds the stochastic matrix `P`.
    pub fn build(&self) -> Result<DualSparseMatrix> {
        match self {
            &ProblemSpec::Diagonal {
                n,
                n_d,
                seed,
                random_weights,
            } => gen_diagonal(n, n_d, seed, random_weights),
            &ProblemSpec::RandomDs { n, s, seed } => gen_random_ds(n, s, seed),
            ProblemSpec::Webgraph { source_path } => {
                webgraph_to_p(&load_snap_edgelist(source_path)?)
            }
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            ProblemSpec::Diagonal { .. } => "diagonal",
            ProblemSpec::RandomDs { .. } => "random",
            ProblemSpec::Webgraph { .. } => "webgraph",
        }
    }

    /// `n_d` for the banded family, `s` for the random one.
    pub fn param(&self) -> Option<usize> {
        match *self {
            ProblemSpec::Diagonal { n_d, .. } => Some(n_d),
            ProblemSpec::RandomDs { s, .. } => Some(s),
            ProblemSpec::Webgraph { .. } => None,
        }
    }
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemSpec::Diagonal {
                n,
                n_d,
                seed,
                random_weights,
            } => {
                write!(f, "diagonal(n={n}, n_d={n_d}")?;
                if *random_weights {
                    write!(f, ", random weights, seed={seed}")?;
                }
                write!(f, ")")
            }
            ProblemSpec::RandomDs { n, s, seed } => write!(f, "random(n={n}, s={s}, seed={seed})"),
            ProblemSpec::Webgraph { source_path } => {
                write!(f, "webgraph({})", source_path.display())
            }
        }
    }
}

fn check_diagonal(n: usize, n_d: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if n_d.is_multiple_of(2) || n_d > n {
        return Err(Error::InvalidParameter(format!(
            "number of diagonals must be odd and at most n (got n_d={n_d}, n={n})"
        )));
    }
    Ok(())
}

fn check_random(n: usize, s: usize) -> Result<()> {
    if s == 0 || s > n {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= s <= n (got s={s}, n={n})"
        )));
    }
    Ok(())
}

/// Band matrix with `n_d` diagonals centred on the main one, without
/// wraparound, so boundary rows are shorter.
///
/// Entries of row `i` are `1 / (band size of row i)`. With `random_weights`
/// they are drawn from `(0, 1]` instead and normalized per row; `seed` only
/// matters in that case.
pub fn gen_diagonal(
    n: usize,
    n_d: usize,
    seed: u64,
    random_weights: bool,
) -> Result<DualSparseMatrix> {
    check_diagonal(n, n_d)?;
    let half = (n_d - 1) / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut row_start = Vec::with_capacity(n + 1);
    let mut col_index = Vec::with_capacity(n * n_d);
    let mut value = Vec::with_capacity(n * n_d);
    row_start.push(0);
    for i in 0..n {
        let lo = i.saturating_sub(half);
        let hi = (i + half).min(n - 1);
        let width = hi - lo + 1;
        if random_weights {
            let w: Vec<f64> = (0..width).map(|_| 1.0 - rng.random::<f64>()).collect();
            let total: f64 = w.iter().sum();
            value.extend(w.iter().map(|v| v / total));
        } else {
            value.extend(std::iter::repeat_n(1.0 / width as f64, width));
        }
        col_index.extend(lo..=hi);
        row_start.push(col_index.len());
    }
    let csr = CsrMatrix::from_parts(n, n, row_start, col_index, value)?;
    Ok(DualSparseMatrix::from_rows(csr))
}

const RESHUFFLES: usize = 16;
const SWAP_TRIES: usize = 256;

/// `P = (1/s) Σ Π_t` for `s` permutation matrices with pairwise disjoint
/// supports, so every row and every column holds exactly `s` entries equal
/// to `1/s` and `P` is doubly stochastic.
///
/// Each permutation starts as a uniform shuffle; rows colliding with an
/// earlier permutation are repaired by random swaps. A permutation that
/// cannot be repaired is reshuffled, and if that keeps failing (only likely
/// when `s` is close to `n`) the whole matrix falls back to shifted copies of
/// one random permutation, which are disjoint by construction.
pub fn gen_random_ds(n: usize, s: usize, seed: u64) -> Result<DualSparseMatrix> {
    check_random(n, s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let perms = match disjoint_permutations(n, s, &mut rng) {
        Some(p) => p,
        None => shifted_permutations(n, s, &mut rng),
    };
    let w = 1.0 / s as f64;
    let triplets: Vec<(usize, usize, f64)> = perms
        .iter()
        .flat_map(|perm| perm.iter().enumerate().map(move |(i, &j)| (i, j, w)))
        .collect();
    DualSparseMatrix::from_triplets(&triplets, n, n)
}

fn disjoint_permutations(n: usize, s: usize, rng: &mut ChaCha8Rng) -> Option<Vec<Vec<usize>>> {
    // used[i] lists the columns already taken in row i
    let mut used: Vec<Vec<usize>> = vec![Vec::with_capacity(s); n];
    let mut perms = Vec::with_capacity(s);
    for _ in 0..s {
        let perm = (0..RESHUFFLES).find_map(|_| repaired_shuffle(&used, rng))?;
        for (i, &j) in perm.iter().enumerate() {
            used[i].push(j);
        }
        perms.push(perm);
    }
    Some(perms)
}

fn repaired_shuffle(used: &[Vec<usize>], rng: &mut ChaCha8Rng) -> Option<Vec<usize>> {
    let n = used.len();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    for i in 0..n {
        if !used[i].contains(&perm[i]) {
            continue;
        }
        let mut fixed = false;
        for _ in 0..SWAP_TRIES {
            let k = rng.random_range(0..n);
            if k != i && !used[i].contains(&perm[k]) && !used[k].contains(&perm[i]) {
                perm.swap(i, k);
                fixed = true;
                break;
            }
        }
        if !fixed {
            return None;
        }
    }
    Some(perm)
}

fn shifted_permutations(n: usize, s: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut sigma: Vec<usize> = (0..n).collect();
    sigma.shuffle(rng);
    let mut offsets: Vec<usize> = (0..n).collect();
    offsets.shuffle(rng);
    offsets[..s]
        .iter()
        .map(|&c| (0..n).map(|i| sigma[(i + c) % n]).collect())
        .collect()
}
