//! Independent oracles and data generators shared by the integration tests.
//!
//! Nothing here calls into the code paths it is used to check: the PCA
//! oracle builds the covariance with nalgebra and runs nalgebra's dense
//! symmetric eigensolver, and the CART oracle enumerates every split and
//! scores it with exact rational Gini impurity.

#![allow(dead_code)]

use facecue::forest::{Node, Tree};
use facecue::{LandmarkFrame, Point2, SentenceClass, LANDMARK_COUNT};
use nalgebra::{DMatrix, SymmetricEigen};
use num_rational::Ratio;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Frame with integer pixel coordinates, as a shape predictor emits them.
pub fn random_pixel_frame(rng: &mut impl Rng, id: &str) -> LandmarkFrame {
    let points = (0..LANDMARK_COUNT)
        .map(|_| Point2::new(rng.gen_range(0..640) as f64, rng.gen_range(0..480) as f64))
        .collect();
    LandmarkFrame::new(id, points, None).unwrap()
}

pub fn random_matrix(rng: &mut impl Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..d)
                .map(|_| rng.gen_range(0.0..std::f64::consts::PI))
                .collect()
        })
        .collect()
}

pub struct PcaOracle {
    /// Eigenvalues in non-increasing order.
    pub values: Vec<f64>,
    /// Matching unit eigenvectors, largest-magnitude entry positive.
    pub vectors: Vec<Vec<f64>>,
    pub trace: f64,
}

pub fn pca_oracle(rows: &[Vec<f64>]) -> PcaOracle {
    let (n, d) = (rows.len(), rows[0].len());
    let x = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
    let mean = x.row_mean();
    let centered = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - mean[j]);
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    let trace = cov.trace();
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let vectors = order
        .iter()
        .map(|&c| {
            let mut v: Vec<f64> = eig.eigenvectors.column(c).iter().copied().collect();
            let pivot = (0..d).fold(
                0,
                |best, i| if v[i].abs() > v[best].abs() { i } else { best },
            );
            if v[pivot] < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect();
    PcaOracle {
        values: order.iter().map(|&c| eig.eigenvalues[c]).collect(),
        vectors,
        trace,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleNode {
    Leaf([u64; 2]),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<OracleNode>,
        right: Box<OracleNode>,
    },
}

fn weighted_gini(sides: &[[u64; 2]]) -> Ratio<i64> {
    let n: u64 = sides.iter().map(|s| s[0] + s[1]).sum();
    sides
        .iter()
        .map(|s| {
            let ns = (s[0] + s[1]) as i64;
            let purity: Ratio<i64> = s
                .iter()
                .map(|&c| Ratio::new(c as i64 * c as i64, ns * ns))
                .sum();
            Ratio::new(ns, n as i64) * (Ratio::from_integer(1) - purity)
        })
        .sum()
}

/// Grows the exhaustive CART tree: every feature, every midpoint between
/// consecutive distinct values, first minimum in (feature, threshold) order.
pub fn cart_oracle(
    x: &[Vec<f64>],
    y: &[SentenceClass],
    rows: &[usize],
    depth_left: Option<usize>,
) -> OracleNode {
    let mut counts = [0u64; 2];
    for &r in rows {
        counts[y[r].index()] += 1;
    }
    if counts[0] == 0 || counts[1] == 0 || rows.len() < 2 || depth_left == Some(0) {
        return OracleNode::Leaf(counts);
    }
    let k = x[0].len();
    let mut best: Option<(Ratio<i64>, usize, f64)> = None;
    for f in 0..k {
        let mut values: Vec<f64> = rows.iter().map(|&r| x[r][f]).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        for w in values.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let mut sides = [[0u64; 2]; 2];
            for &r in rows {
                sides[usize::from(x[r][f] > t)][y[r].index()] += 1;
            }
            let g = weighted_gini(&sides);
            if best.as_ref().is_none_or(|(b, _, _)| g < *b) {
                best = Some((g, f, t));
            }
        }
    }
    match best {
        None => OracleNode::Leaf(counts),
        Some((_, feature, threshold)) => {
            let (l, r): (Vec<usize>, Vec<usize>) =
                rows.iter().partition(|&&i| x[i][feature] <= threshold);
            let next = depth_left.map(|d| d - 1);
            OracleNode::Split {
                feature,
                threshold,
                left: Box::new(cart_oracle(x, y, &l, next)),
                right: Box::new(cart_oracle(x, y, &r, next)),
            }
        }
    }
}

/// Walks both trees together; returns the first difference.
pub fn compare_tree(tree: &Tree, at: usize, oracle: &OracleNode, path: &str) -> Result<(), String> {
    match (&tree.nodes[at], oracle) {
        (Node::Leaf { class_counts }, OracleNode::Leaf(counts)) if class_counts == counts => Ok(()),
        (
            Node::Split {
                feature,
                threshold,
                left,
                right,
            },
            OracleNode::Split {
                feature: of,
                threshold: ot,
                left: ol,
                right: or,
            },
        ) if feature == of && threshold == ot => {
            compare_tree(tree, *left, ol, &format!("{path}L"))?;
            compare_tree(tree, *right, or, &format!("{path}R"))
        }
        (mine, theirs) => Err(format!(
            "node at `{path}` differs: {mine:?} vs oracle {theirs:?}"
        )),
    }
}

/// Small dataset with deliberate ties: two features on a coarse grid.
pub fn random_tree_dataset(
    rng: &mut impl Rng,
    n: usize,
    k: usize,
) -> (Vec<Vec<f64>>, Vec<SentenceClass>) {
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..k)
                .map(|f| {
                    if f % 2 == 0 {
                        rng.gen_range(0..6) as f64 * 0.5
                    } else {
                        rng.gen_range(-1.0..1.0)
                    }
                })
                .collect()
        })
        .collect();
    let y = x
        .iter()
        .map(|row| {
            let signal = row[0] - 1.2 + 0.8 * row[1 % k];
            if signal + rng.gen_range(-0.6..0.6) > 0.0 {
                SentenceClass::ST
            } else {
                SentenceClass::AS
            }
        })
        .collect();
    (x, y)
}
