//! Pearson correlation between clients and correlation-maximising
//! federation selection.

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest number of subsets [`SearchStrategy::Auto`] enumerates exactly.
pub const EXHAUSTIVE_LIMIT: u128 = 200_000;

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Correlation(format!(
            "need two series of equal length ≥ 2, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Correlation("constant series".into()));
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    if !r.is_finite() {
        return Err(Error::Correlation("non-finite coefficient".into()));
    }
    Ok(r.clamp(-1.0, 1.0))
}

/// Symmetric matrix of pairwise coefficients. Pairs whose coefficient is
/// undefined are stored as `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    ids: Vec<String>,
    values: Vec<Option<f64>>,
}

impl CorrelationMatrix {
    /// Build from an explicit coefficient function (used for tests and for
    /// precomputed matrices).
    pub fn from_fn(ids: Vec<String>, mut f: impl FnMut(usize, usize) -> Option<f64>) -> Self {
        let n = ids.len();
        let mut values = vec![None; n * n];
        for i in 0..n {
            values[i * n + i] = Some(1.0);
            for j in i + 1..n {
                let v = f(i, j);
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        CorrelationMatrix { ids, values }
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i * self.ids.len() + j]
    }

    /// Pairs whose coefficient could not be computed.
    pub fn invalid_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.get(i, j).is_none())
            .collect()
    }

    /// CSV with a header row of ids; undefined entries are left empty.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "client_id,{}", self.ids.join(","))?;
        for (i, id) in self.ids.iter().enumerate() {
            let row: Vec<String> = (0..self.len())
                .map(|j| self.get(i, j).map_or(String::new(), |v| v.to_string()))
                .collect();
            writeln!(w, "{id},{}", row.join(","))?;
        }
        Ok(())
    }

    /// Mean pairwise coefficient over `members`, or `None` if a pair is
    /// undefined. A single member has rate 1.
    pub fn mean_pairwise(&self, members: &[usize]) -> Option<f64> {
        if members.len() < 2 {
            return Some(1.0);
        }
        let mut sum = 0.0;
        let mut count = 0usize;
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                sum += self.get(i, j)?;
                count += 1;
            }
        }
        Some(sum / count as f64)
    }
}

/// Pairwise Pearson coefficients of the given (training) series.
pub fn correlation_matrix(ids: &[String], series: &[&[f64]]) -> Result<CorrelationMatrix> {
    if ids.len() != series.len() {
        return Err(Error::Correlation("one id per series required".into()));
    }
    if series.len() < 2 {
        return Err(Error::Correlation("need at least two clients".into()));
    }
    Ok(CorrelationMatrix::from_fn(ids.to_vec(), |i, j| {
        pearson(series[i], series[j]).ok()
    }))
}

/// How [`select_federation`] searches the subsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SearchStrategy {
    /// Exhaustive when `C(pool, k) ≤ EXHAUSTIVE_LIMIT`, beam search otherwise.
    #[default]
    Auto,
    Exhaustive,
    Beam { width: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FederationSelection {
    pub ids: Vec<String>,
    /// Indices into the correlation matrix, ascending.
    #[serde(skip)]
    pub indices: Vec<usize>,
    pub correlation_rate: f64,
}

/// `C(n, k)`, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc·(n−i) is divisible by i+1 since acc = C(n, i).
        match acc.checked_mul((n - i) as u128) {
            Some(v) => acc = v / (i as u128 + 1),
            None => return u128::MAX,
        }
    }
    acc
}

/// Choose the `k` clients, among those whose group label is in `groups`
/// (all clients when `groups` is `None`), with the highest mean pairwise
/// correlation. `labels[i]` is the group of matrix entry `i`. Subsets with
/// an undefined pair are never chosen. Ties go to the lexicographically
/// smallest index set.
pub fn select_federation(
    matrix: &CorrelationMatrix,
    labels: &[String],
    groups: Option<&[String]>,
    k: usize,
    strategy: SearchStrategy,
) -> Result<FederationSelection> {
    if labels.len() != matrix.len() {
        return Err(Error::Selection("one group label per client required".into()));
    }
    let pool: Vec<usize> = (0..matrix.len())
        .filter(|&i| groups.is_none_or(|g| g.contains(&labels[i])))
        .collect();
    if k == 0 || pool.len() < k {
        return Err(Error::Selection(format!(
            "cannot choose {k} clients from a pool of {}",
            pool.len()
        )));
    }
    let best = match strategy {
        SearchStrategy::Exhaustive => exhaustive(matrix, &pool, k),
        SearchStrategy::Beam { width } => beam(matrix, &pool, k, width.max(1)),
        SearchStrategy::Auto if binomial(pool.len(), k) <= EXHAUSTIVE_LIMIT => {
            exhaustive(matrix, &pool, k)
        }
        SearchStrategy::Auto => beam(matrix, &pool, k, 64),
    };
    let (indices, rate) =
        best.ok_or_else(|| Error::Selection("every subset contains an undefined pair".into()))?;
    Ok(FederationSelection {
        ids: indices.iter().map(|&i| matrix.ids()[i].clone()).collect(),
        indices,
        correlation_rate: rate,
    })
}

fn exhaustive(matrix: &CorrelationMatrix, pool: &[usize], k: usize) -> Option<(Vec<usize>, f64)> {
    let n = pool.len();
    let mut pos: Vec<usize> = (0..k).collect();
    let mut best: Option<(Vec<usize>, f64)> = None;
    loop {
        let members: Vec<usize> = pos.iter().map(|&p| pool[p]).collect();
        if let Some(rate) = matrix.mean_pairwise(&members) {
            if best.as_ref().is_none_or(|(_, b)| rate > *b) {
                best = Some((members, rate));
            }
        }
        // Advance to the next combination in lexicographic order.
        let Some(i) = (0..k).rev().find(|&i| pos[i] < n - k + i) else {
            return best;
        };
        pos[i] += 1;
        for j in i + 1..k {
            pos[j] = pos[j - 1] + 1;
        }
    }
}

fn beam(
    matrix: &CorrelationMatrix,
    pool: &[usize],
    k: usize,
    width: usize,
) -> Option<(Vec<usize>, f64)> {
    if k == 1 {
        return Some((vec![pool[0]], 1.0));
    }
    let score = |m: &[usize]| matrix.mean_pairwise(m);
    let keep = |mut cands: Vec<(Vec<usize>, f64)>| {
        cands.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        cands.dedup_by(|a, b| a.0 == b.0);
        cands.truncate(width);
        cands
    };
    let mut frontier = Vec::new();
    for (a, &i) in pool.iter().enumerate() {
        for &j in &pool[a + 1..] {
            if let Some(r) = matrix.get(i, j) {
                frontier.push((vec![i, j], r));
            }
        }
    }
    frontier = keep(frontier);
    for _ in 2..k {
        let mut next = Vec::new();
        let mut seen = BTreeSet::new();
        for (members, _) in &frontier {
            for &c in pool {
                if members.contains(&c) {
                    continue;
                }
                let mut m = members.clone();
                m.push(c);
                m.sort_unstable();
                if !seen.insert(m.clone()) {
                    continue;
                }
                if let Some(r) = score(&m) {
                    next.push((m, r));
                }
            }
        }
        frontier = keep(next);
    }
    frontier.into_iter().next()
}
