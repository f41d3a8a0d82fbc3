use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::SolverError;
use crate::instance::{InstanceError, ScpInstance, Selection};

#[derive(Debug, Clone, PartialEq)]
pub enum Restriction {
    /// Every row is still coverable. `index_map[k]` is the original index of
    /// sub-instance column `k`.
    Covered {
        sub: ScpInstance,
        index_map: Vec<usize>,
    },
    /// The kept columns leave these rows uncovered.
    UncoveredRows(Vec<usize>),
}

/// Sub-instance over `columns` only; rows are unchanged.
pub fn restrict(inst: &ScpInstance, columns: &[usize]) -> Result<Restriction, SolverError> {
    if columns.is_empty() {
        return Err(SolverError::EmptyRestriction);
    }
    let keep = Selection::new(columns.iter().copied());
    if let Some(&bad) = keep.as_slice().last().filter(|&&j| j >= inst.n()) {
        return Err(InstanceError::IndexOutOfRange {
            index: bad,
            limit: inst.n(),
            context: "restriction",
        }
        .into());
    }
    let mut covered = vec![false; inst.m()];
    for j in keep.iter() {
        for &i in inst.col(j) {
            covered[i] = true;
        }
    }
    let uncovered: Vec<usize> = (0..inst.m()).filter(|&i| !covered[i]).collect();
    if !uncovered.is_empty() {
        return Ok(Restriction::UncoveredRows(uncovered));
    }
    let index_map = keep.as_slice().to_vec();
    let cols = index_map.iter().map(|&j| inst.col(j).to_vec()).collect();
    let costs = index_map.iter().map(|&j| inst.cost(j)).collect();
    let sub = ScpInstance::from_columns(inst.name(), inst.m(), cols, costs)?;
    Ok(Restriction::Covered { sub, index_map })
}

/// Maps a sub-instance selection back to original column indices.
pub fn lift(sub_selection: &Selection, index_map: &[usize]) -> Selection {
    sub_selection.iter().map(|k| index_map[k]).collect()
}

/// `ceil(k n / 100)` distinct columns drawn uniformly without replacement.
pub fn random_restrict(inst: &ScpInstance, k_percent: f64, seed: u64) -> Result<Vec<usize>, SolverError> {
    if !(k_percent > 0.0 && k_percent <= 100.0) {
        return Err(SolverError::InvalidPercent(k_percent));
    }
    let n = inst.n();
    let count = ((k_percent * n as f64 / 100.0) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols = index::sample(&mut rng, n, count).into_vec();
    cols.sort_unstable();
    Ok(cols)
}
