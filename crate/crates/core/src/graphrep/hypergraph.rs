//! Weighted hypergraph random walks and their Laplacian spectra.
//!
//! Vertices are elements, hyperedges are columns with `omega(e) = cost`, and
//! every vertex of `e` carries `gamma_e(v) = 1 / |e|`. Both chains factor
//! through the incidence structure:
//!
//! * `Q[v, e] = omega(e) / d(v)` for `e` containing `v`, `d(v)` the total
//!   weight of edges at `v` (uniform over those edges when `d(v) = 0`);
//! * `G[e, v] = gamma_e(v)`.
//!
//! Then `P_V = Q G` and `P_E = G Q`. A vertex in no edge gets a self-loop.

use super::eigen::{lanczos_ritz_values, symmetric_eigenvalues, DenseMatrix};
use super::GraphError;
use crate::instance::ScpInstance;

/// Chains with more states than this use Lanczos instead of a dense solve.
pub const DENSE_EIGEN_LIMIT: usize = 4000;
pub const LANCZOS_STEPS: usize = 64;

const STATIONARY_TOLERANCE: f64 = 1e-14;
const STATIONARY_MAX_SWEEPS: usize = 200_000;
const LANCZOS_SEED: u64 = 0x1a2c;

#[derive(Debug, Clone, PartialEq)]
pub struct Hypergraph {
    vertex_count: usize,
    edges: Vec<Vec<usize>>,
    weights: Vec<f64>,
    incidence: Vec<Vec<usize>>,
}

impl Hypergraph {
    pub fn new(vertex_count: usize, edges: Vec<Vec<usize>>, weights: Vec<f64>) -> Result<Self, GraphError> {
        if edges.len() != weights.len() {
            return Err(GraphError::InvalidGraph(format!(
                "{} hyperedges but {} weights",
                edges.len(),
                weights.len()
            )));
        }
        let mut incidence = vec![Vec::new(); vertex_count];
        let mut edges = edges;
        for (e, members) in edges.iter_mut().enumerate() {
            members.sort_unstable();
            members.dedup();
            if members.is_empty() {
                return Err(GraphError::InvalidGraph(format!("hyperedge {e} is empty")));
            }
            if let Some(&v) = members.last().filter(|&&v| v >= vertex_count) {
                return Err(GraphError::InvalidGraph(format!("vertex {v} outside {vertex_count}")));
            }
            if !(weights[e].is_finite() && weights[e] >= 0.0) {
                return Err(GraphError::InvalidGraph(format!("hyperedge {e} has weight {}", weights[e])));
            }
            for &v in members.iter() {
                incidence[v].push(e);
            }
        }
        Ok(Hypergraph {
            vertex_count,
            edges,
            weights,
            incidence,
        })
    }

    pub fn from_instance(inst: &ScpInstance) -> Self {
        let edges = inst.cols().to_vec();
        let weights = inst.costs().iter().map(|c| c.as_f64()).collect();
        Hypergraph::new(inst.m(), edges, weights).expect("instance columns are valid hyperedges")
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, e: usize) -> &[usize] {
        &self.edges[e]
    }

    pub fn weight(&self, e: usize) -> f64 {
        self.weights[e]
    }

    /// Hyperedges containing `v`.
    pub fn incident(&self, v: usize) -> &[usize] {
        &self.incidence[v]
    }

    pub fn gamma(&self, e: usize, v: usize) -> f64 {
        if self.edges[e].binary_search(&v).is_ok() {
            1.0 / self.edges[e].len() as f64
        } else {
            0.0
        }
    }

    /// Same vertex set with hyperedge `e` dropped; later edges shift down.
    pub fn without_edge(&self, e: usize) -> Hypergraph {
        let mut edges = self.edges.clone();
        let mut weights = self.weights.clone();
        edges.remove(e);
        weights.remove(e);
        Hypergraph::new(self.vertex_count, edges, weights).expect("subset of a valid hypergraph")
    }

    /// Row `v` of `Q`: the distribution over incident hyperedges.
    fn edge_choice(&self, v: usize) -> Vec<(usize, f64)> {
        let inc = &self.incidence[v];
        let d: f64 = inc.iter().map(|&e| self.weights[e]).sum();
        if d > 0.0 {
            inc.iter().map(|&e| (e, self.weights[e] / d)).collect()
        } else {
            let u = 1.0 / inc.len() as f64;
            inc.iter().map(|&e| (e, u)).collect()
        }
    }

    fn gamma_rows(&self) -> Vec<Vec<(usize, f64)>> {
        self.edges
            .iter()
            .map(|members| {
                let g = 1.0 / members.len() as f64;
                members.iter().map(|&v| (v, g)).collect()
            })
            .collect()
    }

    fn vertex_chain(&self) -> FactoredChain {
        FactoredChain {
            first: (0..self.vertex_count).map(|v| self.edge_choice(v)).collect(),
            second: self.gamma_rows(),
        }
    }

    fn edge_chain(&self) -> FactoredChain {
        FactoredChain {
            first: self.gamma_rows(),
            second: (0..self.vertex_count).map(|v| self.edge_choice(v)).collect(),
        }
    }

    /// Connected components among vertices (edges link their members).
    fn vertex_components(&self) -> usize {
        let mut dsu = Dsu::new(self.vertex_count);
        for members in &self.edges {
            for w in members.windows(2) {
                dsu.union(w[0], w[1]);
            }
        }
        dsu.count()
    }

    /// Connected components among hyperedges (shared vertices link them).
    fn edge_components(&self) -> usize {
        let mut dsu = Dsu::new(self.edges.len());
        for inc in &self.incidence {
            for w in inc.windows(2) {
                dsu.union(w[0], w[1]);
            }
        }
        dsu.count()
    }
}

/// `P = A B` with sparse rows, plus a self-loop for any state whose row of
/// `A` is empty.
struct FactoredChain {
    first: Vec<Vec<(usize, f64)>>,
    second: Vec<Vec<(usize, f64)>>,
}

impl FactoredChain {
    fn size(&self) -> usize {
        self.first.len()
    }

    /// `x P` for a row vector `x`.
    fn left(&self, x: &[f64], out: &mut [f64]) {
        let mut mid = vec![0.0; self.second.len()];
        out.iter_mut().for_each(|o| *o = 0.0);
        for (s, row) in self.first.iter().enumerate() {
            if row.is_empty() {
                out[s] += x[s];
            }
            for &(t, w) in row {
                mid[t] += x[s] * w;
            }
        }
        for (t, row) in self.second.iter().enumerate() {
            for &(s, w) in row {
                out[s] += mid[t] * w;
            }
        }
    }

    /// `P x` for a column vector `x`.
    fn right(&self, x: &[f64], out: &mut [f64]) {
        let mid: Vec<f64> = self
            .second
            .iter()
            .map(|row| row.iter().map(|&(s, w)| w * x[s]).sum())
            .collect();
        for (s, row) in self.first.iter().enumerate() {
            out[s] = if row.is_empty() {
                x[s]
            } else {
                row.iter().map(|&(t, w)| w * mid[t]).sum()
            };
        }
    }

    fn dense(&self) -> DenseMatrix {
        let n = self.size();
        let mut p = DenseMatrix::zeros(n);
        for (s, row) in self.first.iter().enumerate() {
            if row.is_empty() {
                p.set(s, s, 1.0);
            }
            for &(t, w) in row {
                for &(r, w2) in &self.second[t] {
                    p.add(s, r, w * w2);
                }
            }
        }
        p
    }

    /// Limit of the walk started from the uniform distribution. On a
    /// disconnected chain each component keeps the mass it started with.
    fn stationary(&self) -> Vec<f64> {
        let n = self.size();
        let mut phi = vec![1.0 / n as f64; n];
        let mut next = vec![0.0; n];
        for _ in 0..STATIONARY_MAX_SWEEPS {
            self.left(&phi, &mut next);
            let diff: f64 = phi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
            std::mem::swap(&mut phi, &mut next);
            if diff < STATIONARY_TOLERANCE {
                break;
            }
        }
        let total: f64 = phi.iter().sum();
        phi.iter_mut().for_each(|x| *x /= total);
        phi
    }
}

/// `sqrt(phi_a / phi_b)`, or 1 when either side carries no mass.
fn balance(phi: &[f64], a: usize, b: usize) -> f64 {
    if phi[a] > 0.0 && phi[b] > 0.0 {
        (phi[a] / phi[b]).sqrt()
    } else {
        1.0
    }
}

fn dense_laplacian(p: &DenseMatrix, phi: &[f64]) -> DenseMatrix {
    let n = p.size();
    let mut l = DenseMatrix::zeros(n);
    for a in 0..n {
        for b in 0..n {
            let s = 0.5 * (balance(phi, a, b) * p.get(a, b) + balance(phi, b, a) * p.get(b, a));
            l.set(a, b, if a == b { 1.0 - s } else { -s });
        }
    }
    l
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpectrum {
    /// Row-stochastic transition matrix; `None` above the dense limit.
    pub transition: Option<DenseMatrix>,
    pub stationary: Vec<f64>,
    /// Symmetrized Laplacian; `None` above the dense limit.
    pub laplacian: Option<DenseMatrix>,
    /// One value per state, ascending. Above the dense limit the middle of
    /// the list is padded with the median Ritz value.
    pub eigenvalues: Vec<f64>,
    pub components: usize,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypergraphSpectra {
    pub vertex: ChainSpectrum,
    pub edge: ChainSpectrum,
}

fn chain_spectrum(chain: &FactoredChain, components: usize) -> Result<ChainSpectrum, GraphError> {
    let n = chain.size();
    let stationary = chain.stationary();
    if n <= DENSE_EIGEN_LIMIT {
        let p = chain.dense();
        let l = dense_laplacian(&p, &stationary);
        let eigenvalues = symmetric_eigenvalues(&l)?;
        return Ok(ChainSpectrum {
            transition: Some(p),
            stationary,
            laplacian: Some(l),
            eigenvalues,
            components,
            exact: true,
        });
    }
    let root: Vec<f64> = stationary.iter().map(|&x| if x > 0.0 { x.sqrt() } else { 1.0 }).collect();
    let mut scaled = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let ritz = lanczos_ritz_values(n, LANCZOS_STEPS, LANCZOS_SEED, |x, y| {
        // S x = D P D^-1 x and S^T x = D^-1 P^T D x with D = diag(sqrt(phi))
        for i in 0..n {
            scaled[i] = x[i] / root[i];
        }
        chain.right(&scaled, &mut tmp);
        for i in 0..n {
            y[i] = root[i] * tmp[i];
        }
        for i in 0..n {
            scaled[i] = x[i] * root[i];
        }
        chain.left(&scaled, &mut tmp);
        for i in 0..n {
            y[i] = x[i] - 0.5 * (y[i] + tmp[i] / root[i]);
        }
    })?;
    Ok(ChainSpectrum {
        transition: None,
        stationary,
        laplacian: None,
        eigenvalues: pad_with_median(&ritz, n),
        components,
        exact: false,
    })
}

fn pad_with_median(ritz: &[f64], n: usize) -> Vec<f64> {
    let k = ritz.len();
    if k >= n || k == 0 {
        return ritz.to_vec();
    }
    let median = if k % 2 == 1 {
        ritz[k / 2]
    } else {
        0.5 * (ritz[k / 2 - 1] + ritz[k / 2])
    };
    let mut out = Vec::with_capacity(n);
    out.extend_from_slice(&ritz[..k / 2]);
    out.extend(std::iter::repeat_n(median, n - k));
    out.extend_from_slice(&ritz[k / 2..]);
    out
}

pub fn hypergraph_spectra(hg: &Hypergraph) -> Result<HypergraphSpectra, GraphError> {
    Ok(HypergraphSpectra {
        vertex: chain_spectrum(&hg.vertex_chain(), hg.vertex_components())?,
        edge: chain_spectrum(&hg.edge_chain(), hg.edge_components())?,
    })
}

/// Second-smallest eigenvalue of the vertex Laplacian (0 with fewer than
/// two vertices).
pub fn algebraic_connectivity(hg: &Hypergraph) -> Result<f64, GraphError> {
    if hg.vertex_count() < 2 {
        return Ok(0.0);
    }
    let spec = chain_spectrum(&hg.vertex_chain(), hg.vertex_components())?;
    Ok(spec.eigenvalues[1])
}

/// Drop in algebraic connectivity when hyperedge `e` is removed.
pub fn edge_contribution(hg: &Hypergraph, e: usize) -> Result<f64, GraphError> {
    if e >= hg.edge_count() {
        return Err(GraphError::InvalidGraph(format!("no hyperedge {e}")));
    }
    Ok(algebraic_connectivity(hg)? - algebraic_connectivity(&hg.without_edge(e))?)
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }

    fn count(&mut self) -> usize {
        (0..self.parent.len()).filter(|&x| self.find(x) == x).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::t3;
    use crate::solver::test_support::small;

    fn t3h() -> Hypergraph {
        Hypergraph::from_instance(&t3())
    }

    #[test]
    fn t3_transition_rows() {
        let s = hypergraph_spectra(&t3h()).unwrap();
        let pv = s.vertex.transition.unwrap();
        for (got, want) in pv.row(1).iter().zip([0.25, 0.5, 0.25]) {
            assert!((got - want).abs() < 1e-12);
        }
        let pe = s.edge.transition.unwrap();
        for (got, want) in pe.row(2).iter().zip([0.0, 0.5, 0.5]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn gamma_sums_to_one() {
        let hg = Hypergraph::from_instance(&small(3, 12, 18));
        for e in 0..hg.edge_count() {
            let s: f64 = (0..hg.vertex_count()).map(|v| hg.gamma(e, v)).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    /// For this walk `d(v) P_V(v, w)` is symmetric, so the stationary
    /// distribution of a connected vertex chain is proportional to `d(v)`,
    /// and that of the edge chain to `omega(e) |e|`.
    #[test]
    fn stationary_matches_closed_form() {
        for seed in 0..20 {
            let hg = Hypergraph::from_instance(&small(seed, 15, 25));
            if hg.vertex_components() != 1 {
                continue;
            }
            let s = hypergraph_spectra(&hg).unwrap();
            let d: Vec<f64> = (0..hg.vertex_count())
                .map(|v| hg.incident(v).iter().map(|&e| hg.weight(e)).sum())
                .collect();
            let total: f64 = d.iter().sum();
            for (phi, dv) in s.vertex.stationary.iter().zip(&d) {
                assert!((phi - dv / total).abs() < 1e-10, "seed {seed}");
            }
            let w: Vec<f64> = (0..hg.edge_count()).map(|e| hg.weight(e) * hg.edge(e).len() as f64).collect();
            let total: f64 = w.iter().sum();
            for (phi, we) in s.edge.stationary.iter().zip(&w) {
                assert!((phi - we / total).abs() < 1e-10, "seed {seed}");
            }
        }
    }

    #[test]
    fn t3_connectivity_and_removal() {
        let hg = t3h();
        let mu = algebraic_connectivity(&hg).unwrap();
        assert!(mu > 0.0);
        // removing e1 isolates vertex 1
        let reduced = hg.without_edge(0);
        assert_eq!(reduced.vertex_components(), 2);
        assert!(algebraic_connectivity(&reduced).unwrap().abs() < 1e-8);
        assert!((edge_contribution(&hg, 0).unwrap() - mu).abs() < 1e-8);
    }

    #[test]
    fn duplicated_hyperedge_contributes_nothing() {
        let hg = Hypergraph::new(3, vec![vec![0, 1, 2], vec![0, 1, 2]], vec![1.0, 1.0]).unwrap();
        assert!(edge_contribution(&hg, 1).unwrap().abs() < 1e-8);
    }

    #[test]
    fn laplacian_matches_independent_eigensolver() {
        for seed in 0..10 {
            let hg = Hypergraph::from_instance(&small(seed, 20, 30));
            let s = hypergraph_spectra(&hg).unwrap();
            for chain in [&s.vertex, &s.edge] {
                let l = chain.laplacian.as_ref().unwrap();
                let n = l.size();
                let a = nalgebra::DMatrix::from_row_slice(n, n, l.as_slice());
                let mut ev: Vec<f64> = a.symmetric_eigenvalues().iter().copied().collect();
                ev.sort_by(f64::total_cmp);
                for (x, y) in chain.eigenvalues.iter().zip(&ev) {
                    assert!((x - y).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn zero_weight_vertex_falls_back_to_uniform() {
        let hg = Hypergraph::new(2, vec![vec![0], vec![0, 1]], vec![0.0, 0.0]).unwrap();
        let s = hypergraph_spectra(&hg).unwrap();
        let p = s.vertex.transition.unwrap();
        assert!((p.get(0, 0) - 0.75).abs() < 1e-12);
        assert!(s.vertex.eigenvalues.iter().all(|x| x.is_finite()));
        assert!(s.edge.eigenvalues.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn lanczos_path_pads_to_full_length() {
        let ritz = [0.0, 0.5, 1.0, 1.5];
        assert_eq!(pad_with_median(&ritz, 7), vec![0.0, 0.5, 0.75, 0.75, 0.75, 1.0, 1.5]);
    }

    #[test]
    fn large_edge_chain_uses_lanczos() {
        let cfg = crate::instance::GeneratorConfig::custom(
            (40, 40),
            (DENSE_EIGEN_LIMIT + 10, DENSE_EIGEN_LIMIT + 10),
            (0.05, 0.05),
            crate::instance::CostModel::Equal(crate::instance::Cost::from_int(1)),
            1,
        );
        let hg = Hypergraph::from_instance(&crate::instance::generate(&cfg).unwrap());
        let s = hypergraph_spectra(&hg).unwrap();
        assert!(s.vertex.exact);
        assert!(!s.edge.exact);
        assert_eq!(s.edge.eigenvalues.len(), hg.edge_count());
        assert!(s.edge.eigenvalues[0].abs() < 1e-8);
        assert!(s.edge.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        assert!(s.edge.eigenvalues.iter().all(|&x| (-1e-8..=2.0 + 1e-8).contains(&x)));
    }
}
