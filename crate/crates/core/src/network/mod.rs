//! Spring-network model of the transported object.
//!
//! Units are fixed throughout: positions in cm, forces in N, stiffness in
//! N/cm. Robot indices are zero-based.

mod calibration;
pub mod eigen;

pub use calibration::{calibrate_neighbor_stiffness, calibrate_stiffness, CalibrationRecord};
pub use eigen::{eigen_decompose, SymmetricEigen};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Serial chain of robots: robot `i` is connected to robot `i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StiffnessChain {
    neighbor_stiffness: Vec<f64>,
    leader_stiffness: Vec<f64>,
}

impl StiffnessChain {
    pub fn new(neighbor_stiffness: Vec<f64>, leader_stiffness: Vec<f64>) -> Result<Self> {
        let chain = StiffnessChain {
            neighbor_stiffness,
            leader_stiffness,
        };
        let problems = chain.violations();
        if let Some(first) = problems.into_iter().next() {
            return Err(first);
        }
        Ok(chain)
    }

    pub(crate) fn violations(&self) -> Vec<Error> {
        let mut out = Vec::new();
        let n = self.leader_stiffness.len();
        if n == 0 {
            out.push(Error::InvalidNetwork(
                "at least one robot is required".into(),
            ));
            return out;
        }
        if self.neighbor_stiffness.len() + 1 != n {
            out.push(Error::InvalidNetwork(format!(
                "a chain of {} robots needs {} neighbor stiffnesses, got {}",
                n,
                n - 1,
                self.neighbor_stiffness.len()
            )));
        }
        for (i, k) in self.neighbor_stiffness.iter().enumerate() {
            if !(k.is_finite() && *k > 0.0) {
                out.push(Error::InvalidNetwork(format!(
                    "neighbor stiffness {i} must be finite and > 0, got {k}"
                )));
            }
        }
        for (i, k) in self.leader_stiffness.iter().enumerate() {
            if !(k.is_finite() && *k >= 0.0) {
                out.push(Error::InvalidNetwork(format!(
                    "leader stiffness {i} must be finite and >= 0, got {k}"
                )));
            }
        }
        if out.is_empty() && self.leader_stiffness.iter().all(|&k| k == 0.0) {
            out.push(Error::UnpinnedNetwork);
        }
        out
    }

    /// The four-robot chain of the reference experiment: identical 0.05 N/cm
    /// springs, robot 0 pinned to the virtual source with 0.05 N/cm.
    pub fn reference_experiment() -> Self {
        StiffnessChain {
            neighbor_stiffness: vec![0.05; 3],
            leader_stiffness: vec![0.05, 0.0, 0.0, 0.0],
        }
    }

    pub fn len(&self) -> usize {
        self.leader_stiffness.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leader_stiffness.is_empty()
    }

    pub fn neighbor_stiffness(&self) -> &[f64] {
        &self.neighbor_stiffness
    }

    pub fn leader_stiffness(&self) -> &[f64] {
        &self.leader_stiffness
    }

    pub fn to_graph(&self) -> StiffnessGraph {
        let edges = self
            .neighbor_stiffness
            .iter()
            .enumerate()
            .map(|(i, &k)| (i, i + 1, k))
            .collect::<Vec<_>>();
        StiffnessGraph::build(self.len(), &edges, self.leader_stiffness.clone())
    }

    /// Neighbor force on `robot` for the given positions.
    pub fn measured_force(&self, positions: &[f64], robot: usize) -> f64 {
        self.to_graph().measured_force(positions, robot)
    }
}

/// Arbitrary undirected stiffness network with optional virtual-source pins.
#[derive(Debug, Clone, PartialEq)]
pub struct StiffnessGraph {
    neighbors: Vec<Vec<(usize, f64)>>,
    leader_stiffness: Vec<f64>,
}

impl StiffnessGraph {
    /// `edges` are `(i, j, stiffness)` triples; duplicated pairs add up.
    pub fn new(
        n: usize,
        edges: &[(usize, usize, f64)],
        leader_stiffness: Vec<f64>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidNetwork(
                "at least one robot is required".into(),
            ));
        }
        if leader_stiffness.len() != n {
            return Err(Error::InvalidNetwork(format!(
                "expected {n} leader stiffnesses, got {}",
                leader_stiffness.len()
            )));
        }
        for &(i, j, k) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidNetwork(format!(
                    "edge ({i}, {j}) is out of range for {n} robots"
                )));
            }
            if i == j {
                return Err(Error::InvalidNetwork(format!("self-loop on robot {i}")));
            }
            if !(k.is_finite() && k > 0.0) {
                return Err(Error::InvalidNetwork(format!(
                    "edge ({i}, {j}) stiffness must be finite and > 0, got {k}"
                )));
            }
        }
        if let Some((i, k)) = leader_stiffness
            .iter()
            .enumerate()
            .find(|(_, k)| !(k.is_finite() && **k >= 0.0))
        {
            return Err(Error::InvalidNetwork(format!(
                "leader stiffness {i} must be finite and >= 0, got {k}"
            )));
        }
        if leader_stiffness.iter().all(|&k| k == 0.0) {
            return Err(Error::UnpinnedNetwork);
        }
        Ok(Self::build(n, edges, leader_stiffness))
    }

    fn build(n: usize, edges: &[(usize, usize, f64)], leader_stiffness: Vec<f64>) -> Self {
        let mut neighbors: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, k) in edges {
            add_edge(&mut neighbors[i], j, k);
            add_edge(&mut neighbors[j], i, k);
        }
        StiffnessGraph {
            neighbors,
            leader_stiffness,
        }
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn neighbors(&self, robot: usize) -> &[(usize, f64)] {
        &self.neighbors[robot]
    }

    pub fn leader_stiffness(&self) -> &[f64] {
        &self.leader_stiffness
    }

    /// Each undirected edge once, as `(i, j, k)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (i, adj) in self.neighbors.iter().enumerate() {
            for &(j, k) in adj {
                if i < j {
                    out.push((i, j, k));
                }
            }
        }
        out.sort_by_key(|&(i, j, _)| (i, j));
        out
    }

    /// `f_k = Σ_j k_kj (y_k − y_j)`, the force the robot's sensor reads from
    /// the object. The virtual-source term is not included.
    pub fn measured_force(&self, positions: &[f64], robot: usize) -> f64 {
        let yk = positions[robot];
        self.neighbors[robot]
            .iter()
            .map(|&(j, k)| k * (yk - positions[j]))
            .sum()
    }

    pub fn measured_forces(&self, positions: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|k| self.measured_force(positions, k))
            .collect()
    }

    /// Virtual force `k_kd (y_k − y_d)` felt by a leader; zero for followers.
    pub fn virtual_force(&self, positions: &[f64], robot: usize, reference: f64) -> f64 {
        self.leader_stiffness[robot] * (positions[robot] - reference)
    }
}

fn add_edge(adj: &mut Vec<(usize, f64)>, to: usize, k: f64) {
    match adj.iter_mut().find(|(j, _)| *j == to) {
        Some(entry) => entry.1 += k,
        None => adj.push((to, k)),
    }
}

/// Pinned Laplacian `K`, leader vector `B` and the eigendecomposition of `K`.
#[derive(Debug, Clone)]
pub struct PinnedLaplacian {
    graph: StiffnessGraph,
    matrix: DMatrix<f64>,
    leader_vector: DVector<f64>,
    eigen: SymmetricEigen,
}

impl PinnedLaplacian {
    pub fn from_chain(chain: &StiffnessChain) -> Result<Self> {
        if let Some(err) = chain.violations().into_iter().next() {
            return Err(err);
        }
        Self::from_graph(chain.to_graph())
    }

    pub fn from_graph(graph: StiffnessGraph) -> Result<Self> {
        if graph.leader_stiffness.iter().all(|&k| k == 0.0) {
            return Err(Error::UnpinnedNetwork);
        }
        let n = graph.len();
        let mut matrix = DMatrix::zeros(n, n);
        for k in 0..n {
            let mut diag = graph.leader_stiffness[k];
            for &(j, kij) in &graph.neighbors[k] {
                diag += kij;
                matrix[(k, j)] = -kij;
            }
            matrix[(k, k)] = diag;
        }
        let leader_vector = DVector::from_column_slice(&graph.leader_stiffness);
        let eigen = eigen_decompose(&matrix)?;
        if eigen.values[0] <= 0.0 {
            // a component of the graph has no pinned robot
            return Err(Error::UnpinnedNetwork);
        }
        Ok(PinnedLaplacian {
            graph,
            matrix,
            leader_vector,
            eigen,
        })
    }

    pub fn len(&self) -> usize {
        self.graph.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graph.is_empty()
    }

    pub fn graph(&self) -> &StiffnessGraph {
        &self.graph
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn leader_vector(&self) -> &DVector<f64> {
        &self.leader_vector
    }

    pub fn eigen(&self) -> &SymmetricEigen {
        &self.eigen
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigen.values
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigen.values[0]
    }

    pub fn lambda_max(&self) -> f64 {
        *self.eigen.values.last().expect("non-empty network")
    }

    /// `K Y` as a plain vector.
    pub fn apply(&self, positions: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| (0..n).map(|j| self.matrix[(i, j)] * positions[j]).sum())
            .collect()
    }
}
