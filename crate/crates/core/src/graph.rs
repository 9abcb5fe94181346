//! Level-m approximation graphs `(V_m, ~_m)` of a gasket attractor.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::ifs::IfsSpec;
use crate::rational::Rational;

/// Size limits guarding the combinatorial and dense-solve stages.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    /// Maximum number of level-m cells `N^m`.
    pub cells: u128,
    /// Largest vertex count solved in exact rational arithmetic.
    pub exact_vertices: usize,
    /// Largest point set for O(n^2) pair scans.
    pub pair_points: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            cells: 1_000_000,
            exact_vertices: 4000,
            pair_points: 20_000,
        }
    }
}

impl Budget {
    /// Default limits with a custom cell cap.
    pub fn with_cells(limit: u128) -> Self {
        Budget {
            cells: limit,
            ..Budget::default()
        }
    }
}

/// Vertices, edges and cells of the level-m graph. Vertices are sorted
/// lexicographically by exact coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LevelGraph {
    pub level: usize,
    pub vertices: Vec<Point>,
    pub edges: Vec<(usize, usize)>,
    pub cells: Vec<Vec<usize>>,
    /// Index of each `V0` point, in the IFS's boundary order.
    pub boundary: Vec<usize>,
}

impl LevelGraph {
    pub fn build(ifs: &IfsSpec, m: usize, budget: &Budget) -> Result<LevelGraph> {
        ifs.ensure_valid()?;
        let n = ifs.len() as u128;
        let cells_needed = u32::try_from(m)
            .ok()
            .and_then(|m| n.checked_pow(m))
            .unwrap_or(u128::MAX);
        if cells_needed > budget.cells {
            return Err(Error::BudgetExceeded {
                what: "level-m cells",
                needed: cells_needed,
                budget: budget.cells,
            });
        }

        let words = ifs.word_maps(m);
        let images: Vec<Vec<Point>> = words
            .iter()
            .map(|w| ifs.boundary.iter().map(|p| w.apply(p)).collect())
            .collect();

        let mut index: BTreeMap<Point, usize> = images.iter().flatten().map(|p| (p.clone(), 0)).collect();
        for (i, v) in index.values_mut().enumerate() {
            *v = i;
        }
        let vertices: Vec<Point> = index.keys().cloned().collect();
        let cells: Vec<Vec<usize>> = images.iter().map(|im| im.iter().map(|p| index[p]).collect()).collect();
        let mut edges = BTreeSet::new();
        for cell in &cells {
            for (a, &i) in cell.iter().enumerate() {
                for &j in &cell[a + 1..] {
                    edges.insert((i.min(j), i.max(j)));
                }
            }
        }
        let boundary = ifs.boundary.iter().map(|p| index[p]).collect();
        Ok(LevelGraph {
            level: m,
            vertices,
            edges: edges.into_iter().collect(),
            cells,
            boundary,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn float_coords(&self) -> Vec<[f64; 2]> {
        self.vertices.iter().map(Point::to_f64).collect()
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    pub fn index_of(&self, p: &Point) -> Option<usize> {
        self.vertices.binary_search(p).ok()
    }

    pub fn is_boundary(&self) -> Vec<bool> {
        let mut flags = vec![false; self.vertices.len()];
        for &b in &self.boundary {
            flags[b] = true;
        }
        flags
    }

    /// Connected components after deleting `removed` (exact vertex matches).
    pub fn components_after_removal(&self, removed: &[Point]) -> Result<usize> {
        let mut gone = vec![false; self.vertices.len()];
        for p in removed {
            let i = self
                .index_of(p)
                .ok_or_else(|| Error::NotAVertex(p.x.to_string(), p.y.to_string()))?;
            gone[i] = true;
        }
        let adj = self.adjacency();
        let mut seen = gone.clone();
        let mut components = 0;
        for start in 0..self.vertices.len() {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        Ok(components)
    }

    pub fn is_connected(&self) -> bool {
        matches!(self.components_after_removal(&[]), Ok(1))
    }

    /// `(#cells containing v) / (N^m * k)`; sums to exactly one.
    pub fn vertex_measure_weights(&self) -> Vec<Rational> {
        let mut counts = vec![0i64; self.vertices.len()];
        for cell in &self.cells {
            for &v in cell {
                counts[v] += 1;
            }
        }
        let k = self.cells.first().map_or(1, Vec::len) as i64;
        let total = self.cells.len() as i64 * k;
        counts.into_iter().map(|c| Rational::ratio(c, total)).collect()
    }

    pub fn vertex_measure_weights_f64(&self) -> Vec<f64> {
        self.vertex_measure_weights().iter().map(Rational::to_f64).collect()
    }

    /// Graph distance from `V0` to every vertex.
    pub fn boundary_distances(&self) -> Vec<usize> {
        let adj = self.adjacency();
        let mut dist = vec![usize::MAX; self.vertices.len()];
        let mut queue = VecDeque::new();
        for &b in &self.boundary {
            dist[b] = 0;
            queue.push_back(b);
        }
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "level": self.level,
            "vertices": self.vertices,
            "edges": self.edges,
            "cells": self.cells,
            "boundary": self.boundary,
        })
    }
}
