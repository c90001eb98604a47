//! Approximate nearest-neighbor search over a hierarchical small-world
//! graph. Vectors are compared by cosine similarity; construction is
//! deterministic for a given insertion order because the level sampler runs
//! on a fixed-seed generator.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{dot, squared_norm};

#[derive(Debug, Clone, Copy)]
pub struct HnswParams {
    /// Maximum links per node on the upper layers.
    pub m: usize,
    /// Maximum links per node on the ground layer.
    pub m0: usize,
    /// Beam width while wiring a new node in.
    pub ef_construction: usize,
    /// Beam width at query time; recall grows with this.
    pub ef_search: usize,
    pub seed: u64,
}

impl Default for HnswParams {
    fn default() -> Self {
        HnswParams { m: 16, m0: 32, ef_construction: 100, ef_search: 200, seed: 0x1f5e5 }
    }
}

/// Max-heap entry ordered by similarity; ties prefer the smaller insertion
/// index so traversal stays deterministic.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    similarity: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.similarity
            .total_cmp(&other.similarity)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Node {
    vector: Vec<f64>,
    norm: f64,
    /// links[layer] lists neighbor indices on that layer.
    links: Vec<Vec<usize>>,
}

pub struct SmallWorld {
    params: HnswParams,
    nodes: Vec<Node>,
    entry: Option<usize>,
    max_layer: usize,
    rng: ChaCha8Rng,
    level_scale: f64,
}

impl SmallWorld {
    pub fn new(params: HnswParams) -> Self {
        assert!(params.m >= 2 && params.m0 >= params.m, "link budgets too small");
        SmallWorld {
            params,
            nodes: Vec::new(),
            entry: None,
            max_layer: 0,
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            level_scale: 1.0 / (params.m as f64).ln(),
        }
    }

    pub fn vector(&self, index: usize) -> &[f64] {
        &self.nodes[index].vector
    }

    fn similarity(&self, query: &[f64], query_norm: f64, index: usize) -> f64 {
        let node = &self.nodes[index];
        dot(query, &node.vector) / (query_norm * node.norm)
    }

    fn sample_level(&mut self) -> usize {
        let u: f64 = self.rng.gen_range(0.0..1.0);
        ((-(1.0 - u).ln()) * self.level_scale).floor() as usize
    }

    fn layer_budget(&self, layer: usize) -> usize {
        if layer == 0 {
            self.params.m0
        } else {
            self.params.m
        }
    }

    /// Greedy single-step descent on `layer` toward `query`.
    fn descend(&self, query: &[f64], query_norm: f64, start: usize, layer: usize) -> usize {
        let mut current = start;
        let mut best = self.similarity(query, query_norm, current);
        loop {
            let mut improved = false;
            for &next in &self.nodes[current].links[layer] {
                let sim = self.similarity(query, query_norm, next);
                if sim > best {
                    best = sim;
                    current = next;
                    improved = true;
                }
            }
            if !improved {
                return current;
            }
        }
    }

    /// Beam search on one layer returning up to `ef` candidates, best first.
    fn search_layer(
        &self,
        query: &[f64],
        query_norm: f64,
        start: usize,
        layer: usize,
        ef: usize,
    ) -> Vec<Candidate> {
        let mut visited: HashSet<usize> = HashSet::new();
        visited.insert(start);
        let seed = Candidate { similarity: self.similarity(query, query_norm, start), index: start };
        let mut frontier = BinaryHeap::new();
        frontier.push(seed);
        // Results as a min-heap via Reverse ordering on Candidate.
        let mut results: BinaryHeap<std::cmp::Reverse<Candidate>> = BinaryHeap::new();
        results.push(std::cmp::Reverse(seed));

        while let Some(current) = frontier.pop() {
            let worst = results.peek().map(|r| r.0.similarity).unwrap_or(f64::NEG_INFINITY);
            if results.len() >= ef && current.similarity < worst {
                break;
            }
            for &next in &self.nodes[current.index].links[layer] {
                if !visited.insert(next) {
                    continue;
                }
                let candidate =
                    Candidate { similarity: self.similarity(query, query_norm, next), index: next };
                let worst = results.peek().map(|r| r.0.similarity).unwrap_or(f64::NEG_INFINITY);
                if results.len() < ef || candidate.similarity > worst {
                    frontier.push(candidate);
                    results.push(std::cmp::Reverse(candidate));
                    if results.len() > ef {
                        results.pop();
                    }
                }
            }
        }
        let mut out: Vec<Candidate> = results.into_iter().map(|r| r.0).collect();
        out.sort_by(|a, b| b.cmp(a));
        out
    }

    fn link(&mut self, a: usize, b: usize, layer: usize) {
        if a == b {
            return;
        }
        if !self.nodes[a].links[layer].contains(&b) {
            self.nodes[a].links[layer].push(b);
        }
        if !self.nodes[b].links[layer].contains(&a) {
            self.nodes[b].links[layer].push(a);
        }
    }

    /// Keeps only the strongest `budget` links of `index` on `layer`.
    fn prune(&mut self, index: usize, layer: usize) {
        let budget = self.layer_budget(layer);
        if self.nodes[index].links[layer].len() <= budget {
            return;
        }
        let vector = self.nodes[index].vector.clone();
        let norm = self.nodes[index].norm;
        let mut scored: Vec<Candidate> = self.nodes[index].links[layer]
            .iter()
            .map(|&n| Candidate { similarity: self.similarity(&vector, norm, n), index: n })
            .collect();
        scored.sort_by(|a, b| b.cmp(a));
        let keep: Vec<usize> = scored.iter().take(budget).map(|c| c.index).collect();
        let dropped: Vec<usize> =
            scored.iter().skip(budget).map(|c| c.index).collect();
        self.nodes[index].links[layer] = keep;
        for d in dropped {
            self.nodes[d].links[layer].retain(|&n| n != index);
        }
    }

    /// Inserts a vector whose norm the caller has already validated.
    pub fn insert(&mut self, vector: Vec<f64>, norm: f64) {
        debug_assert!((squared_norm(&vector).sqrt() - norm).abs() < 1e-9);
        let level = self.sample_level();
        let index = self.nodes.len();
        self.nodes.push(Node { vector, norm, links: vec![Vec::new(); level + 1] });

        let Some(mut entry) = self.entry else {
            self.entry = Some(index);
            self.max_layer = level;
            return;
        };

        let query = self.nodes[index].vector.clone();
        let query_norm = self.nodes[index].norm;

        // Walk down the layers above the new node's level.
        let mut layer = self.max_layer;
        while layer > level {
            entry = self.descend(&query, query_norm, entry, layer);
            if layer == 0 {
                break;
            }
            layer -= 1;
        }

        // Wire the node into every layer it occupies.
        let top = level.min(self.max_layer);
        for layer in (0..=top).rev() {
            let candidates =
                self.search_layer(&query, query_norm, entry, layer, self.params.ef_construction);
            entry = candidates.first().map(|c| c.index).unwrap_or(entry);
            let budget = self.layer_budget(layer);
            let chosen: Vec<usize> =
                candidates.iter().take(budget).map(|c| c.index).collect();
            for neighbor in chosen {
                self.link(index, neighbor, layer);
                self.prune(neighbor, layer);
            }
            self.prune(index, layer);
        }

        if level > self.max_layer {
            self.max_layer = level;
            self.entry = Some(index);
        }
    }

    /// Top-k by cosine similarity, skipping `excluded` positions. Returns
    /// (position, similarity) pairs, best first; ties on similarity are
    /// resolved by the caller, which re-sorts with node-id knowledge.
    pub fn search(
        &self,
        query: &[f64],
        query_norm: f64,
        k: usize,
        excluded: &[usize],
    ) -> Vec<(usize, f64)> {
        let Some(mut entry) = self.entry else {
            return Vec::new();
        };
        let mut layer = self.max_layer;
        while layer > 0 {
            entry = self.descend(query, query_norm, entry, layer);
            layer -= 1;
        }
        // Oversample so exclusions cannot starve the result set.
        let ef = self.params.ef_search.max(k + excluded.len());
        let mut found = self.search_layer(query, query_norm, entry, 0, ef);
        found.retain(|c| !excluded.contains(&c.index));
        found.truncate(k);
        found.into_iter().map(|c| (c.index, c.similarity)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(vectors: &[Vec<f64>]) -> SmallWorld {
        let mut sw = SmallWorld::new(HnswParams::default());
        for v in vectors {
            let norm = squared_norm(v).sqrt();
            sw.insert(v.clone(), norm);
        }
        sw
    }

    #[test]
    fn empty_index_returns_nothing() {
        let sw = SmallWorld::new(HnswParams::default());
        assert!(sw.search(&[1.0, 0.0], 1.0, 5, &[]).is_empty());
    }

    #[test]
    fn single_vector_is_always_found() {
        let sw = build(&[vec![0.6, 0.8]]);
        let hits = sw.search(&[0.6, 0.8], 1.0, 1, &[]);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].0, 0);
        assert!((hits[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn small_collections_are_searched_exhaustively() {
        // With ef_search far above the collection size the beam covers the
        // whole connected graph, so results must match a linear scan.
        let vectors: Vec<Vec<f64>> = (0..50)
            .map(|i| {
                let angle = i as f64 * 0.13;
                vec![angle.cos(), angle.sin()]
            })
            .collect();
        let sw = build(&vectors);
        let query = [0.7f64.cos(), 0.7f64.sin()];
        let query_norm = 1.0;

        let mut oracle: Vec<(usize, f64)> = vectors
            .iter()
            .enumerate()
            .map(|(i, v)| (i, dot(&query, v) / (query_norm * squared_norm(v).sqrt())))
            .collect();
        oracle.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

        let hits = sw.search(&query, query_norm, 10, &[]);
        let got: Vec<usize> = hits.iter().map(|h| h.0).collect();
        let want: Vec<usize> = oracle.iter().take(10).map(|h| h.0).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn exclusions_do_not_shrink_the_result_set() {
        let vectors: Vec<Vec<f64>> = (0..30)
            .map(|i| {
                let angle = i as f64 * 0.2;
                vec![angle.cos(), angle.sin()]
            })
            .collect();
        let sw = build(&vectors);
        let excluded: Vec<usize> = (0..5).collect();
        let hits = sw.search(&[1.0, 0.0], 1.0, 10, &excluded);
        assert_eq!(hits.len(), 10);
        assert!(hits.iter().all(|h| !excluded.contains(&h.0)));
    }

    #[test]
    fn construction_is_deterministic_for_a_fixed_seed() {
        let vectors: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let angle = i as f64 * 0.31;
                vec![angle.cos(), angle.sin(), (i as f64 * 0.11).sin()]
            })
            .collect();
        let a = build(&vectors);
        let b = build(&vectors);
        let query = [0.3, 0.4, 0.5];
        let norm = squared_norm(&query).sqrt();
        assert_eq!(a.search(&query, norm, 7, &[]), b.search(&query, norm, 7, &[]));
    }
}
