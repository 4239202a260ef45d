//! Color refinement over [`NilgGraph`]s with categorical and continuous node
//! attributes, producing fixed-length feature vectors.
//!
//! Each iteration recolors a node by its previous color together with the
//! *set* of `(neighbor color, edge label)` pairs around it. The feature vector
//! holds one histogram slot per color followed by one pooled continuous slot
//! per color.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::nilg::{CatFeature, NilgGraph};

/// Color id returned by a frozen table for keys it has never seen.
pub const UNSEEN: u32 = u32::MAX;

/// Number of continuous attributes per node.
pub const CONTINUOUS_DIM: usize = 1;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ColorKey {
    Initial(CatFeature),
    /// Previous color and sorted, de-duplicated `(neighbor color, label)` pairs.
    Refined {
        prev: u32,
        neighbors: Vec<(u32, u32)>,
    },
}

/// Initial keys print as their categorical feature; refined keys as
/// `prev|c:l,c:l` (`prev|` when the neighborhood is empty).
impl fmt::Display for ColorKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColorKey::Initial(c) => write!(f, "{c}"),
            ColorKey::Refined { prev, neighbors } => {
                write!(f, "{prev}|")?;
                for (i, (c, l)) in neighbors.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{c}:{l}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid color key `{0}`")]
pub struct ColorKeyParseError(pub String);

impl FromStr for ColorKey {
    type Err = ColorKeyParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ColorKeyParseError(s.to_string());
        if !s.starts_with(|c: char| c.is_ascii_digit()) {
            return s.parse().map(ColorKey::Initial).map_err(|_| bad());
        }
        let (prev, rest) = s.split_once('|').ok_or_else(bad)?;
        let prev: u32 = prev.parse().map_err(|_| bad())?;
        let mut neighbors = Vec::new();
        if !rest.is_empty() {
            for pair in rest.split(',') {
                let (c, l) = pair.split_once(':').ok_or_else(bad)?;
                neighbors.push((c.parse().map_err(|_| bad())?, l.parse().map_err(|_| bad())?));
            }
        }
        if prev == UNSEEN || neighbors.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad());
        }
        Ok(ColorKey::Refined { prev, neighbors })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ColorTableError {
    #[error(transparent)]
    Key(#[from] ColorKeyParseError),
    #[error("color ids must be 0..n in order; found {found} at position {position}")]
    NonDenseId { position: usize, found: u32 },
    #[error("duplicate color key `{0}`")]
    DuplicateKey(String),
    #[error("key `{0}` refers to a color that is not defined before it")]
    ForwardReference(String),
}

/// Injective map from color keys to dense ids `0..len()`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ColorTable {
    keys: Vec<ColorKey>,
    ids: HashMap<ColorKey, u32>,
    frozen: bool,
}

impl ColorTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn keys(&self) -> &[ColorKey] {
        &self.keys
    }

    pub fn get(&self, key: &ColorKey) -> u32 {
        self.ids.get(key).copied().unwrap_or(UNSEEN)
    }

    /// Allocates a fresh id for an unknown key unless the table is frozen.
    pub fn lookup(&mut self, key: ColorKey) -> u32 {
        if let Some(&id) = self.ids.get(&key) {
            return id;
        }
        if self.frozen {
            return UNSEEN;
        }
        let id = self.keys.len() as u32;
        self.keys.push(key.clone());
        self.ids.insert(key, id);
        id
    }

    /// `(canonical key text, id)` pairs in id order.
    pub fn entries(&self) -> Vec<(String, u32)> {
        self.keys.iter().enumerate().map(|(i, k)| (k.to_string(), i as u32)).collect()
    }

    /// Rebuilds a frozen table from [`ColorTable::entries`] output.
    pub fn from_entries<S: AsRef<str>>(entries: &[(S, u32)]) -> Result<Self, ColorTableError> {
        let mut t = ColorTable::new();
        for (position, (text, id)) in entries.iter().enumerate() {
            if *id as usize != position {
                return Err(ColorTableError::NonDenseId { position, found: *id });
            }
            let key: ColorKey = text.as_ref().parse()?;
            if let ColorKey::Refined { prev, neighbors } = &key {
                let n = position as u32;
                if *prev >= n || neighbors.iter().any(|&(c, _)| c >= n) {
                    return Err(ColorTableError::ForwardReference(text.as_ref().to_string()));
                }
            }
            if t.ids.contains_key(&key) {
                return Err(ColorTableError::DuplicateKey(text.as_ref().to_string()));
            }
            t.lookup(key);
        }
        t.freeze();
        Ok(t)
    }
}

fn refine_with(g: &NilgGraph, iterations: usize, mut color_of: impl FnMut(ColorKey) -> u32) -> Vec<Vec<u32>> {
    let n = g.num_nodes();
    let mut rounds = Vec::with_capacity(iterations + 1);
    rounds.push((0..n).map(|v| color_of(ColorKey::Initial(g.cat(v).clone()))).collect::<Vec<u32>>());
    if iterations == 0 {
        return rounds;
    }
    let (offsets, adj) = g.neighbors();
    for _ in 0..iterations {
        let prev = rounds.last().unwrap();
        let mut next = Vec::with_capacity(n);
        for v in 0..n {
            let p = prev[v];
            let nbrs = &adj[offsets[v]..offsets[v + 1]];
            if p == UNSEEN || nbrs.iter().any(|&(u, _)| prev[u as usize] == UNSEEN) {
                next.push(UNSEEN);
                continue;
            }
            let mut neighbors: Vec<(u32, u32)> = nbrs.iter().map(|&(u, l)| (prev[u as usize], l)).collect();
            neighbors.sort_unstable();
            neighbors.dedup();
            next.push(color_of(ColorKey::Refined { prev: p, neighbors }));
        }
        rounds.push(next);
    }
    rounds
}

/// Colors of every node for iterations `0..=iterations`; `result[j][v]`.
/// An unfrozen table grows; a frozen one yields [`UNSEEN`] for new keys.
pub fn refine(g: &NilgGraph, iterations: usize, table: &mut ColorTable) -> Vec<Vec<u32>> {
    refine_with(g, iterations, |k| table.lookup(k))
}

/// Refines every graph against one growing table, then freezes it.
pub fn fit_colors(graphs: &[NilgGraph], iterations: usize) -> ColorTable {
    let mut table = ColorTable::new();
    for g in graphs {
        refine(g, iterations, &mut table);
    }
    table.freeze();
    table
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pooling {
    #[default]
    Sum,
    Mean,
    Max,
}

impl Pooling {
    pub fn name(self) -> &'static str {
        match self {
            Pooling::Sum => "sum",
            Pooling::Mean => "mean",
            Pooling::Max => "max",
        }
    }
}

impl FromStr for Pooling {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sum" => Ok(Pooling::Sum),
            "mean" => Ok(Pooling::Mean),
            "max" => Ok(Pooling::Max),
            _ => Err(format!("unknown pooling `{s}` (expected sum, mean or max)")),
        }
    }
}

/// Frozen color table plus the settings needed to featurize graphs.
#[derive(Debug, Clone, PartialEq)]
pub struct CcwlModel {
    pub iterations: usize,
    pub table: ColorTable,
    pub pooling: Pooling,
}

impl CcwlModel {
    pub fn fit(graphs: &[NilgGraph], iterations: usize, pooling: Pooling) -> Self {
        CcwlModel { iterations, table: fit_colors(graphs, iterations), pooling }
    }

    pub fn num_colors(&self) -> usize {
        self.table.len()
    }

    pub fn feature_len(&self) -> usize {
        (1 + CONTINUOUS_DIM) * self.table.len()
    }

    /// Histogram over all iterations followed by pooled continuous values.
    pub fn featurize(&self, g: &NilgGraph) -> Vec<f64> {
        let c = self.table.len();
        let mut out = vec![0.0; (1 + CONTINUOUS_DIM) * c];
        if c == 0 {
            return out;
        }
        let rounds = refine_with(g, self.iterations, |k| self.table.get(&k));
        // A color belongs to exactly one iteration, so each node meets it at most once.
        let mut max_seen = vec![false; c];
        for round in &rounds {
            for (v, &color) in round.iter().enumerate() {
                if color == UNSEEN {
                    continue;
                }
                let i = color as usize;
                out[i] += 1.0;
                let x = g.con(v);
                let slot = &mut out[c + i];
                match self.pooling {
                    Pooling::Sum | Pooling::Mean => *slot += x,
                    Pooling::Max => {
                        if !max_seen[i] || x > *slot {
                            *slot = x;
                            max_seen[i] = true;
                        }
                    }
                }
            }
        }
        if self.pooling == Pooling::Mean {
            for i in 0..c {
                if out[i] > 0.0 {
                    out[c + i] /= out[i];
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeSet, HashMap};

    use proptest::prelude::*;

    use super::*;
    use crate::fixtures::running_example_task;
    use crate::nilg::{build_nilg, PropStatus};

    fn obj() -> CatFeature {
        CatFeature::Object(None)
    }

    fn func() -> CatFeature {
        CatFeature::Func("f".into())
    }

    fn graph(nodes: &[(CatFeature, f64)], edges: &[(u32, u32, u32)]) -> NilgGraph {
        let mut g = NilgGraph::new();
        for (c, x) in nodes {
            g.add_node(c.clone(), *x);
        }
        for &(u, v, l) in edges {
            g.add_edge(u, v, l);
        }
        g
    }

    fn model(graphs: &[NilgGraph], iterations: usize, pooling: Pooling) -> CcwlModel {
        CcwlModel::fit(graphs, iterations, pooling)
    }

    #[test]
    fn isolated_nodes_with_equal_features_stay_together() {
        let g = graph(&[(obj(), 0.0), (obj(), 1.0), (func(), 0.0)], &[]);
        let mut table = ColorTable::new();
        let rounds = refine(&g, 3, &mut table);
        for r in &rounds {
            assert_eq!(r[0], r[1]);
            assert_ne!(r[0], r[2]);
        }
        // Refining again reuses every key.
        let before = table.len();
        assert_eq!(refine(&g, 3, &mut table), rounds);
        assert_eq!(table.len(), before);
    }

    #[test]
    fn path_endpoints_share_a_color() {
        let g = graph(&[(obj(), 0.0), (func(), 0.0), (obj(), 0.0)], &[(0, 1, 1), (1, 2, 1)]);
        let rounds = refine(&g, 1, &mut ColorTable::new());
        assert_eq!(rounds[1][0], rounds[1][2]);
        assert_ne!(rounds[1][0], rounds[1][1]);
    }

    #[test]
    fn star_sizes_collapse_under_set_semantics() {
        let star = |leaves: u32| {
            let mut nodes = vec![(func(), 0.0)];
            nodes.extend((0..leaves).map(|_| (obj(), 0.0)));
            let edges: Vec<_> = (1..=leaves).map(|l| (0, l, 1)).collect();
            graph(&nodes, &edges)
        };
        let mut table = ColorTable::new();
        let a = refine(&star(3), 2, &mut table);
        let b = refine(&star(5), 2, &mut table);
        assert_eq!(a[1][0], b[1][0]);
        assert_eq!(a[2][0], b[2][0]);
    }

    #[test]
    fn edge_labels_distinguish_neighborhoods() {
        let g = graph(&[(func(), 0.0), (obj(), 0.0), (func(), 0.0), (obj(), 0.0)], &[(0, 1, 1), (2, 3, 2)]);
        let rounds = refine(&g, 1, &mut ColorTable::new());
        assert_ne!(rounds[1][0], rounds[1][2]);
    }

    #[test]
    fn small_feature_vectors() {
        let one = graph(&[(obj(), 3.0)], &[]);
        assert_eq!(model(std::slice::from_ref(&one), 0, Pooling::Sum).featurize(&one), [1.0, 3.0]);
        let two = graph(&[(obj(), 2.0), (obj(), 3.0)], &[]);
        let m = model(std::slice::from_ref(&two), 0, Pooling::Sum);
        assert_eq!(m.featurize(&two), [2.0, 5.0]);
        assert_eq!(model(std::slice::from_ref(&two), 0, Pooling::Mean).featurize(&two), [2.0, 2.5]);
        assert_eq!(model(std::slice::from_ref(&two), 0, Pooling::Max).featurize(&two), [2.0, 3.0]);
        let neg = graph(&[(obj(), -2.0), (obj(), -3.0)], &[]);
        assert_eq!(model(std::slice::from_ref(&neg), 0, Pooling::Max).featurize(&neg), [2.0, -2.0]);
    }

    #[test]
    fn histogram_counts_every_iteration() {
        let g = graph(&[(obj(), 1.0), (func(), 4.0)], &[(0, 1, 1)]);
        let m = model(std::slice::from_ref(&g), 2, Pooling::Sum);
        assert_eq!(m.num_colors(), 6);
        let v = m.featurize(&g);
        assert_eq!(v.len(), 12);
        assert_eq!(&v[..6], &[1.0; 6]);
        assert_eq!(&v[6..], &[1.0, 4.0, 1.0, 4.0, 1.0, 4.0]);
    }

    #[test]
    fn unseen_colors_give_zero_features() {
        let train = graph(&[(obj(), 1.0)], &[]);
        let m = model(&[train], 1, Pooling::Sum);
        let other = graph(&[(func(), 7.0), (func(), 1.0)], &[(0, 1, 3)]);
        assert_eq!(m.featurize(&other), vec![0.0; m.feature_len()]);
    }

    #[test]
    fn unseen_propagates_to_later_iterations() {
        let train = graph(&[(obj(), 0.0), (obj(), 0.0)], &[(0, 1, 1)]);
        let mut table = fit_colors(&[train], 2);
        // The object keeps a known initial color but its neighbor is new.
        let test = graph(&[(obj(), 0.0), (func(), 0.0)], &[(0, 1, 1)]);
        let rounds = refine(&test, 2, &mut table);
        assert_ne!(rounds[0][0], UNSEEN);
        assert_eq!(rounds[0][1], UNSEEN);
        assert_eq!(rounds[1], [UNSEEN, UNSEEN]);
        assert_eq!(rounds[2], [UNSEEN, UNSEEN]);
    }

    #[test]
    fn fitting_edge_cases() {
        let empty = fit_colors(&[], 3);
        assert!(empty.is_frozen());
        assert_eq!(empty.len(), 0);
        let m = CcwlModel { iterations: 3, table: empty, pooling: Pooling::Sum };
        assert!(m.featurize(&graph(&[(obj(), 1.0)], &[])).is_empty());

        let t = running_example_task();
        let g = build_nilg(&t, &t.initial).unwrap();
        let table = fit_colors(std::slice::from_ref(&g), 0);
        let distinct: BTreeSet<_> = g.cats().iter().collect();
        assert_eq!(table.len(), distinct.len());
        assert!(table.len() <= 21);
        assert!(distinct.contains(&CatFeature::Pred("on".into(), PropStatus::UnachievedGoal)));
        assert_eq!(fit_colors(&[g.clone(), g.clone()], 2), fit_colors(&[g.clone(), g], 2));
    }

    #[test]
    fn color_keys_round_trip_through_text() {
        let keys = [
            ColorKey::Initial(obj()),
            ColorKey::Initial(CatFeature::Pred("on".into(), PropStatus::AchievedGoal)),
            ColorKey::Refined { prev: 0, neighbors: vec![] },
            ColorKey::Refined { prev: 4, neighbors: vec![(0, 1), (0, 2), (3, 0)] },
        ];
        for k in keys {
            assert_eq!(k.to_string().parse::<ColorKey>().unwrap(), k);
        }
        for bad in ["", "1", "1|x", "1|2:1,1:1", "1|2:1,2:1", "4294967295|", "x:y"] {
            assert!(bad.parse::<ColorKey>().is_err(), "{bad}");
        }
    }

    #[test]
    fn table_entries_round_trip() {
        let t = running_example_task();
        let g = build_nilg(&t, &t.initial).unwrap();
        let table = fit_colors(&[g], 2);
        let back = ColorTable::from_entries(&table.entries()).unwrap();
        assert_eq!(back, table);
        assert!(matches!(ColorTable::from_entries(&[("obj", 1)]), Err(ColorTableError::NonDenseId { .. })));
        assert!(matches!(ColorTable::from_entries(&[("obj", 0), ("obj", 1)]), Err(ColorTableError::DuplicateKey(_))));
        assert!(matches!(ColorTable::from_entries(&[("0|1:1", 0)]), Err(ColorTableError::ForwardReference(_))));
    }

    /// Reference refinement: each color is a string naming its whole history.
    fn naive_refine(g: &NilgGraph, iterations: usize) -> Vec<Vec<String>> {
        let n = g.num_nodes();
        let mut nbrs: Vec<Vec<(usize, u32)>> = vec![Vec::new(); n];
        for &(u, v, l) in g.edges() {
            nbrs[u as usize].push((v as usize, l));
            if u != v {
                nbrs[v as usize].push((u as usize, l));
            }
        }
        let mut rounds = vec![(0..n).map(|v| format!("[{}]", g.cat(v))).collect::<Vec<_>>()];
        for _ in 0..iterations {
            let prev = rounds.last().unwrap();
            let next = (0..n)
                .map(|v| {
                    let set: BTreeSet<String> = nbrs[v].iter().map(|&(u, l)| format!("{}@{l}", prev[u])).collect();
                    format!("({};{})", prev[v], set.into_iter().collect::<Vec<_>>().join(","))
                })
                .collect();
            rounds.push(next);
        }
        rounds
    }

    fn cat_strategy() -> impl Strategy<Value = CatFeature> {
        prop_oneof![
            Just(obj()),
            Just(func()),
            Just(CatFeature::Pred("p".into(), PropStatus::AchievedNonGoal)),
            Just(CatFeature::Pred("p".into(), PropStatus::UnachievedGoal)),
        ]
    }

    fn graph_strategy() -> impl Strategy<Value = NilgGraph> {
        prop::collection::vec((cat_strategy(), -3i32..4), 1..=8).prop_flat_map(|nodes| {
            let n = nodes.len() as u32;
            prop::collection::vec((0..n, 0..n, 0u32..3), 0..12).prop_map(move |edges| {
                let nodes: Vec<_> = nodes.iter().map(|(c, x)| (c.clone(), *x as f64)).collect();
                graph(&nodes, &edges)
            })
        })
    }

    fn permuted(g: &NilgGraph, perm: &[usize]) -> NilgGraph {
        // perm[old] = new
        let n = g.num_nodes();
        let mut order = vec![0; n];
        for (old, &new) in perm.iter().enumerate() {
            order[new] = old;
        }
        let nodes: Vec<_> = order.iter().map(|&o| (g.cat(o).clone(), g.con(o))).collect();
        let edges: Vec<_> =
            g.edges().iter().map(|&(u, v, l)| (perm[u as usize] as u32, perm[v as usize] as u32, l)).collect();
        graph(&nodes, &edges)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn refine_matches_naive_reference(gs in prop::collection::vec(graph_strategy(), 1..4), l in 0usize..4) {
            let mut table = ColorTable::new();
            let mut seen: HashMap<String, u32> = HashMap::new();
            let mut ids: HashMap<u32, String> = HashMap::new();
            for g in &gs {
                let fast = refine(g, l, &mut table);
                let slow = naive_refine(g, l);
                for (fr, sr) in fast.iter().zip(&slow) {
                    for (&c, s) in fr.iter().zip(sr) {
                        prop_assert_eq!(*seen.entry(s.clone()).or_insert(c), c);
                        prop_assert_eq!(ids.entry(c).or_insert_with(|| s.clone()).as_str(), s.as_str());
                    }
                }
            }
            prop_assert_eq!(table.len(), seen.len());
        }

        #[test]
        fn featurize_is_permutation_invariant(
            g in graph_strategy(),
            l in 0usize..3,
            seed in any::<u64>(),
            pooling in prop_oneof![Just(Pooling::Sum), Just(Pooling::Mean), Just(Pooling::Max)],
        ) {
            let m = model(std::slice::from_ref(&g), l, pooling);
            let base = m.featurize(&g);
            prop_assert_eq!(base.len(), m.feature_len());
            let n = g.num_nodes();
            let mut perm: Vec<usize> = (0..n).collect();
            let mut state = seed;
            for i in (1..n).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (state >> 33) as usize % (i + 1));
            }
            prop_assert_eq!(m.featurize(&permuted(&g, &perm)), base);
        }

        #[test]
        fn sum_pooling_is_additive_over_disjoint_union(
            a in graph_strategy(),
            b in graph_strategy(),
            train in prop::collection::vec(graph_strategy(), 0..3),
            l in 0usize..3,
        ) {
            let mut all = train;
            all.push(a.clone());
            let m = model(&all, l, Pooling::Sum);
            let joint = m.featurize(&a.disjoint_union(&b));
            let separate: Vec<f64> =
                m.featurize(&a).iter().zip(m.featurize(&b)).map(|(x, y)| x + y).collect();
            prop_assert_eq!(joint.len(), m.feature_len());
            prop_assert_eq!(joint, separate);
        }

        #[test]
        fn refinement_never_merges_colors(g in graph_strategy(), l in 1usize..4) {
            let rounds = refine(&g, l, &mut ColorTable::new());
            for j in 1..rounds.len() {
                for u in 0..g.num_nodes() {
                    for v in 0..g.num_nodes() {
                        if rounds[j - 1][u] != rounds[j - 1][v] {
                            prop_assert_ne!(rounds[j][u], rounds[j][v]);
                        }
                    }
                }
            }
        }
    }
}
