//! Exact hitting sets over tid hypergraphs.
//!
//! Deleting a hitting set of the conflict hypergraph leaves a consistent
//! sub-instance, so minimum hitting sets give C-repairs and minimal ones give
//! S-repairs. Edges are restricted to the deletable vertices first; an edge
//! left empty makes the problem infeasible.
//!
//! The hypergraph is split into connected blocks, which are solved
//! independently. Within a block the minimum size comes from a
//! branch-and-bound that branches on the vertices of the uncovered edge with
//! the fewest candidates, prunes with a greedy disjoint-edge packing, and
//! (for at most [`MEMO_EDGE_LIMIT`] edges) remembers the cheapest cost at
//! which each covered-edge set was reached. Enumeration walks candidate sets
//! in lexicographic order of their sorted tid lists.
//!
//! For sets of equal size, lexicographic order is decided by the smallest
//! element of the symmetric difference, which is local to one block. So the
//! lexicographically first minimum set is the union of the per-block firsts,
//! and the first k unions in global order only use the first k sets of each
//! block.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use crate::model::Tid;

/// Largest edge count for which covered-edge states are memoised.
pub const MEMO_EDGE_LIMIT: usize = 30;

/// Some edge has no deletable vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Infeasible;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BranchMode {
    Memo,
    /// Vertices already tried at a node are excluded from its later branches.
    Exclude,
}

#[derive(Debug, Clone)]
pub struct HittingSets {
    /// Connected blocks, ordered by smallest vertex.
    blocks: Vec<Block>,
}

fn is_subset(small: &[Tid], large: &[Tid]) -> bool {
    small.iter().all(|v| large.binary_search(v).is_ok())
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

impl HittingSets {
    pub fn new<'e>(
        edges: impl IntoIterator<Item = &'e [Tid]>,
        deletable: impl Fn(Tid) -> bool,
    ) -> Result<Self, Infeasible> {
        let mut restricted = Vec::new();
        for edge in edges {
            let mut e: Vec<Tid> = edge.iter().copied().filter(|&t| deletable(t)).collect();
            if e.is_empty() {
                return Err(Infeasible);
            }
            e.sort_unstable();
            e.dedup();
            restricted.push(e);
        }
        restricted.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        restricted.dedup();

        let mut kept: Vec<Vec<Tid>> = Vec::new();
        for e in restricted {
            if !kept.iter().any(|k| is_subset(k, &e)) {
                kept.push(e);
            }
        }

        // union edges that share a vertex
        let mut parent: Vec<usize> = (0..kept.len()).collect();
        let mut owner: HashMap<Tid, usize> = HashMap::new();
        for (i, e) in kept.iter().enumerate() {
            for &v in e {
                match owner.entry(v) {
                    Entry::Occupied(o) => {
                        let (a, b) = (find(&mut parent, *o.get()), find(&mut parent, i));
                        parent[a.max(b)] = a.min(b);
                    }
                    Entry::Vacant(slot) => {
                        slot.insert(i);
                    }
                }
            }
        }
        let mut groups: Vec<(Tid, Vec<Vec<Tid>>)> = Vec::new();
        let mut slot_of: HashMap<usize, usize> = HashMap::new();
        for (i, e) in kept.into_iter().enumerate() {
            let root = find(&mut parent, i);
            let slot = *slot_of.entry(root).or_insert_with(|| {
                groups.push((e[0], Vec::new()));
                groups.len() - 1
            });
            let group = &mut groups[slot];
            group.0 = group.0.min(e[0]);
            group.1.push(e);
        }
        groups.sort_by_key(|g| g.0);
        Ok(HittingSets {
            blocks: groups.into_iter().map(|(_, edges)| Block::new(edges)).collect(),
        })
    }

    /// Number of edges left after restriction and inclusion-minimisation.
    pub fn edge_count(&self) -> usize {
        self.blocks.iter().map(|b| b.edges.len()).sum()
    }

    /// Number of connected blocks.
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Size of a minimum hitting set.
    pub fn minimum_size(&self) -> usize {
        self.blocks.iter().map(Block::minimum_size).sum()
    }

    /// The minimum hitting set whose sorted tid list is lexicographically smallest.
    pub fn minimum(&self) -> Vec<Tid> {
        let mut out: Vec<Tid> = self
            .blocks
            .iter()
            .flat_map(|b| {
                let mut first = Vec::new();
                b.collect(b.minimum_size(), false, 1, &mut first);
                first.pop().expect("a hitting set of minimum size exists")
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// All hitting sets of the minimum size, in lexicographic order, at most `limit`.
    pub fn all_minimum(&self, limit: usize) -> Vec<Vec<Tid>> {
        let mut out = Vec::new();
        if limit == 0 {
            return out;
        }
        let lists: Vec<Vec<Vec<Tid>>> = self
            .blocks
            .iter()
            .map(|b| {
                let mut sets = Vec::new();
                b.collect(b.minimum_size(), false, limit, &mut sets);
                sets
            })
            .collect();
        let total = lists.iter().map(|l| l[0].len()).sum();
        Merge::new(&lists).run(total, limit, &mut out);
        out
    }

    /// Inclusion-minimal hitting sets by ascending size, then lexicographically.
    /// Returns at most `limit` of them and whether more exist.
    pub fn minimal(&self, limit: usize) -> (Vec<Vec<Tid>>, bool) {
        let want = limit.saturating_add(1);
        let lists: Vec<Vec<Vec<Tid>>> = self.blocks.iter().map(|b| b.minimal(want)).collect();
        let smallest: usize = lists.iter().map(|l| l[0].len()).sum();
        let largest: usize = lists.iter().map(|l| l.last().expect("nonempty").len()).sum();
        let merge = Merge::new(&lists);
        let mut out = Vec::new();
        for total in smallest..=largest {
            merge.run(total, want - out.len(), &mut out);
            if out.len() > limit {
                out.truncate(limit);
                return (out, true);
            }
        }
        (out, false)
    }
}

/// A connected piece of the hypergraph with its own vertex numbering.
#[derive(Debug, Clone)]
struct Block {
    /// Ascending; a vertex's index preserves tid order.
    vertices: Vec<Tid>,
    /// Sorted vertex indices, ordered by (size, lexicographic), inclusion-free.
    edges: Vec<Vec<u32>>,
    incidence: Vec<Vec<u32>>,
}

impl Block {
    fn new(kept: Vec<Vec<Tid>>) -> Self {
        let mut vertices: Vec<Tid> = kept.iter().flatten().copied().collect();
        vertices.sort_unstable();
        vertices.dedup();
        let index = |t: &Tid| vertices.binary_search(t).expect("collected") as u32;
        let edges: Vec<Vec<u32>> = kept.iter().map(|e| e.iter().map(index).collect()).collect();
        let mut incidence = vec![Vec::new(); vertices.len()];
        for (i, e) in edges.iter().enumerate() {
            for &v in e {
                incidence[v as usize].push(i as u32);
            }
        }
        Block {
            vertices,
            edges,
            incidence,
        }
    }

    fn minimum_size(&self) -> usize {
        let mode = if self.edges.len() <= MEMO_EDGE_LIMIT {
            BranchMode::Memo
        } else {
            BranchMode::Exclude
        };
        self.minimum_size_with(mode)
    }

    /// The first `limit` minimal hitting sets by (size, lexicographic).
    fn minimal(&self, limit: usize) -> Vec<Vec<Tid>> {
        let largest = self.edges.len().min(self.vertices.len());
        let mut out = Vec::new();
        for size in self.minimum_size()..=largest {
            self.collect(size, true, limit - out.len(), &mut out);
            if out.len() >= limit {
                break;
            }
        }
        out
    }

    fn greedy(&self) -> usize {
        let mut cover = Cover::new(self);
        while cover.uncovered > 0 {
            let best = (0..self.vertices.len() as u32)
                .max_by_key(|&v| {
                    let gain = self.incidence[v as usize]
                        .iter()
                        .filter(|&&e| cover.hits[e as usize] == 0)
                        .count();
                    (gain, std::cmp::Reverse(v))
                })
                .expect("uncovered edges have vertices");
            cover.add(best);
        }
        cover.chosen.len()
    }

    fn minimum_size_with(&self, mode: BranchMode) -> usize {
        if self.edges.is_empty() {
            return 0;
        }
        let mut search = MinSearch {
            cover: Cover::new(self),
            excluded: vec![false; self.vertices.len()],
            memo: HashMap::new(),
            mode,
            best: self.greedy(),
        };
        search.branch();
        search.best
    }

    fn collect(&self, size: usize, minimal_only: bool, limit: usize, out: &mut Vec<Vec<Tid>>) {
        if limit == 0 {
            return;
        }
        let target = out.len().saturating_add(limit);
        let mut cover = Cover::new(self);
        self.lex(&mut cover, 0, size, minimal_only, target, out);
    }

    /// Depth-first over candidate sets in lexicographic order; returns true
    /// once `out` holds `target` sets.
    fn lex(
        &self,
        cover: &mut Cover<'_>,
        start: u32,
        size: usize,
        minimal_only: bool,
        target: usize,
        out: &mut Vec<Vec<Tid>>,
    ) -> bool {
        if cover.uncovered == 0 {
            if cover.chosen.len() == size {
                out.push(cover.chosen.iter().map(|&v| self.vertices[v as usize]).collect());
                return out.len() >= target;
            }
            return false;
        }
        let remaining = size - cover.chosen.len();
        if remaining == 0 {
            return false;
        }
        // The next element is the smallest still to come, so it must not
        // exceed the largest vertex of any uncovered edge.
        let Some(bound) = self
            .edges
            .iter()
            .enumerate()
            .filter(|(e, _)| cover.hits[*e] == 0)
            .map(|(_, edge)| *edge.last().expect("nonempty"))
            .min()
        else {
            return false;
        };
        if bound < start {
            return false;
        }
        match cover.packing_bound(&|v| v >= start) {
            Some(lb) if lb <= remaining => {}
            _ => return false,
        }
        for v in start..=bound {
            if !cover.hits_uncovered(v) {
                continue;
            }
            cover.add(v);
            let viable = !minimal_only || cover.chosen.iter().all(|&u| cover.has_private(u));
            if viable && self.lex(cover, v + 1, size, minimal_only, target, out) {
                cover.pop();
                return true;
            }
            cover.pop();
        }
        false
    }
}

/// Enumerates unions of one candidate per block, in lexicographic order of
/// the union, by deciding vertices in ascending order and keeping only the
/// candidates that agree with the decisions so far.
struct Merge<'l> {
    lists: &'l [Vec<Vec<Tid>>],
    /// Every vertex of some candidate, ascending, with its block.
    universe: Vec<(Tid, usize)>,
}

impl<'l> Merge<'l> {
    fn new(lists: &'l [Vec<Vec<Tid>>]) -> Self {
        let mut universe: Vec<(Tid, usize)> = Vec::new();
        for (b, list) in lists.iter().enumerate() {
            let mut vs: Vec<Tid> = list.iter().flatten().copied().collect();
            vs.sort_unstable();
            vs.dedup();
            universe.extend(vs.into_iter().map(|v| (v, b)));
        }
        universe.sort_unstable();
        Merge { lists, universe }
    }

    /// Appends up to `limit` unions of total size `total` to `out`.
    fn run(&self, total: usize, limit: usize, out: &mut Vec<Vec<Tid>>) {
        if limit == 0 {
            return;
        }
        let mut alive: Vec<Vec<u32>> = self.lists.iter().map(|l| (0..l.len() as u32).collect()).collect();
        if self.feasible(&alive, total) {
            let target = out.len().saturating_add(limit);
            self.walk(0, &mut alive, total, target, out);
        }
    }

    /// Whether picking one live candidate per block can reach `total`.
    fn feasible(&self, alive: &[Vec<u32>], total: usize) -> bool {
        let mut base = 0;
        let mut spreads: Vec<Vec<usize>> = Vec::new();
        for (b, live) in alive.iter().enumerate() {
            let mut sizes: Vec<usize> = live.iter().map(|&i| self.lists[b][i as usize].len()).collect();
            sizes.sort_unstable();
            sizes.dedup();
            let Some(&least) = sizes.first() else {
                return false;
            };
            base += least;
            if sizes.len() > 1 {
                spreads.push(sizes.iter().map(|s| s - least).collect());
            }
        }
        let Some(extra) = total.checked_sub(base) else {
            return false;
        };
        let mut reach = vec![false; extra + 1];
        reach[0] = true;
        for deltas in spreads {
            let mut next = vec![false; extra + 1];
            for (at, _) in reach.iter().enumerate().filter(|(_, &r)| r) {
                for d in &deltas {
                    if at + d <= extra {
                        next[at + d] = true;
                    }
                }
            }
            reach = next;
        }
        reach[extra]
    }

    fn walk(&self, mut pos: usize, alive: &mut Vec<Vec<u32>>, total: usize, target: usize, out: &mut Vec<Vec<Tid>>) -> bool {
        // skip vertices on which every live candidate of their block agrees
        let (block, with, without) = loop {
            let Some(&(v, b)) = self.universe.get(pos) else {
                let mut union: Vec<Tid> = alive
                    .iter()
                    .enumerate()
                    .flat_map(|(b, live)| self.lists[b][live[0] as usize].iter().copied())
                    .collect();
                union.sort_unstable();
                out.push(union);
                return out.len() >= target;
            };
            let (with, without): (Vec<u32>, Vec<u32>) = alive[b]
                .iter()
                .partition(|&&i| self.lists[b][i as usize].binary_search(&v).is_ok());
            if !with.is_empty() && !without.is_empty() {
                break (b, with, without);
            }
            pos += 1;
        };
        let saved = std::mem::replace(&mut alive[block], with);
        if self.feasible(alive, total) && self.walk(pos + 1, alive, total, target, out) {
            return true;
        }
        alive[block] = without;
        if self.feasible(alive, total) && self.walk(pos + 1, alive, total, target, out) {
            return true;
        }
        alive[block] = saved;
        false
    }
}

/// Incrementally maintained hit counts for a partial selection.
struct Cover<'h> {
    h: &'h Block,
    hits: Vec<u32>,
    uncovered: usize,
    chosen: Vec<u32>,
    stamp: Vec<u32>,
    generation: u32,
}

impl<'h> Cover<'h> {
    fn new(h: &'h Block) -> Self {
        Cover {
            h,
            hits: vec![0; h.edges.len()],
            uncovered: h.edges.len(),
            chosen: Vec::new(),
            stamp: vec![0; h.vertices.len()],
            generation: 0,
        }
    }

    fn add(&mut self, v: u32) {
        for &e in &self.h.incidence[v as usize] {
            let hit = &mut self.hits[e as usize];
            if *hit == 0 {
                self.uncovered -= 1;
            }
            *hit += 1;
        }
        self.chosen.push(v);
    }

    fn pop(&mut self) {
        let v = self.chosen.pop().expect("nonempty selection");
        for &e in &self.h.incidence[v as usize] {
            let hit = &mut self.hits[e as usize];
            *hit -= 1;
            if *hit == 0 {
                self.uncovered += 1;
            }
        }
    }

    fn hits_uncovered(&self, v: u32) -> bool {
        self.h.incidence[v as usize].iter().any(|&e| self.hits[e as usize] == 0)
    }

    /// Some edge is hit by `u` alone.
    fn has_private(&self, u: u32) -> bool {
        self.h.incidence[u as usize].iter().any(|&e| self.hits[e as usize] == 1)
    }

    /// Size of a greedy packing of pairwise disjoint uncovered edges, counting
    /// only `allowed` vertices. `None` when an uncovered edge has no allowed
    /// vertex left.
    fn packing_bound(&mut self, allowed: &dyn Fn(u32) -> bool) -> Option<usize> {
        self.generation += 1;
        let generation = self.generation;
        let mut count = 0;
        for (e, edge) in self.h.edges.iter().enumerate() {
            if self.hits[e] > 0 {
                continue;
            }
            let mut any = false;
            let mut disjoint = true;
            for &v in edge.iter().filter(|&&v| allowed(v)) {
                any = true;
                if self.stamp[v as usize] == generation {
                    disjoint = false;
                    break;
                }
            }
            if !any {
                return None;
            }
            if disjoint {
                count += 1;
                for &v in edge.iter().filter(|&&v| allowed(v)) {
                    self.stamp[v as usize] = generation;
                }
            }
        }
        Some(count)
    }
}

struct MinSearch<'h> {
    cover: Cover<'h>,
    excluded: Vec<bool>,
    memo: HashMap<u32, usize>,
    mode: BranchMode,
    best: usize,
}

impl MinSearch<'_> {
    fn branch(&mut self) {
        let used = self.cover.chosen.len();
        if self.cover.uncovered == 0 {
            self.best = self.best.min(used);
            return;
        }
        let excluded = std::mem::take(&mut self.excluded);
        let bound = self.cover.packing_bound(&|v| !excluded[v as usize]);
        self.excluded = excluded;
        match bound {
            Some(lb) if used + lb < self.best => {}
            _ => return,
        }
        if self.mode == BranchMode::Memo {
            let covered = self
                .cover
                .hits
                .iter()
                .enumerate()
                .filter(|(_, &h)| h > 0)
                .fold(0u32, |mask, (e, _)| mask | (1 << e));
            match self.memo.entry(covered) {
                Entry::Occupied(o) if *o.get() <= used => return,
                Entry::Occupied(mut o) => {
                    o.insert(used);
                }
                Entry::Vacant(v) => {
                    v.insert(used);
                }
            }
        }

        let h = self.cover.h;
        let candidates = |e: usize| h.edges[e].iter().filter(|&&v| !self.excluded[v as usize]).count();
        let edge = (0..h.edges.len())
            .filter(|&e| self.cover.hits[e] == 0)
            .min_by_key(|&e| candidates(e))
            .expect("some edge is uncovered");
        let branch_on: Vec<u32> = h.edges[edge]
            .iter()
            .copied()
            .filter(|&v| !self.excluded[v as usize])
            .collect();
        for &v in &branch_on {
            self.cover.add(v);
            self.branch();
            self.cover.pop();
            if self.mode == BranchMode::Exclude {
                self.excluded[v as usize] = true;
            }
        }
        if self.mode == BranchMode::Exclude {
            for &v in &branch_on {
                self.excluded[v as usize] = false;
            }
        }
    }
}
