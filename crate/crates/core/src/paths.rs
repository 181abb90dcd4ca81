//! Accessible and open large paths: exact counts on finite families,
//! an enumeration oracle, and survival depth on infinite families.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{couple, FitnessField, StepRule};
use crate::graphs::{ones, Family, LeveledDag, Role, VertexKey};
use crate::hashing::KeyHash;

/// Largest hypercube the counting DP will allocate for (two slots per
/// vertex, 2^24 vertices).
pub const MAX_COUNT_HYPERCUBE_DIM: u32 = 24;
pub const MAX_ENUMERATED_PATHS: u128 = 1_000_000;
pub const DEFAULT_FRONTIER_CAP: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathMode {
    /// Fitness strictly increases along the path.
    Accessible,
    /// Every vertex of the path is open.
    Open,
}

/// Exact number of large paths in one realization.
///
/// Counts fit in `u128`: the largest countable family has `24!` paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathCount {
    pub count: u128,
    pub family: Family,
    pub mode: PathMode,
    pub field: serde_json::Value,
}

/// Source-to-sink path count by level-order DP: `acc(source) = 1`, and
/// `acc(v)` sums `acc(u)` over predecessors `u` the field lets step to `v`.
pub fn count_large_paths<R: StepRule>(dag: &LeveledDag, field: &R) -> Result<PathCount> {
    let count = match dag.family() {
        Family::Hypercube { n } => count_hypercube(n, field)?,
        Family::NaryTree { n, h } => count_tree(n, h, field),
        other => return Err(Error::Unsupported(format!("{other} is infinite; use survival_depth"))),
    };
    Ok(PathCount { count, family: dag.family(), mode: field.mode(), field: field.descriptor() })
}

fn count_hypercube<R: StepRule>(n: u32, field: &R) -> Result<u128> {
    if n > MAX_COUNT_HYPERCUBE_DIM {
        return Err(Error::Guard(format!(
            "counting on the {n}-cube needs 2^{n} slots; limit is dimension {MAX_COUNT_HYPERCUBE_DIM}"
        )));
    }
    let size = 1usize << n;
    let full = size - 1;
    let base = field.base();
    let labels: Vec<Option<R::Label>> = (0..size)
        .map(|m| {
            let role = match m {
                0 => Role::Source,
                _ if m == full => Role::Sink,
                _ => Role::Interior,
            };
            field.label(base.push(m as u64), m.count_ones(), role)
        })
        .collect();
    let mut acc = vec![0u128; size];
    acc[0] = labels[0].is_some() as u128;
    // u = m with one bit cleared is numerically smaller, so increasing
    // order is topological
    for m in 1..size {
        let Some(to) = labels[m] else { continue };
        let mut total = 0u128;
        for bit in ones(m as u64) {
            let u = m ^ bit as usize;
            if acc[u] != 0 && field.admits(labels[u].expect("counted vertices carry a label"), to) {
                total += acc[u];
            }
        }
        acc[m] = total;
    }
    Ok(acc[full])
}

/// Each tree vertex has one predecessor, so `acc` is 0 or 1 and the DP is a
/// pruned depth-first walk with O(h) memory.
fn count_tree<R: StepRule>(n: u32, h: u32, field: &R) -> u128 {
    let base = field.base();
    let Some(root) = field.label(base, 0, Role::Source) else { return 0 };
    let mut stack: Vec<(KeyHash, R::Label, u32)> = vec![(base, root, 0)];
    let mut count = 0u128;
    while let Some((state, label, level)) = stack.pop() {
        if level == h {
            count += 1;
            continue;
        }
        let child_level = level + 1;
        let role = if child_level == h { Role::Sink } else { Role::Interior };
        for c in (0..n).rev() {
            let s = state.push(c as u64);
            if let Some(l) = field.label(s, child_level, role) {
                if field.admits(label, l) {
                    stack.push((s, l, child_level));
                }
            }
        }
    }
    count
}

/// Every admissible source-to-sink path, by depth-first search in
/// successor order. Refuses graphs with more than a million large paths.
pub fn enumerate_large_paths<R: StepRule>(dag: &LeveledDag, field: &R) -> Result<Vec<Vec<VertexKey>>> {
    let total = dag
        .total_large_paths()
        .ok_or_else(|| Error::Unsupported(format!("{} is infinite", dag.family())))?;
    if total > MAX_ENUMERATED_PATHS {
        return Err(Error::Guard(format!("{} has {total} large paths", dag.family())));
    }
    let mut out = Vec::new();
    let src = dag.source();
    if let Some(l) = field.label_of(dag, &src) {
        let mut path = vec![src];
        walk(dag, field, l, &mut path, &mut out);
    }
    Ok(out)
}

fn walk<R: StepRule>(dag: &LeveledDag, field: &R, label: R::Label, path: &mut Vec<VertexKey>, out: &mut Vec<Vec<VertexKey>>) {
    let here = path.last().expect("path is never empty").clone();
    if dag.is_sink(&here) {
        out.push(path.clone());
        return;
    }
    for next in dag.successors(&here) {
        if let Some(l) = field.label_of(dag, &next) {
            if field.admits(label, l) {
                path.push(next);
                walk(dag, field, l, path, out);
                path.pop();
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpenVsAccessible {
    pub open: u128,
    pub accessible: u128,
}

/// Open paths of the coupled site field and accessible paths of `field`,
/// both read from the same `eta` realization.
pub fn count_open_vs_accessible(dag: &LeveledDag, field: &FitnessField, x_c: f64) -> Result<OpenVsAccessible> {
    let sites = couple(field, x_c)?;
    Ok(OpenVsAccessible {
        open: count_large_paths(dag, &sites)?.count,
        accessible: count_large_paths(dag, field)?.count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeSearch {
    /// Depth-first search for one path reaching the target; never censors.
    #[default]
    DepthFirst,
    /// Level-by-level frontier with a size cap.
    FrontierSweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurvivalOptions {
    pub tree_search: TreeSearch,
    /// Frontier entries allowed before a tree sweep is censored.
    pub frontier_cap: usize,
    /// Record frontier sizes per level (forces the sweep on trees).
    pub trace: bool,
}

impl Default for SurvivalOptions {
    fn default() -> Self {
        Self { tree_search: TreeSearch::default(), frontier_cap: DEFAULT_FRONTIER_CAP, trace: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurvivalOutcome {
    Survived,
    Died,
    /// Frontier cap tripped before the target; treated as a survival by the
    /// experiment harness.
    Censored,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurvivalResult {
    /// Deepest level holding a live vertex (level at which a censored run
    /// stopped).
    pub reached: u32,
    pub target: u32,
    pub outcome: SurvivalOutcome,
    pub frontier: Option<Vec<u64>>,
}

impl SurvivalResult {
    pub fn survived(&self) -> bool {
        self.outcome == SurvivalOutcome::Survived
    }

    fn died(reached: u32, target: u32, frontier: Option<Vec<u64>>) -> Self {
        Self { reached, target, outcome: SurvivalOutcome::Died, frontier }
    }
}

/// How deep an admissible path from the source reaches, up to `target`.
///
/// A vertex on level `l + 1` is alive when some alive predecessor steps to
/// it. Lattices are swept level by level in O(width) memory. A closed
/// source dies at level 0.
pub fn survival_depth<R: StepRule>(
    dag: &LeveledDag,
    field: &R,
    target: u32,
    opts: &SurvivalOptions,
) -> Result<SurvivalResult> {
    if target < 1 {
        return Err(Error::Parameter("target height must be at least 1".into()));
    }
    match dag.family() {
        Family::RegularTree { d } => Ok(match (opts.tree_search, opts.trace) {
            (TreeSearch::DepthFirst, false) => tree_depth_first(d, field, target),
            _ => tree_sweep(d, field, target, opts.frontier_cap, opts.trace),
        }),
        Family::L2 => Ok(lattice_sweep(field, false, target, opts.trace)),
        Family::L2Alt => Ok(lattice_sweep(field, true, target, opts.trace)),
        other => Err(Error::Unsupported(format!("{other} is finite; use count_large_paths"))),
    }
}

fn tree_depth_first<R: StepRule>(d: u32, field: &R, target: u32) -> SurvivalResult {
    let base = field.base();
    let Some(root) = field.label(base, 0, Role::Source) else {
        return SurvivalResult::died(0, target, None);
    };
    let mut deepest = 0;
    let mut stack: Vec<(KeyHash, R::Label, u32)> = vec![(base, root, 0)];
    while let Some((state, label, level)) = stack.pop() {
        let child_level = level + 1;
        for c in (0..d).rev() {
            let s = state.push(c as u64);
            if let Some(l) = field.label(s, child_level, Role::Interior) {
                if field.admits(label, l) {
                    if child_level == target {
                        return SurvivalResult { reached: target, target, outcome: SurvivalOutcome::Survived, frontier: None };
                    }
                    deepest = deepest.max(child_level);
                    stack.push((s, l, child_level));
                }
            }
        }
    }
    SurvivalResult::died(deepest, target, None)
}

fn tree_sweep<R: StepRule>(d: u32, field: &R, target: u32, cap: usize, trace: bool) -> SurvivalResult {
    let base = field.base();
    let mut sizes = trace.then(Vec::new);
    let Some(root) = field.label(base, 0, Role::Source) else {
        return SurvivalResult::died(0, target, sizes.map(|mut s| {
            s.push(0);
            s
        }));
    };
    let mut frontier: Vec<(KeyHash, R::Label)> = vec![(base, root)];
    if let Some(s) = sizes.as_mut() {
        s.push(1);
    }
    for level in 1..=target {
        let mut next = Vec::with_capacity(frontier.len() * d as usize);
        for &(state, label) in &frontier {
            for c in 0..d {
                let s = state.push(c as u64);
                if let Some(l) = field.label(s, level, Role::Interior) {
                    if field.admits(label, l) {
                        next.push((s, l));
                    }
                }
            }
            if next.len() > cap {
                return SurvivalResult { reached: level, target, outcome: SurvivalOutcome::Censored, frontier: sizes };
            }
        }
        if let Some(s) = sizes.as_mut() {
            s.push(next.len() as u64);
        }
        if next.is_empty() {
            return SurvivalResult::died(level - 1, target, sizes);
        }
        frontier = next;
    }
    SurvivalResult { reached: target, target, outcome: SurvivalOutcome::Survived, frontier: sizes }
}

/// Level `l` of `L2` is indexed by `x` (so `y = l - x`); level `y` of
/// `L2alt` by `i = x + y`. Only the index range spanned by live vertices
/// is scanned.
#[allow(clippy::needless_range_loop)]
fn lattice_sweep<R: StepRule>(field: &R, alt: bool, target: u32, trace: bool) -> SurvivalResult {
    let base = field.base();
    let mut sizes = trace.then(Vec::new);
    let Some(root) = field.label(base.push_i64(0).push_i64(0), 0, Role::Source) else {
        if let Some(s) = sizes.as_mut() {
            s.push(0);
        }
        return SurvivalResult::died(0, target, sizes);
    };
    if let Some(s) = sizes.as_mut() {
        s.push(1);
    }
    let max_width = if alt { 2 * target as usize + 1 } else { target as usize + 1 };
    let mut cur: Vec<Option<R::Label>> = vec![None; max_width];
    let mut next: Vec<Option<R::Label>> = vec![None; max_width];
    cur[0] = Some(root);
    let (mut lo, mut hi) = (0usize, 0usize);
    for level in 1..=target {
        let prev_last = if alt { 2 * (level as usize - 1) } else { level as usize - 1 };
        let scan_hi = hi + if alt { 2 } else { 1 };
        let (mut new_lo, mut new_hi) = (usize::MAX, 0usize);
        let mut alive = 0u64;
        for i in lo..=scan_hi {
            // predecessor indices on the previous level
            let preds: [Option<usize>; 3] = if alt {
                [i.checked_sub(2), i.checked_sub(1), Some(i)]
            } else {
                [i.checked_sub(1), Some(i), None]
            };
            let mut live_preds = [None; 3];
            let mut any = false;
            for (slot, p) in live_preds.iter_mut().zip(preds) {
                if let Some(p) = p.filter(|&p| p <= prev_last && p >= lo && p <= hi) {
                    if let Some(l) = cur[p] {
                        *slot = Some(l);
                        any = true;
                    }
                }
            }
            next[i] = None;
            if !any {
                continue;
            }
            let (x, y) = if alt {
                (i as i64 - level as i64, level as i64)
            } else {
                (i as i64, level as i64 - i as i64)
            };
            if let Some(to) = field.label(base.push_i64(x).push_i64(y), level, Role::Interior) {
                if live_preds.iter().flatten().any(|&from| field.admits(from, to)) {
                    next[i] = Some(to);
                    new_lo = new_lo.min(i);
                    new_hi = i;
                    alive += 1;
                }
            }
        }
        if let Some(s) = sizes.as_mut() {
            s.push(alive);
        }
        if alive == 0 {
            return SurvivalResult::died(level - 1, target, sizes);
        }
        // clear the stale range of the previous level before swapping
        for slot in &mut cur[lo..=hi] {
            *slot = None;
        }
        std::mem::swap(&mut cur, &mut next);
        lo = new_lo;
        hi = new_hi;
    }
    SurvivalResult { reached: target, target, outcome: SurvivalOutcome::Survived, frontier: sizes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Distribution;
    use crate::fields::{Boundary, SiteBoundary, SiteField};
    use std::collections::HashMap;

    fn unif() -> Distribution {
        Distribution::uniform(0.0, 1.0).unwrap()
    }

    #[test]
    fn all_open_counts() {
        let q6 = LeveledDag::hypercube(6).unwrap();
        assert_eq!(count_large_paths(&q6, &SiteField::all_open(&q6)).unwrap().count, 720);
        let t = LeveledDag::nary_tree(2, 4).unwrap();
        assert_eq!(count_large_paths(&t, &SiteField::all_open(&t)).unwrap().count, 16);
        let chain = LeveledDag::nary_tree(1, 7).unwrap();
        assert_eq!(count_large_paths(&chain, &SiteField::all_open(&chain)).unwrap().count, 1);
        let q20 = LeveledDag::hypercube(20).unwrap();
        let c = count_large_paths(&q20, &SiteField::all_open(&q20)).unwrap();
        assert_eq!(c.count, 2_432_902_008_176_640_000);
        assert_eq!(c.mode, PathMode::Open);
    }

    #[test]
    fn drift_beyond_support_makes_every_path_accessible() {
        let q = LeveledDag::hypercube(4).unwrap();
        let f = FitnessField::new(&q, unif(), 1.5, 3, Boundary::SourceNegInfAndSinkPosInf).unwrap();
        assert_eq!(count_large_paths(&q, &f).unwrap().count, 24);
    }

    #[test]
    fn closed_sites_block_everything() {
        for n in 2..=6 {
            let q = LeveledDag::hypercube(n).unwrap();
            let s = SiteField::new(&q, 0.0, 9, None, SiteBoundary::Source).unwrap();
            assert_eq!(count_large_paths(&q, &s).unwrap().count, 0);
        }
    }

    #[test]
    fn enumeration_examples() {
        let t = LeveledDag::nary_tree(2, 3).unwrap();
        assert_eq!(enumerate_large_paths(&t, &SiteField::all_open(&t)).unwrap().len(), 8);
        let q = LeveledDag::hypercube(3).unwrap();
        let paths = enumerate_large_paths(&q, &SiteField::all_open(&q)).unwrap();
        assert_eq!(paths.len(), 6);
        assert_eq!(paths[0], vec![VertexKey::Mask(0), VertexKey::Mask(1), VertexKey::Mask(3), VertexKey::Mask(7)]);
        assert!(matches!(
            enumerate_large_paths(&LeveledDag::hypercube(10).unwrap(), &SiteField::all_open(&q)),
            Err(Error::Guard(_))
        ));
    }

    #[test]
    fn infinite_and_finite_misuse() {
        let l2 = LeveledDag::l2();
        assert!(matches!(count_large_paths(&l2, &SiteField::all_open(&l2)), Err(Error::Unsupported(_))));
        let q = LeveledDag::hypercube(3).unwrap();
        let f = FitnessField::new(&q, unif(), 0.1, 1, Boundary::None).unwrap();
        assert!(matches!(survival_depth(&q, &f, 3, &SurvivalOptions::default()), Err(Error::Unsupported(_))));
        assert!(count_large_paths(&LeveledDag::hypercube(25).unwrap(), &f).is_err());
    }

    #[test]
    fn dp_matches_enumeration_on_q4() {
        let q = LeveledDag::hypercube(4).unwrap();
        for seed in 0..10 {
            let f = FitnessField::new(&q, unif(), 0.4, seed, Boundary::None).unwrap();
            let dp = count_large_paths(&q, &f).unwrap().count;
            let listed = enumerate_large_paths(&q, &f).unwrap();
            assert_eq!(dp, listed.len() as u128);
            for p in &listed {
                assert!(p.windows(2).all(|w| f.omega(&w[0]) < f.omega(&w[1])));
            }
        }
    }

    #[test]
    fn accessible_count_grows_with_drift() {
        let q = LeveledDag::hypercube(6).unwrap();
        for seed in 0..20 {
            let mut prev = 0;
            for c in [0.0, 0.05, 0.1, 0.2, 0.3, 0.5, 0.8, 1.0] {
                let f = FitnessField::new(&q, unif(), c, seed, Boundary::None).unwrap();
                let count = count_large_paths(&q, &f).unwrap().count;
                assert!(count >= prev, "seed {seed} c {c}");
                prev = count;
            }
        }
    }

    #[test]
    fn coupling_dominance_examples() {
        let q = LeveledDag::hypercube(6).unwrap();
        for seed in 0..50 {
            let f = FitnessField::new(&q, unif(), 0.3, seed, Boundary::None).unwrap();
            let r = count_open_vs_accessible(&q, &f, 0.35).unwrap();
            assert!(r.accessible >= r.open);
        }
        // window covers the support: every path open and accessible
        let f = FitnessField::new(&q, unif(), 1.0, 4, Boundary::None).unwrap();
        let r = count_open_vs_accessible(&q, &f, 0.0).unwrap();
        assert_eq!((r.open, r.accessible), (720, 720));
    }

    // Reference survival by HashMap frontier over generic keys.
    fn reference_depth<R: StepRule>(dag: &LeveledDag, field: &R, target: u32) -> u32 {
        let mut frontier: HashMap<VertexKey, R::Label> = HashMap::new();
        match field.label_of(dag, &dag.source()) {
            Some(l) => frontier.insert(dag.source(), l),
            None => return 0,
        };
        for level in 1..=target {
            let mut next = HashMap::new();
            for v in dag.level(level).unwrap() {
                let Some(lv) = field.label_of(dag, &v) else { continue };
                if dag.predecessors(&v).iter().any(|u| frontier.get(u).is_some_and(|&lu| field.admits(lu, lv))) {
                    next.insert(v, lv);
                }
            }
            if next.is_empty() {
                return level - 1;
            }
            frontier = next;
        }
        target
    }

    #[test]
    fn sweeps_match_reference_frontier() {
        let sweep = SurvivalOptions { tree_search: TreeSearch::FrontierSweep, ..Default::default() };
        for dag in [LeveledDag::l2(), LeveledDag::l2_alt(), LeveledDag::regular_tree(2).unwrap()] {
            let target = if dag.family() == (Family::RegularTree { d: 2 }) { 12 } else { 40 };
            for seed in 0..40 {
                for c in [0.1, 0.3, 0.5] {
                    let f = FitnessField::new(&dag, unif(), c, seed, Boundary::None).unwrap();
                    let expect = reference_depth(&dag, &f, target);
                    for opts in [SurvivalOptions::default(), sweep] {
                        let got = survival_depth(&dag, &f, target, &opts).unwrap();
                        assert_eq!(got.reached, expect, "{} seed {seed} c {c}", dag.family());
                        assert_eq!(got.survived(), expect == target);
                    }
                    let s = couple(&f, 0.2).unwrap();
                    assert_eq!(survival_depth(&dag, &s, target, &sweep).unwrap().reached, reference_depth(&dag, &s, target));
                }
            }
        }
    }

    #[test]
    fn depth_first_equals_sweep_on_trees() {
        let r = LeveledDag::regular_tree(2).unwrap();
        let sweep = SurvivalOptions { tree_search: TreeSearch::FrontierSweep, ..Default::default() };
        for seed in 0..300 {
            let f = FitnessField::new(&r, unif(), 0.21, seed, Boundary::None).unwrap();
            let a = survival_depth(&r, &f, 200, &SurvivalOptions::default()).unwrap();
            let b = survival_depth(&r, &f, 200, &sweep).unwrap();
            assert_eq!((a.reached, a.outcome), (b.reached, b.outcome), "seed {seed}");
        }
    }

    #[test]
    fn frontier_cap_censors() {
        let r = LeveledDag::regular_tree(2).unwrap();
        let f = FitnessField::new(&r, unif(), 1.0, 1, Boundary::None).unwrap();
        let opts = SurvivalOptions { tree_search: TreeSearch::FrontierSweep, frontier_cap: 1000, trace: true };
        let res = survival_depth(&r, &f, 100, &opts).unwrap();
        assert_eq!(res.outcome, SurvivalOutcome::Censored);
        assert!(res.reached < 100);
        let trace = res.frontier.unwrap();
        assert_eq!(&trace[..4], &[1, 2, 4, 8]);
    }

    #[test]
    fn survival_is_monotone_in_height() {
        let l2 = LeveledDag::l2();
        for seed in 0..50 {
            let f = FitnessField::new(&l2, unif(), 0.3, seed, Boundary::None).unwrap();
            let deep = survival_depth(&l2, &f, 300, &SurvivalOptions::default()).unwrap();
            for h in [1, 10, 50, 150] {
                let shallow = survival_depth(&l2, &f, h, &SurvivalOptions::default()).unwrap();
                if deep.survived() {
                    assert!(shallow.survived());
                }
                assert_eq!(shallow.reached, deep.reached.min(h));
            }
        }
    }

    #[test]
    fn trace_reports_live_counts() {
        let alt = LeveledDag::l2_alt();
        let f = FitnessField::new(&alt, unif(), 1.0, 2, Boundary::None).unwrap();
        let opts = SurvivalOptions { trace: true, ..Default::default() };
        let res = survival_depth(&alt, &f, 20, &opts).unwrap();
        // c = 1 exceeds the support width, so every site is alive
        assert_eq!(res.frontier.unwrap(), (0..=20).map(|l| 2 * l + 1).collect::<Vec<u64>>());
    }
}
