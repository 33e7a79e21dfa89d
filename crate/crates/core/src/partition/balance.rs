//! Within-cluster and within-core work assignment.
//!
//! Assignments operate on CSR row offsets of a slice so the same code serves
//! the simulator (with real data) and the tuner (with offsets only). Work is
//! always a contiguous stretch of nonzeros in row-major order; see [`Span`].

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::config::{Scheme, SyncMode};
use crate::error::{Error, Result};
use crate::partition::geometry::even_split;
use crate::topology::PimTopology;

/// Contiguous work unit: output rows owned and the nonzeros processed.
///
/// For row-granularity schemes `nz` equals the offsets of `rows`. Under CP
/// the first and last rows may be partial and `rows` covers only rows that
/// hold at least one of the span's nonzeros.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub rows: Range<usize>,
    pub nz: Range<usize>,
}

impl Span {
    pub fn whole(offsets: &[usize]) -> Self {
        let n = offsets.len() - 1;
        Span {
            rows: 0..n,
            nz: 0..offsets[n],
        }
    }

    pub fn nnz(&self) -> usize {
        self.nz.len()
    }
}

/// Output row written by several neighbouring workers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SharedRow {
    pub row: usize,
    pub owners: Vec<usize>,
}

/// Index of the row holding nonzero `p`.
fn row_of(offsets: &[usize], p: usize) -> usize {
    offsets.partition_point(|&o| o <= p) - 1
}

fn clip(range: Range<usize>, to: &Range<usize>) -> Range<usize> {
    let start = range.start.clamp(to.start, to.end);
    let end = range.end.clamp(start, to.end);
    start..end
}

/// Splits `span` into `parts` contiguous spans according to `scheme`.
pub fn split_span(offsets: &[usize], span: &Span, parts: usize, scheme: Scheme) -> Vec<Span> {
    assert!(parts > 0);
    let row_span = |rows: Range<usize>| {
        let nz = clip(offsets[rows.start]..offsets[rows.end], &span.nz);
        Span { rows, nz }
    };
    match scheme {
        Scheme::Rv => even_split(span.rows.len(), parts)
            .into_iter()
            .map(|r| row_span(r.start + span.rows.start..r.end + span.rows.start))
            .collect(),
        Scheme::Re | Scheme::Ce => {
            let seg: Vec<usize> = span
                .rows
                .clone()
                .map(|r| clip(offsets[r]..offsets[r + 1], &span.nz).len())
                .collect();
            row_ranges(&seg, parts)
                .into_iter()
                .map(|r| row_span(r.start + span.rows.start..r.end + span.rows.start))
                .collect()
        }
        Scheme::Cp => even_split(span.nnz(), parts)
            .into_iter()
            .map(|r| {
                let nz = r.start + span.nz.start..r.end + span.nz.start;
                let rows = if nz.is_empty() {
                    let at = if nz.start < span.nz.end {
                        row_of(offsets, nz.start)
                    } else {
                        span.rows.end
                    };
                    at..at
                } else {
                    row_of(offsets, nz.start)..row_of(offsets, nz.end - 1) + 1
                };
                Span { rows, nz }
            })
            .collect(),
    }
}

/// Greedy prefix split at row granularity: a range is closed as soon as
/// adding the next row would move its total farther from the running target
/// `remaining / remaining_parts` than stopping does.
pub fn greedy_rows(seg_nnz: &[usize], parts: usize) -> Vec<Range<usize>> {
    let mut out = Vec::with_capacity(parts);
    let mut remaining: usize = seg_nnz.iter().sum();
    let mut cur = 0;
    for p in 0..parts - 1 {
        let left = (parts - p) as i128;
        let rem = remaining as i128;
        let start = cur;
        let mut acc = 0usize;
        while cur < seg_nnz.len() {
            let next = seg_nnz[cur];
            // compare |left*(acc+next) - rem| against |left*acc - rem|
            let with = (left * (acc + next) as i128 - rem).abs();
            let without = (left * acc as i128 - rem).abs();
            if with > without {
                break;
            }
            acc += next;
            cur += 1;
        }
        out.push(start..cur);
        remaining -= acc;
    }
    out.push(cur..seg_nnz.len());
    out
}

/// Row split used by RE/CE: the greedy split, replaced by [`bounded_rows`]
/// when its load spread exceeds the largest row.
pub fn row_ranges(seg_nnz: &[usize], parts: usize) -> Vec<Range<usize>> {
    let greedy = greedy_rows(seg_nnz, parts);
    let max_row = seg_nnz.iter().copied().max().unwrap_or(0);
    if load_spread(seg_nnz, &greedy) <= max_row {
        return greedy;
    }
    bounded_rows(seg_nnz, parts).unwrap_or(greedy)
}

fn load_spread(seg_nnz: &[usize], ranges: &[Range<usize>]) -> usize {
    let loads = ranges.iter().map(|r| seg_nnz[r.clone()].iter().sum::<usize>());
    let (lo, hi) = loads.fold((usize::MAX, 0), |(lo, hi), l| (lo.min(l), hi.max(l)));
    hi.saturating_sub(lo)
}

/// Contiguous split whose loads all lie in `[l, l + max_row]`.
///
/// For a lower bound `l`, the boundaries reachable after `i` parts form a
/// contiguous index run `[lo_i, hi_i]`. The largest `l` for which the
/// smallest-step walk still ends at or before the total is feasible.
pub fn bounded_rows(seg_nnz: &[usize], parts: usize) -> Option<Vec<Range<usize>>> {
    let mut prefix = Vec::with_capacity(seg_nnz.len() + 1);
    prefix.push(0usize);
    for &v in seg_nnz {
        prefix.push(prefix.last().unwrap() + v);
    }
    let total = *prefix.last().unwrap();
    let m = seg_nnz.iter().copied().max().unwrap_or(0);
    let n = seg_nnz.len();
    // smallest index with prefix >= v
    let first_ge = |v: usize| prefix.partition_point(|&p| p < v);
    // largest index with prefix <= v
    let last_le = |v: usize| prefix.partition_point(|&p| p <= v) - 1;

    let runs = |l: usize| -> Option<Vec<(usize, usize)>> {
        let mut out = Vec::with_capacity(parts);
        let (mut lo, mut hi) = (0usize, 0usize);
        out.push((lo, hi));
        for _ in 1..parts {
            let next_lo = first_ge(prefix[lo] + l);
            if next_lo > n {
                return None;
            }
            lo = next_lo;
            hi = last_le(prefix[hi] + l + m).max(lo);
            out.push((lo, hi));
        }
        Some(out)
    };
    let fits = |l: usize| runs(l).is_some_and(|r| prefix[r[parts - 1].0] + l <= total);

    let (mut a, mut b) = (0usize, total);
    while a < b {
        let mid = a + (b - a).div_ceil(2);
        if fits(mid) {
            a = mid;
        } else {
            b = mid - 1;
        }
    }
    let l = a;
    let runs = runs(l)?;
    let mut cuts = vec![n];
    for i in (1..parts).rev() {
        let end = *cuts.last().unwrap();
        let (lo, hi) = runs[i];
        let cap = prefix[end].checked_sub(l)?;
        let j = last_le(cap).min(hi).min(end);
        if j < lo || prefix[end] - prefix[j] > l + m {
            return None;
        }
        cuts.push(j);
    }
    cuts.push(0);
    cuts.reverse();
    let ranges: Vec<_> = cuts.windows(2).map(|w| w[0]..w[1]).collect();
    let first = prefix[ranges[0].end];
    (first >= l && first <= l + m).then_some(ranges)
}

/// Rows touched by more than one of `spans` (only possible under CP).
pub fn shared_rows(offsets: &[usize], spans: &[Span]) -> Vec<SharedRow> {
    let mut out = Vec::new();
    let mut cur: Option<SharedRow> = None;
    let mut flush = |cur: &mut Option<SharedRow>| {
        if let Some(s) = cur.take() {
            if s.owners.len() > 1 {
                out.push(s);
            }
        }
    };
    for (i, s) in spans.iter().enumerate() {
        if s.nz.is_empty() {
            continue;
        }
        let first = row_of(offsets, s.nz.start);
        let last = row_of(offsets, s.nz.end - 1);
        match cur.as_mut() {
            Some(c) if c.row == first => c.owners.push(i),
            _ => {
                flush(&mut cur);
                cur = Some(SharedRow {
                    row: first,
                    owners: vec![i],
                });
            }
        }
        if last != first {
            flush(&mut cur);
            cur = Some(SharedRow {
                row: last,
                owners: vec![i],
            });
        }
    }
    flush(&mut cur);
    out
}

/// Splits a cluster's slice across its cores.
pub fn assign_within_cluster(
    offsets: &[usize],
    span: &Span,
    cores: usize,
    scheme: Scheme,
) -> Result<(Vec<Span>, Vec<SharedRow>)> {
    if cores == 0 {
        return Err(Error::Topology("a cluster needs at least one core".into()));
    }
    let spans = split_span(offsets, span, cores, scheme);
    let shared = if scheme.splits_rows() {
        shared_rows(offsets, &spans)
    } else {
        Vec::new()
    };
    Ok((spans, shared))
}

/// Thread-level assignment of one core's span plus its synchronization needs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreadPlan {
    pub scheme: Scheme,
    pub sync: SyncMode,
    pub spans: Vec<Span>,
    pub shared_rows: Vec<SharedRow>,
    /// Output rows committed under the global mutex (coarse-grained locking).
    pub lock_rows: Vec<usize>,
    /// Scratchpad slots holding split-row partials (lock-free), merged by thread 0.
    pub partial_slots: usize,
    pub scratchpad_bytes: usize,
}

impl ThreadPlan {
    /// Split-row commits serialized by the global mutex.
    pub fn lock_writes(&self) -> usize {
        match self.sync {
            SyncMode::CoarseLock => self.shared_rows.iter().map(|s| s.owners.len()).sum(),
            SyncMode::LockFree => 0,
        }
    }
}

pub fn assign_within_core(
    offsets: &[usize],
    core: &Span,
    threads: usize,
    scheme: Scheme,
    sync: SyncMode,
    tile_cols: usize,
    elem_bytes: usize,
    topo: &PimTopology,
) -> Result<ThreadPlan> {
    if threads == 0 || threads > topo.threads_per_core {
        return Err(Error::ThreadCount {
            threads,
            max: topo.threads_per_core,
        });
    }
    let spans = split_span(offsets, core, threads, scheme);
    let shared = if scheme.splits_rows() {
        shared_rows(offsets, &spans)
    } else {
        Vec::new()
    };
    let (lock_rows, partial_slots) = match sync {
        SyncMode::CoarseLock => (shared.iter().map(|s| s.row).collect(), 0),
        SyncMode::LockFree => (Vec::new(), shared.iter().map(|s| s.owners.len() - 1).sum()),
    };
    let row_bytes = tile_cols * elem_bytes;
    // per thread: one nonzero fetch chunk, one feature row, one output row accumulator
    let scratchpad_bytes = threads * (topo.transfer_chunk + 2 * row_bytes) + partial_slots * row_bytes;
    if scratchpad_bytes > topo.scratchpad_capacity {
        return Err(Error::ScratchpadOverflow {
            cluster: 0,
            core: 0,
            needed: scratchpad_bytes,
            capacity: topo.scratchpad_capacity,
        });
    }
    Ok(ThreadPlan {
        scheme,
        sync,
        spans,
        shared_rows: shared,
        lock_rows,
        partial_slots,
        scratchpad_bytes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn offsets(row_nnz: &[usize]) -> Vec<usize> {
        let mut o = vec![0];
        for &n in row_nnz {
            o.push(o.last().unwrap() + n);
        }
        o
    }

    #[test]
    fn re_greedy_example() {
        let o = offsets(&[4, 1, 1, 1, 1]);
        let (spans, shared) = assign_within_cluster(&o, &Span::whole(&o), 2, Scheme::Re).unwrap();
        assert_eq!(spans[0], Span { rows: 0..1, nz: 0..4 });
        assert_eq!(spans[1], Span { rows: 1..5, nz: 4..8 });
        assert!(shared.is_empty());
    }

    #[test]
    fn cp_split_example() {
        let o = offsets(&[5, 1]);
        let (spans, shared) = assign_within_cluster(&o, &Span::whole(&o), 2, Scheme::Cp).unwrap();
        assert_eq!(spans[0], Span { rows: 0..1, nz: 0..3 });
        assert_eq!(spans[1], Span { rows: 0..2, nz: 3..6 });
        assert_eq!(shared, vec![SharedRow { row: 0, owners: vec![0, 1] }]);
    }

    #[test]
    fn rv_ceil_split() {
        let o = offsets(&[1, 1, 1, 1, 1]);
        let (spans, _) = assign_within_cluster(&o, &Span::whole(&o), 2, Scheme::Rv).unwrap();
        assert_eq!(spans[0].rows, 0..3);
        assert_eq!(spans[1].rows, 3..5);
    }

    #[test]
    fn cp_long_row_spans_many_workers() {
        let o = offsets(&[1, 9, 0, 2]);
        let spans = split_span(&o, &Span::whole(&o), 4, Scheme::Cp);
        let nnz: Vec<usize> = spans.iter().map(Span::nnz).collect();
        assert_eq!(nnz, vec![3, 3, 3, 3]);
        let shared = shared_rows(&o, &spans);
        // worker 3 takes the last nonzero of row 1 and all of row 3
        assert_eq!(shared, vec![SharedRow { row: 1, owners: vec![0, 1, 2, 3] }]);
    }

    #[test]
    fn more_workers_than_work() {
        let o = offsets(&[2]);
        let spans = split_span(&o, &Span::whole(&o), 4, Scheme::Cp);
        assert_eq!(spans.iter().map(Span::nnz).sum::<usize>(), 2);
        assert!(spans[2].rows.is_empty() && spans[3].rows.is_empty());
        let spans = split_span(&o, &Span::whole(&o), 3, Scheme::Re);
        // target 2/3: stopping at 0 is closer than taking the row
        assert_eq!(spans.iter().map(Span::nnz).collect::<Vec<_>>(), vec![0, 2, 0]);
    }

    #[test]
    fn bounded_rows_fixes_greedy_drift() {
        // greedy overshoots early and leaves the last part short
        let seg = [3, 3, 3, 3, 3, 5, 5, 5, 5, 5, 1];
        let r = bounded_rows(&seg, 3).unwrap();
        assert!(load_spread(&seg, &r) <= 5);
        assert_eq!(r.first().unwrap().start, 0);
        assert_eq!(r.last().unwrap().end, seg.len());
    }

    proptest::proptest! {
        #[test]
        fn row_ranges_within_max_row(
            seg in proptest::collection::vec(0usize..60, 0..80),
            parts in 1usize..20,
        ) {
            let r = row_ranges(&seg, parts);
            proptest::prop_assert_eq!(r.len(), parts);
            let mut at = 0;
            for x in &r {
                proptest::prop_assert_eq!(x.start, at);
                at = x.end;
            }
            proptest::prop_assert_eq!(at, seg.len());
            let m = seg.iter().copied().max().unwrap_or(0);
            proptest::prop_assert!(load_spread(&seg, &r) <= m);
        }
    }

    #[test]
    fn threads_inside_partial_core_span() {
        // core under CP owns the tail of row 0 and the head of row 1
        let o = offsets(&[4, 4]);
        let core = Span { rows: 0..2, nz: 2..6 };
        let t = split_span(&o, &core, 2, Scheme::Ce);
        assert_eq!(t[0], Span { rows: 0..1, nz: 2..4 });
        assert_eq!(t[1], Span { rows: 1..2, nz: 4..6 });
    }

    #[test]
    fn within_core_sync_accounting() {
        let topo = PimTopology::default();
        let o = offsets(&[3, 3, 3, 3]);
        let core = Span::whole(&o);
        let lf = assign_within_core(&o, &core, 4, Scheme::Cp, SyncMode::LockFree, 4, 4, &topo).unwrap();
        // 12 nnz over 4 threads: boundaries at 3, 6, 9 coincide with rows
        assert_eq!(lf.partial_slots, 0);
        let o = offsets(&[5, 5, 2]);
        let core = Span::whole(&o);
        let lf = assign_within_core(&o, &core, 4, Scheme::Cp, SyncMode::LockFree, 4, 4, &topo).unwrap();
        // boundaries at 3, 6, 9 all fall inside rows
        assert_eq!(lf.partial_slots, 3);
        assert!(lf.lock_rows.is_empty());
        let cg = assign_within_core(&o, &core, 4, Scheme::Cp, SyncMode::CoarseLock, 4, 4, &topo).unwrap();
        assert_eq!(cg.partial_slots, 0);
        assert_eq!(cg.lock_rows, vec![0, 1]);
        assert_eq!(cg.lock_writes(), 5);
    }

    #[test]
    fn thread_count_and_scratchpad_errors() {
        let mut topo = PimTopology::default();
        topo.threads_per_core = 24;
        let o = offsets(&[1; 32]);
        let core = Span::whole(&o);
        let e = assign_within_core(&o, &core, 25, Scheme::Re, SyncMode::LockFree, 4, 4, &topo);
        assert!(matches!(e, Err(Error::ThreadCount { threads: 25, .. })));
        assert!(assign_within_core(&o, &core, 0, Scheme::Re, SyncMode::LockFree, 4, 4, &topo).is_err());
        let e = assign_within_core(&o, &core, 16, Scheme::Re, SyncMode::LockFree, 1024, 4, &topo);
        assert!(matches!(e, Err(Error::ScratchpadOverflow { .. })));
    }
}
