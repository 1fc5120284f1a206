//! Chu-Liu-Edmonds maximum spanning arborescence over dense edge scores.
//!
//! Greedy best parents are picked for every active node; if they contain a
//! cycle, the cycle is contracted into one representative whose incoming
//! edges are rescored by the gain over the cycle edge they displace, and the
//! algorithm recurses. Expansion restores the original endpoints.

use super::matrix::EdgeScores;
use super::DecodeError;
use crate::scalar::Score;

/// Maximum-score arborescence over the `active` nodes rooted at `root`.
///
/// Returns a parent for every active non-root node; `root` and inactive
/// nodes map to `None`. Ties are broken towards lower parent indices.
pub fn cle<T: Score>(
    scores: &EdgeScores<T>,
    root: usize,
    active: &[bool],
) -> Result<Vec<Option<usize>>, DecodeError> {
    assert_eq!(active.len(), scores.len());
    assert!(active[root], "root must be active");
    let mut work = scores.clone();
    solve(&mut work, root, active.to_vec())
}

fn solve<T: Score>(
    w: &mut EdgeScores<T>,
    root: usize,
    active: Vec<bool>,
) -> Result<Vec<Option<usize>>, DecodeError> {
    let n = w.len();
    let mut best = vec![None; n];
    for v in 0..n {
        if !active[v] || v == root {
            continue;
        }
        let p = w
            .best_parent(v, |u| active[u])
            .ok_or(DecodeError::InfeasibleGraph(v))?;
        best[v] = Some(p);
    }

    let Some(cycle) = find_cycle(&best, &active) else {
        return Ok(best);
    };
    let rep = cycle[0];
    let mut in_cycle = vec![false; n];
    for &v in &cycle {
        in_cycle[v] = true;
    }

    // For each outside node u: the cycle node its edge into the cycle would
    // enter, and the cycle node its edge out of the cycle would leave.
    let mut enters = vec![None; n];
    let mut leaves = vec![None; n];
    for u in (0..n).filter(|&u| active[u] && !in_cycle[u]) {
        let mut best_in: Option<(usize, T)> = None;
        let mut best_out: Option<(usize, T)> = None;
        for &v in &cycle {
            if let Some(s) = w.get(u, v) {
                let cycle_edge = w.get(best[v].unwrap(), v).unwrap();
                let gain = s - cycle_edge;
                if best_in.is_none_or(|(_, b)| gain > b) {
                    best_in = Some((v, gain));
                }
            }
            if let Some(s) = w.get(v, u) {
                if best_out.is_none_or(|(_, b)| s > b) {
                    best_out = Some((v, s));
                }
            }
        }
        enters[u] = best_in.map(|(v, _)| v);
        leaves[u] = best_out.map(|(v, _)| v);
        w.set(u, rep, best_in.map(|(_, s)| s));
        w.set(rep, u, best_out.map(|(_, s)| s));
    }

    let mut contracted_active = active.clone();
    for &v in &cycle[1..] {
        contracted_active[v] = false;
    }
    let contracted = solve(w, root, contracted_active)?;

    let mut out = contracted.clone();
    let entry_parent = contracted[rep].expect("contracted cycle has a parent");
    let kicked = enters[entry_parent].expect("entry edge recorded");
    for &v in &cycle {
        out[v] = if v == kicked { Some(entry_parent) } else { best[v] };
    }
    for u in (0..n).filter(|&u| active[u] && !in_cycle[u]) {
        if contracted[u] == Some(rep) {
            out[u] = leaves[u];
        }
    }
    Ok(out)
}

/// Some cycle among the greedy parent pointers, sorted ascending.
fn find_cycle(best: &[Option<usize>], active: &[bool]) -> Option<Vec<usize>> {
    let n = best.len();
    // 0 = unvisited, 1 = on current walk, 2 = finished
    let mut state = vec![0u8; n];
    for start in 0..n {
        if !active[start] || state[start] != 0 {
            continue;
        }
        let mut walk = Vec::new();
        let mut v = start;
        loop {
            if state[v] == 1 {
                let pos = walk.iter().position(|&x| x == v).unwrap();
                let mut cycle = walk[pos..].to_vec();
                cycle.sort_unstable();
                return Some(cycle);
            }
            if state[v] == 2 {
                break;
            }
            state[v] = 1;
            walk.push(v);
            match best[v] {
                Some(p) => v = p,
                None => break,
            }
        }
        for x in walk {
            state[x] = 2;
        }
    }
    None
}
