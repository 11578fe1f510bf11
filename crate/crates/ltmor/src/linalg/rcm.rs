//! Reverse Cuthill-McKee ordering.
//!
//! Profile factorizations pay for the distance between a row's first nonzero
//! and the diagonal; RCM keeps graph neighbors close in the numbering and so
//! keeps that profile near the grid bandwidth.

use super::sparse::SparseSymMatrix;

/// Returns perm such that perm[new_index] = old_index, covering every node
/// even when the adjacency graph is disconnected.
pub fn reverse_cuthill_mckee(a: &SparseSymMatrix) -> Vec<usize> {
    let n = a.dim();
    let degree = |i: usize| a.row_ptr()[i + 1] - a.row_ptr()[i];
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = std::collections::VecDeque::new();
    let mut neighbors = Vec::new();

    loop {
        let start = match pseudo_peripheral(a, &visited) {
            Some(s) => s,
            None => break,
        };
        visited[start] = true;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            order.push(i);
            neighbors.clear();
            for k in a.row_ptr()[i]..a.row_ptr()[i + 1] {
                let j = a.col_idx()[k];
                if j != i && !visited[j] {
                    visited[j] = true;
                    neighbors.push(j);
                }
            }
            neighbors.sort_unstable_by_key(|&j| (degree(j), j));
            queue.extend(neighbors.iter().copied());
        }
    }
    order.reverse();
    order
}

/// BFS twice from a minimum-degree seed to land near the far end of the
/// component; a long level structure keeps levels, and hence the profile,
/// narrow.
fn pseudo_peripheral(a: &SparseSymMatrix, visited: &[bool]) -> Option<usize> {
    let n = a.dim();
    let degree = |i: usize| a.row_ptr()[i + 1] - a.row_ptr()[i];
    let mut seed = None;
    for i in 0..n {
        if !visited[i] && (seed.is_none() || degree(i) < degree(seed.unwrap())) {
            seed = Some(i);
        }
    }
    let mut s = seed?;
    for _ in 0..2 {
        let far = farthest_min_degree(a, s, visited);
        if far == s {
            break;
        }
        s = far;
    }
    Some(s)
}

fn farthest_min_degree(a: &SparseSymMatrix, start: usize, visited: &[bool]) -> usize {
    let n = a.dim();
    let degree = |i: usize| a.row_ptr()[i + 1] - a.row_ptr()[i];
    let mut dist = vec![usize::MAX; n];
    dist[start] = 0;
    let mut queue = std::collections::VecDeque::from([start]);
    let mut best = start;
    while let Some(i) = queue.pop_front() {
        for k in a.row_ptr()[i]..a.row_ptr()[i + 1] {
            let j = a.col_idx()[k];
            if j != i && !visited[j] && dist[j] == usize::MAX {
                dist[j] = dist[i] + 1;
                queue.push_back(j);
                let better = dist[j] > dist[best]
                    || (dist[j] == dist[best]
                        && (degree(j), j) < (degree(best), best));
                if better {
                    best = j;
                }
            }
        }
    }
    best
}
