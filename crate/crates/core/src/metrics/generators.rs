use alloc::vec::Vec;

use rand::Rng as _;

use crate::graph::Graph;
use crate::{rng, Error, Result};

/// Uniform random graph with exactly `n` nodes and `m` edges.
pub fn erdos_renyi_gnm(n: usize, m: usize, seed: u64) -> Result<Graph> {
    let total = n * n.saturating_sub(1) / 2;
    if m > total {
        return Err(Error::EdgeCountOutOfRange { m, max: total });
    }
    let mut rng = rng::seeded(seed);
    let mut picks: Vec<usize> = rand::seq::index::sample(&mut rng, total, m).into_vec();
    picks.sort_unstable();
    // offset(i) = number of pairs (a, b), a < b, with a < i
    let offset = |i: usize| i * n - i * (i + 1) / 2;
    let mut g = Graph::new(n);
    let mut row = 0;
    for k in picks {
        while offset(row + 1) <= k {
            row += 1;
        }
        let col = row + 1 + (k - offset(row));
        g.add_edge(row, col, 1.0);
    }
    Ok(g)
}

/// Watts-Strogatz graph: ring lattice where every node links to its `k/2`
/// nearest neighbours on each side, then each lattice edge `(i, i + j)` is
/// rewired to a uniformly chosen new endpoint with probability `p`.
pub fn watts_strogatz(n: usize, k: usize, p: f64, seed: u64) -> Result<Graph> {
    if k >= n || !k.is_multiple_of(2) {
        return Err(Error::InvalidParameter("watts-strogatz needs an even k < n".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter("rewiring probability outside [0, 1]".into()));
    }
    let mut g = Graph::new(n);
    for j in 1..=k / 2 {
        for i in 0..n {
            g.add_edge(i, (i + j) % n, 1.0);
        }
    }
    let mut rng = rng::seeded(seed);
    for j in 1..=k / 2 {
        for u in 0..n {
            let v = (u + j) % n;
            if rng.gen::<f64>() < p && g.has_edge(u, v) && g.degree(u) < n - 1 {
                let mut w = rng.gen_range(0..n);
                while w == u || g.has_edge(u, w) {
                    w = rng.gen_range(0..n);
                }
                g.remove_edge(u, v);
                g.add_edge(u, w, 1.0);
            }
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gnm_extremes() {
        let k5 = erdos_renyi_gnm(5, 10, 3).unwrap();
        assert_eq!(k5.edge_count(), 10);
        assert!(k5.degrees().iter().all(|&d| d == 4));
        assert_eq!(erdos_renyi_gnm(5, 0, 3).unwrap().edge_count(), 0);
        assert_eq!(erdos_renyi_gnm(5, 11, 3), Err(Error::EdgeCountOutOfRange { m: 11, max: 10 }));
    }

    #[test]
    fn gnm_mean_degree_is_exact() {
        let mut total = 0.0;
        for seed in 0..1000 {
            let g = erdos_renyi_gnm(100, 300, seed).unwrap();
            assert_eq!(g.edge_count(), 300);
            total += g.degrees().iter().sum::<usize>() as f64 / 100.0;
        }
        assert!((total / 1000.0 - 6.0).abs() < 0.01);
    }

    #[test]
    fn gnm_covers_all_pairs() {
        // every dyad of a 6-node graph shows up across seeds
        let mut seen = [[false; 6]; 6];
        for seed in 0..200 {
            for (u, v) in erdos_renyi_gnm(6, 3, seed).unwrap().edges() {
                seen[u][v] = true;
            }
        }
        for (u, row) in seen.iter().enumerate() {
            for (v, &hit) in row.iter().enumerate().skip(u + 1) {
                assert!(hit, "pair ({u}, {v}) never drawn");
            }
        }
    }

    #[test]
    fn ws_preserves_edge_count() {
        let g = watts_strogatz(200, 6, 0.1, 9).unwrap();
        assert_eq!(g.edge_count(), 600);
        let lattice = watts_strogatz(10, 4, 0.0, 9).unwrap();
        assert!(lattice.degrees().iter().all(|&d| d == 4));
    }
}
