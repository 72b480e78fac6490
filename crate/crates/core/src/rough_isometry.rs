//! Graph distances, the `K`-rough-isometry predicate and binary trees.

use std::cmp::Ordering;
use std::collections::VecDeque;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Weight, WeightedGraph};
use crate::scalar::Scalar;

/// All-pairs hop distances; `None` marks a disconnected pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathMetric {
    n: usize,
    dist: Vec<Option<u32>>,
}

impl PathMetric {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, x: usize, y: usize) -> Option<u32> {
        self.dist[x * self.n + y]
    }

    fn real(&self, x: usize, y: usize) -> f64 {
        self.get(x, y).map_or(f64::INFINITY, f64::from)
    }
}

/// BFS from every vertex over edges of positive weight; self-loops are
/// irrelevant to distances.
pub fn path_metric<T: Weight>(g: &WeightedGraph<T>) -> PathMetric {
    let n = g.num_vertices();
    let dist = (0..n)
        .into_par_iter()
        .flat_map_iter(|s| {
            let mut d = vec![None; n];
            d[s] = Some(0u32);
            let mut queue = VecDeque::from([s]);
            while let Some(x) = queue.pop_front() {
                let dx = d[x].expect("queued vertices are reached");
                for &(y, _) in g.neighbors(x) {
                    if d[y].is_none() {
                        d[y] = Some(dx + 1);
                        queue.push_back(y);
                    }
                }
            }
            d
        })
        .collect();
    PathMetric { n, dist }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witness {
    /// `d_X(a,b)/K − K ≤ d_Y(f(a),f(b)) ≤ K d_X(a,b) + K` fails.
    Pair {
        a: usize,
        b: usize,
        d_source: Option<u32>,
        d_target: Option<u32>,
    },
    /// No `x` with `d_Y(f(x), y) ≤ K`.
    Uncovered { y: usize, nearest: Option<u32> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoughIsometryReport {
    #[serde(rename = "K")]
    pub k: f64,
    pub holds: bool,
    /// The largest violation; ties go to the lexicographically smallest
    /// pair, and pairs precede uncovered targets.
    pub witness: Option<Witness>,
    pub violation: f64,
}

#[derive(Clone, Copy)]
struct Violation {
    amount: f64,
    key: (u8, usize, usize),
}

impl Violation {
    fn better(self, other: Self) -> Self {
        match self.amount.partial_cmp(&other.amount).unwrap_or(Ordering::Equal) {
            Ordering::Greater => self,
            Ordering::Less => other,
            Ordering::Equal => {
                if self.key <= other.key {
                    self
                } else {
                    other
                }
            }
        }
    }
}

/// Amount by which condition (distortion) fails; `≤ 0` when it holds.
fn pair_violation(dx: f64, dy: f64, k: f64) -> f64 {
    let lower = if dx.is_infinite() && dy.is_infinite() {
        0.0
    } else {
        dx / k - k - dy
    };
    let upper = if dy.is_infinite() && dx.is_infinite() {
        0.0
    } else {
        dy - k * dx - k
    };
    lower.max(upper)
}

pub fn check_rough_isometry(x: &PathMetric, y: &PathMetric, map: &[usize], k: f64) -> Result<RoughIsometryReport> {
    if map.len() != x.len() {
        return Err(Error::PartialMap(format!("map has {} entries for {} vertices", map.len(), x.len())));
    }
    if let Some(a) = map.iter().position(|&t| t >= y.len()) {
        return Err(Error::PartialMap(format!("vertex {a} maps to {} of {}", map[a], y.len())));
    }
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::BadParameter(format!("K must be positive, got {k}")));
    }
    let none = Violation {
        amount: f64::NEG_INFINITY,
        key: (u8::MAX, usize::MAX, usize::MAX),
    };
    let pairs = (0..x.len())
        .into_par_iter()
        .map(|a| {
            ((a + 1)..x.len())
                .map(|b| Violation {
                    amount: pair_violation(x.real(a, b), y.real(map[a], map[b]), k),
                    key: (0, a, b),
                })
                .fold(none, Violation::better)
        })
        .reduce(|| none, Violation::better);
    let cover = (0..y.len())
        .into_par_iter()
        .map(|t| {
            let nearest = map.iter().map(|&s| y.real(s, t)).fold(f64::INFINITY, f64::min);
            Violation {
                amount: nearest - k,
                key: (1, t, 0),
            }
        })
        .reduce(|| none, Violation::better);
    let worst = pairs.better(cover);
    let holds = worst.amount <= 0.0;
    let witness = (!holds).then(|| match worst.key {
        (0, a, b) => Witness::Pair {
            a,
            b,
            d_source: x.get(a, b),
            d_target: y.get(map[a], map[b]),
        },
        (_, t, _) => Witness::Uncovered {
            y: t,
            nearest: map.iter().filter_map(|&s| y.get(s, t)).min(),
        },
    });
    Ok(RoughIsometryReport {
        k,
        holds,
        witness,
        violation: worst.amount.max(0.0),
    })
}

/// Complete binary tree of height `h` with unit weights; vertex `i` has
/// children `2i + 1` and `2i + 2`, the root is `0`.
pub fn binary_tree<T: Scalar>(h: u32) -> Result<WeightedGraph<T>> {
    if h == 0 || h > 24 {
        return Err(Error::BadParameter(format!("height must be in [1, 24], got {h}")));
    }
    let n = (1usize << (h + 1)) - 1;
    WeightedGraph::new(n, (1..n).map(|c| ((c - 1) / 2, c, T::one())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path(n: usize) -> WeightedGraph<f64> {
        WeightedGraph::new(n, (1..n).map(|i| (i - 1, i, 1.0))).unwrap()
    }

    fn depth(v: usize) -> u32 {
        (usize::BITS - (v + 1).leading_zeros()) - 1
    }

    fn tree_distance(mut u: usize, mut v: usize) -> u32 {
        let mut d = 0;
        while u != v {
            if u > v {
                u = (u - 1) / 2;
            } else {
                v = (v - 1) / 2;
            }
            d += 1;
        }
        d
    }

    #[test]
    fn metrics() {
        let m = path_metric(&path(3));
        assert_eq!(m.get(0, 2), Some(2));
        let k3 = WeightedGraph::new(3, [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0), (1, 1, 5.0)]).unwrap();
        let m = path_metric(&k3);
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(m.get(a, b), Some(u32::from(a != b)));
            }
        }
        let two = WeightedGraph::new(4, [(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert_eq!(path_metric(&two).get(0, 3), None);
    }

    #[test]
    fn collapse_path_to_point() {
        let x = path_metric(&path(5));
        let y = path_metric(&WeightedGraph::new(1, [(0, 0, 1.0)]).unwrap());
        let map = vec![0; 5];
        assert!(check_rough_isometry(&x, &y, &map, 2.0).unwrap().holds);
        let r = check_rough_isometry(&x, &y, &map, 1.0).unwrap();
        assert!(!r.holds);
        assert_eq!(
            r.witness,
            Some(Witness::Pair {
                a: 0,
                b: 4,
                d_source: Some(4),
                d_target: Some(0)
            })
        );
        assert_eq!(r.violation, 3.0);
        assert!(matches!(check_rough_isometry(&x, &y, &map[..4], 1.0), Err(Error::PartialMap(_))));
    }

    #[test]
    fn identity_and_cover() {
        let g = binary_tree::<f64>(3).unwrap();
        let m = path_metric(&g);
        let id: Vec<usize> = (0..g.num_vertices()).collect();
        assert!(check_rough_isometry(&m, &m, &id, 1.0).unwrap().holds);
        let into_root = vec![0; g.num_vertices()];
        let r = check_rough_isometry(&m, &m, &into_root, 10.0).unwrap();
        assert!(r.holds);
        // Distortion holds (6/2.5 − 2.5 < 0) but the leaves are 3 > K away.
        let r = check_rough_isometry(&m, &m, &into_root, 2.5).unwrap();
        assert!(!r.holds);
        assert_eq!(r.witness, Some(Witness::Uncovered { y: 7, nearest: Some(3) }));
        assert!((r.violation - 0.5).abs() < 1e-15);
        let r = check_rough_isometry(&m, &m, &into_root, 1.5).unwrap();
        assert_eq!(r.witness, Some(Witness::Pair { a: 7, b: 11, d_source: Some(6), d_target: Some(0) }));
    }

    #[test]
    fn trees() {
        let t1 = binary_tree::<f64>(1).unwrap();
        assert_eq!((t1.num_vertices(), t1.edges().len()), (3, 2));
        let t3 = binary_tree::<f64>(3).unwrap();
        assert_eq!(t3.num_vertices(), 15);
        assert_eq!(t3.neighbors(0).len(), 2);
        assert!((7..15).all(|v| t3.neighbors(v).len() == 1));
        for h in 1..8u32 {
            let t = binary_tree::<f64>(h).unwrap();
            let expect = 2.0 / (2.0 * (2f64.powi(h as i32 + 1) - 2.0));
            assert!((t.stationary()[0] - expect).abs() < 1e-15);
        }
        assert!(binary_tree::<f64>(0).is_err());
    }

    proptest! {
        #[test]
        fn tree_distances(h in 1u32..8, pairs in prop::collection::vec((0usize..1000, 0usize..1000), 100)) {
            let t = binary_tree::<f64>(h).unwrap();
            let n = t.num_vertices();
            let m = path_metric(&t);
            for (u, v) in pairs {
                let (u, v) = (u % n, v % n);
                prop_assert_eq!(m.get(u, v), Some(tree_distance(u, v)));
                let mut a = u;
                let mut b = v;
                while a != b {
                    if a > b { a = (a - 1) / 2 } else { b = (b - 1) / 2 }
                }
                prop_assert_eq!(tree_distance(u, v), depth(u) + depth(v) - 2 * depth(a));
            }
        }

        #[test]
        fn monotone_in_k(h in 1u32..5, seed in prop::collection::vec(0usize..64, 64), k in 0.2f64..6.0, dk in 0.0f64..3.0) {
            let t = binary_tree::<f64>(h).unwrap();
            let n = t.num_vertices();
            let m = path_metric(&t);
            let map: Vec<usize> = (0..n).map(|i| seed[i % seed.len()] % n).collect();
            let small = check_rough_isometry(&m, &m, &map, k).unwrap();
            let large = check_rough_isometry(&m, &m, &map, k + dk).unwrap();
            prop_assert!(!small.holds || large.holds);
            prop_assert!(large.violation <= small.violation);
        }

        #[test]
        fn metric_axioms(edges in prop::collection::vec((0usize..9, 0usize..9), 1..20)) {
            let mut seen = std::collections::BTreeSet::new();
            let edges: Vec<_> = edges.into_iter()
                .map(|(a, b)| (a.min(b), a.max(b)))
                .filter(|e| seen.insert(*e))
                .map(|(a, b)| (a, b, 1.0))
                .collect();
            let used: std::collections::BTreeSet<usize> = edges.iter().flat_map(|&(a, b, _)| [a, b]).collect();
            prop_assume!(used.len() == 9);
            let g = WeightedGraph::new(9, edges).unwrap();
            let m = path_metric(&g);
            for a in 0..9 {
                prop_assert_eq!(m.get(a, a), Some(0));
                for b in 0..9 {
                    prop_assert_eq!(m.get(a, b), m.get(b, a));
                    for c in 0..9 {
                        if let (Some(ab), Some(bc)) = (m.get(a, b), m.get(b, c)) {
                            prop_assert!(m.get(a, c).unwrap() <= ab + bc);
                        }
                    }
                }
            }
        }
    }
}
