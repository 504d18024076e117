//! Truncated bosonic Fock space: occupation vectors with total occupation
//! at most `N`, and the ladder operators acting on them.

use std::collections::HashMap;

use num_complex::Complex64;

use super::sparse::CsrMatrix;

#[derive(Debug, Clone)]
pub struct FockBasis {
    k: usize,
    cutoff: u32,
    states: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

impl FockBasis {
    /// All occupation vectors of `k` modes with `Σn ≤ cutoff`, ordered by
    /// total occupation and then lexicographically descending, so the vacuum
    /// is index 0 and the single-quantum state of mode `i` is index `i + 1`.
    pub fn new(k: usize, cutoff: u32) -> Self {
        let mut states = Vec::new();
        for shell in 0..=cutoff {
            let mut current = vec![0u32; k];
            push_shell(&mut states, &mut current, 0, shell);
        }
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Self { k, cutoff, states, index }
    }

    pub fn modes(&self) -> usize {
        self.k
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, i: usize) -> &[u32] {
        &self.states[i]
    }

    pub fn states(&self) -> &[Vec<u32>] {
        &self.states
    }

    pub fn index_of(&self, occupation: &[u32]) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    /// Index of the state with one quantum in `mode`.
    pub fn single(&self, mode: usize) -> Option<usize> {
        let mut occ = vec![0; self.k];
        occ[mode] = 1;
        self.index_of(&occ)
    }
}

fn push_shell(out: &mut Vec<Vec<u32>>, current: &mut Vec<u32>, mode: usize, remaining: u32) {
    if mode + 1 == current.len() {
        current[mode] = remaining;
        out.push(current.clone());
        current[mode] = 0;
        return;
    }
    if current.is_empty() {
        if remaining == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for n in (0..=remaining).rev() {
        current[mode] = n;
        push_shell(out, current, mode + 1, remaining - n);
    }
    current[mode] = 0;
}

/// `C(N + k, k)`, the dimension of the truncated space.
pub fn fock_dimension(k: usize, cutoff: u32) -> u128 {
    let n = cutoff as u128;
    (1..=k as u128).fold(1u128, |acc, i| acc * (n + i) / i)
}

/// Annihilation and creation matrices for every mode.
#[derive(Debug, Clone)]
pub struct Ladder {
    pub a: Vec<CsrMatrix>,
    pub adag: Vec<CsrMatrix>,
}

pub fn ladder_matrices(basis: &FockBasis) -> Ladder {
    let dim = basis.dim();
    let a: Vec<CsrMatrix> = (0..basis.modes())
        .map(|i| {
            let trip = basis
                .states()
                .iter()
                .enumerate()
                .filter(|(_, s)| s[i] > 0)
                .map(|(col, s)| {
                    let mut lower = s.clone();
                    lower[i] -= 1;
                    let row = basis.index_of(&lower).expect("lowered state is in the basis");
                    (row, col, Complex64::new((s[i] as f64).sqrt(), 0.0))
                })
                .collect();
            CsrMatrix::from_triplets(dim, dim, trip)
        })
        .collect();
    let adag = a.iter().map(CsrMatrix::adjoint).collect();
    Ladder { a, adag }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions_match_binomial() {
        for k in 1..=4 {
            for n in 0..=6 {
                let b = FockBasis::new(k, n);
                assert_eq!(b.dim() as u128, fock_dimension(k, n));
                for (i, s) in b.states().iter().enumerate() {
                    assert_eq!(b.index_of(s), Some(i));
                    assert!(s.iter().sum::<u32>() <= n);
                }
            }
        }
        assert_eq!(fock_dimension(9, 8), 24310);
    }

    #[test]
    fn ordering_puts_vacuum_and_single_quanta_first() {
        let b = FockBasis::new(3, 2);
        assert_eq!(b.state(0), &[0, 0, 0]);
        for i in 0..3 {
            assert_eq!(b.single(i), Some(i + 1));
        }
    }

    #[test]
    fn single_mode_textbook_elements() {
        let b = FockBasis::new(1, 2);
        let l = ladder_matrices(&b);
        let s2 = 2f64.sqrt();
        let expected = [[0.0, 1.0, 0.0], [0.0, 0.0, s2], [0.0, 0.0, 0.0]];
        for (r, row) in expected.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                assert_eq!(l.a[0].get(r, c), Complex64::new(*v, 0.0));
                assert_eq!(l.adag[0].get(c, r), Complex64::new(*v, 0.0));
            }
        }
    }

    #[test]
    fn commutators_below_top_shell() {
        let b = FockBasis::new(3, 5);
        let l = ladder_matrices(&b);
        let top = b.cutoff();
        for i in 0..3 {
            for j in 0..3 {
                let c = l.a[i].matmul(&l.adag[j]).sub(&l.adag[j].matmul(&l.a[i]));
                for (r, col, v) in c.triplets() {
                    let below = b.state(col).iter().sum::<u32>() < top;
                    if below {
                        let want = if i == j && r == col { 1.0 } else { 0.0 };
                        assert!((v - Complex64::new(want, 0.0)).norm() < 1e-14, "[a{i}, a{j}†] at ({r},{col}) = {v}");
                    }
                }
                if i == j {
                    for col in 0..b.dim() {
                        if b.state(col).iter().sum::<u32>() < top {
                            assert!((c.get(col, col) - 1.0).norm() < 1e-14);
                        }
                    }
                }
                let aa = l.a[i].matmul(&l.a[j]).sub(&l.a[j].matmul(&l.a[i]));
                assert!(aa.max_abs() < 1e-14);
                let cc = l.adag[i].matmul(&l.adag[j]).sub(&l.adag[j].matmul(&l.adag[i]));
                assert!(cc.max_abs() < 1e-14);
            }
        }
    }
}
