//! Dense reference constructions for small systems.
//!
//! Everything here is built the slow way: ladder operators are Kronecker
//! products of 2×2 matrices on the full `2^modes` Fock space, and operator
//! strings are plain matrix products. Mode `m` is bit `m` of the Fock index,
//! so the last Kronecker factor is mode 0.

use nalgebra::{DMatrix, DVector};

/// Ladder operators on the full Fock space of `modes` spinless orbitals.
pub struct FockSpace {
    modes: usize,
    annihilators: Vec<DMatrix<f64>>,
}

fn kron_all(factors: &[DMatrix<f64>]) -> DMatrix<f64> {
    factors
        .iter()
        .fold(DMatrix::from_element(1, 1, 1.0), |acc, f| acc.kronecker(f))
}

impl FockSpace {
    pub fn new(modes: usize) -> Self {
        assert!(modes <= 10, "dense oracle limited to 10 modes");
        let id = DMatrix::<f64>::identity(2, 2);
        let z = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let lower = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let annihilators = (0..modes)
            .map(|k| {
                // factors from the highest mode down to mode 0
                let factors: Vec<DMatrix<f64>> = (0..modes)
                    .rev()
                    .map(|m| match m.cmp(&k) {
                        std::cmp::Ordering::Greater => id.clone(),
                        std::cmp::Ordering::Equal => lower.clone(),
                        std::cmp::Ordering::Less => z.clone(),
                    })
                    .collect();
                kron_all(&factors)
            })
            .collect();
        FockSpace { modes, annihilators }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        1 << self.modes
    }

    pub fn a(&self, k: usize) -> &DMatrix<f64> {
        &self.annihilators[k]
    }

    pub fn a_dag(&self, k: usize) -> DMatrix<f64> {
        self.annihilators[k].transpose()
    }

    /// Product of a written operator string; `(orbital, true)` is a creator.
    pub fn string(&self, ops: &[(usize, bool)]) -> DMatrix<f64> {
        let mut m = DMatrix::identity(self.dim(), self.dim());
        for &(o, create) in ops {
            let f = if create { self.a_dag(o) } else { self.a(o).clone() };
            m *= f;
        }
        m
    }

    /// Rows and columns of `full` on the given Fock indices.
    pub fn restrict(&self, full: &DMatrix<f64>, states: &[u32]) -> DMatrix<f64> {
        DMatrix::from_fn(states.len(), states.len(), |r, c| {
            full[(states[r] as usize, states[c] as usize)]
        })
    }

    pub fn embed(&self, v: &[f64], states: &[u32]) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        for (x, s) in v.iter().zip(states) {
            out[*s as usize] = *x;
        }
        out
    }
}

/// `N`-particle Fock indices on `2N` modes, ascending.
pub fn sector_states(n: usize) -> Vec<u32> {
    (0u32..1 << (2 * n))
        .filter(|s| s.count_ones() as usize == n)
        .collect()
}

/// The four model terms on the full Fock space of `2N` orbitals, written
/// out from their defining sums (0-based orbitals).
pub struct DenseTerms {
    pub e: DMatrix<f64>,
    pub lambda: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub g: DMatrix<f64>,
}

pub fn dense_terms(space: &FockSpace, n: usize) -> DenseTerms {
    assert_eq!(space.modes(), 2 * n);
    let d = space.dim();
    let mut e = DMatrix::zeros(d, d);
    let mut lambda = DMatrix::zeros(d, d);
    let mut w = DMatrix::zeros(d, d);
    let mut g = DMatrix::zeros(d, d);
    for p in 0..n {
        e += space.string(&[(p, true), (p, false)]);
        e -= space.string(&[(p + n, true), (p + n, false)]);
        for q in 0..n {
            lambda += space.string(&[(p, true), (q, true), (q + n, false), (p + n, false)]);
            lambda += space.string(&[(p + n, true), (q + n, true), (q, false), (p, false)]);
            w += space.string(&[(p + n, true), (q, true), (q + n, false), (p, false)]);
            g += space.string(&[(2 * p, true), (2 * p + 1, true), (2 * q + 1, false), (2 * q, false)]);
        }
    }
    DenseTerms { e, lambda, w, g }
}

impl DenseTerms {
    /// `εÊ + (λ/2)Λ̂ + (w/2)Ŵ − gĜ`.
    pub fn hamiltonian(&self, epsilon: f64, lambda: f64, w: f64, g: f64) -> DMatrix<f64> {
        &self.e * epsilon + &self.lambda * (0.5 * lambda) + &self.w * (0.5 * w) - &self.g * g
    }
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Jacobi rotations: slow, but independent of any tridiagonal reduction.
/// Returns ascending eigenvalues and the matching eigenvectors as columns.
pub fn jacobi_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Expectation values computed directly from ladder-operator products for
/// a state given on the `N`-particle sector.
pub struct DirectRdms {
    pub orbitals: usize,
    /// `⟨a†_i a_j⟩`, index `i·r + j`.
    pub one: Vec<f64>,
    /// `⟨a†_i a†_j a_l a_k⟩`, index `((i·r + j)·r + k)·r + l`.
    pub two: Vec<f64>,
    /// `⟨a†_i a_j a†_l a_k⟩`, same index layout.
    pub g: Vec<f64>,
}

impl DirectRdms {
    pub fn new(space: &FockSpace, psi: &DVector<f64>) -> Self {
        let r = space.modes();
        // hop[l][k] = a†_l a_k ψ ; pair[k][l] = a_l a_k ψ
        let mut hop = Vec::with_capacity(r * r);
        let mut pair = Vec::with_capacity(r * r);
        for l in 0..r {
            for k in 0..r {
                hop.push(space.a_dag(l) * (space.a(k) * psi));
            }
        }
        for k in 0..r {
            for l in 0..r {
                pair.push(space.a(l) * (space.a(k) * psi));
            }
        }
        let mut one = vec![0.0; r * r];
        for i in 0..r {
            for j in 0..r {
                one[i * r + j] = psi.dot(&hop[i * r + j]);
            }
        }
        let mut two = vec![0.0; r * r * r * r];
        let mut g = vec![0.0; r * r * r * r];
        for i in 0..r {
            for j in 0..r {
                for k in 0..r {
                    for l in 0..r {
                        let idx = ((i * r + j) * r + k) * r + l;
                        // ⟨ψ|a†_i a†_j a_l a_k|ψ⟩ = (a_j a_i ψ)·(a_l a_k ψ)
                        two[idx] = pair[i * r + j].dot(&pair[k * r + l]);
                        // ⟨ψ|a†_i a_j a†_l a_k|ψ⟩ = (a†_j a_i ψ)·(a†_l a_k ψ)
                        g[idx] = hop[j * r + i].dot(&hop[l * r + k]);
                    }
                }
            }
        }
        DirectRdms { orbitals: r, one, two, g }
    }

    pub fn one(&self, i: usize, j: usize) -> f64 {
        self.one[i * self.orbitals + j]
    }

    pub fn two(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let r = self.orbitals;
        self.two[((i * r + j) * r + k) * r + l]
    }

    pub fn g(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let r = self.orbitals;
        self.g[((i * r + j) * r + k) * r + l]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anticommutators() {
        let s = FockSpace::new(4);
        let id = DMatrix::<f64>::identity(16, 16);
        for i in 0..4 {
            for j in 0..4 {
                let ac = s.a(i) * s.a_dag(j) + s.a_dag(j) * s.a(i);
                let want = if i == j { id.clone() } else { DMatrix::zeros(16, 16) };
                assert_eq!(ac, want);
                let aa = s.a(i) * s.a(j) + s.a(j) * s.a(i);
                assert_eq!(aa, DMatrix::zeros(16, 16));
            }
        }
    }

    #[test]
    fn jacobi_matches_library() {
        let m = DMatrix::from_fn(7, 7, |i, j| ((i * 3 + j * 5) % 7) as f64 + ((j * 3 + i * 5) % 7) as f64);
        let (vals, vecs) = jacobi_eigen(&m);
        let lib = eigenvalues(&m);
        for (a, b) in vals.iter().zip(&lib) {
            assert!((a - b).abs() < 1e-10);
        }
        for c in 0..7 {
            let v = vecs.column(c);
            assert!((&m * v - v * vals[c]).norm() < 1e-10);
        }
    }

    #[test]
    fn pair_hopping_at_two_particles() {
        let s = FockSpace::new(4);
        let t = dense_terms(&s, 2);
        let states = sector_states(2);
        let h = s.restrict(&t.hamiltonian(0.0, 0.0, 0.0, 1.0), &states);
        let vals = eigenvalues(&h);
        assert!((vals[0] + 2.0).abs() < 1e-12);
    }
}
