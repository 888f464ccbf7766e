//! The model at a fixed particle number: parity-blocked bases, term
//! matrices and ground-state observables at a parameter point.

use alloc::vec::Vec;

use crate::eigen::{ground_subspace_from, GroundSolution, SolverConfig, SolverError};
use crate::fock::{FockError, Parity, SectorBasis};
use crate::hamiltonian::{HamiltonianParams, ModelTerms, SparseOperator};
use crate::rdm::{energy_from_coords, Coords, Ensemble, RdmAccumulator, Rdms};
use crate::symmetry::OrbitBasis;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Blocking {
    /// One basis with every `N`-particle state.
    Full,
    /// Separate even and odd upper-level parity sectors (valid for `ε = 0`).
    Parity,
    /// The slot-permutation symmetric part of each parity sector. Exact
    /// whenever the ground level is symmetric; much smaller at large `N`.
    Symmetric,
}

#[derive(Debug, Clone)]
pub struct Sector {
    /// The Fock sector. Vectors live on it unless `orbits` is set.
    pub basis: SectorBasis,
    pub orbits: Option<OrbitBasis>,
    pub terms: ModelTerms,
}

impl Sector {
    /// Dimension of the space the terms act on.
    pub fn dim(&self) -> usize {
        self.terms.dim()
    }

    /// Fock-sector amplitudes of a vector on this sector's space.
    pub fn lift(&self, v: &[f64]) -> Vec<f64> {
        match &self.orbits {
            Some(o) => o.lift(v, &self.basis),
            None => v.to_vec(),
        }
    }

    /// Projection of a Fock-sector vector onto this sector's space.
    pub fn restrict(&self, v: &[f64]) -> Vec<f64> {
        match &self.orbits {
            Some(o) => o.restrict(v, &self.basis),
            None => v.to_vec(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Model {
    n: usize,
    blocking: Blocking,
    sectors: Vec<Sector>,
}

/// How a degenerate ground level is turned into one state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum StateSelection {
    /// Equal-weight mixture of the whole ground level.
    #[default]
    Ensemble,
    /// The first returned ground vector only.
    Pure,
}

/// Ground level of every sector merged into one spectrum.
#[derive(Debug, Clone)]
pub struct ModelSolution {
    pub params: HamiltonianParams,
    pub sectors: Vec<GroundSolution>,
    /// Lowest energies over all sectors, ascending, with their sector.
    pub levels: Vec<(f64, usize)>,
    pub degeneracy: usize,
    pub gap: Option<f64>,
}

impl ModelSolution {
    pub fn ground_energy(&self) -> f64 {
        self.levels[0].0
    }

    /// `(sector, vector)` of each ground vector, ordered as in `levels`.
    pub fn ground_members(&self) -> Vec<(usize, &[f64])> {
        let mut taken = alloc::vec![0usize; self.sectors.len()];
        let mut out = Vec::with_capacity(self.degeneracy);
        for &(_, s) in self.levels.iter().take(self.degeneracy) {
            out.push((s, self.sectors[s].vectors[taken[s]].as_slice()));
            taken[s] += 1;
        }
        out
    }

    /// Ground vectors grouped by sector with their share of the total weight.
    fn grouped(&self, selection: StateSelection) -> Vec<(usize, f64, Vec<Vec<f64>>)> {
        let members = self.ground_members();
        let members = match selection {
            StateSelection::Ensemble => members,
            StateSelection::Pure => members.into_iter().take(1).collect(),
        };
        let total = members.len() as f64;
        let mut groups: Vec<(usize, f64, Vec<Vec<f64>>)> = Vec::new();
        for (s, v) in members {
            match groups.iter_mut().find(|g| g.0 == s) {
                Some(g) => {
                    g.1 += 1.0 / total;
                    g.2.push(v.to_vec());
                }
                None => groups.push((s, 1.0 / total, alloc::vec![v.to_vec()])),
            }
        }
        groups
    }

    /// Splitting of the two lowest levels, whether or not they count as
    /// degenerate.
    pub fn splitting(&self) -> Option<f64> {
        self.levels.get(1).map(|l| l.0 - self.levels[0].0)
    }

    pub fn matvecs(&self) -> usize {
        self.sectors.iter().map(|s| s.matvecs).sum()
    }
}

/// Ground-state observables at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointObservables {
    pub params: HamiltonianParams,
    pub energy: f64,
    pub degeneracy: usize,
    pub gap: Option<f64>,
    pub coords: Coords,
    pub exp_e: f64,
    pub lambda_d: Option<f64>,
    pub lambda_g: Option<f64>,
}

impl Model {
    pub fn new(n: usize, blocking: Blocking) -> Result<Self, FockError> {
        let parities: &[Option<Parity>] = match blocking {
            Blocking::Full => &[None],
            Blocking::Parity | Blocking::Symmetric => &[Some(Parity::Even), Some(Parity::Odd)],
        };
        let mut sectors = Vec::with_capacity(parities.len());
        for &p in parities {
            let basis = SectorBasis::enumerate(n, p)?;
            let (orbits, terms) = if blocking == Blocking::Symmetric {
                let o = OrbitBasis::enumerate(n, p)?;
                let t = ModelTerms::build(&o);
                (Some(o), t)
            } else {
                let t = ModelTerms::build(&basis);
                (None, t)
            };
            sectors.push(Sector { basis, orbits, terms });
        }
        Ok(Model {
            n,
            blocking,
            sectors,
        })
    }

    pub fn particles(&self) -> usize {
        self.n
    }

    pub fn blocking(&self) -> Blocking {
        self.blocking
    }

    pub fn sectors(&self) -> &[Sector] {
        &self.sectors
    }

    pub fn dim(&self) -> usize {
        self.sectors.iter().map(Sector::dim).sum()
    }

    pub fn assemble(&self, params: &HamiltonianParams) -> Vec<SparseOperator> {
        self.sectors.iter().map(|s| s.terms.assemble(params)).collect()
    }

    /// Ground level at `params`. `guesses` holds optional start vectors per
    /// sector, typically the solution at a neighbouring point.
    pub fn solve(
        &self,
        params: &HamiltonianParams,
        cfg: &SolverConfig,
        guesses: Option<&ModelSolution>,
    ) -> Result<ModelSolution, SolverError> {
        assert!(
            params.epsilon == 0.0 || self.blocking == Blocking::Full,
            "parity blocking requires epsilon = 0"
        );
        let mut sectors = Vec::with_capacity(self.sectors.len());
        for (i, s) in self.sectors.iter().enumerate() {
            let h = s.terms.assemble(params);
            let g: &[Vec<f64>] = match guesses {
                Some(prev) => {
                    let p = &prev.sectors[i];
                    &p.vectors[..p.vectors.len().min(cfg.k.max(2))]
                }
                None => &[],
            };
            sectors.push(ground_subspace_from(&h, cfg, g)?);
        }
        let mut levels: Vec<(f64, usize)> = sectors
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.energies.iter().map(move |&e| (e, i)))
            .collect();
        levels.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let e0 = levels[0].0;
        let degeneracy = levels.iter().filter(|l| l.0 - e0 <= cfg.deg_tol).count();
        let gap = levels.get(degeneracy).map(|l| l.0 - e0);
        Ok(ModelSolution {
            params: *params,
            sectors,
            levels,
            degeneracy,
            gap,
        })
    }

    /// Expectations of the terms in the selected ground state.
    pub fn coords(&self, sol: &ModelSolution, selection: StateSelection) -> (Coords, f64) {
        let mut c = Coords::default();
        let mut e = 0.0;
        for (s, w, vs) in sol.grouped(selection) {
            let sector = &self.sectors[s];
            let ens = Ensemble::with_dim(sector.dim(), &vs, None).expect("eigenvectors are normalized");
            let (cs, es) = crate::rdm::expectation_coords(&sector.terms, &ens);
            c = c.scaled_add(w, &cs);
            e += w * es;
        }
        (c, e)
    }

    /// `¹D`, `²D`, `G̃` and the signatures of the selected ground state.
    pub fn rdms(&self, sol: &ModelSolution, selection: StateSelection) -> Rdms {
        let mut acc = RdmAccumulator::new(2 * self.n);
        for (s, w, vs) in sol.grouped(selection) {
            let sector = &self.sectors[s];
            let vs: Vec<Vec<f64>> = match sector.orbits {
                Some(_) => vs.iter().map(|v| sector.lift(v)).collect(),
                None => vs,
            };
            let ens = Ensemble::with_dim(sector.basis.len(), &vs, None).expect("eigenvectors are normalized");
            acc.add(w, &sector.basis, &ens);
        }
        acc.finish()
    }

    pub fn observables(
        &self,
        sol: &ModelSolution,
        selection: StateSelection,
        with_rdms: bool,
    ) -> PointObservables {
        let (coords, exp_e) = self.coords(sol, selection);
        let (lambda_d, lambda_g) = if with_rdms {
            let r = self.rdms(sol, selection);
            (Some(r.lambda_d), Some(r.lambda_g))
        } else {
            (None, None)
        };
        PointObservables {
            params: sol.params,
            energy: sol.ground_energy(),
            degeneracy: sol.degeneracy,
            gap: sol.gap,
            coords,
            exp_e,
            lambda_d,
            lambda_g,
        }
    }
}

impl PointObservables {
    /// Hellmann–Feynman derivative `⟨Ψ|H(d)|Ψ⟩` along direction `d` in
    /// parameter space.
    pub fn directional_derivative(&self, d: &HamiltonianParams) -> f64 {
        energy_from_coords(d, &self.coords, self.exp_e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parity_blocks_reproduce_full_basis() {
        let cfg = SolverConfig::default();
        let full = Model::new(4, Blocking::Full).unwrap();
        let blocked = Model::new(4, Blocking::Parity).unwrap();
        assert_eq!(full.dim(), blocked.dim());
        for p in [
            HamiltonianParams::two_body(0.3, -0.8, 0.5),
            HamiltonianParams::two_body(-1.0, -2.0, 0.0),
            HamiltonianParams::two_body(0.0, 0.0, 1.0),
        ] {
            let a = full.solve(&p, &cfg, None).unwrap();
            let b = blocked.solve(&p, &cfg, None).unwrap();
            assert!((a.ground_energy() - b.ground_energy()).abs() < 1e-10);
            assert_eq!(a.degeneracy, b.degeneracy);
            let oa = full.observables(&a, StateSelection::Ensemble, true);
            let ob = blocked.observables(&b, StateSelection::Ensemble, true);
            assert!((oa.lambda_d.unwrap() - ob.lambda_d.unwrap()).abs() < 1e-9);
            assert!((oa.lambda_g.unwrap() - ob.lambda_g.unwrap()).abs() < 1e-9);
            assert!(oa.coords.distance(&ob.coords) < 1e-9);
            let e = energy_from_coords(&p, &ob.coords, ob.exp_e);
            assert!((e - b.ground_energy()).abs() < 1e-9);
        }
    }

    #[test]
    fn symmetric_blocks_reproduce_ground_level() {
        let cfg = SolverConfig::default();
        for (n, count) in [(4, 60), (6, 20)] {
            let blocked = Model::new(n, Blocking::Parity).unwrap();
            let sym = Model::new(n, Blocking::Symmetric).unwrap();
            assert!(sym.dim() < blocked.dim());
            for p in crate::sampling::sphere_directions(count, 21) {
                let a = blocked.solve(&p, &cfg, None).unwrap();
                let b = sym.solve(&p, &cfg, None).unwrap();
                assert!((a.ground_energy() - b.ground_energy()).abs() < 1e-9, "{p:?}");
                if a.degeneracy == 1 {
                    assert_eq!(b.degeneracy, 1);
                    let oa = blocked.observables(&a, StateSelection::Ensemble, true);
                    let ob = sym.observables(&b, StateSelection::Ensemble, true);
                    assert!(oa.coords.distance(&ob.coords) < 1e-8);
                    assert!((oa.lambda_d.unwrap() - ob.lambda_d.unwrap()).abs() < 1e-8);
                    assert!((oa.lambda_g.unwrap() - ob.lambda_g.unwrap()).abs() < 1e-8);
                }
            }
        }
    }
}
