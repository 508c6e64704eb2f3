use serde::{Deserialize, Serialize};

use super::{Context, Estimate, MonteCarloPlan, Quantity};
use crate::error::{domain, Result};
use crate::lattice::LatticeIndex;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubadditivityReport {
    pub m: usize,
    pub blocks_per_axis: usize,
    /// `(Phi(A) - sum_i Phi(A_i)) / n^{d-1}`.
    pub defect: Estimate,
    pub min_defect: i64,
    /// Sample indices with a negative defect.
    pub violations: Vec<u64>,
}

/// Block of every vertex: the base is cut into `floor(n/m)` runs per axis,
/// the last run absorbing the remainder.
pub(crate) fn vertex_blocks(lattice: &LatticeIndex, m: usize) -> (usize, Vec<usize>) {
    let spec = lattice.spec();
    let k = (spec.n / m).max(1);
    let blocks = (0..lattice.num_vertices())
        .map(|v| {
            (0..spec.d - 1).rev().fold(0, |acc, axis| {
                let run = (lattice.coordinate(v, axis) / m).min(k - 1);
                acc * k + run
            })
        })
        .collect();
    (k, blocks)
}

pub fn subadditivity_defect(plan: &MonteCarloPlan, m: usize) -> Result<SubadditivityReport> {
    if plan.quantity != Quantity::Phi {
        return domain("subadditivity is defined for the bottom-to-top flow");
    }
    if m == 0 || m > plan.spec.n {
        return domain(format!("block side {m} outside [1, {}]", plan.spec.n));
    }
    let ctx = Context::new(plan)?;
    let lattice = &ctx.lattice;
    let (k, blocks) = vertex_blocks(lattice, m);
    let count = k.pow(plan.spec.d as u32 - 1);
    let edge_block: Vec<Option<usize>> = (0..lattice.num_edges())
        .map(|e| {
            let (u, v) = lattice.endpoints(e);
            (blocks[u] == blocks[v]).then_some(blocks[u])
        })
        .collect();
    let defects = ctx.run(|s, i| {
        let field = s.field(i);
        let whole = s.flow.solve(&field.values);
        let mut parts = 0;
        let mut caps = vec![0; field.values.len()];
        for b in 0..count {
            for (e, c) in caps.iter_mut().enumerate() {
                *c = if edge_block[e] == Some(b) { field.values[e] } else { 0 };
            }
            parts += s.flow.solve(&caps);
        }
        Ok(whole - parts)
    })?;
    let scale = (plan.spec.n as f64).powi(plan.spec.d as i32 - 1);
    let scaled: Vec<f64> = defects.iter().map(|&d| d as f64 / scale).collect();
    Ok(SubadditivityReport {
        m,
        blocks_per_axis: k,
        defect: Estimate::from_samples(&scaled, plan.master_seed),
        min_defect: defects.iter().copied().min().unwrap_or(0),
        violations: defects
            .iter()
            .enumerate()
            .filter(|(_, &d)| d < 0)
            .map(|(i, _)| i as u64)
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::tests::{dist, spec};
    use super::*;

    #[test]
    fn one_block_has_no_defect() {
        let plan = MonteCarloPlan::new(Quantity::Phi, spec(2, 4, 6), dist(1, 2, 1, 2), 50, 2);
        let r = subadditivity_defect(&plan, 4).unwrap();
        assert_eq!(r.blocks_per_axis, 1);
        assert_eq!(r.defect.mean, 0.0);
    }

    #[test]
    fn uniform_field_splits_exactly() {
        // flat cuts of disjoint blocks partition the flat cut of the whole
        let plan = MonteCarloPlan::new(Quantity::Phi, spec(3, 4, 3), dist(2, 3, 1, 1), 5, 2);
        let r = subadditivity_defect(&plan, 2).unwrap();
        assert_eq!(r.blocks_per_axis, 2);
        assert_eq!((r.defect.mean, r.min_defect), (0.0, 0));
    }

    #[test]
    fn defect_is_nonnegative() {
        for (s, m) in [(spec(2, 8, 8), 4), (spec(3, 4, 4), 2), (spec(2, 6, 5), 1)] {
            let plan = MonteCarloPlan::new(Quantity::Phi, s, dist(1, 3, 1, 2), 100, 7);
            let r = subadditivity_defect(&plan, m).unwrap();
            assert!(r.violations.is_empty());
            assert!(r.min_defect >= 0);
        }
    }

    #[test]
    fn blocks_partition_the_base() {
        let l = LatticeIndex::new(spec(3, 5, 1)).unwrap();
        let (k, blocks) = vertex_blocks(&l, 2);
        assert_eq!(k, 2);
        let mut sizes = [0; 4];
        for v in l.layer(0) {
            sizes[blocks[v]] += 1;
        }
        assert_eq!(sizes, [4, 8, 8, 16]);
    }

    #[test]
    fn rejects_bad_side() {
        let plan = MonteCarloPlan::new(Quantity::Phi, spec(2, 4, 6), dist(1, 2, 1, 2), 5, 2);
        assert!(subadditivity_defect(&plan, 0).is_err());
        assert!(subadditivity_defect(&plan, 5).is_err());
    }
}
