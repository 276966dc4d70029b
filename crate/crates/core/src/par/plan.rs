use serde::{Deserialize, Serialize};

use super::{
    fit_ranks, grid_cost, predicted_io, strategy_cost, CostEstimate, Dims, LocalDomain, Machine, ParError,
    ProcessorGrid, Strategy,
};

/// Everything decided before execution: the grid, each rank's domain and
/// the modelled costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub dims: Dims,
    pub machine: Machine,
    pub grid: ProcessorGrid,
    pub domain: LocalDomain,
    /// Lower-bound words per rank for the ideal domain.
    pub predicted_q: f64,
    /// Words per rank actually exchanged between ranks under `grid`.
    pub inter_rank_words: f64,
    pub costs: Vec<CostEstimate>,
}

pub fn plan(dims: &Dims, machine: &Machine) -> Result<Plan, ParError> {
    machine.validate()?;
    machine.check_fits(dims)?;
    let (grid, domain) = fit_ranks(dims, machine);
    let costs = Strategy::ALL
        .iter()
        .map(|&s| strategy_cost(s, dims, machine))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Plan {
        dims: *dims,
        machine: *machine,
        grid,
        domain,
        predicted_q: predicted_io(dims, machine)?,
        inter_rank_words: grid_cost(dims, grid.pm, grid.pn, grid.pk),
        costs,
    })
}

impl Plan {
    pub fn cost(&self, strategy: Strategy) -> Option<&CostEstimate> {
        self.costs.iter().find(|c| c.strategy == strategy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_plan() {
        let p = plan(&Dims::square(16), &Machine::new(64, 16)).unwrap();
        assert_eq!((p.grid.pm, p.grid.pn, p.grid.pk), (4, 4, 4));
        assert_eq!(p.predicted_q, 48.0);
        assert_eq!(p.inter_rank_words, 48.0);
        assert_eq!(p.costs.len(), 4);
        assert_eq!(p.cost(Strategy::Cosma).unwrap().q, 48.0);
    }

    #[test]
    fn single_rank_plan_moves_nothing() {
        let p = plan(&Dims::new(4, 5, 6).unwrap(), &Machine::new(1, 100)).unwrap();
        assert_eq!(p.inter_rank_words, 0.0);
        assert_eq!(p.grid.used, 1);
    }

    #[test]
    fn infeasible_plan() {
        assert!(matches!(
            plan(&Dims::square(16), &Machine::new(4, 16)),
            Err(ParError::InsufficientMemory { .. })
        ));
    }
}
