//! Min-max model predictive control over scenario trees: plant
//! description, penalized objective, terminal ingredients, uncertainty
//! branching, and the derivative-free solver.

pub mod cost;
pub mod plant;
pub mod solve;
pub mod terminal;
pub mod tree;

pub use cost::{trajectory_cost, CostWeights};
pub use plant::{linear_plant, PlantModel};
pub use solve::{
    evaluate_worst_case, rollout, solve_minmax, warm_from, ConstraintMargins, MpcSolution,
    PolicyParams, SearchConfig, WorstCase, CONSTRAINT_TOL,
};
pub use terminal::{verify_terminal_assumption, TerminalIngredients, TerminalReport};
pub use tree::{build_scenario_tree, LeafRealization, ScenarioTree, MAX_LEAVES};
