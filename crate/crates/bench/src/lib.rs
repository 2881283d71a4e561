//! Shared builders for the benchmark suite.

use immse_core::kernels::{KernelSpec, TimeGrid};
use immse_core::operator::{discretize, DiscretizedOperator};

/// Exponential-kernel operator on [0, 1] at the given grid size.
pub fn exponential_operator(n: usize) -> DiscretizedOperator {
    let kernel = KernelSpec::exponential(1.0, 1.0, 1.0).expect("valid kernel");
    let grid = TimeGrid::midpoint(1.0, n).expect("valid grid");
    discretize(&kernel, &grid).expect("discretizes")
}
