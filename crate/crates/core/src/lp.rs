//! Thin wrapper over the `minilp` simplex solver.

use minilp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[allow(dead_code)]
pub(crate) enum Cmp {
    Le,
    Ge,
    Eq,
}

/// `minimize c.x` over `x >= 0` subject to sparse linear rows.
#[derive(Debug, Clone, Default)]
pub(crate) struct LinearProgram {
    objective: Vec<f64>,
    rows: Vec<(Vec<(usize, f64)>, Cmp, f64)>,
}

#[derive(Debug, Clone)]
#[allow(dead_code)]
pub(crate) struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self { objective, rows: Vec::new() }
    }

    pub fn constrain(&mut self, row: Vec<(usize, f64)>, cmp: Cmp, rhs: f64) {
        self.rows.push((row, cmp, rhs));
    }

    pub fn solve(&self) -> Result<LpSolution> {
        let mut problem = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = self.objective.iter().map(|c| problem.add_var(*c, (0.0, f64::INFINITY))).collect();
        for (row, cmp, rhs) in &self.rows {
            if !rhs.is_finite() || row.iter().any(|(_, a)| !a.is_finite()) {
                return Err(Error::Numeric("non-finite LP coefficient".into()));
            }
            let expr: Vec<_> = row.iter().filter(|(_, a)| *a != 0.0).map(|(i, a)| (vars[*i], *a)).collect();
            let op = match cmp {
                Cmp::Le => ComparisonOp::Le,
                Cmp::Ge => ComparisonOp::Ge,
                Cmp::Eq => ComparisonOp::Eq,
            };
            problem.add_constraint(expr.as_slice(), op, *rhs);
        }
        let sol = problem.solve().map_err(|e| Error::Numeric(format!("LP solver: {e}")))?;
        let x = vars.iter().map(|v| sol[*v].max(0.0)).collect();
        Ok(LpSolution { x, objective: sol.objective() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_checkable_lp() {
        // min x + y  s.t.  x + 2y >= 4,  3x + y >= 6: vertex (8/5, 6/5), value 14/5
        let mut lp = LinearProgram::new(vec![1.0, 1.0]);
        lp.constrain(vec![(0, 1.0), (1, 2.0)], Cmp::Ge, 4.0);
        lp.constrain(vec![(0, 3.0), (1, 1.0)], Cmp::Ge, 6.0);
        let s = lp.solve().unwrap();
        assert!((s.x[0] - 1.6).abs() < 1e-9 && (s.x[1] - 1.2).abs() < 1e-9);
        assert!((s.objective - 2.8).abs() < 1e-9);
    }

    #[test]
    fn equality_rows() {
        // min t  s.t. a + b = t, a >= 1, b >= 2
        let mut lp = LinearProgram::new(vec![0.0, 0.0, 1.0]);
        lp.constrain(vec![(0, 1.0), (1, 1.0), (2, -1.0)], Cmp::Eq, 0.0);
        lp.constrain(vec![(0, 1.0)], Cmp::Ge, 1.0);
        lp.constrain(vec![(1, 1.0)], Cmp::Ge, 2.0);
        lp.constrain(vec![(0, 1.0)], Cmp::Le, 5.0);
        assert!((lp.solve().unwrap().objective - 3.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_is_numeric_error() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.constrain(vec![(0, 1.0)], Cmp::Le, -1.0);
        assert!(matches!(lp.solve(), Err(Error::Numeric(_))));
    }
}
