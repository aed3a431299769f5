//! Mixed-integer encoding of STL satisfaction and robustness, an embedded
//! branch-and-bound solver over LP relaxations, and LP-file export.

mod bnb;
mod encode;

use std::fmt::Write as _;

pub use bnb::{solve, MilpSolution, MilpStatus, SolveLimits};
pub use encode::{encode, CostTerms, Encoded, MilpBuilder, Objective, Side, TraceHandle};

/// Feasibility tolerance on constraint rows.
pub const FEAS_TOL: f64 = 1e-7;
/// Distance from an integer below which a binary counts as integral.
pub const INT_TOL: f64 = 1e-6;
/// Margin by which encoded literals must hold when strict satisfaction is required.
pub const DEFAULT_MARGIN: f64 = 1e-4;
/// Safety factor applied to every big-M constant.
pub const BIG_M_FACTOR: f64 = 1.05;

/// Sparse affine expression `sum coef * var + constant`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn constant(c: f64) -> Self {
        LinExpr {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(v: usize) -> Self {
        LinExpr {
            terms: vec![(v, 1.0)],
            constant: 0.0,
        }
    }

    pub fn as_const(&self) -> Option<f64> {
        self.terms.is_empty().then_some(self.constant)
    }

    /// `self += k * other`.
    pub fn add_scaled(&mut self, other: &LinExpr, k: f64) {
        self.terms
            .extend(other.terms.iter().map(|&(v, c)| (v, c * k)));
        self.constant += other.constant * k;
    }

    pub fn scaled(&self, k: f64) -> LinExpr {
        LinExpr {
            terms: self.terms.iter().map(|&(v, c)| (v, c * k)).collect(),
            constant: self.constant * k,
        }
    }

    /// Merges duplicate variables and drops zero coefficients.
    pub fn normalized(&self) -> LinExpr {
        let mut terms = self.terms.clone();
        terms.sort_by_key(|t| t.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (v, c) in terms {
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 += c,
                _ => out.push((v, c)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        LinExpr {
            terms: out,
            constant: self.constant,
        }
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.terms
            .iter()
            .fold(self.constant, |acc, &(v, c)| acc + c * values[v])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VarInfo {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub kind: VarKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

/// Row `terms cmp rhs`; constants are kept on the right-hand side.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Minimize,
    Maximize,
}

/// A mixed-integer linear program with bounded variables.
#[derive(Clone, Debug, PartialEq)]
pub struct MilpProblem {
    pub vars: Vec<VarInfo>,
    pub constraints: Vec<Constraint>,
    pub objective: LinExpr,
    pub direction: Direction,
}

impl Default for MilpProblem {
    fn default() -> Self {
        MilpProblem {
            vars: Vec::new(),
            constraints: Vec::new(),
            objective: LinExpr::default(),
            direction: Direction::Minimize,
        }
    }
}

impl MilpProblem {
    pub fn add_var(&mut self, name: impl Into<String>, lo: f64, hi: f64) -> usize {
        self.vars.push(VarInfo {
            name: name.into(),
            lo,
            hi,
            kind: VarKind::Continuous,
        });
        self.vars.len() - 1
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> usize {
        self.vars.push(VarInfo {
            name: name.into(),
            lo: 0.0,
            hi: 1.0,
            kind: VarKind::Binary,
        });
        self.vars.len() - 1
    }

    /// Adds `expr cmp rhs`, moving the expression's constant to the right.
    pub fn add_constraint(&mut self, name: impl Into<String>, expr: &LinExpr, cmp: Cmp, rhs: f64) {
        let e = expr.normalized();
        self.constraints.push(Constraint {
            name: name.into(),
            terms: e.terms,
            cmp,
            rhs: rhs - e.constant,
        });
    }

    pub fn binaries(&self) -> Vec<usize> {
        (0..self.vars.len())
            .filter(|&i| self.vars[i].kind == VarKind::Binary)
            .collect()
    }

    pub fn num_binaries(&self) -> usize {
        self.vars
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .count()
    }

    /// Interval enclosure of `expr` over the variable bounds.
    pub fn bounds_of(&self, expr: &LinExpr) -> (f64, f64) {
        let (mut lo, mut hi) = (expr.constant, expr.constant);
        for &(v, c) in &expr.terms {
            let (a, b) = (c * self.vars[v].lo, c * self.vars[v].hi);
            lo += a.min(b);
            hi += a.max(b);
        }
        (lo, hi)
    }

    /// Whether `values` is feasible, integrality included, within `tol`.
    pub fn is_feasible(&self, values: &[f64], tol: f64) -> bool {
        let bounds = self.vars.iter().zip(values).all(|(v, &x)| {
            x >= v.lo - tol
                && x <= v.hi + tol
                && (v.kind == VarKind::Continuous || (x - x.round()).abs() <= INT_TOL)
        });
        bounds
            && self.constraints.iter().all(|c| {
                let lhs: f64 = c.terms.iter().map(|&(v, k)| k * values[v]).sum();
                let scale = 1.0 + c.rhs.abs();
                match c.cmp {
                    Cmp::Le => lhs <= c.rhs + tol * scale,
                    Cmp::Ge => lhs >= c.rhs - tol * scale,
                    Cmp::Eq => (lhs - c.rhs).abs() <= tol * scale,
                }
            })
    }

    /// Writes the problem in CPLEX LP format. Output depends only on the problem.
    pub fn export_lp(&self) -> String {
        let mut s = String::new();
        let name = |v: usize| self.vars[v].name.as_str();
        let expr = |terms: &[(usize, f64)]| -> String {
            if terms.is_empty() {
                return "0".into();
            }
            let mut out = String::new();
            for (i, &(v, c)) in terms.iter().enumerate() {
                let sign = if c < 0.0 { "-" } else { "+" };
                if i == 0 {
                    if c < 0.0 {
                        out.push_str("- ");
                    }
                } else {
                    let _ = write!(out, " {sign} ");
                }
                let _ = write!(out, "{:?} {}", c.abs(), name(v));
            }
            out
        };
        let obj = self.objective.normalized();
        let _ = writeln!(s, "\\ written by hyperstl");
        if obj.constant != 0.0 {
            let _ = writeln!(s, "\\ objective constant {:?}", obj.constant);
        }
        let _ = writeln!(
            s,
            "{}",
            match self.direction {
                Direction::Minimize => "Minimize",
                Direction::Maximize => "Maximize",
            }
        );
        let _ = writeln!(s, " obj: {}", expr(&obj.terms));
        if !self.constraints.is_empty() {
            let _ = writeln!(s, "Subject To");
            for c in &self.constraints {
                let op = match c.cmp {
                    Cmp::Le => "<=",
                    Cmp::Ge => ">=",
                    Cmp::Eq => "=",
                };
                let _ = writeln!(s, " {}: {} {op} {:?}", c.name, expr(&c.terms), c.rhs);
            }
        }
        let _ = writeln!(s, "Bounds");
        for v in self.vars.iter().filter(|v| v.kind == VarKind::Continuous) {
            match (v.lo.is_finite(), v.hi.is_finite()) {
                (true, true) => {
                    let _ = writeln!(s, " {:?} <= {} <= {:?}", v.lo, v.name, v.hi);
                }
                (true, false) => {
                    let _ = writeln!(s, " {} >= {:?}", v.name, v.lo);
                }
                (false, true) => {
                    let _ = writeln!(s, " -inf <= {} <= {:?}", v.name, v.hi);
                }
                (false, false) => {
                    let _ = writeln!(s, " {} free", v.name);
                }
            }
        }
        let bins: Vec<&str> = self.binaries().into_iter().map(name).collect();
        if !bins.is_empty() {
            let _ = writeln!(s, "Binary");
            for b in bins {
                let _ = writeln!(s, " {b}");
            }
        }
        s.push_str("End\n");
        s
    }
}

/// Free-function form of [`MilpProblem::export_lp`].
pub fn export_lp(p: &MilpProblem) -> String {
    p.export_lp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn export_empty_constraints() {
        let mut p = MilpProblem::default();
        p.add_var("x", -1.0, 2.0);
        let lp = p.export_lp();
        assert!(!lp.contains("Subject To"));
        assert!(lp.contains("Bounds\n -1.0 <= x <= 2.0\n"));
        assert!(lp.ends_with("End\n"));
    }

    #[test]
    fn export_binary_section_and_stability() {
        let mut p = MilpProblem::default();
        let x = p.add_var("x", 0.0, 3.0);
        let z = p.add_binary("z");
        p.objective = LinExpr::var(x);
        p.direction = Direction::Maximize;
        p.add_constraint(
            "c0",
            &LinExpr {
                terms: vec![(x, 1.0), (z, -2.5)],
                constant: 1.0,
            },
            Cmp::Le,
            3.0,
        );
        let lp = p.export_lp();
        assert!(lp.contains("Maximize\n obj: 1.0 x\n"));
        assert!(lp.contains(" c0: 1.0 x - 2.5 z <= 2.0\n"));
        assert!(lp.contains("Binary\n z\n"));
        assert_eq!(lp, p.clone().export_lp());
    }

    #[test]
    fn bounds_interval_arithmetic() {
        let mut p = MilpProblem::default();
        let x = p.add_var("x", -1.0, 2.0);
        let y = p.add_var("y", 0.0, 1.0);
        let e = LinExpr {
            terms: vec![(x, 2.0), (y, -3.0)],
            constant: 1.0,
        };
        assert_eq!(p.bounds_of(&e), (-4.0, 5.0));
    }

    #[test]
    fn normalization_merges() {
        let e = LinExpr {
            terms: vec![(2, 1.0), (0, 1.0), (2, -1.0), (0, 2.0)],
            constant: 0.0,
        }
        .normalized();
        assert_eq!(e.terms, vec![(0, 3.0)]);
    }
}
