//! Damped Newton in log coordinates with finite-difference Jacobians.

use thiserror::Error;

use crate::families::{
    instantiate, max_norm, residual_vector, residuals_at_levels, FamilyError, FamilyInstance,
    FamilySpec,
};
use crate::numerics::{Precision, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("no convergence after {iterations} iterations (best residual {best_residual})")]
    NonConvergence {
        iterations: usize,
        best: Vec<String>,
        best_residual: String,
        history: Vec<String>,
    },
    #[error("no damped step keeps the ordering chain and reduces the residual (residual {residual})")]
    Structural { residual: String, history: Vec<String> },
    #[error("singular Jacobian at iteration {iteration}")]
    Singular { iteration: usize },
    #[error("jacobian column {index} ({name}): {source}")]
    JacobianEvaluation {
        index: usize,
        name: String,
        source: FamilyError,
    },
    #[error("invalid options: {0}")]
    Options(String),
    #[error(transparent)]
    Family(#[from] FamilyError),
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Defaults to `10^(−P₀+10)`.
    pub target_residual: Option<Real>,
    pub max_iterations: usize,
    pub initial_precision: u32,
    pub max_precision: u32,
    /// Maximum number of step halvings.
    pub damping: u32,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            target_residual: None,
            max_iterations: 60,
            initial_precision: 30,
            max_precision: 120,
            damping: 20,
        }
    }
}

impl SolveOptions {
    fn validate(&self) -> Result<(Precision, Real), SolveError> {
        let p0 = Precision::new(self.initial_precision)
            .map_err(|e| SolveError::Options(e.to_string()))?;
        if self.initial_precision > self.max_precision {
            return Err(SolveError::Options(format!(
                "initial precision {} exceeds maximum {}",
                self.initial_precision, self.max_precision
            )));
        }
        let target = match &self.target_residual {
            Some(t) if t.is_positive() => t.clone(),
            Some(_) => return Err(SolveError::Options("target residual must be positive".into())),
            None => pow10(10 - self.initial_precision as i64, p0),
        };
        Ok((p0, target))
    }
}

fn pow10(k: i64, prec: Precision) -> Real {
    Real::parse(&format!("1e{k}"), prec).expect("power of ten")
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub spec: FamilySpec,
    pub names: Vec<String>,
    pub values: Vec<Real>,
    pub pinned: Option<(String, Real)>,
    pub residual_norm: Real,
    pub precision_used: u32,
    pub iterations: usize,
    pub history: Vec<String>,
}

impl Solution {
    /// Parameters as decimal strings at the working precision.
    pub fn params(&self) -> Vec<(String, String)> {
        self.names
            .iter()
            .zip(&self.values)
            .map(|(n, v)| (n.clone(), v.to_decimal(self.precision_used as usize)))
            .collect()
    }

    pub fn value(&self, name: &str) -> Option<&Real> {
        self.names.iter().position(|n| n == name).map(|i| &self.values[i])
    }
}

/// `∂E_j/∂u_k` for every free variable, `u_k = ln|x_k|`, by central
/// differences with step `h`. `levels` fixes each equation's quadrature
/// level so all evaluations share one node set.
pub fn jacobian_with_step(
    inst: &FamilyInstance,
    free: &[usize],
    prec: Precision,
    h: &Real,
    levels: Option<&[u32]>,
) -> Result<Vec<Vec<Real>>, SolveError> {
    let n_eq = inst.system.equations.len();
    let base: Vec<Real> = inst.values.iter().map(|v| v.with_precision(prec)).collect();
    let columns = crate::par::map_indexed(2 * free.len(), |idx| {
        let k = free[idx / 2];
        let sign = if idx % 2 == 0 { 1 } else { -1 };
        let mut x = base.clone();
        x[k] = &x[k] * &(h.mul_i64(sign)).exp();
        let pin = inst.system.pinned.as_ref().map(|(n, _)| n.as_str());
        let pert = instantiate(inst.spec, &x, pin)?;
        Ok::<_, FamilyError>(residuals_at_levels(&pert, prec, levels)?.values)
    });
    let mut jac = vec![vec![Real::zero(prec); free.len()]; n_eq];
    let mut it = columns.into_iter();
    for (c, &k) in free.iter().enumerate() {
        let plus = it.next().expect("column").map_err(|source| SolveError::JacobianEvaluation {
            index: k,
            name: inst.names[k].clone(),
            source,
        })?;
        let minus = it.next().expect("column").map_err(|source| SolveError::JacobianEvaluation {
            index: k,
            name: inst.names[k].clone(),
            source,
        })?;
        let denom = h.ldexp(1);
        for j in 0..n_eq {
            jac[j][c] = (&plus[j] - &minus[j]) / &denom;
        }
    }
    Ok(jac)
}

/// Jacobian with the default step `10^(−P/3)`; the step is shrunk once
/// if a perturbed point is singular.
pub fn jacobian(
    inst: &FamilyInstance,
    free: &[usize],
    prec: Precision,
    levels: Option<&[u32]>,
) -> Result<Vec<Vec<Real>>, SolveError> {
    let h = pow10(-(prec.digits() as i64) / 3, prec);
    match jacobian_with_step(inst, free, prec, &h, levels) {
        Err(SolveError::JacobianEvaluation { .. }) => {
            jacobian_with_step(inst, free, prec, &h.ldexp(-4), levels)
        }
        other => other,
    }
}

/// LU solve of `a·x = b` with partial pivoting; also returns the 1-norm
/// condition estimate `‖A‖₁‖A⁻¹‖₁`.
pub fn lu_solve(a: &[Vec<Real>], b: &[Real]) -> Option<(Vec<Real>, Real)> {
    let n = b.len();
    if n == 0 {
        return Some((Vec::new(), Real::one(Precision::DEFAULT)));
    }
    let prec = b[0].precision();
    let mut m: Vec<Vec<Real>> = a.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().cmp(&m[j][col].abs()))?;
        if m[piv][col].is_zero() {
            return None;
        }
        m.swap(col, piv);
        perm.swap(col, piv);
        for row in col + 1..n {
            let f = &m[row][col] / &m[col][col];
            m[row][col] = f.clone();
            for k in col + 1..n {
                let t = &f * &m[col][k];
                m[row][k] -= &t;
            }
        }
    }
    let solve = |rhs: &[Real]| -> Vec<Real> {
        let mut y: Vec<Real> = perm.iter().map(|&i| rhs[i].clone()).collect();
        for i in 0..n {
            for k in 0..i {
                let t = &m[i][k] * &y[k];
                y[i] -= &t;
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let t = &m[i][k] * &y[k];
                y[i] -= &t;
            }
            y[i] = &y[i] / &m[i][i];
        }
        y
    };
    let x = solve(b);
    let norm1 = |cols: &dyn Fn(usize) -> Vec<Real>| {
        (0..n)
            .map(|c| cols(c).iter().fold(Real::zero(prec), |s, v| s + v.abs()))
            .max()
            .unwrap_or_else(|| Real::zero(prec))
    };
    let a_norm = norm1(&|c| (0..n).map(|r| a[r][c].clone()).collect());
    let inv_norm = norm1(&|c| {
        let mut e = vec![Real::zero(prec); n];
        e[c] = Real::one(prec);
        solve(&e)
    });
    Some((x, a_norm * inv_norm))
}

fn digits_lost(cond: &Real) -> f64 {
    match cond.exponent() {
        Some(e) => e as f64 * std::f64::consts::LOG10_2,
        None => 0.0,
    }
}

/// Solve the period problem from `seed`, holding `pin` fixed.
pub fn solve_period_problem(
    spec: FamilySpec,
    seed: &[Real],
    pin: Option<&str>,
    opts: &SolveOptions,
) -> Result<Solution, SolveError> {
    let (p0, target) = opts.validate()?;
    let mut prec = p0;
    let mut x: Vec<Real> = seed.iter().map(|v| v.with_precision(prec)).collect();
    let first = instantiate(spec, &x, pin)?;
    first.system.check_square()?;
    let pin_index = pin.map(|n| spec.parameter_index(n)).transpose()?;
    let free: Vec<usize> = (0..x.len()).filter(|i| Some(*i) != pin_index).collect();
    let mut history = Vec::new();
    let mut best: (Vec<Real>, Real) = (x.clone(), Real::one(prec).ldexp(1 << 20));
    let mut iterations = 0usize;
    loop {
        let inst = instantiate(spec, &x, pin)?;
        let res = residuals_at_levels(&inst, prec, None)?;
        let norm = max_norm(&res.values, prec);
        history.push(format!("P={} |E|={}", prec.digits(), norm.to_decimal(6)));
        if norm < best.1 {
            best = (x.clone(), norm.clone());
        }
        if norm <= target {
            return Ok(Solution {
                spec,
                names: inst.names.clone(),
                values: x,
                pinned: inst.system.pinned.clone(),
                residual_norm: norm,
                precision_used: prec.digits(),
                iterations,
                history,
            });
        }
        if iterations >= opts.max_iterations {
            return Err(SolveError::NonConvergence {
                iterations,
                best: best.0.iter().map(|v| v.to_decimal(prec.digits() as usize)).collect(),
                best_residual: best.1.to_decimal(6),
                history,
            });
        }
        iterations += 1;
        let jac = jacobian(&inst, &free, prec, Some(&res.levels))?;
        let rhs: Vec<Real> = res.values.iter().map(|r| -r).collect();
        let Some((step, cond)) = lu_solve(&jac, &rhs) else {
            if prec.digits() < opts.max_precision {
                prec = escalate(prec, opts);
                x = x.iter().map(|v| v.with_precision(prec)).collect();
                continue;
            }
            return Err(SolveError::Singular { iteration: iterations });
        };
        if digits_lost(&cond) > prec.digits() as f64 / 2.0 && prec.digits() < opts.max_precision {
            prec = escalate(prec, opts);
            history.push(format!("escalate to P={} (cond≈1e{:.0})", prec.digits(), digits_lost(&cond)));
            x = x.iter().map(|v| v.with_precision(prec)).collect();
            continue;
        }
        // trust region: at most one unit of ln|x| per component
        let largest = step.iter().fold(Real::zero(prec), |m, s| m.max(s.abs()));
        let mut lambda = if largest > Real::one(prec) {
            largest.recip()
        } else {
            Real::one(prec)
        };
        let h = pow10(-(prec.digits() as i64) / 3, prec);
        let mut accepted = None;
        for _ in 0..=opts.damping {
            let mut trial = x.clone();
            for (c, &k) in free.iter().enumerate() {
                trial[k] = &trial[k] * &(&lambda * &step[c]).exp();
            }
            if !stencil_feasible(spec, &trial, pin, &free, &h) {
                lambda = lambda.ldexp(-1);
                continue;
            }
            if let Ok(ti) = instantiate(spec, &trial, pin) {
                if let Ok(r) = residual_vector(&ti, prec) {
                    if max_norm(&r, prec) < norm {
                        accepted = Some(trial);
                        break;
                    }
                }
            }
            lambda = lambda.ldexp(-1);
        }
        match accepted {
            Some(t) => x = t,
            None if prec.digits() < opts.max_precision => {
                prec = escalate(prec, opts);
                history.push(format!("damping exhausted, escalate to P={}", prec.digits()));
                x = x.iter().map(|v| v.with_precision(prec)).collect();
            }
            None => {
                return Err(SolveError::Structural {
                    residual: norm.to_decimal(6),
                    history,
                })
            }
        }
    }
}

/// Whether the next Jacobian's difference stencil (steps `±h` in ln|x|,
/// with a factor 4 margin) stays inside the ordering chain.
fn stencil_feasible(spec: FamilySpec, x: &[Real], pin: Option<&str>, free: &[usize], h: &Real) -> bool {
    free.iter().all(|&k| {
        [4i64, -4].iter().all(|s| {
            let mut y = x.to_vec();
            y[k] = &y[k] * &h.mul_i64(*s).exp();
            instantiate(spec, &y, pin).is_ok()
        })
    })
}

fn escalate(prec: Precision, opts: &SolveOptions) -> Precision {
    Precision::new(prec.doubled().digits().min(opts.max_precision)).expect("above minimum")
}

/// A continuation branch; `failure` records where it was truncated.
#[derive(Debug, Clone)]
pub struct Branch {
    pub solutions: Vec<Solution>,
    pub failure: Option<(usize, SolveError)>,
}

/// Solve at each pin value in turn, seeding from the previous solutions
/// (secant predictor in log coordinates once two are available).
pub fn continue_family(
    spec: FamilySpec,
    pin: &str,
    schedule: &[Real],
    seed: &[Real],
    opts: &SolveOptions,
) -> Result<Branch, SolveError> {
    let k = spec.parameter_index(pin)?;
    let mut solutions: Vec<Solution> = Vec::new();
    for (i, p) in schedule.iter().enumerate() {
        let mut guess: Vec<Real> = match solutions.len() {
            0 => seed.to_vec(),
            1 => solutions[0].values.clone(),
            n => predict(&solutions[n - 2].values, &solutions[n - 1].values, k, p),
        };
        guess[k] = p.clone();
        match solve_period_problem(spec, &guess, Some(pin), opts) {
            Ok(s) => solutions.push(s),
            Err(e) => {
                // retry once from the last solution without extrapolation
                let retry = solutions.last().map(|last| {
                    let mut g = last.values.clone();
                    g[k] = p.clone();
                    solve_period_problem(spec, &g, Some(pin), opts)
                });
                match retry {
                    Some(Ok(s)) => solutions.push(s),
                    _ => {
                        return Ok(Branch {
                            solutions,
                            failure: Some((i, e)),
                        })
                    }
                }
            }
        }
    }
    Ok(Branch {
        solutions,
        failure: None,
    })
}

fn predict(prev: &[Real], last: &[Real], k: usize, pin: &Real) -> Vec<Real> {
    let prec = last[k].precision();
    let lp = |v: &Real| v.abs().with_precision(prec).ln();
    let dt = &lp(&last[k]) - &lp(&prev[k]);
    if dt.is_zero() {
        return last.to_vec();
    }
    let s = (&lp(pin) - &lp(&last[k])) / &dt;
    prev.iter()
        .zip(last)
        .map(|(a, b)| {
            let du = &lp(b) - &lp(a);
            b * &(&s * &du).exp()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(d: u32) -> Precision {
        Precision::new(d).unwrap()
    }

    fn dec(s: &str, prec: Precision) -> Real {
        Real::parse(s, prec).unwrap()
    }

    #[test]
    fn lu_solves_and_estimates_condition() {
        let prec = p(30);
        let a = vec![
            vec![dec("4", prec), dec("1", prec)],
            vec![dec("2", prec), dec("3", prec)],
        ];
        let (x, cond) = lu_solve(&a, &[dec("1", prec), dec("2", prec)]).unwrap();
        assert!((&x[0] - &dec("0.1", prec)).abs() < dec("1e-28", prec));
        assert!((&x[1] - &dec("0.6", prec)).abs() < dec("1e-28", prec));
        // ‖A‖₁ = 6, ‖A⁻¹‖₁ = 0.5
        assert!((&cond - &dec("3", prec)).abs() < dec("1e-27", prec));
        let singular = vec![vec![dec("1", prec), dec("2", prec)], vec![dec("2", prec), dec("4", prec)]];
        assert!(lu_solve(&singular, &[dec("1", prec), dec("1", prec)]).is_none());
    }

    #[test]
    fn rtw_solve_from_pin() {
        let prec = p(30);
        let seed = vec![dec("0.265", prec), dec("0.3", prec)];
        let s = solve_period_problem(FamilySpec::Rtw, &seed, Some("a1"), &SolveOptions::default()).unwrap();
        assert!(s.iterations < 30);
        let a2 = s.value("a2").unwrap().to_f64();
        assert!((a2 - 0.27090587638329196).abs() < 1e-15, "{a2}");
        assert!(s.residual_norm <= dec("1e-20", prec));
    }

    #[test]
    fn rejects_non_square_system() {
        let prec = p(30);
        let seed = vec![dec("0.1", prec), dec("0.5", prec)];
        let err = solve_period_problem(FamilySpec::Rtw, &seed, None, &SolveOptions::default()).unwrap_err();
        assert!(matches!(err, SolveError::Family(FamilyError::NotSquare { .. })), "{err}");
    }

    #[test]
    fn rtw_jacobian_sign() {
        let prec = p(30);
        let inst = instantiate(FamilySpec::Rtw, &[dec("0.1", prec), dec("0.4677900971198217", prec)], Some("a1")).unwrap();
        let j = jacobian(&inst, &[1], prec, None).unwrap();
        let r_lo = residual_vector(&inst, prec).unwrap()[0].clone();
        let hi = instantiate(FamilySpec::Rtw, &[dec("0.1", prec), dec("0.4677901", prec)], Some("a1")).unwrap();
        let r_hi = residual_vector(&hi, prec).unwrap()[0].clone();
        assert!(j[0][0].is_negative());
        assert_eq!((&r_hi - &r_lo).signum(), j[0][0].signum());
        assert_eq!((&r_hi - &r_lo).signum(), j[0][0].signum());
    }
}
