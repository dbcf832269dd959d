use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{Graph, ParamSet, Var};
use crate::{Error, Result};

/// Denominator floor so entries with near-zero gradient are compared in
/// absolute terms.
const REL_FLOOR: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub max_rel_error: f64,
    /// Parameter name and flat index of the worst entry.
    pub worst: Option<(String, usize)>,
    pub entries_checked: usize,
    pub tol: f64,
    /// Set when a gradient was non-finite; names the tensor.
    pub failure: Option<String>,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none() && self.max_rel_error <= self.tol
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

fn eval<F>(f: &F, params: &ParamSet) -> Result<f64>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var>,
{
    let mut g = Graph::new();
    let vars = params.bind(&mut g, false);
    let out = f(&mut g, &vars)?;
    Ok(g.scalar(out))
}

/// Compares the analytic gradient of the scalar built by `f` against central
/// finite differences for every entry of every tensor in `params`.
pub fn gradcheck<F>(f: F, params: &ParamSet, eps: f64, tol: f64) -> Result<GradcheckReport>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var>,
{
    if !(1e-6..=1e-3).contains(&eps) {
        return Err(Error::Config(format!("gradcheck eps {eps} outside [1e-6, 1e-3]")));
    }
    let mut g = Graph::new();
    let vars = params.bind(&mut g, true);
    let out = f(&mut g, &vars)?;
    g.backward(out)?;
    let analytic: Vec<Vec<f64>> = vars
        .iter()
        .zip(params.iter())
        .map(|(&v, (_, t))| {
            g.grad(v)
                .map(|s| s.to_vec())
                .unwrap_or_else(|| alloc::vec![0.0; t.len()])
        })
        .collect();

    let mut report = GradcheckReport {
        max_rel_error: 0.0,
        worst: None,
        entries_checked: 0,
        tol,
        failure: None,
    };
    let mut probe = params.clone();
    let names: Vec<String> = params.iter().map(|(n, _)| n.to_string()).collect();
    for (pi, name) in names.iter().enumerate() {
        let len = analytic[pi].len();
        for j in 0..len {
            let orig = probe.get(name)?.data()[j];
            probe.get_mut(name)?.data_mut()[j] = orig + eps;
            let up = eval(&f, &probe)?;
            probe.get_mut(name)?.data_mut()[j] = orig - eps;
            let down = eval(&f, &probe)?;
            probe.get_mut(name)?.data_mut()[j] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let a = analytic[pi][j];
            report.entries_checked += 1;
            if !a.is_finite() || !numeric.is_finite() {
                report.failure = Some(format!("non-finite gradient in {name}[{j}]"));
                return Ok(report);
            }
            let e = relative_error(a, numeric);
            if report.worst.is_none() || e > report.max_rel_error {
                report.max_rel_error = e;
                report.worst = Some((name.clone(), j));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;
    use alloc::vec;

    #[test]
    fn linear_dot_gradient_is_exact() {
        let mut p = ParamSet::new();
        p.insert("x", Tensor::vector(vec![0.3, -0.7, 1.1]));
        let y = vec![2.0, -1.0, 0.5];
        let f = |g: &mut Graph, v: &[Var]| {
            let yv = g.constant(Tensor::vector(y.clone()));
            g.dot(v[0], yv)
        };
        let mut g = Graph::new();
        let vars = p.bind(&mut g, true);
        let out = f(&mut g, &vars).unwrap();
        g.backward(out).unwrap();
        assert_eq!(g.grad(vars[0]).unwrap(), y.as_slice());
        let r = gradcheck(f, &p, 1e-5, 1e-4).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn cosine_stationary_at_reference() {
        let c0 = vec![0.6, -0.8, 0.25];
        let mut p = ParamSet::new();
        p.insert("c", Tensor::vector(c0.clone()));
        let f = |g: &mut Graph, v: &[Var]| {
            let r = g.constant(Tensor::vector(c0.clone()));
            let d = g.dot(v[0], r)?;
            let n1 = g.norm(v[0]);
            let n2 = g.norm(r);
            let den = g.mul(n1, n2)?;
            g.div(d, den)
        };
        let mut g = Graph::new();
        let vars = p.bind(&mut g, true);
        let out = f(&mut g, &vars).unwrap();
        g.backward(out).unwrap();
        assert!(g.grad(vars[0]).unwrap().iter().all(|x| x.abs() < 1e-12));
        assert!(gradcheck(f, &p, 1e-5, 1e-4).unwrap().passed());
    }

    #[test]
    fn eps_range_enforced() {
        let mut p = ParamSet::new();
        p.insert("x", Tensor::scalar(1.0));
        let f = |g: &mut Graph, v: &[Var]| Ok(g.sum(v[0]));
        assert!(gradcheck(f, &p, 1e-2, 1e-4).is_err());
    }

    #[test]
    fn non_finite_gradient_names_tensor() {
        let mut p = ParamSet::new();
        p.insert("weights", Tensor::vector(vec![1e-200, 1e-200]));
        // d(x/y)/dy = -x/y² where y² underflows to zero.
        let f = |g: &mut Graph, v: &[Var]| {
            let x = g.pick(v[0], 0)?;
            let y = g.pick(v[0], 1)?;
            g.div(x, y)
        };
        let r = gradcheck(f, &p, 1e-5, 1e-4).unwrap();
        assert!(!r.passed());
        assert!(r.failure.unwrap().contains("weights"));
    }
}
