use crate::error::Result;
use crate::expr::{EvaluationPoint, ExprError, Number, Poly, Symbol, Var};

fn shifted(e: &Poly, p: &EvaluationPoint, s: &Symbol, x: f64) -> Result<f64> {
    let mut q = p.clone();
    q.set_f64(s.clone(), x);
    Ok(e.eval_f64(&q)?)
}

fn central(e: &Poly, p: &EvaluationPoint, s: &Symbol, x: f64, h: f64) -> Result<f64> {
    Ok((shifted(e, p, s, x + h)? - shifted(e, p, s, x - h)?) / (2.0 * h))
}

/// Relative error between the symbolic partial `de/ds` and a central
/// difference extrapolated from steps `h` and `h/2`.
///
/// The step starts at `1e-3 * max(|s|, 1e-2)` and shrinks tenfold, up to three
/// times, when a shifted point leaves the domain.
pub fn fd_check(e: &Poly, s: &Symbol, p: &EvaluationPoint) -> Result<f64> {
    let x = p
        .get(&Var::Sym(s.clone()))
        .map(Number::to_f64)
        .ok_or_else(|| ExprError::Unbound(Var::Sym(s.clone())))?;
    let symbolic = e.diff_sym(s).eval_f64(p)?;
    let value = e.eval_f64(p)?;
    let mut h = 1e-3 * x.abs().max(1e-2);
    let mut last = None;
    for _ in 0..4 {
        let attempt = central(e, p, s, x, h).and_then(|coarse| Ok((coarse, central(e, p, s, x, h / 2.0)?)));
        match attempt {
            Ok((coarse, fine)) => {
                let fd = (4.0 * fine - coarse) / 3.0;
                let scale = symbolic.abs().max(fd.abs()).max(1e-3 * value.abs());
                return Ok(if scale == 0.0 {
                    0.0
                } else {
                    (symbolic - fd).abs() / scale
                });
            }
            Err(err) => last = Some(err),
        }
        h /= 10.0;
    }
    Err(last.expect("at least one attempt"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Poly {
        crate::parser::parse_expression(s).unwrap().to_poly()
    }

    #[test]
    fn cubic() {
        let mut pt = EvaluationPoint::new();
        pt.set_f64(Var::sym("x"), 2.0);
        assert!(fd_check(&p("x^3"), &"x".into(), &pt).unwrap() < 1e-6);
    }

    #[test]
    fn exponential() {
        let mut pt = EvaluationPoint::new();
        pt.set_f64(Var::sym("delta"), 1.0);
        pt.set_f64(Var::sym("b3"), 2.0);
        assert!(fd_check(&p("exp(-b3*delta)"), &"delta".into(), &pt).unwrap() < 1e-6);
    }

    #[test]
    fn wrong_derivative_would_show() {
        let mut pt = EvaluationPoint::new();
        pt.set_f64(Var::sym("x"), 1.5);
        let e = p("x^(1/2)*exp(x)");
        assert!(fd_check(&e, &"x".into(), &pt).unwrap() < 1e-8);
    }

    #[test]
    fn near_domain_edge() {
        let mut pt = EvaluationPoint::new();
        pt.set_f64(Var::sym("x"), 0.005);
        assert!(fd_check(&p("x^(1/2)"), &"x".into(), &pt).unwrap() < 1e-8);
        pt.set_f64(Var::sym("x"), 1e-6);
        assert!(fd_check(&p("x^(1/2)"), &"x".into(), &pt).unwrap() < 1e-5);
    }
}
