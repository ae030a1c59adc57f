use crate::frontend::{BinOp, Expr, ExprKind, Func};
use crate::model::simplify::{add, call, div, mul, neg, pow, sub};

/// Exact partial derivative of `e` with respect to the identifier `var`,
/// simplified as it is built.
pub fn derivative(e: &Expr, var: &str) -> Expr {
    match &e.kind {
        ExprKind::Ident(n) if n == var => Expr::num(1.0),
        ExprKind::Ident(_) | ExprKind::Const(_) | ExprKind::Number(_) => Expr::num(0.0),
        ExprKind::Neg(a) => neg(derivative(a, var)),
        ExprKind::Binary(op, a, b) => {
            let (da, db) = (derivative(a, var), derivative(b, var));
            let (a, b) = (a.without_spans(), b.without_spans());
            match op {
                BinOp::Add => add(da, db),
                BinOp::Sub => sub(da, db),
                BinOp::Mul => add(mul(da, b), mul(a, db)),
                BinOp::Div if db.is_number(0.0) => div(da, b),
                BinOp::Div => div(sub(mul(da, b.clone()), mul(a, db)), pow(b, 2)),
            }
        }
        ExprKind::Pow(a, k) => {
            let da = derivative(a, var);
            mul(mul(Expr::num(*k as f64), pow(a.without_spans(), k - 1)), da)
        }
        ExprKind::Call(f, a) => {
            let da = derivative(a, var);
            let a = a.without_spans();
            match f {
                Func::Sin => mul(call(Func::Cos, a), da),
                Func::Cos => mul(neg(call(Func::Sin, a)), da),
                Func::Tan => div(da, pow(call(Func::Cos, a), 2)),
                Func::Exp => mul(call(Func::Exp, a), da),
                Func::Ln => div(da, a),
                Func::Sqrt => div(da, mul(Expr::num(2.0), call(Func::Sqrt, a))),
            }
        }
    }
}

/// Jacobian of `functions` with respect to `vars`: entry `[i][j]` is
/// the partial of `functions[i]` by `vars[j]`.
pub fn jacobian(functions: &[Expr], vars: &[String]) -> Vec<Vec<Expr>> {
    functions.iter().map(|f| vars.iter().map(|v| derivative(f, v)).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_expr;

    fn d(src: &str, v: &str) -> String {
        derivative(&parse_expr(src).unwrap(), v).to_string()
    }

    #[test]
    fn worked_example() {
        assert_eq!(d("x*y**2 + sin(x)", "x"), "y ** 2 + cos(x)");
        assert_eq!(d("x*y**2 + sin(x)", "y"), "x * (2.0 * y)");
    }

    #[test]
    fn constant_rule() {
        assert_eq!(d("7", "x"), "0.0");
        assert_eq!(d("g / L", "x"), "0.0");
    }

    #[test]
    fn pendulum_rate_partial() {
        assert_eq!(d("dtheta - g/L*sin(theta)*dt", "theta"), "-(g / L * cos(theta) * dt)");
        assert_eq!(d("dtheta - g/L*sin(theta)*dt", "dtheta"), "1.0");
    }

    #[test]
    fn function_rules() {
        assert_eq!(d("cos(x)", "x"), "-sin(x)");
        assert_eq!(d("tan(x)", "x"), "1.0 / cos(x) ** 2");
        assert_eq!(d("ln(x)", "x"), "1.0 / x");
        assert_eq!(d("sqrt(x)", "x"), "1.0 / (2.0 * sqrt(x))");
        assert_eq!(d("exp(2 * x)", "x"), "exp(2.0 * x) * 2.0");
        assert_eq!(d("x / y", "y"), "-x / y ** 2");
    }
}
