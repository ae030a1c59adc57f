//! Random expressions and a finite-difference oracle.

use kfsynth::frontend::{BinOp, Expr, ExprKind, Func};
use kfsynth::model::evaluate;
use kfsynth::sim::NoiseRng;

pub const VARS: [&str; 3] = ["x", "y", "w"];

pub struct ExprGen {
    pub rng: NoiseRng,
}

impl ExprGen {
    pub fn new(seed: u64) -> Self {
        ExprGen { rng: NoiseRng::new(seed) }
    }

    fn pick(&mut self, n: usize) -> usize {
        ((self.rng.uniform() * n as f64) as usize).min(n - 1)
    }

    fn leaf(&mut self) -> Expr {
        match self.pick(5) {
            0 => Expr::num(((self.rng.uniform() * 4.0 - 2.0) * 100.0).round() / 100.0),
            1 => Expr::constant("k"),
            _ => Expr::ident(VARS[self.pick(VARS.len())]),
        }
    }

    /// Random expression of depth at most `depth`.
    pub fn expr(&mut self, depth: usize) -> Expr {
        if depth == 0 || self.pick(4) == 0 {
            return self.leaf();
        }
        match self.pick(10) {
            0..=4 => {
                let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div][self.pick(4)];
                Expr::binary(op, self.expr(depth - 1), self.expr(depth - 1))
            }
            5 => Expr::neg(self.expr(depth - 1)),
            6 => Expr::pow(self.expr(depth - 1), [-2, -1, 2, 3][self.pick(4)]),
            _ => {
                let f = [Func::Sin, Func::Cos, Func::Tan, Func::Exp, Func::Ln, Func::Sqrt][self.pick(6)];
                Expr::call(f, self.expr(depth - 1))
            }
        }
    }

    /// `(x, y, w)` in [-2, 2]³.
    pub fn point(&mut self) -> [f64; 3] {
        [0; 3].map(|_| self.rng.uniform() * 4.0 - 2.0)
    }
}

pub fn env(p: [f64; 3]) -> Vec<(String, f64)> {
    let mut v: Vec<(String, f64)> = VARS.iter().zip(p).map(|(n, x)| (n.to_string(), x)).collect();
    v.push(("k".into(), 1.7));
    v
}

/// True when every subexpression at `p` stays away from poles and branch
/// points and has moderate magnitude.
pub fn well_conditioned(e: &Expr, p: [f64; 3]) -> bool {
    let env = env(p);
    let mut ok = true;
    e.visit(&mut |s| {
        let Ok(v) = evaluate(s, &env) else {
            ok = false;
            return;
        };
        if !v.is_finite() || v.abs() > 1e4 {
            ok = false;
        }
        let arg = |a: &Expr| evaluate(a, &env).unwrap_or(f64::NAN);
        match &s.kind {
            ExprKind::Binary(BinOp::Div, _, d) if arg(d).abs() < 0.1 => ok = false,
            ExprKind::Pow(b, k) if *k < 0 && arg(b).abs() < 0.1 => ok = false,
            ExprKind::Call(Func::Ln | Func::Sqrt, a) if arg(a).is_nan() || arg(a) <= 0.1 => ok = false,
            ExprKind::Call(Func::Tan, a) if arg(a).cos().abs() < 0.1 => ok = false,
            ExprKind::Call(Func::Exp, a) if arg(a) > 8.0 => ok = false,
            _ => {}
        }
    });
    ok
}

fn f_at(e: &Expr, p: [f64; 3]) -> f64 {
    evaluate(e, &env(p)).unwrap()
}

fn central(e: &Expr, p: [f64; 3], i: usize, h: f64) -> f64 {
    let (mut a, mut b) = (p, p);
    a[i] += h;
    b[i] -= h;
    (f_at(e, a) - f_at(e, b)) / (2.0 * h)
}

/// Richardson-extrapolated central difference and an error estimate.
pub fn fd_gradient(e: &Expr, p: [f64; 3], i: usize) -> (f64, f64) {
    let h = 1e-3 * p[i].abs().max(1.0);
    let r = |h: f64| (4.0 * central(e, p, i, h / 2.0) - central(e, p, i, h)) / 3.0;
    let (fine, coarse) = (r(h / 2.0), r(h));
    (fine, (fine - coarse).abs())
}
