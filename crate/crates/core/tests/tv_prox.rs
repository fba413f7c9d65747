use tomobench_core::tv::prox_objective;
use tomobench_core::*;

fn step_edge(n: usize) -> ImageGrid {
    let v = (0..n * n)
        .map(|i| if i % n >= n / 2 { 1.0 } else { 0.0 })
        .collect();
    ImageGrid::from_values(n, 1.0, v).unwrap()
}

/// Independent solver: FISTA on the dual of the TV prox,
/// `min_p 0.5 ||x + w div p||^2` s.t. `|p_i| <= 1`, with `u = x + w div p`.
fn dual_fista(x: &[f64], n: usize, w: f64, iters: usize) -> Vec<f64> {
    let len = n * n;
    let grad = |u: &[f64]| {
        let mut gx = vec![0.0; len];
        let mut gy = vec![0.0; len];
        for r in 0..n {
            for c in 0..n {
                let i = r * n + c;
                if c + 1 < n {
                    gx[i] = u[i + 1] - u[i];
                }
                if r + 1 < n {
                    gy[i] = u[i + n] - u[i];
                }
            }
        }
        (gx, gy)
    };
    // div = -grad^T: +p at i, -p at the forward neighbour
    let div = |px: &[f64], py: &[f64]| {
        let mut d = vec![0.0; len];
        for r in 0..n {
            for c in 0..n {
                let i = r * n + c;
                if c + 1 < n {
                    d[i] += px[i];
                    d[i + 1] -= px[i];
                }
                if r + 1 < n {
                    d[i] += py[i];
                    d[i + n] -= py[i];
                }
            }
        }
        d
    };
    let (mut px, mut py) = (vec![0.0; len], vec![0.0; len]);
    let (mut qx, mut qy) = (px.clone(), py.clone());
    let mut t = 1.0f64;
    let step = 1.0 / (8.0 * w);
    for _ in 0..iters {
        let d = div(&qx, &qy);
        let u: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + w * b).collect();
        let (gx, gy) = grad(&u);
        let (mut nx, mut ny) = (vec![0.0; len], vec![0.0; len]);
        for i in 0..len {
            let (a, b) = (qx[i] + step * gx[i], qy[i] + step * gy[i]);
            let m = (a * a + b * b).sqrt().max(1.0);
            nx[i] = a / m;
            ny[i] = b / m;
        }
        let tn = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        for i in 0..len {
            qx[i] = nx[i] + (t - 1.0) / tn * (nx[i] - px[i]);
            qy[i] = ny[i] + (t - 1.0) / tn * (ny[i] - py[i]);
        }
        px = nx;
        py = ny;
        t = tn;
    }
    let d = div(&px, &py);
    x.iter().zip(&d).map(|(a, b)| a + w * b).collect()
}

#[test]
fn step_edge_shrinks_by_analytic_amount() {
    let n = 8;
    let w = 0.1;
    let x = step_edge(n);
    let u = tv_prox(&x, w, 2000);
    let oracle = dual_fista(x.values(), n, w, 20000);
    // two plateaus move towards each other by w/4 each
    for r in 0..n {
        for c in 0..n {
            let want = if c >= n / 2 { 1.0 - w / 4.0 } else { w / 4.0 };
            let got = u.get(r, c);
            assert!((got - want).abs() < 1e-3, "({r},{c}) {got} vs {want}");
            assert!((got - oracle[r * n + c]).abs() < 1e-3);
        }
    }
    let height = u.get(0, n - 1) - u.get(0, 0);
    assert!((height - (1.0 - w / 2.0)).abs() < 1e-3);
}

#[test]
fn default_inner_budget_still_decreases_objective() {
    let n = 8;
    let x = step_edge(n);
    for w in [0.05, 0.5, 5.0] {
        let u = tv_prox(&x, w, 20);
        let before = prox_objective(x.values(), x.values(), n, w);
        let after = prox_objective(u.values(), x.values(), n, w);
        assert!(after <= before);
    }
}

#[test]
fn oracle_agrees_on_random_input() {
    let n = 8;
    let v: Vec<f64> = (0..n * n).map(|i| ((i * 37 % 11) as f64) / 11.0).collect();
    let x = ImageGrid::from_values(n, 1.0, v).unwrap();
    let u = tv_prox(&x, 0.2, 3000);
    let oracle = dual_fista(x.values(), n, 0.2, 30000);
    let a = prox_objective(u.values(), x.values(), n, 0.2);
    let b = prox_objective(&oracle, x.values(), n, 0.2);
    assert!((a - b).abs() < 1e-4 * b.max(1.0), "{a} vs {b}");
}
