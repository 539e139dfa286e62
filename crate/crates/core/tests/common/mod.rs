//! Brute-force oracles shared by the integration tests. Everything here is
//! written from the definitions, without the library's grid machinery.

#![allow(dead_code)]

use gld_core::exponents::{alpha, ExponentQuery};
use gld_core::measures::{Channel, JointDistribution};
use gld_core::metrics::MetricSpec;
use rand::Rng;

pub fn ln(x: f64) -> f64 {
    x.ln()
}

/// All vectors of `parts` nonnegative integers summing to `total`.
pub fn splits(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in splits(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Square integer tables with both margins equal to `margin`.
pub fn couplings(margin: &[usize]) -> Vec<Vec<usize>> {
    let n = margin.len();
    let mut out = Vec::new();
    let mut table = vec![0usize; n * n];
    fn fill(cell: usize, n: usize, margin: &[usize], table: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cell == n * n {
            let ok = (0..n).all(|b| (0..n).map(|a| table[a * n + b]).sum::<usize>() == margin[b]);
            if ok {
                out.push(table.clone());
            }
            return;
        }
        let (a, b) = (cell / n, cell % n);
        let row_used: usize = (0..b).map(|j| table[a * n + j]).sum();
        let col_used: usize = (0..a).map(|i| table[i * n + b]).sum();
        let room = (margin[a] - row_used).min(margin[b].saturating_sub(col_used));
        if b == n - 1 {
            let need = margin[a] - row_used;
            if need <= margin[b].saturating_sub(col_used) {
                table[cell] = need;
                fill(cell + 1, n, margin, table, out);
            }
            return;
        }
        for v in 0..=room {
            table[cell] = v;
            fill(cell + 1, n, margin, table, out);
        }
        table[cell] = 0;
    }
    fill(0, n, margin, &mut table, &mut out);
    out
}

pub fn mi(joint: &[f64], rows: usize, cols: usize) -> f64 {
    let mut r = vec![0.0; rows];
    let mut c = vec![0.0; cols];
    for a in 0..rows {
        for b in 0..cols {
            r[a] += joint[a * cols + b];
            c[b] += joint[a * cols + b];
        }
    }
    let mut total = 0.0;
    for a in 0..rows {
        for b in 0..cols {
            let p = joint[a * cols + b];
            if p > 0.0 {
                total += p * ln(p / (r[a] * c[b]));
            }
        }
    }
    total.max(0.0)
}

pub fn g(metric: &MetricSpec, joint: &[f64], rows: usize, cols: usize) -> f64 {
    metric
        .evaluate(&JointDistribution::new(rows, cols, joint.to_vec()).unwrap())
        .unwrap()
}

pub fn plus(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        0.0
    } else if b == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        (a - b).max(0.0)
    }
}

/// Gamma integrand at a triple over `(X x X') x Y`.
pub fn gamma_integrand(w: &Channel, metric: &MetricSpec, rate: f64, t: &[f64]) -> f64 {
    let nx = w.input_size();
    let ny = w.output_size();
    let mut first = vec![0.0; nx * ny];
    let mut second = vec![0.0; nx * ny];
    let mut out = vec![0.0; ny];
    let mut div = 0.0;
    for a in 0..nx {
        for b in 0..nx {
            let row = &t[(a * nx + b) * ny..(a * nx + b + 1) * ny];
            let mass: f64 = row.iter().sum();
            for y in 0..ny {
                let p = row[y];
                first[a * ny + y] += p;
                second[b * ny + y] += p;
                out[y] += p;
                if p > 0.0 {
                    let q = mass * w.prob(a, y);
                    div += if q > 0.0 { p * ln(p / q) } else { f64::INFINITY };
                }
            }
        }
    }
    let qy = gld_core::measures::Distribution::new(out).unwrap();
    let a = alpha(rate, &qy, metric).unwrap();
    let g1 = g(metric, &first, nx, ny);
    let g2 = g(metric, &second, nx, ny);
    div.max(0.0) + plus(g1.max(a), g2)
}

/// Minimum of the Gamma integrand over joint types `Q_XX'Y` with denominator
/// `k` whose pair marginal is the integer table `pair`.
pub fn gamma_over_types(w: &Channel, metric: &MetricSpec, rate: f64, pair: &[usize], k: usize) -> f64 {
    let ny = w.output_size();
    let options: Vec<Vec<Vec<usize>>> = pair.iter().map(|&c| splits(c, ny)).collect();
    let mut best = f64::INFINITY;
    let mut choice = vec![0usize; pair.len()];
    loop {
        let mut t = Vec::with_capacity(pair.len() * ny);
        for (cell, &c) in choice.iter().enumerate() {
            t.extend(options[cell][c].iter().map(|&v| v as f64 / k as f64));
        }
        best = best.min(gamma_integrand(w, metric, rate, &t));
        // odometer, last cell fastest
        let mut i = pair.len();
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            choice[i] += 1;
            if choice[i] < options[i].len() {
                break;
            }
            choice[i] = 0;
        }
    }
}

/// Per-coupling data of the nested grid: `(I(X;X'), Gamma)`.
pub fn coupling_table(q: &ExponentQuery, k: usize) -> Vec<(f64, f64)> {
    let margin: Vec<usize> = q
        .composition
        .probs()
        .iter()
        .map(|&p| (p * k as f64).round() as usize)
        .collect();
    let nx = margin.len();
    couplings(&margin)
        .into_iter()
        .map(|pair| {
            let probs: Vec<f64> = pair.iter().map(|&c| c as f64 / k as f64).collect();
            (mi(&probs, nx, nx), gamma_over_types(&q.channel, &q.metric, q.rate - q.epsilon, &pair, k))
        })
        .collect()
}

/// Nested-grid expurgated value `min [Gamma + I] - R` over `I <= R`.
pub fn expurgated_oracle(q: &ExponentQuery, k: usize) -> f64 {
    coupling_table(q, k)
        .into_iter()
        .filter(|&(i, _)| i <= q.rate + 1e-9)
        .map(|(i, gm)| gm + i - q.rate)
        .fold(f64::INFINITY, f64::min)
}

/// Nested-grid sup-min value, maximized exactly over the breakpoints of the
/// piecewise-linear inner minimum on `[1, rho_max]`.
pub fn maxmin_oracle(q: &ExponentQuery, k: usize) -> f64 {
    let lines: Vec<(f64, f64)> = coupling_table(q, k)
        .into_iter()
        .filter(|(_, gm)| gm.is_finite())
        .map(|(i, gm)| (gm, i - q.rate))
        .collect();
    if lines.is_empty() {
        return f64::INFINITY;
    }
    let inner = |rho: f64| lines.iter().map(|&(c, s)| c + rho * s).fold(f64::INFINITY, f64::min);
    let mut cands = vec![1.0, q.rho_max];
    for (i, a) in lines.iter().enumerate() {
        for b in &lines[i + 1..] {
            if a.1 != b.1 {
                let r = (b.0 - a.0) / (a.1 - b.1);
                if r > 1.0 && r < q.rho_max {
                    cands.push(r);
                }
            }
        }
    }
    cands.into_iter().map(inner).fold(f64::NEG_INFINITY, f64::max)
}

/// `sup_{Q_{X|Y}} [g - I] + R` over kernels whose rows are types with
/// denominator `k`, subject to `I <= R`.
pub fn alpha_oracle(rate: f64, qy: &[f64], metric: &MetricSpec, nx: usize, k: usize) -> f64 {
    let ny = qy.len();
    let rows = splits(k, nx);
    let mut best = f64::NEG_INFINITY;
    let mut choice = vec![0usize; ny];
    loop {
        let mut joint = vec![0.0; nx * ny];
        for y in 0..ny {
            for x in 0..nx {
                joint[x * ny + y] = qy[y] * rows[choice[y]][x] as f64 / k as f64;
            }
        }
        let i = mi(&joint, nx, ny);
        if i <= rate + 1e-9 {
            best = best.max(g(metric, &joint, nx, ny) - i);
        }
        let mut y = ny;
        loop {
            if y == 0 {
                return best + rate;
            }
            y -= 1;
            choice[y] += 1;
            if choice[y] < rows.len() {
                break;
            }
            choice[y] = 0;
        }
    }
}

/// Random stochastic matrix with entries bounded away from zero.
pub fn random_channel(rng: &mut impl Rng, inputs: usize, outputs: usize) -> Channel {
    let rows: Vec<Vec<f64>> = (0..inputs)
        .map(|_| {
            let r: Vec<f64> = (0..outputs).map(|_| rng.gen_range(0.05..1.0)).collect();
            let s: f64 = r.iter().sum();
            r.into_iter().map(|v| v / s).collect()
        })
        .collect();
    Channel::new(&rows).unwrap()
}

pub fn random_rows(rng: &mut impl Rng, inputs: usize, outputs: usize) -> Vec<Vec<f64>> {
    (0..inputs)
        .map(|_| (0..outputs).map(|_| rng.gen_range(0.05..1.0)).collect())
        .collect()
}

/// Random coupling of `qx` with itself (Sinkhorn scaling of a positive
/// matrix) times a random conditional over `outputs`.
pub fn random_triple(rng: &mut impl Rng, qx: &[f64], outputs: usize) -> Vec<f64> {
    let n = qx.len();
    let mut c: Vec<f64> = (0..n * n).map(|_| rng.gen_range(0.01..1.0)).collect();
    for _ in 0..500 {
        for a in 0..n {
            let s: f64 = (0..n).map(|b| c[a * n + b]).sum();
            (0..n).for_each(|b| c[a * n + b] *= qx[a] / s);
        }
        for b in 0..n {
            let s: f64 = (0..n).map(|a| c[a * n + b]).sum();
            (0..n).for_each(|a| c[a * n + b] *= qx[b] / s);
        }
    }
    let mut t = Vec::with_capacity(n * n * outputs);
    for cell in c {
        let r: Vec<f64> = (0..outputs).map(|_| rng.gen_range(0.0..1.0)).collect();
        let s: f64 = r.iter().sum();
        t.extend(r.into_iter().map(|v| v * cell / s));
    }
    t
}
