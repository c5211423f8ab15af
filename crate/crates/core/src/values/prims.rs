//! Interpretation of function symbols and their reverse derivatives.
//!
//! Layout conventions (all 0-based):
//! - an `n -> m` matrix is `m` rows of `n` entries, `w[i*n + j]`;
//! - a `c`-channel image of length `n` is channel-major, `x[k*n + i]`;
//! - a conv filter bank is `w[(k*co + l)*m + j]` for input channel `k`,
//!   output channel `l` and tap `j`.

use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::syntax::{FunSym, Prim};

use super::value::Value;

/// What `pool` does on a window containing equal entries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieBreak {
    /// Undefined, as in the partial model.
    #[default]
    Strict,
    /// Lowest index wins.
    First,
}

impl std::str::FromStr for TieBreak {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "strict" => Ok(TieBreak::Strict),
            "first" => Ok(TieBreak::First),
            _ => Err(format!("unknown tie-break `{s}` (expected first or strict)")),
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn shape_err(f: &FunSym, detail: impl Into<String>) -> EvalError {
    EvalError::ShapeMismatch { detail: format!("{f}: {}", detail.into()) }
}

fn vec_of<'a>(f: &FunSym, v: &'a Value, n: usize) -> Result<&'a [f64], EvalError> {
    let x = v.as_vec().map_err(|_| shape_err(f, format!("expected Real({n}), found {v}")))?;
    if x.len() != n {
        return Err(shape_err(f, format!("expected Real({n}), found length {}", x.len())));
    }
    Ok(x)
}

fn pair_of<'a>(f: &FunSym, v: &'a Value) -> Result<(&'a Value, &'a Value), EvalError> {
    match v {
        Value::Tup(vs) if vs.len() == 2 => Ok((&vs[0], &vs[1])),
        _ => Err(shape_err(f, format!("expected a pair, found {v}"))),
    }
}

fn out(v: Vec<f64>) -> Value {
    Value::vec(v)
}

/// Window bounds `[start, end)` of pool output `i` over length `n` with window `m`.
fn window(i: usize, n: usize, m: usize) -> (usize, usize) {
    (i * m, (i * m + m).min(n))
}

/// Index of the maximum in `xs`, or partiality on a tie.
fn argmax(f: &FunSym, xs: &[f64], offset: usize, tie: TieBreak) -> Result<usize, EvalError> {
    if tie == TieBreak::Strict {
        for a in 0..xs.len() {
            for b in a + 1..xs.len() {
                if xs[a] == xs[b] {
                    return Err(EvalError::Partiality {
                        f: f.to_string(),
                        detail: format!("equal entries at {} and {} of one window", offset + a, offset + b),
                    });
                }
            }
        }
    }
    let mut best = 0;
    for (j, x) in xs.iter().enumerate() {
        if *x > xs[best] {
            best = j;
        }
    }
    Ok(best)
}

/// Evaluates a function symbol on a closed value.
pub fn ev(f: &FunSym, v: &Value, tie: TieBreak) -> Result<Value, EvalError> {
    if f.rd {
        let (u, x) = pair_of(f, v)?;
        return ev_rd(f, u, x, tie);
    }
    let d = &f.dims;
    match f.prim {
        Prim::Swish => {
            let x = vec_of(f, v, d[0])?;
            Ok(out(x.iter().map(|x| x * sigmoid(*x)).collect()))
        }
        Prim::Round => {
            let x = vec_of(f, v, d[0])?;
            Ok(out(x.iter().map(|x| x.round()).collect()))
        }
        Prim::Smul => {
            let (a, x) = pair_of(f, v)?;
            let a = vec_of(f, a, 1)?[0];
            let x = vec_of(f, x, d[0])?;
            Ok(out(x.iter().map(|x| a * x).collect()))
        }
        Prim::Minus => {
            let (a, b) = pair_of(f, v)?;
            let (a, b) = (vec_of(f, a, d[0])?, vec_of(f, b, d[0])?);
            Ok(out(a.iter().zip(b).map(|(p, q)| p - q).collect()))
        }
        Prim::Matmul => {
            let (n, m) = (d[0], d[1]);
            let (w, x) = pair_of(f, v)?;
            let (w, x) = (vec_of(f, w, n * m)?, vec_of(f, x, n)?);
            Ok(out((0..m).map(|i| (0..n).map(|j| w[i * n + j] * x[j]).sum()).collect()))
        }
        Prim::Transpose => {
            let (n, m) = (d[0], d[1]);
            let w = vec_of(f, v, n * m)?;
            let mut o = vec![0.0; n * m];
            for i in 0..m {
                for j in 0..n {
                    o[j * m + i] = w[i * n + j];
                }
            }
            Ok(out(o))
        }
        Prim::Outer => {
            let (n, m) = (d[0], d[1]);
            let (y, x) = pair_of(f, v)?;
            let (y, x) = (vec_of(f, y, m)?, vec_of(f, x, n)?);
            Ok(out((0..m).flat_map(|i| (0..n).map(move |j| y[i] * x[j])).collect()))
        }
        Prim::Conv => {
            let (n, m, c, co) = (d[0], d[1], d[2], d[3]);
            let (x, w) = pair_of(f, v)?;
            let (x, w) = (vec_of(f, x, c * n)?, vec_of(f, w, c * co * m)?);
            let len = n + 1 - m;
            let mut y = vec![0.0; co * len];
            for l in 0..co {
                for i in 0..len {
                    let mut acc = 0.0;
                    for k in 0..c {
                        for j in 0..m {
                            acc += x[k * n + i + j] * w[(k * co + l) * m + j];
                        }
                    }
                    y[l * len + i] = acc;
                }
            }
            Ok(out(y))
        }
        Prim::Pool => {
            let (n, m, c) = (d[0], d[1], d[2]);
            let x = vec_of(f, v, c * n)?;
            let outs = n.div_ceil(m);
            let mut y = Vec::with_capacity(c * outs);
            for k in 0..c {
                for i in 0..outs {
                    let (s, e) = window(i, n, m);
                    let xs = &x[k * n + s..k * n + e];
                    y.push(xs[argmax(f, xs, k * n + s, tie)?]);
                }
            }
            Ok(out(y))
        }
        Prim::Padding => {
            let (c, n, m) = (d[0], d[1], d[2]);
            let x = vec_of(f, v, c * n)?;
            let before = (m - n) / 2;
            let mut y = vec![0.0; c * m];
            for k in 0..c {
                y[k * m + before..k * m + before + n].copy_from_slice(&x[k * n..k * n + n]);
            }
            Ok(out(y))
        }
        Prim::Upscale => {
            let (c, n, m) = (d[0], d[1], d[2]);
            let x = vec_of(f, v, c * n)?;
            Ok(out((0..c).flat_map(|k| (0..m).map(move |i| x[k * n + i * n / m])).collect()))
        }
        Prim::Concat => {
            let (c, c2, n) = (d[0], d[1], d[2]);
            let (a, b) = pair_of(f, v)?;
            let (a, b) = (vec_of(f, a, c * n)?, vec_of(f, b, c2 * n)?);
            Ok(out(a.iter().chain(b).copied().collect()))
        }
    }
}

/// `rd[f](u, x)`: the cotangent `u` of the output pulled back to the point `x`.
fn ev_rd(f: &FunSym, u: &Value, x: &Value, tie: TieBreak) -> Result<Value, EvalError> {
    let d = &f.dims;
    match f.prim {
        Prim::Swish => {
            let (u, x) = (vec_of(f, u, d[0])?, vec_of(f, x, d[0])?);
            Ok(out(
                u.iter()
                    .zip(x)
                    .map(|(u, v)| {
                        let s = sigmoid(*v);
                        u * (s + v * s * (1.0 - s))
                    })
                    .collect(),
            ))
        }
        Prim::Round => {
            vec_of(f, u, d[0])?;
            vec_of(f, x, d[0])?;
            Ok(out(vec![0.0; d[0]]))
        }
        Prim::Smul => {
            let n = d[0];
            let u = vec_of(f, u, n)?;
            let (a, xs) = pair_of(f, x)?;
            let a = vec_of(f, a, 1)?[0];
            let xs = vec_of(f, xs, n)?;
            let ga: f64 = u.iter().zip(xs).map(|(p, q)| p * q).sum();
            Ok(Value::pair(out(vec![ga]), out(u.iter().map(|p| a * p).collect())))
        }
        Prim::Minus => {
            let n = d[0];
            let u = vec_of(f, u, n)?;
            let (a, b) = pair_of(f, x)?;
            vec_of(f, a, n)?;
            vec_of(f, b, n)?;
            Ok(Value::pair(out(u.to_vec()), out(u.iter().map(|p| -p).collect())))
        }
        Prim::Matmul => {
            let (n, m) = (d[0], d[1]);
            let u = vec_of(f, u, m)?;
            let (w, xs) = pair_of(f, x)?;
            let (w, xs) = (vec_of(f, w, n * m)?, vec_of(f, xs, n)?);
            let gw: Vec<f64> = (0..m).flat_map(|i| (0..n).map(move |j| u[i] * xs[j])).collect();
            let gx: Vec<f64> = (0..n).map(|j| (0..m).map(|i| w[i * n + j] * u[i]).sum()).collect();
            Ok(Value::pair(out(gw), out(gx)))
        }
        Prim::Transpose => {
            let (n, m) = (d[0], d[1]);
            let u = vec_of(f, u, n * m)?;
            vec_of(f, x, n * m)?;
            let mut g = vec![0.0; n * m];
            for i in 0..m {
                for j in 0..n {
                    g[i * n + j] = u[j * m + i];
                }
            }
            Ok(out(g))
        }
        Prim::Outer => {
            let (n, m) = (d[0], d[1]);
            let u = vec_of(f, u, n * m)?;
            let (y, xs) = pair_of(f, x)?;
            let (y, xs) = (vec_of(f, y, m)?, vec_of(f, xs, n)?);
            let gy: Vec<f64> = (0..m).map(|i| (0..n).map(|j| u[i * n + j] * xs[j]).sum()).collect();
            let gx: Vec<f64> = (0..n).map(|j| (0..m).map(|i| u[i * n + j] * y[i]).sum()).collect();
            Ok(Value::pair(out(gy), out(gx)))
        }
        Prim::Conv => {
            let (n, m, c, co) = (d[0], d[1], d[2], d[3]);
            let len = n + 1 - m;
            let u = vec_of(f, u, co * len)?;
            let (xs, w) = pair_of(f, x)?;
            let (xs, w) = (vec_of(f, xs, c * n)?, vec_of(f, w, c * co * m)?);
            let mut gx = vec![0.0; c * n];
            let mut gw = vec![0.0; c * co * m];
            for k in 0..c {
                for l in 0..co {
                    for i in 0..len {
                        let ui = u[l * len + i];
                        for j in 0..m {
                            gx[k * n + i + j] += ui * w[(k * co + l) * m + j];
                            gw[(k * co + l) * m + j] += ui * xs[k * n + i + j];
                        }
                    }
                }
            }
            Ok(Value::pair(out(gx), out(gw)))
        }
        Prim::Pool => {
            let (n, m, c) = (d[0], d[1], d[2]);
            let outs = n.div_ceil(m);
            let u = vec_of(f, u, c * outs)?;
            let xs = vec_of(f, x, c * n)?;
            let mut g = vec![0.0; c * n];
            for k in 0..c {
                for i in 0..outs {
                    let (s, e) = window(i, n, m);
                    let win = &xs[k * n + s..k * n + e];
                    let j = argmax(f, win, k * n + s, tie)?;
                    g[k * n + s + j] += u[k * outs + i];
                }
            }
            Ok(out(g))
        }
        Prim::Padding => {
            let (c, n, m) = (d[0], d[1], d[2]);
            let u = vec_of(f, u, c * m)?;
            vec_of(f, x, c * n)?;
            let before = (m - n) / 2;
            Ok(out((0..c).flat_map(|k| (0..n).map(move |i| u[k * m + before + i])).collect()))
        }
        Prim::Upscale => {
            let (c, n, m) = (d[0], d[1], d[2]);
            let u = vec_of(f, u, c * m)?;
            vec_of(f, x, c * n)?;
            let mut g = vec![0.0; c * n];
            for k in 0..c {
                for i in 0..m {
                    g[k * n + i * n / m] += u[k * m + i];
                }
            }
            Ok(out(g))
        }
        Prim::Concat => {
            let (c, c2, n) = (d[0], d[1], d[2]);
            let u = vec_of(f, u, (c + c2) * n)?;
            let (a, b) = pair_of(f, x)?;
            vec_of(f, a, c * n)?;
            vec_of(f, b, c2 * n)?;
            Ok(Value::pair(out(u[..c * n].to_vec()), out(u[c * n..].to_vec())))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(p: Prim, dims: &[usize]) -> FunSym {
        FunSym::new(p, dims.to_vec())
    }

    fn v(xs: &[f64]) -> Value {
        Value::vec(xs.to_vec())
    }

    #[test]
    fn matmul_row_major() {
        let r = ev(&f(Prim::Matmul, &[2, 2]), &Value::pair(v(&[1., 2., 3., 4.]), v(&[5., 6.])), TieBreak::Strict);
        assert_eq!(r.unwrap(), v(&[17., 39.]));
    }

    #[test]
    fn conv_single_channel() {
        let r = ev(&f(Prim::Conv, &[3, 2, 1, 1]), &Value::pair(v(&[1., 2., 3.]), v(&[1., 1.])), TieBreak::Strict);
        assert_eq!(r.unwrap(), v(&[3., 5.]));
    }

    #[test]
    fn swish_zero() {
        assert_eq!(ev(&f(Prim::Swish, &[1]), &v(&[0.]), TieBreak::Strict).unwrap(), v(&[0.]));
    }

    #[test]
    fn pool_ties() {
        let p = f(Prim::Pool, &[2, 2, 1]);
        assert!(matches!(ev(&p, &v(&[1., 1.]), TieBreak::Strict), Err(EvalError::Partiality { .. })));
        assert_eq!(ev(&p, &v(&[1., 1.]), TieBreak::First).unwrap(), v(&[1.]));
        let p = f(Prim::Pool, &[5, 2, 1]);
        assert_eq!(ev(&p, &v(&[1., 3., 2., 0., 7.]), TieBreak::Strict).unwrap(), v(&[3., 2., 7.]));
    }

    #[test]
    fn pool_rd_scatters_to_argmax() {
        let p = f(Prim::Pool, &[4, 2, 1]).rd_of();
        let r = ev(&p, &Value::pair(v(&[10., 20.]), v(&[1., 3., 5., 2.])), TieBreak::Strict).unwrap();
        assert_eq!(r, v(&[0., 10., 20., 0.]));
    }

    #[test]
    fn padding_and_upscale() {
        let p = f(Prim::Padding, &[1, 2, 5]);
        assert_eq!(ev(&p, &v(&[1., 2.]), TieBreak::Strict).unwrap(), v(&[0., 1., 2., 0., 0.]));
        let u = f(Prim::Upscale, &[1, 2, 4]);
        assert_eq!(ev(&u, &v(&[1., 2.]), TieBreak::Strict).unwrap(), v(&[1., 1., 2., 2.]));
    }

    #[test]
    fn transpose_inverts() {
        let t = f(Prim::Transpose, &[3, 2]);
        let w = v(&[1., 2., 3., 4., 5., 6.]);
        let wt = ev(&t, &w, TieBreak::Strict).unwrap();
        assert_eq!(wt, v(&[1., 4., 2., 5., 3., 6.]));
        let back = ev(&f(Prim::Transpose, &[2, 3]), &wt, TieBreak::Strict).unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn round_rd_is_zero() {
        let r = ev(&f(Prim::Round, &[2]).rd_of(), &Value::pair(v(&[1., 1.]), v(&[0.3, 0.7])), TieBreak::Strict);
        assert_eq!(r.unwrap(), v(&[0., 0.]));
    }
}
