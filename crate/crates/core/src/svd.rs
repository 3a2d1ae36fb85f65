//! Thin singular value decomposition by one-sided (Hestenes) Jacobi rotations.
//!
//! Rotations act on the vectors of the shorter dimension, so a 30 × 10 000
//! matrix is orthogonalised through 30 rows of length 10 000 and the work per
//! sweep is O(k² l) with k = min(m, n). Each sweep visits all pairs in a
//! round-robin schedule; the pairs of one round are disjoint and are rotated
//! in parallel, which gives the same result as a sequential pass.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::par;

const MAX_SWEEPS: usize = 100;

/// `A = U diag(s) Vᵀ` with `U` m×k, `V` n×k and k = min(m, n).
///
/// Singular values are sorted in descending order. Each pair `(u_k, v_k)` is
/// signed so that the largest-magnitude entry of `u_k` is positive (first such
/// entry on ties). Right vectors belonging to zero singular values are zero.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: Array2<f64>,
    pub s: Vec<f64>,
    pub v: Array2<f64>,
}

pub fn thin_svd(a: ArrayView2<f64>) -> Result<ThinSvd> {
    let (m, n) = a.dim();
    if m <= n {
        let (short, long, s) = jacobi_rows(a)?;
        Ok(ThinSvd { u: short, s, v: long })
    } else {
        // Aᵀ = W Σ Bᵀ  ⇒  A = B Σ Wᵀ
        let (short, long, s) = jacobi_rows(a.t())?;
        let mut svd = ThinSvd { u: long, s, v: short };
        fix_signs(&mut svd);
        Ok(svd)
    }
}

/// Orthogonalises the rows of `x` (k×l, k ≤ l). Returns `(W, B̂, σ)` with
/// `x = W diag(σ) B̂ᵀ`, W k×k orthogonal and B̂ l×k, sorted and sign-fixed on W.
fn jacobi_rows(x: ArrayView2<f64>) -> Result<(Array2<f64>, Array2<f64>, Vec<f64>)> {
    let (k, l) = x.dim();
    let mut rows: Vec<Vec<f64>> = x.rows().into_iter().map(|r| r.to_vec()).collect();
    // wt[p] holds column p of W.
    let mut wt: Vec<Vec<f64>> = (0..k)
        .map(|p| (0..k).map(|i| f64::from(u8::from(i == p))).collect())
        .collect();
    let tol = f64::EPSILON * (l as f64).sqrt();
    // Rows whose squared norm falls below this are rounding residue of a
    // rank-deficient input; rotating them never settles.
    let frob2: f64 = rows.iter().map(|r| dot(r, r)).sum();
    let negligible = (f64::EPSILON * f64::EPSILON) * frob2;
    let schedule = round_robin(k);

    let mut converged = k < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotations = 0;
        for round in &schedule {
            let mut work: Vec<PairWork> = round
                .iter()
                .map(|&(p, q)| PairWork {
                    p,
                    q,
                    rp: std::mem::take(&mut rows[p]),
                    rq: std::mem::take(&mut rows[q]),
                    wp: std::mem::take(&mut wt[p]),
                    wq: std::mem::take(&mut wt[q]),
                    rotated: false,
                })
                .collect();
            par::for_each_mut(&mut work, |w| w.rotate(tol, negligible));
            for w in work {
                rotations += usize::from(w.rotated);
                rows[w.p] = w.rp;
                rows[w.q] = w.rq;
                wt[w.p] = w.wp;
                wt[w.q] = w.wq;
            }
        }
        converged = rotations == 0;
    }
    if !converged {
        return Err(Error::SvdNoConvergence { sweeps: MAX_SWEEPS });
    }

    let mut triples: Vec<(f64, Vec<f64>, Vec<f64>)> = rows
        .into_iter()
        .zip(wt)
        .map(|(r, mut w)| {
            let sigma = dot(&r, &r).sqrt();
            let mut v: Vec<f64> = if sigma > 0.0 {
                r.iter().map(|x| x / sigma).collect()
            } else {
                vec![0.0; l]
            };
            if largest_entry_negative(&w) {
                w.iter_mut().for_each(|x| *x = -*x);
                v.iter_mut().for_each(|x| *x = -*x);
            }
            (sigma, w, v)
        })
        .collect();
    triples.sort_by(|a, b| {
        b.0.total_cmp(&a.0).then_with(|| {
            a.1.iter()
                .zip(&b.1)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });

    let s = triples.iter().map(|t| t.0).collect();
    let w = Array2::from_shape_fn((k, k), |(i, c)| triples[c].1[i]);
    let b = Array2::from_shape_fn((l, k), |(j, c)| triples[c].2[j]);
    Ok((w, b, s))
}

struct PairWork {
    p: usize,
    q: usize,
    rp: Vec<f64>,
    rq: Vec<f64>,
    wp: Vec<f64>,
    wq: Vec<f64>,
    rotated: bool,
}

impl PairWork {
    fn rotate(&mut self, tol: f64, negligible: f64) {
        let alpha = dot(&self.rp, &self.rp);
        let beta = dot(&self.rq, &self.rq);
        let gamma = dot(&self.rp, &self.rq);
        if alpha.min(beta) <= negligible || gamma.abs() <= tol * (alpha * beta).sqrt() {
            return;
        }
        let zeta = (beta - alpha) / (2.0 * gamma);
        let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
        let c = 1.0 / (1.0 + t * t).sqrt();
        let s = c * t;
        rotate_pair(&mut self.rp, &mut self.rq, c, s);
        rotate_pair(&mut self.wp, &mut self.wq, c, s);
        self.rotated = true;
    }
}

fn rotate_pair(a: &mut [f64], b: &mut [f64], c: f64, s: f64) {
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xa, yb) = (*x, *y);
        *x = c * xa - s * yb;
        *y = s * xa + c * yb;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn largest_entry_negative(x: &[f64]) -> bool {
    let mut best = 0.0_f64;
    let mut negative = false;
    for &v in x {
        if v.abs() > best {
            best = v.abs();
            negative = v < 0.0;
        }
    }
    negative
}

fn fix_signs(svd: &mut ThinSvd) {
    for c in 0..svd.s.len() {
        let col: Vec<f64> = svd.u.column(c).to_vec();
        if largest_entry_negative(&col) {
            svd.u.column_mut(c).mapv_inplace(|x| -x);
            svd.v.column_mut(c).mapv_inplace(|x| -x);
        }
    }
}

/// Circle-method schedule: every unordered pair of `0..k` appears exactly once,
/// and pairs within a round are disjoint.
fn round_robin(k: usize) -> Vec<Vec<(usize, usize)>> {
    if k < 2 {
        return Vec::new();
    }
    let players = k + k % 2;
    let fixed = players - 1;
    (0..fixed)
        .map(|r| {
            let mut pairs = vec![(r, fixed)];
            for i in 1..players / 2 {
                pairs.push(((r + i) % fixed, (r + fixed - i) % fixed));
            }
            pairs
                .into_iter()
                .filter(|&(p, q)| p < k && q < k)
                .map(|(p, q)| (p.min(q), p.max(q)))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use std::collections::HashSet;

    fn reconstruct(svd: &ThinSvd) -> Array2<f64> {
        let mut out = Array2::zeros((svd.u.nrows(), svd.v.nrows()));
        for (k, &s) in svd.s.iter().enumerate() {
            for i in 0..out.nrows() {
                for j in 0..out.ncols() {
                    out[[i, j]] += s * svd.u[[i, k]] * svd.v[[j, k]];
                }
            }
        }
        out
    }

    #[test]
    fn schedule_covers_every_pair_once() {
        for k in 1..12 {
            let sched = round_robin(k);
            let mut seen = HashSet::new();
            for round in &sched {
                let mut used = HashSet::new();
                for &(p, q) in round {
                    assert!(used.insert(p) && used.insert(q), "overlap in round");
                    assert!(seen.insert((p, q)), "pair repeated");
                }
            }
            assert_eq!(seen.len(), k * k.saturating_sub(1) / 2);
        }
    }

    #[test]
    fn diagonal_matrix() {
        let a = array![[0.0, 0.0, 0.0], [0.0, 3.0, 0.0]];
        let svd = thin_svd(a.view()).unwrap();
        assert_eq!(svd.s, vec![3.0, 0.0]);
        assert_eq!(svd.u.column(0).to_vec(), vec![0.0, 1.0]);
        assert_eq!(svd.v.column(0).to_vec(), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn wide_and_tall_agree() {
        let a = array![[1.0, 2.0, 0.5, -1.0], [3.0, -1.0, 2.0, 0.0], [0.0, 1.0, 1.0, 4.0]];
        let wide = thin_svd(a.view()).unwrap();
        let tall = thin_svd(a.t()).unwrap();
        for (x, y) in wide.s.iter().zip(&tall.s) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((reconstruct(&wide) - &a).iter().all(|d| d.abs() < 1e-12));
        assert!((reconstruct(&tall) - a.t()).iter().all(|d| d.abs() < 1e-12));
        // u of A is v of Aᵀ up to the sign convention, which is fixed on u.
        for c in 0..3 {
            let dotp: f64 = wide.u.column(c).dot(&tall.v.column(c));
            assert!((dotp.abs() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn sign_convention_holds() {
        let a = array![[-4.0, 1.0], [-1.0, 2.0], [0.5, -3.0]];
        let svd = thin_svd(a.view()).unwrap();
        for c in 0..svd.s.len() {
            let col = svd.u.column(c);
            let big = col.iter().copied().fold(0.0_f64, |b, x| if x.abs() > b.abs() { x } else { b });
            assert!(big > 0.0);
        }
    }

    #[test]
    fn rank_deficient_input_converges() {
        let outer = |u: &[f64], v: &[f64]| Array2::from_shape_fn((u.len(), v.len()), |(i, j)| u[i] * v[j]);
        let r1 = outer(&[1.0, -1.0, 2.0, -2.0], &[3.0, -1.0, -2.0]);
        let r2 = &outer(&[0.3, 1.7, -2.0, 0.1, 0.9], &[1.0, 2.0, -0.5, 0.25, 4.0, -3.0])
            + &outer(&[2.0, -1.0, 0.0, 0.5, 1.5], &[-1.0, 0.0, 2.0, 3.0, 0.5, 1.0]);
        for a in [r1.clone(), r1.t().to_owned(), r2.clone(), r2.t().to_owned()] {
            let svd = thin_svd(a.view()).unwrap();
            assert!((reconstruct(&svd) - &a).iter().all(|d| d.abs() < 1e-12));
        }
        assert!(thin_svd(r2.view()).unwrap().s[2] < 1e-14);
    }
}
