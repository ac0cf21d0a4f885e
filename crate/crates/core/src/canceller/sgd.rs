//! Block loss and its gradient with respect to the inner weights.
//!
//! For a block `B`, `L = Σ_{t∈B} |(G * (rx − y))(t)|² / Σ_{t∈B} |rx(t)|²`,
//! where `G` is the in-band FIR and `y` the model with outer gains `g` held
//! fixed. The gradient is returned as `∂L/∂Re w + i ∂L/∂Im w`.

use num_complex::Complex64;

use super::basis::BfTerm;
use super::coeffs::{combine_range, ChannelCoeffs};
use super::refs::CcReferences;
use crate::error::{PimError, Result};

/// Everything a block step needs besides the weights.
pub struct BlockProblem<'a> {
    pub refs: &'a CcReferences,
    pub rx: &'a [Complex64],
    pub terms: &'a [BfTerm],
    /// Outer gains, `g[s][term]`.
    pub g: &'a [Vec<Complex64>],
    pub fir: &'a [f64],
}

struct Window {
    /// Input index of window sample 0.
    start: i64,
    vl: Vec<Vec<Complex64>>,
    vh: Vec<Vec<Complex64>>,
}

impl BlockProblem<'_> {
    fn span(&self) -> i64 {
        self.terms.iter().map(|t| t.span()).max().unwrap_or(0) as i64
    }

    fn half(&self) -> i64 {
        (self.fir.len() / 2) as i64
    }

    fn window(&self, w: &ChannelCoeffs, b0: usize, len: usize) -> Window {
        let start = b0 as i64 - self.half() - self.span();
        let n = len + 2 * (self.half() + self.span()) as usize;
        let vl = (0..w.n_sources).map(|s| combine_range(w, self.refs, s, 0, start, n)).collect();
        let vh = (0..w.n_sources).map(|s| combine_range(w, self.refs, s, 1, start, n)).collect();
        Window { start, vl, vh }
    }

    /// Terms sharing `(m, k)`, as `(m, k, [(i, j, term index)])`.
    fn groups(&self) -> Vec<(i64, i64, Vec<(i32, i32, usize)>)> {
        let mut out: Vec<(i64, i64, Vec<(i32, i32, usize)>)> = Vec::new();
        for (idx, t) in self.terms.iter().enumerate() {
            let (m, k) = (t.m as i64, t.k as i64);
            match out.iter_mut().find(|g| g.0 == m && g.1 == k) {
                Some(g) => g.2.push((t.i as i32, t.j as i32, idx)),
                None => out.push((m, k, vec![(t.i as i32, t.j as i32, idx)])),
            }
        }
        out
    }

    /// Model output at absolute sample positions `[p0, p0 + n)`.
    fn model(&self, win: &Window, p0: i64, n: usize) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        let groups = self.groups();
        for (s, gs) in self.g.iter().enumerate() {
            let (vl, vh) = (&win.vl[s], &win.vh[s]);
            for (m, k, members) in &groups {
                for (idx, out) in y.iter_mut().enumerate() {
                    if !self.inside(p0 + idx as i64) {
                        continue;
                    }
                    let t = p0 + idx as i64 - win.start;
                    let ta = (t - m) as usize;
                    let tb = (t - m - k) as usize;
                    let (a, b, c) = (vl[ta], vl[tb], vh[tb]);
                    let (bb, cc) = (b.norm_sqr(), c.norm_sqr());
                    let mut phi = Complex64::new(0.0, 0.0);
                    for &(i, j, ti) in members {
                        phi += gs[ti] * (powu(bb, i) * powu(cc, j));
                    }
                    *out += a * b * c.conj() * phi;
                }
            }
        }
        y
    }

    /// The model, like the LS columns, is zero outside the record.
    fn inside(&self, t: i64) -> bool {
        t >= 0 && (t as usize) < self.rx.len()
    }

    fn rx_at(&self, t: i64) -> Complex64 {
        if self.inside(t) {
            self.rx[t as usize]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    fn filtered(&self, r: &[Complex64], len: usize) -> Vec<Complex64> {
        // r covers [b0 − half, b0 + len + half); output t ↔ r[t + 2·half − i].
        (0..len)
            .map(|t| {
                self.fir
                    .iter()
                    .enumerate()
                    .map(|(i, &h)| r[t + self.fir.len() - 1 - i] * h)
                    .sum()
            })
            .collect()
    }

    fn check(&self, w: &ChannelCoeffs, b0: usize, len: usize) -> Result<()> {
        if w.n_chains != self.refs.n_chains() || self.g.len() != w.n_sources {
            return Err(PimError::dim("weights, gains and references disagree in shape"));
        }
        if self.g.iter().any(|g| g.len() != self.terms.len()) {
            return Err(PimError::dim("one outer gain per term and source"));
        }
        if len == 0 || b0 + len > self.rx.len() {
            return Err(PimError::dim(format!("block [{b0}, {}) outside the record", b0 + len)));
        }
        if len <= self.span() as usize {
            return Err(PimError::dim("block shorter than the basis memory"));
        }
        Ok(())
    }

    /// Block loss only.
    pub fn loss(&self, w: &ChannelCoeffs, b0: usize, len: usize) -> Result<f64> {
        Ok(self.loss_and_grad_inner(w, b0, len, false)?.0)
    }

    /// Block loss and gradient, laid out like `w.data`.
    pub fn loss_and_grad(&self, w: &ChannelCoeffs, b0: usize, len: usize) -> Result<(f64, Vec<Complex64>)> {
        self.loss_and_grad_inner(w, b0, len, true)
    }

    fn loss_and_grad_inner(&self, w: &ChannelCoeffs, b0: usize, len: usize, want_grad: bool) -> Result<(f64, Vec<Complex64>)> {
        self.check(w, b0, len)?;
        let half = self.half();
        let win = self.window(w, b0, len);
        let p0 = b0 as i64 - half;
        let plen = len + 2 * half as usize;
        let y = self.model(&win, p0, plen);
        let rxw: Vec<Complex64> = (0..plen).map(|i| self.rx_at(p0 + i as i64)).collect();
        let r: Vec<Complex64> = rxw.iter().zip(&y).map(|(a, b)| a - b).collect();
        let e = self.filtered(&r, len);
        // RX is already band-limited, so its raw block energy serves as the scale.
        let norm = rxw[half as usize..half as usize + len]
            .iter()
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            .max(f64::MIN_POSITIVE);
        let loss = e.iter().map(|v| v.norm_sqr()).sum::<f64>() / norm;
        if !want_grad {
            return Ok((loss, Vec::new()));
        }
        // z(s) = Σ_t e(t) h[t + half − s], s over the padded range.
        let lg = self.fir.len();
        let mut z = vec![Complex64::new(0.0, 0.0); plen];
        for (t, &et) in e.iter().enumerate() {
            for (i, &h) in self.fir.iter().enumerate() {
                z[t + lg - 1 - i] += et * h;
            }
        }
        let mut grad = vec![Complex64::new(0.0, 0.0); w.data.len()];
        let wn = win.vl[0].len();
        let groups = self.groups();
        for (s, gs) in self.g.iter().enumerate() {
            let (vl, vh) = (&win.vl[s], &win.vh[s]);
            let mut gam_l = vec![Complex64::new(0.0, 0.0); wn];
            let mut gam_h = vec![Complex64::new(0.0, 0.0); wn];
            for (m, k, members) in &groups {
                for (idx, &zs) in z.iter().enumerate() {
                    if !self.inside(p0 + idx as i64) {
                        continue;
                    }
                    let t = p0 + idx as i64 - win.start;
                    let ta = (t - m) as usize;
                    let tb = (t - m - k) as usize;
                    let (a, b, c) = (vl[ta], vl[tb], vh[tb]);
                    let (bb, cc) = (b.norm_sqr(), c.norm_sqr());
                    // Φ(|b|², |c|²) and its partial derivatives in |b|², |c|².
                    let mut phi = Complex64::new(0.0, 0.0);
                    let mut phi_b = Complex64::new(0.0, 0.0);
                    let mut phi_c = Complex64::new(0.0, 0.0);
                    for &(i, j, ti) in members {
                        let g = gs[ti];
                        phi += g * (powu(bb, i) * powu(cc, j));
                        if i > 0 {
                            phi_b += g * (i as f64 * powu(bb, i - 1) * powu(cc, j));
                        }
                        if j > 0 {
                            phi_c += g * (j as f64 * powu(bb, i) * powu(cc, j - 1));
                        }
                    }
                    let cbar = c.conj();
                    let zc = zs.conj();
                    let abc = a * b * cbar;
                    let d_a = b * cbar * phi;
                    let d_b = a * cbar * (phi + phi_b * bb);
                    let d_bbar = abc * b * phi_b;
                    let d_c = abc * cbar * phi_c;
                    let d_cbar = a * b * (phi + phi_c * cc);
                    gam_l[ta] += zc * d_a;
                    gam_l[tb] += zc * d_b + zs * d_bbar.conj();
                    gam_h[tb] += zc * d_c + zs * d_cbar.conj();
                }
            }
            for (c, gam) in [(0usize, &gam_l), (1, &gam_h)] {
                let x = self.refs.carrier(c);
                let base = (s * 2 + c) * w.n_chains;
                for (n, xn) in x.iter().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (u, &gu) in gam.iter().enumerate() {
                        let idx = win.start + u as i64;
                        if idx >= 0 && (idx as usize) < xn.len() {
                            acc += gu * xn[idx as usize];
                        }
                    }
                    grad[base + n] = -2.0 * acc.conj() / norm;
                }
            }
        }
        Ok((loss, grad))
    }
}

/// One normalized step on block `[b0, b0 + len)`: each `(source, carrier)`
/// weight vector moves by `step · ‖w‖` against its own gradient direction.
/// The model is invariant to the scale of `w` (the outer gains absorb it), so
/// the step is expressed relative to that scale.
pub fn sgd_update(
    w: &ChannelCoeffs,
    problem: &BlockProblem<'_>,
    b0: usize,
    len: usize,
    step: f64,
    step_index: usize,
) -> Result<(ChannelCoeffs, f64)> {
    let (loss, grad) = problem.loss_and_grad(w, b0, len)?;
    if !loss.is_finite() || grad.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(PimError::NonFiniteGradient { step: step_index });
    }
    let mut out = w.clone();
    let nc = w.n_chains;
    for block in 0..w.n_sources * 2 {
        let r = block * nc..(block + 1) * nc;
        let gn = grad[r.clone()].iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let wn = w.data[r.clone()].iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if gn == 0.0 {
            continue;
        }
        let s = step * wn / gn;
        for (o, gv) in out.data[r].iter_mut().zip(&grad[block * nc..(block + 1) * nc]) {
            *o -= gv * s;
        }
    }
    Ok((out, loss))
}

#[inline]
fn powu(x: f64, e: i32) -> f64 {
    match e {
        0 => 1.0,
        1 => x,
        2 => x * x,
        _ => x.powi(e),
    }
}
