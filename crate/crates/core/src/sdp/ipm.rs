//! Homogeneous self-dual primal-dual interior-point method.
//!
//! In cone-program notation the standard form reads `min c^T x` subject to
//! `G x + s = h`, `s >= 0`, with `G = -F` and `h = -F_0`. The iteration
//! works on the self-dual embedding with variables `(x, s, z, tau, kappa)`,
//! Nesterov-Todd scaling recomputed every iteration and a Mehrotra
//! predictor-corrector step. Diagonal blocks are split into scalar cones.
//!
//! Symmetric block quantities are handled in `svec` form: the upper
//! triangle with off-diagonal entries scaled by `sqrt(2)`, so that the
//! trace inner product becomes a dot product.

use nalgebra::{DMatrix, DVector};

use super::schur::EnvelopeMatrix;
use super::{Backend, SdpStandardForm, SolveOptions, SolveStatus, StandardSolution};
use crate::{Error, Matrix, Result};

const STEP: f64 = 0.99;
const SQRT2: f64 = std::f64::consts::SQRT_2;

/// The default backend.
#[derive(Debug, Clone, Copy, Default)]
pub struct EmbeddedSolver;

impl Backend for EmbeddedSolver {
    fn solve_standard(
        &self,
        form: &SdpStandardForm,
        shifts: Option<&[f64]>,
        options: &SolveOptions,
    ) -> Result<StandardSolution> {
        form.validate()?;
        let problem = Problem::new(form, shifts)?;
        Ok(problem.solve(options))
    }
}

fn svec_len(d: usize) -> usize {
    d * (d + 1) / 2
}

fn svec(m: &Matrix) -> DVector<f64> {
    let d = m.nrows();
    let mut v = DVector::zeros(svec_len(d));
    let mut k = 0;
    for i in 0..d {
        v[k] = m[(i, i)];
        k += 1;
        for j in i + 1..d {
            v[k] = SQRT2 * 0.5 * (m[(i, j)] + m[(j, i)]);
            k += 1;
        }
    }
    v
}

fn smat(v: &[f64], d: usize) -> Matrix {
    let mut m = Matrix::zeros(d, d);
    let mut k = 0;
    for i in 0..d {
        m[(i, i)] = v[k];
        k += 1;
        for j in i + 1..d {
            let x = v[k] / SQRT2;
            m[(i, j)] = x;
            m[(j, i)] = x;
            k += 1;
        }
    }
    m
}

fn sym(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

fn inner(a: &Matrix, b: &Matrix) -> f64 {
    a.dot(b)
}

/// One cone block: `sum_i x_i F_i - F_0 >= 0` restricted to the block.
struct Block {
    dim: usize,
    vars: Vec<usize>,
    /// Row `k` is `svec(F_{vars[k]})`.
    coef: DMatrix<f64>,
    f0: Matrix,
    shift: Option<f64>,
    /// Envelope slots of the lower-triangle pairs `(a, b)`, `b <= a`.
    positions: Vec<usize>,
}

impl Block {
    /// `F(x)` restricted to this block.
    fn apply(&self, x: &[f64]) -> Matrix {
        let xb = DVector::from_iterator(self.vars.len(), self.vars.iter().map(|&v| x[v]));
        smat((self.coef.transpose() * xb).as_slice(), self.dim)
    }

    /// `<F_i, V>` for every variable of the block, accumulated into `out`.
    fn adjoint_into(&self, v: &Matrix, out: &mut [f64]) {
        let p = &self.coef * svec(v);
        for (k, &var) in self.vars.iter().enumerate() {
            out[var] += p[k];
        }
    }
}

struct Problem {
    m: usize,
    c: Vec<f64>,
    blocks: Vec<Block>,
    env: EnvelopeMatrix,
    /// Every block carries a certification shift.
    all_certified: bool,
}

/// Nesterov-Todd scaling of one block.
struct Scaling {
    r: Matrix,
    rti: Matrix,
    lambda: DVector<f64>,
}

impl Scaling {
    fn new(s: &Matrix, z: &Matrix) -> Option<Self> {
        if s.nrows() == 1 {
            let (s, z) = (s[(0, 0)], z[(0, 0)]);
            if !(s > 0.0 && z > 0.0) {
                return None;
            }
            let q = (s / z).sqrt().sqrt();
            return Some(Self {
                r: Matrix::from_element(1, 1, q),
                rti: Matrix::from_element(1, 1, 1.0 / q),
                lambda: DVector::from_element(1, (s * z).sqrt()),
            });
        }
        let l = s.clone().cholesky()?.l();
        let l2 = z.clone().cholesky()?.l();
        let svd = (l2.transpose() * &l).svd(true, true);
        let u = svd.u?;
        let v = svd.v_t?.transpose();
        let lambda = svd.singular_values;
        if lambda.iter().any(|&x| !(x > 0.0)) {
            return None;
        }
        let inv_sqrt = Matrix::from_diagonal(&lambda.map(|x| 1.0 / x.sqrt()));
        Some(Self { r: l * v * &inv_sqrt, rti: l2 * u * inv_sqrt, lambda })
    }

    fn scale_s(&self, m: &Matrix) -> Matrix {
        sym(&(self.rti.transpose() * m * &self.rti))
    }

    /// `lambda \ rhs`: the `D` with `(Lambda D + D Lambda) / 2 = rhs`.
    fn divide(&self, rhs: &Matrix) -> Matrix {
        let d = rhs.nrows();
        Matrix::from_fn(d, d, |i, j| 2.0 * rhs[(i, j)] / (self.lambda[i] + self.lambda[j]))
    }

    /// Largest `alpha` with `Lambda + alpha * delta >= 0`.
    fn max_step(&self, delta: &Matrix) -> f64 {
        let d = delta.nrows();
        let min_eig = if d == 1 {
            delta[(0, 0)] / self.lambda[0]
        } else {
            let w = self.lambda.map(|x| 1.0 / x.sqrt());
            let scaled = Matrix::from_fn(d, d, |i, j| w[i] * delta[(i, j)] * w[j]);
            sym(&scaled).symmetric_eigenvalues().min()
        };
        if min_eig < 0.0 {
            -1.0 / min_eig
        } else {
            f64::INFINITY
        }
    }
}

struct Iterate {
    x: Vec<f64>,
    s: Vec<Matrix>,
    z: Vec<Matrix>,
    tau: f64,
    kappa: f64,
}

struct Direction {
    dx: Vec<f64>,
    ds: Vec<Matrix>,
    dz: Vec<Matrix>,
    dtau: f64,
    dkappa: f64,
}

/// Quantities shared by the predictor and corrector solves.
struct Newton<'a> {
    scalings: &'a [Scaling],
    /// Scaled coefficient rows per block.
    scaled: Vec<DMatrix<f64>>,
    f0_scaled: Vec<Matrix>,
    u2: Vec<f64>,
    z2: Vec<Matrix>,
    c_u2: f64,
    f0_z2: f64,
}

impl Problem {
    fn new(form: &SdpStandardForm, shifts: Option<&[f64]>) -> Result<Self> {
        let m = form.variable_count();
        if m == 0 {
            return Err(Error::Precondition("problem has no variables".into()));
        }
        if let Some(s) = shifts {
            if s.len() != form.blocks.len() {
                return Err(Error::Dimension("one certification shift per block required".into()));
            }
        }
        let mut blocks = Vec::new();
        for (b, cb) in form.blocks.iter().enumerate() {
            let shift = shifts.map(|s| s[b]).filter(|&s| s > 0.0);
            if cb.diagonal {
                for i in 0..cb.dim {
                    let pick = |e: &Vec<(usize, usize, f64)>| e.iter().find(|&&(r, _, _)| r == i).map_or(0.0, |t| t.2);
                    let entries: Vec<(usize, f64)> = cb
                        .coefficients
                        .iter()
                        .map(|(v, e)| (*v, pick(e)))
                        .filter(|(_, x)| *x != 0.0)
                        .collect();
                    blocks.push(Block {
                        dim: 1,
                        vars: entries.iter().map(|e| e.0).collect(),
                        coef: DMatrix::from_iterator(entries.len(), 1, entries.iter().map(|e| e.1)),
                        f0: Matrix::from_element(1, 1, pick(&cb.constant)),
                        shift,
                        positions: Vec::new(),
                    });
                }
            } else {
                let d = cb.dim;
                let nv = cb.coefficients.len();
                let mut coef = DMatrix::zeros(nv, svec_len(d));
                for (k, (_, entries)) in cb.coefficients.iter().enumerate() {
                    for &(i, j, v) in entries {
                        coef[(k, svec_index(d, i, j))] = if i == j { v } else { SQRT2 * v };
                    }
                }
                blocks.push(Block {
                    dim: d,
                    vars: cb.coefficients.iter().map(|c| c.0).collect(),
                    coef,
                    f0: dense(d, &cb.constant),
                    shift,
                    positions: Vec::new(),
                });
            }
        }
        let mut adjacency = vec![Vec::new(); m];
        for blk in &blocks {
            for &a in &blk.vars {
                adjacency[a].extend(blk.vars.iter().copied().filter(|&b| b != a));
            }
        }
        for a in adjacency.iter_mut() {
            a.sort_unstable();
            a.dedup();
        }
        let env = EnvelopeMatrix::new(&adjacency);
        for blk in blocks.iter_mut() {
            let n = blk.vars.len();
            let mut pos = Vec::with_capacity(n * (n + 1) / 2);
            for a in 0..n {
                for b in 0..=a {
                    pos.push(env.position(blk.vars[a], blk.vars[b]));
                }
            }
            blk.positions = pos;
        }
        let all_certified = blocks.iter().all(|b| b.shift.is_some());
        Ok(Self { m, c: form.objective.clone(), blocks, env, all_certified })
    }

    fn degree(&self) -> f64 {
        self.blocks.iter().map(|b| b.dim).sum::<usize>() as f64
    }

    fn adjoint(&self, z: &[Matrix]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for (blk, zb) in self.blocks.iter().zip(z) {
            blk.adjoint_into(zb, &mut out);
        }
        out
    }

    fn f0_dot(&self, z: &[Matrix]) -> f64 {
        self.blocks.iter().zip(z).map(|(b, zb)| inner(&b.f0, zb)).sum()
    }

    /// Assembles and factors `M_ij = <F~_i, F~_j>` for the given scaled rows.
    fn factor_schur(&mut self, scaled: &[DMatrix<f64>]) {
        self.env.clear();
        for (blk, q) in self.blocks.iter().zip(scaled) {
            let g = q * q.transpose();
            let n = blk.vars.len();
            let mut k = 0;
            for a in 0..n {
                for b in 0..=a {
                    self.env.add_at(blk.positions[k], g[(a, b)]);
                    k += 1;
                }
            }
        }
        self.env.factorize();
    }

    fn schur_solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.env.solve(rhs, 2)
    }

    fn initial_point(&mut self) -> Iterate {
        let identity: Vec<DMatrix<f64>> = self.blocks.iter().map(|b| b.coef.clone()).collect();
        self.factor_schur(&identity);
        let f0_adj = self.adjoint(&self.blocks.iter().map(|b| b.f0.clone()).collect::<Vec<_>>());
        let x = self.schur_solve(&f0_adj);
        let w = self.schur_solve(&self.c);
        let mut s: Vec<Matrix> = self.blocks.iter().map(|b| b.apply(&x) - &b.f0).collect();
        let mut z: Vec<Matrix> = self.blocks.iter().map(|b| b.apply(&w)).collect();
        shift_into_cone(&mut s);
        shift_into_cone(&mut z);
        Iterate { x, s, z, tau: 1.0, kappa: 1.0 }
    }

    fn solve(mut self, opt: &SolveOptions) -> StandardSolution {
        let mut it = self.initial_point();
        let c_norm = norm(&self.c).max(1.0);
        let h_norm = self.blocks.iter().map(|b| b.f0.norm_squared()).sum::<f64>().sqrt().max(1.0);
        let degree = self.degree();
        let mut last = StandardSolution {
            status: SolveStatus::MaxIterations,
            y: vec![0.0; self.m],
            primal_objective: f64::NAN,
            dual_objective: f64::NAN,
            gap: f64::NAN,
            iterations: 0,
            primal_residual: f64::NAN,
            dual_residual: f64::NAN,
        };

        for iter in 0..=opt.max_iter {
            let fz = self.adjoint(&it.z);
            let rx: Vec<f64> = fz.iter().zip(&self.c).map(|(f, c)| -f + c * it.tau).collect();
            let fx: Vec<Matrix> = self.blocks.iter().map(|b| b.apply(&it.x)).collect();
            let rz: Vec<Matrix> = self
                .blocks
                .iter()
                .zip(&it.s)
                .zip(&fx)
                .map(|((b, s), f)| s - f + &b.f0 * it.tau)
                .collect();
            let cx = dot(&self.c, &it.x);
            let f0z = self.f0_dot(&it.z);
            let rt = it.kappa + cx - f0z;
            let sz: f64 = it.s.iter().zip(&it.z).map(|(s, z)| inner(s, z)).sum();

            let pcost = cx / it.tau;
            let dcost = f0z / it.tau;
            let gap = sz / (it.tau * it.tau);
            let pres = mat_norm(&rz) / it.tau / h_norm;
            let dres = norm(&rx) / it.tau / c_norm;
            let relgap = if pcost < 0.0 {
                Some(gap / -pcost)
            } else if dcost > 0.0 {
                Some(gap / dcost)
            } else {
                None
            };
            let y: Vec<f64> = it.x.iter().map(|v| v / it.tau).collect();
            last = StandardSolution {
                status: SolveStatus::MaxIterations,
                y,
                primal_objective: pcost,
                dual_objective: dcost,
                gap,
                iterations: iter,
                primal_residual: pres,
                dual_residual: dres,
            };

            let certified = self.certified(&last.y);
            let gap_ok = gap <= opt.tolerance || relgap.is_some_and(|g| g <= opt.tolerance);
            // an exact eigenvalue check of every block supersedes the residual test
            let primal_ok = pres <= opt.feasibility_tolerance || (self.all_certified && certified);
            if primal_ok && dres <= opt.feasibility_tolerance && gap_ok && certified {
                last.status = SolveStatus::Optimal;
                return last;
            }
            if f0z > 0.0 {
                let pinf = norm(&fz) / c_norm / f0z;
                if pinf <= opt.feasibility_tolerance {
                    last.status = SolveStatus::Infeasible;
                    return last;
                }
            }
            if cx < 0.0 {
                let dinf = it.s.iter().zip(&fx).map(|(s, f)| (s - f).norm_squared()).sum::<f64>().sqrt() / h_norm / -cx;
                if dinf <= opt.feasibility_tolerance {
                    last.status = SolveStatus::Unbounded;
                    return last;
                }
            }
            if iter == opt.max_iter {
                break;
            }

            let Some(scalings) = it.s.iter().zip(&it.z).map(|(s, z)| Scaling::new(s, z)).collect::<Option<Vec<_>>>() else {
                last.status = SolveStatus::NumericalFailure;
                return last;
            };
            let newton = self.newton(&scalings);
            let rz_scaled: Vec<Matrix> = scalings.iter().zip(&rz).map(|(sc, r)| sc.scale_s(r)).collect();
            let mu = (sz + it.tau * it.kappa) / (degree + 1.0);

            // predictor
            let rhs_s: Vec<Matrix> = scalings.iter().map(|sc| Matrix::from_diagonal(&sc.lambda.map(|l| -l * l))).collect();
            let rhs_k = -it.tau * it.kappa;
            let aff = self.direction(&newton, &it, &rx, &rz_scaled, rt, &rhs_s, rhs_k, 0.0);
            let alpha_aff = self.max_step(&scalings, &it, &aff).min(1.0);
            let sigma = (1.0 - alpha_aff).powi(3);

            // corrector
            let rhs_s: Vec<Matrix> = scalings
                .iter()
                .zip(aff.ds.iter().zip(&aff.dz))
                .map(|(sc, (ds, dz))| {
                    let mut r = Matrix::from_diagonal(&sc.lambda.map(|l| -l * l + sigma * mu));
                    r -= sym(&(ds * dz));
                    r
                })
                .collect();
            let rhs_k = -it.tau * it.kappa - aff.dtau * aff.dkappa + sigma * mu;
            let dir = self.direction(&newton, &it, &rx, &rz_scaled, rt, &rhs_s, rhs_k, sigma);
            let alpha = (STEP * self.max_step(&scalings, &it, &dir)).min(1.0);
            if !(alpha > 1e-12) {
                last.status = SolveStatus::NumericalFailure;
                return last;
            }

            for (x, d) in it.x.iter_mut().zip(&dir.dx) {
                *x += alpha * d;
            }
            for (b, sc) in scalings.iter().enumerate() {
                let lam = Matrix::from_diagonal(&sc.lambda);
                it.s[b] = sym(&(&sc.r * (&lam + &dir.ds[b] * alpha) * sc.r.transpose()));
                it.z[b] = sym(&(&sc.rti * (&lam + &dir.dz[b] * alpha) * sc.rti.transpose()));
            }
            it.tau += alpha * dir.dtau;
            it.kappa += alpha * dir.dkappa;
        }
        last
    }

    /// `S(y) + shift I` is positive definite on every certified block.
    fn certified(&self, y: &[f64]) -> bool {
        self.blocks.iter().all(|b| match b.shift {
            None => true,
            Some(shift) => {
                let s = b.apply(y) - &b.f0 + Matrix::identity(b.dim, b.dim) * shift;
                s.cholesky().is_some()
            }
        })
    }

    fn newton<'a>(&mut self, scalings: &'a [Scaling]) -> Newton<'a> {
        let mut scaled = Vec::with_capacity(self.blocks.len());
        let mut f0_scaled = Vec::with_capacity(self.blocks.len());
        for (blk, sc) in self.blocks.iter().zip(scalings) {
            let d = blk.dim;
            let q = if d == 1 {
                &blk.coef * (sc.rti[(0, 0)] * sc.rti[(0, 0)])
            } else {
                let mut q = DMatrix::zeros(blk.vars.len(), svec_len(d));
                for k in 0..blk.vars.len() {
                    let f = smat(blk.coef.row(k).transpose().as_slice(), d);
                    q.set_row(k, &svec(&sc.scale_s(&f)).transpose());
                }
                q
            };
            scaled.push(q);
            f0_scaled.push(sc.scale_s(&blk.f0));
        }
        self.factor_schur(&scaled);

        let mut rhs: Vec<f64> = self.c.iter().map(|c| -c).collect();
        for ((blk, q), f0) in self.blocks.iter().zip(&scaled).zip(&f0_scaled) {
            let p = q * svec(f0);
            for (k, &var) in blk.vars.iter().enumerate() {
                rhs[var] += p[k];
            }
        }
        let u2 = self.schur_solve(&rhs);
        let z2: Vec<Matrix> = self
            .blocks
            .iter()
            .zip(&scaled)
            .zip(&f0_scaled)
            .map(|((blk, q), f0)| f0 - apply_scaled(blk, q, &u2))
            .collect();
        let c_u2 = dot(&self.c, &u2);
        let f0_z2 = f0_scaled.iter().zip(&z2).map(|(a, b)| inner(a, b)).sum();
        Newton { scalings, scaled, f0_scaled, u2, z2, c_u2, f0_z2 }
    }

    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        nt: &Newton<'_>,
        it: &Iterate,
        rx: &[f64],
        rz_scaled: &[Matrix],
        rt: f64,
        rhs_s: &[Matrix],
        rhs_k: f64,
        eta: f64,
    ) -> Direction {
        let keep = 1.0 - eta;
        let dc: Vec<Matrix> = nt.scalings.iter().zip(rhs_s).map(|(sc, r)| sc.divide(r)).collect();
        let v: Vec<Matrix> = dc.iter().zip(rz_scaled).map(|(d, r)| d + r * keep).collect();
        let mut rhs: Vec<f64> = rx.iter().map(|r| -keep * r).collect();
        for ((blk, q), vb) in self.blocks.iter().zip(&nt.scaled).zip(&v) {
            let p = q * svec(vb);
            for (k, &var) in blk.vars.iter().enumerate() {
                rhs[var] += p[k];
            }
        }
        let u1 = self.schur_solve(&rhs);
        let z1: Vec<Matrix> = self
            .blocks
            .iter()
            .zip(&nt.scaled)
            .zip(&v)
            .map(|((blk, q), vb)| vb - apply_scaled(blk, q, &u1))
            .collect();
        let f0_z1: f64 = nt.f0_scaled.iter().zip(&z1).map(|(a, b)| inner(a, b)).sum();
        let num = -keep * rt - rhs_k / it.tau - dot(&self.c, &u1) + f0_z1;
        let den = nt.c_u2 - nt.f0_z2 - it.kappa / it.tau;
        let dtau = num / den;
        let dx: Vec<f64> = u1.iter().zip(&nt.u2).map(|(a, b)| a + dtau * b).collect();
        let dz: Vec<Matrix> = z1.iter().zip(&nt.z2).map(|(a, b)| a + b * dtau).collect();
        let ds: Vec<Matrix> = dc.iter().zip(&dz).map(|(d, z)| d - z).collect();
        let dkappa = (rhs_k - it.kappa * dtau) / it.tau;
        Direction { dx, ds, dz, dtau, dkappa }
    }

    fn max_step(&self, scalings: &[Scaling], it: &Iterate, dir: &Direction) -> f64 {
        let mut alpha = f64::INFINITY;
        for (sc, (ds, dz)) in scalings.iter().zip(dir.ds.iter().zip(&dir.dz)) {
            alpha = alpha.min(sc.max_step(ds)).min(sc.max_step(dz));
        }
        if dir.dtau < 0.0 {
            alpha = alpha.min(-it.tau / dir.dtau);
        }
        if dir.dkappa < 0.0 {
            alpha = alpha.min(-it.kappa / dir.dkappa);
        }
        alpha
    }
}

fn apply_scaled(blk: &Block, q: &DMatrix<f64>, u: &[f64]) -> Matrix {
    let ub = DVector::from_iterator(blk.vars.len(), blk.vars.iter().map(|&v| u[v]));
    smat((q.transpose() * ub).as_slice(), blk.dim)
}

/// Position of `(i, j)`, `i <= j`, in `svec` order: rows before `i` hold
/// `i d - i (i - 1) / 2` entries.
fn svec_index(d: usize, i: usize, j: usize) -> usize {
    i * d - i * i.saturating_sub(1) / 2 + (j - i)
}

fn dense(d: usize, entries: &[(usize, usize, f64)]) -> Matrix {
    let mut m = Matrix::zeros(d, d);
    for &(i, j, v) in entries {
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    m
}

fn shift_into_cone(v: &mut [Matrix]) {
    let min_eig = v
        .iter()
        .map(|m| if m.nrows() == 1 { m[(0, 0)] } else { m.symmetric_eigenvalues().min() })
        .fold(f64::INFINITY, f64::min);
    let norm = mat_norm(v);
    let shift = if min_eig >= -1e-8 * norm.max(1.0) { if min_eig <= 0.0 { 1.0 } else { 0.0 } } else { 1.0 - min_eig };
    if shift > 0.0 {
        for m in v.iter_mut() {
            let d = m.nrows();
            *m += Matrix::identity(d, d) * shift;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn mat_norm(v: &[Matrix]) -> f64 {
    v.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svec_round_trip_and_inner_product() {
        let a = Matrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 5.0, 3.0, 5.0, 6.0]);
        let b = Matrix::from_row_slice(3, 3, &[0.5, -1.0, 0.0, -1.0, 2.0, 1.0, 0.0, 1.0, -3.0]);
        assert_eq!(smat(svec(&a).as_slice(), 3), a);
        assert!((svec(&a).dot(&svec(&b)) - a.dot(&b)).abs() < 1e-12);
        for (i, j) in [(0, 0), (0, 2), (1, 1), (1, 2), (2, 2)] {
            let mut e = Matrix::zeros(3, 3);
            e[(i, j)] = 1.0;
            e[(j, i)] = 1.0;
            let v = svec(&e);
            assert!(v[svec_index(3, i, j)] != 0.0, "({i},{j})");
        }
    }

    #[test]
    fn scaling_maps_both_to_lambda() {
        let s = Matrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let z = Matrix::from_row_slice(2, 2, &[1.0, -0.3, -0.3, 3.0]);
        let sc = Scaling::new(&s, &z).unwrap();
        let lam = Matrix::from_diagonal(&sc.lambda);
        assert!((sc.scale_s(&s) - &lam).norm() < 1e-12);
        assert!((sc.r.transpose() * &z * &sc.r - &lam).norm() < 1e-12);
    }
}
