//! Direct solution of the discrete optimality (KKT) system.
//!
//! With `z = (U, Y)` the stationarity and feasibility conditions of the
//! Lagrangian `θ(z) − λᵀ(𝒞z − ℱ)` read
//!
//! ```text
//! ατA U_m + τA λ_m                          = 0
//! κ_mτ(A Y_m − d_m) − C₊λ_m + C₋λ_{m+1}     = 0      (λ_{M+1} = 0)
//! C₊Y_m − C₋Y_{m−1} − τA U_m                = F_m
//! ```
//!
//! Two independent direct methods are provided. Small systems are assembled
//! densely and solved by LU. Larger ones are decoupled with the generalized
//! eigenvectors `V` of `(B, A)` (`VᵀAV = I`, `VᵀBV = diag(μ)`), which turn the
//! system into one small banded time problem per spatial mode.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::blocks::BlockVec;
use crate::discretization::DiscreteSystem;
use crate::error::{Error, Result};
use crate::float;
use crate::splitting::Iterate;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KktMethod {
    /// Dense below `dense_limit` unknowns, spectral above.
    Auto,
    Dense,
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktOptions {
    pub max_unknowns: usize,
    pub dense_limit: usize,
    pub method: KktMethod,
}

impl Default for KktOptions {
    fn default() -> Self {
        Self {
            max_unknowns: 200_000,
            dense_limit: 5_000,
            method: KktMethod::Auto,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KktSolution {
    pub y: BlockVec,
    pub u: BlockVec,
    pub lambda: BlockVec,
    /// `‖∇θ(z) − 𝒞ᵀλ‖ / (1 + ‖(0, κτd)‖)`.
    pub stationarity_residual: f64,
    /// `‖𝒞z − ℱ‖ / (1 + ‖ℱ‖)`.
    pub feasibility_residual: f64,
    pub method: KktMethod,
}

impl KktSolution {
    /// The saddle point as a splitting iterate.
    pub fn to_iterate(&self) -> Iterate {
        Iterate {
            u: self.u.clone(),
            y: self.y.clone(),
            lambda: self.lambda.clone(),
            aux: None,
        }
    }
}

pub fn solve_kkt(sys: &DiscreteSystem, options: &KktOptions) -> Result<KktSolution> {
    let unknowns = 3 * sys.steps() * sys.dim();
    if unknowns > options.max_unknowns {
        return Err(Error::KktTooLarge {
            unknowns,
            cap: options.max_unknowns,
        });
    }
    let method = match options.method {
        KktMethod::Auto if unknowns <= options.dense_limit => KktMethod::Dense,
        KktMethod::Auto => KktMethod::Spectral,
        m => m,
    };
    let (y, u, lambda) = match method {
        KktMethod::Dense => solve_dense(sys)?,
        _ => solve_spectral(sys)?,
    };
    let (stationarity_residual, feasibility_residual) = residuals(sys, &y, &u, &lambda);
    Ok(KktSolution {
        y,
        u,
        lambda,
        stationarity_residual,
        feasibility_residual,
        method,
    })
}

/// Relative stationarity and feasibility residuals of `(Y, U, λ)`.
pub fn residuals(
    sys: &DiscreteSystem,
    y: &BlockVec,
    u: &BlockVec,
    lambda: &BlockVec,
) -> (f64, f64) {
    let (steps, n, tau) = (sys.steps(), sys.dim(), sys.tau());
    let mut stat = 0.0;
    let mut rhs = 0.0;
    let mut tmp = vec![0.0; n];
    for m in 0..steps {
        sys.mass().mul_vec_into(u.block(m), &mut tmp);
        for v in tmp.iter_mut() {
            *v *= sys.alpha() * tau;
        }
        sys.mass().mul_vec_add(tau, lambda.block(m), &mut tmp);
        stat += float::norm_sq(&tmp);

        let kt = sys.kappa(m + 1) * tau;
        sys.mass().mul_vec_into(y.block(m), &mut tmp);
        tmp.iter_mut()
            .zip(sys.desired().block(m))
            .for_each(|(v, d)| *v = kt * (*v - d));
        rhs += kt * kt * float::norm_sq(sys.desired().block(m));
        sys.c_plus().mul_vec_add(-1.0, lambda.block(m), &mut tmp);
        if m + 1 < steps {
            sys.c_minus()
                .mul_vec_add(1.0, lambda.block(m + 1), &mut tmp);
        }
        stat += float::norm_sq(&tmp);
    }
    let res = sys.constraint_residual(y, u).expect("shapes checked");
    (
        float::sqrt(stat) / (1.0 + float::sqrt(rhs)),
        res.norm() / (1.0 + sys.loads().norm()),
    )
}

type Triple = (BlockVec, BlockVec, BlockVec);

fn solve_dense(sys: &DiscreteSystem) -> Result<Triple> {
    let (steps, n, tau) = (sys.steps(), sys.dim(), sys.tau());
    let nz = 2 * steps * n;
    let total = nz + steps * n;
    // Column layout: U_1..U_M, Y_1..Y_M, then ν = −λ so the matrix is
    // symmetric: [H 𝒞ᵀ; 𝒞 0].
    let u_col = |m: usize| m * n;
    let y_col = |m: usize| (steps + m) * n;
    let l_row = |m: usize| nz + m * n;
    let mut k = DMatrix::<f64>::zeros(total, total);
    let mut rhs = DVector::<f64>::zeros(total);

    let mut put = |r0: usize, c0: usize, mat: &crate::sparse::CsrMatrix, s: f64| {
        for (i, j, v) in mat.triplets() {
            k[(r0 + i, c0 + j)] += s * v;
            k[(c0 + j, r0 + i)] += if r0 == c0 { 0.0 } else { s * v };
        }
    };
    for m in 0..steps {
        let kt = sys.kappa(m + 1) * tau;
        put(u_col(m), u_col(m), sys.mass(), sys.alpha() * tau);
        put(y_col(m), y_col(m), sys.mass(), kt);
        // Constraint rows (and their transposes).
        put(l_row(m), y_col(m), sys.c_plus(), 1.0);
        if m > 0 {
            put(l_row(m), y_col(m - 1), sys.c_minus(), -1.0);
        }
        put(l_row(m), u_col(m), sys.mass(), -tau);
        for i in 0..n {
            rhs[y_col(m) + i] = kt * sys.desired().block(m)[i];
            rhs[l_row(m) + i] = sys.loads().block(m)[i];
        }
    }

    let sol = k.lu().solve(&rhs).ok_or(Error::SingularKkt)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularKkt);
    }
    let take = |off: usize, sign: f64| {
        BlockVec::from_flat(
            n,
            sol.rows(off, steps * n).iter().map(|v| sign * v).collect(),
        )
    };
    Ok((
        take(y_col(0), 1.0),
        take(u_col(0), 1.0),
        take(l_row(0), -1.0),
    ))
}

fn solve_spectral(sys: &DiscreteSystem) -> Result<Triple> {
    let (steps, n, tau, alpha) = (sys.steps(), sys.dim(), sys.tau(), sys.alpha());
    let a = DMatrix::from_fn(n, n, |i, j| sys.mass().get(i, j));
    let b = DMatrix::from_fn(n, n, |i, j| sys.stiffness().get(i, j));
    let chol = a.cholesky().ok_or(Error::SingularKkt)?;
    let l = chol.l();
    // S = L⁻¹ B L⁻ᵀ
    let x = l.solve_lower_triangular(&b).ok_or(Error::SingularKkt)?;
    let s = l
        .solve_lower_triangular(&x.transpose())
        .ok_or(Error::SingularKkt)?;
    let s = (&s + s.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(s);
    // V = L⁻ᵀ Q
    let v = l
        .transpose()
        .solve_upper_triangular(&eig.eigenvectors)
        .ok_or(Error::SingularKkt)?;
    let vt = v.transpose();

    let project = |blocks: &BlockVec| -> DMatrix<f64> {
        let mat = DMatrix::from_column_slice(n, steps, blocks.as_slice());
        &vt * mat
    };
    let f_hat = project(sys.loads());
    let d_hat = project(sys.desired());

    let mut y_hat = DMatrix::<f64>::zeros(n, steps);
    let mut l_hat = DMatrix::<f64>::zeros(n, steps);
    // Per mode: unknowns interleaved (y_1, λ_1, …, y_M, λ_M) with û = −λ̂/α.
    let size = 2 * steps;
    for j in 0..n {
        let mu = eig.eigenvalues[j];
        let ap = 1.0 + 0.5 * tau * mu;
        let am = 1.0 - 0.5 * tau * mu;
        let mut k = DMatrix::<f64>::zeros(size, size);
        let mut r = DVector::<f64>::zeros(size);
        for m in 0..steps {
            let (yi, li) = (2 * m, 2 * m + 1);
            let kt = sys.kappa(m + 1) * tau;
            // Feasibility: a₊ŷ_m − a₋ŷ_{m−1} + (τ/α) λ̂_m = f̂_m
            k[(li, yi)] = ap;
            if m > 0 {
                k[(li, yi - 2)] = -am;
            }
            k[(li, li)] = tau / alpha;
            r[li] = f_hat[(j, m)];
            // Stationarity: κτŷ_m − a₊λ̂_m + a₋λ̂_{m+1} = κτd̂_m
            k[(yi, yi)] = kt;
            k[(yi, li)] = -ap;
            if m + 1 < steps {
                k[(yi, li + 2)] = am;
            }
            r[yi] = kt * d_hat[(j, m)];
        }
        let sol = k.lu().solve(&r).ok_or(Error::SingularKkt)?;
        for m in 0..steps {
            y_hat[(j, m)] = sol[2 * m];
            l_hat[(j, m)] = sol[2 * m + 1];
        }
    }

    let back = |hat: &DMatrix<f64>, scale: f64| -> Result<BlockVec> {
        let full = &v * hat;
        let data: Vec<f64> = full.as_slice().iter().map(|x| scale * x).collect();
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::SingularKkt);
        }
        Ok(BlockVec::from_flat(n, data))
    };
    Ok((
        back(&y_hat, 1.0)?,
        back(&l_hat, -1.0 / alpha)?,
        back(&l_hat, 1.0)?,
    ))
}
