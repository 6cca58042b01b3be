use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::ldlt::factor::LdltRegularization;
use faer::sparse::linalg::cholesky::{factorize_symbolic_cholesky, CholeskySymbolicParams, SymmetricOrdering};
use faer::sparse::{SparseColMat, SymbolicSparseColMat};
use faer::{Conj, MatMut, Par, Side};

use crate::{Error, Result};

use super::assembly::{CscMatrix, SaddleSystem};
use super::field::FlowField;

/// Relative residual the direct solve must reach.
pub const RESIDUAL_LIMIT: f64 = 1e-10;
/// Relative size of the quasi-definite shift.
const SHIFT: f64 = 1e-8;
const MAX_REFINEMENT: usize = 30;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `b − m x` with compensated accumulation per row (`m` is symmetric, so rows
/// are read as columns); keeps the residual meaningful below `ε·‖m‖‖x‖`.
fn accurate_residual(m: &CscMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    (0..m.n)
        .map(|c| {
            let (mut s, mut comp) = (b[c], 0.0);
            for p in m.col_ptr[c]..m.col_ptr[c + 1] {
                let prod = -m.values[p] * x[m.row_idx[p]];
                let perr = (-m.values[p]).mul_add(x[m.row_idx[p]], -prod);
                let t = s + prod;
                let z = t - s;
                comp += (s - (t - z)) + (prod - z) + perr;
                s = t;
            }
            s + comp
        })
        .collect()
}

/// Diagonal shift making the matrix quasi-definite: `+δ` on rows of the positive
/// group without a diagonal, `-δ` on the negative group, each scaled by an
/// estimate of the local Schur-complement diagonal `Σ_j K_rj² / K_jj`.
fn shifts(m: &CscMatrix, signs: &[i8]) -> Vec<f64> {
    let diag: Vec<f64> = (0..m.n).map(|c| m.get(c, c)).collect();
    (0..m.n)
        .map(|c| {
            if signs[c] > 0 && diag[c] > 0.0 {
                return 0.0;
            }
            let mut s = 0.0;
            for p in m.col_ptr[c]..m.col_ptr[c + 1] {
                let r = m.row_idx[p];
                if signs[r] != signs[c] && diag[r] > 0.0 {
                    s += m.values[p] * m.values[p] / diag[r];
                }
            }
            // rows coupled only to other negative rows (the multiplier)
            if s == 0.0 {
                for p in m.col_ptr[c]..m.col_ptr[c + 1] {
                    let r = m.row_idx[p];
                    if r != c {
                        s += m.values[p].abs();
                    }
                }
            }
            let s = if s > 0.0 { s } else { 1.0 };
            signs[c] as f64 * SHIFT * s
        })
        .collect()
}

/// Symmetric indefinite solve of `m x = b`.
///
/// `signs` gives the expected pivot sign of every unknown (`+1` for the
/// velocity block, `-1` for pressures). The matrix is shifted to be
/// quasi-definite, factored as `LDLᵀ` under an AMD ordering and the shift is
/// removed again by iterative refinement against `m`. Returns the solution and
/// its relative residual.
pub fn solve_csc(m: &CscMatrix, b: &[f64], signs: &[i8]) -> Result<(Vec<f64>, f64)> {
    let n = m.n;
    let bn = norm(b);
    if bn == 0.0 {
        return Ok((vec![0.0; n], 0.0));
    }
    let fail = |reason: String| Error::Factorization {
        unknowns: n,
        nonzeros: m.nnz(),
        reason,
    };
    let shift = shifts(m, signs);
    // lower triangle with the shifted diagonal
    let mut cp = Vec::with_capacity(n + 1);
    let mut ri = Vec::with_capacity(m.nnz() / 2 + n);
    let mut vals = Vec::with_capacity(m.nnz() / 2 + n);
    cp.push(0usize);
    for c in 0..n {
        let (a, e) = (m.col_ptr[c], m.col_ptr[c + 1]);
        let mut has_diag = false;
        for p in a..e {
            let r = m.row_idx[p];
            if r < c {
                continue;
            }
            if r == c {
                has_diag = true;
                ri.push(r);
                vals.push(m.values[p] + shift[c]);
            } else {
                if !has_diag {
                    has_diag = true;
                    ri.push(c);
                    vals.push(shift[c]);
                }
                ri.push(r);
                vals.push(m.values[p]);
            }
        }
        if !has_diag {
            ri.push(c);
            vals.push(shift[c]);
        }
        cp.push(ri.len());
    }
    let lower = SparseColMat::new(SymbolicSparseColMat::new_checked(n, n, cp, None, ri), vals);
    let symbolic = factorize_symbolic_cholesky(
        lower.symbolic(),
        Side::Lower,
        SymmetricOrdering::Amd,
        CholeskySymbolicParams::default(),
    )
    .map_err(|e| fail(format!("symbolic analysis: {e:?}")))?;
    log::debug!("ldlt: {n} unknowns, {} factor entries", symbolic.len_val());
    let mut lvals = Vec::new();
    lvals
        .try_reserve_exact(symbolic.len_val())
        .map_err(|_| fail(format!("cannot allocate {} factor entries", symbolic.len_val())))?;
    lvals.resize(symbolic.len_val(), 0.0f64);
    let mut mem = MemBuffer::try_new(symbolic.factorize_numeric_ldlt_scratch::<f64>(Par::Seq, Default::default()))
        .map_err(|_| fail("cannot allocate factorization workspace".into()))?;
    let scale = m.max_abs();
    let ldlt = symbolic
        .factorize_numeric_ldlt(
            &mut lvals,
            lower.as_ref(),
            Side::Lower,
            LdltRegularization {
                dynamic_regularization_signs: Some(signs),
                dynamic_regularization_delta: SHIFT * scale,
                dynamic_regularization_epsilon: 1e-14 * scale,
            },
            Par::Seq,
            MemStack::new(&mut mem),
            Default::default(),
        )
        .map_err(|e| fail(format!("{e:?}")))?;
    drop(mem);
    let mut smem = MemBuffer::try_new(symbolic.solve_in_place_scratch::<f64>(1, Par::Seq))
        .map_err(|_| fail("cannot allocate solve workspace".into()))?;
    let mut solve = |rhs: &mut [f64]| {
        ldlt.solve_in_place_with_conj(
            Conj::No,
            MatMut::from_column_major_slice_mut(rhs, n, 1),
            Par::Seq,
            MemStack::new(&mut smem),
        );
    };

    let mut x = b.to_vec();
    solve(&mut x);
    let residual = |x: &[f64]| -> (Vec<f64>, f64) {
        let r = accurate_residual(m, x, b);
        let rel = norm(&r) / bn;
        (r, rel)
    };
    let (mut r, mut rel) = residual(&x);
    let mut stalls = 0;
    for _ in 0..MAX_REFINEMENT {
        if rel <= 1e-3 * RESIDUAL_LIMIT || !rel.is_finite() {
            break;
        }
        let mut dx = r;
        solve(&mut dx);
        let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let (r2, rel2) = residual(&trial);
        if rel2 >= rel {
            stalls += 1;
            r = residual(&x).0;
            if stalls > 2 {
                break;
            }
            continue;
        }
        x = trial;
        r = r2;
        rel = rel2;
    }
    if !rel.is_finite() || x.iter().any(|v| !v.is_finite()) {
        return Err(fail("non-finite solution; the matrix is numerically singular".into()));
    }
    if rel > RESIDUAL_LIMIT {
        return Err(Error::Residual {
            residual: rel,
            limit: RESIDUAL_LIMIT,
        });
    }
    Ok((x, rel))
}

impl SaddleSystem {
    /// Expected pivot signs: velocities and the multiplier `+1`, pressures `-1`.
    pub fn signs(&self) -> Vec<i8> {
        (0..self.n_unknowns())
            .map(|u| {
                if u < self.n_velocity_unknowns || Some(u) == self.multiplier {
                    1
                } else {
                    -1
                }
            })
            .collect()
    }
}

/// Solves an assembled system and expands the result to all dofs.
pub fn solve(system: &SaddleSystem) -> Result<FlowField> {
    let (x, rel) = solve_csc(&system.matrix, &system.rhs, &system.signs())?;
    log::debug!(
        "solved {} unknowns, {} nonzeros, residual {rel:.2e}",
        system.n_unknowns(),
        system.matrix.nnz()
    );
    Ok(expand(system, &x, rel))
}

/// Expands an unknown vector through the constraints.
pub fn expand(system: &SaddleSystem, x: &[f64], residual: f64) -> FlowField {
    let mut values = vec![0.0; system.dofs.n_total()];
    for (u, &d) in system.dof_of.iter().enumerate() {
        values[d] = x[u];
    }
    system.constraints.distribute(&mut values);
    let mut field = FlowField::new(system.dofs.clone(), values);
    field.multiplier = system.multiplier.map_or(0.0, |m| x[m]);
    field.residual = residual;
    field
}
