//! The reduction family `I - T_V(z)` on the truncated Landau space, its
//! characteristic-value scans, the rescaled family `I - K_V^{(e)}(λ)/λ`,
//! and the contour-integral index.
//!
//! With `w = H₊^{-1/2} U` and the split resolvent
//! `R_-(z) = -z^{-1} p + (H_- - z)^{-1} p⊥`, everything reduces to level
//! projections: `w R_-(z) w† = Σ_q c_q(z) G_q` with `G_q = w P_q w†`
//! precomputed once. For a radial potential the family additionally
//! block-diagonalizes over the conserved angular momentum, so scans run on
//! sector blocks of dimension at most `Q` instead of `K·Q`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::magnetics::{build_landau_basis, MagneticField};
use crate::potential::Potential;
use crate::toeplitz;

/// Characteristic values are flagged where the smallest singular value of
/// `I - T_V(z)` drops below `CHAR_THRESHOLD_SCALE * (1 + ‖T_V‖)`.
pub const CHAR_THRESHOLD_SCALE: f64 = 1e-6;
/// Bisection/golden-section refinement width for flagged values.
pub const REFINE_TOL: f64 = 1e-12;
/// Contour nodes must keep `sigma_min` above this guard.
pub const CONTOUR_GUARD: f64 = 1e-8;
/// Raw contour indices must be this close to an integer.
pub const INDEX_TOL: f64 = 1e-6;
/// Largest dimension the full-matrix accessors will assemble.
pub const MAX_ASSEMBLED_DIM: usize = 2048;

/// Positively oriented circle.
#[derive(Debug, Clone, Copy)]
pub struct Circle {
    pub center: Complex64,
    pub radius: f64,
}

/// One angular-momentum block of the family (radial potentials only):
/// levels present in the sector, the `w` columns per level, and the level
/// Gram matrices.
#[derive(Debug, Clone)]
struct SectorFam {
    /// Levels `q` whose state `(q, m+q)` exists at this truncation.
    levels: Vec<usize>,
    /// Global state indices (level-major ordering) of the sector states.
    global: Vec<usize>,
    /// `H₊` ladder per sector state.
    hplus: Vec<f64>,
    /// `U` block on the sector states.
    u_block: DMatrix<Complex64>,
    /// `w = H₊^{-1/2} U` block.
    w_block: DMatrix<Complex64>,
    /// `G_q = w P_q w†` per position in `levels` (each rank one).
    level_grams: Vec<DMatrix<Complex64>>,
}

#[derive(Debug, Clone)]
enum Repr {
    Dense {
        u: DMatrix<Complex64>,
        w: DMatrix<Complex64>,
        level_grams: Vec<DMatrix<Complex64>>,
    },
    Sectored(Vec<SectorFam>),
}

/// The truncated Birman–Schwinger family for a constant field.
#[derive(Debug, Clone)]
pub struct BSFamily {
    pub b0: f64,
    pub k_count: usize,
    pub q_levels: usize,
    pub coupling: f64,
    pub zeta: f64,
    /// Analyticity domain radius (punctured disk, < ζ).
    pub eps: f64,
    /// `H₊` ladder per state (level-major ordering).
    pub hplus: Vec<f64>,
    /// `H₋` ladder per state; zero entries mark the zero modes.
    pub hminus: Vec<f64>,
    repr: Repr,
}

pub fn bs_family(
    field: &MagneticField,
    pot: &Potential,
    coupling: f64,
    k_count: usize,
    q_levels: usize,
) -> Result<BSFamily> {
    if !field.is_constant() {
        return Err(Error::RejectedInput(
            "the reduction family needs a constant field".into(),
        ));
    }
    let b0 = field.b0;
    let mut hplus = Vec::with_capacity(k_count * q_levels);
    let mut hminus = Vec::with_capacity(k_count * q_levels);
    for q in 0..q_levels {
        for _ in 0..k_count {
            hplus.push(2.0 * b0 * (q + 1) as f64);
            hminus.push(2.0 * b0 * q as f64);
        }
    }
    let repr = if pot.is_radial() || pot.is_zero() {
        let mut sectors = Vec::new();
        let m_lo = -(q_levels as i64 - 1);
        let m_hi = k_count as i64 - 1;
        for m in m_lo..=m_hi {
            let (levels, u_block) = if pot.is_zero() {
                let levels: Vec<usize> = (0..q_levels)
                    .filter(|&q| {
                        let j = m + q as i64;
                        j >= 0 && j < k_count as i64
                    })
                    .collect();
                let n = levels.len();
                (levels, DMatrix::<Complex64>::zeros(n, n))
            } else {
                toeplitz::landau_sector_u_block(pot, b0, m, k_count, q_levels)?
            };
            if levels.is_empty() {
                continue;
            }
            let n = levels.len();
            let sector_hplus: Vec<f64> =
                levels.iter().map(|&q| 2.0 * b0 * (q + 1) as f64).collect();
            let mut w_block = u_block.clone();
            for (row, &h) in sector_hplus.iter().enumerate() {
                let scale = Complex64::new(h.sqrt().recip(), 0.0);
                for c in 0..n {
                    let v = w_block[(row, c)];
                    w_block[(row, c)] = scale * v;
                }
            }
            let level_grams: Vec<DMatrix<Complex64>> = (0..n)
                .map(|col| {
                    let wc = w_block.column(col);
                    &wc * wc.adjoint()
                })
                .collect();
            let global: Vec<usize> = levels
                .iter()
                .map(|&q| q * k_count + (m + q as i64) as usize)
                .collect();
            sectors.push(SectorFam {
                levels,
                global,
                hplus: sector_hplus,
                u_block,
                w_block,
                level_grams,
            });
        }
        Repr::Sectored(sectors)
    } else {
        let basis = build_landau_basis(b0, k_count, q_levels)?;
        let u = toeplitz::assemble_landau_u_matrix(pot, &basis)?;
        let n = basis.len();
        let mut w = u.entries.clone();
        for (idx, s) in basis.states.iter().enumerate() {
            let scale = Complex64::new(s.h_plus.unwrap().sqrt().recip(), 0.0);
            for c in 0..n {
                let v = w[(idx, c)];
                w[(idx, c)] = scale * v;
            }
        }
        let mut level_grams = Vec::with_capacity(q_levels);
        for q in 0..q_levels {
            let mut wq = DMatrix::<Complex64>::zeros(n, k_count);
            for (c, col) in (q * k_count..(q + 1) * k_count).enumerate() {
                wq.set_column(c, &w.column(col));
            }
            level_grams.push(&wq * wq.adjoint());
        }
        Repr::Dense {
            u: u.entries,
            w,
            level_grams,
        }
    };
    Ok(BSFamily {
        b0,
        k_count,
        q_levels,
        coupling,
        zeta: field.zeta,
        eps: 0.95 * field.zeta,
        hplus,
        hminus,
        repr,
    })
}

/// Resolvent coefficient of level `q` inside `R_-(z)`.
fn level_coeff(b0: f64, q: usize, z: Complex64) -> Complex64 {
    if q == 0 {
        -z.inv()
    } else {
        (Complex64::new(2.0 * b0 * q as f64, 0.0) - z).inv()
    }
}

fn level_coeff_prime(b0: f64, q: usize, z: Complex64) -> Complex64 {
    if q == 0 {
        let zi = z.inv();
        zi * zi
    } else {
        let r = (Complex64::new(2.0 * b0 * q as f64, 0.0) - z).inv();
        r * r
    }
}

impl SectorFam {
    fn dim(&self) -> usize {
        self.levels.len()
    }

    /// `T_V(z)` on the sector.
    fn t_v(&self, b0: f64, z: Complex64) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut acc = DMatrix::<Complex64>::zeros(n, n);
        for (pos, &q) in self.levels.iter().enumerate() {
            acc += &self.level_grams[pos] * level_coeff(b0, q, z);
        }
        for i in 0..n {
            let h = Complex64::new(self.hplus[i], 0.0);
            let f = Complex64::ONE + z / (h - z);
            for j in 0..n {
                let v = acc[(i, j)];
                acc[(i, j)] = f * v;
            }
        }
        acc
    }

    fn t_v_prime(&self, b0: f64, z: Complex64) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut wrw = DMatrix::<Complex64>::zeros(n, n);
        let mut wrw_prime = DMatrix::<Complex64>::zeros(n, n);
        for (pos, &q) in self.levels.iter().enumerate() {
            wrw += &self.level_grams[pos] * level_coeff(b0, q, z);
            wrw_prime += &self.level_grams[pos] * level_coeff_prime(b0, q, z);
        }
        for i in 0..n {
            let h = Complex64::new(self.hplus[i], 0.0);
            let dm = h / ((h - z) * (h - z));
            let ipm = Complex64::ONE + z / (h - z);
            for j in 0..n {
                let a = wrw[(i, j)];
                let b = wrw_prime[(i, j)];
                wrw[(i, j)] = dm * a;
                wrw_prime[(i, j)] = ipm * b;
            }
        }
        wrw + wrw_prime
    }

    fn a_of_z(&self, b0: f64, e2: f64, z: Complex64) -> DMatrix<Complex64> {
        let mut a = self.t_v(b0, z) * Complex64::new(-e2, 0.0);
        for i in 0..a.nrows() {
            a[(i, i)] += Complex64::ONE;
        }
        a
    }

    fn k_v(&self, b0: f64, z: Complex64) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut acc = DMatrix::<Complex64>::zeros(n, n);
        for (pos, &q) in self.levels.iter().enumerate() {
            if q == 0 {
                acc += &self.level_grams[pos];
            } else {
                acc += &self.level_grams[pos] * (-z * level_coeff(b0, q, z));
            }
        }
        for i in 0..n {
            let h = Complex64::new(self.hplus[i], 0.0);
            let f = Complex64::ONE + z / (h - z);
            for j in 0..n {
                let v = acc[(i, j)];
                acc[(i, j)] = f * v;
            }
        }
        acc
    }
}

impl BSFamily {
    pub fn dim(&self) -> usize {
        self.k_count * self.q_levels
    }

    fn e2(&self) -> f64 {
        self.coupling * self.coupling
    }

    fn check_hplus_domain(&self, z: Complex64) -> Result<()> {
        let min_hplus = 2.0 * self.b0;
        if z.norm() >= min_hplus {
            return Err(Error::Domain(format!(
                "|z| = {:.3e} reaches the H+ ladder floor {min_hplus:.3e}",
                z.norm()
            )));
        }
        Ok(())
    }

    fn check_hminus_ladder(&self, z: Complex64) -> Result<()> {
        for q in 1..self.q_levels {
            let level = 2.0 * self.b0 * q as f64;
            if (z - Complex64::new(level, 0.0)).norm() < 1e-12 {
                return Err(Error::Domain(format!(
                    "z = {z} sits on the H- ladder value {level}"
                )));
            }
        }
        Ok(())
    }

    fn check_t_domain(&self, z: Complex64) -> Result<()> {
        if z == Complex64::ZERO {
            return Err(Error::Domain("z = 0 is the pole of the zero-mode term".into()));
        }
        self.check_hplus_domain(z)?;
        self.check_hminus_ladder(z)
    }

    fn guard_assembly(&self) -> Result<()> {
        if self.dim() > MAX_ASSEMBLED_DIM {
            return Err(Error::Truncation(format!(
                "refusing to assemble a {0}×{0} family; use the scan/sector accessors",
                self.dim()
            )));
        }
        Ok(())
    }

    /// Scatters sector blocks into the level-major full matrix.
    fn assemble<F>(&self, block: F) -> Result<DMatrix<Complex64>>
    where
        F: Fn(&SectorFam) -> DMatrix<Complex64>,
    {
        self.guard_assembly()?;
        match &self.repr {
            Repr::Dense { .. } => unreachable!("assemble is only used for sector blocks"),
            Repr::Sectored(sectors) => {
                let n = self.dim();
                let mut full = DMatrix::<Complex64>::zeros(n, n);
                for s in sectors {
                    let b = block(s);
                    for (a, &ga) in s.global.iter().enumerate() {
                        for (c, &gc) in s.global.iter().enumerate() {
                            full[(ga, gc)] = b[(a, c)];
                        }
                    }
                }
                Ok(full)
            }
        }
    }

    /// `M(z) = z (H₊ - z)^{-1}`, diagonal on the Landau basis. Agrees with
    /// the partial sums of `z Σ z^k H₊^{-k-1}` to the series remainder.
    pub fn m_of_z(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        self.check_hplus_domain(z)?;
        self.guard_assembly()?;
        let n = self.dim();
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = z / (Complex64::new(self.hplus[i], 0.0) - z);
        }
        Ok(m)
    }

    /// Truncated power series `Σ_{k<=n_terms} z^{k+1} H₊^{-k-1}` of `M`.
    pub fn m_series(&self, z: Complex64, n_terms: usize) -> Result<DMatrix<Complex64>> {
        self.check_hplus_domain(z)?;
        self.guard_assembly()?;
        let n = self.dim();
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n {
            let h = Complex64::new(self.hplus[i], 0.0);
            let ratio = z / h;
            let mut term = ratio;
            let mut acc = Complex64::ZERO;
            for _ in 0..=n_terms {
                acc += term;
                term *= ratio;
            }
            m[(i, i)] = acc;
        }
        Ok(m)
    }

    /// `T_V(z) = (I + M(z)) w R_-(z) w†` as a full matrix.
    pub fn t_v(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        self.check_t_domain(z)?;
        match &self.repr {
            Repr::Dense { level_grams, .. } => {
                let n = self.dim();
                let mut acc = DMatrix::<Complex64>::zeros(n, n);
                for (q, g) in level_grams.iter().enumerate() {
                    acc += g * level_coeff(self.b0, q, z);
                }
                self.scale_rows_by_m(&mut acc, z, true);
                Ok(acc)
            }
            Repr::Sectored(_) => self.assemble(|s| s.t_v(self.b0, z)),
        }
    }

    /// Symmetrized form `(I+M)^{1/2} w R_-(z) w† (I+M)^{1/2}`, similar to
    /// `T_V(z)` (so the characteristic values agree) and genuinely
    /// Hermitian for real `z` in the disk. The one-sided `(I+M)` factor of
    /// the plain form breaks entrywise Hermiticity.
    pub fn t_v_symmetrized(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        self.check_t_domain(z)?;
        let mut acc = self.t_v(z)?;
        // undo the left factor, apply the split one on both sides
        let n = self.dim();
        for i in 0..n {
            let hi = Complex64::new(self.hplus[i], 0.0);
            let fi = Complex64::ONE + z / (hi - z);
            let si = fi.sqrt();
            for j in 0..n {
                let hj = Complex64::new(self.hplus[j], 0.0);
                let sj = (Complex64::ONE + z / (hj - z)).sqrt();
                let v = acc[(i, j)];
                acc[(i, j)] = si * (v / fi) * sj;
            }
        }
        Ok(acc)
    }

    /// Analytic derivative `T_V'(z) = M'(z) w R_- w† + (I+M) w R_-' w†`.
    pub fn t_v_prime(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        self.check_t_domain(z)?;
        match &self.repr {
            Repr::Dense { level_grams, .. } => {
                let n = self.dim();
                let mut wrw = DMatrix::<Complex64>::zeros(n, n);
                let mut wrw_prime = DMatrix::<Complex64>::zeros(n, n);
                for (q, g) in level_grams.iter().enumerate() {
                    wrw += g * level_coeff(self.b0, q, z);
                    wrw_prime += g * level_coeff_prime(self.b0, q, z);
                }
                for i in 0..n {
                    let h = Complex64::new(self.hplus[i], 0.0);
                    let dm = h / ((h - z) * (h - z));
                    let ipm = Complex64::ONE + z / (h - z);
                    for j in 0..n {
                        let a = wrw[(i, j)];
                        let b = wrw_prime[(i, j)];
                        wrw[(i, j)] = dm * a;
                        wrw_prime[(i, j)] = ipm * b;
                    }
                }
                Ok(wrw + wrw_prime)
            }
            Repr::Sectored(_) => self.assemble(|s| s.t_v_prime(self.b0, z)),
        }
    }

    /// The scanned operator `A(z) = I - T_{eV}(z) = I - e² T_V(z)`.
    pub fn a_of_z(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        let mut a = self.t_v(z)? * Complex64::new(-self.e2(), 0.0);
        for i in 0..a.nrows() {
            a[(i, i)] += Complex64::ONE;
        }
        Ok(a)
    }

    pub fn a_prime(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        Ok(self.t_v_prime(z)? * Complex64::new(-self.e2(), 0.0))
    }

    fn scale_rows_by_m(&self, mat: &mut DMatrix<Complex64>, z: Complex64, plus_identity: bool) {
        for i in 0..mat.nrows() {
            let m = z / (Complex64::new(self.hplus[i], 0.0) - z);
            let factor = if plus_identity { Complex64::ONE + m } else { m };
            for j in 0..mat.ncols() {
                let v = mat[(i, j)];
                mat[(i, j)] = factor * v;
            }
        }
    }

    /// `K_V(z) = w p w† - z A(z) = (I+M)(w p w† - z w R_- p⊥ w†)`.
    pub fn k_v(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        self.check_hplus_domain(z)?;
        self.check_hminus_ladder(z)?;
        match &self.repr {
            Repr::Dense { level_grams, .. } => {
                let mut acc = level_grams[0].clone();
                for (q, g) in level_grams.iter().enumerate().skip(1) {
                    acc += g * (-z * level_coeff(self.b0, q, z));
                }
                self.scale_rows_by_m(&mut acc, z, true);
                Ok(acc)
            }
            Repr::Sectored(_) => self.assemble(|s| s.k_v(self.b0, z)),
        }
    }

    /// `K_V(0) = w p w†`.
    pub fn k_v0(&self) -> Result<DMatrix<Complex64>> {
        match &self.repr {
            Repr::Dense { level_grams, .. } => Ok(level_grams[0].clone()),
            Repr::Sectored(_) => self.assemble(|s| {
                let n = s.dim();
                match s.levels.iter().position(|&q| q == 0) {
                    Some(pos) => s.level_grams[pos].clone(),
                    None => DMatrix::zeros(n, n),
                }
            }),
        }
    }

    /// Rescaled family `I - K_V^{(e)}(λ)/λ` with `λ = -z/e²`.
    pub fn rescaled_family(&self, lambda: f64) -> Result<DMatrix<Complex64>> {
        if lambda == 0.0 {
            return Err(Error::Domain("λ = 0 is the pole of the rescaled family".into()));
        }
        let z = Complex64::new(-lambda * self.e2(), 0.0);
        let k = self.k_v(z)?;
        let mut a = k * Complex64::new(-1.0 / lambda, 0.0);
        for i in 0..a.nrows() {
            a[(i, i)] += Complex64::ONE;
        }
        Ok(a)
    }

    /// Full `U` matrix (assembled for sector families).
    fn u_matrix(&self) -> Result<DMatrix<Complex64>> {
        match &self.repr {
            Repr::Dense { u, .. } => Ok(u.clone()),
            Repr::Sectored(_) => self.assemble(|s| s.u_block.clone()),
        }
    }

    fn w_matrix(&self) -> Result<DMatrix<Complex64>> {
        match &self.repr {
            Repr::Dense { w, .. } => Ok(w.clone()),
            Repr::Sectored(_) => self.assemble(|s| s.w_block.clone()),
        }
    }

    /// Inverse of the reduced operator `H_- - z - e² Ū (H₊ - z)^{-1} U` on
    /// the truncation.
    pub fn reduced_resolvent(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        self.check_hplus_domain(z)?;
        let u_matrix = self.u_matrix()?;
        let n = self.dim();
        let mut scaled = u_matrix.clone();
        for i in 0..n {
            let c = (Complex64::new(self.hplus[i], 0.0) - z).inv();
            for j in 0..n {
                let v = scaled[(i, j)];
                scaled[(i, j)] = c * v;
            }
        }
        let mut reduced = u_matrix.adjoint() * scaled * Complex64::new(-self.e2(), 0.0);
        for i in 0..n {
            reduced[(i, i)] += Complex64::new(self.hminus[i], 0.0) - z;
        }
        reduced
            .try_inverse()
            .ok_or_else(|| Error::Linalg("reduced operator is singular at this z".into()))
    }

    /// Defect `(I - T_{eV}(z)) (I + e² (I+M) w R(z) w†) - I` of the
    /// resolvent identity; exactly zero on the truncation up to roundoff.
    pub fn resolvent_identity_defect(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        let n = self.dim();
        let a = self.a_of_z(z)?;
        let r = self.reduced_resolvent(z)?;
        let w = self.w_matrix()?;
        let mut sandwich = &w * r * w.adjoint();
        self.scale_rows_by_m(&mut sandwich, z, true);
        let mut second = sandwich * Complex64::new(self.e2(), 0.0);
        for i in 0..n {
            second[(i, i)] += Complex64::ONE;
        }
        let mut product = a * second;
        for i in 0..n {
            product[(i, i)] -= Complex64::ONE;
        }
        Ok(product)
    }

    /// Max-entry residual of the resolvent identity.
    pub fn resolvent_identity_residual(&self, z: Complex64) -> Result<f64> {
        Ok(linalg::max_abs_entry(&self.resolvent_identity_defect(z)?))
    }

    /// Conditioning of `I + e² K_V'(0) Π₀` with `Π₀` the projector onto
    /// `ker K_V(0)`; couplings are flagged as potentially exceptional when
    /// this exceeds 1e8.
    pub fn exceptional_conditioning(&self) -> Result<f64> {
        // K_V'(0) = H₊^{-1} w p w† - w H₋^{-1} p⊥ w†, per block.
        let op_extremes = |grams: &[DMatrix<Complex64>],
                           levels: &[usize],
                           hplus: &[f64]|
         -> Result<(f64, f64)> {
            let n = grams.first().map(|g| g.nrows()).unwrap_or(0);
            if n == 0 {
                return Ok((1.0, 1.0));
            }
            let mut kprime = DMatrix::<Complex64>::zeros(n, n);
            let mut kv0 = DMatrix::<Complex64>::zeros(n, n);
            for (pos, &q) in levels.iter().enumerate() {
                if q == 0 {
                    kv0 += &grams[pos];
                } else {
                    kprime += &grams[pos]
                        * Complex64::new(-(2.0 * self.b0 * q as f64).recip(), 0.0);
                }
            }
            // add H+^{-1} w p w†
            let mut hp_kv0 = kv0.clone();
            for i in 0..n {
                let c = Complex64::new(hplus[i].recip(), 0.0);
                for j in 0..n {
                    let v = hp_kv0[(i, j)];
                    hp_kv0[(i, j)] = c * v;
                }
            }
            kprime += hp_kv0;
            let (vals, vecs) = linalg::hermitian_eigen(&kv0)?;
            let scale = vals.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
            let mut pi0 = DMatrix::<Complex64>::zeros(n, n);
            for (idx, &v) in vals.iter().enumerate() {
                if v.abs() <= 1e-12 * scale.max(1e-300) {
                    let col = vecs.column(idx);
                    pi0 += col * col.adjoint();
                }
            }
            let mut op = kprime * pi0 * Complex64::new(self.e2(), 0.0);
            for i in 0..n {
                op[(i, i)] += Complex64::ONE;
            }
            let svd = op.svd(false, false);
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for &s in svd.singular_values.iter() {
                lo = lo.min(s);
                hi = hi.max(s);
            }
            Ok((lo, hi))
        };
        let (mut lo_all, mut hi_all) = (f64::INFINITY, 0.0f64);
        match &self.repr {
            Repr::Dense { level_grams, .. } => {
                let levels: Vec<usize> = (0..self.q_levels).collect();
                let (lo, hi) = op_extremes(level_grams, &levels, &self.hplus)?;
                lo_all = lo_all.min(lo);
                hi_all = hi_all.max(hi);
            }
            Repr::Sectored(sectors) => {
                for s in sectors {
                    let (lo, hi) = op_extremes(&s.level_grams, &s.levels, &s.hplus)?;
                    lo_all = lo_all.min(lo);
                    hi_all = hi_all.max(hi);
                }
            }
        }
        if lo_all == 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(hi_all / lo_all)
    }

    /// Smallest singular value of `A(z)` at a real point, block-wise for
    /// sector families.
    pub fn sigma_min_at(&self, z: Complex64) -> Result<f64> {
        match &self.repr {
            Repr::Dense { .. } => Ok(linalg::sigma_min(&self.a_of_z(z)?)),
            Repr::Sectored(sectors) => {
                self.check_t_domain(z)?;
                let mut lo = f64::INFINITY;
                for s in sectors {
                    let a = s.a_of_z(self.b0, self.e2(), z);
                    let svd = a.svd(false, false);
                    for &sv in svd.singular_values.iter() {
                        lo = lo.min(sv);
                    }
                }
                Ok(lo)
            }
        }
    }

    fn det_sign_at(&self, z: Complex64) -> Result<f64> {
        match &self.repr {
            Repr::Dense { .. } => Ok(linalg::det_sign_real(&self.a_of_z(z)?)),
            Repr::Sectored(sectors) => {
                self.check_t_domain(z)?;
                let mut phase = Complex64::ONE;
                for s in sectors {
                    let a = s.a_of_z(self.b0, self.e2(), z);
                    let p = linalg::det_phase(&a);
                    if p == Complex64::ZERO {
                        return Ok(0.0);
                    }
                    phase *= p;
                }
                Ok(phase.re.signum())
            }
        }
    }

    /// Crude norm scale of `T_{eV}` used by the flagging threshold.
    fn t_norm_estimate(&self, z: Complex64) -> Result<f64> {
        let e2 = self.e2();
        match &self.repr {
            Repr::Dense { .. } => {
                Ok(linalg::max_abs_entry(&self.t_v(z)?) * e2 * self.dim() as f64)
            }
            Repr::Sectored(sectors) => {
                let mut worst = 0.0f64;
                for s in sectors {
                    let t = s.t_v(self.b0, z);
                    worst = worst.max(linalg::max_abs_entry(&t) * e2 * t.nrows() as f64);
                }
                Ok(worst)
            }
        }
    }

    /// Smallest singular value of `A(z)` on a real grid, flagged local
    /// minima refined to characteristic values with index multiplicities.
    pub fn characteristic_scan(&self, z_grid: &[f64]) -> Result<ScanResult> {
        use rayon::prelude::*;
        let mut grid: Vec<f64> = z_grid.to_vec();
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        grid.dedup();
        if grid.iter().any(|&z| z == 0.0) {
            return Err(Error::Domain("scan grid must avoid z = 0".into()));
        }
        let evals: Vec<Result<(f64, f64)>> = grid
            .par_iter()
            .map(|&z| {
                let zc = Complex64::new(z, 0.0);
                Ok((self.sigma_min_at(zc)?, self.det_sign_at(zc)?))
            })
            .collect();
        let mut points = Vec::with_capacity(grid.len());
        let mut signs = Vec::with_capacity(grid.len());
        for (z, res) in grid.iter().zip(evals.into_iter()) {
            let (sigma, sign) = res?;
            points.push(ScanPoint {
                z: *z,
                sigma_min: sigma,
            });
            signs.push(sign);
        }
        let mid = grid[grid.len() / 2];
        let t_norm = self.t_norm_estimate(Complex64::new(mid, 0.0))?;
        let threshold = CHAR_THRESHOLD_SCALE * (1.0 + t_norm);

        let mut roots: Vec<f64> = Vec::new();
        for i in 0..grid.len() - 1 {
            if signs[i] != 0.0 && signs[i + 1] != 0.0 && signs[i] != signs[i + 1] {
                roots.push(self.bisect_sign_change(grid[i], grid[i + 1], signs[i])?);
            }
        }
        for i in 1..points.len().saturating_sub(1) {
            let local_min = points[i].sigma_min < points[i - 1].sigma_min
                && points[i].sigma_min < points[i + 1].sigma_min;
            if local_min && points[i].sigma_min < threshold {
                let z = self.golden_minimize(grid[i - 1], grid[i + 1])?;
                let sigma = self.sigma_min_at(Complex64::new(z, 0.0))?;
                if sigma < threshold && roots.iter().all(|&r| (r - z).abs() > 64.0 * REFINE_TOL) {
                    roots.push(z);
                }
            }
        }
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        roots.dedup_by(|a, b| (*a - *b).abs() <= 64.0 * REFINE_TOL);
        let mut flagged = Vec::with_capacity(roots.len());
        for (idx, &z) in roots.iter().enumerate() {
            let sigma = self.sigma_min_at(Complex64::new(z, 0.0))?;
            let neighbor_gap = roots
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != idx)
                .map(|(_, &r)| (r - z).abs())
                .fold(f64::INFINITY, f64::min);
            let multiplicity = self.root_multiplicity(z, neighbor_gap)?;
            flagged.push(CharacteristicValue {
                z,
                sigma_min: sigma,
                multiplicity,
            });
        }
        Ok(ScanResult {
            points,
            flagged,
            threshold,
        })
    }

    fn bisect_sign_change(&self, mut lo: f64, mut hi: f64, sign_lo: f64) -> Result<f64> {
        for _ in 0..200 {
            if (hi - lo).abs() <= REFINE_TOL {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let s = self.det_sign_at(Complex64::new(mid, 0.0))?;
            if s == 0.0 {
                return Ok(mid);
            }
            if s == sign_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn golden_minimize(&self, mut a: f64, mut b: f64) -> Result<f64> {
        const INVPHI: f64 = 0.618_033_988_749_894_9;
        let sigma_at = |z: f64| -> Result<f64> { self.sigma_min_at(Complex64::new(z, 0.0)) };
        let mut c = b - INVPHI * (b - a);
        let mut d = a + INVPHI * (b - a);
        let mut fc = sigma_at(c)?;
        let mut fd = sigma_at(d)?;
        for _ in 0..120 {
            if (b - a).abs() <= REFINE_TOL {
                break;
            }
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - INVPHI * (b - a);
                fc = sigma_at(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INVPHI * (b - a);
                fd = sigma_at(d)?;
            }
        }
        Ok(0.5 * (a + b))
    }

    /// Index of `I - T_{eV}` around a single refined root; the contour is
    /// grown/refined until the integral is cleanly integral.
    fn root_multiplicity(&self, z: f64, neighbor_gap: f64) -> Result<i64> {
        let mut radius = (z.abs() * 1e-4)
            .max(1e-9)
            .min(if neighbor_gap.is_finite() {
                neighbor_gap / 3.0
            } else {
                z.abs() * 0.05
            });
        let mut points = 32;
        let mut last_err = None;
        for _ in 0..4 {
            let contour = Circle {
                center: Complex64::new(z, 0.0),
                radius,
            };
            match self.index_on_contour(contour, points) {
                Ok(idx) => return Ok(idx),
                Err(err @ Error::ContourTooCoarse { .. }) => {
                    points *= 2;
                    last_err = Some(err);
                }
                Err(err @ Error::ContourUnsafe { .. }) => {
                    radius *= 1.8;
                    if neighbor_gap.is_finite() && radius > neighbor_gap / 2.5 {
                        radius = neighbor_gap / 2.5;
                        points *= 2;
                    }
                    last_err = Some(err);
                }
                Err(other) => return Err(other),
            }
        }
        Err(last_err.unwrap_or_else(|| Error::Domain("multiplicity refinement failed".into())))
    }

    /// Contour index of the family `A(z) = I - T_{eV}(z)`; block sum over
    /// sectors where available.
    pub fn index_on_contour(&self, contour: Circle, n_points: usize) -> Result<i64> {
        match &self.repr {
            Repr::Dense { .. } => index_on_contour_fn(
                |z| Ok((self.a_of_z(z)?, self.a_prime(z)?)),
                contour,
                n_points,
            ),
            Repr::Sectored(sectors) => {
                let e2 = self.e2();
                let mut total = 0i64;
                for s in sectors {
                    total += index_on_contour_fn(
                        |z| {
                            self.check_t_domain(z)?;
                            Ok((
                                s.a_of_z(self.b0, e2, z),
                                s.t_v_prime(self.b0, z) * Complex64::new(-e2, 0.0),
                            ))
                        },
                        contour,
                        n_points,
                    )?;
                }
                Ok(total)
            }
        }
    }
}

/// Grid point of a characteristic-value scan.
#[derive(Debug, Clone, Copy)]
pub struct ScanPoint {
    pub z: f64,
    pub sigma_min: f64,
}

/// A refined characteristic value with its index multiplicity.
#[derive(Debug, Clone, Copy)]
pub struct CharacteristicValue {
    pub z: f64,
    pub sigma_min: f64,
    pub multiplicity: i64,
}

#[derive(Debug, Clone)]
pub struct ScanResult {
    pub points: Vec<ScanPoint>,
    pub flagged: Vec<CharacteristicValue>,
    pub threshold: f64,
}

/// Numerical index `(2πi)^{-1} ∮ tr[A'(z) A(z)^{-1}] dz` over a circle by
/// the midpoint trapezoid rule (spectrally accurate for analytic
/// integrands); the result must round cleanly to an integer.
///
/// One LU factorization per node drives both the trace solve and the
/// near-singularity guard (smallest pivot magnitude, confirmed by a full
/// smallest-singular-value computation before rejecting).
pub fn index_on_contour_fn<F>(family: F, contour: Circle, n_points: usize) -> Result<i64>
where
    F: Fn(Complex64) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)>,
{
    if n_points < 8 {
        return Err(Error::InvalidParameter("contour needs at least 8 nodes".into()));
    }
    let mut raw = Complex64::ZERO;
    for j in 0..n_points {
        let theta = std::f64::consts::TAU * (j as f64 + 0.5) / n_points as f64;
        let phase = Complex64::from_polar(1.0, theta);
        let z = contour.center + Complex64::new(contour.radius, 0.0) * phase;
        let (a, a_prime) = family(z)?;
        let lu = a.clone().lu();
        let min_pivot = (0..a.nrows())
            .map(|i| lu.u()[(i, i)].norm())
            .fold(f64::INFINITY, f64::min);
        if min_pivot < CONTOUR_GUARD {
            let sigma = linalg::sigma_min(&a);
            if sigma < CONTOUR_GUARD {
                return Err(Error::ContourUnsafe {
                    sigma,
                    guard: CONTOUR_GUARD,
                    node: j,
                });
            }
        }
        let x = lu
            .solve(&a_prime)
            .ok_or_else(|| Error::Linalg("singular matrix on contour".into()))?;
        raw += x.diagonal().sum() * phase;
    }
    raw *= Complex64::new(contour.radius / n_points as f64, 0.0);
    let rounded = raw.re.round();
    let distance = (raw - Complex64::new(rounded, 0.0)).norm();
    if distance > INDEX_TOL {
        return Err(Error::ContourTooCoarse {
            raw: format!("{raw}"),
            distance,
        });
    }
    Ok(rounded as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{AngularProfile, RadialForm};
    use approx::assert_relative_eq;

    fn family(e: f64, k: usize, q: usize) -> BSFamily {
        let field = MagneticField::constant(1.0).unwrap();
        let pot = Potential::regular(AngularProfile::constant(1.0), 2.0).unwrap();
        bs_family(&field, &pot, e, k, q).unwrap()
    }

    fn angular_family(e: f64, k: usize, q: usize) -> BSFamily {
        let field = MagneticField::constant(1.0).unwrap();
        let pot =
            Potential::regular(AngularProfile::parse("1 + 0.3*cos(θ)").unwrap(), 2.0).unwrap();
        bs_family(&field, &pot, e, k, q).unwrap()
    }

    #[test]
    fn m_of_z_matches_scalar_resummation() {
        // Scalar check h+ = 2, z = 1: M = 1, I + M = 2 = h/(h-z).
        let fam = family(0.1, 1, 1);
        let m = fam.m_of_z(Complex64::new(1.0, 0.0)).unwrap();
        assert_relative_eq!(m[(0, 0)].re, 1.0, epsilon = 1e-14);
        // z = 0 gives the zero matrix.
        let m0 = fam.m_of_z(Complex64::ZERO).unwrap();
        assert_eq!(m0[(0, 0)], Complex64::ZERO);
    }

    #[test]
    fn m_series_converges_to_closed_form() {
        let fam = family(0.1, 3, 3);
        let z = Complex64::new(0.5, 0.2);
        let closed = fam.m_of_z(z).unwrap();
        let series = fam.m_series(z, 30).unwrap();
        let diff = &closed - &series;
        assert!(linalg::max_abs_entry(&diff) < 1e-12, "{}", linalg::max_abs_entry(&diff));
    }

    #[test]
    fn m_rejects_out_of_domain() {
        let fam = family(0.1, 2, 2);
        assert!(fam.m_of_z(Complex64::new(2.0, 0.0)).is_err());
        assert!(fam.m_of_z(Complex64::new(0.0, 2.5)).is_err());
    }

    #[test]
    fn t_v_zero_potential_is_zero() {
        let field = MagneticField::constant(1.0).unwrap();
        let pot = Potential::regular(AngularProfile::constant(0.0), 2.0).unwrap();
        let fam = bs_family(&field, &pot, 0.3, 3, 2).unwrap();
        let t = fam.t_v(Complex64::new(-0.01, 0.0)).unwrap();
        assert_eq!(linalg::max_abs_entry(&t), 0.0);
        // And the scan sees sigma_min ≡ 1.
        let scan = fam.characteristic_scan(&[-0.02, -0.01, -0.005]).unwrap();
        for p in &scan.points {
            assert_relative_eq!(p.sigma_min, 1.0, epsilon = 1e-12);
        }
        assert!(scan.flagged.is_empty());
    }

    #[test]
    fn t_v_hermitian_for_negative_real_z() {
        // The symmetrized (similar) form is Hermitian on the real axis and
        // shares the characteristic values with the plain family.
        let fam = family(0.2, 4, 3);
        let z = Complex64::new(-0.05, 0.0);
        let t = fam.t_v_symmetrized(z).unwrap();
        assert!(linalg::hermiticity_deviation(&t) < 1e-12);
        // Similarity: same spectrum as the plain form, checked through the
        // determinant of I - e² T at a few shifts.
        let plain = fam.t_v(z).unwrap();
        for &shift in &[0.3, 1.0, 2.7] {
            let e2 = Complex64::new(shift, 0.0);
            let mut a = plain.clone() * (-e2);
            let mut b = t.clone() * (-e2);
            for i in 0..a.nrows() {
                a[(i, i)] += Complex64::ONE;
                b[(i, i)] += Complex64::ONE;
            }
            let (da, db) = (linalg::det_phase(&a), linalg::det_phase(&b));
            assert!((da - db).norm() < 1e-9, "det phases differ: {da} vs {db}");
        }
    }

    #[test]
    fn t_v_pole_and_ladder_rejection() {
        let fam = family(0.2, 3, 3);
        assert!(fam.t_v(Complex64::ZERO).is_err());
        assert!(fam.t_v(Complex64::new(2.0, 0.0)).is_err());
    }

    #[test]
    fn sector_and_dense_family_agree() {
        // A radial potential routed through the dense representation (by
        // building the family from a one-harmonic profile with zero
        // harmonic weight) must match the sector route.
        let field = MagneticField::constant(1.0).unwrap();
        let radial = Potential::regular(AngularProfile::constant(1.0), 2.0).unwrap();
        let almost_radial = Potential::regular(
            AngularProfile {
                cos_coeffs: vec![1.0, 0.0],
                sin_coeffs: vec![1e-300],
            },
            2.0,
        )
        .unwrap();
        let sectored = bs_family(&field, &radial, 0.1, 6, 3).unwrap();
        let dense = bs_family(&field, &almost_radial, 0.1, 6, 3).unwrap();
        assert!(matches!(sectored.repr, Repr::Sectored(_)));
        assert!(matches!(dense.repr, Repr::Dense { .. }));
        for &zr in &[-0.03, -0.004] {
            let z = Complex64::new(zr, 0.0);
            let a = sectored.t_v(z).unwrap();
            let b = dense.t_v(z).unwrap();
            assert!(linalg::max_abs_entry(&(&a - &b)) < 1e-10);
            let ap = sectored.t_v_prime(z).unwrap();
            let bp = dense.t_v_prime(z).unwrap();
            assert!(linalg::max_abs_entry(&(&ap - &bp)) < 1e-8);
            assert_relative_eq!(
                sectored.sigma_min_at(z).unwrap(),
                dense.sigma_min_at(z).unwrap(),
                max_relative = 1e-6
            );
        }
    }

    #[test]
    fn resolvent_identity_on_truncation() {
        let fam = family(0.15, 4, 3);
        for &z in &[-0.02, -0.005, -0.0013] {
            let res = fam
                .resolvent_identity_residual(Complex64::new(z, 0.0))
                .unwrap();
            assert!(res < 1e-9, "residual {res} at z = {z}");
        }
        for &z in &[Complex64::new(-0.01, 0.004), Complex64::new(0.006, -0.009)] {
            let res = fam.resolvent_identity_residual(z).unwrap();
            assert!(res < 1e-9, "residual {res} at z = {z}");
        }
        // Angular (dense) family too.
        let fam = angular_family(0.12, 4, 2);
        let res = fam
            .resolvent_identity_residual(Complex64::new(-0.008, 0.002))
            .unwrap();
        assert!(res < 1e-9, "dense residual {res}");
    }

    #[test]
    fn k_v_at_zero_equals_wpw() {
        let fam = family(0.1, 4, 3);
        let k_small = fam.k_v(Complex64::new(-1e-9, 0.0)).unwrap();
        let diff = &k_small - &fam.k_v0().unwrap();
        assert!(linalg::max_abs_entry(&diff) < 1e-7);
        let evals = linalg::hermitian_eigenvalues(&fam.k_v0().unwrap()).unwrap();
        let top = evals.last().copied().unwrap();
        let a = fam.rescaled_family(top).unwrap();
        // e² corrections shift the singular λ slightly; σ_min is small.
        assert!(linalg::sigma_min(&a) < 0.05, "{}", linalg::sigma_min(&a));
    }

    #[test]
    fn scalar_index_hooks() {
        // A(z) = z over the unit circle: index 1.
        let unit = Circle {
            center: Complex64::ZERO,
            radius: 1.0,
        };
        let idx = index_on_contour_fn(
            |z| {
                let mut a = DMatrix::<Complex64>::zeros(1, 1);
                a[(0, 0)] = z;
                let mut ap = DMatrix::<Complex64>::zeros(1, 1);
                ap[(0, 0)] = Complex64::ONE;
                Ok((a, ap))
            },
            unit,
            64,
        )
        .unwrap();
        assert_eq!(idx, 1);
        // A(z) = (z - 0.2)(z + 0.3): index 2 (both roots inside).
        let idx2 = index_on_contour_fn(
            |z| {
                let mut a = DMatrix::<Complex64>::zeros(1, 1);
                a[(0, 0)] = (z - Complex64::new(0.2, 0.0)) * (z + Complex64::new(0.3, 0.0));
                let mut ap = DMatrix::<Complex64>::zeros(1, 1);
                ap[(0, 0)] = z * 2.0 + Complex64::new(0.1, 0.0);
                Ok((a, ap))
            },
            unit,
            96,
        )
        .unwrap();
        assert_eq!(idx2, 2);
        // Root outside: index 0.
        let idx0 = index_on_contour_fn(
            |z| {
                let mut a = DMatrix::<Complex64>::zeros(1, 1);
                a[(0, 0)] = z - Complex64::new(3.0, 0.0);
                let mut ap = DMatrix::<Complex64>::zeros(1, 1);
                ap[(0, 0)] = Complex64::ONE;
                Ok((a, ap))
            },
            unit,
            64,
        )
        .unwrap();
        assert_eq!(idx0, 0);
    }

    #[test]
    fn contour_guard_rejects_roots_on_path() {
        let unit = Circle {
            center: Complex64::ZERO,
            radius: 1.0,
        };
        let res = index_on_contour_fn(
            |z| {
                let mut a = DMatrix::<Complex64>::zeros(1, 1);
                let theta = std::f64::consts::TAU * 0.5 / 64.0;
                a[(0, 0)] = z - Complex64::from_polar(1.0, theta);
                let mut ap = DMatrix::<Complex64>::zeros(1, 1);
                ap[(0, 0)] = Complex64::ONE;
                Ok((a, ap))
            },
            unit,
            64,
        );
        assert!(matches!(res, Err(Error::ContourUnsafe { .. })));
    }

    #[test]
    fn analyticity_cauchy_mean() {
        // The contour mean of T entries over a small circle equals the
        // center value for analytic families.
        let fam = family(0.2, 3, 2);
        let center = Complex64::new(-0.04, 0.01);
        let radius = 0.005;
        let n = 64;
        let t_center = fam.t_v(center).unwrap();
        let mut mean = DMatrix::<Complex64>::zeros(t_center.nrows(), t_center.ncols());
        for j in 0..n {
            let theta = std::f64::consts::TAU * j as f64 / n as f64;
            let z = center + Complex64::from_polar(radius, theta);
            mean += fam.t_v(z).unwrap();
        }
        mean /= Complex64::new(n as f64, 0.0);
        let diff = &mean - &t_center;
        assert!(linalg::max_abs_entry(&diff) < 1e-8, "{}", linalg::max_abs_entry(&diff));
    }

    #[test]
    fn scan_finds_negative_eigenvalues() {
        // The flagged characteristic values must match the near-zero
        // spectrum of the spinor model on the same truncation.
        let field = MagneticField::constant(1.0).unwrap();
        let pot = Potential::regular(AngularProfile::constant(1.0), 2.0).unwrap();
        let e = 0.1;
        let (k, q) = (16, 3);
        let fam = bs_family(&field, &pot, e, k, q).unwrap();
        let trunc = crate::pauli::build(&field, &pot, e, k, q).unwrap();
        let window = crate::pauli::Window::new(0.5, 5e-3).unwrap();
        let near = trunc.near_zero_spectrum(window).unwrap();
        let expected: Vec<f64> = near
            .eigenvalues
            .iter()
            .copied()
            .filter(|&v| {
                let (lo, hi) = window.bounds(e);
                v >= lo && v < hi
            })
            .collect();
        let grid: Vec<f64> = (0..240)
            .map(|i| {
                let (lo, hi) = window.bounds(e);
                lo * ((hi / lo) as f64).powf(i as f64 / 239.0)
            })
            .collect();
        let scan = fam.characteristic_scan(&grid).unwrap();
        let total: i64 = scan.flagged.iter().map(|c| c.multiplicity).sum();
        assert_eq!(total as usize, expected.len(), "flagged {:?}", scan.flagged);
        for c in &scan.flagged {
            let nearest = expected
                .iter()
                .map(|&v| (v - c.z).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 1e-8, "characteristic value {} vs spectrum {expected:?}", c.z);
        }
    }

    #[test]
    fn index_additivity_over_subcontours() {
        let field = MagneticField::constant(1.0).unwrap();
        let pot = Potential::regular(AngularProfile::constant(1.0), 2.0).unwrap();
        let e = 0.1;
        let fam = bs_family(&field, &pot, e, 12, 3).unwrap();
        let grid: Vec<f64> = (0..200)
            .map(|i| -1.5e-2 * (1.5e-4f64 / 1.5e-2).powf(i as f64 / 199.0))
            .collect();
        let scan = fam.characteristic_scan(&grid).unwrap();
        assert!(scan.flagged.len() >= 3, "need three roots, got {:?}", scan.flagged);
        let z1 = scan.flagged[0].z;
        let z2 = scan.flagged[1].z;
        let z3 = scan.flagged[2].z;
        let gap = (z2 - z1).abs();
        let clearance = (z3 - z2).abs();
        let around = |c: f64, r: f64| Circle {
            center: Complex64::new(c, 0.0),
            radius: r,
        };
        let i1 = fam.index_on_contour(around(z1, gap / 4.0), 96).unwrap();
        let i2 = fam.index_on_contour(around(z2, gap / 4.0), 96).unwrap();
        // The big circle needs clearance from the next root outside, or
        // the trapezoid rule converges too slowly for the 1e-6 gate.
        let mid = 0.5 * (z1 + z2);
        let big = fam
            .index_on_contour(around(mid, gap / 2.0 + clearance / 3.0), 256)
            .unwrap();
        assert_eq!(big, i1 + i2);
    }

    #[test]
    fn rescaled_singularities_match_scan_under_change_of_variable() {
        let fam = family(0.12, 12, 3);
        let e2 = fam.coupling * fam.coupling;
        let grid: Vec<f64> = (1..400).map(|i| -1e-1 * e2 * i as f64 / 400.0).collect();
        let scan = fam.characteristic_scan(&grid).unwrap();
        assert!(!scan.flagged.is_empty());
        for c in scan.flagged.iter().take(3) {
            let lambda = -c.z / e2;
            let a = fam.rescaled_family(lambda).unwrap();
            let sigma = linalg::sigma_min(&a);
            assert!(sigma < 1e-7, "rescaled family not singular at λ = {lambda}: {sigma}");
        }
    }

    #[test]
    fn exceptional_conditioning_is_moderate_generically() {
        let fam = family(0.1, 8, 2);
        let cond = fam.exceptional_conditioning().unwrap();
        assert!(cond < 1e4, "cond = {cond}");
        let fam = angular_family(0.1, 6, 2);
        let cond = fam.exceptional_conditioning().unwrap();
        assert!(cond < 1e4, "dense cond = {cond}");
    }

    #[test]
    fn power_tail_family_also_scans() {
        // A second potential class through the same machinery.
        let field = MagneticField::constant(1.0).unwrap();
        let pot = Potential::new(
            AngularProfile::constant(1.0),
            2.0,
            RadialForm::PowerTail { r_cut: 0.3 },
            0.0,
        )
        .unwrap();
        let fam = bs_family(&field, &pot, 0.05, 6, 2).unwrap();
        let t = fam.t_v_symmetrized(Complex64::new(-0.01, 0.0)).unwrap();
        assert!(linalg::hermiticity_deviation(&t) < 1e-12);
    }
}
