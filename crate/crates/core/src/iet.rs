//! Interval exchange transformations on `[0, |lambda|)`.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::scalar::{parse_rational, Length};

/// An IET `f(x) = x + upsilon_a` on `I_a`, half-open intervals throughout.
#[derive(Clone, Debug, PartialEq)]
pub struct Iet<T> {
    perm: Permutation,
    lambda: Vec<T>,
    omega: Vec<Vec<i8>>,
    upsilon: Vec<T>,
    ends0: Vec<T>,
    ends1: Vec<T>,
}

/// `Omega[a][b] = [pi1(b) < pi1(a)] - [pi0(b) < pi0(a)]`.
pub fn omega_matrix(perm: &Permutation) -> Vec<Vec<i8>> {
    let d = perm.d();
    let p0: Vec<usize> = (0..d).map(|a| perm.pi0(a)).collect();
    let p1: Vec<usize> = (0..d).map(|a| perm.pi1(a)).collect();
    (0..d).map(|a| (0..d).map(|b| (p1[b] < p1[a]) as i8 - (p0[b] < p0[a]) as i8).collect()).collect()
}

/// Endpoint grid `x_{eps,j} = sum over pi_eps(a) < j of lambda_a`, `j = 0..=d`.
pub fn endpoints<T: Length>(perm: &Permutation, lambda: &[T], eps: u8) -> Vec<T> {
    let mut out = Vec::with_capacity(lambda.len() + 1);
    let mut acc = T::zero();
    out.push(acc.clone());
    for &s in perm.row(eps) {
        acc = acc + lambda[s].clone();
        out.push(acc.clone());
    }
    out
}

/// Index `j` with `grid[j] <= x < grid[j + 1]`, assuming `grid[0] <= x < grid[last]`.
pub(crate) fn locate<T: PartialOrd>(grid: &[T], x: &T) -> usize {
    grid.partition_point(|g| g <= x).saturating_sub(1).min(grid.len() - 2)
}

impl<T: Length> Iet<T> {
    pub fn new(perm: Permutation, lambda: Vec<T>) -> Result<Self> {
        let d = perm.d();
        if lambda.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: lambda.len() });
        }
        if let Some(symbol) = lambda.iter().position(|l| *l <= T::zero()) {
            return Err(Error::NonPositiveLength { symbol });
        }
        let omega = omega_matrix(&perm);
        let upsilon = omega
            .iter()
            .map(|row| {
                row.iter().zip(&lambda).fold(T::zero(), |acc, (&w, l)| match w {
                    1 => acc + l.clone(),
                    -1 => acc - l.clone(),
                    _ => acc,
                })
            })
            .collect();
        let ends0 = endpoints(&perm, &lambda, 0);
        let ends1 = endpoints(&perm, &lambda, 1);
        Ok(Iet { perm, lambda, omega, upsilon, ends0, ends1 })
    }

    pub fn d(&self) -> usize {
        self.perm.d()
    }

    pub fn perm(&self) -> &Permutation {
        &self.perm
    }

    pub fn lambda(&self) -> &[T] {
        &self.lambda
    }

    pub fn omega(&self) -> &[Vec<i8>] {
        &self.omega
    }

    /// Translation vector `Omega(lambda)`.
    pub fn upsilon(&self) -> &[T] {
        &self.upsilon
    }

    /// `x_{0,j}`, left to right in domain order.
    pub fn ends0(&self) -> &[T] {
        &self.ends0
    }

    /// `x_{1,j}`, left to right in image order.
    pub fn ends1(&self) -> &[T] {
        &self.ends1
    }

    pub fn total(&self) -> T {
        self.ends0[self.d()].clone()
    }

    fn check_domain(&self, x: &T) -> Result<()> {
        if *x < T::zero() || *x >= self.total() {
            return Err(Error::OutOfDomain(x.to_f64_lossy()));
        }
        Ok(())
    }

    /// Symbol `a` with `x` in `I_a`.
    pub fn symbol_at(&self, x: &T) -> Result<usize> {
        self.check_domain(x)?;
        Ok(self.perm.top()[locate(&self.ends0, x)])
    }

    /// Left endpoint of `I_a`.
    pub fn left(&self, a: usize) -> T {
        self.ends0[self.perm.pi0(a)].clone()
    }

    /// Left endpoint of `f(I_a)`.
    pub fn image_left(&self, a: usize) -> T {
        self.ends1[self.perm.pi1(a)].clone()
    }

    pub fn apply(&self, x: &T) -> Result<T> {
        self.check_domain(x)?;
        let j = locate(&self.ends0, x);
        let a = self.perm.top()[j];
        Ok(x.clone() - self.ends0[j].clone() + self.ends1[self.perm.pi1(a)].clone())
    }

    pub fn apply_inverse(&self, y: &T) -> Result<T> {
        self.check_domain(y)?;
        let j = locate(&self.ends1, y);
        let a = self.perm.bot()[j];
        Ok(y.clone() - self.ends1[j].clone() + self.ends0[self.perm.pi0(a)].clone())
    }

    /// Finite-depth check that endpoint orbits avoid the interior endpoints:
    /// `f^n(x_{0,i}) != x_{0,j}` for `1 <= n <= n_max`, `0 < i, j < d`.
    /// Coincidences within `1e-12 |lambda|` count as hits; exact for rationals.
    pub fn check_idoc_depth(&self, n_max: usize) -> bool {
        let d = self.d();
        let total = self.total();
        let tol = T::tie_tol(&total);
        let interior = &self.ends0[1..d];
        for start in interior {
            let mut y = start.clone();
            for _ in 0..n_max {
                y = match self.apply(&y) {
                    Ok(v) => v,
                    Err(_) => return false,
                };
                let k = interior.partition_point(|g| *g < y);
                let near = |i: usize| interior.get(i).is_some_and(|g| (g.clone() - y.clone()).abs() <= tol);
                if near(k) || (k > 0 && near(k - 1)) {
                    return false;
                }
            }
        }
        true
    }

    /// Convert lengths to another scalar type.
    pub fn map_lengths<U: Length>(&self, f: impl Fn(&T) -> U) -> Result<Iet<U>> {
        Iet::new(self.perm.clone(), self.lambda.iter().map(f).collect())
    }
}

/// JSON form `{"d":4,"pi0":[..],"pi1":[..],"lambda":[..]}`. The permutation
/// may instead be given as a monodromy string in `perm`; exact rational
/// lengths such as `"3/7"` may be supplied in `lambda_exact`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct IetSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi0: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi1: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perm: Option<String>,
    pub lambda: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_exact: Option<Vec<String>>,
}

impl IetSpec {
    pub fn from_iet(iet: &Iet<f64>) -> Self {
        let p = iet.perm();
        let d = p.d();
        IetSpec {
            d: Some(d),
            pi0: Some((0..d).map(|a| p.pi0(a) + 1).collect()),
            pi1: Some((0..d).map(|a| p.pi1(a) + 1).collect()),
            perm: None,
            lambda: iet.lambda().to_vec(),
            lambda_exact: None,
        }
    }

    pub fn permutation(&self) -> Result<Permutation> {
        match (&self.perm, &self.pi0, &self.pi1) {
            (Some(s), _, _) => s.parse(),
            (None, Some(p0), Some(p1)) => {
                if let Some(d) = self.d {
                    if p0.len() != d {
                        return Err(Error::DimensionMismatch { expected: d, got: p0.len() });
                    }
                }
                let z = |v: &[usize]| v.iter().map(|&p| p.wrapping_sub(1)).collect::<Vec<_>>();
                Permutation::from_positions(&z(p0), &z(p1))
            }
            _ => Err(Error::Parse("permutation missing: give `perm` or `pi0`/`pi1`".into())),
        }
    }

    pub fn to_iet(&self) -> Result<Iet<f64>> {
        Iet::new(self.permutation()?, self.lambda.clone())
    }

    /// Exact lengths from `lambda_exact`, falling back to the (dyadic) floats.
    pub fn to_exact(&self) -> Result<Iet<BigRational>> {
        let lam = match &self.lambda_exact {
            Some(v) => v
                .iter()
                .map(|s| parse_rational(s).ok_or_else(|| Error::Parse(format!("bad rational {s:?}"))))
                .collect::<Result<Vec<_>>>()?,
            None => self
                .lambda
                .iter()
                .map(|&x| BigRational::from_float(x).ok_or(Error::Parse("non-finite length".into())))
                .collect::<Result<Vec<_>>>()?,
        };
        Iet::new(self.permutation()?, lam)
    }
}

impl<T: Length> Iet<T> {
    /// Sum of `lambda`-weighted displacements; zero for a bijection.
    pub fn weighted_displacement(&self) -> T {
        self.lambda.iter().zip(&self.upsilon).fold(T::zero(), |acc, (l, u)| acc + l.clone() * u.clone())
    }

    pub fn is_exact_zero_displacement(&self) -> bool {
        self.weighted_displacement().is_zero()
    }
}
