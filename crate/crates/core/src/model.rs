//! Confining and interaction potentials.
//!
//! Both potentials are polynomials in one variable. The confining potential
//! `V(q) = sum c_k q^k` must be confining (even degree, positive leading
//! coefficient). The interaction `F(q) = G(|q|)` is described by the
//! coefficients of the even polynomial `G`; because only even powers occur,
//! `F(q) = G(q)` and the mean-field energy `(F * rho)(q)` is again a
//! polynomial whose coefficients follow from the `q`-moments of `rho` by a
//! binomial expansion. That expansion is exact, so no quadrature error ever
//! enters the nonlinear term.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::PhaseDensity;

/// Dense polynomial `sum c_k x^k` with trailing zeros trimmed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: impl Into<Vec<f64>>) -> Self {
        let mut coeffs = coeffs.into();
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree of the polynomial; the zero polynomial reports degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    /// Horner evaluation.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect::<Vec<_>>(),
        )
    }

    /// `p(x + shift)` expressed as a polynomial in `x`.
    pub fn shifted(&self, shift: f64) -> Polynomial {
        let n = self.coeffs.len();
        let mut out = vec![0.0; n];
        for (k, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let mut binom = 1.0;
            let mut power = 1.0;
            // (x + s)^k = sum_j C(k, j) x^j s^(k-j), walked from j = k down.
            for j in (0..=k).rev() {
                out[j] += c * binom * power;
                binom = binom * j as f64 / (k - j + 1) as f64;
                power *= shift;
            }
        }
        Polynomial::new(out)
    }

    /// Cauchy bound: every real root lies in `[-R, R]`.
    pub fn root_bound(&self) -> f64 {
        let lead = self.leading();
        if self.degree() == 0 || lead == 0.0 {
            return 1.0;
        }
        1.0 + self.coeffs[..self.degree()]
            .iter()
            .map(|c| (c / lead).abs())
            .fold(0.0, f64::max)
    }

    /// Real roots in `[lo, hi]` found by a sign-change scan and bisection.
    /// Roots of even multiplicity are not detected.
    pub fn real_roots_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        if self.degree() == 0 {
            return Vec::new();
        }
        const SAMPLES: usize = 4096;
        let h = (hi - lo) / SAMPLES as f64;
        let mut roots: Vec<f64> = Vec::new();
        let push = |r: f64, roots: &mut Vec<f64>| {
            if roots.last().is_none_or(|&last| (r - last).abs() > 1e-10 * (1.0 + r.abs())) {
                roots.push(r);
            }
        };
        let mut x0 = lo;
        let mut f0 = self.eval(x0);
        if f0 == 0.0 {
            push(x0, &mut roots);
        }
        for k in 1..=SAMPLES {
            let x1 = if k == SAMPLES { hi } else { lo + k as f64 * h };
            let f1 = self.eval(x1);
            if f1 == 0.0 {
                push(x1, &mut roots);
            } else if f0 != 0.0 && f0.signum() != f1.signum() {
                let (mut a, mut b, mut fa) = (x0, x1, f0);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if mid <= a || mid >= b {
                        break;
                    }
                    let fm = self.eval(mid);
                    if fm == 0.0 {
                        a = mid;
                        b = mid;
                        break;
                    }
                    if fm.signum() == fa.signum() {
                        a = mid;
                        fa = fm;
                    } else {
                        b = mid;
                    }
                }
                push(0.5 * (a + b), &mut roots);
            }
            x0 = x1;
            f0 = f1;
        }
        roots
    }

    /// Minimum over `[lo, hi]`, located among the endpoints and the
    /// critical points.
    pub fn min_on(&self, lo: f64, hi: f64) -> (f64, f64) {
        let mut best = (lo, self.eval(lo));
        let mut consider = |x: f64| {
            let v = self.eval(x);
            if v < best.1 {
                best = (x, v);
            }
        };
        consider(hi);
        for r in self.derivative().real_roots_in(lo, hi) {
            consider(r);
        }
        best
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0.0 {
                continue;
            }
            if !first {
                write!(f, " {} ", if c < 0.0 { '-' } else { '+' })?;
            } else if c < 0.0 {
                write!(f, "-")?;
            }
            first = false;
            match k {
                0 => write!(f, "{}", c.abs())?,
                1 => write!(f, "{}*q", c.abs())?,
                _ => write!(f, "{}*q^{k}", c.abs())?,
            }
        }
        Ok(())
    }
}

fn check_finite(coeffs: &[f64], what: &str) -> Result<()> {
    if let Some(k) = coeffs.iter().position(|c| !c.is_finite()) {
        return Err(Error::InvalidPotential(format!(
            "{what} coefficient {k} is not finite"
        )));
    }
    Ok(())
}

/// Confining potential `V(q) = sum c_k q^k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfiningPotential {
    poly: Polynomial,
}

impl ConfiningPotential {
    /// Builds `V` from `[c_0, c_1, ..., c_K]`. The degree must be even and at
    /// least 2 with `c_K > 0`.
    pub fn new(coeffs: impl Into<Vec<f64>>) -> Result<Self> {
        let coeffs = coeffs.into();
        check_finite(&coeffs, "V")?;
        let poly = Polynomial::new(coeffs);
        confinement_defect(&poly).map_or(Ok(ConfiningPotential { poly }), |why| {
            Err(Error::InvalidPotential(why))
        })
    }

    /// The double well `q^4/4 - q^2/2`.
    pub fn double_well() -> Self {
        ConfiningPotential {
            poly: Polynomial::new(vec![0.0, 0.0, -0.5, 0.0, 0.25]),
        }
    }

    /// The harmonic potential `q^2/2`.
    pub fn harmonic() -> Self {
        ConfiningPotential {
            poly: Polynomial::new(vec![0.0, 0.0, 0.5]),
        }
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.poly
    }

    pub fn coeffs(&self) -> &[f64] {
        self.poly.coeffs()
    }

    pub fn degree(&self) -> usize {
        self.poly.degree()
    }

    #[inline]
    pub fn eval(&self, q: f64) -> f64 {
        self.poly.eval(q)
    }

    /// `dV/dq`. Callers negate to obtain the force.
    #[inline]
    pub fn grad(&self, q: f64) -> f64 {
        let c = self.poly.coeffs();
        let mut acc = 0.0;
        for k in (1..c.len()).rev() {
            acc = acc * q + k as f64 * c[k];
        }
        acc
    }

    pub fn is_even(&self) -> bool {
        self.poly.coeffs().iter().skip(1).step_by(2).all(|&c| c == 0.0)
    }

    /// Real critical points of `V`.
    pub fn critical_points(&self) -> Vec<f64> {
        let d = self.poly.derivative();
        let r = d.root_bound();
        d.real_roots_in(-r, r)
    }
}

fn confinement_defect(poly: &Polynomial) -> Option<String> {
    if poly.degree() < 2 {
        Some(format!("degree {} < 2", poly.degree()))
    } else if !poly.degree().is_multiple_of(2) {
        Some(format!("odd degree {}", poly.degree()))
    } else if poly.leading() <= 0.0 {
        Some(format!("leading coefficient {} <= 0", poly.leading()))
    } else {
        None
    }
}

/// Interaction `F(q) = G(|q|)` given by the coefficients of `G`.
///
/// Any finite coefficients are accepted so that invalid kernels can be
/// reported by [`check_assumptions`]; operations that need `F` as a
/// polynomial in `q` reject odd coefficients with [`Error::OddInteraction`].
/// The empty coefficient list is the non-interacting case `F = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteractionPotential {
    g: Polynomial,
}

impl InteractionPotential {
    pub fn new(g_coeffs: impl Into<Vec<f64>>) -> Result<Self> {
        let g_coeffs = g_coeffs.into();
        check_finite(&g_coeffs, "G")?;
        Ok(InteractionPotential {
            g: Polynomial::new(g_coeffs),
        })
    }

    pub fn none() -> Self {
        InteractionPotential {
            g: Polynomial::zero(),
        }
    }

    /// `alpha x^2 / 2`.
    pub fn quadratic(alpha: f64) -> Self {
        InteractionPotential {
            g: Polynomial::new(vec![0.0, 0.0, 0.5 * alpha]),
        }
    }

    pub fn g(&self) -> &Polynomial {
        &self.g
    }

    pub fn coeffs(&self) -> &[f64] {
        self.g.coeffs()
    }

    pub fn is_zero(&self) -> bool {
        self.g.is_zero()
    }

    /// `2n = deg G`.
    pub fn degree(&self) -> usize {
        self.g.degree()
    }

    /// If `G(x) = alpha x^2 / 2` (possibly plus a constant), returns `alpha`.
    pub fn quadratic_strength(&self) -> Option<f64> {
        let c = self.g.coeffs();
        (c.len() == 3 && c[1] == 0.0 && c[2] > 0.0).then(|| 2.0 * c[2])
    }

    pub fn first_odd_index(&self) -> Option<usize> {
        self.g
            .coeffs()
            .iter()
            .enumerate()
            .find(|&(k, &c)| k % 2 == 1 && c != 0.0)
            .map(|(k, _)| k)
    }

    pub fn ensure_even(&self) -> Result<()> {
        match self.first_odd_index() {
            Some(index) => Err(Error::OddInteraction { index }),
            None => Ok(()),
        }
    }

    /// `F(x) = G(|x|)`.
    pub fn eval(&self, x: f64) -> f64 {
        self.g.eval(x.abs())
    }

    /// `F'(x)` for even `G`.
    pub fn grad(&self, x: f64) -> f64 {
        let c = self.g.coeffs();
        let mut acc = 0.0;
        for k in (1..c.len()).rev() {
            acc = acc * x + k as f64 * c[k];
        }
        acc
    }

    /// Coefficients of `(F * rho)(q)` in powers of `q`, from the raw moments
    /// `M_0..M_{2n}` of `rho` in `q`.
    pub fn convolve(&self, q_moments: &[f64]) -> Result<Polynomial> {
        convolve_interaction(self, q_moments)
    }
}

/// Binomial expansion of the mean-field energy:
/// `(F * rho)(q) = sum_k g_k sum_j C(k, j) q^j (-1)^(k-j) M_(k-j)`.
pub fn convolve_interaction(f: &InteractionPotential, q_moments: &[f64]) -> Result<Polynomial> {
    f.ensure_even()?;
    let g = f.g.coeffs();
    if g.is_empty() {
        return Ok(Polynomial::zero());
    }
    let required = g.len();
    if q_moments.len() < required {
        return Err(Error::InsufficientMoments {
            required,
            provided: q_moments.len(),
        });
    }
    let mut out = vec![0.0; g.len()];
    for (k, &gk) in g.iter().enumerate() {
        if gk == 0.0 {
            continue;
        }
        let mut binom = 1.0;
        for j in 0..=k {
            let sign = if (k - j) % 2 == 0 { 1.0 } else { -1.0 };
            out[j] += gk * binom * sign * q_moments[k - j];
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
    }
    Ok(Polynomial::new(out))
}

/// Identifiers of the structural assumptions on `(V, F, rho_0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum AssumptionId {
    M1,
    M2,
    M3,
    M4,
    M5,
    M6,
    M7,
}

impl AssumptionId {
    pub const ALL: [AssumptionId; 7] = [
        AssumptionId::M1,
        AssumptionId::M2,
        AssumptionId::M3,
        AssumptionId::M4,
        AssumptionId::M5,
        AssumptionId::M6,
        AssumptionId::M7,
    ];

    pub fn label(self) -> &'static str {
        match self {
            AssumptionId::M1 => "M-1",
            AssumptionId::M2 => "M-2",
            AssumptionId::M3 => "M-3",
            AssumptionId::M4 => "M-4",
            AssumptionId::M5 => "M-5",
            AssumptionId::M6 => "M-6",
            AssumptionId::M7 => "M-7",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            AssumptionId::M1 => "V is smooth",
            AssumptionId::M2 => "V is strictly convex outside a compact set with Hessian -> infinity; gradient grows polynomially",
            AssumptionId::M3 => "V(q) >= C4 |q|^4 - C2 |q|^2",
            AssumptionId::M4 => "F(q) = G(|q|) with G an even, positive polynomial of degree 2n >= 2",
            AssumptionId::M5 => "G is convex",
            AssumptionId::M6 => "finite 8r^2-th q-moment and second p-moment of rho_0",
            AssumptionId::M7 => "rho_0 has a density with finite entropy",
        }
    }
}

impl fmt::Display for AssumptionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Fails,
    NotCheckable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::NotCheckable => "not-checkable",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub id: AssumptionId,
    pub verdict: Verdict,
    pub witness: String,
}

/// Constants derived while checking the assumptions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedConstants {
    /// `K` with `|V'(x)| <= K max(1, |x|)^(2m)`.
    pub gradient_bound: f64,
    /// Growth exponent `m = (deg V - 1) / 2`.
    pub m: f64,
    /// `n = deg G / 2`.
    pub n: usize,
    /// `r = max(m, n)`.
    pub r: f64,
    /// Radius outside of which `V'' > 0`.
    pub convexity_radius: f64,
    pub c4: Option<f64>,
    pub c2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
    pub derived: DerivedConstants,
}

impl AssumptionReport {
    pub fn get(&self, id: AssumptionId) -> &AssumptionCheck {
        self.checks
            .iter()
            .find(|c| c.id == id)
            .expect("every assumption id is present")
    }

    pub fn verdict(&self, id: AssumptionId) -> Verdict {
        self.get(id).verdict
    }

    /// True when M-1 through M-5 (the conditions on the potentials) hold.
    pub fn potentials_admissible(&self) -> bool {
        AssumptionId::ALL[..5]
            .iter()
            .all(|&id| self.verdict(id) == Verdict::Holds)
    }
}

impl fmt::Display for AssumptionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{:<4} {:<13} {}", c.id.label(), c.verdict, c.witness)?;
        }
        let d = &self.derived;
        write!(
            f,
            "derived: K = {:.6e}, m = {}, n = {}, r = {}, convexity radius = {:.6}",
            d.gradient_bound, d.m, d.n, d.r, d.convexity_radius
        )?;
        if let (Some(c4), Some(c2)) = (d.c4, d.c2) {
            write!(f, ", C4 = {c4:.6e}, C2 = {c2:.6e}")?;
        }
        Ok(())
    }
}

/// Half-width of the interval on which convexity of `G` is sampled.
pub const CONVEXITY_RADIUS: f64 = 10.0;
/// Number of uniform samples used for the convexity and positivity checks.
pub const CONVEXITY_SAMPLES: usize = 1001;

/// Checks the assumptions for typed potentials.
pub fn check_assumptions(
    v: &ConfiningPotential,
    f: &InteractionPotential,
    rho0: Option<&PhaseDensity>,
) -> AssumptionReport {
    check_coefficients(v.coeffs(), f.coeffs(), rho0)
}

/// Checks the assumptions on raw coefficient arrays, so that potentials that
/// could not be constructed still receive a verdict.
pub fn check_coefficients(
    v_coeffs: &[f64],
    g_coeffs: &[f64],
    rho0: Option<&PhaseDensity>,
) -> AssumptionReport {
    let v = Polynomial::new(v_coeffs.to_vec());
    let g = Polynomial::new(g_coeffs.to_vec());
    let mut checks = Vec::with_capacity(7);

    let finite_v = v.coeffs().iter().all(|c| c.is_finite());
    checks.push(AssumptionCheck {
        id: AssumptionId::M1,
        verdict: if finite_v { Verdict::Holds } else { Verdict::Fails },
        witness: if finite_v {
            "polynomial potentials are smooth".into()
        } else {
            "non-finite coefficient".into()
        },
    });

    let dv = v.derivative();
    let d2v = dv.derivative();
    let gradient_bound: f64 = dv.coeffs().iter().map(|c| c.abs()).sum();
    let m = v.degree().saturating_sub(1) as f64 / 2.0;
    let convexity_radius = if d2v.degree() > 0 { d2v.root_bound() } else { 0.0 };
    let m2 = match confinement_defect(&v) {
        Some(why) => (Verdict::Fails, why),
        None if v.degree() < 4 => (
            Verdict::Fails,
            format!(
                "V'' is constant ({}), so it does not tend to infinity",
                d2v.eval(0.0)
            ),
        ),
        None => (
            Verdict::Holds,
            format!(
                "V'' > 0 for |q| > {convexity_radius:.6}; |V'(q)| <= {gradient_bound:.6e} max(1,|q|)^{}",
                v.degree() - 1
            ),
        ),
    };
    checks.push(AssumptionCheck {
        id: AssumptionId::M2,
        verdict: m2.0,
        witness: m2.1,
    });

    let (m3, c4, c2) = quartic_growth(&v);
    checks.push(AssumptionCheck {
        id: AssumptionId::M3,
        verdict: m3.0,
        witness: m3.1,
    });

    let n = g.degree() / 2;
    let m4 = if g.is_zero() {
        (Verdict::Fails, "F = 0 has no polynomial of degree >= 2".to_string())
    } else if let Some(k) = g
        .coeffs()
        .iter()
        .enumerate()
        .find(|&(k, &c)| k % 2 == 1 && c != 0.0)
        .map(|(k, _)| k)
    {
        (Verdict::Fails, format!("odd coefficient at index {k}"))
    } else if g.degree() < 2 {
        (Verdict::Fails, format!("degree {} < 2", g.degree()))
    } else if g.leading() <= 0.0 {
        (Verdict::Fails, format!("leading coefficient {} <= 0", g.leading()))
    } else if let Some(x) = sample_points().find(|&x| g.eval(x.abs()) < 0.0) {
        (Verdict::Fails, format!("G({x}) = {} < 0", g.eval(x.abs())))
    } else {
        (
            Verdict::Holds,
            format!("even of degree 2n = {}, G >= 0 on [-{CONVEXITY_RADIUS}, {CONVEXITY_RADIUS}]", g.degree()),
        )
    };
    checks.push(AssumptionCheck {
        id: AssumptionId::M4,
        verdict: m4.0,
        witness: m4.1,
    });

    let d2g = g.derivative().derivative();
    let m5 = match sample_points().find(|&x| d2g.eval(x) < 0.0) {
        Some(x) => (Verdict::Fails, format!("G''({x}) = {} < 0", d2g.eval(x))),
        None => (
            Verdict::Holds,
            format!("G'' >= 0 at {CONVEXITY_SAMPLES} points of [-{CONVEXITY_RADIUS}, {CONVEXITY_RADIUS}]"),
        ),
    };
    checks.push(AssumptionCheck {
        id: AssumptionId::M5,
        verdict: m5.0,
        witness: m5.1,
    });

    let r = m.max(n as f64);
    match rho0 {
        None => {
            for id in [AssumptionId::M6, AssumptionId::M7] {
                checks.push(AssumptionCheck {
                    id,
                    verdict: Verdict::NotCheckable,
                    witness: "no initial density supplied".into(),
                });
            }
        }
        Some(rho) => {
            let order = (8.0 * r * r).ceil() as u32;
            let q_abs = rho.abs_q_moment(order);
            let p2 = rho.p_moment(2);
            let ok = q_abs.is_finite() && p2.is_finite();
            checks.push(AssumptionCheck {
                id: AssumptionId::M6,
                verdict: if ok { Verdict::Holds } else { Verdict::Fails },
                witness: format!("E|q|^{order} = {q_abs:.6e}, E p^2 = {p2:.6e}"),
            });
            let s = rho.entropy();
            checks.push(AssumptionCheck {
                id: AssumptionId::M7,
                verdict: if s.is_finite() { Verdict::Holds } else { Verdict::Fails },
                witness: format!("S(rho_0) = {s:.6e}"),
            });
        }
    }

    AssumptionReport {
        checks,
        derived: DerivedConstants {
            gradient_bound,
            m,
            n,
            r,
            convexity_radius,
            c4,
            c2,
        },
    }
}

fn sample_points() -> impl Iterator<Item = f64> {
    let h = 2.0 * CONVEXITY_RADIUS / (CONVEXITY_SAMPLES - 1) as f64;
    (0..CONVEXITY_SAMPLES).map(move |k| -CONVEXITY_RADIUS + k as f64 * h)
}

/// Finds `C4, C2 > 0` with `V(q) >= C4 q^4 - C2 q^2`.
///
/// Such constants exist iff `deg V >= 4`, the leading coefficient is positive
/// and `V` does not go negative at the origin faster than `q^2`, i.e.
/// `c_0 > 0` or `c_0 = c_1 = 0`.
fn quartic_growth(v: &Polynomial) -> ((Verdict, String), Option<f64>, Option<f64>) {
    let c = v.coeffs();
    let at = |k: usize| c.get(k).copied().unwrap_or(0.0);
    if v.degree() < 4 {
        return (
            (Verdict::Fails, format!("degree {} < 4: no quartic growth", v.degree())),
            None,
            None,
        );
    }
    if !v.degree().is_multiple_of(2) || v.leading() <= 0.0 {
        return ((Verdict::Fails, "V is not confining".into()), None, None);
    }
    if at(0) < 0.0 || (at(0) == 0.0 && at(1) != 0.0) {
        return (
            (
                Verdict::Fails,
                format!("V(q) < 0 = C4 q^4 - C2 q^2 near q = 0 (c0 = {}, c1 = {})", at(0), at(1)),
            ),
            None,
            None,
        );
    }
    let c4 = if v.degree() == 4 { 0.5 * v.leading() } else { 1.0 };
    // C2 >= sup_{q != 0} (C4 q^4 - V(q)) / q^2; beyond the root bound of
    // V - C4 q^4 the supremand is negative.
    let mut rest = c.to_vec();
    rest[4] -= c4;
    let radius = Polynomial::new(rest).root_bound();
    let samples = 20_000;
    let mut sup = f64::NEG_INFINITY;
    for k in 1..=samples {
        let x = radius * k as f64 / samples as f64;
        for q in [x, -x] {
            sup = sup.max((c4 * q.powi(4) - v.eval(q)) / (q * q));
        }
    }
    let c2 = 1.01 * sup.max(0.0) + 1e-6;
    (
        (Verdict::Holds, format!("C4 = {c4:.6e}, C2 = {c2:.6e}")),
        Some(c4),
        Some(c2),
    )
}
