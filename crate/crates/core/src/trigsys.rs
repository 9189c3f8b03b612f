//! Real trigonometric polynomial systems in two variables.
//!
//! A [`TrigPoly`] is a finite exponential sum `Σ c·e^{2πi⟨ω,x⟩}` whose term
//! list is closed under `(c, ω) ↦ (conj c, −ω)`, so it takes real values on
//! `ℝ²`. A [`TrigSystem`] pairs two of them; its joint zero set is the point
//! set studied everywhere else in this crate.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FqError, Result};

pub type Vec2 = [f64; 2];

/// Relative tolerance on the imaginary part of an evaluation.
pub const REAL_TOL: f64 = 1e-10;

/// Frequencies closer than this are merged into one term.
const FREQ_MERGE_TOL: f64 = 1e-12;

/// Absolute tolerance for lift-lattice membership of frequencies.
const LIFT_TOL: f64 = 1e-9;

/// `e^{2πi t}` with the argument reduced to `[-1/2, 1/2]` turns first.
#[inline]
pub fn cis_turns(t: f64) -> Complex64 {
    let f = t - t.round();
    // quarter turns are exact so integer lattice points give exact zeros
    let q = 4.0 * f;
    if q == q.round() {
        return match q as i32 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            -1 => Complex64::new(0.0, -1.0),
            _ => Complex64::new(-1.0, 0.0),
        };
    }
    let (s, c) = (2.0 * PI * f).sin_cos();
    Complex64::new(c, s)
}

#[inline]
pub(crate) fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub(crate) fn norm(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigTerm {
    pub coefficient: Complex64,
    /// Cycles per unit length.
    pub frequency: Vec2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrigPoly {
    terms: Vec<TrigTerm>,
}

impl TrigPoly {
    /// Builds a polynomial, merging coincident frequencies and dropping
    /// vanishing coefficients. Fails if nothing survives or the term list is
    /// not conjugate-closed.
    pub fn new(terms: Vec<TrigTerm>) -> Result<Self> {
        for t in &terms {
            if !(t.coefficient.re.is_finite()
                && t.coefficient.im.is_finite()
                && t.frequency[0].is_finite()
                && t.frequency[1].is_finite())
            {
                return Err(FqError::MalformedSystem("non-finite term".into()));
            }
        }
        let poly = Self::merged(terms);
        if poly.terms.is_empty() {
            return Err(FqError::MalformedSystem(
                "polynomial has no nonzero term".into(),
            ));
        }
        if !poly.is_hermitian() {
            return Err(FqError::MalformedSystem(
                "term list is not closed under conjugate-frequency pairing".into(),
            ));
        }
        Ok(poly)
    }

    fn merged(mut terms: Vec<TrigTerm>) -> Self {
        terms.sort_by(|a, b| {
            a.frequency[0]
                .total_cmp(&b.frequency[0])
                .then(a.frequency[1].total_cmp(&b.frequency[1]))
        });
        let mut out: Vec<TrigTerm> = Vec::with_capacity(terms.len());
        for t in terms {
            if let Some(prev) = out.iter_mut().rev().take(8).find(|p| {
                (p.frequency[0] - t.frequency[0]).abs() <= FREQ_MERGE_TOL
                    && (p.frequency[1] - t.frequency[1]).abs() <= FREQ_MERGE_TOL
            }) {
                prev.coefficient += t.coefficient;
            } else {
                out.push(t);
            }
        }
        let scale = out.iter().map(|t| t.coefficient.norm()).fold(0.0, f64::max);
        out.retain(|t| t.coefficient.norm() > 1e-14 * scale);
        Self { terms: out }
    }

    /// `sin(π(⟨w,x⟩ − shift))`.
    pub fn sin_affine(w: Vec2, shift: f64) -> Self {
        let half = [w[0] / 2.0, w[1] / 2.0];
        let phase = cis_turns(-shift / 2.0);
        // sin θ = (e^{iθ} − e^{−iθ}) / 2i
        let c = Complex64::new(0.0, -0.5) * phase;
        Self::merged(vec![
            TrigTerm { coefficient: c, frequency: half },
            TrigTerm { coefficient: c.conj(), frequency: [-half[0], -half[1]] },
        ])
    }

    /// `cos(π(⟨w,x⟩ − shift))`.
    pub fn cos_affine(w: Vec2, shift: f64) -> Self {
        let half = [w[0] / 2.0, w[1] / 2.0];
        let c = Complex64::new(0.5, 0.0) * cis_turns(-shift / 2.0);
        Self::merged(vec![
            TrigTerm { coefficient: c, frequency: half },
            TrigTerm { coefficient: c.conj(), frequency: [-half[0], -half[1]] },
        ])
    }

    pub fn sin(w: Vec2) -> Self {
        Self::sin_affine(w, 0.0)
    }

    pub fn cos(w: Vec2) -> Self {
        Self::cos_affine(w, 0.0)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::merged(
            self.terms
                .iter()
                .map(|t| TrigTerm { coefficient: t.coefficient * k, frequency: t.frequency })
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::merged(self.terms.iter().chain(&other.terms).copied().collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                out.push(TrigTerm {
                    coefficient: a.coefficient * b.coefficient,
                    frequency: [a.frequency[0] + b.frequency[0], a.frequency[1] + b.frequency[1]],
                });
            }
        }
        Self::merged(out)
    }

    pub fn terms(&self) -> &[TrigTerm] {
        &self.terms
    }

    /// `Σ |c|`, the scale used by the real-valuedness check.
    pub fn magnitude_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.coefficient.norm()).sum()
    }

    /// Upper bound on `‖∇f‖₂` over `ℝ²`.
    pub fn gradient_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coefficient.norm() * 2.0 * PI * norm(t.frequency))
            .sum()
    }

    /// Upper bound on the operator norm of the Hessian over `ℝ²`.
    pub fn hessian_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coefficient.norm() * (2.0 * PI * norm(t.frequency)).powi(2))
            .sum()
    }

    /// Conjugate-frequency pairing, up to the merge tolerance on frequencies
    /// and summation-order roundoff on coefficients.
    pub fn is_hermitian(&self) -> bool {
        let scale = self.magnitude_sum();
        self.terms.iter().all(|t| {
            self.terms.iter().any(|u| {
                (u.frequency[0] + t.frequency[0]).abs() <= FREQ_MERGE_TOL
                    && (u.frequency[1] + t.frequency[1]).abs() <= FREQ_MERGE_TOL
                    && (u.coefficient - t.coefficient.conj()).norm() <= 1e-14 * scale
            })
        })
    }

    /// True if every frequency has a zero component on `axis`' complement,
    /// i.e. the polynomial depends on coordinate `axis` only.
    pub fn depends_only_on(&self, axis: usize) -> bool {
        let other = 1 - axis;
        self.terms.iter().all(|t| t.frequency[other] == 0.0)
    }

    pub fn eval_complex(&self, x: Vec2) -> Complex64 {
        self.terms
            .iter()
            .map(|t| t.coefficient * cis_turns(dot(t.frequency, x)))
            .sum()
    }

    /// Real value after the real-valuedness check.
    pub fn eval(&self, x: Vec2) -> Result<f64> {
        let v = self.eval_complex(x);
        self.check_real(v, x)?;
        Ok(v.re)
    }

    fn check_real(&self, v: Complex64, x: Vec2) -> Result<()> {
        if v.im.abs() > REAL_TOL * self.magnitude_sum() {
            return Err(FqError::MalformedSystem(format!(
                "imaginary residue {:e} at ({}, {})",
                v.im, x[0], x[1]
            )));
        }
        Ok(())
    }

    /// Value and gradient (real parts), without the realness check.
    #[inline]
    pub fn value_and_gradient(&self, x: Vec2) -> (f64, Vec2) {
        let mut v = 0.0;
        let mut g = [0.0; 2];
        for t in &self.terms {
            let z = t.coefficient * cis_turns(dot(t.frequency, x));
            v += z.re;
            // d/dx_k Re(z) = Re(2πiω_k z) = −2πω_k Im(z)
            g[0] -= 2.0 * PI * t.frequency[0] * z.im;
            g[1] -= 2.0 * PI * t.frequency[1] * z.im;
        }
        (v, g)
    }

    /// Value along one axis for a polynomial that depends only on that axis.
    #[inline]
    pub(crate) fn value_and_derivative_1d(&self, axis: usize, u: f64) -> (f64, f64) {
        let mut v = 0.0;
        let mut d = 0.0;
        for t in &self.terms {
            let z = t.coefficient * cis_turns(t.frequency[axis] * u);
            v += z.re;
            d -= 2.0 * PI * t.frequency[axis] * z.im;
        }
        (v, d)
    }
}

/// Which structural family a system belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormTag {
    Lifted,
    Product,
    Lattice,
}

impl FormTag {
    pub fn as_str(self) -> &'static str {
        match self {
            FormTag::Lifted => "lifted",
            FormTag::Product => "product",
            FormTag::Lattice => "lattice",
        }
    }
}

/// Polynomial in the torus coordinates `z = exp(2πiLx)`, stored as
/// `(coefficient, exponent vector)` monomials.
#[derive(Debug, Clone, PartialEq)]
pub struct VarietyPoly {
    pub monomials: Vec<(Complex64, Vec<u32>)>,
}

impl VarietyPoly {
    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        self.monomials
            .iter()
            .map(|(c, e)| {
                e.iter()
                    .zip(z)
                    .fold(*c, |acc, (&k, &zj)| acc * zj.powu(k))
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrigSystem {
    equations: [TrigPoly; 2],
    form: FormTag,
    lift: Option<Vec<Vec2>>,
    variety: Option<[VarietyPoly; 2]>,
}

impl TrigSystem {
    pub fn new(
        equations: [TrigPoly; 2],
        form: FormTag,
        lift: Option<Vec<Vec2>>,
        variety: Option<[VarietyPoly; 2]>,
    ) -> Result<Self> {
        let sys = Self { equations, form, lift, variety };
        sys.validate()?;
        Ok(sys)
    }

    fn validate(&self) -> Result<()> {
        for eq in &self.equations {
            if eq.terms.is_empty() || !eq.is_hermitian() {
                return Err(FqError::MalformedSystem("equation is not real-valued".into()));
            }
        }
        if let Some(rows) = &self.lift {
            if rows.iter().flatten().any(|v| !v.is_finite()) {
                return Err(FqError::MalformedSystem("non-finite lift entry".into()));
            }
        }
        match self.form {
            FormTag::Lifted => {
                let rows = self.lift.as_ref().ok_or_else(|| {
                    FqError::MalformedSystem("lifted system needs a lift matrix".into())
                })?;
                if !(3..=4).contains(&rows.len()) {
                    return Err(FqError::MalformedSystem(format!(
                        "lift matrix must have 3 or 4 rows, got {}",
                        rows.len()
                    )));
                }
                check_angular_order(rows)?;
                for (i, eq) in self.equations.iter().enumerate() {
                    let reference = eq.terms[0].frequency;
                    for t in &eq.terms {
                        let doubled = [2.0 * t.frequency[0], 2.0 * t.frequency[1]];
                        let diff = [
                            t.frequency[0] - reference[0],
                            t.frequency[1] - reference[1],
                        ];
                        if lattice_preimage(rows, doubled, 4).is_none()
                            || lattice_preimage(rows, diff, 4).is_none()
                        {
                            return Err(FqError::MalformedSystem(format!(
                                "equation {} frequency ({}, {}) is off the lift lattice",
                                i + 1,
                                t.frequency[0],
                                t.frequency[1]
                            )));
                        }
                    }
                }
            }
            FormTag::Product | FormTag::Lattice => {
                if !self.equations[0].depends_only_on(0) || !self.equations[1].depends_only_on(1) {
                    return Err(FqError::MalformedSystem(
                        "separable system needs equation 1 in x only and equation 2 in y only"
                            .into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn equations(&self) -> &[TrigPoly; 2] {
        &self.equations
    }

    pub fn form(&self) -> FormTag {
        self.form
    }

    pub fn lift(&self) -> Option<&[Vec2]> {
        self.lift.as_deref()
    }

    pub fn variety(&self) -> Option<&[VarietyPoly; 2]> {
        self.variety.as_ref()
    }

    /// Product and lattice systems split into one equation per axis.
    pub fn is_separable(&self) -> bool {
        matches!(self.form, FormTag::Product | FormTag::Lattice)
    }

    pub fn eval_system(&self, x: Vec2) -> Result<Vec2> {
        Ok([self.equations[0].eval(x)?, self.equations[1].eval(x)?])
    }

    /// Jacobian `[[∂f/∂x, ∂f/∂y], [∂g/∂x, ∂g/∂y]]`.
    pub fn gradient(&self, x: Vec2) -> Result<[Vec2; 2]> {
        let mut out = [[0.0; 2]; 2];
        for (row, eq) in out.iter_mut().zip(&self.equations) {
            let mut g = [Complex64::new(0.0, 0.0); 2];
            let mut v = Complex64::new(0.0, 0.0);
            for t in &eq.terms {
                let z = t.coefficient * cis_turns(dot(t.frequency, x));
                v += z;
                let iz = Complex64::new(0.0, 2.0 * PI) * z;
                g[0] += iz * t.frequency[0];
                g[1] += iz * t.frequency[1];
            }
            eq.check_real(v, x)?;
            *row = [g[0].re, g[1].re];
        }
        Ok(out)
    }

    /// `exp(2πiLx)`, one unit complex number per lift row.
    pub fn lift_point(&self, x: Vec2) -> Result<Vec<Complex64>> {
        if self.form != FormTag::Lifted {
            return Err(FqError::WrongForm { expected: "lifted" });
        }
        let rows = self.lift.as_ref().expect("validated");
        Ok(rows.iter().map(|r| cis_turns(dot(*r, x))).collect())
    }

    /// Values of the lifted variety equations at `exp(2πiLx)`.
    pub fn variety_residuals(&self, x: Vec2) -> Option<[Complex64; 2]> {
        let rows = self.lift.as_ref()?;
        let v = self.variety.as_ref()?;
        let z: Vec<Complex64> = rows.iter().map(|r| cis_turns(dot(*r, x))).collect();
        Some([v[0].eval(&z), v[1].eval(&z)])
    }
}

/// Rows must turn counter-clockwise and span less than a half-turn.
fn check_angular_order(rows: &[Vec2]) -> Result<()> {
    let cross = |a: Vec2, b: Vec2| a[0] * b[1] - a[1] * b[0];
    let ordered = rows.windows(2).all(|w| cross(w[0], w[1]) > 0.0)
        && cross(rows[0], rows[rows.len() - 1]) > 0.0;
    if ordered {
        Ok(())
    } else {
        Err(FqError::MalformedSystem(
            "lift rows must be in counter-clockwise order within an open half-plane".into(),
        ))
    }
}

/// Small integer `k` with `Lᵗk = target`, if one exists with `|k|∞ ≤ bound`.
pub fn lattice_preimage(rows: &[Vec2], target: Vec2, bound: i32) -> Option<Vec<i32>> {
    let n = rows.len();
    let mut k = vec![-bound; n];
    loop {
        let mut s = [0.0; 2];
        for (kj, r) in k.iter().zip(rows) {
            s[0] += *kj as f64 * r[0];
            s[1] += *kj as f64 * r[1];
        }
        if (s[0] - target[0]).abs() <= LIFT_TOL && (s[1] - target[1]).abs() <= LIFT_TOL {
            return Some(k);
        }
        let mut j = 0;
        loop {
            if j == n {
                return None;
            }
            k[j] += 1;
            if k[j] > bound {
                k[j] = -bound;
                j += 1;
            } else {
                break;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Serialization

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermRecord {
    pub re: f64,
    pub im: f64,
    pub w1: f64,
    pub w2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemDocument {
    pub form: FormTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lift: Option<Vec<Vec2>>,
    pub equations: Vec<Vec<TermRecord>>,
}

impl TrigSystem {
    pub fn to_document(&self) -> SystemDocument {
        SystemDocument {
            form: self.form,
            lift: self.lift.clone(),
            equations: self
                .equations
                .iter()
                .map(|eq| {
                    eq.terms
                        .iter()
                        .map(|t| TermRecord {
                            re: t.coefficient.re,
                            im: t.coefficient.im,
                            w1: t.frequency[0],
                            w2: t.frequency[1],
                        })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("plain data serializes")
    }

    pub fn from_document(doc: SystemDocument) -> Result<Self> {
        if doc.equations.len() != 2 {
            return Err(FqError::MalformedSystem(format!(
                "expected 2 equations, got {}",
                doc.equations.len()
            )));
        }
        let mut eqs = Vec::with_capacity(2);
        for recs in doc.equations {
            let terms = recs
                .into_iter()
                .map(|r| TrigTerm {
                    coefficient: Complex64::new(r.re, r.im),
                    frequency: [r.w1, r.w2],
                })
                .collect();
            eqs.push(TrigPoly::new(terms)?);
        }
        let g = eqs.pop().expect("two");
        let f = eqs.pop().expect("two");
        Self::new([f, g], doc.form, doc.lift, None)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SystemDocument = serde_json::from_str(text)?;
        Self::from_document(doc)
    }
}

// ---------------------------------------------------------------------------
// Catalog

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub system: TrigSystem,
    /// Points per unit area, when known in closed form.
    pub known_density: Option<f64>,
    /// Spectrum growth rank `N`.
    pub known_spectrum_rank: Option<u32>,
}

pub const CATALOG_NAMES: [&str; 6] = [
    "fq-main",
    "fq-akkv",
    "fq-product",
    "fq-nonproduct",
    "lattice",
    "shifted-lattice",
];

/// Shift used by `shifted-lattice` when no argument is given.
pub fn default_shift() -> Vec2 {
    [2f64.sqrt() - 1.0, (5f64.sqrt() - 1.0) / 2.0]
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn mono(coef: Complex64, exps: &[u32]) -> (Complex64, Vec<u32>) {
    (coef, exps.to_vec())
}

/// The two variety equations shared by `fq-main` and `fq-akkv`:
/// `(1−2i) − z₁ − z₂ + (1+2i)z₁z₂` and `1 − (1+i)z₁ − (1−i)z₃ + z₁z₃`.
fn three_row_variety() -> [VarietyPoly; 2] {
    [
        VarietyPoly {
            monomials: vec![
                mono(c(1.0, -2.0), &[0, 0, 0]),
                mono(c(-1.0, 0.0), &[1, 0, 0]),
                mono(c(-1.0, 0.0), &[0, 1, 0]),
                mono(c(1.0, 2.0), &[1, 1, 0]),
            ],
        },
        VarietyPoly {
            monomials: vec![
                mono(c(1.0, 0.0), &[0, 0, 0]),
                mono(c(-1.0, -1.0), &[1, 0, 0]),
                mono(c(-1.0, 1.0), &[0, 0, 1]),
                mono(c(1.0, 0.0), &[1, 0, 1]),
            ],
        },
    ]
}

/// `f = sin a cos b + sin b (sin a + cos a)`,
/// `g = sin a cos c − sin c (2 sin a + cos a)` with `a = π⟨r₁,x⟩` etc.
fn three_row_equations(r1: Vec2, r2: Vec2, r3: Vec2) -> [TrigPoly; 2] {
    let (sa, ca) = (TrigPoly::sin(r1), TrigPoly::cos(r1));
    let (sb, cb) = (TrigPoly::sin(r2), TrigPoly::cos(r2));
    let (sc, cc) = (TrigPoly::sin(r3), TrigPoly::cos(r3));
    let f = sa.mul(&cb).add(&sb.mul(&sa.add(&ca)));
    let g = sa.mul(&cc).sub(&sc.mul(&sa.scale(2.0).add(&ca)));
    [f, g]
}

fn fq_main() -> CatalogEntry {
    let (s2, s3) = (2f64.sqrt(), 3f64.sqrt());
    let rows = vec![[1.0, 0.0], [0.0, 1.0], [-s2, s3]];
    let eqs = three_row_equations(rows[0], rows[1], rows[2]);
    CatalogEntry {
        name: "fq-main".into(),
        system: TrigSystem::new(eqs, FormTag::Lifted, Some(rows), Some(three_row_variety()))
            .expect("catalog system is valid"),
        known_density: None,
        known_spectrum_rank: Some(3),
    }
}

fn fq_akkv() -> CatalogEntry {
    let rows = vec![
        [-PI / 34.0, -(11f64.sqrt()) * PI / 56.0],
        [3.0 * 7f64.sqrt() / 65.0, -3.0 / 10.0],
        [5f64.sqrt() / 9.0, 3f64.sqrt() / 25.0],
    ];
    let eqs = three_row_equations(rows[0], rows[1], rows[2]);
    CatalogEntry {
        name: "fq-akkv".into(),
        system: TrigSystem::new(eqs, FormTag::Lifted, Some(rows), Some(three_row_variety()))
            .expect("catalog system is valid"),
        known_density: None,
        known_spectrum_rank: Some(3),
    }
}

fn fq_product() -> CatalogEntry {
    let (s2, s3, s5) = (2f64.sqrt(), 3f64.sqrt(), 5f64.sqrt());
    let a = (1.0 - s2) / 2.0;
    let b = (1.0 + s2) / 2.0;
    let f = TrigPoly::sin([a, 0.0]).sub(&TrigPoly::sin([b, 0.0]).scale(4.0));
    let g = TrigPoly::cos([0.0, s5])
        .mul(&TrigPoly::sin([0.0, s3 / 2.0]))
        .scale(2.0)
        .add(&TrigPoly::cos([0.0, s3 / 2.0]).mul(&TrigPoly::sin([0.0, s5])));
    // f = e^{-iπ(α+β)x} P_f(e^{2πiαx}, e^{2πiβx}) / 2i with (α, β) = (1/2, √2/2),
    // and likewise for g with (α, β) = (√3/2, √5).
    let rows = vec![[0.5, 0.0], [s2 / 2.0, 0.0], [0.0, s3 / 2.0], [0.0, s5]];
    let variety = [
        VarietyPoly {
            monomials: vec![
                mono(c(4.0, 0.0), &[0, 0, 0, 0]),
                mono(c(1.0, 0.0), &[1, 0, 0, 0]),
                mono(c(-1.0, 0.0), &[0, 1, 0, 0]),
                mono(c(-4.0, 0.0), &[1, 1, 0, 0]),
            ],
        },
        VarietyPoly {
            monomials: vec![
                mono(c(-3.0, 0.0), &[0, 0, 0, 0]),
                mono(c(1.0, 0.0), &[0, 0, 1, 0]),
                mono(c(-1.0, 0.0), &[0, 0, 0, 1]),
                mono(c(3.0, 0.0), &[0, 0, 1, 1]),
            ],
        },
    ];
    CatalogEntry {
        name: "fq-product".into(),
        system: TrigSystem::new([f, g], FormTag::Product, Some(rows), Some(variety))
            .expect("catalog system is valid"),
        // Each factor has the zero density of its dominant sine term.
        known_density: Some(b * (s5 + s3 / 2.0)),
        known_spectrum_rank: Some(4),
    }
}

fn fq_nonproduct() -> CatalogEntry {
    let (s2, s3, s5, s7) = (2f64.sqrt(), 3f64.sqrt(), 5f64.sqrt(), 7f64.sqrt());
    let rows = vec![[1.0, 0.0], [0.0, 1.0], [-s2, s3], [-s5, s7]];
    // Equations are e^{-iπ(θ_i+θ_j)} p(z_i, z_j) / (−2i) for
    // p = −3 − z_i + z_j + 3 z_i z_j, θ = Lx.
    let pair = |u: Vec2, v: Vec2| {
        TrigPoly::sin([u[0] - v[0], u[1] - v[1]])
            .sub(&TrigPoly::sin([u[0] + v[0], u[1] + v[1]]).scale(3.0))
    };
    let f = pair(rows[0], rows[1]);
    let g = pair(rows[2], rows[3]);
    let variety = [
        VarietyPoly {
            monomials: vec![
                mono(c(-3.0, 0.0), &[0, 0, 0, 0]),
                mono(c(-1.0, 0.0), &[1, 0, 0, 0]),
                mono(c(1.0, 0.0), &[0, 1, 0, 0]),
                mono(c(3.0, 0.0), &[1, 1, 0, 0]),
            ],
        },
        VarietyPoly {
            monomials: vec![
                mono(c(-3.0, 0.0), &[0, 0, 0, 0]),
                mono(c(-1.0, 0.0), &[0, 0, 1, 0]),
                mono(c(1.0, 0.0), &[0, 0, 0, 1]),
                mono(c(3.0, 0.0), &[0, 0, 1, 1]),
            ],
        },
    ];
    CatalogEntry {
        name: "fq-nonproduct".into(),
        system: TrigSystem::new([f, g], FormTag::Lifted, Some(rows), Some(variety))
            .expect("catalog system is valid"),
        known_density: None,
        known_spectrum_rank: Some(4),
    }
}

fn shifted_lattice(name: String, alpha: Vec2) -> CatalogEntry {
    let f = TrigPoly::sin_affine([1.0, 0.0], alpha[0]);
    let g = TrigPoly::sin_affine([0.0, 1.0], alpha[1]);
    CatalogEntry {
        name,
        system: TrigSystem::new([f, g], FormTag::Lattice, None, None)
            .expect("catalog system is valid"),
        known_density: Some(1.0),
        known_spectrum_rank: Some(2),
    }
}

/// Parses `shifted-lattice(a1,a2)` or `shifted-lattice(a)` (same shift on
/// both axes).
fn parse_shift(arg: &str) -> Option<Vec2> {
    let inner = arg.strip_prefix('(')?.strip_suffix(')')?;
    let parts: Vec<f64> = inner
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .ok()?;
    match parts.as_slice() {
        [a] if a.is_finite() => Some([*a, *a]),
        [a, b] if a.is_finite() && b.is_finite() => Some([*a, *b]),
        _ => None,
    }
}

/// Looks up a named construction.
pub fn catalog_entry(name: &str) -> Result<CatalogEntry> {
    let name = name.trim();
    match name {
        "fq-main" => Ok(fq_main()),
        "fq-akkv" => Ok(fq_akkv()),
        "fq-product" => Ok(fq_product()),
        "fq-nonproduct" => Ok(fq_nonproduct()),
        "lattice" => Ok(shifted_lattice("lattice".into(), [0.0, 0.0])),
        "shifted-lattice" => Ok(shifted_lattice(name.into(), default_shift())),
        _ => {
            if let Some(rest) = name.strip_prefix("shifted-lattice") {
                if let Some(alpha) = parse_shift(rest) {
                    return Ok(shifted_lattice(name.into(), alpha));
                }
            }
            Err(FqError::UnknownSystem {
                name: name.into(),
                valid: format!("{}, shifted-lattice(a1,a2)", CATALOG_NAMES.join(", ")),
            })
        }
    }
}

pub fn builtin(name: &str) -> Result<TrigSystem> {
    catalog_entry(name).map(|e| e.system)
}

/// Every named construction, with `shifted-lattice` at its default shift.
pub fn catalog() -> Vec<CatalogEntry> {
    CATALOG_NAMES
        .iter()
        .map(|n| catalog_entry(n).expect("catalog names resolve"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        let mut flo = f(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fm = f(mid);
            if (fm < 0.0) == (flo < 0.0) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn lattice_residuals_vanish_on_integers() {
        let sys = builtin("lattice").unwrap();
        assert_eq!(sys.eval_system([1.0, 1.0]).unwrap(), [0.0, 0.0]);
        let v = sys.eval_system([0.5, 0.0]).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15 && v[1] == 0.0);
    }

    #[test]
    fn origin_lies_on_main_system() {
        let sys = builtin("fq-main").unwrap();
        let v = sys.eval_system([0.0, 0.0]).unwrap();
        assert!(v[0].abs() < 1e-15 && v[1].abs() < 1e-15, "{v:?}");
    }

    #[test]
    fn main_system_matches_product_form() {
        let sys = builtin("fq-main").unwrap();
        let (s2, s3) = (2f64.sqrt(), 3f64.sqrt());
        for &(x, y) in &[(0.3, -1.7), (12.25, 3.5), (-40.1, 17.9)] {
            let (a, b, cc) = (PI * x, PI * y, PI * (-s2 * x + s3 * y));
            let f = a.sin() * b.cos() + b.sin() * (a.sin() + a.cos());
            let g = a.sin() * cc.cos() - cc.sin() * (2.0 * a.sin() + a.cos());
            let v = sys.eval_system([x, y]).unwrap();
            assert!((v[0] - f).abs() < 1e-12 && (v[1] - g).abs() < 1e-12);
        }
    }

    #[test]
    fn akkv_system_matches_product_form() {
        let sys = builtin("fq-akkv").unwrap();
        let (s3, s5, s7, s11) = (3f64.sqrt(), 5f64.sqrt(), 7f64.sqrt(), 11f64.sqrt());
        for &(x, y) in &[(0.3, -1.7), (12.25, 3.5), (-40.1, 17.9)] {
            let a = PI * PI * (-x / 34.0 - s11 * y / 56.0);
            let b = 3.0 * PI * (s7 / 65.0 * x - y / 10.0);
            let cc = 2.0 * PI * (s5 / 18.0 * x + s3 / 50.0 * y);
            let p = a.sin() * b.cos() + b.sin() * (a.sin() + a.cos());
            let q = a.sin() * cc.cos() - cc.sin() * (2.0 * a.sin() + a.cos());
            let v = sys.eval_system([x, y]).unwrap();
            assert!((v[0] - p).abs() < 1e-12 && (v[1] - q).abs() < 1e-12);
        }
    }

    #[test]
    fn product_first_equation_vanishes_at_zero() {
        let sys = builtin("fq-product").unwrap();
        assert!(sys.eval_system([0.0, 0.7]).unwrap()[0].abs() < 1e-15);
        assert!(sys.equations()[0].depends_only_on(0));
        assert!(sys.equations()[1].depends_only_on(1));
    }

    #[test]
    fn product_first_positive_root() {
        let sys = builtin("fq-product").unwrap();
        let (s2,) = (2f64.sqrt(),);
        // independent closed form, not the term list
        let f = |x: f64| (PI * (1.0 - s2) / 2.0 * x).sin() - 4.0 * (PI * (1.0 + s2) / 2.0 * x).sin();
        // first sign change on (0, 3) located by scanning
        let mut lo = 1e-3;
        while f(lo).signum() == f(lo + 1e-3).signum() {
            lo += 1e-3;
        }
        let x0 = bisect(f, lo, lo + 1e-3);
        assert!(x0 > 0.0 && x0 < 3.0);
        let v = sys.eval_system([x0, 0.0]).unwrap();
        assert!(v[0].abs() <= 1e-10, "{v:?}");
        assert!(v[1].abs() <= 1e-15);
    }

    #[test]
    fn lattice_gradient_at_origin() {
        let j = builtin("lattice").unwrap().gradient([0.0, 0.0]).unwrap();
        assert!((j[0][0] - PI).abs() < 1e-14 && (j[1][1] - PI).abs() < 1e-14);
        assert_eq!(j[0][1], 0.0);
        assert_eq!(j[1][0], 0.0);
    }

    #[test]
    fn lift_point_at_origin_is_one() {
        let z = builtin("fq-akkv").unwrap().lift_point([0.0, 0.0]).unwrap();
        assert_eq!(z.len(), 3);
        for zj in z {
            assert_eq!(zj, Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn lift_point_rejects_separable_systems() {
        let err = builtin("lattice").unwrap().lift_point([0.0, 0.0]).unwrap_err();
        assert!(matches!(err, FqError::WrongForm { .. }));
    }

    #[test]
    fn unknown_name_lists_valid_names() {
        let err = builtin("penrose").unwrap_err().to_string();
        assert!(err.contains("fq-main") && err.contains("shifted-lattice"));
    }

    #[test]
    fn shifted_lattice_argument_parsing() {
        let sys = builtin("shifted-lattice(0.25, 0.5)").unwrap();
        let v = sys.eval_system([1.25, -2.5]).unwrap();
        assert!(v[0].abs() < 1e-15 && v[1].abs() < 1e-15);
        assert!(builtin("shifted-lattice(0.25,x)").is_err());
    }

    #[test]
    fn catalog_polys_are_hermitian() {
        for e in catalog() {
            for eq in e.system.equations() {
                assert!(eq.is_hermitian(), "{}", e.name);
            }
        }
    }

    #[test]
    fn non_hermitian_terms_rejected() {
        let t = TrigTerm { coefficient: c(1.0, 0.0), frequency: [0.5, 0.0] };
        assert!(TrigPoly::new(vec![t]).is_err());
        assert!(TrigPoly::new(vec![]).is_err());
    }

    #[test]
    fn lifted_frequencies_must_sit_on_lift_lattice() {
        let eqs = [TrigPoly::sin([1.0, 0.0]), TrigPoly::sin([0.3, 0.7])];
        let rows = vec![[1.0, 0.0], [0.0, 1.0], [-2f64.sqrt(), 3f64.sqrt()]];
        assert!(TrigSystem::new(eqs, FormTag::Lifted, Some(rows), None).is_err());
    }

    #[test]
    fn product_form_requires_separation() {
        let eqs = [TrigPoly::sin([1.0, 1.0]), TrigPoly::sin([0.0, 1.0])];
        assert!(TrigSystem::new(eqs, FormTag::Product, None, None).is_err());
    }

    #[test]
    fn document_round_trip() {
        let sys = builtin("fq-main").unwrap();
        let back = TrigSystem::from_json(&sys.to_json()).unwrap();
        assert_eq!(back.equations(), sys.equations());
        assert_eq!(back.form(), FormTag::Lifted);
    }

    #[test]
    fn variety_magnitudes_track_equations() {
        // |P_i(exp(2πiLx))| = κ_i |f_i(x)| with κ fixed by the construction.
        let cases = [
            ("fq-main", [4.0, 2.0]),
            ("fq-akkv", [4.0, 2.0]),
            ("fq-nonproduct", [2.0, 2.0]),
            ("fq-product", [2.0, 4.0]),
        ];
        for (name, kappa) in cases {
            let sys = builtin(name).unwrap();
            for &x in &[[0.37, 1.9], [-13.0, 4.25], [101.5, -77.7]] {
                let v = sys.eval_system(x).unwrap();
                let p = sys.variety_residuals(x).unwrap();
                for i in 0..2 {
                    assert!(
                        (p[i].norm() - kappa[i] * v[i].abs()).abs() < 1e-11,
                        "{name} eq {i}: {} vs {}",
                        p[i].norm(),
                        kappa[i] * v[i].abs()
                    );
                }
            }
        }
    }
}
