//! Closed-form potential and flux of a unit uniform source on the normalized
//! right triangle `(0,0,0), (1,0,0), (0,0,zM)`.
//!
//! The potential is `Φ(P) = ∫∫ dA / |P − Q|` over the triangle and the flux is
//! `F = −∇Φ`. Every expression is real after pairing the complex logarithms
//! `LP` with their conjugates `LM`, so the production path works with
//! `ΔLP = LP1 − LP2` and `ΔA = atanh(w1) − atanh(w2)` directly and carries no
//! imaginary part. [`tri_potential_four_term`] and [`tri_flux_four_term`]
//! evaluate each complex member independently and report the imaginary
//! residue that survives; they exist for diagnostics and cross-checks.
//!
//! Branch conventions:
//! * The arguments of `LP1`, `LP2` lie in the closed lower half-plane whenever
//!   `Y ≠ 0`, so their logarithm is taken with `arg ∈ (−3π/2, π/2]`, which
//!   keeps it continuous through the negative real axis.
//! * The inverse hyperbolic tangents of `w = (R1 + iI)/(D|Z|)` follow the
//!   branch continuous in `X`; it differs from the principal value by `−iπ`
//!   when `Im w > 0`.

use crate::vec3::Vec3;
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

/// Imaginary residue tolerated in the four-term path, relative to `max(1, |value|)`.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;

/// Relative distance from the cut of the continued logarithm that counts as on it.
pub const BRANCH_TOL: f64 = 1e-12;

/// `|Y|` at or below which a point is evaluated as its one-sided on-plane limit.
pub const PLANAR_Y: f64 = 1e-100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("non-finite input")]
    InvalidInput,
    #[error("zM must be positive and finite")]
    InvalidZm,
    #[error("non-finite intermediate in {term}")]
    NonFinite { term: &'static str },
    #[error("logarithm of non-positive argument in {term}")]
    LogDomainFailure { term: &'static str },
    #[error("argument of {term} lies on a branch cut")]
    BranchAmbiguity { term: &'static str },
    #[error("non-positive potential {value:e}")]
    NegativePotential { value: f64 },
    #[error("imaginary residue {residue:e} in {term}")]
    ImagResidue { term: &'static str, residue: f64 },
}

impl KernelError {
    /// Short identifier of the offending term, used as flag detail.
    pub fn term(&self) -> &'static str {
        match self {
            KernelError::InvalidInput | KernelError::InvalidZm => "input",
            KernelError::NonFinite { term }
            | KernelError::LogDomainFailure { term }
            | KernelError::BranchAmbiguity { term }
            | KernelError::ImagResidue { term, .. } => term,
            KernelError::NegativePotential { .. } => "potential",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelInputs {
    pub z_m: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl KernelInputs {
    pub fn new(z_m: f64, x: f64, y: f64, z: f64) -> Self {
        Self { z_m, x, y, z }
    }

    pub fn at(z_m: f64, p: Vec3) -> Self {
        Self::new(z_m, p.x, p.y, p.z)
    }

    pub fn point(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    fn validate(&self) -> Result<(), KernelError> {
        if !(self.z_m.is_finite() && self.z_m > 0.0) {
            return Err(KernelError::InvalidZm);
        }
        if !(self.x.is_finite() && self.y.is_finite() && self.z.is_finite()) {
            return Err(KernelError::InvalidInput);
        }
        Ok(())
    }
}

/// Every auxiliary symbol of the closed forms, for inspection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelTerms {
    pub d11: f64,
    pub d12: f64,
    pub d21: f64,
    pub i1: f64,
    pub i2: f64,
    pub s1: f64,
    pub r1: f64,
    pub e1: f64,
    pub e2: f64,
    pub g: f64,
    pub h1: f64,
    pub h2: f64,
    pub lp1: Complex64,
    pub lm1: Complex64,
    pub lp2: Complex64,
    pub lm2: Complex64,
    /// `atanh` of `(R1 ± iI1)/(D11|Z|)` and `(R1 ± iI2)/(D21|Z|)`; zero when `S1 = 0`.
    pub a1p: Complex64,
    pub a1m: Complex64,
    pub a2p: Complex64,
    pub a2m: Complex64,
    /// `ln((s·D12 − E1)/(s·D21 − E2))` with `s = √(1 + zM²)`.
    pub log_hyp: f64,
    /// `ln((D21 − X + 1)/(D11 − X))`.
    pub log_z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelOutput {
    pub value: f64,
    pub imag_residue: f64,
    pub terms: Option<Box<KernelTerms>>,
}

impl KernelOutput {
    fn real(value: f64) -> Self {
        Self {
            value,
            imag_residue: 0.0,
            terms: None,
        }
    }
}

/// Potential and flux from one evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Influence {
    pub potential: f64,
    pub flux: Vec3,
}

impl Influence {
    pub const ZERO: Influence = Influence {
        potential: 0.0,
        flux: Vec3::ZERO,
    };

    pub fn scaled(self, s: f64) -> Self {
        Self {
            potential: self.potential * s,
            flux: self.flux * s,
        }
    }
}

impl std::ops::Add for Influence {
    type Output = Influence;
    fn add(self, o: Influence) -> Influence {
        Influence {
            potential: self.potential + o.potential,
            flux: self.flux + o.flux,
        }
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `a + sqrt(a² + b2)` without cancellation when `a < 0`.
fn plus_root(a: f64, b2: f64, root: f64) -> f64 {
    if a >= 0.0 {
        a + root
    } else {
        b2 / (root - a)
    }
}

/// `root − a` with `root = sqrt(a² + b2)`, without cancellation when `a > 0`.
fn minus_root(a: f64, b2: f64, root: f64) -> f64 {
    if a > 0.0 {
        b2 / (root + a)
    } else {
        root - a
    }
}

/// `s·D − E`, where `s²D² − E² = s²Y² + G²` for both hypotenuse endpoints.
fn hyp_gap(s: f64, d: f64, e: f64, gap2: f64) -> f64 {
    if e > 0.0 {
        gap2 / (s * d + e)
    } else {
        s * d - e
    }
}

fn ln_checked(arg: f64, term: &'static str) -> Result<f64, KernelError> {
    if arg > 0.0 && arg.is_finite() {
        Ok(arg.ln())
    } else if arg.is_nan() {
        Err(KernelError::NonFinite { term })
    } else {
        Err(KernelError::LogDomainFailure { term })
    }
}

/// Argument of a lower-half-plane value, continuous across the negative real axis.
///
/// The mapped range `(−3π/2, π/2]` puts the discontinuity on the positive
/// imaginary axis, which these arguments never approach; landing there
/// means the lower-half-plane premise failed.
fn lower_arg(w: Complex64, term: &'static str) -> Result<f64, KernelError> {
    if w.im > 0.0 && w.re.abs() <= BRANCH_TOL * w.norm() {
        return Err(KernelError::BranchAmbiguity { term });
    }
    let a = w.im.atan2(w.re);
    Ok(if a > 0.5 * PI { a - 2.0 * PI } else { a })
}

/// Imaginary part of the continuous-branch `atanh((R1 + iI)/(D|Z|))`.
fn atanh_imag(i: f64, d: f64, az: f64, r1: f64, x: f64, y2: f64) -> f64 {
    let dz = d * az;
    let plus = dz + r1;
    // D|Z| − R1 = (X²Z² − R1·Y²)/(D|Z| + R1)
    let minus = ((x * az).powi(2) - r1 * y2) / plus;
    let neg_i = -i + 0.0;
    let v = 0.5 * (i.atan2(plus) - neg_i.atan2(minus));
    if i > 0.0 {
        v - PI
    } else {
        v
    }
}

/// `G·Re ΔLP + S1·Re Δatanh` at `Y = 0`.
///
/// Both pieces carry `ln|X|` and `ln|X − 1|`; their net multiples are
/// collected first so that the logarithms are taken only when they survive.
#[allow(clippy::too_many_arguments)]
fn planar_log_sum(x: f64, z: f64, zz: f64, d11: f64, d12: f64, d21: f64, s1: f64) -> Result<f64, KernelError> {
    // ln|Z − zM + D12| = a1·ln|X| + b1, ln|Z + D21| = a2·ln|X − 1| + b2
    let (a1, b1) = if zz < 0.0 {
        (2.0, -ln_checked(d12 - zz, "LP")?)
    } else {
        (0.0, ln_checked(d12 + zz, "LP")?)
    };
    let (a2, b2) = if z < 0.0 {
        (2.0, -ln_checked(d21 - z, "LP")?)
    } else {
        (0.0, ln_checked(d21 + z, "LP")?)
    };
    let mut v = b1 - b2;
    if s1 != 0.0 {
        let az = z.abs();
        v += s1 * ln_checked((d11 + az) / (d21 + az), "atanh")?;
    }
    let cx = a1 - 1.0 - s1;
    if cx != 0.0 {
        v += cx * ln_checked(x.abs(), "LP")?;
    }
    let cx1 = 1.0 - a2 + s1;
    if cx1 != 0.0 {
        v += cx1 * ln_checked((x - 1.0).abs(), "LP")?;
    }
    Ok(v)
}

/// `a / b` with `b` rescaled first, so that a tiny `b` does not underflow.
fn div_scaled(a: Complex64, b: Complex64) -> Complex64 {
    let m = b.re.abs().max(b.im.abs());
    (a / m) / (b / m)
}

/// Quantities shared by potential and flux.
struct Shared {
    ay: f64,
    /// `|Y| ≤ PLANAR_Y`; the field is its one-sided on-plane limit.
    planar: bool,
    g: f64,
    s: f64,
    s1: f64,
    /// `Re ΔLP`, `Im ΔLP`; on the plane `re_dlp` holds `G·Re ΔLP + S1·Re Δatanh`.
    re_dlp: f64,
    im_dlp: f64,
    re_da: f64,
    im_da: f64,
    log_hyp: Option<f64>,
    log_z: Option<f64>,
}

fn shared(k: &KernelInputs, want_flux: bool) -> Result<Shared, KernelError> {
    k.validate()?;
    let (zm, x, y, z) = (k.z_m, k.x, k.y, k.z);
    let ay = y.abs();
    let y2 = y * y;
    let z2 = z * z;
    let xm1 = x - 1.0;
    let zz = z - zm;
    let rho1 = x * x + y2;
    let rho2 = xm1 * xm1 + y2;
    let d11 = (rho1 + z2).sqrt();
    let d12 = (rho1 + zz * zz).sqrt();
    let d21 = (rho2 + z2).sqrt();
    let g = zm * xm1 + z;
    let s = (1.0 + zm * zm).sqrt();
    let s1 = -sign(z);

    // Z − zM + D12 and Z + D21
    let q1 = plus_root(zz, rho1, d12);
    let q2 = plus_root(z, rho2, d21);

    let planar = ay <= PLANAR_Y;
    let az = z.abs();
    let (re_dlp, im_dlp, re_da, im_da) = if planar {
        let need = want_flux || x != 0.0;
        (if need { planar_log_sum(x, z, zz, d11, d12, d21, s1)? } else { 0.0 }, 0.0, 0.0, 0.0)
    } else {
        let num1 = Complex64::new(y2 + g * q1, ay * (x - zm * q1));
        let num2 = Complex64::new(y2 + g * q2, ay * (xm1 - zm * q2));
        let w1 = div_scaled(num1, Complex64::new(-x, ay));
        let w2 = div_scaled(num2, Complex64::new(-xm1, ay));
        let lr = 0.5 * ln_checked(w1.norm_sqr() / w2.norm_sqr(), "LP")?;
        let li = lower_arg(w1, "LP1")? - lower_arg(w2, "LP2")?;
        let den = g * g + zm * zm * y2;
        let b = zm * ay;
        let (re_da, im_da) = if s1 == 0.0 {
            (0.0, 0.0)
        } else {
            let t1 = d11 + az;
            let t2 = d21 + az;
            let re = 0.5 * ln_checked((t1 * t1 * rho2) / (t2 * t2 * rho1), "atanh")?;
            let r1 = y2 + z2;
            let im = atanh_imag(x * ay, d11, az, r1, x, y2) - atanh_imag(xm1 * ay, d21, az, r1, xm1, y2);
            (re, im)
        };
        ((lr * g - li * b) / den, (lr * b + li * g) / den, re_da, im_da)
    };

    let log_hyp = if want_flux || g != 0.0 {
        let gap2 = s * s * y2 + g * g;
        let e1 = x + zm * (zm - z);
        let e2 = xm1 - zm * z;
        let ratio = if e1 > 0.0 && e2 > 0.0 {
            (s * d21 + e2) / (s * d12 + e1)
        } else {
            hyp_gap(s, d12, e1, gap2) / hyp_gap(s, d21, e2, gap2)
        };
        Some(ln_checked(ratio, "log-hypotenuse")?)
    } else {
        None
    };
    let log_z = if want_flux || z != 0.0 {
        let r1 = y2 + z2;
        let ratio = if xm1 > 0.0 {
            (d11 + x) / (d21 + xm1)
        } else {
            minus_root(xm1, r1, d21) / minus_root(x, r1, d11)
        };
        Some(ln_checked(ratio, "log-z")?)
    } else {
        None
    };

    Ok(Shared {
        ay,
        planar,
        g,
        s,
        s1,
        re_dlp,
        im_dlp,
        re_da,
        im_da,
        log_hyp,
        log_z,
    })
}

fn potential_from(k: &KernelInputs, sh: &Shared) -> f64 {
    let (zm, x, y, z) = (k.z_m, k.x, k.y, k.z);
    let Shared { ay, planar, g, s, s1, .. } = *sh;
    let mut v = 0.0;
    if planar {
        if x != 0.0 {
            v -= x * sh.re_dlp;
        }
    } else {
        let m = zm * y * y - x * g;
        if m != 0.0 {
            v += m * sh.re_dlp;
        }
        let m = zm * x + g;
        if m != 0.0 {
            v -= ay * m * sh.im_dlp;
        }
    }
    if s1 != 0.0 && !planar {
        if x != 0.0 {
            v -= s1 * x * sh.re_da;
        }
        v -= s1 * ay * sh.im_da;
    }
    if g != 0.0 {
        v += g / s * sh.log_hyp.unwrap_or(0.0);
    }
    if z != 0.0 {
        v += z * sh.log_z.unwrap_or(0.0);
    }
    v
}

fn flux_from(k: &KernelInputs, sh: &Shared) -> Vec3 {
    let (zm, y) = (k.z_m, k.y);
    let Shared { ay, planar, g, s, s1, .. } = *sh;
    let lh = sh.log_hyp.unwrap_or(0.0);
    let lz = sh.log_z.unwrap_or(0.0);
    let fx = if planar {
        sh.re_dlp
    } else {
        g * sh.re_dlp + ay * zm * sh.im_dlp + s1 * sh.re_da
    } - zm / s * lh;
    let fy = if ay == 0.0 {
        0.0
    } else if planar {
        let inside = k.x > 0.0 && k.z > 0.0 && g < 0.0;
        if inside {
            sign(y) * 2.0 * PI
        } else {
            0.0
        }
    } else {
        let sn = sign(y);
        -zm * y * sh.re_dlp + sn * g * sh.im_dlp + s1 * sn * sh.im_da
    };
    let fz = -lh / s - lz;
    Vec3::new(fx, fy, fz)
}

fn check_potential(v: f64) -> Result<f64, KernelError> {
    if !v.is_finite() {
        Err(KernelError::NonFinite { term: "potential" })
    } else if v <= 0.0 {
        Err(KernelError::NegativePotential { value: v })
    } else {
        Ok(v)
    }
}

fn check_flux(f: Vec3) -> Result<Vec3, KernelError> {
    if !f.x.is_finite() {
        return Err(KernelError::NonFinite { term: "Fx" });
    }
    if !f.y.is_finite() {
        return Err(KernelError::NonFinite { term: "Fy" });
    }
    if !f.z.is_finite() {
        return Err(KernelError::NonFinite { term: "Fz" });
    }
    Ok(f)
}

/// Potential of the unit source at the local point.
pub fn potential(k: &KernelInputs) -> Result<f64, KernelError> {
    let sh = shared(k, false)?;
    check_potential(potential_from(k, &sh))
}

/// Flux `−∇Φ` in local coordinates. On the plane `Fy` is reported as zero;
/// for `0 < |Y| ≤ PLANAR_Y` it is the one-sided limit.
pub fn flux(k: &KernelInputs) -> Result<Vec3, KernelError> {
    let sh = shared(k, true)?;
    check_flux(flux_from(k, &sh))
}

/// Potential and flux sharing one set of logarithms.
pub fn influence(k: &KernelInputs) -> Result<Influence, KernelError> {
    let sh = shared(k, true)?;
    let potential = check_potential(potential_from(k, &sh))?;
    let flux = check_flux(flux_from(k, &sh))?;
    Ok(Influence { potential, flux })
}

pub fn tri_potential(k: &KernelInputs) -> Result<KernelOutput, KernelError> {
    potential(k).map(KernelOutput::real)
}

pub fn tri_flux(k: &KernelInputs) -> Result<[KernelOutput; 3], KernelError> {
    let f = flux(k)?;
    Ok([f.x, f.y, f.z].map(KernelOutput::real))
}

/// Full-branch `atanh` of the `+` member `(R1 + iI)/(D|Z|)`; the `−` member is its conjugate.
fn atanh_plus(i: f64, d: f64, az: f64, r1: f64, x: f64, y2: f64) -> Complex64 {
    let t = d + az;
    let re = 0.5 * ((t * t) / (x * x + y2)).ln();
    Complex64::new(re, atanh_imag(i, d, az, r1, x, y2))
}

/// Same continuation applied to a conjugated argument, evaluated on its own.
fn atanh_minus(i: f64, d: f64, az: f64, r1: f64, x: f64, y2: f64) -> Complex64 {
    let t = d + az;
    let re = 0.5 * ((t * t) / (x * x + y2)).ln();
    let dz = d * az;
    let plus = dz + r1;
    let minus = ((x * az).powi(2) - r1 * y2) / plus;
    let ni = -i;
    let pi_side = if i == 0.0 { -0.0 } else { i };
    let v = 0.5 * (ni.atan2(plus) - pi_side.atan2(minus));
    Complex64::new(re, if ni < 0.0 { v + PI } else { v })
}

fn upper_arg(w: Complex64) -> f64 {
    let a = w.im.atan2(w.re);
    if a < -0.5 * PI {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Computes every auxiliary symbol, each complex member independently.
///
/// Groups whose multiplier vanishes are reported as zero: the `atanh`
/// members when `S1 = 0`, and the `LP`/`LM` members when `Y = 0` and
/// `G = 0`.
pub fn eval_terms(k: &KernelInputs) -> Result<KernelTerms, KernelError> {
    k.validate()?;
    let (zm, x, y, z) = (k.z_m, k.x, k.y, k.z);
    let ay = y.abs();
    let y2 = y * y;
    let d11 = (x * x + y2 + z * z).sqrt();
    let d12 = (x * x + y2 + (z - zm) * (z - zm)).sqrt();
    let d21 = ((x - 1.0) * (x - 1.0) + y2 + z * z).sqrt();
    let i1 = x * ay;
    let i2 = (x - 1.0) * ay;
    let s1 = -sign(z);
    let r1 = y2 + z * z;
    let e1 = x + zm * zm - zm * z;
    let e2 = x - 1.0 - zm * z;
    let g = zm * (x - 1.0) + z;
    let h1 = y2 + g * (z - zm);
    let h2 = y2 + g * z;

    let zero = Complex64::new(0.0, 0.0);
    let (lp1, lm1, lp2, lm2) = if ay == 0.0 && g == 0.0 {
        (zero, zero, zero, zero)
    } else {
        let num1 = Complex64::new(h1 + g * d12, ay * (e1 - zm * d12));
        let num2 = Complex64::new(h2 + g * d21, ay * (e2 - zm * d21));
        let w1 = num1 / Complex64::new(-x, ay);
        let w2 = num2 / Complex64::new(1.0 - x, ay);
        let cplus = Complex64::new(g, -zm * ay);
        let cminus = cplus.conj();
        let log_lower = |w: Complex64, term| -> Result<Complex64, KernelError> {
            if ay == 0.0 {
                Ok(Complex64::new(w.norm().ln(), 0.0))
            } else {
                Ok(Complex64::new(w.norm().ln(), lower_arg(w, term)?))
            }
        };
        let log_upper = |w: Complex64| -> Complex64 {
            if ay == 0.0 {
                Complex64::new(w.norm().ln(), 0.0)
            } else {
                Complex64::new(w.norm().ln(), upper_arg(w))
            }
        };
        (
            log_lower(w1, "LP1")? / cplus,
            log_upper(w1.conj()) / cminus,
            log_lower(w2, "LP2")? / cplus,
            log_upper(w2.conj()) / cminus,
        )
    };

    let (a1p, a1m, a2p, a2m) = if s1 == 0.0 {
        (zero, zero, zero, zero)
    } else {
        let az = z.abs();
        (
            atanh_plus(i1, d11, az, r1, x, y2),
            atanh_minus(i1, d11, az, r1, x, y2),
            atanh_plus(i2, d21, az, r1, x - 1.0, y2),
            atanh_minus(i2, d21, az, r1, x - 1.0, y2),
        )
    };

    let s = (1.0 + zm * zm).sqrt();
    let log_hyp = ((s * d12 - e1) / (s * d21 - e2)).ln();
    let log_z = ((d21 - x + 1.0) / (d11 - x)).ln();

    Ok(KernelTerms {
        d11,
        d12,
        d21,
        i1,
        i2,
        s1,
        r1,
        e1,
        e2,
        g,
        h1,
        h2,
        lp1,
        lm1,
        lp2,
        lm2,
        a1p,
        a1m,
        a2p,
        a2m,
        log_hyp,
        log_z,
    })
}

fn finish_complex(value: Complex64, term: &'static str, terms: KernelTerms) -> Result<KernelOutput, KernelError> {
    if !(value.re.is_finite() && value.im.is_finite()) {
        return Err(KernelError::NonFinite { term });
    }
    let residue = value.im.abs();
    if residue > IMAG_RESIDUE_TOL * value.re.abs().max(1.0) {
        return Err(KernelError::ImagResidue { term, residue });
    }
    Ok(KernelOutput {
        value: value.re,
        imag_residue: residue,
        terms: Some(Box::new(terms)),
    })
}

/// Potential from the four independent complex members of each pair.
pub fn tri_potential_four_term(k: &KernelInputs) -> Result<KernelOutput, KernelError> {
    let t = eval_terms(k)?;
    let (zm, x, y, z) = (k.z_m, k.x, k.y, k.z);
    let ay = Complex64::new(y.abs(), 0.0);
    let i = Complex64::i();
    let s = (1.0 + zm * zm).sqrt();
    let mut v = Complex64::new(0.0, 0.0);
    let m = zm * y * y - x * t.g;
    if m != 0.0 {
        v += m * (t.lp1 + t.lm1 - t.lp2 - t.lm2);
    }
    let m = zm * x + t.g;
    if m != 0.0 && y != 0.0 {
        v += i * ay * m * (t.lp1 - t.lm1 - t.lp2 + t.lm2);
    }
    if t.s1 != 0.0 {
        v -= t.s1 * x * (t.a1p + t.a1m - t.a2p - t.a2m);
        v += i * t.s1 * ay * (t.a1p - t.a1m - t.a2p + t.a2m);
    }
    if t.g != 0.0 {
        v += 2.0 * t.g / s * t.log_hyp;
    }
    if z != 0.0 {
        v += 2.0 * z * t.log_z;
    }
    let out = finish_complex(0.5 * v, "potential", t)?;
    check_potential(out.value)?;
    Ok(out)
}

/// Flux components from the four independent complex members of each pair.
pub fn tri_flux_four_term(k: &KernelInputs) -> Result<[KernelOutput; 3], KernelError> {
    let t = eval_terms(k)?;
    let (zm, y) = (k.z_m, k.y);
    let ay = y.abs();
    let sn = sign(y);
    let i = Complex64::i();
    let s = (1.0 + zm * zm).sqrt();
    let sum = t.lp1 + t.lm1 - t.lp2 - t.lm2;
    let diff = t.lp1 - t.lm1 - t.lp2 + t.lm2;
    let asum = t.a1p + t.a1m - t.a2p - t.a2m;
    let adiff = t.a1p - t.a1m - t.a2p + t.a2m;
    let fx = 0.5 * (t.g * sum - i * ay * zm * diff + t.s1 * asum) - zm / s * t.log_hyp;
    let fy = -0.5 * (zm * y * sum + i * sn * t.g * diff + i * t.s1 * sn * adiff);
    let fz = Complex64::new(-t.log_hyp / s - t.log_z, 0.0);
    Ok([
        finish_complex(fx, "Fx", t)?,
        finish_complex(fy, "Fy", t)?,
        finish_complex(fz, "Fz", t)?,
    ])
}
