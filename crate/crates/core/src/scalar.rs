//! Scalar values for the two tensor backends.

use std::fmt;
use std::str::FromStr;

use num::{BigInt, One, Signed, ToPrimitive, Zero};

pub type Rational = num::BigRational;
pub type Complex = num::complex::Complex64;

/// Which arithmetic a tensor's entries live in. Backends are never mixed
/// within a single contraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Backend {
    /// Arbitrary-precision rationals; zero tests are exact equality.
    Exact,
    /// Complex doubles; zero tests use a scaled tolerance.
    Float,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Exact => "exact",
            Backend::Float => "float",
        })
    }
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Backend::Exact),
            "float" => Ok(Backend::Float),
            other => Err(format!("unknown backend `{other}` (expected exact or float)")),
        }
    }
}

/// A single amplitude.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Exact(Rational),
    Float(Complex),
}

impl Scalar {
    pub fn int(v: i64) -> Self {
        Scalar::Exact(Rational::from_integer(BigInt::from(v)))
    }

    pub fn ratio(p: i64, q: i64) -> Self {
        Scalar::Exact(Rational::new(BigInt::from(p), BigInt::from(q)))
    }

    pub fn float(re: f64, im: f64) -> Self {
        Scalar::Float(Complex::new(re, im))
    }

    pub fn zero(backend: Backend) -> Self {
        match backend {
            Backend::Exact => Scalar::Exact(Rational::zero()),
            Backend::Float => Scalar::Float(Complex::zero()),
        }
    }

    pub fn one(backend: Backend) -> Self {
        match backend {
            Backend::Exact => Scalar::Exact(Rational::one()),
            Backend::Float => Scalar::Float(Complex::one()),
        }
    }

    pub fn backend(&self) -> Backend {
        match self {
            Scalar::Exact(_) => Backend::Exact,
            Scalar::Float(_) => Backend::Float,
        }
    }

    /// Exact zero test. Float values are compared against 0 with no tolerance;
    /// use [`Scalar::is_negligible`] for the scaled test.
    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(v) => v.is_zero(),
            Scalar::Float(v) => v.is_zero(),
        }
    }

    /// Zero test used throughout the crate: exact equality on the exact
    /// backend, `|v| < tol * scale` on the float backend.
    pub fn is_negligible(&self, tol: f64, scale: f64) -> bool {
        match self {
            Scalar::Exact(v) => v.is_zero(),
            Scalar::Float(v) => v.norm() < tol * scale,
        }
    }

    pub fn to_complex(&self) -> Complex {
        match self {
            Scalar::Exact(v) => Complex::new(rational_to_f64(v), 0.0),
            Scalar::Float(v) => *v,
        }
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            Scalar::Exact(v) => Some(v),
            Scalar::Float(_) => None,
        }
    }

    pub fn abs(&self) -> f64 {
        match self {
            Scalar::Exact(v) => rational_to_f64(&v.abs()),
            Scalar::Float(v) => v.norm(),
        }
    }

    /// Renders the value in the form accepted by the TNF reader. Float values
    /// always carry an imaginary part so they read back on the float backend.
    pub fn to_tnf(&self) -> String {
        match self {
            Scalar::Exact(v) => v.to_string(),
            Scalar::Float(v) => {
                if v.im < 0.0 || (v.im == 0.0 && v.im.is_sign_negative()) {
                    format!("{}-{}i", v.re, -v.im)
                } else {
                    format!("{}+{}i", v.re, v.im)
                }
            }
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(v) => write!(f, "{v}"),
            Scalar::Float(v) if v.im == 0.0 => write!(f, "{}", v.re),
            Scalar::Float(v) if v.im < 0.0 => write!(f, "{}-{}i", v.re, -v.im),
            Scalar::Float(v) => write!(f, "{}+{}i", v.re, v.im),
        }
    }
}

impl FromStr for Scalar {
    type Err = String;

    /// Accepts integers, `p/q`, decimals and complex values `a+bi`, `-2.5i`,
    /// `i`. Integers and fractions land on the exact backend, everything else
    /// on the float backend.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err("empty value".into());
        }
        if let Some((p, q)) = s.split_once('/') {
            let p: BigInt = p.parse().map_err(|_| format!("bad numerator in `{s}`"))?;
            let q: BigInt = q.parse().map_err(|_| format!("bad denominator in `{s}`"))?;
            if q.is_zero() {
                return Err(format!("zero denominator in `{s}`"));
            }
            return Ok(Scalar::Exact(Rational::new(p, q)));
        }
        if let Ok(v) = s.parse::<BigInt>() {
            return Ok(Scalar::Exact(Rational::from_integer(v)));
        }
        parse_complex(s).map(Scalar::Float).ok_or_else(|| format!("cannot parse value `{s}`"))
    }
}

fn parse_real(s: &str) -> Option<f64> {
    let v: f64 = s.parse().ok()?;
    v.is_finite().then_some(v)
}

fn parse_imag(s: &str) -> Option<f64> {
    let body = s.strip_suffix('i')?;
    match body {
        "" | "+" => Some(1.0),
        "-" => Some(-1.0),
        _ => parse_real(body),
    }
}

fn parse_complex(s: &str) -> Option<Complex> {
    if !s.ends_with('i') {
        return parse_real(s).map(|re| Complex::new(re, 0.0));
    }
    // Split at the last sign that is not a leading sign or an exponent sign.
    let bytes = s.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => Some(Complex::new(parse_real(&s[..k])?, parse_imag(&s[k..])?)),
        None => Some(Complex::new(0.0, parse_imag(s)?)),
    }
}

pub(crate) fn rational_to_f64(v: &Rational) -> f64 {
    if let (Some(n), Some(d)) = (v.numer().to_f64(), v.denom().to_f64()) {
        if n.is_finite() && d.is_finite() {
            return n / d;
        }
    }
    v.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_values_are_reduced() {
        let v: Scalar = "6/-4".parse().unwrap();
        assert_eq!(v, Scalar::ratio(-3, 2));
        let Scalar::Exact(r) = v else { panic!() };
        assert!(r.denom() > &BigInt::zero());
        assert_eq!(r.to_string(), "-3/2");
    }

    #[test]
    fn complex_forms() {
        let cases = [
            ("1.5", Complex::new(1.5, 0.0)),
            ("1+2i", Complex::new(1.0, 2.0)),
            ("0.5-0.25i", Complex::new(0.5, -0.25)),
            ("-i", Complex::new(0.0, -1.0)),
            ("i", Complex::new(0.0, 1.0)),
            ("-2.5i", Complex::new(0.0, -2.5)),
            ("1e-3+1e+2i", Complex::new(1e-3, 1e2)),
        ];
        for (text, want) in cases {
            assert_eq!(text.parse::<Scalar>().unwrap(), Scalar::Float(want), "{text}");
        }
        assert!("1/0".parse::<Scalar>().is_err());
        assert!("abc".parse::<Scalar>().is_err());
        assert!("1+2j".parse::<Scalar>().is_err());
    }

    #[test]
    fn tnf_form_round_trips() {
        for v in [Scalar::float(0.1, -3.0), Scalar::float(1.0, 0.0), Scalar::ratio(7, 3)] {
            assert_eq!(v.to_tnf().parse::<Scalar>().unwrap(), v);
        }
    }
}
