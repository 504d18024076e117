//! Polynomial vector fields `ξ̇ᵢ = Fᵢ(ξ)` and a small sparse polynomial
//! algebra for building them.
//!
//! Text format, one record per line:
//!
//! ```text
//! polysystem 1
//! vars 3
//! var 0 x
//! var 1 y
//! var 2 z
//! term <target> <re> <im> <e_0> ... <e_{k-1}>
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Coefficients are
//! written in shortest round-trip form, so write → read is exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coeff: Complex64,
    pub exps: Vec<u32>,
}

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    pub fn eval(&self, x: &[Complex64]) -> Complex64 {
        self.exps
            .iter()
            .zip(x)
            .fold(self.coeff, |acc, (&e, &xi)| if e == 0 { acc } else { acc * xi.powu(e) })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolySystem {
    names: Vec<String>,
    terms: Vec<Vec<Monomial>>,
}

impl PolySystem {
    /// An empty system of `k` variables named `x0, x1, …`.
    pub fn new(k: usize) -> Self {
        Self::with_names((0..k).map(|i| format!("x{i}")).collect())
    }

    pub fn with_names(names: Vec<String>) -> Self {
        let k = names.len();
        Self { names, terms: vec![Vec::new(); k] }
    }

    pub fn k(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn terms(&self, target: usize) -> &[Monomial] {
        &self.terms[target]
    }

    pub fn add_term(&mut self, target: usize, coeff: Complex64, exps: Vec<u32>) -> Result<()> {
        if target >= self.k() {
            return Err(Error::InvalidParameter(format!("term target {target} out of range for {} variables", self.k())));
        }
        if exps.len() != self.k() {
            return Err(Error::InvalidParameter(format!("exponent vector has length {}, expected {}", exps.len(), self.k())));
        }
        if !(coeff.re.is_finite() && coeff.im.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite coefficient {coeff}")));
        }
        if coeff != Complex64::new(0.0, 0.0) {
            self.terms[target].push(Monomial { coeff, exps });
        }
        Ok(())
    }

    /// Set `ξ̇_target` to a real polynomial (replacing earlier terms).
    pub fn set_poly(&mut self, target: usize, p: &Poly) -> Result<()> {
        self.terms[target].clear();
        for (exps, c) in p.terms() {
            let mut e = exps.clone();
            e.resize(self.k(), 0);
            self.add_term(target, Complex64::new(*c, 0.0), e)?;
        }
        Ok(())
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.iter().flatten().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.terms.iter().map(|ts| ts.iter().map(|m| m.eval(x)).sum()).collect()
    }

    pub fn eval_real(&self, x: &[f64]) -> Vec<f64> {
        let xc: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.eval(&xc).into_iter().map(|v| v.re).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("polysystem {FORMAT_VERSION}\nvars {}\n", self.k());
        for (i, n) in self.names.iter().enumerate() {
            let _ = writeln!(out, "var {i} {n}");
        }
        for (target, ts) in self.terms.iter().enumerate() {
            for m in ts {
                let _ = write!(out, "term {target} {} {}", m.coeff.re, m.coeff.im);
                for e in &m.exps {
                    let _ = write!(out, " {e}");
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let perr = |line: usize, msg: &str| Error::Parse(format!("line {line}: {msg}"));

        let (ln, header) = lines.next().ok_or_else(|| Error::Parse("empty polysystem".into()))?;
        match header.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["polysystem", v] if *v == FORMAT_VERSION => {}
            ["polysystem", v] => {
                return Err(Error::FormatVersionMismatch(format!("polysystem version {v}, expected {FORMAT_VERSION}")))
            }
            _ => return Err(perr(ln, "expected 'polysystem <version>' header")),
        }
        let (ln, vars) = lines.next().ok_or_else(|| Error::Parse("missing 'vars' line".into()))?;
        let k: usize = match vars.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["vars", k] => k.parse().map_err(|_| perr(ln, "bad variable count"))?,
            _ => return Err(perr(ln, "expected 'vars <k>'")),
        };
        let mut names: Vec<Option<String>> = vec![None; k];
        let mut sys: Option<PolySystem> = None;
        for (ln, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            match f.first().copied() {
                Some("var") if sys.is_none() => {
                    let [_, i, name] = f.as_slice() else { return Err(perr(ln, "expected 'var <index> <name>'")) };
                    let i: usize = i.parse().map_err(|_| perr(ln, "bad variable index"))?;
                    *names.get_mut(i).ok_or_else(|| perr(ln, "variable index out of range"))? = Some(name.to_string());
                }
                Some("term") => {
                    let s = sys.get_or_insert_with(|| {
                        PolySystem::with_names(
                            names.iter().enumerate().map(|(i, n)| n.clone().unwrap_or_else(|| format!("x{i}"))).collect(),
                        )
                    });
                    if f.len() != 4 + k {
                        return Err(perr(ln, &format!("term needs {} fields", 4 + k)));
                    }
                    let target: usize = f[1].parse().map_err(|_| perr(ln, "bad target"))?;
                    let re: f64 = f[2].parse().map_err(|_| perr(ln, "bad real part"))?;
                    let im: f64 = f[3].parse().map_err(|_| perr(ln, "bad imaginary part"))?;
                    let exps = f[4..]
                        .iter()
                        .map(|e| e.parse::<u32>().map_err(|_| perr(ln, "bad exponent")))
                        .collect::<Result<Vec<_>>>()?;
                    s.add_term(target, Complex64::new(re, im), exps).map_err(|e| perr(ln, &e.to_string()))?;
                }
                _ => return Err(perr(ln, &format!("unexpected record {line:?}"))),
            }
        }
        Ok(sys.unwrap_or_else(|| {
            PolySystem::with_names(names.into_iter().enumerate().map(|(i, n)| n.unwrap_or_else(|| format!("x{i}"))).collect())
        }))
    }
}

/// Sparse real polynomial, keyed by exponent vector (trailing zeros trimmed).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Poly {
    terms: BTreeMap<Vec<u32>, f64>,
}

fn trim(mut e: Vec<u32>) -> Vec<u32> {
    while e.last() == Some(&0) {
        e.pop();
    }
    e
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Self::zero();
        p.add_monomial(Vec::new(), c);
        p
    }

    pub fn var(i: usize) -> Self {
        let mut e = vec![0; i + 1];
        e[i] = 1;
        let mut p = Self::zero();
        p.add_monomial(e, 1.0);
        p
    }

    fn add_monomial(&mut self, exps: Vec<u32>, c: f64) {
        if c == 0.0 {
            return;
        }
        let key = trim(exps);
        let v = self.terms.entry(key.clone()).or_insert(0.0);
        *v += c;
        if *v == 0.0 {
            self.terms.remove(&key);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &f64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = Self::zero();
        for (e, v) in &self.terms {
            out.add_monomial(e.clone(), v * c);
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| e.iter().zip(x).fold(*c, |acc, (&p, &xi)| acc * xi.powi(p as i32)))
            .sum()
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_monomial(e.clone(), *c);
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &rhs.scale(-1.0)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let len = ea.len().max(eb.len());
                let e = (0..len).map(|i| ea.get(i).unwrap_or(&0) + eb.get(i).unwrap_or(&0)).collect();
                out.add_monomial(e, ca * cb);
            }
        }
        out
    }
}
