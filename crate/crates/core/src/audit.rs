//! Exact comparison of `(α, β)` between pairs of gaskets. Distinct walk
//! dimensions rule out a bi-Lipschitz equivalence; equal invariants are only
//! a necessary condition.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Pow};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ifs::IfsSpec;
use crate::rational::{LogRatio, Rational};
use crate::resistance::{walk_dimension, DimensionReport, EnergyScale};

/// Float gap below which incommensurable log ratios are not separated.
pub const INCONCLUSIVE_GAP: f64 = 1e-9;
/// Largest separator denominator tried for incommensurable bases.
pub const MAX_SEPARATOR_DENOMINATOR: i64 = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    /// `a^p` vs `b^q` over a common base.
    PowerComparison,
    /// A rational strictly between the two values, checked by integer powers.
    RationalSeparator,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub common_base: Option<Rational>,
    /// Powers applied to the first and second argument.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub powers: Option<(u32, u32)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub separator: Option<Rational>,
    /// Integers compared, as decimal strings.
    pub lhs: String,
    pub rhs: String,
    /// After cancelling shared high powers, when that changes anything.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduced: Option<(String, String)>,
    pub statement: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduced_statement: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum LogComparison {
    Equal {
        certificate: Certificate,
    },
    Distinct {
        ordering: OrderingLabel,
        certificate: Certificate,
    },
    Inconclusive {
        a: f64,
        b: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderingLabel {
    Less,
    Greater,
}

impl LogComparison {
    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            LogComparison::Equal { certificate } | LogComparison::Distinct { certificate, .. } => Some(certificate),
            LogComparison::Inconclusive { .. } => None,
        }
    }

    pub fn is_equal(&self) -> bool {
        matches!(self, LogComparison::Equal { .. })
    }

    pub fn is_distinct(&self) -> bool {
        matches!(self, LogComparison::Distinct { .. })
    }
}

/// `(base, exponent)` factors of a product of integer powers.
type PowerProduct = Vec<(BigInt, u32)>;

fn evaluate(p: &PowerProduct) -> BigInt {
    p.iter().fold(BigInt::one(), |acc, (b, e)| acc * Pow::pow(b, *e))
}

fn power_product(terms: &[(&BigInt, u32)]) -> PowerProduct {
    terms
        .iter()
        .filter(|(b, e)| !b.is_one() && *e > 0)
        .map(|(b, e)| ((*b).clone(), *e))
        .collect()
}

/// Repeatedly cancels `g^e` with `g = gcd(x, y) > 1`, `e = min(i, j) >= 2`
/// between factors `x^i` and `y^j` on opposite sides.
fn cancel_shared_powers(mut left: PowerProduct, mut right: PowerProduct) -> (PowerProduct, PowerProduct) {
    'outer: loop {
        for i in 0..left.len() {
            for j in 0..right.len() {
                let (x, ex) = left[i].clone();
                let (y, ey) = right[j].clone();
                let g = x.gcd(&y);
                let e = ex.min(ey);
                if g.is_one() || e < 2 {
                    continue;
                }
                left[i] = (&x / &g, ex);
                right[j] = (&y / &g, ey);
                left.push((g.clone(), ex - e));
                right.push((g, ey - e));
                left.retain(|(b, e)| !b.is_one() && *e > 0);
                right.retain(|(b, e)| !b.is_one() && *e > 0);
                continue 'outer;
            }
        }
        return (left, right);
    }
}

fn relation(ordering: Ordering) -> &'static str {
    match ordering {
        Ordering::Equal => "==",
        _ => "!=",
    }
}

fn power_certificate(a: &LogRatio, b: &LogRatio) -> Option<(Ordering, Certificate)> {
    let cmp = a.compare_exact(b)?;
    // a.arg^pa vs b.arg^pb with a.arg = n1/d1, b.arg = n2/d2, cross-multiplied.
    let (n1, d1) = (a.argument().numer(), a.argument().denom());
    let (n2, d2) = (b.argument().numer(), b.argument().denom());
    let left = power_product(&[(n1, cmp.power_a), (d2, cmp.power_b)]);
    let right = power_product(&[(n2, cmp.power_b), (d1, cmp.power_a)]);
    let (lhs, rhs) = (evaluate(&left), evaluate(&right));
    let ordering = lhs.cmp(&rhs);
    debug_assert_eq!(ordering, cmp.ordering);
    let (rl, rr) = cancel_shared_powers(left, right);
    let (rl, rr) = (evaluate(&rl), evaluate(&rr));
    let reduced = (rl != lhs).then(|| (rl.to_string(), rr.to_string()));
    let rel = relation(ordering);
    Some((
        ordering,
        Certificate {
            kind: CertificateKind::PowerComparison,
            common_base: Some(cmp.common_base),
            powers: Some((cmp.power_a, cmp.power_b)),
            separator: None,
            statement: format!("{lhs} {rel} {rhs}"),
            reduced_statement: reduced.as_ref().map(|(l, r)| format!("{l} {rel} {r}")),
            lhs: lhs.to_string(),
            rhs: rhs.to_string(),
            reduced,
        },
    ))
}

/// Simplest fraction strictly inside `(lo, hi)`, `0 <= lo < hi`.
fn simplest_between(lo: f64, hi: f64, depth: u32) -> Option<(i64, i64)> {
    if depth == 0 || !(lo < hi) {
        return None;
    }
    let n = lo.floor();
    if n + 1.0 < hi {
        return Some((n as i64 + 1, 1));
    }
    let frac_lo = lo - n;
    let upper = if frac_lo == 0.0 { f64::INFINITY } else { 1.0 / frac_lo };
    let (p, q) = simplest_between(1.0 / (hi - n), upper, depth - 1)?;
    // n + q/p
    let num = (n as i64).checked_mul(p)?.checked_add(q)?;
    Some((num, p))
}

/// `log(x)/log(y) < p/q` ⟺ `x^q < y^p` for `x, y > 1`.
fn below(x: &Rational, y: &Rational, p: u32, q: u32) -> bool {
    x.numer().pow(q) * y.denom().pow(p) < y.numer().pow(p) * x.denom().pow(q)
}

fn above(x: &Rational, y: &Rational, p: u32, q: u32) -> bool {
    x.numer().pow(q) * y.denom().pow(p) > y.numer().pow(p) * x.denom().pow(q)
}

fn separator_certificate(a: &LogRatio, b: &LogRatio) -> Option<(Ordering, Certificate)> {
    let (lo_r, hi_r, ordering) = if a.value() < b.value() {
        (a, b, Ordering::Less)
    } else {
        (b, a, Ordering::Greater)
    };
    let slack = 1e-12 * hi_r.value().abs().max(1.0);
    let (p, q) = simplest_between(lo_r.value() + slack, hi_r.value() - slack, 64)?;
    if q > MAX_SEPARATOR_DENOMINATOR || p <= 0 {
        return None;
    }
    let (p, q) = (u32::try_from(p).ok()?, u32::try_from(q).ok()?);
    if !(below(lo_r.argument(), lo_r.base(), p, q) && above(hi_r.argument(), hi_r.base(), p, q)) {
        return None;
    }
    let sep = Rational::ratio(p as i64, q as i64);
    let statement = format!("{lo_r} < {sep} < {hi_r}");
    Some((
        ordering,
        Certificate {
            kind: CertificateKind::RationalSeparator,
            common_base: None,
            powers: None,
            lhs: format!("({})^{q} < ({})^{p}", lo_r.argument(), lo_r.base()),
            rhs: format!("({})^{q} > ({})^{p}", hi_r.argument(), hi_r.base()),
            separator: Some(sep),
            reduced: None,
            statement,
            reduced_statement: None,
        },
    ))
}

/// Decides `a == b` exactly when the bases are commensurable; otherwise
/// looks for an exactly verified rational separator, and reports
/// `Inconclusive` when the values are within [`INCONCLUSIVE_GAP`] or no
/// separator is found.
pub fn logratio_equal(a: &LogRatio, b: &LogRatio) -> LogComparison {
    let exact = power_certificate(a, b).or_else(|| {
        if (a.value() - b.value()).abs() <= INCONCLUSIVE_GAP {
            None
        } else {
            separator_certificate(a, b)
        }
    });
    match exact {
        Some((Ordering::Equal, certificate)) => LogComparison::Equal { certificate },
        Some((ord, certificate)) => LogComparison::Distinct {
            ordering: if ord == Ordering::Less {
                OrderingLabel::Less
            } else {
                OrderingLabel::Greater
            },
            certificate,
        },
        None => LogComparison::Inconclusive {
            a: a.value(),
            b: b.value(),
        },
    }
}

/// One side of an audit: `N` maps of ratio `ρ` with exact energy scale `λ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditSubject {
    pub name: String,
    pub maps: usize,
    pub ratio: Rational,
    pub energy_scale: Rational,
}

impl AuditSubject {
    pub fn from_constants(
        name: impl Into<String>,
        maps: usize,
        ratio: Rational,
        energy_scale: Rational,
    ) -> Result<Self> {
        let s = AuditSubject {
            name: name.into(),
            maps,
            ratio,
            energy_scale,
        };
        s.dimensions()?;
        Ok(s)
    }

    /// Computes `λ` from the IFS; fails unless it is exact.
    pub fn from_ifs(ifs: &IfsSpec, max_iter: usize, tol: f64) -> Result<Self> {
        let report = walk_dimension(ifs, max_iter, tol)?;
        match report.energy_scale {
            EnergyScale::Exact(lambda) => Ok(AuditSubject {
                name: ifs.name.clone(),
                maps: ifs.len(),
                ratio: ifs.ratio().clone(),
                energy_scale: lambda,
            }),
            EnergyScale::Approximate(v) => Err(Error::Unresolved(format!(
                "{} has energy scale ≈ {v} with no exact fixed point",
                ifs.name
            ))),
        }
    }

    pub fn dimensions(&self) -> Result<DimensionReport> {
        DimensionReport::from_constants(self.maps, &self.ratio, EnergyScale::Exact(self.energy_scale.clone()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    DistinctByAlpha,
    DistinctByBeta,
    InvariantsEqual,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::DistinctByAlpha => "DISTINCT_BY_ALPHA",
            Verdict::DistinctByBeta => "DISTINCT_BY_BETA",
            Verdict::InvariantsEqual => "INVARIANTS_EQUAL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditVerdict {
    pub subjects: (String, String),
    pub alphas: (LogRatio, LogRatio),
    pub betas: (LogRatio, LogRatio),
    pub alpha_comparison: LogComparison,
    pub beta_comparison: LogComparison,
    pub verdict: Verdict,
    /// Witness for the deciding comparison.
    pub certificate: Option<Certificate>,
    pub note: &'static str,
}

pub const NOTE_DISTINCT: &str = "Lipschitz invariants differ: the two sets are not bi-Lipschitz equivalent";
pub const NOTE_EQUAL: &str =
    "alpha and beta agree: a necessary condition only, Lipschitz equivalence is NOT established";
pub const NOTE_INCONCLUSIVE: &str = "invariants could not be compared exactly (incommensurable bases)";

pub fn audit_pair(a: &AuditSubject, b: &AuditSubject) -> Result<AuditVerdict> {
    let (da, db) = (a.dimensions()?, b.dimensions()?);
    let beta = |d: &DimensionReport, s: &AuditSubject| {
        d.beta
            .clone()
            .ok_or_else(|| Error::Unresolved(format!("{} has no exact walk dimension", s.name)))
    };
    let (ba, bb) = (beta(&da, a)?, beta(&db, b)?);
    let alpha_comparison = logratio_equal(&da.alpha, &db.alpha);
    let beta_comparison = logratio_equal(&ba, &bb);
    let (verdict, certificate, note) = if alpha_comparison.is_distinct() {
        (
            Verdict::DistinctByAlpha,
            alpha_comparison.certificate().cloned(),
            NOTE_DISTINCT,
        )
    } else if beta_comparison.is_distinct() {
        (
            Verdict::DistinctByBeta,
            beta_comparison.certificate().cloned(),
            NOTE_DISTINCT,
        )
    } else if alpha_comparison.is_equal() && beta_comparison.is_equal() {
        (
            Verdict::InvariantsEqual,
            beta_comparison.certificate().cloned(),
            NOTE_EQUAL,
        )
    } else {
        (Verdict::Inconclusive, None, NOTE_INCONCLUSIVE)
    };
    Ok(AuditVerdict {
        subjects: (a.name.clone(), b.name.clone()),
        alphas: (da.alpha, db.alpha),
        betas: (ba, bb),
        alpha_comparison,
        beta_comparison,
        verdict,
        certificate,
        note,
    })
}

/// Verdicts for every unordered pair, in `(i, j)`, `i < j` order.
pub fn audit_table(subjects: &[AuditSubject]) -> Result<Vec<AuditVerdict>> {
    let mut out = Vec::new();
    for i in 0..subjects.len() {
        for j in i + 1..subjects.len() {
            out.push(audit_pair(&subjects[i], &subjects[j])?);
        }
    }
    Ok(out)
}
