//! Totient recovery and factoring from partial information about `N = pq`.
//!
//! Every routine works from the public modulus alone and ends by solving
//! `t^2 - (N - phi + 1) t + N = 0`. A candidate that does not yield a
//! nontrivial integral factorization is reported as a verified failure, so a
//! success always carries `p*q = N` and `(p-1)(q-1) = phi`.

use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Serialize, Serializer};

use crate::arith::{gcd, solve_quadratic_factors, Natural};
use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Order of a random unit: `D = x*(x, N-1)`.
    Order,
    /// Any large divisor of `phi`.
    Divisor,
    /// Known `gcd(p-1, q-1)`.
    Gcd,
    /// RSA key pair `(e, d)`.
    Ed,
    /// Divisor of `lambda` boosted by its common-prime cofactor.
    Boost,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Order => "order",
            Method::Divisor => "divisor",
            Method::Gcd => "gcd",
            Method::Ed => "ed",
            Method::Boost => "boost",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "order" => Method::Order,
            "divisor" => Method::Divisor,
            "gcd" => Method::Gcd,
            "ed" => Method::Ed,
            "boost" => Method::Boost,
            other => return Err(domain(format!("unknown recovery method {other:?}"))),
        })
    }
}

/// Intermediate values; which ones are set depends on the method.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Trace {
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "opt_dec")]
    pub w: Option<Natural>,
    #[serde(rename = "D", skip_serializing_if = "Option::is_none", serialize_with = "opt_dec")]
    pub d: Option<Natural>,
    #[serde(rename = "X", skip_serializing_if = "Option::is_none", serialize_with = "opt_dec")]
    pub x: Option<Natural>,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none", serialize_with = "opt_dec")]
    pub m: Option<Natural>,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "opt_dec")]
    pub k: Option<Natural>,
    #[serde(rename = "T", skip_serializing_if = "Option::is_none", serialize_with = "opt_dec")]
    pub t: Option<Natural>,
    #[serde(rename = "S", skip_serializing_if = "Option::is_none", serialize_with = "opt_dec")]
    pub s: Option<Natural>,
    #[serde(rename = "D_j0", skip_serializing_if = "Option::is_none", serialize_with = "opt_dec")]
    pub d_j0: Option<Natural>,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "opt_dec")]
    pub j0: Option<Natural>,
    #[serde(rename = "C_D", skip_serializing_if = "Option::is_none", serialize_with = "opt_dec")]
    pub c_d: Option<Natural>,
    #[serde(rename = "F", skip_serializing_if = "Option::is_none", serialize_with = "opt_dec")]
    pub f: Option<Natural>,
    /// The totient candidate that was put to the quadratic check.
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "opt_dec")]
    pub candidate_phi: Option<Natural>,
}

fn opt_dec<S: Serializer>(v: &Option<Natural>, s: S) -> std::result::Result<S::Ok, S::Error> {
    crate::dec::option::serialize(v, s)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Status {
    Success {
        #[serde(with = "crate::dec")]
        phi: Natural,
        #[serde(with = "crate::dec")]
        p: Natural,
        #[serde(with = "crate::dec")]
        q: Natural,
    },
    VerifiedFailure { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecoveryOutcome {
    pub method: Method,
    #[serde(flatten)]
    pub status: Status,
    pub trace: Trace,
}

impl RecoveryOutcome {
    pub fn is_success(&self) -> bool {
        matches!(self.status, Status::Success { .. })
    }

    pub fn phi(&self) -> Option<&Natural> {
        match &self.status {
            Status::Success { phi, .. } => Some(phi),
            Status::VerifiedFailure { .. } => None,
        }
    }

    pub fn factors(&self) -> Option<(&Natural, &Natural)> {
        match &self.status {
            Status::Success { p, q, .. } => Some((p, q)),
            Status::VerifiedFailure { .. } => None,
        }
    }

    fn failure(method: Method, trace: Trace, reason: impl Into<String>) -> Self {
        RecoveryOutcome {
            method,
            status: Status::VerifiedFailure {
                reason: reason.into(),
            },
            trace,
        }
    }

    /// Accepts `candidate` only if it factors `n` into `p < q`.
    fn verify(method: Method, n: &Natural, candidate: Natural, mut trace: Trace) -> Self {
        trace.candidate_phi = Some(candidate.clone());
        match factor_from_phi(n, &candidate) {
            Ok((p, q)) if p < q => RecoveryOutcome {
                method,
                status: Status::Success { phi: candidate, p, q },
                trace,
            },
            Ok(_) => Self::failure(method, trace, "candidate gives a repeated root"),
            Err(e) => Self::failure(method, trace, format!("candidate rejected: {e}")),
        }
    }
}

fn too_small(n: &Natural) -> bool {
    *n < Natural::from(3u32)
}

/// `p, q` from `N` and `phi(N)` via `p + q = N - phi + 1`.
pub fn factor_from_phi(n: &Natural, phi: &Natural) -> Result<(Natural, Natural)> {
    let n_plus_1 = n + 1u32;
    if *phi > n_plus_1 {
        return Err(Error::NoSolution("phi exceeds N + 1".into()));
    }
    solve_quadratic_factors(&(n_plus_1 - phi), n)
}

/// Recovers `phi(N)` from the order `x` of a unit:
///
/// 1. `w = (x, N-1)`
/// 2. `D = x*w`
/// 3. `X = floor((N+1)/D)`
/// 4. `phi = X*D`
pub fn recover_phi_from_order(n: &Natural, x: &Natural) -> RecoveryOutcome {
    let mut trace = Trace::default();
    if too_small(n) || x.is_zero() {
        return RecoveryOutcome::failure(Method::Order, trace, "degenerate input");
    }
    let w = gcd(x, &(n - 1u32));
    let d = x * &w;
    trace.w = Some(w);
    trace.d = Some(d.clone());
    phi_from_divisor_traced(Method::Order, n, d, trace)
}

/// `phi = floor((N+1)/D) * D`; exact whenever `D | phi` and `D > p + q`.
pub fn phi_from_large_divisor(n: &Natural, d: &Natural) -> RecoveryOutcome {
    let trace = Trace {
        d: Some(d.clone()),
        ..Trace::default()
    };
    if too_small(n) {
        return RecoveryOutcome::failure(Method::Divisor, trace, "degenerate input");
    }
    phi_from_divisor_traced(Method::Divisor, n, d.clone(), trace)
}

fn phi_from_divisor_traced(method: Method, n: &Natural, d: Natural, mut trace: Trace) -> RecoveryOutcome {
    let n_plus_1 = n + 1u32;
    if d.is_zero() {
        return RecoveryOutcome::failure(method, trace, "D is zero");
    }
    if d > n_plus_1 {
        return RecoveryOutcome::failure(method, trace, "D exceeds N + 1");
    }
    let x = &n_plus_1 / &d;
    let candidate = &x * &d;
    trace.x = Some(x);
    RecoveryOutcome::verify(method, n, candidate, trace)
}

/// Factors `N` from `D = gcd(p-1, q-1)` when `p + q < D^2`.
///
/// `N - 1 = (R_p + R_q) D + R_p R_q D^2`, so `floor((N-1)/D) mod D` is
/// `R_p + R_q` and `p + q = 2 + (R_p + R_q) D`.
pub fn factor_from_gcd(n: &Natural, d: &Natural) -> RecoveryOutcome {
    let mut trace = Trace {
        d: Some(d.clone()),
        ..Trace::default()
    };
    if too_small(n) || *d < Natural::from(2u32) {
        return RecoveryOutcome::failure(Method::Gcd, trace, "degenerate input");
    }
    let t = (n - 1u32) / d;
    let s = &t % d;
    let sum = &s * d + 2u32;
    trace.t = Some(t);
    trace.s = Some(s);
    let n_plus_1 = n + 1u32;
    if sum > n_plus_1 {
        return RecoveryOutcome::failure(Method::Gcd, trace, "p + q candidate exceeds N + 1");
    }
    RecoveryOutcome::verify(Method::Gcd, n, n_plus_1 - sum, trace)
}

/// Recovers `phi` from an RSA key pair: `M = ed - 1`, `k = floor(M/N) + 1`,
/// `phi = M / k`.
pub fn phi_from_ed(n: &Natural, e: &Natural, d: &Natural) -> RecoveryOutcome {
    let mut trace = Trace::default();
    let ed = e * d;
    if too_small(n) || ed <= Natural::one() {
        return RecoveryOutcome::failure(Method::Ed, trace, "degenerate input");
    }
    let m = ed - 1u32;
    let k = &m / n + 1u32;
    trace.m = Some(m.clone());
    trace.k = Some(k.clone());
    let (candidate, rem) = m.div_rem(&k);
    if !rem.is_zero() {
        return RecoveryOutcome::failure(Method::Ed, trace, "k does not divide M");
    }
    RecoveryOutcome::verify(Method::Ed, n, candidate, trace)
}

/// Iterates `D <- D / (D, N-1)` to its fixpoint. Returns the fixpoint and
/// the number of strict reductions taken.
pub fn dj_fixpoint(d: &Natural, n: &Natural) -> Result<(Natural, u32)> {
    if d.is_zero() {
        return Err(domain("D must be positive"));
    }
    if *n < Natural::from(2u32) {
        return Err(domain("N must be at least 2"));
    }
    let n_minus_1 = n - 1u32;
    let mut current = d.clone();
    let mut steps = 0;
    loop {
        let g = gcd(&current, &n_minus_1);
        if g.is_one() {
            return Ok((current, steps));
        }
        current /= g;
        steps += 1;
    }
}

/// Boosts a divisor `D` of `lambda(N)` by `F = (C_D, N-1)`, where
/// `C_D = D / D_j0`, then reads `phi = floor((N-1)/(D F)) * D F`.
///
/// Exact when `D_j0 > (p + q - 2) / F^2`.
pub fn factor_with_cofactor_boost(n: &Natural, d: &Natural) -> RecoveryOutcome {
    let mut trace = Trace {
        d: Some(d.clone()),
        ..Trace::default()
    };
    if too_small(n) || d.is_zero() {
        return RecoveryOutcome::failure(Method::Boost, trace, "degenerate input");
    }
    let (d_j0, j0) = dj_fixpoint(d, n).expect("inputs checked above");
    let c_d = d / &d_j0;
    let n_minus_1 = n - 1u32;
    let f = gcd(&c_d, &n_minus_1);
    let df = d * &f;
    let x = &n_minus_1 / &df;
    trace.d_j0 = Some(d_j0);
    trace.j0 = Some(Natural::from(j0));
    trace.c_d = Some(c_d);
    trace.f = Some(f);
    trace.x = Some(x.clone());
    if x.is_zero() {
        return RecoveryOutcome::failure(Method::Boost, trace, "D*F exceeds N - 1");
    }
    RecoveryOutcome::verify(Method::Boost, n, x * df, trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(v: u64) -> Natural {
        Natural::from(v)
    }

    fn assert_success(o: &RecoveryOutcome, phi: u64, p: u64, q: u64) {
        assert_eq!(
            o.status,
            Status::Success { phi: n(phi), p: n(p), q: n(q) },
            "{o:?}"
        );
    }

    #[test]
    fn order_examples() {
        let o = recover_phi_from_order(&n(143), &n(60));
        assert_success(&o, 120, 11, 13);
        assert_eq!((o.trace.w.clone(), o.trace.d.clone(), o.trace.x.clone()), (Some(n(2)), Some(n(120)), Some(n(1))));

        let o = recover_phi_from_order(&n(77), &n(30));
        assert_success(&o, 60, 7, 11);
        assert_eq!((o.trace.w.clone(), o.trace.d.clone(), o.trace.x.clone()), (Some(n(2)), Some(n(60)), Some(n(1))));

        let o = recover_phi_from_order(&n(143), &n(2));
        assert!(!o.is_success());
        assert_eq!(o.trace.d, Some(n(4)));
        assert_eq!(o.trace.x, Some(n(36)));
        assert_eq!(o.trace.candidate_phi, Some(n(144)));
    }

    #[test]
    fn order_degenerate_inputs() {
        assert!(!recover_phi_from_order(&n(143), &n(0)).is_success());
        assert!(!recover_phi_from_order(&n(1), &n(5)).is_success());
        // D = 200*2 > 144.
        let o = recover_phi_from_order(&n(143), &n(200));
        assert!(matches!(o.status, Status::VerifiedFailure { ref reason } if reason.contains("exceeds")));
    }

    #[test]
    fn large_divisor_examples() {
        assert_success(&phi_from_large_divisor(&n(143), &n(120)), 120, 11, 13);
        let o = phi_from_large_divisor(&n(481), &n(216));
        assert_success(&o, 432, 13, 37);
        assert_eq!(o.trace.x, Some(n(2)));
        assert!(!phi_from_large_divisor(&n(143), &n(0)).is_success());
        assert!(!phi_from_large_divisor(&n(143), &n(145)).is_success());
    }

    #[test]
    fn factor_from_phi_examples() {
        assert_eq!(factor_from_phi(&n(143), &n(120)).unwrap(), (n(11), n(13)));
        assert_eq!(factor_from_phi(&n(481), &n(432)).unwrap(), (n(13), n(37)));
        assert!(factor_from_phi(&n(143), &n(119)).is_err());
        assert!(factor_from_phi(&n(143), &n(145)).is_err());
        assert!(factor_from_phi(&n(143), &n(0)).is_err());
    }

    #[test]
    fn gcd_examples() {
        let o = factor_from_gcd(&n(481), &n(12));
        assert_success(&o, 432, 13, 37);
        assert_eq!((o.trace.t.clone(), o.trace.s.clone()), (Some(n(40)), Some(n(4))));

        let o = factor_from_gcd(&n(1891), &n(30));
        assert_success(&o, 1800, 31, 61);
        assert_eq!((o.trace.t.clone(), o.trace.s.clone()), (Some(n(63)), Some(n(3))));

        let o = factor_from_gcd(&n(143), &n(2));
        assert!(!o.is_success());
        assert_eq!((o.trace.t.clone(), o.trace.s.clone()), (Some(n(71)), Some(n(1))));
        assert!(!factor_from_gcd(&n(143), &n(1)).is_success());
    }

    #[test]
    fn ed_examples() {
        let o = phi_from_ed(&n(667), &n(3), &n(411));
        assert_success(&o, 616, 23, 29);
        assert_eq!((o.trace.m.clone(), o.trace.k.clone()), (Some(n(1232)), Some(n(2))));

        let o = phi_from_ed(&n(2173), &n(3), &n(1387));
        assert_success(&o, 2080, 41, 53);
        assert_eq!((o.trace.m.clone(), o.trace.k.clone()), (Some(n(4160)), Some(n(2))));

        let o = phi_from_ed(&n(143), &n(7), &n(103));
        assert_success(&o, 120, 11, 13);
        assert_eq!((o.trace.m.clone(), o.trace.k.clone()), (Some(n(720)), Some(n(6))));

        assert!(!phi_from_ed(&n(143), &n(1), &n(1)).is_success());
        // M = 20, k = 1, candidate 20 is not phi(143).
        assert!(!phi_from_ed(&n(143), &n(3), &n(7)).is_success());
    }

    #[test]
    fn ed_k_not_dividing_m() {
        // M = 3*50 - 1 = 149, k = 2.
        let o = phi_from_ed(&n(143), &n(3), &n(50));
        assert!(matches!(o.status, Status::VerifiedFailure { ref reason } if reason.contains("k does not divide")));
    }

    #[test]
    fn fixpoint_examples() {
        assert_eq!(dj_fixpoint(&n(60), &n(143)).unwrap(), (n(15), 2));
        assert_eq!(dj_fixpoint(&n(36), &n(481)).unwrap(), (n(1), 2));
        assert_eq!(dj_fixpoint(&n(1), &n(143)).unwrap(), (n(1), 0));
        assert!(dj_fixpoint(&n(0), &n(143)).is_err());
        assert!(dj_fixpoint(&n(5), &n(1)).is_err());
    }

    #[test]
    fn boost_examples() {
        let o = factor_with_cofactor_boost(&n(143), &n(60));
        assert_success(&o, 120, 11, 13);
        assert_eq!(
            (o.trace.d_j0.clone(), o.trace.c_d.clone(), o.trace.f.clone(), o.trace.x.clone()),
            (Some(n(15)), Some(n(4)), Some(n(2)), Some(n(1)))
        );

        let o = factor_with_cofactor_boost(&n(481), &n(36));
        assert_success(&o, 432, 13, 37);
        assert_eq!(
            (o.trace.d_j0.clone(), o.trace.c_d.clone(), o.trace.f.clone(), o.trace.x.clone()),
            (Some(n(1)), Some(n(36)), Some(n(12)), Some(n(1)))
        );

        let o = factor_with_cofactor_boost(&n(143), &n(4));
        assert!(!o.is_success());
        assert_eq!(
            (o.trace.d_j0.clone(), o.trace.c_d.clone(), o.trace.f.clone(), o.trace.x.clone()),
            (Some(n(1)), Some(n(4)), Some(n(2)), Some(n(17)))
        );
        assert_eq!(o.trace.candidate_phi, Some(n(136)));
    }

    #[test]
    fn outcome_json() {
        let v = serde_json::to_value(recover_phi_from_order(&n(143), &n(60))).unwrap();
        assert_eq!(
            v,
            serde_json::json!({
                "method": "order",
                "status": "success",
                "phi": "120",
                "p": "11",
                "q": "13",
                "trace": {"w": "2", "D": "120", "X": "1", "candidate_phi": "120"}
            })
        );
        let v = serde_json::to_value(recover_phi_from_order(&n(143), &n(2))).unwrap();
        assert_eq!(v["status"], "verified_failure");
        assert!(v.get("phi").is_none());
        assert_eq!(v["trace"]["candidate_phi"], "144");
    }

    #[test]
    fn method_names_round_trip() {
        for m in [Method::Order, Method::Divisor, Method::Gcd, Method::Ed, Method::Boost] {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("shor".parse::<Method>().is_err());
    }
}
