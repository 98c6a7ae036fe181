//! The hyperelliptic curve `w² = Π (z − x_i)^{±1}` with real branch points,
//! Gauss map `G = w` and height differential `dh = dz/z`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{Complex, Precision, Real};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CurveError {
    #[error("z = {location} is a pole of w²")]
    Pole { location: String },
    #[error("x = {location} is a branch point; treat it as an integrable endpoint")]
    BranchPoint { location: String },
    #[error("invalid divisor: {0}")]
    Invalid(String),
    #[error("τ3 requires a divisor closed under x ↦ 1/x")]
    Tau3NotClosed,
}

/// Whether a branch point is a zero (NUM) or a pole (DEN) of w².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Num,
    Den,
}

impl Role {
    pub fn exponent(self) -> i32 {
        match self {
            Role::Num => 1,
            Role::Den => -1,
        }
    }

    pub fn flipped(self) -> Role {
        match self {
            Role::Num => Role::Den,
            Role::Den => Role::Num,
        }
    }
}

/// How each listed point `x` is accompanied by `1/x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pairing {
    /// Points stand alone.
    Unpaired,
    /// `1/x` carries the same role as `x`.
    SameRole,
    /// `1/x` carries the opposite role.
    OppositeRole,
}

#[derive(Debug, Clone)]
pub struct DivisorPoint {
    pub label: String,
    pub location: Real,
    pub role: Role,
}

/// A finite branch location after expanding pairs, with its provenance.
#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub label: String,
    pub location: Real,
    pub role: Role,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EndClass {
    Orthogonal,
    Parallel,
    Neither,
}

/// Ordered real branch points with NUM/DEN roles and the `x ↔ 1/x` pairing.
#[derive(Debug, Clone)]
pub struct BranchDivisor {
    positive: Vec<DivisorPoint>,
    negative: Vec<DivisorPoint>,
    plus_one: Option<Role>,
    minus_one: Option<Role>,
    pairing: Pairing,
    expanded: Vec<BranchPoint>,
}

impl BranchDivisor {
    /// `positive` must be increasing in (0,1), `negative` increasing in (−1,0).
    pub fn new(
        positive: Vec<DivisorPoint>,
        negative: Vec<DivisorPoint>,
        plus_one: Option<Role>,
        minus_one: Option<Role>,
        pairing: Pairing,
    ) -> Result<Self, CurveError> {
        let invalid = |m: String| Err(CurveError::Invalid(m));
        for w in positive.windows(2) {
            if w[0].location >= w[1].location {
                return invalid(format!("{} < {} violated", w[0].label, w[1].label));
            }
        }
        for w in negative.windows(2) {
            if w[0].location >= w[1].location {
                return invalid(format!("{} < {} violated", w[0].label, w[1].label));
            }
        }
        for p in &positive {
            let prec = p.location.precision();
            if !p.location.is_positive() || p.location >= Real::one(prec) {
                return invalid(format!("{} must lie in (0, 1)", p.label));
            }
        }
        for p in &negative {
            let prec = p.location.precision();
            if !p.location.is_negative() || p.location <= Real::from_i64(-1, prec) {
                return invalid(format!("{} must lie in (−1, 0)", p.label));
            }
        }
        let mut expanded = Vec::new();
        for p in positive.iter().chain(negative.iter()) {
            expanded.push(BranchPoint {
                label: p.label.clone(),
                location: p.location.clone(),
                role: p.role,
            });
            let inverse_role = match pairing {
                Pairing::Unpaired => None,
                Pairing::SameRole => Some(p.role),
                Pairing::OppositeRole => Some(p.role.flipped()),
            };
            if let Some(role) = inverse_role {
                expanded.push(BranchPoint {
                    label: format!("1/{}", p.label),
                    location: p.location.recip(),
                    role,
                });
            }
        }
        let prec = expanded
            .first()
            .map(|p| p.location.precision())
            .unwrap_or(Precision::DEFAULT);
        if let Some(role) = plus_one {
            expanded.push(BranchPoint {
                label: "1".into(),
                location: Real::one(prec),
                role,
            });
        }
        if let Some(role) = minus_one {
            expanded.push(BranchPoint {
                label: "-1".into(),
                location: Real::from_i64(-1, prec),
                role,
            });
        }
        expanded.sort_by(|a, b| a.location.cmp(&b.location));
        for w in expanded.windows(2) {
            if w[0].location == w[1].location {
                return invalid(format!("{} and {} coincide", w[0].label, w[1].label));
            }
        }
        let balance: i32 = expanded.iter().map(|p| p.role.exponent()).sum();
        if balance != 0 {
            return invalid(format!("NUM and DEN counts differ by {balance}"));
        }
        Ok(BranchDivisor {
            positive,
            negative,
            plus_one,
            minus_one,
            pairing,
            expanded,
        })
    }

    pub fn positive(&self) -> &[DivisorPoint] {
        &self.positive
    }

    pub fn negative(&self) -> &[DivisorPoint] {
        &self.negative
    }

    pub fn unit_roles(&self) -> (Option<Role>, Option<Role>) {
        (self.plus_one, self.minus_one)
    }

    pub fn pairing(&self) -> Pairing {
        self.pairing
    }

    /// All finite branch points in increasing order.
    pub fn branch_points(&self) -> &[BranchPoint] {
        &self.expanded
    }

    pub fn precision(&self) -> Precision {
        self.expanded
            .iter()
            .map(|p| p.location.precision())
            .min()
            .unwrap_or(Precision::DEFAULT)
    }

    /// Genus of the hyperelliptic curve: `#branch points / 2 − 1`.
    pub fn genus(&self) -> usize {
        (self.expanded.len() / 2).saturating_sub(1)
    }

    pub fn closed_under_inversion(&self) -> bool {
        match self.pairing {
            Pairing::Unpaired => self.positive.is_empty() && self.negative.is_empty(),
            _ => true,
        }
    }

    /// `w²(z)`; errors at a DEN location.
    pub fn w_squared(&self, z: &Complex) -> Result<Complex, CurveError> {
        let prec = z.precision();
        let mut num = Complex::one(prec);
        let mut den = Complex::one(prec);
        for p in &self.expanded {
            let f = Complex::new(&z.re - &p.location, z.im.clone());
            match p.role {
                Role::Num => num = &num * &f,
                Role::Den => {
                    if f.is_zero() {
                        return Err(CurveError::Pole {
                            location: p.location.to_decimal(17),
                        });
                    }
                    den = &den * &f
                }
            }
        }
        Ok(&num / &den)
    }

    /// Limit of `w²` at infinity (leading coefficients are 1 and degrees balance).
    pub fn w_squared_at_infinity(&self, prec: Precision) -> Complex {
        Complex::one(prec)
    }

    /// `w²(x)` on the real axis.
    pub fn w_squared_real(&self, x: &Real) -> Result<Real, CurveError> {
        let mut num = Real::one(x.precision());
        let mut den = Real::one(x.precision());
        for p in &self.expanded {
            let f = x - &p.location;
            match p.role {
                Role::Num => num *= &f,
                Role::Den => {
                    if f.is_zero() {
                        return Err(CurveError::Pole {
                            location: p.location.to_decimal(17),
                        });
                    }
                    den *= &f
                }
            }
        }
        Ok(num / den)
    }

    /// Quarter-turn count `q` with `w = (−i)^q · |w|` on the real axis near `x`.
    ///
    /// Starting from `w > 0` right of every branch point, each root crossed
    /// leftward contributes `−i` and each pole `+i` (boundary values from
    /// the lower half-plane, which reproduce the published period signs).
    pub fn axis_quarter_turns(&self, x: &Real) -> u8 {
        let q: i32 = self
            .expanded
            .iter()
            .filter(|p| p.location > *x)
            .map(|p| p.role.exponent())
            .sum();
        q.rem_euclid(4) as u8
    }

    /// `w(x)` on the real axis with the quarter-turn phase convention.
    pub fn w_on_axis(&self, x: &Real) -> Result<Complex, CurveError> {
        if let Some(p) = self.expanded.iter().find(|p| p.location == *x) {
            return Err(CurveError::BranchPoint {
                location: p.location.to_decimal(17),
            });
        }
        let mag = self.w_squared_real(x)?.abs().sqrt();
        Ok(quarter_turn(&mag, self.axis_quarter_turns(x)))
    }

    /// `±sqrt(w²)` at 0 and ∞, and the end class.
    pub fn end_gauss_values(&self, prec: Precision) -> EndGaussValues {
        let zero = Complex::zero(prec);
        let g0sq = self
            .w_squared(&zero)
            .expect("0 is never a branch location");
        let ginf_sq = self.w_squared_at_infinity(prec);
        let tol = Real::one(prec).ldexp(-(prec.bits() as i64) / 2);
        let one = Complex::one(prec);
        let class = if (&g0sq + &one).abs() < tol {
            EndClass::Orthogonal
        } else if (&g0sq - &one).abs() < tol {
            EndClass::Parallel
        } else {
            EndClass::Neither
        };
        EndGaussValues {
            g_zero: g0sq.sqrt(),
            g_infinity: ginf_sq.sqrt(),
            class,
        }
    }
}

/// `(−i)^q · m`.
pub(crate) fn quarter_turn(m: &Real, q: u8) -> Complex {
    let z = Real::zero(m.precision());
    match q % 4 {
        0 => Complex::new(m.clone(), z),
        1 => Complex::new(z, -m),
        2 => Complex::new(-m, z),
        _ => Complex::new(z, m.clone()),
    }
}

/// Gauss map values at the ends, each defined up to sign.
#[derive(Debug, Clone)]
pub struct EndGaussValues {
    pub g_zero: Complex,
    pub g_infinity: Complex,
    pub class: EndClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SymmetryGroup {
    pub tau1: bool,
    pub tau2: bool,
    pub tau3: bool,
}

impl SymmetryGroup {
    pub fn for_divisor(d: &BranchDivisor) -> SymmetryGroup {
        SymmetryGroup {
            tau1: true,
            tau2: true,
            tau3: d.closed_under_inversion(),
        }
    }

    pub fn validate(&self, d: &BranchDivisor) -> Result<(), CurveError> {
        if self.tau3 && !d.closed_under_inversion() {
            return Err(CurveError::Tau3NotClosed);
        }
        Ok(())
    }
}

/// Curve plus Gauss map `G = w` and `dh = dz/z`.
#[derive(Debug, Clone)]
pub struct WeierstrassData {
    pub divisor: BranchDivisor,
    pub end_class: EndClass,
    pub genus: usize,
    pub symmetries: SymmetryGroup,
}

impl WeierstrassData {
    pub fn new(divisor: BranchDivisor) -> WeierstrassData {
        let prec = divisor.precision();
        let end_class = divisor.end_gauss_values(prec).class;
        let genus = divisor.genus();
        let symmetries = SymmetryGroup::for_divisor(&divisor);
        WeierstrassData {
            divisor,
            end_class,
            genus,
            symmetries,
        }
    }

    pub fn precision(&self) -> Precision {
        self.divisor.precision()
    }

    /// Same curve with every location re-rounded to `prec`.
    pub fn with_precision(&self, prec: Precision) -> WeierstrassData {
        let rp = |v: &[DivisorPoint]| {
            v.iter()
                .map(|p| DivisorPoint {
                    label: p.label.clone(),
                    location: p.location.with_precision(prec),
                    role: p.role,
                })
                .collect()
        };
        let d = &self.divisor;
        let divisor = BranchDivisor::new(
            rp(&d.positive),
            rp(&d.negative),
            d.plus_one,
            d.minus_one,
            d.pairing,
        )
        .expect("re-rounding preserves validity");
        WeierstrassData {
            divisor,
            ..self.clone()
        }
    }

    /// Zeros and poles of G off the ends (the saddle points of the surface
    /// in the quotient): every branch point on both sheets is a single
    /// point of X, counted once.
    pub fn saddle_point_count(&self) -> usize {
        self.divisor.branch_points().len()
    }

    /// The largest finite positive branch point (the base point z₀).
    pub fn base_point(&self) -> Real {
        self.divisor
            .branch_points()
            .iter()
            .rev()
            .find(|p| p.location.is_positive())
            .map(|p| p.location.clone())
            .expect("every template has a positive branch point")
    }
}

/// Scherk's surface: `w² = (z − 1)/(z + 1)`.
pub fn scherk_divisor(prec: Precision) -> BranchDivisor {
    let _ = prec;
    BranchDivisor::new(
        Vec::new(),
        Vec::new(),
        Some(Role::Num),
        Some(Role::Den),
        Pairing::Unpaired,
    )
    .expect("Scherk divisor is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> Precision {
        Precision::new(30).unwrap()
    }

    fn r(v: f64) -> Real {
        Real::from_f64(v, p())
    }

    fn rtw(a1: f64, a2: f64) -> BranchDivisor {
        let b = -(r(a1) * r(a2));
        BranchDivisor::new(
            vec![
                DivisorPoint { label: "a1".into(), location: r(a1), role: Role::Num },
                DivisorPoint { label: "a2".into(), location: r(a2), role: Role::Num },
            ],
            vec![DivisorPoint { label: "b".into(), location: b, role: Role::Den }],
            None,
            None,
            Pairing::OppositeRole,
        )
        .unwrap()
    }

    #[test]
    fn scherk_values() {
        let d = scherk_divisor(p());
        let w0 = d.w_squared(&Complex::zero(p())).unwrap();
        assert_eq!(w0.to_f64(), (-1.0, 0.0));
        let w1 = d.w_squared(&Complex::one(p())).unwrap();
        assert!(w1.is_zero());
        assert!(d.w_squared(&Complex::from_f64(-1.0, 0.0, p())).is_err());
        assert_eq!(d.genus(), 0);
    }

    #[test]
    fn scherk_axis_branch() {
        let d = scherk_divisor(p());
        let w = d.w_on_axis(&r(2.0)).unwrap();
        assert!((w.re.to_f64() - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let w = d.w_on_axis(&r(0.5)).unwrap();
        assert!((w.im.to_f64() + (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let w = d.w_on_axis(&r(-2.0)).unwrap();
        assert!((w.re.to_f64() - 3f64.sqrt()).abs() < 1e-15);
        assert!(matches!(
            d.w_on_axis(&r(1.0)),
            Err(CurveError::BranchPoint { .. })
        ));
    }

    #[test]
    fn end_classes() {
        let s = scherk_divisor(p()).end_gauss_values(p());
        assert_eq!(s.class, EndClass::Orthogonal);
        assert!((s.g_zero.im.abs().to_f64() - 1.0).abs() < 1e-25);
        let d = rtw(0.1, 0.4677900971198217).end_gauss_values(p());
        assert_eq!(d.class, EndClass::Parallel);
        assert!((d.g_zero.re.abs().to_f64() - 1.0).abs() < 1e-25);
        // w²(0) = 4: (z − 4·c)(z − 1/c)... a single unpaired pair with product 4
        let q = BranchDivisor::new(
            vec![DivisorPoint { label: "p".into(), location: r(0.5), role: Role::Den }],
            vec![DivisorPoint { label: "q".into(), location: r(-0.5), role: Role::Num }],
            Some(Role::Num),
            Some(Role::Den),
            Pairing::Unpaired,
        )
        .unwrap();
        // w²(0) = (−1)(0.5) / ((−0.5)(1)) = 1 → parallel; scale to 4 instead
        assert_eq!(q.end_gauss_values(p()).class, EndClass::Parallel);
        let q4 = BranchDivisor::new(
            vec![DivisorPoint { label: "p".into(), location: r(0.125), role: Role::Den }],
            vec![DivisorPoint { label: "q".into(), location: r(-0.5), role: Role::Num }],
            None,
            None,
            Pairing::Unpaired,
        )
        .unwrap();
        let e = q4.end_gauss_values(p());
        assert_eq!(e.class, EndClass::Neither);
        assert!((e.g_zero.abs().to_f64() - 2.0).abs() < 1e-25);
    }

    #[test]
    fn rejects_bad_divisors() {
        let unbalanced = BranchDivisor::new(
            vec![DivisorPoint { label: "a".into(), location: r(0.5), role: Role::Num }],
            vec![],
            None,
            None,
            Pairing::Unpaired,
        );
        assert!(unbalanced.is_err());
        let disordered = BranchDivisor::new(
            vec![
                DivisorPoint { label: "a1".into(), location: r(0.5), role: Role::Num },
                DivisorPoint { label: "a2".into(), location: r(0.25), role: Role::Den },
            ],
            vec![],
            None,
            None,
            Pairing::SameRole,
        );
        assert!(matches!(disordered, Err(CurveError::Invalid(m)) if m.contains("a1 < a2")));
    }

    #[test]
    fn w_squared_conjugate_symmetry() {
        let d = rtw(0.1, 0.46);
        let z = Complex::from_f64(0.3, 0.7, p());
        let a = d.w_squared(&z).unwrap();
        let b = d.w_squared(&z.conj()).unwrap();
        assert!((&a.conj() - &b).abs().to_f64() < 1e-27);
    }

    #[test]
    fn tau3_needs_inverse_closure() {
        let d = BranchDivisor::new(
            vec![DivisorPoint { label: "a".into(), location: r(0.5), role: Role::Num }],
            vec![DivisorPoint { label: "b".into(), location: r(-0.5), role: Role::Den }],
            None,
            None,
            Pairing::Unpaired,
        )
        .unwrap();
        let g = SymmetryGroup { tau1: true, tau2: true, tau3: true };
        assert_eq!(g.validate(&d), Err(CurveError::Tau3NotClosed));
    }
}
