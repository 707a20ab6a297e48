//! The N=1 super-Virasoro algebra (and its Virasoro subalgebra): graded
//! brackets, PBW normal ordering, highest-weight Verma modules, singular
//! vectors and the contravariant (Gram) form.
//!
//! Modes carry doubled indices. Within a PBW monomial, modes are sorted by
//! increasing index, `L` before `G` at equal index, and no `G` repeats.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use num::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::{Alphabet, GrassmannNumber, Parity};
use crate::linalg::{Matrix, Span};
use crate::poly::{Monomial, Poly};
use crate::scalar::{self, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sector {
    /// Only `L` modes.
    Virasoro,
    /// Half-integer `G` modes.
    #[serde(rename = "ns")]
    NeveuSchwarz,
    /// Integer `G` modes.
    Ramond,
}

impl std::str::FromStr for Sector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "virasoro" => Ok(Sector::Virasoro),
            "ns" => Ok(Sector::NeveuSchwarz),
            "ramond" | "r" => Ok(Sector::Ramond),
            _ => Err(Error::Parse(format!("unknown sector {s:?}"))),
        }
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sector::Virasoro => "virasoro",
            Sector::NeveuSchwarz => "ns",
            Sector::Ramond => "ramond",
        })
    }
}

impl Sector {
    pub fn validate(self, m: Mode) -> Result<()> {
        let ok = match (m.kind, self) {
            (ModeKind::L, _) => m.index2 % 2 == 0,
            (ModeKind::G, Sector::Virasoro) => false,
            (ModeKind::G, Sector::NeveuSchwarz) => m.index2 % 2 != 0,
            (ModeKind::G, Sector::Ramond) => m.index2 % 2 == 0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidMode(format!("{m} in the {self} sector")))
        }
    }

    /// Spacing of the level grading, doubled.
    pub fn level_step2(self) -> i32 {
        match self {
            Sector::NeveuSchwarz => 1,
            _ => 2,
        }
    }

    /// All modes of this sector with doubled index in `lo..=hi`, PBW-sorted.
    pub fn modes_between(self, lo: i32, hi: i32) -> Vec<Mode> {
        let mut out = Vec::new();
        for i2 in lo..=hi {
            for m in [Mode::new(ModeKind::L, i2), Mode::new(ModeKind::G, i2)] {
                if self.validate(m).is_ok() {
                    out.push(m);
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModeKind {
    L,
    G,
}

/// `L_n` or `G_r`, ordered by index then kind (the PBW order).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mode {
    pub index2: i32,
    pub kind: ModeKind,
}

impl Mode {
    pub fn new(kind: ModeKind, index2: i32) -> Self {
        Mode { index2, kind }
    }

    pub fn l(n: i32) -> Self {
        Mode::new(ModeKind::L, 2 * n)
    }

    /// `G_r` with `r = r2/2`.
    pub fn g2(r2: i32) -> Self {
        Mode::new(ModeKind::G, r2)
    }

    /// `G_r` with integer `r`.
    pub fn g(r: i32) -> Self {
        Mode::new(ModeKind::G, 2 * r)
    }

    pub fn is_odd(self) -> bool {
        self.kind == ModeKind::G
    }

    pub fn is_raising(self) -> bool {
        self.index2 > 0
    }

    pub fn is_lowering(self) -> bool {
        self.index2 < 0
    }

    pub fn adjoint(self) -> Mode {
        Mode::new(self.kind, -self.index2)
    }

    pub fn index(self) -> Scalar {
        scalar::frac(self.index2 as i64, 2)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            ModeKind::L => "L",
            ModeKind::G => "G",
        };
        write!(f, "{k}{}", scalar::half_str(self.index2))
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let kind = match s.chars().next() {
            Some('L') => ModeKind::L,
            Some('G') => ModeKind::G,
            _ => return Err(Error::Parse(format!("bad mode {s:?}"))),
        };
        Ok(Mode::new(kind, scalar::parse_half(&s[1..])?))
    }
}

pub type Word = Vec<Mode>;

pub fn word_to_string(w: &[Mode]) -> String {
    if w.is_empty() {
        return "1".into();
    }
    w.iter().map(Mode::to_string).collect::<Vec<_>>().join(" ")
}

pub fn parse_word(s: &str) -> Result<Word> {
    if s.trim() == "1" {
        return Ok(Vec::new());
    }
    s.split_whitespace().map(str::parse).collect()
}

fn word_is_odd(w: &[Mode]) -> bool {
    w.iter().filter(|m| m.is_odd()).count() % 2 == 1
}

/// Doubled level of a word: minus the sum of doubled indices.
pub fn level2(w: &[Mode]) -> i32 {
    -w.iter().map(|m| m.index2).sum::<i32>()
}

/// A bracket value `λ·mode + central`.
#[derive(Clone, Debug, PartialEq)]
pub struct Bracket {
    pub mode: Option<(Mode, Scalar)>,
    pub central: Scalar,
}

/// Graded bracket: commutator unless both modes are `G`, in which case the
/// anticommutator.
pub fn bracket(x: Mode, y: Mode, c: &Scalar, sector: Sector) -> Result<Bracket> {
    sector.validate(x)?;
    sector.validate(y)?;
    let zero = Scalar::zero();
    let (mode, central) = match (x.kind, y.kind) {
        (ModeKind::L, ModeKind::L) => {
            let (n, m) = ((x.index2 / 2) as i64, (y.index2 / 2) as i64);
            let central = if n + m == 0 { c * scalar::frac(n * (n * n - 1), 12) } else { zero };
            (Some((Mode::l((n + m) as i32), scalar::int(n - m))), central)
        }
        (ModeKind::L, ModeKind::G) => {
            let coeff = scalar::frac(x.index2 as i64 - 2 * y.index2 as i64, 4);
            (Some((Mode::g2(x.index2 + y.index2), coeff)), zero)
        }
        (ModeKind::G, ModeKind::L) => {
            let coeff = -scalar::frac(y.index2 as i64 - 2 * x.index2 as i64, 4);
            (Some((Mode::g2(x.index2 + y.index2), coeff)), zero)
        }
        (ModeKind::G, ModeKind::G) => {
            let s2 = x.index2 + y.index2;
            let central = if s2 == 0 {
                let r2 = x.index2 as i64;
                c / scalar::int(3) * (scalar::frac(r2 * r2, 4) - scalar::frac(1, 4))
            } else {
                zero
            };
            (Some((Mode::new(ModeKind::L, s2), scalar::int(2))), central)
        }
    };
    let mode = mode.filter(|(_, k)| !k.is_zero());
    Ok(Bracket { mode, central })
}

/// Graded Jacobi sum for homogeneous modes; returns the mode coefficients and
/// central part, all of which vanish in a Lie superalgebra.
pub fn jacobi_residual(x: Mode, y: Mode, z: Mode, c: &Scalar, sector: Sector) -> Result<(BTreeMap<Mode, Scalar>, Scalar)> {
    let sign = |a: Mode, b: Mode| if a.is_odd() && b.is_odd() { -Scalar::one() } else { Scalar::one() };
    let mut modes: BTreeMap<Mode, Scalar> = BTreeMap::new();
    let mut central = Scalar::zero();
    for (a, b, d) in [(x, y, z), (y, z, x), (z, x, y)] {
        // (−1)^{|a||d|} [a, [b, d}}
        let s = sign(a, d);
        if let Some((w, k)) = bracket(b, d, c, sector)?.mode {
            let inner = bracket(a, w, c, sector)?;
            if let Some((m, l)) = inner.mode {
                *modes.entry(m).or_insert_with(Scalar::zero) += &s * &k * l;
            }
            central += &s * &k * inner.central;
        }
    }
    modes.retain(|_, v| !v.is_zero());
    Ok((modes, central))
}

/// Rewrites words into PBW normal form with rational coefficients.
fn normal_order_rational(sector: Sector, c: &Scalar, w: Word) -> Result<BTreeMap<Word, Scalar>> {
    let mut out: BTreeMap<Word, Scalar> = BTreeMap::new();
    let mut stack = vec![(w, Scalar::one())];
    while let Some((w, k)) = stack.pop() {
        if k.is_zero() {
            continue;
        }
        let violation = w.windows(2).position(|p| p[0] > p[1] || (p[0] == p[1] && p[0].is_odd()));
        let Some(i) = violation else {
            let e = out.entry(w).or_insert_with(Scalar::zero);
            *e += k;
            continue;
        };
        let (x, y) = (w[i], w[i + 1]);
        let splice = |mid: &[Mode]| -> Word {
            let mut v = w[..i].to_vec();
            v.extend_from_slice(mid);
            v.extend_from_slice(&w[i + 2..]);
            v
        };
        let br = bracket(x, y, c, sector)?;
        if x == y {
            // G_r G_r = ½{G_r, G_r}
            let half = scalar::frac(1, 2);
            if let Some((m, l)) = br.mode {
                stack.push((splice(&[m]), &k * &l * &half));
            }
            stack.push((splice(&[]), &k * &br.central * &half));
        } else {
            let sign = if x.is_odd() && y.is_odd() { -Scalar::one() } else { Scalar::one() };
            stack.push((splice(&[y, x]), &k * &sign));
            if let Some((m, l)) = br.mode {
                stack.push((splice(&[m]), &k * &l));
            }
            stack.push((splice(&[]), &k * &br.central));
        }
    }
    out.retain(|_, v| !v.is_zero());
    Ok(out)
}

/// Element of the universal enveloping superalgebra with Grassmann
/// coefficients (written on the left of each word).
#[derive(Clone, Debug)]
pub struct AlgebraElement {
    pub sector: Sector,
    pub c: Scalar,
    alphabet: Arc<Alphabet>,
    terms: BTreeMap<Word, GrassmannNumber>,
}

impl PartialEq for AlgebraElement {
    fn eq(&self, other: &Self) -> bool {
        self.sector == other.sector && self.c == other.c && self.terms == other.terms
    }
}

impl AlgebraElement {
    pub fn zero(sector: Sector, c: Scalar, alphabet: &Arc<Alphabet>) -> Self {
        AlgebraElement { sector, c, alphabet: alphabet.clone(), terms: BTreeMap::new() }
    }

    pub fn from_word(sector: Sector, c: Scalar, coeff: GrassmannNumber, word: Word) -> Result<Self> {
        for &m in &word {
            sector.validate(m)?;
        }
        let mut e = Self::zero(sector, c, coeff.alphabet());
        e.add_term(word, coeff);
        Ok(e)
    }

    pub fn mode(sector: Sector, c: Scalar, coeff: GrassmannNumber, m: Mode) -> Result<Self> {
        Self::from_word(sector, c, coeff, vec![m])
    }

    pub fn scalar(sector: Sector, c: Scalar, coeff: GrassmannNumber) -> Self {
        let mut e = Self::zero(sector, c, coeff.alphabet());
        e.add_term(Vec::new(), coeff);
        e
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    fn add_term(&mut self, w: Word, g: GrassmannNumber) {
        if g.is_zero() {
            return;
        }
        let zero = GrassmannNumber::zero(&self.alphabet);
        let slot = self.terms.entry(w.clone()).or_insert(zero);
        *slot = &*slot + &g;
        if slot.is_zero() {
            self.terms.remove(&w);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &GrassmannNumber)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.sector != other.sector {
            return Err(Error::SectorMismatch(format!("{} vs {}", self.sector, other.sector)));
        }
        if self.c != other.c {
            return Err(Error::SectorMismatch("different central charges".into()));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = self.clone();
        for (w, g) in &other.terms {
            out.add_term(w.clone(), g.clone());
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        self.lmul(&GrassmannNumber::scalar(&self.alphabet, c.clone()))
    }

    /// Left multiplication by a Grassmann number.
    pub fn lmul(&self, g: &GrassmannNumber) -> Self {
        let mut out = Self::zero(self.sector, self.c.clone(), &self.alphabet);
        for (w, h) in &self.terms {
            out.add_term(w.clone(), g * h);
        }
        out
    }

    /// Product, normal ordered. Coefficients of the right factor pick up the
    /// grade involution once per odd mode they move past.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = Self::zero(self.sector, self.c.clone(), &self.alphabet);
        for (w1, a) in &self.terms {
            let odd = word_is_odd(w1);
            for (w2, b) in &other.terms {
                let b = if odd { b.involution() } else { b.clone() };
                let mut w = w1.clone();
                w.extend_from_slice(w2);
                out.add_term(w, a * &b);
            }
        }
        out.normal_order()
    }

    pub fn normal_order(&self) -> Result<Self> {
        let mut out = Self::zero(self.sector, self.c.clone(), &self.alphabet);
        for (w, g) in &self.terms {
            for (nw, k) in normal_order_rational(self.sector, &self.c, w.clone())? {
                out.add_term(nw, g.scale(&k));
            }
        }
        Ok(out)
    }

    pub fn is_normal_ordered(&self) -> bool {
        self.terms.keys().all(|w| w.windows(2).all(|p| p[0] < p[1] || (p[0] == p[1] && !p[0].is_odd())))
    }

    /// Total parity counting `G` modes as odd.
    pub fn parity(&self) -> Parity {
        let mut p: Option<Parity> = None;
        for (w, g) in &self.terms {
            let q = if word_is_odd(w) { g.parity().flip() } else { g.parity() };
            p = Some(match p {
                None => q,
                Some(o) if o == q => q,
                _ => Parity::Mixed,
            });
        }
        p.unwrap_or(Parity::Even)
    }

    /// Coefficients of a linear combination of single modes, or an error
    /// naming the offending word.
    pub fn linear_coefficients(&self) -> Result<Vec<(Mode, GrassmannNumber)>> {
        self.terms
            .iter()
            .map(|(w, g)| match w.as_slice() {
                [m] => Ok((*m, g.clone())),
                _ => Err(Error::NotLinear(word_to_string(w))),
            })
            .collect()
    }

    pub fn map_coefficients(&self, f: impl Fn(&GrassmannNumber) -> GrassmannNumber) -> Self {
        let mut out = Self::zero(self.sector, self.c.clone(), &self.alphabet);
        for (w, g) in &self.terms {
            out.add_term(w.clone(), f(g));
        }
        out
    }
}

impl fmt::Display for AlgebraElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().map(|(w, g)| format!("({g}) {}", word_to_string(w))).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleParams {
    pub sector: Sector,
    #[serde(with = "scalar_serde")]
    pub c: Scalar,
    #[serde(with = "scalar_serde")]
    pub delta: Scalar,
}

pub mod scalar_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Scalar, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&scalar::format(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Scalar, D::Error> {
        let s = String::deserialize(d)?;
        scalar::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Vector of a highest-weight module: PBW lowering words (with an optional
/// trailing `G0` in the Ramond sector) applied to `|Δ⟩`.
#[derive(Clone, Debug)]
pub struct VermaState {
    pub params: ModuleParams,
    alphabet: Arc<Alphabet>,
    terms: BTreeMap<Word, GrassmannNumber>,
}

impl PartialEq for VermaState {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params && self.terms == other.terms
    }
}

impl VermaState {
    pub fn zero(params: &ModuleParams, alphabet: &Arc<Alphabet>) -> Self {
        VermaState { params: params.clone(), alphabet: alphabet.clone(), terms: BTreeMap::new() }
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn add_term(&mut self, w: Word, g: GrassmannNumber) {
        if g.is_zero() {
            return;
        }
        let zero = GrassmannNumber::zero(&self.alphabet);
        let slot = self.terms.entry(w.clone()).or_insert(zero);
        *slot = &*slot + &g;
        if slot.is_zero() {
            self.terms.remove(&w);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &GrassmannNumber)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, w: &[Mode]) -> GrassmannNumber {
        self.terms.get(w).cloned().unwrap_or_else(|| GrassmannNumber::zero(&self.alphabet))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_level2(&self) -> Option<i32> {
        self.terms.keys().map(|w| level2(w)).max()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (w, g) in &other.terms {
            out.add_term(w.clone(), g.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.lmul(&GrassmannNumber::scalar(&self.alphabet, -Scalar::one())))
    }

    pub fn lmul(&self, g: &GrassmannNumber) -> Self {
        let mut out = Self::zero(&self.params, &self.alphabet);
        for (w, h) in &self.terms {
            out.add_term(w.clone(), g * h);
        }
        out
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        self.lmul(&GrassmannNumber::scalar(&self.alphabet, c.clone()))
    }

    pub fn map_coefficients(&self, f: impl Fn(&GrassmannNumber) -> GrassmannNumber) -> Self {
        let mut out = Self::zero(&self.params, &self.alphabet);
        for (w, g) in &self.terms {
            out.add_term(w.clone(), f(g));
        }
        out
    }

    /// Drops every component above the given doubled level.
    pub fn truncate(&self, max_level2: i32) -> Self {
        let mut out = self.clone();
        out.terms.retain(|w, _| level2(w) <= max_level2);
        out
    }

    /// Rational coefficient vector over `basis`, when all coefficients are
    /// plain rationals.
    pub fn rational_vector(&self, basis: &[Word]) -> Result<Vec<Scalar>> {
        let mut v = vec![Scalar::zero(); basis.len()];
        for (w, g) in &self.terms {
            let i = basis.iter().position(|b| b == w).ok_or_else(|| Error::InvalidMode(word_to_string(w)))?;
            if g.soul().is_zero() {
                v[i] = g.body().as_constant().ok_or_else(|| Error::NotRational(g.to_string()))?;
            } else {
                return Err(Error::NotRational(g.to_string()));
            }
        }
        Ok(v)
    }

    pub fn from_rational(params: &ModuleParams, alphabet: &Arc<Alphabet>, basis: &[Word], v: &[Scalar]) -> Self {
        let mut s = Self::zero(params, alphabet);
        for (w, x) in basis.iter().zip(v) {
            s.add_term(w.clone(), GrassmannNumber::scalar(alphabet, x.clone()));
        }
        s
    }

    /// Splits the coefficients into rational vectors, one per
    /// (Grassmann subset, polynomial monomial) pair.
    pub fn components(&self) -> BTreeMap<(u64, Monomial), BTreeMap<Word, Scalar>> {
        let mut out: BTreeMap<(u64, Monomial), BTreeMap<Word, Scalar>> = BTreeMap::new();
        for (w, g) in &self.terms {
            for (subset, p) in g.terms() {
                for (m, c) in p.terms() {
                    out.entry((subset, m.clone())).or_default().insert(w.clone(), c.clone());
                }
            }
        }
        out
    }

    pub fn from_components(
        params: &ModuleParams,
        alphabet: &Arc<Alphabet>,
        comps: &BTreeMap<(u64, Monomial), BTreeMap<Word, Scalar>>,
    ) -> Self {
        let mut s = Self::zero(params, alphabet);
        for ((subset, m), vec) in comps {
            let unit = GrassmannNumber::from_poly(alphabet, Poly::term(m.clone(), Scalar::one()));
            let gen = subset_monomial(alphabet, *subset);
            for (w, c) in vec {
                s.add_term(w.clone(), (&gen * &unit).scale(c));
            }
        }
        s
    }
}

fn subset_monomial(alphabet: &Arc<Alphabet>, subset: u64) -> GrassmannNumber {
    let names: Vec<&str> = (0..alphabet.len()).filter(|i| subset & (1 << i) != 0).map(|i| alphabet.name(i)).collect();
    GrassmannNumber::monomial(alphabet, &names).expect("subset of the alphabet")
}

impl fmt::Display for VermaState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> =
            self.terms.iter().map(|(w, g)| format!("({g}) {}|Δ⟩", if w.is_empty() { String::new() } else { word_to_string(w) + " " })).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct VermaStateReport {
    #[serde(flatten)]
    pub params: ModuleParams,
    pub level: String,
    pub terms: Vec<(String, crate::grassmann::GrassmannRepr)>,
}

impl VermaState {
    pub fn to_report(&self) -> Result<VermaStateReport> {
        let terms = self
            .terms
            .iter()
            .map(|(w, g)| Ok((word_to_string(w), g.to_repr()?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(VermaStateReport {
            params: self.params.clone(),
            level: scalar::half_str(self.max_level2().unwrap_or(0)),
            terms,
        })
    }
}

type ModeCache = HashMap<(Mode, Word), Vec<(Word, Scalar)>>;

/// Highest-weight Verma module with parameters `(c, Δ)`. In the Ramond sector
/// the ground space is spanned by `|Δ⟩` and `G0|Δ⟩` with no `G0` eigenvalue
/// imposed.
pub struct VermaModule {
    params: ModuleParams,
    alphabet: Arc<Alphabet>,
    cache: Mutex<ModeCache>,
}

impl VermaModule {
    pub fn new(sector: Sector, c: Scalar, delta: Scalar) -> Self {
        Self::with_alphabet(sector, c, delta, &Alphabet::standard())
    }

    pub fn with_alphabet(sector: Sector, c: Scalar, delta: Scalar, alphabet: &Arc<Alphabet>) -> Self {
        VermaModule {
            params: ModuleParams { sector, c, delta },
            alphabet: alphabet.clone(),
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn params(&self) -> &ModuleParams {
        &self.params
    }

    pub fn sector(&self) -> Sector {
        self.params.sector
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn highest(&self) -> VermaState {
        let mut s = VermaState::zero(&self.params, &self.alphabet);
        s.add_term(Vec::new(), GrassmannNumber::one(&self.alphabet));
        s
    }

    pub fn state(&self, terms: &[(Scalar, Word)]) -> Result<VermaState> {
        let mut s = VermaState::zero(&self.params, &self.alphabet);
        for (k, w) in terms {
            let v = self.apply_word_rational(w, &Vec::new())?;
            for (nw, x) in v {
                s.add_term(nw, GrassmannNumber::scalar(&self.alphabet, k * x));
            }
        }
        Ok(s)
    }

    /// PBW basis words at the given doubled level.
    pub fn basis(&self, level2: i32) -> Vec<Word> {
        let sector = self.sector();
        let modes = sector.modes_between(-level2, -1);
        let mut out = Vec::new();
        fn rec(modes: &[Mode], start: usize, remaining: i32, cur: &mut Word, out: &mut Vec<Word>) {
            if remaining == 0 {
                out.push(cur.clone());
                return;
            }
            for i in start..modes.len() {
                let m = modes[i];
                let cost = -m.index2;
                if cost > remaining {
                    continue;
                }
                cur.push(m);
                let next = if m.is_odd() { i + 1 } else { i };
                rec(modes, next, remaining - cost, cur, out);
                cur.pop();
            }
        }
        if level2 >= 0 {
            rec(&modes, 0, level2, &mut Vec::new(), &mut out);
        }
        if sector == Sector::Ramond {
            let with_g0: Vec<Word> = out
                .iter()
                .map(|w| {
                    let mut w = w.clone();
                    w.push(Mode::g(0));
                    w
                })
                .collect();
            out.extend(with_g0);
        }
        out.sort();
        out
    }

    /// Basis of all levels up to `max_level2`, in increasing level.
    pub fn basis_upto(&self, max_level2: i32) -> Vec<Word> {
        (0..=max_level2)
            .step_by(self.sector().level_step2() as usize)
            .flat_map(|l| self.basis(l))
            .collect()
    }

    fn bracket(&self, x: Mode, y: Mode) -> Result<Bracket> {
        bracket(x, y, &self.params.c, self.sector())
    }

    fn add_into(acc: &mut BTreeMap<Word, Scalar>, items: impl IntoIterator<Item = (Word, Scalar)>, k: &Scalar) {
        for (w, x) in items {
            let e = acc.entry(w).or_insert_with(Scalar::zero);
            *e += &x * k;
        }
    }

    /// `X · (w|Δ⟩)` for a basis word `w`, in the PBW basis.
    pub fn apply_mode(&self, x: Mode, w: &Word) -> Result<Vec<(Word, Scalar)>> {
        self.sector().validate(x)?;
        if let Some(hit) = self.cache.lock().unwrap().get(&(x, w.clone())) {
            return Ok(hit.clone());
        }
        let res = self.apply_mode_uncached(x, w)?;
        self.cache.lock().unwrap().insert((x, w.clone()), res.clone());
        Ok(res)
    }

    fn apply_mode_uncached(&self, x: Mode, w: &Word) -> Result<Vec<(Word, Scalar)>> {
        let one = Scalar::one();
        let delta = &self.params.delta;
        let g0 = Mode::g(0);
        let mut acc: BTreeMap<Word, Scalar> = BTreeMap::new();
        let ramond_ground = self.sector() == Sector::Ramond && w.as_slice() == [g0];
        if w.is_empty() || ramond_ground {
            if x.is_lowering() {
                let mut nw = vec![x];
                nw.extend_from_slice(w);
                acc.insert(nw, one);
            } else if x == Mode::l(0) {
                acc.insert(w.clone(), delta.clone());
            } else if x == g0 {
                if w.is_empty() {
                    acc.insert(vec![g0], one);
                } else {
                    // G0 G0 = L0 − c/24
                    acc.insert(Vec::new(), delta - &self.params.c / scalar::int(24));
                }
            } else if ramond_ground {
                // X G0|Δ⟩ = [X, G0}|Δ⟩ for raising X
                let br = self.bracket(x, g0)?;
                if let Some((m, l)) = br.mode {
                    Self::add_into(&mut acc, self.apply_mode(m, &Vec::new())?, &l);
                }
                Self::add_into(&mut acc, [(Vec::new(), br.central)], &one);
            }
        } else {
            let y = w[0];
            let rest: Word = w[1..].to_vec();
            if x.is_lowering() && (x < y || (x == y && !x.is_odd())) {
                let mut nw = vec![x];
                nw.extend_from_slice(w);
                acc.insert(nw, one);
            } else if x == y && x.is_odd() {
                // G_r G_r = L_{2r} for r < 0
                Self::add_into(&mut acc, self.apply_mode(Mode::new(ModeKind::L, 2 * x.index2), &rest)?, &one);
            } else {
                let sign = if x.is_odd() && y.is_odd() { -Scalar::one() } else { Scalar::one() };
                for (w2, k) in self.apply_mode(x, &rest)? {
                    Self::add_into(&mut acc, self.apply_mode(y, &w2)?, &(&sign * &k));
                }
                let br = self.bracket(x, y)?;
                if let Some((m, l)) = br.mode {
                    Self::add_into(&mut acc, self.apply_mode(m, &rest)?, &l);
                }
                Self::add_into(&mut acc, [(rest, br.central)], &one);
            }
        }
        Ok(acc.into_iter().filter(|(_, k)| !k.is_zero()).collect())
    }

    /// Applies the word `x1 x2 … xk` (rightmost first) to the basis vector `w`.
    pub fn apply_word_rational(&self, word: &[Mode], w: &Word) -> Result<BTreeMap<Word, Scalar>> {
        let mut cur: BTreeMap<Word, Scalar> = BTreeMap::from([(w.clone(), Scalar::one())]);
        for &m in word.iter().rev() {
            let mut next = BTreeMap::new();
            for (bw, k) in &cur {
                Self::add_into(&mut next, self.apply_mode(m, bw)?, k);
            }
            next.retain(|_, k: &mut Scalar| !k.is_zero());
            cur = next;
        }
        Ok(cur)
    }

    /// Module action of an algebra element.
    pub fn act(&self, x: &AlgebraElement, v: &VermaState) -> Result<VermaState> {
        if x.sector != self.sector() || x.c != self.params.c {
            return Err(Error::SectorMismatch("element and module disagree on sector or c".into()));
        }
        let mut out = VermaState::zero(&self.params, &self.alphabet);
        for (xw, a) in x.terms() {
            let odd = word_is_odd(xw);
            for (w, b) in v.terms() {
                let b = if odd { b.involution() } else { b.clone() };
                let ab = a * &b;
                for (nw, k) in self.apply_word_rational(xw, w)? {
                    out.add_term(nw, ab.scale(&k));
                }
            }
        }
        Ok(out)
    }

    pub fn apply_mode_to_state(&self, m: Mode, v: &VermaState) -> Result<VermaState> {
        let x = AlgebraElement::mode(self.sector(), self.params.c.clone(), GrassmannNumber::one(&self.alphabet), m)?;
        self.act(&x, v)
    }

    /// Raising modes that must annihilate a singular vector at this level.
    pub fn raising_modes(&self, level2: i32) -> Vec<Mode> {
        self.sector().modes_between(1, level2)
    }

    /// Matrix of the conditions "every raising mode annihilates", columns
    /// indexed by `basis(level2)`.
    fn annihilation_matrix(&self, level2: i32) -> Result<Matrix> {
        let basis = self.basis(level2);
        let mut rows: Vec<Vec<Scalar>> = Vec::new();
        for x in self.raising_modes(level2) {
            let target = self.basis(level2 - x.index2);
            let mut block = vec![vec![Scalar::zero(); basis.len()]; target.len()];
            for (j, w) in basis.iter().enumerate() {
                for (nw, k) in self.apply_mode(x, w)? {
                    let i = target.iter().position(|t| *t == nw).expect("PBW basis closed under action");
                    block[i][j] += k;
                }
            }
            rows.extend(block);
        }
        if rows.is_empty() {
            rows.push(vec![Scalar::zero(); basis.len()]);
        }
        Ok(Matrix::from_rows(rows))
    }

    /// Basis of the states at the given level annihilated by all raising
    /// modes, in reduced echelon form (first coefficient 1).
    pub fn find_singular(&self, level2: i32) -> Result<Vec<VermaState>> {
        if level2 <= 0 {
            return Err(Error::Config("singular vectors need a positive level".into()));
        }
        let basis = self.basis(level2);
        if basis.is_empty() {
            return Ok(Vec::new());
        }
        let kernel = self.annihilation_matrix(level2)?.nullspace();
        let span = Span::new(basis.len(), &kernel);
        Ok(span.basis().iter().map(|v| VermaState::from_rational(&self.params, &self.alphabet, &basis, v)).collect())
    }

    /// `⟨Δ| x† y |Δ⟩` for basis words, with `L_n† = L_{−n}`, `G_r† = G_{−r}`,
    /// `⟨Δ|Δ⟩ = 1`.
    pub fn inner_product(&self, x: &Word, y: &Word) -> Result<Scalar> {
        let adj: Word = x.iter().rev().map(|m| m.adjoint()).collect();
        let v = self.apply_word_rational(&adj, y)?;
        Ok(v.get(&Vec::new()).cloned().unwrap_or_else(Scalar::zero))
    }

    pub fn gram_matrix(&self, level2: i32) -> Result<Matrix> {
        let basis = self.basis(level2);
        let mut m = Matrix::zeros(basis.len(), basis.len());
        for (i, x) in basis.iter().enumerate() {
            for (j, y) in basis.iter().enumerate() {
                m[(i, j)] = self.inner_product(x, y)?;
            }
        }
        Ok(m)
    }

    /// Submodule generated by the singular vectors at levels `≤ max_level2`.
    pub fn singular_submodule(&self, max_level2: i32) -> Result<Submodule> {
        let step = self.sector().level_step2();
        let mut generators: Vec<(i32, VermaState)> = Vec::new();
        for l in (step..=max_level2).step_by(step as usize) {
            for s in self.find_singular(l)? {
                generators.push((l, s));
            }
        }
        let mut spans = BTreeMap::new();
        for l in (0..=max_level2).step_by(step as usize) {
            let basis = self.basis(l);
            let mut vecs = Vec::new();
            for (gl, s) in &generators {
                if *gl > l {
                    continue;
                }
                for dw in self.basis(l - gl) {
                    let mut d = VermaState::zero(&self.params, &self.alphabet);
                    for (w, g) in s.terms() {
                        for (nw, k) in self.apply_word_rational(&dw, w)? {
                            d.add_term(nw, g.scale(&k));
                        }
                    }
                    vecs.push(d.rational_vector(&basis)?);
                }
            }
            spans.insert(l, (basis.clone(), Span::new(basis.len(), &vecs)));
        }
        Ok(Submodule { max_level2, generators: generators.len(), spans })
    }
}

/// Level-graded span of singular vectors and their descendants.
#[derive(Clone, Debug)]
pub struct Submodule {
    pub max_level2: i32,
    pub generators: usize,
    spans: BTreeMap<i32, (Vec<Word>, Span)>,
}

impl Submodule {
    pub fn level(&self, level2: i32) -> Option<(&[Word], &Span)> {
        self.spans.get(&level2).map(|(b, s)| (b.as_slice(), s))
    }

    pub fn dim_at(&self, level2: i32) -> usize {
        self.spans.get(&level2).map_or(0, |(_, s)| s.dim())
    }

    /// Canonical representative of `v` in the quotient module, levelwise and
    /// componentwise in the coefficients.
    pub fn project(&self, v: &VermaState) -> Result<VermaState> {
        if let Some(l) = v.max_level2() {
            if l > self.max_level2 {
                return Err(Error::Truncation {
                    requested: scalar::half_str(self.max_level2),
                    required: scalar::half_str(l),
                });
            }
        }
        let comps = v.components();
        let mut out = BTreeMap::new();
        for (key, vec) in comps {
            let mut reduced: BTreeMap<Word, Scalar> = BTreeMap::new();
            for (basis, span) in self.spans.values() {
                let x: Vec<Scalar> = basis.iter().map(|w| vec.get(w).cloned().unwrap_or_else(Scalar::zero)).collect();
                if x.iter().all(Zero::is_zero) {
                    continue;
                }
                for (w, r) in basis.iter().zip(span.reduce(&x)) {
                    if !r.is_zero() {
                        reduced.insert(w.clone(), r);
                    }
                }
            }
            out.insert(key, reduced);
        }
        Ok(VermaState::from_components(&v.params, v.alphabet(), &out))
    }

    pub fn contains(&self, v: &VermaState) -> Result<bool> {
        Ok(self.project(v)?.is_zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::{ETA, Y};
    use crate::scalar::{frac, int};

    fn alph() -> Arc<Alphabet> {
        Alphabet::standard()
    }

    fn one() -> GrassmannNumber {
        GrassmannNumber::one(&alph())
    }

    fn elem(sector: Sector, c: &Scalar, terms: &[(Scalar, &str)]) -> AlgebraElement {
        let mut e = AlgebraElement::zero(sector, c.clone(), &alph());
        for (k, w) in terms {
            let x = AlgebraElement::from_word(sector, c.clone(), one().scale(k), parse_word(w).unwrap()).unwrap();
            e = e.try_add(&x).unwrap();
        }
        e
    }

    #[test]
    fn brackets_match_defining_relations() {
        let c = frac(7, 3);
        let b = bracket(Mode::l(2), Mode::l(-2), &c, Sector::Virasoro).unwrap();
        assert_eq!(b.mode, Some((Mode::l(0), int(4))));
        assert_eq!(b.central, &c / int(2));
        let b = bracket(Mode::g2(1), Mode::g2(-1), &c, Sector::NeveuSchwarz).unwrap();
        assert_eq!(b, Bracket { mode: Some((Mode::l(0), int(2))), central: int(0) });
        let b = bracket(Mode::g(0), Mode::g(0), &c, Sector::Ramond).unwrap();
        assert_eq!(b, Bracket { mode: Some((Mode::l(0), int(2))), central: -&c / int(12) });
        // [L−1, G−1/2] = 0
        assert_eq!(bracket(Mode::l(-1), Mode::g2(-1), &c, Sector::NeveuSchwarz).unwrap().mode, None);
        assert!(bracket(Mode::g(0), Mode::l(1), &c, Sector::NeveuSchwarz).is_err());
        assert!(bracket(Mode::g2(1), Mode::l(1), &c, Sector::Virasoro).is_err());
    }

    #[test]
    fn normal_ordering_examples() {
        let c = frac(3, 2);
        let x = elem(Sector::Virasoro, &c, &[(int(1), "L1 L-1")]).normal_order().unwrap();
        assert_eq!(x, elem(Sector::Virasoro, &c, &[(int(1), "L-1 L1"), (int(2), "L0")]));
        let g0g0 = elem(Sector::Ramond, &c, &[(int(1), "G0 G0")]).normal_order().unwrap();
        assert_eq!(g0g0, elem(Sector::Ramond, &c, &[(int(1), "L0"), (-&c / int(24), "1")]));

        let y = GrassmannNumber::generator(&alph(), Y).unwrap();
        let eta = GrassmannNumber::generator(&alph(), ETA).unwrap();
        let s = Sector::NeveuSchwarz;
        let b = AlgebraElement::mode(s, c.clone(), y.clone(), Mode::l(-1))
            .unwrap()
            .try_add(&AlgebraElement::mode(s, c.clone(), eta.clone(), Mode::g2(-1)).unwrap())
            .unwrap();
        let sq = b.try_mul(&b).unwrap();
        let expected = AlgebraElement::from_word(s, c.clone(), (&y * &eta).scale(&int(2)), vec![Mode::l(-1), Mode::g2(-1)]).unwrap();
        assert_eq!(sq, expected);
        assert!(sq.is_normal_ordered());
        assert_eq!(sq.normal_order().unwrap(), sq);
    }

    #[test]
    fn module_action_examples() {
        let (c, d) = (frac(1, 2), frac(3, 7));
        let vir = VermaModule::new(Sector::Virasoro, c.clone(), d.clone());
        let v = vir.act(&elem(Sector::Virasoro, &c, &[(int(1), "L1 L-1")]), &vir.highest()).unwrap();
        assert_eq!(v, vir.highest().scale(&(&d * int(2))));

        let ram = VermaModule::new(Sector::Ramond, c.clone(), d.clone());
        let v = ram.act(&elem(Sector::Ramond, &c, &[(int(1), "G0 G0")]), &ram.highest()).unwrap();
        assert_eq!(v, ram.highest().scale(&(&d - &c / int(24))));

        let kappa = frac(8, 3);
        let drift = elem(Sector::Virasoro, &c, &[(int(-2), "L-2"), (&kappa / int(2), "L-1 L-1")]);
        let l1 = elem(Sector::Virasoro, &c, &[(int(1), "L1")]);
        let v = vir.act(&l1, &vir.act(&drift, &vir.highest()).unwrap()).unwrap();
        let coeff = int(-6) + &kappa * (&d * int(2) + int(1));
        assert_eq!(v, vir.state(&[(coeff, parse_word("L-1").unwrap())]).unwrap());
    }

    #[test]
    fn basis_sizes() {
        let ns = VermaModule::new(Sector::NeveuSchwarz, int(1), int(1));
        // coefficients of ∏(1+q^{n-1/2})/(1-q^n) up to q^{7/2}
        let sizes: Vec<usize> = (0..8).map(|l| ns.basis(l).len()).collect();
        assert_eq!(sizes, vec![1, 1, 1, 2, 3, 4, 5, 7]);
        let r = VermaModule::new(Sector::Ramond, int(1), int(1));
        assert_eq!(r.basis(0).len(), 2);
        assert_eq!(r.basis(2).len(), 4);
        let vir = VermaModule::new(Sector::Virasoro, int(1), int(1));
        assert_eq!(vir.basis(8).len(), 5);
    }

    #[test]
    fn gram_level_one_virasoro() {
        let d = frac(5, 3);
        let vir = VermaModule::new(Sector::Virasoro, int(2), d.clone());
        let g = vir.gram_matrix(2).unwrap();
        assert_eq!(g, Matrix::from_rows(vec![vec![&d * int(2)]]));
    }

    #[test]
    fn classical_level_two_singular_vector() {
        // κ = 4: c = 1, Δ = 1/4
        let vir = VermaModule::new(Sector::Virasoro, int(1), frac(1, 4));
        let sing = vir.find_singular(4).unwrap();
        assert_eq!(sing.len(), 1);
        let expected = vir.state(&[(int(-2), parse_word("L-2").unwrap()), (int(2), parse_word("L-1 L-1").unwrap())]).unwrap();
        // normalized so the first PBW coefficient (L-2) is 1
        assert_eq!(sing[0], expected.scale(&frac(-1, 2)));
        assert!(vir.gram_matrix(4).unwrap().determinant().is_zero());
    }
}
