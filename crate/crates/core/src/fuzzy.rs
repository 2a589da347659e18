//! Mamdani inference over three inputs (daily mean electricity price, hydrogen
//! price and wind capacity factor) and one output (daily mean contract
//! delivery rate, kg/h).
//!
//! Each variable has three triangular terms parameterised by seven ordered
//! breakpoints `p0..p6`: "low" is `(p0, p0, p2)`, "medium" `(p1, p3, p5)` and
//! "high" `(p4, p6, p6)`. Rules combine with `min`, clip their consequent with
//! `min`, aggregate with `max`, and the crisp output is the exact centroid of
//! the aggregate.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Low,
    Medium,
    High,
}

impl Term {
    pub const ALL: [Term; 3] = [Term::Low, Term::Medium, Term::High];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Term::Low => "low",
            Term::Medium => "medium",
            Term::High => "high",
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Term {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "low" => Ok(Term::Low),
            "medium" => Ok(Term::Medium),
            "high" => Ok(Term::High),
            _ => Err(Error::Format(format!("unknown term `{s}`"))),
        }
    }
}

/// Triangle membership with peak `b` on support `[a, c]`. Zero-width sides
/// behave as steps: the peak itself always has membership one.
pub fn triangle(x: f64, a: f64, b: f64, c: f64) -> f64 {
    if x < a || x > c {
        0.0
    } else if x == b {
        1.0
    } else if x < b {
        (x - a) / (b - a)
    } else {
        (c - x) / (c - b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipParams {
    p: [f64; 7],
}

impl MembershipParams {
    pub fn new(p: [f64; 7]) -> Result<Self> {
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("non-finite breakpoint in {p:?}")));
        }
        if p.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Validation(format!(
                "breakpoints must be non-decreasing, got {p:?}"
            )));
        }
        Ok(Self { p })
    }

    /// Builds parameters from the domain ends and five free breakpoints,
    /// clamping them into `[p0, p6]` and sorting.
    pub fn from_inner(p0: f64, p6: f64, inner: &[f64]) -> Self {
        assert_eq!(inner.len(), 5, "expected five inner breakpoints");
        let (lo, hi) = if p0 <= p6 { (p0, p6) } else { (p6, p0) };
        let mut mid = [0.0; 5];
        for (m, &v) in mid.iter_mut().zip(inner) {
            *m = if v.is_nan() { lo } else { v.clamp(lo, hi) };
        }
        mid.sort_by(f64::total_cmp);
        Self {
            p: [lo, mid[0], mid[1], mid[2], mid[3], mid[4], hi],
        }
    }

    pub fn breakpoints(&self) -> &[f64; 7] {
        &self.p
    }

    pub fn min(&self) -> f64 {
        self.p[0]
    }

    pub fn max(&self) -> f64 {
        self.p[6]
    }

    /// `(a, b, c)` of a term's triangle.
    pub fn triangle_of(&self, term: Term) -> (f64, f64, f64) {
        let p = &self.p;
        match term {
            Term::Low => (p[0], p[0], p[2]),
            Term::Medium => (p[1], p[3], p[5]),
            Term::High => (p[4], p[6], p[6]),
        }
    }

    /// `[mu_low, mu_medium, mu_high]`; inputs outside `[p0, p6]` are clamped.
    pub fn membership(&self, x: f64) -> [f64; 3] {
        let x = x.clamp(self.p[0], self.p[6]);
        Term::ALL.map(|t| {
            let (a, b, c) = self.triangle_of(t);
            triangle(x, a, b, c)
        })
    }

    /// Applies `x ↦ scale·x + shift` to every breakpoint (`scale > 0`).
    pub fn affine(&self, scale: f64, shift: f64) -> Self {
        Self {
            p: self.p.map(|v| scale * v + shift),
        }
    }
}

/// Breakpoints of all four variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipSet {
    pub w: MembershipParams,
    pub e: MembershipParams,
    pub h: MembershipParams,
    pub out: MembershipParams,
}

/// Consequent for each of the 27 input combinations. Rule `k` (0-based) covers
/// `e = k / 3 % 3`, `h = k % 3`, `w = k / 9`, the ordering of the published
/// rule tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RuleBase {
    out: [Term; 27],
}

impl RuleBase {
    pub fn uniform(term: Term) -> Self {
        Self { out: [term; 27] }
    }

    pub fn from_fn(f: impl Fn(Term, Term, Term) -> Term) -> Self {
        let mut out = [Term::Low; 27];
        for (k, slot) in out.iter_mut().enumerate() {
            let (e, h, w) = Self::antecedent(k);
            *slot = f(e, h, w);
        }
        Self { out }
    }

    pub fn index(e: Term, h: Term, w: Term) -> usize {
        h.index() + 3 * e.index() + 9 * w.index()
    }

    /// `(e, h, w)` of rule `k`.
    pub fn antecedent(k: usize) -> (Term, Term, Term) {
        (Term::ALL[(k / 3) % 3], Term::ALL[k % 3], Term::ALL[k / 9])
    }

    pub fn get(&self, e: Term, h: Term, w: Term) -> Term {
        self.out[Self::index(e, h, w)]
    }

    pub fn set(&mut self, e: Term, h: Term, w: Term, out: Term) {
        self.out[Self::index(e, h, w)] = out;
    }

    pub fn consequents(&self) -> &[Term; 27] {
        &self.out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FuzzyModel {
    pub sets: MembershipSet,
    pub rules: RuleBase,
}

/// Clip level of each output term after evaluating all rules.
fn output_levels(model: &FuzzyModel, e: f64, h: f64, w: f64) -> [f64; 3] {
    let mu_e = model.sets.e.membership(e);
    let mu_h = model.sets.h.membership(h);
    let mu_w = model.sets.w.membership(w);
    let mut levels = [0.0_f64; 3];
    for (k, out) in model.rules.out.iter().enumerate() {
        let (te, th, tw) = RuleBase::antecedent(k);
        let strength = mu_e[te.index()].min(mu_h[th.index()]).min(mu_w[tw.index()]);
        let slot = &mut levels[out.index()];
        *slot = slot.max(strength);
    }
    levels
}

/// Crisp output in kg/h. Falls back to the output's `p0` when no rule fires.
pub fn infer(model: &FuzzyModel, e_d: f64, h_d: f64, w_d: f64) -> f64 {
    let levels = output_levels(model, e_d, h_d, w_d);
    centroid(&model.sets.out, levels).unwrap_or(model.sets.out.min())
}

/// Linear piece `value(y) = v0 + slope·(y − y0)` on one segment.
#[derive(Clone, Copy)]
struct Line {
    y0: f64,
    v0: f64,
    slope: f64,
}

impl Line {
    fn at(&self, y: f64) -> f64 {
        self.v0 + self.slope * (y - self.y0)
    }
}

/// Exact centroid of `max_k min(levels[k], term_k(y))` over the output domain.
/// `None` when the aggregate has zero area.
pub fn centroid(out: &MembershipParams, levels: [f64; 3]) -> Option<f64> {
    let active: Vec<((f64, f64, f64), f64)> = Term::ALL
        .iter()
        .filter(|t| levels[t.index()] > 0.0)
        .map(|&t| (out.triangle_of(t), levels[t.index()].min(1.0)))
        .collect();
    if active.is_empty() {
        return None;
    }

    let mut knots = Vec::with_capacity(16);
    for &((a, b, c), level) in &active {
        knots.extend([a, b, c, a + level * (b - a), c - level * (c - b)]);
    }
    knots.sort_by(f64::total_cmp);
    knots.dedup();

    let clipped = |y: f64, (a, b, c): (f64, f64, f64), level: f64| triangle(y, a, b, c).min(level);

    let mut area = 0.0;
    let mut moment = 0.0;
    let mut cuts = Vec::with_capacity(8);
    for seg in knots.windows(2) {
        let (y0, y1) = (seg[0], seg[1]);
        if y1 <= y0 {
            continue;
        }
        // Every clipped term is linear inside the segment; recover each line
        // from two interior samples so steps at the ends do not leak in.
        let u = y0 + (y1 - y0) / 3.0;
        let v = y0 + 2.0 * (y1 - y0) / 3.0;
        let lines: Vec<Line> = active
            .iter()
            .map(|&(tri, level)| {
                let fu = clipped(u, tri, level);
                let fv = clipped(v, tri, level);
                let slope = (fv - fu) / (v - u);
                Line {
                    y0,
                    v0: fu - slope * (u - y0),
                    slope,
                }
            })
            .collect();

        cuts.clear();
        cuts.push(y0);
        for i in 0..lines.len() {
            for j in i + 1..lines.len() {
                let ds = lines[i].slope - lines[j].slope;
                if ds != 0.0 {
                    let y = y0 - (lines[i].v0 - lines[j].v0) / ds;
                    if y > y0 && y < y1 {
                        cuts.push(y);
                    }
                }
            }
        }
        cuts.push(y1);
        cuts.sort_by(f64::total_cmp);

        let upper = |y: f64| lines.iter().map(|l| l.at(y)).fold(0.0_f64, f64::max);
        for piece in cuts.windows(2) {
            let (a, b) = (piece[0], piece[1]);
            if b <= a {
                continue;
            }
            // Evaluate the envelope at interior points and extend to the ends.
            let m = 0.5 * (a + b);
            let q = a + 0.25 * (b - a);
            let fm = upper(m);
            let fq = upper(q);
            let slope = (fm - fq) / (m - q);
            let fa = (fm - slope * (m - a)).max(0.0);
            let fb = (fm + slope * (b - m)).max(0.0);
            let width = b - a;
            area += 0.5 * width * (fa + fb);
            moment += width / 6.0 * (a * (2.0 * fa + fb) + b * (fa + 2.0 * fb));
        }
    }
    if area > 0.0 {
        Some((moment / area).clamp(out.min(), out.max()))
    } else {
        None
    }
}

/// A training sample: daily mean inputs and the benchmark delivery rate, kg/h.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exemplar {
    pub e: f64,
    pub h: f64,
    pub w: f64,
    pub target: f64,
}

/// Cumulative degree of each of the 81 candidate rules, indexed
/// `[rule][output term]`.
pub fn rule_degrees(sets: &MembershipSet, data: &[Exemplar]) -> [[f64; 3]; 27] {
    let mut sums = [[0.0_f64; 3]; 27];
    for x in data {
        let mu_e = sets.e.membership(x.e);
        let mu_h = sets.h.membership(x.h);
        let mu_w = sets.w.membership(x.w);
        let mu_o = sets.out.membership(x.target);
        for (k, row) in sums.iter_mut().enumerate() {
            let (te, th, tw) = RuleBase::antecedent(k);
            let d = mu_e[te.index()] * mu_h[th.index()] * mu_w[tw.index()];
            if d == 0.0 {
                continue;
            }
            for (slot, mo) in row.iter_mut().zip(mu_o) {
                *slot += d * mo;
            }
        }
    }
    sums
}

/// Learns a conflict-free rule base from examples: each input combination
/// keeps the consequent with the largest summed degree, ties going to the
/// lower term.
pub fn learn_rules(sets: MembershipSet, data: &[Exemplar]) -> Result<FuzzyModel> {
    if data.is_empty() {
        return Err(Error::Validation("no exemplars to learn rules from".into()));
    }
    let sums = rule_degrees(&sets, data);
    let mut out = [Term::Low; 27];
    for (slot, row) in out.iter_mut().zip(&sums) {
        let mut best = Term::Low;
        for t in [Term::Medium, Term::High] {
            if row[t.index()] > row[best.index()] {
                best = t;
            }
        }
        *slot = best;
    }
    Ok(FuzzyModel {
        sets,
        rules: RuleBase { out },
    })
}

const VARIABLE_NAMES: [&str; 4] = ["w", "e", "h", "m2"];

impl fmt::Display for FuzzyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# fuzzy model v1")?;
        writeln!(f, "# variable p0 p1 p2 p3 p4 p5 p6")?;
        let sets = [&self.sets.w, &self.sets.e, &self.sets.h, &self.sets.out];
        for (name, mp) in VARIABLE_NAMES.iter().zip(sets) {
            write!(f, "{name}")?;
            for v in mp.p {
                write!(f, " {v}")?;
            }
            writeln!(f)?;
        }
        writeln!(f, "# rule e h w m2")?;
        for k in 0..27 {
            let (e, h, w) = RuleBase::antecedent(k);
            writeln!(f, "{} {e} {h} {w} {}", k + 1, self.rules.out[k])?;
        }
        Ok(())
    }
}

impl FromStr for FuzzyModel {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut params: [Option<MembershipParams>; 4] = [None; 4];
        let mut rules: [Option<Term>; 27] = [None; 27];
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let err = |msg: &str| Error::Format(format!("model line {}: {msg}", lineno + 1));
            if let Some(var) = VARIABLE_NAMES.iter().position(|n| *n == fields[0]) {
                if fields.len() != 8 {
                    return Err(err("expected a name and seven breakpoints"));
                }
                let mut p = [0.0; 7];
                for (slot, raw) in p.iter_mut().zip(&fields[1..]) {
                    *slot = raw.parse().map_err(|_| err("bad number"))?;
                }
                if params[var].replace(MembershipParams::new(p)?).is_some() {
                    return Err(err("duplicate parameter row"));
                }
            } else {
                if fields.len() != 5 {
                    return Err(err("expected `id e h w output`"));
                }
                let id: usize = fields[0].parse().map_err(|_| err("bad rule id"))?;
                let e: Term = fields[1].parse()?;
                let h: Term = fields[2].parse()?;
                let w: Term = fields[3].parse()?;
                let k = RuleBase::index(e, h, w);
                if id != k + 1 {
                    return Err(err(&format!("rule id {id} should be {}", k + 1)));
                }
                if rules[k].replace(fields[4].parse()?).is_some() {
                    return Err(err("duplicate rule"));
                }
            }
        }
        let missing = |what: &str| Error::Format(format!("model is missing {what}"));
        let [w, e, h, out] = params;
        let sets = MembershipSet {
            w: w.ok_or_else(|| missing("the w row"))?,
            e: e.ok_or_else(|| missing("the e row"))?,
            h: h.ok_or_else(|| missing("the h row"))?,
            out: out.ok_or_else(|| missing("the m2 row"))?,
        };
        let mut base = [Term::Low; 27];
        for (k, r) in rules.iter().enumerate() {
            base[k] = r.ok_or_else(|| missing(&format!("rule {}", k + 1)))?;
        }
        Ok(FuzzyModel {
            sets,
            rules: RuleBase { out: base },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_sets() -> MembershipSet {
        MembershipSet {
            w: MembershipParams::new([0.01, 0.22, 0.57, 0.60, 0.60, 0.87, 0.99]).unwrap(),
            e: MembershipParams::new([-11.76, 118.85, 413.26, 417.15, 519.96, 569.89, 695.09])
                .unwrap(),
            h: MembershipParams::new([1.04, 1.65, 3.04, 3.24, 3.71, 4.36, 5.0]).unwrap(),
            out: MembershipParams::new([0.0, 4.90, 4.90, 10.34, 11.52, 13.14, 17.36]).unwrap(),
        }
    }

    fn table_rules() -> RuleBase {
        RuleBase::from_fn(|e, h, w| {
            if e == Term::Low && h == Term::Low && w != Term::Low {
                Term::High
            } else {
                Term::Low
            }
        })
    }

    #[test]
    fn rule_numbering_follows_table_order() {
        assert_eq!(RuleBase::index(Term::Low, Term::Medium, Term::Low), 1);
        assert_eq!(RuleBase::index(Term::Medium, Term::Low, Term::Low), 3);
        assert_eq!(RuleBase::index(Term::Low, Term::Low, Term::Medium), 9);
        assert_eq!(RuleBase::index(Term::Low, Term::Low, Term::High), 18);
        for k in 0..27 {
            let (e, h, w) = RuleBase::antecedent(k);
            assert_eq!(RuleBase::index(e, h, w), k);
        }
        let rules = table_rules();
        let highs: Vec<usize> = (0..27)
            .filter(|&k| rules.consequents()[k] == Term::High)
            .map(|k| k + 1)
            .collect();
        assert_eq!(highs, vec![10, 19]);
    }

    #[test]
    fn peak_membership() {
        let mp = MembershipParams::new([0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(mp.membership(3.0)[1], 1.0);
        assert_eq!(mp.membership(0.0)[0], 1.0);
        assert_eq!(mp.membership(6.0)[2], 1.0);
        assert_eq!(mp.membership(-5.0), mp.membership(0.0));
        assert_eq!(mp.membership(50.0), mp.membership(6.0));
    }

    #[test]
    fn table_wind_row_at_coincident_breakpoints() {
        let mu = table_sets().w.membership(0.60);
        assert_eq!(mu, [0.0, 1.0, 0.0]);
    }

    #[test]
    fn high_midway_with_collapsed_top() {
        let mp = MembershipParams::new([0.0, 1.0, 2.0, 3.0, 4.0, 8.0, 8.0]).unwrap();
        assert!((mp.membership(6.0)[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_unordered_breakpoints() {
        assert!(MembershipParams::new([0.0, 2.0, 1.0, 3.0, 4.0, 5.0, 6.0]).is_err());
        let mp = MembershipParams::from_inner(0.0, 10.0, &[7.0, -3.0, 12.0, 2.0, 5.0]);
        assert_eq!(mp.breakpoints(), &[0.0, 0.0, 2.0, 5.0, 7.0, 10.0, 10.0]);
    }

    #[test]
    fn single_full_triangle_centroid() {
        let out = MembershipParams::new([0.0, 2.0, 3.0, 5.0, 6.0, 7.0, 9.0]).unwrap();
        let c = centroid(&out, [0.0, 1.0, 0.0]).unwrap();
        assert!((c - (2.0 + 5.0 + 7.0) / 3.0).abs() < 1e-12);
        let c = centroid(&out, [0.0, 0.0, 1.0]).unwrap();
        assert!((c - (6.0 + 9.0 + 9.0) / 3.0).abs() < 1e-12);
        assert_eq!(centroid(&out, [0.0; 3]), None);
    }

    #[test]
    fn table_model_rule_ten_at_peaks() {
        let model = FuzzyModel {
            sets: table_sets(),
            rules: table_rules(),
        };
        let out = infer(&model, -11.76, 1.04, 0.60);
        let expected = (11.52 + 17.36 + 17.36) / 3.0;
        assert!((out - expected).abs() < 1e-9, "{out}");
        assert!((out - 15.41).abs() < 0.01);
    }

    #[test]
    fn degenerate_output_row_is_usable() {
        let model = FuzzyModel {
            sets: table_sets(),
            rules: RuleBase::uniform(Term::Low),
        };
        let y = infer(&model, 200.0, 3.0, 0.4);
        // Clipping the low triangle (0, 0, 4.9) trims mass at its left peak,
        // so the centroid lies between the full triangle's and the flat limit.
        assert!(y >= 4.9 / 3.0 - 1e-12 && y <= 4.9 / 2.0 + 1e-12, "{y}");
        let c = centroid(&table_sets().out, [0.0, 1.0, 0.0]).unwrap();
        assert!((c - (4.9 + 10.34 + 13.14) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_output_gives_center() {
        let sym = MembershipParams::new([0.0, 2.0, 3.0, 5.0, 7.0, 8.0, 10.0]).unwrap();
        let model = FuzzyModel {
            sets: MembershipSet {
                out: sym,
                ..table_sets()
            },
            rules: RuleBase::uniform(Term::Medium),
        };
        let y = infer(&model, -11.76, 1.04, 0.01);
        assert!((y - 5.0).abs() < 1e-12);
    }

    #[test]
    fn no_activation_falls_back_to_minimum() {
        // At x = 7 every term of this partition is exactly at a foot.
        let mp = MembershipParams::new([0.0, 3.0, 3.0, 5.0, 7.0, 7.0, 10.0]).unwrap();
        assert_eq!(mp.membership(7.0), [0.0, 0.0, 0.0]);
        let model = FuzzyModel {
            sets: MembershipSet {
                w: mp,
                e: mp,
                h: mp,
                out: MembershipParams::new([1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]).unwrap(),
            },
            rules: RuleBase::uniform(Term::High),
        };
        assert_eq!(infer(&model, 7.0, 7.0, 7.0), 1.5);
    }

    #[test]
    fn single_exemplar_learning() {
        let sets = table_sets();
        let x = Exemplar {
            e: -11.76,
            h: 1.04,
            w: 0.60,
            target: 17.36,
        };
        let model = learn_rules(sets, &[x]).unwrap();
        for k in 0..27 {
            let (e, h, w) = RuleBase::antecedent(k);
            let expected = if (e, h, w) == (Term::Low, Term::Low, Term::Medium) {
                Term::High
            } else {
                Term::Low
            };
            assert_eq!(model.rules.get(e, h, w), expected);
        }
        assert!(learn_rules(sets, &[]).is_err());
    }

    #[test]
    fn conflict_keeps_largest_cumulative_degree() {
        let sets = table_sets();
        let at = |target| Exemplar {
            e: -11.76,
            h: 1.04,
            w: 0.60,
            target,
        };
        // Two votes for "medium" (10.34) against one for "high" (17.36).
        let data = [at(17.36), at(10.34), at(10.34)];
        let model = learn_rules(sets, &data).unwrap();
        assert_eq!(model.rules.get(Term::Low, Term::Low, Term::Medium), Term::Medium);
        let sums = rule_degrees(&sets, &data);
        let k = RuleBase::index(Term::Low, Term::Low, Term::Medium);
        assert_eq!(sums[k], [0.0, 2.0, 1.0]);
    }

    #[test]
    fn model_text_round_trip() {
        let model = FuzzyModel {
            sets: table_sets(),
            rules: table_rules(),
        };
        let text = model.to_string();
        assert!(text.contains("\nm2 0 4.9 4.9 10.34 11.52 13.14 17.36\n"));
        assert!(text.contains("\n10 low low medium high\n"));
        let back: FuzzyModel = text.parse().unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn model_text_rejects_gaps_and_duplicates() {
        let model = FuzzyModel {
            sets: table_sets(),
            rules: table_rules(),
        };
        let text = model.to_string();
        let without_rule: String = text
            .lines()
            .filter(|l| !l.starts_with("27 "))
            .map(|l| format!("{l}\n"))
            .collect();
        assert!(without_rule.parse::<FuzzyModel>().is_err());
        let dup = format!("{text}1 low low low high\n");
        assert!(dup.parse::<FuzzyModel>().is_err());
        let bad_id = text.replace("\n10 low low medium", "\n11 low low medium");
        assert!(bad_id.parse::<FuzzyModel>().is_err());
    }
}
