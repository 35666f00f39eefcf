//! Preferences over sets and lotteries: the optimistic and pessimistic set
//! extensions, stochastic dominance on exact rational lotteries, and
//! lottery tables with their participation and support checks.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, BufRead, Write};

use num_rational::Ratio;
use num_traits::{One, Zero};
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::enumerate::TournamentIndex;
use crate::rules::{
    verify_optimistic, verify_pessimistic, Report, RuleError, RuleTable, TableEntry, TableMode,
    Violation,
};
use crate::voting::{rankings4, AltSet, Alternative, MarginVector, Ranking};

pub type Prob = Ratio<i64>;

#[derive(Debug, Error)]
pub enum LotteryError {
    #[error("probabilities must be non-negative and sum to 1")]
    NotDistribution,
    #[error("parse error at column {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("line {line}: {source}")]
    Line {
        line: usize,
        source: Box<LotteryError>,
    },
    #[error("duplicate entry for {0}")]
    Duplicate(MarginVector),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// `u` is weakly preferred to `v` by an optimist with ranking `r`.
pub fn optimistic_weakly_prefers(r: &Ranking, u: AltSet, v: AltSet) -> bool {
    match (r.best_of(u), r.best_of(v)) {
        (Some(x), Some(y)) => r.weakly_prefers(x, y),
        _ => false,
    }
}

/// `u` is weakly preferred to `v` by a pessimist with ranking `r`.
pub fn pessimistic_weakly_prefers(r: &Ranking, u: AltSet, v: AltSet) -> bool {
    match (r.worst_of(u), r.worst_of(v)) {
        (Some(x), Some(y)) => r.weakly_prefers(x, y),
        _ => false,
    }
}

/// A probability distribution over the four alternatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Lottery([Prob; 4]);

impl Lottery {
    pub fn new(p: [Prob; 4]) -> Result<Self, LotteryError> {
        if p.iter().any(|x| *x < Prob::zero()) || p.iter().sum::<Prob>() != Prob::one() {
            return Err(LotteryError::NotDistribution);
        }
        Ok(Lottery(p))
    }

    pub fn degenerate(x: Alternative) -> Self {
        let mut p = [Prob::zero(); 4];
        p[x.index()] = Prob::one();
        Lottery(p)
    }

    /// Uniform over a non-empty set.
    pub fn uniform(s: AltSet) -> Self {
        let k = s.len() as i64;
        assert!(k > 0, "uniform lottery over the empty set");
        let mut p = [Prob::zero(); 4];
        for x in s.iter() {
            p[x.index()] = Prob::new(1, k);
        }
        Lottery(p)
    }

    pub fn prob(&self, x: Alternative) -> Prob {
        self.0[x.index()]
    }

    pub fn probs(&self) -> [Prob; 4] {
        self.0
    }

    pub fn support(&self) -> AltSet {
        (0..4)
            .map(Alternative::new)
            .filter(|&x| self.0[x.index()] > Prob::zero())
            .collect()
    }

    /// `sum_i w_i * p_i` for weights summing to 1.
    pub fn mixture(parts: &[(Prob, Lottery)]) -> Result<Self, LotteryError> {
        let mut p = [Prob::zero(); 4];
        for (w, l) in parts {
            for (acc, q) in p.iter_mut().zip(l.0) {
                *acc += *w * q;
            }
        }
        Lottery::new(p)
    }

    /// Probability of the `k` best alternatives of `r`.
    fn upper_mass(&self, r: &Ranking, k: usize) -> Prob {
        (0..k).map(|i| self.0[r.at(i).index()]).sum()
    }
}

impl fmt::Display for Lottery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}/{}", p.numer(), p.denom())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdOrder {
    PPreferred,
    QPreferred,
    Equal,
    Incomparable,
}

/// Stochastic dominance of `p` over `q` for a voter with ranking `r`,
/// compared on every upper contour set of `r`.
pub fn sd_compare(p: &Lottery, q: &Lottery, r: &Ranking) -> SdOrder {
    let (mut p_ge, mut q_ge) = (true, true);
    for k in 1..=4 {
        let (a, b) = (p.upper_mass(r, k), q.upper_mass(r, k));
        p_ge &= a >= b;
        q_ge &= b >= a;
    }
    match (p_ge, q_ge) {
        (true, true) => SdOrder::Equal,
        (true, false) => SdOrder::PPreferred,
        (false, true) => SdOrder::QPreferred,
        (false, false) => SdOrder::Incomparable,
    }
}

/// A lottery per tournament, in index order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LotteryTable {
    entries: Vec<(MarginVector, u32, Lottery)>,
    lookup: HashMap<MarginVector, usize>,
}

pub fn format_lottery_entry(vector: &MarginVector, voters: u32, lottery: &Lottery) -> String {
    let e = vector.entries();
    format!(
        "{lottery},#{voters},({},{},{},{},{},{})",
        e[0], e[1], e[2], e[3], e[4], e[5]
    )
}

pub fn parse_lottery_entry(line: &str) -> Result<(MarginVector, u32, Lottery), LotteryError> {
    let err = |position: usize, message: &str| LotteryError::Parse {
        position,
        message: message.to_string(),
    };
    let hash = line.find(",#").ok_or_else(|| err(0, "missing ',#'"))?;
    let mut p = [Prob::zero(); 4];
    let mut offset = 0;
    let fields: Vec<&str> = line[..hash].split(',').collect();
    if fields.len() != 4 {
        return Err(err(0, "expected four probabilities"));
    }
    for (i, field) in fields.iter().enumerate() {
        let (n, d) = field
            .split_once('/')
            .ok_or_else(|| err(offset, "expected p/q"))?;
        let n: i64 = n.parse().map_err(|_| err(offset, "bad numerator"))?;
        let d: i64 = d.parse().map_err(|_| err(offset, "bad denominator"))?;
        if d <= 0 {
            return Err(err(offset, "denominator must be positive"));
        }
        p[i] = Prob::new(n, d);
        offset += field.len() + 1;
    }
    let lottery = Lottery::new(p)?;
    let rest = &line[hash + 2..];
    let comma = rest
        .find(',')
        .ok_or_else(|| err(hash + 2, "missing ',' after voter count"))?;
    let voters: u32 = rest[..comma]
        .parse()
        .map_err(|_| err(hash + 2, "bad voter count"))?;
    let vstart = hash + 2 + comma + 1;
    let vector = MarginVector::parse(&line[vstart..]).map_err(|e| err(vstart, &e.to_string()))?;
    let canonical = format_lottery_entry(&vector, voters, &lottery);
    if canonical != line {
        let at = canonical
            .bytes()
            .zip(line.bytes())
            .position(|(a, b)| a != b)
            .unwrap_or(canonical.len().min(line.len()));
        return Err(err(
            at,
            "non-canonical spelling (rationals must be in lowest terms)",
        ));
    }
    Ok((vector, voters, lottery))
}

impl LotteryTable {
    pub fn new(entries: Vec<(MarginVector, u32, Lottery)>) -> Result<Self, LotteryError> {
        let mut lookup = HashMap::with_capacity(entries.len());
        for (i, (v, _, _)) in entries.iter().enumerate() {
            if lookup.insert(*v, i).is_some() {
                return Err(LotteryError::Duplicate(*v));
            }
        }
        Ok(LotteryTable { entries, lookup })
    }

    pub fn from_fn(index: &TournamentIndex, f: impl Fn(&MarginVector) -> Lottery + Sync) -> Self {
        let entries = (0..index.len())
            .into_par_iter()
            .map(|i| {
                let v = index.vector(i);
                (v, index.min_voters(i), f(&v))
            })
            .collect();
        LotteryTable::new(entries).expect("index vectors are distinct")
    }

    /// Degenerate lotteries on the choices of a single-valued rule.
    pub fn from_rule(table: &RuleTable) -> Self {
        let entries = table
            .entries()
            .iter()
            .map(|e| {
                (
                    e.vector,
                    e.voters,
                    Lottery::degenerate(e.choice.first().expect("non-empty choice")),
                )
            })
            .collect();
        LotteryTable::new(entries).expect("rule tables have distinct vectors")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, v: &MarginVector) -> Option<&Lottery> {
        self.lookup.get(v).map(|&i| &self.entries[i].2)
    }

    /// The set-valued rule `supp ∘ f`.
    pub fn support_table(&self) -> RuleTable {
        let entries = self
            .entries
            .iter()
            .map(|(v, n, l)| TableEntry {
                vector: *v,
                voters: *n,
                choice: l.support(),
            })
            .collect();
        RuleTable::new(TableMode::Set, entries)
            .expect("supports are non-empty and vectors distinct")
    }

    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (v, n, l) in &self.entries {
            writeln!(w, "{}", format_lottery_entry(v, *n, l))?;
        }
        w.flush()
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self, LotteryError> {
        let mut entries = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            entries.push(parse_lottery_entry(line).map_err(|e| LotteryError::Line {
                line: i + 1,
                source: Box::new(e),
            })?);
        }
        LotteryTable::new(entries)
    }
}

fn lottery_at(table: &LotteryTable, node: usize, v: &MarginVector) -> Result<Lottery, RuleError> {
    table
        .get(v)
        .copied()
        .ok_or(RuleError::Incomplete { node, vector: *v })
}

/// `f(t + r)` SD-dominates or equals `f(t)` for `r`, on every edge.
pub fn verify_sd_participation(
    table: &LotteryTable,
    index: &TournamentIndex,
) -> Result<Report, RuleError> {
    let interior: Vec<usize> = (0..index.len())
        .filter(|&i| index.min_voters(i) < index.n_max())
        .collect();
    let per_node: Vec<Vec<Violation>> = interior
        .par_iter()
        .map(|&i| {
            let v = index.vector(i);
            let before = lottery_at(table, i, &v)?;
            let mut out = Vec::new();
            for r in rankings4() {
                let s = v.apply_ranking(r);
                let after = lottery_at(table, i, &s)?;
                let order = sd_compare(&after, &before, r);
                if !matches!(order, SdOrder::PPreferred | SdOrder::Equal) {
                    out.push(Violation {
                        kind: "sd-participation",
                        node: i,
                        detail: format!("{v} +{r}: {before} -> {after} ({order:?})"),
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<_, RuleError>>()?;
    Ok(Report {
        checked: interior.len() * 24,
        violations: per_node.into_iter().flatten().collect(),
    })
}

/// Condorcet winners get probability one.
pub fn verify_sd_condorcet(
    table: &LotteryTable,
    index: &TournamentIndex,
) -> Result<Report, RuleError> {
    let mut report = Report {
        checked: index.len(),
        violations: Vec::new(),
    };
    for i in 0..index.len() {
        let v = index.vector(i);
        let l = lottery_at(table, i, &v)?;
        if let Some(w) = v.condorcet_winner() {
            if l != Lottery::degenerate(w) {
                report.violations.push(Violation {
                    kind: "condorcet",
                    node: i,
                    detail: format!("{v} has winner {w}, lottery {l}"),
                });
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SupportCheck {
    /// The table is not SD-participating, so nothing follows.
    Vacuous(Report),
    Checked {
        optimistic: Report,
        pessimistic: Report,
    },
}

impl SupportCheck {
    pub fn is_clean(&self) -> bool {
        match self {
            SupportCheck::Vacuous(_) => false,
            SupportCheck::Checked {
                optimistic,
                pessimistic,
            } => optimistic.is_clean() && pessimistic.is_clean(),
        }
    }
}

/// For an SD-participating table, its support rule must satisfy both
/// optimistic and pessimistic participation.
pub fn proposition_support_check(
    table: &LotteryTable,
    index: &TournamentIndex,
) -> Result<SupportCheck, RuleError> {
    let pre = verify_sd_participation(table, index)?;
    if !pre.is_clean() {
        return Ok(SupportCheck::Vacuous(pre));
    }
    let support = table.support_table();
    Ok(SupportCheck::Checked {
        optimistic: verify_optimistic(&support, index)?,
        pessimistic: verify_pessimistic(&support, index)?,
    })
}

/// Borda winner on a tournament (score `sum_y g(x,y)`), ties broken by
/// `tie_order`. Satisfies participation: a joining voter raises the score
/// of everything they rank above the old winner by more than the winner's.
pub fn borda_choice(v: &MarginVector, tie_order: &Ranking) -> Alternative {
    let score = |x: Alternative| -> i32 {
        (0..4)
            .map(Alternative::new)
            .filter(|&y| y != x)
            .map(|y| v.get(x, y))
            .sum()
    };
    let best = (0..4).map(|i| score(Alternative::new(i))).max().unwrap();
    tie_order
        .alternatives()
        .find(|&x| score(x) == best)
        .expect("some alternative attains the maximum")
}

/// Single-valued participating rules used as mixture components.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Constant(Alternative),
    Borda(Ranking),
}

impl Component {
    pub fn choose(&self, v: &MarginVector) -> Alternative {
        match self {
            Component::Constant(x) => *x,
            Component::Borda(order) => borda_choice(v, order),
        }
    }

    pub fn random<R: Rng>(rng: &mut R) -> Self {
        if rng.gen_bool(0.2) {
            Component::Constant(Alternative::new(rng.gen_range(0..4)))
        } else {
            Component::Borda(rankings4()[rng.gen_range(0..24)])
        }
    }
}

/// A convex combination of participating single-valued rules (plus any
/// extra tables supplied), with random rational weights. Every such mixture
/// is SD-participating.
pub fn random_participating_table<R: Rng>(
    index: &TournamentIndex,
    extra: &[&RuleTable],
    rng: &mut R,
) -> LotteryTable {
    let k = rng.gen_range(1..=4usize);
    let components: Vec<Component> = (0..k).map(|_| Component::random(rng)).collect();
    let use_extra: Vec<&RuleTable> = extra
        .iter()
        .copied()
        .filter(|_| rng.gen_bool(0.5))
        .collect();
    let raw: Vec<i64> = (0..k + use_extra.len())
        .map(|_| rng.gen_range(1..=12))
        .collect();
    let total: i64 = raw.iter().sum();
    let weights: Vec<Prob> = raw.iter().map(|&w| Prob::new(w, total)).collect();
    LotteryTable::from_fn(index, |v| {
        let mut p = [Prob::zero(); 4];
        for (c, w) in components.iter().zip(&weights) {
            p[c.choose(v).index()] += *w;
        }
        for (t, w) in use_extra.iter().zip(&weights[k..]) {
            let x = t
                .get(v)
                .and_then(|s| s.first())
                .expect("extra tables cover the index");
            p[x.index()] += *w;
        }
        Lottery::new(p).expect("weights sum to one")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::enumerate;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn r(s: &str) -> Ranking {
        s.parse().unwrap()
    }

    fn lot(p: [(i64, i64); 4]) -> Lottery {
        Lottery::new(p.map(|(n, d)| Prob::new(n, d))).unwrap()
    }

    #[test]
    fn worked_example_pair() {
        let p = lot([(2, 3), (0, 1), (1, 3), (0, 1)]);
        let q = lot([(1, 3), (1, 3), (1, 3), (0, 1)]);
        assert_eq!(sd_compare(&p, &q, &r("abcd")), SdOrder::PPreferred);
        assert_eq!(sd_compare(&p, &q, &r("bacd")), SdOrder::QPreferred);
        assert_eq!(sd_compare(&p, &p, &r("dcba")), SdOrder::Equal);
        assert_eq!(p.support(), AltSet::parse("ac").unwrap());
        assert_eq!(Lottery::uniform(AltSet::full(4)).support(), AltSet::full(4));
        assert_eq!(
            Lottery::degenerate(Alternative::A).support(),
            AltSet::singleton(Alternative::A)
        );
    }

    #[test]
    fn rejects_non_distributions() {
        assert!(Lottery::new([Prob::new(1, 2); 4]).is_err());
        assert!(
            Lottery::new([Prob::new(-1, 2), Prob::new(1, 2), Prob::one(), Prob::zero()]).is_err()
        );
    }

    #[test]
    fn degenerate_comparisons_follow_the_ranking() {
        for rk in rankings4() {
            for x in 0..4 {
                for y in 0..4 {
                    let (x, y) = (Alternative::new(x), Alternative::new(y));
                    let expected = if x == y {
                        SdOrder::Equal
                    } else if rk.prefers(x, y) {
                        SdOrder::PPreferred
                    } else {
                        SdOrder::QPreferred
                    };
                    assert_eq!(
                        sd_compare(&Lottery::degenerate(x), &Lottery::degenerate(y), rk),
                        expected
                    );
                    let (sx, sy) = (AltSet::singleton(x), AltSet::singleton(y));
                    assert_eq!(
                        optimistic_weakly_prefers(rk, sx, sy),
                        rk.weakly_prefers(x, y)
                    );
                    assert_eq!(
                        pessimistic_weakly_prefers(rk, sx, sy),
                        rk.weakly_prefers(x, y)
                    );
                }
            }
        }
    }

    #[test]
    fn set_extensions_on_the_worked_sets() {
        let (u, v) = (AltSet::parse("abd").unwrap(), AltSet::parse("bc").unwrap());
        let rk = r("abcd");
        assert!(optimistic_weakly_prefers(&rk, u, v) && !optimistic_weakly_prefers(&rk, v, u));
        assert!(pessimistic_weakly_prefers(&rk, v, u) && !pessimistic_weakly_prefers(&rk, u, v));
    }

    fn arb_lottery() -> impl Strategy<Value = Lottery> {
        proptest::array::uniform4(0i64..6).prop_filter_map("non-zero", |w| {
            let t: i64 = w.iter().sum();
            (t > 0).then(|| Lottery::new(w.map(|x| Prob::new(x, t))).unwrap())
        })
    }

    fn weakly(p: &Lottery, q: &Lottery, rk: &Ranking) -> bool {
        matches!(sd_compare(p, q, rk), SdOrder::PPreferred | SdOrder::Equal)
    }

    proptest! {
        #[test]
        fn sd_is_a_partial_order(p in arb_lottery(), q in arb_lottery(), s in arb_lottery(), k in 0usize..24) {
            let rk = &rankings4()[k];
            prop_assert!(weakly(&p, &p, rk));
            if weakly(&p, &q, rk) && weakly(&q, &p, rk) {
                prop_assert_eq!(p, q);
            }
            if weakly(&p, &q, rk) && weakly(&q, &s, rk) {
                prop_assert!(weakly(&p, &s, rk));
            }
            let flipped = match sd_compare(&q, &p, rk) {
                SdOrder::PPreferred => SdOrder::QPreferred,
                SdOrder::QPreferred => SdOrder::PPreferred,
                o => o,
            };
            prop_assert_eq!(sd_compare(&p, &q, rk), flipped);
        }

        #[test]
        fn lottery_lines_round_trip(l in arb_lottery(), n in 1u32..20) {
            let v = MarginVector([1, -1, 3, 1, 1, -1]);
            let line = format_lottery_entry(&v, n, &l);
            prop_assert_eq!(parse_lottery_entry(&line).unwrap(), (v, n, l));
        }
    }

    #[test]
    fn lottery_line_format() {
        let l = lot([(2, 3), (0, 1), (1, 3), (0, 1)]);
        let line = format_lottery_entry(&MarginVector([1; 6]), 1, &l);
        assert_eq!(line, "2/3,0/1,1/3,0/1,#1,(1,1,1,1,1,1)");
        assert!(parse_lottery_entry("4/6,0/1,1/3,0/1,#1,(1,1,1,1,1,1)").is_err());
        assert!(parse_lottery_entry("1/2,0/1,1/3,0/1,#1,(1,1,1,1,1,1)").is_err());
    }

    #[test]
    fn borda_satisfies_participation() {
        let idx = enumerate(5, None);
        for order in [r("abcd"), r("dcba"), r("cadb")] {
            let t = RuleTable::from_fn(&idx, TableMode::Single, |v| {
                AltSet::singleton(borda_choice(v, &order))
            })
            .unwrap();
            assert!(crate::rules::verify_participation(&t, &idx)
                .unwrap()
                .is_clean());
        }
    }

    #[test]
    fn random_mixtures_and_supports() {
        let idx = enumerate(4, None);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let t = random_participating_table(&idx, &[], &mut rng);
            assert!(verify_sd_participation(&t, &idx).unwrap().is_clean());
            assert!(proposition_support_check(&t, &idx).unwrap().is_clean());
        }
    }

    #[test]
    fn uniform_table_fails_condorcet_only() {
        let idx = enumerate(3, None);
        let t = LotteryTable::from_fn(&idx, |_| Lottery::uniform(AltSet::full(4)));
        assert!(verify_sd_participation(&t, &idx).unwrap().is_clean());
        assert!(!verify_sd_condorcet(&t, &idx).unwrap().is_clean());
    }

    #[test]
    fn precondition_failure_is_vacuous() {
        let idx = enumerate(2, None);
        // mirror image of the Condorcet winner: not participating
        let t = LotteryTable::from_fn(&idx, |v| {
            Lottery::degenerate(
                v.condorcet_winner()
                    .map(|w| Alternative::new(3 - w.index()))
                    .unwrap_or(Alternative::A),
            )
        });
        assert!(matches!(
            proposition_support_check(&t, &idx).unwrap(),
            SupportCheck::Vacuous(_)
        ));
    }

    #[test]
    fn table_text_round_trip() {
        let idx = enumerate(2, None);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let t = random_participating_table(&idx, &[], &mut rng);
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        assert_eq!(LotteryTable::read(&buf[..]).unwrap(), t);
    }
}
