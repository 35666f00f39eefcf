//! Preference and profile arithmetic, majority margins and winner sets.
//!
//! Alternatives are small integer ids labelled `a`, `b`, `c`, ... Rankings are
//! strict total orders (best first). Profiles are anonymous multisets of
//! rankings. The weighted tournament induced by a profile over four
//! alternatives is stored compactly as a [`MarginVector`]; general `m` goes
//! through [`MarginMatrix`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use thiserror::Error;

/// Largest number of alternatives supported by the fixed-size types below.
pub const MAX_ALTS: usize = 8;

/// The six unordered pairs over `{a, b, c, d}`, in lookup-table column order.
pub const PAIRS4: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VotingError {
    #[error("empty electorate")]
    EmptyElectorate,
    #[error("voter not in profile: cannot remove {requested} x {ranking} (present: {present})")]
    VoterNotInProfile {
        ranking: Ranking,
        requested: u32,
        present: u32,
    },
    #[error("alternative count mismatch: expected {expected}, found {found}")]
    AlternativeCount { expected: usize, found: usize },
    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },
}

fn parse_err(position: usize, message: impl Into<String>) -> VotingError {
    VotingError::Parse {
        position,
        message: message.into(),
    }
}

/// An alternative, identified by its index.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Alternative(u8);

impl Alternative {
    pub const A: Alternative = Alternative(0);
    pub const B: Alternative = Alternative(1);
    pub const C: Alternative = Alternative(2);
    pub const D: Alternative = Alternative(3);

    pub fn new(id: usize) -> Self {
        assert!(id < MAX_ALTS, "alternative id {id} out of range");
        Alternative(id as u8)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn label(self) -> char {
        (b'a' + self.0) as char
    }

    pub fn from_label(c: char) -> Option<Self> {
        let c = c as u32;
        let a = 'a' as u32;
        if c >= a && c < a + MAX_ALTS as u32 {
            Some(Alternative((c - a) as u8))
        } else {
            None
        }
    }
}

impl fmt::Debug for Alternative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl fmt::Display for Alternative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// A set of alternatives as a bitmask.
///
/// Winner operations always return non-empty sets; other producers (for
/// instance [`MarginMatrix::pareto_excluded`]) may return the empty set.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct AltSet(u8);

impl AltSet {
    pub const EMPTY: AltSet = AltSet(0);

    pub fn from_bits(bits: u8) -> Self {
        AltSet(bits)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn full(m: usize) -> Self {
        AltSet(((1u16 << m) - 1) as u8)
    }

    pub fn singleton(x: Alternative) -> Self {
        AltSet(1 << x.0)
    }

    pub fn contains(self, x: Alternative) -> bool {
        self.0 & (1 << x.0) != 0
    }

    pub fn insert(&mut self, x: Alternative) {
        self.0 |= 1 << x.0;
    }

    pub fn remove(&mut self, x: Alternative) {
        self.0 &= !(1 << x.0);
    }

    pub fn union(self, other: AltSet) -> AltSet {
        AltSet(self.0 | other.0)
    }

    pub fn intersection(self, other: AltSet) -> AltSet {
        AltSet(self.0 & other.0)
    }

    pub fn difference(self, other: AltSet) -> AltSet {
        AltSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: AltSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Lowest-indexed member, i.e. the alphabetically first one.
    pub fn first(self) -> Option<Alternative> {
        (self.0 != 0).then(|| Alternative(self.0.trailing_zeros() as u8))
    }

    pub fn iter(self) -> impl Iterator<Item = Alternative> {
        (0..MAX_ALTS as u8)
            .filter(move |i| self.0 & (1 << i) != 0)
            .map(Alternative)
    }

    /// Parses concatenated labels such as `"ab"`. `"-"` denotes the empty set.
    pub fn parse(text: &str) -> Result<Self, VotingError> {
        if text == "-" {
            return Ok(AltSet::EMPTY);
        }
        if text.is_empty() {
            return Err(parse_err(0, "empty alternative set"));
        }
        let mut set = AltSet::EMPTY;
        for (i, c) in text.chars().enumerate() {
            let x = Alternative::from_label(c)
                .ok_or_else(|| parse_err(i, format!("unknown alternative {c:?}")))?;
            if set.contains(x) {
                return Err(parse_err(i, format!("duplicate alternative {c:?}")));
            }
            set.insert(x);
        }
        Ok(set)
    }
}

impl FromIterator<Alternative> for AltSet {
    fn from_iter<I: IntoIterator<Item = Alternative>>(iter: I) -> Self {
        let mut s = AltSet::EMPTY;
        for x in iter {
            s.insert(x);
        }
        s
    }
}

impl fmt::Display for AltSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "-");
        }
        for x in self.iter() {
            write!(f, "{}", x.label())?;
        }
        Ok(())
    }
}

impl fmt::Debug for AltSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{self}}}")
    }
}

/// A strict total order over `m` alternatives, best first.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ranking {
    len: u8,
    order: [u8; MAX_ALTS],
}

impl Ranking {
    pub fn from_order(order: &[Alternative]) -> Result<Self, VotingError> {
        let m = order.len();
        if m == 0 || m > MAX_ALTS {
            return Err(parse_err(0, format!("ranking length {m} out of range")));
        }
        let mut seen = AltSet::EMPTY;
        let mut buf = [0u8; MAX_ALTS];
        for (i, &x) in order.iter().enumerate() {
            if x.index() >= m {
                return Err(parse_err(
                    i,
                    format!("alternative {x} outside a ranking of length {m}"),
                ));
            }
            if seen.contains(x) {
                return Err(parse_err(i, format!("alternative {x} repeated")));
            }
            seen.insert(x);
            buf[i] = x.0;
        }
        Ok(Ranking {
            len: m as u8,
            order: buf,
        })
    }

    /// All rankings over `m` alternatives in lexicographic order of their labels.
    pub fn all(m: usize) -> Vec<Ranking> {
        let mut out = Vec::new();
        let mut current = Vec::with_capacity(m);
        let mut used = vec![false; m];
        fn rec(
            m: usize,
            current: &mut Vec<Alternative>,
            used: &mut [bool],
            out: &mut Vec<Ranking>,
        ) {
            if current.len() == m {
                out.push(Ranking::from_order(current).expect("valid permutation"));
                return;
            }
            for i in 0..m {
                if !used[i] {
                    used[i] = true;
                    current.push(Alternative::new(i));
                    rec(m, current, used, out);
                    current.pop();
                    used[i] = false;
                }
            }
        }
        rec(m, &mut current, &mut used, &mut out);
        out
    }

    pub fn m(&self) -> usize {
        self.len as usize
    }

    pub fn alternatives(&self) -> impl Iterator<Item = Alternative> + '_ {
        self.order[..self.len as usize]
            .iter()
            .map(|&i| Alternative(i))
    }

    pub fn at(&self, position: usize) -> Alternative {
        assert!(position < self.m());
        Alternative(self.order[position])
    }

    pub fn position(&self, x: Alternative) -> usize {
        self.order[..self.m()]
            .iter()
            .position(|&i| i == x.0)
            .unwrap_or_else(|| panic!("alternative {x} not in ranking {self}"))
    }

    pub fn top(&self) -> Alternative {
        self.at(0)
    }

    pub fn bottom(&self) -> Alternative {
        self.at(self.m() - 1)
    }

    /// `x` strictly above `y`.
    pub fn prefers(&self, x: Alternative, y: Alternative) -> bool {
        self.position(x) < self.position(y)
    }

    /// `x` strictly above or equal to `y` (reflexive closure).
    pub fn weakly_prefers(&self, x: Alternative, y: Alternative) -> bool {
        self.position(x) <= self.position(y)
    }

    pub fn reverse(&self) -> Ranking {
        let m = self.m();
        let mut order = [0u8; MAX_ALTS];
        for i in 0..m {
            order[i] = self.order[m - 1 - i];
        }
        Ranking {
            len: self.len,
            order,
        }
    }

    pub fn relabel(&self, perm: &Permutation) -> Ranking {
        assert_eq!(perm.m(), self.m(), "permutation size mismatch");
        let mut order = [0u8; MAX_ALTS];
        for i in 0..self.m() {
            order[i] = perm.apply(Alternative(self.order[i])).0;
        }
        Ranking {
            len: self.len,
            order,
        }
    }

    /// Appends `k` fresh alternatives, in index order, at the bottom.
    pub fn pad(&self, k: usize) -> Ranking {
        let m = self.m();
        assert!(
            m + k <= MAX_ALTS,
            "cannot pad beyond {MAX_ALTS} alternatives"
        );
        let mut order = self.order;
        for i in 0..k {
            order[m + i] = (m + i) as u8;
        }
        Ranking {
            len: (m + k) as u8,
            order,
        }
    }

    /// Everything weakly above the lowest member of `s`.
    pub fn upper_closure(&self, s: AltSet) -> AltSet {
        match s.iter().map(|x| self.position(x)).max() {
            None => AltSet::EMPTY,
            Some(p) => (0..=p).map(|i| self.at(i)).collect(),
        }
    }

    /// Everything weakly below the highest member of `s`.
    pub fn lower_closure(&self, s: AltSet) -> AltSet {
        match s.iter().map(|x| self.position(x)).min() {
            None => AltSet::EMPTY,
            Some(p) => (p..self.m()).map(|i| self.at(i)).collect(),
        }
    }

    /// The best member of `s` according to this ranking.
    pub fn best_of(&self, s: AltSet) -> Option<Alternative> {
        self.alternatives().find(|&x| s.contains(x))
    }

    /// The worst member of `s` according to this ranking.
    pub fn worst_of(&self, s: AltSet) -> Option<Alternative> {
        let mut worst = None;
        for x in self.alternatives() {
            if s.contains(x) {
                worst = Some(x);
            }
        }
        worst
    }

    /// Dense index of a four-alternative ranking in [`rankings4`] order.
    pub fn index4(&self) -> usize {
        assert_eq!(self.m(), 4);
        rankings4()
            .binary_search(self)
            .expect("every four-alternative ranking is listed")
    }
}

impl fmt::Display for Ranking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for x in self.alternatives() {
            write!(f, "{}", x.label())?;
        }
        Ok(())
    }
}

impl fmt::Debug for Ranking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Ranking {
    type Err = VotingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut order = Vec::with_capacity(s.len());
        for (i, c) in s.chars().enumerate() {
            order.push(
                Alternative::from_label(c)
                    .ok_or_else(|| parse_err(i, format!("unknown alternative {c:?}")))?,
            );
        }
        Ranking::from_order(&order)
    }
}

/// The 24 rankings over `{a, b, c, d}`, lexicographic.
pub fn rankings4() -> &'static [Ranking; 24] {
    static CELL: OnceLock<[Ranking; 24]> = OnceLock::new();
    CELL.get_or_init(|| {
        Ranking::all(4)
            .try_into()
            .expect("exactly 24 rankings over four alternatives")
    })
}

/// Per-ranking ±1 contribution to each of the six margins.
pub fn ranking_signs4() -> &'static [[i8; 6]; 24] {
    static CELL: OnceLock<[[i8; 6]; 24]> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut out = [[0i8; 6]; 24];
        for (k, r) in rankings4().iter().enumerate() {
            for (j, &(x, y)) in PAIRS4.iter().enumerate() {
                out[k][j] = if r.prefers(Alternative::new(x), Alternative::new(y)) {
                    1
                } else {
                    -1
                };
            }
        }
        out
    })
}

/// A bijection on the alternatives. Written as the image of `abcd...`, so
/// `"dcba"` maps `a` to `d`, `b` to `c` and so on.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Permutation(Ranking);

impl Permutation {
    pub fn identity(m: usize) -> Self {
        let order: Vec<_> = (0..m).map(Alternative::new).collect();
        Permutation(Ranking::from_order(&order).expect("identity is a permutation"))
    }

    pub fn from_images(images: &[Alternative]) -> Result<Self, VotingError> {
        Ranking::from_order(images).map(Permutation)
    }

    pub fn m(&self) -> usize {
        self.0.m()
    }

    pub fn apply(&self, x: Alternative) -> Alternative {
        self.0.at(x.index())
    }

    pub fn apply_set(&self, s: AltSet) -> AltSet {
        s.iter().map(|x| self.apply(x)).collect()
    }

    pub fn inverse(&self) -> Permutation {
        let m = self.m();
        let mut images = vec![Alternative::A; m];
        for i in 0..m {
            images[self.apply(Alternative::new(i)).index()] = Alternative::new(i);
        }
        Permutation::from_images(&images).expect("inverse of a bijection")
    }

    /// `self` after `other`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        let images: Vec<_> = (0..self.m())
            .map(|i| self.apply(other.apply(Alternative::new(i))))
            .collect();
        Permutation::from_images(&images).expect("composition of bijections")
    }

    /// Extends with fixed points up to `m` alternatives.
    pub fn extend(&self, m: usize) -> Permutation {
        assert!(m >= self.m());
        let images: Vec<_> = (0..m)
            .map(|i| {
                if i < self.m() {
                    self.apply(Alternative::new(i))
                } else {
                    Alternative::new(i)
                }
            })
            .collect();
        Permutation::from_images(&images).expect("extension by fixed points")
    }

    pub fn all(m: usize) -> Vec<Permutation> {
        Ranking::all(m).into_iter().map(Permutation).collect()
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation({})", self.0)
    }
}

impl FromStr for Permutation {
    type Err = VotingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(Permutation)
    }
}

/// An anonymous preference profile: a count per ranking.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Profile {
    m: usize,
    n: u32,
    counts: BTreeMap<Ranking, u32>,
}

impl Profile {
    pub fn empty(m: usize) -> Self {
        Profile {
            m,
            n: 0,
            counts: BTreeMap::new(),
        }
    }

    pub fn from_counts<I>(m: usize, counts: I) -> Result<Self, VotingError>
    where
        I: IntoIterator<Item = (Ranking, u32)>,
    {
        let mut p = Profile::empty(m);
        for (r, k) in counts {
            if r.m() != m {
                return Err(VotingError::AlternativeCount {
                    expected: m,
                    found: r.m(),
                });
            }
            p.add_in_place(r, k);
        }
        Ok(p)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// `true` for the zero-voter profile, which only ever appears as an
    /// intermediate value.
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn count(&self, r: &Ranking) -> u32 {
        self.counts.get(r).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> impl Iterator<Item = (&Ranking, u32)> {
        self.counts.iter().map(|(r, &k)| (r, k))
    }

    fn add_in_place(&mut self, r: Ranking, k: u32) {
        if k == 0 {
            return;
        }
        *self.counts.entry(r).or_insert(0) += k;
        self.n += k;
    }

    pub fn add_voters(&self, r: &Ranking, k: u32) -> Result<Profile, VotingError> {
        if r.m() != self.m {
            return Err(VotingError::AlternativeCount {
                expected: self.m,
                found: r.m(),
            });
        }
        let mut p = self.clone();
        p.add_in_place(*r, k);
        Ok(p)
    }

    /// Removes `k` voters with ranking `r`. The result may have no voters
    /// left; check [`Profile::is_empty`] before treating it as an electorate.
    pub fn remove_voters(&self, r: &Ranking, k: u32) -> Result<Profile, VotingError> {
        let present = self.count(r);
        if present < k || r.m() != self.m {
            return Err(VotingError::VoterNotInProfile {
                ranking: *r,
                requested: k,
                present,
            });
        }
        let mut p = self.clone();
        if present == k {
            p.counts.remove(r);
        } else {
            p.counts.insert(*r, present - k);
        }
        p.n -= k;
        Ok(p)
    }

    /// Majority margins by direct pairwise counting.
    pub fn margin_matrix(&self) -> Result<MarginMatrix, VotingError> {
        if self.n == 0 {
            return Err(VotingError::EmptyElectorate);
        }
        let mut mm = MarginMatrix::zero(self.m);
        for (r, &k) in &self.counts {
            let k = k as i32;
            for i in 0..self.m {
                for j in (i + 1)..self.m {
                    let (x, y) = (r.at(i).index(), r.at(j).index());
                    mm.g[x][y] += k;
                    mm.g[y][x] -= k;
                }
            }
        }
        Ok(mm)
    }

    pub fn relabel(&self, perm: &Permutation) -> Profile {
        let mut p = Profile::empty(self.m);
        for (r, &k) in &self.counts {
            p.add_in_place(r.relabel(perm), k);
        }
        p
    }

    /// Adds `k` new alternatives at the bottom of every ranking.
    pub fn pad_with_bad(&self, k: usize) -> Profile {
        let mut p = Profile::empty(self.m + k);
        for (r, &c) in &self.counts {
            p.add_in_place(r.pad(k), c);
        }
        p
    }

    /// Alternatives that some other alternative beats in every ranking.
    pub fn pareto_dominated(&self) -> AltSet {
        if self.n == 0 {
            return AltSet::EMPTY;
        }
        let mut out = AltSet::EMPTY;
        for x in 0..self.m {
            let x = Alternative::new(x);
            let dominated = (0..self.m)
                .map(Alternative::new)
                .any(|y| y != x && self.counts.keys().all(|r| r.prefers(y, x)));
            if dominated {
                out.insert(x);
            }
        }
        out
    }

    /// The largest proper set of alternatives that every voter ranks below
    /// all the others (empty if there is none).
    pub fn bottom_block(&self) -> AltSet {
        let mut rankings = self.counts.keys();
        let Some(first) = rankings.next() else {
            return AltSet::EMPTY;
        };
        let rest: Vec<_> = rankings.collect();
        let mut best = AltSet::EMPTY;
        for k in 1..self.m {
            let block: AltSet = (self.m - k..self.m).map(|i| first.at(i)).collect();
            let shared = rest.iter().all(|r| {
                let b: AltSet = (self.m - k..self.m).map(|i| r.at(i)).collect();
                b == block
            });
            if shared {
                best = block;
            }
        }
        best
    }

    /// Parses `"abdc:2,bdca:3"`. A bare ranking counts once.
    pub fn parse(text: &str) -> Result<Profile, VotingError> {
        let text = text.trim();
        let mut entries = Vec::new();
        let mut offset = 0;
        for part in text.split(',') {
            let trimmed = part.trim();
            let (r, k) = match trimmed.split_once(':') {
                Some((r, k)) => {
                    let k: u32 = k.trim().parse().map_err(|_| {
                        parse_err(offset, format!("bad voter count in {trimmed:?}"))
                    })?;
                    (r.trim(), k)
                }
                None => (trimmed, 1),
            };
            let r: Ranking = r.parse().map_err(|e| match e {
                VotingError::Parse { position, message } => parse_err(offset + position, message),
                other => other,
            })?;
            entries.push((r, k));
            offset += part.len() + 1;
        }
        let m = entries
            .first()
            .map(|(r, _)| r.m())
            .ok_or_else(|| parse_err(0, "empty profile"))?;
        Profile::from_counts(m, entries)
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (r, k) in &self.counts {
            if !first {
                write!(f, ",")?;
            }
            first = false;
            write!(f, "{r}:{k}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Profile{{{self}}}")
    }
}

impl FromStr for Profile {
    type Err = VotingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Profile::parse(s)
    }
}

/// Majority margins over up to [`MAX_ALTS`] alternatives.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct MarginMatrix {
    m: usize,
    g: [[i32; MAX_ALTS]; MAX_ALTS],
}

impl MarginMatrix {
    pub fn zero(m: usize) -> Self {
        assert!(m <= MAX_ALTS);
        MarginMatrix {
            m,
            g: [[0; MAX_ALTS]; MAX_ALTS],
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, x: Alternative, y: Alternative) -> i32 {
        self.g[x.index()][y.index()]
    }

    fn alts(&self) -> impl Iterator<Item = Alternative> {
        (0..self.m).map(Alternative::new)
    }

    fn beats_all(&self, x: Alternative, strictly_positive: bool) -> bool {
        self.alts().filter(|&y| y != x).all(|y| {
            let v = self.get(x, y);
            if strictly_positive {
                v > 0
            } else {
                v < 0
            }
        })
    }

    pub fn condorcet_winner(&self) -> Option<Alternative> {
        self.alts().find(|&x| self.beats_all(x, true))
    }

    pub fn condorcet_loser(&self) -> Option<Alternative> {
        self.alts().find(|&x| self.beats_all(x, false))
    }

    /// The worst pairwise margin of `x`.
    pub fn maximin_score(&self, x: Alternative) -> i32 {
        self.alts()
            .filter(|&y| y != x)
            .map(|y| self.get(x, y))
            .min()
            .unwrap_or(0)
    }

    pub fn maximin_winners(&self) -> AltSet {
        let best = self
            .alts()
            .map(|x| self.maximin_score(x))
            .max()
            .unwrap_or(0);
        self.alts()
            .filter(|&x| self.maximin_score(x) == best)
            .collect()
    }

    pub fn maximin_lex(&self) -> Alternative {
        self.maximin_winners()
            .first()
            .expect("maximin winners are non-empty")
    }

    /// Net pairwise agreement `sum over x above y of g(x, y)` of a ranking.
    pub fn kemeny_score(&self, r: &Ranking) -> i32 {
        let mut s = 0;
        for i in 0..self.m {
            for j in (i + 1)..self.m {
                s += self.get(r.at(i), r.at(j));
            }
        }
        s
    }

    /// Tops of all score-maximal rankings (brute force over `m!` rankings).
    pub fn kemeny_winners(&self) -> AltSet {
        assert!(
            self.m <= 7,
            "Kemeny brute force limited to seven alternatives"
        );
        let owned;
        let rankings: &[Ranking] = if self.m == 4 {
            rankings4()
        } else {
            owned = Ranking::all(self.m);
            &owned
        };
        let mut best = i32::MIN;
        let mut tops = AltSet::EMPTY;
        for r in rankings {
            let s = self.kemeny_score(r);
            if s > best {
                best = s;
                tops = AltSet::singleton(r.top());
            } else if s == best {
                tops.insert(r.top());
            }
        }
        tops
    }

    /// Source strongly connected component of the "does not lose" digraph
    /// (`x -> y` whenever `g(x, y) >= 0`).
    pub fn top_cycle(&self) -> AltSet {
        let m = self.m;
        let mut reach = [[false; MAX_ALTS]; MAX_ALTS];
        for x in 0..m {
            for y in 0..m {
                reach[x][y] = x == y || self.g[x][y] >= 0;
            }
        }
        for k in 0..m {
            for i in 0..m {
                if reach[i][k] {
                    for j in 0..m {
                        if reach[k][j] {
                            reach[i][j] = true;
                        }
                    }
                }
            }
        }
        (0..m)
            .filter(|&x| (0..m).all(|y| reach[x][y]))
            .map(Alternative::new)
            .collect()
    }

    /// Alternatives unanimously beaten by someone in a realization with
    /// `n_min` voters.
    pub fn pareto_excluded(&self, n_min: u32) -> AltSet {
        let n = n_min as i32;
        self.alts()
            .filter(|&x| self.alts().any(|y| y != x && self.get(y, x) == n))
            .collect()
    }

    pub fn relabel(&self, perm: &Permutation) -> MarginMatrix {
        let mut out = MarginMatrix::zero(self.m);
        for x in self.alts() {
            for y in self.alts() {
                out.g[perm.apply(x).index()][perm.apply(y).index()] = self.get(x, y);
            }
        }
        out
    }

    /// The four-alternative compact form.
    pub fn to_vector(&self) -> Option<MarginVector> {
        if self.m != 4 {
            return None;
        }
        let mut v = [0i8; 6];
        for (j, &(x, y)) in PAIRS4.iter().enumerate() {
            v[j] = i8::try_from(self.g[x][y]).ok()?;
        }
        Some(MarginVector(v))
    }
}

/// The weighted tournament over `{a, b, c, d}` as
/// `(g(a,b), g(a,c), g(a,d), g(b,c), g(b,d), g(c,d))`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MarginVector(pub [i8; 6]);

impl MarginVector {
    pub const ZERO: MarginVector = MarginVector([0; 6]);

    pub fn entries(&self) -> [i8; 6] {
        self.0
    }

    /// Parity of the voter count of any inducing profile.
    pub fn parity(&self) -> u8 {
        (self.0[0] & 1) as u8
    }

    /// All six entries share one parity.
    pub fn is_consistent(&self) -> bool {
        self.0.iter().all(|&e| (e & 1) == (self.0[0] & 1))
    }

    pub fn max_abs(&self) -> i8 {
        self.0.iter().map(|e| e.abs()).max().unwrap_or(0)
    }

    pub fn get(&self, x: Alternative, y: Alternative) -> i32 {
        let (i, j) = (x.index(), y.index());
        if i == j {
            return 0;
        }
        let (lo, hi, sign) = if i < j { (i, j, 1) } else { (j, i, -1) };
        let k = PAIRS4
            .iter()
            .position(|&p| p == (lo, hi))
            .expect("pair over four alternatives");
        sign * self.0[k] as i32
    }

    pub fn apply_signs(&self, signs: &[i8; 6]) -> MarginVector {
        let mut v = self.0;
        for j in 0..6 {
            v[j] += signs[j];
        }
        MarginVector(v)
    }

    /// The margins after one more voter with ranking `r`.
    pub fn apply_ranking(&self, r: &Ranking) -> MarginVector {
        self.apply_signs(&ranking_signs4()[r.index4()])
    }

    /// The margins after one voter with ranking `r` leaves.
    pub fn remove_ranking(&self, r: &Ranking) -> MarginVector {
        self.apply_ranking(&r.reverse())
    }

    pub fn to_matrix(&self) -> MarginMatrix {
        let mut mm = MarginMatrix::zero(4);
        for (j, &(x, y)) in PAIRS4.iter().enumerate() {
            mm.g[x][y] = self.0[j] as i32;
            mm.g[y][x] = -(self.0[j] as i32);
        }
        mm
    }

    pub fn condorcet_winner(&self) -> Option<Alternative> {
        self.to_matrix().condorcet_winner()
    }

    pub fn condorcet_loser(&self) -> Option<Alternative> {
        self.to_matrix().condorcet_loser()
    }

    pub fn maximin_winners(&self) -> AltSet {
        self.to_matrix().maximin_winners()
    }

    pub fn maximin_lex(&self) -> Alternative {
        self.to_matrix().maximin_lex()
    }

    pub fn kemeny_winners(&self) -> AltSet {
        self.to_matrix().kemeny_winners()
    }

    pub fn top_cycle(&self) -> AltSet {
        self.to_matrix().top_cycle()
    }

    pub fn pareto_excluded(&self, n_min: u32) -> AltSet {
        self.to_matrix().pareto_excluded(n_min)
    }

    pub fn relabel(&self, perm: &Permutation) -> MarginVector {
        self.to_matrix()
            .relabel(perm)
            .to_vector()
            .expect("relabelling keeps four alternatives")
    }

    /// Parses `"(1,1,-1,1,1,1)"`; the parentheses are optional.
    pub fn parse(text: &str) -> Result<Self, VotingError> {
        let inner = text
            .trim()
            .strip_prefix('(')
            .map(|t| {
                t.strip_suffix(')')
                    .ok_or_else(|| parse_err(text.len(), "missing ')'"))
            })
            .transpose()?
            .unwrap_or(text.trim());
        let mut v = [0i8; 6];
        let mut count = 0;
        let mut offset = 0;
        for part in inner.split(',') {
            if count == 6 {
                return Err(parse_err(offset, "more than six margins"));
            }
            v[count] = part
                .trim()
                .parse()
                .map_err(|_| parse_err(offset, format!("bad margin {part:?}")))?;
            count += 1;
            offset += part.len() + 1;
        }
        if count != 6 {
            return Err(parse_err(
                offset,
                format!("expected six margins, found {count}"),
            ));
        }
        Ok(MarginVector(v))
    }
}

impl fmt::Display for MarginVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.0;
        write!(f, "({},{},{},{},{},{})", v[0], v[1], v[2], v[3], v[4], v[5])
    }
}

impl fmt::Debug for MarginVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Margins of a four-alternative profile.
pub fn margins_of_profile(profile: &Profile) -> Result<MarginVector, VotingError> {
    if profile.m() != 4 {
        return Err(VotingError::AlternativeCount {
            expected: 4,
            found: profile.m(),
        });
    }
    Ok(profile
        .margin_matrix()?
        .to_vector()
        .expect("four-alternative margins fit in i8 for realistic electorates"))
}

/// Winner set for the rule classes used by encodings and certificates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RuleClass {
    Condorcet,
    Maximin,
    Kemeny,
}

impl RuleClass {
    /// Alternatives a rule of this class may choose at the given margins.
    /// For the Condorcet class this is the winner when one exists and
    /// everything otherwise.
    pub fn allowed(&self, mm: &MarginMatrix) -> AltSet {
        match self {
            RuleClass::Condorcet => mm
                .condorcet_winner()
                .map(AltSet::singleton)
                .unwrap_or_else(|| AltSet::full(mm.m())),
            RuleClass::Maximin => mm.maximin_winners(),
            RuleClass::Kemeny => mm.kemeny_winners(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RuleClass::Condorcet => "condorcet",
            RuleClass::Maximin => "maximin",
            RuleClass::Kemeny => "kemeny",
        }
    }
}

impl FromStr for RuleClass {
    type Err = VotingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "condorcet" => Ok(RuleClass::Condorcet),
            "maximin" => Ok(RuleClass::Maximin),
            "kemeny" => Ok(RuleClass::Kemeny),
            other => Err(parse_err(0, format!("unknown rule class {other:?}"))),
        }
    }
}

impl fmt::Display for RuleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
