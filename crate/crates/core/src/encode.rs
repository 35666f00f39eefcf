//! Propositional encodings of "some rule of the given class satisfies
//! participation", over tournament space or a restricted profile space.
//!
//! Variable `4 * node + alt + 1` reads "the rule picks `alt` at `node`".
//! Every clause is attributed to one group, the node it constrains;
//! participation clauses belong to the node they start from.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::enumerate::TournamentIndex;
use crate::voting::{
    margins_of_profile, rankings4, AltSet, Alternative, MarginMatrix, MarginVector, Profile,
    Ranking, RuleClass, VotingError,
};

pub type Clause = Vec<i32>;

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("varmap line {line}: {message}")]
    VarMapParse { line: usize, message: String },
    #[error(transparent)]
    Voting(#[from] VotingError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn var(node: usize, alt: Alternative) -> i32 {
    (4 * node + alt.index() + 1) as i32
}

/// Inverse of [`var`].
pub fn decode_var(v: i32) -> (usize, Alternative) {
    let i = (v.unsigned_abs() - 1) as usize;
    (i / 4, Alternative::new(i % 4))
}

/// A finite set of nodes (tournaments or profiles) with one-voter edges.
pub trait NodeSpace: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn margins(&self, node: usize) -> MarginMatrix;

    /// A voter count at which the node is realized.
    fn min_voters(&self, node: usize) -> u32;

    /// Alternatives that are Pareto-dominated at this node.
    fn pareto_excluded(&self, node: usize) -> AltSet;

    /// Outgoing edges `(ranking, successor)`, in lexicographic ranking order.
    fn edges(&self, node: usize) -> Vec<(Ranking, usize)>;

    /// Varmap description of the node (everything after the node index).
    fn describe(&self, node: usize) -> String;
}

impl NodeSpace for TournamentIndex {
    fn len(&self) -> usize {
        TournamentIndex::len(self)
    }

    fn margins(&self, node: usize) -> MarginMatrix {
        self.vector(node).to_matrix()
    }

    fn min_voters(&self, node: usize) -> u32 {
        TournamentIndex::min_voters(self, node)
    }

    fn pareto_excluded(&self, node: usize) -> AltSet {
        self.vector(node).pareto_excluded(self.min_voters(node))
    }

    fn edges(&self, node: usize) -> Vec<(Ranking, usize)> {
        if TournamentIndex::min_voters(self, node) >= self.n_max() {
            return Vec::new();
        }
        rankings4()
            .iter()
            .enumerate()
            .filter_map(|(k, r)| self.successor(node, k).map(|s| (*r, s)))
            .collect()
    }

    fn describe(&self, node: usize) -> String {
        let e = self.vector(node).entries();
        format!(
            "{} {} {} {} {} {} {}",
            TournamentIndex::min_voters(self, node),
            e[0],
            e[1],
            e[2],
            e[3],
            e[4],
            e[5]
        )
    }
}

/// Profiles extending a base profile by voters drawn from a fixed list of
/// rankings, up to `n_max` voters in total.
#[derive(Debug, Clone)]
pub struct ProfileSpace {
    base: Profile,
    allowed: Vec<Ranking>,
    n_max: u32,
    nodes: Vec<Vec<u8>>,
    layer_offsets: Vec<usize>,
    lookup: HashMap<Vec<u8>, usize>,
    vectors: Vec<MarginVector>,
}

impl ProfileSpace {
    pub fn new(base: Profile, allowed: &[Ranking], n_max: u32) -> Result<Self, EncodeError> {
        if base.is_empty() {
            return Err(EncodeError::Config("base profile must be non-empty".into()));
        }
        if base.m() != 4 {
            return Err(EncodeError::Config(
                "profile space needs four alternatives".into(),
            ));
        }
        if allowed.is_empty() {
            return Err(EncodeError::Config("allowed ranking list is empty".into()));
        }
        if n_max < base.n() {
            return Err(EncodeError::Config(format!(
                "n_max {n_max} below the base profile's {} voters",
                base.n()
            )));
        }
        let mut allowed = allowed.to_vec();
        allowed.sort();
        allowed.dedup();
        let extra = n_max - base.n();

        let mut nodes: Vec<Vec<u8>> = Vec::new();
        let mut layer_offsets = Vec::new();
        let mut layer = vec![vec![0u8; allowed.len()]];
        for k in 0..=extra {
            layer_offsets.push(nodes.len());
            layer.sort();
            nodes.extend(layer.iter().cloned());
            if k == extra {
                break;
            }
            let mut next: Vec<Vec<u8>> = layer
                .iter()
                .flat_map(|c| {
                    (0..c.len()).map(move |i| {
                        let mut d = c.clone();
                        d[i] += 1;
                        d
                    })
                })
                .collect();
            next.sort();
            next.dedup();
            layer = next;
        }
        layer_offsets.push(nodes.len());

        let lookup = nodes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();
        let mut space = ProfileSpace {
            base,
            allowed,
            n_max,
            nodes,
            layer_offsets,
            lookup,
            vectors: Vec::new(),
        };
        space.vectors = (0..space.nodes.len())
            .into_par_iter()
            .map(|i| margins_of_profile(&space.profile(i)).expect("non-empty profile"))
            .collect();
        Ok(space)
    }

    pub fn base(&self) -> &Profile {
        &self.base
    }

    pub fn allowed(&self) -> &[Ranking] {
        &self.allowed
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn profile(&self, node: usize) -> Profile {
        let mut p = self.base.clone();
        for (r, &c) in self.allowed.iter().zip(&self.nodes[node]) {
            if c > 0 {
                p = p.add_voters(r, c as u32).expect("four alternatives");
            }
        }
        p
    }

    pub fn vector(&self, node: usize) -> MarginVector {
        self.vectors[node]
    }

    pub fn index_of(&self, profile: &Profile) -> Option<usize> {
        let mut rest = profile.clone();
        for (r, k) in self.base.counts() {
            rest = rest.remove_voters(r, k).ok()?;
        }
        let mut counts = vec![0u8; self.allowed.len()];
        for (r, k) in rest.counts() {
            let i = self.allowed.binary_search(r).ok()?;
            counts[i] = k as u8;
        }
        self.lookup.get(&counts).copied()
    }
}

impl NodeSpace for ProfileSpace {
    fn len(&self) -> usize {
        self.nodes.len()
    }

    fn margins(&self, node: usize) -> MarginMatrix {
        self.vectors[node].to_matrix()
    }

    fn min_voters(&self, node: usize) -> u32 {
        let layer = self.layer_offsets.partition_point(|&o| o <= node) - 1;
        self.base.n() + layer as u32
    }

    fn pareto_excluded(&self, node: usize) -> AltSet {
        self.profile(node).pareto_dominated()
    }

    fn edges(&self, node: usize) -> Vec<(Ranking, usize)> {
        if self.min_voters(node) >= self.n_max {
            return Vec::new();
        }
        let counts = &self.nodes[node];
        self.allowed
            .iter()
            .enumerate()
            .filter_map(|(i, r)| {
                let mut d = counts.clone();
                d[i] += 1;
                self.lookup.get(&d).map(|&s| (*r, s))
            })
            .collect()
    }

    fn describe(&self, node: usize) -> String {
        format!("{} {}", self.min_voters(node), self.profile(node))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValueMode {
    /// One alternative per node (with mutex clauses).
    Single,
    /// A non-empty set per node (no mutex clauses).
    SetValued,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Directions {
    /// Addition direction; optimistic participation in set-valued mode.
    pub optimistic: bool,
    /// Removal direction; pessimistic participation in set-valued mode.
    pub pessimistic: bool,
}

impl Directions {
    pub const OPTIMISTIC: Directions = Directions {
        optimistic: true,
        pessimistic: false,
    };
    pub const PESSIMISTIC: Directions = Directions {
        optimistic: false,
        pessimistic: true,
    };
    pub const BOTH: Directions = Directions {
        optimistic: true,
        pessimistic: true,
    };
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EncodingConfig {
    pub rule: RuleClass,
    pub top_cycle: bool,
    pub pareto: bool,
    pub value_mode: ValueMode,
    pub directions: Directions,
    /// Drop clauses subsumed by the unit clauses of their nodes and strip
    /// literals those units falsify. The set of models is unchanged.
    pub simplify: bool,
}

impl Default for EncodingConfig {
    fn default() -> Self {
        EncodingConfig {
            rule: RuleClass::Condorcet,
            top_cycle: false,
            pareto: false,
            value_mode: ValueMode::Single,
            directions: Directions::OPTIMISTIC,
            simplify: false,
        }
    }
}

impl EncodingConfig {
    pub fn validate(&self) -> Result<(), EncodeError> {
        match self.value_mode {
            ValueMode::Single if !self.directions.optimistic => Err(EncodeError::Config(
                "single-valued mode needs the addition direction; the removal direction alone is not supported".into(),
            )),
            ValueMode::SetValued if !self.directions.optimistic && !self.directions.pessimistic => {
                Err(EncodeError::Config(
                    "set-valued mode needs at least one participation direction".into(),
                ))
            }
            _ => Ok(()),
        }
    }

    pub fn describe(&self) -> String {
        let mut s = format!("rule={}", self.rule);
        if self.top_cycle {
            s.push_str(" top-cycle");
        }
        if self.pareto {
            s.push_str(" pareto");
        }
        match self.value_mode {
            ValueMode::Single => s.push_str(" single"),
            ValueMode::SetValued => s.push_str(" set-valued"),
        }
        if self.directions.optimistic {
            s.push_str(" optimistic");
        }
        if self.directions.pessimistic {
            s.push_str(" pessimistic");
        }
        if self.simplify {
            s.push_str(" simplified");
        }
        s
    }
}

pub fn emit_nonempty(node: usize) -> Clause {
    (0..4).map(|a| var(node, Alternative::new(a))).collect()
}

pub fn emit_mutex(node: usize) -> Vec<Clause> {
    let mut out = Vec::with_capacity(6);
    for x in 0..4 {
        for y in (x + 1)..4 {
            out.push(vec![
                -var(node, Alternative::new(x)),
                -var(node, Alternative::new(y)),
            ]);
        }
    }
    out
}

/// Unit clauses fixing the choice to the Condorcet winner, if there is one.
pub fn emit_condorcet(node: usize, margins: &MarginMatrix) -> Vec<Clause> {
    match margins.condorcet_winner() {
        None => Vec::new(),
        Some(w) => (0..4)
            .map(Alternative::new)
            .map(|x| vec![if x == w { var(node, x) } else { -var(node, x) }])
            .collect(),
    }
}

/// Alternatives the rule class and structural filters forbid at a node.
pub fn forbidden_alternatives(
    rule: RuleClass,
    top_cycle: bool,
    pareto_excluded: Option<AltSet>,
    margins: &MarginMatrix,
) -> AltSet {
    let all = AltSet::full(4);
    let mut forbidden = match rule {
        RuleClass::Condorcet => AltSet::EMPTY,
        RuleClass::Maximin => all.difference(margins.maximin_winners()),
        RuleClass::Kemeny => all.difference(margins.kemeny_winners()),
    };
    if top_cycle {
        forbidden = forbidden.union(all.difference(margins.top_cycle()));
    }
    if let Some(p) = pareto_excluded {
        forbidden = forbidden.union(p);
    }
    forbidden
}

/// Negative units for every alternative outside the configured winner sets.
pub fn emit_rule_restriction(
    node: usize,
    rule: RuleClass,
    top_cycle: bool,
    pareto_excluded: Option<AltSet>,
    margins: &MarginMatrix,
) -> Vec<Clause> {
    forbidden_alternatives(rule, top_cycle, pareto_excluded, margins)
        .iter()
        .map(|x| vec![-var(node, x)])
        .collect()
}

/// `x` chosen at `node` implies something weakly better (for `ranking`) is
/// chosen at `succ`, for each `x`.
pub fn emit_participation(node: usize, succ: usize, ranking: &Ranking) -> Vec<Clause> {
    ranking
        .alternatives()
        .map(|x| {
            let mut c = vec![-var(node, x)];
            c.extend(
                ranking
                    .upper_closure(AltSet::singleton(x))
                    .iter()
                    .map(|y| var(succ, y)),
            );
            c
        })
        .collect()
}

/// `x` chosen at `succ` implies something weakly worse (for `ranking`) is
/// chosen at `node`, where `succ` is `node` plus one `ranking` voter.
pub fn emit_pessimistic_participation(node: usize, succ: usize, ranking: &Ranking) -> Vec<Clause> {
    ranking
        .alternatives()
        .map(|x| {
            let mut c = vec![-var(succ, x)];
            c.extend(
                ranking
                    .lower_closure(AltSet::singleton(x))
                    .iter()
                    .map(|y| var(node, y)),
            );
            c
        })
        .collect()
}

/// Unit clauses of a node as (forced winner, forbidden set).
fn node_units<S: NodeSpace + ?Sized>(
    space: &S,
    cfg: &EncodingConfig,
    node: usize,
) -> (Option<Alternative>, AltSet) {
    let mm = space.margins(node);
    let winner = mm.condorcet_winner();
    let pareto = cfg.pareto.then(|| space.pareto_excluded(node));
    let mut forbidden = forbidden_alternatives(cfg.rule, cfg.top_cycle, pareto, &mm);
    if let Some(w) = winner {
        forbidden = AltSet::full(4).difference(AltSet::singleton(w));
    }
    (winner, forbidden)
}

/// Literal value implied by unit clauses: `Some(true)` if fixed true.
fn unit_value(winner: Option<Alternative>, forbidden: AltSet, x: Alternative) -> Option<bool> {
    if winner == Some(x) {
        Some(true)
    } else if forbidden.contains(x) {
        Some(false)
    } else {
        None
    }
}

/// Receives clauses in emission order.
pub trait ClauseSink {
    fn clause(&mut self, group: u32, lits: &[i32]) -> io::Result<()>;
}

/// Counts clauses without storing them.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct ClauseCounter {
    pub clauses: u64,
    pub literals: u64,
}

impl ClauseSink for ClauseCounter {
    fn clause(&mut self, _group: u32, lits: &[i32]) -> io::Result<()> {
        self.clauses += 1;
        self.literals += lits.len() as u64;
        Ok(())
    }
}

/// Keeps every clause with its group, for tests and small instances.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct ClauseCollector {
    pub clauses: Vec<(u32, Clause)>,
}

impl ClauseSink for ClauseCollector {
    fn clause(&mut self, group: u32, lits: &[i32]) -> io::Result<()> {
        self.clauses.push((group, lits.to_vec()));
        Ok(())
    }
}

/// Emits all clauses of one node (its group) into `sink`.
pub fn emit_node<S: NodeSpace + ?Sized, K: ClauseSink + ?Sized>(
    space: &S,
    cfg: &EncodingConfig,
    node: usize,
    sink: &mut K,
) -> io::Result<()> {
    let group = node as u32 + 1;
    let (winner, forbidden) = node_units(space, cfg, node);
    let simplify = cfg.simplify;

    let mut buf: Vec<i32> = Vec::with_capacity(8);
    // Writes `lits` after unit-based simplification. `units` resolves a
    // literal's node to its unit information.
    let put = |sink: &mut K,
               lits: &[i32],
               buf: &mut Vec<i32>,
               units: &dyn Fn(usize) -> (Option<Alternative>, AltSet)|
     -> io::Result<()> {
        if !simplify {
            return sink.clause(group, lits);
        }
        buf.clear();
        for &l in lits {
            let (n, x) = decode_var(l);
            let (w, f) = units(n);
            match unit_value(w, f, x) {
                Some(v) if v == (l > 0) => return Ok(()),
                Some(_) => {}
                None => buf.push(l),
            }
        }
        sink.clause(group, buf)
    };

    let own = |n: usize| {
        debug_assert_eq!(n, node);
        (winner, forbidden)
    };

    // Non-empty and mutex.
    put(sink, &emit_nonempty(node), &mut buf, &own)?;
    if cfg.value_mode == ValueMode::Single {
        for c in emit_mutex(node) {
            put(sink, &c, &mut buf, &own)?;
        }
    }
    // Units.
    if let Some(w) = winner {
        sink.clause(group, &[var(node, w)])?;
    }
    for x in forbidden.iter() {
        sink.clause(group, &[-var(node, x)])?;
    }

    let edges = space.edges(node);
    if edges.is_empty() {
        return Ok(());
    }
    let mut cache: Vec<(usize, (Option<Alternative>, AltSet))> =
        Vec::with_capacity(edges.len() + 1);
    cache.push((node, (winner, forbidden)));
    if simplify {
        for &(_, s) in &edges {
            cache.push((s, node_units(space, cfg, s)));
        }
    }
    let lookup = |n: usize| {
        cache
            .iter()
            .find(|(m, _)| *m == n)
            .map(|(_, u)| *u)
            .expect("units cached for every endpoint")
    };
    for (ranking, succ) in edges {
        if cfg.directions.optimistic {
            for c in emit_participation(node, succ, &ranking) {
                put(sink, &c, &mut buf, &lookup)?;
            }
        }
        if cfg.directions.pessimistic {
            for c in emit_pessimistic_participation(node, succ, &ranking) {
                put(sink, &c, &mut buf, &lookup)?;
            }
        }
    }
    Ok(())
}

/// Sizes of an encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodingSummary {
    pub variables: u64,
    pub clauses: u64,
    pub groups: u64,
}

fn push_int(out: &mut Vec<u8>, v: i64) {
    let mut tmp = [0u8; 24];
    let mut i = tmp.len();
    let neg = v < 0;
    let mut u = v.unsigned_abs();
    loop {
        i -= 1;
        tmp[i] = b'0' + (u % 10) as u8;
        u /= 10;
        if u == 0 {
            break;
        }
    }
    if neg {
        i -= 1;
        tmp[i] = b'-';
    }
    out.extend_from_slice(&tmp[i..]);
}

/// Renders clauses as DIMACS and/or GCNF body lines.
#[derive(Default)]
struct Renderer {
    cnf: Option<Vec<u8>>,
    gcnf: Option<Vec<u8>>,
}

impl ClauseSink for Renderer {
    fn clause(&mut self, group: u32, lits: &[i32]) -> io::Result<()> {
        if let Some(out) = self.cnf.as_mut() {
            for &l in lits {
                push_int(out, l as i64);
                out.push(b' ');
            }
            out.extend_from_slice(b"0\n");
        }
        if let Some(out) = self.gcnf.as_mut() {
            out.push(b'{');
            push_int(out, group as i64);
            out.extend_from_slice(b"} ");
            for &l in lits {
                push_int(out, l as i64);
                out.push(b' ');
            }
            out.extend_from_slice(b"0\n");
        }
        Ok(())
    }
}

/// Output streams for [`encode`]. Any subset may be present.
#[derive(Default)]
pub struct EncodingOutputs<'a> {
    pub cnf: Option<&'a mut dyn Write>,
    pub gcnf: Option<&'a mut dyn Write>,
    pub varmap: Option<&'a mut dyn Write>,
    /// Extra `c` comment lines for the headers.
    pub comments: Vec<String>,
}

const CHUNK: usize = 4096;

/// Counts the clauses of an encoding without rendering them.
pub fn count_clauses<S: NodeSpace + ?Sized>(space: &S, cfg: &EncodingConfig) -> u64 {
    (0..space.len())
        .into_par_iter()
        .map(|node| {
            let mut c = ClauseCounter::default();
            emit_node(space, cfg, node, &mut c).expect("counting cannot fail");
            c.clauses
        })
        .sum()
}

/// Streams the full encoding in node order. Clause generation runs in
/// parallel chunks; output is written by one writer in index order, so the
/// bytes do not depend on the thread count.
pub fn encode<S: NodeSpace + ?Sized>(
    space: &S,
    cfg: &EncodingConfig,
    mut outputs: EncodingOutputs<'_>,
) -> Result<EncodingSummary, EncodeError> {
    cfg.validate()?;
    let n = space.len();
    let summary = EncodingSummary {
        variables: 4 * n as u64,
        clauses: count_clauses(space, cfg),
        groups: n as u64,
    };

    let mut header = String::new();
    writeln!(header, "c no-show paradox encoding: {}", cfg.describe()).unwrap();
    for c in &outputs.comments {
        writeln!(header, "c {c}").unwrap();
    }
    if let Some(w) = outputs.cnf.as_mut() {
        w.write_all(header.as_bytes())?;
        writeln!(w, "p cnf {} {}", summary.variables, summary.clauses)?;
    }
    if let Some(w) = outputs.gcnf.as_mut() {
        w.write_all(header.as_bytes())?;
        writeln!(
            w,
            "p gcnf {} {} {}",
            summary.variables, summary.clauses, summary.groups
        )?;
    }

    let want_cnf = outputs.cnf.is_some();
    let want_gcnf = outputs.gcnf.is_some();
    let mut emitted = 0u64;
    if want_cnf || want_gcnf {
        let chunks: Vec<_> = (0..n).step_by(CHUNK).collect();
        // Bounded batches keep memory flat on large instances.
        for batch in chunks.chunks(64) {
            let rendered: Vec<(Renderer, u64)> = batch
                .par_iter()
                .map(|&start| {
                    let mut r = Renderer {
                        cnf: want_cnf.then(Vec::new),
                        gcnf: want_gcnf.then(Vec::new),
                    };
                    let mut count = ClauseCounter::default();
                    for node in start..(start + CHUNK).min(n) {
                        emit_node(space, cfg, node, &mut r).expect("rendering into memory");
                        emit_node(space, cfg, node, &mut count).expect("counting");
                    }
                    (r, count.clauses)
                })
                .collect();
            for (r, c) in rendered {
                emitted += c;
                if let (Some(w), Some(b)) = (outputs.cnf.as_mut(), r.cnf) {
                    w.write_all(&b)?;
                }
                if let (Some(w), Some(b)) = (outputs.gcnf.as_mut(), r.gcnf) {
                    w.write_all(&b)?;
                }
            }
        }
        debug_assert_eq!(emitted, summary.clauses);
    }
    if let Some(w) = outputs.cnf.as_mut() {
        w.flush()?;
    }
    if let Some(w) = outputs.gcnf.as_mut() {
        w.flush()?;
    }

    if let Some(w) = outputs.varmap.as_mut() {
        write_varmap(space, w)?;
    }
    Ok(summary)
}

/// `<var_id> <node_index> <min_voters> <description> <alt_label>` per variable.
pub fn write_varmap<S: NodeSpace + ?Sized, W: Write + ?Sized>(
    space: &S,
    w: &mut W,
) -> io::Result<()> {
    let mut line = String::new();
    for node in 0..space.len() {
        let desc = space.describe(node);
        for a in 0..4 {
            let x = Alternative::new(a);
            line.clear();
            writeln!(line, "{} {} {} {}", var(node, x), node, desc, x.label()).unwrap();
            w.write_all(line.as_bytes())?;
        }
    }
    w.flush()
}

/// What a node of a varmap denotes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKey {
    Tournament(MarginVector),
    Profile(Profile),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarMapNode {
    pub index: usize,
    pub min_voters: u32,
    pub key: NodeKey,
}

/// Parsed variable map, one entry per node.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VariableMap {
    pub nodes: Vec<VarMapNode>,
}

impl VariableMap {
    pub fn num_vars(&self) -> usize {
        4 * self.nodes.len()
    }

    pub fn from_space<S: NodeSpace + ?Sized>(space: &S) -> Result<Self, EncodeError> {
        let mut buf = Vec::new();
        write_varmap(space, &mut buf)?;
        VariableMap::read(&buf[..])
    }

    pub fn is_tournament_space(&self) -> bool {
        self.nodes
            .first()
            .map(|n| matches!(n.key, NodeKey::Tournament(_)))
            .unwrap_or(true)
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self, EncodeError> {
        let mut nodes: Vec<VarMapNode> = Vec::new();
        for (line_no, line) in input.lines().enumerate() {
            let line = line?;
            let err = |message: String| EncodeError::VarMapParse {
                line: line_no + 1,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let num = |i: usize| -> Result<i64, EncodeError> {
                fields
                    .get(i)
                    .ok_or_else(|| err(format!("missing field {}", i + 1)))?
                    .parse::<i64>()
                    .map_err(|e| err(format!("field {}: {e}", i + 1)))
            };
            let var_id = num(0)?;
            let index = num(1)? as usize;
            let min_voters = num(2)? as u32;
            let label = fields.last().copied().unwrap_or_default();
            let alt = label
                .chars()
                .next()
                .and_then(Alternative::from_label)
                .filter(|_| label.len() == 1)
                .ok_or_else(|| err(format!("bad alternative label {label:?}")))?;
            if var_id != var(index, alt) as i64 {
                return Err(err(format!(
                    "variable {var_id} does not match node {index} alternative {alt}"
                )));
            }
            let key = match fields.len() {
                10 => {
                    let mut v = [0i8; 6];
                    for j in 0..6 {
                        v[j] = num(3 + j)? as i8;
                    }
                    NodeKey::Tournament(MarginVector(v))
                }
                5 => NodeKey::Profile(Profile::parse(fields[3]).map_err(|e| err(e.to_string()))?),
                k => return Err(err(format!("unexpected field count {k}"))),
            };
            match nodes.last() {
                Some(last) if last.index == index => {
                    if last.key != key {
                        return Err(err(format!("node {index} described inconsistently")));
                    }
                }
                _ => {
                    if index != nodes.len() {
                        return Err(err(format!("node {index} out of order")));
                    }
                    nodes.push(VarMapNode {
                        index,
                        min_voters,
                        key,
                    });
                }
            }
        }
        Ok(VariableMap { nodes })
    }
}
