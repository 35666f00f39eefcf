//! Machine-checkable impossibility certificates.
//!
//! A certificate is a tree of profiles. Each node carries a claim `S`: the
//! rule picks from `S` (single-valued) or its choice set meets `S`
//! (set-valued). Edges add or remove voters, and participation transports
//! the claim to the child through the upper or lower closure under the
//! moving voter's ranking. Leaves are profiles whose forced winners avoid
//! the incoming claim.
//!
//! Alternatives that every voter ranks at the bottom are never chosen by a
//! participating Condorcet extension, and in set-valued optimistic mode some
//! chosen alternative always lies above them. Coverage and leaf checks
//! therefore ignore the bottom block wherever that argument applies, which
//! is what makes padded certificates for `m > 4` go through.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::io::{self, BufRead, Write};
use std::rc::Rc;
use std::str::FromStr;

use thiserror::Error;

use crate::encode::{decode_var, EncodingConfig, NodeKey, ValueMode, VariableMap};
use crate::voting::{
    margins_of_profile, AltSet, Alternative, MarginMatrix, MarginVector, Permutation, Profile,
    Ranking, RuleClass, VotingError,
};

#[derive(Debug, Error)]
pub enum ProofError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error("core references variable {var}, but the varmap has {len}")]
    VariableOutOfRange { var: u32, len: usize },
    #[error(transparent)]
    Voting(#[from] VotingError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Which participation axiom the certificate refutes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Participation {
    Single,
    Optimistic,
    Pessimistic,
    EgliMilner,
}

impl Participation {
    pub fn name(self) -> &'static str {
        match self {
            Participation::Single => "single",
            Participation::Optimistic => "optimistic",
            Participation::Pessimistic => "pessimistic",
            Participation::EgliMilner => "egli-milner",
        }
    }

    pub fn from_config(cfg: &EncodingConfig) -> Self {
        match (
            cfg.value_mode,
            cfg.directions.optimistic,
            cfg.directions.pessimistic,
        ) {
            (ValueMode::Single, _, _) => Participation::Single,
            (ValueMode::SetValued, true, true) => Participation::EgliMilner,
            (ValueMode::SetValued, false, true) => Participation::Pessimistic,
            (ValueMode::SetValued, _, _) => Participation::Optimistic,
        }
    }

    pub fn allows(self, op: EdgeOp) -> bool {
        match self {
            Participation::Single | Participation::EgliMilner => true,
            Participation::Optimistic => op == EdgeOp::Add,
            Participation::Pessimistic => op == EdgeOp::Remove,
        }
    }

    fn root_avoids_bottom(self) -> bool {
        self != Participation::Pessimistic
    }

    /// Whether the element witnessing the claim after `op` is known to lie
    /// above the bottom block.
    fn witness_avoids_bottom(self, op: EdgeOp) -> bool {
        match self {
            Participation::Single => true,
            _ => op == EdgeOp::Add,
        }
    }
}

impl FromStr for Participation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "single" => Ok(Participation::Single),
            "optimistic" => Ok(Participation::Optimistic),
            "pessimistic" => Ok(Participation::Pessimistic),
            "egli-milner" => Ok(Participation::EgliMilner),
            other => Err(format!("unknown participation {other:?}")),
        }
    }
}

impl fmt::Display for Participation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeOp {
    Add,
    Remove,
}

impl EdgeOp {
    pub fn symbol(self) -> char {
        match self {
            EdgeOp::Add => '+',
            EdgeOp::Remove => '-',
        }
    }

    /// The closure participation forces on the child's claim.
    pub fn closure(self, ranking: &Ranking, s: AltSet) -> AltSet {
        match self {
            EdgeOp::Add => ranking.upper_closure(s),
            EdgeOp::Remove => ranking.lower_closure(s),
        }
    }

    pub fn apply(
        self,
        profile: &Profile,
        ranking: &Ranking,
        count: u32,
    ) -> Result<Profile, VotingError> {
        match self {
            EdgeOp::Add => profile.add_voters(ranking, count),
            EdgeOp::Remove => profile.remove_voters(ranking, count),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub op: EdgeOp,
    pub count: u32,
    pub ranking: Ranking,
    pub claim_from: AltSet,
    pub claim_to: AltSet,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Leaf {
    pub node: String,
    pub winner: Alternative,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootClaim {
    pub node: String,
    pub cases: Vec<AltSet>,
    /// Automorphism of the root profile; cases are closed under its powers.
    pub symmetry: Option<Permutation>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofDocument {
    pub rule: RuleClass,
    pub participation: Participation,
    pub nodes: Vec<(String, Profile)>,
    pub root: RootClaim,
    pub edges: Vec<Edge>,
    pub leaves: Vec<Leaf>,
}

fn join_sets(sets: &[AltSet]) -> String {
    sets.iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl fmt::Display for ProofDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rule {}", self.rule)?;
        writeln!(f, "participation {}", self.participation)?;
        for (id, p) in &self.nodes {
            writeln!(f, "node {id} {p}")?;
        }
        write!(
            f,
            "root {} cases {}",
            self.root.node,
            join_sets(&self.root.cases)
        )?;
        if let Some(pi) = &self.root.symmetry {
            write!(f, " sym {pi}")?;
        }
        writeln!(f)?;
        for e in &self.edges {
            writeln!(
                f,
                "edge {} {} {} {} {} {} -> {}",
                e.from,
                e.to,
                e.op.symbol(),
                e.count,
                e.ranking,
                e.claim_from,
                e.claim_to
            )?;
        }
        for l in &self.leaves {
            writeln!(f, "leaf {} winner {}", l.node, l.winner)?;
        }
        Ok(())
    }
}

impl ProofDocument {
    pub fn parse(text: &str) -> Result<Self, ProofError> {
        Self::read(text.as_bytes())
    }

    /// Reads the line format. `#` starts a comment line.
    pub fn read<R: BufRead>(input: R) -> Result<Self, ProofError> {
        let mut rule = None;
        let mut participation = Participation::Single;
        let mut nodes = Vec::new();
        let mut root = None;
        let mut edges = Vec::new();
        let mut leaves = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let line_no = i + 1;
            let err = |message: String| ProofError::Parse {
                line: line_no,
                message,
            };
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let set = |s: &str| AltSet::parse(s).map_err(|e| err(format!("{s:?}: {e}")));
            let ranking = |s: &str| s.parse::<Ranking>().map_err(|e| err(format!("{s:?}: {e}")));
            match fields[0] {
                "rule" if fields.len() == 2 => {
                    rule = Some(
                        fields[1]
                            .parse::<RuleClass>()
                            .map_err(|e| err(e.to_string()))?,
                    );
                }
                "participation" if fields.len() == 2 => {
                    participation = fields[1].parse().map_err(err)?;
                }
                "node" if fields.len() == 3 => {
                    let p = Profile::parse(fields[2]).map_err(|e| err(e.to_string()))?;
                    nodes.push((fields[1].to_string(), p));
                }
                "root" if (fields.len() == 4 || fields.len() == 6) && fields[2] == "cases" => {
                    let cases = fields[3]
                        .split(',')
                        .map(set)
                        .collect::<Result<Vec<_>, _>>()?;
                    let symmetry = match fields.get(4) {
                        Some(&"sym") => Some(
                            fields[5]
                                .parse::<Permutation>()
                                .map_err(|e| err(e.to_string()))?,
                        ),
                        Some(other) => {
                            return Err(err(format!("expected \"sym\", found {other:?}")))
                        }
                        None => None,
                    };
                    if root.is_some() {
                        return Err(err("second root line".into()));
                    }
                    root = Some(RootClaim {
                        node: fields[1].to_string(),
                        cases,
                        symmetry,
                    });
                }
                "edge" if fields.len() == 9 && fields[7] == "->" => {
                    let op = match fields[3] {
                        "+" => EdgeOp::Add,
                        "-" => EdgeOp::Remove,
                        other => return Err(err(format!("edge operation {other:?}"))),
                    };
                    let count = fields[4]
                        .parse::<u32>()
                        .map_err(|e| err(format!("count: {e}")))?;
                    if count == 0 {
                        return Err(err("edge count must be positive".into()));
                    }
                    edges.push(Edge {
                        from: fields[1].to_string(),
                        to: fields[2].to_string(),
                        op,
                        count,
                        ranking: ranking(fields[5])?,
                        claim_from: set(fields[6])?,
                        claim_to: set(fields[8])?,
                    });
                }
                "leaf" if fields.len() == 4 && fields[2] == "winner" => {
                    let w = fields[3];
                    let winner = w
                        .chars()
                        .next()
                        .and_then(Alternative::from_label)
                        .filter(|_| w.len() == 1)
                        .ok_or_else(|| err(format!("bad winner {w:?}")))?;
                    leaves.push(Leaf {
                        node: fields[1].to_string(),
                        winner,
                    });
                }
                _ => return Err(err(format!("unrecognised line {line:?}"))),
            }
        }
        let rule = rule.ok_or_else(|| ProofError::Malformed("missing rule line".into()))?;
        let root = root.ok_or_else(|| ProofError::Malformed("missing root line".into()))?;
        Ok(ProofDocument {
            rule,
            participation,
            nodes,
            root,
            edges,
            leaves,
        })
    }

    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "{self}")
    }

    pub fn node(&self, id: &str) -> Option<&Profile> {
        self.nodes.iter().find(|(n, _)| n == id).map(|(_, p)| p)
    }

    pub fn m(&self) -> usize {
        self.node(&self.root.node).map(|p| p.m()).unwrap_or(4)
    }

    /// Largest electorate in the document, the voter bound of the statement.
    pub fn max_voters(&self) -> u32 {
        self.nodes.iter().map(|(_, p)| p.n()).max().unwrap_or(0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckKind {
    Structure,
    Arithmetic,
    Symmetry,
    Coverage,
    Edge,
    Leaf,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Structure => "structure",
            CheckKind::Arithmetic => "arithmetic",
            CheckKind::Symmetry => "symmetry",
            CheckKind::Coverage => "coverage",
            CheckKind::Edge => "edge",
            CheckKind::Leaf => "leaf",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckItem {
    pub kind: CheckKind,
    pub subject: String,
    pub ok: bool,
    pub detail: String,
}

impl fmt::Display for CheckItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.ok { "ok  " } else { "FAIL" };
        write!(
            f,
            "{tag} {} {}: {}",
            self.kind.name(),
            self.subject,
            self.detail
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CheckReport {
    pub items: Vec<CheckItem>,
    pub statement: String,
}

impl CheckReport {
    pub fn is_valid(&self) -> bool {
        !self.items.is_empty() && self.items.iter().all(|i| i.ok)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckItem> {
        self.items.iter().filter(|i| !i.ok)
    }

    pub fn count(&self, kind: CheckKind) -> usize {
        self.items.iter().filter(|i| i.kind == kind).count()
    }

    fn push(
        &mut self,
        kind: CheckKind,
        subject: impl Into<String>,
        ok: bool,
        detail: impl Into<String>,
    ) {
        self.items.push(CheckItem {
            kind,
            subject: subject.into(),
            ok,
            detail: detail.into(),
        });
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for item in &self.items {
            writeln!(f, "{item}")?;
        }
        writeln!(f, "statement {}", self.statement)?;
        let failed = self.failures().count();
        if self.is_valid() {
            writeln!(f, "VALID")
        } else {
            writeln!(
                f,
                "INVALID ({failed} of {} checks failed)",
                self.items.len()
            )
        }
    }
}

/// All pairwise margins, `ab=1 ac=-3 ...`.
pub fn margins_text(mm: &MarginMatrix) -> String {
    let m = mm.m();
    let mut out = String::new();
    for i in 0..m {
        for j in i + 1..m {
            let (x, y) = (Alternative::new(i), Alternative::new(j));
            if !out.is_empty() {
                out.push(' ');
            }
            let _ = write!(out, "{}{}={}", x.label(), y.label(), mm.get(x, y));
        }
    }
    out
}

/// Alternatives the rule may pick at `profile`, leaving out the bottom
/// block when the witness is known to avoid it.
fn admissible(
    rule: RuleClass,
    profile: &Profile,
    avoid_bottom: bool,
) -> Result<AltSet, VotingError> {
    let allowed = rule.allowed(&profile.margin_matrix()?);
    Ok(if avoid_bottom {
        allowed.difference(profile.bottom_block())
    } else {
        allowed
    })
}

/// Soundness of one edge: the closure of `S_from` under the moving ranking
/// must lie inside `S_to`. Closures are idempotent, so one application
/// covers k-fold edges.
pub fn check_edge(doc: &ProofDocument, edge: &Edge) -> CheckItem {
    let subject = edge_subject(edge);
    let mut problems = Vec::new();
    if !doc.participation.allows(edge.op) {
        problems.push(format!(
            "{} participation gives no information for {} edges",
            doc.participation,
            if edge.op == EdgeOp::Add {
                "add"
            } else {
                "remove"
            }
        ));
    }
    let closure = edge.op.closure(&edge.ranking, edge.claim_from);
    if !closure.is_subset(edge.claim_to) {
        problems.push(format!(
            "closure of {} under {} is {}, not inside {}",
            edge.claim_from, edge.ranking, closure, edge.claim_to
        ));
    }
    if edge.claim_from.is_empty() {
        problems.push("empty claim".into());
    }
    CheckItem {
        kind: CheckKind::Edge,
        subject,
        ok: problems.is_empty(),
        detail: if problems.is_empty() {
            format!(
                "{} {} -> {} by participation",
                edge.ranking, edge.claim_from, edge.claim_to
            )
        } else {
            problems.join("; ")
        },
    }
}

/// Profile arithmetic of one edge, a structural property separate from
/// soundness.
pub fn check_arithmetic(doc: &ProofDocument, edge: &Edge) -> CheckItem {
    let subject = edge_subject(edge);
    let (Some(from), Some(to)) = (doc.node(&edge.from), doc.node(&edge.to)) else {
        return CheckItem {
            kind: CheckKind::Arithmetic,
            subject,
            ok: false,
            detail: "unknown endpoint".into(),
        };
    };
    let (ok, detail) = match edge.op.apply(from, &edge.ranking, edge.count) {
        Ok(p) if &p == to => (true, format!("{} voters -> {} voters", from.n(), to.n())),
        Ok(p) => (false, format!("expected {p}, declared {to}")),
        Err(e) => (false, e.to_string()),
    };
    CheckItem {
        kind: CheckKind::Arithmetic,
        subject,
        ok,
        detail,
    }
}

/// A leaf is a contradiction when the claimed winner is forced by the rule
/// class and nothing the rule may pick there lies in the incoming claim.
pub fn check_leaf(
    doc: &ProofDocument,
    leaf: &Leaf,
    incoming: AltSet,
    avoid_bottom: bool,
) -> CheckItem {
    let subject = format!("{} winner {}", leaf.node, leaf.winner);
    let Some(profile) = doc.node(&leaf.node) else {
        return CheckItem {
            kind: CheckKind::Leaf,
            subject,
            ok: false,
            detail: "unknown node".into(),
        };
    };
    let mm = match profile.margin_matrix() {
        Ok(mm) => mm,
        Err(e) => {
            return CheckItem {
                kind: CheckKind::Leaf,
                subject,
                ok: false,
                detail: e.to_string(),
            }
        }
    };
    let allowed = doc.rule.allowed(&mm);
    let reachable = if avoid_bottom {
        allowed.difference(profile.bottom_block())
    } else {
        allowed
    };
    let mut problems = Vec::new();
    match doc.rule {
        RuleClass::Condorcet => match mm.condorcet_winner() {
            Some(w) if w == leaf.winner => {}
            Some(w) => problems.push(format!("Condorcet winner is {w}, not {}", leaf.winner)),
            None => problems.push("no Condorcet winner".into()),
        },
        RuleClass::Maximin | RuleClass::Kemeny => {
            if !allowed.contains(leaf.winner) {
                problems.push(format!("{} winners are {allowed}", doc.rule));
            }
        }
    }
    let overlap = reachable.intersection(incoming);
    if !overlap.is_empty() {
        problems.push(format!(
            "the rule may pick {overlap}, inside the claim {incoming}"
        ));
    }
    let ok = problems.is_empty();
    let detail = if ok {
        format!("{} winners {allowed} avoid the claim {incoming}", doc.rule)
    } else {
        format!("{}; margins {}", problems.join("; "), margins_text(&mm))
    };
    CheckItem {
        kind: CheckKind::Leaf,
        subject,
        ok,
        detail,
    }
}

fn edge_subject(e: &Edge) -> String {
    format!(
        "{}->{} {}{} {}",
        e.from,
        e.to,
        e.op.symbol(),
        e.count,
        e.ranking
    )
}

/// Closes `set` under all powers of `pi`.
fn orbit(pi: &Permutation, set: AltSet) -> AltSet {
    let mut out = set;
    loop {
        let next = out.union(pi.apply_set(out));
        if next == out {
            return out;
        }
        out = next;
    }
}

/// Validates every structural property, edge, leaf and the root case
/// split. The verdict is VALID only if every item passes.
pub fn check_document(doc: &ProofDocument) -> CheckReport {
    let mut report = CheckReport {
        statement: format!(
            "no {} rule satisfies {} participation for m = {} and n = {}",
            doc.rule,
            doc.participation,
            doc.m(),
            doc.max_voters()
        ),
        ..Default::default()
    };

    // Structure.
    let mut ids: HashMap<&str, &Profile> = HashMap::new();
    let mut duplicate = Vec::new();
    for (id, p) in &doc.nodes {
        if ids.insert(id.as_str(), p).is_some() {
            duplicate.push(id.clone());
        }
    }
    report.push(
        CheckKind::Structure,
        "node ids",
        duplicate.is_empty(),
        if duplicate.is_empty() {
            format!("{} distinct nodes", ids.len())
        } else {
            format!("duplicate ids {}", duplicate.join(","))
        },
    );
    let m = doc.m();
    let odd: Vec<&str> = doc
        .nodes
        .iter()
        .filter(|(_, p)| p.m() != m || p.is_empty())
        .map(|(id, _)| id.as_str())
        .collect();
    report.push(
        CheckKind::Structure,
        "electorates",
        odd.is_empty(),
        if odd.is_empty() {
            format!("all nodes are non-empty profiles over {m} alternatives")
        } else {
            format!("empty or mismatched profiles at {}", odd.join(","))
        },
    );
    let Some(root_profile) = ids.get(doc.root.node.as_str()).copied() else {
        report.push(
            CheckKind::Structure,
            "root",
            false,
            format!("unknown node {}", doc.root.node),
        );
        return report;
    };

    let mut incoming: HashMap<&str, Vec<&Edge>> = HashMap::new();
    let mut outgoing: HashMap<&str, Vec<&Edge>> = HashMap::new();
    for e in &doc.edges {
        for end in [&e.from, &e.to] {
            if !ids.contains_key(end.as_str()) {
                report.push(
                    CheckKind::Structure,
                    edge_subject(e),
                    false,
                    format!("unknown node {end}"),
                );
            }
        }
        incoming.entry(e.to.as_str()).or_default().push(e);
        outgoing.entry(e.from.as_str()).or_default().push(e);
    }
    let mut tree_problems = Vec::new();
    for (id, _) in &doc.nodes {
        let k = incoming.get(id.as_str()).map_or(0, |v| v.len());
        if id == &doc.root.node && k != 0 {
            tree_problems.push(format!("root {id} has incoming edges"));
        } else if id != &doc.root.node && k != 1 {
            tree_problems.push(format!("{id} has {k} incoming edges"));
        }
    }
    let mut leaf_of: HashMap<&str, &Leaf> = HashMap::new();
    for l in &doc.leaves {
        if !ids.contains_key(l.node.as_str()) {
            tree_problems.push(format!("leaf at unknown node {}", l.node));
        }
        if leaf_of.insert(l.node.as_str(), l).is_some() {
            tree_problems.push(format!("{} is declared a leaf twice", l.node));
        }
        if outgoing.contains_key(l.node.as_str()) {
            tree_problems.push(format!("leaf {} has outgoing edges", l.node));
        }
    }
    // Reachability from the root also rules out cycles once every node has
    // a single parent.
    let mut seen: HashSet<&str> = HashSet::new();
    let mut stack = vec![doc.root.node.as_str()];
    while let Some(v) = stack.pop() {
        if !seen.insert(v) {
            continue;
        }
        for e in outgoing.get(v).into_iter().flatten() {
            stack.push(e.to.as_str());
        }
    }
    let unreachable: Vec<&str> = doc
        .nodes
        .iter()
        .map(|(id, _)| id.as_str())
        .filter(|id| !seen.contains(id))
        .collect();
    if !unreachable.is_empty() {
        tree_problems.push(format!(
            "unreachable from the root: {}",
            unreachable.join(",")
        ));
    }
    let tree_ok = tree_problems.is_empty();
    report.push(
        CheckKind::Structure,
        "tree",
        tree_ok,
        if tree_ok {
            format!("{} edges, {} leaves", doc.edges.len(), doc.leaves.len())
        } else {
            tree_problems.join("; ")
        },
    );

    for e in &doc.edges {
        report.items.push(check_arithmetic(doc, e));
    }
    for e in &doc.edges {
        report.items.push(check_edge(doc, e));
    }

    // Symmetry and root coverage.
    let root_avoid = doc.participation.root_avoids_bottom();
    let root_targets = match admissible(doc.rule, root_profile, root_avoid) {
        Ok(s) => s,
        Err(e) => {
            report.push(CheckKind::Structure, "root", false, e.to_string());
            return report;
        }
    };
    let mut covered = AltSet::EMPTY;
    for c in &doc.root.cases {
        covered = covered.union(*c);
    }
    if let Some(pi) = &doc.root.symmetry {
        let fixed = pi.m() == m && root_profile.relabel(pi) == *root_profile;
        report.push(
            CheckKind::Symmetry,
            format!("{} under {pi}", doc.root.node),
            fixed,
            if fixed {
                "relabelling fixes the root profile".to_string()
            } else if pi.m() != m {
                format!("permutation over {} alternatives, root has {m}", pi.m())
            } else {
                format!("relabelled root is {}", root_profile.relabel(pi))
            },
        );
        if fixed {
            covered = orbit(pi, covered);
        }
    }
    let missing = root_targets.difference(covered);
    report.push(
        CheckKind::Coverage,
        format!("{} cases {}", doc.root.node, join_sets(&doc.root.cases)),
        missing.is_empty(),
        if missing.is_empty() {
            format!("cases and their images cover {root_targets}")
        } else {
            format!("{missing} is not covered")
        },
    );

    if !tree_ok {
        return report;
    }

    // Walk the tree, checking coverage at inner nodes and leaves at the end
    // of every branch.
    let mut work: Vec<(&str, Vec<AltSet>, bool)> =
        vec![(doc.root.node.as_str(), doc.root.cases.clone(), root_avoid)];
    while let Some((v, claims, avoid)) = work.pop() {
        let profile = ids[v];
        let out = outgoing.get(v).map(|v| v.as_slice()).unwrap_or(&[]);
        if let Some(leaf) = leaf_of.get(v) {
            let claim = claims.iter().fold(AltSet::EMPTY, |a, b| a.union(*b));
            report.items.push(check_leaf(doc, leaf, claim, avoid));
            continue;
        }
        if out.is_empty() {
            report.push(
                CheckKind::Coverage,
                v,
                false,
                "branch ends without a contradiction leaf",
            );
            continue;
        }
        let targets = match admissible(doc.rule, profile, avoid) {
            Ok(s) => s,
            Err(e) => {
                report.push(CheckKind::Coverage, v, false, e.to_string());
                continue;
            }
        };
        let handled = out.iter().fold(AltSet::EMPTY, |a, e| a.union(e.claim_from));
        for claim in &claims {
            let need = claim.intersection(targets);
            let missing = need.difference(handled);
            report.push(
                CheckKind::Coverage,
                format!("{v} claim {claim}"),
                missing.is_empty(),
                if missing.is_empty() {
                    format!("outgoing edges handle {need}")
                } else {
                    format!("no outgoing edge handles {missing}")
                },
            );
        }
        for e in out {
            work.push((
                e.to.as_str(),
                vec![e.claim_to],
                doc.participation.witness_avoids_bottom(e.op),
            ));
        }
    }
    report
}

/// Pads every profile and ranking with `m - 4` bad alternatives at the
/// bottom. Remove edges pick the bad alternatives up in their lower
/// closures, so their target claims grow accordingly.
pub fn lift_to_m(doc: &ProofDocument, m: usize) -> Result<ProofDocument, ProofError> {
    let current = doc.m();
    if m < current || m > crate::voting::MAX_ALTS {
        return Err(ProofError::Malformed(format!(
            "cannot lift from {current} to {m} alternatives"
        )));
    }
    let k = m - current;
    if k == 0 {
        return Ok(doc.clone());
    }
    let bad: AltSet = (current..m).map(Alternative::new).collect();
    Ok(ProofDocument {
        rule: doc.rule,
        participation: doc.participation,
        nodes: doc
            .nodes
            .iter()
            .map(|(id, p)| (id.clone(), p.pad_with_bad(k)))
            .collect(),
        root: RootClaim {
            node: doc.root.node.clone(),
            cases: doc.root.cases.clone(),
            symmetry: doc.root.symmetry.as_ref().map(|pi| pi.extend(m)),
        },
        edges: doc
            .edges
            .iter()
            .map(|e| Edge {
                ranking: e.ranking.pad(k),
                claim_to: match e.op {
                    EdgeOp::Add => e.claim_to,
                    EdgeOp::Remove => e.claim_to.union(bad),
                },
                ..e.clone()
            })
            .collect(),
        leaves: doc.leaves.clone(),
    })
}

/// Single-element corruptions of a document, each of which breaks a check
/// no matter what the rest of the document says: edge counts, edge
/// rankings, node profiles, target claims and leaf winners.
pub fn mutations(doc: &ProofDocument) -> Vec<(String, ProofDocument)> {
    let m = doc.m();
    let mut families: Vec<Vec<(String, ProofDocument)>> = vec![Vec::new(); 5];
    for (i, e) in doc.edges.iter().enumerate() {
        for delta in [1u32, 2] {
            let mut d = doc.clone();
            d.edges[i].count += delta;
            families[0].push((
                format!("edge {} count {}", edge_subject(e), e.count + delta),
                d,
            ));
        }
        let mut alternatives = vec![e.ranking.reverse()];
        for (p, q) in [(0, 1), (m - 2, m - 1), (1, 2)] {
            let mut order: Vec<Alternative> = e.ranking.alternatives().collect();
            order.swap(p, q);
            alternatives.push(Ranking::from_order(&order).expect("permuted ranking"));
        }
        for r in alternatives {
            if r == e.ranking {
                continue;
            }
            let mut d = doc.clone();
            d.edges[i].ranking = r;
            families[1].push((format!("edge {} ranking {r}", edge_subject(e)), d));
        }
        for x in e.op.closure(&e.ranking, e.claim_from).iter() {
            let mut d = doc.clone();
            d.edges[i].claim_to.remove(x);
            families[3].push((
                format!("edge {} target claim without {x}", edge_subject(e)),
                d,
            ));
        }
    }
    for (i, (id, p)) in doc.nodes.iter().enumerate() {
        for r in Ranking::all(m).into_iter().step_by(5) {
            let mut d = doc.clone();
            d.nodes[i].1 = p.add_voters(&r, 1).expect("same alternatives");
            families[2].push((format!("node {id} plus {r}"), d));
        }
    }
    for (i, l) in doc.leaves.iter().enumerate() {
        let Some(p) = doc.node(&l.node) else { continue };
        let Ok(mm) = p.margin_matrix() else { continue };
        let allowed = doc.rule.allowed(&mm);
        let forced = match doc.rule {
            RuleClass::Condorcet => mm
                .condorcet_winner()
                .map(AltSet::singleton)
                .unwrap_or(allowed),
            _ => allowed,
        };
        for x in (0..m)
            .map(Alternative::new)
            .filter(|x| !forced.contains(*x))
        {
            let mut d = doc.clone();
            d.leaves[i].winner = x;
            families[4].push((format!("leaf {} winner {x}", l.node), d));
        }
    }
    // Interleave the families so any prefix mixes every kind.
    let mut out = Vec::new();
    let longest = families.iter().map(|f| f.len()).max().unwrap_or(0);
    for j in 0..longest {
        for f in &families {
            if let Some(item) = f.get(j) {
                out.push(item.clone());
            }
        }
    }
    out
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering. Failed items from `report` are drawn in red.
pub fn to_dot(doc: &ProofDocument, report: Option<&CheckReport>) -> String {
    let failed: HashSet<&str> = report
        .map(|r| r.failures().map(|i| i.subject.as_str()).collect())
        .unwrap_or_default();
    let leaf_of: HashMap<&str, &Leaf> = doc.leaves.iter().map(|l| (l.node.as_str(), l)).collect();
    let mut out = String::from("digraph proof {\n  node [fontname=\"monospace\"];\n");
    for (id, p) in &doc.nodes {
        let mut label = format!("{id}\\n{}", p.to_string().replace(',', "\\n"));
        let mut attrs = String::from("shape=box");
        if id == &doc.root.node {
            let _ = write!(label, "\\ncases {}", join_sets(&doc.root.cases));
            if let Some(pi) = &doc.root.symmetry {
                let _ = write!(label, " sym {pi}");
            }
            attrs = String::from("shape=box, peripheries=2");
        }
        if let Some(l) = leaf_of.get(id.as_str()) {
            let _ = write!(label, "\\nwinner {}", l.winner);
            attrs = String::from("shape=ellipse");
            if failed.contains(format!("{} winner {}", l.node, l.winner).as_str()) {
                attrs.push_str(", color=red");
            }
        }
        let _ = writeln!(
            out,
            "  \"{}\" [label=\"{}\", {attrs}];",
            dot_escape(id),
            label
        );
    }
    for e in &doc.edges {
        let colour = if failed.contains(edge_subject(e).as_str()) {
            ", color=red"
        } else {
            ""
        };
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{}\" [label=\"{}{}·{}\\n{} -> {}\"{colour}];",
            dot_escape(&e.from),
            dot_escape(&e.to),
            e.op.symbol(),
            e.count,
            e.ranking,
            e.claim_from,
            e.claim_to
        );
    }
    out.push_str("}\n");
    out
}

/// Certificates transcribed from the published proof diagrams.
pub const FIXTURES: [(&str, &str); 5] = [
    ("thm1", include_str!("../fixtures/thm1.cert")),
    ("thm2", include_str!("../fixtures/thm2.cert")),
    ("thm4", include_str!("../fixtures/thm4.cert")),
    ("thm6", include_str!("../fixtures/thm6.cert")),
    ("thm7-root", include_str!("../fixtures/thm7-root.cert")),
];

pub fn fixture(name: &str) -> Option<ProofDocument> {
    FIXTURES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| ProofDocument::parse(text).expect("fixtures parse"))
}

/// What an instance was encoded for, needed to read its core.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InstanceMeta {
    pub rule: RuleClass,
    pub participation: Participation,
    pub n_max: u32,
}

/// A core rendered as a graph, plus a checkable document when claim
/// propagation closes every branch.
#[derive(Clone, Debug)]
pub struct ProofDraft {
    /// Nodes touched by the core, in varmap order.
    pub nodes: Vec<usize>,
    /// Nodes carrying unit clauses in the core, with the forced alternative.
    pub units: Vec<(usize, Alternative)>,
    /// Pairs of nodes linked by a participation clause, with the ranking
    /// of the voter that differs.
    pub links: Vec<(usize, usize, Ranking)>,
    pub document: Option<ProofDocument>,
    pub dot: String,
}

/// Membership test for profiles of an encoded instance.
struct Space<'a> {
    varmap: &'a VariableMap,
    tournaments: HashMap<MarginVector, usize>,
    profiles: HashMap<Profile, usize>,
}

impl<'a> Space<'a> {
    fn new(varmap: &'a VariableMap) -> Self {
        let mut tournaments = HashMap::new();
        let mut profiles = HashMap::new();
        for (i, n) in varmap.nodes.iter().enumerate() {
            match &n.key {
                NodeKey::Tournament(v) => {
                    tournaments.insert(*v, i);
                }
                NodeKey::Profile(p) => {
                    profiles.insert(p.clone(), i);
                }
            }
        }
        Space {
            varmap,
            tournaments,
            profiles,
        }
    }

    fn locate(&self, p: &Profile) -> Option<usize> {
        if self.varmap.is_tournament_space() {
            margins_of_profile(p)
                .ok()
                .and_then(|v| self.tournaments.get(&v).copied())
        } else {
            self.profiles.get(p).copied()
        }
    }
}

/// Fewest-voter profile with the given margins, by depth-first search over
/// ranking multisets.
pub fn realize_vector(target: &MarginVector, voters: u32) -> Option<Profile> {
    fn go(rest: [i32; 6], left: u32, start: usize, chosen: &mut Vec<usize>) -> bool {
        if left == 0 {
            return rest.iter().all(|&g| g == 0);
        }
        if rest
            .iter()
            .any(|&g| g.unsigned_abs() > left || (g.unsigned_abs() + left) % 2 != 0)
        {
            return false;
        }
        let signs = crate::voting::ranking_signs4();
        for (i, s) in signs.iter().enumerate().skip(start) {
            let mut next = rest;
            for j in 0..6 {
                next[j] -= s[j] as i32;
            }
            chosen.push(i);
            if go(next, left - 1, i, chosen) {
                return true;
            }
            chosen.pop();
        }
        false
    }
    let rest = target.entries().map(|g| g as i32);
    let mut chosen = Vec::new();
    if !go(rest, voters, 0, &mut chosen) {
        return None;
    }
    let rankings = crate::voting::rankings4();
    let mut p = Profile::empty(4);
    for i in chosen {
        p = p.add_voters(&rankings[i], 1).ok()?;
    }
    Some(p)
}

enum Plan {
    Leaf(Alternative),
    Branch(Vec<Step>),
}

struct Step {
    op: EdgeOp,
    ranking: Ranking,
    claim_from: AltSet,
    child: Profile,
    child_plan: Rc<Plan>,
}

struct Search<'a> {
    meta: InstanceMeta,
    space: &'a Space<'a>,
    core: HashSet<usize>,
    /// Expand only core nodes, or any node of the instance.
    core_only: bool,
    /// Solved claims, and failures with the depth they were tried at.
    memo: HashMap<(Profile, AltSet, bool), Result<Rc<Plan>, u32>>,
    budget: usize,
}

impl Search<'_> {
    fn leaf_winner(&self, p: &Profile, claim: AltSet, avoid: bool) -> Option<Alternative> {
        let mm = p.margin_matrix().ok()?;
        let allowed = self.meta.rule.allowed(&mm);
        let reach = if avoid {
            allowed.difference(p.bottom_block())
        } else {
            allowed
        };
        if !reach.intersection(claim).is_empty() {
            return None;
        }
        match self.meta.rule {
            RuleClass::Condorcet => mm.condorcet_winner(),
            _ => allowed.first(),
        }
    }

    /// Single-voter moves inside the instance, core nodes first.
    fn moves(&self, p: &Profile) -> Vec<(EdgeOp, Ranking, Profile)> {
        let mut out = Vec::new();
        for r in crate::voting::rankings4() {
            if self.meta.participation.allows(EdgeOp::Add) && p.n() < self.meta.n_max {
                if let Ok(q) = p.add_voters(r, 1) {
                    if self.space.locate(&q).is_some() {
                        out.push((EdgeOp::Add, *r, q));
                    }
                }
            }
            if self.meta.participation.allows(EdgeOp::Remove) && p.count(r) > 0 && p.n() > 1 {
                if let Ok(q) = p.remove_voters(r, 1) {
                    if self.space.locate(&q).is_some() {
                        out.push((EdgeOp::Remove, *r, q));
                    }
                }
            }
        }
        out.sort_by_key(|(_, _, q)| !self.space.locate(q).is_some_and(|i| self.core.contains(&i)));
        out
    }

    fn child_avoid(&self, op: EdgeOp) -> bool {
        self.meta.participation.witness_avoids_bottom(op)
    }

    /// A plan refuting "the rule picks from `claim` at `p`".
    fn refute(&mut self, p: &Profile, claim: AltSet, avoid: bool, depth: u32) -> Option<Rc<Plan>> {
        if let Some(w) = self.leaf_winner(p, claim, avoid) {
            return Some(Rc::new(Plan::Leaf(w)));
        }
        if depth == 0 || self.budget == 0 {
            return None;
        }
        let here = self.space.locate(p)?;
        if self.core_only && !self.core.contains(&here) {
            return None;
        }
        let key = (p.clone(), claim, avoid);
        match self.memo.get(&key) {
            Some(Ok(plan)) => return Some(plan.clone()),
            Some(Err(tried)) if *tried >= depth => return None,
            _ => {}
        }
        self.memo.insert(key.clone(), Err(depth));
        self.budget -= 1;
        let targets = admissible(self.meta.rule, p, avoid)
            .ok()?
            .intersection(claim);
        let moves = self.moves(p);
        let mut chosen: Vec<(usize, AltSet, Rc<Plan>)> = Vec::new();
        for x in targets.iter() {
            let single = AltSet::singleton(x);
            let mut found = None;
            // Prefer moves that end the branch immediately.
            for (i, (op, r, q)) in moves.iter().enumerate() {
                let c = op.closure(r, single);
                if let Some(w) = self.leaf_winner(q, c, self.child_avoid(*op)) {
                    found = Some((i, Rc::new(Plan::Leaf(w))));
                    break;
                }
            }
            if found.is_none() {
                for (i, (op, r, q)) in moves.iter().enumerate() {
                    let c = op.closure(r, single);
                    if let Some(plan) = self.refute(q, c, self.child_avoid(*op), depth - 1) {
                        found = Some((i, plan));
                        break;
                    }
                }
            }
            let (i, plan) = found?;
            // Share the edge with an earlier alternative when the merged
            // claim still closes.
            let mut merged = false;
            for slot in chosen.iter_mut().filter(|s| s.0 == i) {
                let (op, r, q) = &moves[i];
                let union = slot.1.union(single);
                if let Some(p2) =
                    self.refute(q, op.closure(r, union), self.child_avoid(*op), depth - 1)
                {
                    slot.1 = union;
                    slot.2 = p2;
                    merged = true;
                    break;
                }
            }
            if !merged {
                chosen.push((i, single, plan));
            }
        }
        let steps = chosen
            .into_iter()
            .map(|(i, claim_from, child_plan)| {
                let (op, ranking, child) = moves[i].clone();
                Step {
                    op,
                    ranking,
                    claim_from,
                    child,
                    child_plan,
                }
            })
            .collect();
        let plan = Rc::new(Plan::Branch(steps));
        self.memo.insert(key, Ok(plan.clone()));
        Some(plan)
    }
}

fn emit(doc: &mut ProofDocument, parent: &str, step: &Step, counter: &mut usize) {
    let id = format!("n{counter}");
    *counter += 1;
    doc.nodes.push((id.clone(), step.child.clone()));
    doc.edges.push(Edge {
        from: parent.to_string(),
        to: id.clone(),
        op: step.op,
        count: 1,
        ranking: step.ranking,
        claim_from: step.claim_from,
        claim_to: step.op.closure(&step.ranking, step.claim_from),
    });
    match step.child_plan.as_ref() {
        Plan::Leaf(w) => doc.leaves.push(Leaf {
            node: id,
            winner: *w,
        }),
        Plan::Branch(steps) => {
            for s in steps {
                emit(doc, &id, s, counter);
            }
        }
    }
}

/// Reads the nodes, unit clauses and participation links out of a core and
/// searches for a certificate whose inner nodes all come from the core.
/// Claims start at the root's admissible set and are pushed through
/// closures until every branch hits a profile with a forced winner outside
/// the claim; symmetric root cases are folded with an automorphism when
/// the root has one.
pub fn mus_to_document(
    clauses: &[(u32, Vec<i32>)],
    varmap: &VariableMap,
    meta: InstanceMeta,
) -> Result<ProofDraft, ProofError> {
    let len = varmap.nodes.len();
    let mut touched = BTreeMap::new();
    let mut units = Vec::new();
    let mut links = Vec::new();
    let profile_of = |node: usize| -> Option<Profile> {
        match &varmap.nodes[node].key {
            NodeKey::Profile(p) => Some(p.clone()),
            NodeKey::Tournament(v) => realize_vector(v, varmap.nodes[node].min_voters),
        }
    };
    for (group, lits) in clauses {
        if *group > 0 && (*group as usize) <= len {
            touched.insert(*group as usize - 1, ());
        }
        let mut nodes = Vec::new();
        for &l in lits {
            let v = l.unsigned_abs();
            if v == 0 || v as usize > 4 * len {
                return Err(ProofError::VariableOutOfRange {
                    var: v,
                    len: 4 * len,
                });
            }
            let (node, _) = decode_var(l);
            touched.insert(node, ());
            if !nodes.contains(&node) {
                nodes.push(node);
            }
        }
        if lits.len() == 1 && lits[0] > 0 {
            let (node, alt) = decode_var(lits[0]);
            units.push((node, alt));
        }
        if nodes.len() == 2 {
            let (a, b) = (nodes[0], nodes[1]);
            let diff = match (&varmap.nodes[a].key, &varmap.nodes[b].key) {
                (NodeKey::Tournament(x), NodeKey::Tournament(y)) => crate::voting::rankings4()
                    .iter()
                    .find(|r| x.apply_ranking(r) == *y || y.apply_ranking(r) == *x)
                    .copied(),
                (NodeKey::Profile(x), NodeKey::Profile(y)) => crate::voting::rankings4()
                    .iter()
                    .find(|r| {
                        x.add_voters(r, 1).ok().as_ref() == Some(y)
                            || y.add_voters(r, 1).ok().as_ref() == Some(x)
                    })
                    .copied(),
                _ => None,
            };
            if let Some(r) = diff {
                let (lo, hi) = if varmap.nodes[a].min_voters <= varmap.nodes[b].min_voters {
                    (a, b)
                } else {
                    (b, a)
                };
                if !links.contains(&(lo, hi, r)) {
                    links.push((lo, hi, r));
                }
            }
        }
    }
    let nodes: Vec<usize> = touched.into_keys().collect();
    let space = Space::new(varmap);
    let mut roots: Vec<usize> = nodes.clone();
    roots.sort_by_key(|&i| (varmap.nodes[i].min_voters, i));
    let mut document = None;
    'passes: for (core_only, depth, budget) in [(true, 12, 200_000), (false, 9, 300_000)] {
        let mut search = Search {
            meta,
            space: &space,
            core: nodes.iter().copied().collect(),
            core_only,
            memo: HashMap::new(),
            budget,
        };
        for &r in &roots {
            let Some(root) = profile_of(r) else { continue };
            let avoid = meta.participation.root_avoids_bottom();
            let Ok(targets) = admissible(meta.rule, &root, avoid) else {
                continue;
            };
            let mut syms: Vec<Option<Permutation>> = Permutation::all(4)
                .into_iter()
                .filter(|pi| *pi != Permutation::identity(4) && root.relabel(pi) == root)
                .map(Some)
                .collect();
            syms.push(None);
            for sym in syms {
                let mut cases = Vec::new();
                let mut steps: Vec<Rc<Plan>> = Vec::new();
                let mut covered = AltSet::EMPTY;
                let mut ok = true;
                for x in targets.iter() {
                    if covered.contains(x) {
                        continue;
                    }
                    let single = AltSet::singleton(x);
                    match search.refute(&root, single, avoid, depth) {
                        Some(plan) => {
                            cases.push(single);
                            steps.push(plan);
                            covered = match &sym {
                                Some(pi) => orbit(pi, covered.union(single)),
                                None => covered.union(single),
                            };
                        }
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok || !targets.is_subset(covered) {
                    continue;
                }
                let mut doc = ProofDocument {
                    rule: meta.rule,
                    participation: meta.participation,
                    nodes: vec![("R".to_string(), root.clone())],
                    root: RootClaim {
                        node: "R".to_string(),
                        cases,
                        symmetry: sym,
                    },
                    edges: Vec::new(),
                    leaves: Vec::new(),
                };
                let mut counter = 0;
                for plan in &steps {
                    match plan.as_ref() {
                        Plan::Branch(ss) => {
                            for s in ss {
                                emit(&mut doc, "R", s, &mut counter);
                            }
                        }
                        Plan::Leaf(_) => {}
                    }
                }
                document = Some(doc);
                break 'passes;
            }
        }
    }
    let dot = match &document {
        Some(doc) => to_dot(doc, None),
        None => core_dot(varmap, &nodes, &units, &links),
    };
    Ok(ProofDraft {
        nodes,
        units,
        links,
        document,
        dot,
    })
}

fn core_dot(
    varmap: &VariableMap,
    nodes: &[usize],
    units: &[(usize, Alternative)],
    links: &[(usize, usize, Ranking)],
) -> String {
    let mut out = String::from("digraph core {\n  node [fontname=\"monospace\", shape=box];\n");
    for &n in nodes {
        let key = match &varmap.nodes[n].key {
            NodeKey::Tournament(v) => v.to_string(),
            NodeKey::Profile(p) => p.to_string().replace(',', "\\n"),
        };
        let marks: String = units
            .iter()
            .filter(|u| u.0 == n)
            .map(|u| u.1.label())
            .collect();
        let extra = if marks.is_empty() {
            String::new()
        } else {
            format!("\\nforced {marks}")
        };
        let _ = writeln!(out, "  t{n} [label=\"{n}\\n{key}{extra}\"];");
    }
    for (lo, hi, r) in links {
        let _ = writeln!(out, "  t{lo} -> t{hi} [label=\"+{r}\"];");
    }
    out.push_str("}\n");
    out
}
