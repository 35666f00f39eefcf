//! Lookup-table rules on weighted tournaments: decoding from SAT models,
//! the text format, brute-force axiom checks and agreement statistics.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, BufRead, BufReader, Read, Write};

use flate2::read::GzDecoder;
use rayon::prelude::*;
use thiserror::Error;

use crate::bridge::Model;
use crate::encode::{var, NodeKey, VariableMap};
use crate::enumerate::TournamentIndex;
use crate::voting::{rankings4, AltSet, Alternative, MarginVector, Ranking};

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("mode violation at node {node}: {count} alternatives chosen")]
    ModeViolation { node: usize, count: usize },
    #[error("parse error at column {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("line {line}: {source}")]
    Line { line: usize, source: Box<RuleError> },
    #[error("duplicate entry for {0}")]
    Duplicate(MarginVector),
    #[error("table has no entry for node {node} {vector}")]
    Incomplete { node: usize, vector: MarginVector },
    #[error("{0}")]
    Mode(String),
    #[error("model covers {model} variables, varmap needs {needed}")]
    ModelSize { model: u32, needed: usize },
    #[error("lookup tables live on tournaments; this varmap describes profiles")]
    ProfileSpace,
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableMode {
    Single,
    Set,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableEntry {
    pub vector: MarginVector,
    /// Fewest voters inducing the tournament.
    pub voters: u32,
    pub choice: AltSet,
}

/// A rule given on finitely many tournaments, in index order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleTable {
    mode: TableMode,
    entries: Vec<TableEntry>,
    lookup: HashMap<MarginVector, usize>,
}

/// `"<alt>,#<n>,(<g1>,…,<g6>)"`; in set mode the labels are concatenated.
pub fn format_entry(vector: &MarginVector, voters: u32, choice: AltSet) -> String {
    let e = vector.entries();
    format!(
        "{choice},#{voters},({},{},{},{},{},{})",
        e[0], e[1], e[2], e[3], e[4], e[5]
    )
}

pub fn parse_entry(line: &str) -> Result<(MarginVector, u32, AltSet), RuleError> {
    let err = |position: usize, message: &str| RuleError::Parse {
        position,
        message: message.to_string(),
    };
    let comma = line.find(',').ok_or_else(|| err(0, "missing ','"))?;
    let labels = &line[..comma];
    if labels.is_empty() {
        return Err(err(0, "empty choice"));
    }
    let mut choice = AltSet::EMPTY;
    for (i, c) in labels.chars().enumerate() {
        let x = Alternative::from_label(c)
            .filter(|x| x.index() < 4)
            .ok_or_else(|| err(i, "choice must use labels a-d"))?;
        if choice.contains(x) {
            return Err(err(i, "repeated label"));
        }
        choice.insert(x);
    }
    let rest = &line[comma + 1..];
    let after_hash = rest
        .strip_prefix('#')
        .ok_or_else(|| err(comma + 1, "expected '#'"))?;
    let comma2 = after_hash
        .find(',')
        .ok_or_else(|| err(comma + 2, "missing ',' after voter count"))?;
    let count_text = &after_hash[..comma2];
    let voters: u32 = count_text
        .parse()
        .ok()
        .filter(|_| !count_text.starts_with('+') && !count_text.starts_with('0'))
        .ok_or_else(|| err(comma + 2, "bad voter count"))?;
    let vec_start = comma + 2 + comma2 + 1;
    let vec_text = &line[vec_start..];
    let vector = MarginVector::parse(vec_text).map_err(|e| err(vec_start, &e.to_string()))?;
    // Insist on the canonical spelling so that parsing and formatting are
    // mutually inverse.
    let canonical = format_entry(&vector, voters, choice);
    if canonical != line {
        let at = canonical
            .bytes()
            .zip(line.bytes())
            .position(|(a, b)| a != b)
            .unwrap_or(canonical.len().min(line.len()));
        return Err(err(at, "non-canonical spelling"));
    }
    Ok((vector, voters, choice))
}

impl RuleTable {
    pub fn new(mode: TableMode, entries: Vec<TableEntry>) -> Result<Self, RuleError> {
        let mut lookup = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            let ok = match mode {
                TableMode::Single => e.choice.len() == 1,
                TableMode::Set => !e.choice.is_empty(),
            };
            if !ok {
                return Err(RuleError::ModeViolation {
                    node: i,
                    count: e.choice.len(),
                });
            }
            if lookup.insert(e.vector, i).is_some() {
                return Err(RuleError::Duplicate(e.vector));
            }
        }
        Ok(RuleTable {
            mode,
            entries,
            lookup,
        })
    }

    /// Tabulates `f` on every node of the index.
    pub fn from_fn(
        index: &TournamentIndex,
        mode: TableMode,
        f: impl Fn(&MarginVector) -> AltSet + Sync,
    ) -> Result<Self, RuleError> {
        let entries = (0..index.len())
            .into_par_iter()
            .map(|i| {
                let v = index.vector(i);
                TableEntry {
                    vector: v,
                    voters: index.min_voters(i),
                    choice: f(&v),
                }
            })
            .collect();
        RuleTable::new(mode, entries)
    }

    pub fn mode(&self) -> TableMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[TableEntry] {
        &self.entries
    }

    pub fn get(&self, v: &MarginVector) -> Option<AltSet> {
        self.lookup.get(v).map(|&i| self.entries[i].choice)
    }

    /// The same rule viewed as set-valued with singleton outputs.
    pub fn lift(&self) -> RuleTable {
        RuleTable {
            mode: TableMode::Set,
            ..self.clone()
        }
    }

    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        for e in &self.entries {
            writeln!(w, "{}", format_entry(&e.vector, e.voters, e.choice))?;
        }
        w.flush()
    }

    /// Reads a table, gunzipping if the input starts with the gzip magic.
    /// The mode is single unless some entry lists several alternatives.
    pub fn read<R: Read>(input: R) -> Result<Self, RuleError> {
        let mut reader = BufReader::new(input);
        let gz = reader.fill_buf()?.starts_with(&[0x1f, 0x8b]);
        let lines: Box<dyn BufRead> = if gz {
            Box::new(BufReader::new(GzDecoder::new(reader)))
        } else {
            Box::new(reader)
        };
        let mut entries = Vec::new();
        for (i, line) in lines.lines().enumerate() {
            let line = line?;
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            let (vector, voters, choice) = parse_entry(line).map_err(|e| RuleError::Line {
                line: i + 1,
                source: Box::new(e),
            })?;
            entries.push(TableEntry {
                vector,
                voters,
                choice,
            });
        }
        let mode = if entries.iter().all(|e| e.choice.len() == 1) {
            TableMode::Single
        } else {
            TableMode::Set
        };
        RuleTable::new(mode, entries)
    }
}

/// The chosen set per node, read off the true variables of a model.
pub fn decode_choices(model: &Model, nodes: usize) -> Result<Vec<AltSet>, RuleError> {
    if (model.num_vars() as usize) < 4 * nodes {
        return Err(RuleError::ModelSize {
            model: model.num_vars(),
            needed: 4 * nodes,
        });
    }
    Ok((0..nodes)
        .map(|n| {
            (0..4)
                .map(Alternative::new)
                .filter(|&x| model.value(var(n, x) as u32))
                .collect()
        })
        .collect())
}

/// Builds the lookup table of a tournament-space model. In single mode every
/// node must have exactly one true variable.
pub fn decode_model(
    model: &Model,
    varmap: &VariableMap,
    mode: TableMode,
) -> Result<RuleTable, RuleError> {
    let choices = decode_choices(model, varmap.nodes.len())?;
    let mut entries = Vec::with_capacity(choices.len());
    for (node, choice) in varmap.nodes.iter().zip(choices) {
        let vector = match node.key {
            NodeKey::Tournament(v) => v,
            NodeKey::Profile(_) => return Err(RuleError::ProfileSpace),
        };
        entries.push(TableEntry {
            vector,
            voters: node.min_voters,
            choice,
        });
    }
    RuleTable::new(mode, entries)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: &'static str,
    pub node: usize,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.kind, self.node, self.detail)
    }
}

/// Violations in node order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Report {
    pub checked: usize,
    pub violations: Vec<Violation>,
}

impl Report {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn merge(mut self, other: Report) -> Report {
        self.checked += other.checked;
        self.violations.extend(other.violations);
        self.violations.sort_by_key(|v| v.node);
        self
    }

    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        for v in &self.violations {
            writeln!(w, "{v}")?;
        }
        Ok(())
    }
}

fn choice_at(table: &RuleTable, node: usize, v: &MarginVector) -> Result<AltSet, RuleError> {
    table
        .get(v)
        .ok_or(RuleError::Incomplete { node, vector: *v })
}

fn scan_nodes(
    table: &RuleTable,
    index: &TournamentIndex,
    check: impl Fn(usize, &MarginVector, AltSet) -> Result<Vec<Violation>, RuleError> + Sync,
) -> Result<Report, RuleError> {
    let per_node: Vec<Vec<Violation>> = (0..index.len())
        .into_par_iter()
        .map(|i| {
            let v = index.vector(i);
            let c = choice_at(table, i, &v)?;
            check(i, &v, c)
        })
        .collect::<Result<_, _>>()?;
    Ok(Report {
        checked: index.len(),
        violations: per_node.into_iter().flatten().collect(),
    })
}

/// Runs `check(node, ranking, before, after)` over every edge `t -> t + r`
/// with `t` below the index's voter bound. Successors are recomputed from
/// the margins, not taken from the index.
fn scan_edges(
    table: &RuleTable,
    index: &TournamentIndex,
    check: impl Fn(&Ranking, AltSet, AltSet) -> Option<String> + Sync,
    kind: &'static str,
) -> Result<Report, RuleError> {
    let interior: Vec<usize> = (0..index.len())
        .filter(|&i| index.min_voters(i) < index.n_max())
        .collect();
    let per_node: Vec<Vec<Violation>> = interior
        .par_iter()
        .map(|&i| {
            let v = index.vector(i);
            let before = choice_at(table, i, &v)?;
            let mut out = Vec::new();
            for r in rankings4() {
                let s = v.apply_ranking(r);
                let after = table
                    .get(&s)
                    .ok_or(RuleError::Incomplete { node: i, vector: s })?;
                if let Some(detail) = check(r, before, after) {
                    out.push(Violation {
                        kind,
                        node: i,
                        detail: format!("{v} +{r}: {before} -> {after} at {s}; {detail}"),
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

/// `f(t + r)` is weakly better than `f(t)` for `r`, on every edge.
pub fn verify_participation(
    table: &RuleTable,
    index: &TournamentIndex,
) -> Result<Report, RuleError> {
    if table.mode() != TableMode::Single {
        return Err(RuleError::Mode(
            "participation is checked on single-valued tables".into(),
        ));
    }
    scan_edges(
        table,
        index,
        |r, before, after| {
            let (x, y) = (before.first().unwrap(), after.first().unwrap());
            (!r.weakly_prefers(y, x)).then(|| format!("{r} prefers {x} to {y}"))
        },
        "participation",
    )
}

/// Best chosen alternative (for `r`) never gets worse when `r` joins.
pub fn verify_optimistic(table: &RuleTable, index: &TournamentIndex) -> Result<Report, RuleError> {
    scan_edges(
        table,
        index,
        |r, before, after| {
            let (x, y) = (r.best_of(before).unwrap(), r.best_of(after).unwrap());
            (!r.weakly_prefers(y, x)).then(|| format!("best drops from {x} to {y}"))
        },
        "optimistic",
    )
}

/// Worst chosen alternative (for `r`) never gets worse when `r` joins.
pub fn verify_pessimistic(table: &RuleTable, index: &TournamentIndex) -> Result<Report, RuleError> {
    scan_edges(
        table,
        index,
        |r, before, after| {
            let (x, y) = (r.worst_of(before).unwrap(), r.worst_of(after).unwrap());
            (!r.weakly_prefers(y, x)).then(|| format!("worst drops from {x} to {y}"))
        },
        "pessimistic",
    )
}

/// The Condorcet winner, when there is one, is the whole output.
pub fn verify_condorcet(table: &RuleTable, index: &TournamentIndex) -> Result<Report, RuleError> {
    scan_nodes(table, index, |i, v, c| {
        Ok(match v.condorcet_winner() {
            Some(w) if c != AltSet::singleton(w) => vec![Violation {
                kind: "condorcet",
                node: i,
                detail: format!("{v} has winner {w} but the table says {c}"),
            }],
            _ => Vec::new(),
        })
    })
}

pub fn verify_topcycle(table: &RuleTable, index: &TournamentIndex) -> Result<Report, RuleError> {
    scan_nodes(table, index, |i, v, c| {
        let tc = v.top_cycle();
        Ok(if c.is_subset(tc) {
            Vec::new()
        } else {
            vec![Violation {
                kind: "topcycle",
                node: i,
                detail: format!("{v} top cycle {tc}, table says {c}"),
            }]
        })
    })
}

/// No chosen alternative is unanimously beaten in a smallest realization.
pub fn verify_pareto(table: &RuleTable, index: &TournamentIndex) -> Result<Report, RuleError> {
    scan_nodes(table, index, |i, v, c| {
        let dominated = v.pareto_excluded(index.min_voters(i));
        Ok(if c.intersection(dominated).is_empty() {
            Vec::new()
        } else {
            vec![Violation {
                kind: "pareto",
                node: i,
                detail: format!(
                    "{v} with {} voters: {} dominated, table says {c}",
                    index.min_voters(i),
                    dominated
                ),
            }]
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleStats {
    pub nodes: usize,
    pub condorcet: f64,
    pub maximin: f64,
    pub kemeny: f64,
    pub maximin_lex: f64,
}

impl fmt::Display for RuleStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nodes {}", self.nodes)?;
        writeln!(f, "condorcet_winner_fraction {:.4}", self.condorcet)?;
        writeln!(f, "maximin_member_fraction {:.4}", self.maximin)?;
        writeln!(f, "kemeny_member_fraction {:.4}", self.kemeny)?;
        write!(f, "maximin_lex_agreement {:.4}", self.maximin_lex)
    }
}

/// Fractions over all indexed tournaments.
pub fn compute_stats(table: &RuleTable, index: &TournamentIndex) -> Result<RuleStats, RuleError> {
    let counts = (0..index.len())
        .into_par_iter()
        .map(|i| {
            let v = index.vector(i);
            let c = choice_at(table, i, &v)?;
            let mm = v.to_matrix();
            Ok::<_, RuleError>([
                v.condorcet_winner().is_some() as usize,
                c.is_subset(mm.maximin_winners()) as usize,
                c.is_subset(mm.kemeny_winners()) as usize,
                (c == AltSet::singleton(mm.maximin_lex())) as usize,
            ])
        })
        .try_reduce(
            || [0; 4],
            |a, b| Ok([a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]),
        )?;
    let n = index.len().max(1) as f64;
    Ok(RuleStats {
        nodes: index.len(),
        condorcet: counts[0] as f64 / n,
        maximin: counts[1] as f64 / n,
        kemeny: counts[2] as f64 / n,
        maximin_lex: counts[3] as f64 / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::enumerate;
    use crate::voting::RuleClass;

    const FIG4: &str = include_str!("../fixtures/fig4_rows.txt");

    #[test]
    fn fig4_rows_round_trip() {
        let rows: Vec<&str> = FIG4.lines().collect();
        assert_eq!(rows.len(), 28);
        for row in rows {
            let (v, n, c) = parse_entry(row).unwrap();
            assert_eq!(format_entry(&v, n, c), row);
        }
        assert_eq!(
            format_entry(&MarginVector([1; 6]), 1, AltSet::singleton(Alternative::A)),
            "a,#1,(1,1,1,1,1,1)"
        );
    }

    #[test]
    fn parse_errors_carry_position() {
        for (bad, pos) in [
            ("", 0),
            ("e,#1,(1,1,1,1,1,1)", 0),
            ("a,1,(1,1,1,1,1,1)", 2),
            ("a,#x,(1,1,1,1,1,1)", 3),
            ("a,#1,(1,1,1)", 5),
            ("a,#1, (1,1,1,1,1,1)", 5),
            ("aa,#1,(1,1,1,1,1,1)", 1),
        ] {
            match parse_entry(bad) {
                Err(RuleError::Parse { position, .. }) => assert_eq!(position, pos, "{bad:?}"),
                other => panic!("{bad:?}: {other:?}"),
            }
        }
        let (_, _, set) = parse_entry("ac,#3,(1,1,1,1,1,-1)").unwrap();
        assert_eq!(set.to_string(), "ac");
    }

    #[test]
    fn single_voter_rows_choose_the_top() {
        let idx = enumerate(1, None);
        for row in FIG4.lines().filter(|l| l.contains(",#1,")) {
            let (v, _, c) = parse_entry(row).unwrap();
            assert!(idx.index_of(&v).is_some());
            assert_eq!(
                Some(c),
                v.condorcet_winner().map(AltSet::singleton),
                "{row}"
            );
        }
    }

    #[test]
    fn table_io_plain_and_gzip() {
        let idx = enumerate(3, None);
        let t = RuleTable::from_fn(&idx, TableMode::Single, |v| {
            AltSet::singleton(v.maximin_lex())
        })
        .unwrap();
        let mut text = Vec::new();
        t.write(&mut text).unwrap();
        assert_eq!(RuleTable::read(&text[..]).unwrap(), t);
        let mut gz = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
        gz.write_all(&text).unwrap();
        let gz = gz.finish().unwrap();
        assert_eq!(RuleTable::read(&gz[..]).unwrap(), t);
        let dup = format!(
            "{}{}",
            String::from_utf8(text.clone()).unwrap(),
            String::from_utf8(text).unwrap()
        );
        assert!(matches!(
            RuleTable::read(dup.as_bytes()),
            Err(RuleError::Duplicate(_))
        ));
    }

    #[test]
    fn decode_rejects_mode_violations() {
        let idx = enumerate(1, None);
        let varmap = VariableMap::from_space(&idx).unwrap();
        let mut lits = Vec::new();
        for i in 0..idx.len() {
            lits.push(var(i, idx.vector(i).condorcet_winner().unwrap()));
        }
        let model = Model::from_literals(96, &lits);
        let t = decode_model(&model, &varmap, TableMode::Single).unwrap();
        assert_eq!(
            t.get(&MarginVector([1; 6])),
            Some(AltSet::singleton(Alternative::A))
        );
        let mut two = model.clone();
        two.set(var(3, Alternative::D) as u32, true);
        two.set(var(3, Alternative::C) as u32, true);
        assert!(matches!(
            decode_model(&two, &varmap, TableMode::Single),
            Err(RuleError::ModeViolation { node: 3, .. })
        ));
        let mut none = model.clone();
        for a in 0..4 {
            none.set(var(5, Alternative::new(a)) as u32, false);
        }
        assert!(decode_model(&none, &varmap, TableMode::Set).is_err());
    }

    #[test]
    fn maximin_lex_fails_participation_at_seven() {
        let idx = enumerate(7, None);
        let t = RuleTable::from_fn(&idx, TableMode::Single, |v| {
            AltSet::singleton(v.maximin_lex())
        })
        .unwrap();
        assert!(!verify_participation(&t, &idx).unwrap().is_clean());
        assert!(verify_condorcet(&t, &idx).unwrap().is_clean());
        let stats = compute_stats(&t, &idx).unwrap();
        assert_eq!(stats.maximin_lex, 1.0);
        assert_eq!(stats.maximin, 1.0);
    }

    #[test]
    fn maximin_can_leave_the_top_cycle() {
        let idx = enumerate(7, None);
        let t = RuleTable::from_fn(&idx, TableMode::Single, |v| {
            AltSet::singleton(v.maximin_lex())
        })
        .unwrap();
        assert!(!verify_topcycle(&t, &idx).unwrap().is_clean());
    }

    #[test]
    fn constant_tables() {
        let idx = enumerate(3, None);
        let a = RuleTable::from_fn(&idx, TableMode::Single, |_| {
            AltSet::singleton(Alternative::A)
        })
        .unwrap();
        assert!(verify_participation(&a, &idx).unwrap().is_clean());
        let cond = verify_condorcet(&a, &idx).unwrap();
        let expected: Vec<usize> = (0..idx.len())
            .filter(|&i| matches!(idx.vector(i).condorcet_winner(), Some(w) if w != Alternative::A))
            .collect();
        assert_eq!(
            cond.violations.iter().map(|v| v.node).collect::<Vec<_>>(),
            expected
        );
        let all = RuleTable::from_fn(&idx, TableMode::Set, |_| AltSet::full(4)).unwrap();
        assert!(verify_optimistic(&all, &idx).unwrap().is_clean());
        assert!(verify_pessimistic(&all, &idx).unwrap().is_clean());
        assert!(verify_participation(&all, &idx).is_err());
    }

    #[test]
    fn allowed_sets_are_consistent_with_filters() {
        let idx = enumerate(3, None);
        let t = RuleTable::from_fn(&idx, TableMode::Set, |v| {
            RuleClass::Condorcet
                .allowed(&v.to_matrix())
                .intersection(v.top_cycle())
        })
        .unwrap();
        assert!(verify_condorcet(&t, &idx).unwrap().is_clean());
        assert!(verify_topcycle(&t, &idx).unwrap().is_clean());
    }

    #[test]
    fn report_lines() {
        let v = Violation {
            kind: "condorcet",
            node: 7,
            detail: "x".into(),
        };
        assert_eq!(v.to_string(), "condorcet 7 x");
    }
}
