//! Breadth-first discovery of every weighted tournament over four
//! alternatives inducible by a bounded number of voters.
//!
//! Layer `k` holds the margin vectors first reached with `k` voters. Adding a
//! ranking and its reverse leaves margins unchanged, so everything inducible
//! by `k` voters is also inducible by `k + 2`; only newly discovered vectors
//! need to be expanded.

use std::fmt;
use std::io::{self, BufRead, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::voting::{
    margins_of_profile, ranking_signs4, rankings4, MarginVector, Profile, Ranking,
};

/// Largest voter count accepted by [`oracle_enumerate`].
pub const ORACLE_LIMIT: u32 = 5;

#[derive(Debug, Error)]
pub enum EnumerationError {
    #[error(
        "oracle limit exceeded: {requested} voters requested, at most {ORACLE_LIMIT} supported"
    )]
    OracleLimit { requested: u32 },
    #[error("seed profile must be non-empty and over four alternatives")]
    BadSeed,
    #[error("index dump line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Starting point for seeded enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Seed {
    pub margins: MarginVector,
    pub voters: u32,
}

impl Seed {
    pub fn from_profile(profile: &Profile) -> Result<Self, EnumerationError> {
        if profile.m() != 4 || profile.is_empty() {
            return Err(EnumerationError::BadSeed);
        }
        Ok(Seed {
            margins: margins_of_profile(profile).map_err(|_| EnumerationError::BadSeed)?,
            voters: profile.n(),
        })
    }
}

/// All tournaments discovered up to `n_max` voters, densely indexed by
/// (discovery layer, lexicographic margins).
#[derive(Clone, PartialEq, Eq)]
pub struct TournamentIndex {
    n_max: u32,
    seed: Option<Seed>,
    first_layer: u32,
    vectors: Vec<MarginVector>,
    layer_offsets: Vec<usize>,
    lookup: Vec<(MarginVector, u32)>,
}

impl fmt::Debug for TournamentIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TournamentIndex")
            .field("n_max", &self.n_max)
            .field("seed", &self.seed)
            .field("len", &self.vectors.len())
            .finish()
    }
}

/// The 24 one-voter successors of `t`, in lexicographic ranking order.
pub fn successors(t: &MarginVector) -> [(Ranking, MarginVector); 24] {
    let rankings = rankings4();
    let signs = ranking_signs4();
    std::array::from_fn(|k| (rankings[k], t.apply_signs(&signs[k])))
}

fn merge_sorted(a: &[MarginVector], b: &[MarginVector]) -> Vec<MarginVector> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Breadth-first enumeration from the all-zero tournament, or from `seed`.
pub fn enumerate(n_max: u32, seed: Option<Seed>) -> TournamentIndex {
    assert!(n_max >= 1, "n_max must be positive");
    let signs = ranking_signs4();

    let mut layers: Vec<Vec<MarginVector>> = Vec::new();
    // Sorted union of all layers of each parity discovered so far.
    let mut seen: [Vec<MarginVector>; 2] = [Vec::new(), Vec::new()];
    let (first_layer, mut frontier) = match seed {
        Some(s) => {
            assert!(s.voters <= n_max, "seed already exceeds n_max");
            seen[(s.voters % 2) as usize] = vec![s.margins];
            layers.push(vec![s.margins]);
            (s.voters, vec![s.margins])
        }
        None => (1, vec![MarginVector::ZERO]),
    };
    let start = match seed {
        Some(s) => s.voters + 1,
        None => 1,
    };

    for k in start..=n_max {
        let mut next: Vec<MarginVector> = frontier
            .par_iter()
            .flat_map_iter(|t| signs.iter().map(move |s| t.apply_signs(s)))
            .collect();
        next.par_sort_unstable();
        next.dedup();
        let parity = (k % 2) as usize;
        let old = &seen[parity];
        next.retain(|v| old.binary_search(v).is_err());
        seen[parity] = merge_sorted(old, &next);
        layers.push(next.clone());
        frontier = next;
    }

    let mut vectors = Vec::with_capacity(layers.iter().map(Vec::len).sum());
    let mut layer_offsets = Vec::with_capacity(layers.len() + 1);
    for layer in &layers {
        layer_offsets.push(vectors.len());
        vectors.extend_from_slice(layer);
    }
    layer_offsets.push(vectors.len());

    let mut lookup: Vec<(MarginVector, u32)> = vectors
        .iter()
        .enumerate()
        .map(|(i, v)| (*v, i as u32))
        .collect();
    lookup.par_sort_unstable();

    TournamentIndex {
        n_max,
        seed,
        first_layer,
        vectors,
        layer_offsets,
        lookup,
    }
}

impl TournamentIndex {
    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn seed(&self) -> Option<Seed> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Voter count of the first (lowest) layer.
    pub fn first_layer(&self) -> u32 {
        self.first_layer
    }

    pub fn vector(&self, index: usize) -> MarginVector {
        self.vectors[index]
    }

    pub fn vectors(&self) -> &[MarginVector] {
        &self.vectors
    }

    /// Voter count of the layer that first discovered node `index`.
    pub fn min_voters(&self, index: usize) -> u32 {
        let layer = self.layer_offsets.partition_point(|&o| o <= index) - 1;
        self.first_layer + layer as u32
    }

    /// Vectors first discovered at `k` voters.
    pub fn layer(&self, k: u32) -> &[MarginVector] {
        if k < self.first_layer || k > self.n_max {
            return &[];
        }
        let l = (k - self.first_layer) as usize;
        &self.vectors[self.layer_offsets[l]..self.layer_offsets[l + 1]]
    }

    /// Index range of layer `k`.
    pub fn layer_range(&self, k: u32) -> std::ops::Range<usize> {
        if k < self.first_layer || k > self.n_max {
            return 0..0;
        }
        let l = (k - self.first_layer) as usize;
        self.layer_offsets[l]..self.layer_offsets[l + 1]
    }

    pub fn index_of(&self, v: &MarginVector) -> Option<usize> {
        self.lookup
            .binary_search_by(|(w, _)| w.cmp(v))
            .ok()
            .map(|i| self.lookup[i].1 as usize)
    }

    /// Whether `v` is inducible by exactly `k` voters within this index.
    pub fn inducible_with(&self, v: &MarginVector, k: u32) -> bool {
        match self.index_of(v) {
            Some(i) => {
                let m = self.min_voters(i);
                m <= k && (k - m) % 2 == 0 && k <= self.n_max
            }
            None => false,
        }
    }

    /// Number of nodes that have outgoing participation edges
    /// (those first discovered below `n_max` voters).
    pub fn interior_len(&self) -> usize {
        self.layer_offsets[(self.n_max - self.first_layer) as usize]
    }

    /// Successor index of node `index` under ranking number `k`, if it lies
    /// in the index.
    pub fn successor(&self, index: usize, ranking: usize) -> Option<usize> {
        if self.min_voters(index) >= self.n_max {
            return None;
        }
        let next = self.vectors[index].apply_signs(&ranking_signs4()[ranking]);
        self.index_of(&next)
    }

    pub fn stats(&self) -> EnumerationStats {
        let mut layers = Vec::new();
        let mut cumulative = 0usize;
        for k in self.first_layer..=self.n_max {
            let new = self.layer(k).len();
            let prev = cumulative;
            cumulative += new;
            layers.push(LayerStats {
                voters: k,
                new,
                cumulative,
                growth: if prev == 0 {
                    None
                } else {
                    Some(cumulative as f64 / prev as f64)
                },
            });
        }
        EnumerationStats { layers }
    }

    /// Reconstructs a profile that induces node `index` with exactly its
    /// discovery voter count, walking back through earlier layers. For a
    /// seeded index only the voters added on top of the seed are returned.
    pub fn realize(&self, index: usize) -> Profile {
        let mut profile = Profile::empty(4);
        let mut v = self.vectors[index];
        let mut k = self.min_voters(index);
        let floor = self.seed.map(|s| s.voters).unwrap_or(0);
        while k > floor {
            let (r, prev) = rankings4()
                .iter()
                .map(|r| (*r, v.remove_ranking(r)))
                .find(|(_, prev)| {
                    if k - 1 == floor {
                        match self.seed {
                            Some(s) => *prev == s.margins,
                            None => *prev == MarginVector::ZERO,
                        }
                    } else {
                        self.inducible_with(prev, k - 1)
                    }
                })
                .expect("every discovered vector has a predecessor");
            profile = profile.add_voters(&r, 1).expect("four alternatives");
            v = prev;
            k -= 1;
        }
        profile
    }

    /// Writes one line per node: `<index> <min_voters> <g_ab> ... <g_cd>`.
    pub fn write_dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (i, v) in self.vectors.iter().enumerate() {
            let e = v.entries();
            writeln!(
                out,
                "{} {} {} {} {} {} {} {}",
                i,
                self.min_voters(i),
                e[0],
                e[1],
                e[2],
                e[3],
                e[4],
                e[5]
            )?;
        }
        out.flush()
    }
}

/// Reads an index dump back as `(index, min_voters, vector)` triples.
pub fn read_dump<R: BufRead>(
    input: R,
) -> Result<Vec<(usize, u32, MarginVector)>, EnumerationError> {
    let mut out = Vec::new();
    for (line_no, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<i64> = line
            .split_whitespace()
            .map(|f| f.parse::<i64>())
            .collect::<Result<_, _>>()
            .map_err(|e| EnumerationError::Parse {
                line: line_no + 1,
                message: e.to_string(),
            })?;
        if fields.len() != 8 {
            return Err(EnumerationError::Parse {
                line: line_no + 1,
                message: format!("expected 8 fields, found {}", fields.len()),
            });
        }
        let mut v = [0i8; 6];
        for j in 0..6 {
            v[j] = fields[2 + j] as i8;
        }
        out.push((fields[0] as usize, fields[1] as u32, MarginVector(v)));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerStats {
    pub voters: u32,
    pub new: usize,
    pub cumulative: usize,
    pub growth: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnumerationStats {
    pub layers: Vec<LayerStats>,
}

impl EnumerationStats {
    pub fn cumulative(&self) -> usize {
        self.layers.last().map(|l| l.cumulative).unwrap_or(0)
    }

    /// Writes `<k> <new> <cumulative>` per layer.
    pub fn write<W: Write>(&self, mut out: W) -> io::Result<()> {
        for l in &self.layers {
            writeln!(out, "{} {} {}", l.voters, l.new, l.cumulative)?;
        }
        out.flush()
    }
}

/// Margins of every multiset profile with `1..=n_max` voters, by direct
/// profile construction. Independent of the breadth-first search above.
pub fn oracle_enumerate(
    n_max: u32,
) -> Result<std::collections::BTreeSet<MarginVector>, EnumerationError> {
    if n_max > ORACLE_LIMIT {
        return Err(EnumerationError::OracleLimit { requested: n_max });
    }
    let rankings = Ranking::all(4);
    let mut out = std::collections::BTreeSet::new();
    let mut counts = vec![0u32; rankings.len()];

    fn rec(
        start: usize,
        remaining: u32,
        counts: &mut [u32],
        rankings: &[Ranking],
        out: &mut std::collections::BTreeSet<MarginVector>,
    ) {
        if counts.iter().any(|&c| c > 0) {
            let profile =
                Profile::from_counts(4, rankings.iter().zip(counts.iter()).map(|(r, &c)| (*r, c)))
                    .expect("four alternatives");
            out.insert(margins_of_profile(&profile).expect("non-empty"));
        }
        if remaining == 0 {
            return;
        }
        for i in start..rankings.len() {
            counts[i] += 1;
            rec(i, remaining - 1, counts, rankings, out);
            counts[i] -= 1;
        }
    }

    rec(0, n_max, &mut counts, &rankings, &mut out);
    Ok(out)
}
