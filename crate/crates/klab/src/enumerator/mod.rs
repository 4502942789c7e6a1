//! Exhaustive, memoized, parallel computation of time-bounded complexities
//! C_T(x|cond) and K_T(x|cond) for sets of conditions and targets, plus the
//! counting and semimeasure quantities used by the lower-bound checks.
//!
//! Values are exact minima over all programs of length ≤ P halting within T
//! steps, with the shortest witness in length-lexicographic order. Infinity
//! (no witness at this P, T) is a first-class value distinct from
//! NotComputed (outside the table's domain).

mod cache;
mod walk;

pub use cache::{encode_table as encode_table_bytes, load_cache, save_cache, CacheError, CacheExpectation};
pub use walk::{walk_condition, walk_subtree, walk_to_frontier, HaltSink, ProgBits, WalkNode, WalkParams};

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use thiserror::Error;

use crate::bitcodec::{pair_decode, pair_encode, BitString};
use crate::machine::{MachineDescriptor, Mode};

/// Hard cap on the program-length bound P.
pub const MAX_PROGRAM_BITS: u32 = 26;
/// Work ceiling: refuse builds where |conditions| · 2^(P+1) exceeds this.
pub const WORK_CEILING: u128 = 1 << 40;
/// Depth at which a per-condition walk is split into parallel subtrees.
const SPLIT_DEPTH: u32 = 8;

/// A complexity value: exact bit count or no witness at this scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Value {
    Finite(u32),
    Infinity,
}

impl Value {
    pub fn finite(self) -> Option<u32> {
        match self {
            Value::Finite(v) => Some(v),
            Value::Infinity => None,
        }
    }

    /// Infinity compares greater than every finite value.
    pub fn le(self, other: Value) -> bool {
        match (self, other) {
            (Value::Finite(a), Value::Finite(b)) => a <= b,
            (Value::Finite(_), Value::Infinity) => true,
            (Value::Infinity, Value::Infinity) => true,
            (Value::Infinity, Value::Finite(_)) => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub value: Value,
    /// Shortest halting program in length-lex order; None iff Infinity.
    pub witness: Option<BitString>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum LookupError {
    #[error("condition row was not built")]
    MissingCondition,
    #[error("target not computed for this condition")]
    NotComputed,
}

#[derive(Debug, Error)]
pub enum EnumeratorError {
    #[error(
        "capacity exceeded: {conditions} conditions at P={p} imply {work} step-operations (ceiling 2^40); shrink the scale"
    )]
    CapacityExceeded { conditions: usize, p: u32, work: u128 },
}

/// Memoized mapping (condition, target) → exact time-bounded complexity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplexityTable {
    pub machine_fingerprint: [u8; 32],
    pub mode: Mode,
    pub max_program_len: u32,
    pub budget: u32,
    conditions: BTreeSet<BitString>,
    entries: HashMap<(BitString, BitString), Entry>,
}

impl ComplexityTable {
    pub fn new(machine_fingerprint: [u8; 32], mode: Mode, p: u32, t: u32) -> Self {
        ComplexityTable {
            machine_fingerprint,
            mode,
            max_program_len: p,
            budget: t,
            conditions: BTreeSet::new(),
            entries: HashMap::new(),
        }
    }

    /// Inserts one row. Also used by tests to build stub tables.
    pub fn insert(
        &mut self,
        cond: BitString,
        target: BitString,
        value: Value,
        witness: Option<BitString>,
    ) {
        debug_assert_eq!(matches!(value, Value::Infinity), witness.is_none());
        self.conditions.insert(cond.clone());
        self.entries.insert((cond, target), Entry { value, witness });
    }

    /// Marks a condition as built even if no entry mentions it.
    pub fn add_condition(&mut self, cond: BitString) {
        self.conditions.insert(cond);
    }

    pub fn has_condition(&self, cond: &BitString) -> bool {
        self.conditions.contains(cond)
    }

    pub fn conditions(&self) -> impl Iterator<Item = &BitString> {
        self.conditions.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, cond: &BitString, target: &BitString) -> Result<Value, LookupError> {
        if !self.conditions.contains(cond) {
            return Err(LookupError::MissingCondition);
        }
        self.entries
            .get(&(cond.clone(), target.clone()))
            .map(|e| e.value)
            .ok_or(LookupError::NotComputed)
    }

    pub fn entry(&self, cond: &BitString, target: &BitString) -> Option<&Entry> {
        self.entries.get(&(cond.clone(), target.clone()))
    }

    /// Entries sorted by (condition, target) in length-lex order — the
    /// canonical order of the cache file.
    pub fn iter_sorted(&self) -> Vec<(&BitString, &BitString, &Entry)> {
        let mut rows: Vec<_> = self
            .entries
            .iter()
            .map(|((c, x), e)| (c, x, e))
            .collect();
        rows.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        rows
    }

    /// Merges another table built with identical parameters.
    pub fn merge(&mut self, other: ComplexityTable) {
        assert_eq!(self.machine_fingerprint, other.machine_fingerprint);
        assert_eq!(self.mode, other.mode);
        assert_eq!(self.max_program_len, other.max_program_len);
        assert_eq!(self.budget, other.budget);
        self.conditions.extend(other.conditions);
        self.entries.extend(other.entries);
    }
}

/// Plain conditional complexity C_T(x|cond). The table must be plain-mode.
/// Anything outside the table's domain is NotComputed; callers that need to
/// distinguish an unbuilt condition row use [`ComplexityTable::lookup`].
pub fn lookup_c(
    table: &ComplexityTable,
    x: &BitString,
    cond: &BitString,
) -> Result<Value, LookupError> {
    assert_eq!(table.mode, Mode::Plain, "lookup_c needs a plain-mode table");
    table.lookup(cond, x).map_err(|_| LookupError::NotComputed)
}

/// Prefix-free conditional complexity K_T(x|cond). The table must be
/// prefix-mode.
pub fn lookup_k(
    table: &ComplexityTable,
    x: &BitString,
    cond: &BitString,
) -> Result<Value, LookupError> {
    assert_eq!(table.mode, Mode::Prefix, "lookup_k needs a prefix-mode table");
    table.lookup(cond, x).map_err(|_| LookupError::NotComputed)
}

/// C_T(a,b) = C_T(⟨a,b⟩ | ε).
pub fn pair_complexity(
    table: &ComplexityTable,
    a: &BitString,
    b: &BitString,
) -> Result<Value, LookupError> {
    lookup_c(table, &pair_encode(a, b), &BitString::new())
}

// ---------------------------------------------------------------------------
// Table construction
// ---------------------------------------------------------------------------

struct TargetIndex {
    /// (length → packed bits → target index); targets are ≤ 64 bits.
    by_len: Vec<HashMap<u64, u32>>,
    max_len: usize,
    count: usize,
}

impl TargetIndex {
    fn new(targets: &[BitString]) -> Self {
        let max_len = targets.iter().map(|t| t.len()).max().unwrap_or(0);
        let mut by_len = vec![HashMap::new(); max_len + 1];
        for (i, t) in targets.iter().enumerate() {
            by_len[t.len()].insert(t.as_u64().expect("targets are short"), i as u32);
        }
        TargetIndex {
            by_len,
            max_len,
            count: targets.len(),
        }
    }

    fn get(&self, out: &BitString) -> Option<u32> {
        if out.len() > self.max_len {
            return None;
        }
        self.by_len[out.len()].get(&out.as_u64()?).copied()
    }
}

/// Per-subtree sink: best witness seen for each target hit.
struct RowSink<'a> {
    index: &'a TargetIndex,
    rows: HashMap<u32, ProgBits>,
}

impl walk::HaltSink for RowSink<'_> {
    fn halted(&mut self, program: ProgBits, output: &BitString, _steps: u64) {
        if let Some(idx) = self.index.get(output) {
            self.rows
                .entry(idx)
                .and_modify(|best| {
                    if program < *best {
                        *best = program;
                    }
                })
                .or_insert(program);
        }
    }
}

fn rows_for_condition(
    mode: Mode,
    cond: &BitString,
    index: &TargetIndex,
    p: u32,
    t: u32,
) -> Vec<Option<ProgBits>> {
    let params = WalkParams {
        mode,
        cond,
        max_prog_len: p,
        budget: t as u64,
        out_cap: index.max_len as u64,
    };
    let mut shallow = RowSink {
        index,
        rows: HashMap::new(),
    };
    let frontier = walk_to_frontier(&params, SPLIT_DEPTH.min(p.max(1)), &mut shallow);
    let deep: Vec<HashMap<u32, ProgBits>> = frontier
        .into_par_iter()
        .map(|node| {
            let mut sink = RowSink {
                index,
                rows: HashMap::new(),
            };
            walk_subtree(node, &params, &mut sink);
            sink.rows
        })
        .collect();

    let mut best: Vec<Option<ProgBits>> = vec![None; index.count];
    for rows in std::iter::once(shallow.rows).chain(deep) {
        for (idx, prog) in rows {
            let slot = &mut best[idx as usize];
            match slot {
                Some(cur) if *cur <= prog => {}
                _ => *slot = Some(prog),
            }
        }
    }
    best
}

/// Builds the exact table for every (condition, target) pair: minimum over
/// all programs of length ≤ `p` halting within `t` steps, in length-lex
/// order. The result is independent of worker count and work partitioning
/// (subtrees merge by pointwise minimum).
pub fn build_table(
    descriptor: &MachineDescriptor,
    conditions: &[BitString],
    targets: &[BitString],
    p: u32,
    t: u32,
) -> Result<ComplexityTable, EnumeratorError> {
    let work = (conditions.len() as u128) << (p + 1);
    if p > MAX_PROGRAM_BITS || work > WORK_CEILING {
        return Err(EnumeratorError::CapacityExceeded {
            conditions: conditions.len(),
            p,
            work,
        });
    }

    let mut unique: Vec<BitString> = conditions.to_vec();
    unique.sort();
    unique.dedup();
    let index = TargetIndex::new(targets);

    let per_cond: Vec<(BitString, Vec<Option<ProgBits>>)> = unique
        .par_iter()
        .map(|cond| {
            let rows = rows_for_condition(descriptor.mode, cond, &index, p, t);
            (cond.clone(), rows)
        })
        .collect();

    let mut table = ComplexityTable::new(descriptor.fingerprint(), descriptor.mode, p, t);
    for (cond, rows) in per_cond {
        table.add_condition(cond.clone());
        for (i, best) in rows.iter().enumerate() {
            let (value, witness) = match best {
                Some(prog) => (Value::Finite(prog.len as u32), Some(prog.to_bitstring())),
                None => (Value::Infinity, None),
            };
            table.insert(cond.clone(), targets[i].clone(), value, witness);
        }
    }
    Ok(table)
}

// ---------------------------------------------------------------------------
// Slices and the semimeasure
// ---------------------------------------------------------------------------

/// For a fixed first component `a`: how many y satisfy C_T(⟨a,y⟩) ≤ n, and
/// each y's position in the enumeration (discovery) order, i.e. ordered by
/// the length-lex rank of the pair's witness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceCount {
    pub n: u32,
    pub a: BitString,
    pub count: u64,
    /// (y, ordinal) pairs in discovery order; ordinals are 0-based.
    pub ordinals: Vec<(BitString, u64)>,
}

/// Enumerates, from a plain-mode table over pair encodings with empty
/// condition, the slice of every first component at threshold `n`.
/// Targets that do not parse as pair encodings are ignored.
pub fn enumerate_slices(table: &ComplexityTable, n: u32) -> Vec<SliceCount> {
    assert_eq!(table.mode, Mode::Plain, "slices need a plain-mode table");
    let empty = BitString::new();
    let mut buckets: BTreeMap<BitString, Vec<(BitString, BitString)>> = BTreeMap::new();
    for ((cond, target), entry) in &table.entries {
        if *cond != empty {
            continue;
        }
        let Value::Finite(v) = entry.value else {
            continue;
        };
        if v > n {
            continue;
        }
        let Ok((a, y)) = pair_decode(target) else {
            continue;
        };
        let witness = entry.witness.clone().expect("finite entries carry witnesses");
        buckets.entry(a).or_default().push((witness, y));
    }
    buckets
        .into_iter()
        .map(|(a, mut items)| {
            items.sort();
            let ordinals: Vec<(BitString, u64)> = items
                .into_iter()
                .enumerate()
                .map(|(i, (_w, y))| (y, i as u64))
                .collect();
            SliceCount {
                n,
                a,
                count: ordinals.len() as u64,
                ordinals,
            }
        })
        .collect()
}

/// Exact dyadic rational num·2^(−log2_denom).
#[derive(Debug, Clone, Copy)]
pub struct Dyadic {
    pub num: u128,
    pub log2_denom: u32,
}

impl Dyadic {
    pub fn new(num: u128, log2_denom: u32) -> Self {
        let mut d = Dyadic { num, log2_denom };
        d.normalize();
        d
    }

    pub fn zero() -> Self {
        Dyadic { num: 0, log2_denom: 0 }
    }

    fn normalize(&mut self) {
        while self.log2_denom > 0 && self.num.is_multiple_of(2) && self.num > 0 {
            self.num /= 2;
            self.log2_denom -= 1;
        }
        if self.num == 0 {
            self.log2_denom = 0;
        }
    }

    pub fn le_one(self) -> bool {
        self.num <= 1u128 << self.log2_denom
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }
}

impl std::ops::Add for Dyadic {
    type Output = Dyadic;

    fn add(self, other: Dyadic) -> Dyadic {
        let d = self.log2_denom.max(other.log2_denom);
        let num = (self.num << (d - self.log2_denom)) + (other.num << (d - other.log2_denom));
        Dyadic::new(num, d)
    }
}

impl PartialEq for Dyadic {
    fn eq(&self, other: &Self) -> bool {
        Dyadic::new(self.num, self.log2_denom).num == Dyadic::new(other.num, other.log2_denom).num
            && Dyadic::new(self.num, self.log2_denom).log2_denom
                == Dyadic::new(other.num, other.log2_denom).log2_denom
    }
}

impl Eq for Dyadic {}

impl std::fmt::Display for Dyadic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/2^{}", self.num, self.log2_denom)
    }
}

/// The a-priori probability approximation P(a|n) = N_a·2^(−n−1).
pub fn semimeasure(slice: &SliceCount) -> Dyadic {
    Dyadic::new(slice.count as u128, slice.n + 1)
}

// ---------------------------------------------------------------------------
// Prefix-domain scan and the Kraft sum
// ---------------------------------------------------------------------------

/// All prefix-mode halting programs of length ≤ `max_len` under `cond`,
/// sorted length-lexicographically.
pub fn prefix_domain_scan(
    descriptor: &MachineDescriptor,
    cond: &BitString,
    max_len: u32,
    budget: u32,
) -> Vec<BitString> {
    assert_eq!(descriptor.mode, Mode::Prefix);
    let params = WalkParams {
        mode: Mode::Prefix,
        cond,
        max_prog_len: max_len,
        budget: budget as u64,
        out_cap: u64::MAX,
    };
    let mut halted: Vec<ProgBits> = Vec::new();
    walk_condition(&params, &mut |prog: ProgBits, _out: &BitString, _steps: u64| {
        halted.push(prog);
    });
    halted.sort();
    halted.into_iter().map(|p| p.to_bitstring()).collect()
}

/// Σ 2^(−|p|) over the given programs, in exact arithmetic.
pub fn kraft_sum(programs: &[BitString]) -> Dyadic {
    programs
        .iter()
        .fold(Dyadic::zero(), |acc, p| acc + Dyadic::new(1, p.len() as u32))
}
