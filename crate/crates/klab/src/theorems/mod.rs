//! Measures the additive deviation of every identity over an exhaustive
//! range of strings, and executes each constructive proof device: the
//! concatenation upper bound, the counting lower bounds, the corollary
//! family, the fixed-point iteration and the counterexample construction.
//!
//! Every check consumes immutable complexity tables and reports per-item
//! signed deviations; rows touching Infinity or NotComputed values are
//! excluded explicitly, never dropped silently.

mod report;

pub use report::{
    merge_reports, report_key, reports_to_csv, DeviationReport, Exclusion, IdentityId,
    MergedReports, ReportItem, Scale, Stats, ALL_IDENTITIES,
};

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::bitcodec::{condition_encode, nat_to_bits, pair_encode, BitString};
use crate::enumerator::{enumerate_slices, ComplexityTable, LookupError, Value};
use crate::machine::{hex32, Mode};

#[derive(Debug, Clone, Error)]
pub enum TheoremError {
    #[error("required condition row was not built: {condition}")]
    MissingCondition { condition: BitString },
    #[error("scale too small: {0}")]
    ScaleTooSmall(String),
}

/// The pair of tables every check reads: one plain-mode, one prefix-mode,
/// built on the same frozen machine at the same P and T.
#[derive(Debug, Clone)]
pub struct TableSet {
    pub plain: ComplexityTable,
    pub prefix: ComplexityTable,
}

/// A finite value or the reason the row must be excluded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Fin(u32),
    Excl(Exclusion),
}

impl TableSet {
    pub fn new(plain: ComplexityTable, prefix: ComplexityTable) -> Self {
        assert_eq!(plain.mode, Mode::Plain);
        assert_eq!(prefix.mode, Mode::Prefix);
        assert_eq!(plain.machine_fingerprint, prefix.machine_fingerprint);
        assert_eq!(plain.max_program_len, prefix.max_program_len);
        assert_eq!(plain.budget, prefix.budget);
        TableSet { plain, prefix }
    }

    pub fn fingerprint_hex(&self) -> String {
        hex32(&self.plain.machine_fingerprint)
    }

    pub fn scale(&self, l: u32) -> Scale {
        Scale {
            l,
            p: self.plain.max_program_len,
            t: self.plain.budget,
        }
    }

    fn cell(
        table: &ComplexityTable,
        target: &BitString,
        cond_items: &[BitString],
    ) -> Result<Cell, TheoremError> {
        let cond = condition_encode(cond_items);
        match table.lookup(&cond, target) {
            Ok(Value::Finite(v)) => Ok(Cell::Fin(v)),
            Ok(Value::Infinity) => Ok(Cell::Excl(Exclusion::Infinity)),
            Err(LookupError::NotComputed) => Ok(Cell::Excl(Exclusion::NotComputed)),
            Err(LookupError::MissingCondition) => {
                Err(TheoremError::MissingCondition { condition: cond })
            }
        }
    }

    /// C_T(target | items), conditions flattened via condition_encode.
    pub fn c(&self, target: &BitString, cond_items: &[BitString]) -> Result<Cell, TheoremError> {
        Self::cell(&self.plain, target, cond_items)
    }

    /// K_T(target | items).
    pub fn k(&self, target: &BitString, cond_items: &[BitString]) -> Result<Cell, TheoremError> {
        Self::cell(&self.prefix, target, cond_items)
    }

    fn witness(
        table: &ComplexityTable,
        target: &BitString,
        cond_items: &[BitString],
    ) -> Option<BitString> {
        let cond = condition_encode(cond_items);
        table.entry(&cond, target).and_then(|e| e.witness.clone())
    }
}

fn eps() -> BitString {
    BitString::new()
}

fn nat(j: u32) -> BitString {
    nat_to_bits(j as u64)
}

/// All pairs (a,b) with |a|+|b| ≤ l, ordered by total length, then |a|,
/// then lexicographically. This is the canonical report row order.
pub fn pairs_up_to(l: u32) -> Vec<(BitString, BitString)> {
    let mut out = Vec::new();
    for total in 0..=l as usize {
        for la in 0..=total {
            for a in BitString::all_of_len(la) {
                for b in BitString::all_of_len(total - la) {
                    out.push((a.clone(), b.clone()));
                }
            }
        }
    }
    out
}

/// Singles range used by the corollary suite at pair scale `l`.
pub fn singles_scale(l: u32) -> u32 {
    (l + 2).min(10)
}

/// String range for the Levin fixed-point scan at pair scale `l`.
pub fn levin_scale(l: u32) -> u32 {
    (l + 1).min(10)
}

fn pair_id(a: &BitString, b: &BitString) -> String {
    format!("a={a},b={b}")
}

/// Per-item outcomes before aggregation: (row id, deviation or exclusion).
pub type DeviationRows = Vec<(String, Result<i64, Exclusion>)>;

/// Residual-0 fixed points realized at a scale: (x, y, k, l).
pub type RealizedFixedPoints = Vec<(BitString, BitString, u32, u32)>;

/// A total string-to-string function for the function corollary.
pub type StringFn = Box<dyn Fn(&BitString) -> BitString>;

type Rows = DeviationRows;

macro_rules! fin_or_exclude {
    ($rows:expr, $id:expr, $cell:expr) => {
        match $cell {
            Cell::Fin(v) => v,
            Cell::Excl(e) => {
                $rows.push(($id, Err(e)));
                continue;
            }
        }
    };
}

// ---------------------------------------------------------------------------
// THM1: the pair additivity identity and its two proof directions
// ---------------------------------------------------------------------------

/// Deviation of C(a,b) − [K(a|n) + C(b|a,n)] with n = C_T(a,b), per pair.
pub fn check_theorem1(ts: &TableSet, l: u32) -> Result<DeviationReport, TheoremError> {
    let mut rows: Rows = Vec::new();
    for (a, b) in pairs_up_to(l) {
        let id = pair_id(&a, &b);
        let n = fin_or_exclude!(rows, id, ts.c(&pair_encode(&a, &b), &[eps()])?);
        let ka = fin_or_exclude!(rows, id, ts.k(&a, &[nat(n)])?);
        let cb = fin_or_exclude!(rows, id, ts.c(&b, &[a.clone(), nat(n)])?);
        rows.push((id, Ok(n as i64 - (ka as i64 + cb as i64))));
    }
    Ok(DeviationReport::from_items(
        IdentityId::Thm1,
        ts.scale(l),
        ts.fingerprint_hex(),
        rows,
    ))
}

/// Constructive ≤ direction: deviation of C(a,b) against the total length
/// of the stored witnesses p (for K(a|n)) and q (for C(b|a,n)).
pub fn check_thm1_upper(ts: &TableSet, l: u32) -> Result<DeviationReport, TheoremError> {
    let mut rows: Rows = Vec::new();
    for (a, b) in pairs_up_to(l) {
        let id = pair_id(&a, &b);
        let n = fin_or_exclude!(rows, id, ts.c(&pair_encode(&a, &b), &[eps()])?);
        let ka = fin_or_exclude!(rows, id, ts.k(&a, &[nat(n)])?);
        let cb = fin_or_exclude!(rows, id, ts.c(&b, &[a.clone(), nat(n)])?);
        let p = TableSet::witness(&ts.prefix, &a, &[nat(n)]).expect("finite entry has witness");
        let q = TableSet::witness(&ts.plain, &b, &[a.clone(), nat(n)])
            .expect("finite entry has witness");
        debug_assert_eq!(p.len() as u32, ka);
        debug_assert_eq!(q.len() as u32, cb);
        rows.push((id, Ok(n as i64 - (p.len() as i64 + q.len() as i64))));
    }
    Ok(DeviationReport::from_items(
        IdentityId::Thm1Upper,
        ts.scale(l),
        ts.fingerprint_hex(),
        rows,
    ))
}

/// Both counting lower bounds. Report 1: K(a|n) − (n − ⌊log₂N_a⌋) per
/// realized (a,n). Report 2: C(b|a,n) − ⌈log₂N_a⌉ per pair.
pub fn check_thm1_lower(
    ts: &TableSet,
    l: u32,
) -> Result<(DeviationReport, DeviationReport), TheoremError> {
    // realized (a, b, n) triples with finite pair complexity
    let mut realized: Vec<(BitString, BitString, u32)> = Vec::new();
    let mut excluded_pairs: Vec<(String, Exclusion)> = Vec::new();
    for (a, b) in pairs_up_to(l) {
        match ts.c(&pair_encode(&a, &b), &[eps()])? {
            Cell::Fin(n) => realized.push((a, b, n)),
            Cell::Excl(e) => excluded_pairs.push((pair_id(&a, &b), e)),
        }
    }
    let ns: BTreeSet<u32> = realized.iter().map(|(_, _, n)| *n).collect();
    let mut slice_counts: BTreeMap<u32, BTreeMap<BitString, u64>> = BTreeMap::new();
    for &n in &ns {
        let slices = enumerate_slices(&ts.plain, n);
        slice_counts.insert(n, slices.into_iter().map(|s| (s.a, s.count)).collect());
    }

    // Report 1 over distinct (a, n)
    let mut seen: BTreeSet<(BitString, u32)> = BTreeSet::new();
    let mut rows_k: Rows = Vec::new();
    for (a, _b, n) in &realized {
        if !seen.insert((a.clone(), *n)) {
            continue;
        }
        let id = format!("a={a},n={n}");
        let count = slice_counts[n].get(a).copied().unwrap_or(0);
        assert!(count >= 1, "pair with C ≤ n implies a non-empty slice");
        let ka = fin_or_exclude!(rows_k, id, ts.k(a, &[nat(*n)])?);
        let bound = *n as i64 - (count as f64).log2().floor() as i64;
        rows_k.push((id, Ok(ka as i64 - bound)));
    }

    // Report 2 per pair
    let mut rows_c: Rows = Vec::new();
    for (a, b, n) in &realized {
        let id = format!("a={a},b={b},n={n}");
        let count = slice_counts[n].get(a).copied().unwrap_or(0);
        assert!(count >= 1);
        let cb = fin_or_exclude!(rows_c, id, ts.c(b, &[a.clone(), nat(*n)])?);
        let bound = (count as f64).log2().ceil() as i64;
        rows_c.push((id, Ok(cb as i64 - bound)));
    }
    for (id, e) in excluded_pairs {
        rows_k.push((id.clone(), Err(e)));
        rows_c.push((id, Err(e)));
    }

    let scale = ts.scale(l);
    Ok((
        DeviationReport::from_items(IdentityId::Thm1LowerK, scale, ts.fingerprint_hex(), rows_k),
        DeviationReport::from_items(IdentityId::Thm1LowerC, scale, ts.fingerprint_hex(), rows_c),
    ))
}

// ---------------------------------------------------------------------------
// Corollary suite
// ---------------------------------------------------------------------------

/// The seven corollary identities, one report each, in a fixed order:
/// COR_CKC, COR_KKK, COR_EMPTY_B, COR_EMPTY_A, COR_KC_EQ_CC, GACS_ID,
/// PREFIX_PAIR. Singles run at length ≤ singles_scale(l), pairs at ≤ l.
pub fn check_corollaries(ts: &TableSet, l: u32) -> Result<Vec<DeviationReport>, TheoremError> {
    let ls = singles_scale(l);
    let singles: Vec<BitString> = BitString::all_up_to(ls as usize).collect();
    let scale = ts.scale(l);
    let fp = ts.fingerprint_hex();
    let mut out = Vec::new();

    // C(a, C(a)) − C(a): the shortest program describes its own length.
    let mut rows: Rows = Vec::new();
    for a in &singles {
        let id = format!("a={a}");
        let c = fin_or_exclude!(rows, id, ts.c(a, &[eps()])?);
        let cpair = fin_or_exclude!(rows, id, ts.c(&pair_encode(a, &nat(c)), &[eps()])?);
        rows.push((id, Ok(cpair as i64 - c as i64)));
    }
    out.push(DeviationReport::from_items(IdentityId::CorCkc, scale, fp.clone(), rows));

    // K(a, K(a)) − K(a)
    let mut rows: Rows = Vec::new();
    for a in &singles {
        let id = format!("a={a}");
        let k = fin_or_exclude!(rows, id, ts.k(a, &[eps()])?);
        let kpair = fin_or_exclude!(rows, id, ts.k(&pair_encode(a, &nat(k)), &[eps()])?);
        rows.push((id, Ok(kpair as i64 - k as i64)));
    }
    out.push(DeviationReport::from_items(IdentityId::CorKkk, scale, fp.clone(), rows));

    // C(a) − K(a | C(a)): empty b.
    let mut rows: Rows = Vec::new();
    for a in &singles {
        let id = format!("a={a}");
        let c = fin_or_exclude!(rows, id, ts.c(a, &[eps()])?);
        let k = fin_or_exclude!(rows, id, ts.k(a, &[nat(c)])?);
        rows.push((id, Ok(c as i64 - k as i64)));
    }
    out.push(DeviationReport::from_items(IdentityId::CorEmptyB, scale, fp.clone(), rows));

    // C(b) − C(b | C(b)): empty a.
    let mut rows: Rows = Vec::new();
    for b in &singles {
        let id = format!("b={b}");
        let c = fin_or_exclude!(rows, id, ts.c(b, &[eps()])?);
        let cc = fin_or_exclude!(rows, id, ts.c(b, &[nat(c)])?);
        rows.push((id, Ok(c as i64 - cc as i64)));
    }
    out.push(DeviationReport::from_items(IdentityId::CorEmptyA, scale, fp.clone(), rows));

    // C(u|C(u)) − K(u|C(u)): the two previous equalities combined.
    let mut rows: Rows = Vec::new();
    for u in &singles {
        let id = format!("u={u}");
        let c = fin_or_exclude!(rows, id, ts.c(u, &[eps()])?);
        let cc = fin_or_exclude!(rows, id, ts.c(u, &[nat(c)])?);
        let kc = fin_or_exclude!(rows, id, ts.k(u, &[nat(c)])?);
        rows.push((id, Ok(cc as i64 - kc as i64)));
    }
    out.push(DeviationReport::from_items(IdentityId::CorKcEqCc, scale, fp.clone(), rows));

    // C(a,b) − K(a,b | C(a,b)): the intermediate identity of the
    // alternative derivation.
    let mut rows: Rows = Vec::new();
    for (a, b) in pairs_up_to(l) {
        let id = pair_id(&a, &b);
        let enc = pair_encode(&a, &b);
        let n = fin_or_exclude!(rows, id, ts.c(&enc, &[eps()])?);
        let k = fin_or_exclude!(rows, id, ts.k(&enc, &[nat(n)])?);
        rows.push((id, Ok(n as i64 - k as i64)));
    }
    out.push(DeviationReport::from_items(IdentityId::GacsId, scale, fp.clone(), rows));

    // K(a,b) − [K(a) + K(b|a,K(a))]: the prefix-free pair formula.
    let mut rows: Rows = Vec::new();
    for (a, b) in pairs_up_to(l) {
        let id = pair_id(&a, &b);
        let kab = fin_or_exclude!(rows, id, ts.k(&pair_encode(&a, &b), &[eps()])?);
        let ka = fin_or_exclude!(rows, id, ts.k(&a, &[eps()])?);
        let kb = fin_or_exclude!(rows, id, ts.k(&b, &[a.clone(), nat(ka)])?);
        rows.push((id, Ok(kab as i64 - (ka as i64 + kb as i64))));
    }
    out.push(DeviationReport::from_items(IdentityId::PrefixPair, scale, fp, rows));

    Ok(out)
}

/// C(b) − K(f(b)|C(b)) − C(b|f(b),C(b)) for a supplied total function f.
pub fn check_function_corollary(
    ts: &TableSet,
    f: &dyn Fn(&BitString) -> BitString,
    f_name: &str,
    l: u32,
) -> Result<DeviationReport, TheoremError> {
    let mut rows: Rows = Vec::new();
    for b in BitString::all_up_to(l as usize) {
        let id = format!("f={f_name},b={b}");
        let c = fin_or_exclude!(rows, id, ts.c(&b, &[eps()])?);
        let image = f(&b);
        let kf = fin_or_exclude!(rows, id, ts.k(&image, &[nat(c)])?);
        let cb = fin_or_exclude!(rows, id, ts.c(&b, &[image.clone(), nat(c)])?);
        rows.push((id, Ok(c as i64 - kf as i64 - cb as i64)));
    }
    Ok(DeviationReport::from_items(
        IdentityId::CorFunc,
        ts.scale(l),
        ts.fingerprint_hex(),
        rows,
    ))
}

/// The built-in functions for the function corollary: identity, the
/// constant ε, and length (as a number via the Nat bijection).
pub fn builtin_functions() -> Vec<(&'static str, StringFn)> {
    vec![
        ("identity", Box::new(|b: &BitString| b.clone())),
        ("const-eps", Box::new(|_: &BitString| BitString::new())),
        (
            "length",
            Box::new(|b: &BitString| nat_to_bits(b.len() as u64)),
        ),
    ]
}

/// One merged COR_FUNC report over all built-in functions at scale
/// levin_scale(l).
pub fn check_function_corollaries(ts: &TableSet, l: u32) -> Result<DeviationReport, TheoremError> {
    let fl = levin_scale(l);
    let mut rows: Rows = Vec::new();
    for (name, f) in builtin_functions() {
        let rep = check_function_corollary(ts, f.as_ref(), name, fl)?;
        for item in rep.items {
            rows.push((
                item.id,
                match item.deviation {
                    Some(d) => Ok(d),
                    None => Err(match item.excluded_reason.as_deref() {
                        Some("Infinity") => Exclusion::Infinity,
                        _ => Exclusion::NotComputed,
                    }),
                },
            ));
        }
    }
    Ok(DeviationReport::from_items(
        IdentityId::CorFunc,
        ts.scale(l),
        ts.fingerprint_hex(),
        rows,
    ))
}

// ---------------------------------------------------------------------------
// PROP2: the variant nesting the prefix value in the second condition
// ---------------------------------------------------------------------------

/// C(a,b) − [K(a|C(a,b)) + C(b|a, K(a|C(a,b)))]: the variant that nests the
/// prefix value in the second condition.
pub fn check_prop2(ts: &TableSet, l: u32) -> Result<DeviationReport, TheoremError> {
    let mut rows: Rows = Vec::new();
    for (a, b) in pairs_up_to(l) {
        let id = pair_id(&a, &b);
        let n = fin_or_exclude!(rows, id, ts.c(&pair_encode(&a, &b), &[eps()])?);
        let m = fin_or_exclude!(rows, id, ts.k(&a, &[nat(n)])?);
        let cb = fin_or_exclude!(rows, id, ts.c(&b, &[a.clone(), nat(m)])?);
        rows.push((id, Ok(n as i64 - (m as i64 + cb as i64))));
    }
    Ok(DeviationReport::from_items(
        IdentityId::Prop2,
        ts.scale(l),
        ts.fingerprint_hex(),
        rows,
    ))
}

// ---------------------------------------------------------------------------
// Levin's fixed point
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevinRow {
    pub a: BitString,
    /// min{i ≤ i_max : K_T(a|i) ≤ i}, None when the threshold is never met.
    pub i_star: Option<u32>,
    pub c_a: Option<u32>,
    pub deviation: Option<i64>,
    /// max{i ≤ i_max : K_T(a|i) > i}; exhibits near-uniqueness.
    pub last_above: Option<u32>,
    /// K_T(a|i) ≤ i for every i ≥ i_star in the scanned window.
    pub threshold_monotone: bool,
}

/// Scans K_T(a|i) against i for i ∈ [0, i_max]. Values Infinity or outside
/// the table count as "above the line".
pub fn levin_fixed_point(
    ts: &TableSet,
    a: &BitString,
    i_max: u32,
) -> Result<LevinRow, TheoremError> {
    let mut i_star = None;
    let mut last_above = None;
    for i in 0..=i_max {
        let below = match ts.k(a, &[nat(i)])? {
            Cell::Fin(v) => v <= i,
            Cell::Excl(_) => false,
        };
        if below {
            if i_star.is_none() {
                i_star = Some(i);
            }
        } else {
            last_above = Some(i);
        }
    }
    let c_a = match ts.c(a, &[eps()])? {
        Cell::Fin(v) => Some(v),
        Cell::Excl(_) => None,
    };
    let deviation = match (i_star, c_a) {
        (Some(i), Some(c)) => Some(i as i64 - c as i64),
        _ => None,
    };
    let threshold_monotone = match i_star {
        Some(s) => last_above.is_none_or(|la| la < s),
        None => true,
    };
    Ok(LevinRow {
        a: a.clone(),
        i_star,
        c_a,
        deviation,
        last_above,
        threshold_monotone,
    })
}

/// LEVIN_FP report over all a with |a| ≤ levin_scale(l); deviation is
/// i_star − C_T(a).
pub fn levin_report(
    ts: &TableSet,
    l: u32,
    i_max: u32,
) -> Result<(Vec<LevinRow>, DeviationReport), TheoremError> {
    let mut rows: Rows = Vec::new();
    let mut detail = Vec::new();
    for a in BitString::all_up_to(levin_scale(l) as usize) {
        let row = levin_fixed_point(ts, &a, i_max)?;
        let id = format!("a={a}");
        match row.deviation {
            Some(d) => rows.push((id, Ok(d))),
            None => rows.push((id, Err(Exclusion::Infinity))),
        }
        detail.push(row);
    }
    let report = DeviationReport::from_items(
        IdentityId::LevinFp,
        ts.scale(l),
        ts.fingerprint_hex(),
        rows,
    );
    Ok((detail, report))
}

// ---------------------------------------------------------------------------
// Counterexample construction
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct CounterexRow {
    pub n: u32,
    /// The split realizing the exhaustive argmax, when any pair encoding
    /// ⟨r, i⟩ at this n has a finite value.
    pub chosen: Option<CounterexSplit>,
    /// Reference curve log₂n − 2·log₂log₂n for the trend table.
    pub reference_curve: f64,
}

#[derive(Debug, Clone)]
pub struct CounterexSplit {
    pub r: BitString,
    pub i: u32,
    pub pair_value: u32,
    pub x: BitString,
    pub y: BitString,
    /// C_T(x,y) − C_T(x) − K_T(y|x), None when a term is excluded.
    pub gap: Option<i64>,
}

#[derive(Debug, Clone)]
pub struct SuperadditivityScan {
    pub max_gap: Option<i64>,
    pub argmax: Option<(BitString, BitString)>,
    pub positive_pairs: u64,
    pub scanned_pairs: u64,
}

/// For each n: pick (r, i) with |r| = n, i < n maximizing C_T(⟨r, i⟩)
/// (ties broken by the first in (r lex, i ascending) order), split r at i
/// and measure the gap. Also scans all pairs at scale `l` for
/// C_T(x,y) > C_T(x) + K_T(y|x).
pub fn counterexample_search(
    ts: &TableSet,
    n_values: &[u32],
    l: u32,
) -> Result<(Vec<CounterexRow>, SuperadditivityScan, DeviationReport), TheoremError> {
    let mut rows_out = Vec::new();
    for &n in n_values {
        let mut best: Option<(u32, BitString, u32)> = None; // (value, r, i)
        for r in BitString::all_of_len(n as usize) {
            for i in 0..n {
                if let Cell::Fin(v) = ts.c(&pair_encode(&r, &nat(i)), &[eps()])? {
                    if best.as_ref().is_none_or(|(bv, _, _)| v > *bv) {
                        best = Some((v, r.clone(), i));
                    }
                }
            }
        }
        let reference_curve = (n as f64).log2() - 2.0 * (n as f64).log2().log2();
        let chosen = best.map(|(pair_value, r, i)| {
            let x = BitString::from_bits(&r.iter().take(i as usize).collect::<Vec<_>>());
            let y = BitString::from_bits(&r.iter().skip(i as usize).collect::<Vec<_>>());
            (pair_value, r, i, x, y)
        });
        let chosen = match chosen {
            None => None,
            Some((pair_value, r, i, x, y)) => {
                let cxy = ts.c(&pair_encode(&x, &y), &[eps()])?;
                let cx = ts.c(&x, &[eps()])?;
                let kyx = ts.k(&y, std::slice::from_ref(&x))?;
                let gap = match (cxy, cx, kyx) {
                    (Cell::Fin(v), Cell::Fin(c), Cell::Fin(k)) => {
                        Some(v as i64 - c as i64 - k as i64)
                    }
                    _ => None,
                };
                Some(CounterexSplit {
                    r,
                    i,
                    pair_value,
                    x,
                    y,
                    gap,
                })
            }
        };
        rows_out.push(CounterexRow {
            n,
            chosen,
            reference_curve,
        });
    }
    if rows_out.iter().all(|r| r.chosen.is_none()) {
        return Err(TheoremError::ScaleTooSmall(format!(
            "no finite pair encodings at any n in {n_values:?}"
        )));
    }

    // Exhaustive superadditivity scan over pairs at scale l.
    let mut max_gap: Option<i64> = None;
    let mut argmax = None;
    let mut positive = 0u64;
    let mut scanned = 0u64;
    for (x, y) in pairs_up_to(l) {
        let (Cell::Fin(v), Cell::Fin(c), Cell::Fin(k)) = (
            ts.c(&pair_encode(&x, &y), &[eps()])?,
            ts.c(&x, &[eps()])?,
            ts.k(&y, std::slice::from_ref(&x))?,
        ) else {
            continue;
        };
        scanned += 1;
        let gap = v as i64 - c as i64 - k as i64;
        if gap > 0 {
            positive += 1;
        }
        if max_gap.is_none_or(|m| gap > m) {
            max_gap = Some(gap);
            argmax = Some((x, y));
        }
    }
    let scan = SuperadditivityScan {
        max_gap,
        argmax,
        positive_pairs: positive,
        scanned_pairs: scanned,
    };

    // Report: one row per n (gap against the reference curve is reported,
    // never asserted), plus the scan row.
    let mut rows: Rows = Vec::new();
    for row in &rows_out {
        let id = format!("n={},ref={:.3}", row.n, row.reference_curve);
        match &row.chosen {
            Some(split) => match split.gap {
                Some(g) => rows.push((id, Ok(g))),
                None => rows.push((id, Err(Exclusion::Infinity))),
            },
            None => rows.push((id, Err(Exclusion::Infinity))),
        }
    }
    rows.push((
        format!("scan,L={l}"),
        match scan.max_gap {
            Some(g) => Ok(g),
            None => Err(Exclusion::Infinity),
        },
    ));
    let report = DeviationReport::from_items(
        IdentityId::Counterex,
        ts.scale(l),
        ts.fingerprint_hex(),
        rows,
    );
    Ok((rows_out, scan, report))
}

// ---------------------------------------------------------------------------
// PROP3: the (k,l) fixed point
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedPointOutcome {
    pub k: u32,
    pub l: u32,
    /// |k − C(x|l)| + |l − C(y|x,k)| at the returned point.
    pub residual: u32,
    /// Every visited point, ending with the first repeated one.
    pub trace: Vec<(u32, u32)>,
}

/// A value left the computed range (Infinity or outside the table).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Diverged(pub Exclusion);

/// Iterates F: (k,l) ↦ (C(x|l), C(y|x,k)) from (C(x|0), C(y|x,0)) until a
/// point repeats or max_iter is reached; returns the visited point with
/// minimal residual (ties: smaller (k,l) lexicographically).
pub fn fixed_point_kl(
    ts: &TableSet,
    x: &BitString,
    y: &BitString,
    max_iter: u32,
) -> Result<Result<FixedPointOutcome, Diverged>, TheoremError> {
    let f = |k: u32, l: u32| -> Result<Result<(u32, u32), Diverged>, TheoremError> {
        let fk = match ts.c(x, &[nat(l)])? {
            Cell::Fin(v) => v,
            Cell::Excl(e) => return Ok(Err(Diverged(e))),
        };
        let fl = match ts.c(y, &[x.clone(), nat(k)])? {
            Cell::Fin(v) => v,
            Cell::Excl(e) => return Ok(Err(Diverged(e))),
        };
        Ok(Ok((fk, fl)))
    };

    let start = match f(0, 0)? {
        Ok(p) => p,
        Err(d) => return Ok(Err(d)),
    };
    let mut trace = vec![start];
    let mut images: Vec<(u32, u32)> = Vec::new();
    let mut cur = start;
    for _ in 0..max_iter {
        let next = match f(cur.0, cur.1)? {
            Ok(p) => p,
            Err(d) => return Ok(Err(d)),
        };
        images.push(next);
        let repeat = trace.iter().position(|&p| p == next);
        trace.push(next);
        if let Some(pos) = repeat {
            // The cycle is trace[pos..trace.len()-1]; trace[i]'s image under
            // F is images[i].
            let best = pick_best(&trace[pos..trace.len() - 1], &images[pos..]);
            return Ok(Ok(FixedPointOutcome {
                k: best.0,
                l: best.1,
                residual: best.2,
                trace,
            }));
        }
        cur = next;
    }
    // No repeat within max_iter: minimize residual over all visited points
    // whose image is known.
    let best = pick_best(&trace[..images.len()], &images);
    Ok(Ok(FixedPointOutcome {
        k: best.0,
        l: best.1,
        residual: best.2,
        trace,
    }))
}

fn pick_best(candidates: &[(u32, u32)], images: &[(u32, u32)]) -> (u32, u32, u32) {
    let mut best: Option<(u32, u32, u32)> = None;
    for (i, &(k, l)) in candidates.iter().enumerate() {
        let (fk, fl) = images[i];
        let residual = k.abs_diff(fk) + l.abs_diff(fl);
        let cand = (k, l, residual);
        best = Some(match best {
            None => cand,
            Some(b) => {
                if (residual, k, l) < (b.2, b.0, b.1) {
                    cand
                } else {
                    b
                }
            }
        });
    }
    best.expect("at least one candidate")
}

/// PROP3_FP (deviation = residual per pair) and PROP3_SUMS (three sum
/// deviations per residual-0 pair) at scale l. Also returns the realized
/// residual-0 fixed points.
pub fn prop3_reports(
    ts: &TableSet,
    l: u32,
    max_iter: u32,
) -> Result<(DeviationReport, DeviationReport, RealizedFixedPoints), TheoremError> {
    let mut rows_fp: Rows = Vec::new();
    let mut rows_sums: Rows = Vec::new();
    let mut realized = Vec::new();
    for (x, y) in pairs_up_to(l) {
        let id = format!("x={x},y={y}");
        match fixed_point_kl(ts, &x, &y, max_iter)? {
            Err(Diverged(e)) => rows_fp.push((id, Err(e))),
            Ok(outcome) => {
                rows_fp.push((id.clone(), Ok(outcome.residual as i64)));
                if outcome.residual == 0 {
                    let (k, l_val) = (outcome.k, outcome.l);
                    realized.push((x.clone(), y.clone(), k, l_val));
                    for (label, dev) in check_prop3_sums(ts, &x, &y, k, l_val)? {
                        rows_sums.push((format!("{id},k={k},l={l_val},{label}"), dev));
                    }
                }
            }
        }
    }
    let scale = ts.scale(l);
    Ok((
        DeviationReport::from_items(IdentityId::Prop3Fp, scale, ts.fingerprint_hex(), rows_fp),
        DeviationReport::from_items(IdentityId::Prop3Sums, scale, ts.fingerprint_hex(), rows_sums),
        realized,
    ))
}

/// The three sum identities at a residual-0 fixed point:
/// C(x,y|k,l), C(x,y|k), C(x,y|l), each minus (k+l).
pub fn check_prop3_sums(
    ts: &TableSet,
    x: &BitString,
    y: &BitString,
    k: u32,
    l: u32,
) -> Result<DeviationRows, TheoremError> {
    let enc = pair_encode(x, y);
    let sum = k as i64 + l as i64;
    let mut out = Vec::new();
    let conds: [(&str, Vec<BitString>); 3] = [
        ("cond=k+l", vec![nat(k), nat(l)]),
        ("cond=k", vec![nat(k)]),
        ("cond=l", vec![nat(l)]),
    ];
    for (label, items) in conds {
        let cell = ts.c(&enc, &items)?;
        out.push((
            label.to_string(),
            match cell {
                Cell::Fin(v) => Ok(v as i64 - sum),
                Cell::Excl(e) => Err(e),
            },
        ));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// The Remark: admissible pairs and the Pareto frontier
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct RemarkOutcome {
    pub x: BitString,
    pub y: BitString,
    /// All (k′,l′) ≤ box with C(x|l′) ≤ k′ and C(y|x,k′) ≤ l′.
    pub admissible: Vec<(u32, u32)>,
    /// Pareto-minimal admissible points under coordinate-wise ≤.
    pub frontier: Vec<(u32, u32)>,
    pub fixed_point: Option<(u32, u32)>,
    /// (k+l) − min over the frontier of (k′+l′); 0 when the fixed point is
    /// sum-minimal among admissible pairs.
    pub deviation: Option<i64>,
}

pub fn remark_scan(
    ts: &TableSet,
    x: &BitString,
    y: &BitString,
    box_max: u32,
) -> Result<RemarkOutcome, TheoremError> {
    let mut admissible = Vec::new();
    for kp in 0..=box_max {
        for lp in 0..=box_max {
            let ok_x = match ts.c(x, &[nat(lp)])? {
                Cell::Fin(v) => v <= kp,
                Cell::Excl(_) => false,
            };
            if !ok_x {
                continue;
            }
            let ok_y = match ts.c(y, &[x.clone(), nat(kp)])? {
                Cell::Fin(v) => v <= lp,
                Cell::Excl(_) => false,
            };
            if ok_y {
                admissible.push((kp, lp));
            }
        }
    }
    let frontier: Vec<(u32, u32)> = admissible
        .iter()
        .copied()
        .filter(|&(k, l)| {
            !admissible
                .iter()
                .any(|&(k2, l2)| (k2, l2) != (k, l) && k2 <= k && l2 <= l)
        })
        .collect();
    let fixed_point = match fixed_point_kl(ts, x, y, 64)? {
        Ok(o) if o.residual == 0 => Some((o.k, o.l)),
        _ => None,
    };
    let deviation = match (fixed_point, frontier.iter().map(|&(k, l)| k + l).min()) {
        (Some((k, l)), Some(best)) => Some((k + l) as i64 - best as i64),
        _ => None,
    };
    Ok(RemarkOutcome {
        x: x.clone(),
        y: y.clone(),
        admissible,
        frontier,
        fixed_point,
        deviation,
    })
}

/// REMARK_SCAN report over pairs at scale l.
pub fn remark_report(
    ts: &TableSet,
    l: u32,
    box_max: u32,
) -> Result<DeviationReport, TheoremError> {
    let mut rows: Rows = Vec::new();
    for (x, y) in pairs_up_to(l) {
        let id = format!("x={x},y={y}");
        let outcome = remark_scan(ts, &x, &y, box_max)?;
        match outcome.deviation {
            Some(d) => rows.push((id, Ok(d))),
            None => rows.push((id, Err(Exclusion::Infinity))),
        }
    }
    Ok(DeviationReport::from_items(
        IdentityId::RemarkScan,
        ts.scale(l),
        ts.fingerprint_hex(),
        rows,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitcodec::bits;

    const FP: [u8; 32] = [7u8; 32];

    fn table(mode: Mode) -> ComplexityTable {
        ComplexityTable::new(FP, mode, 10, 64)
    }

    fn fin(t: &mut ComplexityTable, cond: BitString, target: BitString, v: u32) {
        let w = BitString::from_value(v as usize, 0);
        t.insert(cond, target, Value::Finite(v), Some(w));
    }

    fn inf(t: &mut ComplexityTable, cond: BitString, target: BitString) {
        t.insert(cond, target, Value::Infinity, None);
    }

    #[test]
    fn theorem1_stub_arithmetic() {
        // C(ε,ε)=7, K(ε|7)=3, C(ε|ε,7)=4 → deviation 0
        let mut plain = table(Mode::Plain);
        let mut prefix = table(Mode::Prefix);
        fin(&mut plain, eps(), pair_encode(&eps(), &eps()), 7);
        fin(&mut prefix, nat(7), eps(), 3);
        fin(&mut plain, condition_encode(&[eps(), nat(7)]), eps(), 4);
        let ts = TableSet::new(plain, prefix);
        let rep = check_theorem1(&ts, 0).unwrap();
        assert_eq!(rep.items.len(), 1);
        assert_eq!(rep.items[0].deviation, Some(0));
        assert_eq!(rep.coverage, 1.0);
        // stats recount oracle
        let (stats, cov) = rep.recount();
        assert_eq!(stats, rep.stats);
        assert_eq!(cov, rep.coverage);
    }

    #[test]
    fn theorem1_excludes_infinite_pairs() {
        let mut plain = table(Mode::Plain);
        let prefix = table(Mode::Prefix);
        inf(&mut plain, eps(), pair_encode(&eps(), &eps()));
        let ts = TableSet::new(plain, prefix);
        let rep = check_theorem1(&ts, 0).unwrap();
        assert_eq!(rep.items[0].excluded_reason.as_deref(), Some("Infinity"));
        assert_eq!(rep.coverage, 0.0);
        assert!(rep.stats.is_none());
    }

    #[test]
    fn theorem1_missing_condition_is_hard_error() {
        let mut plain = table(Mode::Plain);
        let prefix = table(Mode::Prefix);
        fin(&mut plain, eps(), pair_encode(&eps(), &eps()), 7);
        // prefix table lacks the nat(7) condition row entirely
        let ts = TableSet::new(plain, prefix);
        assert!(matches!(
            check_theorem1(&ts, 0),
            Err(TheoremError::MissingCondition { .. })
        ));
    }

    #[test]
    fn thm1_upper_stub_witness_lengths() {
        // witnesses of lengths 3 and 4 with C = 9 → deviation 2
        let mut plain = table(Mode::Plain);
        let mut prefix = table(Mode::Prefix);
        fin(&mut plain, eps(), pair_encode(&eps(), &eps()), 9);
        fin(&mut prefix, nat(9), eps(), 3);
        fin(&mut plain, condition_encode(&[eps(), nat(9)]), eps(), 4);
        let ts = TableSet::new(plain, prefix);
        let rep = check_thm1_upper(&ts, 0).unwrap();
        assert_eq!(rep.items[0].deviation, Some(2));
    }

    #[test]
    fn thm1_lower_stub_power_of_two_slice() {
        // N_ε(5) = 2 and stub K(ε|5) = 5 − 1 → first deviation 0;
        // C(b|ε,5) = 1 = ⌈log₂2⌉ → second deviation 0.
        let mut plain = table(Mode::Plain);
        let mut prefix = table(Mode::Prefix);
        fin(&mut plain, eps(), pair_encode(&eps(), &eps()), 5);
        fin(&mut plain, eps(), pair_encode(&eps(), &bits("0")), 5);
        fin(&mut prefix, nat(5), eps(), 4);
        let cond = condition_encode(&[eps(), nat(5)]);
        fin(&mut plain, cond.clone(), eps(), 1);
        fin(&mut plain, cond, bits("0"), 1);
        let ts = TableSet::new(plain, prefix);
        let (rk, rc) = check_thm1_lower(&ts, 1).unwrap();
        let k_row = rk.items.iter().find(|i| i.id == "a=ε,n=5").unwrap();
        assert_eq!(k_row.deviation, Some(0));
        for id in ["a=ε,b=ε,n=5", "a=ε,b=0,n=5"] {
            let c_row = rc.items.iter().find(|i| i.id == id).unwrap();
            assert_eq!(c_row.deviation, Some(0), "{id}");
        }
        // pairs without finite C are excluded rows in both reports
        assert!(rk.items.iter().any(|i| i.excluded_reason.is_some()));
        assert!(rc.items.iter().any(|i| i.excluded_reason.is_some()));
    }

    #[test]
    fn levin_stub_constant_k() {
        // K(a|i) = 5 for all i → i_star = 5
        let a = bits("1");
        let mut plain = table(Mode::Plain);
        let mut prefix = table(Mode::Prefix);
        fin(&mut plain, eps(), a.clone(), 2);
        for i in 0..=10u32 {
            fin(&mut prefix, nat(i), a.clone(), 5);
        }
        let ts = TableSet::new(plain, prefix);
        let row = levin_fixed_point(&ts, &a, 10).unwrap();
        assert_eq!(row.i_star, Some(5));
        assert_eq!(row.deviation, Some(3));
        assert_eq!(row.last_above, Some(4));
        assert!(row.threshold_monotone);
    }

    #[test]
    fn fixed_point_stub_constant_map_converges_immediately() {
        let (x, y) = (bits("1"), bits("0"));
        let mut plain = table(Mode::Plain);
        let prefix = table(Mode::Prefix);
        // C(x|l) = 4 for every l, C(y|x,k) = 2 for every k
        for j in 0..=10u32 {
            fin(&mut plain, nat(j), x.clone(), 4);
            fin(&mut plain, condition_encode(&[x.clone(), nat(j)]), y.clone(), 2);
        }
        let ts = TableSet::new(plain, prefix);
        let out = fixed_point_kl(&ts, &x, &y, 64).unwrap().unwrap();
        assert_eq!((out.k, out.l), (4, 2));
        assert_eq!(out.residual, 0);
        assert_eq!(out.trace.len(), 2);
    }

    #[test]
    fn fixed_point_cycle_selects_min_residual_with_lex_tie_break() {
        // F(k,l) = (g(l), h(k)) with g(2)=6, g(_)=4, h(4)=2, h(_)=8 gives a
        // 4-cycle (4,8)→(4,2)→(6,2)→(6,8)→(4,8) whose residuals are
        // 6, 2, 6, 2: the tie at 2 resolves to the lex-smaller (4,2).
        let (x, y) = (bits("1"), bits("0"));
        let mut plain = table(Mode::Plain);
        let prefix = table(Mode::Prefix);
        for j in 0..=16u32 {
            let g = if j == 2 { 6 } else { 4 };
            fin(&mut plain, nat(j), x.clone(), g);
            let h = if j == 4 { 2 } else { 8 };
            fin(&mut plain, condition_encode(&[x.clone(), nat(j)]), y.clone(), h);
        }
        let ts = TableSet::new(plain, prefix);
        let out = fixed_point_kl(&ts, &x, &y, 64).unwrap().unwrap();
        assert_eq!((out.k, out.l), (4, 2));
        assert_eq!(out.residual, 2);
        assert_eq!(out.trace.len(), 5); // 4 distinct points + the repeat
        assert_eq!(out.trace[0], (4, 8));
        assert_eq!(out.trace[4], (4, 8));
        assert!(out.trace.len() as u32 <= 64 + 1);
    }

    #[test]
    fn prop3_sums_stub_zero_case() {
        let (x, y) = (bits("1"), bits("0"));
        let mut plain = table(Mode::Plain);
        let prefix = table(Mode::Prefix);
        let enc = pair_encode(&x, &y);
        fin(&mut plain, condition_encode(&[nat(4), nat(2)]), enc.clone(), 6);
        fin(&mut plain, nat(4), enc.clone(), 6);
        fin(&mut plain, nat(2), enc.clone(), 6);
        let ts = TableSet::new(plain, prefix);
        let rows = check_prop3_sums(&ts, &x, &y, 4, 2).unwrap();
        assert_eq!(rows.len(), 3);
        for (_, dev) in rows {
            assert_eq!(dev, Ok(0));
        }
    }

    #[test]
    fn prop3_reports_emit_sums_only_for_residual_zero() {
        let (x, y) = (eps(), eps());
        let mut plain = table(Mode::Plain);
        let prefix = table(Mode::Prefix);
        let enc = pair_encode(&x, &y);
        for j in 0..=10u32 {
            fin(&mut plain, nat(j), x.clone(), 3);
            fin(&mut plain, condition_encode(&[x.clone(), nat(j)]), y.clone(), 1);
        }
        fin(&mut plain, condition_encode(&[nat(3), nat(1)]), enc.clone(), 4);
        fin(&mut plain, nat(3), enc.clone(), 4);
        fin(&mut plain, nat(1), enc.clone(), 4);
        // the pair (ε,ε) also needs its own C for nothing here: l = 0 scan
        let ts = TableSet::new(plain, prefix);
        let (fp_rep, sums_rep, realized) = prop3_reports(&ts, 0, 64).unwrap();
        assert_eq!(fp_rep.items.len(), 1);
        assert_eq!(fp_rep.items[0].deviation, Some(0));
        assert_eq!(realized, vec![(eps(), eps(), 3, 1)]);
        assert_eq!(sums_rep.items.len(), 3);
        for item in &sums_rep.items {
            assert_eq!(item.deviation, Some(0)); // 4 − (3+1)
        }
    }

    #[test]
    fn remark_stub_box_zero_and_antichain() {
        let (x, y) = (bits("1"), bits("0"));
        let mut plain = table(Mode::Plain);
        let prefix = table(Mode::Prefix);
        // C(x|l') = 1 for all l', C(y|x,k') = 0 for all k'
        for j in 0..=16u32 {
            fin(&mut plain, nat(j), x.clone(), 1);
            let c = condition_encode(&[x.clone(), nat(j)]);
            t_fin0(&mut plain, c, y.clone());
        }
        let ts = TableSet::new(plain, prefix);
        // box = 0: the only candidate (0,0) fails C(x|0) ≤ 0
        let out = remark_scan(&ts, &x, &y, 0).unwrap();
        assert!(out.admissible.len() <= 1);
        assert!(out.admissible.is_empty());
        // box = 3: admissible = {(k',l') : k' ≥ 1}; frontier = {(1,0)}
        let out = remark_scan(&ts, &x, &y, 3).unwrap();
        assert_eq!(out.frontier, vec![(1, 0)]);
        for &(k1, l1) in &out.frontier {
            for &(k2, l2) in &out.frontier {
                if (k1, l1) != (k2, l2) {
                    assert!(!(k1 <= k2 && l1 <= l2), "frontier not an antichain");
                }
            }
        }
    }

    fn t_fin0(t: &mut ComplexityTable, cond: BitString, target: BitString) {
        t.insert(cond, target, Value::Finite(0), Some(BitString::new()));
    }

    #[test]
    fn counterexample_scale_too_small_when_all_n_empty() {
        let mut plain = table(Mode::Plain);
        let prefix = table(Mode::Prefix);
        // empty condition exists but holds no finite (r,i) encodings
        for r in BitString::all_of_len(2) {
            for i in 0..2u32 {
                inf(&mut plain, eps(), pair_encode(&r, &nat(i)));
            }
        }
        let ts = TableSet::new(plain, prefix);
        assert!(matches!(
            counterexample_search(&ts, &[2], 0),
            Err(TheoremError::ScaleTooSmall(_))
        ));
    }

    #[test]
    fn function_corollary_stub_arithmetic() {
        // f = const-ε: dev = C(b) − K(ε|C(b)) − C(b|ε,C(b))
        let b = bits("1");
        let mut plain = table(Mode::Plain);
        let mut prefix = table(Mode::Prefix);
        fin(&mut plain, eps(), b.clone(), 2);
        fin(&mut prefix, nat(2), eps(), 3);
        fin(&mut plain, condition_encode(&[eps(), nat(2)]), b.clone(), 2);
        // rows for ε and "0" are excluded (not computed)
        let ts = TableSet::new(plain, prefix);
        let rep = check_function_corollary(&ts, &|_| eps(), "const-eps", 1).unwrap();
        let row = rep.items.iter().find(|i| i.id == "f=const-eps,b=1").unwrap();
        assert_eq!(row.deviation, Some(2 - 3 - 2));
    }

    #[test]
    fn pairs_ordering_is_length_lex_by_total() {
        let pairs = pairs_up_to(2);
        assert_eq!(pairs.len(), 17);
        assert_eq!(pairs[0], (eps(), eps()));
        assert_eq!(pairs[1], (eps(), bits("0")));
        assert_eq!(pairs[2], (eps(), bits("1")));
        assert_eq!(pairs[3], (bits("0"), eps()));
        // totals never decrease
        let totals: Vec<usize> = pairs.iter().map(|(a, b)| a.len() + b.len()).collect();
        assert!(totals.windows(2).all(|w| w[0] <= w[1]));
    }
}
