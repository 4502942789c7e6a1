//! Operator surface: build tables, run verifications, emit reports,
//! describe the frozen machine.
//!
//! Table building is staged. Stage A holds every condition shape that is
//! known up front (empty, single numbers, (string, number) pairs, raw
//! strings on the prefix side). Stage B holds the condition rows whose
//! numbers only exist once stage A values are known: (b, C(b)) rows,
//! (a, K(a)) rows, realized fixed-point (k,l) rows, and the prefix
//! conditions for the counterexample splits. Each stage is cached in one
//! file per mode, keyed by scale and machine fingerprint.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::bitcodec::{condition_encode, nat_to_bits, pair_encode, BitString};
use crate::config::{Config, OutputFormat};
use crate::constants;
use crate::enumerator::{
    build_table, load_cache, save_cache, CacheError, CacheExpectation, ComplexityTable,
    EnumeratorError, Value,
};
use crate::machine::{MachineDescriptor, Mode};
use crate::theorems::{
    self, check_corollaries, check_function_corollaries, check_prop2, check_theorem1,
    check_thm1_lower, check_thm1_upper, counterexample_search, levin_report, pairs_up_to,
    prop3_reports, remark_report, reports_to_csv, singles_scale, DeviationReport, IdentityId,
    TableSet, TheoremError, ALL_IDENTITIES,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_REGRESSION: i32 = 1;
pub const EXIT_CAPACITY: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_MISSING_CONDITION: i32 = 4;
pub const EXIT_FINGERPRINT: i32 = 5;
pub const EXIT_LOCK: i32 = 6;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug)]
pub enum CliError {
    Capacity(String),
    Io(String),
    MissingCondition(String),
    Fingerprint(String),
    LockHeld(PathBuf),
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Capacity(_) => EXIT_CAPACITY,
            CliError::Io(_) => EXIT_IO,
            CliError::MissingCondition(_) => EXIT_MISSING_CONDITION,
            CliError::Fingerprint(_) => EXIT_FINGERPRINT,
            CliError::LockHeld(_) => EXIT_LOCK,
            CliError::Usage(_) => EXIT_USAGE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Capacity(m) => write!(f, "capacity exceeded: {m}"),
            CliError::Io(m) => write!(f, "io failure: {m}"),
            CliError::MissingCondition(m) => write!(f, "missing condition: {m}"),
            CliError::Fingerprint(m) => write!(f, "fingerprint mismatch: {m}"),
            CliError::LockHeld(p) => write!(f, "cache lock held: {}", p.display()),
            CliError::Usage(m) => write!(f, "usage: {m}"),
        }
    }
}

impl From<EnumeratorError> for CliError {
    fn from(e: EnumeratorError) -> Self {
        CliError::Capacity(e.to_string())
    }
}

impl From<CacheError> for CliError {
    fn from(e: CacheError) -> Self {
        match e {
            CacheError::FingerprintMismatch(m) => CliError::Fingerprint(m),
            CacheError::CorruptCache(m) => CliError::Io(format!("corrupt cache: {m}")),
            CacheError::IoFailure(m) => CliError::Io(m.to_string()),
        }
    }
}

impl From<TheoremError> for CliError {
    fn from(e: TheoremError) -> Self {
        match e {
            TheoremError::MissingCondition { condition } => {
                CliError::MissingCondition(condition.to_string())
            }
            TheoremError::ScaleTooSmall(m) => CliError::Capacity(m),
        }
    }
}

// ---------------------------------------------------------------------------
// Advisory lock
// ---------------------------------------------------------------------------

/// Advisory lock file in the cache directory; held for the lifetime of a
/// command that touches the caches.
pub struct CacheLock {
    path: PathBuf,
}

impl CacheLock {
    pub fn acquire(cache_dir: &Path) -> Result<CacheLock, CliError> {
        fs::create_dir_all(cache_dir).map_err(|e| CliError::Io(e.to_string()))?;
        let path = cache_dir.join(".klab-lock");
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(CacheLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(CliError::LockHeld(path))
            }
            Err(e) => Err(CliError::Io(e.to_string())),
        }
    }
}

impl Drop for CacheLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

// ---------------------------------------------------------------------------
// Table plan
// ---------------------------------------------------------------------------

fn eps() -> BitString {
    BitString::new()
}

fn nat(j: u32) -> BitString {
    nat_to_bits(j as u64)
}

fn singles(max_len: u32) -> Vec<BitString> {
    BitString::all_up_to(max_len as usize).collect()
}

fn dedup(mut v: Vec<BitString>) -> Vec<BitString> {
    v.sort();
    v.dedup();
    v
}

/// Number conditions j = 0..=J; J tracks P so every value a table can hold
/// has its condition row.
fn j_max(cfg: &Config) -> u32 {
    cfg.prog_bits.min(24)
}

fn pair_encodings(l: u32) -> Vec<BitString> {
    pairs_up_to(l)
        .iter()
        .map(|(a, b)| pair_encode(a, b))
        .collect()
}

/// The slice-count domain: every pair encoding short enough to possibly
/// satisfy C_T(⟨a,y⟩) ≤ n for some n realized at pair scale l. Since
/// C_T(s) ≥ |s| under the empty condition, length n_max suffices, where
/// n_max is the largest possible pair complexity at scale l.
fn slice_domain(l: u32) -> Vec<BitString> {
    let enc_max = 2 * l + 2;
    let n_max = (2 * enc_max).min(enc_max + 3) as usize;
    let mut out = Vec::new();
    for a in BitString::all_up_to(n_max / 2) {
        for y in BitString::all_up_to(n_max.saturating_sub(2 * a.len() + 2)) {
            let enc = pair_encode(&a, &y);
            if enc.len() <= n_max {
                out.push(enc);
            }
        }
    }
    out
}

fn counterexample_pair_targets() -> Vec<BitString> {
    let mut out = Vec::new();
    for &n in constants::COUNTEREX_N_VALUES {
        for r in BitString::all_of_len(n as usize) {
            for i in 0..n {
                out.push(pair_encode(&r, &nat(i)));
            }
        }
        // split pairs ⟨x,y⟩ with |x|+|y| = n
        for lx in 0..=n {
            for x in BitString::all_of_len(lx as usize) {
                for y in BitString::all_of_len((n - lx) as usize) {
                    out.push(pair_encode(&x, &y));
                }
            }
        }
    }
    out
}

fn number_pair_targets(ls: u32, j: u32) -> Vec<BitString> {
    let mut out = Vec::new();
    for u in BitString::all_up_to(ls as usize) {
        for i in 0..=j {
            out.push(pair_encode(&u, &nat(i)));
        }
    }
    out
}

fn stage_a_plain(desc: &MachineDescriptor, cfg: &Config) -> Result<ComplexityTable, CliError> {
    let l = cfg.scale_l;
    let ls = singles_scale(l);
    let j = j_max(cfg);
    let (p, t) = (cfg.prog_bits, cfg.budget);

    // empty condition: the wide target set
    let t_a1 = dedup(
        singles(ls.max(8))
            .into_iter()
            .chain(pair_encodings(l))
            .chain(slice_domain(l))
            .chain(counterexample_pair_targets())
            .chain(number_pair_targets(ls, j))
            .collect(),
    );
    let mut table = build_table(desc, &[eps()], &t_a1, p, t)?;

    // single-number conditions
    let t_a2 = dedup(singles(ls).into_iter().chain(pair_encodings(l)).collect());
    let conds: Vec<BitString> = (1..=j).map(nat).collect();
    table.merge(build_table(desc, &conds, &t_a2, p, t)?);

    // (string, number) conditions
    let t_a3 = singles(ls);
    let mut conds = Vec::new();
    for a in singles(l) {
        for i in 0..=j {
            conds.push(condition_encode(&[a.clone(), nat(i)]));
        }
    }
    table.merge(build_table(desc, &dedup(conds), &t_a3, p, t)?);
    Ok(table)
}

fn stage_a_prefix(desc: &MachineDescriptor, cfg: &Config) -> Result<ComplexityTable, CliError> {
    let l = cfg.scale_l;
    let ls = singles_scale(l);
    let j = j_max(cfg);
    let (p, t) = (cfg.prog_bits, cfg.budget);

    // empty + single-number conditions
    let t_b = dedup(
        singles(ls.max(8))
            .into_iter()
            .chain(pair_encodings(l))
            .chain(number_pair_targets(ls, j))
            .collect(),
    );
    let conds: Vec<BitString> = std::iter::once(eps()).chain((0..=j).map(nat)).collect();
    let conds = dedup(conds);
    let mut table = build_table(desc, &conds, &t_b, p, t)?;

    // raw-string conditions for K(y|x); skip strings already built above
    let built: BTreeSet<BitString> = conds.into_iter().collect();
    let raw: Vec<BitString> = singles(l).into_iter().filter(|x| !built.contains(x)).collect();
    if !raw.is_empty() {
        table.merge(build_table(desc, &raw, &singles(ls), p, t)?);
    }
    Ok(table)
}

fn finite(v: Result<Value, crate::enumerator::LookupError>) -> Option<u32> {
    v.ok().and_then(Value::finite)
}

fn stage_b_plain(
    desc: &MachineDescriptor,
    cfg: &Config,
    ts_a: &TableSet,
) -> Result<ComplexityTable, CliError> {
    let l = cfg.scale_l;
    let ls = singles_scale(l);
    let (p, t) = (cfg.prog_bits, cfg.budget);

    // (b, C(b)) conditions not already present in stage A
    let mut conds = Vec::new();
    for b in singles(ls) {
        if let Some(c) = finite(ts_a.plain.lookup(&eps(), &b)) {
            let cond = condition_encode(&[b.clone(), nat(c)]);
            if !ts_a.plain.has_condition(&cond) {
                conds.push(cond);
            }
        }
    }
    let mut table = ComplexityTable::new(desc.fingerprint(), Mode::Plain, p, t);
    if !conds.is_empty() {
        table.merge(build_table(desc, &dedup(conds), &singles(ls), p, t)?);
    }

    // Realized fixed-point (k,l) conditions over pair targets. Always
    // built: (k,l) can encode to the same tape as an existing (a,n) row
    // (a = nat(k)), whose targets do not include pair encodings.
    let mut kl_conds = Vec::new();
    for (x, y) in pairs_up_to(l) {
        if let Ok(Ok(out)) = theorems::fixed_point_kl(ts_a, &x, &y, constants::PROP3_MAX_ITER) {
            if out.residual == 0 {
                kl_conds.push(condition_encode(&[nat(out.k), nat(out.l)]));
            }
        }
    }
    if !kl_conds.is_empty() {
        table.merge(build_table(desc, &dedup(kl_conds), &pair_encodings(l), p, t)?);
    }
    Ok(table)
}

fn stage_b_prefix(
    desc: &MachineDescriptor,
    cfg: &Config,
    ts_a: &TableSet,
) -> Result<ComplexityTable, CliError> {
    let l = cfg.scale_l;
    let ls = singles_scale(l);
    let (p, t) = (cfg.prog_bits, cfg.budget);

    // (a, K(a)) conditions
    let mut conds = Vec::new();
    for a in singles(l) {
        if let Some(k) = finite(ts_a.prefix.lookup(&eps(), &a)) {
            let cond = condition_encode(&[a.clone(), nat(k)]);
            if !ts_a.prefix.has_condition(&cond) {
                conds.push(cond);
            }
        }
    }
    let mut table = ComplexityTable::new(desc.fingerprint(), Mode::Prefix, p, t);
    if !conds.is_empty() {
        table.merge(build_table(desc, &dedup(conds), &singles(ls), p, t)?);
    }

    // counterexample split conditions: the chosen x per n, as raw strings
    let mut split_conds = Vec::new();
    for &n in constants::COUNTEREX_N_VALUES {
        let mut best: Option<(u32, BitString, u32)> = None;
        for r in BitString::all_of_len(n as usize) {
            for i in 0..n {
                if let Some(v) = finite(ts_a.plain.lookup(&eps(), &pair_encode(&r, &nat(i)))) {
                    if best.as_ref().is_none_or(|(bv, _, _)| v > *bv) {
                        best = Some((v, r.clone(), i));
                    }
                }
            }
        }
        if let Some((_v, r, i)) = best {
            // Always built: x may coincide with a stage-A condition whose
            // targets stop at the singles range, while split targets reach
            // length 8.
            split_conds.push(BitString::from_bits(
                &r.iter().take(i as usize).collect::<Vec<_>>(),
            ));
        }
    }
    if !split_conds.is_empty() {
        table.merge(build_table(desc, &dedup(split_conds), &singles(ls.max(8)), p, t)?);
    }
    Ok(table)
}

// ---------------------------------------------------------------------------
// Cache orchestration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvalidCachePolicy {
    /// tables build: an unreadable or mismatched file is rebuilt in place.
    Rebuild,
    /// verify: an existing but invalid file is an error (exit 5 / 3).
    Fail,
}

fn cache_path(cfg: &Config, stage: &str, mode: Mode, fp_hex: &str) -> PathBuf {
    cfg.cache_dir.join(format!(
        "{stage}_{}_L{}_P{}_T{}_{}.bin",
        mode.as_str(),
        cfg.scale_l,
        cfg.prog_bits,
        cfg.budget,
        &fp_hex[..8]
    ))
}

fn load_or_build(
    path: &Path,
    expect: &CacheExpectation,
    policy: InvalidCachePolicy,
    build: impl FnOnce() -> Result<ComplexityTable, CliError>,
) -> Result<(ComplexityTable, bool), CliError> {
    match load_cache(path, expect) {
        Ok(table) => return Ok((table, false)),
        Err(CacheError::IoFailure(e)) if e.kind() == std::io::ErrorKind::NotFound => {}
        Err(e) => match policy {
            InvalidCachePolicy::Fail => return Err(e.into()),
            InvalidCachePolicy::Rebuild => {
                eprintln!("klab: cache {} invalid ({e}); rebuilding", path.display());
            }
        },
    }
    let table = build()?;
    save_cache(&table, path)?;
    Ok((table, true))
}

pub struct BuildReport {
    pub tables: TableSet,
    pub rebuilt: Vec<String>,
}

/// Work-ceiling check over the whole planned build, run before any stage
/// starts so oversized configurations fail fast with exit 2.
fn check_plan_capacity(cfg: &Config) -> Result<(), CliError> {
    let l = cfg.scale_l;
    let j = j_max(cfg) as u128;
    let strings_l = (1u128 << (l + 1)) - 1;
    let strings_ls = (1u128 << (singles_scale(l) + 1)) - 1;
    let pairs_l = ((l as u128) + 1) << (l + 1);
    // stage A plain + prefix, stage B upper bounds
    let conditions = 1
        + j
        + strings_l * (j + 1)
        + (j + 2)
        + strings_l
        + strings_ls
        + pairs_l
        + 3;
    let work = conditions << (cfg.prog_bits + 1);
    if work > crate::enumerator::WORK_CEILING {
        return Err(CliError::Capacity(format!(
            "{conditions} planned conditions at P={} imply {work} step-operations (ceiling 2^40); shrink the scale",
            cfg.prog_bits
        )));
    }
    Ok(())
}

/// Loads the four stage caches, building whatever is absent (or invalid,
/// under `Rebuild`). Deterministic: a rebuilt file is byte-identical to the
/// one a fresh run would produce.
pub fn ensure_tables(cfg: &Config, policy: InvalidCachePolicy) -> Result<BuildReport, CliError> {
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    check_plan_capacity(cfg)?;
    let plain_desc = MachineDescriptor::reference(Mode::Plain);
    let prefix_desc = MachineDescriptor::reference(Mode::Prefix);
    let fp = plain_desc.fingerprint();
    let fp_hex = plain_desc.fingerprint_hex();
    let expect = |mode: Mode| CacheExpectation {
        machine_fingerprint: fp,
        mode,
        max_program_len: cfg.prog_bits,
        budget: cfg.budget,
    };
    let mut rebuilt = Vec::new();

    let path = cache_path(cfg, "stage_a", Mode::Plain, &fp_hex);
    let (plain_a, fresh) = load_or_build(&path, &expect(Mode::Plain), policy, || {
        eprintln!("klab: building stage A plain tables (L={} P={} T={})", cfg.scale_l, cfg.prog_bits, cfg.budget);
        stage_a_plain(&plain_desc, cfg)
    })?;
    if fresh {
        rebuilt.push("stage_a_plain".into());
    }

    let path = cache_path(cfg, "stage_a", Mode::Prefix, &fp_hex);
    let (prefix_a, fresh) = load_or_build(&path, &expect(Mode::Prefix), policy, || {
        eprintln!("klab: building stage A prefix tables");
        stage_a_prefix(&prefix_desc, cfg)
    })?;
    if fresh {
        rebuilt.push("stage_a_prefix".into());
    }

    let ts_a = TableSet::new(plain_a, prefix_a);

    let path = cache_path(cfg, "stage_b", Mode::Plain, &fp_hex);
    let (plain_b, fresh) = load_or_build(&path, &expect(Mode::Plain), policy, || {
        eprintln!("klab: building stage B plain tables (derived conditions)");
        stage_b_plain(&plain_desc, cfg, &ts_a)
    })?;
    if fresh {
        rebuilt.push("stage_b_plain".into());
    }

    let path = cache_path(cfg, "stage_b", Mode::Prefix, &fp_hex);
    let (prefix_b, fresh) = load_or_build(&path, &expect(Mode::Prefix), policy, || {
        eprintln!("klab: building stage B prefix tables (derived conditions)");
        stage_b_prefix(&prefix_desc, cfg, &ts_a)
    })?;
    if fresh {
        rebuilt.push("stage_b_prefix".into());
    }

    let mut plain = ts_a.plain;
    plain.merge(plain_b);
    let mut prefix = ts_a.prefix;
    prefix.merge(prefix_b);
    Ok(BuildReport {
        tables: TableSet::new(plain, prefix),
        rebuilt,
    })
}

// ---------------------------------------------------------------------------
// Identity dispatch
// ---------------------------------------------------------------------------

/// Runs one identity check (or all of them) against built tables.
pub fn run_identity(
    ts: &TableSet,
    l: u32,
    id: IdentityId,
) -> Result<Vec<DeviationReport>, TheoremError> {
    let reports = match id {
        IdentityId::Thm1 => vec![check_theorem1(ts, l)?],
        IdentityId::Thm1Upper => vec![check_thm1_upper(ts, l)?],
        IdentityId::Thm1LowerK => vec![check_thm1_lower(ts, l)?.0],
        IdentityId::Thm1LowerC => vec![check_thm1_lower(ts, l)?.1],
        IdentityId::Prop2 => vec![check_prop2(ts, l)?],
        IdentityId::CorCkc
        | IdentityId::CorKkk
        | IdentityId::CorEmptyB
        | IdentityId::CorEmptyA
        | IdentityId::CorKcEqCc
        | IdentityId::GacsId
        | IdentityId::PrefixPair => {
            let all = check_corollaries(ts, l)?;
            all.into_iter()
                .filter(|r| r.identity_id == id.as_str())
                .collect()
        }
        IdentityId::CorFunc => vec![check_function_corollaries(ts, l)?],
        IdentityId::LevinFp => vec![levin_report(ts, l, j_for_levin(ts))?.1],
        IdentityId::Counterex => {
            vec![counterexample_search(ts, constants::COUNTEREX_N_VALUES, l)?.2]
        }
        IdentityId::Prop3Fp => vec![prop3_reports(ts, l, constants::PROP3_MAX_ITER)?.0],
        IdentityId::Prop3Sums => vec![prop3_reports(ts, l, constants::PROP3_MAX_ITER)?.1],
        IdentityId::RemarkScan => {
            // the box cannot exceed the built number-condition range
            let box_max = constants::REMARK_BOX.min(j_for_levin(ts));
            vec![remark_report(ts, l, box_max)?]
        }
    };
    Ok(reports)
}

fn j_for_levin(ts: &TableSet) -> u32 {
    ts.prefix.max_program_len.min(24)
}

pub fn run_identities(
    ts: &TableSet,
    l: u32,
    ids: &[IdentityId],
) -> Result<Vec<DeviationReport>, TheoremError> {
    let mut out = Vec::new();
    for &id in ids {
        out.extend(run_identity(ts, l, id)?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

pub fn cmd_machine_describe() -> i32 {
    let desc = MachineDescriptor::reference(Mode::Plain);
    print!("{}", desc.describe());
    EXIT_OK
}

pub fn cmd_tables_build(cfg: &Config) -> i32 {
    match tables_build_inner(cfg) {
        Ok(rebuilt) => {
            if rebuilt.is_empty() {
                eprintln!("klab: caches already valid; nothing rebuilt");
            } else {
                eprintln!("klab: built {}", rebuilt.join(", "));
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("klab: {e}");
            e.exit_code()
        }
    }
}

fn tables_build_inner(cfg: &Config) -> Result<Vec<String>, CliError> {
    let _lock = CacheLock::acquire(&cfg.cache_dir)?;
    let report = ensure_tables(cfg, InvalidCachePolicy::Rebuild)?;
    Ok(report.rebuilt)
}

fn parse_identities(identity: &str) -> Result<Vec<IdentityId>, CliError> {
    if identity == "all" {
        return Ok(ALL_IDENTITIES.to_vec());
    }
    IdentityId::from_str_tag(identity)
        .map(|id| vec![id])
        .ok_or_else(|| {
            CliError::Usage(format!(
                "unknown identity {identity:?}; expected one of {} or all",
                ALL_IDENTITIES
                    .iter()
                    .map(|i| i.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            ))
        })
}

pub fn cmd_verify(identity: &str, cfg: &Config, out_path: Option<&Path>) -> i32 {
    match verify_inner(identity, cfg, out_path) {
        Ok(regression_free) => {
            if regression_free {
                EXIT_OK
            } else {
                EXIT_REGRESSION
            }
        }
        Err(e) => {
            eprintln!("klab: {e}");
            e.exit_code()
        }
    }
}

fn verify_inner(identity: &str, cfg: &Config, out_path: Option<&Path>) -> Result<bool, CliError> {
    let ids = parse_identities(identity)?;
    let _lock = CacheLock::acquire(&cfg.cache_dir)?;
    let built = ensure_tables(cfg, InvalidCachePolicy::Fail)?;
    let reports = run_identities(&built.tables, cfg.scale_l, &ids)?;

    let payload = match cfg.output_format {
        OutputFormat::Json => {
            serde_json::to_string_pretty(&reports).expect("reports serialize") + "\n"
        }
        OutputFormat::Csv => reports_to_csv(&reports),
    };
    print!("{payload}");
    if let Some(path) = out_path {
        fs::write(path, &payload).map_err(|e| CliError::Io(e.to_string()))?;
    }

    let mut ok = true;
    for r in &reports {
        let id = IdentityId::from_str_tag(&r.identity_id).expect("known identity");
        let bound = constants::pinned_bound(id);
        let max_abs = r.max_abs_deviation().unwrap_or(0);
        if max_abs > bound {
            eprintln!(
                "klab: regression: {} max |deviation| {} exceeds pinned bound {}",
                r.identity_id, max_abs, bound
            );
            ok = false;
        }
    }
    Ok(ok)
}

pub fn cmd_report_merge(paths: &[PathBuf], out: &Path) -> i32 {
    match merge_inner(paths, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("klab: {e}");
            e.exit_code()
        }
    }
}

fn merge_inner(paths: &[PathBuf], out: &Path) -> Result<(), CliError> {
    if paths.is_empty() {
        return Err(CliError::Usage("report merge needs at least one input".into()));
    }
    let mut batches = Vec::new();
    for p in paths {
        let text = fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        let batch: Vec<DeviationReport> = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{} is not a report file: {e}", p.display())))?;
        batches.push(batch);
    }
    let merged = theorems::merge_reports(batches).map_err(|(a, b)| {
        CliError::Fingerprint(format!("inputs span machines {a} and {b}"))
    })?;
    let json = serde_json::to_string_pretty(&merged).expect("merged serializes");
    fs::write(out, json + "\n").map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}
