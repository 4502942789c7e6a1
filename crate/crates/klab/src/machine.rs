//! The concrete deterministic reference machine, in two modes.
//!
//! Plain mode receives the whole program string; running off the end of the
//! program at an instruction boundary is a clean halt, so a plain program
//! needs no explicit terminator and the machine can exploit its own length.
//! Prefix mode fetches program bits strictly on demand; there is no
//! end-of-program signal, a request past the provided bits is Stuck, and a
//! run only counts as Halted when exactly the provided bits were consumed.
//! Together the two modes isolate self-delimitation, which is the one
//! difference the measurements care about.
//!
//! State: a one-way condition read head, a bit stack, an append-only output
//! tape, and a program cursor. Already-fetched program bits stay buffered,
//! so backward jumps re-execute without re-reading; forward skips decode
//! (and in prefix mode consume) the skipped bits.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::bitcodec::BitString;

/// plain = program given whole, prefix = self-delimiting reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Plain,
    Prefix,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Plain => "plain",
            Mode::Prefix => "prefix",
        }
    }

    pub fn to_byte(self) -> u8 {
        match self {
            Mode::Plain => 0,
            Mode::Prefix => 1,
        }
    }

    pub fn from_byte(b: u8) -> Option<Mode> {
        match b {
            0 => Some(Mode::Plain),
            1 => Some(Mode::Prefix),
            _ => None,
        }
    }
}

/// One instruction in the frozen opcode table.
#[derive(Debug, Clone)]
pub struct OpcodeSpec {
    pub mnemonic: &'static str,
    pub pattern: &'static str,
    pub semantics: &'static str,
}

/// The frozen reference-machine definition. The fingerprint is the SHA-256
/// digest of [`MachineDescriptor::canonical_text`], which covers the name,
/// version, execution rules and full opcode table. The mode is runtime data
/// and is deliberately not digested: both modes run the same frozen table,
/// and caches record the mode in a separate byte.
#[derive(Debug, Clone)]
pub struct MachineDescriptor {
    pub name: String,
    pub version: u32,
    pub mode: Mode,
    pub opcodes: Vec<OpcodeSpec>,
    pub semantics_notes: Vec<String>,
}

/// Opcode bit patterns. These are also spelled out in the descriptor text;
/// the interpreter below and the table are frozen together by the
/// fingerprint regression test.
const OPCODES: &[OpcodeSpec] = &[
    OpcodeSpec {
        mnemonic: "OUTP",
        pattern: "0",
        semantics: "read one program bit and append it to the output (literal cost 2 bits per output bit: alpha=2, beta=0 in plain mode)",
    },
    OpcodeSpec {
        mnemonic: "HALT",
        pattern: "100",
        semantics: "halt",
    },
    OpcodeSpec {
        mnemonic: "OUTR",
        pattern: "101",
        semantics: "plain mode: append every program bit from the cursor to the end of the program to the output and move the cursor to the end; prefix mode: stuck (no end exists)",
    },
    OpcodeSpec {
        mnemonic: "RCOND",
        pattern: "110",
        semantics: "read the next condition bit and push it on the stack; stuck if the condition is exhausted",
    },
    OpcodeSpec {
        mnemonic: "SKIPZ",
        pattern: "1110",
        semantics: "pop the stack (stuck if empty); if the popped bit is 0, decode the next instruction without executing it",
    },
    OpcodeSpec {
        mnemonic: "JBACK",
        pattern: "11110",
        semantics: "read a 4-bit offset k; move the cursor to (instruction start) - (k+1); stuck if that is negative",
    },
    OpcodeSpec {
        mnemonic: "COPYC",
        pattern: "111110",
        semantics: "append all remaining condition bits to the output and move the condition head to the end (copy constant gamma=6 in plain mode)",
    },
    OpcodeSpec {
        mnemonic: "DCOND",
        pattern: "1111110",
        semantics: "decode one self-delimited item from the condition to the output: 00 appends 0, 11 appends 1, 01 ends the item, 10 or fewer than 2 remaining bits is stuck",
    },
    OpcodeSpec {
        mnemonic: "OUT0",
        pattern: "11111110",
        semantics: "append 0 to the output",
    },
    OpcodeSpec {
        mnemonic: "OUT1",
        pattern: "11111111",
        semantics: "append 1 to the output",
    },
];

const SEMANTICS_NOTES: &[&str] = &[
    "every instruction dispatch costs one step, including a skipped instruction's decode and the final end-of-program dispatch in plain mode",
    "plain mode halts cleanly when a new instruction would start exactly at the end of the program; running out of program bits mid-instruction is stuck",
    "prefix mode reads program bits on demand; a read past the provided bits is stuck and a halt that consumed fewer bits than provided is not a halt of that program",
    "the opcode patterns form a complete prefix-free code, so no bit pattern is an undefined opcode",
];

impl MachineDescriptor {
    /// The frozen version-1 reference machine.
    pub fn reference(mode: Mode) -> Self {
        MachineDescriptor {
            name: "klab-reference".to_string(),
            version: 1,
            mode,
            opcodes: OPCODES.to_vec(),
            semantics_notes: SEMANTICS_NOTES.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Canonical serialization. Byte-identical across runs; its SHA-256
    /// digest is the fingerprint.
    pub fn canonical_text(&self) -> String {
        let mut t = String::new();
        writeln!(t, "machine: {}", self.name).unwrap();
        writeln!(t, "version: {}", self.version).unwrap();
        writeln!(t, "rules:").unwrap();
        for note in &self.semantics_notes {
            writeln!(t, "  - {note}").unwrap();
        }
        writeln!(t, "opcodes:").unwrap();
        for op in &self.opcodes {
            writeln!(t, "  {:<5} {:<8} {}", op.mnemonic, op.pattern, op.semantics).unwrap();
        }
        t
    }

    pub fn fingerprint(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.canonical_text().as_bytes());
        h.finalize().into()
    }

    pub fn fingerprint_hex(&self) -> String {
        hex32(&self.fingerprint())
    }

    /// Canonical text plus mode and fingerprint, for the CLI.
    pub fn describe(&self) -> String {
        format!(
            "{}mode: {}\nfingerprint: {}\n",
            self.canonical_text(),
            self.mode.as_str(),
            self.fingerprint_hex()
        )
    }

    /// Checks that the opcode patterns form a prefix-free set.
    pub fn opcode_table_is_prefix_free(&self) -> bool {
        for (i, a) in self.opcodes.iter().enumerate() {
            for (j, b) in self.opcodes.iter().enumerate() {
                if i != j && b.pattern.starts_with(a.pattern) {
                    return false;
                }
            }
        }
        true
    }
}

pub fn hex32(digest: &[u8; 32]) -> String {
    let mut s = String::with_capacity(64);
    for b in digest {
        write!(s, "{b:02x}").unwrap();
    }
    s
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Halted,
    OutOfBudget,
    Stuck,
}

/// Outcome of one machine execution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    pub status: Status,
    /// Output tape contents; meaningful only when `status == Halted`.
    pub output: BitString,
    /// Number of distinct program bits fetched (high-water mark).
    pub program_bits_read: u64,
    pub steps_used: u64,
}

/// Where an in-flight instruction was when it asked for a program bit that
/// the source could not supply. Drives both the plain-mode end-of-program
/// semantics and the enumeration walk's per-length bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeedKind {
    /// About to decode the first bit of a fresh instruction.
    InstructionStart,
    /// Mid-decode (opcode continuation, OUTP data bit, JBACK offset bits,
    /// or any bit of a skipped instruction).
    MidInstruction,
    /// Inside OUTR's copy of the remaining program.
    CopyRest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepEvent {
    Continue,
    Halted,
    Stuck,
    OutOfBudget,
    /// Walk mode only: the instruction needs program bit `hiwater` and the
    /// source has not provided it. State may be mid-mutation; resume from a
    /// snapshot.
    NeedBit(NeedKind),
    /// Output grew past the caller's cap; no target can ever match.
    OutputOverflow,
}

/// Supplies program bits by position.
pub trait ProgSource {
    /// `Some(bit)` when position `i` is available, `None` past the end.
    fn get(&self, i: u64) -> Option<bool>;
}

impl ProgSource for BitString {
    fn get(&self, i: u64) -> Option<bool> {
        if (i as usize) < self.len() {
            Some(BitString::get(self, i as usize))
        } else {
            None
        }
    }
}

/// Distinguishes "no such bit exists" (run on a concrete program) from
/// "bit not yet chosen" (enumeration walk over program prefixes).
enum Fetch {
    Bit(bool),
    End,
    Pause,
}

/// Mutable execution state. Cheap to clone; the walk snapshots it at forks.
#[derive(Debug, Clone)]
pub struct ExecState {
    pub cursor: u64,
    pub hiwater: u64,
    pub cond_pos: u64,
    pub stack: BitString,
    pub out: BitString,
    pub steps: u64,
    pub pending_skip: bool,
}

impl ExecState {
    pub fn new() -> Self {
        ExecState {
            cursor: 0,
            hiwater: 0,
            cond_pos: 0,
            stack: BitString::new(),
            out: BitString::new(),
            steps: 0,
            pending_skip: false,
        }
    }
}

impl Default for ExecState {
    fn default() -> Self {
        Self::new()
    }
}

/// Static per-run context.
pub struct ExecEnv<'a> {
    pub mode: Mode,
    pub cond: &'a BitString,
    pub budget: u64,
    /// Abandon the run as soon as the output exceeds this many bits.
    pub out_cap: u64,
    /// In walk mode `None` from the source means "pause and fork"; in run
    /// mode it means "the program ends here".
    pub walk: bool,
}

impl ExecState {
    fn fetch<S: ProgSource>(&mut self, prog: &S, env: &ExecEnv) -> Fetch {
        match prog.get(self.cursor) {
            Some(b) => {
                self.cursor += 1;
                if self.cursor > self.hiwater {
                    self.hiwater = self.cursor;
                }
                Fetch::Bit(b)
            }
            None => {
                if env.walk {
                    Fetch::Pause
                } else {
                    Fetch::End
                }
            }
        }
    }

    fn push_out(&mut self, bit: bool, env: &ExecEnv) -> bool {
        self.out.push(bit);
        self.out.len() as u64 <= env.out_cap
    }

    /// Executes one full instruction (or the end-of-program dispatch).
    /// On `NeedBit` the state may be partially mutated and must be discarded.
    pub fn step<S: ProgSource>(&mut self, prog: &S, env: &ExecEnv) -> StepEvent {
        if self.steps >= env.budget {
            return StepEvent::OutOfBudget;
        }
        self.steps += 1;
        let instr_start = self.cursor;

        // Decode the opcode, one bit at a time along the prefix-free table:
        // 0=OUTP 100=HALT 101=OUTR 110=RCOND 1110=SKIPZ 11110=JBACK
        // 111110=COPYC 1111110=DCOND 11111110=OUT0 11111111=OUT1
        let mut ones = 0u32;
        let op: Opcode = loop {
            match self.fetch(prog, env) {
                Fetch::Bit(true) => {
                    ones += 1;
                    if ones == 7 {
                        // "1111111" then one more bit picks OUT0/OUT1
                        break match self.fetch(prog, env) {
                            Fetch::Bit(false) => Opcode::Out0,
                            Fetch::Bit(true) => Opcode::Out1,
                            Fetch::End => return StepEvent::Stuck,
                            Fetch::Pause => return StepEvent::NeedBit(NeedKind::MidInstruction),
                        };
                    }
                }
                Fetch::Bit(false) => {
                    break match ones {
                        0 => Opcode::Outp,
                        1 => {
                            // "10" + one more bit: HALT or OUTR
                            match self.fetch(prog, env) {
                                Fetch::Bit(false) => Opcode::Halt,
                                Fetch::Bit(true) => Opcode::Outr,
                                Fetch::End => return StepEvent::Stuck,
                                Fetch::Pause => {
                                    return StepEvent::NeedBit(NeedKind::MidInstruction)
                                }
                            }
                        }
                        2 => {
                            // "110"
                            Opcode::Rcond
                        }
                        3 => Opcode::Skipz,
                        4 => Opcode::Jback,
                        5 => Opcode::Copyc,
                        6 => Opcode::Dcond,
                        _ => unreachable!(),
                    };
                }
                Fetch::End => {
                    if ones == 0 {
                        // Fresh instruction would start past the end.
                        return match env.mode {
                            Mode::Plain => StepEvent::Halted,
                            Mode::Prefix => StepEvent::Stuck,
                        };
                    }
                    return StepEvent::Stuck;
                }
                Fetch::Pause => {
                    return StepEvent::NeedBit(if ones == 0 {
                        NeedKind::InstructionStart
                    } else {
                        NeedKind::MidInstruction
                    });
                }
            }
        };

        let skipping = self.pending_skip;
        self.pending_skip = false;

        // A skipped instruction is decoded (consuming its bits) but not
        // executed. Only OUTP and JBACK carry immediate data.
        match op {
            Opcode::Outp => {
                let bit = match self.fetch(prog, env) {
                    Fetch::Bit(b) => b,
                    Fetch::End => return StepEvent::Stuck,
                    Fetch::Pause => return StepEvent::NeedBit(NeedKind::MidInstruction),
                };
                if !skipping && !self.push_out(bit, env) {
                    return StepEvent::OutputOverflow;
                }
            }
            Opcode::Halt => {
                if !skipping {
                    return StepEvent::Halted;
                }
            }
            Opcode::Outr => {
                if !skipping {
                    match env.mode {
                        Mode::Prefix => return StepEvent::Stuck,
                        Mode::Plain => loop {
                            match self.fetch(prog, env) {
                                Fetch::Bit(b) => {
                                    if !self.push_out(b, env) {
                                        return StepEvent::OutputOverflow;
                                    }
                                }
                                Fetch::End => break,
                                Fetch::Pause => {
                                    return StepEvent::NeedBit(NeedKind::CopyRest)
                                }
                            }
                        },
                    }
                }
            }
            Opcode::Rcond => {
                if !skipping {
                    if self.cond_pos as usize >= env.cond.len() {
                        return StepEvent::Stuck;
                    }
                    let bit = env.cond.get(self.cond_pos as usize);
                    self.cond_pos += 1;
                    self.stack.push(bit);
                }
            }
            Opcode::Skipz => {
                if !skipping {
                    match self.stack.pop() {
                        None => return StepEvent::Stuck,
                        Some(false) => self.pending_skip = true,
                        Some(true) => {}
                    }
                }
            }
            Opcode::Jback => {
                let mut k = 0u64;
                for _ in 0..4 {
                    match self.fetch(prog, env) {
                        Fetch::Bit(b) => k = (k << 1) | b as u64,
                        Fetch::End => return StepEvent::Stuck,
                        Fetch::Pause => return StepEvent::NeedBit(NeedKind::MidInstruction),
                    }
                }
                if !skipping {
                    if instr_start < k + 1 {
                        return StepEvent::Stuck;
                    }
                    self.cursor = instr_start - (k + 1);
                }
            }
            Opcode::Copyc => {
                if !skipping {
                    while (self.cond_pos as usize) < env.cond.len() {
                        let bit = env.cond.get(self.cond_pos as usize);
                        self.cond_pos += 1;
                        if !self.push_out(bit, env) {
                            return StepEvent::OutputOverflow;
                        }
                    }
                }
            }
            Opcode::Dcond => {
                if !skipping {
                    loop {
                        if self.cond_pos as usize + 1 >= env.cond.len() {
                            return StepEvent::Stuck;
                        }
                        let u = env.cond.get(self.cond_pos as usize);
                        let v = env.cond.get(self.cond_pos as usize + 1);
                        self.cond_pos += 2;
                        match (u, v) {
                            (false, true) => break,
                            (a, b) if a == b => {
                                if !self.push_out(a, env) {
                                    return StepEvent::OutputOverflow;
                                }
                            }
                            _ => return StepEvent::Stuck,
                        }
                    }
                }
            }
            Opcode::Out0 => {
                if !skipping && !self.push_out(false, env) {
                    return StepEvent::OutputOverflow;
                }
            }
            Opcode::Out1 => {
                if !skipping && !self.push_out(true, env) {
                    return StepEvent::OutputOverflow;
                }
            }
        }
        StepEvent::Continue
    }
}

#[derive(Debug, Clone, Copy)]
enum Opcode {
    Outp,
    Halt,
    Outr,
    Rcond,
    Skipz,
    Jback,
    Copyc,
    Dcond,
    Out0,
    Out1,
}

/// Runs `program` on `condition` under `budget` steps. Deterministic:
/// identical inputs give identical results.
pub fn run(
    descriptor: &MachineDescriptor,
    program: &BitString,
    condition: &BitString,
    budget: u64,
) -> RunResult {
    let env = ExecEnv {
        mode: descriptor.mode,
        cond: condition,
        budget,
        out_cap: u64::MAX,
        walk: false,
    };
    let mut st = ExecState::new();
    loop {
        match st.step(program, &env) {
            StepEvent::Continue => {}
            StepEvent::Halted => {
                // In prefix mode a halt is only a halt of this program if it
                // consumed exactly the provided bits.
                let status = if descriptor.mode == Mode::Prefix
                    && st.hiwater != program.len() as u64
                {
                    Status::Stuck
                } else {
                    Status::Halted
                };
                return result(status, st);
            }
            StepEvent::Stuck => return result(Status::Stuck, st),
            StepEvent::OutOfBudget => return result(Status::OutOfBudget, st),
            StepEvent::NeedBit(_) | StepEvent::OutputOverflow => {
                unreachable!("run mode never pauses or caps output")
            }
        }
    }
}

fn result(status: Status, st: ExecState) -> RunResult {
    RunResult {
        status,
        output: st.out,
        program_bits_read: st.hiwater,
        steps_used: st.steps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitcodec::bits;

    fn plain() -> MachineDescriptor {
        MachineDescriptor::reference(Mode::Plain)
    }

    fn prefix() -> MachineDescriptor {
        MachineDescriptor::reference(Mode::Prefix)
    }

    #[test]
    fn opcode_table_prefix_free_and_complete() {
        let d = plain();
        assert!(d.opcode_table_is_prefix_free());
        // Kraft sum of the patterns is exactly 1: the code is complete.
        let sum: f64 = d
            .opcodes
            .iter()
            .map(|o| 2f64.powi(-(o.pattern.len() as i32)))
            .sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fingerprint_stable_and_matches_describe() {
        let d = plain();
        assert_eq!(d.fingerprint(), plain().fingerprint());
        let text = d.describe();
        assert!(text.contains(&d.fingerprint_hex()));
        // digest of the canonical text equals the fingerprint
        let mut h = Sha256::new();
        h.update(d.canonical_text().as_bytes());
        let digest: [u8; 32] = h.finalize().into();
        assert_eq!(digest, d.fingerprint());
    }

    #[test]
    fn fingerprint_sensitive_to_opcode_change() {
        let mut d = plain();
        d.opcodes[0].semantics = "changed";
        assert_ne!(d.fingerprint(), plain().fingerprint());
    }

    #[test]
    fn halt_alone_in_prefix_mode() {
        let r = run(&prefix(), &bits("100"), &bits("1"), 8);
        assert_eq!(r.status, Status::Halted);
        assert_eq!(r.output, bits("ε"));
        assert_eq!(r.program_bits_read, 3);
    }

    #[test]
    fn budget_zero_is_out_of_budget_in_both_modes() {
        for d in [plain(), prefix()] {
            let r = run(&d, &BitString::new(), &BitString::new(), 0);
            assert_eq!(r.status, Status::OutOfBudget);
            assert_eq!(r.steps_used, 0);
        }
    }

    #[test]
    fn empty_program_halts_in_plain_mode() {
        let r = run(&plain(), &BitString::new(), &bits("101"), 8);
        assert_eq!(r.status, Status::Halted);
        assert_eq!(r.output, BitString::new());
        assert_eq!(r.steps_used, 1);
    }

    #[test]
    fn extended_halting_program_is_not_halted_in_prefix_mode() {
        // p = HALT halts; p·"1" must not: prefix-free domain law.
        let r = run(&prefix(), &bits("1001"), &bits("ε"), 8);
        assert_eq!(r.status, Status::Stuck);
    }

    #[test]
    fn outp_chain_writes_literal() {
        // plain: 01 00 01 writes 101 then halts at end of program
        let r = run(&plain(), &bits("010001"), &bits("ε"), 16);
        assert_eq!(r.status, Status::Halted);
        assert_eq!(r.output, bits("101"));
        // prefix: same chain plus HALT
        let r = run(&prefix(), &bits("010001100"), &bits("ε"), 16);
        assert_eq!(r.status, Status::Halted);
        assert_eq!(r.output, bits("101"));
    }

    #[test]
    fn outr_copies_rest_in_plain_and_sticks_in_prefix() {
        let r = run(&plain(), &bits("10111010"), &bits("ε"), 16);
        assert_eq!(r.status, Status::Halted);
        assert_eq!(r.output, bits("11010"));
        let r = run(&prefix(), &bits("10111010"), &bits("ε"), 16);
        assert_eq!(r.status, Status::Stuck);
    }

    #[test]
    fn copyc_copies_condition() {
        let r = run(&plain(), &bits("111110"), &bits("100110"), 16);
        assert_eq!(r.status, Status::Halted);
        assert_eq!(r.output, bits("100110"));
        // prefix needs a HALT and exact consumption
        let r = run(&prefix(), &bits("111110100"), &bits("100110"), 16);
        assert_eq!(r.status, Status::Halted);
        assert_eq!(r.output, bits("100110"));
    }

    #[test]
    fn dcond_decodes_one_item() {
        // condition = selfdelim("10") · "0011" = 1100 01 0011
        let cond = bits("1100010011");
        let r = run(&plain(), &bits("1111110"), &cond, 16);
        assert_eq!(r.status, Status::Halted);
        assert_eq!(r.output, bits("10"));
        // malformed: "10" pair right away
        let r = run(&plain(), &bits("1111110"), &bits("10"), 16);
        assert_eq!(r.status, Status::Stuck);
        // exhausted: single leftover bit
        let r = run(&plain(), &bits("1111110"), &bits("0"), 16);
        assert_eq!(r.status, Status::Stuck);
    }

    #[test]
    fn rcond_stuck_on_exhausted_condition() {
        let r = run(&plain(), &bits("110"), &bits("ε"), 8);
        assert_eq!(r.status, Status::Stuck);
    }

    #[test]
    fn skipz_pops_and_skips() {
        // cond "0": RCOND pushes 0, SKIPZ pops -> skip OUT1, end halts: out ε
        let r = run(&plain(), &bits("110111011111111"), &bits("0"), 16);
        assert_eq!(r.status, Status::Halted);
        assert_eq!(r.output, bits("ε"));
        // cond "1": OUT1 executes
        let r = run(&plain(), &bits("110111011111111"), &bits("1"), 16);
        assert_eq!(r.status, Status::Halted);
        assert_eq!(r.output, bits("1"));
        // empty stack: stuck
        let r = run(&plain(), &bits("1110"), &bits("ε"), 8);
        assert_eq!(r.status, Status::Stuck);
    }

    #[test]
    fn jback_loops_until_condition_bit_exits() {
        // positions: 0..2 RCOND, 3..6 SKIPZ, 7..9 HALT, 10..18 JBACK k=9 -> 0.
        // Halts once the first 1 bit appears in the condition; all-zero
        // condition exhausts RCOND and gets stuck.
        let p = bits("110" ).concat(&bits("1110")).concat(&bits("100")).concat(&bits("111101001"));
        let r = run(&plain(), &p, &bits("001"), 64);
        assert_eq!(r.status, Status::Halted);
        assert_eq!(r.steps_used, 11); // two skipped passes of 4 steps, then RCOND SKIPZ HALT
        let r = run(&plain(), &p, &bits("000"), 64);
        assert_eq!(r.status, Status::Stuck);
    }

    #[test]
    fn skipped_instructions_have_no_effects() {
        // cond "0"·"001101": RCOND pushes 0, SKIPZ skips the DCOND, so the
        // condition head stays put and COPYC copies the untouched rest.
        let p = bits("110").concat(&bits("1110")).concat(&bits("1111110")).concat(&bits("111110"));
        let r = run(&plain(), &p, &bits("0001101"), 16);
        assert_eq!(r.status, Status::Halted);
        assert_eq!(r.output, bits("001101"));
        // cond "1"·...: DCOND executes, consuming 00 11 01 and writing "01",
        // leaving nothing for COPYC
        let r = run(&plain(), &p, &bits("1001101"), 16);
        assert_eq!(r.status, Status::Halted);
        assert_eq!(r.output, bits("01"));
        // a skipped JBACK reads its offset but does not jump
        let p = bits("110").concat(&bits("1110")).concat(&bits("111100000")).concat(&bits("01"));
        let r = run(&plain(), &p, &bits("0"), 16);
        assert_eq!(r.status, Status::Halted);
        assert_eq!(r.output, bits("1"));
    }

    #[test]
    fn jback_negative_target_is_stuck() {
        // JBACK at position 0 always jumps before the tape start.
        let r = run(&plain(), &bits("111100000"), &bits("ε"), 8);
        assert_eq!(r.status, Status::Stuck);
    }

    #[test]
    fn infinite_loop_exhausts_budget() {
        // OUTP 1 then JBACK to 0 re-outputs forever.
        let p = bits("01").concat(&bits("111100001"));
        let r = run(&plain(), &p, &bits("ε"), 100);
        assert_eq!(r.status, Status::OutOfBudget);
        assert_eq!(r.steps_used, 100);
    }

    #[test]
    fn budget_monotonicity_halted_stays_halted() {
        let d = plain();
        for v in 0u64..512 {
            let p = BitString::from_value(9, v);
            let r1 = run(&d, &p, &bits("01"), 32);
            if r1.status == Status::Halted {
                let r2 = run(&d, &p, &bits("01"), 64);
                assert_eq!(r2.status, Status::Halted);
                assert_eq!(r2.output, r1.output);
                assert_eq!(r2.steps_used, r1.steps_used);
            }
        }
    }

    #[test]
    fn determinism_over_random_triples() {
        //Derives pseudo-random (program, condition, budget) triples from a
        // counter; two executions must agree exactly.
        let dp = plain();
        let df = prefix();
        let mut x: u64 = 0x9e3779b97f4a7c15;
        for _ in 0..10_000 {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let plen = (x >> 8) % 16;
            let clen = (x >> 13) % 8;
            let budget = (x >> 17) % 64;
            let p = BitString::from_value(plen as usize, x & ((1 << plen) - 1));
            let c = BitString::from_value(clen as usize, (x >> 32) & ((1 << clen) - 1));
            for d in [&dp, &df] {
                let r1 = run(d, &p, &c, budget);
                let r2 = run(d, &p, &c, budget);
                assert_eq!(r1, r2);
                assert!(r1.steps_used <= budget);
            }
        }
    }
}
