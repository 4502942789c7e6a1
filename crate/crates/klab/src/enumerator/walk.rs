//! Exhaustive enumeration of program behaviors by walking the fetch tree.
//!
//! Programs are not run one string at a time. Execution forks whenever the
//! machine asks for a program bit it has not been given: the two branches
//! buffer a 0 and a 1. A branch dies on halt, stuck, budget exhaustion, or
//! when its output outgrows every target; all extensions of a dead prefix
//! would behave identically, so nothing is lost. In plain mode each fetch
//! boundary additionally yields the outcome of the program that ends exactly
//! there (a fresh instruction boundary at the end is a clean halt).
//!
//! Emitted halting programs are minimal representatives: in plain mode a
//! program that halts via the HALT opcode is emitted once as the fetched
//! prefix, never as its (longer, equal-output) extensions. Minima over
//! emissions therefore equal minima over all programs.

use crate::bitcodec::BitString;
use crate::machine::{ExecEnv, ExecState, Mode, NeedKind, ProgSource, StepEvent};

/// A program prefix of up to 26 bits, packed most significant bit first so
/// that the derived order is length-lexicographic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ProgBits {
    pub len: u8,
    pub bits: u32,
}

impl ProgBits {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn pushed(self, bit: bool) -> Self {
        debug_assert!(self.len < 32);
        ProgBits {
            len: self.len + 1,
            bits: self.bits | ((bit as u32) << (31 - self.len)),
        }
    }

    pub fn get_bit(self, i: u8) -> bool {
        debug_assert!(i < self.len);
        (self.bits >> (31 - i)) & 1 == 1
    }

    pub fn to_bitstring(self) -> BitString {
        let mut s = BitString::new();
        for i in 0..self.len {
            s.push(self.get_bit(i));
        }
        s
    }
}

impl ProgSource for ProgBits {
    fn get(&self, i: u64) -> Option<bool> {
        if i < self.len as u64 {
            Some(self.get_bit(i as u8))
        } else {
            None
        }
    }
}

/// A suspended branch of the walk. `resuming_copy` marks a node paused
/// inside OUTR's copy of the remaining program; such a node resumes the copy
/// directly instead of decoding a fresh instruction.
#[derive(Clone)]
pub struct WalkNode {
    pub state: ExecState,
    pub buf: ProgBits,
    pub resuming_copy: bool,
}

impl WalkNode {
    pub fn root() -> Self {
        WalkNode {
            state: ExecState::new(),
            buf: ProgBits::empty(),
            resuming_copy: false,
        }
    }
}

pub struct WalkParams<'a> {
    pub mode: Mode,
    pub cond: &'a BitString,
    /// Maximum program length P in bits.
    pub max_prog_len: u32,
    /// Step budget T.
    pub budget: u64,
    /// Branches whose output exceeds this many bits are abandoned; use
    /// `u64::MAX` to keep every branch alive.
    pub out_cap: u64,
}

/// Called once per halting program with (program, output, steps_used).
pub trait HaltSink {
    fn halted(&mut self, program: ProgBits, output: &BitString, steps: u64);
}

impl<F: FnMut(ProgBits, &BitString, u64)> HaltSink for F {
    fn halted(&mut self, program: ProgBits, output: &BitString, steps: u64) {
        self(program, output, steps)
    }
}

// Non-OUTR instructions span at most 9 program bits (JBACK: 5 opcode + 4
// offset), so a step starting further than that from the fetch frontier
// cannot pause; OUTR pauses are resumable from the dirty state and need no
// snapshot.
const MAX_INSTR_BITS: u64 = 9;

/// Processes one node to exhaustion, pushing forked children onto `stack`
/// unless their depth reaches `frontier_depth`, in which case they go to
/// `frontier` (used by the parallel driver; pass `None` to walk everything).
fn process_node(
    mut node: WalkNode,
    params: &WalkParams,
    stack: &mut Vec<WalkNode>,
    mut frontier: Option<&mut Vec<WalkNode>>,
    frontier_depth: u32,
    sink: &mut impl HaltSink,
) {
    let env = ExecEnv {
        mode: params.mode,
        cond: params.cond,
        budget: params.budget,
        out_cap: params.out_cap,
        walk: true,
    };
    let fork = |node: WalkNode, stack: &mut Vec<WalkNode>, frontier: &mut Option<&mut Vec<WalkNode>>| {
        match frontier {
            Some(f) if node.buf.len as u32 == frontier_depth => f.push(node),
            _ => stack.push(node),
        }
    };

    loop {
        if node.resuming_copy {
            // Mid-OUTR with cursor == buf.len: identical to a fresh CopyRest
            // pause of the dirty state.
            let st = &node.state;
            if params.mode == Mode::Plain && st.steps < params.budget {
                sink.halted(node.buf, &st.out, st.steps + 1);
            }
            if st.steps < params.budget && (node.buf.len as u32) < params.max_prog_len {
                for bit in [false, true] {
                    if st.out.len() as u64 + 1 > params.out_cap {
                        break;
                    }
                    let mut child = st.clone();
                    child.out.push(bit);
                    child.cursor += 1;
                    child.hiwater += 1;
                    fork(
                        WalkNode {
                            state: child,
                            buf: node.buf.pushed(bit),
                            resuming_copy: true,
                        },
                        stack,
                        &mut frontier,
                    );
                }
            }
            return;
        }

        let snapshot = if node.state.cursor + MAX_INSTR_BITS > node.buf.len as u64 {
            Some(node.state.clone())
        } else {
            None
        };
        match node.state.step(&node.buf, &env) {
            StepEvent::Continue => {}
            StepEvent::Halted => {
                sink.halted(node.buf, &node.state.out, node.state.steps);
                return;
            }
            StepEvent::Stuck | StepEvent::OutOfBudget | StepEvent::OutputOverflow => return,
            StepEvent::NeedBit(kind) => {
                match kind {
                    NeedKind::InstructionStart => {
                        // The program ending exactly here halts in plain
                        // mode; the dispatch step is already charged.
                        if params.mode == Mode::Plain {
                            sink.halted(node.buf, &node.state.out, node.state.steps);
                        }
                        if (node.buf.len as u32) < params.max_prog_len {
                            let base = snapshot.expect("pause implies frontier proximity");
                            for bit in [false, true] {
                                fork(
                                    WalkNode {
                                        state: base.clone(),
                                        buf: node.buf.pushed(bit),
                                        resuming_copy: false,
                                    },
                                    stack,
                                    &mut frontier,
                                );
                            }
                        }
                    }
                    NeedKind::MidInstruction => {
                        // The program ending here dies mid-instruction.
                        if (node.buf.len as u32) < params.max_prog_len {
                            let base = snapshot.expect("pause implies frontier proximity");
                            for bit in [false, true] {
                                fork(
                                    WalkNode {
                                        state: base.clone(),
                                        buf: node.buf.pushed(bit),
                                        resuming_copy: false,
                                    },
                                    stack,
                                    &mut frontier,
                                );
                            }
                        }
                    }
                    NeedKind::CopyRest => {
                        // OUTR consumed the buffer; the dirty state resumes.
                        let st = &node.state;
                        if params.mode == Mode::Plain && st.steps < params.budget {
                            sink.halted(node.buf, &st.out, st.steps + 1);
                        }
                        if st.steps < params.budget && (node.buf.len as u32) < params.max_prog_len
                        {
                            for bit in [false, true] {
                                if st.out.len() as u64 + 1 > params.out_cap {
                                    break;
                                }
                                let mut child = st.clone();
                                child.out.push(bit);
                                child.cursor += 1;
                                child.hiwater += 1;
                                fork(
                                    WalkNode {
                                        state: child,
                                        buf: node.buf.pushed(bit),
                                        resuming_copy: true,
                                    },
                                    stack,
                                    &mut frontier,
                                );
                            }
                        }
                    }
                }
                return;
            }
        }
    }
}

/// Serial walk of the whole tree under one condition.
pub fn walk_condition(params: &WalkParams, sink: &mut impl HaltSink) {
    let mut stack = vec![WalkNode::root()];
    while let Some(node) = stack.pop() {
        process_node(node, params, &mut stack, None, 0, sink);
    }
}

/// Walks the shallow part of the tree serially, returning the set of live
/// nodes at exactly `depth` program bits. Shallow halts go to `sink`.
pub fn walk_to_frontier(
    params: &WalkParams,
    depth: u32,
    sink: &mut impl HaltSink,
) -> Vec<WalkNode> {
    let mut frontier = Vec::new();
    let mut stack = vec![WalkNode::root()];
    while let Some(node) = stack.pop() {
        process_node(node, params, &mut stack, Some(&mut frontier), depth, sink);
    }
    frontier
}

/// Walks the subtree rooted at `node`.
pub fn walk_subtree(node: WalkNode, params: &WalkParams, sink: &mut impl HaltSink) {
    let mut stack = vec![node];
    while let Some(n) = stack.pop() {
        process_node(n, params, &mut stack, None, 0, sink);
    }
}
