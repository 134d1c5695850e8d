"""Scalar per-thread golden interpreter and the lockstep-SIMD register-file
traffic counter used as the comparison baseline.

The interpreter executes one thread's control path sequentially against a
global memory image and an optional per-CTA shared memory array. It is the
functional reference for every simulator-level equivalence test: given the
same inputs it is deterministic down to the bit pattern.

Baseline counting convention: each dynamically executed instruction costs
one register-file read per GPR/predicate source and one write per GPR or
predicate destination. Immediates and special registers are free. An
instruction whose guard is false still pays its operand reads (lockstep
lanes fetch operands regardless of the mask) but not its destination write.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from . import ops
from .memimage import MemoryImage
from .types import (
    NUM_PRED_REGS,
    Imm,
    Instruction,
    Kernel,
    LaunchConfig,
    Opcode,
    PredReg,
    Reg,
    Space,
    Special,
    Terminator,
)

DEFAULT_SHARED_BYTES = 48 * 1024


class TrapError(RuntimeError):
    """Unaligned or out-of-bounds memory access."""

    def __init__(self, msg: str, block: str, instr_index: int, cta: int, tid: int):
        super().__init__(f"{msg} (cta {cta}, tid {tid}, at {block}[{instr_index}])")
        self.block = block
        self.instr_index = instr_index
        self.cta = cta
        self.tid = tid


@dataclass
class ThreadState:
    regs: list[int] = field(default_factory=lambda: [0] * 32)
    preds: list[int] = field(default_factory=lambda: [0] * NUM_PRED_REGS)
    block: str = ""
    instr_index: int = 0
    active: bool = True
    stores: list[tuple[int, int]] = field(default_factory=list)  # (addr, value), global only

    # Dynamic RF access tally, filled when counting is enabled.
    rf_reads: int = 0
    rf_writes: int = 0


_SETP_OPS = {
    ("EQ", False): ops.NodeOp.SETP_EQ, ("NE", False): ops.NodeOp.SETP_NE,
    ("LT", False): ops.NodeOp.SETP_LT, ("LE", False): ops.NodeOp.SETP_LE,
    ("GT", False): ops.NodeOp.SETP_GT, ("GE", False): ops.NodeOp.SETP_GE,
    ("EQ", True): ops.NodeOp.SETP_FEQ, ("NE", True): ops.NodeOp.SETP_FNE,
    ("LT", True): ops.NodeOp.SETP_FLT, ("LE", True): ops.NodeOp.SETP_FLE,
    ("GT", True): ops.NodeOp.SETP_FGT, ("GE", True): ops.NodeOp.SETP_FGE,
}

_ALU_OPS = {
    Opcode.IADD: ops.NodeOp.IADD, Opcode.ISUB: ops.NodeOp.ISUB,
    Opcode.IMUL: ops.NodeOp.IMUL, Opcode.IMAD: ops.NodeOp.IMAD,
    Opcode.FADD: ops.NodeOp.FADD, Opcode.FMUL: ops.NodeOp.FMUL,
    Opcode.FMA: ops.NodeOp.FMA, Opcode.FDIV: ops.NodeOp.FDIV,
    Opcode.SQRT: ops.NodeOp.SQRT, Opcode.EXP: ops.NodeOp.EXP,
    Opcode.MOV: ops.NodeOp.MOV,
}


def node_op_for(ins: Instruction) -> ops.NodeOp:
    """Dataflow op implementing an arithmetic/compare/select IR instruction."""
    if ins.opcode in _ALU_OPS:
        return _ALU_OPS[ins.opcode]
    if ins.opcode == Opcode.SETP:
        return _SETP_OPS[(ins.cmp.value, ins.fcmp)]
    if ins.opcode == Opcode.CVT:
        return ops.NodeOp.CVT_I2F if ins.cvt_to_float else ops.NodeOp.CVT_F2I
    if ins.opcode == Opcode.SELP:
        return ops.NodeOp.SELP
    raise ValueError(f"{ins.opcode} has no dataflow op")


def special_value(name: str, tid: int, cta: int, launch: LaunchConfig) -> int:
    if name == "TID_X":
        return tid
    if name == "CTAID_X":
        return cta
    if name == "NTID_X":
        return launch.cta_size
    if name in ("TID_Y", "TID_Z", "CTAID_Y", "CTAID_Z"):
        return 0
    if name in ("NTID_Y", "NTID_Z"):
        return 1
    raise ValueError(name)


class _Counting:
    """RF access tally hooks; specials and immediates never count."""

    def __init__(self, state: ThreadState):
        self.state = state

    def read(self, n: int = 1):
        self.state.rf_reads += n

    def write(self, n: int = 1):
        self.state.rf_writes += n


def interpret_thread(
    kernel: Kernel,
    launch: LaunchConfig,
    cta: int,
    tid: int,
    memory: MemoryImage,
    shared: bytearray | None = None,
    max_steps: int = 1_000_000,
) -> ThreadState:
    """Run one thread to completion; mutates `memory` (and `shared`) in place
    and returns the final state including the ordered global-store list.
    """
    if tid >= launch.cta_size:
        raise ValueError(f"tid {tid} outside CTA of {launch.cta_size}")
    if shared is None:
        shared = bytearray(DEFAULT_SHARED_BYTES)

    st = ThreadState(block=kernel.entry)
    tally = _Counting(st)
    steps = 0

    block = kernel.block(st.block)
    while True:
        if steps >= max_steps:
            raise TrapError("step limit exceeded (runaway loop?)", st.block, st.instr_index, cta, tid)
        if st.instr_index >= len(block.instructions):
            nxt = _fallthrough(kernel, block)
            if nxt is None:
                break
            block = kernel.block(nxt)
            st.block, st.instr_index = nxt, 0
            continue
        ins = block.instructions[st.instr_index]
        steps += 1

        taken_target = _step(ins, st, tally, kernel, launch, cta, tid, memory, shared)
        if taken_target == "<ret>":
            break
        if taken_target is not None:
            block = kernel.block(taken_target)
            st.block, st.instr_index = taken_target, 0
        else:
            st.instr_index += 1

    st.active = False
    return st


def _fallthrough(kernel: Kernel, block) -> str | None:
    idx = kernel.block_index(block.label)
    if idx + 1 < len(kernel.blocks):
        return kernel.blocks[idx + 1].label
    return None


def _operand(st: ThreadState, op, tally, tid, cta, launch) -> int:
    if isinstance(op, Reg):
        tally.read()
        return st.regs[op.index]
    if isinstance(op, PredReg):
        tally.read()
        return st.preds[op.index]
    if isinstance(op, Imm):
        return op.word
    if isinstance(op, Special):
        return special_value(op.name, tid, cta, launch)
    raise TypeError(op)


def _guard_true(ins: Instruction, st: ThreadState, tally) -> bool:
    if ins.guard is None:
        return True
    tally.read()
    return bool(st.preds[ins.guard.index]) == ins.guard.value


def _step(ins, st, tally, kernel, launch, cta, tid, memory, shared):
    """Execute one instruction; returns a branch target label, "<ret>", or
    None for sequential flow."""
    if ins.opcode == Opcode.BAR:
        # A single thread observes a barrier as a no-op.
        return None
    if ins.opcode == Opcode.RET:
        return "<ret>"

    if ins.opcode == Opcode.BRA:
        if ins.guard is None:
            return ins.target
        tally.read()
        taken = bool(st.preds[ins.guard.index]) == ins.guard.value
        return ins.target if taken else None

    live = _guard_true(ins, st, tally)

    if ins.opcode == Opcode.LD:
        addr = 0
        if ins.srcs:
            addr = (_operand(st, ins.srcs[0], tally, tid, cta, launch) + ins.offset) & ops.MASK32
        else:
            addr = ins.offset
        if not live:
            return None
        value = _load(ins.space, addr, memory, shared, launch, st, cta, tid, ins)
        st.regs[ins.dst.index] = value
        tally.write()
        return None

    if ins.opcode == Opcode.ST:
        addr = (_operand(st, ins.srcs[0], tally, tid, cta, launch) + ins.offset) & ops.MASK32
        value = _operand(st, ins.srcs[1], tally, tid, cta, launch)
        if not live:
            return None
        _store(ins.space, addr, value, memory, shared, st, cta, tid, ins)
        return None

    # Arithmetic, compares, moves, converts, selects.
    vals = [_operand(st, s, tally, tid, cta, launch) for s in ins.srcs]
    result = ops.apply_op(node_op_for(ins), *vals)
    if live:
        if isinstance(ins.dst, PredReg):
            st.preds[ins.dst.index] = result
        else:
            st.regs[ins.dst.index] = result
        tally.write()
    return None


def _check_addr(addr: int, limit: int, what: str, st, cta, tid, ins):
    if addr % 4 != 0:
        raise TrapError(f"unaligned {what} access at 0x{addr:x}", st.block, st.instr_index, cta, tid)
    if addr + 4 > limit:
        raise TrapError(f"out-of-bounds {what} access at 0x{addr:x}", st.block, st.instr_index, cta, tid)


def _load(space, addr, memory, shared, launch, st, cta, tid, ins) -> int:
    if space == Space.PARAM:
        if addr + 4 > len(launch.params):
            raise TrapError(f"parameter read at {addr} beyond payload", st.block, st.instr_index, cta, tid)
        return struct.unpack_from("<I", launch.params, addr)[0]
    if space == Space.SHARED:
        _check_addr(addr, len(shared), "shared", st, cta, tid, ins)
        return struct.unpack_from("<I", shared, addr)[0]
    _check_addr(addr, len(memory), "global", st, cta, tid, ins)
    return memory.read_word(addr)


def _store(space, addr, value, memory, shared, st, cta, tid, ins):
    if space == Space.SHARED:
        _check_addr(addr, len(shared), "shared", st, cta, tid, ins)
        struct.pack_into("<I", shared, addr, value & ops.MASK32)
        return
    _check_addr(addr, len(memory), "global", st, cta, tid, ins)
    memory.write_word(addr, value)
    st.stores.append((addr, value & ops.MASK32))


def run_all_threads(kernel: Kernel, launch: LaunchConfig, memory: MemoryImage) -> MemoryImage:
    """Golden whole-launch execution: every thread of every CTA run
    sequentially on a copy of the image. Suitable only for kernels whose
    cross-thread communication is absent or ordering-independent."""
    result = memory.copy()
    for cta in range(launch.grid_size):
        shared = bytearray(DEFAULT_SHARED_BYTES)
        for tid in range(launch.cta_size):
            interpret_thread(kernel, launch, cta, tid, result, shared)
    return result


@dataclass
class BaselineRf:
    reads: int
    writes: int

    @property
    def total(self) -> int:
        return self.reads + self.writes


def count_baseline_rf(kernel: Kernel, launch: LaunchConfig, memory: MemoryImage) -> BaselineRf:
    """Register-file traffic of the lockstep-SIMD baseline: run every thread
    through the interpreter and total the per-instruction operand reads and
    destination writes. Traps propagate."""
    scratch = memory.copy()
    reads = writes = 0
    for cta in range(launch.grid_size):
        shared = bytearray(DEFAULT_SHARED_BYTES)
        for tid in range(launch.cta_size):
            st = interpret_thread(kernel, launch, cta, tid, scratch, shared)
            reads += st.rf_reads
            writes += st.rf_writes
    return BaselineRf(reads, writes)
