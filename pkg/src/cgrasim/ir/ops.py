"""Word-level operation semantics shared by the interpreter, the dataflow
evaluator, and the mapped-configuration evaluator.

All values are 32-bit words stored as Python ints in [0, 2**32). Integer ops
wrap modulo 2**32; float ops operate on the IEEE-754 single-precision bit
pattern and round the result back to single precision, so every evaluator
produces bit-identical results.
"""

import math
import struct
from enum import IntEnum

MASK32 = 0xFFFFFFFF


class NodeOp(IntEnum):
    """Operation codes for dataflow nodes and fabric cells."""

    IDLE = 0
    PASS = 1
    IADD = 2
    ISUB = 3
    IMUL = 4
    IMAD = 5
    FADD = 6
    FMUL = 7
    FMA = 8
    FDIV = 9
    SQRT = 10
    EXP = 11
    MOV = 12
    CVT_I2F = 13
    CVT_F2I = 14
    SELP = 15
    SETP_EQ = 16
    SETP_NE = 17
    SETP_LT = 18
    SETP_LE = 19
    SETP_GT = 20
    SETP_GE = 21
    SETP_FEQ = 22
    SETP_FNE = 23
    SETP_FLT = 24
    SETP_FLE = 25
    SETP_FGT = 26
    SETP_FGE = 27


SFU_OPS = frozenset({NodeOp.FDIV, NodeOp.SQRT, NodeOp.EXP})

# Operand counts per op (PASS/MOV take one, muxes and multiply-adds three).
ARITY = {
    NodeOp.IDLE: 0,
    NodeOp.PASS: 1,
    NodeOp.IADD: 2,
    NodeOp.ISUB: 2,
    NodeOp.IMUL: 2,
    NodeOp.IMAD: 3,
    NodeOp.FADD: 2,
    NodeOp.FMUL: 2,
    NodeOp.FMA: 3,
    NodeOp.FDIV: 2,
    NodeOp.SQRT: 1,
    NodeOp.EXP: 1,
    NodeOp.MOV: 1,
    NodeOp.CVT_I2F: 1,
    NodeOp.CVT_F2I: 1,
    NodeOp.SELP: 3,
    NodeOp.SETP_EQ: 2,
    NodeOp.SETP_NE: 2,
    NodeOp.SETP_LT: 2,
    NodeOp.SETP_LE: 2,
    NodeOp.SETP_GT: 2,
    NodeOp.SETP_GE: 2,
    NodeOp.SETP_FEQ: 2,
    NodeOp.SETP_FNE: 2,
    NodeOp.SETP_FLT: 2,
    NodeOp.SETP_FLE: 2,
    NodeOp.SETP_FGT: 2,
    NodeOp.SETP_FGE: 2,
}


def u2f(word: int) -> float:
    return struct.unpack("<f", struct.pack("<I", word & MASK32))[0]


def f2u(value: float) -> int:
    # Out-of-range and NaN results saturate per struct's float32 conversion.
    try:
        return struct.unpack("<I", struct.pack("<f", value))[0]
    except OverflowError:
        return struct.unpack("<I", struct.pack("<f", math.inf if value > 0 else -math.inf))[0]


def to_signed(word: int) -> int:
    word &= MASK32
    return word - (1 << 32) if word & 0x80000000 else word


def from_signed(value: int) -> int:
    return value & MASK32


def _f2i_trunc(word: int) -> int:
    f = u2f(word)
    if math.isnan(f):
        return 0
    f = max(min(f, 2**31 - 1), -(2**31))
    return from_signed(int(f))


def apply_op(op: NodeOp, a: int = 0, b: int = 0, c: int = 0) -> int:
    """Evaluate one word-level operation. SELP returns a when c is nonzero."""
    if op in (NodeOp.PASS, NodeOp.MOV):
        return a & MASK32
    if op == NodeOp.IADD:
        return (a + b) & MASK32
    if op == NodeOp.ISUB:
        return (a - b) & MASK32
    if op == NodeOp.IMUL:
        return (a * b) & MASK32
    if op == NodeOp.IMAD:
        return (a * b + c) & MASK32
    if op == NodeOp.FADD:
        return f2u(u2f(a) + u2f(b))
    if op == NodeOp.FMUL:
        return f2u(u2f(a) * u2f(b))
    if op == NodeOp.FMA:
        # Single rounding of the double-precision intermediate.
        return f2u(u2f(a) * u2f(b) + u2f(c))
    if op == NodeOp.FDIV:
        fb = u2f(b)
        if fb == 0.0:
            fa = u2f(a)
            if fa == 0.0 or math.isnan(fa):
                return f2u(math.nan)
            return f2u(math.copysign(math.inf, fa) * math.copysign(1.0, fb))
        return f2u(u2f(a) / fb)
    if op == NodeOp.SQRT:
        fa = u2f(a)
        return f2u(math.sqrt(fa)) if fa >= 0.0 else f2u(math.nan)
    if op == NodeOp.EXP:
        try:
            return f2u(math.exp(u2f(a)))
        except OverflowError:
            return f2u(math.inf)
    if op == NodeOp.CVT_I2F:
        return f2u(float(to_signed(a)))
    if op == NodeOp.CVT_F2I:
        return _f2i_trunc(a)
    if op == NodeOp.SELP:
        return (a if c else b) & MASK32
    if op == NodeOp.SETP_EQ:
        return int(to_signed(a) == to_signed(b))
    if op == NodeOp.SETP_NE:
        return int(to_signed(a) != to_signed(b))
    if op == NodeOp.SETP_LT:
        return int(to_signed(a) < to_signed(b))
    if op == NodeOp.SETP_LE:
        return int(to_signed(a) <= to_signed(b))
    if op == NodeOp.SETP_GT:
        return int(to_signed(a) > to_signed(b))
    if op == NodeOp.SETP_GE:
        return int(to_signed(a) >= to_signed(b))
    if op == NodeOp.SETP_FEQ:
        return int(u2f(a) == u2f(b))
    if op == NodeOp.SETP_FNE:
        return int(u2f(a) != u2f(b))
    if op == NodeOp.SETP_FLT:
        return int(u2f(a) < u2f(b))
    if op == NodeOp.SETP_FLE:
        return int(u2f(a) <= u2f(b))
    if op == NodeOp.SETP_FGT:
        return int(u2f(a) > u2f(b))
    if op == NodeOp.SETP_FGE:
        return int(u2f(a) >= u2f(b))
    raise ValueError(f"not an evaluable op: {op!r}")
