"""Core IR data types: instructions, basic blocks, kernels, launches.

Registers are 32-bit words. General-purpose registers r0..r{N_r-1} and
predicate registers p0..p{N_p-1} are per-thread private state; special
registers (thread/block indices and dimensions) are read-only inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

NUM_REGS = 32
NUM_PRED_REGS = 2

# Register id space used by liveness and metadata bitmaps: GPRs occupy
# [0, NUM_REGS), predicate registers sit in the bitmap tail.
PRED_BASE = NUM_REGS

ENTRY = "<entry>"
EXIT = "<exit>"

SPECIAL_NAMES = (
    "TID_X", "TID_Y", "TID_Z",
    "CTAID_X", "CTAID_Y", "CTAID_Z",
    "NTID_X", "NTID_Y", "NTID_Z",
)


class Opcode(Enum):
    IADD = "IADD"
    ISUB = "ISUB"
    IMUL = "IMUL"
    IMAD = "IMAD"
    FADD = "FADD"
    FMUL = "FMUL"
    FMA = "FMA"
    FDIV = "FDIV"
    SQRT = "SQRT"
    EXP = "EXP"
    SETP = "SETP"
    SELP = "SELP"
    MOV = "MOV"
    CVT = "CVT"
    LD = "LD"
    ST = "ST"
    BRA = "BRA"
    BAR = "BAR"
    RET = "RET"


class Space(Enum):
    GLOBAL = "GLOBAL"
    SHARED = "SHARED"
    PARAM = "PARAM"


class Cmp(Enum):
    EQ = "EQ"
    NE = "NE"
    LT = "LT"
    LE = "LE"
    GT = "GT"
    GE = "GE"


SFU_OPCODES = frozenset({Opcode.FDIV, Opcode.SQRT, Opcode.EXP})


@dataclass(frozen=True)
class Reg:
    index: int

    def __str__(self):
        return f"r{self.index}"


@dataclass(frozen=True)
class PredReg:
    index: int

    def __str__(self):
        return f"p{self.index}"


@dataclass(frozen=True)
class Imm:
    # Stored as the 32-bit word pattern; float literals are encoded at parse.
    word: int

    def __str__(self):
        return str(self.word)


@dataclass(frozen=True)
class Special:
    name: str

    def __str__(self):
        return self.name


Operand = Reg | PredReg | Imm | Special


@dataclass(frozen=True)
class Guard:
    """Optional predicate guard: execute/commit only when p{index} == value."""

    index: int
    value: bool  # True for @pN, False for @!pN

    def __str__(self):
        return f"@{'' if self.value else '!'}p{self.index}"


@dataclass(frozen=True)
class Instruction:
    opcode: Opcode
    dst: Reg | PredReg | None = None
    srcs: tuple[Operand, ...] = ()
    guard: Guard | None = None
    space: Space | None = None       # LD/ST
    offset: int = 0                  # LD/ST immediate byte offset
    cmp: Cmp | None = None           # SETP comparison
    fcmp: bool = False               # SETP float compare (.F suffix)
    cvt_to_float: bool | None = None  # CVT direction: True = I2F
    target: str | None = None        # BRA label
    line: int = field(default=0, compare=False)

    @property
    def is_float_setp(self) -> bool:
        return self.opcode == Opcode.SETP and self.fcmp


class Terminator(Enum):
    FALLTHROUGH = "fallthrough"
    BRANCH = "branch"
    RETURN = "return"
    BARRIER = "barrier"


@dataclass
class BasicBlock:
    label: str
    instructions: list[Instruction] = field(default_factory=list)
    terminator: Terminator = Terminator.FALLTHROUGH

    @property
    def branch(self) -> Instruction | None:
        if self.terminator == Terminator.BRANCH:
            return self.instructions[-1]
        return None

    def body(self) -> list[Instruction]:
        """Instructions excluding a trailing BRA/RET/BAR terminator."""
        if self.instructions and self.instructions[-1].opcode in (
            Opcode.BRA, Opcode.RET, Opcode.BAR
        ):
            return self.instructions[:-1]
        return list(self.instructions)


@dataclass
class Kernel:
    name: str
    param_bytes: int
    num_regs: int
    blocks: list[BasicBlock]
    entry: str = ""

    def __post_init__(self):
        if not self.entry and self.blocks:
            self.entry = self.blocks[0].label

    def block(self, label: str) -> BasicBlock:
        for b in self.blocks:
            if b.label == label:
                return b
        raise KeyError(label)

    def block_index(self, label: str) -> int:
        for i, b in enumerate(self.blocks):
            if b.label == label:
                return i
        raise KeyError(label)

    def successors(self, b: BasicBlock) -> list[str]:
        idx = self.block_index(b.label)
        fall = self.blocks[idx + 1].label if idx + 1 < len(self.blocks) else None
        if b.terminator == Terminator.RETURN:
            return []
        if b.terminator == Terminator.BRANCH:
            br = b.instructions[-1]
            if br.guard is None:
                return [br.target]
            return [br.target] + ([fall] if fall else [])
        return [fall] if fall else []

    def control_edges(self) -> list[tuple[str, str]]:
        """CDFG control edges including virtual entry and exit arcs."""
        edges = [(ENTRY, self.entry)]
        for b in self.blocks:
            for s in self.successors(b):
                edges.append((b.label, s))
            if b.terminator == Terminator.RETURN:
                edges.append((b.label, EXIT))
        return edges

    def __eq__(self, other):
        if not isinstance(other, Kernel):
            return NotImplemented
        return (
            self.name == other.name
            and self.param_bytes == other.param_bytes
            and self.num_regs == other.num_regs
            and self.entry == other.entry
            and [(b.label, b.instructions, b.terminator) for b in self.blocks]
            == [(b.label, b.instructions, b.terminator) for b in other.blocks]
        )


@dataclass(frozen=True)
class LaunchConfig:
    """One kernel launch: a grid of identical CTAs of `cta_size` threads."""

    cta_size: int
    grid_size: int
    params: bytes = b""

    def __post_init__(self):
        if self.cta_size < 1:
            raise ValueError("CTA size must be >= 1")
        if self.grid_size < 1:
            raise ValueError("grid size must be >= 1")


def reg_id(op: Reg | PredReg) -> int:
    """Flat register id used in liveness sets and 34-bit metadata bitmaps."""
    if isinstance(op, Reg):
        return op.index
    return PRED_BASE + op.index
