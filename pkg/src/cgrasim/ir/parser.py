"""Parser and printer for the textual kernel IR.

Format (one instruction per line, `#` starts a comment):

    .kernel <name> .params <n_words> .regs <n_regs>
    label:
        OPCODE dst, src1[, src2[, src3]] [@pN | @!pN]
        SETP.<CMP>[.F] pN, src1, src2
        CVT.I2F / CVT.F2I rD, src
        LD.GLOBAL rD, [rA + imm]     LD.SHARED rD, [rA]     LD.PARAM rD, [imm]
        ST.GLOBAL [rA + imm], rS     ST.SHARED [rA], rS
        BRA label [@pN | @!pN]
        BAR
        RET

Sources may be registers (rN), predicate registers (pN, SELP only),
immediates (decimal, hex, or float literals stored as f32 bit patterns), or
special registers (TID_X/Y/Z, CTAID_X/Y/Z, NTID_X/Y/Z). A BAR ends its basic
block; a label or branch starts/ends one as usual.
"""

from __future__ import annotations

import re

from .types import (
    NUM_PRED_REGS,
    NUM_REGS,
    SPECIAL_NAMES,
    BasicBlock,
    Cmp,
    Guard,
    Imm,
    Instruction,
    Kernel,
    Opcode,
    PredReg,
    Reg,
    Space,
    Special,
    Terminator,
)
from . import ops


class ParseError(ValueError):
    def __init__(self, msg: str, line: int, col: int = 1):
        super().__init__(f"line {line}, col {col}: {msg}")
        self.line = line
        self.col = col


_HEADER_RE = re.compile(
    r"^\.kernel\s+(?P<name>[A-Za-z_][\w.]*)\s+\.params\s+(?P<params>\d+)\s+\.regs\s+(?P<regs>\d+)$"
)
_LABEL_RE = re.compile(r"^([A-Za-z_][\w.]*):$")
_GUARD_RE = re.compile(r"@(!?)p(\d+)\s*$")
_INT = r"-?(?:0x[0-9a-fA-F]+|\d+)"
_MEM_RE = re.compile(rf"^\[\s*(?:(r\d+)(?:\s*\+\s*({_INT}))?|({_INT}))\s*\]$")


def _parse_int(tok: str) -> int:
    return int(tok, 0)


def _parse_operand(tok: str, lineno: int, num_regs: int):
    tok = tok.strip()
    m = re.fullmatch(r"r(\d+)", tok)
    if m:
        idx = int(m.group(1))
        if idx >= num_regs:
            raise ParseError(f"register r{idx} out of range (kernel declares {num_regs})", lineno)
        return Reg(idx)
    m = re.fullmatch(r"p(\d+)", tok)
    if m:
        idx = int(m.group(1))
        if idx >= NUM_PRED_REGS:
            raise ParseError(f"predicate p{idx} out of range (max {NUM_PRED_REGS})", lineno)
        return PredReg(idx)
    if tok in SPECIAL_NAMES:
        return Special(tok)
    if re.fullmatch(r"-?(0x[0-9a-fA-F]+|\d+)", tok):
        return Imm(_parse_int(tok) & ops.MASK32)
    if re.fullmatch(r"-?(\d+\.\d*|\.\d+|\d+)([eE]-?\d+)?", tok) or tok in ("inf", "-inf", "nan"):
        return Imm(ops.f2u(float(tok)))
    raise ParseError(f"bad operand {tok!r}", lineno)


def _split_operands(rest: str) -> list[str]:
    return [p.strip() for p in rest.split(",")] if rest.strip() else []


def _parse_mem_operand(tok: str, lineno: int, num_regs: int) -> tuple[Reg | None, int]:
    m = _MEM_RE.match(tok.strip())
    if not m:
        raise ParseError(f"bad memory operand {tok!r}", lineno)
    base = None
    if m.group(1):
        base = _parse_operand(m.group(1), lineno, num_regs)
    off_tok = m.group(2) or m.group(3)
    off = _parse_int(off_tok) if off_tok else 0
    return base, off


def parse_kernel(text: str) -> Kernel:
    """Parse IR source into a Kernel with resolved labels.

    Raises ParseError on syntax errors, undefined labels, or register
    indices outside the declared range.
    """
    name = None
    param_words = 0
    num_regs = NUM_REGS
    blocks: list[BasicBlock] = []
    current: BasicBlock | None = None
    anon = 0

    def open_block(label=None):
        nonlocal current, anon
        if label is None:
            label = f"__b{anon}"
            anon += 1
        current = BasicBlock(label)
        blocks.append(current)

    def close_block(term: Terminator):
        nonlocal current
        if current is not None:
            current.terminator = term
        current = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue

        if line.startswith(".kernel"):
            m = _HEADER_RE.match(line)
            if not m:
                raise ParseError("malformed kernel header", lineno)
            if name is not None:
                raise ParseError("duplicate kernel header", lineno)
            name = m.group("name")
            param_words = int(m.group("params"))
            num_regs = int(m.group("regs"))
            if num_regs > NUM_REGS:
                raise ParseError(f".regs {num_regs} exceeds machine limit {NUM_REGS}", lineno)
            continue

        if name is None:
            raise ParseError("instruction before .kernel header", lineno)

        m = _LABEL_RE.match(line)
        if m:
            close_block(Terminator.FALLTHROUGH)
            open_block(m.group(1))
            if any(b.label == m.group(1) for b in blocks[:-1]):
                raise ParseError(f"duplicate label {m.group(1)!r}", lineno)
            continue

        if current is None:
            open_block()

        guard = None
        gm = _GUARD_RE.search(line)
        if gm:
            gidx = int(gm.group(2))
            if gidx >= NUM_PRED_REGS:
                raise ParseError(f"predicate p{gidx} out of range", lineno)
            guard = Guard(gidx, gm.group(1) != "!")
            line = line[: gm.start()].strip()

        parts = line.split(None, 1)
        mnemonic = parts[0].upper()
        rest = parts[1] if len(parts) > 1 else ""
        instr = _parse_instruction(mnemonic, rest, guard, lineno, num_regs)
        current.instructions.append(instr)

        if instr.opcode == Opcode.BRA:
            close_block(Terminator.BRANCH)
        elif instr.opcode == Opcode.RET:
            close_block(Terminator.RETURN)
        elif instr.opcode == Opcode.BAR:
            close_block(Terminator.BARRIER)

    if name is None:
        raise ParseError("missing .kernel header", 1)
    if current is not None:
        if current.instructions:
            raise ParseError(f"block {current.label!r} does not end in RET, BRA, or BAR fallthrough", lineno)
        blocks.remove(current)
    if not blocks:
        raise ParseError("kernel has no instructions", 1)

    kernel = Kernel(name, param_words * 4, num_regs, blocks)
    _validate(kernel)
    return kernel


def _parse_instruction(mnemonic: str, rest: str, guard, lineno: int, num_regs: int) -> Instruction:
    dotted = mnemonic.split(".")
    base = dotted[0]

    if base in ("BAR", "RET"):
        if guard is not None:
            raise ParseError(f"{base} cannot be predicated", lineno)
        if rest.strip():
            raise ParseError(f"{base} takes no operands", lineno)
        return Instruction(Opcode[base], line=lineno)

    if base == "BRA":
        target = rest.strip()
        if not re.fullmatch(r"[A-Za-z_][\w.]*", target or ""):
            raise ParseError("BRA requires a target label", lineno)
        return Instruction(Opcode.BRA, guard=guard, target=target, line=lineno)

    if base == "LD":
        if len(dotted) != 2 or dotted[1] not in Space.__members__:
            raise ParseError("LD requires a space suffix (.GLOBAL/.SHARED/.PARAM)", lineno)
        space = Space[dotted[1]]
        toks = _split_operands(rest)
        if len(toks) != 2:
            raise ParseError("LD takes `rD, [addr]`", lineno)
        dst = _parse_operand(toks[0], lineno, num_regs)
        if not isinstance(dst, Reg):
            raise ParseError("LD destination must be a GPR", lineno)
        base_reg, off = _parse_mem_operand(toks[1], lineno, num_regs)
        if space == Space.PARAM and base_reg is not None:
            raise ParseError("LD.PARAM address must be an immediate offset", lineno)
        if space != Space.PARAM and base_reg is None:
            raise ParseError("LD address needs a base register", lineno)
        srcs = (base_reg,) if base_reg is not None else ()
        return Instruction(Opcode.LD, dst=dst, srcs=srcs, guard=guard,
                           space=space, offset=off, line=lineno)

    if base == "ST":
        if len(dotted) != 2 or dotted[1] not in ("GLOBAL", "SHARED"):
            raise ParseError("ST requires .GLOBAL or .SHARED", lineno)
        space = Space[dotted[1]]
        toks = _split_operands(rest)
        if len(toks) != 2:
            raise ParseError("ST takes `[addr], rS`", lineno)
        base_reg, off = _parse_mem_operand(toks[0], lineno, num_regs)
        if base_reg is None:
            raise ParseError("ST address needs a base register", lineno)
        val = _parse_operand(toks[1], lineno, num_regs)
        if not isinstance(val, Reg):
            raise ParseError("ST value must be a GPR", lineno)
        return Instruction(Opcode.ST, srcs=(base_reg, val), guard=guard,
                           space=space, offset=off, line=lineno)

    if base == "SETP":
        if len(dotted) < 2 or dotted[1] not in Cmp.__members__:
            raise ParseError("SETP requires a comparison suffix (.EQ/.NE/.LT/.LE/.GT/.GE)", lineno)
        fcmp = len(dotted) == 3 and dotted[2] == "F"
        if len(dotted) == 3 and not fcmp:
            raise ParseError(f"bad SETP modifier .{dotted[2]}", lineno)
        toks = _split_operands(rest)
        if len(toks) != 3:
            raise ParseError("SETP takes `pD, a, b`", lineno)
        dst = _parse_operand(toks[0], lineno, num_regs)
        if not isinstance(dst, PredReg):
            raise ParseError("SETP destination must be a predicate register", lineno)
        a = _parse_operand(toks[1], lineno, num_regs)
        b = _parse_operand(toks[2], lineno, num_regs)
        return Instruction(Opcode.SETP, dst=dst, srcs=(a, b), guard=guard,
                           cmp=Cmp[dotted[1]], fcmp=fcmp, line=lineno)

    if base == "CVT":
        if len(dotted) != 2 or dotted[1] not in ("I2F", "F2I"):
            raise ParseError("CVT requires .I2F or .F2I", lineno)
        toks = _split_operands(rest)
        if len(toks) != 2:
            raise ParseError("CVT takes `rD, src`", lineno)
        dst = _parse_operand(toks[0], lineno, num_regs)
        if not isinstance(dst, Reg):
            raise ParseError("CVT destination must be a GPR", lineno)
        src = _parse_operand(toks[1], lineno, num_regs)
        return Instruction(Opcode.CVT, dst=dst, srcs=(src,), guard=guard,
                           cvt_to_float=(dotted[1] == "I2F"), line=lineno)

    if base in ("SELP",):
        toks = _split_operands(rest)
        if len(toks) != 4:
            raise ParseError("SELP takes `rD, a, b, pN`", lineno)
        dst = _parse_operand(toks[0], lineno, num_regs)
        a = _parse_operand(toks[1], lineno, num_regs)
        b = _parse_operand(toks[2], lineno, num_regs)
        p = _parse_operand(toks[3], lineno, num_regs)
        if not isinstance(dst, Reg) or not isinstance(p, PredReg):
            raise ParseError("SELP needs a GPR destination and predicate selector", lineno)
        return Instruction(Opcode.SELP, dst=dst, srcs=(a, b, p), guard=guard, line=lineno)

    arity = {"IADD": 2, "ISUB": 2, "IMUL": 2, "IMAD": 3, "FADD": 2,
             "FMUL": 2, "FMA": 3, "FDIV": 2, "SQRT": 1, "EXP": 1, "MOV": 1}
    if base not in arity:
        raise ParseError(f"unknown opcode {mnemonic!r}", lineno)
    toks = _split_operands(rest)
    if len(toks) != arity[base] + 1:
        raise ParseError(f"{base} takes {arity[base] + 1} operands", lineno)
    dst = _parse_operand(toks[0], lineno, num_regs)
    if not isinstance(dst, Reg):
        raise ParseError(f"{base} destination must be a GPR", lineno)
    srcs = tuple(_parse_operand(t, lineno, num_regs) for t in toks[1:])
    for s in srcs:
        if isinstance(s, PredReg):
            raise ParseError(f"{base} cannot read a predicate register", lineno)
    return Instruction(Opcode[base], dst=dst, srcs=srcs, guard=guard, line=lineno)


def _validate(kernel: Kernel):
    labels = {b.label for b in kernel.blocks}
    for b in kernel.blocks:
        for ins in b.instructions:
            if ins.opcode == Opcode.BRA and ins.target not in labels:
                raise ParseError(f"undefined label {ins.target!r}", ins.line)
    # Fallthrough off the end of the last block is a structural error.
    last = kernel.blocks[-1]
    if last.terminator in (Terminator.FALLTHROUGH, Terminator.BARRIER):
        raise ParseError(f"block {last.label!r} falls through past end of kernel",
                         last.instructions[-1].line if last.instructions else 1)
    if last.terminator == Terminator.BRANCH and last.instructions[-1].guard is not None:
        raise ParseError(f"conditional branch in final block {last.label!r} falls off the kernel",
                         last.instructions[-1].line)
    reachable = set()
    work = [kernel.entry]
    while work:
        lbl = work.pop()
        if lbl in reachable:
            continue
        reachable.add(lbl)
        work.extend(kernel.successors(kernel.block(lbl)))
    dead = [b.label for b in kernel.blocks if b.label not in reachable]
    if dead:
        raise ParseError(f"unreachable block(s): {', '.join(dead)}", 1)


def print_kernel(kernel: Kernel) -> str:
    """Render a Kernel back to IR text; parse(print(k)) == k."""
    out = [f".kernel {kernel.name} .params {kernel.param_bytes // 4} .regs {kernel.num_regs}"]
    for b in kernel.blocks:
        out.append(f"{b.label}:")
        for ins in b.instructions:
            out.append(f"  {format_instruction(ins)}")
    return "\n".join(out) + "\n"


def format_instruction(ins: Instruction) -> str:
    g = f" {ins.guard}" if ins.guard else ""
    if ins.opcode == Opcode.BAR:
        return "BAR"
    if ins.opcode == Opcode.RET:
        return "RET"
    if ins.opcode == Opcode.BRA:
        return f"BRA {ins.target}{g}"
    if ins.opcode == Opcode.LD:
        addr = f"[{ins.srcs[0]} + {ins.offset}]" if ins.srcs else f"[{ins.offset}]"
        return f"LD.{ins.space.value} {ins.dst}, {addr}{g}"
    if ins.opcode == Opcode.ST:
        return f"ST.{ins.space.value} [{ins.srcs[0]} + {ins.offset}], {ins.srcs[1]}{g}"
    if ins.opcode == Opcode.SETP:
        suffix = f".{ins.cmp.value}" + (".F" if ins.fcmp else "")
        return f"SETP{suffix} {ins.dst}, {ins.srcs[0]}, {ins.srcs[1]}{g}"
    if ins.opcode == Opcode.CVT:
        suffix = ".I2F" if ins.cvt_to_float else ".F2I"
        return f"CVT{suffix} {ins.dst}, {ins.srcs[0]}{g}"
    operands = ", ".join(str(s) for s in ins.srcs)
    return f"{ins.opcode.value} {ins.dst}, {operands}{g}"
