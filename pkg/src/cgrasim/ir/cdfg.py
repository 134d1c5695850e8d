"""Dataflow annotation over a parsed kernel: intra-block def-use edges and
register liveness across the control graph.

Register ids are flat: 0..31 for GPRs, 32.. for predicate registers.
Guarded instructions may skip their write, so their defs never kill a
pending use from below.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .types import (
    BasicBlock,
    Instruction,
    Kernel,
    Opcode,
    PredReg,
    Reg,
    reg_id,
)


def instr_uses(ins: Instruction) -> set[int]:
    """Flat ids of all registers this instruction reads (guard included)."""
    used = set()
    for s in ins.srcs:
        if isinstance(s, (Reg, PredReg)):
            used.add(reg_id(s))
    if ins.guard is not None:
        used.add(reg_id(PredReg(ins.guard.index)))
    return used


def instr_defs(ins: Instruction) -> set[int]:
    if ins.dst is None:
        return set()
    return {reg_id(ins.dst)}


@dataclass
class DfgEdge:
    """Def-use edge within one basic block."""

    def_index: int
    use_index: int
    reg: int
    load_to_use: bool = False


@dataclass
class BlockInfo:
    edges: list[DfgEdge] = field(default_factory=list)
    live_in: set[int] = field(default_factory=set)
    live_out: set[int] = field(default_factory=set)


@dataclass
class Cdfg:
    kernel: Kernel
    blocks: dict[str, BlockInfo]
    warnings: list[str]

    def live_in(self, label: str) -> set[int]:
        return self.blocks[label].live_in

    def live_out(self, label: str) -> set[int]:
        return self.blocks[label].live_out


def _block_gen_kill(block: BasicBlock) -> tuple[set[int], set[int]]:
    gen: set[int] = set()
    kill: set[int] = set()
    for ins in block.instructions:
        gen |= instr_uses(ins) - kill
        if ins.guard is None:
            kill |= instr_defs(ins)
    return gen, kill


def build_cdfg(kernel: Kernel) -> Cdfg:
    """Compute def-use edges per block and live-in/out sets by iterative
    backward dataflow. Reads that can reach kernel entry with no prior
    definition are reported as warnings (such registers read as zero).
    """
    infos = {b.label: BlockInfo() for b in kernel.blocks}
    gen_kill = {b.label: _block_gen_kill(b) for b in kernel.blocks}
    succs = {b.label: kernel.successors(b) for b in kernel.blocks}

    changed = True
    while changed:
        changed = False
        for b in reversed(kernel.blocks):
            info = infos[b.label]
            out = set()
            for s in succs[b.label]:
                out |= infos[s].live_in
            gen, kill = gen_kill[b.label]
            new_in = gen | (out - kill)
            if out != info.live_out or new_in != info.live_in:
                info.live_out = out
                info.live_in = new_in
                changed = True

    for b in kernel.blocks:
        infos[b.label].edges = _block_edges(b)

    warnings = [
        f"register {'p%d' % (r - 32) if r >= 32 else 'r%d' % r} may be read before "
        f"first write (treated as zero)"
        for r in sorted(infos[kernel.entry].live_in)
    ]
    return Cdfg(kernel, infos, warnings)


def _block_edges(block: BasicBlock) -> list[DfgEdge]:
    edges = []
    last_def: dict[int, int] = {}
    for i, ins in enumerate(block.instructions):
        for r in sorted(instr_uses(ins)):
            if r in last_def:
                j = last_def[r]
                edges.append(DfgEdge(j, i, r, block.instructions[j].opcode == Opcode.LD))
        for r in instr_defs(ins):
            last_def[r] = i
    return edges


def point_liveness(block: BasicBlock, live_out: set[int]) -> list[set[int]]:
    """live[i] = registers live immediately before instruction i;
    live[len(instructions)] equals live_out."""
    n = len(block.instructions)
    live = [set() for _ in range(n + 1)]
    live[n] = set(live_out)
    for i in range(n - 1, -1, -1):
        ins = block.instructions[i]
        after = set(live[i + 1])
        if ins.guard is None:
            after -= instr_defs(ins)
        live[i] = after | instr_uses(ins)
    return live
