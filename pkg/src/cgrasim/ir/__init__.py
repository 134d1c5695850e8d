from .types import (
    ENTRY,
    EXIT,
    NUM_PRED_REGS,
    NUM_REGS,
    PRED_BASE,
    BasicBlock,
    Cmp,
    Guard,
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
    reg_id,
)
from .parser import ParseError, format_instruction, parse_kernel, print_kernel
from .cdfg import Cdfg, build_cdfg, instr_defs, instr_uses, point_liveness
from .interp import (
    BaselineRf,
    ThreadState,
    TrapError,
    count_baseline_rf,
    interpret_thread,
    run_all_threads,
)
from .memimage import MemoryImage

__all__ = [
    "ENTRY", "EXIT", "NUM_PRED_REGS", "NUM_REGS", "PRED_BASE",
    "BasicBlock", "Cmp", "Guard", "Imm", "Instruction", "Kernel",
    "LaunchConfig", "Opcode", "PredReg", "Reg", "Space", "Special",
    "Terminator", "reg_id",
    "ParseError", "format_instruction", "parse_kernel", "print_kernel",
    "Cdfg", "build_cdfg", "instr_defs", "instr_uses", "point_liveness",
    "BaselineRf", "ThreadState", "TrapError", "count_baseline_rf",
    "interpret_thread", "run_all_threads",
    "MemoryImage",
]
