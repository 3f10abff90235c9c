"""Instruction set: encoding, assembler and functional semantics."""

from .asm import Program, assemble, format_inst
from .encoding import DecodedInst, Kind, VTypeState, decode, encode, vsetvl
from .functional import ArchState, Memory, exec_functional, run_functional

__all__ = [
    "ArchState", "DecodedInst", "Kind", "Memory", "Program", "VTypeState",
    "assemble", "decode", "encode", "exec_functional", "format_inst", "run_functional", "vsetvl",
]
