"""Confined-output inverse metasurface designer (C++ core)."""

from ._core import (
    CODE_BITS,
    INPUT_WIDTH,
    DivergenceError,
    FormatError,
    Model,
    UsageError,
    assemble_input,
    compose,
    decode_bits,
    decode_soft,
    encode_bits,
    extract_notches,
    frequencies,
    generate_dataset,
    notch_params,
    reflection_spectrum,
    render,
    target_of_cell,
    tile_pattern,
    train,
    verify_design,
)

__all__ = [
    "CODE_BITS",
    "INPUT_WIDTH",
    "DivergenceError",
    "FormatError",
    "Model",
    "UsageError",
    "assemble_input",
    "compose",
    "decode_bits",
    "decode_soft",
    "encode_bits",
    "extract_notches",
    "frequencies",
    "generate_dataset",
    "notch_params",
    "reflection_spectrum",
    "render",
    "target_of_cell",
    "tile_pattern",
    "train",
    "verify_design",
]
