"""Fault-tolerant cluster-state generation with emitter arrays and delay lines."""
__version__ = "0.1.0"

from .circuit import Circuit, Instruction, parse_circuit
from .compiler import compile_named, verify_cluster_state
from .decoder import BatchDecoder, brute_force_match, decode, dem_to_matching
from .dem import DetectorErrorModel, build_dem, fault_table
from .lattice import build_rhg, emission_order, partition_slabs
from .noise import NoiseSpec, attach_noise

__all__ = [
    "Circuit", "Instruction", "parse_circuit", "compile_named", "verify_cluster_state",
    "BatchDecoder", "brute_force_match", "decode", "dem_to_matching",
    "DetectorErrorModel", "build_dem", "fault_table",
    "build_rhg", "emission_order", "partition_slabs", "NoiseSpec", "attach_noise",
]
