"""Simulators: stabilizer tableau, Pauli frames and a fast fault-table sampler."""
from .frame import frame_sample, frame_sample_batch, propagate_fault
from .sampler import DemSampler, make_rng, sample_table
from .tableau import Tableau, tableau_run

__all__ = [
    "frame_sample", "frame_sample_batch", "propagate_fault",
    "DemSampler", "make_rng", "sample_table", "Tableau", "tableau_run",
]
