"""Simulation and verification laboratory for self-similar Markov trees.

Decorated random trees are built from a characteristic quadruplet;
local-time measures on decoration level sets, spine laws, harmonic-measure
proxies and the excursion point-process structure are computed and checked
against their closed-form means and distributional identities.
"""

from .builder import (
    BranchEvent,
    CharacteristicQuadruplet,
    CumulantAnalysis,
    DecoratedTree,
    analyze_cumulant,
    build_tree,
    cumulant,
    spine_reference_characteristics,
    weighted_length,
)
from .excursions import (
    ExcursionProcess,
    LevelTree,
    MarkedExcursion,
    build_excursion_process,
    build_level_tree,
    decompose_excursions,
    estimate_excursion_measure,
    reconstruct_level_tree,
)
from .harness import ExperimentConfig, RunReport, canonical_config, run
from .lamperti import PssmpPath, from_pssmp, to_pssmp, transfer_local_time
from .levels import (
    HittingLine,
    TreeLevelMeasure,
    convergence_diagnostics,
    harmonic_mass_proxy,
    hitting_line,
    level_local_time,
    mean_local_time_formula,
    potential_w,
)
from .levy import (
    BV,
    DIFFUSION,
    EXACT,
    LevyCharacteristics,
    LocalTimeProfile,
    PathSkeleton,
    PotentialTable,
    cramer_root,
    esscher_tilt,
    evaluate_exponent,
    hitting_probability,
    local_time,
    occupation_check,
    potential_density,
    reverse_path,
    sample_conditioned,
    sample_path,
)
from .spine import SpineSample, reference_spine_sampler, sample_marked_point

__version__ = "0.1.0"
