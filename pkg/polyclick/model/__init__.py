from polyclick.model.core import (DensityMatrix, JumpTerm, LindbladSystem, SpectralDecomposition, Superoperator,
                                  decompose, dissipator, measured_liouvillian, measurement_superops, steady_state)
from polyclick.model.emitter import EmitterParams, build_emitter_liouvillian, build_telegraph_system

__all__ = ["DensityMatrix", "JumpTerm", "LindbladSystem", "SpectralDecomposition", "Superoperator",
           "decompose", "dissipator", "measured_liouvillian", "measurement_superops", "steady_state",
           "EmitterParams", "build_emitter_liouvillian", "build_telegraph_system"]
