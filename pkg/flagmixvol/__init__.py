from .MultiVector import MultiVector, Subspace, TiaBasis
from .Grassmann import MCConfig, MCEstimate, Grassmann, MonteCarlo, NonFiniteSampleError
from .Constants import Constants, Provenance
from .Check import Check
from .Flag import Flag
from .PhiTable import PhiTable
from .Polytope import Polytope, FaceData
from .Ball import Ball
from .FlagMeasure import FlagMeasure
from .MixedVolume import MixedVolume, MixedVolumeRequest, Mode, DivergenceScan, PreconditionError
from .Oracle import Oracle, OracleResult
