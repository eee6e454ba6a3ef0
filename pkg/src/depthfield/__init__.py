"""depthfield: simulate, capture, and post-process 4D albedo+phase fields
from time-of-flight camera arrays.

The central object is the DepthField: an (albedo, phase) pair sampled over
two view coordinates and two pixel coordinates.  The package covers the
pipeline end to end: synthetic scene rendering, quadrature inversion,
synthetic-aperture refocusing, correspondence-based phase unwrapping,
occluder-robust refocusing, and multiplexed single-shot capture inversion.
"""

from .core import (CameraArrayConfig, DataFormatError, DepthField,
                   DepthFieldError, DepthMap, NumericalError, PhaseOffsets,
                   QuadratureStack, QUADRATURE_OFFSETS, SPEED_OF_LIGHT,
                   depth_to_phase, phase_distance, phase_to_depth,
                   wrap_phase)
from .dfz import read_dfz, read_header, write_dfz
from .lightfield import (CorrespondenceResult, RefocusResult, Shear,
                         candidates_for_depth_range,
                         depth_from_correspondence, refocus, shear_field)
from .multiplex import (ModulationMatrix, forward_multiplex,
                        invert_multiplex, pinhole_matrix,
                        random_binary_matrix, random_gaussian_matrix)
from .occlusion import (cluster_depths, depth_histogram,
                        refocus_without_foreground)
from .scenes import Scene
from .simulator import (NoiseModel, quadrature_from_field,
                        render_ground_truth, render_quadrature)
from .tof import invert_quadrature, simulate_wrapping, to_depth_map
from .unwrap import (CalibrationLine, median_filter_map, unwrap_per_pixel,
                     unwrap_with_line)

__version__ = "0.1.0"
