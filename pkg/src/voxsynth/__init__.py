"""voxsynth: anatomical label volumes -> physical priors -> conditional
diffusion synthesis -> full metric suite, at desk scale.

Subpackages follow the pipeline order:

- ``volumes``   data model, .svol I/O, resampling, intensity windowing
- ``anatomy``   body contours, mask fusion, multi-subject composition, phantoms
- ``priors``    tissue tables and sequence signal models (CT HU, GRE/SPACE/VIBE)
- ``diffusion`` noise schedule, two-channel conditional DDPM, training, sampling
- ``metrics``   SSIM/PSNR/MAE/HistCC/FSIM/Dice/Frechet/Mann-Whitney + reports
- ``cli``       command-line surface with reproducibility manifests
- ``service``   HTTP API backing the browser UI
"""

from . import anatomy, diffusion, metrics, priors, volumes
from .volumes import (
    LabelVolume,
    Modality,
    ScalarVolume,
    denormalize,
    label_volume,
    normalize,
    read_volume,
    resample_axial,
    scalar_volume,
    write_volume,
)

__version__ = "0.1.0"

__all__ = [
    "anatomy",
    "diffusion",
    "metrics",
    "priors",
    "volumes",
    "LabelVolume",
    "ScalarVolume",
    "Modality",
    "label_volume",
    "scalar_volume",
    "read_volume",
    "write_volume",
    "resample_axial",
    "normalize",
    "denormalize",
    "__version__",
]
