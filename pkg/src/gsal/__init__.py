"""Gamma-kernel visual saliency, foveated imaging, and scanpath simulation.

The package is organized around a small set of building blocks:

* :mod:`gsal.kernels` -- 2D gamma kernels and multiscale center-surround stacks
* :mod:`gsal.saliency` -- bottom-up saliency maps from color images
* :mod:`gsal.foveation` -- space-variant acuity simulation
* :mod:`gsal.fixation` -- saccadic fixation engine with inhibition of return
* :mod:`gsal.topdown` -- feature-map-driven saliency and guided search
* :mod:`gsal.metrics` -- fixation-prediction scores
* :mod:`gsal.dataio` -- images, tensors, manifests, traces, renders
* :mod:`gsal.cli` -- the ``gsal`` command line tool
"""

from gsal.kernels import (
    GammaKernelSpec,
    KernelStack,
    build_kernel,
    build_multiscale,
    default_support_radius,
    peak_ring_radius,
    stack_from_params,
    TORONTO_K,
    TORONTO_MU,
    NATURALISTIC_K,
    NATURALISTIC_MU,
)
from gsal.saliency import (
    LabImage,
    PostProcessParams,
    SaliencyMap,
    channel_saliency,
    compute_saliency,
    post_process,
    rgb_to_lab,
)
from gsal.foveation import FoveationParams, FoveatedImage, build_pyramid, foveate
from gsal.fixation import (
    EngineConfig,
    Fixation,
    FixationTrace,
    ScanSequence,
    estimate_extent,
    inhibit,
    make_scan,
    next_fixation,
    refine_and_segment,
    run_cycle,
)
from gsal.topdown import (
    FeatureMapStack,
    LabeledBox,
    TopDownModel,
    fuse,
    learn_weights,
    raw_map_saliency,
    search,
    topdown_map,
)
from gsal.metrics import (
    FixationSet,
    auc_borji,
    auc_judd,
    correlation,
    density_map,
    iou,
    nss,
    roc_curve,
    similarity,
)
from gsal.config import RunConfig, load_config, dump_config

__version__ = "0.1.0"
