"""Streaming long-run variance estimation with LASER windows."""
from .oracles import (
    BartlettWindow,
    LaserWindow,
    PsrWindow,
    bartlett,
    obm,
    quadratic_form,
    welford,
    window_matrix,
    window_weight,
)
from .stream import LaserConfig, LaserStream, config_schedule, held_schedule, run, schedule
from .ramping import RampedLaser
from .minibatch import MiniBatchLaser, block_starts, split_blocks, stride_checkpoints
from .nuisance import (
    AutoLaser,
    NuisanceStream,
    OptimalParams,
    amse_constant,
    ancillary_schedule,
    kappa,
    make_estimator,
    optimal_params,
    oracle_config,
    psi_star,
    theta_star,
)
from .batched import BatchLaser
from .multivariate import LrcmStream, PdAdjustment, pd_adjust
from .inference import (
    CpMonitor,
    SasaConfig,
    SasaController,
    cp_statistic,
    halfwidth_stop,
    normal_quantile,
    run_halfwidth,
    sasa_step,
    terminal_n,
)
from .simgen import MODELS, Arma, Bilinear, Fgn, gen, gen_many, replicate_seeds, true_targets

__version__ = "0.1.0"
