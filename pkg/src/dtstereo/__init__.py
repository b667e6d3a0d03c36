"""Trainable stereo matching with recurrent domain-transform aggregation."""

from .costvol import (CostParams, build_cost_volume, build_cost_volume_right,
                      census_transform, hamming, sad_cost)
from .dtfilter import (DtParams, WeightMaps, dt_1d, dt_2d, energy_to_weights,
                       filter_cost_volume)
from .dtgrad import (Dt1dTape, DtTape, dt_1d_backward, dt_2d_backward,
                     energy_to_weights_backward, filter_volume_backward,
                     record_dt_1d, record_dt_2d, record_filter_volume)
from .evalbench import EvalReport, TimingReport, bad_pixel_rate, benchmark
from .imgio import (CONSISTENT, MISMATCH, OCCLUDED, DisparityMap, FormatError,
                    StereoPair, load_disparity_kitti, load_image,
                    save_disparity, save_image, to_grayscale)
from .matcher import (LossReport, PipelineConfig, fill_invalid, lr_check,
                      match, softmax_xent_loss, wta)
from .predictor import (PredictorParams, bilinear_upsample,
                        bilinear_upsample_backward, init_params,
                        load_checkpoint, predictor_backward,
                        predictor_forward, save_checkpoint)
from .trainer import AdamState, TrainConfig, adam_step, train, train_step

__version__ = "0.1.0"
