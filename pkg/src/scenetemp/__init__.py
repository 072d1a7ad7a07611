"""scenetemp: ambient temperature estimation from outdoor scene images.

A self-contained numpy toolkit: temperature label encodings, a CNN
classifier and a CNN+LSTM sequence forecaster with hand-written
backpropagation, dataset machinery with leakage-safe splits, a synthetic
scene generator, an RMSE evaluation grid, and block-variation saliency
maps.
"""

from .dataset import (HourSlotPick, ImageRecord, SequenceSample,
                      build_sequences, crop_region, load_inputs,
                      load_manifest, select_hour_slot, split_sequence,
                      split_single_image)
from .encoding import (DEFAULT_SCALE, TemperatureScale, decode,
                       encode_lde, encode_one_hot, temp_to_index)
from .errors import (CheckpointError, DataError, EmptyRegionError,
                     FormatError, IntegrityError, NumericError, ShapeError,
                     VersionError)
from .evaluation import (EvalReport, SampleResult, baseline_climatology,
                         baseline_persistence, compare_regions, decode_batch,
                         eval_sequence, eval_single, export_curve,
                         predict_sequence, predict_single, rmse,
                         sweep_hours, sweep_sequence_length)
from .imageio import (load_image, load_mask, load_masks, resize_bilinear,
                      save_image)
from .nn import (Adam, CnnModel, GradCheckReport, LstmCell, SequenceModel,
                 cross_entropy, grad_check, sequence_sum_squares)
from .saliency import VariationMap, block_variation_map, render_map
from .synth import SynthConfig, synth_generate
from .training import (Checkpoint, TrainConfig, build_model,
                       load_checkpoint, save_checkpoint, train_sequence,
                       train_single)

__version__ = "0.1.0"
