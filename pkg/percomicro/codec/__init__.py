from percomicro.codec.denoiser import Denoiser, ResBlock, timestep_embedding
from percomicro.codec.encoder import HyperEncoder
from percomicro.codec.model import CodecModel, drop_global, upsample_bilinear
from percomicro.codec.quantizers import (BaseQuantizer, FSQQuantizer,
                                         VQQuantizer, get_quantizer)
from percomicro.codec.trainer import (StepReport, TrainConfig, Trainer,
                                      load_model, make_optimizer,
                                      model_classes, training_step)
