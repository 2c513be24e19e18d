from percomicro.nn.tensor import (Parameter, Tensor, debug_guard, dtype_for,
                                  get_default_dtype, no_grad, precision,
                                  set_default_dtype)
from percomicro.nn import ops
from percomicro.nn.layers import Conv2d, GroupNorm, Linear, Module
from percomicro.nn.optim import AdamW, adamw_step, warmup_lr
from percomicro.nn.checkpoint import read_checkpoint, write_checkpoint
