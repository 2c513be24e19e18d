from percomicro.quant.vq import (Codebook, l2_normalize, nearest_codes,
                                 normalize_codes, quantize, straight_through,
                                 vq_losses)
from percomicro.quant.fsq import (FsqConfig, codes_to_digits,
                                  digits_to_indices, fsq_quantize,
                                  indices_to_codes, indices_to_digits,
                                  round_ste)
from percomicro.quant.stats import UsageStats, perplexity, usage_stats
