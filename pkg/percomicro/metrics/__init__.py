from percomicro.metrics.distortion import (MS_SSIM_WEIGHTS, gaussian_window,
                                           ms_ssim, ms_ssim_scales, psnr,
                                           ssim_terms)
from percomicro.metrics.rd import (RDPoint, RDResult, RDSummary,
                                   evaluate_image, format_rd_csv,
                                   format_summary_csv, rd_curve, write_rd_csv,
                                   write_summary_csv)
