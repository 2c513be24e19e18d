from percomicro.diffusion.schedule import NoiseSchedule, make_linear_schedule
from percomicro.diffusion.param import (BasePrediction, EpsilonPrediction,
                                        VPrediction, forward_marginal,
                                        forward_step, get_prediction,
                                        loss_simple, v_from_x0_eps,
                                        x0_eps_from_v)
from percomicro.diffusion.samplers import (SamplerConfig, auto_steps,
                                           cfg_combine, ddim_step, ddpm_step,
                                           sample, sampler_timesteps)
