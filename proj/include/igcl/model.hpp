#pragma once

// The full model: configuration, encoder and denoiser parameters, the memory
// bank, and the noise schedule. One ModelState is what a checkpoint holds.

#include <string>
#include <utility>
#include <vector>

#include "igcl/config.hpp"
#include "igcl/diffusion.hpp"
#include "igcl/encoder.hpp"
#include "igcl/memory_bank.hpp"
#include "igcl/rng.hpp"

namespace igcl {

struct ModelState {
  TrainConfig config;
  EncoderParams encoder;
  DenoiserParams denoiser;
  MemoryBank bank;
  NoiseSchedule schedule;

  std::vector<std::pair<std::string, Param*>> named_params() {
    std::vector<std::pair<std::string, Param*>> out = encoder.named_params();
    auto den = denoiser.named_params();
    out.insert(out.end(), den.begin(), den.end());
    return out;
  }

  void zero_grads() {
    for (auto& [name, p] : named_params()) p->zero_grad();
  }
};

inline ModelState init_model(const TrainConfig& config, int n_vars, int aux_dim, Rng& rng) {
  config.validate();
  ModelState state;
  state.config = config;
  EncoderConfig ec;
  ec.n_vars = n_vars;
  ec.aux_dim = aux_dim;
  ec.dim = config.dim;
  ec.lookback = config.lookback;
  ec.kernels = config.kernels;
  ec.plain_tcn = config.plain_tcn;
  state.encoder = EncoderParams::init(ec, rng);
  state.denoiser = DenoiserParams::init(config.lookback, rng);
  state.bank.capacity = config.bank_capacity;
  state.bank.literal_windows = config.store_literal_windows;
  state.schedule = make_schedule(config.diffusion_steps, config.beta_min, config.beta_max);
  return state;
}

}  // namespace igcl
