#pragma once

#include <cstdlib>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "peps/checkpoint.hpp"
#include "peps/train.hpp"

namespace peps {

/// Worker-thread budget: min(PEPS_THREADS, hardware concurrency), at
/// least 1. PEPS_THREADS caps every internal parallel section.
inline std::size_t thread_budget() {
  std::size_t n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("PEPS_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap > 0 && static_cast<std::size_t>(cap) < n)
      n = static_cast<std::size_t>(cap);
  }
  return n;
}

struct SweepRun {
  std::string label;
  ExperimentConfig config;
};

struct SweepResult {
  std::string label;
  std::size_t param_count = 0;
  double metric = 0.0;  // PSNR for images/textures, IoU for volumes
  double final_loss = 0.0;
};

/// Trains every configuration against one shared signal. Runs execute in
/// isolated worker threads (each owns its model, optimizer state and RNG),
/// so results do not depend on the worker count.
inline std::vector<SweepResult> run_sweep(const std::vector<SweepRun>& runs,
                                          const SignalDataset& data,
                                          std::size_t workers = 0) {
  if (workers == 0) workers = thread_budget();
  workers = std::min(workers, runs.size() ? runs.size() : std::size_t{1});
  std::vector<SweepResult> results(runs.size());
  std::vector<std::string> failures;
  std::mutex mu;
  std::size_t next = 0;

  auto worker = [&] {
    for (;;) {
      std::size_t idx;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= runs.size()) return;
        idx = next++;
      }
      try {
        const SweepRun& run = runs[idx];
        Model m = build_model(run.config, data.value_dim(),
                              std::max(data.grid_width(), data.grid_height()));
        TrainConfig tc = TrainConfig::from(run.config);
        auto tr = train(m, data, tc);
        m.round_params_to_f32();
        SweepResult r;
        r.label = run.label;
        r.param_count = m.param_count();
        r.metric = detail::quick_metric(m, data);
        r.final_loss = tr.final_loss;
        results[idx] = r;
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(mu);
        failures.push_back(runs[idx].label + ": " + e.what());
      }
    }
  };

  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (!failures.empty()) {
    std::string msg = "sweep runs failed:";
    for (const auto& f : failures) msg += "\n  " + f;
    throw numeric_error(msg);
  }
  return results;
}

}  // namespace peps
