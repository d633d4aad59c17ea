#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include "vafnet/data.hpp"
#include "vafnet/network.hpp"
#include "vafnet/optim.hpp"
#include "vafnet/rng.hpp"

namespace vafnet {

inline constexpr std::size_t kDefaultPatience = 25;

struct TrainConfig {
  std::size_t max_epochs = 300;
  std::size_t patience = kDefaultPatience;
  OptimizerState optimizer = Rprop{};
  // 0 means full batch.
  std::size_t batch_size = 0;
  std::uint64_t seed = 0;
};

// Errors are loss_sse over the whole train / validation set after each
// epoch. best_epoch is 1-based and names the first epoch reaching the minimum.
struct TrainTrace {
  std::vector<double> error_train;
  std::vector<double> error_val;
  std::size_t best_epoch = 0;
  double best_val_error = std::numeric_limits<double>::infinity();
  bool stopped_early = false;

  std::size_t epochs() const { return error_val.size(); }
};

// Stops once the validation error has failed to strictly improve for
// `patience` consecutive epochs.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience);

  // Returns true when `error_val` is a new minimum.
  bool observe(double error_val);
  bool should_stop() const { return since_improvement_ >= patience_; }
  double best() const { return best_; }

 private:
  std::size_t patience_;
  std::size_t since_improvement_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

struct EpochErrors {
  double train;
  double val;
};

// The epoch loop, independent of what an epoch does. `run_epoch(n)` performs
// epoch n (1-based) and reports the errors afterwards; `on_best(n)` fires
// whenever epoch n sets a new validation minimum.
TrainTrace run_schedule(std::size_t max_epochs, std::size_t patience,
                        const std::function<EpochErrors(std::size_t)>& run_epoch,
                        const std::function<void(std::size_t)>& on_best);

// One pass over `data` in the given row order.
void epoch_in_order(Network& net, const Dataset& data, OptimizerState& optimizer,
                    std::size_t batch_size, std::span<const std::size_t> order);

// Full batch when batch_size is 0 or >= N; otherwise rows are shuffled with
// `rng` and consumed in batches (the last one may be short).
void epoch(Network& net, const Dataset& data, OptimizerState& optimizer, std::size_t batch_size,
           Rng& rng);

struct TrainResult {
  Network best;
  TrainTrace trace;
};

// Trains a copy of `net` and returns the snapshot with the lowest validation
// error. Throws DivergenceError (carrying the epoch) on a non-finite loss or
// gradient.
TrainResult train(const Network& net, const Dataset& train_set, const Dataset& val_set,
                  const TrainConfig& cfg);

// epoch,errorT,errorV
void write_trace_csv(const TrainTrace& trace, std::ostream& out);

}  // namespace vafnet
