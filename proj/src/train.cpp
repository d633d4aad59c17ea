#include "vafnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>

#include "vafnet/errors.hpp"
#include "vafnet/format.hpp"

namespace vafnet {
namespace {

void check_compatible(const Network& net, const Dataset& ds, const char* which) {
  if (ds.input_dim() != net.input_dim() || ds.output_dim() != net.output_dim()) {
    throw InputError(std::string(which) + " set is " + std::to_string(ds.input_dim()) + "->" +
                     std::to_string(ds.output_dim()) + " but the network is " +
                     std::to_string(net.input_dim()) + "->" + std::to_string(net.output_dim()));
  }
}

void batch_step(Network& net, const Matrix& x, const Matrix& t, OptimizerState& optimizer) {
  auto fwd = forward(net, x);
  const auto grads = backward(net, fwd.tape, loss_sse_grad(fwd.output, t)).flatten();
  auto params = net.flatten_params();
  step(optimizer, params, grads);
  net.set_params(params);
}

}  // namespace

EarlyStopping::EarlyStopping(std::size_t patience) : patience_(patience) {
  if (patience_ == 0) throw InputError("patience must be >= 1");
}

bool EarlyStopping::observe(double error_val) {
  if (error_val < best_) {
    best_ = error_val;
    since_improvement_ = 0;
    return true;
  }
  ++since_improvement_;
  return false;
}

TrainTrace run_schedule(std::size_t max_epochs, std::size_t patience,
                        const std::function<EpochErrors(std::size_t)>& run_epoch,
                        const std::function<void(std::size_t)>& on_best) {
  if (max_epochs == 0) throw InputError("max_epochs must be >= 1");
  EarlyStopping stopper(patience);
  TrainTrace trace;
  for (std::size_t n = 1; n <= max_epochs; ++n) {
    const auto errors = run_epoch(n);
    if (!std::isfinite(errors.train) || !std::isfinite(errors.val)) {
      throw DivergenceError("non-finite loss at epoch " + std::to_string(n), n);
    }
    trace.error_train.push_back(errors.train);
    trace.error_val.push_back(errors.val);
    if (stopper.observe(errors.val)) {
      trace.best_epoch = n;
      trace.best_val_error = errors.val;
      on_best(n);
    }
    if (stopper.should_stop() && n < max_epochs) {
      trace.stopped_early = true;
      break;
    }
  }
  return trace;
}

void epoch_in_order(Network& net, const Dataset& data, OptimizerState& optimizer,
                    std::size_t batch_size, std::span<const std::size_t> order) {
  if (order.size() != data.size())
    throw ShapeError("epoch order has " + std::to_string(order.size()) + " entries for " +
                     std::to_string(data.size()) + " rows");
  const std::size_t n = data.size();
  const std::size_t bs = batch_size == 0 ? n : std::min(batch_size, n);
  for (std::size_t start = 0; start < n; start += bs) {
    const auto idx = order.subspan(start, std::min(bs, n - start));
    batch_step(net, select_rows(data.x, idx), select_rows(data.t, idx), optimizer);
  }
}

void epoch(Network& net, const Dataset& data, OptimizerState& optimizer, std::size_t batch_size,
           Rng& rng) {
  if (batch_size == 0 || batch_size >= data.size()) {
    batch_step(net, data.x, data.t, optimizer);
    return;
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  epoch_in_order(net, data, optimizer, batch_size, order);
}

TrainResult train(const Network& net, const Dataset& train_set, const Dataset& val_set,
                  const TrainConfig& cfg) {
  check_compatible(net, train_set, "training");
  check_compatible(net, val_set, "validation");

  Network current = net;
  std::optional<Network> best;
  OptimizerState optimizer = reset(cfg.optimizer);
  Rng rng(cfg.seed);

  auto run_epoch = [&](std::size_t n) {
    try {
      epoch(current, train_set, optimizer, cfg.batch_size, rng);
    } catch (const DivergenceError& e) {
      throw DivergenceError("divergence at epoch " + std::to_string(n) + ": " + e.what(), n);
    }
    return EpochErrors{loss_sse(predict(current, train_set.x), train_set.t),
                       loss_sse(predict(current, val_set.x), val_set.t)};
  };
  auto trace = run_schedule(cfg.max_epochs, cfg.patience, run_epoch,
                            [&](std::size_t) { best = current; });
  return {std::move(*best), std::move(trace)};
}

void write_trace_csv(const TrainTrace& trace, std::ostream& out) {
  out << "epoch,errorT,errorV\n";
  for (std::size_t i = 0; i < trace.epochs(); ++i) {
    out << (i + 1) << ',' << format_real(trace.error_train[i]) << ','
        << format_real(trace.error_val[i]) << '\n';
  }
}

}  // namespace vafnet
