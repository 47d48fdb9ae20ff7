#include "rdnet/trainer.hpp"

#include <cmath>
#include <limits>

#include "rdnet/adam.hpp"
#include "rdnet/errors.hpp"
#include "rdnet/rng.hpp"

namespace rdnet {

TrainResult train(ModelParams& params, const NetworkConfig& net,
                  const std::vector<TrainSample>& dataset, const TrainConfig& cfg,
                  std::ostream* loss_log, const std::string& checkpoint_path) {
  if (cfg.batch_size != 1)
    throw DataError("train: batch size is fixed at 1, got " + std::to_string(cfg.batch_size));
  if (dataset.empty()) throw DataError("train: empty dataset");
  validate_config(net);

  const auto grid = grid_dims(net);
  const auto rates = downsampling_rates(net);
  std::vector<TargetField> targets;
  targets.reserve(dataset.size());
  for (const auto& s : dataset)
    targets.push_back(make_target(s.boxes, grid, rates, net.structures));

  auto tensors = params.tensors();
  AdamState adam;
  Rng order_rng(cfg.seed ^ 0x5affe11eULL);
  Rng dropout_rng(cfg.seed ^ 0xd20f0d1ULL);

  TrainResult res;
  std::vector<std::size_t> order(dataset.size());
  std::size_t cursor = order.size();  // forces a shuffle on the first step
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int step = 0; step < cfg.max_steps; ++step) {
    if (cursor == order.size()) {
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[std::size_t(order_rng.next_below(i))]);
      cursor = 0;
    }
    const auto& sample = dataset[order[cursor]];
    const auto& target = targets[order[cursor]];
    ++cursor;

    auto field = model_forward(params, net, sample.volume, true, &dropout_rng);
    auto terms = loss_total(field, target);
    const LossReport report = terms.report();
    if (!std::isfinite(report.l_total))
      throw NumericalError("train: non-finite loss at step " + std::to_string(step) +
                           (checkpoint_path.empty() ? "" : "; last checkpoint retained at " +
                                                              checkpoint_path));
    for (auto& t : tensors) t.zero_grad();
    terms.total.backward();
    adam_step(tensors, adam, cfg.learning_rate);

    res.history.push_back(report);
    ++res.steps_run;
    if (loss_log)
      *loss_log << step << ' ' << report.l_p << ' ' << report.l_c << ' ' << report.l_s << ' '
                << report.l_total << '\n';

    if (!checkpoint_path.empty() && cfg.checkpoint_every > 0 &&
        (step + 1) % cfg.checkpoint_every == 0)
      io::save_checkpoint(checkpoint_path, net, params);

    if (report.l_total < best - cfg.min_delta) {
      best = report.l_total;
      since_best = 0;
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      res.early_stopped = true;
      break;
    }
  }
  if (!checkpoint_path.empty() && res.steps_run > 0)
    io::save_checkpoint(checkpoint_path, net, params);
  return res;
}

}  // namespace rdnet
