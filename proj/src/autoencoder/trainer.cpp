#include "qr/autoencoder/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include <fmt/format.h>

#include "qr/autoencoder/network.hpp"
#include "qr/error.hpp"
#include "qr/kernel/adam.hpp"

namespace qr::ae {
namespace {

void check_nonempty(std::span<const text::TokenSequence> data, const char* what) {
  if (data.empty()) throw Error(fmt::format("train: empty {} set", what));
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].empty()) throw Error(fmt::format("train: {} sequence {} is empty", what, i));
  }
}

std::size_t real_count(const text::TokenSequence& seq) {
  std::size_t n = 0;
  for (auto id : seq.ids) n += id != text::Vocabulary::kPad ? 1 : 0;
  return n;
}

}  // namespace

void validate(const TrainConfig& c) {
  if (c.batch_size == 0) throw Error("train: batch_size must be >= 1");
  if (c.patience == 0) throw Error("train: patience must be >= 1");
  if (c.max_epochs == 0) throw Error("train: max_epochs must be >= 1");
  if (!(c.learning_rate > 0.0)) throw Error("train: learning rate must be positive");
}

std::string format_epoch(const EpochRecord& r) {
  return fmt::format("{}\t{:.9f}\t{:.9f}", r.epoch, r.train_loss, r.dev_loss);
}

bool EarlyStopping::update(double dev_loss) {
  ++epoch_;
  if (dev_loss < best_loss_) {
    best_loss_ = dev_loss;
    best_epoch_ = epoch_;
    epochs_without_improvement_ = 0;
    return true;
  }
  ++epochs_without_improvement_;
  return false;
}

double mean_token_loss(const AutoencoderModel& model, std::span<const text::TokenSequence> data) {
  double loss = 0.0;
  std::size_t tokens = 0;
  for (const auto& seq : data) {
    loss += sequence_loss(model, seq.ids);
    tokens += real_count(seq);
  }
  if (tokens == 0) throw Error("mean_token_loss: no tokens");
  return loss / static_cast<double>(tokens);
}

TrainResult train(AutoencoderModel model, std::span<const text::TokenSequence> corpus,
                  std::span<const text::TokenSequence> dev, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  validate(config);
  check_nonempty(corpus, "training");
  check_nonempty(dev, "dev");

  kernel::Rng rng(config.seed);
  Parameters grads = Parameters::zeros(model.config);
  auto param_ptrs = model.params.tensors();
  const auto grad_ptrs = std::as_const(grads).tensors();
  kernel::AdamState adam(kernel::AdamConfig{.learning_rate = config.learning_rate},
                         std::as_const(model.params).tensors());

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  result.model = model;
  EarlyStopping stopper(config.patience);

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    double epoch_loss = 0.0;
    std::size_t epoch_tokens = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::size_t batch_tokens = 0;
      for (std::size_t b = start; b < end; ++b) batch_tokens += real_count(corpus[order[b]]);
      const double scale = 1.0 / static_cast<double>(batch_tokens);

      grads.set_zero();
      for (std::size_t b = start; b < end; ++b) {
        epoch_loss += loss_and_gradient(model, corpus[order[b]].ids, grads, scale);
      }
      epoch_tokens += batch_tokens;
      if (!std::isfinite(epoch_loss)) {
        throw Error(fmt::format("train: non-finite loss in epoch {} at batch starting {}", epoch, start));
      }
      kernel::adam_step(param_ptrs, grad_ptrs, adam);
    }

    EpochRecord record{epoch, epoch_loss / static_cast<double>(epoch_tokens), mean_token_loss(model, dev)};
    if (!std::isfinite(record.dev_loss)) throw Error(fmt::format("train: non-finite dev loss in epoch {}", epoch));
    result.log.push_back(record);
    if (on_epoch) on_epoch(record);
    if (stopper.update(record.dev_loss)) result.model = model;
    if (stopper.should_stop()) {
      result.early_stopped = true;
      break;
    }
  }
  result.best_epoch = stopper.best_epoch();
  return result;
}

}  // namespace qr::ae
