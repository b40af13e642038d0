#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "qr/autoencoder/model.hpp"
#include "qr/text/pipeline.hpp"

namespace qr::ae {

struct TrainConfig {
  std::size_t batch_size = 48;
  double learning_rate = 0.0004;
  std::size_t patience = 3;
  std::size_t max_epochs = 100;
  std::uint64_t seed = 1;
};

void validate(const TrainConfig& config);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean per-token loss over the epoch's updates
  double dev_loss = 0.0;    // mean per-token loss on the dev set after the epoch
};

/// "epoch<TAB>train_loss<TAB>dev_loss"
std::string format_epoch(const EpochRecord& record);

/// Stops after `patience` consecutive epochs without a strict improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  /// Records one epoch's dev loss; returns true when it is a new best.
  bool update(double dev_loss);
  bool should_stop() const { return epochs_without_improvement_ >= patience_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }

 private:
  std::size_t patience_;
  std::size_t epoch_ = 0;
  std::size_t best_epoch_ = 0;
  double best_loss_ = std::numeric_limits<double>::infinity();
  std::size_t epochs_without_improvement_ = 0;
};

struct TrainResult {
  AutoencoderModel model;  // parameters from the best dev epoch
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  bool early_stopped = false;
};

/// Mean per-token reconstruction loss over a set of sequences.
double mean_token_loss(const AutoencoderModel& model, std::span<const text::TokenSequence> data);

/// Mini-batch Adam on the reconstruction loss with early stopping on dev loss.
/// Throws if either set is empty, a sequence is empty, or the loss becomes non-finite.
TrainResult train(AutoencoderModel model, std::span<const text::TokenSequence> corpus,
                  std::span<const text::TokenSequence> dev, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace qr::ae
