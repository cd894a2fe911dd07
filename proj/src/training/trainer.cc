// Copyright 2026 The lossydetect Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lossydetect/training/trainer.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <mutex>
#include <numeric>
#include <optional>
#include <thread>

#include "lossydetect/inference/inference.h"
#include "lossydetect/model/checkpoint.h"
#include "lossydetect/model/network.h"
#include "lossydetect/training/adam.h"
#include "lossydetect/util/errors.h"
#include "lossydetect/util/log.h"
#include "lossydetect/util/thread_pool.h"

namespace lossydetect {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (max_epochs < 1) throw ArgumentError("max_epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ArgumentError("learning_rate must be > 0");
  if (early_stop_patience < 1) throw ArgumentError("early_stop_patience must be >= 1");
  if (mask_probability < 0.0 || mask_probability > 1.0) {
    throw ArgumentError("mask_probability must lie in [0, 1]");
  }
  if (mask_low_hz < 0.0 || mask_low_hz > kNyquistHz) {
    throw ArgumentError("mask_low_hz must lie in [0, 22050]");
  }
  if (workers < 1) throw ArgumentError("workers must be >= 1");
  if (queue_depth < 1) throw ArgumentError("queue_depth must be >= 1");
  if (time_budget_s < 0.0) throw ArgumentError("time_budget_s must be >= 0");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"batch_size", c.batch_size},
       {"max_epochs", c.max_epochs},
       {"learning_rate", c.learning_rate},
       {"early_stop_patience", c.early_stop_patience},
       {"seed", c.seed},
       {"mask_enabled", c.mask_enabled},
       {"mask_probability", c.mask_probability},
       {"mask_low_hz", c.mask_low_hz},
       {"workers", c.workers},
       {"queue_depth", c.queue_depth},
       {"time_budget_s", c.time_budget_s}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  const TrainConfig d;
  c.batch_size = j.value("batch_size", d.batch_size);
  c.max_epochs = j.value("max_epochs", d.max_epochs);
  c.learning_rate = j.value("learning_rate", d.learning_rate);
  c.early_stop_patience = j.value("early_stop_patience", d.early_stop_patience);
  c.seed = j.value("seed", d.seed);
  c.mask_enabled = j.value("mask_enabled", d.mask_enabled);
  c.mask_probability = j.value("mask_probability", d.mask_probability);
  c.mask_low_hz = j.value("mask_low_hz", d.mask_low_hz);
  c.workers = j.value("workers", d.workers);
  c.queue_depth = j.value("queue_depth", d.queue_depth);
  c.time_budget_s = j.value("time_budget_s", d.time_budget_s);
}

Example make_example(const Manifest& manifest, const TrackRecord& record, Rng& rng,
                     const TrainConfig& config) {
  if (record.split == Split::kTest) {
    throw ContractError("training code may not read test record " + record.track_id);
  }
  const AudioClip clip = load_audio(manifest.resolve(record));
  Example ex;
  ex.spectrogram = spectrogram(random_crop(clip, rng));
  ex.label = static_cast<int>(record.label);
  if (config.mask_enabled) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng) < config.mask_probability) {
      ex.mask = apply_random_mask_in_place(ex.spectrogram, rng, config.mask_low_hz);
    }
  }
  return ex;
}

namespace {

struct Batch {
  std::vector<float> input;
  std::vector<int> labels;
  int skipped = 0;
};

// Single-producer single-consumer queue with a fixed capacity.
class BatchQueue {
 public:
  explicit BatchQueue(std::size_t capacity) : capacity_(capacity) {}

  bool push(Batch b) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return q_.size() < capacity_ || closed_; });
    if (closed_) return false;
    q_.push_back(std::move(b));
    not_empty_.notify_one();
    return true;
  }

  std::optional<Batch> pop() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return !q_.empty() || closed_; });
    if (q_.empty()) return std::nullopt;
    Batch b = std::move(q_.front());
    q_.pop_front();
    not_full_.notify_one();
    return b;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

 private:
  std::size_t capacity_;
  std::deque<Batch> q_;
  bool closed_ = false;
  std::mutex mu_;
  std::condition_variable not_empty_, not_full_;
};

constexpr uint64_t kShuffleStream = 1;
constexpr uint64_t kExampleStream = 2;

}  // namespace

TrainResult train(const Manifest& ds1, const ModelConfig& model_config,
                  const TrainConfig& train_config, const std::filesystem::path& run_dir) {
  train_config.validate();
  if (ds1.dataset_id != DatasetId::kDs1) {
    throw ArgumentError("training uses the ds1 manifest");
  }
  std::vector<const TrackRecord*> train_recs, val_recs;
  for (const auto& r : ds1.records) {
    if (r.split == Split::kTrain) train_recs.push_back(&r);
    if (r.split == Split::kVal) val_recs.push_back(&r);
  }
  if (train_recs.empty() || val_recs.empty()) {
    throw ArgumentError("manifest needs non-empty train and val splits");
  }

  ModelConfig cfg = model_config;
  cfg.mask_enabled = train_config.mask_enabled;
  cfg.mask_low_hz = train_config.mask_low_hz;
  cfg.validate();

  std::filesystem::create_directories(run_dir);
  {
    nlohmann::json j;
    j["model"] = cfg;
    j["train"] = train_config;
    j["manifest"] = {{"dataset_id", to_string(ds1.dataset_id)},
                     {"records", ds1.records.size()},
                     {"train_records", train_recs.size()},
                     {"val_records", val_recs.size()},
                     {"corpus_seed", ds1.corpus_seed},
                     {"encoding_seed", ds1.encoding_seed},
                     {"split_seed", ds1.split_seed}};
    std::ofstream(run_dir / "config.json") << j.dump(2) << '\n';
  }
  std::ofstream metrics(run_dir / "metrics.csv", std::ios::trunc);
  metrics << "epoch,train_loss,val_accuracy,seconds,skipped_examples\n";
  std::ofstream train_log(run_dir / "train.log", std::ios::trunc);
  auto note = [&](const std::string& line) {
    log_info() << line;
    train_log << line << '\n';
    train_log.flush();
  };

  Network<float> net(cfg);
  net.initialize(train_config.seed);
  Adam<float> adam(net.parameters(), train_config.learning_rate);
  auto grads = net.parameters().zeros_like();

  TrainResult result;
  result.checkpoint = run_dir / "best.ckpt";
  double best = -1.0;
  int since_improvement = 0;
  const auto t_start = std::chrono::steady_clock::now();
  const int bins = cfg.n_bins();
  const int frames = cfg.n_frames;
  note("training on " + std::to_string(train_recs.size()) + " records, validating on " +
       std::to_string(val_recs.size()) + ", mask " + (cfg.mask_enabled ? "on" : "off"));

  for (int epoch = 0; epoch < train_config.max_epochs; ++epoch) {
    const auto t_epoch = std::chrono::steady_clock::now();
    std::vector<std::size_t> order(train_recs.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng = make_rng(train_config.seed, kShuffleStream, epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    // Each example draws from its own stream keyed by (seed, epoch, record),
    // so the data do not depend on how work is spread across loaders.
    BatchQueue queue(train_config.queue_depth);
    std::exception_ptr producer_error;
    std::thread producer([&] {
      try {
        for (std::size_t start = 0; start < order.size();
             start += train_config.batch_size) {
          const std::size_t n =
              std::min<std::size_t>(train_config.batch_size, order.size() - start);
          std::vector<std::optional<Example>> examples(n);
          parallel_for(n, train_config.workers, [&](std::size_t i) {
            const std::size_t idx = order[start + i];
            Rng rng = make_rng(mix_seed(train_config.seed, kExampleStream), epoch, idx);
            try {
              examples[i] = make_example(ds1, *train_recs[idx], rng, train_config);
            } catch (const ContractError&) {
              throw;
            } catch (const std::exception& e) {
              log_warn() << "skipping " << train_recs[idx]->audio_path.string() << ": "
                         << e.what();
            }
          });
          Batch batch;
          for (auto& ex : examples) {
            if (!ex) {
              ++batch.skipped;
              continue;
            }
            batch.input.insert(batch.input.end(), ex->spectrogram.values.begin(),
                               ex->spectrogram.values.end());
            batch.labels.push_back(ex->label);
          }
          if (!queue.push(std::move(batch))) return;
        }
      } catch (...) {
        producer_error = std::current_exception();
      }
      queue.close();
    });

    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    int skipped = 0;
    std::exception_ptr consumer_error;
    try {
      while (auto batch = queue.pop()) {
        skipped += batch->skipped;
        const int b = static_cast<int>(batch->labels.size());
        if (b == 0) continue;
        ForwardCache<float> cache;
        const auto probs = net.forward({batch->input, {b, 1, bins, frames}}, true, &cache);
        const float loss = cross_entropy<float>(probs, batch->labels);
        if (!std::isfinite(loss)) {
          throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch) +
                                " after " + std::to_string(adam.steps()) + " steps");
        }
        loss_sum += static_cast<double>(loss) * b;
        loss_count += b;
        grads.set_zero();
        net.backward(cache, cross_entropy_logit_grad<float>(probs, batch->labels), &grads,
                     nullptr);
        adam.step(net.parameters(), grads);
      }
    } catch (...) {
      consumer_error = std::current_exception();
      queue.close();
    }
    producer.join();
    if (consumer_error) std::rethrow_exception(consumer_error);
    if (producer_error) std::rethrow_exception(producer_error);
    if (loss_count == 0) throw IoError("no readable training examples");

    const auto preds = predict_manifest(ds1, net, Split::kVal, 0.5, train_config.workers);
    std::size_t ok = 0, correct = 0;
    for (const auto& p : preds) {
      ok += p.ok();
      correct += p.correct();
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = loss_sum / static_cast<double>(loss_count);
    m.val_accuracy = ok ? 100.0 * static_cast<double>(correct) / static_cast<double>(ok) : 0.0;
    m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_epoch).count();
    m.skipped_examples = skipped;
    result.history.push_back(m);
    metrics << m.epoch << ',' << m.train_loss << ',' << m.val_accuracy << ',' << m.seconds << ','
            << m.skipped_examples << '\n';
    metrics.flush();

    if (m.val_accuracy > best) {
      best = m.val_accuracy;
      since_improvement = 0;
      result.best_epoch = epoch;
      result.best_val_accuracy = best;
      Checkpoint ckpt;
      ckpt.config = cfg;
      ckpt.parameters = net.parameters();
      ckpt.metadata = {{"epoch", epoch},
                       {"val_accuracy", best},
                       {"train_loss", m.train_loss},
                       {"seed", train_config.seed},
                       {"train_config", train_config},
                       {"corpus_seed", ds1.corpus_seed},
                       {"encoding_seed", ds1.encoding_seed},
                       {"split_seed", ds1.split_seed}};
      save_checkpoint(result.checkpoint, ckpt);
    } else {
      ++since_improvement;
    }
    char line[160];
    std::snprintf(line, sizeof(line),
                  "epoch %d loss %.5f val_acc %.2f%% best %.2f%% (epoch %d) %.1fs", epoch,
                  m.train_loss, m.val_accuracy, best, result.best_epoch, m.seconds);
    note(line);

    if (since_improvement >= train_config.early_stop_patience) {
      note("early stop: no improvement for " + std::to_string(since_improvement) + " epochs");
      break;
    }
    if (train_config.time_budget_s > 0.0) {
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
      if (elapsed + m.seconds > train_config.time_budget_s) {
        note("time budget reached after " + std::to_string(epoch + 1) + " epochs");
        break;
      }
    }
  }
  return result;
}

}  // namespace lossydetect
