#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sigsim {

inline constexpr const char* kTanhWindowLabel = "tanh_loop_body";
// Simulated instruction cost of one guarded activation evaluation.
inline constexpr std::uint64_t kTanhWindowSpan = 16;

struct BanknoteSample {
  std::array<double, 4> features;
  int label;  // 0 or 1
};

struct BanknoteData {
  std::vector<BanknoteSample> samples;
};

/// Loads the 5-column banknote-authentication CSV (4 real features, integer
/// class label). A header line is tolerated and skipped.
inline BanknoteData load_banknote_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error(
        "cannot open dataset: " + path +
        "\nexpected a 5-column CSV (variance,skewness,curtosis,entropy,label);"
        "\npass --dataset PATH or use the bundled data/banknote_synth.csv");
  }
  BanknoteData data;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 5) {
      throw std::runtime_error("bad dataset row in " + path + ": " + line);
    }
    if (first) {
      first = false;
      try {
        (void)std::stod(fields[0]);
      } catch (const std::exception&) {
        continue;  // header
      }
    }
    BanknoteSample s{};
    for (int i = 0; i < 4; ++i) {
      s.features[static_cast<std::size_t>(i)] = std::stod(fields[static_cast<std::size_t>(i)]);
    }
    s.label = std::stoi(fields[4]);
    if (s.label != 0 && s.label != 1) {
      throw std::runtime_error("dataset labels must be 0 or 1");
    }
    data.samples.push_back(s);
  }
  if (data.samples.empty()) {
    throw std::runtime_error("dataset is empty: " + path);
  }
  return data;
}

struct MlpConfig {
  std::array<int, 3> hidden{6, 6, 6};  // three hidden layers, up to 6 units
  int epochs = 2000;
  double learning_rate = 0.05;
  int train_size = 1096;
  std::uint32_t seed = 1;
};

struct MlpResult {
  double accuracy = 0.0;
  std::uint64_t tanh_evaluations = 0;  // guarded loop iterations (training)
  std::uint64_t forced_activations = 0;
};

/// Called once per guarded hidden-unit activation during training; returning
/// true means a fault handler fired inside the loop body and the activation
/// is written as 1.0 instead of tanh(x).
using TanhWindowHook = std::function<bool()>;

/// Stochastic-gradient MLP over the 4-feature banknote data: tanh hidden
/// layers, one sigmoid output, squared-error loss, uniform(-0.5, 0.5) init.
/// All arithmetic is sequential and seeded, so results are bit-reproducible.
class MlpTrainer {
 public:
  MlpTrainer(const BanknoteData& data, MlpConfig config)
      : config_(config) {
    if (static_cast<int>(data.samples.size()) <= config.train_size) {
      throw std::runtime_error(
          "dataset too small for the configured train split");
    }
    // Seeded shuffle fixes the split; feature standardization uses
    // training-split statistics only.
    std::vector<std::size_t> order(data.samples.size());
    std::iota(order.begin(), order.end(), 0u);
    std::mt19937 rng(config.seed);
    std::shuffle(order.begin(), order.end(), rng);

    for (std::size_t i = 0; i < order.size(); ++i) {
      const BanknoteSample& s = data.samples[order[i]];
      if (i < static_cast<std::size_t>(config.train_size)) {
        train_.push_back(s);
      } else {
        test_.push_back(s);
      }
    }

    std::array<double, 4> mean{};
    std::array<double, 4> sd{};
    for (const auto& s : train_) {
      for (int f = 0; f < 4; ++f) mean[static_cast<std::size_t>(f)] += s.features[static_cast<std::size_t>(f)];
    }
    for (auto& m : mean) m /= static_cast<double>(train_.size());
    for (const auto& s : train_) {
      for (int f = 0; f < 4; ++f) {
        const double d = s.features[static_cast<std::size_t>(f)] - mean[static_cast<std::size_t>(f)];
        sd[static_cast<std::size_t>(f)] += d * d;
      }
    }
    for (auto& v : sd) {
      v = std::sqrt(v / static_cast<double>(train_.size()));
      if (v == 0.0) v = 1.0;
    }
    auto standardize = [&](std::vector<BanknoteSample>& set) {
      for (auto& s : set) {
        for (int f = 0; f < 4; ++f) {
          s.features[static_cast<std::size_t>(f)] =
              (s.features[static_cast<std::size_t>(f)] - mean[static_cast<std::size_t>(f)]) / sd[static_cast<std::size_t>(f)];
        }
      }
    };
    standardize(train_);
    standardize(test_);
  }

  std::size_t train_size() const { return train_.size(); }
  std::size_t test_size() const { return test_.size(); }

  /// Trains from scratch and reports held-out accuracy. The hook, when set,
  /// guards every hidden activation during training; evaluation runs clean.
  MlpResult train(const TanhWindowHook& hook = nullptr) {
    init_weights();
    MlpResult result;

    for (int epoch = 0; epoch < config_.epochs; ++epoch) {
      for (const auto& s : train_) {
        forward(s.features, hook, result);
        backward(s.features, static_cast<double>(s.label));
      }
    }

    std::size_t correct = 0;
    for (const auto& s : test_) {
      MlpResult scratch;
      const double p = forward(s.features, nullptr, scratch);
      const int pred = p >= 0.5 ? 1 : 0;
      if (pred == s.label) ++correct;
    }
    result.accuracy = static_cast<double>(correct) / static_cast<double>(test_.size());
    return result;
  }

 private:
  using Layer = std::vector<std::vector<double>>;  // [unit][input + bias]

  void init_weights() {
    std::mt19937 rng(config_.seed + 0x9e37u);
    std::uniform_real_distribution<double> dist(-0.5, 0.5);
    layers_.clear();
    activations_.clear();
    int fan_in = 4;
    for (int width : config_.hidden) {
      Layer layer(static_cast<std::size_t>(width),
                  std::vector<double>(static_cast<std::size_t>(fan_in) + 1));
      for (auto& unit : layer) {
        for (auto& w : unit) w = dist(rng);
      }
      layers_.push_back(std::move(layer));
      fan_in = width;
    }
    out_weights_.assign(static_cast<std::size_t>(fan_in) + 1, 0.0);
    for (auto& w : out_weights_) w = dist(rng);
    activations_.assign(layers_.size(), {});
  }

  /// Hidden activations are computed element by element inside a recoverable
  /// loop; a handler firing in the loop body forces that element to 1.0 and
  /// the loop carries on with the next element.
  double forward(const std::array<double, 4>& features,
                 const TanhWindowHook& hook, MlpResult& counters) {
    std::vector<double> input(features.begin(), features.end());
    for (std::size_t li = 0; li < layers_.size(); ++li) {
      const Layer& layer = layers_[li];
      std::vector<double>& act = activations_[li];
      act.assign(layer.size(), 0.0);
      for (std::size_t u = 0; u < layer.size(); ++u) {
        if (hook) {
          ++counters.tanh_evaluations;
          if (hook()) {
            act[u] = 1.0;
            ++counters.forced_activations;
            continue;
          }
        }
        act[u] = std::tanh(dot(layer[u], input));
      }
      input = act;
    }
    output_ = sigmoid(dot(out_weights_, input));
    return output_;
  }

  void backward(const std::array<double, 4>& features, double label) {
    const double lr = config_.learning_rate;
    const std::vector<double>& last = activations_.back();

    // d(mse)/d(pre-sigmoid)
    const double delta_out = (output_ - label) * output_ * (1.0 - output_);

    std::vector<double> delta(last.size());
    for (std::size_t u = 0; u < last.size(); ++u) {
      // tanh' from the stored activation; a forced 1.0 kills the gradient
      delta[u] = out_weights_[u] * delta_out * (1.0 - last[u] * last[u]);
    }
    for (std::size_t u = 0; u < last.size(); ++u) {
      out_weights_[u] -= lr * delta_out * last[u];
    }
    out_weights_.back() -= lr * delta_out;

    for (std::size_t li = layers_.size(); li-- > 0;) {
      const std::vector<double> input_vec =
          li == 0 ? std::vector<double>(features.begin(), features.end())
                  : activations_[li - 1];
      Layer& layer = layers_[li];
      std::vector<double> next_delta;
      if (li > 0) {
        next_delta.assign(activations_[li - 1].size(), 0.0);
        for (std::size_t u = 0; u < layer.size(); ++u) {
          for (std::size_t i = 0; i < next_delta.size(); ++i) {
            next_delta[i] += layer[u][i] * delta[u];
          }
        }
        for (std::size_t i = 0; i < next_delta.size(); ++i) {
          const double a = activations_[li - 1][i];
          next_delta[i] *= (1.0 - a * a);
        }
      }
      for (std::size_t u = 0; u < layer.size(); ++u) {
        for (std::size_t i = 0; i < input_vec.size(); ++i) {
          layer[u][i] -= lr * delta[u] * input_vec[i];
        }
        layer[u].back() -= lr * delta[u];
      }
      delta = std::move(next_delta);
    }
  }

  static double dot(const std::vector<double>& weights,
                    const std::vector<double>& input) {
    double acc = weights.back();  // bias
    for (std::size_t i = 0; i < input.size(); ++i) acc += weights[i] * input[i];
    return acc;
  }

  static double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

  MlpConfig config_;
  std::vector<BanknoteSample> train_;
  std::vector<BanknoteSample> test_;
  std::vector<Layer> layers_;
  std::vector<std::vector<double>> activations_;
  std::vector<double> out_weights_;
  double output_ = 0.0;
};

}  // namespace sigsim
